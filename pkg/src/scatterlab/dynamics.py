"""Billiard dynamics in the exterior of a scene: specular tracing,
itineraries, and a time-reversal consistency probe.

Grazing hits do not reflect. A tangent ray to a strictly convex body is the
limit of nearby non-hitting rays, so the trajectory continues straight
through the tangency; the event is still recorded and flagged.

The trapped set is not decidable numerically. Tracing classifies a
trajectory as ``cutoff`` once it exceeds the reflection or path-length
limits, and every consumer treats cutoff as trapped-for-this-experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import Scene, _first_hit_2d, scene_first_hit, _as_tuple

# Standard ray hygiene: push the next query origin off the surface after a
# reflection, and slightly past the tangent point after a grazing event.
# Both are far below every tolerance used by the observables.
SURFACE_OFFSET_FRAC = 1e-12
GRAZE_SKIP_FRAC = 1e-9

DEFAULT_MAX_REFLECTIONS = 10_000
DEFAULT_LENGTH_FACTOR = 10_000.0

ESCAPED = "escaped"
CUTOFF = "cutoff"


class ReversibilityError(RuntimeError):
    """Reversed trajectory disagrees in event count (tangency-threshold artifact)."""


@dataclass(frozen=True)
class PhaseState:
    """Position plus unit direction."""

    point: tuple
    direction: tuple

    def __post_init__(self):
        p = _as_tuple(self.point)
        u = _as_tuple(self.direction)
        if len(p) != len(u):
            raise ValueError("point/direction dimension mismatch")
        if abs(math.hypot(*u) - 1.0) > 1e-12:
            raise ValueError("direction must be unit to within 1e-12")
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "direction", u)


@dataclass(frozen=True)
class TraceLimits:
    """Finite surrogate for unbounded scattering trajectories."""

    max_reflections: int = DEFAULT_MAX_REFLECTIONS
    escape_radius: float = None
    max_path_length: float = None

    @classmethod
    def for_scene(cls, scene: Scene) -> "TraceLimits":
        a = scene.ball_radius
        return cls(DEFAULT_MAX_REFLECTIONS, 2.0 * a, DEFAULT_LENGTH_FACTOR * a)

    def resolved(self, scene: Scene) -> tuple[int, float, float]:
        a = scene.ball_radius
        resc = self.escape_radius if self.escape_radius is not None else 2.0 * a
        lmax = self.max_path_length if self.max_path_length is not None else DEFAULT_LENGTH_FACTOR * a
        if self.max_reflections < 1:
            raise ValueError("max_reflections must be at least 1")
        if resc < a:
            raise ValueError("escape radius must not be smaller than the scene ball radius")
        return int(self.max_reflections), float(resc), float(lmax)


@dataclass(frozen=True)
class Event:
    """One boundary encounter along a trajectory."""

    obstacle: int
    arc: Optional[int]
    point: tuple
    normal: tuple
    grazing: bool
    path_length: float
    direction_after: tuple


@dataclass(frozen=True)
class TrajectoryRecord:
    initial: PhaseState
    events: tuple
    final: PhaseState
    total_length: float
    classification: str

    @property
    def escaped(self) -> bool:
        return self.classification == ESCAPED

    @property
    def reflections(self) -> int:
        return sum(1 for e in self.events if not e.grazing)

    @property
    def grazings(self) -> int:
        return sum(1 for e in self.events if e.grazing)


def reflect(v, n) -> np.ndarray:
    """Specular reflection v' = v - 2 <v,n> n of a unit direction."""
    v = np.asarray(v, dtype=float)
    n = np.asarray(n, dtype=float)
    out = v - 2.0 * float(v @ n) * n
    return out / float(np.linalg.norm(out))


def _trace_raw(scene: Scene, point, direction, limits: TraceLimits):
    """Kernel trace; events are raw tuples
    (obstacle, arc, point, normal, grazing, cum_length, direction_after).

    Returns (escaped, events, final_point, final_direction, total_length).
    """
    nmax, resc, lmax = limits.resolved(scene)
    if scene.dimension == 2:
        return _trace_2d(scene, point, direction, nmax, resc, lmax)
    return _trace_nd(scene, point, direction, nmax, resc, lmax)


def _trace_2d(scene: Scene, point, direction, nmax: int, resc: float, lmax: float):
    k = scene._k2
    cx, cy = scene.ball_center
    a = scene.ball_radius
    off = SURFACE_OFFSET_FRAC * a
    skip = GRAZE_SKIP_FRAC * a
    ox, oy = float(point[0]), float(point[1])
    ux, uy = float(direction[0]), float(direction[1])
    px_prev, py_prev = ox, oy
    total = 0.0
    nrefl = 0
    events = []
    while True:
        h = _first_hit_2d(k, ox, oy, ux, uy, 0.0)
        if h is None:
            wx = ox - cx
            wy = oy - cy
            b = wx * ux + wy * uy
            g = wx * wx + wy * wy - resc * resc
            disc = b * b - g
            if disc >= 0.0:
                t = -b + math.sqrt(disc)
                if t < 0.0:
                    t = 0.0
            else:
                t = -b if -b > 0.0 else 0.0
            fx = ox + t * ux
            fy = oy + t * uy
            total += math.hypot(fx - px_prev, fy - py_prev)
            return True, events, (fx, fy), (ux, uy), total
        oid, arc, t, px, py, nx, ny, cosi, grazing = h
        total += math.hypot(px - px_prev, py - py_prev)
        px_prev, py_prev = px, py
        if grazing:
            events.append((oid, arc, (px, py), (nx, ny), True, total, (ux, uy)))
            ox = px + skip * ux
            oy = py + skip * uy
        else:
            d = 2.0 * (ux * nx + uy * ny)
            ux -= d * nx
            uy -= d * ny
            nn = math.hypot(ux, uy)
            ux /= nn
            uy /= nn
            events.append((oid, arc, (px, py), (nx, ny), False, total, (ux, uy)))
            nrefl += 1
            if nrefl >= nmax:
                return False, events, (px, py), (ux, uy), total
            ox = px + off * nx
            oy = py + off * ny
        if total >= lmax:
            return False, events, (px, py), (ux, uy), total


def _trace_nd(scene: Scene, point, direction, nmax: int, resc: float, lmax: float):
    center = np.asarray(scene.ball_center)
    a = scene.ball_radius
    off = SURFACE_OFFSET_FRAC * a
    skip = GRAZE_SKIP_FRAC * a
    o = np.asarray(point, dtype=float).copy()
    u = np.asarray(direction, dtype=float).copy()
    prev = o.copy()
    total = 0.0
    nrefl = 0
    events = []
    while True:
        hit = scene_first_hit(scene, o, u, 0.0)
        if hit is None:
            w = o - center
            b = float(w @ u)
            g = float(w @ w) - resc * resc
            disc = b * b - g
            if disc >= 0.0:
                t = -b + math.sqrt(disc)
                if t < 0.0:
                    t = 0.0
            else:
                t = max(0.0, -b)
            f = o + t * u
            total += float(np.linalg.norm(f - prev))
            return True, events, _as_tuple(f), _as_tuple(u), total
        oid, h = hit
        p = np.asarray(h.point)
        n = np.asarray(h.normal)
        total += float(np.linalg.norm(p - prev))
        prev = p.copy()
        if h.grazing:
            events.append((oid, h.arc, h.point, h.normal, True, total, _as_tuple(u)))
            o = p + skip * u
        else:
            u = u - 2.0 * float(u @ n) * n
            u /= float(np.linalg.norm(u))
            events.append((oid, h.arc, h.point, h.normal, False, total, _as_tuple(u)))
            nrefl += 1
            if nrefl >= nmax:
                return False, events, h.point, _as_tuple(u), total
            o = p + off * n
        if total >= lmax:
            return False, events, h.point, _as_tuple(u), total


def trace(scene: Scene, state: PhaseState, limits: Optional[TraceLimits] = None) -> TrajectoryRecord:
    """Trace the billiard trajectory of an exterior phase point.

    Reflection events apply the specular law; grazing events record the
    tangency and continue straight. Escape requires both distance beyond the
    escape radius and non-negative outward radial speed, so rays launched
    inward from outside the ball are not misclassified.
    """
    if limits is None:
        limits = TraceLimits.for_scene(scene)
    escaped, raw, fpt, fdir, total = _trace_raw(scene, state.point, state.direction, limits)
    events = tuple(Event(*e) for e in raw)
    return TrajectoryRecord(
        initial=state,
        events=events,
        final=PhaseState(fpt, fdir),
        total_length=total,
        classification=ESCAPED if escaped else CUTOFF,
    )


def itinerary(record: TrajectoryRecord) -> tuple[int, ...]:
    """Obstacle ids of the proper reflections, in order; grazings excluded."""
    return tuple(e.obstacle for e in record.events if not e.grazing)


def time_reverse_deviation(scene: Scene, record: TrajectoryRecord,
                           limits: Optional[TraceLimits] = None) -> float:
    """Retrace from the reversed final state and compare reflection points.

    Returns the maximum distance between reversed and original events taken
    in opposite order. A mismatch in event count raises ReversibilityError,
    which signals a tangency-threshold artifact rather than a bug in the
    caller.
    """
    if not record.escaped:
        raise ValueError("time reversal needs an escaped trajectory")
    back = PhaseState(record.final.point, tuple(-c for c in record.final.direction))
    rev = trace(scene, back, limits)
    if len(rev.events) != len(record.events):
        raise ReversibilityError(
            f"forward trajectory has {len(record.events)} events, reversed has {len(rev.events)}")
    if not record.events:
        return 0.0
    dev = 0.0
    n = len(record.events)
    for i, ev in enumerate(rev.events):
        fwd = record.events[n - 1 - i]
        dev = max(dev, math.dist(ev.point, fwd.point))
    return dev
