"""scatterlab: a numerical laboratory for billiard scattering in the
exterior of finite disjoint unions of strictly convex bodies.

The package computes two observables, sojourn-time spectra over incoming
directions and travelling-time spectra between reference-sphere points, and
provides experiments that test, at desk scale, whether these observables
pin down the obstacle, including the classical half-ellipse cavity that
defeats uniqueness outside the convex-union class.
"""

__version__ = "0.1.0"

from .geometry import (ConvexBody, CurveObstacle, EllipticArc, Hit,
                       RayIntersectError, Scene, SegmentArc, ValidationReport,
                       ball, boundary_samples, ellipsoid, evaluate_body,
                       ray_intersect, rotation_2d, scene_first_hit,
                       validate_scene)
from .dynamics import (Event, PhaseState, ReversibilityError, TraceLimits,
                       TrajectoryRecord, itinerary, reflect,
                       time_reverse_deviation, trace)
from .spectra import (ContractError, SLSSample, SpectrumTable,
                      TravellingTimeSample, find_xy_geodesics, scan_sls,
                      sojourn_time, travelling_time_spectrum)
from .rigidity import (BoundaryEstimate, CoverageReport, DiscrepancyReport,
                       LivshitsParams, LivshitsReport, ProbeCountReport,
                       accessible_coverage, build_livshits_scene,
                       compare_spectra, hausdorff_1d, ideal_one_bounce_samples,
                       livshits_demo, point_set_hausdorff,
                       reconstruct_boundary, reflection_count_probe,
                       samples_table, sphere_probes)
from .scenefile import (SceneDocument, SceneFormatError, parse_scene,
                        parse_scene_document, serialize_scene)

__all__ = [
    "ConvexBody", "CurveObstacle", "EllipticArc", "Hit", "RayIntersectError",
    "Scene", "SegmentArc", "ValidationReport", "ball", "boundary_samples",
    "ellipsoid", "evaluate_body", "ray_intersect", "rotation_2d",
    "scene_first_hit", "validate_scene",
    "Event", "PhaseState", "ReversibilityError", "TraceLimits",
    "TrajectoryRecord", "itinerary", "reflect", "time_reverse_deviation",
    "trace",
    "ContractError", "SLSSample", "SpectrumTable", "TravellingTimeSample",
    "find_xy_geodesics", "scan_sls", "sojourn_time",
    "travelling_time_spectrum",
    "BoundaryEstimate", "CoverageReport", "DiscrepancyReport",
    "LivshitsParams", "LivshitsReport", "ProbeCountReport",
    "accessible_coverage", "build_livshits_scene", "compare_spectra",
    "hausdorff_1d", "ideal_one_bounce_samples", "livshits_demo",
    "point_set_hausdorff", "reconstruct_boundary", "reflection_count_probe",
    "samples_table", "sphere_probes",
    "SceneDocument", "SceneFormatError", "parse_scene",
    "parse_scene_document", "serialize_scene",
]
