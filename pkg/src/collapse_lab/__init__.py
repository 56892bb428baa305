"""Discrete experiments on short loops, curvature and collapse of surfaces."""

__version__ = "0.1.0"

from .mesh import LoopPath, Path, TriSurface, build_surface, shortest_path, steiner_refine  # noqa: E402
from .families import FamilySpec, finger_torus, flat_klein_bottle, flat_torus, folded_torus  # noqa: E402
from .homology import shortest_basis, shortest_loop_in_class, z2_class_of, z2_intersection  # noqa: E402
from .surgery import cut_along, separating_loop  # noqa: E402
from .curvature import gauss_bonnet_region, min_curvature_density, noncollapse_witness  # noqa: E402
from .metric_lab import (area_bound_check, circle_segment_min_nu, gh_segment_upper_bound,  # noqa: E402
                         metric_completion_feasible, min_loop_distance)

__all__ = [
    "LoopPath", "Path", "TriSurface", "build_surface", "shortest_path", "steiner_refine",
    "FamilySpec", "finger_torus", "flat_klein_bottle", "flat_torus", "folded_torus",
    "shortest_basis", "shortest_loop_in_class", "z2_class_of", "z2_intersection",
    "cut_along", "separating_loop",
    "gauss_bonnet_region", "min_curvature_density", "noncollapse_witness",
    "area_bound_check", "circle_segment_min_nu", "gh_segment_upper_bound",
    "metric_completion_feasible", "min_loop_distance",
]
