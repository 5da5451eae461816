"""Density-sensitive hierarchical clustering along parameter curves.

The pipeline: build a finite metric probability space (:mod:`.space`), pick a
kernel (:mod:`.kernels`) and a monotone parameter curve or family
(:mod:`.curves`), compute the merge forest of the induced one-parameter
clustering (:mod:`.linkage`), then summarize it with persistence diagrams,
prunings and flat clusterings (:mod:`.persistence`, :mod:`.measure`).
Stability is quantified by interleavings (:mod:`.interleave`) against
dataset perturbations measured in Gromov-Hausdorff-Prokhorov distance.
Reference datasets, 1-d analytic densities, experiment runners, a CLI and a
read-only session service round out the toolkit.
"""

from .space import (
    ValidationError,
    MetricProbabilitySpace,
    build_space,
    space_from_points,
    space_from_matrix,
    AmbientPair,
    ambient_from_clouds,
    hausdorff_distance,
    prokhorov_distance,
    ghp_upper_bound,
)
from .kernels import (
    Kernel,
    density,
    density_all,
    IndexedSubset,
    filtration_membership,
)
from .curves import (
    Curve,
    CurveFamily,
    RescaledCurve,
    line,
    hline,
    vertical,
    vertical_skew,
    piecewise,
    evaluate,
    parse_curve,
    parse_family,
    family_grid,
    curves_interleaved,
    curve_interleaving_upper,
    is_covering,
    rescale_phi,
    curve_from_json_dict,
)
from .linkage import (
    ForestNode,
    MergeForest,
    build_forest,
    clusters_at,
    vertex_birth,
    edge_value,
    density_profile,
    direct_slice_clustering,
    sample_kernel_linkage,
    reparametrize_forest,
    check_forest,
    forest_to_json_dict,
    forest_from_json_dict,
)
from .persistence import (
    PersistenceDiagram,
    diagram,
    bottleneck,
    total_persistences,
    separated,
    prune_forest_tops,
    prune_persistence,
    flatten_pf,
    Vineyard,
    vineyard,
    confidence_band,
    diagram_to_json_dict,
    diagram_from_json_dict,
    vineyard_to_json_dict,
)
from .measure import MassProfile, prune_measure, non_compressing_check
from .interleave import (
    Correspondence,
    correspondence_from_json_dict,
    closest_point_correspondence,
    ball_correspondence,
    check_interleaving,
    check_measured_interleaving,
    check_multiparam_interleaving,
    dci_upper,
    dci_exact_tiny,
)
from .density1d import (
    PLDensity1D,
    mixture_of_triangles,
    analytic_contour_pd,
    critical_ties,
)
from .datasets import (
    DatasetSpec,
    generate,
    jitter,
    write_points_csv,
    read_points_csv,
    write_matrix_csv,
    read_matrix_csv,
)
from .experiments import (
    ExperimentReport,
    stability_sweep,
    curve_stability_sweep,
    consistency_run,
    figure7_reproduction,
    run_experiment,
    report_to_json_dict,
)
from .session import (
    Session,
    build_session,
    flatten_payload,
    session_json,
    session_from_json,
    write_session,
    load_session,
)

__version__ = "0.1.0"

__all__ = [
    "ValidationError",
    "MetricProbabilitySpace",
    "build_space",
    "space_from_points",
    "space_from_matrix",
    "AmbientPair",
    "ambient_from_clouds",
    "hausdorff_distance",
    "prokhorov_distance",
    "ghp_upper_bound",
    "Kernel",
    "density",
    "density_all",
    "IndexedSubset",
    "filtration_membership",
    "Curve",
    "CurveFamily",
    "RescaledCurve",
    "line",
    "hline",
    "vertical",
    "vertical_skew",
    "piecewise",
    "evaluate",
    "parse_curve",
    "parse_family",
    "family_grid",
    "curves_interleaved",
    "curve_interleaving_upper",
    "is_covering",
    "rescale_phi",
    "curve_from_json_dict",
    "ForestNode",
    "MergeForest",
    "build_forest",
    "clusters_at",
    "vertex_birth",
    "edge_value",
    "density_profile",
    "direct_slice_clustering",
    "sample_kernel_linkage",
    "reparametrize_forest",
    "check_forest",
    "forest_to_json_dict",
    "forest_from_json_dict",
    "PersistenceDiagram",
    "diagram",
    "bottleneck",
    "total_persistences",
    "separated",
    "prune_forest_tops",
    "prune_persistence",
    "flatten_pf",
    "Vineyard",
    "vineyard",
    "confidence_band",
    "diagram_to_json_dict",
    "diagram_from_json_dict",
    "vineyard_to_json_dict",
    "MassProfile",
    "prune_measure",
    "non_compressing_check",
    "Correspondence",
    "correspondence_from_json_dict",
    "closest_point_correspondence",
    "ball_correspondence",
    "check_interleaving",
    "check_measured_interleaving",
    "check_multiparam_interleaving",
    "dci_upper",
    "dci_exact_tiny",
    "PLDensity1D",
    "mixture_of_triangles",
    "analytic_contour_pd",
    "critical_ties",
    "DatasetSpec",
    "generate",
    "jitter",
    "write_points_csv",
    "read_points_csv",
    "write_matrix_csv",
    "read_matrix_csv",
    "ExperimentReport",
    "stability_sweep",
    "curve_stability_sweep",
    "consistency_run",
    "figure7_reproduction",
    "run_experiment",
    "report_to_json_dict",
    "Session",
    "build_session",
    "flatten_payload",
    "session_json",
    "session_from_json",
    "write_session",
    "load_session",
    "__version__",
]
