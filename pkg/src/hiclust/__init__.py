"""Clustering in heavy noise by degree homophily on directed kNN graphs."""

from .backend import BACKEND
from .clustering import (
    CoreClusters,
    CoreStage,
    Diagnostics,
    aggregate_to_cores,
    attachment_score,
    attachment_scores,
    find_cores,
    homophilic_clustering,
    merge_cores,
)
from .errors import (
    HiclustError,
    InvalidInputError,
    InvalidStateError,
    SelectionError,
    UndefinedMetricError,
)
from .evaluation import NOISE, Blob, SyntheticSpec, generate_toy, nmi, toy_spec
from .geometry import (
    Cosine,
    DirectedKnnGraph,
    GaussianExponential,
    PointSet,
    SparseDigraph,
    build_knn_digraph,
    local_density,
    similarity,
)
from .hi import (
    HiProfile,
    detect_jump_transitions,
    extract_cores,
    geometric_mean_truncated,
    hi_profile,
    homophilic_coefficients,
    noise_boundary,
    residual_distance,
    select_optimal_t,
    sweep,
)
from .propagation import (
    DegreeTrajectory,
    DualDegreeState,
    dense_power_oracle,
    dual_degree_step,
    propagate,
    propagate_trajectory,
)
from .svg import emit_hi_figure

__version__ = "0.1.0"
