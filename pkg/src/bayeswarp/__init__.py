"""Bayesian registration of functional data on the SRSF / square-root density geometry."""

__version__ = "0.1.0"

from .basis import OrthonormalBasis, identity_basis, project, reconstruct, transport_basis
from .dp import DpConfig, dp_align, dp_distance
from .estimators import BayesianWarpRegistration, DPRegistration, TemplateRegistration
from .exceptions import (
    BayesWarpError,
    ConvergenceError,
    DegenerateBasisError,
    DegeneratePairError,
    InsufficientSupportError,
    InvalidInputError,
    UndefinedDPDError,
)
from .functions import (
    compose_warps,
    compute_srsf,
    identity_warp,
    invert_warp,
    l2_distance,
    srsf_to_function,
    uniform_grid,
    warp_function,
    warp_srsf,
)
from .model import ImportanceConfig, PriorConfig, importance_sample, sir_resample
from .posterior import dpd, kmeans, select_num_modes, silhouette, summarize
from .sphere import (
    exp_map,
    fisher_rao_distance,
    geometric_median,
    karcher_mean,
    log_map,
    parallel_transport,
    sphere_distance,
    srd_to_warping,
    to_srd,
)

__all__ = [
    "BayesWarpError", "BayesianWarpRegistration", "ConvergenceError", "DPRegistration",
    "DegenerateBasisError", "DegeneratePairError", "DpConfig", "ImportanceConfig",
    "InsufficientSupportError", "InvalidInputError", "OrthonormalBasis", "PriorConfig",
    "TemplateRegistration", "UndefinedDPDError", "compose_warps", "compute_srsf",
    "dp_align", "dp_distance", "dpd", "exp_map", "fisher_rao_distance", "geometric_median",
    "identity_basis", "identity_warp", "importance_sample", "invert_warp", "karcher_mean",
    "kmeans", "l2_distance", "log_map", "parallel_transport", "project", "reconstruct",
    "select_num_modes", "silhouette", "sir_resample", "sphere_distance", "srd_to_warping",
    "srsf_to_function", "summarize", "to_srd", "transport_basis", "uniform_grid",
    "warp_function", "warp_srsf",
]
