"""Achievable-rate lower bounds for discrete and Gaussian relay networks."""

from .info import (
    GaussCovariance,
    InfoError,
    JointPmf,
    cond_entropy,
    cond_mutual_info,
    entropy,
    gauss_c,
    gauss_mi_from_cov,
    linear_gaussian_cov,
    marginalize,
)
from .network import (
    CutSet,
    DiscreteNetwork,
    Factor,
    FactoredDistribution,
    FactorizationError,
    GaussianRelayParams,
    NetworkError,
    NodeRoles,
    build_joint,
    enumerate_cuts,
    factor,
    validate_factorization,
)
from .optimize import SearchConfig, SearchResult, maximize

__version__ = "0.1.0"
