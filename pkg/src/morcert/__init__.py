"""Balanced truncation with a-priori error certificates for low-rank Gramian approximations."""

from .analysis import assemble_G, build_analysis, setup_projectors, svd_split
from .approx import approx_bt_reduce
from .balanced import BtReduction, HankelSpectrum, balancing_transform, bt_reduce, hankel_svd
from .certificate import ErrorCertificate, certify
from .lti import LtiSystem, check_stability, difference_system, eval_transfer, expanded_error_system
from .lyapunov import GramianFactor, gramians, lowrank_truncate, solve_lyapunov
from .norms import FrequencyGrid, h2_norm, hankel_norm, hinf_estimate

__version__ = "0.1.0"
