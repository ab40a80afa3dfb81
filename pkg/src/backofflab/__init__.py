"""Contention-resolution toolkit for a shared radio channel.

Closed-form analytics for slot-point and continuous-backoff protocols,
independent enumeration / Monte Carlo oracles, and a deterministic
discrete-event simulator with a compiled fast path.
"""

from ._kernels import BACKEND as kernel_backend
from .analytics import (
    clw_expected_election_time,
    clw_success_prob,
    election_objective,
    f_k_objective,
    gap_prob_exp_closed,
    gap_prob_quadrature,
    gap_prob_uniform,
    k_point_optimal_rates,
    k_point_success_exact,
    m_sequence,
    optimize_exp_family,
    two_point_optimum,
    two_point_success,
)
from .laws import SILENT, DiscretePoints, ExpFamily, PowerLaw, Uniform01
from .simcore import (
    ClassicPPersistent,
    ContinuousBackoff,
    FullBuffer,
    ImprovedPPersistent,
    KPointDiscrete,
    NetworkParams,
    PoissonTraffic,
    SimConfig,
    SimMetrics,
    run_simulation,
)

__version__ = "0.1.0"
