import numpy as np
import pytest

from backofflab import analytics
from backofflab.laws import DiscretePoints
from backofflab.simcore import (
    FullBuffer,
    KPointDiscrete,
    NetworkParams,
    PoissonTraffic,
    SimConfig,
    run_simulation,
)

SWEEP_KS = list(range(1, 16))
SWEEP_SEEDS = list(range(10))
SWEEP_DURATION = 10 ** 6
SWEEP_N = 5
SWEEP_DELTA = 100


def _run_sweep(traffic):
    """All (k, seed) runs for the reference network: 5 stations, packet 100."""
    out = {}
    for k in SWEEP_KS:
        probs = analytics.k_point_optimal_rates(k).probs(SWEEP_N)
        for seed in SWEEP_SEEDS:
            cfg = SimConfig(
                network=NetworkParams(SWEEP_N, SWEEP_DELTA),
                protocol=KPointDiscrete(DiscretePoints(probs)),
                traffic=traffic,
                duration=SWEEP_DURATION,
                seed=seed,
            )
            out[(k, seed)] = run_simulation(cfg)
    return out


@pytest.fixture(scope="session")
def fb_sweep():
    return _run_sweep(FullBuffer())


@pytest.fixture(scope="session")
def pos_sweep():
    return _run_sweep(PoissonTraffic(100.0))
