import numpy as np
import pytest

from taxharvest.model import ControlParams, Params

# Frozen parameter sets used across the suite.  BASELINE exercises every
# code path (feasible firm-free and government-free points plus a stable
# interior point); FIRM_FREE_STABLE satisfies the firm-free stability
# condition d > mu + a*r*delta/beta with a wide Lyapunov basin.
BASELINE = dict(r=1.0, K=100.0, pi=0.5, alpha=0.02, beta=0.6, a=50.0,
                gamma=0.01, sigma=0.4, l=0.5, m=0.6, n=0.1, d=0.5,
                mu=0.2, delta=0.05)

FIRM_FREE_STABLE = dict(r=0.05, K=100.0, pi=0.5, alpha=0.02, beta=0.6, a=50.0,
                        gamma=0.01, sigma=2.0, l=0.5, m=0.6, n=0.1, d=2.0,
                        mu=0.2, delta=0.05)

# baseline with mu lowered so the formal-free cubic has an interior root
FORMAL_FREE_ROOT = dict(BASELINE, mu=0.1)

CONTROL_FIXTURE = dict(eps1=0.1, eps2=0.2, eps3=0.05, v1=1.0, v2=1.0, v3=10.0,
                       u_max=2.0, t1=20.0)

BASELINE_S0 = (10.0, 5.0, 2.0)


@pytest.fixture
def baseline() -> Params:
    return Params(**BASELINE)


@pytest.fixture
def firm_free_stable() -> Params:
    return Params(**FIRM_FREE_STABLE)


@pytest.fixture
def formal_free_root() -> Params:
    return Params(**FORMAL_FREE_ROOT)


@pytest.fixture
def control_fixture() -> ControlParams:
    return ControlParams(**CONTROL_FIXTURE)


def random_params(rng: np.random.Generator, boundedness_safe: bool = False) -> Params:
    """Random valid parameter set for property sweeps.

    With ``boundedness_safe`` the draw additionally enforces sigma <= mu
    and m - n <= l, the regime in which the analytic trapping-bound chain
    is airtight (outside it the certificate is heuristic).
    """
    K = rng.uniform(50.0, 200.0)
    if boundedness_safe:
        sigma = rng.uniform(0.1, 0.4)
        mu = sigma * rng.uniform(1.0, 2.0)
        l = rng.uniform(0.3, 1.0)
        m = rng.uniform(0.0, 1.0)
        n = rng.uniform(max(0.0, m - l), m)
    else:
        sigma = rng.uniform(0.05, 0.8)
        mu = rng.uniform(0.02, 0.5)
        l = rng.uniform(0.3, 1.0)
        m = rng.uniform(0.0, 1.0)
        n = rng.uniform(0.0, 1.0)
    return Params(r=rng.uniform(0.3, 2.0), K=K, pi=rng.uniform(0.0, 1.0),
                  alpha=rng.uniform(0.0, 0.05), beta=rng.uniform(0.05, 1.0),
                  a=K * rng.uniform(0.25, 0.75), gamma=rng.uniform(0.001, 0.02),
                  sigma=sigma, l=l, m=m, n=n, d=rng.uniform(0.0, 1.0),
                  mu=mu, delta=rng.uniform(0.01, 0.1))
