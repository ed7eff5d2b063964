import numpy as np
import pytest

from flexaft.data import SurvivalDataset


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)


def make_weibull_dataset(n, lam, gam, beta, seed, censor_at=None,
                         entry_frac=0.0):
    """Weibull AFT data on a binary covariate, by direct inversion.

    S(t|x) = exp(-lam * (t e^{-x beta})^gam), so T = e^{x beta} *
    (-log U / lam)^(1/gam) exactly. Optional administrative censoring
    and a fraction of rows with delayed entry (entry uniform below the
    exit time, which keeps exit > entry valid by construction).
    """
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, size=n).astype(np.float64)
    u = np.maximum(rng.random(n), 2.0 ** -53)
    t = np.exp(x * beta) * (-np.log(u) / lam) ** (1.0 / gam)
    if censor_at is None:
        time, event = t, np.ones(n, dtype=np.int64)
    else:
        time = np.minimum(t, censor_at)
        event = (t <= censor_at).astype(np.int64)
    entry = np.zeros(n)
    if entry_frac > 0.0:
        pick = rng.random(n) < entry_frac
        entry[pick] = time[pick] * rng.uniform(0.05, 0.6, size=pick.sum())
    return SurvivalDataset.from_arrays(
        time=time, event=event, covariates={"x": x}, entry=entry
    )


@pytest.fixture
def weibull_data():
    return make_weibull_dataset(n=800, lam=1.0, gam=1.5, beta=0.4,
                                seed=42, censor_at=3.0)
