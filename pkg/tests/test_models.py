import numpy as np
import pytest
from scipy.stats import norm

from flexaft.data import SurvivalDataset
from flexaft.errors import ParameterError, UndefinedScoreError
from flexaft.models import (
    ExponentialPhModel,
    FpaftModel,
    GenGammaAftModel,
    ModelSpec,
    WeibullAftModel,
    acceleration_factor,
    build_model,
    spec_of,
    _reg_inc_gamma_da,
)
from flexaft.splines import KnotVector, basis, basis_derivative, evaluate, \
    evaluate_derivative

EXP_KNOTS = KnotVector((-1.0, 2.0))


def exp_baseline_model(covariates=()):
    """df=1 spline model; gamma=(0,1) makes it a unit-rate exponential."""
    spec = ModelSpec(family="fpaft", covariates=covariates, df=1)
    return build_model(spec, knots=EXP_KNOTS)


def single_subject(time, event, entry=0.0):
    return SurvivalDataset.from_arrays(time=[time], event=[event],
                                       entry=[entry])


def random_dataset(rng, n=60, p=0):
    t = rng.exponential(1.0, size=n) + 0.05
    d = rng.integers(0, 2, size=n)
    d[0] = 1
    entry = np.where(rng.random(n) < 0.3, t * 0.3, 0.0)
    covs = {f"c{i}": rng.normal(size=n) for i in range(p)}
    return SurvivalDataset.from_arrays(time=t, event=d, covariates=covs,
                                       entry=entry)


def fd_score(model, data, theta, h=1e-6):
    g = np.empty_like(theta)
    for i in range(theta.size):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (model.loglik(data, up) - model.loglik(data, dn)) / (2 * h)
    return g


# -- ModelSpec -------------------------------------------------------------

def test_spec_validation():
    with pytest.raises(ParameterError):
        ModelSpec(family="weibull", covariates=("x",), tde=(("x", 2),))
    with pytest.raises(ParameterError):
        ModelSpec(family="fpaft", covariates=("x",), df=0)
    with pytest.raises(ParameterError):
        ModelSpec(family="fpaft", covariates=("x",), tde=(("z", 2),))
    with pytest.raises(ParameterError):
        ModelSpec(family="nope", covariates=())


def test_spec_labels():
    assert ModelSpec(family="weibull", covariates=()).label() == "weibull(-)"
    assert ModelSpec(family="exponential",
                     covariates=("x", "z")).label() == "exponential(x+z)"
    lab = ModelSpec(family="fpaft", covariates=("x", "z"), df=3,
                    tde=(("x", 2),)).label()
    assert lab == "fpaft:3(x+z;tde x:2)"


def test_spec_of_round_trip(weibull_data):
    spec = ModelSpec(family="fpaft", covariates=("x",), df=2)
    model = build_model(spec, data=weibull_data)
    assert spec_of(model) == spec


# -- acceleration factor -----------------------------------------------------

def test_acceleration_factor_values():
    assert acceleration_factor(np.zeros(2), np.array([1.0, -1.0])) == 1.0
    assert acceleration_factor(np.array([1.0]), np.array([0.5])) == \
        pytest.approx(np.exp(-0.5))
    assert acceleration_factor(np.array([1.0, 2.0]),
                               np.array([0.1, -0.2])) == \
        pytest.approx(np.exp(0.3))


# -- spline AFT family -------------------------------------------------------

def test_fpaft_exponential_baseline_quantities():
    m = exp_baseline_model()
    theta = np.array([0.0, 1.0])
    t = np.array([0.5, 1.0, 1.9])
    np.testing.assert_allclose(m.log_cum_hazard(t, np.zeros(0), theta),
                               np.log(t), rtol=1e-12)
    np.testing.assert_allclose(m.hazard(t, np.zeros(0), theta),
                               np.ones(3), rtol=1e-12)
    np.testing.assert_allclose(m.survival(t, np.zeros(0), theta),
                               np.exp(-t), rtol=1e-12)


def test_fpaft_df1_is_weibull_log_cum_hazard():
    # gamma0 = log(lam), gamma1 = gam gives log H = log(lam) + gam*log(t*phi)
    lam, gam, beta = 0.7, 1.8, 0.4
    m = exp_baseline_model(covariates=("x",))
    theta = np.array([beta, np.log(lam), gam])
    x = np.array([1.0])
    for t in (0.4, 1.0, 3.0):
        want = np.log(lam) + gam * (np.log(t) - beta)
        assert m.log_cum_hazard(t, x, theta) == pytest.approx(want,
                                                              rel=1e-12)


def test_fpaft_log_cum_hazard_compositional_oracle(rng):
    knots = KnotVector((-1.5, 0.0, 1.0, 2.0))
    m = FpaftModel(("a", "b"), knots)
    for _ in range(20):
        theta = rng.normal(size=m.n_params) * 0.5
        beta, gamma = theta[:2], theta[2:]
        t = float(rng.uniform(0.05, 6.0))
        x = rng.normal(size=2)
        u = np.log(t) - x @ beta
        want = evaluate(u, gamma, knots)
        got = m.log_cum_hazard(t, x, theta)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


def test_fpaft_hazard_weibull_square_case():
    # H(t) = t^2 at lam=1, gam=2, phi=1 differentiates to h = 2t
    m = exp_baseline_model()
    theta = np.array([0.0, 2.0])
    t = np.array([0.3, 1.0, 1.7])
    np.testing.assert_allclose(m.hazard(t, np.zeros(0), theta), 2.0 * t,
                               rtol=1e-12)


def test_fpaft_hazard_matches_cum_hazard_derivative(rng):
    knots = KnotVector((-2.0, -0.5, 0.8, 2.0))
    m = FpaftModel(("x",), knots)
    theta = np.array([0.3, 0.1, 1.1, 0.08, -0.04])
    x = np.array([0.7])
    eps = 1e-6
    for t in (0.2, 0.9, 2.4, 5.0):
        H = lambda s: np.exp(m.log_cum_hazard(s, x, theta))
        fd = (H(t + eps) - H(t - eps)) / (2 * eps)
        assert m.hazard(t, x, theta) == pytest.approx(fd, rel=1e-5)


def test_fpaft_loglik_single_subject_event():
    # s(u) = u cancels -log y exactly; only -exp(s) = -y survives:
    # l = [s(u) - log y + log s'] - exp(s(u)) = 0 - 2 = -2
    m = exp_baseline_model()
    theta = np.array([0.0, 1.0])
    ll, _ = m.loglik_and_score(single_subject(2.0, 1), theta)
    assert ll == pytest.approx(-2.0, abs=1e-12)


def test_fpaft_loglik_single_subject_censored():
    m = exp_baseline_model()
    ll = m.loglik(single_subject(2.0, 0), np.array([0.0, 1.0]))
    assert ll == pytest.approx(-2.0, abs=1e-12)


def test_fpaft_loglik_delayed_entry_adds_entry_hazard():
    # entry at t0=1: +exp(s(log 1)) = +1 relative to the t0=0 case
    m = exp_baseline_model()
    ll = m.loglik(single_subject(2.0, 1, entry=1.0), np.array([0.0, 1.0]))
    assert ll == pytest.approx(-1.0, abs=1e-12)


def test_fpaft_loglik_neg_inf_on_nonmonotone_spline_at_event():
    knots = KnotVector((-1.0, 0.0, 1.0))
    m = FpaftModel((), knots)
    theta = np.array([0.0, -1.0, 0.0])  # s'(u) = -1 < 0 everywhere
    ds = single_subject(1.5, 1)
    assert m.loglik(ds, theta) == -np.inf
    with pytest.raises(UndefinedScoreError):
        m.score(ds, theta)
    # the same spline is fine when the subject is censored
    assert np.isfinite(m.loglik(single_subject(1.5, 0), theta))


def test_fpaft_score_matches_finite_differences(rng):
    knots = KnotVector((-1.8, -0.2, 0.9, 2.2))
    m = FpaftModel(("c0", "c1"), knots)
    data = random_dataset(rng, n=50, p=2)
    for _ in range(6):
        theta = np.concatenate([rng.normal(size=2) * 0.3,
                                [0.1, 1.0 + rng.uniform(0, 0.5)],
                                rng.normal(size=2) * 0.05])
        ll, grad = m.loglik_and_score(data, theta)
        if not np.isfinite(ll):
            continue
        fd = fd_score(m, data, theta)
        np.testing.assert_allclose(grad, fd, rtol=1e-6, atol=1e-6)


def test_fpaft_gamma_score_block_recomputed_from_basis_sums(rng):
    # independent re-derivation: d l/d gamma_j = sum_i d_i [v_j(u_i) +
    # v'_j(u_i)/s'(u_i)] - e^{s(u_i)} v_j(u_i) + e^{s(u0_i)} v_j(u0_i)
    knots = KnotVector((-1.5, 0.0, 1.8))
    m = FpaftModel(("c0",), knots)
    data = random_dataset(rng, n=40, p=1)
    theta = np.array([0.25, 0.05, 1.2, 0.07])
    beta, gamma = theta[:1], theta[1:]
    u = np.log(data.time) - data.design_matrix(("c0",)) @ beta
    u0 = np.where(data.entry > 0,
                  np.log(np.maximum(data.entry, 1e-300)) -
                  data.design_matrix(("c0",)) @ beta, -np.inf)
    d = data.event.astype(float)
    s_u = evaluate(u, gamma, knots)
    sp_u = evaluate_derivative(u, gamma, knots)
    v = np.column_stack([np.ones(data.n), basis(u, knots)])
    vp = np.column_stack([np.zeros(data.n), basis_derivative(u, knots)])
    expect = (d[:, None] * (v + vp / sp_u[:, None])
              - np.exp(s_u)[:, None] * v)
    has0 = np.isfinite(u0)
    v0 = np.column_stack([np.ones(has0.sum()), basis(u0[has0], knots)])
    s0 = evaluate(u0[has0], gamma, knots)
    want = expect.sum(axis=0) + (np.exp(s0)[:, None] * v0).sum(axis=0)
    _, grad = m.loglik_and_score(data, theta)
    np.testing.assert_allclose(grad[1:], want, rtol=1e-9, atol=1e-9)


# -- Weibull AFT -------------------------------------------------------------

def test_weibull_exponential_special_case():
    m = WeibullAftModel(())
    theta = np.array([0.0, 0.0])  # lam = gam = 1
    t = np.array([0.5, 1.0, 2.0])
    np.testing.assert_allclose(m.survival(t, np.zeros(0), theta), np.exp(-t),
                               rtol=1e-12)


def test_weibull_cum_hazard_hand_value():
    # lam=1, gam=2, t=1, phi=e^{-0.5}: H = (e^{-0.5})^2 = e^{-1}
    m = WeibullAftModel(("x",))
    theta = np.array([0.5, 0.0, np.log(2.0)])
    H = np.exp(m.log_cum_hazard(1.0, np.array([1.0]), theta))
    assert H == pytest.approx(np.exp(-1.0), rel=1e-12)


def test_weibull_matches_fpaft_df1_under_mapping(rng):
    data = random_dataset(rng, n=80, p=1)
    wb = WeibullAftModel(("c0",))
    fp = FpaftModel(("c0",), EXP_KNOTS)
    for _ in range(10):
        beta = rng.normal() * 0.5
        lam, gam = rng.uniform(0.3, 2.0), rng.uniform(0.5, 2.5)
        th_w = np.array([beta, np.log(lam), np.log(gam)])
        th_f = np.array([beta, np.log(lam), gam])
        ll_w = wb.loglik(data, th_w)
        ll_f = fp.loglik(data, th_f)
        assert ll_w == pytest.approx(ll_f, abs=1e-10)
        t = rng.uniform(0.1, 4.0)
        x = np.array([rng.normal()])
        assert wb.survival(t, x, th_w) == pytest.approx(
            fp.survival(t, x, th_f), rel=1e-12)


def test_weibull_score_matches_finite_differences(rng):
    m = WeibullAftModel(("c0", "c1"))
    data = random_dataset(rng, n=50, p=2)
    for _ in range(6):
        theta = np.array([rng.normal() * 0.4, rng.normal() * 0.4,
                          rng.normal() * 0.5, rng.normal() * 0.3])
        _, grad = m.loglik_and_score(data, theta)
        fd = fd_score(m, data, theta)
        np.testing.assert_allclose(grad, fd, rtol=1e-6, atol=1e-6)


# -- generalized gamma -------------------------------------------------------

def test_gengamma_kappa_one_is_weibull():
    g = GenGammaAftModel(())
    wb = WeibullAftModel(())
    lam, gam = 0.8, 1.7
    th_g = np.array([-np.log(lam) / gam, np.log(1.0 / gam), 1.0])
    th_w = np.array([np.log(lam), np.log(gam)])
    for t in (0.1, 0.3, 1.0, 2.5, 6.0):
        assert g.survival(t, np.zeros(0), th_g) == pytest.approx(
            wb.survival(t, np.zeros(0), th_w), rel=1e-10)


def test_gengamma_kappa_zero_limit_is_lognormal():
    g = GenGammaAftModel(("x",))
    mu, sigma, beta = 0.4, 0.8, 0.3
    theta = np.array([beta, mu, np.log(sigma), 1e-8])
    x = np.array([1.0])
    for t in (0.2, 0.7, 1.5, 4.0):
        w = (np.log(t) - beta - mu) / sigma
        want = norm.sf(w)
        assert g.survival(t, x, theta) == pytest.approx(want, rel=1e-6)


def test_gengamma_negative_kappa_survival_is_valid():
    g = GenGammaAftModel(())
    theta = np.array([0.2, -0.1, -0.7])
    t = np.array([0.2, 1.0, 3.0])
    s = g.survival(t, np.zeros(0), theta)
    assert np.all((s > 0) & (s < 1))
    assert np.all(np.diff(s) < 0)


def test_gengamma_hazard_matches_neg_dlog_survival(rng):
    g = GenGammaAftModel(())
    for kappa in (-0.6, 0.4, 1.3):
        theta = np.array([0.3, -0.2, kappa])
        eps = 1e-6
        for t in (0.4, 1.1, 2.7):
            fd = -(np.log(g.survival(t + eps, np.zeros(0), theta))
                   - np.log(g.survival(t - eps, np.zeros(0), theta))) / (
                       2 * eps)
            assert g.hazard(t, np.zeros(0), theta) == pytest.approx(
                fd, rel=1e-5)


def test_gengamma_score_matches_finite_differences(rng):
    m = GenGammaAftModel(("c0",))
    data = random_dataset(rng, n=50, p=1)
    for kappa in (-0.8, -0.3, 0.5, 1.0, 1.6):
        theta = np.array([0.2, 0.3, -0.2, kappa])
        _, grad = m.loglik_and_score(data, theta)
        fd = fd_score(m, data, theta)
        np.testing.assert_allclose(grad, fd, rtol=2e-6, atol=2e-6)


def test_reg_inc_gamma_shape_derivative_oracle():
    # d/da P(a, x), 50-digit mpmath reference values
    grid = [
        (0.25, 0.1, -1.3008926930401602),
        (0.25, 0.5, -0.65025842524806494),
        (1.0, 1.0, -0.4317297106348987),
        (1.0, 3.0, -0.096482941991346353),
        (4.0, 2.0, -0.13026231147066753),
        (4.0, 6.0, -0.11316185544391703),
        (16.0, 12.0, -0.063129176331297889),
        (16.0, 20.0, -0.058228835817861402),
        (100.0, 95.0, -0.035991134792831112),
        (0.04, 0.02, -2.984285102497489),
    ]
    for a, x, want in grid:
        assert _reg_inc_gamma_da(a, x) == pytest.approx(want, abs=5e-9)


# -- exponential PH -----------------------------------------------------------

def test_exponential_ph_loglik_closed_form(rng):
    m = ExponentialPhModel(("c0",))
    data = random_dataset(rng, n=30, p=1)
    theta = np.array([0.4, -0.3])
    eta = theta[1] + data.design_matrix(("c0",))[:, 0] * theta[0]
    want = float(np.sum(data.event * eta
                        - (data.time - data.entry) * np.exp(eta)))
    assert m.loglik(data, theta) == pytest.approx(want, rel=1e-12)


def test_exponential_ph_score_matches_finite_differences(rng):
    m = ExponentialPhModel(("c0", "c1"))
    data = random_dataset(rng, n=50, p=2)
    theta = np.array([0.5, -0.4, 0.2])
    _, grad = m.loglik_and_score(data, theta)
    np.testing.assert_allclose(grad, fd_score(m, data, theta),
                               rtol=1e-6, atol=1e-6)


def test_exponential_ph_beta_raises_hazard():
    # positive coefficients multiply the hazard in this family, unlike
    # the AFT families where positive beta lengthens survival
    m = ExponentialPhModel(("x",))
    theta = np.array([1.0, -0.5])
    h0 = m.hazard(1.0, np.array([0.0]), theta)
    h1 = m.hazard(1.0, np.array([1.0]), theta)
    assert h1 == pytest.approx(h0 * np.e, rel=1e-12)


# -- cross-family structure ---------------------------------------------------

def test_aft_survival_identity_all_families(rng):
    # S(t|x) = S0(t * phi(x)) exactly for time-fixed AFT effects
    knots = KnotVector((-1.5, 0.2, 1.9))
    cases = [
        (FpaftModel(("x",), knots), np.array([0.6, 0.1, 1.3, 0.05])),
        (WeibullAftModel(("x",)), np.array([0.6, -0.2, 0.4])),
        (GenGammaAftModel(("x",)), np.array([0.6, 0.3, -0.1, 0.7])),
    ]
    x = np.array([0.8])
    for model, theta in cases:
        phi = np.exp(-x @ theta[:1])
        for t in (0.3, 1.0, 2.2):
            lhs = model.survival(t, x, theta)
            rhs = model.survival(t * phi, np.zeros(1), theta)
            assert lhs == pytest.approx(rhs, rel=1e-12), model.family


def test_survival_equals_exp_neg_exp_log_cum_hazard(rng):
    knots = KnotVector((-1.0, 0.5, 2.0))
    m = FpaftModel((), knots)
    theta = np.array([0.2, 1.1, -0.03])
    t = np.array([0.4, 1.3, 3.1])
    np.testing.assert_allclose(
        m.survival(t, np.zeros(0), theta),
        np.exp(-np.exp(m.log_cum_hazard(t, np.zeros(0), theta))),
        rtol=1e-14)


def test_build_model_places_knots_from_event_quantiles(weibull_data):
    spec = ModelSpec(family="fpaft", covariates=("x",), df=3)
    m = build_model(spec, data=weibull_data)
    # boundary knots at the extreme uncensored log times
    ev = weibull_data.time[weibull_data.event == 1]
    assert m.knots.knots[0] == pytest.approx(np.log(ev.min()))
    assert m.knots.knots[-1] == pytest.approx(np.log(ev.max()))
    assert m.knots.df == 3


def test_build_model_requires_data_or_knots():
    spec = ModelSpec(family="fpaft", covariates=(), df=2)
    with pytest.raises(ParameterError):
        build_model(spec)
