import math

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import gaussian_learner
from modellink.exceptions import DegenerateDenominator, NotConverged, ShapeError, UnsupportedRule
from modellink.experiments import _hpv_learners, hpv_setup
from modellink.graph import build_graph, tie_parameters
from modellink.inference import Learner, fit_map
from modellink.models import BinomialRates, Dataset, Gaussian, GaussianLinear, Logistic, simulate
from modellink.predictive import (
    MonteCarloPredictive,
    StudentTPredictive,
    point_predictive,
    posterior_predictive,
    predictive_from_mode,
)
from modellink.scoring import efficiency_ratio, score, squared_error


@pytest.fixture
def gaussian_fit():
    rng = np.random.default_rng(0)
    lr = gaussian_learner(rng, 25, [0.5, -1.0], prior_var=4.0, sigma2=1.0)
    fit = fit_map(tie_parameters(build_graph([2]), [0]), [lr])
    return fit, [lr]


def conjugate_oracle(lr, x):
    X, y = lr.data.X, lr.data.y
    A = X.T @ X + np.eye(X.shape[1]) / 4.0
    cov = np.linalg.inv(A)
    m = cov @ X.T @ y
    return x @ m, math.sqrt(1.0 + x @ cov @ x)


def test_closed_form_matches_conjugate_oracle(gaussian_fit):
    fit, learners = gaussian_fit
    p = posterior_predictive(fit, learners)
    assert isinstance(p, StudentTPredictive) and math.isinf(p.dof)
    x = np.array([[0.3, 2.0]])
    m, s = conjugate_oracle(learners[0], x[0])
    assert p.mean(x)[0] == pytest.approx(m, abs=1e-10)
    assert p.sd(x)[0] == pytest.approx(s, abs=1e-10)
    lo, hi = p.interval(x)
    assert lo[0] == pytest.approx(m - 1.959963984540054 * s, abs=1e-8)
    assert hi[0] == pytest.approx(m + 1.959963984540054 * s, abs=1e-8)


def test_flat_prior_limit_gives_ols():
    rng = np.random.default_rng(1)
    lr = gaussian_learner(rng, 30, [1.0, 2.0], prior_var=1e8)
    fit = fit_map(tie_parameters(build_graph([2]), [0]), [lr])
    ols = np.linalg.lstsq(lr.data.X, lr.data.y, rcond=None)[0]
    x = np.array([[1.0, -0.5]])
    assert posterior_predictive(fit, [lr]).mean(x)[0] == pytest.approx(x[0] @ ols, abs=1e-3)


def test_monte_carlo_agrees_with_closed_form(gaussian_fit):
    fit, learners = gaussian_fit
    exact = posterior_predictive(fit, learners)
    mc = posterior_predictive(fit, learners, n_draws=20000, seed=3, closed_form=False)
    assert isinstance(mc, MonteCarloPredictive)
    X = np.array([[0.3, 2.0], [-1.0, 0.0]])
    assert np.max(np.abs(mc.mean(X) - exact.mean(X))) < 0.02
    assert np.max(np.abs(mc.sd(X) - exact.sd(X))) < 0.02


def test_monte_carlo_density_integrates_to_one(gaussian_fit):
    fit, learners = gaussian_fit
    mc = posterior_predictive(fit, learners, n_draws=2000, seed=1, closed_form=False)
    x = np.array([0.3, 2.0])
    grid = np.linspace(-15, 15, 4001)
    dens = mc.pdf(grid, np.repeat(x[None, :], grid.shape[0], axis=0))
    assert abs(integrate.trapezoid(dens, grid) - 1.0) < 0.02


def test_discrete_predictive_sums_to_one():
    g, t1, t2 = hpv_setup(1)
    rng = np.random.default_rng(0)
    learners = _hpv_learners(simulate(t1, None, rng), simulate(t2, None, rng))
    fit = fit_map(tie_parameters(g, [0, 1]), learners)
    p = posterior_predictive(fit, learners, 0, n_draws=500)
    support, table = p.pmf_table([[0, 200.0], [5, 1000.0]])
    assert np.allclose(table.sum(axis=1), 1.0, atol=1e-8)
    lo, hi = p.interval([[5, 1000.0]])
    assert lo[0] <= p.mean([[5, 1000.0]])[0] <= hi[0]


def test_quantiles_monotone(gaussian_fit):
    fit, learners = gaussian_fit
    mc = posterior_predictive(fit, learners, n_draws=1000, closed_form=False)
    x = np.array([[0.5, 0.5]])
    qs = [mc.quantile(q, x)[0] for q in (0.025, 0.25, 0.5, 0.75, 0.975)]
    assert qs == sorted(qs)
    lo, hi = mc.interval(x)
    assert lo[0] < mc.mean(x)[0] < hi[0]


def test_predictive_from_mode_reproduces(gaussian_fit):
    fit, learners = gaussian_fit
    p1 = posterior_predictive(fit, learners, closed_form=False, seed=4, n_draws=300)
    p2 = predictive_from_mode(learners[0].family, fit.theta_hat, fit.hessian, fit.codes, [0, 1], 2, False, 300, 4)
    np.testing.assert_array_equal(p1.draws, p2.draws)


def test_predictive_errors(gaussian_fit):
    fit, learners = gaussian_fit
    p = posterior_predictive(fit, learners)
    with pytest.raises(ShapeError):
        p.mean([[1.0, 2.0, 3.0]])
    rng = np.random.default_rng(2)
    lr = Learner(Dataset(rng.integers(0, 2, 50), rng.uniform(-1, 1, (50, 3))), Logistic(), Gaussian())
    bad = fit_map(tie_parameters(build_graph([3]), [0]), [lr], max_iter=1)
    with pytest.raises(NotConverged):
        posterior_predictive(bad, [lr])


def test_summary_fields(gaussian_fit):
    fit, learners = gaussian_fit
    out = posterior_predictive(fit, learners).summary([[0.0, 1.0]], y=[0.2])
    assert set(out) == {"mean", "sd", "q025", "q975", "log_density", "log_score_mean"}


def test_brier_symmetric_coin():
    p = point_predictive(Logistic(), [0.0], 1)
    for y in (0.0, 1.0):
        assert score("brier", p, [y], [[2.0]]).value == pytest.approx(-0.25, abs=1e-12)


def test_brier_rejected_for_continuous(gaussian_fit):
    fit, learners = gaussian_fit
    with pytest.raises(UnsupportedRule):
        score("brier", posterior_predictive(fit, learners), [0.0], [[0.0, 0.0]])
    with pytest.raises(UnsupportedRule):
        score("crps", posterior_predictive(fit, learners), [0.0], [[0.0, 0.0]])


def test_log_score_is_proper_on_binary_outcomes():
    x = np.array([[1.0]])
    truth = point_predictive(Logistic(), [0.7], 1)
    q = 1 / (1 + math.exp(-0.7))
    expected_truth = -(q * math.log(q) + (1 - q) * math.log(1 - q))
    for b in np.linspace(-3, 3, 25):
        cand = point_predictive(Logistic(), [b], 1)
        exp_score = q * score("log", cand, [1], x).value + (1 - q) * score("log", cand, [0], x).value
        assert exp_score >= expected_truth - 1e-12
        assert q * score("log", truth, [1], x).value + (1 - q) * score("log", truth, [0], x).value == pytest.approx(
            expected_truth, abs=1e-12
        )


def test_point_mass_scores_zero():
    p = point_predictive(BinomialRates(), [1.0 - 1e-16], 2)
    assert score("log", p, [10], [[0, 10]]).value == pytest.approx(0.0, abs=1e-12)


def test_squared_error_and_efficiency(gaussian_fit):
    fit, learners = gaussian_fit
    p = posterior_predictive(fit, learners)
    rng = np.random.default_rng(5)
    X = rng.standard_normal((400, 2))
    y = X @ [0.5, -1.0] + rng.standard_normal(400)
    assert squared_error(p, y, X) == pytest.approx(np.mean((p.mean(X) - y) ** 2))
    truth = point_predictive(GaussianLinear(1.0), [0.5, -1.0], 2)
    assert efficiency_ratio(p, p, truth, y, X) == 1.0
    worse = StudentTPredictive(np.array([0.0, 0.0]), np.eye(2) * 1e-6, 1.0)
    assert efficiency_ratio(worse, p, truth, y, X) < 1.0
    with pytest.raises(DegenerateDenominator):
        efficiency_ratio(truth, p, truth, y, X)


def test_student_t_finite_dof():
    p = StudentTPredictive(np.array([1.0]), np.array([[0.0]]), 4.0, dof=5)
    assert p.logpdf([1.0], [[1.0]])[0] == pytest.approx(stats.t(5, 1.0, 2.0).logpdf(1.0))
