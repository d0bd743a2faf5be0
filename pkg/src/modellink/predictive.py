"""Posterior predictive distributions for the assisted learner."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import linalg, special, stats

from .exceptions import NotConverged, ShapeError, SingularHessian
from .inference import FitResult, Learner, is_conjugate_gaussian
from .models import Family

__all__ = [
    "PredictiveDistribution",
    "StudentTPredictive",
    "MonteCarloPredictive",
    "point_predictive",
    "posterior_predictive",
    "predictive_from_mode",
]

DEFAULT_DRAWS = 2000


class PredictiveDistribution:
    """Common surface: densities, moments, quantiles and sampling at rows of X."""

    discrete = False

    def _check_X(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.width:
            raise ShapeError(f"expected {self.width} covariates per row, got {X.shape[1]}")
        return X

    def logpdf(self, y, X) -> np.ndarray:
        raise NotImplementedError

    def pdf(self, y, X) -> np.ndarray:
        return np.exp(self.logpdf(y, X))

    def sd(self, X) -> np.ndarray:
        return np.sqrt(self.var(X))

    def interval(self, X, level: float = 0.95):
        a = 0.5 * (1.0 - level)
        return self.quantile(a, X), self.quantile(1.0 - a, X)

    def summary(self, X, y=None) -> dict:
        X = self._check_X(X)
        lo, hi = self.interval(X)
        out = {
            "mean": self.mean(X).tolist(),
            "sd": self.sd(X).tolist(),
            "q025": lo.tolist(),
            "q975": hi.tolist(),
        }
        if y is not None:
            lp = self.logpdf(y, X)
            out["log_density"] = lp.tolist()
            out["log_score_mean"] = float(-np.mean(lp)) if lp.size else None
        return out


class StudentTPredictive(PredictiveDistribution):
    """Closed-form location-scale Student-t predictive; ``dof=inf`` is Gaussian.

    For a known-variance Gaussian learner the posterior of the coefficients
    is exactly ``N(beta, cov)`` and the predictive is
    ``N(x'beta, sigma2 + x' cov x)``, i.e. the infinite-dof case.
    """

    def __init__(self, beta: np.ndarray, cov: np.ndarray, sigma2: float, dof: float = math.inf):
        self.beta = np.asarray(beta, dtype=float)
        self.cov = np.asarray(cov, dtype=float)
        self.sigma2 = float(sigma2)
        self.dof = float(dof)
        self.width = self.beta.shape[0]

    def _dist(self, X):
        X = self._check_X(X)
        loc = X @ self.beta
        scale = np.sqrt(self.sigma2 + np.einsum("ij,jk,ik->i", X, self.cov, X))
        if math.isinf(self.dof):
            return stats.norm(loc, scale)
        return stats.t(self.dof, loc, scale)

    def logpdf(self, y, X):
        return self._dist(X).logpdf(np.asarray(y, dtype=float))

    def cdf(self, y, X):
        return self._dist(X).cdf(np.asarray(y, dtype=float))

    def mean(self, X):
        return self._check_X(X) @ self.beta

    def var(self, X):
        return self._dist(X).var()

    def quantile(self, q, X):
        return self._dist(X).ppf(q)

    def sample(self, X, rng):
        return self._dist(X).rvs(random_state=rng)


class MonteCarloPredictive(PredictiveDistribution):
    """Mixture of the learner's model over posterior parameter draws.

    ``draws`` holds natural-coordinate parameters of the assisted learner,
    one row per draw; every density is the draw average.
    """

    def __init__(self, family: Family, draws: np.ndarray, width: int):
        self.family = family
        self.draws = np.atleast_2d(np.asarray(draws, dtype=float))
        self.width = int(width)
        self.discrete = family.discrete

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    def logpdf(self, y, X):
        X = self._check_X(X)
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise ShapeError("y and X differ in length")
        if y.shape[0] == 0:
            return np.zeros(0)
        L = self.family.draw_logpdf(self.draws, y, X)
        return special.logsumexp(L, axis=0) - math.log(self.n_draws)

    def cdf(self, y, X):
        X = self._check_X(X)
        y = np.asarray(y, dtype=float).reshape(-1)
        return self.family.draw_cdf(self.draws, y, X).mean(axis=0)

    def mean(self, X):
        return self.family.draw_mean(self.draws, self._check_X(X)).mean(axis=0)

    def var(self, X):
        X = self._check_X(X)
        m = self.family.draw_mean(self.draws, X)
        v = self.family.draw_var(self.draws, X)
        return v.mean(axis=0) + m.var(axis=0)

    def quantile(self, q, X):
        X = self._check_X(X)
        T = X.shape[0]
        if T == 0:
            return np.zeros(0)
        if self.discrete:
            lo = np.full(T, -1.0)
            hi = np.full(T, float(self.family.support_max(self.draws, X)))
            while np.any(hi - lo > 1):
                mid = np.floor(0.5 * (lo + hi))
                ok = self.cdf(mid, X) >= q
                hi = np.where(ok, mid, hi)
                lo = np.where(ok, lo, mid)
            return hi
        m, s = self.mean(X), self.sd(X)
        lo, hi = m - 20.0 * s, m + 20.0 * s
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            ok = self.cdf(mid, X) >= q
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
        return 0.5 * (lo + hi)

    def pmf_table(self, X):
        """Outcomes ``0..K`` and their predictive probabilities, shape (T, K+1)."""
        if not self.discrete:
            raise ShapeError("pmf_table is only defined for discrete families")
        X = self._check_X(X)
        K = self.family.support_max(self.draws, X)
        support = np.arange(K + 1, dtype=float)
        out = np.empty((X.shape[0], K + 1))
        for t in range(X.shape[0]):
            Xt = np.repeat(X[t : t + 1], K + 1, axis=0)
            L = self.family.draw_logpdf(self.draws, support, Xt)
            out[t] = np.exp(special.logsumexp(L, axis=0) - math.log(self.n_draws))
        return support, out

    def sample(self, X, rng):
        X = self._check_X(X)
        rng = np.random.default_rng(rng)
        pick = rng.integers(0, self.n_draws, size=X.shape[0])
        out = np.empty(X.shape[0])
        for t in range(X.shape[0]):
            out[t] = self.family.draw_sample(self.draws[pick[t] : pick[t] + 1], X[t : t + 1], rng)[0, 0]
        return out


def _to_natural(codes: np.ndarray, free: np.ndarray) -> np.ndarray:
    """Row-wise natural values for a (S, d) block of free coordinates."""
    unit = (codes == 1)[None, :]
    pos = (codes == 2)[None, :]
    return np.where(unit, special.expit(free), np.where(pos, np.exp(np.where(pos, free, 0.0)), free))


def point_predictive(family: Family, theta, width: int) -> MonteCarloPredictive:
    """The model at a fixed parameter (e.g. the data-generating truth)."""
    return MonteCarloPredictive(family, np.asarray(theta, dtype=float)[None, :], width)


def posterior_predictive(
    fit: FitResult,
    learners: Sequence[Learner],
    assisted: int = 0,
    n_draws: int = DEFAULT_DRAWS,
    seed=0,
    closed_form: bool | None = None,
) -> PredictiveDistribution:
    """Predictive distribution of ``learners[assisted]`` under ``fit``.

    The closed form is used when every learner in the fit is a
    known-variance Gaussian with Gaussian priors (the Laplace posterior is
    then exact).  Otherwise ``n_draws`` draws from ``N(theta_hat, H^-1)`` in
    free coordinates are mapped to natural coordinates.
    """
    if not fit.converged:
        raise NotConverged("predictive requested for a non-converged fit")
    space = fit.space
    if assisted not in space.vertex_set:
        raise ShapeError(f"learner {assisted} is not part of this fit")
    lr = learners[assisted]
    idx = space.indices(assisted)
    width = lr.family.pred_width(lr.data)
    if closed_form is None:
        closed_form = is_conjugate_gaussian(space, learners)
    return predictive_from_mode(
        lr.family, fit.theta_hat, fit.hessian, fit.codes, idx, width, closed_form, n_draws, seed
    )


def predictive_from_mode(
    family: Family,
    theta_hat,
    hessian,
    codes,
    idx,
    width: int,
    closed_form: bool = False,
    n_draws: int = DEFAULT_DRAWS,
    seed=0,
) -> PredictiveDistribution:
    """Build a predictive from a stored mode and negative log-posterior Hessian.

    ``idx`` picks the assisted learner's slots out of the global vector.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    hessian = np.asarray(hessian, dtype=float)
    codes = np.asarray(codes)
    idx = np.asarray(idx, dtype=np.intp)
    try:
        L = linalg.cholesky(hessian, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularHessian("stored Hessian is not positive definite") from exc
    if closed_form:
        cov = linalg.cho_solve((L, True), np.eye(theta_hat.shape[0]))
        return StudentTPredictive(theta_hat[idx], cov[np.ix_(idx, idx)], family.sigma2)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_draws, theta_hat.shape[0]))
    free = theta_hat[None, :] + linalg.solve_triangular(L, z.T, lower=True, trans="T").T
    theta = _to_natural(codes, free)
    return MonteCarloPredictive(family, theta[:, idx], width)
