"""Parametric model families, priors and reparameterizations.

Every family exposes its log-likelihood together with analytic gradient and
Hessian in *natural* coordinates.  Fitting happens in unconstrained
coordinates; :func:`grad_hess` and :func:`log_prior` apply the elementwise
chain rule (plus the log-Jacobian for priors).

The unconstrained transform of a slot is chosen by the support of its prior:
``Uniform01`` slots are optimized on the logit scale, ``Gamma`` and
``InvGamma`` slots on the log scale, ``Gaussian`` slots as-is.  A prior's
support must lie inside the family's domain for that slot.
"""
from __future__ import annotations

import csv
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import special, stats

from .exceptions import (
    BoundaryValue,
    DomainError,
    ShapeError,
    UnassignedSlot,
    ValidationError,
)

REAL = "real"
UNIT = "unit"
POSITIVE = "positive"
_LOG_2PI = math.log(2.0 * math.pi)

__all__ = [
    "REAL",
    "UNIT",
    "POSITIVE",
    "Dataset",
    "Prior",
    "Gaussian",
    "Uniform01",
    "Gamma",
    "InvGamma",
    "Family",
    "GaussianLinear",
    "Logistic",
    "BinomialRates",
    "PoissonScaledRate",
    "TruthSpec",
    "log_likelihood",
    "grad_hess",
    "to_unconstrained",
    "from_unconstrained",
    "log_jacobian",
    "log_prior",
    "PriorVector",
    "simulate",
    "family_from_dict",
    "prior_from_dict",
    "read_table",
    "load_dataset",
]


# ---------------------------------------------------------------------------
# data


@dataclass(frozen=True, eq=False)
class Dataset:
    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=float).reshape(-1)
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ShapeError(f"X has shape {X.shape} but y has length {y.shape[0]}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise ValidationError("dataset contains non-finite entries")
        y.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.X, other.X)
        )

    __hash__ = None


def read_table(path) -> tuple[list[str], np.ndarray]:
    """Header names and a float matrix from a CSV file; zero rows allowed."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror or exc}") from exc
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"{path}: missing header row")
    header = [c.strip() for c in rows[0]]
    try:
        body = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric entry ({exc})") from exc
    body = body.reshape(-1, len(header))
    if any(len(r) != len(header) for r in rows[1:]):
        raise ShapeError(f"{path}: ragged rows")
    return header, body


def load_dataset(path) -> Dataset:
    """Learner data: first column the response, the rest covariates."""
    header, body = read_table(path)
    if len(header) < 2:
        raise ShapeError(f"{path}: need a response column and at least one covariate")
    return Dataset(body[:, 0], body[:, 1:])


# ---------------------------------------------------------------------------
# priors


@dataclass(frozen=True)
class Prior:
    domain = REAL

    def to_dict(self) -> dict:
        d = {"type": type(self).__name__.lower()}
        d.update(self.__dict__)
        return d


@dataclass(frozen=True)
class Gaussian(Prior):
    mean: float = 0.0
    variance: float = 1.0
    domain = REAL

    def __post_init__(self):
        if not self.variance > 0:
            raise ValidationError(f"Gaussian prior variance must be positive, got {self.variance}")


@dataclass(frozen=True)
class Uniform01(Prior):
    domain = UNIT


@dataclass(frozen=True)
class Gamma(Prior):
    shape: float = 1.0
    rate: float = 1.0
    domain = POSITIVE

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValidationError("Gamma prior needs positive shape and rate")


@dataclass(frozen=True)
class InvGamma(Prior):
    a: float = 1.0
    b: float = 1.0
    domain = POSITIVE

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValidationError("InvGamma prior needs positive a and b")


_PRIOR_TYPES = {"gaussian": Gaussian, "uniform01": Uniform01, "gamma": Gamma, "invgamma": InvGamma}


def prior_from_dict(doc: Mapping) -> Prior:
    doc = dict(doc)
    kind = str(doc.pop("type", "")).lower()
    if kind not in _PRIOR_TYPES:
        raise ValidationError(f"unknown prior type {kind!r}; valid: {sorted(_PRIOR_TYPES)}")
    try:
        return _PRIOR_TYPES[kind](**doc)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {kind} prior: {exc}") from exc


# ---------------------------------------------------------------------------
# transforms


def _domain_codes(domains: Sequence[str]) -> np.ndarray:
    lut = {REAL: 0, UNIT: 1, POSITIVE: 2}
    try:
        return np.array([lut[d] for d in domains], dtype=np.int8)
    except KeyError as exc:
        raise ValidationError(f"unknown domain {exc}") from None


def to_unconstrained(domains: Sequence[str], theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    codes = _domain_codes(domains)
    if codes.shape != theta.shape:
        raise ShapeError("domains and theta differ in length")
    out = theta.copy()
    u = codes == 1
    p = codes == 2
    if np.any(u):
        t = theta[u]
        if np.any((t <= 0) | (t >= 1)):
            raise BoundaryValue("unit-interval value on or outside the boundary")
        out[u] = special.logit(t)
    if np.any(p):
        t = theta[p]
        if np.any(t <= 0):
            raise BoundaryValue("positive value on or outside the boundary")
        out[p] = np.log(t)
    return out


def _transform(codes: np.ndarray, free: np.ndarray):
    """Natural value plus first and second derivatives of the map."""
    theta = free.copy()
    d1 = np.ones_like(free)
    d2 = np.zeros_like(free)
    u = codes == 1
    if np.any(u):
        s = special.expit(free[u])
        theta[u] = s
        d1[u] = s * (1.0 - s)
        d2[u] = d1[u] * (1.0 - 2.0 * s)
    p = codes == 2
    if np.any(p):
        e = np.exp(free[p])
        theta[p] = e
        d1[p] = e
        d2[p] = e
    return theta, d1, d2


def from_unconstrained(domains: Sequence[str], free) -> np.ndarray:
    free = np.asarray(free, dtype=float)
    return _transform(_domain_codes(domains), free)[0]


def _log_jacobian_parts(codes: np.ndarray, free: np.ndarray):
    val = np.zeros_like(free)
    g = np.zeros_like(free)
    h = np.zeros_like(free)
    u = codes == 1
    if np.any(u):
        f = free[u]
        s = special.expit(f)
        # log s + log(1-s) = -softplus(-f) - softplus(f)
        val[u] = -np.logaddexp(0.0, -f) - np.logaddexp(0.0, f)
        g[u] = 1.0 - 2.0 * s
        h[u] = -2.0 * s * (1.0 - s)
    p = codes == 2
    if np.any(p):
        val[p] = free[p]
        g[p] = 1.0
    return val, g, h


def log_jacobian(domains: Sequence[str], free) -> float:
    """log |d natural / d free| summed over slots."""
    free = np.asarray(free, dtype=float)
    return float(_log_jacobian_parts(_domain_codes(domains), free)[0].sum())


class PriorVector:
    """Vectorized evaluation of independent per-slot priors in free coordinates."""

    def __init__(self, priors: Sequence[Prior]):
        if any(p is None for p in priors):
            missing = [i for i, p in enumerate(priors) if p is None]
            raise UnassignedSlot(f"no prior for slot(s) {missing}")
        self.priors = tuple(priors)
        self.domains = tuple(p.domain for p in priors)
        self.codes = _domain_codes(self.domains)
        n = len(priors)
        kind = np.zeros(n, dtype=np.int8)
        a = np.zeros(n)
        b = np.ones(n)
        for i, p in enumerate(priors):
            if isinstance(p, Gaussian):
                kind[i], a[i], b[i] = 0, p.mean, p.variance
            elif isinstance(p, Uniform01):
                kind[i] = 1
            elif isinstance(p, Gamma):
                kind[i], a[i], b[i] = 2, p.shape, p.rate
            elif isinstance(p, InvGamma):
                kind[i], a[i], b[i] = 3, p.a, p.b
            else:
                raise ValidationError(f"unsupported prior {p!r}")
        self.kind, self.a, self.b = kind, a, b
        const = np.zeros(n)
        g = kind == 0
        const[g] = -0.5 * (_LOG_2PI + np.log(b[g]))
        m = kind == 2
        const[m] = a[m] * np.log(b[m]) - special.gammaln(a[m])
        m = kind == 3
        const[m] = a[m] * np.log(b[m]) - special.gammaln(a[m])
        self.const = const

    def natural(self, x: np.ndarray):
        """Log density with first/second derivatives in natural coordinates."""
        k, a, b = self.kind, self.a, self.b
        val = self.const.copy()
        g = np.zeros_like(x)
        h = np.zeros_like(x)
        m = k == 0
        if np.any(m):
            r = x[m] - a[m]
            val[m] += -0.5 * r * r / b[m]
            g[m] = -r / b[m]
            h[m] = -1.0 / b[m]
        m = k == 2
        if np.any(m):
            xm = x[m]
            val[m] += (a[m] - 1.0) * np.log(xm) - b[m] * xm
            g[m] = (a[m] - 1.0) / xm - b[m]
            h[m] = -(a[m] - 1.0) / xm**2
        m = k == 3
        if np.any(m):
            xm = x[m]
            val[m] += -(a[m] + 1.0) * np.log(xm) - b[m] / xm
            g[m] = -(a[m] + 1.0) / xm + b[m] / xm**2
            h[m] = (a[m] + 1.0) / xm**2 - 2.0 * b[m] / xm**3
        return val, g, h

    def free(self, free: np.ndarray):
        """(value, gradient, diagonal Hessian) of log prior + log Jacobian."""
        theta, d1, d2 = _transform(self.codes, free)
        v, g, h = self.natural(theta)
        jv, jg, jh = _log_jacobian_parts(self.codes, free)
        value = float(v.sum() + jv.sum())
        grad = g * d1 + jg
        hdiag = h * d1 * d1 + g * d2 + jh
        return value, grad, hdiag


def log_prior(priors: Sequence[Prior], theta_free):
    """Log prior in free coordinates including the Jacobian correction.

    Returns ``(value, gradient, hessian)`` with a dense diagonal Hessian.
    """
    theta_free = np.asarray(theta_free, dtype=float)
    if len(priors) != theta_free.shape[0]:
        raise UnassignedSlot(f"{len(priors)} priors for {theta_free.shape[0]} slots")
    v, g, h = PriorVector(priors).free(theta_free)
    return v, g, np.diag(h)


# ---------------------------------------------------------------------------
# families


class Family(ABC):
    """A parametric model class ``p(y | x, theta)``.

    Subclasses implement the natural-coordinate likelihood and the
    draw-wise predictive pieces used by Monte Carlo predictives.  ``Theta``
    arguments of the ``draw_*`` methods are ``(S, p)`` arrays of natural
    parameters, ``X`` is ``(T, w)`` and results are ``(S, T)``.
    """

    name: str = ""
    discrete: bool = False

    @abstractmethod
    def n_params(self, data: Dataset) -> int: ...

    @abstractmethod
    def domains(self, data: Dataset) -> tuple[str, ...]: ...

    def check_data(self, data: Dataset) -> None:
        if data.n == 0:
            raise ShapeError(f"{self.name}: dataset has no rows")

    @abstractmethod
    def loglik_derivs(self, theta: np.ndarray, data: Dataset): ...

    def loglik(self, theta: np.ndarray, data: Dataset) -> float:
        return self.loglik_derivs(theta, data)[0]

    def pred_width(self, data: Dataset) -> int:
        return data.k

    @abstractmethod
    def draw_logpdf(self, Theta, y, X) -> np.ndarray: ...

    @abstractmethod
    def draw_mean(self, Theta, X) -> np.ndarray: ...

    @abstractmethod
    def draw_var(self, Theta, X) -> np.ndarray: ...

    @abstractmethod
    def draw_cdf(self, Theta, y, X) -> np.ndarray: ...

    @abstractmethod
    def draw_sample(self, Theta, X, rng) -> np.ndarray: ...

    def support_max(self, Theta, X) -> int:
        raise NotImplementedError

    @abstractmethod
    def to_dict(self) -> dict: ...


def _check_domain(theta: np.ndarray, domains: Sequence[str]):
    codes = _domain_codes(domains)
    u = codes == 1
    p = codes == 2
    if np.any(u & ((theta <= 0) | (theta >= 1))) or np.any(p & (theta <= 0)):
        raise DomainError("parameter outside its constraint set")


@dataclass(frozen=True)
class GaussianLinear(Family):
    """``y = x'beta + eps``; ``sigma2=None`` adds a trailing variance slot."""

    sigma2: float | None = None
    name = "gaussian_linear"

    def __post_init__(self):
        if self.sigma2 is not None and not self.sigma2 > 0:
            raise ValidationError("sigma2 must be positive")

    @property
    def known_variance(self) -> bool:
        return self.sigma2 is not None

    def n_params(self, data):
        return data.k + (0 if self.known_variance else 1)

    def domains(self, data):
        return (REAL,) * data.k + (() if self.known_variance else (POSITIVE,))

    def loglik_derivs(self, theta, data):
        X, y = data.X, data.y
        k, n = data.k, data.n
        if theta.shape[0] != self.n_params(data):
            raise ShapeError(f"expected {self.n_params(data)} parameters, got {theta.shape[0]}")
        beta = theta[:k]
        r = y - X @ beta
        rss = float(r @ r)
        if self.known_variance:
            s = self.sigma2
            val = -0.5 * n * (_LOG_2PI + math.log(s)) - 0.5 * rss / s
            return val, X.T @ r / s, -(X.T @ X) / s
        s = theta[k]
        if s <= 0:
            raise DomainError("variance must be positive")
        val = -0.5 * n * (_LOG_2PI + math.log(s)) - 0.5 * rss / s
        g = np.empty(k + 1)
        g[:k] = X.T @ r / s
        g[k] = -0.5 * n / s + 0.5 * rss / s**2
        H = np.empty((k + 1, k + 1))
        H[:k, :k] = -(X.T @ X) / s
        H[:k, k] = H[k, :k] = -(X.T @ r) / s**2
        H[k, k] = 0.5 * n / s**2 - rss / s**3
        return val, g, H

    def _mean_var(self, Theta, X):
        k = X.shape[1]
        mean = Theta[:, :k] @ X.T
        if self.known_variance:
            var = np.full_like(mean, self.sigma2)
        else:
            var = np.broadcast_to(Theta[:, k][:, None], mean.shape)
        return mean, var

    def draw_logpdf(self, Theta, y, X):
        mean, var = self._mean_var(Theta, X)
        return -0.5 * (_LOG_2PI + np.log(var) + (y[None, :] - mean) ** 2 / var)

    def draw_mean(self, Theta, X):
        return self._mean_var(Theta, X)[0]

    def draw_var(self, Theta, X):
        return np.array(self._mean_var(Theta, X)[1])

    def draw_cdf(self, Theta, y, X):
        mean, var = self._mean_var(Theta, X)
        return special.ndtr((y[None, :] - mean) / np.sqrt(var))

    def draw_sample(self, Theta, X, rng):
        mean, var = self._mean_var(Theta, X)
        return mean + np.sqrt(var) * rng.standard_normal(mean.shape)

    def to_dict(self):
        return {"name": self.name, "sigma2": self.sigma2}


@dataclass(frozen=True)
class Logistic(Family):
    name = "logistic"
    discrete = True

    def n_params(self, data):
        return data.k

    def domains(self, data):
        return (REAL,) * data.k

    def check_data(self, data):
        super().check_data(data)
        if not np.all((data.y == 0) | (data.y == 1)):
            raise ValidationError("logistic responses must be 0/1")

    def loglik_derivs(self, theta, data):
        if theta.shape[0] != data.k:
            raise ShapeError(f"expected {data.k} parameters, got {theta.shape[0]}")
        eta = data.X @ theta
        p = special.expit(eta)
        val = float(np.sum(data.y * eta - np.logaddexp(0.0, eta)))
        g = data.X.T @ (data.y - p)
        w = p * (1.0 - p)
        H = -(data.X.T * w) @ data.X
        return val, g, H

    def draw_logpdf(self, Theta, y, X):
        eta = Theta @ X.T
        out = y[None, :] * eta - np.logaddexp(0.0, eta)
        bad = (y != 0) & (y != 1)
        if np.any(bad):
            out[:, bad] = -np.inf
        return out

    def draw_mean(self, Theta, X):
        return special.expit(Theta @ X.T)

    def draw_var(self, Theta, X):
        p = special.expit(Theta @ X.T)
        return p * (1.0 - p)

    def draw_cdf(self, Theta, y, X):
        p = special.expit(Theta @ X.T)
        yy = np.broadcast_to(y[None, :], p.shape)
        return np.where(yy < 0, 0.0, np.where(yy < 1, 1.0 - p, 1.0))

    def draw_sample(self, Theta, X, rng):
        p = special.expit(Theta @ X.T)
        return (rng.random(p.shape) < p).astype(float)

    def support_max(self, Theta, X):
        return 1

    def to_dict(self):
        return {"name": self.name}


def _row_index(X, n_rows):
    idx = X[:, 0]
    if np.any(idx != np.round(idx)) or np.any(idx < 0) or np.any(idx >= n_rows):
        raise ShapeError(f"row index column must hold integers in [0, {n_rows})")
    return idx.astype(np.intp)


@dataclass(frozen=True)
class BinomialRates(Family):
    """``y_i ~ Binomial(trials_i, theta_i)`` with one rate per row.

    The dataset's single covariate column holds the trial counts.  For
    prediction, covariate rows are ``(row index, trials)``.
    """

    name = "binomial_rates"
    discrete = True

    def n_params(self, data):
        return data.n

    def domains(self, data):
        return (UNIT,) * data.n

    def pred_width(self, data):
        return 2

    def check_data(self, data):
        super().check_data(data)
        if data.k != 1:
            raise ShapeError("binomial_rates expects exactly one covariate column (trials)")
        t = data.X[:, 0]
        if np.any(t < 1) or np.any(t != np.round(t)):
            raise ValidationError("trials must be positive integers")
        if np.any(data.y != np.round(data.y)):
            raise ValidationError("binomial responses must be integer counts")

    def loglik_derivs(self, theta, data):
        n = data.n
        if theta.shape[0] != n:
            raise ShapeError(f"expected {n} parameters, got {theta.shape[0]}")
        _check_domain(theta, self.domains(data))
        t, y = data.X[:, 0], data.y
        if np.any((y < 0) | (y > t)):
            return -np.inf, np.zeros(n), np.zeros((n, n))
        lc = special.gammaln(t + 1) - special.gammaln(y + 1) - special.gammaln(t - y + 1)
        val = float(np.sum(lc + special.xlogy(y, theta) + special.xlog1py(t - y, -theta)))
        g = y / theta - (t - y) / (1.0 - theta)
        H = np.diag(-y / theta**2 - (t - y) / (1.0 - theta) ** 2)
        return val, g, H

    def _pt(self, Theta, X):
        idx = _row_index(X, Theta.shape[1])
        return Theta[:, idx], X[:, 1][None, :]

    def draw_logpdf(self, Theta, y, X):
        p, t = self._pt(Theta, X)
        yy = y[None, :]
        lc = special.gammaln(t + 1) - special.gammaln(yy + 1) - special.gammaln(t - yy + 1)
        out = lc + special.xlogy(yy, p) + special.xlog1py(t - yy, -p)
        bad = (y < 0) | (y > X[:, 1]) | (y != np.round(y))
        if np.any(bad):
            out[:, bad] = -np.inf
        return out

    def draw_mean(self, Theta, X):
        p, t = self._pt(Theta, X)
        return t * p

    def draw_var(self, Theta, X):
        p, t = self._pt(Theta, X)
        return t * p * (1.0 - p)

    def draw_cdf(self, Theta, y, X):
        p, t = self._pt(Theta, X)
        return stats.binom.cdf(y[None, :], t, p)

    def draw_sample(self, Theta, X, rng):
        p, t = self._pt(Theta, X)
        return rng.binomial(np.broadcast_to(t, p.shape).astype(np.int64), p).astype(float)

    def support_max(self, Theta, X):
        return int(X[:, 1].max())

    def to_dict(self):
        return {"name": self.name}


@dataclass(frozen=True)
class PoissonScaledRate(Family):
    """``y_i ~ Poisson(theta1_i * theta2 * x_i)``; slots ``theta1_1..n, theta2``.

    The likelihood only sees the products ``theta1_i * theta2`` so the
    parameters are identified through the prior (or a tie) alone.
    For prediction, covariate rows are ``(row index, exposure)``.
    """

    name = "poisson_scaled_rate"
    discrete = True

    def n_params(self, data):
        return data.n + 1

    def domains(self, data):
        return (POSITIVE,) * (data.n + 1)

    def pred_width(self, data):
        return 2

    def check_data(self, data):
        super().check_data(data)
        if data.k != 1:
            raise ShapeError("poisson_scaled_rate expects exactly one covariate column (exposure)")
        if np.any(data.X[:, 0] <= 0):
            raise ValidationError("exposures must be positive")
        if np.any(data.y != np.round(data.y)):
            raise ValidationError("poisson responses must be integer counts")

    def loglik_derivs(self, theta, data):
        n = data.n
        if theta.shape[0] != n + 1:
            raise ShapeError(f"expected {n + 1} parameters, got {theta.shape[0]}")
        _check_domain(theta, self.domains(data))
        a, b = theta[:n], theta[n]
        x, y = data.X[:, 0], data.y
        if np.any(y < 0):
            return -np.inf, np.zeros(n + 1), np.zeros((n + 1, n + 1))
        mu = a * b * x
        val = float(np.sum(special.xlogy(y, mu) - mu - special.gammaln(y + 1)))
        g = np.empty(n + 1)
        g[:n] = y / a - b * x
        g[n] = np.sum(y / b - a * x)
        H = np.zeros((n + 1, n + 1))
        H[np.arange(n), np.arange(n)] = -y / a**2
        H[:n, n] = H[n, :n] = -x
        H[n, n] = -np.sum(y) / b**2
        return val, g, H

    def _mu(self, Theta, X):
        n = Theta.shape[1] - 1
        idx = _row_index(X, n)
        return Theta[:, idx] * Theta[:, [n]] * X[:, 1][None, :]

    def draw_logpdf(self, Theta, y, X):
        mu = self._mu(Theta, X)
        yy = y[None, :]
        out = special.xlogy(yy, mu) - mu - special.gammaln(yy + 1)
        bad = (y < 0) | (y != np.round(y))
        if np.any(bad):
            out[:, bad] = -np.inf
        return out

    def draw_mean(self, Theta, X):
        return self._mu(Theta, X)

    def draw_var(self, Theta, X):
        return self._mu(Theta, X)

    def draw_cdf(self, Theta, y, X):
        return stats.poisson.cdf(y[None, :], self._mu(Theta, X))

    def draw_sample(self, Theta, X, rng):
        return rng.poisson(self._mu(Theta, X)).astype(float)

    def support_max(self, Theta, X):
        return int(stats.poisson.ppf(1.0 - 1e-12, self._mu(Theta, X).max()))

    def to_dict(self):
        return {"name": self.name}


_FAMILIES = {
    "gaussian_linear": GaussianLinear,
    "logistic": Logistic,
    "binomial_rates": BinomialRates,
    "poisson_scaled_rate": PoissonScaledRate,
}


def family_from_dict(doc: Mapping) -> Family:
    doc = dict(doc)
    name = str(doc.pop("name", ""))
    if name not in _FAMILIES:
        raise ValidationError(f"unknown family {name!r}; valid: {sorted(_FAMILIES)}")
    try:
        return _FAMILIES[name](**doc)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for family {name}: {exc}") from exc


def log_likelihood(family: Family, theta, data: Dataset) -> float:
    """Sum of ``log p(y_i | x_i, theta)`` with ``theta`` in natural coordinates."""
    theta = np.asarray(theta, dtype=float)
    family.check_data(data)
    if theta.shape != (family.n_params(data),):
        raise ShapeError(f"expected {family.n_params(data)} parameters, got shape {theta.shape}")
    _check_domain(theta, family.domains(data))
    return family.loglik(theta, data)


def grad_hess(family: Family, theta_free, data: Dataset, domains: Sequence[str] | None = None):
    """Gradient and Hessian of the log-likelihood in free coordinates.

    ``domains`` selects the transform per slot; it defaults to the family's
    own domains.
    """
    theta_free = np.asarray(theta_free, dtype=float)
    if domains is None:
        domains = family.domains(data)
    theta, d1, d2 = _transform(_domain_codes(domains), theta_free)
    _, g, H = family.loglik_derivs(theta, data)
    grad = g * d1
    hess = H * d1[:, None] * d1[None, :]
    hess[np.diag_indices_from(hess)] += g * d2
    return grad, hess


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True, eq=False)
class TruthSpec:
    """Generator for one learner's data.

    ``covariates`` is ``"normal"`` (standard normal), ``"uniform"`` (on
    ``[low, high]``) or ``"fixed"`` (``X_fixed`` reused verbatim).  When
    ``feature_shift`` is set, a Gaussian truth uses ``(x + shift)**2`` as
    its features while the returned dataset keeps the raw ``x``.
    """

    family: Family
    theta: np.ndarray
    covariates: str = "normal"
    k: int | None = None
    low: float = -1.0
    high: float = 1.0
    X_fixed: np.ndarray | None = None
    feature_shift: float | None = None

    def draw_X(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.covariates == "normal":
            return rng.standard_normal((n, self.k))
        if self.covariates == "uniform":
            return rng.uniform(self.low, self.high, size=(n, self.k))
        if self.covariates == "fixed":
            return np.asarray(self.X_fixed, dtype=float)
        raise ValidationError(f"unknown covariate law {self.covariates!r}")

    def sample_y(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        feats = X if self.feature_shift is None else (X + self.feature_shift) ** 2
        Theta = np.asarray(self.theta, dtype=float)[None, :]
        return self.family.draw_sample(Theta, feats, rng)[0]


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate(truth: TruthSpec, n: int | None, seed) -> Dataset:
    """Draw a dataset of ``n`` rows (``n`` is ignored for fixed covariates)."""
    rng = _rng(seed)
    X = truth.draw_X(n, rng)
    if truth.covariates == "fixed":
        if isinstance(truth.family, (BinomialRates, PoissonScaledRate)):
            Xp = np.column_stack([np.arange(X.shape[0]), X[:, 0]])
            y = truth.family.draw_sample(np.asarray(truth.theta, float)[None, :], Xp, rng)[0]
            return Dataset(y, X)
    return Dataset(truth.sample_y(X, rng), X)
