"""Joint MAP fitting under parameter tying and log marginal likelihoods."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg

from .exceptions import (
    NotConverged,
    PriorConflict,
    ShapeError,
    SingularHessian,
    UnsupportedFamily,
    ValidationError,
)
from .graph import LinkageGraph, TiedParameterSpace, neighbors, tie_parameters
from .models import (
    POSITIVE,
    REAL,
    UNIT,
    Dataset,
    Family,
    Gaussian,
    GaussianLinear,
    Prior,
    PriorVector,
    _transform,
)

logger = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)
# prior support must sit inside the family domain of the slot
_ALLOWED = {REAL: {REAL, UNIT, POSITIVE}, POSITIVE: {POSITIVE, UNIT}, UNIT: {UNIT}}

__all__ = [
    "Learner",
    "FitResult",
    "JointPosterior",
    "fit_map",
    "log_marginal_laplace",
    "log_marginal_exact_gaussian",
    "MarginalCache",
    "conditional_log_marginal",
    "is_conjugate_gaussian",
]


@dataclass(frozen=True, eq=False)
class Learner:
    """One data source with its model family and per-slot priors.

    ``priors`` may be a single :class:`Prior`, broadcast to every slot.
    """

    data: Dataset
    family: Family
    priors: tuple[Prior, ...] | Prior

    def __post_init__(self):
        self.family.check_data(self.data)
        p = self.family.n_params(self.data)
        priors = self.priors
        if isinstance(priors, Prior):
            priors = (priors,) * p
        priors = tuple(priors)
        if len(priors) != p:
            raise ValidationError(f"{self.family.name}: {len(priors)} priors for {p} parameters")
        for s, (pr, dom) in enumerate(zip(priors, self.family.domains(self.data))):
            if pr.domain not in _ALLOWED[dom]:
                raise ValidationError(
                    f"slot {s}: {type(pr).__name__} prior (support {pr.domain}) "
                    f"does not fit a {dom} parameter"
                )
        object.__setattr__(self, "priors", priors)

    @property
    def dim(self) -> int:
        return len(self.priors)


class JointPosterior:
    """Log joint posterior of tied learners in global free coordinates."""

    def __init__(self, space: TiedParameterSpace, learners: Sequence[Learner]):
        self.space = space
        self.members = []
        priors: list[Prior | None] = [None] * space.dim
        for v in space.vertex_set:
            lr = learners[v]
            idx = space.indices(v)
            if idx.shape[0] != lr.dim:
                raise ShapeError(f"learner {v} has {lr.dim} parameters but the graph declares {idx.shape[0]}")
            for s, gi in enumerate(idx):
                pr = lr.priors[s]
                if priors[gi] is None:
                    priors[gi] = pr
                elif priors[gi] != pr:
                    raise PriorConflict(
                        f"tied slot {gi} has conflicting priors {priors[gi]!r} and {pr!r}"
                    )
            self.members.append((lr, idx))
        self.priors = tuple(priors)
        self.prior = PriorVector(self.priors)
        self.codes = self.prior.codes

    @property
    def dim(self) -> int:
        return self.space.dim

    def initial_point(self) -> np.ndarray:
        x0 = np.zeros(self.dim)
        for i, p in enumerate(self.priors):
            if isinstance(p, Gaussian):
                x0[i] = p.mean
        return x0

    def value(self, free: np.ndarray) -> float:
        theta, _, _ = _transform(self.codes, free)
        if not np.all(np.isfinite(theta)):
            return -np.inf
        total = 0.0
        for lr, idx in self.members:
            try:
                total += lr.family.loglik(theta[idx], lr.data)
            except (ValueError, FloatingPointError):
                return -np.inf
        v, _, _ = self.prior.free(free)
        return total + v

    def evaluate(self, free: np.ndarray):
        """``(value, gradient, Hessian)`` of the log posterior at ``free``."""
        d = self.dim
        theta, d1, d2 = _transform(self.codes, free)
        value, grad, hdiag = self.prior.free(free)
        grad = grad.copy()
        hess = np.diag(hdiag)
        for lr, idx in self.members:
            v, g, H = lr.family.loglik_derivs(theta[idx], lr.data)
            value += v
            a1, a2 = d1[idx], d2[idx]
            gf = g * a1
            Hf = H * a1[:, None] * a1[None, :]
            Hf[np.diag_indices_from(Hf)] += g * a2
            if len(set(idx.tolist())) == len(idx):
                grad[idx] += gf
                hess[np.ix_(idx, idx)] += Hf
            else:
                np.add.at(grad, idx, gf)
                np.add.at(hess, (idx[:, None], idx[None, :]), Hf)
        return value, grad, hess


@dataclass(frozen=True, eq=False)
class FitResult:
    """Posterior mode and curvature in global free coordinates.

    ``hessian`` is the Hessian of the *negative* log posterior at the mode,
    so ``log_marginal`` is the Laplace approximation
    ``log_post_at_mode + d/2 log(2 pi) - 1/2 log det(hessian)``.
    """

    theta_hat: np.ndarray
    hessian: np.ndarray
    log_post_at_mode: float
    log_marginal: float
    converged: bool
    iterations: int
    space: TiedParameterSpace = field(repr=False)
    codes: np.ndarray = field(repr=False)
    priors: tuple = field(repr=False, default=())

    @property
    def dim(self) -> int:
        return self.theta_hat.shape[0]

    @property
    def theta_natural(self) -> np.ndarray:
        return _transform(self.codes, self.theta_hat)[0]

    def covariance(self) -> np.ndarray:
        """Inverse of ``hessian`` (Laplace posterior covariance, free coords)."""
        c = linalg.cho_factor(self.hessian, lower=True)
        return linalg.cho_solve(c, np.eye(self.dim))

    def natural_sd(self) -> np.ndarray:
        """Delta-method posterior standard deviations in natural coordinates."""
        _, d1, _ = _transform(self.codes, self.theta_hat)
        return np.sqrt(np.diag(self.covariance())) * np.abs(d1)


def _chol_logdet(A: np.ndarray):
    try:
        L = linalg.cholesky(A, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError):
        return None
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def fit_map(
    space: TiedParameterSpace,
    learners: Sequence[Learner],
    init: np.ndarray | None = None,
    *,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> FitResult:
    """Newton ascent on the joint log posterior.

    Stops when the gradient max-norm falls below ``tol`` or after
    ``max_iter`` iterations.  Steps are halved until the objective does not
    decrease.  Where the Hessian is not negative definite the Newton system
    is shifted to the nearest safe curvature.

    Raises :class:`SingularHessian` when the gradient vanishes at a point
    whose negative Hessian is not positive definite.  A run that exhausts
    ``max_iter`` returns the last iterate with ``converged=False``.
    """
    post = JointPosterior(space, learners)
    x = post.initial_point() if init is None else np.array(init, dtype=float)
    if x.shape != (post.dim,):
        raise ShapeError(f"init has shape {x.shape}, expected ({post.dim},)")
    v, g, H = post.evaluate(x)
    it = 0
    while np.max(np.abs(g)) >= tol and it < max_iter:
        it += 1
        A = -H
        try:
            c = linalg.cho_factor(A, lower=True)
            step = linalg.cho_solve(c, g)
        except (linalg.LinAlgError, ValueError):
            w, V = np.linalg.eigh(A)
            floor = max(1e-8, 1e-6 * np.max(np.abs(w)))
            w = np.maximum(np.abs(w), floor)
            step = V @ ((V.T @ g) / w)
        t = 1.0
        slack = 1e-12 * max(1.0, abs(v))
        accepted = False
        while t > 1e-12:
            xn = x + t * step
            vn = post.value(xn)
            if np.isfinite(vn) and vn >= v - slack:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        x = xn
        v, g, H = post.evaluate(x)
    converged = bool(np.max(np.abs(g)) < tol)
    A = -H
    A = 0.5 * (A + A.T)
    logdet = _chol_logdet(A)
    if logdet is None:
        if converged:
            raise SingularHessian("negative log-posterior Hessian is not positive definite at the mode")
        log_marginal = float("nan")
    else:
        log_marginal = v + 0.5 * post.dim * _LOG_2PI - 0.5 * logdet
    if not converged:
        logger.debug("fit_map stopped after %d iterations, |grad|=%.3g", it, np.max(np.abs(g)))
    x.setflags(write=False)
    A.setflags(write=False)
    return FitResult(x, A, float(v), float(log_marginal), converged, it, space, post.codes, post.priors)


def log_marginal_laplace(fit: FitResult) -> float:
    if not fit.converged:
        raise NotConverged("Laplace marginal requested for a non-converged fit")
    return fit.log_marginal


def is_conjugate_gaussian(space: TiedParameterSpace, learners: Sequence[Learner]) -> bool:
    for v in space.vertex_set:
        lr = learners[v]
        if not (isinstance(lr.family, GaussianLinear) and lr.family.known_variance):
            return False
        if not all(isinstance(p, Gaussian) for p in lr.priors):
            return False
    return True


def log_marginal_exact_gaussian(space: TiedParameterSpace, learners: Sequence[Learner]) -> float:
    """Closed-form evidence of tied known-variance Gaussian linear learners.

    Stacks every learner's rows into one design over the global coordinates
    and evaluates ``y ~ N(Xg mu0, diag(sigma2) + Xg Sigma0 Xg')``.
    """
    if not is_conjugate_gaussian(space, learners):
        raise UnsupportedFamily("exact marginal needs known-variance Gaussian learners with Gaussian priors")
    post = JointPosterior(space, learners)
    mu0 = np.array([p.mean for p in post.priors])
    var0 = np.array([p.variance for p in post.priors])
    blocks, ys, noise = [], [], []
    for lr, idx in post.members:
        Xg = np.zeros((lr.data.n, space.dim))
        for s, gi in enumerate(idx):
            Xg[:, gi] += lr.data.X[:, s]
        blocks.append(Xg)
        ys.append(lr.data.y)
        noise.append(np.full(lr.data.n, lr.family.sigma2))
    Xg = np.vstack(blocks)
    y = np.concatenate(ys)
    cov = (Xg * var0) @ Xg.T
    cov[np.diag_indices_from(cov)] += np.concatenate(noise)
    L = linalg.cholesky(cov, lower=True)
    r = linalg.solve_triangular(L, y - Xg @ mu0, lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return float(-0.5 * (y.shape[0] * _LOG_2PI + logdet + r @ r))


class MarginalCache:
    """Memoized joint fits and log marginals keyed by learner set.

    A set is always tied with every graph edge inside it.
    """

    def __init__(self, g: LinkageGraph, learners: Sequence[Learner]):
        if len(learners) != g.M:
            raise ValidationError(f"graph has {g.M} learners but {len(learners)} were supplied")
        for v, lr in enumerate(learners):
            if lr.dim != g.dims[v]:
                raise ShapeError(f"learner {v} has {lr.dim} parameters, graph declares {g.dims[v]}")
        self.g = g
        self.learners = learners
        self._fits: dict[frozenset, FitResult] = {}

    def fit(self, vertex_set: Iterable[int]) -> FitResult:
        key = frozenset(vertex_set)
        if key not in self._fits:
            self._fits[key] = fit_map(tie_parameters(self.g, key), self.learners)
        return self._fits[key]

    def log_marginal(self, vertex_set: Iterable[int]) -> float:
        return log_marginal_laplace(self.fit(vertex_set))


def conditional_log_marginal(
    g: LinkageGraph,
    zeta: Iterable[int],
    j: int,
    learners: Sequence[Learner] | None = None,
    cache: MarginalCache | None = None,
) -> float:
    """``log p(data of zeta | data of j)`` under the induced tying.

    Equals the joint evidence of ``zeta + {j}`` minus learner ``j``'s own
    evidence under its own prior.
    """
    zeta = set(zeta)
    if j not in neighbors(g, zeta):
        raise ValidationError(f"learner {j} is not a neighbor of {sorted(zeta)}")
    if cache is None:
        if learners is None:
            raise ValidationError("pass learners or a MarginalCache")
        cache = MarginalCache(g, learners)
    return cache.log_marginal(zeta | {j}) - cache.log_marginal({j})
