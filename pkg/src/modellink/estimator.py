"""scikit-learn style wrappers around selection and prediction.

``X`` and ``y`` are lists with one block per learner, in graph order.
After ``fit`` every prediction method refers to the assisted learner.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_assisted, check_families, check_learner_data, check_priors, check_rows
from .graph import LinkageGraph, build_graph, tie_parameters
from .inference import Learner, MarginalCache, fit_map
from .predictive import DEFAULT_DRAWS, posterior_predictive
from .scoring import score
from .selection import EPSILON, greedy_select

__all__ = ["LinkageSelector", "TiedBayesianModel"]


class _PredictMixin:
    """Prediction surface shared by both estimators; needs ``predictive_``."""

    def predict_distribution(self):
        check_is_fitted(self, "predictive_")
        return self.predictive_

    def predict(self, X) -> np.ndarray:
        """Posterior predictive mean of the assisted learner at rows of ``X``."""
        p = self.predict_distribution()
        return p.mean(check_rows(X, p.width))

    def predict_interval(self, X, level: float = 0.95):
        p = self.predict_distribution()
        return p.interval(check_rows(X, p.width), level)

    def score(self, X, y) -> float:
        """Mean log predictive density (higher is better)."""
        p = self.predict_distribution()
        return -score("log", p, y, check_rows(X, p.width)).value

    def _learners(self, X, y):
        g = self.graph
        if not isinstance(g, LinkageGraph):
            g = build_graph(*g)
        datasets = check_learner_data(X, y, g)
        fams = check_families(self.families, g.M)
        priors = check_priors(self.priors, g.M)
        learners = [Learner(d, f, p) for d, f, p in zip(datasets, fams, priors)]
        return g, learners


class LinkageSelector(_PredictMixin, BaseEstimator):
    """Greedy linkage selection for one assisted learner.

    Parameters
    ----------
    graph : LinkageGraph or ``(dims, edges)``
        Candidate linkages.
    families : Family or list of Family
    priors : Prior, or one prior spec per learner
    assisted : int
        0-based id of the learner to help.
    epsilon : float
        Minimum evidence gain for adding a learner.
    n_draws : int
        Monte Carlo draws for non-conjugate predictives.
    random_state : int
        Seed for the predictive draws.

    Attributes
    ----------
    zeta_ : tuple of int
        Selected learners.
    selected_edges_ : tuple of LinkageEdge
    trace_ : tuple of SelectionStep
    fit_ : FitResult
    predictive_ : PredictiveDistribution
    """

    def __init__(self, graph, families, priors, assisted=0, epsilon=EPSILON, n_draws=DEFAULT_DRAWS, random_state=0):
        self.graph = graph
        self.families = families
        self.priors = priors
        self.assisted = assisted
        self.epsilon = epsilon
        self.n_draws = n_draws
        self.random_state = random_state

    def fit(self, X, y):
        g, learners = self._learners(X, y)
        a = check_assisted(self.assisted, g.M)
        res = greedy_select(g, learners, a, epsilon=self.epsilon, cache=MarginalCache(g, learners))
        self.graph_ = g
        self.learners_ = learners
        self.result_ = res
        self.zeta_ = res.zeta_final
        self.selected_edges_ = res.selected_edges
        self.trace_ = res.trace
        self.fit_ = res.fit
        self.predictive_ = posterior_predictive(res.fit, learners, a, self.n_draws, self.random_state)
        return self


class TiedBayesianModel(_PredictMixin, BaseEstimator):
    """Joint fit of a fixed learner set, with no selection step.

    ``learners`` lists the 0-based ids to pool (default: all).
    """

    def __init__(self, graph, families, priors, assisted=0, learners=None, n_draws=DEFAULT_DRAWS, random_state=0):
        self.graph = graph
        self.families = families
        self.priors = priors
        self.assisted = assisted
        self.learners = learners
        self.n_draws = n_draws
        self.random_state = random_state

    def fit(self, X, y):
        g, learners = self._learners(X, y)
        a = check_assisted(self.assisted, g.M)
        vs = sorted(set(range(g.M) if self.learners is None else self.learners) | {a})
        for v in vs:
            check_assisted(v, g.M)
        self.fit_ = fit_map(tie_parameters(g, vs), learners)
        self.log_marginal_ = self.fit_.log_marginal
        self.predictive_ = posterior_predictive(self.fit_, learners, a, self.n_draws, self.random_state)
        return self
