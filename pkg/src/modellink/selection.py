"""Greedy model linkage selection and an exhaustive-search oracle."""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .exceptions import FitFailure, NotConverged, TooLarge, ValidationError
from .graph import LinkageEdge, LinkageGraph, connected_component, induced_edges, neighbors
from .inference import FitResult, Learner, MarginalCache

logger = logging.getLogger(__name__)

EPSILON = 1e-9
MAX_EXHAUSTIVE = 12
NO_IMPROVEMENT = "NoImprovement"
COMPONENT_EXHAUSTED = "ComponentExhausted"

__all__ = [
    "EPSILON",
    "SelectionStep",
    "SelectionResult",
    "greedy_select",
    "exhaustive_select",
    "selection_accuracy",
]


@dataclass(frozen=True)
class SelectionStep:
    zeta_before: tuple[int, ...]
    candidate_scores: dict
    baseline: float
    chosen: int | None = None
    terminated: str | None = None
    failed: tuple[int, ...] = ()

    def to_dict(self, one_based: bool = True) -> dict:
        off = 1 if one_based else 0
        d = {
            "zeta": [v + off for v in self.zeta_before],
            "scores": {str(j + off): _json_float(s) for j, s in self.candidate_scores.items()},
            "baseline": _json_float(self.baseline),
            "chosen": None if self.chosen is None else self.chosen + off,
        }
        if self.terminated:
            d["terminated"] = self.terminated
        if self.failed:
            d["failed"] = [j + off for j in self.failed]
        return d


@dataclass(frozen=True, eq=False)
class SelectionResult:
    zeta_final: tuple[int, ...]
    selected_edges: tuple[LinkageEdge, ...]
    trace: tuple[SelectionStep, ...]
    fit: FitResult | None
    assisted: int
    score: float | None = None
    cache: MarginalCache | None = field(default=None, repr=False)

    @property
    def edge_keys(self) -> frozenset:
        return frozenset(e.key for e in self.selected_edges)

    def to_dict(self, one_based: bool = True) -> dict:
        off = 1 if one_based else 0
        return {
            "assisted": self.assisted + off,
            "zeta": [v + off for v in self.zeta_final],
            "edges": [
                {"i": e.i + off, "j": e.j + off, "pairs": [list(p) for p in e.pairs]}
                for e in self.selected_edges
            ],
            "trace": [s.to_dict(one_based) for s in self.trace],
            "converged": bool(self.fit is not None and self.fit.converged),
        }


def _json_float(x: float):
    return x if math.isfinite(x) else None


def _safe_log_marginal(cache: MarginalCache, vertex_set) -> float | None:
    try:
        return cache.log_marginal(vertex_set)
    except (FitFailure, NotConverged, ArithmeticError) as exc:
        logger.warning("fit failed for learners %s: %s", sorted(vertex_set), exc)
        return None


def greedy_select(
    g: LinkageGraph,
    learners: Sequence[Learner],
    assisted: int = 0,
    *,
    epsilon: float = EPSILON,
    cache: MarginalCache | None = None,
) -> SelectionResult:
    """Grow the linkage set of ``assisted`` one learner at a time.

    At each step every neighbor ``j`` of the current set is scored by the
    conditional log evidence of the set given ``j``'s data.  The best
    candidate (lowest id on ties) is added unless it fails to beat the
    current set's own log evidence by more than ``epsilon``.  The loop also
    stops once the connected component of ``assisted`` is exhausted.
    """
    cache = cache or MarginalCache(g, learners)
    component = set(connected_component(g, assisted))
    zeta = [assisted]
    try:
        baseline = cache.log_marginal({assisted})
    except (NotConverged, ArithmeticError) as exc:
        raise FitFailure(f"assisted learner {assisted} cannot be fit alone: {exc}") from exc
    trace = []
    own = {}
    while True:
        before = tuple(sorted(zeta))
        if set(zeta) == component:
            trace.append(SelectionStep(before, {}, baseline, terminated=COMPONENT_EXHAUSTED))
            break
        scores, failed = {}, []
        for j in neighbors(g, zeta):
            if j not in own:
                own[j] = _safe_log_marginal(cache, {j})
            joint = _safe_log_marginal(cache, set(zeta) | {j})
            if own[j] is None or joint is None:
                scores[j] = -math.inf
                failed.append(j)
            else:
                scores[j] = joint - own[j]
        best = min(scores, key=lambda j: (-scores[j], j))
        if baseline >= scores[best] - epsilon:
            trace.append(
                SelectionStep(before, scores, baseline, terminated=NO_IMPROVEMENT, failed=tuple(failed))
            )
            break
        trace.append(SelectionStep(before, scores, baseline, chosen=best, failed=tuple(failed)))
        zeta.append(best)
        baseline = cache.log_marginal(set(zeta))
    final = tuple(sorted(zeta))
    return SelectionResult(
        final,
        tuple(induced_edges(g, final)),
        tuple(trace),
        cache.fit(final),
        assisted,
        cache=cache,
    )


def _is_connected(g: LinkageGraph, subset: set[int], root: int) -> bool:
    seen, stack = {root}, [root]
    while stack:
        v = stack.pop()
        for w in g.adjacent(v):
            if w in subset and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == subset


def exhaustive_select(
    g: LinkageGraph,
    learners: Sequence[Learner],
    assisted: int = 0,
    *,
    cache: MarginalCache | None = None,
) -> SelectionResult:
    """Best connected learner set for ``assisted`` by full enumeration.

    Each candidate set ``S`` is scored by ``log p(D_assisted | D_{S - assisted})``.
    Ties go to the smaller set, then the lexicographically smaller one.
    """
    cache = cache or MarginalCache(g, learners)
    component = connected_component(g, assisted)
    if len(component) > MAX_EXHAUSTIVE:
        raise TooLarge(f"component has {len(component)} learners; limit is {MAX_EXHAUSTIVE}")
    others = [v for v in component if v != assisted]
    best_key, best = None, None
    for r in range(len(others) + 1):
        for extra in itertools.combinations(others, r):
            S = {assisted, *extra}
            if not _is_connected(g, S, assisted):
                continue
            joint = _safe_log_marginal(cache, S)
            rest = 0.0 if not extra else _safe_log_marginal(cache, set(extra))
            if joint is None or rest is None:
                continue
            val = joint - rest
            key = (-val, len(S), tuple(sorted(S)))
            if best_key is None or key < best_key:
                best_key, best = key, (tuple(sorted(S)), val)
    if best is None:
        raise FitFailure(f"no candidate set could be fit for learner {assisted}")
    final, val = best
    return SelectionResult(
        final, tuple(induced_edges(g, final)), (), cache.fit(final), assisted, score=val, cache=cache
    )


def selection_accuracy(results: Iterable[SelectionResult], g_star_edges: Iterable) -> float:
    """Fraction of results whose selected edge set equals ``g_star_edges``.

    ``g_star_edges`` may hold :class:`LinkageEdge` objects or ``(i, j)`` pairs.
    """
    target = frozenset(e.key if isinstance(e, LinkageEdge) else (min(e[:2]), max(e[:2])) for e in g_star_edges)
    results = list(results)
    if not results:
        raise ValidationError("no results to score")
    return sum(r.edge_keys == target for r in results) / len(results)
