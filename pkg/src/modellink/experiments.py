"""Simulation protocols: data generation, replication loops and reports.

Every replication ``r`` draws from ``numpy.random.default_rng(seed + r)``,
so any subset of replications can be rerun on its own.  Aggregation folds
results in replication order, which keeps reports byte-identical for a
fixed ``(spec, seed)`` regardless of the worker count.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import DegenerateDenominator, InsufficientRows, ValidationError
from .graph import LinkageGraph, build_graph, tie_parameters
from .inference import Learner, MarginalCache, fit_map
from .models import (
    BinomialRates,
    Dataset,
    Gamma,
    Gaussian,
    GaussianLinear,
    Logistic,
    PoissonScaledRate,
    TruthSpec,
    Uniform01,
    simulate,
)
from .predictive import point_predictive, posterior_predictive
from .scoring import efficiency_ratio, score, squared_error
from .selection import exhaustive_select, greedy_select

__all__ = [
    "EXPERIMENTS",
    "ExperimentSpec",
    "ExperimentReport",
    "default_spec",
    "run_experiment",
    "run_linear_six",
    "run_logistic_five",
    "run_contamination",
    "run_hpv_case",
    "run_gaussian_toy",
    "linear_six_setup",
    "logistic_five_setup",
    "hpv_setup",
    "linkage_log_ratio",
    "greedy_vs_exhaustive",
    "HPV_ORIGINAL",
]

EXPERIMENTS = (
    "gaussian-toy",
    "linear-six",
    "logistic-five",
    "contamination-synthetic",
    "contamination-csv",
    "hpv-case",
)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    n_grid: tuple[int, ...] = ()
    replications: int = 200
    seed: int = 0
    test_size: int = 50
    case: int | None = None
    csv_path: str | None = None
    n_draws: int = 2000
    threads: int = 1

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment {self.name!r}; valid: {', '.join(EXPERIMENTS)}")
        if self.replications < 1:
            raise ValidationError("replications must be >= 1")
        if list(self.n_grid) != sorted(self.n_grid):
            raise ValidationError("n grid must be ascending")
        if self.name == "hpv-case" and self.case not in (1, 2, 3, 4):
            raise ValidationError("hpv-case needs case in {1, 2, 3, 4}")
        if self.name == "contamination-csv" and not self.csv_path:
            raise ValidationError("contamination-csv needs a CSV path")


_DEFAULTS = {
    "gaussian-toy": dict(n_grid=(1,), replications=1, test_size=0),
    "linear-six": dict(n_grid=(50, 75, 100, 125, 150), replications=200, test_size=50),
    "logistic-five": dict(n_grid=(100, 150, 200, 250, 300, 350), replications=200, test_size=500),
    "contamination-synthetic": dict(n_grid=(25, 50), replications=200, test_size=100),
    "contamination-csv": dict(n_grid=(25, 50), replications=200, test_size=100),
    "hpv-case": dict(n_grid=(13,), replications=100, test_size=1000),
}


def default_spec(name: str, **overrides) -> ExperimentSpec:
    if name not in _DEFAULTS:
        raise ValidationError(f"unknown experiment {name!r}; valid: {', '.join(EXPERIMENTS)}")
    kw = dict(_DEFAULTS[name])
    kw.update({k: v for k, v in overrides.items() if v is not None})
    if "n_grid" in kw:
        kw["n_grid"] = tuple(int(n) for n in kw["n_grid"])
    return ExperimentSpec(name=name, **kw)


@dataclass
class ExperimentReport:
    """Per-n aggregates: ``metrics[method][metric] = (mean, standard error)``."""

    name: str
    methods: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def row(self, n: int) -> dict:
        for r in self.rows:
            if r["n"] == n:
                return r
        raise KeyError(n)

    def metric(self, n: int, method: str, metric: str) -> float:
        return self.row(n)["metrics"][method][metric][0]

    def to_records(self) -> list[dict]:
        out = []
        for r in self.rows:
            for method in self.methods:
                for metric, (mean, se) in r["metrics"].get(method, {}).items():
                    out.append({"n": r["n"], "method": method, "metric": metric, "mean": mean, "se": se})
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["n", "method", "metric", "mean", "se"], lineterminator="\n")
        w.writeheader()
        for rec in self.to_records():
            w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in rec.items()})
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"name": self.name, "methods": list(self.methods), "rows": self.rows, "details": self.details},
            indent=2,
            sort_keys=True,
            default=_json_default,
        )

    def summary_table(self) -> str:
        lines = [f"{'n':>6} {'method':<14} {'metric':<22} {'mean':>12} {'se':>10}"]
        for rec in self.to_records():
            lines.append(
                f"{rec['n']:>6} {rec['method']:<14} {rec['metric']:<22} "
                f"{rec['mean']:>12.5g} {rec['se']:>10.3g}"
            )
        return "\n".join(lines)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _mean_se(values) -> tuple[float, float]:
    v = np.asarray([x for x in values if x is not None and np.isfinite(x)], dtype=float)
    if v.size == 0:
        return (float("nan"), float("nan"))
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return (float(v.mean()), se)


def _run_reps(fn: Callable, args: list[tuple], threads: int) -> list:
    if threads <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, *zip(*args), chunksize=max(1, len(args) // (4 * threads))))


def _aggregate(name, methods, n_grid, per_n: dict, extra_keys=()) -> ExperimentReport:
    report = ExperimentReport(name, tuple(methods))
    for n in n_grid:
        reps = per_n[n]
        metrics = {}
        for m in methods:
            keys = sorted({k for r in reps for k in r["metrics"].get(m, {})})
            metrics[m] = {k: _mean_se([r["metrics"][m].get(k) for r in reps]) for k in keys}
        row = {"n": n, "replications": len(reps), "metrics": metrics}
        if "correct" in reps[0]:
            row["selection_accuracy"] = float(np.mean([r["correct"] for r in reps]))
            metrics.setdefault("greedy", {})["selection_accuracy"] = _mean_se(
                [float(r["correct"]) for r in reps]
            )
        for k in extra_keys:
            row[k] = float(np.mean([r[k] for r in reps]))
            metrics.setdefault("greedy", {})[k] = _mean_se([float(r[k]) for r in reps])
        row["selected"] = [r["selected"] for r in reps]
        report.rows.append(row)
    return report


# ---------------------------------------------------------------------------
# linear regression, six learners


def linear_six_setup():
    """Graph, truths and the true edge set for the six-learner regression."""
    dims = [7, 15, 7, 7, 7, 8]
    edges = [(a, b, [(s, s) for s in range(7)]) for a, b in itertools.combinations(range(5), 2)]
    edges.append((1, 5, [(7 + s, s) for s in range(8)]))
    g = build_graph(dims, edges)
    fam = GaussianLinear(1.0)
    truths = [
        TruthSpec(fam, np.full(7, 0.3), k=7),
        TruthSpec(fam, np.full(15, 0.3), k=15),
        TruthSpec(fam, np.full(7, 0.3), k=7),
        TruthSpec(fam, np.full(7, 0.6), k=7),
        TruthSpec(fam, np.full(7, 0.3), k=7, feature_shift=5.0),
        TruthSpec(fam, np.full(8, 0.3), k=8),
    ]
    g_star = [(0, 1), (0, 2), (1, 2), (1, 5)]
    return g, truths, g_star


def _gaussian_learners(datasets, prior=Gaussian(0.0, 4.0)):
    return [Learner(d, GaussianLinear(1.0), prior) for d in datasets]


def _linear_six_rep(n: int, seed: int, test_size: int) -> dict:
    g, truths, g_star = linear_six_setup()
    rng = np.random.default_rng(seed)
    learners = _gaussian_learners([simulate(t, n, rng) for t in truths])
    test = simulate(truths[0], test_size, rng)
    eff_set = simulate(truths[0], 2000, rng)
    cache = MarginalCache(g, learners)
    res = greedy_select(g, learners, 0, cache=cache)
    preds = {}

    def pred(vs):
        key = frozenset(vs)
        if key not in preds:
            preds[key] = posterior_predictive(cache.fit(key), learners, 0)
        return preds[key]

    chosen = {"greedy": res.zeta_final, "L1": (0,), "L1+L4": (0, 3)}
    reference = pred({0, 1, 2, 5})
    truth = point_predictive(GaussianLinear(1.0), truths[0].theta, 7)
    metrics = {}
    for m, vs in chosen.items():
        p = pred(vs)
        lo, hi = p.interval(test.X)
        try:
            eff = efficiency_ratio(p, reference, truth, eff_set.y, eff_set.X)
        except DegenerateDenominator:
            eff = float("nan")
        metrics[m] = {
            "mse": squared_error(p, test.y, test.X),
            "interval_length": float(np.mean(hi - lo)),
            "log_score": score("log", p, test.y, test.X).value,
            "efficiency_ratio": eff,
        }
    return {
        "selected": list(res.zeta_final),
        "correct": res.edge_keys == frozenset(g_star),
        "metrics": metrics,
    }


def run_linear_six(spec: ExperimentSpec) -> ExperimentReport:
    if spec.name != "linear-six":
        raise ValidationError("spec is not linear-six")
    per_n = {}
    for n in spec.n_grid:
        args = [(n, spec.seed + r, spec.test_size) for r in range(spec.replications)]
        per_n[n] = _run_reps(_linear_six_rep, args, spec.threads)
    report = _aggregate(spec.name, ("greedy", "L1", "L1+L4"), spec.n_grid, per_n)
    for row, n in zip(report.rows, spec.n_grid):
        effs = [r["metrics"]["greedy"]["efficiency_ratio"] for r in per_n[n]]
        row["efficiency_in_band"] = float(np.mean([0.8 <= e <= 1.25 for e in effs]))
    return report


# ---------------------------------------------------------------------------
# logistic regression, five learners

BETA_STAR = np.array([-0.8, -0.5, -0.2, 0.1, 0.4, 0.7, 1.0, 1.3, 1.6])


def logistic_five_setup():
    g = build_graph(
        [9] * 5, [(a, b, [(s, s) for s in range(9)]) for a, b in itertools.combinations(range(5), 2)]
    )
    fam = Logistic()
    truths = [TruthSpec(fam, BETA_STAR, covariates="uniform", k=9) for _ in range(4)]
    truths.append(TruthSpec(fam, np.zeros(9), covariates="uniform", k=9))
    g_star = list(itertools.combinations(range(4), 2))
    return g, truths, g_star


def _classification_metrics(p, test: Dataset) -> dict:
    prob = p.mean(test.X)
    return {
        "classification_error": float(np.mean((prob > 0.5) != (test.y == 1))),
        "log_score": score("log", p, test.y, test.X).value,
    }


def _logistic_five_rep(n: int, seed: int, test_size: int, n_draws: int) -> dict:
    g, truths, g_star = logistic_five_setup()
    rng = np.random.default_rng(seed)
    learners = [Learner(simulate(t, n, rng), Logistic(), Gaussian(0.0, 4.0)) for t in truths]
    test = simulate(truths[0], test_size, rng)
    cache = MarginalCache(g, learners)
    res = greedy_select(g, learners, 0, cache=cache)
    metrics = {}
    for m, vs in {"greedy": res.zeta_final, "L1": (0,), "L1+L5": (0, 4)}.items():
        p = posterior_predictive(cache.fit(frozenset(vs)), learners, 0, n_draws=n_draws, seed=seed)
        metrics[m] = _classification_metrics(p, test)
    return {
        "selected": list(res.zeta_final),
        "correct": res.edge_keys == frozenset(g_star),
        "excluded_L5": 4 not in res.zeta_final,
        "metrics": metrics,
    }


def run_logistic_five(spec: ExperimentSpec) -> ExperimentReport:
    if spec.name != "logistic-five":
        raise ValidationError("spec is not logistic-five")
    per_n = {}
    for n in spec.n_grid:
        args = [(n, spec.seed + r, spec.test_size, spec.n_draws) for r in range(spec.replications)]
        per_n[n] = _run_reps(_logistic_five_rep, args, spec.threads)
    return _aggregate(spec.name, ("greedy", "L1", "L1+L5"), spec.n_grid, per_n, ("excluded_L5",))


# ---------------------------------------------------------------------------
# data contamination

# shared coefficients of the synthetic stand-in: intercept then 9 covariates
CONTAMINATION_BETA = np.array([-0.5, 2.0, 1.6, 1.2, 1.8, 1.0, 2.2, 1.4, 0.8, 0.6])
N_CONTAMINATION_LEARNERS = 10


def _contamination_graph(k: int) -> LinkageGraph:
    M = N_CONTAMINATION_LEARNERS
    return build_graph([k] * M, [(a, b, [(s, s) for s in range(k)]) for a, b in itertools.combinations(range(M), 2)])


def _with_intercept(X):
    return np.column_stack([np.ones(X.shape[0]), X])


def _contamination_eval(datasets: list[Dataset], test: Dataset, seed: int, n_draws: int) -> dict:
    """Flip the last learner's labels, run greedy and score three methods."""
    M = len(datasets)
    last = datasets[-1]
    datasets = datasets[:-1] + [Dataset(1.0 - last.y, last.X)]
    k = datasets[0].k
    g = _contamination_graph(k)
    learners = [Learner(d, Logistic(), Gaussian(0.0, 16.0)) for d in datasets]
    cache = MarginalCache(g, learners)
    res = greedy_select(g, learners, 0, cache=cache)
    metrics = {}
    for m, vs in {"greedy": res.zeta_final, "L1": (0,), "L1+L10": (0, M - 1)}.items():
        p = posterior_predictive(cache.fit(frozenset(vs)), learners, 0, n_draws=n_draws, seed=seed)
        prob = p.mean(test.X)
        metrics[m] = {"accuracy": float(np.mean((prob > 0.5) == (test.y == 1)))}
    return {
        "selected": list(res.zeta_final),
        "excluded_L10": (M - 1) not in res.zeta_final,
        "metrics": metrics,
    }


def _contamination_synthetic_rep(n: int, seed: int, test_size: int, n_draws: int) -> dict:
    rng = np.random.default_rng(seed)
    k = CONTAMINATION_BETA.shape[0] - 1

    def draw(m):
        X = _with_intercept(rng.standard_normal((m, k)))
        y = (rng.random(m) < 1.0 / (1.0 + np.exp(-X @ CONTAMINATION_BETA))).astype(float)
        return Dataset(y, X)

    datasets = [draw(n) for _ in range(N_CONTAMINATION_LEARNERS)]
    return _contamination_eval(datasets, draw(test_size), seed, n_draws)


def load_contamination_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a CSV whose first column is the 0/1 response and the rest covariates."""
    try:
        arr = np.genfromtxt(path, delimiter=",", skip_header=1, ndmin=2)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    if arr.shape[1] < 2:
        raise ValidationError(f"{path}: need a response column and at least one covariate")
    arr = arr[~np.isnan(arr).any(axis=1)]
    y = arr[:, 0]
    if not np.all((y == 0) | (y == 1)):
        raise ValidationError(f"{path}: first column must be a 0/1 response")
    return y, arr[:, 1:]


def _contamination_csv_rep(n: int, seed: int, test_size: int, n_draws: int, y, X) -> dict:
    need = test_size + N_CONTAMINATION_LEARNERS * n
    if y.shape[0] < need:
        raise InsufficientRows(f"need {need} rows for n={n}, CSV has {y.shape[0]}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(y.shape[0])
    Xi = _with_intercept(X)
    test = Dataset(y[perm[:test_size]], Xi[perm[:test_size]])
    datasets = []
    for m in range(N_CONTAMINATION_LEARNERS):
        rows = perm[test_size + m * n : test_size + (m + 1) * n]
        datasets.append(Dataset(y[rows], Xi[rows]))
    return _contamination_eval(datasets, test, seed, n_draws)


def run_contamination(spec: ExperimentSpec) -> ExperimentReport:
    if spec.name not in ("contamination-synthetic", "contamination-csv"):
        raise ValidationError("spec is not a contamination experiment")
    per_n = {}
    if spec.name == "contamination-csv":
        y, X = load_contamination_csv(spec.csv_path)
        fn = _contamination_csv_rep
        extra = (y, X)
    else:
        fn = _contamination_synthetic_rep
        extra = ()
    for n in spec.n_grid:
        args = [(n, spec.seed + r, spec.test_size, spec.n_draws, *extra) for r in range(spec.replications)]
        per_n[n] = _run_reps(fn, args, spec.threads)
    return _aggregate(spec.name, ("greedy", "L1", "L1+L10"), spec.n_grid, per_n, ("excluded_L10",))


# ---------------------------------------------------------------------------
# binomial / poisson epidemiological cases

# Fixed stand-in for the 13-row observational table, drawn once uniformly
# within the published ranges (population 37..700, rate 0..0.2, follow-up
# 20..550 thousand women-years, 10..700 incidences).
HPV_ORIGINAL = {
    "x1": np.array([132, 611, 529, 325, 180, 582, 420, 386, 229, 670, 400, 223, 188], dtype=float),
    "y1": np.array([13, 32, 43, 42, 18, 100, 78, 47, 34, 109, 18, 15, 2], dtype=float),
    "x2": np.array(
        [194.317, 442.941, 366.436, 417.396, 536.144, 214.534, 370.056,
         163.5, 408.905, 329.716, 172.912, 411.436, 432.296]
    ),
    "y2": np.array([685, 610, 468, 197, 688, 22, 167, 345, 32, 26, 459, 579, 48], dtype=float),
}
HPV_N = 13


def _hpv_learners(d1: Dataset, d2: Dataset) -> list[Learner]:
    n = d1.n
    return [
        Learner(d1, BinomialRates(), Uniform01()),
        Learner(d2, PoissonScaledRate(), (Uniform01(),) * n + (Gamma(5.0, 1.0),)),
    ]


def hpv_setup(case: int):
    """Graph plus the true natural parameters and covariates of one case.

    Returns ``(graph, truth1, truth2)`` where each truth is a
    :class:`TruthSpec` with fixed covariates.
    """
    n = HPV_N
    g = build_graph([n, n + 1], [(0, 1, [(i, i) for i in range(n)])])
    if case in (1, 2):
        scale = 1.0 if case == 1 else 0.1
        x1 = np.array([200.0] + [1000.0] * (n - 1)) * scale
        x2 = np.full(n, 1000.0) * scale
        rate = np.full(n, 0.1)
        t1 = TruthSpec(BinomialRates(), rate, covariates="fixed", X_fixed=x1[:, None])
        t2 = TruthSpec(PoissonScaledRate(), np.append(rate, 10.0), covariates="fixed", X_fixed=x2[:, None])
    elif case == 3:
        o = HPV_ORIGINAL
        t1 = TruthSpec(BinomialRates(), o["y1"] / o["x1"], covariates="fixed", X_fixed=o["x1"][:, None])
        # Poisson means equal the observed counts; theta2 is set so every
        # rate stays inside (0, 1)
        b = 2.0 * float(np.max(o["y2"] / o["x2"]))
        t2 = TruthSpec(
            PoissonScaledRate(),
            np.append(o["y2"] / (b * o["x2"]), b),
            covariates="fixed",
            X_fixed=o["x2"][:, None],
        )
    elif case == 4:
        o = HPV_ORIGINAL
        d1 = Dataset(o["y1"], o["x1"][:, None])
        d2 = Dataset(o["y2"], o["x2"][:, None])
        fit = fit_map(tie_parameters(g, [0, 1]), _hpv_learners(d1, d2))
        theta = fit.theta_natural
        t1 = TruthSpec(BinomialRates(), theta[:n], covariates="fixed", X_fixed=o["x1"][:, None])
        t2 = TruthSpec(PoissonScaledRate(), theta, covariates="fixed", X_fixed=o["x2"][:, None])
    else:
        raise ValidationError(f"unknown HPV case {case}")
    return g, t1, t2


def _hpv_test(truth: TruthSpec, size: int, rng) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(truth.X_fixed, dtype=float)[:, 0]
    idx = rng.integers(0, x.shape[0], size=size)
    Xt = np.column_stack([idx, x[idx]])
    y = truth.family.draw_sample(np.asarray(truth.theta, float)[None, :], Xt, rng)[0]
    return y, Xt


def _hpv_rep(case: int, seed: int, test_size: int, n_draws: int) -> dict:
    g, t1, t2 = hpv_setup(case)
    rng = np.random.default_rng(seed)
    d1 = simulate(t1, None, rng)
    d2 = simulate(t2, None, rng)
    learners = _hpv_learners(d1, d2)
    cache = MarginalCache(g, learners)
    linked = {}
    metrics = {}
    for who, truth, tag in ((0, t1, "L1"), (1, t2, "L2")):
        res = greedy_select(g, learners, who, cache=cache)
        linked[tag] = len(res.zeta_final) == 2
        y, Xt = _hpv_test(truth, test_size, rng)
        preds = {}
        for method, vs in (("joint", (0, 1)), ("alone", (who,))):
            p = posterior_predictive(cache.fit(frozenset(vs)), learners, who, n_draws=n_draws, seed=seed)
            preds[method] = -score("log", p, y, Xt).value
        preds["proposed"] = preds["joint"] if linked[tag] else preds["alone"]
        for method, v in preds.items():
            metrics[f"{tag}:{method}"] = {"expected_log_predictive": v}
    return {"selected": [int(linked["L1"])], "linked": float(linked["L1"]), "metrics": metrics}


HPV_METHODS = ("L1:joint", "L1:proposed", "L1:alone", "L2:joint", "L2:proposed", "L2:alone")


def run_hpv_case(spec: ExperimentSpec) -> ExperimentReport:
    if spec.name != "hpv-case":
        raise ValidationError("spec is not hpv-case")
    args = [(spec.case, spec.seed + r, spec.test_size, spec.n_draws) for r in range(spec.replications)]
    reps = _run_reps(_hpv_rep, args, spec.threads)
    report = _aggregate(spec.name, HPV_METHODS, (HPV_N,), {HPV_N: reps}, ("linked",))
    report.details["case"] = spec.case
    return report


# ---------------------------------------------------------------------------
# three-learner Gaussian toy

TOY_Y = (2.0, -0.3, -2.0)


def gaussian_toy_setup():
    g = build_graph([1, 1, 1], [(a, b, [(0, 0)]) for a, b in itertools.combinations(range(3), 2)])
    learners = [Learner(Dataset([y], [[1.0]]), GaussianLinear(1.0), Gaussian(0.0, 100.0)) for y in TOY_Y]
    return g, learners


def run_gaussian_toy():
    """Greedy selections when assisting each of the three toy learners.

    Returns the list of results for assisted learners 0, 1 and 2 together
    with the exhaustive-search answers for the same learners.
    """
    g, learners = gaussian_toy_setup()
    cache = MarginalCache(g, learners)
    greedy = [greedy_select(g, learners, a, cache=cache) for a in range(3)]
    exhaustive = [exhaustive_select(g, learners, a, cache=cache) for a in range(3)]
    return greedy, exhaustive


def _toy_report() -> ExperimentReport:
    greedy, exhaustive = run_gaussian_toy()
    report = ExperimentReport("gaussian-toy", ("greedy",))
    report.details = {
        "greedy": [r.to_dict() for r in greedy],
        "exhaustive": [{"assisted": r.assisted + 1, "zeta": [v + 1 for v in r.zeta_final]} for r in exhaustive],
    }
    report.rows.append(
        {
            "n": 1,
            "metrics": {"greedy": {f"assisted_{r.assisted + 1}_size": (float(len(r.zeta_final)), 0.0) for r in greedy}},
        }
    )
    return report


# ---------------------------------------------------------------------------
# evidence ratio growth and greedy/exhaustive agreement


def linkage_log_ratio(m: int, seed: int, p_shared: int = 2, p_own: int = 1, delta: float = 0.0) -> float:
    """``log p(D1, D2) - log p(D1) - log p(D2)`` for two tied Gaussian learners.

    Both learners have ``p_shared + p_own`` coefficients and ``m`` rows; the
    first ``p_shared`` slots are tied.  ``delta`` shifts learner 2's true
    shared coefficients away from learner 1's.
    """
    p = p_shared + p_own
    g = build_graph([p, p], [(0, 1, [(s, s) for s in range(p_shared)])])
    rng = np.random.default_rng(seed)
    beta1 = np.full(p, 0.5)
    beta2 = beta1.copy()
    beta2[:p_shared] += delta
    fam = GaussianLinear(1.0)
    d1 = simulate(TruthSpec(fam, beta1, k=p), m, rng)
    d2 = simulate(TruthSpec(fam, beta2, k=p), m, rng)
    cache = MarginalCache(g, _gaussian_learners([d1, d2]))
    return cache.log_marginal({0, 1}) - cache.log_marginal({0}) - cache.log_marginal({1})


def greedy_vs_exhaustive(n: int, seed: int, k: int = 3, shift: float = 0.3) -> tuple[tuple, tuple]:
    """Selections of both searches on a random fully-connected 4-learner instance.

    Learners 2-4 either share learner 1's coefficients or have them shifted
    by ``shift``; which ones is drawn per seed.
    """
    rng = np.random.default_rng(seed)
    g = build_graph([k] * 4, [(a, b, [(s, s) for s in range(k)]) for a, b in itertools.combinations(range(4), 2)])
    base = rng.uniform(-1.0, 1.0, k)
    fam = GaussianLinear(1.0)
    datasets = [simulate(TruthSpec(fam, base, k=k), n, rng)]
    for _ in range(3):
        beta = base if rng.random() < 0.5 else base + shift * rng.choice([-1.0, 1.0], size=k)
        datasets.append(simulate(TruthSpec(fam, beta, k=k), n, rng))
    learners = _gaussian_learners(datasets)
    cache = MarginalCache(g, learners)
    return greedy_select(g, learners, 0, cache=cache).zeta_final, exhaustive_select(g, learners, 0, cache=cache).zeta_final


# ---------------------------------------------------------------------------


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    if spec.name == "gaussian-toy":
        return _toy_report()
    if spec.name == "linear-six":
        return run_linear_six(spec)
    if spec.name == "logistic-five":
        return run_logistic_five(spec)
    if spec.name in ("contamination-synthetic", "contamination-csv"):
        return run_contamination(spec)
    return run_hpv_case(spec)
