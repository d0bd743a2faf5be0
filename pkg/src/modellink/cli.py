"""Command-line entry point: ``modellink {select,predict,simulate,score}``.

Exit codes: 0 success, 2 numerical failure, 3 invalid input.  Learner ids
are 1-based in every file the tool reads or writes.  Outputs are written
only after all computation succeeds, each through a temporary file and an
atomic rename.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from ._validation import check_rows
from .exceptions import ModelLinkError, NumericalError, SchemaMismatch, ValidationError
from .experiments import EXPERIMENTS, default_spec, run_experiment
from .graph import load_graph
from .inference import Learner, MarginalCache, is_conjugate_gaussian
from .models import family_from_dict, load_dataset, prior_from_dict, read_table
from .predictive import DEFAULT_DRAWS, predictive_from_mode
from .scoring import RULES, score
from .selection import EPSILON, greedy_select

logger = logging.getLogger("modellink")

EXIT_OK, EXIT_NUMERICAL, EXIT_INVALID = 0, 2, 3
MIN_DRAWS = 100

PREDICTION_COLUMNS = ("mean", "sd", "q025", "q975", "log_density")


# ---------------------------------------------------------------------------
# config and file helpers


def _read_json(path, what: str) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read {what} {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{what} {path} is not valid JSON: {exc}") from exc


class RunConfig:
    """Parsed ``--config`` document; relative paths resolve against its folder."""

    def __init__(self, path):
        self.path = Path(path)
        self.doc = _read_json(self.path, "config")
        if not isinstance(self.doc, dict):
            raise ValidationError(f"config {self.path} must be a JSON object")
        self.base = self.path.parent

    def resolve(self, key: str) -> Path:
        if key not in self.doc:
            raise ValidationError(f"config {self.path} is missing {key!r}")
        p = Path(self.doc[key])
        return p if p.is_absolute() else self.base / p

    def get(self, key, default=None):
        return self.doc.get(key, default)

    def draws(self) -> int:
        S = int(self.doc.get("draws", DEFAULT_DRAWS))
        if S < MIN_DRAWS:
            raise ValidationError(f"draws must be >= {MIN_DRAWS}, got {S}")
        return S


def _priors(spec):
    if isinstance(spec, list):
        return tuple(prior_from_dict(p) for p in spec)
    return prior_from_dict(spec)


def _load_problem(cfg: RunConfig):
    g = load_graph(cfg.resolve("graph"))
    entries = cfg.get("learners")
    if not isinstance(entries, list) or not entries:
        raise ValidationError("config needs a non-empty 'learners' list")
    if len(entries) != g.M:
        raise ValidationError(f"graph has {g.M} learners but config lists {len(entries)}")
    learners = []
    for m, e in enumerate(entries, start=1):
        try:
            path = Path(e["data"])
            fam = family_from_dict(e["family"])
            prior = _priors(e["prior"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"learner {m}: entry needs data, family and prior ({exc!r})") from exc
        data = load_dataset(path if path.is_absolute() else cfg.base / path)
        try:
            learners.append(Learner(data, fam, prior))
        except ValidationError as exc:
            raise type(exc)(f"learner {m}: {exc}") from exc
    a = cfg.get("assisted", 1)
    if isinstance(a, bool) or not isinstance(a, int) or not 1 <= a <= g.M:
        raise ValidationError(f"assisted must be an integer in [1, {g.M}], got {a!r}")
    return g, learners, a - 1


def _atomic_write(outputs: dict[Path, str]):
    """Write every file via a sibling temp file and ``os.replace``."""
    staged = []
    try:
        for path, text in outputs.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _floats(a) -> list:
    return [float(x) if math.isfinite(x) else None for x in np.asarray(a, dtype=float).reshape(-1)]


# ---------------------------------------------------------------------------
# commands


def cmd_select(args) -> int:
    cfg = RunConfig(args.config)
    g, learners, a = _load_problem(cfg)
    eps = float(cfg.get("epsilon", EPSILON))
    res = greedy_select(g, learners, a, epsilon=eps, cache=MarginalCache(g, learners))
    for step in res.trace:
        logger.info("step %s", json.dumps(step.to_dict()))
    fit = res.fit
    if not fit.converged:
        raise NumericalError(f"joint fit of learners {[v + 1 for v in res.zeta_final]} did not converge")
    space = fit.space
    sd = fit.natural_sd()
    theta = fit.theta_natural
    lr = learners[a]
    fit_doc = {
        "assisted": a + 1,
        "zeta": [v + 1 for v in res.zeta_final],
        "family": lr.family.to_dict(),
        "width": lr.family.pred_width(lr.data),
        "conjugate": bool(is_conjugate_gaussian(space, learners)),
        "theta_hat_free": _floats(fit.theta_hat),
        "hessian": [_floats(r) for r in fit.hessian],
        "codes": [int(c) for c in fit.codes],
        "slots": [int(i) for i in space.indices(a)],
        "log_marginal": fit.log_marginal,
        "iterations": fit.iterations,
        "learners": [
            {
                "id": v + 1,
                "theta": _floats(theta[space.indices(v)]),
                "sd": _floats(sd[space.indices(v)]),
            }
            for v in res.zeta_final
        ],
    }
    out = Path(args.out)
    _atomic_write(
        {
            out / "selection.json": json.dumps(res.to_dict(), indent=2) + "\n",
            out / "fit.json": json.dumps(fit_doc, indent=2) + "\n",
        }
    )
    print(f"assisted L{a + 1}: selected {{{', '.join(f'L{v + 1}' for v in res.zeta_final)}}}")
    return EXIT_OK


def _predictive_from_fit(cfg: RunConfig, seed: int):
    doc = _read_json(cfg.resolve("fit"), "fit file")
    try:
        fam = family_from_dict(doc["family"])
        p = predictive_from_mode(
            fam,
            doc["theta_hat_free"],
            doc["hessian"],
            doc["codes"],
            doc["slots"],
            int(doc["width"]),
            bool(doc["conjugate"]),
            cfg.draws(),
            seed,
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"fit file is missing fields ({exc!r})") from exc
    return p


def _read_rows(cfg: RunConfig, width: int):
    """New covariate rows; a leading ``y`` column holds observed responses."""
    path = cfg.resolve("rows")
    header, body = read_table(path)
    y = None
    if header and header[0].lower() == "y":
        y, body = body[:, 0], body[:, 1:]
    if body.shape[1] != width:
        raise SchemaMismatch(f"{path}: {body.shape[1]} covariate columns, fit expects {width}")
    return y, check_rows(body, width)


def cmd_predict(args) -> int:
    cfg = RunConfig(args.config)
    p = _predictive_from_fit(cfg, args.seed)
    y, X = _read_rows(cfg, p.width)
    cols = {}
    if X.shape[0]:
        lo, hi = p.interval(X)
        cols = {"mean": p.mean(X), "sd": p.sd(X), "q025": lo, "q975": hi}
        if y is not None:
            cols["log_density"] = p.logpdf(y, X)
    names = [c for c in PREDICTION_COLUMNS if c != "log_density" or y is not None]
    lines = [",".join(names)]
    for t in range(X.shape[0]):
        lines.append(",".join(repr(float(cols[c][t])) for c in names))
    _atomic_write({Path(args.out) / "predictions.csv": "\n".join(lines) + "\n"})
    print(f"wrote {X.shape[0]} predictions")
    return EXIT_OK


def cmd_score(args) -> int:
    cfg = RunConfig(args.config)
    rule = cfg.get("rule", "log")
    if rule not in RULES:
        raise ValidationError(f"unknown rule {rule!r}; valid: {', '.join(RULES)}")
    p = _predictive_from_fit(cfg, args.seed)
    y, X = _read_rows(cfg, p.width)
    if y is None:
        raise ValidationError("scoring needs a leading 'y' column in the rows file")
    s = score(rule, p, y, X)
    doc = {"rule": rule, "n": int(y.shape[0]), "value": s.value if math.isfinite(s.value) else None}
    _atomic_write({Path(args.out) / "score.json": json.dumps(doc, indent=2) + "\n"})
    print(f"{rule} score: {s.value:.6g} over {y.shape[0]} rows")
    return EXIT_OK


def _simulate_spec(args):
    overrides = {}
    if args.config:
        cfg = RunConfig(args.config)
        overrides.update(cfg.get("experiment", {}))
        if "csv_path" in overrides and not Path(overrides["csv_path"]).is_absolute():
            overrides["csv_path"] = str(cfg.base / overrides["csv_path"])
    name = args.name or overrides.pop("name", None)
    overrides.pop("name", None)
    if name not in EXPERIMENTS:
        raise ValidationError(f"unknown experiment {name!r}; valid: {', '.join(EXPERIMENTS)}")
    if args.n:
        overrides["n_grid"] = tuple(int(v) for v in args.n.split(","))
    for key in ("reps", "case", "csv", "test_size", "draws"):
        val = getattr(args, key)
        if val is not None:
            overrides[{"reps": "replications", "csv": "csv_path", "draws": "n_draws"}.get(key, key)] = val
    overrides["seed"] = args.seed
    overrides["threads"] = args.threads
    try:
        return default_spec(name, **overrides)
    except TypeError as exc:
        raise ValidationError(f"bad experiment settings: {exc}") from exc


def cmd_simulate(args) -> int:
    spec = _simulate_spec(args)
    report = run_experiment(spec)
    _atomic_write(
        {
            Path(args.out) / "report.csv": report.to_csv(),
            Path(args.out) / "report.json": report.to_json() + "\n",
        }
    )
    if spec.name == "gaussian-toy":
        for r in report.details["greedy"][:2]:
            print(f"assisted L{r['assisted']}: selected {{{', '.join(f'L{v}' for v in r['zeta'])}}}")
    else:
        print(report.summary_table())
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker processes")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="modellink", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (
        ("select", cmd_select, "choose linkages for the assisted learner"),
        ("predict", cmd_predict, "predict new rows from a stored fit"),
        ("score", cmd_score, "score a stored fit on labelled rows"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn, needs_config=True)
    p = sub.add_parser("simulate", parents=[common], help="run a simulation experiment")
    p.add_argument("--name", help=f"one of: {', '.join(EXPERIMENTS)}")
    p.add_argument("--n", help="sample size or comma-separated grid")
    p.add_argument("--reps", type=int)
    p.add_argument("--case", type=int)
    p.add_argument("--csv")
    p.add_argument("--test-size", dest="test_size", type=int)
    p.add_argument("--draws", type=int)
    p.set_defaults(func=cmd_simulate, needs_config=False)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.needs_config and not args.config:
        print(f"error: {args.command} needs --config", file=sys.stderr)
        return EXIT_INVALID
    if args.seed < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return EXIT_INVALID
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, ModelLinkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    logger.info("%s finished in %.2fs", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
