"""Command-line interface.

Every subcommand writes one CSV file (or stdout): manifest lines prefixed
with '#', a header row, then data rows.  Exit codes: 0 success, 2 config
error, 3 numerical failure, 4 frog budget exceeded.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, criteria, pgf, simulator
from .errors import ConfigError, NumericalError, ResourceBudgetError
from .model import (GENERAL, FrogCountSpec, ModelConfig, default_horizon,
                    validate_config)
from .output import render, write
from .pgf import DistributionSpec
from .rng import stream

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_BUDGET = 0, 2, 3, 4


def _load_json(text: str, where: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{where}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def parse_config(document: str, check: bool = True) -> ModelConfig:
    """ModelConfig from JSON text; unknown keys and model-level violations are rejected."""
    cfg = ModelConfig.from_dict(_load_json(document, "config"))
    if check:
        rep = validate_config(cfg, default_horizon(cfg))
        bad = [v for v in rep.violations if GENERAL in v.hypotheses]
        if bad:
            shown = "; ".join(v.message for v in bad[:3])
            more = f" (and {len(bad) - 3} more)" if len(bad) > 3 else ""
            raise ConfigError(shown + more)
    return cfg


def serialize(cfg: ModelConfig) -> str:
    return json.dumps(cfg.to_dict(), sort_keys=True)


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _manifest(cmd, args, **params):
    out = [("tool", f"frogmodel {__version__}"), ("subcommand", cmd)]
    if getattr(args, "config", None):
        out.append(("config", args.config))
        out.append(("config_sha256", _sha(Path(args.config).read_text(encoding="utf-8"))))
    for key in sorted(params):
        out.append((key, params[key]))
    out.append(("out", getattr(args, "out", None) or "-"))
    return out


def _series_rows(rep):
    return zip(rep.n, rep.terms, rep.partial_sums, rep.log_terms)


def _series_meta(rep):
    meta = [("series", rep.name), ("heuristic_verdict", rep.verdict),
            ("heuristic_exponent", rep.exponent), ("heuristic_note", rep.note)]
    if rep.closed_form is not None:
        meta += [("closed_form_verdict", rep.closed_form),
                 ("closed_form_reason", rep.closed_form_reason)]
    meta.append(("transience", rep.transience))
    return meta


SERIES_COLUMNS = ["n", "term", "partial_sum", "log_term"]


def cmd_criteria(cfg: ModelConfig, n_max: int, series: str = "general", manifest=()) -> str:
    if series == "general":
        rep = criteria.general_series(cfg, n_max)
    elif series == "iid":
        if cfg.counts.kind != "iid":
            raise ConfigError("the iid-drift series needs i.i.d. counts")
        rep = criteria.iid_drift_terms(cfg.drift, cfg.counts.dist, n_max)
    elif series == "poisson":
        if cfg.counts.kind != "poisson_sequence":
            raise ConfigError("the poisson-drift series needs Poisson counts")
        rep = criteria.poisson_terms(cfg.counts.lam, cfg.drift, n_max)
    else:
        raise ConfigError(f"unknown series {series!r}")
    return render(list(manifest) + _series_meta(rep), SERIES_COLUMNS, _series_rows(rep))


def cmd_kconst(dist: DistributionSpec, tol: float, manifest=()) -> str:
    k = criteria.k_constant(dist, tol)
    row = [dist.kind, k.value, k.abs_error_bound, criteria.critical_c(k.value),
           pgf.mean(dist), pgf.min_support(dist)]
    cols = ["kind", "K", "abs_error_bound", "critical_C", "mean", "min_support"]
    return render(list(manifest), cols, [row])


def cmd_simulate(cfg, cap, trials, seed, manifest=(), workers=None,
                 budget=simulator.DEFAULT_BUDGET):
    """(summary CSV text, per-trial CSV text)."""
    outcomes = simulator.run_trials(cfg, cap, trials, seed, workers, budget)
    est = simulator.estimate_survival(cfg, cap, trials, seed, outcomes=outcomes)
    summary = render(list(manifest),
                     ["cap", "trials", "survived", "proportion", "ci_low", "ci_high", "master_seed"],
                     [[est.cap, est.trials, est.survived, est.proportion, est.ci_low, est.ci_high,
                       est.master_seed]])
    per_trial = render(list(manifest),
                       ["trial", "died_at", "activated_frogs", "activated_sites"],
                       ([i, o.died_at, o.activated_frogs, o.activated_sites]
                        for i, o in enumerate(outcomes)))
    return summary, per_trial


def cmd_fplus(cfg, cap, trials, seed, manifest=()) -> str:
    """Empirical P(N_n = 0) in the all-active model against its closed form, n = 1..cap."""
    freq = simulator.fplus_zero_frequencies(cfg, cap, trials, stream(seed, 0))
    rows = []
    for n in range(1, cap + 1):
        exact = simulator.zero_probability(cfg, n)
        se = math.sqrt(exact * (1 - exact) / trials)
        z = (freq[n - 1] - exact) / se if se > 0 else 0.0
        rows.append([n, freq[n - 1], exact, se, z])
    meta = [("expected_zero_sites", math.fsum(r[2] for r in rows)),
            ("empirical_zero_sites", math.fsum(r[1] for r in rows))]
    return render(list(manifest) + meta,
                  ["n", "empirical_zero_prob", "closed_form_zero_prob", "std_error", "z_score"], rows)


def _set_path(doc, dotted, value):
    keys = dotted.split(".")
    node = doc
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"grid parameter {dotted!r} not present in the template")
        node = node[key]
    node[keys[-1]] = value


def parse_grid(document: str) -> list:
    """[(dotted_path, values), ...] from {"grid": {"drift.C": [...], ...}}."""
    doc = _load_json(document, "grid")
    if not isinstance(doc, dict) or set(doc) != {"grid"} or not isinstance(doc["grid"], dict):
        raise ConfigError('grid: expected {"grid": {"path.to.field": [values, ...]}}')
    out = []
    for key, values in doc["grid"].items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"grid.{key}: expected a non-empty list")
        out.append((key, values))
    return out


def cmd_sweep(template: dict, grid: list, n_max: int, cap=0, trials=0, seed=0, manifest=(),
              workers=None, budget=simulator.DEFAULT_BUDGET) -> str:
    names = [k for k, _ in grid]
    cols = names + ["closed_form_verdict", "K", "critical_C", "heuristic_verdict",
                    "heuristic_exponent", "partial_sum", "n_max"]
    if trials:
        cols += ["cap", "trials", "survived", "proportion", "ci_low", "ci_high"]
    rows = []
    for combo in itertools.product(*(v for _, v in grid)):
        doc = copy.deepcopy(template)
        for name, value in zip(names, combo):
            _set_path(doc, name, value)
        cfg = parse_config(json.dumps(doc))
        rep = criteria.general_series(cfg, n_max)
        k_val = crit = math.nan
        if cfg.counts.kind == "iid" and math.isfinite(pgf.mean(cfg.counts.dist)):
            k_val = criteria.k_constant(cfg.counts.dist, criteria.SERIES_K_TOL).value
            crit = criteria.critical_c(k_val)
        row = list(combo) + [rep.closed_form or "", k_val, crit, rep.verdict, rep.exponent,
                             rep.partial_sums[-1], n_max]
        if trials:
            est = simulator.estimate_survival(cfg, cap, trials, seed, workers, budget)
            row += [cap, trials, est.survived, est.proportion, est.ci_low, est.ci_high]
        rows.append(row)
    return render(list(manifest), cols, rows)


def cmd_gs_check(dist: DistributionSpec, manifest=()) -> str:
    lpm = pgf.log_plus_moment(dist)
    verdict = criteria.gantert_schmidt_verdict(dist)
    return render(list(manifest), ["kind", "log_plus_moment_status", "log_plus_moment", "verdict"],
                  [[dist.kind, lpm.status, lpm.value, verdict]])


def parse_subsequence(text: str, k_max: int) -> list:
    """'pow:b' -> b**k, 'shift:s' -> k + s, otherwise a comma-separated list."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "pow":
            b = int(arg)
            return [b ** k for k in range(k_max + 2)]
        if kind == "shift":
            s = int(arg)
            return [k + s for k in range(k_max + 2)]
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse subsequence {text!r}") from None


def cmd_bmz(cfg, subsequence, k_max, manifest=()) -> str:
    try:
        rep = criteria.bmz_sum(cfg, subsequence, k_max)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cols = ["k", "term", "partial_sum", "log_term"]
    return render(list(manifest) + _series_meta(rep), cols, _series_rows(rep))


def cmd_validate(cfg, horizon, manifest=()):
    rep = validate_config(cfg, horizon)
    meta = [("valid", rep.valid), ("applicable", " ".join(rep.applicable(cfg)) or "none")]
    rows = [[v.code, v.site, " ".join(v.hypotheses), v.message.replace(",", ";")]
            for v in rep.violations]
    return rep, render(list(manifest) + meta, ["code", "site", "hypotheses", "message"], rows)


# ---------------------------------------------------------------------------


def _flags():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="model config JSON file")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--n-max", type=int, default=1000, help="series length")
    p.add_argument("--cap", type=int, default=1000, help="site cap for simulations")
    p.add_argument("--trials", type=int, default=1000, help="Monte Carlo trials")
    p.add_argument("--tol", type=float, default=1e-10, help="quadrature tolerance")
    p.add_argument("--budget", type=int, default=simulator.DEFAULT_BUDGET,
                   help="activated-frog limit per simulated trial")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frogsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"frogmodel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _flags()

    s = sub.add_parser("validate", parents=[common], help="check model hypotheses")
    s.add_argument("--horizon", type=int, default=None)
    s = sub.add_parser("criteria", parents=[common], help="evaluate a transience series")
    s.add_argument("--series", choices=["general", "iid", "poisson"], default="general")
    s = sub.add_parser("kconst", parents=[common], help="compute the K constant")
    s.add_argument("--dist", help="distribution JSON (default: the config's i.i.d. counts)")
    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo survival estimate")
    s.add_argument("--per-trial", help="per-trial CSV path (default: <out>.trials.csv)")
    sub.add_parser("fplus", parents=[common], help="all-active model zero frequencies")
    s = sub.add_parser("sweep", parents=[common], help="grid sweep over a config template")
    s.add_argument("--grid", required=True, help='grid JSON file {"grid": {"drift.C": [...]}}')
    s.add_argument("--simulate", action="store_true", help="add survival columns")
    s = sub.add_parser("gs-check", parents=[common], help="log-moment criterion")
    s.add_argument("--dist", help="distribution JSON (default: the config's i.i.d. counts)")
    s = sub.add_parser("bmz", parents=[common], help="subsequence sum")
    s.add_argument("--subseq", default="shift:1", help="'pow:2', 'shift:1' or '1,2,4,...'")
    s.add_argument("--k-max", type=int, default=60)
    return parser


def _read_config(args, check=True) -> ModelConfig:
    if not args.config:
        raise ConfigError("--config is required")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, check=check)


def _read_dist(args) -> DistributionSpec:
    if args.dist:
        return DistributionSpec.from_dict(_load_json(args.dist, "dist"))
    cfg = _read_config(args)
    if cfg.counts.kind != "iid":
        raise ConfigError("config counts are not i.i.d.; pass --dist")
    return cfg.counts.dist


def _run(args) -> int:
    cmd = args.command
    if cmd == "validate":
        cfg = _read_config(args, check=False)
        horizon = args.horizon or default_horizon(cfg)
        rep, text = cmd_validate(cfg, horizon, _manifest(cmd, args, horizon=horizon))
        write(text, args.out)
        return EXIT_OK if rep.valid else EXIT_CONFIG
    if cmd == "criteria":
        cfg = _read_config(args)
        text = cmd_criteria(cfg, args.n_max, args.series,
                            _manifest(cmd, args, n_max=args.n_max, series=args.series))
    elif cmd == "kconst":
        dist = _read_dist(args)
        extra = {"dist": json.dumps(dist.to_dict(), sort_keys=True)}
        text = cmd_kconst(dist, args.tol, _manifest(cmd, args, tol=args.tol, **extra))
    elif cmd == "simulate":
        cfg = _read_config(args)
        man = _manifest(cmd, args, cap=args.cap, trials=args.trials, seed=args.seed,
                        budget=args.budget)
        summary, per_trial = cmd_simulate(cfg, args.cap, args.trials, args.seed, man,
                                          budget=args.budget)
        write(summary, args.out)
        trial_path = args.per_trial or (f"{args.out}.trials.csv" if args.out else None)
        if trial_path:
            write(per_trial, trial_path)
        return EXIT_OK
    elif cmd == "fplus":
        cfg = _read_config(args)
        text = cmd_fplus(cfg, args.cap, args.trials, args.seed,
                         _manifest(cmd, args, cap=args.cap, trials=args.trials, seed=args.seed))
    elif cmd == "sweep":
        if not args.config:
            raise ConfigError("--config (template) is required")
        try:
            template = _load_json(Path(args.config).read_text(encoding="utf-8"), "config")
            grid_text = Path(args.grid).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(str(exc)) from None
        grid = parse_grid(grid_text)
        params = {"n_max": args.n_max, "grid": args.grid, "grid_sha256": _sha(grid_text)}
        if args.simulate:
            params.update(cap=args.cap, trials=args.trials, seed=args.seed, budget=args.budget)
        text = cmd_sweep(template, grid, args.n_max,
                         cap=args.cap, trials=args.trials if args.simulate else 0,
                         seed=args.seed, manifest=_manifest(cmd, args, **params),
                         budget=args.budget)
    elif cmd == "gs-check":
        dist = _read_dist(args)
        extra = {"dist": json.dumps(dist.to_dict(), sort_keys=True)}
        text = cmd_gs_check(dist, _manifest(cmd, args, **extra))
    else:
        cfg = _read_config(args)
        subseq = parse_subsequence(args.subseq, args.k_max)
        text = cmd_bmz(cfg, subseq, args.k_max,
                       _manifest(cmd, args, subseq=args.subseq, k_max=args.k_max))
    write(text, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ValueError as exc:
        # ConfigError, and out-of-range parameters such as --tol or --cap
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceBudgetError as exc:
        print(f"resource budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
