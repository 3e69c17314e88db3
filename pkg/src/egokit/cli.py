"""Command-line front end for human-in-the-loop campaigns and benchmark runs.

Typical campaign::

    egokit design  --config run.json --out design.csv --state run.state.json
    # evaluate design.csv externally, write results.csv with columns x1..xd,y
    egokit tell    --state run.state.json --results results.csv
    egokit suggest --state run.state.json --out batch.csv
    # evaluate batch.csv, then tell again; repeat until the budget is spent

Exit status: 0 success, 2 bad input or configuration, 3 ask/tell protocol
violation, 4 numerically degenerate model.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import csvio, ego
from .benchfn import REGISTRY, get_objective
from .design import BoxDomain
from .diagnostics import conditional_correlation, ei_posterior_distribution, histogram, loo_metrics
from .errors import (
    BudgetExhausted,
    DegenerateData,
    DegenerateDesign,
    DuplicatePoints,
    EgoError,
    InvalidConfig,
    MismatchedTell,
    NotPositiveDefinite,
    RankDeficient,
)
from .flowrate import interpolate_rows
from .kriging import TrainingSet, fit, loo, mle_search

logger = logging.getLogger("egokit")

SEED_ENV = "EGOKIT_SEED"
DEFAULT_BATCH = 10
EXIT_OK, EXIT_INPUT, EXIT_PROTOCOL, EXIT_DEGENERATE = 0, 2, 3, 4

DEFAULT_FLOWRATE = {
    "target_q": 2500.0,
    "q_columns": ["Q_low", "Q_doe", "Q_high"],
    "r_columns": ["R_low", "R_doe", "R_high"],
    "include_origin": True,
}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (MismatchedTell, BudgetExhausted)):
        return EXIT_PROTOCOL
    if isinstance(exc, (DegenerateDesign, DegenerateData, NotPositiveDefinite, RankDeficient, DuplicatePoints)):
        return EXIT_DEGENERATE
    return EXIT_INPUT


# ------------------------------------------------------------------ config


def load_config(path) -> dict:
    if path is None:
        return {}
    data = csvio.read_json(path)
    if not isinstance(data, dict):
        raise InvalidConfig(f"{path}: top level must be a JSON object")
    return data


def resolve_seed(flag, config: dict) -> int:
    """Flag beats environment beats config; default 0."""
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise InvalidConfig(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return int(config.get("seed", 0))


def domain_from(config: dict) -> BoxDomain:
    try:
        lower, upper = config["lower"], config["upper"]
    except KeyError as exc:
        raise InvalidConfig(f"config is missing {exc.args[0]!r}") from None
    try:
        lower = tuple(float(v) for v in lower)
        upper = tuple(float(v) for v in upper)
    except (TypeError, ValueError):
        raise InvalidConfig("bounds must be lists of numbers") from None
    if len(lower) != len(upper) or not lower:
        raise InvalidConfig(f"bounds have lengths {len(lower)} and {len(upper)}")
    if not all(np.isfinite(lower + upper)):
        raise InvalidConfig("bounds must be finite")
    return BoxDomain(lower, upper)


_FLAG_KEYS = {
    "budget": "budget_total",
    "initial": "initial_size",
    "batch": "batch_size",
    "liar": "liar",
    "kernel": "kernel_family",
    "refit_every": "refit_every",
}


def campaign_config(config: dict, args) -> ego.CampaignConfig:
    merged = dict(config)
    merged.setdefault("batch_size", DEFAULT_BATCH)
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            merged[key] = value
    merged["seed"] = resolve_seed(getattr(args, "seed", None), config)
    if "budget_total" not in merged:
        raise InvalidConfig("config needs budget_total (or --budget)")
    return ego.CampaignConfig.from_dict(merged)


def _point_columns(header: list[str], d: int, path) -> None:
    want = [f"x{j + 1}" for j in range(d)]
    if header[:d] != want:
        raise InvalidConfig(f"{path}: first columns must be {','.join(want)}")


def _print_incumbent(state: ego.OptimizationState, out=None) -> None:
    out = out or sys.stdout
    x, v = state.incumbent()
    coords = ",".join(csvio.fmt(c) for c in x)
    print(f"incumbent y={csvio.fmt(v)} x=[{coords}] after {state.n_evaluated}/{state.config.budget_total}", file=out)


def _default_state(args) -> Path:
    return Path(args.state) if args.state else Path(args.out).with_suffix(".state.json")


# ------------------------------------------------------------------ commands


def cmd_design(args) -> int:
    config = load_config(args.config)
    if args.size is not None:
        config["initial_size"] = args.size
    domain = domain_from(config)
    cfg = campaign_config(config, args)
    state, design = ego.start(domain, cfg)
    header = [f"x{j + 1}" for j in range(domain.dim)]
    csvio.write_table(args.out, header, design.points)
    state_path = _default_state(args)
    ego.save_state(state, state_path)
    print(f"wrote {len(design)} design points to {args.out}; campaign state in {state_path}")
    return EXIT_OK


def _load(args) -> ego.OptimizationState:
    return ego.load_state(args.state, args.data)


def cmd_suggest(args) -> int:
    state = _load(args)
    if state.phase != "awaiting_batch":
        overrides = {k: v for k, v in (("batch_size", args.batch), ("liar", args.liar)) if v is not None}
        if overrides:
            state = replace(state, config=replace(state.config, **overrides))
    state, proposal = ego.ask(state)
    header = [f"x{j + 1}" for j in range(state.domain.dim)] + ["ei"]
    rows = np.column_stack([proposal.points, proposal.ei_single])
    out = Path(args.out) if args.out else Path(args.state).with_suffix(".proposals.csv")
    csvio.write_table(out, header, rows)
    ego.save_state(state, args.state, args.data)
    sys.stdout.write(csvio.table_text(header, rows))
    if proposal.mc_qei is not None:
        logger.info("strategy %s, Monte Carlo qEI %.6g", proposal.strategy, proposal.mc_qei)
    return EXIT_OK


def cmd_tell(args) -> int:
    state = _load(args)
    header, data = csvio.read_table(args.results)
    d = state.domain.dim
    _point_columns(header, d, args.results)
    if "y" not in header:
        raise InvalidConfig(f"{args.results}: missing column 'y'")
    state = ego.tell(state, data[:, :d], data[:, header.index("y")])
    ego.save_state(state, args.state, args.data)
    _print_incumbent(state)
    if state.phase == "finished":
        print("budget exhausted; campaign finished")
    return EXIT_OK


def cmd_interpolate(args) -> int:
    config = load_config(args.config)
    opts = {**DEFAULT_FLOWRATE, **config.get("flowrate", {})}
    if args.target_q is not None:
        opts["target_q"] = args.target_q
    header, data = csvio.read_table(args.data)
    missing = [c for c in opts["q_columns"] + opts["r_columns"] if c not in header]
    if missing:
        raise InvalidConfig(f"{args.data}: missing column(s) {', '.join(missing)}")
    if len(opts["q_columns"]) != len(opts["r_columns"]):
        raise InvalidConfig("q_columns and r_columns must pair up")
    q = data[:, [header.index(c) for c in opts["q_columns"]]]
    r = data[:, [header.index(c) for c in opts["r_columns"]]]
    a, b, c, r_target = interpolate_rows(q, r, float(opts["target_q"]), bool(opts["include_origin"]))
    out = np.column_stack([data, a, b, c, r_target])
    csvio.write_table(args.out, header + ["a", "b", "c", "R_target"], out)
    print(f"interpolated {len(out)} row(s) at Q={csvio.fmt(opts['target_q'])} into {args.out}")
    return EXIT_OK


def _diagnose_inputs(args):
    """(domain, X, y, batch or None, family, seed) from a state file or a data CSV."""
    config = load_config(args.config)
    if args.state:
        state = _load(args)
        X, y = state.X, state.y
        domain, family = state.domain, state.config.kernel_family
        seed = resolve_seed(args.seed, {"seed": state.config.seed})
        batch = state.pending.points if state.phase == "awaiting_batch" else None
    else:
        if not args.data:
            raise InvalidConfig("diagnose needs --state or --data")
        domain = domain_from(config)
        header, data = csvio.read_table(args.data, allow_empty_cells=True)
        d = domain.dim
        _point_columns(header, d, args.data)
        if "y" not in header:
            raise InvalidConfig(f"{args.data}: missing column 'y'")
        X, y = data[:, :d], data[:, header.index("y")]
        if np.isnan(X).any() or np.isnan(y).any():
            raise InvalidConfig(f"{args.data}: empty coordinate or value cell")
        family = config.get("kernel_family", "matern52")
        seed = resolve_seed(args.seed, config)
        batch = None
    if args.batch:
        header, data = csvio.read_table(args.batch)
        _point_columns(header, domain.dim, args.batch)
        batch = data[:, : domain.dim]
    return domain, X, y, batch, family, seed


def cmd_diagnose(args) -> int:
    domain, X, y, batch, family, seed = _diagnose_inputs(args)
    training = TrainingSet(X, y)
    if len(training) >= max(10, domain.dim + 2):
        spec = mle_search(training, family, None, seed, domain).spec
    else:
        spec = ego.default_spec(training, family, domain)
    model = fit(training, spec, None, domain)
    lv = loo(model)
    metrics = loo_metrics(y, lv.loo_mean, lv.loo_sd)
    report = {
        **metrics.as_dict(),
        "n": len(training),
        "kernel": {"family": spec.family, "lengthscales": list(spec.lengthscales), "process_variance": spec.process_variance},
        "loo_mean": lv.loo_mean.tolist(),
        "loo_sd": lv.loo_sd.tolist(),
    }
    if batch is not None and len(batch):
        doe_best = float(np.max(y))
        dist = ei_posterior_distribution(model, batch, doe_best, args.draws, seed)
        width = args.bin_width
        if width is None:
            top = float(dist.samples.max())
            width = top / 20.0 if top > 0 else 1.0
        report["batch"] = {
            "points": np.asarray(batch).tolist(),
            "doe_best": doe_best,
            "conditional_correlation": conditional_correlation(model, batch).tolist() if len(batch) > 1 else [[1.0]],
            "a_posteriori": dist.a_posteriori,
            "ei_samples": dist.samples.tolist(),
            "ei_histogram": histogram(dist.samples, width),
        }
        if args.samples_csv:
            csvio.write_table(args.samples_csv, ["improvement"], dist.samples[:, None])
    csvio.write_json(args.out, report)
    print(
        "R2={r_squared:.6g} RMSE={rmse:.6g} RMA={rma:.6g} CR95={cr95:.6g}".format(**metrics.as_dict())
    )
    return EXIT_OK


def cmd_run_bench(args) -> int:
    try:
        objective = get_objective(args.objective)
    except KeyError as exc:
        raise InvalidConfig(exc.args[0]) from None
    config = load_config(args.config)
    config.setdefault("lower", list(objective.domain.lower))
    config.setdefault("upper", list(objective.domain.upper))
    config.setdefault("batch_size", 1)
    domain = domain_from(config)
    if domain.dim != objective.domain.dim:
        raise InvalidConfig(f"{objective.name} is {objective.domain.dim}-d, config bounds are {domain.dim}-d")
    sign = -1.0 if objective.orientation == "minimize" else 1.0

    def f(X):
        return np.array([sign * float(objective(x)) for x in np.atleast_2d(X)])

    # a design as large as the budget is a pure Latin hypercube search
    budget = args.budget if args.budget is not None else config.get("budget_total")
    initial = args.initial if args.initial is not None else config.get("initial_size")
    pure_lhs = budget is not None and initial is not None and int(initial) == int(budget)
    if pure_lhs:
        # the campaign needs room for one ask; the loop below never makes it
        config["budget_total"] = int(budget) + 1
        args.budget = None
    cfg = campaign_config(config, args)
    state, design = ego.start(domain, cfg)
    state = ego.tell(state, design.points, f(design.points))
    trace = [(state.n_evaluated, state.incumbent()[1])]
    while state.phase != "finished" and not pure_lhs:
        state, proposal = ego.ask(state)
        state = ego.tell(state, proposal.points, f(proposal.points))
        trace.append((state.n_evaluated, state.incumbent()[1]))
    for n, best in trace:
        print(f"{n:5d} {csvio.fmt(sign * best)}")
    best = sign * state.incumbent()[1]
    print(f"final best {csvio.fmt(best)}; regret {csvio.fmt(sign * (objective.global_optimum_value - best))}")
    if args.history:
        ego.write_evaluations(args.history, state)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="egokit", description="Kriging-based batch EGO campaigns.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def campaign_flags(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--budget", type=int, help="total evaluations N_s")
        sp.add_argument("--initial", type=int, help="initial design size N")
        sp.add_argument("--batch", type=int, help="batch size b")
        sp.add_argument("--liar", choices=["min", "max", "mean", "mixed"])
        sp.add_argument("--kernel", choices=["matern52", "gaussian", "exponential"])
        sp.add_argument("--refit-every", type=int)

    sp = sub.add_parser("design", help="draw the initial Latin hypercube and create the campaign state")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True, help="design CSV (x1..xd)")
    sp.add_argument("--state", help="state file (default: <out>.state.json)")
    sp.add_argument("--size", type=int, help="alias for --initial")
    campaign_flags(sp)
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("suggest", help="propose the next batch (or reprint the pending one)")
    sp.add_argument("--state", required=True)
    sp.add_argument("--data", help="evaluations CSV (default: the one named in the state)")
    sp.add_argument("--out", help="proposals CSV (default: <state>.proposals.csv)")
    sp.add_argument("--batch", type=int)
    sp.add_argument("--liar", choices=["min", "max", "mean", "mixed"])
    sp.set_defaults(func=cmd_suggest)

    sp = sub.add_parser("tell", help="record evaluated values for the outstanding points")
    sp.add_argument("--state", required=True)
    sp.add_argument("--results", required=True, help="CSV with columns x1..xd,y")
    sp.add_argument("--data", help="evaluations CSV (default: the one named in the state)")
    sp.set_defaults(func=cmd_tell)

    sp = sub.add_parser("interpolate", help="quadratic efficiency-vs-flow-rate interpolation per row")
    sp.add_argument("--data", required=True)
    sp.add_argument("--config")
    sp.add_argument("--out", required=True)
    sp.add_argument("--target-q", type=float)
    sp.set_defaults(func=cmd_interpolate)

    sp = sub.add_parser("diagnose", help="leave-one-out metrics and batch diagnostics as JSON")
    sp.add_argument("--state")
    sp.add_argument("--data", help="evaluations CSV; with --state it overrides the stored location")
    sp.add_argument("--config", help="needed with --data alone (bounds, kernel_family, seed)")
    sp.add_argument("--batch", help="points CSV to diagnose (default: the pending batch)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--draws", type=int, default=1000)
    sp.add_argument("--bin-width", type=float)
    sp.add_argument("--samples-csv")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("run-bench", help="closed-loop run on a registered benchmark")
    sp.add_argument("objective", help=f"one of {', '.join(sorted(REGISTRY))}")
    sp.add_argument("--config")
    sp.add_argument("--history", help="write the evaluations CSV here")
    campaign_flags(sp)
    sp.set_defaults(func=cmd_run_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (EgoError, ValueError) as exc:
        print(f"egokit: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
