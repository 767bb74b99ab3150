"""Command line interface.

Subcommands: test, exhaustive, simulate, power, fwer, scale, inspect.
Exit codes: 0 on completion (the statistical decision lives in the report,
not the exit code), 2 for usage errors, 1 for runtime errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .engine import EngineConfig, run_multifit
from .errors import ColumnSelectorError, MultiFitError
from .harness import StudySpec, fwer_study, power_study, scaling_study
from .lattice import CuboidKey, cuboid_node_at
from .preprocess import ingest_csv, rank_transform
from .scenarios import DEFAULT_N, SCENARIO_NAMES, ScenarioSpec, generate


def _parse_grid(text: str) -> tuple[int, ...]:
    """Parse 'start:stop:step' (inclusive) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r} must be start:stop:step")
        start, stop, step = (int(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"grid {text!r} is empty")
        return tuple(range(start, stop + 1, step))
    return tuple(int(t) for t in text.split(",") if t.strip())


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--p-star", type=float, default=None)
    p.add_argument("--r-star", type=int, default=None)
    p.add_argument("--r-max", type=int, default=None)
    p.add_argument("--screen-total", type=int, default=None)
    p.add_argument("--screen-margin", type=int, default=None)
    p.add_argument("--method", choices=("fisher", "midp", "normal"), default=None)
    p.add_argument("--correction", choices=("holm", "modified-holm"), default=None)


def _engine_kwargs(args) -> dict:
    out = {}
    if args.p_star is not None:
        out["p_star"] = args.p_star
    if args.r_star is not None:
        out["r_star"] = args.r_star
    if args.r_max is not None:
        out["r_max"] = args.r_max
    if args.screen_total is not None:
        out["screen_total_min"] = args.screen_total
    if args.screen_margin is not None:
        out["screen_margin_min"] = args.screen_margin
    if args.method is not None:
        out["test_method"] = args.method
    if args.correction is not None:
        out["correction"] = args.correction.replace("-", "_")
    return out


def _load_sample(args):
    data = ingest_csv(args.data, args.x, args.y, drop_na=args.drop_na)
    if args.seed is not None:
        return rank_transform(data, tie_policy="random", seed=args.seed)
    return rank_transform(data)


def _cmd_test(args) -> int:
    sample = _load_sample(args)
    kwargs = _engine_kwargs(args)
    if args.mode is not None:
        kwargs["mode"] = args.mode
    if getattr(args, "force_exhaustive", False):
        kwargs["mode"] = "exhaustive"
    report = run_multifit(sample, EngineConfig(alpha=args.alpha, **kwargs))
    fmt = args.format
    out = Path(args.out) if args.out else Path(f"report.{fmt}")
    if fmt == "json":
        out.write_text(report.to_json(indent=2) + "\n", encoding="utf-8")
    else:
        out.write_text(report.to_csv(), encoding="utf-8")
    decision = "reject" if report.global_reject else "retain"
    print(f"{out}: {report.n_tested} tests, {report.n_screened} screened, "
          f"decision {decision} at alpha={args.alpha}")
    return 0


def _cmd_simulate(args) -> int:
    spec = ScenarioSpec(
        name=args.scenario,
        n=args.n if args.n is not None else DEFAULT_N[args.scenario],
        noise_level=args.noise,
        d_x=args.dx,
        d_y=args.dy,
        seed=args.seed or 0,
        noise_sd=args.noise_sd,
    )
    data = generate(spec)
    out = Path(args.out)
    header = [f"x{c + 1}" for c in range(data.d_x)] + [
        f"y{c + 1}" for c in range(data.d_y)
    ]
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in data.values:
            fh.write(",".join(repr(v) for v in row) + "\n")
    sidecar = out.with_suffix(".json")
    sidecar.write_text(json.dumps(spec.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(f"{out}: {data.n} rows, sidecar {sidecar}")
    return 0


def _write_study(result, out_path) -> int:
    result.write_csv(out_path)
    print(f"{out_path}: {len(result.cells)} cells")
    return 0


def _cmd_power(args) -> int:
    spec = StudySpec(
        kind="power",
        scenarios=tuple(args.scenarios.split(",")),
        noise_levels=tuple(args.noise) if args.noise else (None,),
        n_values=tuple(args.n),
        replications=args.reps,
        alpha=args.alpha,
        seed_base=args.seed,
        workers=args.workers,
        d_x=args.dx,
        d_y=args.dy,
        engine=_engine_kwargs(args),
    )
    return _write_study(power_study(spec), args.out)


def _cmd_fwer(args) -> int:
    spec = StudySpec(
        kind="fwer",
        n_values=_parse_grid(args.n_grid),
        replications=args.reps,
        alpha=args.alpha,
        seed_base=args.seed,
        workers=args.workers,
        d_x=args.dx,
        d_y=args.dy,
        engine=_engine_kwargs(args),
    )
    return _write_study(fwer_study(spec), args.out)


def _cmd_scale(args) -> int:
    spec = StudySpec(
        kind="scaling",
        scenarios=("null_gaussian", "linear") if args.signal else ("null_gaussian",),
        n_values=_parse_grid(args.n_grid),
        replications=args.reps,
        alpha=args.alpha,
        seed_base=args.seed,
        d_x=args.d,
        d_y=args.d,
        engine=_engine_kwargs(args),
    )
    return _write_study(scaling_study(spec), args.out)


def _cmd_inspect(args) -> int:
    sample = _load_sample(args)
    key = CuboidKey(tuple(_parse_int_list(args.k)), tuple(_parse_int_list(args.l)))
    node = cuboid_node_at(sample, key)
    print(node.debug_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multifit",
        description="Multiscale 2x2-table independence testing with exact "
                    "finite-sample FWER control.",
    )
    parser.add_argument("--version", action="version",
                        version=f"multifit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(p):
        p.add_argument("data", help="CSV file with a header row")
        p.add_argument("--x", required=True,
                       help="X columns: names, indices, or ranges like 0-1")
        p.add_argument("--y", required=True, help="Y columns")
        p.add_argument("--drop-na", action="store_true",
                       help="drop rows with missing values instead of failing")
        p.add_argument("--seed", type=int, default=None,
                       help="break rank ties randomly with this seed "
                            "(default: deterministic by row index)")

    p_test = sub.add_parser("test", help="test one dataset")
    add_data_flags(p_test)
    _add_engine_flags(p_test)
    p_test.add_argument("--mode", choices=("adaptive", "exhaustive"), default=None)
    p_test.add_argument("--format", choices=("json", "csv"), default="json")
    p_test.add_argument("--out", default=None)
    p_test.set_defaults(func=_cmd_test)

    p_exh = sub.add_parser("exhaustive",
                           help="test one dataset exhaustively up to r_max")
    add_data_flags(p_exh)
    _add_engine_flags(p_exh)
    p_exh.add_argument("--format", choices=("json", "csv"), default="json")
    p_exh.add_argument("--out", default=None)
    p_exh.set_defaults(func=_cmd_test, mode="exhaustive", force_exhaustive=True)

    p_sim = sub.add_parser("simulate", help="generate a scenario dataset")
    p_sim.add_argument("--scenario", required=True, choices=SCENARIO_NAMES)
    p_sim.add_argument("--n", type=int, default=None)
    p_sim.add_argument("--noise", type=int, default=None)
    p_sim.add_argument("--noise-sd", type=float, default=None)
    p_sim.add_argument("--dx", type=int, default=None)
    p_sim.add_argument("--dy", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=_cmd_simulate)

    p_pow = sub.add_parser("power", help="power study over a scenario grid")
    p_pow.add_argument("--scenarios", required=True,
                       help="comma-separated scenario names")
    p_pow.add_argument("--noise", type=_parse_int_list, default=None,
                       help="comma-separated noise levels")
    p_pow.add_argument("--n", type=_parse_int_list, required=True)
    p_pow.add_argument("--reps", type=int, default=200)
    p_pow.add_argument("--seed", type=int, default=0)
    p_pow.add_argument("--workers", type=int, default=1)
    p_pow.add_argument("--dx", type=int, default=None)
    p_pow.add_argument("--dy", type=int, default=None)
    _add_engine_flags(p_pow)
    p_pow.add_argument("--out", required=True)
    p_pow.set_defaults(func=_cmd_power)

    p_fw = sub.add_parser("fwer", help="null FWER study, four test variants")
    p_fw.add_argument("--n-grid", required=True,
                      help="start:stop:step or comma list")
    p_fw.add_argument("--reps", type=int, default=500)
    p_fw.add_argument("--seed", type=int, default=0)
    p_fw.add_argument("--workers", type=int, default=1)
    p_fw.add_argument("--dx", type=int, default=None)
    p_fw.add_argument("--dy", type=int, default=None)
    _add_engine_flags(p_fw)
    p_fw.add_argument("--out", required=True)
    p_fw.set_defaults(func=_cmd_fwer)

    p_sc = sub.add_parser("scale", help="runtime scaling study")
    p_sc.add_argument("--n-grid", required=True)
    p_sc.add_argument("--reps", type=int, default=5)
    p_sc.add_argument("--d", type=int, default=2,
                      help="dimensions per block (d_x = d_y = d)")
    p_sc.add_argument("--seed", type=int, default=0)
    p_sc.add_argument("--signal", action="store_true",
                      help="also time the strong-signal linear scenario")
    _add_engine_flags(p_sc)
    p_sc.add_argument("--out", required=True)
    p_sc.set_defaults(func=_cmd_scale)

    p_ins = sub.add_parser("inspect", help="dump one cuboid as JSON")
    add_data_flags(p_ins)
    p_ins.add_argument("--k", required=True, help="comma-separated level vector")
    p_ins.add_argument("--l", required=True, help="comma-separated location vector")
    p_ins.set_defaults(func=_cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ColumnSelectorError as exc:
        print(f"multifit: {exc}", file=sys.stderr)
        return 2
    except (MultiFitError, OSError, ValueError) as exc:
        print(f"multifit: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
