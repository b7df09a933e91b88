"""Command-line entry point.

Subcommands: gen-circuit, optimize, simulate, cznr-emulate, counts,
report. A flat JSON config file supplies defaults; command-line flags
override it. Exit codes: 0 success, 2 configuration error, 3 runtime
error.
"""

from __future__ import annotations

import argparse
import sys

from .circuits import serialize_circuit
from .harness import (
    ConfigError,
    ExperimentConfig,
    emit_plot_data,
    gate_count_rows,
    generate_target_circuit,
    run_cznr_emulation,
    run_comparison,
)
from .search import derive_seed


def _add_config_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat JSON config file")
    sub.add_argument("--n", type=int)
    sub.add_argument("--s", type=int)
    sub.add_argument("--r", type=int)
    sub.add_argument("--p", type=float)
    sub.add_argument("--tau-m", dest="tau_m", type=float)
    sub.add_argument("--shots", type=int)
    sub.add_argument("--tabu-capacity", dest="tabu_capacity", type=int)
    sub.add_argument("--candidates", type=int)
    sub.add_argument("--max-evals", dest="max_evals", type=int)
    sub.add_argument("--repetitions", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--r-max", dest="r_max", type=int)
    sub.add_argument("--weight-class", dest="weight_class",
                     choices=("low", "high"))
    sub.add_argument("--out", dest="output_path")


def _config_from_args(args: argparse.Namespace, mode: str) -> ExperimentConfig:
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "n", "s", "r", "p", "tau_m", "shots", "tabu_capacity", "candidates",
            "max_evals", "repetitions", "seed", "r_max", "weight_class",
            "output_path",
        )
    }
    overrides["mode"] = mode
    return ExperimentConfig.from_sources(getattr(args, "config", None), overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clinr",
        description="Clifford noise reduction: build, simulate and optimize "
                    "verification sequences.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen-circuit", help="write a random truncated circuit")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--s", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    sim = subs.add_parser("simulate", help="estimate a single implementation")
    sim.add_argument("--mode", choices=("direct", "clinr_random"), required=True)
    _add_config_options(sim)

    opt = subs.add_parser("optimize", help="run a verification-sequence search")
    opt.add_argument("--mode", choices=("clinr_global", "clinr_two_step"),
                     required=True)
    _add_config_options(opt)

    czr = subs.add_parser("cznr-emulate", help="deferred-measurement CZNR run")
    _add_config_options(czr)

    cnt = subs.add_parser("counts", help="native gate counts per context")
    _add_config_options(cnt)

    rep = subs.add_parser("report", help="aggregate trace CSVs into plot data")
    rep.add_argument("--out-prefix", required=True)
    rep.add_argument("traces", nargs="+", help="comparison CSV files")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen-circuit":
            circuit = generate_target_circuit(
                args.n, args.s, derive_seed(args.seed, 1)
            )
            with open(args.out, "w") as fh:
                fh.write(serialize_circuit(circuit))
        elif args.command in ("simulate", "optimize"):
            cfg = _config_from_args(args, args.mode)
            run_comparison(cfg)
        elif args.command == "cznr-emulate":
            cfg = _config_from_args(args, "cznr_emulate")
            run_cznr_emulation(cfg)
        elif args.command == "counts":
            cfg = _config_from_args(args, "counts")
            gate_count_rows(cfg)
        elif args.command == "report":
            emit_plot_data(args.traces, args.out_prefix)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
