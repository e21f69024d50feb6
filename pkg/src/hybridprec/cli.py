"""Command line interface: run sweeps, print power budgets, validate configs."""

from __future__ import annotations

import argparse
import sys

from .channel import SystemConfig
from .errors import HybridPrecError
from .evaluation import PowerModel, power_consumption
from .harness import parse_config, run_sweep, write_results
from .projections import parse_architecture, validate_architecture

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridprec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo sweep from a config file")
    run.add_argument("--config", required=True, help="path to the experiment config")
    run.add_argument("--seed", type=int, default=None, help="override master_seed")
    run.add_argument("--trials", type=int, default=None, help="override n_trials")
    run.add_argument("--out", default=None, help="override output_path")
    run.add_argument("--threads", type=int, default=None, help="override worker count")

    power = sub.add_parser("power", help="print the power budget of one architecture")
    power.add_argument("--arch", required=True, help="architecture label, e.g. fc-ups or daosa-dps-l4")
    power.add_argument("--n-tx", type=int, default=256)
    power.add_argument("--n-rf", type=int, default=8)

    validate = sub.add_parser("validate", help="validate a config file without running")
    validate.add_argument("--config", required=True)

    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.trials is not None:
        cfg.n_trials = args.trials
    if args.out is not None:
        cfg.output_path = args.out
    if args.threads is not None:
        cfg.threads = args.threads

    rows, manifest = run_sweep(cfg)
    csv_path, manifest_path = write_results(rows, manifest, cfg.output_path)
    print(f"wrote {len(rows)} rows to {csv_path} (manifest: {manifest_path})")
    if manifest["n_excluded"]:
        print(f"excluded {manifest['n_excluded']} failed trial(s)", file=sys.stderr)
    return 0


def _cmd_power(args: argparse.Namespace) -> int:
    arch = parse_architecture(args.arch)
    validate_architecture(arch, args.n_tx, args.n_rf)
    cfg = SystemConfig(
        n_tx=args.n_tx, n_rx=1, n_users=1, n_streams=1, n_rf_tx=args.n_rf
    )
    watts = power_consumption(arch, cfg, PowerModel())
    print(f"arch={arch.label} n_tx={args.n_tx} n_rf={args.n_rf}")
    print(f"power_w={watts:.6f}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = parse_config(args.config)
    labels = ", ".join(a.label for a in cfg.architectures)
    print(f"ok: {cfg.n_trials} trials, {len(cfg.snr_grid_db)} SNR points, architectures: {labels}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "power": _cmd_power, "validate": _cmd_validate}
    try:
        return handlers[args.command](args)
    except HybridPrecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
