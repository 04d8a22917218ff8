"""Command-line entry point for the quadcopter MPC benchmark."""

from __future__ import annotations

import argparse
import sys
from typing import Optional

import numpy as np

from .mpc import mpc_simulate, write_csv
from .quadcopter import OcpSpec


class _Parser(argparse.ArgumentParser):
    # Usage problems exit with code 1 (argparse defaults to 2).
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _parse_x0(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 9:
        raise argparse.ArgumentTypeError("--x0 expects 9 comma-separated numbers")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--x0 is not numeric: {exc}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pantr-bench", description="Quadcopter NMPC benchmark runner")
    parser.add_argument("--problem", choices=["quadcopter"], default="quadcopter")
    parser.add_argument("--solver", choices=["pantr", "fbs"], default="pantr")
    parser.add_argument("--horizon", type=int, required=True, help="OCP horizon length (1..60)")
    parser.add_argument("--steps", type=int, default=60, help="number of simulated MPC steps")
    start = parser.add_mutually_exclusive_group()
    start.add_argument("--warm", dest="warm", action="store_true", default=True)
    start.add_argument("--cold", dest="warm", action="store_false")
    parser.add_argument("--tol", type=float, default=1e-8)
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--x0", type=_parse_x0, default=None, help="initial state, 9 comma-separated values")
    parser.add_argument("--no-state-constraints", action="store_true")
    return parser


def cli_main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not 1 <= args.horizon <= 60:
        parser.print_usage(sys.stderr)
        sys.stderr.write("pantr-bench: error: --horizon must lie in [1, 60]\n")
        return 1
    if args.steps < 1:
        parser.print_usage(sys.stderr)
        sys.stderr.write("pantr-bench: error: --steps must be positive\n")
        return 1
    if not args.tol > 0:
        parser.print_usage(sys.stderr)
        sys.stderr.write("pantr-bench: error: --tol must be positive\n")
        return 1

    spec = OcpSpec(horizon=args.horizon)
    records = mpc_simulate(
        spec,
        solver=args.solver,
        steps=args.steps,
        warm=args.warm,
        seed=args.seed,
        x0=args.x0,
        tol=args.tol,
        state_constraints=not args.no_state_constraints,
    )
    write_csv(records, args.out)

    converged = sum(r.converged for r in records)
    avg_ms = sum(r.wall_ns for r in records) / len(records) / 1e6
    final = records[-1].state
    print(
        f"{args.solver} N={args.horizon} {'warm' if args.warm else 'cold'}: "
        f"{converged}/{len(records)} steps converged, avg {avg_ms:.2f} ms/step, "
        f"final position ({final[0]:.4f}, {final[1]:.4f}, {final[2]:.4f}) -> {args.out}"
    )
    return 0 if converged == len(records) else 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
