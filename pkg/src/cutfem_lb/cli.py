"""Command-line entry point: ``cutfem-lb --experiment {converge,condition,sweep,selftest}``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import reference_tables as ref
from .analysis import rate
from .experiments import FAILED, EMPTY, default_config, run


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _ints(text: str) -> tuple:
    return tuple(int(t) for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cutfem-lb", description=__doc__)
    p.add_argument("--experiment", required=True,
                   choices=["converge", "condition", "sweep", "selftest"])
    p.add_argument("--dim", type=int, choices=[2, 3])
    p.add_argument("--levels", type=_ints,
                   help="comma list of cells per unit length (sweep: first entry)")
    p.add_argument("--tau0", type=_floats, help="comma list of stabilization parameters")
    p.add_argument("--precond", choices=["none", "diag", "both"])
    p.add_argument("--center", type=_floats)
    p.add_argument("--radius", type=float)
    p.add_argument("--sweep-delta", type=float)
    p.add_argument("--sweep-step", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def selftest() -> str:
    """Rates recomputed from the reference tables."""
    lines = ["table,column,rates"]
    for key, values in ref.ERRORS.items():
        if key != "N":
            r = rate(ref.ERRORS["N"], values)
            lines.append(f"errors,{key},{' '.join(f'{x:.2f}' for x in r)}")
    for key, values in ref.CONDITION.items():
        if key != "N":
            r = rate(ref.CONDITION["N"], values)
            lines.append(f"condition,{key},{' '.join(f'{x:.2f}' for x in r)}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.experiment == "selftest":
        sys.stdout.write(selftest())
        return 0
    overrides = {k: v for k, v in {
        "dim": args.dim, "levels": args.levels, "tau0": args.tau0,
        "precond": args.precond, "center": args.center, "radius": args.radius,
        "sweep_delta": args.sweep_delta, "sweep_step": args.sweep_step,
        "seed": args.seed, "out": args.out,
    }.items() if v is not None}
    if args.deterministic:
        overrides["deterministic"] = True
    try:
        config = default_config(args.experiment, **overrides)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    rows, text = run(config)
    if not args.out:
        sys.stdout.write(text)
    return 1 if any(r.get("status") in (FAILED, EMPTY) for r in rows) else 0


if __name__ == "__main__":
    sys.exit(main())
