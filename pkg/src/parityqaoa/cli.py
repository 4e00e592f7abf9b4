"""Command line front end: one subcommand per experiment kind.

Flags mirror the RunConfig fields; a TOML key-value file can provide any
of them, with explicit flags taking precedence. Integer lists accept
comma-separated values and inclusive ranges ("4-7,9").
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .runner import EXPERIMENTS, RunConfig, aggregate, run


def parse_int_list(text: str) -> List[int]:
    values: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part and not part.startswith("-"):
            lo, hi = part.split("-", 1)
            values.extend(range(int(lo), int(hi) + 1))
        else:
            values.append(int(part))
    if not values:
        raise argparse.ArgumentTypeError(f"empty integer list: {text!r}")
    return values


def parse_float_list(text: str) -> List[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, help="TOML key-value config file")
    sub.add_argument("--n", type=parse_int_list, help="problem sizes, e.g. 4-7")
    sub.add_argument("--p", type=parse_int_list, help="layer counts, e.g. 1,2,3")
    sub.add_argument("--instances", type=int)
    sub.add_argument("--seed", type=int, help="master seed")
    sub.add_argument("--c-strength", type=float, help="constraint penalty C")
    sub.add_argument("--dist", choices=("rademacher", "gaussian"))
    sub.add_argument(
        "--t-max",
        type=parse_float_list,
        help="ramp times assigned to p=1.. in order (single value: all p)",
    )
    sub.add_argument("--restarts", type=int)
    sub.add_argument("--mode", choices=("support_only", "completable"))
    sub.add_argument("--out", type=Path, help="output directory")
    sub.add_argument("--threads", type=int)
    sub.add_argument("--method", choices=("nelder-mead", "powell", "lbfgs"))
    sub.add_argument("--tol", type=float)
    sub.add_argument("--maxiter", type=int)
    sub.add_argument("--c-values", type=parse_float_list, help="strengths for angle scans")


def _load_config_file(path: Optional[Path]) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


_KEY_MAP = {
    "n": "n_list",
    "p": "p_list",
    "seed": "master_seed",
    "out": "out_dir",
}


def _build_config(experiment: str, args: argparse.Namespace) -> RunConfig:
    values: Dict[str, object] = dict(_load_config_file(args.config))
    cli_values = {
        "n": args.n,
        "p": args.p,
        "instances": args.instances,
        "seed": args.seed,
        "c_strength": args.c_strength,
        "dist": args.dist,
        "restarts": args.restarts,
        "mode": args.mode,
        "out": args.out,
        "threads": args.threads,
        "method": args.method,
        "tol": args.tol,
        "maxiter": args.maxiter,
        "c_values": args.c_values,
    }
    for key, value in cli_values.items():
        if value is not None:
            values[key] = value
    if args.t_max is not None:
        values["t_max"] = args.t_max

    kwargs: Dict[str, object] = {"experiment": experiment}
    for key, value in values.items():
        key = _KEY_MAP.get(key, key)
        if key == "n_list" or key == "p_list":
            if isinstance(value, str):
                value = parse_int_list(value)
            kwargs[key] = tuple(int(v) for v in value)  # type: ignore[arg-type]
        elif key == "t_max":
            ramp = [float(v) for v in (value if isinstance(value, (list, tuple)) else [value])]
            p_list = kwargs.get("p_list", (1,))
            if len(ramp) == 1:
                kwargs["t_max_table"] = {p: ramp[0] for p in p_list}  # type: ignore[union-attr]
            else:
                kwargs["t_max_table"] = {p: ramp[p - 1] for p in range(1, len(ramp) + 1)}
        elif key == "c_values":
            kwargs[key] = tuple(float(v) for v in value)  # type: ignore[arg-type]
        elif key == "out_dir":
            kwargs[key] = str(value)
        else:
            kwargs[key] = value
    if "n_list" not in kwargs:
        raise SystemExit("missing required --n (or config n)")
    return RunConfig(**kwargs)  # type: ignore[arg-type]


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="parityqaoa",
        description="Batch experiments for parity-encoded QAOA on spin glasses",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for experiment in EXPERIMENTS:
        sub = subs.add_parser(
            experiment.replace("_", "-"), help=f"run the {experiment} experiment"
        )
        _add_common(sub)

    agg = subs.add_parser("aggregate", help="recompute an aggregate table from records")
    agg.add_argument("--records", type=Path, required=True)
    agg.add_argument("--out", type=Path, required=True)

    args = parser.parse_args(argv)
    if args.command == "aggregate":
        aggregate(args.records, args.out)
        print(f"wrote {args.out}")
        return 0

    experiment = args.command.replace("-", "_")
    config = _build_config(experiment, args)
    summary = run(config)
    status = "complete" if summary.complete else "INCOMPLETE"
    print(f"{experiment}: {summary.rows} rows -> {summary.records_path} [{status}]")
    if summary.skipped:
        for item in summary.skipped:
            print(f"  skipped: {item}", file=sys.stderr)
    return 0 if summary.complete else 1


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
