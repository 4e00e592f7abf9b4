"""Experiment grids: configs, batch execution, CSV/JSON persistence.

A run executes one experiment kind over a grid of sizes, depths, and
instances, writes one record per grid point to ``records.csv``, a
mean/standard-error table to ``aggregate.csv`` (for instance-based
experiments), and a ``manifest.json`` echoing the config and marking
completeness. Per-instance seeds derive from (master seed, n, p, index),
so any sub-grid can be re-run in isolation and byte-reproduces its
records; row order is fixed by the grid, never by completion time.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import multiprocessing
import numpy as np

from . import analytic, rcc, sk
from .engine import ResourceLimitError
from .fast import Evaluator
from .layout import ParityLayout, build as build_layout
from .optimizer import optimize_instance, optimize_vanilla
from .rng import derive_seed
from .schedule import AngleSchedule, canonicalize, default_t_max, to_json as sched_json
from .sk import SkInstance

SCHEMA_LINE = "# schema=1"

EXPERIMENTS = (
    "optimize_st",
    "optimize_pe",
    "trotter",
    "vanilla",
    "count_rcc",
    "angle_scan",
    "exact_solution",
)
INSTANCE_EXPERIMENTS = ("optimize_st", "optimize_pe", "trotter", "vanilla", "exact_solution")

RECORD_FIELDS = (
    "experiment",
    "n",
    "p",
    "instance",
    "seed",
    "schedule",
    "e_pe",
    "e_st",
    "perf_st",
    "broken",
    "wall_ms",
)
AGGREGATE_FIELDS = ("experiment", "n", "p", "mean_perf_st", "sem", "sem3", "count")
COUNT_FIELDS = ("n", "p", "mode", "count", "upper_bound")
SCAN_FIELDS = ("c", "beta", "gamma", "omega")


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    n_list: Tuple[int, ...]
    p_list: Tuple[int, ...] = (1,)
    instances: int = 200
    master_seed: int = 1
    c_strength: float = 3.0
    dist: str = "rademacher"
    t_max_table: Optional[Dict[int, float]] = None
    restarts: int = 32
    mode: str = "completable"
    out_dir: str = "run_out"
    threads: int = 1
    method: str = "nelder-mead"
    tol: float = 1e-8
    maxiter: Optional[int] = None
    c_values: Tuple[float, ...] = tuple(np.round(np.arange(0.0, 8.0001, 0.25), 6))

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.instances < 1 or self.threads < 1 or self.restarts < 1:
            raise ValueError("instances, threads and restarts must be positive")
        if self.c_strength < 0:
            raise ValueError("constraint strength must be >= 0")
        if self.experiment != "vanilla" and self.experiment != "angle_scan":
            if any(n < 3 for n in self.n_list):
                raise ValueError("parity experiments need n >= 3")

    def t_max_for(self, p: int) -> float:
        if self.t_max_table and p in self.t_max_table:
            return self.t_max_table[p]
        return default_t_max(p)


@dataclass
class RunSummary:
    records_path: Path
    aggregate_path: Optional[Path]
    manifest_path: Path
    rows: int
    complete: bool
    skipped: List[dict] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Worker-side task execution (module level so it pickles under spawn)
# ---------------------------------------------------------------------------

_WORKER_CFG: Optional[dict] = None
_WORKER_LAYOUTS: Dict[int, ParityLayout] = {}


def _worker_init(cfg: dict) -> None:
    global _WORKER_CFG
    _WORKER_CFG = cfg
    try:
        import numba

        numba.set_num_threads(1)
    except Exception:
        pass


def _worker_layout(n: int) -> ParityLayout:
    layout = _WORKER_LAYOUTS.get(n)
    if layout is None:
        layout = build_layout(n)
        _WORKER_LAYOUTS[n] = layout
    return layout


def _instance_for(cfg: dict, n: int, p: int, idx: int) -> Tuple[int, SkInstance]:
    seed = derive_seed(cfg["master_seed"], n, p, idx)
    return seed, sk.sample(n, cfg["dist"], seed)


def _run_task(task: Tuple[int, int, int]) -> dict:
    return _execute_task(_WORKER_CFG, task)


def _execute_task(cfg: dict, task: Tuple[int, int, int]) -> dict:
    n, p, idx = task
    experiment = cfg["experiment"]
    started = time.perf_counter()
    seed, inst = _instance_for(cfg, n, p, idx)
    row: Dict[str, object] = {
        "experiment": experiment,
        "n": n,
        "p": p,
        "instance": idx,
        "seed": seed,
        "schedule": "",
        "e_pe": "",
        "e_st": "",
        "perf_st": "",
        "broken": "",
    }
    if experiment in ("optimize_st", "optimize_pe"):
        layout = _worker_layout(n)
        evaluator = Evaluator(layout, inst)
        result, metrics = optimize_instance(
            layout,
            inst,
            p,
            target="ST" if experiment == "optimize_st" else "PE",
            c_strength=cfg["c_strength"],
            restarts=cfg["restarts"],
            seed=seed,
            tol=cfg["tol"],
            method=cfg["method"],
            maxiter=cfg["maxiter"],
            evaluator=evaluator,
        )
        row["schedule"] = sched_json(result.best_schedule)
        row.update(
            e_pe=repr(metrics["e_pe"]),
            e_st=repr(metrics["e_st"]),
            perf_st=repr(metrics["perf_st"]),
            broken=repr(metrics["broken"]),
        )
    elif experiment == "trotter":
        from .schedule import trotter as trotter_schedule

        layout = _worker_layout(n)
        evaluator = Evaluator(layout, inst)
        sched = trotter_schedule(p, cfg["t_max_for"][p])
        e_st = evaluator.energy_st(sched)
        row["schedule"] = sched_json(sched)
        row.update(
            e_pe=repr(evaluator.energy_pe(sched, cfg["c_strength"])),
            e_st=repr(e_st),
            perf_st=repr(-e_st / n ** 1.5),
            broken=repr(evaluator.expected_broken(sched)),
        )
    elif experiment == "vanilla":
        result = optimize_vanilla(
            inst,
            p,
            restarts=cfg["restarts"],
            seed=seed,
            tol=cfg["tol"],
            method=cfg["method"],
            maxiter=cfg["maxiter"],
        )
        sched = result.best_schedule
        row["schedule"] = json.dumps(
            {"gamma": list(sched.gammas), "beta": list(sched.betas), "omega": []}
        )
        row.update(
            e_st=repr(result.best_value),
            perf_st=repr(-result.best_value / n ** 1.5),
        )
    elif experiment == "exact_solution":
        energy, _cfg = sk.ground_state(inst)
        row.update(e_st=repr(energy), perf_st=repr(-energy / n ** 1.5))
    else:  # pragma: no cover - guarded by RunConfig validation
        raise ValueError(f"not an instance experiment: {experiment}")
    row["wall_ms"] = round((time.perf_counter() - started) * 1000.0, 3)
    return row


# ---------------------------------------------------------------------------
# Run orchestration
# ---------------------------------------------------------------------------


def _config_payload(config: RunConfig) -> dict:
    payload = dataclasses.asdict(config)
    payload["t_max_for"] = {p: config.t_max_for(p) for p in config.p_list}
    return payload


def run(config: RunConfig) -> RunSummary:
    """Execute the configured grid and persist records/aggregate/manifest."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / "records.csv"
    manifest_path = out_dir / "manifest.json"
    aggregate_path: Optional[Path] = None
    skipped: List[dict] = []
    started = time.time()

    if config.experiment == "count_rcc":
        rows = rcc.count_report_rows(config.n_list, config.p_list, config.mode)
        _write_csv(records_path, COUNT_FIELDS, [dict(zip(COUNT_FIELDS, r)) for r in rows])
        nrows = len(rows)
    elif config.experiment == "angle_scan":
        n = config.n_list[0]
        scan = analytic.angle_scan(n, config.c_values)
        _write_csv(records_path, SCAN_FIELDS, [dict(zip(SCAN_FIELDS, r)) for r in scan])
        nrows = len(scan)
    else:
        grid = [
            (n, p, idx)
            for n in config.n_list
            for p in (config.p_list if config.experiment != "exact_solution" else (0,))
            for idx in range(config.instances)
        ]
        cfg = _config_payload(config)
        rows_by_key: Dict[Tuple[int, int, int], dict] = {}
        try:
            if config.threads > 1:
                # spawn: workers start clean, with no inherited compiler
                # threads (fork is unsafe once JIT kernels have run).
                ctx = multiprocessing.get_context("spawn")
                with ProcessPoolExecutor(
                    max_workers=config.threads,
                    mp_context=ctx,
                    initializer=_worker_init,
                    initargs=(cfg,),
                ) as pool:
                    for task, row in zip(grid, pool.map(_run_task, grid, chunksize=1)):
                        rows_by_key[task] = row
            else:
                for task in grid:
                    rows_by_key[task] = _execute_task(cfg, task)
        except ResourceLimitError as exc:
            skipped.append({"error": str(exc)})
        records = [rows_by_key[key] for key in sorted(rows_by_key)]
        _write_csv(records_path, RECORD_FIELDS, records)
        nrows = len(records)
        aggregate_path = out_dir / "aggregate.csv"
        aggregate(records_path, aggregate_path)

    complete = not skipped
    manifest = {
        "schema": 1,
        "config": _json_safe(_config_payload(config)),
        "files": {
            "records": records_path.name,
            "aggregate": aggregate_path.name if aggregate_path else None,
        },
        "rows": nrows,
        "complete": complete,
        "skipped": skipped,
        "started": started,
        "finished": time.time(),
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return RunSummary(records_path, aggregate_path, manifest_path, nrows, complete, skipped)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _write_csv(path: Path, fields: Sequence[str], rows: List[dict]) -> None:
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    writer = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    path.write_text(buf.getvalue())


def read_csv(path: Path) -> Tuple[List[str], List[dict]]:
    """Read a schema-1 CSV; returns (columns, rows as string dicts)."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != SCHEMA_LINE:
            raise ValueError(f"unsupported schema header {first!r} in {path}")
        reader = csv.DictReader(fh)
        return list(reader.fieldnames or []), list(reader)


def aggregate(records_path: Path, out_path: Optional[Path] = None) -> List[dict]:
    """Group records by (experiment, n, p); emit mean/SEM (3x) of perf_st.

    The standard error of a single record is defined as 0; groups without
    a parseable perf_st are omitted (noted via the returned rows only).
    """
    _, rows = read_csv(Path(records_path))
    groups: Dict[Tuple[str, int, int], List[float]] = {}
    for row in rows:
        text = row.get("perf_st", "")
        if text in ("", None):
            continue
        key = (row["experiment"], int(row["n"]), int(row["p"]))
        groups.setdefault(key, []).append(float(text))
    out_rows: List[dict] = []
    for key in sorted(groups):
        values = np.array(groups[key])
        count = values.size
        sem = float(values.std(ddof=1) / np.sqrt(count)) if count > 1 else 0.0
        out_rows.append(
            {
                "experiment": key[0],
                "n": key[1],
                "p": key[2],
                "mean_perf_st": repr(float(values.mean())),
                "sem": repr(sem),
                "sem3": repr(3.0 * sem),
                "count": count,
            }
        )
    if out_path is not None:
        _write_csv(Path(out_path), AGGREGATE_FIELDS, out_rows)
    return out_rows
