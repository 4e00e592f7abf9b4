"""Bounded multistart minimization over canonical angle boxes.

Every local search starts from the tabulated ramp schedule, from the
depth-1 optimum padded with identity layers, and from `restarts` random
canonical points drawn from per-index substreams (so enlarging the
restart budget never perturbs earlier starts). The running best over all
objective evaluations is what gets returned, which makes the result
monotone in the restart budget and never worse than any seeded start.

Local search is derivative-free by default (the objective is exact but
carries symmetry degeneracies); a quasi-Newton mode consumes an analytic
value-and-gradient callable when one is supplied, or falls back to
forward differences with a 1e-5 radian step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize as scipy_minimize

from . import analytic
from .engine import VanillaEvaluator
from .fast import Evaluator
from .layout import ParityLayout
from .rng import stream
from .schedule import (
    HALF_PI,
    AngleSchedule,
    canonicalize,
    default_t_max,
    trotter,
)
from .sk import SkInstance

METHODS = ("nelder-mead", "powell", "lbfgs")
FD_STEP = 1e-5  # radians, for the optional finite-difference gradients


@dataclass(frozen=True)
class OptResult:
    best_schedule: AngleSchedule
    best_value: float
    restarts_used: int
    evals: int
    converged: bool


def pack(s: AngleSchedule) -> np.ndarray:
    return np.array(s.gammas + s.betas + s.omegas)


def unpack(x: Sequence[float]) -> AngleSchedule:
    p = len(x) // 3
    x = tuple(float(v) for v in x)
    return AngleSchedule(x[:p], x[p : 2 * p], x[2 * p :])


def _pad_p1(angles: Tuple[float, float, float], p: int) -> AngleSchedule:
    beta, gamma, omega = angles
    tail = (0.0,) * (p - 1)
    return AngleSchedule((gamma,) + tail, (beta,) + tail, (omega,) + tail)


class _CountingObjective:
    """Wraps the objective, tracking evaluations and the best point seen."""

    def __init__(self, fun: Callable[[np.ndarray], float]):
        self.fun = fun
        self.evals = 0
        self.best_value = math.inf
        self.best_x: Optional[np.ndarray] = None

    def __call__(self, x: np.ndarray) -> float:
        value = float(self.fun(np.asarray(x, dtype=float)))
        self.evals += 1
        if value < self.best_value:
            self.best_value = value
            self.best_x = np.array(x, dtype=float)
        return value


def _local_search(
    counting: _CountingObjective,
    x0: np.ndarray,
    method: str,
    tol: float,
    maxiter: Optional[int],
    value_and_grad: Optional[Callable[[np.ndarray], Tuple[float, np.ndarray]]],
) -> bool:
    bounds = [(-HALF_PI, HALF_PI)] * x0.size
    if method == "nelder-mead":
        options = {"xatol": tol, "fatol": tol}
        if maxiter is not None:
            options["maxiter"] = maxiter * x0.size
        res = scipy_minimize(
            counting, x0, method="Nelder-Mead", bounds=bounds, options=options
        )
    elif method == "powell":
        options = {"xtol": tol, "ftol": tol}
        if maxiter is not None:
            options["maxiter"] = maxiter
        res = scipy_minimize(
            counting, x0, method="Powell", bounds=bounds, options=options
        )
    elif method == "lbfgs":
        options = {"ftol": tol, "gtol": 1e-6}
        if maxiter is not None:
            options["maxiter"] = maxiter
        if value_and_grad is not None:

            def fun(x: np.ndarray) -> Tuple[float, np.ndarray]:
                value, grad = value_and_grad(np.asarray(x, dtype=float))
                counting.evals += 1
                if value < counting.best_value:
                    counting.best_value = float(value)
                    counting.best_x = np.array(x, dtype=float)
                return float(value), grad

            res = scipy_minimize(
                fun, x0, method="L-BFGS-B", jac=True, bounds=bounds, options=options
            )
        else:
            options["eps"] = FD_STEP
            res = scipy_minimize(
                counting, x0, method="L-BFGS-B", bounds=bounds, options=options
            )
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    return bool(res.success)


def minimize(
    objective: Callable[[AngleSchedule], float],
    p: int,
    restarts: int = 32,
    seed: int = 0,
    tol: float = 1e-8,
    method: str = "nelder-mead",
    maxiter: Optional[int] = None,
    value_and_grad: Optional[Callable[[AngleSchedule], Tuple[float, np.ndarray]]] = None,
    p1_start: Tuple[float, float, float] = analytic.TRIVIAL_ANGLES,
    t_max: Optional[float] = None,
) -> OptResult:
    """Minimize a schedule objective over the canonical box.

    Objective failures propagate; the returned schedule is canonical and
    its value re-evaluated at that point.
    """
    if restarts < 1:
        raise ValueError(f"need restarts >= 1, got {restarts}")
    if tol <= 0:
        raise ValueError(f"need tol > 0, got {tol}")

    def fun_x(x: np.ndarray) -> float:
        return objective(unpack(x))

    fg_x = None
    if value_and_grad is not None:
        def fg_x(x: np.ndarray) -> Tuple[float, np.ndarray]:
            return value_and_grad(unpack(x))

    starts: List[np.ndarray] = [
        pack(canonicalize(trotter(p, t_max if t_max is not None else default_t_max(p)))),
        pack(canonicalize(_pad_p1(p1_start, p))),
    ]
    for ridx in range(restarts):
        rng = stream(seed, ridx)
        starts.append(rng.uniform(-HALF_PI, HALF_PI, size=3 * p))

    counting = _CountingObjective(fun_x)
    best_value = math.inf
    best_x: Optional[np.ndarray] = None
    best_converged = False
    for x0 in starts:
        marker = counting.best_value
        success = _local_search(counting, x0, method, tol, maxiter, fg_x)
        if counting.best_value < best_value or best_x is None:
            best_value = counting.best_value
            best_x = counting.best_x
            best_converged = success or (counting.best_value >= marker)

    best = canonicalize(unpack(best_x))
    final_value = float(objective(best))
    return OptResult(
        best_schedule=best,
        best_value=final_value,
        restarts_used=restarts,
        evals=counting.evals,
        converged=best_converged,
    )


@lru_cache(maxsize=64)
def _cached_p1_optimum(n: int, c_strength: float) -> Tuple[float, float, float]:
    return analytic.optimal_angles_p1(n, c_strength)


def optimize_instance(
    layout: ParityLayout,
    inst: SkInstance,
    p: int,
    target: str = "ST",
    c_strength: float = 3.0,
    restarts: int = 32,
    seed: int = 0,
    tol: float = 1e-8,
    method: str = "nelder-mead",
    maxiter: Optional[int] = None,
    evaluator: Optional[Evaluator] = None,
) -> Tuple[OptResult, dict]:
    """Optimize one instance's schedule and score the optimum.

    The decoded performance ratio is recorded regardless of which cost
    function was optimized, so penalty-trained angles can be compared in
    the decoding picture.
    """
    if target not in ("ST", "PE"):
        raise ValueError(f"target must be ST or PE, got {target!r}")
    ev = evaluator if evaluator is not None else Evaluator(layout, inst)
    if target == "ST":
        objective = ev.energy_st
        value_and_grad = ev.energy_st_and_grad if method == "lbfgs" else None
        p1_start = analytic.TRIVIAL_ANGLES
    else:
        objective = lambda s: ev.energy_pe(s, c_strength)
        value_and_grad = (
            (lambda s: ev.energy_pe_and_grad(s, c_strength))
            if method == "lbfgs"
            else None
        )
        p1_start = _cached_p1_optimum(layout.n, float(c_strength))

    result = minimize(
        objective,
        p,
        restarts=restarts,
        seed=seed,
        tol=tol,
        method=method,
        maxiter=maxiter,
        value_and_grad=value_and_grad,
        p1_start=p1_start,
    )
    best = result.best_schedule
    e_st = ev.energy_st(best)
    metrics = {
        "e_pe": ev.energy_pe(best, c_strength),
        "e_st": e_st,
        "perf_st": -e_st / layout.n ** 1.5,
        "broken": ev.expected_broken(best),
    }
    return result, metrics


def optimize_vanilla(
    inst: SkInstance,
    p: int,
    restarts: int = 32,
    seed: int = 0,
    tol: float = 1e-8,
    method: str = "nelder-mead",
    maxiter: Optional[int] = None,
) -> OptResult:
    """Optimize the unencoded baseline's 2p angles for one instance.

    Returns schedules with all-zero constraint angles so the same record
    plumbing applies.
    """
    if restarts < 1:
        raise ValueError(f"need restarts >= 1, got {restarts}")
    ev = VanillaEvaluator(inst)

    def objective_x(x: np.ndarray) -> float:
        return ev.energy(x[:p], x[p:])

    ramp = trotter(p, default_t_max(p))
    starts = [
        np.concatenate([ramp.gammas, ramp.betas]),
        np.concatenate([np.negative(ramp.gammas), np.negative(ramp.betas)]),
    ]
    for ridx in range(restarts):
        rng = stream(seed, ridx)
        starts.append(rng.uniform(-HALF_PI, HALF_PI, size=2 * p))

    counting = _CountingObjective(objective_x)
    best_value = math.inf
    best_x: Optional[np.ndarray] = None
    best_converged = False
    for x0 in starts:
        success = _local_search(counting, x0, method, tol, maxiter, None)
        if counting.best_value < best_value or best_x is None:
            best_value = counting.best_value
            best_x = counting.best_x
            best_converged = success

    sched = canonicalize(
        AngleSchedule(tuple(best_x[:p]), tuple(best_x[p:]), (0.0,) * p)
    )
    final_value = ev.energy(np.array(sched.gammas), np.array(sched.betas))
    return OptResult(
        best_schedule=sched,
        best_value=float(final_value),
        restarts_used=restarts,
        evals=counting.evals,
        converged=best_converged,
    )
