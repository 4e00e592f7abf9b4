"""Independent reference implementations used only to check the package.

Each oracle recomputes a quantity along a different route than the code
under test: naive index loops instead of vectorized sums, explicit kron
matrices instead of butterflies, subset enumeration instead of Gaussian
elimination, coupling enumeration over cones instead of closed forms.
"""

from __future__ import annotations

import itertools
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from parityqaoa import engine, rcc, sk
from parityqaoa.layout import ParityLayout
from parityqaoa.schedule import AngleSchedule
from parityqaoa.sk import SkInstance


def naive_logical_energy(inst: SkInstance, cfg: Sequence[float]) -> float:
    """Index-naive double loop over all ordered pairs."""
    total = 0.0
    for i in range(inst.n):
        for j in range(inst.n):
            if i < j:
                total += inst.couplings[(i, j)] * cfg[i] * cfg[j]
    return total


def brute_ground_state(inst: SkInstance) -> float:
    """Minimum energy over all 2^n configurations, no gauge fixing."""
    best = np.inf
    for bits in itertools.product((1, -1), repeat=inst.n):
        best = min(best, naive_logical_energy(inst, bits))
    return best


def naive_expect(state: engine.StateVector, support: Iterable[int], coefficient: float = 1.0) -> float:
    """Amplitude loop with string-based parity, independent of bit tricks."""
    order = {q: k for k, q in enumerate(state.qubits)}
    positions = [order[q] for q in support]
    total = 0.0
    for idx, amp in enumerate(state.amplitudes):
        sign = 1.0
        for pos in positions:
            if (idx >> pos) & 1:
                sign = -sign
        total += sign * (amp.real**2 + amp.imag**2)
    return coefficient * total


def _cone_state(
    layout: ParityLayout,
    couplings: Dict[Tuple[int, int], float],
    sched: AngleSchedule,
    cone: rcc.Rcc,
) -> engine.StateVector:
    inst = SkInstance(layout.n, couplings, 0)
    return engine.evolve(layout, inst, sched, gate_filter=cone)


def exact_onsite_avg(
    layout: ParityLayout,
    qubit: int,
    beta: float,
    gamma: float,
    omega: float,
    expect_fn=None,
) -> float:
    """E_J[J <Z>] for one coupling term by enumerating its cone couplings."""
    sched = AngleSchedule((gamma,), (beta,), (omega,))
    cone = rcc.extract(layout, frozenset((qubit,)), 1)
    base = {pair: 1.0 for pair in layout.qubits}
    jsup = sorted(cone.j_support)
    total = 0.0
    for assign in itertools.product((1.0, -1.0), repeat=len(jsup)):
        coup = dict(base)
        for q, val in zip(jsup, assign):
            coup[layout.qubits[q]] = val
        state = _cone_state(layout, coup, sched, cone)
        weight = coup[layout.qubits[qubit]]
        total += weight * _expect(state, (qubit,), expect_fn)
    return total / 2 ** len(jsup)


def exact_plaquette_avg(
    layout: ParityLayout,
    plq_index: int,
    beta: float,
    gamma: float,
    omega: float,
    expect_fn=None,
) -> float:
    """E_J[<ZZZ(Z)>] for one constraint term by cone coupling enumeration."""
    sched = AngleSchedule((gamma,), (beta,), (omega,))
    members = layout.plaquettes[plq_index].members
    cone = rcc.extract(layout, frozenset(members), 1)
    base = {pair: 1.0 for pair in layout.qubits}
    jsup = sorted(cone.j_support)
    total = 0.0
    for assign in itertools.product((1.0, -1.0), repeat=len(jsup)):
        coup = dict(base)
        for q, val in zip(jsup, assign):
            coup[layout.qubits[q]] = val
        state = _cone_state(layout, coup, sched, cone)
        total += _expect(state, members, expect_fn)
    return total / 2 ** len(jsup)


def _expect(state, support, expect_fn):
    if expect_fn is None:
        return naive_expect(state, support)
    return expect_fn(state, engine.ZObservable(tuple(support)))


def exact_e_pe_avg_p1(
    layout: ParityLayout, c_strength: float, beta: float, gamma: float, omega: float
) -> float:
    """Exact instance average of the encoded cost at depth 1.

    Each term's expectation depends only on its cone's couplings, so the
    average over all Rademacher instances is the mean over 2^|j_support|
    assignments, term by term, exact boundary shapes included.
    """
    total = 0.0
    for q in range(layout.num_qubits):
        total += exact_onsite_avg(layout, q, beta, gamma, omega)
    for pi in range(layout.num_plaquettes):
        total -= c_strength * exact_plaquette_avg(layout, pi, beta, gamma, omega)
    return total


def brute_completion_exists(target: int, rows: List[int]) -> bool:
    """Subset-XOR search over at most 2^len(rows) combinations."""
    for size in range(len(rows) + 1):
        for combo in itertools.combinations(rows, size):
            acc = 0
            for row in combo:
                acc ^= row
            if acc == target:
                return True
    return False


def naive_vanilla_energy(
    inst: SkInstance, gammas: Sequence[float], betas: Sequence[float]
) -> float:
    """Dense-matrix baseline: explicit kron mixers and diagonal phases."""
    n = inst.n
    dim = 1 << n
    diag = np.zeros(dim)
    for idx in range(dim):
        spins = [1 - 2 * ((idx >> k) & 1) for k in range(n)]
        diag[idx] = sum(
            inst.couplings[(i, j)] * spins[i] * spins[j]
            for i in range(n)
            for j in range(i + 1, n)
        )
    rot = lambda b: np.array(
        [[np.cos(b), -1j * np.sin(b)], [-1j * np.sin(b), np.cos(b)]]
    )
    state = np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)
    for gamma, beta in zip(gammas, betas):
        state = np.exp(-1j * gamma * diag) * state
        mixer = np.array([[1.0]])
        for _ in range(n):
            mixer = np.kron(rot(beta), mixer)
        state = mixer @ state
    return float(np.real(np.conj(state) @ (diag * state)))


def fd_gradient(fun, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(x)
    for k in range(x.size):
        delta = np.zeros_like(x)
        delta[k] = step
        grad[k] = (fun(x + delta) - fun(x - delta)) / (2 * step)
    return grad
