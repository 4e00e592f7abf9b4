"""Exact statevector evaluation of the three-unitary parity circuit.

Conventions
-----------
A state is a dense complex vector over an explicitly ordered qubit list;
bit k of a basis index addresses ``qubits[k]``, bit value 0 meaning spin
+1. One circuit layer applies, in order, the constraint phases (one
4/3-body Z phase per plaquette, angle omega), the coupling phases (one
Z phase per qubit weighted by its coupling, angle gamma), and finally the
uniform X rotation on every qubit (angle beta), starting from the uniform
superposition.

Two evaluation routes are provided and must agree: the full register, and
a restricted register that replays only the gates retained in a reverse
causal cone (see :mod:`parityqaoa.rcc`). Since the constraint and coupling
phases commute they are fused into a single diagonal multiplication; the
mixer is an in-place single-qubit butterfly per qubit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Set, Tuple, TYPE_CHECKING

import numpy as np

from .layout import ParityLayout
from .schedule import AngleSchedule
from .sk import SkInstance

if TYPE_CHECKING:  # pragma: no cover
    from .rcc import Rcc

# Dense registers above this size are refused; restricted-cone evaluation
# remains available for individual observables.
MAX_FULL_REGISTER = 28
MAX_VANILLA_N = 24

NORM_TOL = 1e-12


class ResourceLimitError(RuntimeError):
    """A requested dense register exceeds the configured cap."""


@dataclass
class StateVector:
    amplitudes: np.ndarray
    qubits: Tuple[int, ...]

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class ZObservable:
    """A product of Z operators over `support`, scaled by `coefficient`."""

    support: Tuple[int, ...]
    coefficient: float = 1.0

    def __post_init__(self) -> None:
        if len(set(self.support)) != len(self.support):
            raise ValueError(f"observable support has repeats: {self.support}")


def uniform_state(qubits: Sequence[int]) -> StateVector:
    m = len(qubits)
    amp = np.full(1 << m, 1.0 / np.sqrt(1 << m), dtype=np.complex128)
    return StateVector(amp, tuple(qubits))


def _apply_mixer(amp: np.ndarray, beta: float, bitpos: Iterable[int]) -> None:
    """In-place e^{-i beta X} on each listed bit position."""
    c = np.cos(beta)
    s = -1j * np.sin(beta)
    for q in bitpos:
        a = amp.reshape(-1, 2, 1 << q)
        lo = a[:, 0, :].copy()
        hi = a[:, 1, :]
        a[:, 0, :] = c * lo + s * hi
        a[:, 1, :] = s * lo + c * hi


def _sign_vector(num_qubits: int, bitpos: Iterable[int]) -> np.ndarray:
    """(-1)^(parity of the listed bits) over all basis indices."""
    mask = 0
    for q in bitpos:
        mask |= 1 << q
    idx = np.arange(1 << num_qubits, dtype=np.uint32)
    parity = (np.bitwise_count(idx & np.uint32(mask)) & 1).astype(np.int8)
    return (1 - 2 * parity).astype(np.float64)


def _full_diagonals(layout: ParityLayout, inst: SkInstance) -> Tuple[np.ndarray, np.ndarray]:
    """Coupling field sum_q J_q s_q and constraint field sum_plq prod(s)."""
    m = layout.num_qubits
    h1 = np.zeros(1 << m)
    for q, pair in enumerate(layout.qubits):
        h1 += inst.couplings[pair] * _sign_vector(m, (q,))
    c = np.zeros(1 << m)
    for plq in layout.plaquettes:
        c += _sign_vector(m, plq.members)
    return h1, c


def evolve(
    layout: ParityLayout,
    inst: SkInstance,
    sched: AngleSchedule,
    qubit_subset: Optional[Set[int]] = None,
    gate_filter: Optional["Rcc"] = None,
) -> StateVector:
    """Run the circuit on the full register, or replay one cone of it.

    With ``gate_filter`` the register shrinks to the cone's qubit set and
    only the retained gates act (their layer structure is preserved);
    ``qubit_subset``, when also given, must equal that set.
    """
    if inst.n != layout.n:
        raise ValueError("instance size does not match layout")
    if gate_filter is not None:
        if gate_filter.depth != sched.p:
            raise ValueError(
                f"cone depth {gate_filter.depth} does not match schedule p={sched.p}"
            )
        if qubit_subset is not None and set(qubit_subset) != set(gate_filter.qubit_set):
            raise ValueError("qubit_subset inconsistent with gate_filter qubit set")
        return _evolve_cone(layout, inst, sched, gate_filter)
    if qubit_subset is not None:
        raise ValueError("qubit_subset without gate_filter is ill-defined")
    return _evolve_full(layout, inst, sched)


def _evolve_full(layout: ParityLayout, inst: SkInstance, sched: AngleSchedule) -> StateVector:
    m = layout.num_qubits
    if m > MAX_FULL_REGISTER:
        raise ResourceLimitError(
            f"full register of {m} qubits exceeds the cap of {MAX_FULL_REGISTER}"
        )
    h1, c = _full_diagonals(layout, inst)
    state = uniform_state(range(m))
    amp = state.amplitudes
    for layer in range(sched.p):
        amp *= np.exp(-1j * (sched.omegas[layer] * c + sched.gammas[layer] * h1))
        _apply_mixer(amp, sched.betas[layer], range(m))
    return state


def _evolve_cone(
    layout: ParityLayout, inst: SkInstance, sched: AngleSchedule, cone: "Rcc"
) -> StateVector:
    register = tuple(sorted(cone.qubit_set))
    local = {q: k for k, q in enumerate(register)}
    m = len(register)
    if m > MAX_FULL_REGISTER:
        raise ResourceLimitError(f"cone register of {m} qubits exceeds the cap")

    state = uniform_state(register)
    amp = state.amplitudes
    by_layer: List[List] = [[] for _ in range(sched.p)]
    for gate in cone.gates:
        by_layer[gate.layer - 1].append(gate)
    for layer in range(sched.p):
        phase = np.zeros(1 << m)
        xrots: List[int] = []
        for gate in by_layer[layer]:
            if gate.kind == "plaquette":
                members = layout.plaquettes[gate.target].members
                phase += sched.omegas[layer] * _sign_vector(m, (local[q] for q in members))
            elif gate.kind == "zphase":
                coupling = inst.couplings[layout.qubits[gate.target]]
                phase += sched.gammas[layer] * coupling * _sign_vector(m, (local[gate.target],))
            else:
                xrots.append(local[gate.target])
        amp *= np.exp(-1j * phase)
        _apply_mixer(amp, sched.betas[layer], xrots)
    return state


def expect(state: StateVector, obs: ZObservable) -> float:
    """Exact <psi| coefficient * prod_q Z_q |psi>."""
    pos = []
    order = {q: k for k, q in enumerate(state.qubits)}
    for q in obs.support:
        if q not in order:
            raise ValueError(f"observable qubit {q} outside register {state.qubits}")
        pos.append(order[q])
    signs = _sign_vector(state.num_qubits, pos)
    prob = np.abs(state.amplitudes) ** 2
    return float(obs.coefficient * (prob @ signs))


def pe_terms(layout: ParityLayout, inst: SkInstance, c_strength: float) -> List[ZObservable]:
    """Coupling terms plus penalty terms of the encoded cost function."""
    terms = [
        ZObservable((q,), inst.couplings[pair]) for q, pair in enumerate(layout.qubits)
    ]
    terms.extend(
        ZObservable(plq.members, -c_strength) for plq in layout.plaquettes
    )
    return terms


def st_terms(layout: ParityLayout, inst: SkInstance) -> List[ZObservable]:
    """Spanning-tree cost split into 1-body and genuine 2-body terms.

    Aggregating the two lines through each pair gives the 1-body weight
    2 J_ij / n; the remaining terms pair the qubits (i,t) and (t,j) for
    every center t and couple with weight J_ij / n.
    """
    n = layout.n
    terms = [
        ZObservable((q,), 2.0 * inst.couplings[pair] / n)
        for q, pair in enumerate(layout.qubits)
    ]
    for t in range(n):
        for (i, j), coupling in sorted(inst.couplings.items()):
            if i == t or j == t:
                continue
            terms.append(
                ZObservable((layout.qubit(i, t), layout.qubit(t, j)), coupling / n)
            )
    return terms


def _sum_terms_full(
    layout: ParityLayout, inst: SkInstance, sched: AngleSchedule, terms: List[ZObservable]
) -> float:
    state = _evolve_full(layout, inst, sched)
    prob = np.abs(state.amplitudes) ** 2
    total = 0.0
    for obs in terms:
        signs = _sign_vector(state.num_qubits, obs.support)
        total += obs.coefficient * float(prob @ signs)
    return total


def _sum_terms_rcc(
    layout: ParityLayout, inst: SkInstance, sched: AngleSchedule, terms: List[ZObservable]
) -> float:
    from .rcc import extract

    total = 0.0
    for obs in terms:
        cone = extract(layout, frozenset(obs.support), sched.p)
        state = _evolve_cone(layout, inst, sched, cone)
        total += expect(state, obs)
    return total


def energy_pe(
    layout: ParityLayout,
    inst: SkInstance,
    sched: AngleSchedule,
    c_strength: float,
    backend: str = "full",
) -> float:
    """<encoded cost> on the evolved state; penalty strength must be >= 0."""
    if c_strength < 0:
        raise ValueError(f"penalty strength must be >= 0, got {c_strength}")
    terms = pe_terms(layout, inst, c_strength)
    return _dispatch(layout, inst, sched, terms, backend)


def energy_st(
    layout: ParityLayout, inst: SkInstance, sched: AngleSchedule, backend: str = "full"
) -> float:
    """<mean decoded logical energy> on the evolved state."""
    terms = st_terms(layout, inst)
    return _dispatch(layout, inst, sched, terms, backend)


def perf_st(
    layout: ParityLayout, inst: SkInstance, sched: AngleSchedule, backend: str = "full"
) -> float:
    """Negative decoded energy density, the figure of merit of the circuit."""
    return -energy_st(layout, inst, sched, backend=backend) / layout.n ** 1.5


def _dispatch(layout, inst, sched, terms, backend) -> float:
    if backend == "full":
        return _sum_terms_full(layout, inst, sched, terms)
    if backend == "rcc":
        return _sum_terms_rcc(layout, inst, sched, terms)
    raise ValueError(f"unknown backend {backend!r}")


def expected_broken_constraints(layout: ParityLayout, state: StateVector) -> float:
    """Expected number of violated plaquettes, (P - sum <prod Z>)/2."""
    prob = np.abs(state.amplitudes) ** 2
    order = {q: k for k, q in enumerate(state.qubits)}
    total = 0.0
    for plq in layout.plaquettes:
        signs = _sign_vector(state.num_qubits, (order[q] for q in plq.members))
        total += float(prob @ signs)
    return (layout.num_plaquettes - total) / 2.0


# ---------------------------------------------------------------------------
# Vanilla (unencoded) QAOA on the n logical qubits, used as the baseline.
# ---------------------------------------------------------------------------


def _logical_diagonal(inst: SkInstance) -> np.ndarray:
    n = inst.n
    h = np.zeros(1 << n)
    for (i, j), coupling in inst.couplings.items():
        h += coupling * _sign_vector(n, (i, j))
    return h


def evolve_vanilla(
    inst: SkInstance, gammas: Sequence[float], betas: Sequence[float]
) -> StateVector:
    """Alternate the diagonal cost phase and the uniform X mixer."""
    if inst.n > MAX_VANILLA_N:
        raise ResourceLimitError(
            f"dense baseline limited to n<={MAX_VANILLA_N}, got {inst.n}"
        )
    if len(gammas) != len(betas) or len(gammas) == 0:
        raise ValueError("gammas and betas must share a length >= 1")
    h = _logical_diagonal(inst)
    state = uniform_state(range(inst.n))
    amp = state.amplitudes
    for gamma, beta in zip(gammas, betas):
        amp *= np.exp(-1j * gamma * h)
        _apply_mixer(amp, beta, range(inst.n))
    return state


def vanilla_energy(inst: SkInstance, gammas: Sequence[float], betas: Sequence[float]) -> float:
    state = evolve_vanilla(inst, gammas, betas)
    h = _logical_diagonal(inst)
    prob = np.abs(state.amplitudes) ** 2
    return float(prob @ h)


def vanilla_perf(inst: SkInstance, gammas: Sequence[float], betas: Sequence[float]) -> float:
    return -vanilla_energy(inst, gammas, betas) / inst.n ** 1.5


class VanillaEvaluator:
    """Baseline evaluator with the cost diagonal cached per instance."""

    def __init__(self, inst: SkInstance):
        if inst.n > MAX_VANILLA_N:
            raise ResourceLimitError(
                f"dense baseline limited to n<={MAX_VANILLA_N}, got {inst.n}"
            )
        self.inst = inst
        self._h = _logical_diagonal(inst)

    def energy(self, gammas: Sequence[float], betas: Sequence[float]) -> float:
        n = self.inst.n
        amp = np.full(1 << n, 1.0 / np.sqrt(1 << n), dtype=np.complex128)
        for gamma, beta in zip(gammas, betas):
            amp *= np.exp(-1j * gamma * self._h)
            _apply_mixer(amp, beta, range(n))
        return float(np.abs(amp) ** 2 @ self._h)

    def perf(self, gammas: Sequence[float], betas: Sequence[float]) -> float:
        return -self.energy(gammas, betas) / self.inst.n ** 1.5
