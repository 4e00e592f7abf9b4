"""Reverse causal cones of Z-string observables and the counting bounds.

Because every gate in the parity circuit is geometrically local, the
expectation of a Z string only depends on the gates inside its reverse
causal cone. Scanning the layers backwards from the observable: the X
rotation on a supported qubit fails to commute and is kept, after which
that qubit's coupling phase and every constraint phase touching it are
kept as well; retained constraints enlarge the active set for the next
(earlier) layer. The couplings that the cone's expectation actually
depends on are exactly those of the retained coupling phases (the
``j_support``).

Averaged over the symmetric coupling distribution, a J-weighted cone
expectation can vanish identically for one of two reasons: the coupling
sits outside j_support, or the parity of the observable-plus-coupling
qubits cannot be completed to a product of in-cone constraints. The
completion test is membership of an indicator vector in the GF(2) span of
the retained plaquettes, decided by bit-packed Gaussian elimination.
Counting the surviving 2-body terms yields the performance upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

import numpy as np

from . import layout as layout_mod
from .layout import ParityLayout
from .sk import Pair

MODES = ("support_only", "completable")
MAX_PAIR_COUNT_N = 20


@dataclass(frozen=True)
class GateRecord:
    layer: int  # forward layer index, 1-based
    kind: str  # "plaquette" | "zphase" | "xrot"
    target: int  # plaquette index for constraint gates, else qubit id


@dataclass(frozen=True, eq=False)
class Rcc:
    observable_support: FrozenSet[int]
    depth: int
    gates: Tuple[GateRecord, ...]  # forward application order
    qubit_set: FrozenSet[int]
    j_support: FrozenSet[int]  # qubit ids whose coupling enters a retained zphase
    plaquette_set: FrozenSet[int]  # plaquette indices retained at any layer


@lru_cache(maxsize=16)
def _cached_layout(n: int) -> ParityLayout:
    return layout_mod.build(n)


def extract(layout: ParityLayout, observable_support: FrozenSet[int], p: int) -> Rcc:
    """Backward-pass cone of a Z string through p layers.

    The result is deterministic: gates are emitted in forward order, sorted
    by plaquette index / qubit id within each layer slot.
    """
    support = frozenset(observable_support)
    if not support:
        raise ValueError("observable support must be non-empty")
    if p < 0:
        raise ValueError(f"depth must be >= 0, got {p}")

    active = set(support)
    reversed_layers: List[Tuple[int, List[int], List[int], List[int]]] = []
    for layer in range(p, 0, -1):
        xrots = sorted(active)
        zphases = sorted(active)
        touched = sorted({pi for q in active for pi in layout.plaquettes_of_qubit[q]})
        for pi in touched:
            active.update(layout.plaquettes[pi].members)
        reversed_layers.append((layer, touched, zphases, xrots))

    gates: List[GateRecord] = []
    j_support: set = set()
    plaquettes: set = set()
    for layer, touched, zphases, xrots in reversed(reversed_layers):
        gates.extend(GateRecord(layer, "plaquette", pi) for pi in touched)
        gates.extend(GateRecord(layer, "zphase", q) for q in zphases)
        gates.extend(GateRecord(layer, "xrot", q) for q in xrots)
        j_support.update(zphases)
        plaquettes.update(touched)

    return Rcc(
        observable_support=support,
        depth=p,
        gates=tuple(gates),
        qubit_set=frozenset(active),
        j_support=frozenset(j_support),
        plaquette_set=frozenset(plaquettes),
    )


# ---------------------------------------------------------------------------
# GF(2) linear algebra on int bitsets
# ---------------------------------------------------------------------------


def gf2_basis(rows: Iterable[int]) -> Dict[int, int]:
    """Reduced pivot rows of the span, keyed by lowest set bit."""
    pivots: Dict[int, int] = {}
    for row in rows:
        row = _gf2_reduce(row, pivots)
        if row:
            pivots[row & -row] = row
    return pivots


def _gf2_reduce(vec: int, pivots: Dict[int, int]) -> int:
    while vec:
        low = vec & -vec
        row = pivots.get(low)
        if row is None:
            return vec
        vec ^= row
    return 0


def gf2_rank(rows: Iterable[int]) -> int:
    return len(gf2_basis(rows))


def gf2_in_span(target: int, rows: Iterable[int]) -> bool:
    return _gf2_reduce(target, gf2_basis(rows)) == 0


def _qubit_mask(qubits: Iterable[int]) -> int:
    mask = 0
    for q in qubits:
        mask |= 1 << q
    return mask


def plaquette_rank(layout: ParityLayout) -> int:
    """GF(2) rank of the plaquette indicator vectors (cycle-basis check)."""
    return gf2_rank(_qubit_mask(plq.members) for plq in layout.plaquettes)


# ---------------------------------------------------------------------------
# Vanishing criteria for coupling-weighted averages
# ---------------------------------------------------------------------------


def is_vanishing_avg(
    layout: ParityLayout,
    observable_support: Iterable[int],
    coupling_pair: Pair,
    p: int,
) -> bool:
    """True when the instance average of J_c * <Z string> is provably zero.

    Either the coupling never enters the cone, or the observable-plus-
    coupling parity cannot be written as a product of in-cone constraints
    (every retained constraint then flips sign on exactly half of the
    middle-bitstring sum, which cancels it).
    """
    support = frozenset(observable_support)
    cone = extract(layout, support, p)
    cq = layout.qubit(*coupling_pair)
    if cq not in cone.j_support:
        return True
    target = _qubit_mask(support) ^ (1 << cq)
    rows = [_qubit_mask(layout.plaquettes[pi].members) for pi in sorted(cone.plaquette_set)]
    return not gf2_in_span(target, rows)


def _cheb(pair_a: Pair, pair_b: Pair) -> int:
    return max(abs(pair_a[0] - pair_b[0]), abs(pair_a[1] - pair_b[1]))


class _ConeCache:
    """Per-call memo of single-qubit cones; 2-body cones are their unions."""

    def __init__(self, layout: ParityLayout, p: int):
        self.layout = layout
        self.p = p
        self._memo: Dict[int, Rcc] = {}

    def get(self, q: int) -> Rcc:
        cone = self._memo.get(q)
        if cone is None:
            cone = extract(self.layout, frozenset((q,)), self.p)
            self._memo[q] = cone
        return cone


def _completable_2body(
    layout: ParityLayout, cone_a: Rcc, cone_b: Rcc, qa: int, qb: int, cq: int
) -> bool:
    """Span test for the triple, performed in local cone coordinates."""
    plaquettes = sorted(cone_a.plaquette_set | cone_b.plaquette_set)
    involved = sorted(
        {q for pi in plaquettes for q in layout.plaquettes[pi].members} | {qa, qb, cq}
    )
    local = {q: k for k, q in enumerate(involved)}
    rows = [
        _qubit_mask(local[q] for q in layout.plaquettes[pi].members) for pi in plaquettes
    ]
    target = (1 << local[qa]) ^ (1 << local[qb]) ^ (1 << local[cq])
    return gf2_in_span(target, rows)


def count_nonvanishing_2body(n: int, p: int, mode: str = "completable") -> int:
    """Number of triples (t, i<j) whose averaged 2-body term survives.

    ``support_only`` keeps a triple as soon as J_ij enters the cone of the
    paired observable; ``completable`` additionally requires the constraint
    completion to exist (the stricter criterion, used by default).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    layout = _cached_layout(n)
    cones = _ConeCache(layout, p)
    count = 0
    for t in range(n):
        for i in range(n - 1):
            if i == t:
                continue
            for j in range(i + 1, n):
                if j == t:
                    continue
                obs_a = (min(i, t), max(i, t))
                obs_b = (min(t, j), max(t, j))
                # Cheap overestimate first: j_support never leaves the
                # radius-(p-1) neighborhood of the observable qubits.
                if _cheb((i, j), obs_a) > p - 1 and _cheb((i, j), obs_b) > p - 1:
                    continue
                qa = layout.index[obs_a]
                qb = layout.index[obs_b]
                cq = layout.index[(i, j)]
                cone_a = cones.get(qa)
                cone_b = cones.get(qb)
                if cq not in cone_a.j_support and cq not in cone_b.j_support:
                    continue
                if mode == "support_only" or _completable_2body(
                    layout, cone_a, cone_b, qa, qb, cq
                ):
                    count += 1
    return count


def upper_bound_perf(n: int, p: int, mode: str = "completable") -> float:
    """Counting bound on the mean performance ratio at depth p.

    The onsite terms contribute their maximal weight n^(-1/2) - n^(-3/2);
    each surviving 2-body term adds at most 1/n^(5/2). Callers clip the
    result against the physical optimum when plotting.
    """
    count = count_nonvanishing_2body(n, p, mode)
    return n ** -0.5 - n ** -1.5 + count / n ** 2.5


def count_nonvanishing_pairs(n: int, p: int) -> int:
    """Ordered pairs of 2-body triples surviving the j_support criterion.

    Drives the variance-scaling probe: a pair of triples is dropped when
    either coupling lies outside both cones' j_support. The scan is
    O(n^6) in the worst case, hence the size refusal.
    """
    if n > MAX_PAIR_COUNT_N:
        raise ValueError(f"pair counting limited to n<={MAX_PAIR_COUNT_N}, got {n}")
    if n < 3 or p < 1:
        raise ValueError(f"need n >= 3 and p >= 1, got n={n}, p={p}")
    layout = _cached_layout(n)
    cones = _ConeCache(layout, p)
    jsup_masks: List[int] = []
    coupling_bits: List[int] = []
    for t in range(n):
        for i in range(n - 1):
            if i == t:
                continue
            for j in range(i + 1, n):
                if j == t:
                    continue
                qa = layout.qubit(i, t)
                qb = layout.qubit(t, j)
                mask = _qubit_mask(cones.get(qa).j_support) | _qubit_mask(
                    cones.get(qb).j_support
                )
                jsup_masks.append(mask)
                coupling_bits.append(layout.index[(i, j)])
    count = 0
    triples = len(jsup_masks)
    for a in range(triples):
        mask_a = jsup_masks[a]
        bit_a = coupling_bits[a]
        for b in range(triples):
            union = mask_a | jsup_masks[b]
            if (union >> bit_a) & 1 and (union >> coupling_bits[b]) & 1:
                count += 1
    return count


def count_report_rows(
    n_values: Sequence[int], p_values: Sequence[int], mode: str = "completable"
) -> List[Tuple[int, int, str, int, float]]:
    """Rows (n, p, mode, count, upper_bound) for the count report CSV."""
    rows = []
    for n in n_values:
        for p in p_values:
            count = count_nonvanishing_2body(n, p, mode)
            bound = n ** -0.5 - n ** -1.5 + count / n ** 2.5
            rows.append((n, p, mode, count, bound))
    return rows
