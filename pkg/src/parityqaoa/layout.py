"""The parity triangle: qubits, plaquette constraints, and qubit lines.

Each pair (i, j) of logical spins becomes one physical "parity qubit"
carrying the product Z_i Z_j. Arranged on the strictly upper-triangular
half of an n x n grid this gives K = n(n-1)/2 qubits, and the unit cells
of the grid give P = (n-1)(n-2)/2 constraint plaquettes: 4-body in the
bulk, 3-body along the bottom row where one corner falls onto the
diagonal. The plaquettes form a cycle basis of the complete logical graph,
so a parity bitstring satisfying all of them is a consistent encoding of
some logical configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .sk import Pair, SkInstance, pair_list

SQUARE = "square"
TRIANGLE = "triangle"


@dataclass(frozen=True)
class Plaquette:
    """One constraint cell, labelled by its leftmost (lowest-column) qubit."""

    label: Pair
    members: Tuple[int, ...]  # parity-qubit ids, 4 for squares, 3 for triangles
    kind: str

    def __post_init__(self) -> None:
        expected = 4 if self.kind == SQUARE else 3
        if self.kind not in (SQUARE, TRIANGLE) or len(self.members) != expected:
            raise ValueError(f"bad plaquette {self.label}: {self.kind}/{self.members}")


@dataclass(frozen=True, eq=False)  # identity hash: layouts are built once and shared
class ParityLayout:
    n: int
    qubits: Tuple[Pair, ...]  # qubit id -> pair, ascending lexicographic
    index: Dict[Pair, int]  # pair -> qubit id
    positions: Tuple[Tuple[int, int], ...]  # qubit id -> (row, col)
    plaquettes: Tuple[Plaquette, ...]
    lines: Tuple[Tuple[int, ...], ...]  # line t -> qubit ids, ordered by partner index
    plaquettes_of_qubit: Tuple[Tuple[int, ...], ...]  # qubit id -> plaquette indices

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    @property
    def num_plaquettes(self) -> int:
        return len(self.plaquettes)

    def qubit(self, i: int, j: int) -> int:
        """Qubit id of the (unordered) logical pair {i, j}."""
        return self.index[(i, j) if i < j else (j, i)]


def build(n: int) -> ParityLayout:
    """Construct the triangle for n logical spins.

    Grid convention: qubit (i, j) sits at row j - i - 1 and column i, so
    the bottom row r = 0 holds the pairs of adjacent indices and with them
    the triangular plaquettes.
    """
    if n < 3:
        raise ValueError(f"no constraints exist below n=3 (got n={n})")
    qubits = tuple(pair_list(n))
    index = {pair: q for q, pair in enumerate(qubits)}
    positions = tuple((j - i - 1, i) for i, j in qubits)

    plaquettes: List[Plaquette] = []
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            members = [index[(i, j)], index[(i, j + 1)], index[(i + 1, j + 1)]]
            if i + 1 < j:
                members.append(index[(i + 1, j)])
                kind = SQUARE
            else:
                kind = TRIANGLE
            plaquettes.append(Plaquette((i, j), tuple(sorted(members)), kind))

    lines = tuple(
        tuple(index[(min(i, t), max(i, t))] for i in range(n) if i != t)
        for t in range(n)
    )

    by_qubit: List[List[int]] = [[] for _ in qubits]
    for pidx, plq in enumerate(plaquettes):
        for q in plq.members:
            by_qubit[q].append(pidx)

    return ParityLayout(
        n=n,
        qubits=qubits,
        index=index,
        positions=positions,
        plaquettes=tuple(plaquettes),
        lines=tuple(lines),
        plaquettes_of_qubit=tuple(tuple(v) for v in by_qubit),
    )


def _check_parity_config(layout: ParityLayout, pc: np.ndarray) -> np.ndarray:
    pc = np.asarray(pc)
    if pc.shape != (layout.num_qubits,):
        raise ValueError(
            f"parity config length {pc.shape} does not match K={layout.num_qubits}"
        )
    return pc


def encode(layout: ParityLayout, cfg: np.ndarray) -> np.ndarray:
    """Parity bitstring of a logical configuration: bit(i,j) = z_i z_j."""
    cfg = np.asarray(cfg)
    if cfg.shape != (layout.n,):
        raise ValueError(f"config length {cfg.shape} does not match n={layout.n}")
    return np.array([cfg[i] * cfg[j] for i, j in layout.qubits], dtype=cfg.dtype)


def decode(layout: ParityLayout, pc: np.ndarray, t: int) -> np.ndarray:
    """Read a logical configuration off qubit line t.

    The logical spin t is pinned to +1 (the global flip is a symmetry of
    the cost, so the choice is arbitrary but deterministic); every other
    spin is the measured parity against t. Broken constraints make the
    result depend on t.
    """
    pc = _check_parity_config(layout, pc)
    if not 0 <= t < layout.n:
        raise ValueError(f"line index {t} outside 0..{layout.n - 1}")
    cfg = np.empty(layout.n, dtype=np.int8)
    cfg[t] = 1
    for i in range(layout.n):
        if i != t:
            cfg[i] = pc[layout.qubit(i, t)]
    return cfg


def st_cost_of_bitstring(layout: ParityLayout, inst: SkInstance, pc: np.ndarray) -> float:
    """Mean logical energy of decoding pc along all n qubit lines.

    Equals (1/n) sum_t sum_{i<j} J_ij bit(i,t) bit(t,j) with bit(t,t) = 1;
    for an encoded (constraint-satisfying) string every line decodes to the
    same configuration and this reduces to its logical energy.
    """
    pc = _check_parity_config(layout, pc)
    if inst.n != layout.n:
        raise ValueError("instance size does not match layout")
    total = 0.0
    for t in range(layout.n):
        for (i, j), coupling in inst.couplings.items():
            bit_it = 1.0 if i == t else pc[layout.qubit(i, t)]
            bit_tj = 1.0 if j == t else pc[layout.qubit(t, j)]
            total += coupling * bit_it * bit_tj
    return total / layout.n


def broken_constraints(layout: ParityLayout, pc: np.ndarray) -> int:
    """Number of plaquettes whose member-bit product is -1."""
    pc = _check_parity_config(layout, pc)
    broken = 0
    for plq in layout.plaquettes:
        prod = 1
        for q in plq.members:
            prod *= int(pc[q])
        if prod == -1:
            broken += 1
    return broken


def to_json(layout: ParityLayout) -> str:
    """Dump qubits, positions, plaquettes, and lines for debugging/plots."""
    payload = {
        "n": layout.n,
        "qubits": [list(p) for p in layout.qubits],
        "positions": [list(p) for p in layout.positions],
        "plaquettes": [
            {"label": list(p.label), "members": list(p.members), "kind": p.kind}
            for p in layout.plaquettes
        ],
        "lines": [list(line) for line in layout.lines],
    }
    return json.dumps(payload)
