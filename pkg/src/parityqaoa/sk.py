"""All-to-all Ising spin-glass instances and their exact solution.

An instance couples every pair of the ``n`` logical spins; the cost of a
spin configuration ``z`` (entries in {-1,+1}) is ``sum_{i<j} J_ij z_i z_j``.
Couplings default to Rademacher (+/-1) draws; a Gaussian variant is kept
behind a flag since the scaling statements only require a symmetric
distribution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Tuple

import numpy as np

from .rng import stream

Pair = Tuple[int, int]

# 2^(n(n-1)/2) instances are materialized by enumerate_all; 24 coupling bits
# (n = 7) is the largest grid that stays cheap to scan exhaustively.
MAX_ENUM_BITS = 24
MAX_GROUND_STATE_N = 24


def pair_list(n: int) -> List[Pair]:
    """Ordered pairs (i, j), i < j, in ascending lexicographic order."""
    return [(i, j) for i in range(n - 1) for j in range(i + 1, n)]


@dataclass(frozen=True)
class SkInstance:
    """A spin-glass problem: n spins plus one coupling per pair i < j."""

    n: int
    couplings: Dict[Pair, float] = field(repr=False)
    seed: int = 0

    def __post_init__(self) -> None:
        expected = set(pair_list(self.n))
        if set(self.couplings) != expected:
            raise ValueError(
                f"instance must define exactly one coupling per pair i<j of "
                f"{self.n} spins; got {len(self.couplings)} entries"
            )

    def coupling_vector(self) -> np.ndarray:
        """Couplings as a float array in pair_list order."""
        return np.array([self.couplings[p] for p in pair_list(self.n)])


def _check_config(inst: SkInstance, cfg: np.ndarray) -> np.ndarray:
    cfg = np.asarray(cfg)
    if cfg.shape != (inst.n,):
        raise ValueError(f"config length {cfg.shape} does not match n={inst.n}")
    return cfg


def sample(n: int, dist: str = "rademacher", seed: int = 0) -> SkInstance:
    """Draw an instance with i.i.d. symmetric couplings.

    Deterministic in (n, dist, seed): the couplings are read from the
    Philox stream keyed by the seed, in pair_list order.
    """
    if n < 2:
        raise ValueError(f"need at least 2 spins, got n={n}")
    rng = stream(seed)
    pairs = pair_list(n)
    if dist == "rademacher":
        values = rng.integers(0, 2, size=len(pairs)) * 2 - 1
        values = values.astype(float)
    elif dist == "gaussian":
        values = rng.standard_normal(len(pairs))
    else:
        raise ValueError(f"unknown coupling distribution {dist!r}")
    return SkInstance(n=n, couplings=dict(zip(pairs, values)), seed=seed)


def enumerate_all(n: int) -> Iterator[SkInstance]:
    """Yield every Rademacher instance on n spins exactly once.

    Instance m maps bit k of m to the k-th pair in pair_list order,
    bit 0 -> J = +1 and bit 1 -> J = -1.
    """
    pairs = pair_list(n)
    nbits = len(pairs)
    if nbits > MAX_ENUM_BITS:
        raise ValueError(
            f"refusing to enumerate 2^{nbits} instances (limit 2^{MAX_ENUM_BITS})"
        )
    for m in range(1 << nbits):
        coup = {p: 1.0 - 2.0 * ((m >> k) & 1) for k, p in enumerate(pairs)}
        yield SkInstance(n=n, couplings=coup, seed=0)


def logical_energy(inst: SkInstance, cfg: np.ndarray) -> float:
    """Cost sum_{i<j} J_ij z_i z_j of one configuration."""
    cfg = _check_config(inst, cfg)
    total = 0.0
    for (i, j), coupling in inst.couplings.items():
        total += coupling * cfg[i] * cfg[j]
    return float(total)


def _spin_table(n: int) -> np.ndarray:
    """Spins of all 2^(n-1) configs with z_0 = +1, shape (2^(n-1), n).

    Row m encodes z_i (i >= 1) from bit (n-1-i) of m, so ascending m is
    ascending lexicographic order of the sign vector (+1 before -1).
    """
    m = np.arange(1 << (n - 1), dtype=np.uint32)
    spins = np.empty((m.size, n), dtype=np.int8)
    spins[:, 0] = 1
    for i in range(1, n):
        spins[:, i] = 1 - 2 * ((m >> (n - 1 - i)) & 1).astype(np.int8)
    return spins


def ground_state(inst: SkInstance) -> Tuple[float, np.ndarray]:
    """Exact minimum energy and its configuration.

    The global spin flip is gauge-fixed by z_0 = +1; among degenerate minima
    the lexicographically smallest sign vector (+1 sorting before -1) is
    returned so golden files stay stable.
    """
    if inst.n > MAX_GROUND_STATE_N:
        raise ValueError(
            f"exact ground state limited to n<={MAX_GROUND_STATE_N}, got {inst.n}"
        )
    spins = _spin_table(inst.n)
    energies = np.zeros(spins.shape[0])
    for (i, j), coupling in inst.couplings.items():
        energies += coupling * (spins[:, i] * spins[:, j])
    best = int(np.argmin(energies))
    return float(energies[best]), spins[best].astype(np.int8)


def gauge_transform(inst: SkInstance, signs: np.ndarray) -> SkInstance:
    """Flip couplings by a sign vector: J'_ij = s_i s_j J_ij.

    The energy spectrum is untouched (configurations map as z -> s*z),
    which makes this the standard randomization tool for invariance tests.
    """
    signs = _check_config(inst, signs)
    if not np.all(np.abs(signs) == 1):
        raise ValueError("gauge signs must be +/-1")
    coup = {
        (i, j): float(signs[i] * signs[j] * val)
        for (i, j), val in inst.couplings.items()
    }
    return SkInstance(n=inst.n, couplings=coup, seed=inst.seed)


def to_json(inst: SkInstance) -> str:
    """Serialize as {"n":, "couplings": [[i,j,J],...], "seed":}, pairs ascending."""
    payload = {
        "n": inst.n,
        "couplings": [[i, j, inst.couplings[(i, j)]] for i, j in pair_list(inst.n)],
        "seed": inst.seed,
    }
    return json.dumps(payload)


def from_json(text: str) -> SkInstance:
    payload = json.loads(text)
    coup = {(int(i), int(j)): float(v) for i, j, v in payload["couplings"]}
    return SkInstance(n=int(payload["n"]), couplings=coup, seed=int(payload.get("seed", 0)))
