"""Deterministic, counter-based random streams.

All randomness in the package flows through Philox4x64 generators keyed by
``numpy.random.SeedSequence``. Philox is a counter-based generator with a
published algorithm, so identical keys produce identical bits on every
platform and numpy release line. Independent sub-streams are derived by
listing the stream coordinates (master seed, n, p, instance index, ...) as
SeedSequence entropy, which is the documented way to obtain statistically
independent children.
"""

from __future__ import annotations

import numpy as np


def stream(*key: int) -> np.random.Generator:
    """Return the Philox generator identified by an integer key tuple."""
    if not key:
        raise ValueError("stream key must contain at least one integer")
    ss = np.random.SeedSequence([int(k) & 0xFFFFFFFFFFFFFFFF for k in key])
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(*key: int) -> int:
    """Collapse a key tuple to a single reproducible 64-bit seed."""
    ss = np.random.SeedSequence([int(k) & 0xFFFFFFFFFFFFFFFF for k in key])
    return int(ss.generate_state(1, np.uint64)[0])
