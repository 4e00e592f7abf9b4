"""JIT-compiled dense evaluation for the optimization hot loop.

Semantically identical to the full-register route in :mod:`engine` (the
test suite pins the agreement to 1e-10), but the three cost diagonals are
precomputed per instance, the two commuting phase layers collapse into
one table lookup when the couplings are integers, and the mixer runs as
an in-place compiled butterfly. Gradients come from one reverse sweep
(adjoint method): after the forward pass, layers are peeled off the state
and the costate together, which prices the full gradient at roughly three
forward evaluations instead of one per parameter.

Reductions are single-threaded on purpose: results are then independent
of the number of compiler threads, which keeps experiment records
byte-reproducible. Parallel kernels are purely elementwise.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np
from numba import njit, prange

from .layout import ParityLayout
from .schedule import AngleSchedule
from .sk import SkInstance
from .engine import MAX_FULL_REGISTER, ResourceLimitError


@njit(cache=True, parallel=True, fastmath=True)
def _mix2(psi, cosb, msinb, q):
    """Radix-2 butterfly: e^{-i beta X} on the single bit position q."""
    step = 1 << q
    npairs = psi.shape[0] >> 1
    for t in prange(npairs):
        blk = t >> q
        off = t & (step - 1)
        i0 = (blk << (q + 1)) | off
        i1 = i0 | step
        u = psi[i0]
        v = psi[i1]
        psi[i0] = cosb * u + msinb * v
        psi[i1] = msinb * u + cosb * v


@njit(cache=True, parallel=True, fastmath=True)
def _mix4(psi, c2, cs, s2, q):
    """Radix-4 butterfly: the same X rotation on bits q and q+1 at once.

    One memory pass replaces two; the rotation factors are c2 = cos^2,
    cs = -i cos sin, s2 = -sin^2 of the mixing angle.
    """
    step = 1 << q
    nquads = psi.shape[0] >> 2
    for t in prange(nquads):
        blk = t >> q
        off = t & (step - 1)
        i0 = (blk << (q + 2)) | off
        i1 = i0 | step
        i2 = i0 | (step << 1)
        i3 = i1 | (step << 1)
        t0 = psi[i0]
        t1 = psi[i1]
        t2 = psi[i2]
        t3 = psi[i3]
        a = t1 + t2
        b = t0 + t3
        psi[i0] = c2 * t0 + cs * a + s2 * t3
        psi[i1] = cs * b + c2 * t1 + s2 * t2
        psi[i2] = cs * b + s2 * t1 + c2 * t2
        psi[i3] = s2 * t0 + cs * a + c2 * t3


def _mixer(psi, beta: float, nq: int) -> None:
    ctype = psi.dtype.type
    cosb = ctype(np.cos(beta))
    msinb = ctype(-1j * np.sin(beta))
    c2 = ctype(cosb * cosb)
    cs = ctype(cosb * msinb)
    s2 = ctype(msinb * msinb)
    q = 0
    if nq & 1:
        _mix2(psi, cosb, msinb, 0)
        q = 1
    while q < nq:
        _mix4(psi, c2, cs, s2, q)
        q += 2


@njit(cache=True, parallel=True, fastmath=True)
def _undo2_hx(phi, lam, cosb, msinb, partial, q):
    """Radix-2 undo of one mixer bit on state and costate, harvesting the
    X overlap: partial accumulates Im(conj(lam) . X_q phi), evaluated
    before the undo (the overlap commutes with the rotations, so any stage
    of the sweep gives the same value). Writes are elementwise and passes
    sequential, so results do not depend on thread count.
    """
    step = 1 << q
    npairs = phi.shape[0] >> 1
    for t in prange(npairs):
        blk = t >> q
        off = t & (step - 1)
        i0 = (blk << (q + 1)) | off
        i1 = i0 | step
        p0 = phi[i0]
        p1 = phi[i1]
        l0 = lam[i0]
        l1 = lam[i1]
        partial[i0] += (
            l0.real * p1.imag
            - l0.imag * p1.real
            + l1.real * p0.imag
            - l1.imag * p0.real
        )
        phi[i0] = cosb * p0 + msinb * p1
        phi[i1] = msinb * p0 + cosb * p1
        lam[i0] = cosb * l0 + msinb * l1
        lam[i1] = msinb * l0 + cosb * l1


@njit(cache=True, parallel=True, fastmath=True)
def _undo4_hx(phi, lam, cosb, msinb, c2, cs, s2, partial, q):
    """Radix-4 variant of _undo2_hx covering bits q and q+1 in one pass."""
    step = 1 << q
    nquads = phi.shape[0] >> 2
    for t in prange(nquads):
        blk = t >> q
        off = t & (step - 1)
        i0 = (blk << (q + 2)) | off
        i1 = i0 | step
        i2 = i0 | (step << 1)
        i3 = i1 | (step << 1)
        p0 = phi[i0]
        p1 = phi[i1]
        p2 = phi[i2]
        p3 = phi[i3]
        l0 = lam[i0]
        l1 = lam[i1]
        l2 = lam[i2]
        l3 = lam[i3]
        partial[i0] += (
            l0.real * (p1.imag + p2.imag)
            - l0.imag * (p1.real + p2.real)
            + l1.real * (p0.imag + p3.imag)
            - l1.imag * (p0.real + p3.real)
            + l2.real * (p3.imag + p0.imag)
            - l2.imag * (p3.real + p0.real)
            + l3.real * (p2.imag + p1.imag)
            - l3.imag * (p2.real + p1.real)
        )
        a = p1 + p2
        b = p0 + p3
        phi[i0] = c2 * p0 + cs * a + s2 * p3
        phi[i1] = cs * b + c2 * p1 + s2 * p2
        phi[i2] = cs * b + s2 * p1 + c2 * p2
        phi[i3] = s2 * p0 + cs * a + c2 * p3
        a = l1 + l2
        b = l0 + l3
        lam[i0] = c2 * l0 + cs * a + s2 * l3
        lam[i1] = cs * b + c2 * l1 + s2 * l2
        lam[i2] = cs * b + s2 * l1 + c2 * l2
        lam[i3] = s2 * l0 + cs * a + c2 * l3


def _undo_mixer_pair_hx(phi, lam, beta: float, partial, nq: int) -> None:
    """Undo a full mixer layer on both arrays, harvesting the beta overlap."""
    ctype = phi.dtype.type
    cosb = ctype(np.cos(-beta))
    msinb = ctype(-1j * np.sin(-beta))
    c2 = ctype(cosb * cosb)
    cs = ctype(cosb * msinb)
    s2 = ctype(msinb * msinb)
    q = 0
    if nq & 1:
        _undo2_hx(phi, lam, cosb, msinb, partial, 0)
        q = 1
    while q < nq:
        _undo4_hx(phi, lam, cosb, msinb, c2, cs, s2, partial, q)
        q += 2


@njit(cache=True, parallel=True, fastmath=True)
def _gather_mul(psi, table, idx):
    for i in prange(psi.shape[0]):
        psi[i] *= table[idx[i]]


@njit(cache=True, parallel=True, fastmath=True)
def _phase_mul(psi, h1, cvec, gamma, omega):
    for i in prange(psi.shape[0]):
        ang = gamma * h1[i] + omega * cvec[i]
        psi[i] *= complex(math.cos(ang), -math.sin(ang))


@njit(cache=True, fastmath=True)
def _abs2_dot(psi, diag):
    acc = 0.0
    for i in range(psi.shape[0]):
        a = psi[i]
        acc += (a.real * a.real + a.imag * a.imag) * diag[i]
    return acc


@njit(cache=True, fastmath=True)
def _imag_overlap(lam, phi, diag):
    acc = 0.0
    for i in range(lam.shape[0]):
        l = lam[i]
        f = phi[i]
        acc += diag[i] * (l.real * f.imag - l.imag * f.real)
    return acc


@njit(cache=True, parallel=True, fastmath=True)
def _make_costate(out, psi, d1, d2, w2):
    for i in prange(psi.shape[0]):
        out[i] = psi[i] * (d1[i] + w2 * d2[i])


@njit(cache=True, parallel=True)
def _build_diagonals(nq, n, jvals, plq_masks, st_masks, st_weights, h1, cvec, hst):
    """One pass over the basis filling the three cost diagonals.

    h1: coupling field, cvec: constraint field, hst: decoded-energy field
    (already divided by n). Bit value 0 of a basis index means spin +1.
    """
    dim = 1 << nq
    for b in prange(dim):
        acc1 = 0.0
        for q in range(nq):
            acc1 += jvals[q] * (1.0 - 2.0 * ((b >> q) & 1))
        accc = 0.0
        for k in range(plq_masks.shape[0]):
            v = b & plq_masks[k]
            v ^= v >> 16
            v ^= v >> 8
            v ^= v >> 4
            v ^= v >> 2
            v ^= v >> 1
            accc += 1.0 - 2.0 * (v & 1)
        acc2 = 0.0
        for k in range(st_masks.shape[0]):
            v = b & st_masks[k]
            v ^= v >> 16
            v ^= v >> 8
            v ^= v >> 4
            v ^= v >> 2
            v ^= v >> 1
            acc2 += st_weights[k] * (1.0 - 2.0 * (v & 1))
        h1[b] = acc1
        cvec[b] = accc
        hst[b] = (2.0 * acc1 + acc2) / n


class Evaluator:
    """Per-instance dense evaluator over the full parity register.

    Parameters are packed as [gammas..., betas..., omegas...] in gradient
    vectors, matching the optimizer's packing.
    """

    def __init__(
        self,
        layout: ParityLayout,
        inst: SkInstance,
        dtype: np.dtype = np.complex128,
    ):
        if inst.n != layout.n:
            raise ValueError("instance size does not match layout")
        nq = layout.num_qubits
        if nq > MAX_FULL_REGISTER:
            raise ResourceLimitError(
                f"full register of {nq} qubits exceeds the cap of {MAX_FULL_REGISTER}"
            )
        self.layout = layout
        self.inst = inst
        self.nq = nq
        self.dtype = np.dtype(dtype)
        if self.dtype not in (np.dtype(np.complex64), np.dtype(np.complex128)):
            raise ValueError(f"dtype must be complex64/complex128, got {dtype}")

        jvals = np.array([inst.couplings[pair] for pair in layout.qubits])
        plq_masks = np.array(
            [sum(1 << q for q in plq.members) for plq in layout.plaquettes],
            dtype=np.int64,
        )
        st_masks = []
        st_weights = []
        for t in range(layout.n):
            for (i, j), coupling in sorted(inst.couplings.items()):
                if i == t or j == t:
                    continue
                st_masks.append(
                    (1 << layout.qubit(i, t)) | (1 << layout.qubit(t, j))
                )
                st_weights.append(coupling)
        dim = 1 << nq
        self.h1 = np.empty(dim)
        self.cvec = np.empty(dim)
        self.hst = np.empty(dim)
        _build_diagonals(
            nq,
            float(layout.n),
            jvals,
            plq_masks,
            np.array(st_masks, dtype=np.int64),
            np.array(st_weights, dtype=np.float64),
            self.h1,
            self.cvec,
            self.hst,
        )

        # Integer couplings let each phase layer become a small-table gather.
        self._integer_couplings = bool(np.all(jvals == np.round(jvals)))
        if self._integer_couplings:
            jspan = int(np.sum(np.abs(np.round(jvals)).astype(np.int64)))
            self._h1_span = max(jspan, 1)
            self._c_span = layout.num_plaquettes
            width = 2 * self._c_span + 1
            ih = np.round(self.h1).astype(np.int64) + self._h1_span
            ic = np.round(self.cvec).astype(np.int64) + self._c_span
            self._combo_idx = (ih * width + ic).astype(np.int32)
            hvals = np.arange(-self._h1_span, self._h1_span + 1, dtype=np.float64)
            cvals = np.arange(-self._c_span, self._c_span + 1, dtype=np.float64)
            self._table_h = np.repeat(hvals, width)
            self._table_c = np.tile(cvals, hvals.size)

        self._psi = np.empty(dim, dtype=self.dtype)
        self._phi: Optional[np.ndarray] = None
        self._lam: Optional[np.ndarray] = None
        self._partial: Optional[np.ndarray] = None

    # -- forward -----------------------------------------------------------

    def _phase_table(self, gamma: float, omega: float) -> np.ndarray:
        angles = gamma * self._table_h + omega * self._table_c
        return np.exp(-1j * angles).astype(self.dtype)

    def _apply_layer(self, psi: np.ndarray, gamma: float, beta: float, omega: float) -> None:
        if self._integer_couplings:
            _gather_mul(psi, self._phase_table(gamma, omega), self._combo_idx)
        else:
            _phase_mul(psi, self.h1, self.cvec, float(gamma), float(omega))
        _mixer(psi, beta, self.nq)

    def state(self, sched: AngleSchedule) -> np.ndarray:
        """Evolved statevector; the returned buffer is reused per call."""
        psi = self._psi
        psi.fill(1.0 / np.sqrt(psi.size))
        for layer in range(sched.p):
            self._apply_layer(
                psi, sched.gammas[layer], sched.betas[layer], sched.omegas[layer]
            )
        return psi

    def energy_st(self, sched: AngleSchedule) -> float:
        return float(_abs2_dot(self.state(sched), self.hst))

    def energy_pe(self, sched: AngleSchedule, c_strength: float) -> float:
        psi = self.state(sched)
        return float(_abs2_dot(psi, self.h1) - c_strength * _abs2_dot(psi, self.cvec))

    def perf_st(self, sched: AngleSchedule) -> float:
        return -self.energy_st(sched) / self.layout.n ** 1.5

    def expected_broken(self, sched: AngleSchedule) -> float:
        mean_c = float(_abs2_dot(self.state(sched), self.cvec))
        return (self.layout.num_plaquettes - mean_c) / 2.0

    # -- reverse-sweep gradients --------------------------------------------

    def _ensure_adjoint_buffers(self) -> None:
        if self._phi is None:
            self._phi = np.empty_like(self._psi)
            self._lam = np.empty_like(self._psi)
            self._partial = np.empty(self._psi.size, dtype=np.float64)

    def _value_and_grad(
        self, sched: AngleSchedule, d1: np.ndarray, d2: np.ndarray, w2: float
    ) -> Tuple[float, np.ndarray]:
        """Energy of diag(d1 + w2*d2) and its gradient in packed order."""
        self._ensure_adjoint_buffers()
        p = sched.p
        psi = self.state(sched)
        value = float(_abs2_dot(psi, d1) + w2 * _abs2_dot(psi, d2))
        phi = self._phi
        lam = self._lam
        partial = self._partial
        np.copyto(phi, psi)
        _make_costate(lam, psi, d1, d2, w2)

        grad = np.zeros(3 * p)
        for layer in range(p - 1, -1, -1):
            beta = sched.betas[layer]
            partial.fill(0.0)
            _undo_mixer_pair_hx(phi, lam, beta, partial, self.nq)
            grad[p + layer] = 2.0 * float(np.sum(partial))
            grad[layer] = 2.0 * float(_imag_overlap(lam, phi, self.h1))
            grad[2 * p + layer] = 2.0 * float(_imag_overlap(lam, phi, self.cvec))
            gamma = sched.gammas[layer]
            omega = sched.omegas[layer]
            if self._integer_couplings:
                table = np.conj(self._phase_table(gamma, omega))
                _gather_mul(phi, table, self._combo_idx)
                _gather_mul(lam, table, self._combo_idx)
            else:
                _phase_mul(phi, self.h1, self.cvec, -float(gamma), -float(omega))
                _phase_mul(lam, self.h1, self.cvec, -float(gamma), -float(omega))
        return value, grad

    def energy_st_and_grad(self, sched: AngleSchedule) -> Tuple[float, np.ndarray]:
        return self._value_and_grad(sched, self.hst, self.hst, 0.0)

    def energy_pe_and_grad(
        self, sched: AngleSchedule, c_strength: float
    ) -> Tuple[float, np.ndarray]:
        return self._value_and_grad(sched, self.h1, self.cvec, -float(c_strength))
