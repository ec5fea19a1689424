"""Complex one-symbol-update likelihood ascent search.

The search is greedy coordinate descent on the constant-free ML cost

    C(d) = d^H G d - 2 Re(mf^H d),    G = H^H H,  mf = H^H y,

which differs from ||y - H d||^2 only by ||y||^2.  Changing entry p by
lambda changes the cost by

    dC = |lambda|^2 G_pp - 2 Re(conj(lambda) z_p),   z = mf - G d,

so each iteration is O(K |B|) given z, and an accepted move only needs one
column of G to refresh z.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .constellation import Constellation
from .flops import OP_INDEX, OPS, FlopLedger
from .linear import GramCache

_CMUL, _CADD = OP_INDEX["cmul"], OP_INDEX["cadd"]
_RMUL, _RADD, _RCMP = OP_INDEX["rmul"], OP_INDEX["radd"], OP_INDEX["rcmp"]


@dataclass
class LasState:
    idx: np.ndarray          # symbol indices of the current decision
    d: np.ndarray            # current decision vector
    z: np.ndarray            # H^H (y - H d), maintained incrementally
    cost: float              # C(d)
    iterations: int = 0
    ledger: FlopLedger = field(default_factory=FlopLedger)
    capped: bool = False
    # per accepted step: (position, new symbol index, announced dC)
    trace: list[tuple[int, int, float]] | None = None

    @property
    def flops(self) -> int:
        return self.ledger.total


def ml_cost(d, cache: GramCache) -> float:
    d = np.asarray(d, dtype=np.complex128)
    return float(np.real(np.vdot(d, cache.G @ d)) - 2.0 * np.real(np.vdot(cache.mf, d)))


def residual_correlation(d, cache: GramCache) -> np.ndarray:
    """z = H^H (y - H d) computed from scratch."""
    return cache.mf - cache.G @ np.asarray(d, dtype=np.complex128)


def initial_state(d0, cache: GramCache, constellation: Constellation, ledger=None) -> LasState:
    idx = constellation.index_of(d0).astype(np.int64)
    d = constellation.points[idx]
    z = residual_correlation(d, cache)
    k = cache.K
    ledger = ledger if ledger is not None else FlopLedger()
    ledger.add(cmul=k * k, cadd=k * k)
    cost = _cost_from_z(d, z, cache.mf)
    ledger.add(cadd=k, rmul=2 * k, radd=2 * k - 1)
    return LasState(idx=idx, d=d, z=z, cost=cost, ledger=ledger)


def _cost_from_z(d, z, mf) -> float:
    # G d = mf - z, so C = Re(d^H (G d - 2 mf)) = -Re(d^H (mf + z))
    return -float(np.real(np.vdot(d, mf + z)))


def delta_cost(state: LasState, p: int, lam: complex, cache: GramCache) -> float:
    zp = state.z[p]
    return float(abs(lam) ** 2 * cache.diag[p] - 2.0 * (lam.real * zp.real + lam.imag * zp.imag))


def delta_table(state: LasState, cache: GramCache, constellation: Constellation) -> np.ndarray:
    """dC for every (position, candidate) pair, shape (K, |B| - 1)."""
    lam = constellation.diffs[state.idx]
    z = state.z[:, None]
    return (constellation.diff_energy[state.idx] * cache.diag[:, None]
            - 2.0 * (lam.real * z.real + lam.imag * z.imag))


def best_update(state: LasState, cache: GramCache, constellation: Constellation):
    """Best one-symbol move as ``(s, lambda_s, dC)``, or None at a local minimum.

    Per position the candidate with the lowest dC wins (first in alphabet
    order on ties); across positions the lowest dC wins (lowest position on
    ties).  Moves with dC >= 0 are never returned.
    """
    table = delta_table(state, cache, constellation)
    per_pos = np.argmin(table, axis=1)
    per_pos_val = table[np.arange(table.shape[0]), per_pos]
    s = int(np.argmin(per_pos_val))
    if not per_pos_val[s] < 0:
        return None
    j = per_pos[s]
    return s, complex(constellation.diffs[state.idx[s], j]), float(per_pos_val[s])


@njit(cache=True)
def _las_kernel(idx, z, cost, diag, G, diffs, energy, targets, max_iters,
                trace_s, trace_t, trace_delta, counts):
    K = idx.shape[0]
    C = diffs.shape[1]
    it = 0
    capped = False
    while True:
        best = 0.0
        bs = -1
        bj = -1
        for p in range(K):
            i = idx[p]
            zr = z[p].real
            zi = z[p].imag
            g = diag[p]
            for j in range(C):
                lam = diffs[i, j]
                dc = energy[i, j] * g - 2.0 * (lam.real * zr + lam.imag * zi)
                if dc < best:
                    best = dc
                    bs = p
                    bj = j
        counts[_RMUL] += 4 * K * C
        counts[_RADD] += 2 * K * C
        counts[_RCMP] += K * C
        if bs < 0:
            break
        if it >= max_iters:
            capped = True
            break
        i = idx[bs]
        lam = diffs[i, bj]
        for q in range(K):
            z[q] -= lam * G[q, bs]
        idx[bs] = targets[i, bj]
        cost += best
        counts[_CMUL] += K
        counts[_CADD] += K
        counts[_RADD] += 1
        if trace_s.shape[0] > 0:
            trace_s[it] = bs
            trace_t[it] = targets[i, bj]
            trace_delta[it] = best
        it += 1
    return cost, it, capped


_NO_TRACE_I = np.zeros(0, dtype=np.int64)
_NO_TRACE_F = np.zeros(0, dtype=np.float64)


def default_max_iters(K: int, constellation: Constellation) -> int:
    return 10 * K * constellation.order


def run_search(state: LasState, cache: GramCache, constellation: Constellation,
               max_iters: int | None = None, trace: bool = False) -> LasState:
    """Advance ``state`` in place to a local minimum (or the iteration cap)."""
    if max_iters is None:
        max_iters = default_max_iters(cache.K, constellation)
    if max_iters < 0:
        raise ValueError("max_iters must be non-negative")
    counts = np.zeros(len(OPS), dtype=np.int64)
    if trace:
        ts = np.zeros(max_iters, dtype=np.int64)
        tt = np.zeros(max_iters, dtype=np.int64)
        td = np.zeros(max_iters, dtype=np.float64)
    else:
        ts, tt, td = _NO_TRACE_I, _NO_TRACE_I, _NO_TRACE_F
    cost, it, capped = _las_kernel(
        state.idx, state.z, state.cost, cache.diag, cache.G, constellation.diffs,
        constellation.diff_energy, constellation.diff_targets, max_iters, ts, tt, td, counts)
    state.cost = float(cost)
    state.iterations += int(it)
    state.capped = bool(capped)
    state.d = constellation.points[state.idx]
    state.ledger.add_vector(counts)
    if trace:
        steps = list(zip(ts[:it].tolist(), tt[:it].tolist(), td[:it].tolist()))
        state.trace = (state.trace or []) + steps
    return state


def las_search(d0, cache: GramCache, constellation: Constellation,
               max_iters: int | None = None, trace: bool = False) -> LasState:
    """Greedy one-symbol-update search from ``d0`` down to a 1-flip-optimal vector.

    ``max_iters`` defaults to ``10 K |B|``; hitting it sets ``capped``.
    """
    state = initial_state(d0, cache, constellation)
    return run_search(state, cache, constellation, max_iters, trace)
