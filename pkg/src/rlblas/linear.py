"""Gram cache, linear baselines (MF, ZF, MMSE, ordered MMSE-SIC) and the
exhaustive ML search used as a test oracle."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import flops
from .constellation import Constellation

ML_SEARCH_CAP = 2 ** 20


class DegenerateChannelError(ValueError):
    """A user has an all-zero channel column."""


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class SearchSpaceError(ValueError):
    """Exhaustive search requested over more than ``ML_SEARCH_CAP`` vectors."""


@dataclass(frozen=True, eq=False)
class GramCache:
    H: np.ndarray
    y: np.ndarray
    G: np.ndarray       # H^H H
    mf: np.ndarray      # H^H y
    diag: np.ndarray    # real diagonal of G
    y_energy: float     # ||y||^2

    @property
    def N(self) -> int:
        return self.H.shape[0]

    @property
    def K(self) -> int:
        return self.H.shape[1]


def build_gram(H, y, ledger=None) -> GramCache:
    H = np.asarray(H, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if H.ndim != 2 or y.shape != (H.shape[0],):
        raise ValueError(f"shape mismatch: H {H.shape}, y {y.shape}")
    n, k = H.shape
    Hh = H.conj().T
    G = Hh @ H
    # exact Hermitian symmetry and a real diagonal, independent of BLAS rounding
    G = 0.5 * (G + G.conj().T)
    mf = Hh @ y
    y_energy = float(np.vdot(y, y).real)
    flops.matmul(ledger, k, n, k)
    flops.matmul(ledger, k, n, 1)
    flops.charge(ledger, rmul=2 * n, radd=2 * n - 1)
    return GramCache(H=H, y=y, G=G, mf=mf, diag=G.diagonal().real.copy(), y_energy=y_energy)


def _check_columns(cache: GramCache) -> None:
    if np.any(cache.diag <= 0):
        raise DegenerateChannelError("channel has an all-zero column")


def matched_filter_detect(cache: GramCache, constellation: Constellation, ledger=None) -> np.ndarray:
    """Per-stream normalized matched filter: slice((H^H y)_p / (G)_pp)."""
    _check_columns(cache)
    k = cache.K
    flops.charge(ledger, rdiv=2 * k)
    flops.nearest_point(ledger, k, constellation.order)
    return constellation.slice(cache.mf / cache.diag)


def _cho_factor(A: np.ndarray, ledger=None) -> np.ndarray:
    try:
        L = linalg.cholesky(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("matrix is not positive definite") from exc
    pivots = L.diagonal().real
    if pivots.min() ** 2 <= 1e-13 * A.diagonal().real.max():
        raise SingularMatrixError("matrix is numerically singular")
    flops.cholesky(ledger, A.shape[0])
    return L


def _cho_solve(L: np.ndarray, b: np.ndarray, ledger=None) -> np.ndarray:
    n = L.shape[0]
    nrhs = 1 if b.ndim == 1 else b.shape[1]
    flops.tri_solve(ledger, n, nrhs)
    flops.tri_solve(ledger, n, nrhs)
    return linalg.cho_solve((L, True), b)


def zf_equalize(H, y, ledger=None) -> np.ndarray:
    """Unsliced (H^H H)^-1 H^H y."""
    cache = build_gram(H, y, ledger)
    return _cho_solve(_cho_factor(cache.G, ledger), cache.mf, ledger)


def zf_detect(H, y, constellation: Constellation, ledger=None) -> np.ndarray:
    x = zf_equalize(H, y, ledger)
    flops.nearest_point(ledger, x.size, constellation.order)
    return constellation.slice(x)


def _mmse_from_cache(cache: GramCache, sigma2: float, es: float, ledger=None) -> np.ndarray:
    if sigma2 < 0:
        raise ValueError("noise variance must be non-negative")
    if np.isinf(sigma2):
        return np.zeros(cache.K, dtype=np.complex128)
    A = cache.G + (sigma2 / es) * np.eye(cache.K)
    flops.charge(ledger, radd=cache.K, rdiv=1)
    return _cho_solve(_cho_factor(A, ledger), cache.mf, ledger)


def mmse_equalize(H, y, sigma2: float, es: float = 1.0, ledger=None) -> np.ndarray:
    """Unsliced (H^H H + sigma2/es I)^-1 H^H y; ``es`` is the mean symbol energy."""
    return _mmse_from_cache(build_gram(H, y, ledger), sigma2, es, ledger)


def mmse_detect(H, y, sigma2: float, constellation: Constellation, ledger=None) -> np.ndarray:
    x = mmse_equalize(H, y, sigma2, constellation.mean_energy, ledger)
    flops.nearest_point(ledger, x.size, constellation.order)
    return constellation.slice(x)


def mmse_from_cache(cache: GramCache, sigma2: float, constellation: Constellation,
                    ledger=None) -> np.ndarray:
    """Hard MMSE decision reusing an existing Gram cache."""
    x = _mmse_from_cache(cache, sigma2, constellation.mean_energy, ledger)
    flops.nearest_point(ledger, x.size, constellation.order)
    return constellation.slice(x)


def mmse_sic_detect(H, y, sigma2: float, constellation: Constellation, ledger=None) -> np.ndarray:
    """Ordered MMSE successive interference cancellation.

    Each stage detects the remaining stream with the highest post-MMSE SINR,
    i.e. the smallest diagonal entry of (G_r + sigma2/es I)^-1 for the residual
    Gram matrix G_r, then cancels it from the matched-filter output.
    """
    cache = build_gram(H, y, ledger)
    es = constellation.mean_energy
    G, mf = cache.G, cache.mf.copy()
    remaining = list(range(cache.K))
    out = np.zeros(cache.K, dtype=np.complex128)
    reg = 0.0 if np.isinf(sigma2) else sigma2 / es
    while remaining:
        r = len(remaining)
        sub = np.ix_(remaining, remaining)
        A = G[sub] + reg * np.eye(r)
        L = _cho_factor(A, ledger)
        Linv = linalg.solve_triangular(L, np.eye(r), lower=True)
        flops.tri_solve(ledger, r, r)
        err = np.sum(np.abs(Linv) ** 2, axis=0)
        flops.charge(ledger, rmul=2 * r * r, radd=r * r - r, rcmp=r - 1)
        pick = int(np.argmin(err))
        soft = _cho_solve(L, mf[remaining], ledger)[pick]
        if np.isinf(sigma2):
            soft = 0.0
        k = remaining.pop(pick)
        out[k] = constellation.slice(soft)
        flops.nearest_point(ledger, 1, constellation.order)
        # cancel the detected stream from every matched-filter output
        mf -= G[:, k] * out[k]
        flops.charge(ledger, cmul=cache.K, cadd=cache.K)
    return out


@functools.lru_cache(maxsize=8)
def _candidate_digits(m: int, k: int) -> np.ndarray:
    """All index vectors in lexicographic order, shape (k, m**k)."""
    digits = np.stack(np.unravel_index(np.arange(m ** k), (m,) * k), axis=0).astype(np.int8)
    digits.flags.writeable = False
    return digits


def ml_oracle(H, y, constellation: Constellation, ledger=None, chunk: int = 1 << 15):
    """Exhaustive minimization of ||y - H d||^2.

    Returns ``(d, cost)`` with the constant-free cost d^H G d - 2 Re(mf^H d).
    Ties go to the first vector in lexicographic index order.
    """
    H = np.asarray(H, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    n, k = H.shape
    m = constellation.order
    total = m ** k
    if total > ML_SEARCH_CAP:
        raise SearchSpaceError(f"{m}^{k} candidates exceeds the exhaustive-search cap of 2^20")
    pts = constellation.points
    digits = _candidate_digits(m, k)
    best_val, best_idx = np.inf, 0
    for start in range(0, total, chunk):
        ids = np.arange(start, min(start + chunk, total))
        resid = y[:, None] - H @ pts[digits[:, start:start + chunk]]
        vals = np.sum(resid.real ** 2 + resid.imag ** 2, axis=0)
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val, best_idx = vals[j], ids[j]
    flops.matmul(ledger, n, k, total)
    flops.charge(ledger, cadd=n * total, rmul=2 * n * total, radd=(2 * n - 1) * total,
                 rcmp=total - 1)
    d = pts[digits[:, best_idx]]
    cache = build_gram(H, y)
    cost = float(np.real(np.vdot(d, cache.G @ d)) - 2.0 * np.real(np.vdot(cache.mf, d)))
    return d, cost
