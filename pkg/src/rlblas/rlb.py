"""Random-list-based LAS: restarts from random perturbations of a linear
start vector, keeping the lowest-cost local minimum, with an adaptive restart
budget driven by the standardized ML cost of the current decision."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import as_generator
from .constellation import Constellation
from .flops import FlopLedger
from .las import LasState, _cost_from_z, default_max_iters, initial_state, run_search
from .linear import build_gram, matched_filter_detect, mmse_from_cache

START_DETECTORS = ("mf", "mmse")


@dataclass(frozen=True)
class RlbConfig:
    np_min: int = 2
    c1: float = 5.0
    start_detector: str = "mf"
    max_restarts_cap: int = 1000

    def __post_init__(self):
        if self.np_min < 1:
            raise ValueError("np_min must be at least 1")
        if not self.c1 > 0:
            raise ValueError("c1 must be positive")
        if self.start_detector not in START_DETECTORS:
            raise ValueError(f"start_detector must be one of {START_DETECTORS}")
        if self.max_restarts_cap < 0:
            raise ValueError("max_restarts_cap must be non-negative")


@dataclass
class DetectionReport:
    decision: np.ndarray
    indices: np.ndarray
    cost: float
    phi: float                 # nan when sigma2 == 0
    np_final: int
    restarts_used: int
    las_iterations_total: int
    ledger: FlopLedger = field(default_factory=FlopLedger)
    cap_hit: bool = False      # Np exceeded max_restarts_cap at some point
    las_capped: bool = False   # some LAS run stopped on its iteration cap

    @property
    def flops(self) -> int:
        return self.ledger.total


def standardized_cost(d, H, y, sigma2: float, N: int | None = None) -> float:
    """(||y - H d||^2 - N sigma2) / (sqrt(N) sigma2)."""
    if sigma2 == 0:
        raise ZeroDivisionError("standardized cost is undefined for zero noise variance")
    H = np.asarray(H)
    N = H.shape[0] if N is None else N
    r = np.asarray(y) - H @ np.asarray(d)
    return float((np.vdot(r, r).real - N * sigma2) / (math.sqrt(N) * sigma2))


def _raw_np(phi: float, config: RlbConfig) -> int:
    # exp overflows past ~709; anything that large is clamped anyway
    return math.ceil(max(config.c1 * math.exp(min(phi, 700.0)), config.np_min))


def compute_np(phi: float, config: RlbConfig) -> int:
    """Restart budget ceil(max(c1 exp(phi), np_min)), clamped to the safety cap."""
    return min(_raw_np(phi, config), config.max_restarts_cap)


def _perturb_indices(idx_start: np.ndarray, order: int, gen: np.random.Generator) -> np.ndarray:
    K = idx_start.size
    c = int(gen.integers(1, K + 1))
    positions = gen.choice(K, size=c, replace=False)
    out = idx_start.copy()
    out[positions] = gen.integers(0, order, size=c)
    return out


def random_perturbation(d_start, constellation: Constellation, rng) -> np.ndarray:
    """Redraw a uniformly sized, uniformly chosen subset of entries.

    The subset size is uniform on 1..K, the positions are drawn without
    replacement, and each selected entry gets a uniform symbol from the full
    alphabet (so it may keep its value).
    """
    idx = constellation.index_of(d_start).astype(np.int64)
    return constellation.points[_perturb_indices(idx, constellation.order, as_generator(rng))]


def rlb_las_detect(H, y, sigma2: float, constellation: Constellation,
                   config: RlbConfig | None = None, rng=None) -> DetectionReport:
    config = config or RlbConfig()
    if sigma2 < 0:
        raise ValueError("noise variance must be non-negative")
    gen = as_generator(rng)
    ledger = FlopLedger()
    cache = build_gram(H, y, ledger)
    N, K = cache.N, cache.K
    max_iters = default_max_iters(K, constellation)

    if config.start_detector == "mf":
        d_start = matched_filter_detect(cache, constellation, ledger)
    else:
        d_start = mmse_from_cache(cache, sigma2, constellation, ledger)

    start = initial_state(d_start, cache, constellation, ledger=FlopLedger())
    idx_start, z_start = start.idx.copy(), start.z.copy()
    best = run_search(start, cache, constellation, max_iters)
    ledger.merge(best.ledger)
    iters_total = best.iterations
    las_capped = best.capped

    noise_known = sigma2 > 0
    if noise_known:
        scale = math.sqrt(N) * sigma2
        noise_mean = N * sigma2
        ledger.add(sqrt=1, rmul=2)

    def phi_of(state: LasState) -> float:
        ledger.add(radd=2, rdiv=1)
        return (cache.y_energy + state.cost - noise_mean) / scale

    cap_hit = False

    def budget(phi: float) -> int:
        nonlocal cap_hit
        ledger.add(exp=1, rmul=1, rcmp=2)
        raw = _raw_np(phi, config)
        cap_hit = cap_hit or raw > config.max_restarts_cap
        return min(raw, config.max_restarts_cap)

    if noise_known:
        phi = phi_of(best)
        np_cur = budget(phi)
    else:
        phi = math.nan
        np_cur = min(config.np_min, config.max_restarts_cap)

    points = constellation.points
    m = 0
    while m < np_cur:
        m += 1
        idx0 = _perturb_indices(idx_start, constellation.order, gen)
        changed = np.flatnonzero(idx0 != idx_start)
        step = points[idx0[changed]] - points[idx_start[changed]]
        z0 = z_start - cache.G[:, changed] @ step
        d0 = points[idx0]
        cand = LasState(idx=idx0, d=d0, z=z0, cost=_cost_from_z(d0, z0, cache.mf))
        nc = changed.size
        cand.ledger.add(cadd=nc + K * nc + K, cmul=K * nc, rmul=2 * K, radd=2 * K - 1)
        run_search(cand, cache, constellation, max_iters)
        ledger.merge(cand.ledger)
        iters_total += cand.iterations
        las_capped = las_capped or cand.capped
        ledger.add(rcmp=1)
        if cand.cost < best.cost:
            best = cand
            if noise_known:
                phi = phi_of(best)
                np_cur = budget(phi)

    return DetectionReport(
        decision=best.d, indices=best.idx, cost=best.cost, phi=phi, np_final=np_cur,
        restarts_used=m, las_iterations_total=iters_total, ledger=ledger,
        cap_hit=cap_hit, las_capped=las_capped)
