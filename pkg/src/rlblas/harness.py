"""Monte Carlo BER / complexity experiments.

Every random draw comes from an :class:`RngStream` keyed by trial
coordinates, and per-worker tallies are integers merged by summation, so
the records depend only on the :class:`RunConfig`, never on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.stats import norm

from . import channel as ch
from .constellation import Constellation, build_qam
from .flops import FlopLedger
from .las import las_search
from .linear import (ML_SEARCH_CAP, build_gram, matched_filter_detect, ml_oracle,
                     mmse_detect, mmse_sic_detect, zf_detect)
from .rlb import RlbConfig, rlb_las_detect

DETECTORS = ("mf", "zf", "mmse", "mmse-sic", "las", "rlb-mf", "rlb-mmse", "ml")
REDRAW_POLICIES = ("run", "transmission")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    K: int = 8
    N: int = 8
    snr_grid_db: tuple[float, ...] = (0.0, 4.0, 8.0, 12.0)
    runs: int = 100
    vectors_per_run: int = 10
    detectors: tuple[str, ...] = ("mf", "rlb-mf")
    master_seed: int = 0
    constellation_order: int = 4
    rlb: RlbConfig = field(default_factory=RlbConfig)
    channel_redraw: str = "run"
    scale_mode: str = "unit_energy"

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if not self.N >= self.K >= 1:
            raise ConfigError(f"need N >= K >= 1, got N={self.N}, K={self.K}")
        if self.runs < 1 or self.vectors_per_run < 1:
            raise ConfigError("runs and vectors_per_run must be positive")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db is empty")
        if not self.detectors:
            raise ConfigError("no detectors configured")
        unknown = [d for d in self.detectors if d not in DETECTORS]
        if unknown:
            raise ConfigError(f"unknown detectors {unknown}; choose from {DETECTORS}")
        if len(set(self.detectors)) != len(self.detectors):
            raise ConfigError("duplicate detector")
        if self.channel_redraw not in REDRAW_POLICIES:
            raise ConfigError(f"channel_redraw must be one of {REDRAW_POLICIES}")
        if "ml" in self.detectors and self.constellation_order ** self.K > ML_SEARCH_CAP:
            raise ConfigError(
                f"ml oracle infeasible: {self.constellation_order}^{self.K} exceeds 2^20 candidates")
        try:
            build_qam(self.constellation_order, self.scale_mode)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class BerRecord:
    detector: str
    K: int
    N: int
    snr_db: float
    bits_total: int
    bit_errors: int
    ber: float
    avg_flops_per_symbol: float
    avg_restarts: float
    avg_las_iterations: float


CSV_FIELDS = tuple(f.name for f in fields(BerRecord))


@dataclass
class Tally:
    bits: int = 0
    errors: int = 0
    flops: int = 0
    restarts: int = 0
    las_iterations: int = 0
    detections: int = 0

    def __iadd__(self, other: Tally) -> Tally:
        self.bits += other.bits
        self.errors += other.errors
        self.flops += other.flops
        self.restarts += other.restarts
        self.las_iterations += other.las_iterations
        self.detections += other.detections
        return self


def detect(name: str, H, y, sigma2: float, constellation: Constellation,
           rlb: RlbConfig, rng) -> tuple[np.ndarray, int, int, int]:
    """Run one named detector; returns (indices, flops, restarts, las iterations)."""
    ledger = FlopLedger()
    restarts = iters = 0
    if name == "mf":
        d = matched_filter_detect(build_gram(H, y, ledger), constellation, ledger)
    elif name == "zf":
        d = zf_detect(H, y, constellation, ledger)
    elif name == "mmse":
        d = mmse_detect(H, y, sigma2, constellation, ledger)
    elif name == "mmse-sic":
        d = mmse_sic_detect(H, y, sigma2, constellation, ledger)
    elif name == "las":
        cache = build_gram(H, y, ledger)
        state = las_search(matched_filter_detect(cache, constellation, ledger), cache, constellation)
        ledger.merge(state.ledger)
        d, iters = state.d, state.iterations
    elif name in ("rlb-mf", "rlb-mmse"):
        cfg = RlbConfig(rlb.np_min, rlb.c1, name.split("-")[1], rlb.max_restarts_cap)
        rep = rlb_las_detect(H, y, sigma2, constellation, cfg, rng)
        ledger = rep.ledger
        d, restarts, iters = rep.decision, rep.restarts_used, rep.las_iterations_total
    elif name == "ml":
        d, _ = ml_oracle(H, y, constellation, ledger)
    else:
        raise ConfigError(f"unknown detector {name!r}")
    return constellation.index_of(d), ledger.total, restarts, iters


def _run_block(config: RunConfig, snr_idx: int, run_start: int, run_stop: int) -> dict[str, Tally]:
    constellation = build_qam(config.constellation_order, config.scale_mode)
    K, N, M = config.K, config.N, constellation.order
    sigma2 = ch.snr_to_sigma2(config.snr_grid_db[snr_idx], K, constellation.mean_energy)
    root = ch.RngStream(config.master_seed)
    tallies = {name: Tally() for name in config.detectors}
    bits_per_vec = K * constellation.bits_per_symbol
    for run in range(run_start, run_stop):
        H = None
        for tx in range(config.vectors_per_run):
            if config.channel_redraw == "transmission":
                H = ch.draw_channel(N, K, root.child(run, tx, ch.CHANNEL))
            elif H is None:
                H = ch.draw_channel(N, K, root.child(run, ch.CHANNEL))
            tx_idx = ch.draw_symbol_indices(K, M, root.child(run, tx, ch.SYMBOLS))
            # unit-variance noise scaled per SNR point keeps draws common across the grid
            n = ch.draw_noise(N, 1.0, root.child(run, tx, ch.NOISE)) * math.sqrt(sigma2)
            y = ch.make_received(H, constellation.points[tx_idx], n)
            tx_bits = constellation.indices_to_bits(tx_idx)
            for det_idx, name in enumerate(config.detectors):
                rng = root.child(run, tx, ch.PERTURBATION, snr_idx, det_idx)
                idx, fl, restarts, iters = detect(name, H, y, sigma2, constellation, config.rlb, rng)
                t = tallies[name]
                t.bits += bits_per_vec
                t.errors += int(np.count_nonzero(constellation.indices_to_bits(idx) != tx_bits))
                t.flops += fl
                t.restarts += restarts
                t.las_iterations += iters
                t.detections += 1
    return tallies


def _run_block_star(args):
    return _run_block(*args)


def _blocks(config: RunConfig, workers: int) -> list[tuple]:
    # several blocks per worker so uneven run times balance out
    n_blocks = min(config.runs, max(1, workers * 4))
    edges = np.linspace(0, config.runs, n_blocks + 1).astype(int)
    return [(config, s, int(a), int(b))
            for s in range(len(config.snr_grid_db))
            for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_trials(config: RunConfig, workers: int = 1) -> list[BerRecord]:
    """One BerRecord per (detector, SNR point), detectors outermost."""
    blocks = _blocks(config, workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block_star, blocks))
    else:
        results = [_run_block_star(b) for b in blocks]
    totals = {(name, s): Tally() for name in config.detectors
              for s in range(len(config.snr_grid_db))}
    for block, res in zip(blocks, results):
        for name, t in res.items():
            totals[name, block[1]] += t
    records = []
    for name in config.detectors:
        for s, snr in enumerate(config.snr_grid_db):
            t = totals[name, s]
            records.append(BerRecord(
                detector=name, K=config.K, N=config.N, snr_db=snr,
                bits_total=t.bits, bit_errors=t.errors, ber=t.errors / t.bits,
                avg_flops_per_symbol=t.flops / (t.detections * config.K),
                avg_restarts=t.restarts / t.detections,
                avg_las_iterations=t.las_iterations / t.detections))
    return records


@dataclass(frozen=True)
class SweepPoint:
    K: int
    snr_db: float | None          # None when the target BER was not reached
    ber: float | None
    avg_flops_per_symbol: float | None


def complexity_sweep(k_list, target_ber: float, config: RunConfig,
                     detector: str = "rlb-mf", workers: int = 1) -> list[SweepPoint]:
    """Average flops/symbol at the lowest grid SNR reaching ``target_ber``, per K = N.

    The SNR grid of ``config`` is scanned upward one point at a time and the
    scan stops at the first point whose BER is at or below the target.
    """
    out = []
    for K in k_list:
        hit = None
        for snr in sorted(config.snr_grid_db):
            cfg = RunConfig(K=K, N=K, snr_grid_db=(snr,), runs=config.runs,
                            vectors_per_run=config.vectors_per_run, detectors=(detector,),
                            master_seed=config.master_seed,
                            constellation_order=config.constellation_order, rlb=config.rlb,
                            channel_redraw=config.channel_redraw, scale_mode=config.scale_mode)
            rec = run_trials(cfg, workers)[0]
            if rec.ber <= target_ber:
                hit = rec
                break
        if hit is None:
            out.append(SweepPoint(K, None, None, None))
        else:
            out.append(SweepPoint(K, hit.snr_db, hit.ber, hit.avg_flops_per_symbol))
    return out


def loglog_slope(points: list[SweepPoint]) -> float:
    """Least-squares slope of log(flops/symbol) against log(K) over reached points."""
    pts = [(p.K, p.avg_flops_per_symbol) for p in points if p.avg_flops_per_symbol]
    if len(pts) < 2:
        raise ValueError("need at least two reached points")
    k, f = np.log(np.array(pts, dtype=float)).T
    return float(np.polyfit(k, f, 1)[0])


def _check_qpsk(constellation: Constellation) -> None:
    if constellation.order != 4:
        raise ValueError("analytic AWGN reference is implemented for Gray 4-QAM only")


def awgn_siso_reference(snr_grid_db, constellation: Constellation) -> list[tuple[float, float]]:
    """Analytic Gray 4-QAM bit error probability on a single-antenna AWGN link.

    Uses the same SNR convention as the MIMO runs with K = 1, i.e.
    sigma2 = es / snr; each quadrature bit errs with probability
    Q(a / sqrt(sigma2 / 2)) for per-axis amplitude a.
    """
    _check_qpsk(constellation)
    amp = float(np.abs(constellation.points[0].real))
    out = []
    for snr in snr_grid_db:
        sigma2 = ch.snr_to_sigma2(snr, 1, constellation.mean_energy)
        out.append((float(snr), float(norm.sf(amp / math.sqrt(sigma2 / 2)))))
    return out


def siso_snr_for_ber(target_ber: float) -> float:
    """SNR (dB) at which Gray 4-QAM on AWGN reaches ``target_ber``."""
    return 10 * math.log10(norm.isf(target_ber) ** 2)


def snr_at_ber(records, detector: str, target_ber: float) -> float | None:
    """SNR where a detector's BER curve crosses ``target_ber``.

    Interpolates log10(BER) linearly between the first bracketing pair of
    grid points; None if the curve never crosses inside the grid.
    """
    pts = sorted((r.snr_db, r.ber) for r in records if r.detector == detector)
    for (s0, b0), (s1, b1) in zip(pts, pts[1:]):
        if b0 >= target_ber >= b1 and b0 > 0:
            if b1 <= 0:
                return s1
            l0, l1, lt = math.log10(b0), math.log10(b1), math.log10(target_ber)
            return s0 if l0 == l1 else s0 + (l0 - lt) / (l0 - l1) * (s1 - s0)
    return None


@dataclass(frozen=True)
class OracleComparison:
    trials: int
    matched: int            # RLB-LAS cost equals the exhaustive optimum
    bits: int
    rlb_bit_errors: int
    ml_bit_errors: int

    @property
    def match_fraction(self) -> float:
        return self.matched / self.trials

    @property
    def rlb_ber(self) -> float:
        return self.rlb_bit_errors / self.bits

    @property
    def ml_ber(self) -> float:
        return self.ml_bit_errors / self.bits


def oracle_compare(K: int, snr_db: float, trials: int, master_seed: int = 0,
                   rlb: RlbConfig | None = None, order: int = 4,
                   rtol: float = 1e-9) -> OracleComparison:
    """Compare MF-RLB-LAS against exhaustive ML on independent K = N instances."""
    rlb = rlb or RlbConfig()
    constellation = build_qam(order)
    if order ** K > ML_SEARCH_CAP:
        raise ConfigError(f"ml oracle infeasible: {order}^{K} exceeds 2^20 candidates")
    sigma2 = ch.snr_to_sigma2(snr_db, K, constellation.mean_energy)
    root = ch.RngStream(master_seed)
    matched = rlb_err = ml_err = 0
    for t in range(trials):
        H = ch.draw_channel(K, K, root.child(t, ch.CHANNEL))
        tx_idx = ch.draw_symbol_indices(K, order, root.child(t, ch.SYMBOLS))
        y = ch.make_received(H, constellation.points[tx_idx], ch.draw_noise(K, sigma2, root.child(t, ch.NOISE)))
        rep = rlb_las_detect(H, y, sigma2, constellation, rlb, root.child(t, ch.PERTURBATION))
        d_ml, cost_ml = ml_oracle(H, y, constellation)
        if rep.cost <= cost_ml + rtol * max(1.0, abs(cost_ml)):
            matched += 1
        tx_bits = constellation.indices_to_bits(tx_idx)
        rlb_err += int(np.count_nonzero(constellation.indices_to_bits(rep.indices) != tx_bits))
        ml_err += int(np.count_nonzero(constellation.symbols_to_bits(d_ml) != tx_bits))
    return OracleComparison(trials, matched, trials * K * constellation.bits_per_symbol, rlb_err, ml_err)
