"""Rayleigh uplink channel, noise, and reproducible per-trial random streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# purpose tags for RngStream.stream_id
CHANNEL = 0
SYMBOLS = 1
NOISE = 2
PERTURBATION = 3


@dataclass(frozen=True)
class RngStream:
    """Counter-derived random stream.

    The generator is a pure function of ``(master_seed, stream_id)``: the pair
    is hashed by :class:`numpy.random.SeedSequence` into a Philox key, so any
    trial can be regenerated without replaying the others.
    """

    master_seed: int
    stream_id: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=tuple(int(s) for s in self.stream_id))
        return np.random.Generator(np.random.Philox(seq))

    def child(self, *ids: int) -> RngStream:
        return RngStream(self.master_seed, self.stream_id + tuple(ids))


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream (fresh generator each call), a Generator, or a seed."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True, eq=False)
class ChannelInstance:
    H: np.ndarray
    sigma2: float

    def __post_init__(self):
        H = np.asarray(self.H, dtype=np.complex128)
        if H.ndim != 2:
            raise ValueError("H must be a matrix")
        n, k = H.shape
        if not n >= k >= 1:
            raise ValueError(f"need N >= K >= 1, got N={n}, K={k}")
        if not np.all(np.isfinite(H)):
            raise ValueError("H has non-finite entries")
        if self.sigma2 < 0:
            raise ValueError("noise variance must be non-negative")
        object.__setattr__(self, "H", H)

    @property
    def N(self) -> int:
        return self.H.shape[0]

    @property
    def K(self) -> int:
        return self.H.shape[1]


def _crandn(gen: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric CN(0, 1) samples."""
    return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) * np.sqrt(0.5)


def draw_channel(N: int, K: int, rng) -> np.ndarray:
    """N x K matrix of i.i.d. CN(0, 1) gains."""
    if N < 1 or K < 1:
        raise ValueError("N and K must be positive")
    return _crandn(as_generator(rng), (N, K))


def draw_noise(N: int, sigma2: float, rng) -> np.ndarray:
    """N i.i.d. CN(0, sigma2) samples."""
    if sigma2 < 0:
        raise ValueError("noise variance must be non-negative")
    return _crandn(as_generator(rng), N) * np.sqrt(sigma2)


def draw_symbol_indices(K: int, order: int, rng) -> np.ndarray:
    """Uniform symbol indices, i.e. uniform random Gray labels."""
    return as_generator(rng).integers(0, order, size=K)


def snr_to_sigma2(snr_db: float, K: int, es: float = 1.0) -> float:
    """Noise variance for a per-antenna SNR of ``10 log10(K es / sigma2)``."""
    if K < 1 or es <= 0:
        raise ValueError("need K >= 1 and es > 0")
    return K * es * 10.0 ** (-snr_db / 10.0)


def make_received(H, x, n) -> np.ndarray:
    """y = H x + n."""
    H = np.asarray(H)
    x = np.asarray(x)
    n = np.asarray(n)
    if H.ndim != 2 or x.shape != (H.shape[1],) or n.shape != (H.shape[0],):
        raise ValueError(f"shape mismatch: H {H.shape}, x {x.shape}, n {n.shape}")
    return H @ x + n
