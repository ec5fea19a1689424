"""Square Gray-coded QAM alphabets.

Point ``i`` of a :class:`Constellation` carries the bit label ``i`` (MSB
first), so symbol indices double as Gray labels throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SUPPORTED_ORDERS = (4, 16, 64)
SCALE_MODES = ("integer", "unit_energy")


def _gray_pam_levels(bits: int) -> np.ndarray:
    """Amplitude for each Gray label of an ``2**bits``-level PAM axis."""
    n = 1 << bits
    levels = np.empty(n)
    for pos in range(n):
        levels[pos ^ (pos >> 1)] = (n - 1) - 2 * pos
    return levels


@dataclass(frozen=True, eq=False)
class Constellation:
    points: np.ndarray
    bits_per_symbol: int
    scale: float = 1.0
    # Difference tables for the one-symbol update: row i lists q - points[i]
    # for every other point q, in points-list order.
    diffs: np.ndarray = field(init=False, repr=False)
    diff_targets: np.ndarray = field(init=False, repr=False)
    diff_energy: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.complex128).copy()
        m = points.size
        if m != 1 << self.bits_per_symbol:
            raise ValueError(f"{m} points do not match {self.bits_per_symbol} bits per symbol")
        if np.unique(points).size != m:
            raise ValueError("constellation points must be distinct")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        targets = np.array([[q for q in range(m) if q != i] for i in range(m)], dtype=np.int64)
        diffs = points[targets] - points[:, None]
        for name, arr in (("points", points), ("diff_targets", targets),
                          ("diffs", diffs), ("diff_energy", np.abs(diffs) ** 2)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def order(self) -> int:
        return self.points.size

    @property
    def mean_energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    @property
    def gray_map(self) -> dict[tuple[int, ...], complex]:
        """Bit pattern -> point."""
        return {tuple(int(b) for b in self.labels()[i]): complex(p) for i, p in enumerate(self.points)}

    def labels(self) -> np.ndarray:
        """Bit label matrix, shape (order, bits_per_symbol)."""
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
        return (np.arange(self.order)[:, None] >> shifts) & 1

    def slice_indices(self, values) -> np.ndarray:
        """Index of the nearest point for each value (lowest index on ties)."""
        v = np.asarray(values, dtype=np.complex128)
        dist = np.abs(v[..., None] - self.points) ** 2
        return np.argmin(dist, axis=-1)

    def slice(self, values):
        """Nearest constellation point(s) to ``values``."""
        idx = self.slice_indices(values)
        out = self.points[idx]
        return complex(out) if np.ndim(out) == 0 else out

    def index_of(self, symbols, tol: float = 1e-9) -> np.ndarray:
        """Map alphabet members to their indices; raise on anything else."""
        s = np.asarray(symbols, dtype=np.complex128)
        idx = self.slice_indices(s)
        if np.any(np.abs(self.points[idx] - s) > tol * max(1.0, self.scale)):
            raise ValueError("value is not a point of the constellation")
        return idx

    def lambda_candidates(self, current: complex) -> np.ndarray:
        """All ``q - current`` for ``q`` in the alphabet other than ``current``."""
        i = int(self.index_of(current))
        return self.diffs[i].copy()

    def bits_to_indices(self, bits) -> np.ndarray:
        b = np.asarray(bits, dtype=np.int64).ravel()
        if b.size % self.bits_per_symbol:
            raise ValueError(
                f"bit count {b.size} is not a multiple of {self.bits_per_symbol}")
        if np.any((b != 0) & (b != 1)):
            raise ValueError("bits must be 0 or 1")
        weights = 1 << np.arange(self.bits_per_symbol - 1, -1, -1)
        return b.reshape(-1, self.bits_per_symbol) @ weights

    def indices_to_bits(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64).ravel()
        return self.labels()[idx].ravel()

    def bits_to_symbols(self, bits) -> np.ndarray:
        return self.points[self.bits_to_indices(bits)]

    def symbols_to_bits(self, symbols) -> np.ndarray:
        return self.indices_to_bits(self.index_of(symbols))


def build_qam(order: int, scale_mode: str = "unit_energy") -> Constellation:
    """Square Gray-coded QAM.

    ``scale_mode="integer"`` keeps the odd-integer lattice (``±1±1j`` for
    4-QAM); ``"unit_energy"`` divides it by its RMS amplitude.
    """
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported QAM order {order}; expected one of {SUPPORTED_ORDERS}")
    if scale_mode not in SCALE_MODES:
        raise ValueError(f"unknown scale mode {scale_mode!r}")
    bits = order.bit_length() - 1
    half = bits // 2
    levels = _gray_pam_levels(half)
    labels = np.arange(order)
    # high half of the label drives the in-phase axis, low half quadrature
    points = levels[labels >> half] + 1j * levels[labels & ((1 << half) - 1)]
    scale = 1.0
    if scale_mode == "unit_energy":
        scale = 1.0 / np.sqrt(np.mean(np.abs(points) ** 2))
        points = points * scale
    return Constellation(points=points, bits_per_symbol=bits, scale=float(scale))
