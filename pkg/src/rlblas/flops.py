"""Flop ledger and the fixed cost model used by every detector.

Weights: complex multiply 6, complex add/subtract 2, real multiply, add and
compare 1, real divide 4, square root 8.  ``exp`` is charged like a square
root.  Matrix products are charged as dense (no Hermitian shortcut).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OPS = ("cmul", "cadd", "rmul", "radd", "rcmp", "rdiv", "sqrt", "exp")
WEIGHTS = {"cmul": 6, "cadd": 2, "rmul": 1, "radd": 1, "rcmp": 1, "rdiv": 4, "sqrt": 8, "exp": 8}
WEIGHT_VECTOR = np.array([WEIGHTS[op] for op in OPS], dtype=np.int64)
OP_INDEX = {op: i for i, op in enumerate(OPS)}


@dataclass
class FlopLedger:
    counts: dict[str, int] = field(default_factory=lambda: dict.fromkeys(OPS, 0))

    def add(self, **ops: int) -> FlopLedger:
        for op, n in ops.items():
            if n < 0:
                raise ValueError(f"negative count for {op}")
            self.counts[op] += int(n)
        return self

    def add_vector(self, vec) -> FlopLedger:
        """Add counts packed in :data:`OPS` order (as the numba kernels return them)."""
        for op, n in zip(OPS, vec):
            self.counts[op] += int(n)
        return self

    def merge(self, other: FlopLedger) -> FlopLedger:
        for op in OPS:
            self.counts[op] += other.counts[op]
        return self

    def __add__(self, other: FlopLedger) -> FlopLedger:
        return FlopLedger(dict(self.counts)).merge(other)

    @property
    def total(self) -> int:
        return sum(WEIGHTS[op] * n for op, n in self.counts.items())


def charge(ledger: FlopLedger | None, **ops: int) -> None:
    if ledger is not None:
        ledger.add(**ops)


# cost formulas for the dense kernels

def matmul(ledger, m: int, n: int, p: int) -> None:
    """Complex (m x n) @ (n x p)."""
    charge(ledger, cmul=m * n * p, cadd=m * p * (n - 1))


def cholesky(ledger, n: int) -> None:
    """Complex Hermitian Cholesky, n x n."""
    charge(ledger, cmul=n * (n - 1) * (n + 1) // 6, cadd=n * (n - 1) * (n + 1) // 6,
           rdiv=n * (n - 1), sqrt=n)


def tri_solve(ledger, n: int, nrhs: int = 1) -> None:
    """One complex triangular solve with ``nrhs`` right-hand sides."""
    charge(ledger, cmul=nrhs * n * (n - 1) // 2, cadd=nrhs * n * (n - 1) // 2, rdiv=2 * nrhs * n)


def nearest_point(ledger, count: int, order: int) -> None:
    """Slicing ``count`` values against an ``order``-point alphabet."""
    charge(ledger, cadd=count * order, rmul=2 * count * order, radd=count * order,
           rcmp=count * (order - 1))
