"""H-parts of scalars and matrices, the regular/irregular split, and generators
of the subspace (M + M')(E^perp) + (<M>_Hbar + M')(E) for coordinate E."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of closed, sorted, strictly disjoint intervals."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        for lo, hi in ivs:
            if math.isnan(lo) or math.isnan(hi) or lo > hi:
                raise ValueError(f"bad interval [{lo}, {hi}]")
        for (_, h1), (l2, _) in zip(ivs, ivs[1:]):
            if not h1 < l2:
                raise ValueError(f"intervals must be sorted and disjoint: {ivs}")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def of(cls, *pairs) -> "IntervalUnion":
        return cls(tuple(sorted(pairs)))

    @classmethod
    def parse(cls, text: str) -> "IntervalUnion":
        """Parse ``lo1:hi1,lo2:hi2,...``."""
        pairs = []
        for chunk in text.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            lo, sep, hi = chunk.partition(":")
            if not sep:
                raise ValueError(f"expected lo:hi, got {chunk!r}")
            pairs.append((float(lo), float(hi)))
        return cls(tuple(sorted(pairs)))

    def format(self) -> str:
        return ",".join(f"{lo!r}:{hi!r}" for lo, hi in self.intervals)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (x >= lo) & (x <= hi)
        return out

    def __contains__(self, x) -> bool:
        return bool(self.contains(x))

    def sup_abs(self) -> float:
        """max |x| over the set (0 for the empty union)."""
        if not self.intervals:
            return 0.0
        return max(abs(self.intervals[0][0]), abs(self.intervals[-1][1]))

    def shifted(self, c: float) -> "IntervalUnion":
        return IntervalUnion(tuple((lo + c, hi + c) for lo, hi in self.intervals))

    def gap(self) -> float:
        """Smallest distance between consecutive intervals (inf for one interval)."""
        if len(self.intervals) < 2:
            return math.inf
        return min(l2 - h1 for (_, h1), (l2, _) in zip(self.intervals, self.intervals[1:]))

    def __or__(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion(tuple(sorted(self.intervals + other.intervals)))


def truncate(x, H: IntervalUnion):
    """H-part: x where x lies in H, 0 elsewhere (entrywise for arrays)."""
    arr = np.asarray(x, dtype=float)
    out = np.where(H.contains(arr), arr, 0.0)
    return float(out) if out.ndim == 0 else out


def truncate_complement(x, H: IntervalUnion):
    """Complementary part: x where x lies outside H, 0 elsewhere."""
    arr = np.asarray(x, dtype=float)
    out = np.where(H.contains(arr), 0.0, arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MatrixSplit:
    lam: float
    H: IntervalUnion
    regular: np.ndarray
    irregular: np.ndarray
    total: np.ndarray

    @property
    def shape(self):
        return self.total.shape


def split_matrix(A, B, lam: float, H: IntervalUnion) -> MatrixSplit:
    """A + B = regular + irregular with regular = <A - lam>_H.

    ``irregular`` is stored as (A + B) - regular. The sum regular + irregular
    reproduces A + B exactly only where that subtraction is exact (always when
    the entry's regular part is 0); elsewhere it can differ by an ulp.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: A {A.shape} vs B {B.shape}")
    total = A + B
    regular = truncate(A - lam, H)
    irregular = total - regular
    for arr in (regular, irregular, total):
        arr.setflags(write=False)
    return MatrixSplit(lam=float(lam), H=H, regular=regular, irregular=irregular, total=total)


def build_subspace_basis(M, Mp, H: IntervalUnion, J: Iterable[int]) -> np.ndarray:
    """Generators of (M + M')(E^perp) + (<M>_Hbar + M')(E), E = span{e_j : j in J}.

    Column j is col_j(M + M') for j outside J and col_j(<M>_Hbar + M') for j
    in J. Indices are 0-based.
    """
    M = np.asarray(M, dtype=float)
    Mp = np.asarray(Mp, dtype=float)
    if M.shape != Mp.shape:
        raise ValueError(f"shape mismatch: {M.shape} vs {Mp.shape}")
    n = M.shape[1]
    idx = _index_array(J, n)
    out = M + Mp
    if idx.size:
        out[:, idx] = truncate_complement(M[:, idx], H) + Mp[:, idx]
    return out


def _index_array(J: Iterable[int], n: int) -> np.ndarray:
    idx = np.asarray(sorted(set(int(j) for j in J)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise ValueError(f"index set {idx.tolist()} out of range for n = {n}")
    return idx


def generator_matrix(split: MatrixSplit, J: Sequence[int]) -> np.ndarray:
    """Columns col_j(D) for j outside J and col_j(irregular) for j in J."""
    D = split.total
    idx = _index_array(J, D.shape[1])
    out = np.array(D, copy=True)
    if idx.size:
        out[:, idx] = split.irregular[:, idx]
    return out
