"""Deterministic kernel: distances to column spans, extreme singular values,
and net-based lower-bound certificates h - epsilon * ||regular||."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from rectsv.errors import PreconditionError
from rectsv.hpart import MatrixSplit, generator_matrix
from rectsv.sphere import Net

RANK_RTOL = 1e-10


def orthonormal_basis(G) -> np.ndarray:
    """Orthonormal basis of span(G) by Gram-Schmidt with re-orthogonalisation.

    A column is dropped when its residual is <= RANK_RTOL times its norm.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2:
        raise ValueError("generators must be a matrix")
    Q = np.zeros((G.shape[0], 0))
    for col in G.T:
        nrm = float(np.linalg.norm(col))
        if nrm == 0.0:
            continue
        r = col - Q @ (Q.T @ col)
        r = r - Q @ (Q.T @ r)
        rn = float(np.linalg.norm(r))
        if rn <= RANK_RTOL * nrm:
            continue
        Q = np.column_stack([Q, r / rn])
    return Q


def _residual(v: np.ndarray, Q: np.ndarray) -> float:
    r = v - Q @ (Q.T @ v)
    r = r - Q @ (Q.T @ r)
    return float(np.linalg.norm(r))


def distance_to_subspace(v, generators) -> float:
    """||v - P_F v|| with F the column span of ``generators``."""
    v = np.asarray(v, dtype=float)
    G = np.asarray(generators, dtype=float)
    if G.ndim == 1:
        G = G[:, None]
    if G.shape[0] != v.shape[0]:
        raise ValueError(f"generators have {G.shape[0]} rows, vector has {v.shape[0]}")
    return _residual(v, orthonormal_basis(G))


def singular_extremes(M) -> tuple[float, float]:
    """(s_max, s_min) of an N x n matrix with N >= n."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("expected a matrix")
    N, n = M.shape
    if not N >= n >= 1:
        raise ValueError(f"need N >= n >= 1, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[0]), float(s[-1])


@dataclass(frozen=True)
class Certificate:
    h: float
    epsilon: float
    regular_norm: float
    lower_bound: float
    per_point: tuple[tuple[int, float], ...]
    target_set: str = ""
    supports: tuple[tuple[int, ...], ...] = field(default=(), repr=False)

    @property
    def vacuous(self) -> bool:
        return not self.lower_bound > 0

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "epsilon": self.epsilon,
            "regular_norm": self.regular_norm,
            "lower_bound": self.lower_bound,
            "vacuous": self.vacuous,
            "target_set": self.target_set,
            "per_point": [[i, d] for i, d in self.per_point],
        }


def operator_norm(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def certify_general(split: MatrixSplit, net: Net | Sequence, subspace_supports: Mapping | Sequence | None,
                    epsilon: float, full_space_mode: bool = False, target_set: str = "") -> Certificate:
    """Lower bound h - epsilon ||regular|| on inf ||D y|| over the set the net covers.

    For net point y' with coordinate set J (J must contain supp y'), the
    distance is from regular @ y' to the span of col_j(D), j not in J, and
    col_j(irregular), j in J. ``subspace_supports`` maps point index to J
    (a sequence aligned with the net also works; None means J = supp y').
    Whether the net actually covers the target set is the caller's business.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    points = net.points if isinstance(net, Net) else np.asarray(net, dtype=float)
    points = np.atleast_2d(points)
    n = split.total.shape[1]
    if points.size and points.shape[1] != n:
        raise ValueError(f"net points have dimension {points.shape[1]}, matrix has {n} columns")
    full = tuple(range(n))
    groups: dict[tuple[int, ...], list[int]] = {}
    used = []
    for idx, y in enumerate(points):
        supp = tuple(int(j) for j in np.flatnonzero(y))
        if full_space_mode:
            J = full
        elif subspace_supports is None:
            J = supp
        else:
            J = tuple(sorted(set(int(j) for j in subspace_supports[idx])))
        if not set(supp) <= set(J):
            raise PreconditionError(f"net point {idx}: support {supp} not inside J = {J}", measured=supp)
        groups.setdefault(J, []).append(idx)
        used.append(J)
    dists = np.empty(len(points))
    for J, members in groups.items():
        Q = orthonormal_basis(generator_matrix(split, J))
        V = split.regular @ points[members].T
        R = V - Q @ (Q.T @ V)
        R = R - Q @ (Q.T @ R)
        dists[members] = np.linalg.norm(R, axis=0)
    per_point = [(i, float(d)) for i, d in enumerate(dists)]
    h = min((d for _, d in per_point), default=math.inf)
    gnorm = operator_norm(split.regular)
    lower = h - epsilon * gnorm
    return Certificate(h=h, epsilon=float(epsilon), regular_norm=gnorm, lower_bound=lower,
                       per_point=tuple(per_point), target_set=target_set, supports=tuple(used))
