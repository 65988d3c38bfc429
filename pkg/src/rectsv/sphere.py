"""Peaky / almost-sparse / spread classification of unit vectors, the spread
witness, and grid-based epsilon-nets (dense and support-sparsified)."""

from __future__ import annotations

import enum
import io
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Protocol, Sequence

import numpy as np

from rectsv.errors import PreconditionError, ResourceLimitError

UNIT_TOL = 1e-9
MEMBER_TOL = 1e-12
MAX_GRID_CELLS = 4_000_000
MAX_SUPPORTS = 100_000


# ---------------------------------------------------------------- classification

class Label(str, enum.Enum):
    PEAKY = "peaky"
    ALMOST_SPARSE = "almost_sparse"
    SPREAD = "spread"


@dataclass(frozen=True)
class VectorClass:
    label: Label
    theta: float
    m: int


def top_mass(y, m: int) -> float:
    """Sum of the m largest squared coordinates."""
    sq = np.square(np.asarray(y, dtype=float))
    if m >= sq.size:
        return float(sq.sum())
    return float(np.sort(np.partition(sq, sq.size - m)[sq.size - m:]).sum())


def _as_unit(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("expected a non-empty vector")
    nrm = float(np.linalg.norm(y))
    if abs(nrm - 1.0) > UNIT_TOL:
        raise ValueError(f"expected a unit vector, got norm {nrm!r}")
    return y


def classify_vector(y, theta: float, m: int) -> VectorClass:
    y = _as_unit(y)
    if theta <= 0:
        raise ValueError("theta must be positive")
    if not 1 <= m <= y.size:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={y.size}")
    if float(np.max(np.abs(y))) >= theta:
        label = Label.PEAKY
    elif top_mass(y, m) >= 0.25:
        label = Label.ALMOST_SPARSE
    else:
        label = Label.SPREAD
    return VectorClass(label=label, theta=float(theta), m=int(m))


def quarter_root(N: int) -> int:
    """floor(N^{1/4}) in integer arithmetic."""
    return math.isqrt(math.isqrt(int(N)))


def spread_witness(y, m: int, N: int, *, require_spread: bool = True) -> tuple[int, ...]:
    """Block of small coordinates carrying a fair share of the norm.

    Coordinates with |y_j| <= 1/floor(N^{1/4}) are split, in index order,
    into consecutive blocks of size m; the block with the largest norm wins.
    Indices are 0-based. With ``require_spread=False`` the almost-sparse
    precondition is not enforced and the bounds are no longer guaranteed.
    """
    y = _as_unit(y)
    n = y.size
    if not (N >= n >= m >= 1):
        raise ValueError(f"need N >= n >= m >= 1, got N={N}, n={n}, m={m}")
    k = min(math.isqrt(N), n)
    mass = top_mass(y, k)
    if require_spread and mass >= 0.25:
        raise PreconditionError(
            f"vector is almost {k}-sparse (top-{k} mass {mass:.4g} >= 1/4)", measured=mass
        )
    cut = 1.0 / quarter_root(N)
    small = np.flatnonzero(np.abs(y) <= cut)
    best, best_norm = (), -1.0
    for start in range(0, small.size, m):
        block = small[start:start + m]
        w = float(np.dot(y[block], y[block]))
        if w > best_norm:
            best, best_norm = tuple(int(j) for j in block), w
    return best


def check_spread_witness(y, J: Sequence[int], m: int, N: int) -> list[str]:
    """Independent check of |J| <= m, ||y_J|| >= sqrt(m/n)/2 and ||y_J||_inf <= N^{-1/4}."""
    y = np.asarray(y, dtype=float)
    J = np.asarray(sorted(set(J)), dtype=np.int64)
    bad = []
    if J.size > m:
        bad.append(f"|J| = {J.size} > m = {m}")
    part = y[J]
    if math.sqrt(float(np.sum(part**2))) < 0.5 * math.sqrt(m / y.size):
        bad.append("block norm below sqrt(m/n)/2")
    q = 1
    while (q + 1) ** 4 <= N:
        q += 1
    if part.size and float(np.max(np.abs(part))) > 1.0 / q:
        bad.append("block has a coordinate above N^{-1/4}")
    return bad


# ---------------------------------------------------------------- target sets

class TargetSet(Protocol):
    def contains(self, X: np.ndarray) -> np.ndarray: ...
    def project(self, X: np.ndarray) -> np.ndarray: ...
    def radius(self, dim: int) -> float: ...


@dataclass(frozen=True)
class Shell:
    """{x : lo <= ||x|| <= hi, ||x||_inf <= cap}; sphere when lo = hi."""

    lo: float = 0.0
    hi: float = 1.0
    cap: float = math.inf

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi) or self.cap <= 0:
            raise ValueError(f"invalid shell {self}")

    def is_empty(self, dim: int) -> bool:
        return self.lo > self.cap * math.sqrt(dim) * (1 + MEMBER_TOL)

    def radius(self, dim: int) -> float:
        return min(self.hi, self.cap * math.sqrt(dim))

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        nrm = np.linalg.norm(X, axis=1)
        tol = MEMBER_TOL * max(1.0, self.hi)
        ok = (nrm >= self.lo - tol) & (nrm <= self.hi + tol)
        if math.isfinite(self.cap):
            ok &= np.max(np.abs(X), axis=1) <= self.cap * (1 + MEMBER_TOL)
        return ok

    def project(self, X) -> np.ndarray:
        """Nearest point of the set, row by row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = X.shape[1]
        if self.is_empty(d):
            raise ValueError("projection onto an empty shell")
        out = np.clip(X, -self.cap, self.cap)
        nb = np.linalg.norm(out, axis=1)
        big = nb > self.hi
        if np.any(big):
            out[big] = self._shrink(X[big])
        small = nb < self.lo
        if np.any(small):
            out[small] = self._grow(X[small])
        return out

    def _shrink(self, X):
        # box and ball(hi) are both convex: x = clip(c / (1 + mu)) with ||x|| = hi
        nx = np.linalg.norm(X, axis=1)
        a = np.zeros(len(X))
        b = nx / self.hi - 1.0
        for _ in range(200):
            mid = 0.5 * (a + b)
            nrm = np.linalg.norm(np.clip(X / (1 + mid)[:, None], -self.cap, self.cap), axis=1)
            over = nrm > self.hi
            a = np.where(over, mid, a)
            b = np.where(over, b, mid)
        return np.clip(X / (1 + b)[:, None], -self.cap, self.cap)

    def _grow(self, X):
        # optimum lies on ||x|| = lo and maximizes <x, c> over the box, i.e.
        # x = clip(c / nu); zero coordinates absorb what the box cannot hold
        out = np.empty_like(X)
        supp = X != 0
        k = supp.sum(axis=1)
        if not math.isfinite(self.cap):
            nx = np.linalg.norm(X, axis=1)
            ok = nx > 0
            out[ok] = X[ok] * (self.lo / nx[ok])[:, None]
            special = ~ok
        else:
            special = self.cap * np.sqrt(k) <= self.lo
            reg = ~special
            if np.any(reg):
                C = np.abs(X[reg])
                pos = np.where(C > 0, C, np.inf)
                a = pos.min(axis=1) / self.cap
                b = np.linalg.norm(C, axis=1) / self.lo
                for _ in range(200):
                    mid = 0.5 * (a + b)
                    ok = np.linalg.norm(np.minimum(C / mid[:, None], self.cap), axis=1) >= self.lo
                    a = np.where(ok, mid, a)
                    b = np.where(ok, b, mid)
                out[reg] = np.clip(X[reg] / a[:, None], -self.cap, self.cap)
        for row in np.flatnonzero(special):
            c = X[row]
            x = np.where(supp[row], np.sign(c) * min(self.cap, self.lo), 0.0)
            if not math.isfinite(self.cap) and k[row]:
                x = c * (self.lo / np.linalg.norm(c))
            out[row] = self._fill(x, ~supp[row])
        return out

    def _fill(self, x, free):
        need = self.lo**2 - float(np.dot(x, x))
        k = int(free.sum())
        if need > 0 and k:
            v = min(self.cap, math.sqrt(need / k))
            x = x.copy()
            x[free] = v
        return x


@dataclass(frozen=True)
class FiniteSet:
    """A finite point set (e.g. S^0 = {-1, 1})."""

    points: tuple[tuple[float, ...], ...]

    def _arr(self):
        return np.asarray(self.points, dtype=float)

    def radius(self, dim: int) -> float:
        return float(np.max(np.linalg.norm(self._arr(), axis=1)))

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        P = self._arr()
        d = np.linalg.norm(X[:, None, :] - P[None, :, :], axis=2)
        return d.min(axis=1) <= MEMBER_TOL

    def project(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        P = self._arr()
        d = np.linalg.norm(X[:, None, :] - P[None, :, :], axis=2)
        return P[d.argmin(axis=1)]


# ---------------------------------------------------------------- nets

@dataclass(frozen=True)
class Net:
    points: np.ndarray  # (K, n), dense storage of sparse points
    supports: tuple[tuple[int, ...], ...]
    epsilon: float
    m: int
    cardinality_bound: float
    target: object = None
    supports_used: tuple[tuple[int, ...], ...] = field(default=(), repr=False)

    def __len__(self) -> int:
        return len(self.supports)

    def __iter__(self) -> Iterator[tuple[np.ndarray, tuple[int, ...]]]:
        return iter(zip(self.points, self.supports))

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _exact_supports(P: np.ndarray) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(j) for j in np.flatnonzero(row)) for row in P)


def _grid_points(dim: int, epsilon: float, target, max_cells: int) -> np.ndarray:
    R = float(target.radius(dim))
    if R == 0.0:
        P = np.zeros((1, dim))
        return P[target.contains(P)]
    pitch = epsilon / math.sqrt(dim)
    k = max(1, math.ceil(2 * R / pitch))
    if float(k) ** dim > max_cells:
        raise ResourceLimitError(
            f"grid of {k}^{dim} cells exceeds the limit of {max_cells}; use a larger epsilon"
        )
    axis = -R + pitch * (np.arange(k) + 0.5)
    C = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    # a cell centre can only be within epsilon/2 of K if it lies within R + epsilon/2 of 0
    C = C[np.linalg.norm(C, axis=1) <= R + 0.5 * epsilon]
    if not len(C):
        return np.zeros((0, dim))
    P = target.project(C)
    keep = np.linalg.norm(P - C, axis=1) <= 0.5 * epsilon * (1 + 1e-12)
    P = P[keep]
    P = P[target.contains(P)]
    return np.unique(P, axis=0)


def ball_net(dim: int, epsilon: float, target=None, *, max_dim: int = 10,
             max_cells: int = MAX_GRID_CELLS) -> Net:
    """Grid net of pitch epsilon/sqrt(dim), each cell snapped to the nearest
    point of ``target`` when that point is within epsilon/2 of the cell centre.

    Every point of the target is within epsilon/2 of its cell centre, whose
    nearest target point is then within epsilon/2 too, so the net covers at
    distance epsilon. ``target`` must provide contains/project/radius
    (:class:`Shell`, :class:`FiniteSet`); default is the unit ball.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if dim > max_dim:
        raise ResourceLimitError(f"dense nets are limited to dim <= {max_dim}, got {dim}")
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0,1], got {epsilon}")
    target = Shell() if target is None else target
    if isinstance(target, Shell) and target.is_empty(dim):
        P = np.zeros((0, dim))
    else:
        P = _grid_points(dim, epsilon, target, max_cells)
    return Net(points=P, supports=_exact_supports(P), epsilon=float(epsilon), m=dim,
               cardinality_bound=(3.0 / epsilon) ** dim, target=target,
               supports_used=(tuple(range(dim)),))


def sparsified_net(n: int, m: int, epsilon: float, target=None, support_policy="enumerate",
                   *, seed: int = 0, c_net: float = 6 * math.e,
                   max_supports: int = MAX_SUPPORTS, max_cells: int = MAX_GRID_CELLS) -> Net:
    """Union over m-subsets J of a net for ``target`` restricted to span{e_j : j in J}.

    Supports of size m suffice: every smaller support sits inside one of them.
    ``target`` must be invariant under coordinate permutations (a
    :class:`Shell`), so a single m-dimensional net is embedded in each support.
    ``support_policy`` is "enumerate" or ("sample", k).
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0,1], got {epsilon}")
    target = Shell() if target is None else target
    if not isinstance(target, Shell):
        raise TypeError("sparsified nets need a permutation-invariant Shell target")
    total = math.comb(n, m)
    if support_policy == "enumerate":
        if total > max_supports:
            raise ResourceLimitError(
                f"C({n},{m}) = {total} supports exceed {max_supports}; use support_policy=('sample', k)"
            )
        supports = list(itertools.combinations(range(n), m))
    else:
        kind, k = support_policy
        if kind != "sample" or k < 1:
            raise ValueError(f"unknown support policy {support_policy!r}")
        rng = np.random.default_rng(seed)
        if k >= total and total <= max_supports:
            supports = list(itertools.combinations(range(n), m))
        else:
            seen = set()
            while len(seen) < min(k, total):
                seen.add(tuple(sorted(int(j) for j in rng.choice(n, size=m, replace=False))))
            supports = sorted(seen)
    base = ball_net(m, epsilon, target, max_cells=max_cells).points
    if len(base) * len(supports) > 50 * max_cells:
        raise ResourceLimitError(f"net would hold {len(base) * len(supports)} points")
    rows = []
    for J in supports:
        P = np.zeros((len(base), n))
        P[:, list(J)] = base
        rows.append(P)
    P = np.unique(np.concatenate(rows), axis=0) if rows else np.zeros((0, n))
    return Net(points=P, supports=_exact_supports(P), epsilon=float(epsilon), m=m,
               cardinality_bound=(c_net * n / (epsilon * m)) ** m, target=target,
               supports_used=tuple(supports))


def projected_distance(y: np.ndarray, net: Net) -> float:
    """min over net points y' of ||y restricted to supp y' - y'||."""
    y = np.asarray(y, dtype=float)
    if not len(net):
        return math.inf
    mask = net.points != 0
    diff = np.where(mask, y[None, :], 0.0) - net.points
    return float(np.min(np.linalg.norm(diff, axis=1)))


# ---------------------------------------------------------------- CSV

def format_net(points: Sequence[np.ndarray]) -> str:
    """One line per point: ``j:v;j:v`` with 0-based j, ``-`` for the zero vector."""
    out = io.StringIO()
    for y in points:
        nz = np.flatnonzero(y)
        out.write(";".join(f"{int(j)}:{float(y[j])!r}" for j in nz) if nz.size else "-")
        out.write("\n")
    return out.getvalue()


def parse_net(text: str, n: int | None = None) -> np.ndarray:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        pairs = {}
        if line != "-":
            for chunk in line.split(";"):
                j, sep, v = chunk.partition(":")
                if not sep:
                    raise ValueError(f"line {lineno}: expected j:v, got {chunk!r}")
                pairs[int(j)] = float(v)
        entries.append(pairs)
    width = max((max(p) + 1 for p in entries if p), default=0)
    if n is None:
        n = width
    elif width > n:
        raise ValueError(f"net index {width - 1} out of range for n = {n}")
    P = np.zeros((len(entries), n))
    for row, pairs in enumerate(entries):
        for j, v in pairs.items():
            if j < 0:
                raise ValueError(f"negative index {j}")
            P[row, j] = v
    return P


def write_net(path, points) -> None:
    Path(path).write_text(format_net(points))


def read_net(path, n: int | None = None) -> np.ndarray:
    return parse_net(Path(path).read_text(), n)
