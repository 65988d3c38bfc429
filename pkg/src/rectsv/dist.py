"""Entry distributions, empirical concentration functions and the
shift-and-case selection that opens the proof of the main theorem."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import integrate, special

from rectsv.errors import ConfigurationError, PreconditionError
from rectsv.rng import uniform_grid

FAMILIES = ("gaussian", "cauchy", "pareto", "rademacher", "uniform", "twopoint", "constant", "empirical")
CONTINUOUS = ("gaussian", "cauchy", "pareto", "uniform")
DISCRETE = ("rademacher", "twopoint", "constant")

# slack for float noise in "Q <= 1 - beta" (e.g. Cauchy gives 0.5000000000000001 at beta=1/2)
PRECONDITION_SLACK = 1e-12


@dataclass(frozen=True)
class EntryDistribution:
    """Law of ``loc + scale * X`` with X drawn from ``family``.

    ``params`` holds the family parameters (pareto: (a,), uniform: (a, b),
    twopoint: (p, x1, x2) with P{X = x1} = p, constant: (c,), empirical: the
    sorted samples).
    """

    family: str
    params: tuple = ()
    scale: float = 1.0
    loc: float = 0.0
    _atoms: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        f, p = self.family, self.params
        if f not in FAMILIES:
            raise ConfigurationError(f"unknown family {f!r}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ConfigurationError(f"scale must be positive and finite, got {self.scale}")
        if not math.isfinite(self.loc):
            raise ConfigurationError("loc must be finite")
        expected = {"gaussian": 0, "cauchy": 0, "rademacher": 0, "pareto": 1, "constant": 1, "uniform": 2, "twopoint": 3}
        if f in expected and len(p) != expected[f]:
            raise ConfigurationError(f"{f} takes {expected[f]} parameter(s), got {len(p)}")
        if not all(math.isfinite(v) for v in p):
            raise ConfigurationError(f"{f} parameters must be finite")
        if f == "pareto" and not p[0] > 0:
            raise ConfigurationError(f"pareto shape must be > 0, got {p[0]}")
        if f == "uniform" and not p[0] < p[1]:
            raise ConfigurationError(f"uniform needs a < b, got {p}")
        if f == "twopoint" and not 0 < p[0] < 1:
            raise ConfigurationError(f"twopoint probability must lie in (0,1), got {p[0]}")
        if f == "empirical":
            if len(p) == 0:
                raise ConfigurationError("empirical law needs at least one sample")
            object.__setattr__(self, "params", tuple(sorted(float(v) for v in p)))
        if f in DISCRETE:
            object.__setattr__(self, "_atoms", self._build_atoms())
        elif f == "empirical":
            xs = np.sort(self.loc + self.scale * np.asarray(self.params))
            xs.setflags(write=False)
            object.__setattr__(self, "_atoms", (xs,))

    # constructors -------------------------------------------------------

    @classmethod
    def gaussian(cls, scale=1.0):
        return cls("gaussian", (), scale)

    @classmethod
    def cauchy(cls, scale=1.0):
        return cls("cauchy", (), scale)

    @classmethod
    def pareto(cls, a, scale=1.0):
        return cls("pareto", (float(a),), scale)

    @classmethod
    def rademacher(cls, scale=1.0):
        return cls("rademacher", (), scale)

    @classmethod
    def uniform(cls, a, b):
        return cls("uniform", (float(a), float(b)))

    @classmethod
    def twopoint(cls, p, x1, x2):
        return cls("twopoint", (float(p), float(x1), float(x2)))

    @classmethod
    def constant(cls, c):
        return cls("constant", (float(c),))

    @classmethod
    def empirical(cls, samples):
        return cls("empirical", tuple(np.asarray(samples, dtype=float).ravel()))

    def shifted(self, c: float) -> "EntryDistribution":
        return replace(self, loc=self.loc + c)

    def scaled(self, s: float) -> "EntryDistribution":
        """Law of ``s * xi``."""
        return replace(self, scale=self.scale * s, loc=self.loc * s)

    def without_loc(self) -> "EntryDistribution":
        return replace(self, loc=0.0)

    @property
    def is_continuous(self) -> bool:
        return self.family in CONTINUOUS

    @property
    def is_empirical(self) -> bool:
        return self.family == "empirical"

    def spec(self) -> str:
        """Inverse of :func:`parse_distribution` (empirical laws print their size only)."""
        if self.family == "empirical":
            base = f"empirical[{len(self.params)}]"
        elif self.params:
            base = self.family + ":" + ",".join(repr(float(v)) for v in self.params)
        else:
            base = self.family
        if self.scale != 1.0:
            base += f"|scale={self.scale!r}"
        if self.loc != 0.0:
            base += f"|loc={self.loc!r}"
        return base

    # atoms / samples in x-space -----------------------------------------

    def _build_atoms(self):
        f, p = self.family, self.params
        if f == "rademacher":
            vals, probs = [-1.0, 1.0], [0.5, 0.5]
        elif f == "constant":
            vals, probs = [p[0]], [1.0]
        else:
            prob, x1, x2 = p
            if x1 == x2:
                vals, probs = [x1], [1.0]
            elif x1 < x2:
                vals, probs = [x1, x2], [prob, 1.0 - prob]
            else:
                vals, probs = [x2, x1], [1.0 - prob, prob]
        vals = [self.loc + self.scale * v for v in vals]
        return tuple(vals), tuple(probs)

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Support points and probabilities (discrete and empirical laws)."""
        if self.family in DISCRETE:
            v, p = self._atoms
            return np.array(v), np.array(p)
        if self.is_empirical:
            s = self.support_samples()
            return s, np.full(s.size, 1.0 / s.size)
        raise TypeError(f"{self.family} has no atoms")

    def support_samples(self) -> np.ndarray:
        """Sorted samples of an empirical law, in x-space."""
        if not self.is_empirical:
            raise TypeError("only empirical laws carry samples")
        return self._atoms[0]

    # distribution functions ---------------------------------------------

    def _std(self, x):
        return (np.asarray(x, dtype=float) - self.loc) / self.scale

    def _base_cdf(self, u):
        f, p = self.family, self.params
        if f == "gaussian":
            return special.ndtr(u)
        if f == "cauchy":
            return 0.5 + np.arctan(u) / np.pi
        if f == "pareto":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(u >= 1.0, 1.0 - np.power(np.maximum(u, 1.0), -p[0]), 0.0)
        if f == "uniform":
            return np.clip((u - p[0]) / (p[1] - p[0]), 0.0, 1.0)
        raise AssertionError(f)

    def cdf(self, x):
        """P{xi <= x}."""
        if self.is_continuous:
            return self._base_cdf(self._std(x))
        vals, probs = self.atoms()
        x = np.asarray(x, dtype=float)
        if self.is_empirical:
            return np.searchsorted(vals, x, side="right") / vals.size
        cum = np.concatenate([[0.0], np.cumsum(probs)])
        return np.minimum(cum[np.searchsorted(vals, x, side="right")], 1.0)

    def cdf_left(self, x):
        """P{xi < x}."""
        if self.is_continuous:
            return self.cdf(x)
        vals, probs = self.atoms()
        x = np.asarray(x, dtype=float)
        if self.is_empirical:
            return np.searchsorted(vals, x, side="left") / vals.size
        cum = np.concatenate([[0.0], np.cumsum(probs)])
        return np.minimum(cum[np.searchsorted(vals, x, side="left")], 1.0)

    def interval_mass(self, lo, hi):
        """P{lo <= xi <= hi}; zero for empty intervals."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        out = np.asarray(self.cdf(hi) - self.cdf_left(lo), dtype=float)
        out = np.where(hi < lo, 0.0, np.maximum(out, 0.0))
        return float(out) if out.ndim == 0 else out

    def quantile(self, p):
        """Generalised inverse inf{x : P{xi <= x} >= p}."""
        p = np.asarray(p, dtype=float)
        f, prm = self.family, self.params
        if f in CONTINUOUS:
            if f == "gaussian":
                base = special.ndtri(p)
            elif f == "cauchy":
                base = np.tan(np.pi * (p - 0.5))
            elif f == "pareto":
                base = np.power(1.0 - p, -1.0 / prm[0])
            else:
                base = prm[0] + (prm[1] - prm[0]) * p
            return self.loc + self.scale * base
        if self.is_empirical:
            vals = self.support_samples()
            k = _order_index(vals.size, p)
            return vals[k]
        vals, probs = self.atoms()
        cum = np.cumsum(probs)
        cum[-1] = 1.0
        idx = np.minimum(np.searchsorted(cum, p, side="left"), len(vals) - 1)
        return vals[idx]

    def pdf(self, x):
        if not self.is_continuous:
            raise TypeError(f"{self.family} has no density")
        u = self._std(x)
        f, p = self.family, self.params
        if f == "gaussian":
            d = np.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)
        elif f == "cauchy":
            d = 1.0 / (math.pi * (1.0 + u * u))
        elif f == "pareto":
            with np.errstate(divide="ignore"):
                d = np.where(u >= 1.0, p[0] * np.power(np.maximum(u, 1.0), -p[0] - 1.0), 0.0)
        else:
            d = np.where((u >= p[0]) & (u <= p[1]), 1.0 / (p[1] - p[0]), 0.0)
        return d / self.scale

    def partial_expectation(self, lo: float, hi: float) -> float:
        """E[xi; lo <= xi <= hi]."""
        if hi < lo:
            return 0.0
        if self.is_continuous:
            a, b = self._effective_support(lo, hi)
            if b <= a:
                return 0.0
            val, _ = integrate.quad(lambda x: x * float(self.pdf(x)), a, b, epsabs=1e-15, epsrel=1e-10, limit=200)
            return val
        vals, probs = self.atoms()
        mask = (vals >= lo) & (vals <= hi)
        if self.is_empirical:
            return float(vals[mask].sum() / vals.size)
        return float(np.dot(vals[mask], probs[mask]))

    def _effective_support(self, lo, hi):
        f, p = self.family, self.params
        if f == "pareto":
            lo = max(lo, self.loc + self.scale)
        elif f == "uniform":
            lo = max(lo, self.loc + self.scale * p[0])
            hi = min(hi, self.loc + self.scale * p[1])
        return lo, hi

    def concentration(self, alpha: float) -> float:
        """Levy concentration function sup_l P{|xi - l| <= alpha}.

        Closed form for the analytic families; the exact empirical supremum
        for empirical laws.
        """
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
        f, p, s = self.family, self.params, self.scale
        if f == "gaussian":
            return float(special.erf(alpha / (s * math.sqrt(2.0))))
        if f == "cauchy":
            return float(2.0 / math.pi * math.atan(alpha / s))
        if f == "pareto":
            return float(1.0 - (1.0 + 2.0 * alpha / s) ** (-p[0]))
        if f == "uniform":
            return float(min(1.0, 2.0 * alpha / (s * (p[1] - p[0]))))
        if f == "empirical":
            return concentration_estimate(self.support_samples(), alpha).estimate
        vals, probs = self.atoms()
        right = np.searchsorted(vals, vals + 2.0 * alpha, side="right")
        cum = np.concatenate([[0.0], np.cumsum(probs)])
        return float(min(1.0, np.max(cum[right] - cum[:-1])))

    def sample(self, seed: int, rows: int, cols: int) -> np.ndarray:
        return sample_matrix(self, rows, cols, seed)


def _order_index(M: int, p):
    """0-based index of the ceil(M p)-th order statistic, robust to float noise.

    Chooses the smallest k with k/M >= p evaluated in floating point, the
    same arithmetic used by the empirical cdf.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    out = np.empty(p.shape, dtype=np.int64)
    for idx, q in np.ndenumerate(p):
        k = max(1, math.ceil(M * q))
        while k > 1 and (k - 1) / M >= q:
            k -= 1
        while k < M and k / M < q:
            k += 1
        out[idx] = k - 1
    return out if out.size > 1 else out[0]


def parse_distribution(spec: str) -> EntryDistribution:
    """Parse CLI strings such as ``pareto:1.5``, ``uniform:0,10`` or
    ``empirical:samples.txt``; optional ``|scale=S`` and ``|loc=L`` suffixes."""
    parts = spec.strip().split("|")
    head, mods = parts[0], parts[1:]
    name, _, arg = head.partition(":")
    name = name.strip().lower()
    try:
        if name == "empirical":
            if not arg:
                raise ConfigurationError("empirical needs a path: empirical:PATH")
            text = Path(arg).read_text()
            values = [float(line) for line in text.split() if line.strip()]
            d = EntryDistribution.empirical(values)
        else:
            params = tuple(float(v) for v in arg.split(",")) if arg else ()
            d = EntryDistribution(name, params)
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"cannot parse distribution {spec!r}: {exc}") from exc
    for mod in mods:
        key, _, val = mod.partition("=")
        key = key.strip()
        if key not in ("scale", "loc"):
            raise ConfigurationError(f"unknown modifier {key!r} in {spec!r}")
        try:
            num = float(val)
        except ValueError as exc:
            raise ConfigurationError(f"bad {key} value in {spec!r}") from exc
        d = replace(d, **{key: num})
    return d


def sample_matrix(dist: EntryDistribution, N: int, n: int, seed: int) -> np.ndarray:
    """N x n matrix of i.i.d. draws; entry (i, j) depends only on (dist, seed, i, j)."""
    if N < 1 or n < 1:
        raise ValueError(f"need positive dimensions, got {N}x{n}")
    if N < n:
        raise ValueError(f"need N >= n, got {N}x{n}")
    base = np.asarray(dist.without_loc().quantile(uniform_grid(seed, N, n)), dtype=float)
    if dist.loc != 0.0:
        base = base + dist.loc
    return base


# concentration function -----------------------------------------------------


@dataclass(frozen=True)
class ConcentrationQuery:
    alpha: float
    estimate: float
    sample_count: int
    ci_halfwidth: float


def concentration_estimate(samples: Sequence[float], alpha: float) -> ConcentrationQuery:
    """Exact empirical sup over windows [l - alpha, l + alpha].

    The supremum is attained by a window whose left edge sits on a sample, so
    a sliding window over the sorted samples suffices.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("concentration_estimate needs at least one sample")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    M = x.size
    right = np.searchsorted(x, x + 2.0 * alpha, side="right")
    left = np.searchsorted(x, x, side="left")
    q = float(np.max(right - left)) / M
    if 2.0 * alpha >= x[-1] - x[0]:
        q = 1.0  # x + 2 alpha can round below the maximum
    return ConcentrationQuery(alpha=float(alpha), estimate=q, sample_count=M,
                              ci_halfwidth=1.96 * math.sqrt(q * (1.0 - q) / M))


# shift and case selection ---------------------------------------------------


class Case(str, Enum):
    RIGHT_DEFICIENT = "right_deficient"
    LEFT_DEFICIENT = "left_deficient"
    TWO_SIDED = "two_sided"


@dataclass(frozen=True)
class CaseSelection:
    z: float
    case_id: Case
    gamma: float
    left_mass: float
    right_mass: float
    quantile: float  # the beta/2-quantile, i.e. z - 1 without re-rounding
    concentration: float  # measured Q(xi, 1)


def select_shift_and_case(dist: EntryDistribution, beta: float, N: int) -> CaseSelection:
    """Centre z with z - 1 a beta/2-quantile, and the three-way case split
    on the masses of [z - sqrt(N), z - 1] and [z + 1, z + sqrt(N)]."""
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0,1), got {beta}")
    if N < 4:
        raise ValueError(f"need N >= 4, got {N}")
    q1 = dist.concentration(1.0)
    if q1 > 1.0 - beta + PRECONDITION_SLACK:
        raise PreconditionError(
            f"anti-concentration fails: Q(xi, 1) = {q1:.6g} > 1 - beta = {1 - beta:.6g}", measured=q1
        )
    gamma = beta / 4.0
    q = float(dist.quantile(beta / 2.0))
    z = q + 1.0
    root = math.sqrt(N)
    left = dist.interval_mass(z - root, q)
    right = dist.interval_mass(z + 1.0, z + root)
    if min(left, right) >= gamma:
        case = Case.TWO_SIDED
    elif right < gamma:
        case = Case.RIGHT_DEFICIENT
    else:
        case = Case.LEFT_DEFICIENT
    return CaseSelection(z=z, case_id=case, gamma=gamma, left_mass=float(left),
                         right_mass=float(right), quantile=q, concentration=q1)
