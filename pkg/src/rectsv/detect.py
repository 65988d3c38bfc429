"""Dyadic interval detection: levels l1, l2 and a shift lambda making the
H-part of xi - lambda mean-zero, with mass and separation guarantees."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from rectsv.bounds import ConstantsConfig
from rectsv.dist import EntryDistribution
from rectsv.errors import DetectionError, PreconditionError
from rectsv.hpart import IntervalUnion


def max_level(N: int) -> int:
    """floor(log2 sqrt(N)), i.e. the largest l with 4^l <= N."""
    if N < 1:
        raise ValueError("N must be positive")
    ell = 0
    while 4 ** (ell + 1) <= N:
        ell += 1
    return ell


@dataclass(frozen=True)
class DetectionResult:
    ell1: int
    ell2: int
    ell: int
    lam: float
    H1: IntervalUnion
    H2: IntervalUnion
    mass1: float
    mass2: float
    c_detect: float
    gamma: float
    z: float
    left_level_masses: tuple = field(default=(), repr=False)
    right_level_masses: tuple = field(default=(), repr=False)

    @property
    def H(self) -> IntervalUnion:
        return self.H1 | self.H2

    @property
    def threshold(self) -> float:
        return self.c_detect * self.gamma * 2.0 ** (-self.ell / 8.0)

    def to_dict(self) -> dict:
        return {
            "ell1": self.ell1,
            "ell2": self.ell2,
            "ell": self.ell,
            "lambda": self.lam,
            "h1": list(self.H1.intervals[0]),
            "h2": list(self.H2.intervals[0]),
            "mass1": self.mass1,
            "mass2": self.mass2,
        }


def _level_masses(dist: EntryDistribution, z: float, L: int, side: int) -> list[float]:
    out = []
    for ell in range(L + 1):
        if side < 0:
            lo, hi = z - 2.0 ** (ell + 1), z - 2.0**ell
        else:
            lo, hi = z + 2.0**ell, z + 2.0 ** (ell + 1)
        out.append(float(dist.interval_mass(lo, hi)))
    return out


def find_dyadic_intervals(dist: EntryDistribution, z: float, gamma: float, N: int,
                          cfg: ConstantsConfig = ConstantsConfig()) -> DetectionResult:
    """Smallest qualifying dyadic level on each side of z, then the conditional
    mean of xi over the two chosen annuli as the shift lambda."""
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0,1), got {gamma}")
    root = math.sqrt(N)
    left = dist.interval_mass(z - root, z - 1.0)
    right = dist.interval_mass(z + 1.0, z + root)
    if min(left, right) < gamma:
        raise PreconditionError(
            f"side masses ({left:.6g}, {right:.6g}) do not both reach gamma = {gamma:.6g}",
            measured=(left, right),
        )
    L = max_level(N)
    lm = _level_masses(dist, z, L, -1)
    rm = _level_masses(dist, z, L, +1)
    ell1 = next((l for l in range(L + 1) if lm[l] >= cfg.c_detect * gamma * 2.0 ** (-l / 8.0)), None)
    ell2 = next((l for l in range(L + 1) if rm[l] >= cfg.c_detect * gamma * 2.0 ** (-l / 8.0)), None)
    if ell1 is None or ell2 is None:
        raise DetectionError(
            f"no dyadic level reaches c_detect*gamma*2^(-l/8); left masses {lm}, right masses {rm}",
            level_masses={"left": lm, "right": rm},
        )
    a1, b1 = z - 2.0 ** (ell1 + 1), z - 2.0**ell1
    a2, b2 = z + 2.0**ell2, z + 2.0 ** (ell2 + 1)
    if dist.is_empirical:
        xs = dist.support_samples()
        members = xs[((xs >= a1) & (xs <= b1)) | ((xs >= a2) & (xs <= b2))]
        lam = float(members.mean())
    else:
        mass = lm[ell1] + rm[ell2]
        lam = (dist.partial_expectation(a1, b1) + dist.partial_expectation(a2, b2)) / mass
    ell = max(ell1, ell2)
    off = z - lam
    H1 = IntervalUnion(((off - 2.0 ** (ell1 + 1), off - 2.0**ell1),))
    H2 = IntervalUnion(((off + 2.0**ell2, off + 2.0 ** (ell2 + 1)),))
    return DetectionResult(
        ell1=ell1, ell2=ell2, ell=ell, lam=lam, H1=H1, H2=H2,
        mass1=lm[ell1], mass2=rm[ell2], c_detect=cfg.c_detect, gamma=gamma, z=z,
        left_level_masses=tuple(lm), right_level_masses=tuple(rm),
    )


@dataclass(frozen=True)
class DetectionCheck:
    mass1: float
    mass2: float
    gap: float
    box: float
    mean: float
    mean_tolerance: float
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_detection(dist: EntryDistribution, result: DetectionResult, N: int,
                     analytic_tol: float = 1e-8) -> DetectionCheck:
    """Recompute the detection guarantees from scratch.

    Masses come from the cdf of xi - lambda, the mean from direct quadrature
    of (x - lambda) f(x) (continuous laws), atom sums (discrete laws) or the
    sample mean with a 3-standard-error tolerance (empirical laws).
    """
    failures = []
    lam = result.lam
    (l1, h1), = result.H1.intervals
    (l2, h2), = result.H2.intervals
    L = max_level(N)
    if not (0 <= result.ell1 <= L and 0 <= result.ell2 <= L):
        failures.append("level out of range")
    if result.ell != max(result.ell1, result.ell2):
        failures.append("ell is not max(ell1, ell2)")
    m1 = float(dist.cdf(lam + h1) - dist.cdf_left(lam + l1))
    m2 = float(dist.cdf(lam + h2) - dist.cdf_left(lam + l2))
    thr = result.c_detect * result.gamma * 2.0 ** (-result.ell / 8.0)
    if min(m1, m2) < thr * (1 - 1e-12):
        failures.append(f"mass {min(m1, m2):.6g} below threshold {thr:.6g}")
    gap = l2 - h1
    if gap < 2.0**result.ell:
        failures.append(f"gap {gap} < 2^ell")
    box = 2.0 ** (result.ell + 2)
    if l1 < -box or h2 > box:
        failures.append(f"H not inside [-{box}, {box}]")
    shift = lam - result.z
    if not (-(2.0 ** (result.ell1 + 1)) <= shift <= 2.0 ** (result.ell2 + 1)):
        failures.append("lambda outside z + [-2^(l1+1), 2^(l2+1)]")

    if dist.is_continuous:
        mean = 0.0
        for lo, hi in ((l1, h1), (l2, h2)):
            a, b = lam + lo, lam + hi
            val, _ = integrate.quad(lambda x: (x - lam) * float(dist.pdf(x)), a, b,
                                    epsabs=1e-13, epsrel=1e-11, limit=200)
            mean += val
        tol = analytic_tol
    elif dist.is_empirical:
        xs = dist.support_samples() - lam
        part = np.where(result.H.contains(xs), xs, 0.0)
        mean = float(part.mean())
        tol = 3.0 * float(part.std(ddof=1)) / math.sqrt(xs.size) if xs.size > 1 else 0.0
        tol = max(tol, 1e-12 * max(1.0, float(np.abs(part).max())))
    else:
        vals, probs = dist.atoms()
        shifted = vals - lam
        inside = result.H.contains(shifted)
        mean = float(np.dot(shifted[inside], probs[inside]))
        tol = analytic_tol
    if abs(mean) > tol:
        failures.append(f"|E<xi - lambda>_H| = {abs(mean):.3g} exceeds {tol:.3g}")
    return DetectionCheck(mass1=m1, mass2=m2, gap=gap, box=box, mean=mean,
                          mean_tolerance=tol, failures=tuple(failures))
