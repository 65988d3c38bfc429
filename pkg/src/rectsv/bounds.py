"""Closed-form anti-concentration bounds and proof thresholds.

The universal constants are only known to exist; every evaluator takes a
:class:`ConstantsConfig` so experiments can calibrate them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

from rectsv.errors import ConfigurationError, PreconditionError


@dataclass(frozen=True)
class ConstantsConfig:
    c_rv: float = 1.0  # small-ball projection theorem
    c_rogozin: float = 1.0
    c_net: float = 6.0 * math.e  # net sparsification, 2 * 3 * e from the counting argument
    c_normbound: float = 2.0  # norm of bounded mean-zero matrices
    c_detect: float = 1.0 - 2.0 ** (-1.0 / 8.0)  # (sum_m 2^{-m/8})^{-1}

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigurationError(f"{f.name} must be a positive real, got {v!r}")
        if self.c_detect > 1:
            raise ConfigurationError(f"c_detect must be <= 1, got {self.c_detect}")

    @classmethod
    def from_file(cls, path) -> "ConstantsConfig":
        """Read a flat ``key = value`` file; ``#`` starts a comment."""
        known = {f.name for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key = key.strip()
            if not sep or key not in known:
                raise ConfigurationError(f"{path}:{lineno}: expected one of {sorted(known)} = value")
            try:
                values[key] = float(val)
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{lineno}: {val.strip()!r} is not a number") from exc
        return cls(**values)

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)!r}\n" for f in fields(self))


@dataclass(frozen=True)
class BoundValue:
    value: float
    radius: float
    raw: float


def _clamped(raw: float, radius: float) -> BoundValue:
    return BoundValue(value=min(1.0, max(0.0, raw)), radius=radius, raw=raw)


def rogozin_bound(h: float, terms: Sequence[tuple[float, float]], cfg: ConstantsConfig = ConstantsConfig()) -> BoundValue:
    """Q(sum xi_j, h) <= C h (sum (1 - Q(xi_j, h_j)) h_j^2)^{-1/2}.

    ``terms`` lists (h_j, q_j) with q_j = Q(xi_j, h_j).
    """
    if not terms:
        raise ValueError("rogozin_bound needs at least one term")
    hmax = max(hj for hj, _ in terms)
    if h < hmax:
        raise PreconditionError(f"h = {h} is below max h_j = {hmax}", measured=hmax)
    for hj, qj in terms:
        if hj <= 0 or not 0 <= qj <= 1:
            raise ValueError(f"invalid term ({hj}, {qj})")
    denom = sum((1.0 - qj) * hj * hj for hj, qj in terms)
    if denom == 0:
        raise PreconditionError("degenerate Rogozin bound: every q_j equals 1", measured=0.0)
    return _clamped(cfg.c_rogozin * h / math.sqrt(denom), h)


def rv_projection_bound(eta: float, d: int, cfg: ConstantsConfig = ConstantsConfig()) -> BoundValue:
    """Q(P_E X, h sqrt(d)) <= (C eta)^d; ``radius`` is the multiplier sqrt(d)."""
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0,1), got {eta}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return _clamped((cfg.c_rv * eta) ** d, math.sqrt(d))


def choose_ell(tau: float, cfg: ConstantsConfig = ConstantsConfig()) -> int:
    """Number of independent copies used in the peaky-vector argument."""
    if not 0 < tau <= 1:
        raise ValueError(f"tau must lie in (0,1], got {tau}")
    return math.ceil(4.0 * cfg.c_rv**2 * cfg.c_rogozin**2 / tau)


def rv_extension_bound(h: float, tau: float, d: int, ell: int, cfg: ConstantsConfig = ConstantsConfig()) -> BoundValue:
    """Q(P_E X, h sqrt(d)/ell) <= (C_rv C_rog / sqrt(ell tau))^{d/ell}."""
    if h <= 0:
        raise ValueError("h must be positive")
    if not 0 < tau <= 1:
        raise ValueError(f"tau must lie in (0,1], got {tau}")
    if d < 1 or ell < 1:
        raise ValueError("d and ell must be >= 1")
    base = cfg.c_rv * cfg.c_rogozin / math.sqrt(ell * tau)
    return _clamped(base ** (d / ell), h * math.sqrt(d) / ell)


def distance_threshold(delta: float, r: float, t: float, d: float, cfg: ConstantsConfig = ConstantsConfig()) -> float:
    """((1 - delta^{-1/4}) / C_rog) * sqrt(r/8) * t * d."""
    if not delta > 1:
        raise PreconditionError(f"delta must exceed 1, got {delta}", measured=delta)
    return (1.0 - delta**-0.25) / cfg.c_rogozin * math.sqrt(r / 8.0) * t * d


def peaky_threshold(gamma: float, delta: float, cfg: ConstantsConfig = ConstantsConfig()) -> float:
    """Sup-norm level separating peaky vectors from the compressible regime."""
    return distance_threshold(delta, gamma, 1.0, 1.0, cfg)
