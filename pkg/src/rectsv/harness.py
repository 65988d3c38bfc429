"""Seeded Monte Carlo experiments on s_min(A + B) / sqrt(N), tail summaries,
the exponential-decay fit, and component experiments (peaky columns,
subspace distances, norms of bounded matrices)."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from rectsv.bounds import distance_threshold
from rectsv.certify import distance_to_subspace, orthonormal_basis, singular_extremes
from rectsv.dist import EntryDistribution, sample_matrix
from rectsv.errors import ConfigurationError, PreconditionError, ResourceLimitError
from rectsv.hpart import IntervalUnion, generator_matrix, split_matrix
from rectsv.rng import derive_seed

MAX_N = 512


# ---------------------------------------------------------------- shifts

@dataclass(frozen=True)
class ShiftSource:
    """B = 0, B = value * (all-ones matrix), or B read from a CSV file."""

    kind: str = "zero"
    value: float = 0.0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "scaled_identity", "file"):
            raise ConfigurationError(f"unknown shift kind {self.kind!r}")
        if self.kind == "file" and not self.path:
            raise ConfigurationError("file shift needs a path")

    @classmethod
    def parse(cls, text: str) -> "ShiftSource":
        head, _, arg = text.partition(":")
        if head == "zero":
            return cls()
        if head in ("identity", "scaled_identity"):
            try:
                return cls("scaled_identity", float(arg))
            except ValueError as exc:
                raise ConfigurationError(f"bad shift {text!r}") from exc
        if head == "file":
            return cls("file", path=arg)
        raise ConfigurationError(f"shift must be zero, identity:L or file:PATH, got {text!r}")

    @property
    def scalar(self) -> float | None:
        return {"zero": 0.0, "scaled_identity": self.value}.get(self.kind)

    def label(self) -> str:
        if self.kind == "file":
            return f"file:{self.path}"
        return "zero" if self.kind == "zero" else f"identity:{self.value!r}"


def read_matrix(path) -> np.ndarray:
    """Headerless comma-separated matrix."""
    try:
        M = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read matrix {path}: {exc}") from exc
    return M


def write_matrix(path, M) -> None:
    np.savetxt(path, np.asarray(M, dtype=float), delimiter=",", fmt="%.17g")


def realize(dist: EntryDistribution, N: int, n: int, seed: int, shift: ShiftSource,
            B: np.ndarray | None = None) -> np.ndarray:
    """A + B for one trial.

    For constant shifts the location of the law and the shift are folded
    into one scalar first, so (dist, B) and (dist + c, B - c) agree bit for bit
    whenever loc + shift is exact.
    """
    base = sample_matrix(dist.without_loc(), N, n, seed)
    if shift.kind == "file":
        if B is None:
            B = read_matrix(shift.path)
        if B.shape != (N, n):
            raise ConfigurationError(f"shift matrix has shape {B.shape}, expected {(N, n)}")
        A = base + dist.loc if dist.loc != 0.0 else base
        return A + B
    c = dist.loc + shift.scalar
    return base + c if c != 0.0 else base


# ---------------------------------------------------------------- config and records

@dataclass(frozen=True)
class ExperimentConfig:
    dist: EntryDistribution
    delta: float
    sizes: tuple[tuple[int, int], ...]
    trials: int
    master_seed: int
    shift_source: ShiftSource = ShiftSource()
    u_grid: tuple[float, ...] = (0.01, 0.05, 0.1)
    beta: float = 0.5
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple((int(N), int(n)) for N, n in self.sizes))
        object.__setattr__(self, "u_grid", tuple(float(u) for u in self.u_grid))
        if not self.delta > 1:
            raise ConfigurationError(f"delta must exceed 1, got {self.delta}")
        if not self.sizes:
            raise ConfigurationError("need at least one size")
        for N, n in self.sizes:
            if not (N >= n >= 1) or N < self.delta * n:
                raise ConfigurationError(f"size {N}x{n} violates N >= n >= 1 and N >= delta*n")
        if self.trials < 1:
            raise ConfigurationError("trials must be positive")
        if not self.u_grid or any(u <= 0 for u in self.u_grid):
            raise ConfigurationError("u_grid must hold positive values")
        if any(b <= a for a, b in zip(self.u_grid, self.u_grid[1:])):
            raise ConfigurationError("u_grid must be strictly increasing")
        if not 0 < self.beta < 1:
            raise ConfigurationError("beta must lie in (0,1)")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("master_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    seed: int
    N: int
    n: int
    s_min: float
    normalized: float


@dataclass(frozen=True)
class SizeSummary:
    N: int
    n: int
    trials: int
    tail_estimates: dict  # u -> (count, smoothed probability)
    percentiles: dict  # p01, p05, p50 of normalized
    normalized: np.ndarray = field(repr=False, compare=False, default=None)

    def tail(self, u: float) -> tuple[int, float]:
        if u in self.tail_estimates:
            return self.tail_estimates[u]
        if self.normalized is None:
            raise KeyError(f"u = {u} not in the tail grid")
        count = int(np.count_nonzero(self.normalized <= u))
        return count, (count + 1) / (self.trials + 1)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "n": self.n,
            "trials": self.trials,
            "tail_estimates": {repr(u): {"count": c, "smoothed": p} for u, (c, p) in self.tail_estimates.items()},
            "percentiles": dict(self.percentiles),
        }


@dataclass(frozen=True)
class DecayFit:
    u: float
    v_hat: float
    r_squared: float


@dataclass(frozen=True)
class ExperimentSummary:
    sizes: tuple[SizeSummary, ...]
    decay_fit: tuple[DecayFit, ...]

    def to_dict(self) -> dict:
        return {
            "sizes": [s.to_dict() for s in self.sizes],
            "decay_fit": [asdict(f) for f in self.decay_fit],
        }


# ---------------------------------------------------------------- trials

def trial_plan(config: ExperimentConfig) -> list[tuple[int, int, int, int]]:
    """(trial_index, seed, N, n); indices run consecutively across sizes."""
    plan = []
    for k, (N, n) in enumerate(config.sizes):
        for t in range(config.trials):
            idx = k * config.trials + t
            plan.append((idx, derive_seed(config.master_seed, idx), N, n))
    return plan


def _run_one(args) -> TrialRecord:
    dist, shift, B, (idx, seed, N, n) = args
    M = realize(dist, N, n, seed, shift, B)
    _, smin = singular_extremes(M)
    return TrialRecord(trial_index=idx, seed=seed, N=N, n=n, s_min=smin, normalized=smin / math.sqrt(N))


def summarize(records: Sequence[TrialRecord], u_grid: Sequence[float]) -> ExperimentSummary:
    by_size: dict[tuple[int, int], list[TrialRecord]] = {}
    for r in sorted(records, key=lambda r: r.trial_index):
        by_size.setdefault((r.N, r.n), []).append(r)
    sizes = []
    for (N, n), recs in by_size.items():
        vals = np.sort(np.array([r.normalized for r in recs]))
        T = len(recs)
        tails = {}
        for u in u_grid:
            c = int(np.searchsorted(vals, u, side="right"))
            tails[float(u)] = (c, (c + 1) / (T + 1))
        pct = {k: float(np.percentile(vals, q)) for k, q in (("p01", 1), ("p05", 5), ("p50", 50))}
        sizes.append(SizeSummary(N=N, n=n, trials=T, tail_estimates=tails, percentiles=pct, normalized=vals))
    fits = []
    if len({s.N for s in sizes}) >= 3:
        fits = [DecayFit(u, *fit_decay(sizes, u)) for u in u_grid]
    return ExperimentSummary(sizes=tuple(sizes), decay_fit=tuple(fits))


def run_trials(config: ExperimentConfig) -> tuple[list[TrialRecord], ExperimentSummary]:
    """All trials of ``config``; the result does not depend on ``workers``."""
    if max(N for N, _ in config.sizes) > MAX_N:
        raise ResourceLimitError(f"N above {MAX_N} is beyond the desk-scale guard")
    B = read_matrix(config.shift_source.path) if config.shift_source.kind == "file" else None
    if B is not None:
        for N, n in config.sizes:
            if B.shape != (N, n):
                raise ConfigurationError(f"shift matrix has shape {B.shape}, size {N}x{n} requested")
    jobs = [(config.dist, config.shift_source, B, p) for p in trial_plan(config)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            records = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (8 * config.workers))))
    else:
        records = [_run_one(j) for j in jobs]
    records.sort(key=lambda r: r.trial_index)
    return records, summarize(records, config.u_grid)


def write_records_csv(path, records: Sequence[TrialRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial_index", "seed", "N", "n", "s_min", "normalized"])
        for r in records:
            w.writerow([r.trial_index, r.seed, r.N, r.n, repr(r.s_min), repr(r.normalized)])


def write_summary_json(path, summary: ExperimentSummary) -> None:
    Path(path).write_text(json.dumps(summary.to_dict(), indent=2))


# ---------------------------------------------------------------- decay fit

def fit_log_tail(Ns: Sequence[float], probs: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of -log p against N, with r^2 (1 for a flat tail)."""
    x = np.asarray(Ns, dtype=float)
    y = -np.log(np.asarray(probs, dtype=float))
    if len(set(x.tolist())) < 3:
        raise ValueError("decay fit needs at least 3 distinct N")
    if np.ptp(y) == 0:
        return 0.0, 1.0
    xc = x - x.mean()
    yc = y - y.mean()
    slope = float(np.dot(xc, yc) / np.dot(xc, xc))
    resid = yc - slope * xc
    ss_tot = float(np.dot(yc, yc))
    return slope, 1.0 - float(np.dot(resid, resid)) / ss_tot


def fit_decay(summaries, u: float) -> tuple[float, float]:
    """(v_hat, r^2) for P{s_min <= u sqrt(N)} ~ exp(-v N) across sizes."""
    sizes = summaries.sizes if isinstance(summaries, ExperimentSummary) else tuple(summaries)
    if len({s.N for s in sizes}) < 3:
        raise ValueError("decay fit needs at least 3 distinct N")
    return fit_log_tail([s.N for s in sizes], [s.tail(u)[1] for s in sizes])


# ---------------------------------------------------------------- component experiments

@dataclass(frozen=True)
class ComponentSummary:
    mode: str
    trials: int
    thresholds: tuple[float, ...]
    counts: tuple[int, ...]
    smoothed: tuple[float, ...]
    statistics: np.ndarray = field(repr=False, compare=False)
    info: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [{"threshold": t, "count": c, "smoothed": p}
                for t, c, p in zip(self.thresholds, self.counts, self.smoothed)]


def leave_one_out_distances(U) -> np.ndarray:
    """dist(col_j(U), span of the other columns) for every j."""
    U = np.asarray(U, dtype=float)
    n = U.shape[1]
    return np.array([distance_to_subspace(U[:, j], np.delete(U, j, axis=1)) for j in range(n)])


def _tally(stats: np.ndarray, thresholds, upper: bool):
    counts = tuple(int(np.count_nonzero(stats >= t if upper else stats <= t)) for t in thresholds)
    T = stats.size
    return counts, tuple((c + 1) / (T + 1) for c in counts)


def component_experiment(mode: str, params: dict, trials: int, master_seed: int) -> ComponentSummary:
    """Tail frequencies for one proof ingredient.

    peaky: min_j leave-one-out distance / sqrt(N - n + 1), lower tail.
      params: dist, N, n, thresholds.
    distance: dist(<A - lam>_H y, generators for E = span{e_j : j in supp y}) / sqrt(N),
      lower tail. params: dist, N, n, lam, H1, H2, delta, t, y, optional B, thresholds
      (default: the threshold h itself).
    norm: ||W|| / (R sqrt(N)) for W with i.i.d. bounded mean-zero entries, upper tail.
      params: dist, N, n, R, thresholds.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    dist: EntryDistribution = params["dist"]
    N, n = int(params["N"]), int(params["n"])
    seeds = [derive_seed(master_seed, k) for k in range(trials)]
    info: dict = {}
    if mode == "peaky":
        thresholds = tuple(params.get("thresholds", (0.5,)))
        stats = np.array([
            leave_one_out_distances(sample_matrix(dist, N, n, s)).min() / math.sqrt(N - n + 1) for s in seeds
        ])
        counts, smoothed = _tally(stats, thresholds, upper=False)
    elif mode == "distance":
        lam = float(params["lam"])
        H1, H2 = params["H1"], params["H2"]
        if isinstance(H1, tuple):
            H1 = IntervalUnion.of(H1)
        if isinstance(H2, tuple):
            H2 = IntervalUnion.of(H2)
        (a1, b1), = H1.intervals
        (a2, b2), = H2.intervals
        d = a2 - b1
        if d <= 0:
            raise PreconditionError("H1 must lie to the left of H2", measured=d)
        r = min(dist.interval_mass(lam + a1, lam + b1), dist.interval_mass(lam + a2, lam + b2))
        t = float(params["t"])
        h = distance_threshold(float(params["delta"]), r, t, d)
        y = np.asarray(params["y"], dtype=float)
        if y.shape != (n,):
            raise ValueError(f"y must have length {n}")
        if np.linalg.norm(y) < t:
            raise PreconditionError(f"||y|| = {np.linalg.norm(y):.4g} < t = {t}", measured=float(np.linalg.norm(y)))
        if np.max(np.abs(y)) > 2 * h / d:
            raise PreconditionError(
                f"||y||_inf = {np.max(np.abs(y)):.4g} exceeds 2h/d = {2 * h / d:.4g}", measured=float(np.max(np.abs(y)))
            )
        B = np.asarray(params.get("B", np.zeros((N, n))), dtype=float)
        H = H1 | H2
        J = tuple(int(j) for j in np.flatnonzero(y))
        stats = []
        for s in seeds:
            sp = split_matrix(sample_matrix(dist, N, n, s), B, lam, H)
            Q = orthonormal_basis(generator_matrix(sp, J))
            v = sp.regular @ y
            res = v - Q @ (Q.T @ v)
            stats.append(float(np.linalg.norm(res - Q @ (Q.T @ res))) / math.sqrt(N))
        stats = np.array(stats)
        thresholds = tuple(params.get("thresholds", (h,)))
        counts, smoothed = _tally(stats, thresholds, upper=False)
        info = {"h": h, "d": d, "r": r, "t": t}
    elif mode == "norm":
        R = float(params["R"])
        thresholds = tuple(params.get("thresholds", (2.2,)))
        stats = []
        for s in seeds:
            W = sample_matrix(dist, N, n, s)
            if np.max(np.abs(W)) > R:
                raise PreconditionError(f"entry of size {np.max(np.abs(W)):.4g} exceeds R = {R}",
                                        measured=float(np.max(np.abs(W))))
            stats.append(singular_extremes(W)[0] / (R * math.sqrt(N)))
        stats = np.array(stats)
        counts, smoothed = _tally(stats, thresholds, upper=True)
        info = {"max": float(stats.max())}
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ComponentSummary(mode=mode, trials=trials, thresholds=tuple(float(t) for t in thresholds),
                            counts=counts, smoothed=smoothed, statistics=stats, info=info)
