"""End-to-end certificate on one realization: case selection, then the peaky,
compressible and incompressible regimes, each certified on its own.

Every regime bound is a deterministic statement about the given matrix and
only about its own vector set; the three sets cover the sphere, so the
minimum over regimes bounds s_min(A + B).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from rectsv.bounds import ConstantsConfig, distance_threshold, peaky_threshold
from rectsv.certify import Certificate, certify_general, operator_norm, singular_extremes
from rectsv.detect import find_dyadic_intervals
from rectsv.dist import Case, EntryDistribution, select_shift_and_case
from rectsv.errors import PreconditionError, ResourceLimitError
from rectsv.harness import MAX_N, leave_one_out_distances
from rectsv.hpart import IntervalUnion, split_matrix
from rectsv.sphere import MAX_GRID_CELLS, Shell, quarter_root, sparsified_net, top_mass

CERTIFIED, VACUOUS, EMPTY, SKIPPED, ERROR = "certified", "vacuous", "empty_target", "skipped", "error"


@dataclass(frozen=True)
class PipelineOptions:
    dist: EntryDistribution | None = None  # law of A's entries; empirical law of A if None
    alpha: float = 1.0  # scale in Q(a, alpha) <= 1 - beta; A and B are divided by it
    theta: float | None = None  # peaky level; peaky_threshold(gamma, delta) if None
    tau0: float | None = None  # solved from its defining inequality if None
    h_wrap: float = 1.0
    w_wrap: float = 1.0
    eps_compressible: float | None = None
    eps_incompressible: float | None = None
    max_net_points: int = 200_000
    support_policy: object = "enumerate"
    verify_samples: int = 2000


@dataclass
class RegimeReport:
    name: str
    status: str
    lower_bound: float | None = None
    certificate: Certificate | None = None
    params: dict = field(default_factory=dict)
    message: str = ""
    sampled_min: float | None = None
    sampled_count: int = 0

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "status": self.status,
            "lower_bound": self.lower_bound,
            "params": self.params,
            "message": self.message,
            "sampled_min": self.sampled_min,
            "sampled_count": self.sampled_count,
        }
        if self.certificate is not None:
            c = self.certificate
            out["certificate"] = {"h": c.h, "epsilon": c.epsilon, "regular_norm": c.regular_norm,
                                  "lower_bound": c.lower_bound, "net_size": len(c.per_point)}
        return out


@dataclass
class PipelineReport:
    N: int
    n: int
    delta: float
    beta: float
    alpha: float
    s_min: float
    case: dict | None = None
    error: str | None = None
    regimes: dict = field(default_factory=dict)

    @property
    def combined_lower_bound(self) -> float | None:
        """min over regimes, or None when some regime produced no bound."""
        if not self.regimes:
            return None
        vals = []
        for r in self.regimes.values():
            if r.status in (SKIPPED, ERROR):
                return None
            vals.append(r.lower_bound)
        return min(vals)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "n": self.n,
            "delta": self.delta,
            "beta": self.beta,
            "alpha": self.alpha,
            "s_min": self.s_min,
            "case": self.case,
            "error": self.error,
            "combined_lower_bound": self.combined_lower_bound,
            "regimes": {k: v.to_dict() for k, v in self.regimes.items()},
        }


# ---------------------------------------------------------------- tau_0

def tau0_excess(tau: float, K: float) -> float:
    """sup_{s >= 0} 2^{-s/4} tau log(K 2^{s/2} / tau^{3/2}).

    With a = log K - 1.5 log tau the supremum of 2^{-s/4}(a + s log(2)/2)
    sits at s = 0 when a >= 2 and equals 2^{1 - s*/4} at s* = 2(2 - a)/log 2
    otherwise.
    """
    a = math.log(K) - 1.5 * math.log(tau)
    if a >= 2:
        return tau * a
    s_star = 2.0 * (2.0 - a) / math.log(2.0)
    return tau * 2.0 * 2.0 ** (-s_star / 4.0)


def solve_tau0(gamma: float, delta: float, cfg: ConstantsConfig = ConstantsConfig(),
               h_wrap: float = 1.0, w_wrap: float = 1.0, tol: float = 1e-6) -> float:
    """Largest tau in (0, 1] with the excess above at most w/4, by bisection."""
    f0 = (1.0 - delta**-0.25) * math.sqrt(cfg.c_detect * gamma) / cfg.c_rogozin
    K = 16.0 * math.sqrt(8.0) * cfg.c_net * cfg.c_normbound / (h_wrap * f0)
    goal = w_wrap / 4.0
    if tau0_excess(1.0, K) <= goal:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if tau0_excess(mid, K) <= goal:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------- sampling of regime sets

def regime_member(Y: np.ndarray, regime: str, theta: float, k: int) -> np.ndarray:
    """Row mask: peaky (max >= theta), compressible (top-k mass >= 1/4 and not
    peaky) or incompressible (top-k mass < 1/4)."""
    peak = np.max(np.abs(Y), axis=1)
    sq = np.sort(Y**2, axis=1)[:, ::-1]
    mass = sq[:, :k].sum(axis=1)
    if regime == "peaky":
        return peak >= theta
    if regime == "compressible":
        return (mass >= 0.25) & (peak < theta)
    return mass < 0.25


def sample_regime(D: np.ndarray, regime: str, theta: float, k: int, count: int, seed: int) -> np.ndarray:
    """Unit vectors from a regime's set: dense, sparse, flattened and
    near-minimizing candidates, filtered by membership."""
    n = D.shape[1]
    rng = np.random.default_rng([seed, 0x5A4D])
    cands = [rng.standard_normal((count, n))]
    S = rng.standard_normal((count, n))
    keep = rng.random((count, n)) < rng.uniform(0.05, 1.0, (count, 1))
    cands.append(np.where(keep, S, 0.0) + 1e-3 * rng.standard_normal((count, n)))
    flat = rng.choice([-1.0, 1.0], (count, n)) * (1.0 + 0.3 * rng.random((count, n)))
    cands.append(flat)
    _, _, Vt = np.linalg.svd(D, full_matrices=False)
    v = Vt[-1]
    cands.append(v[None, :] + rng.uniform(0, 0.5, (count, 1)) * rng.standard_normal((count, n)) / math.sqrt(n))
    cands.append(np.vstack([v, -v]))
    if regime == "peaky":
        base = rng.standard_normal((count, n))
        j = rng.integers(0, n, count)
        a = rng.uniform(min(theta, 1.0), 1.0, count)
        base[np.arange(count), j] = 0.0
        base /= np.maximum(np.linalg.norm(base, axis=1, keepdims=True), 1e-300)
        base *= np.sqrt(1 - a**2)[:, None]
        base[np.arange(count), j] = a
        cands.append(base)
    Y = np.vstack(cands)
    Y = Y[np.linalg.norm(Y, axis=1) > 0]
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    return Y[regime_member(Y, regime, theta, k)]


def _attach_samples(rep: RegimeReport, D, theta, k, count, seed):
    Y = sample_regime(D, rep.name, theta, k, count, seed)
    rep.sampled_count = len(Y)
    if len(Y):
        rep.sampled_min = float(np.min(np.linalg.norm(Y @ D.T, axis=1)))


def _net_estimate(dim: int, eps: float, radius: float, supports: int) -> float:
    k = max(1, math.ceil(2 * radius / (eps / math.sqrt(dim))))
    return float(k) ** dim * supports


# ---------------------------------------------------------------- regimes

def _peaky(D, theta, scale) -> RegimeReport:
    loo = leave_one_out_distances(D)
    lb = theta * float(loo.min())
    return RegimeReport("peaky", CERTIFIED if lb > 0 else VACUOUS, lb * scale,
                        params={"theta": theta, "min_column_distance": float(loo.min())})


def _sparse_regime(name, A, B, lam, H, m, target: Shell, eps, h_target, opts, seed, scale, params):
    N, n = A.shape
    split = split_matrix(A, B, lam, H)
    gnorm = operator_norm(split.regular)
    params = dict(params, regular_norm=gnorm * scale, m=m, epsilon=eps, target=repr(target))
    if target.is_empty(m):
        return RegimeReport(name, EMPTY, math.inf, params=params,
                            message="target set is empty, so the regime holds no unit vectors")
    supports = math.comb(n, m)
    est = _net_estimate(m, eps, target.radius(m), supports)
    if est > 20 * opts.max_net_points:
        return RegimeReport(name, SKIPPED, params=dict(params, net_estimate=est),
                            message=f"net estimate {est:.3g} exceeds the limit {opts.max_net_points}")
    try:
        net = sparsified_net(n, m, eps, target, opts.support_policy, seed=seed,
                             max_cells=max(MAX_GRID_CELLS, opts.max_net_points))
    except ResourceLimitError as exc:
        return RegimeReport(name, SKIPPED, params=params, message=str(exc))
    if len(net) > opts.max_net_points:
        return RegimeReport(name, SKIPPED, params=dict(params, net_size=len(net)),
                            message=f"net of {len(net)} points exceeds the limit {opts.max_net_points}")
    cert = certify_general(split, net, None, eps, target_set=f"{name}: {target!r}, {m}-sparse")
    params["net_size"] = len(net)
    params["proof_threshold"] = h_target * scale
    params["proof_event_holds"] = bool(cert.h > h_target)
    lb = cert.lower_bound * scale
    status = CERTIFIED if cert.lower_bound > 0 else VACUOUS
    if opts.support_policy != "enumerate":
        params["covering"] = "sampled supports only"
    return RegimeReport(name, status, lb, certificate=cert, params=params)


def pipeline_certify(A, B, delta: float, beta: float, cfg: ConstantsConfig = ConstantsConfig(),
                     seed: int = 0, options: PipelineOptions | None = None, **overrides) -> PipelineReport:
    """Run every regime of the construction on the realization A + B."""
    opts = options or PipelineOptions()
    if overrides:
        opts = PipelineOptions(**{**opts.__dict__, **overrides})
    A = np.asarray(A, dtype=float)
    B = np.zeros_like(A) if B is None else np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2:
        raise ValueError(f"shape mismatch: A {A.shape}, B {B.shape}")
    N, n = A.shape
    if not (N >= n >= 1) or N < delta * n:
        raise ValueError(f"need N >= delta * n, got {N}x{n} with delta = {delta}")
    if N > MAX_N:
        raise ResourceLimitError(f"N above {MAX_N} is beyond the desk-scale guard")
    if opts.alpha <= 0:
        raise ValueError("alpha must be positive")
    scale = opts.alpha
    A, B = A / scale, B / scale
    D = A + B
    s_min = singular_extremes(D)[1] * scale
    report = PipelineReport(N=N, n=n, delta=delta, beta=beta, alpha=scale, s_min=s_min)

    law = (opts.dist.scaled(1.0 / scale) if opts.dist is not None
           else EntryDistribution.empirical(A.ravel()))
    try:
        case = select_shift_and_case(law, beta, N)
    except PreconditionError as exc:
        report.error = f"case selection: {exc}"
        return report
    report.case = {"z": case.z, "case_id": case.case_id.value, "gamma": case.gamma,
                   "left_mass": case.left_mass, "right_mass": case.right_mass,
                   "concentration": case.concentration}
    k = min(math.isqrt(N), n)
    count = opts.verify_samples

    if case.case_id is not Case.TWO_SIDED:
        theta = 1.0 / math.sqrt(n)
        rep = _peaky(D, theta, scale)
        rep.message = "one-sided case: every unit vector is 1/sqrt(n)-peaky"
        _attach_samples(rep, D, theta, k, count, seed)
        if rep.sampled_min is not None:
            rep.sampled_min *= scale
        report.regimes["peaky"] = rep
        return report

    gamma = case.gamma
    theta = opts.theta if opts.theta is not None else peaky_threshold(gamma, delta, cfg)

    report.regimes["peaky"] = _peaky(D, theta, scale)

    # almost sqrt(N)-sparse vectors without a peak
    root = math.sqrt(N)
    H0 = IntervalUnion.of((-root, -1.0), (1.0, root))
    h_comp = opts.h_wrap * distance_threshold(delta, gamma, 0.5, 2.0, cfg) * root
    try:
        split0 = split_matrix(A, B, case.z, H0)
        g0 = operator_norm(split0.regular)
        eps = opts.eps_compressible or (min(1.0, h_comp / (2 * g0)) if g0 > 0 else 1.0)
        report.regimes["compressible"] = _sparse_regime(
            "compressible", A, B, case.z, H0, k, Shell(0.5, 1.0, theta), eps, h_comp, opts, seed, scale,
            {"lambda": case.z, "H": H0.format()},
        )
    except PreconditionError as exc:
        report.regimes["compressible"] = RegimeReport("compressible", ERROR, message=str(exc))

    # vectors that are not almost sqrt(N)-sparse
    try:
        det = find_dyadic_intervals(law, case.z, gamma, N, cfg)
        ell = det.ell
        R, d = 2.0 ** (ell + 2), 2.0**ell
        r = cfg.c_detect * gamma * 2.0 ** (-ell / 8)
        tau0 = opts.tau0 if opts.tau0 is not None else solve_tau0(gamma, delta, cfg, opts.h_wrap, opts.w_wrap)
        m = min(n, math.ceil(tau0 * n / 2.0 ** (ell / 4)))
        t = 0.5 * math.sqrt(m / n)
        h_dist = distance_threshold(delta, r, t, d, cfg)
        eps = opts.eps_incompressible or min(1.0, opts.h_wrap * h_dist / (2 * cfg.c_normbound * R))
        cap_proof = 2 * h_dist / d
        cap_witness = 1.0 / quarter_root(N)
        split1 = split_matrix(A, B, det.lam, det.H)
        gnorm = operator_norm(split1.regular)
        params = {"ell": ell, "lambda": det.lam * scale, "H": det.H.format(), "R": R, "d": d, "r": r,
                  "tau0": tau0, "t": t, "h_distance": h_dist,
                  "norm_budget": cfg.c_normbound * R * root * scale,
                  "norm_within_budget": bool(gnorm <= cfg.c_normbound * R * root),
                  "proof_conditions_met": bool(cap_witness <= cap_proof)}
        if 4 * k >= n:
            # the k largest squared coordinates average at least 1/n each
            rep = RegimeReport("incompressible", EMPTY, math.inf,
                               params=dict(params, regular_norm=gnorm * scale, m=m, epsilon=eps),
                               message="every unit vector is almost sqrt(N)-sparse when n <= 4 floor(sqrt(N))")
        else:
            target = Shell(t, 1.0, max(cap_proof, cap_witness))
            rep = _sparse_regime("incompressible", A, B, det.lam, det.H, m, target, eps,
                                 opts.h_wrap * h_dist * root, opts, seed, scale, params)
        report.regimes["incompressible"] = rep
    except PreconditionError as exc:
        report.regimes["incompressible"] = RegimeReport("incompressible", ERROR, message=str(exc))

    for rep in report.regimes.values():
        _attach_samples(rep, D, theta, k, count, seed)
        if rep.sampled_min is not None:
            rep.sampled_min *= scale
    return report
