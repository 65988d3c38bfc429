"""Acceptance suite: one test (and one logged PASS/FAIL line) per criterion.

Run ``pytest tests/test_acceptance.py -v`` and read the "acceptance criteria"
section at the end of the report.
"""

import json
import math
import time
from importlib import resources

import numpy as np
import pytest
from scipy.spatial import cKDTree

from rectsv.certify import certify_general
from rectsv.detect import find_dyadic_intervals, verify_detection
from rectsv.dist import EntryDistribution as ED, concentration_estimate, sample_matrix, select_shift_and_case
from rectsv.harness import ExperimentConfig, ShiftSource, fit_decay, run_trials
from rectsv.hpart import IntervalUnion, split_matrix, truncate, truncate_complement
from rectsv.sphere import Shell, ball_net, check_spread_witness, sparsified_net, spread_witness, top_mass


def _random_union(rng, span=6.0):
    k = int(rng.integers(1, 4))
    pts = np.sort(rng.uniform(-span, span, 2 * k))
    return IntervalUnion(tuple((float(pts[2 * i]), float(pts[2 * i + 1])) for i in range(k)))


def _unit(rng, n, size):
    X = rng.standard_normal((size, n))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def _sparse_members(rng, n, m, target: Shell, size):
    """Points of the target set restricted to random m-subsets of coordinates."""
    Y = np.zeros((size, n))
    r = (target.lo**m + (1 - target.lo**m) * rng.random(size)) ** (1 / m)
    X = target.project(_unit(rng, m, size) * r[:, None])
    for i in range(size):
        Y[i, rng.choice(n, m, replace=False)] = X[i]
    return Y


def _projected_min(Y, P):
    """min over rows p of P of ||y restricted to supp p - p|| for every row y of Y.

    Net points are grouped by support; within a group the projected distance
    is an ordinary Euclidean distance in the support coordinates.
    """
    out = np.full(len(Y), np.inf)
    groups: dict = {}
    for i, row in enumerate(P != 0):
        groups.setdefault(tuple(np.flatnonzero(row)), []).append(i)
    for supp, rows in groups.items():
        S = list(supp)
        if not S:
            out = np.minimum(out, 0.0)
            continue
        d, _ = cKDTree(P[np.ix_(rows, S)]).query(Y[:, S])
        out = np.minimum(out, d)
    return out


# ---------------------------------------------------------------- 1

def test_c1_scalar_partition(criterion):
    with criterion("1a", "scalar partition <x>_H + <x>_Hbar = x, 10^4 cases") as info:
        rng = np.random.default_rng(101)
        bad = 0
        t0 = time.perf_counter()
        for _ in range(10_000):
            H = _random_union(rng)
            x = float(rng.standard_cauchy()) if rng.random() < 0.5 else float(rng.uniform(-6, 6))
            a, b = truncate(x, H), truncate_complement(x, H)
            bad += not (a + b == x and (a == 0.0 or b == 0.0))
        info["failures"] = bad
        assert bad == 0
        assert time.perf_counter() - t0 < 5


@pytest.mark.xfail(strict=True, reason="Gamma + (total - Gamma) need not round back to total in IEEE "
                                       "double; analysed in the decisions ledger")
def test_c1_matrix_split_bit_exact(criterion):
    with criterion("1b", "MatrixSplit regular + irregular == A + B bit for bit, 100 splits") as info:
        rng = np.random.default_rng(102)
        mism_splits = mism_entries = total = 0
        worst = 0.0
        for _ in range(100):
            N, n = int(rng.integers(2, 41)), int(rng.integers(1, 9))
            n = min(n, N)
            A = rng.standard_cauchy((N, n))
            B = rng.standard_normal((N, n))
            s = split_matrix(A, B, float(rng.uniform(-2, 2)), _random_union(rng))
            diff = (s.regular + s.irregular) != (A + B)
            total += diff.size
            if diff.any():
                mism_splits += 1
                mism_entries += int(diff.sum())
                rel = np.abs(s.regular + s.irregular - (A + B))[diff] / np.abs(A + B)[diff]
                worst = max(worst, float(rel.max()))
        info["splits_with_mismatch"] = mism_splits
        info["entries"] = f"{mism_entries}/{total}"
        info["worst_rel_err"] = f"{worst:.2e}"
        assert mism_splits == 0


# ---------------------------------------------------------------- 2

LAWS2 = [ED.cauchy(), ED.gaussian(), ED.rademacher(), ED.pareto(1.0), ED.uniform(-1, 1),
         ED.twopoint(0.3, -2, 5), ED.cauchy(0.2)]


def test_c2_certificate_soundness(criterion):
    with criterion("2", "certificate soundness, 200 instances x 10^4 sampled y") as info:
        rng = np.random.default_rng(202)
        t0 = time.perf_counter()
        violations = nonvacuous = cover_fail = 0
        worst_gap = math.inf
        for k in range(200):
            n = int(rng.integers(1, 9))
            N = int(rng.integers(n, 41))
            law = LAWS2[k % len(LAWS2)]
            A = sample_matrix(law, N, n, int(rng.integers(2**32)))
            B = [np.zeros((N, n)), 0.3 * rng.standard_normal((N, n)), np.full((N, n), -0.5)][k % 3]
            H = IntervalUnion.of((-1e9, 1e9)) if k % 5 == 0 else _random_union(rng, 4.0)
            split = split_matrix(A, B, float(rng.uniform(-1, 1)), H)
            m = int(rng.integers(1, min(n, 3) + 1))
            eps = float(rng.choice([0.3, 0.5]))
            lo = float(rng.choice([0.0, 0.5, 1.0]))
            target = Shell(lo, 1.0, float(rng.choice([math.inf, 0.8])))
            if target.is_empty(m):
                target = Shell(lo, 1.0)
            net = sparsified_net(n, m, eps, target)
            full = m == n and k % 2 == 0
            cert = certify_general(split, net, None, eps, full_space_mode=full)
            Y = _sparse_members(rng, n, m, target, 10_000)
            if _projected_min(Y[:300], net.points).max() > eps * (1 + 1e-9):
                cover_fail += 1
            floor = float(np.min(np.linalg.norm(Y @ split.total.T, axis=1)))
            violations += cert.lower_bound > floor + 1e-9
            if cert.lower_bound > 0:
                nonvacuous += 1
                worst_gap = min(worst_gap, floor - cert.lower_bound)
        took = time.perf_counter() - t0
        info["violations"] = violations
        info["covering_failures"] = cover_fail
        info["non_vacuous"] = nonvacuous
        info["min_slack_nonvacuous"] = f"{worst_gap:.3g}"
        assert violations == 0 and cover_fail == 0
        assert took < 120


# ---------------------------------------------------------------- 3

# At alpha = 1/2 the normalised entries are xi / alpha; rademacher and pareto:1
# only meet Q(xi, 1) <= 1 - beta after that rescaling (see the ledger).
LAWS3 = [ED.rademacher(2), ED.twopoint(0.5, -1, 3), ED.cauchy(), ED.pareto(1, 2),
         ED.empirical(sample_matrix(ED.cauchy(2), 200, 20, 33).ravel())]


def test_c3_detection_postconditions(criterion):
    with criterion("3", "interval detection postconditions, beta=0.5, N=64") as info:
        failures = []
        levels = []
        for law in LAWS3:
            sel = select_shift_and_case(law, 0.5, 64)
            assert sel.gamma == 0.125
            res = find_dyadic_intervals(law, sel.z, sel.gamma, 64)
            check = verify_detection(law, res, 64, analytic_tol=1e-8)
            levels.append((law.family, res.ell1, res.ell2))
            failures += [f"{law.family}: {f}" for f in check.failures]
        info["laws"] = len(LAWS3)
        info["levels"] = levels
        info["failures"] = len(failures)
        assert not failures, failures


# ---------------------------------------------------------------- 4

def test_c4_spread_witness(criterion):
    with criterion("4", "spread witness, 10^3 spread vectors") as info:
        rng = np.random.default_rng(404)
        bad = done = 0
        empty_pairs = 0
        while done < 1000:
            n = int(rng.integers(20, 201))
            N = int(rng.integers(n, 4 * n + 1))
            k = min(math.isqrt(N), n)
            if 4 * k >= n:
                # top-k mass is at least k/n >= 1/4 for every unit vector: no spread vectors exist
                empty_pairs += 1
                continue
            tau = [0.1, 0.5, 1.0][done % 3]
            m = math.ceil(tau * n)
            # random signs on a noisy flat profile; some coordinates switched off
            y = rng.choice([-1.0, 1.0], n) * np.abs(1 + rng.uniform(0, 1.5) * rng.standard_normal(n))
            y *= rng.random(n) >= rng.uniform(0, 0.5)
            if not y.any():
                continue
            y /= np.linalg.norm(y)
            if top_mass(y, k) >= 0.25:
                continue
            J = spread_witness(y, m, N)
            bad += bool(check_spread_witness(y, J, m, N))
            done += 1
        info["vectors"] = done
        info["failures"] = bad
        info["pairs_without_spread_vectors"] = empty_pairs
        assert bad == 0


# ---------------------------------------------------------------- 5

def test_c5_net_covering(criterion):
    with criterion("5", "net covering, 10^5 samples per configuration") as info:
        rng = np.random.default_rng(505)
        t0 = time.perf_counter()
        worst = 0.0
        fails = 0
        configs = 0
        for dim in (1, 2, 3, 4):
            for eps in (1.0, 0.5, 0.25):
                net = ball_net(dim, eps)
                r = rng.random(100_000) ** (1 / dim)
                X = _unit(rng, dim, 100_000) * r[:, None]
                d, _ = cKDTree(net.points).query(X)
                fails += int(np.count_nonzero(d > eps))
                worst = max(worst, float(d.max() / eps))
                configs += 1
        net = sparsified_net(6, 2, 0.25)
        Y = _sparse_members(rng, 6, 2, Shell(), 100_000)
        d = _projected_min(Y, net.points)
        fails += int(np.count_nonzero(d > 0.25))
        worst = max(worst, float(d.max() / 0.25))
        took = time.perf_counter() - t0
        info["configurations"] = configs + 1
        info["failures"] = fails
        info["worst_distance_over_eps"] = f"{worst:.3f}"
        assert fails == 0
        assert took < 60


# ---------------------------------------------------------------- 6

def _brute_concentration(xs, alpha):
    xs = sorted(xs)
    centres = {x + alpha for x in xs} | {x - alpha for x in xs} | set(xs)
    return max(sum(abs(x - c) <= alpha for x in xs) for c in centres) / len(xs)


def test_c6_concentration_estimator(criterion):
    with criterion("6", "concentration estimator: uniform Q(0.1) and brute-force oracle") as info:
        xs = sample_matrix(ED.uniform(0, 1), 1000, 100, 606).ravel()
        q = concentration_estimate(xs, 0.1).estimate
        rng = np.random.default_rng(606)
        bad = 0
        for _ in range(1000):
            size = int(rng.integers(1, 13))
            sample = (rng.integers(-24, 25, size) / 8.0).tolist()
            alpha = float(rng.integers(0, 41)) / 16.0
            bad += concentration_estimate(sample, alpha).estimate != _brute_concentration(sample, alpha)
        info["Q_hat(0.1)"] = f"{q:.4f}"
        info["oracle_mismatches"] = bad
        assert abs(q - 0.2) <= 0.02 and bad == 0


# ---------------------------------------------------------------- 7

def test_c7_rogozin_shape(criterion):
    with criterion("7", "Rogozin shape Q(S_k,1) sqrt(k), k in {16,64,256}") as info:
        rng = np.random.default_rng(707)
        vals = {}
        for k in (16, 64, 256):
            S = 2.0 * rng.binomial(k, 0.5, 100_000) - k  # sum of k Rademacher signs
            vals[k] = concentration_estimate(S, 1.0).estimate * math.sqrt(k)
        ratio = max(vals.values()) / min(vals.values())
        info["values"] = {k: round(v, 4) for k, v in vals.items()}
        info["ratio"] = f"{ratio:.3f}"
        assert ratio <= 3.0


# ---------------------------------------------------------------- 8

def _pilot():
    return json.loads(resources.files("rectsv").joinpath("data/pilot_floor.json").read_text())


@pytest.fixture(scope="module")
def cauchy_tail_run():
    pilot = _pilot()
    floor = pilot["floor"]
    t0 = time.perf_counter()
    cfg = ExperimentConfig(dist=ED.cauchy(), delta=2.0, sizes=((40, 20), (80, 40), (160, 80)), trials=2000,
                           master_seed=8, u_grid=(floor / 2, floor, 1.0, 1.5))
    _, summary = run_trials(cfg)
    return floor, summary, time.perf_counter() - t0


def test_c8a_tail_floor(criterion, cauchy_tail_run):
    floor, summary, took = cauchy_tail_run
    with criterion("8a", "Cauchy p01 of s_min/sqrt(N) above the pilot floor") as info:
        p01 = {s.N: round(s.percentiles["p01"], 4) for s in summary.sizes}
        info["floor"] = f"{floor:.4f}"
        info["p01"] = p01
        info["runtime_trials"] = f"{took:.1f}s"
        assert all(v >= floor for v in p01.values())
        assert took < 600


@pytest.mark.xfail(strict=True, reason="no Cauchy trial reaches u = floor/2 at these sizes, so every "
                                       "smoothed tail is 1/2001 and the fitted slope is 0; see the ledger")
def test_c8b_decay_fit_positive(criterion, cauchy_tail_run):
    floor, summary, _ = cauchy_tail_run
    with criterion("8b", "fit_decay at u = floor/2 gives v_hat > 0") as info:
        u = floor / 2
        v_hat, r2 = fit_decay(summary, u)
        info["u"] = f"{u:.4f}"
        info["counts"] = [s.tail(u)[0] for s in summary.sizes]
        info["v_hat"] = f"{v_hat:.4g}"
        # the larger thresholds show the decay the criterion is after
        for uu in (floor, 1.0, 1.5):
            info[f"v_hat(u={uu:.3g})"] = f"{fit_decay(summary, uu)[0]:.4g}"
        assert v_hat > 0


# ---------------------------------------------------------------- 9

@pytest.mark.parametrize("c", [-3.0, 7.0])
def test_c9_shift_invariance(criterion, c):
    with criterion(f"9{'ab'[c > 0]}", f"shift invariance (dist + {c:g}, B - {c:g}) bit-exact, 50 trials") as info:
        law = ED.cauchy()
        sizes = ((30, 15),)
        same = 0
        for b in (0.0, 1.5):
            ref, _ = run_trials(ExperimentConfig(dist=law, delta=2.0, sizes=sizes, trials=50, master_seed=9,
                                                 shift_source=ShiftSource("scaled_identity", b)))
            alt, _ = run_trials(ExperimentConfig(dist=law.shifted(c), delta=2.0, sizes=sizes, trials=50,
                                                 master_seed=9,
                                                 shift_source=ShiftSource("scaled_identity", b - c)))
            same += sum(r.s_min == a.s_min for r, a in zip(ref, alt))
        info["identical"] = f"{same}/100"
        assert same == 100


# ---------------------------------------------------------------- 10

def test_c10_necessity(criterion):
    with criterion("10", "constant(lambda) with B = -lambda gives s_min = 0") as info:
        zeros = trials = 0
        for lam in (3.0, -0.1, 7.3, 1e6):
            recs, _ = run_trials(ExperimentConfig(dist=ED.constant(lam), delta=1.1,
                                                  sizes=((11, 10), (20, 16), (30, 27)), trials=10,
                                                  master_seed=10, shift_source=ShiftSource("scaled_identity", -lam)))
            zeros += sum(r.s_min == 0.0 for r in recs)
            trials += len(recs)
        info["zero_trials"] = f"{zeros}/{trials}"
        assert zeros == trials
