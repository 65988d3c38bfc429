import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import cKDTree

from rectsv.errors import PreconditionError, ResourceLimitError
from rectsv.sphere import (FiniteSet, Label, Shell, ball_net, check_spread_witness, classify_vector,
                           format_net, parse_net, projected_distance, quarter_root, read_net,
                           sparsified_net, spread_witness, top_mass, write_net)


def unit(rng, n, size=None):
    X = rng.standard_normal((size or 1, n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    return X if size else X[0]


def in_ball(rng, dim, size, lo=0.0, hi=1.0):
    r = (lo**dim + (hi**dim - lo**dim) * rng.random(size)) ** (1 / dim)
    return unit(rng, dim, size) * r[:, None]


# ------------------------------------------------------------ classification

def test_classify_examples():
    assert classify_vector(np.eye(3)[0], 0.5, 1).label is Label.PEAKY
    assert classify_vector(np.full(10, 10**-0.5), 0.5, 2).label is Label.SPREAD
    assert classify_vector(np.full(4, 0.5), 0.9, 1).label is Label.ALMOST_SPARSE
    with pytest.raises(ValueError):
        classify_vector(np.ones(3), 0.5, 1)
    with pytest.raises(ValueError):
        classify_vector(np.eye(3)[0], 0.5, 4)


def test_classification_partitions_the_sphere():
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        n = int(rng.integers(1, 12))
        y = unit(rng, n) * np.where(rng.random(n) < 0.3, 0.0, 1.0) if n > 1 else np.ones(1)
        if not y.any():
            y[0] = 1.0
        y /= np.linalg.norm(y)
        theta, m = float(rng.uniform(0.05, 1.2)), int(rng.integers(1, n + 1))
        lab = classify_vector(y, theta, m).label
        peaky = np.abs(y).max() >= theta
        sparse = np.sort(y**2)[::-1][:m].sum() >= 0.25
        expect = Label.PEAKY if peaky else Label.ALMOST_SPARSE if sparse else Label.SPREAD
        assert lab is expect


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=12), st.integers(1, 12))
def test_top_mass_brute_force(xs, m):
    y = np.array(xs)
    m = min(m, y.size)
    brute = max(sum(y[j] ** 2 for j in S) for S in itertools.combinations(range(y.size), m))
    assert top_mass(y, m) == pytest.approx(brute, rel=1e-12, abs=1e-300)


# ------------------------------------------------------------ spread witness

def test_quarter_root():
    for N in range(1, 5000):
        q = quarter_root(N)
        assert q**4 <= N < (q + 1) ** 4


def test_spread_witness_examples():
    y = np.full(100, 0.1)
    J = spread_witness(y, 25, 100)
    assert len(J) == 25 and math.isclose(np.linalg.norm(y[list(J)]), 0.5)
    assert check_spread_witness(y, J, 25, 100) == []
    # top-4 mass of the flat 16-vector is exactly 1/4, so it is almost sparse under >=
    y = np.full(16, 0.25)
    with pytest.raises(PreconditionError):
        spread_witness(y, 16, 16)
    J = spread_witness(y, 16, 16, require_spread=False)
    assert J == tuple(range(16)) and check_spread_witness(y, J, 16, 16) == []
    with pytest.raises(PreconditionError):
        spread_witness(np.eye(10)[0], 2, 16)
    with pytest.raises(ValueError):
        spread_witness(np.full(4, 0.5), 2, 3)


@settings(max_examples=150)
@given(st.integers(2, 60), st.data())
def test_spread_witness_passes_checker(n, data):
    N = data.draw(st.integers(n, 4 * n))
    m = data.draw(st.integers(1, n))
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    y = unit(rng, n)
    # random vectors may be almost sparse; flatten them towards uniform until spread
    k = min(math.isqrt(N), n)
    w = 0.0
    while top_mass(y, k) >= 0.25 and w < 1:
        w = min(1.0, w + 0.1)
        y = (1 - w) * y + w * np.full(n, n**-0.5)
        y /= np.linalg.norm(y)
    if top_mass(y, k) >= 0.25:
        with pytest.raises(PreconditionError):
            spread_witness(y, m, N)
        return
    J = spread_witness(y, m, N)
    assert check_spread_witness(y, J, m, N) == []


def test_checker_rejects_bad_blocks():
    y = np.full(100, 0.1)
    assert check_spread_witness(y, range(30), 25, 100)
    assert check_spread_witness(y, range(2), 25, 100)


# ------------------------------------------------------------ target sets

def test_shell_projection_matches_brute_force():
    rng = np.random.default_rng(3)
    for lo, hi, cap in [(1, 1, math.inf), (0.5, 1, 0.6), (0.3, 0.7, 0.4), (0, 1, 0.5)]:
        T = Shell(lo, hi, cap)
        # brute force over a fine 2-d grid of the target
        g = np.linspace(-1, 1, 801)
        G = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
        G = G[T.contains(G)]
        tree = cKDTree(G)
        X = rng.uniform(-1.3, 1.3, (400, 2))
        P = T.project(X)
        assert T.contains(P).all()
        d_true, _ = tree.query(X)
        d = np.linalg.norm(P - X, axis=1)
        assert np.all(d <= d_true + 1e-9)


def test_empty_shell():
    assert Shell(0.9, 1, 0.1).is_empty(4) and not Shell(0.5, 1, 0.5).is_empty(4)
    assert len(ball_net(4, 0.5, Shell(0.9, 1, 0.1)).points) == 0


# ------------------------------------------------------------ nets

def test_ball_net_s0():
    net = ball_net(1, 0.5, FiniteSet([[-1.0], [1.0]]))
    assert sorted(net.points[:, 0]) == [-1.0, 1.0]


@pytest.mark.parametrize("dim", [1, 2, 3, 4])
@pytest.mark.parametrize("eps", [1.0, 0.5, 0.25])
def test_ball_net_covers(dim, eps):
    rng = np.random.default_rng(dim * 100 + int(eps * 8))
    for T in (Shell(), Shell(1, 1), Shell(0.5, 1, 0.6)):
        net = ball_net(dim, eps, T)
        assert T.contains(net.points).all()
        X = T.project(in_ball(rng, dim, 20_000, 0.0, 1.0))
        d, _ = cKDTree(net.points).query(X)
        assert d.max() <= eps * (1 + 1e-9)
        assert math.log(len(net)) <= dim * math.log(4 * math.sqrt(dim) / eps) + 1e-9


def test_ball_net_guards():
    with pytest.raises(ResourceLimitError):
        ball_net(11, 0.5)
    with pytest.raises(ResourceLimitError):
        ball_net(8, 0.05)
    with pytest.raises(ValueError):
        ball_net(2, 1.5)


def test_sparsified_examples():
    net = sparsified_net(4, 1, 0.1, Shell(1, 1))
    assert len(net) == 8 <= 4 * (2 / 0.1 + 1)
    want = np.vstack([np.eye(4), -np.eye(4)])
    assert all(np.isclose(np.abs(want - p).max(axis=1), 0, atol=1e-12).sum() == 1 for p in net.points)
    dense = ball_net(3, 0.5)
    sp = sparsified_net(3, 3, 0.5)
    assert np.array_equal(np.unique(dense.points, axis=0), sp.points)


def test_sparsified_net_covers():
    rng = np.random.default_rng(5)
    n, m, eps = 6, 2, 0.25
    T = Shell(0.5, 1, 0.8)
    net = sparsified_net(n, m, eps, T)
    assert np.all(np.count_nonzero(net.points, axis=1) <= m)
    for _ in range(2000):
        J = rng.choice(n, m, replace=False)
        x = np.zeros(n)
        x[J] = T.project(in_ball(rng, m, 1))[0]
        y = x.copy()  # any y whose m-sparse representative is x
        assert projected_distance(y, net) <= eps * (1 + 1e-9)


def test_sparsified_guards_and_sampling():
    with pytest.raises(ResourceLimitError, match="sample"):
        sparsified_net(40, 6, 0.9)
    net = sparsified_net(40, 2, 0.9, Shell(1, 1), support_policy=("sample", 10), seed=1)
    assert len(net.supports_used) == 10
    again = sparsified_net(40, 2, 0.9, Shell(1, 1), support_policy=("sample", 10), seed=1)
    assert np.array_equal(net.points, again.points)
    with pytest.raises(TypeError):
        sparsified_net(4, 2, 0.5, FiniteSet([[1.0, 0.0]]))


# ------------------------------------------------------------ CSV

def test_net_csv_round_trip(tmp_path):
    P = sparsified_net(5, 2, 0.5, Shell(0.5, 1)).points
    P = np.vstack([P, np.zeros(5)])
    write_net(tmp_path / "net.csv", P)
    assert np.array_equal(read_net(tmp_path / "net.csv", 5), P)
    assert format_net([np.zeros(3)]) == "-\n"
    assert np.array_equal(parse_net("0:1.5;2:-1\n# note\n-\n", 3), [[1.5, 0, -1], [0, 0, 0]])
    with pytest.raises(ValueError):
        parse_net("7:1", 3)
    with pytest.raises(ValueError):
        parse_net("0=1", 3)
