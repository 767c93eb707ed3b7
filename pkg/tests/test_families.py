import itertools
from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasiflat.errors import DomainError, EpsilonTooLarge, HypothesisViolated, ZeroLinearPart
from quasiflat.families import (AffineFamily, T_eps, ab_constant, adapt_constant,
                                adapt_small_scales, check_almost_affine, check_compatible,
                                pre_estimate_scan, psi, random_compatible_family,
                                stabilize_large_scales, tau, verify_inequality)
from quasiflat.generators import PerturbedAffine, ball_grid
from quasiflat.geometry import AffineMap, SampledSet


def test_T_values():
    for eps in (1e-3, 0.1, 1.0):
        assert T_eps(eps, 1.0) == 1.0
    assert T_eps(1e-12, 8.0) == pytest.approx(2 * 3 + 1, rel=1e-9)
    assert T_eps(1.0, 2.0) == pytest.approx(12.0)
    with pytest.raises(DomainError):
        T_eps(0.1, 0.5)
    with pytest.raises(DomainError):
        T_eps(0.0, 2.0)


def test_tau_values():
    x = np.array([0.3, -0.1])
    assert tau(x, 1.0, x, 1.0) == 1.0
    assert tau(x, 4.0, x, 1.0) == 4.0
    assert tau([0.0], 1.0, [1.0], 1.0) == 2.0


def _constant_family(A, bp, scales):
    return AffineFamily.from_callable(lambda x, r: A, bp, scales)


def test_constant_family_is_compatible_with_zero():
    bp = np.random.default_rng(0).uniform(-1, 1, (5, 2))
    A = AffineMap(np.array([[1.0, 2], [0, 1], [3, 0]]), np.ones(3))
    F = _constant_family(A, bp, 0.1 * 2.0 ** np.arange(5))
    assert check_compatible(F)[0] == 0.0


def test_zero_linear_part_raises():
    F = _constant_family(AffineMap(np.zeros((2, 1)), np.zeros(2)), [[0.0]], [1.0, 2.0])
    with pytest.raises(ZeroLinearPart):
        check_compatible(F)


def _pair_scan(F):
    best = 0.0
    for (i, x), (p, y) in itertools.product(enumerate(F.base_points), repeat=2):
        for (j, r), (q, s) in itertools.product(enumerate(F.scales), repeat=2):
            if np.linalg.norm(x - y) <= max(r, s) and 0.5 <= r / s <= 2:
                La, Lb = F.linear[i, j], F.linear[p, q]
                mn = min(np.linalg.norm(La, 2), np.linalg.norm(Lb, 2))
                best = max(best, np.linalg.norm(La - Lb, 2) / mn)
    return best


def test_scalar_family_against_pair_scan():
    delta = 0.01
    bp = np.random.default_rng(1).uniform(-1, 1, (6, 2))

    def fn(x, r):
        h = np.sin(np.log(r) + x[0])  # |h| <= 1, Lipschitz 1 in log r
        return AffineMap((1 + delta * h) * np.eye(2), np.zeros(2))

    F = AffineFamily.from_callable(fn, bp, 0.05 * 2.0 ** np.arange(6))
    assert check_compatible(F)[0] == pytest.approx(_pair_scan(F), rel=1e-12)


def test_compatibility_rotation_invariant():
    F = random_compatible_family(2, 3, 0.05, np.random.default_rng(2).uniform(-1, 1, (5, 2)), 0.1, 5, seed=3)
    Q, _ = np.linalg.qr(np.random.default_rng(4).standard_normal((3, 3)))
    G = F.with_maps(np.einsum("ab,ijbc->ijac", Q, F.linear), F.shift @ Q.T)
    assert check_compatible(G)[0] == pytest.approx(check_compatible(F)[0], rel=1e-10)
    assert check_compatible(F)[0] == pytest.approx(_pair_scan(F), rel=1e-12)


def test_random_family_lands_near_target():
    for eps in (1e-3, 1e-2, 1e-1):
        F = random_compatible_family(1, 2, eps, np.linspace(-1, 1, 7)[:, None], 0.05, 6, seed=5)
        assert 0.8 * eps <= F.eps_nominal <= eps


def test_almost_affine_exact_and_sine():
    E = SampledSet.from_points(np.linspace(-1, 1, 161)[:, None])
    A = AffineMap(np.array([[2.0], [1.0]]), np.array([0.5, 0.0]))
    bp = E.points[::40]
    scales = np.array([0.25, 0.5, 1.0])
    F = _constant_family(A, bp, scales)
    assert check_almost_affine(A, E, F) == 0.0
    delta = 1e-3
    f = lambda X: A(X) + delta * np.column_stack([np.sin(40 * np.pi * X[:, 0]), 0 * X[:, 0]])
    # the grid hits the sine maxima, so sup|sin| = 1 on every ball of radius >= 1/20
    expected = delta / (A.norm() * scales.min())
    assert check_almost_affine(f, E, F) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_almost_affine_similarity_invariance(seed):
    rng = np.random.default_rng(seed)
    g = PerturbedAffine(1, 2, 0.01, levels=2, l0=0.5, seed=seed)
    X = np.linspace(-1, 1, 41)[:, None]
    bp = X[::10]
    scales = np.array([0.2, 0.4, 0.8])
    F = AffineFamily.from_callable(g.family_map, bp, scales)
    base = check_almost_affine(g, SampledSet.from_points(X), F)
    # post-compose by a similarity of R^2 and pre-compose by a dilation of R^1
    Q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
    c, d = rng.uniform(0.5, 3), rng.uniform(0.5, 3)
    b = rng.standard_normal(2)
    lin = np.einsum("ab,ijbc->ijac", c * Q, F.linear) / d
    sh = np.einsum("ab,ijb->ija", c * Q, F.shift) + b
    G = AffineFamily(d * bp, d * scales, lin, sh, 0.0)
    vals = c * g(X) @ Q.T + b
    moved = check_almost_affine(vals, SampledSet.from_points(d * X), G)
    assert moved == pytest.approx(base, rel=1e-9)


def test_ab_bound_equal_maps_and_independent_recomputation():
    A = AffineMap(np.array([[1.0, 0.2], [0.0, 1.0], [0.3, 0.3]]), np.zeros(3))
    V = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    rep = verify_inequality("AB_bound", V=V, A=A, B=A, z=[3.0, 3.0])
    assert rep.lhs == 0.0 and rep.slack == rep.rhs >= 0
    rng = np.random.default_rng(6)
    for n in (1, 2, 3):
        for _ in range(20):
            V = rng.standard_normal((n + 1, n))
            A = AffineMap(rng.standard_normal((3, n)), rng.standard_normal(3))
            B = AffineMap(A.linear + 1e-3 * rng.standard_normal((3, n)), A.shift + 1e-3 * rng.standard_normal(3))
            u = rng.standard_normal(n)
            z = V[0] + 3 * u / np.linalg.norm(u)
            rep = verify_inequality("AB_bound", V=V, A=A, B=B, z=z)
            diam = max(np.linalg.norm(a - b) for a in V for b in V)
            eps = max(np.linalg.norm(A(v) - B(v)) for v in V) / diam
            vol = abs(np.linalg.det((V[1:] - V[0]).T)) / factorial(n)
            dist = min(np.linalg.norm(z - v) for v in V)
            rhs = eps * (diam + 4 * n ** ((n + 1) / 2) / factorial(n) * diam**n / vol * dist)
            assert rep.rhs == pytest.approx(rhs, rel=1e-9)
            assert rep.lhs == pytest.approx(np.linalg.norm(A(z) - B(z)), rel=1e-12)
            assert rep.slack >= -1e-9


def test_pre_a_on_constant_family():
    A = AffineMap(np.array([[1.0], [1.0]]), np.zeros(2))
    F = _constant_family(A, [[0.0], [0.5]], [0.5, 1.0])
    rep = verify_inequality("pre_a", family=F, i=0, j=0, p=1, q=1, eps=0.1)
    assert rep.lhs == 0.0 and rep.slack > 0


def test_compat_hypothesis_checked():
    A = AffineMap(np.array([[1.0]]), [0.0])
    F = _constant_family(A, [[0.0], [5.0]], [0.5, 1.0])
    with pytest.raises(HypothesisViolated):
        verify_inequality("compat", family=F, i=0, j=0, p=1, q=0, eps=0.1)


def test_psi_values():
    # {0, e_1, ..., e_n} has diameter sqrt(2) once n >= 2
    for n in (2, 3):
        V = np.vstack([np.zeros(n), np.eye(n)]) * 2.5
        assert psi(V) == pytest.approx(2 ** (n / 2) * factorial(n), rel=1e-12)
    assert psi([[0.0], [2.5]]) == 1.0
    t = np.linspace(0, 2 * np.pi, 4000, endpoint=False)
    assert psi(np.column_stack([np.cos(t), np.sin(t)])) == pytest.approx(4 / np.pi, rel=1e-5)
    assert psi([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]) == np.inf


def test_constants():
    assert adapt_constant(2) == pytest.approx(306.0)
    assert adapt_constant(2) == pytest.approx(18 * (1 + 2 * 4**1.5))
    assert ab_constant(1) == pytest.approx(4.0)
    assert ab_constant(2) == pytest.approx(4 * 2**1.5 / 2)


def test_stabilize_identity_when_stable_and_replaces_large_scales():
    bp = np.array([[0.0], [0.3], [0.5]])
    # scales 0.125 * 2^j: diam 0.5 is a grid scale, index 2
    F = random_compatible_family(1, 2, 0.02, bp, 0.125, 5, seed=7)
    G = stabilize_large_scales(F, x_star=1)
    assert np.allclose(G.linear[:, :3], F.linear[:, :3])
    for i in range(3):
        for j in (3, 4):
            assert np.array_equal(G.linear[i, j], F.linear[1, 2])
            assert np.array_equal(G.shift[i, j], F.shift[1, 2])
    H = stabilize_large_scales(G, x_star=1)
    assert np.array_equal(H.linear, G.linear) and np.array_equal(H.shift, G.shift)
    assert check_compatible(G)[0] <= check_compatible(F)[0] + 1e-15


def test_stabilize_keeps_measured_eps():
    g = PerturbedAffine(1, 2, 2e-3, levels=3, l0=0.5, seed=8)
    E = SampledSet.from_points(np.linspace(-0.5, 0.5, 21)[:, None])
    scales = 0.125 * 2.0 ** np.arange(6)
    F = AffineFamily.from_callable(g.family_map, E.points, scales)
    before = check_almost_affine(g, E, F)
    after = check_almost_affine(g, E, stabilize_large_scales(F, 10))
    assert after <= before + 1e-15


def test_adapt_affine_and_interpolation_contract():
    A = AffineMap(np.array([[1.0, 0.5], [0.0, 2.0], [1.0, 1.0]]), np.array([1.0, 0.0, -1.0]))
    bp = ball_grid(np.zeros(2), 0.3, 0.1)
    scales = 0.05 * 2.0 ** np.arange(5)
    F = _constant_family(A, bp, scales)
    out = adapt_small_scales(A, F, np.zeros(2), 0.1, eps=1e-3)
    assert np.allclose(out.linear, A.linear, atol=1e-12)
    g = PerturbedAffine(2, 3, 1e-4, levels=3, l0=0.5, seed=9)
    G = AffineFamily.from_callable(g.family_map, bp, scales)
    out = adapt_small_scales(g, G, np.zeros(2), 0.1, eps=1e-3)
    I = np.eye(2)
    for i, x in enumerate(out.base_points):
        for j, r in enumerate(out.scales):
            if r > 0.2 * (1 + 1e-12):
                continue
            for e in np.vstack([np.zeros(2), I]):
                z = x + r * e
                assert np.linalg.norm(out.apply(i, j, z) - g(z)[0]) < 1e-10


def test_adapt_measured_eps_below_P_eps():
    x0, r0 = np.zeros(2), 0.1
    g = PerturbedAffine(2, 3, 1.5e-4, levels=3, l0=0.4, seed=10, sigma=1.0)
    E3 = SampledSet.from_points(ball_grid(x0, 3 * r0, 0.05))
    scales = 0.025 * 2.0 ** np.arange(6)
    F = AffineFamily.from_callable(g.family_map, E3.points, scales)
    eps = check_almost_affine(g, E3, F)
    assert eps <= 1e-3
    out = adapt_small_scales(g, F, x0, r0, E3=E3)
    E1 = SampledSet.from_points(E3.points[np.linalg.norm(E3.points - x0, axis=1) <= r0 + 1e-12])
    assert check_almost_affine(g, E1, out) <= adapt_constant(2) * 1e-3
    with pytest.raises(EpsilonTooLarge):
        adapt_small_scales(g, F, x0, r0, eps=0.01)


def test_pre_estimates_hold_on_random_families():
    rng = np.random.default_rng(11)
    for k, eps in enumerate((1e-3, 1e-2, 1e-1)):
        F = random_compatible_family(2, 3, eps, rng.uniform(-1, 1, (6, 2)), 0.05, 6, seed=k)
        a, b, m = pre_estimate_scan(F)
        assert m == (6 * 6) ** 2
        assert a.slack >= -1e-9 and b.slack >= -1e-9
