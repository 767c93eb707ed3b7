import numpy as np
import pytest

from quasiflat.errors import CollarViolation, DomainError, ResolutionTooCoarse
from quasiflat.experiments import extension_setup
from quasiflat.families import AffineFamily
from quasiflat.generators import similarity
from quasiflat.geometry import AffineMap, SampledSet
from quasiflat.whitney import (PartitionOfUnity, cube_comparison_constants, extend_family,
                               extend_map, far_constants, measure_extension_constants,
                               near_constants, whitney_decompose, whitney_property_check)


def _brute_whitney_1d(E, lo, side, L):
    """All maximal dyadic intervals of [lo, lo+side] with closed 3Q missing E."""
    def clear(a, s):
        return not np.any((E >= a - s) & (E <= a + 2 * s))
    out = set()
    for lev in range(L + 1):
        s = side * 2.0 ** -lev
        for m in range(2**lev):
            a = lo + m * s
            if not clear(a, s):
                continue
            parent_ok = lev > 0 and clear(lo + (m // 2) * 2 * s, 2 * s)
            if not parent_ok:
                out.add((lev, round(a, 12)))
    # keep only intervals not inside an accepted larger one
    keep = set()
    for lev, a in out:
        s = side * 2.0 ** -lev
        inside = any(l2 < lev and a2 - 1e-12 <= a and a + s <= a2 + side * 2.0 ** -l2 + 1e-12
                     for l2, a2 in out)
        if not inside:
            keep.add((lev, a))
    return keep


def test_single_point_decomposition_matches_brute_scan():
    E = SampledSet.from_points([[0.0]], resolution=1e-9)
    L = 8
    W = whitney_decompose(E, ([-1.0], 2.0), L)
    got = {(int(l), round(float(c[0]), 12)) for l, c in zip(W.levels, W.corners)}
    assert got == _brute_whitney_1d(np.array([0.0]), -1.0, 2.0, L)
    # the intervals +-[2^-k-1, 2^-k] appear split into two equal halves
    for k in range(0, L - 2):
        a, b = 2.0 ** (-k - 1), 2.0 ** -k
        halves = {(round(a, 12)), round((a + b) / 2, 12)}
        assert all(any(abs(c - h) < 1e-12 for (_, c) in got) for h in halves)
        assert any(abs(c + b) < 1e-12 for (_, c) in got)


def test_decompose_errors():
    E = SampledSet.from_points([[0.0], [0.5]])
    with pytest.raises(ResolutionTooCoarse):
        whitney_decompose(E, ([-1.0], 2.0), 3)
    F = SampledSet.from_points([[3.0]], resolution=1e-9)
    with pytest.raises(DomainError):
        whitney_decompose(F, ([-1.0], 2.0), 3)


@pytest.mark.parametrize("n,m,L", [(1, 15, 9), (2, 20, 6)])
def test_whitney_properties(n, m, L):
    rng = np.random.default_rng(n)
    E = SampledSet.from_points(rng.uniform(-0.5, 0.5, (m, n)), resolution=1e-9)
    W = whitney_decompose(E, (-np.ones(n), 2.0), L)
    props = whitney_property_check(W)
    for key in ("b_lower", "b_upper", "c_lower", "c_upper", "d"):
        assert props[key] <= 1.0, key
    assert props["a_gap"] == 0.0
    assert props["overlap"] <= 4**n


def _setup(n=2, eps=1e-2, seed=0):
    return extension_setup(n, n + 1, eps, seed, m=12)


def test_partition_sums_and_derivatives():
    run = _setup()
    ev = run.ev
    rng = np.random.default_rng(1)
    X = rng.uniform(-0.9, 0.9, (12000, 2))
    X = X[ev.classify(X) == 0][:10000]
    assert len(X) >= 5000
    pou = PartitionOfUnity(ev.W)
    worst_sum = worst_grad = 0.0
    for x in X:
        _, phi, dphi, _ = pou.evaluate(x, 1)
        worst_sum = max(worst_sum, abs(phi.sum() - 1))
        worst_grad = max(worst_grad, float(np.abs(dphi.sum(axis=0)).max()))
    assert worst_sum <= 1e-12
    assert worst_grad <= 1e-10
    # gradient of each phi against a five-point difference stencil
    h = 1e-6
    for x in X[:200]:
        idx, phi, dphi, _ = pou.evaluate(x, 1)
        for i in range(2):
            vals = []
            for k in (2, 1, -1, -2):
                ik, pk, _, _ = pou.evaluate(x + k * h * np.eye(2)[i], 0)
                d = dict(zip(ik, pk))
                vals.append(np.array([d.get(q, 0.0) for q in idx]))
            fd = (8 * (vals[1] - vals[2]) - (vals[0] - vals[3])) / (12 * h)
            scale = max(1.0, float(np.abs(dphi[:, i]).max()))
            assert np.max(np.abs(fd - dphi[:, i])) <= 1e-6 * scale


def test_single_cube_point_has_phi_one():
    run = _setup()
    W, pou = run.W, run.ev.pou
    # a point near the center of a big cube is outside every other doubled cube
    k = int(np.argmax(W.sides))
    c = W.centers[k]
    idx, phi, _, _ = pou.evaluate(c, 0)
    if len(idx) == 1:
        assert idx[0] == k and phi[0] == 1.0
    else:
        pytest.skip("center also covered by a neighbour")


def test_constant_family_extends_to_the_affine_map():
    rng = np.random.default_rng(2)
    E = SampledSet.from_points(rng.uniform(-0.5, 0.5, (10, 2)), resolution=1e-9)
    A = AffineMap(np.array([[1.0, 0.3], [0.2, 1.0], [0.0, 0.5]]), np.array([0.1, 0.2, 0.3]))
    scales = np.sqrt(2) * 2.0 * 2.0 ** -np.arange(6, -2, -1)
    fam = AffineFamily.from_callable(lambda x, r: A, E.points, scales)
    W = whitney_decompose(E, (-np.ones(2), 2.0), 6)
    ev = extend_map(E, A(E.points), fam, W, eps=0.01)
    X = rng.uniform(-0.9, 0.9, (300, 2))
    F, flags = ev.evaluate(X)
    ok = flags == 0
    assert np.allclose(F[ok], A(X[ok]), atol=1e-12)
    assert np.array_equal(ev(E.points), A(E.points))


def test_extension_is_exact_on_E_and_smooth_off_E():
    run = _setup(n=2)
    ev = run.ev
    assert np.array_equal(ev(run.E.points), ev.values)
    rng = np.random.default_rng(3)
    X = rng.uniform(-0.9, 0.9, (1500, 2))
    X = X[ev.classify(X) == 0][:1000]
    h = 1e-5
    for x in X:
        F, DF, D2, _ = ev.evaluate(x[None], order=2)
        for i in range(2):
            sh = [ev.evaluate((x + k * h * np.eye(2)[i])[None], order=1) for k in (2, 1, -1, -2)]
            fd = (8 * (sh[1][0][0] - sh[2][0][0]) - (sh[0][0][0] - sh[3][0][0])) / (12 * h)
            assert np.linalg.norm(fd - DF[0][:, i]) <= 1e-6 * max(1.0, np.linalg.norm(DF[0]))
            fd2 = (8 * (sh[1][1][0] - sh[2][1][0]) - (sh[0][1][0] - sh[3][1][0])) / (12 * h)
            assert np.linalg.norm(fd2 - D2[0][:, :, i]) <= 1e-6 * max(1.0, np.linalg.norm(D2[0]))


def test_extended_family_rows_and_taylor_maps():
    run = _setup(n=2)
    ev = run.ev
    Aplus = extend_family(ev, run.E.points[:3])
    for k in range(3):
        i = run.family.base_index(run.E.points[k])
        for j, r in enumerate(Aplus.scales):
            jj = run.family.scale_index(r)
            assert np.array_equal(Aplus.linear[k, j], run.family.linear[i, jj])
    rng = np.random.default_rng(4)
    X = rng.uniform(-0.9, 0.9, (200, 2))
    X = X[ev.classify(X) == 0][:40]
    Aplus = extend_family(ev, X)
    h = 1e-6
    for k, x in enumerate(X):
        small = np.nonzero(Aplus.scales < ev.d(x)[0] / 2)[0]
        for j in small:
            assert np.allclose(Aplus.apply(k, j, x), ev(x[None])[0], atol=1e-12)
            J = np.column_stack([(ev((x + h * e)[None])[0] - ev((x - h * e)[None])[0]) / (2 * h)
                                 for e in np.eye(2)])
            assert np.abs(J - Aplus.linear[k, j]).max() <= 1e-6 * max(1.0, np.abs(J).max())


def test_collar_query_needing_taylor_map_raises():
    run = _setup(n=1)
    ev = run.ev
    x = run.E.points[0] + 0.5 * ev.W.box_side * 2.0 ** -ev.W.min_level
    assert ev.classify(x[None])[0] == 2
    with pytest.raises(CollarViolation):
        extend_family(ev, x[None], scales=[1e-9, 1.0])


def test_similarity_input_gives_zero_constants():
    rng = np.random.default_rng(5)
    E = SampledSet.from_points(rng.uniform(-0.5, 0.5, (8, 1)), resolution=1e-9)
    S = similarity(1, 2, 3)
    scales = 2.0 * 2.0 ** -np.arange(9, -2, -1)
    fam = AffineFamily.from_callable(lambda x, r: S, E.points, scales)
    W = whitney_decompose(E, (-np.ones(1), 2.0), 9)
    ev = extend_map(E, S(E.points), fam, W, eps=1e-3)
    probes = np.linspace(-0.7, 0.7, 30)[:, None]
    rep = measure_extension_constants(ev, probes, np.linspace(-1, 1, 201)[:, None], E.points[:2])
    assert rep.C_compat * rep.eps < 1e-11 and rep.C_aa * rep.eps < 1e-11
    assert rep.H_F == pytest.approx(1.0, abs=1e-9)
    assert rep.on_set_exact


def test_local_constants_stable_across_eps():
    out = {}
    for eps in (1e-3, 1e-2):
        run = _setup(n=1, eps=eps, seed=6)
        ev = run.ev
        rng = np.random.default_rng(7)
        pts = rng.uniform(-0.7, 0.7, (80, 1))
        pts = pts[ev.classify(pts) == 0][:30]
        out[eps] = {**{"lin": 0, "val": 0}, **cube_comparison_constants(ev)}
        far = far_constants(ev, pts[:10], [0.05, 0.2])
        near = near_constants(ev, pts)
        out[eps].update({"far_" + k: v for k, v in far.items()})
        out[eps].update({"near_" + k: v for k, v in near.items()})
    for key in out[1e-3]:
        a, b = out[1e-3][key], out[1e-2][key]
        assert np.isfinite(a) and np.isfinite(b)
        if max(a, b) > 1e-12:
            assert 0.5 <= a / b <= 2.0, (key, a, b)
