"""Randomized verification suites shared by the CLI and the test-suite.

Every suite takes a parameter dict and a seed and returns a SuiteResult
whose reports carry both sides of each checked inequality.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import BadSpec
from .families import (AffineFamily, IneqReport, check_almost_affine, holder_exponent_data,
                       pre_estimate_scan, random_compatible_family, verify_inequality)
from .flatness import beta_fit, theta
from .generators import PerturbedAffine, SnowflakeMap, ball_grid, cube_grid, radial_qc
from .geometry import AffineMap, SampledSet, affine_from_samples, singular_values
from .quasisymmetry import SampledMap, fit_similarity, weak_qs_constant

__all__ = ["SuiteResult", "SUITES", "run_suite", "bflat_probe", "similarity_rigidity"]


@dataclass
class SuiteResult:
    name: str
    reports: list
    instances: int
    tol: float
    extra: dict = field(default_factory=dict)

    @property
    def worst(self) -> IneqReport:
        return min(self.reports, key=lambda r: r.slack)

    @property
    def violations(self) -> int:
        return sum(1 for r in self.reports if r.slack < -self._tol(r))

    def _tol(self, r: IneqReport) -> float:
        return float(r.extra.get("tol", self.tol))

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _cases(params, default):
    return [tuple(c) for c in params.get("dims", default)]


# --- flatness -----------------------------------------------------------------

def suite_betas_sandwich(params: dict, seed: int) -> SuiteResult:
    """beta <= centered beta <= 2 beta on given sets, or random ones."""
    from .config import resolve_object

    rng = np.random.default_rng(seed)
    sets = []
    for desc in params.get("sets", []):
        obj = resolve_object(desc)
        sets.append((obj if isinstance(obj, SampledSet) else SampledSet.from_points(obj.image),
                     desc.get("n")))
    for k in range(int(params.get("random_sets", 0 if sets else 20))):
        n, N = [(1, 2), (1, 3), (2, 3)][k % 3]
        sets.append((SampledSet.from_points(rng.standard_normal((int(rng.integers(8, 30)), N))), n))
    fracs = params.get("scales", [0.25, 0.5, 1.0])
    reports = []
    for s_idx, (E, n) in enumerate(sets):
        n = E.dim - 1 if n is None else int(n)
        diam = float(np.max(np.ptp(E.points, axis=0)))
        centers = np.linspace(0, len(E) - 1, min(len(E), int(params.get("centers", 3)))).astype(int)
        for c in centers:
            for fr in fracs:
                r = fr * diam
                b, fit = beta_fit(E, E.points[c], r, n=n)
                bc, fitc = beta_fit(E, E.points[c], r, centered=True, n=n)
                tol = 2 * max(fit.tol, fitc.tol) / r
                reports.append(IneqReport("sandwich", b, bc, bc - b, (s_idx, int(c)), {"r": r, "tol": tol}))
                reports.append(IneqReport("sandwich", bc, 2 * b, 2 * b - bc, (s_idx, int(c)), {"r": r, "tol": tol}))
    return SuiteResult("betas-sandwich", reports, len(reports) // 2, 0.0)


# --- compatible families ------------------------------------------------------

def suite_pre(params: dict, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    eps_list = params.get("eps", [1e-3, 1e-2, 1e-1])
    dims = _cases(params, [(1, 2), (2, 3), (1, 3), (2, 2)])
    reports = []
    pairs = 0
    for k in range(int(params.get("families", 40))):
        n, N = dims[k % len(dims)]
        eps = float(eps_list[k % len(eps_list)])
        bp = rng.uniform(-1, 1, (int(params.get("base_points", 6)), n))
        F = random_compatible_family(n, N, eps, bp, float(params.get("r_min", 0.05)),
                                     int(params.get("scales", 6)), seed=int(rng.integers(2**31)))
        a, b, m = pre_estimate_scan(F)
        for r in (a, b):
            r.extra.update({"family": k, "eps": F.eps_nominal})
        reports += [a, b]
        pairs += m
    return SuiteResult("pre-estimates", reports, int(params.get("families", 40)), 1e-9,
                       {"pairs": pairs})


def _perturbed_setup(n: int, N: int, eta: float, seed: int, m: int, n_scales: int, r_min: float):
    g = PerturbedAffine(n, N, eta, levels=4, l0=0.8, seed=seed)
    pts = cube_grid(n, -1, 1, m)
    E = SampledSet.from_points(pts)
    scales = r_min * 2.0 ** np.arange(n_scales)
    F = AffineFamily.from_callable(g.family_map, pts, scales)
    eps = check_almost_affine(g, E, F)
    return g, E, F, eps


def suite_post(params: dict, seed: int) -> SuiteResult:
    """Both almost-affine estimates against the explicit bound traced through A_{y, a s}."""
    rng = np.random.default_rng(seed)
    dims = _cases(params, [(1, 2), (2, 3), (1, 3)])
    setups = []
    for k, (n, N) in enumerate(dims):
        eta = float(params.get("eta", 0.02))
        setups.append(_perturbed_setup(n, N, eta, seed + k, 33 if n == 1 else 9, 7, 0.05))
    a_list = [float(a) for a in params.get("a", [1, 2, 4])]
    reports = []
    per_a = {a: 0.0 for a in a_list}
    target = int(params.get("instances", 200))
    counts = {"post_a": 0, "post_b": 0}
    tries = 0
    while min(counts.values()) < target and tries < 100 * target:
        tries += 1
        g, E, F, eps = setups[tries % len(setups)]
        a = a_list[int(rng.integers(len(a_list)))]
        S = len(F.scales)
        la = int(round(np.log2(a)))
        j = int(rng.integers(S - la))
        # half of the draws aim at tau <= a: comparable scales and nearby centers
        near = counts["post_b"] < counts["post_a"] and rng.random() < 0.7
        if near:
            q = int(np.clip(j + rng.integers(-la, la + 1), 0, S - la - 1))
        else:
            q = int(rng.integers(S - la))
        r, s = F.scales[j], F.scales[q]
        big = max(r, s)
        reach = a * min(r, s) / 2 if near else a * big
        i = int(rng.integers(len(F.base_points)))
        cand = np.nonzero(np.linalg.norm(F.base_points - F.base_points[i], axis=1) <= reach)[0]
        p = int(rng.choice(cand))
        x, y = F.base_points[i], F.base_points[p]
        base = x if rng.random() < 0.5 else y
        u = rng.standard_normal(F.n)
        z = base + u / np.linalg.norm(u) * a * big * rng.uniform(0, 1) ** (1 / F.n)
        kinds = ["post_a"]
        if max(r, s, 2 * np.linalg.norm(x - y)) / min(r, s) <= a:
            kinds.append("post_b")
        for kind in kinds:
            if counts[kind] >= target and len(kinds) == 1:
                continue
            rep = verify_inequality(kind, family=F, i=i, j=j, p=p, q=q, z=z, a=a, eps=eps)
            rep.extra["a"] = a
            if kind == "post_a":
                per_a[a] = max(per_a[a], rep.extra["constant"])
            reports.append(rep)
            counts[kind] += 1
    return SuiteResult("post-estimates", reports, min(counts.values()), 1e-9,
                       {"constant_per_a": {str(k): v for k, v in per_a.items()}, "counts": counts})


# --- single inequalities ------------------------------------------------------

def suite_ab(params: dict, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    reports = []
    per_n = int(params.get("instances", 1000))
    for n in params.get("n", [1, 2, 3]):
        for _ in range(per_n):
            N = n + int(rng.integers(0, 2))
            V = rng.standard_normal((n + 1, n)) * rng.uniform(0.1, 3)
            diam = float(np.max(pdist(V))) if n + 1 > 1 else 0.0
            A = AffineMap(rng.standard_normal((N, n)), rng.standard_normal(N))
            eps = 10 ** rng.uniform(-4, -0.5)
            D = rng.standard_normal((n + 1, N))
            D *= (eps * diam * rng.uniform(0, 1, (n + 1, 1))) / np.linalg.norm(D, axis=1, keepdims=True)
            try:
                Dmap = affine_from_samples(V, D)
            except Exception:
                continue
            B = AffineMap(A.linear + Dmap.linear, A.shift + Dmap.shift)
            k = int(rng.integers(n + 1))
            u = rng.standard_normal(n)
            z = V[k] + u / np.linalg.norm(u) * diam * 10 ** rng.uniform(-2, 1.5)
            reports.append(verify_inequality("AB_bound", V=V, A=A, B=B, z=z, eps=eps))
    return SuiteResult("ab-bound", reports, len(reports), 1e-9)


def suite_holder(params: dict, seed: int) -> SuiteResult:
    """Pairs x, y of a grid in B(x0, r0/2) for random perturbed affine maps."""
    rng = np.random.default_rng(seed)
    dims = _cases(params, [(1, 2), (2, 3), (1, 3), (2, 2)])
    reports = []
    pairs = 0
    for k in range(int(params.get("maps", 40))):
        n, N = dims[k % len(dims)]
        eta = 10 ** rng.uniform(-3.5, -1.3)
        g = PerturbedAffine(n, N, eta, levels=5, l0=float(rng.uniform(0.2, 1.0)),
                            seed=int(rng.integers(2**31)), sigma=float(rng.uniform(0.5, 2)))
        eps = g.eps_bound
        if not eps < np.sqrt(2) - 1:
            continue
        x0 = rng.uniform(-1, 1, n)
        r0 = float(rng.uniform(0.2, 2.0))
        X = ball_grid(x0, r0 / 2, r0 / (40 if n == 1 else 12))
        fX = g(X)
        norm0 = g.family_map(x0, r0).norm()
        th, alpha = holder_exponent_data(eps)
        iu = np.triu_indices(len(X), 1)
        dx = cdist(X, X)[iu]
        df = cdist(fX, fX)[iu]
        rhs = 4.0 / (th * np.log(2.0)) * (dx / r0) ** alpha * norm0 * r0
        w = int(np.argmin(rhs - df))
        # the worst pair goes through the literal verifier as well
        rep = verify_inequality("holder", x=X[iu[0][w]], y=X[iu[1][w]], fx=fX[iu[0][w]], fy=fX[iu[1][w]],
                                x0=x0, r0=r0, norm0=norm0, eps=eps)
        rep.extra.update({"pairs": len(dx), "map": k})
        reports.append(rep)
        pairs += len(dx)
    return SuiteResult("holder", reports, pairs, 1e-9, {"maps": len(reports)})


def _inradius_instance(rng, n: int, N: int):
    eta = 10 ** rng.uniform(-3, -1.7)
    g = PerturbedAffine(n, N, eta, levels=4, l0=float(rng.uniform(0.3, 1.0)),
                        seed=int(rng.integers(2**31)), sigma=float(rng.uniform(0.5, 2)))
    eps = g.eps_bound
    x = rng.uniform(-1, 1, n)
    r = float(rng.uniform(0.2, 1.0))
    A = g.family_map(x, r)
    sv = singular_values(A)
    H = float(sv[-1] / sv[0])
    t = 1.0 / H - 2 * eps
    if t <= 0:
        return None
    if n == 1:
        B = x + np.linspace(-r, r, 4001)[:, None]
        sphere = np.array([x - r, x + r])
    else:
        B = ball_grid(x, r, r / 60)
        ang = np.linspace(0, 2 * np.pi, 721)[:-1]
        sphere = x + r * np.column_stack([np.cos(ang), np.sin(ang)])
        B = np.vstack([B, sphere])
    img = g(B)
    fx = g(x[None])[0]
    k0 = int(np.argmin(np.linalg.norm(B - x, axis=1)))
    img[k0] = fx
    diam = float(np.max(pdist(img))) if len(img) < 6000 else _approx_diam(img)
    S = SampledSet.from_points(img)
    th = theta(S, fx, diam / (3 * H), n=n)
    radial = np.linalg.norm(g(sphere) - fx, axis=1)
    return verify_inequality("inradius", eps=eps, H=H, t=t, A=A, x=x, r=r, diam_image=diam,
                             radial=radial, theta_value=th)


def _approx_diam(P):
    from scipy.spatial import ConvexHull
    try:
        h = P[ConvexHull(P).vertices]
    except Exception:
        h = P
    return float(np.max(pdist(h)))


def suite_inradius(params: dict, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    dims = _cases(params, [(1, 2), (1, 3)])
    reports = []
    target = int(params.get("instances", 60))
    k = 0
    while len(reports) < target and k < 4 * target:
        n, N = dims[k % len(dims)]
        k += 1
        rep = _inradius_instance(rng, n, N)
        if rep is not None:
            reports.append(rep)
    return SuiteResult("inradius", reports, len(reports), 1e-9)


# --- Whitney structure --------------------------------------------------------

def suite_whitney(params: dict, seed: int) -> SuiteResult:
    """Properties (b)-(d) as ratios <= 1, partition sums, and DF against differences."""
    from .whitney import extend_map, whitney_decompose, whitney_property_check

    rng = np.random.default_rng(seed)
    reports = []
    for k in range(int(params.get("sets", 4))):
        n, N = [(1, 2), (2, 3)][k % 2]
        m = int(rng.integers(5, 30))
        pts = rng.uniform(-0.5, 0.5, (m, n))
        E = SampledSet.from_points(pts, resolution=1e-9)
        L = 9 if n == 1 else 6
        W = whitney_decompose(E, (-np.ones(n), 2.0), L)
        prop = whitney_property_check(W)
        for key in ("b_lower", "b_upper", "c_lower", "c_upper", "d"):
            reports.append(IneqReport(f"whitney_{key}", prop[key], 1.0, 1.0 - prop[key], (k,)))
        reports.append(IneqReport("whitney_a_gap", prop["a_gap"], 0.0, -prop["a_gap"], (k,)))
        g = PerturbedAffine(n, N, 1e-3, levels=3, l0=0.5, seed=int(rng.integers(2**31)))
        scales = np.sqrt(n) * 2.0 * 2.0 ** -np.arange(L, 0, -1)
        F = AffineFamily.from_callable(g.family_map, pts, scales)
        ev = extend_map(E, g(pts), F, W)
        X = rng.uniform(-0.95, 0.95, (int(params.get("points", 100)), n))
        Fv, DF, fl = ev.evaluate(X, order=1)
        worst_sum = worst_fd = 0.0
        h = 1e-6
        for x, D, f in zip(X, DF, fl):
            if f != 0:
                continue
            _, phi, dphi, _ = ev.pou.evaluate(x, 1)
            worst_sum = max(worst_sum, abs(phi.sum() - 1.0))
            for i in range(n):
                e = np.zeros(n)
                e[i] = h
                fd = (ev._one(x + e, 0)[0] - ev._one(x - e, 0)[0]) / (2 * h)
                worst_fd = max(worst_fd, np.linalg.norm(fd - D[:, i]) / np.linalg.norm(D, 2))
        reports.append(IneqReport("pou_sum", worst_sum, 1e-12, 1e-12 - worst_sum, (k,)))
        reports.append(IneqReport("df_fd", worst_fd, 1e-6, 1e-6 - worst_fd, (k,)))
    return SuiteResult("whitney", reports, int(params.get("sets", 4)), 0.0)


# --- flatness of images -------------------------------------------------------

def bflat_probe(f, v, r: float, e, V_frame, n_line: int = 801, h_grid: float = None,
                line_extent: float = 3.0, cap: int = 400) -> IneqReport:
    """Beta of f(V) at f(v) and scale |f(v + r e) - f(v)|/2 against 72 N Htilde_f(B(v, 2r)).

    V is the plane through v spanned by the rows of ``V_frame``; it is sampled
    on a grid of half-width ``line_extent * r``. Htilde is measured on a grid of
    the full ball B^N(v, 2r).
    """
    v = np.asarray(v, float)
    N = v.shape[0]
    Fr = np.atleast_2d(np.asarray(V_frame, float))
    n = Fr.shape[0]
    ext = line_extent * r
    m = n_line if n == 1 else int(np.sqrt(n_line)) | 1
    coords = cube_grid(n, -ext, ext, m)
    VP = v + coords @ Fr
    img = f(VP)
    fv = f(v[None])[0]
    k0 = int(np.argmin(np.linalg.norm(coords, axis=1)))
    img[k0] = fv
    rho = 0.5 * float(np.linalg.norm(f((v + r * np.asarray(e, float))[None])[0] - fv))
    S = SampledSet.from_points(img)
    b, fit = beta_fit(S, fv, rho, n=n)
    hb = (2 * r / 10) if h_grid is None else h_grid
    G = ball_grid(v, 2 * r, hb)
    M = SampledMap(SampledSet.from_points(G), f(G))
    Ht = weak_qs_constant(M, cap=cap).Htilde
    tol = fit.tol / rho
    return IneqReport("bflat", b, 72 * N * Ht, 72 * N * Ht - b, (), {"rho": rho, "Htilde": Ht, "tol": tol})


def suite_bflat(params: dict, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    per = int(params.get("probes", 100))
    reports = []
    for alpha in params.get("alphas", [0.9, 0.95, 0.99]):
        f = radial_qc(float(alpha))
        for _ in range(per):
            N = int(rng.choice([2, 3]))
            n = int(rng.integers(1, N))
            Q, _ = np.linalg.qr(rng.standard_normal((N, N)))
            v = rng.uniform(-1, 1, N)
            r = float(10 ** rng.uniform(-1.3, -0.3))
            e = Q[:, 0]
            rep = bflat_probe(f, v, r, e, Q[:, :n].T, n_line=401 if n == 1 else 441)
            rep.extra.update({"map": f"radial_qc({alpha})"})
            reports.append(rep)
    for angle in params.get("snowflake_angles", [0.1, 0.2]):
        depth = int(params.get("snowflake_depth", 4))
        f = SnowflakeMap(float(angle), depth)
        for _ in range(per):
            v = np.array([rng.uniform(0.1, 0.9), 0.0])
            r = float(10 ** rng.uniform(-1.7, -0.8))
            rep = bflat_probe(f, v, r, np.array([1.0, 0.0]), np.array([[1.0, 0.0]]), n_line=801)
            rep.extra.update({"map": f"snowflake({angle},{depth})"})
            reports.append(rep)
    return SuiteResult("bflat", reports, len(reports), 0.0)


def similarity_rigidity(fmap: SampledMap) -> IneqReport:
    """Fitted similarity residual against 10 (H - 1), or 1e-10 for exact ones."""
    H = weak_qs_constant(fmap).H
    _, res = fit_similarity(fmap)
    delta = H - 1.0
    bound = max(10 * delta, 1e-10)
    return IneqReport("similarity", res, bound, bound - res, (), {"delta": delta})


def suite_similarity(params: dict, seed: int) -> SuiteResult:
    from .config import fixture_names, load_fixture, resolve_object

    reports = []
    names = params.get("fixtures") or [nm for nm in fixture_names() if load_fixture(nm)["type"] == "map"]
    for nm in names:
        M = resolve_object({"fixture": nm})
        if weak_qs_constant(M).H - 1 > float(params.get("max_delta", 1e-3)):
            continue
        rep = similarity_rigidity(M)
        rep.extra["fixture"] = nm
        reports.append(rep)
    if not reports:
        raise BadSpec("no near-similarity fixtures to check")
    return SuiteResult("similarity", reports, len(reports), 0.0)


SUITES = {
    "betas-sandwich": suite_betas_sandwich,
    "pre-estimates": suite_pre,
    "post-estimates": suite_post,
    "ab-bound": suite_ab,
    "holder": suite_holder,
    "inradius": suite_inradius,
    "whitney": suite_whitney,
    "bflat": suite_bflat,
    "similarity": suite_similarity,
}


def run_suite(name: str, params: dict = None, seed: int = 0) -> SuiteResult:
    if name not in SUITES:
        raise BadSpec(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](dict(params or {}), int(seed))
