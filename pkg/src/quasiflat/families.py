"""Families of affine maps indexed by base points and a ratio-2 scale grid.

Compatibility and almost-affine measurements, the T/tau/Psi quantities,
stabilization and adaptation of families, and literal verifiers for the
estimates that compatible families and almost affine maps satisfy.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import factorial, log
from typing import Callable, Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import cdist

from .errors import (DomainError, EpsilonTooLarge, HypothesisViolated, MissingSamples,
                     UnsupportedDimension, ZeroLinearPart)
from .geometry import AffineMap, SampledSet, affine_from_samples, singular_values

__all__ = [
    "AffineFamily",
    "IneqReport",
    "T_eps",
    "tau",
    "check_compatible",
    "approximation_eps",
    "check_almost_affine",
    "psi",
    "ab_constant",
    "adapt_constant",
    "stabilize_large_scales",
    "adapt_small_scales",
    "random_compatible_family",
    "verify_inequality",
    "pre_estimate_scan",
    "post_bound",
    "holder_exponent_data",
]

HOLDER_EPS_MAX = np.sqrt(2.0) - 1.0


@dataclass(frozen=True)
class AffineFamily:
    """Maps A_{x,r} for x in ``base_points`` and r in ``scales``.

    ``linear`` has shape (B, S, N, n) and ``shift`` (B, S, N).
    """

    base_points: np.ndarray
    scales: np.ndarray
    linear: np.ndarray
    shift: np.ndarray
    eps_nominal: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        bp = np.atleast_2d(np.asarray(self.base_points, float))
        sc = np.asarray(self.scales, float).reshape(-1)
        lin = np.asarray(self.linear, float)
        sh = np.asarray(self.shift, float)
        if lin.shape[:2] != (bp.shape[0], sc.shape[0]) or lin.shape[3] != bp.shape[1]:
            raise ValueError("linear parts do not match base points and scales")
        if sh.shape != lin.shape[:3]:
            raise ValueError("shifts do not match linear parts")
        if np.any(sc <= 0) or np.any(np.diff(sc) <= 0):
            raise ValueError("scales must be positive and increasing")
        object.__setattr__(self, "base_points", bp)
        object.__setattr__(self, "scales", sc)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "shift", sh)

    @property
    def n(self) -> int:
        return self.linear.shape[3]

    @property
    def N(self) -> int:
        return self.linear.shape[2]

    @property
    def ratio(self) -> float:
        if len(self.scales) < 2:
            return 2.0
        return float(self.scales[1] / self.scales[0])

    def map(self, i: int, j: int) -> AffineMap:
        return AffineMap(self.linear[i, j], self.shift[i, j])

    def apply(self, i: int, j: int, z) -> np.ndarray:
        return np.asarray(z, float) @ self.linear[i, j].T + self.shift[i, j]

    def norms(self) -> np.ndarray:
        """Operator norms, shape (B, S)."""
        return np.linalg.norm(self.linear, ord=2, axis=(2, 3))

    def scale_index(self, r: float) -> int:
        """Nearest grid scale in the logarithmic sense; ties go to the lower index."""
        lg = np.log(self.scales)
        d = np.abs(lg - np.log(r))
        return int(np.argmin(d + 1e-15 * np.arange(len(d))))

    def base_index(self, x) -> int:
        d = np.linalg.norm(self.base_points - np.asarray(x, float), axis=1)
        return int(np.argmin(d))

    def with_maps(self, linear, shift, **kw) -> "AffineFamily":
        return AffineFamily(kw.get("base_points", self.base_points), kw.get("scales", self.scales),
                            linear, shift, kw.get("eps_nominal", self.eps_nominal), dict(self.meta))

    @classmethod
    def from_callable(cls, fn: Callable, base_points, scales, eps_nominal: float = 0.0,
                      meta: Optional[dict] = None) -> "AffineFamily":
        """Build from ``fn(x, r) -> AffineMap``."""
        bp = np.atleast_2d(np.asarray(base_points, float))
        sc = np.asarray(scales, float)
        lin, sh = [], []
        for x in bp:
            row_l, row_s = [], []
            for r in sc:
                A = fn(x, r)
                row_l.append(A.linear)
                row_s.append(A.shift)
            lin.append(row_l)
            sh.append(row_s)
        return cls(bp, sc, np.array(lin), np.array(sh), eps_nominal, dict(meta or {}))

    def records(self) -> list[dict]:
        out = []
        for i, x in enumerate(self.base_points):
            for j, r in enumerate(self.scales):
                out.append({"base": [float(v) for v in x], "scale": float(r),
                            "matrix": [[float(v) for v in row] for row in self.linear[i, j]],
                            "shift": [float(v) for v in self.shift[i, j]]})
        return out

    def to_json_dict(self) -> dict:
        return {"n": self.n, "N": self.N, "eps_nominal": float(self.eps_nominal), "maps": self.records()}

    @classmethod
    def from_json_dict(cls, d: dict) -> "AffineFamily":
        bases, scales = [], []
        for rec in d["maps"]:
            b = tuple(rec["base"])
            if b not in bases:
                bases.append(b)
            if rec["scale"] not in scales:
                scales.append(rec["scale"])
        scales = sorted(scales)
        n, N = int(d["n"]), int(d["N"])
        lin = np.zeros((len(bases), len(scales), N, n))
        sh = np.zeros((len(bases), len(scales), N))
        for rec in d["maps"]:
            i = bases.index(tuple(rec["base"]))
            j = scales.index(rec["scale"])
            lin[i, j] = np.asarray(rec["matrix"], float).reshape(N, n)
            sh[i, j] = rec["shift"]
        return cls(np.array(bases), np.array(scales), lin, sh, float(d.get("eps_nominal", 0.0)))


@dataclass
class IneqReport:
    kind: str
    lhs: float
    rhs: float
    slack: float
    witness: tuple = ()
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        rec = {"kind": self.kind, "lhs": float(self.lhs), "rhs": float(self.rhs),
               "slack": float(self.slack), "witness": [_jsonable(w) for w in self.witness]}
        if self.extra:
            rec["extra"] = {k: _jsonable(v) for k, v in sorted(self.extra.items())}
        return json.dumps(rec, sort_keys=True)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(u) for u in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def T_eps(eps: float, t: float) -> float:
    """(2 log2 t + 1) * t ** (2 log2(1 + eps)) for t >= 1."""
    if t < 1:
        raise DomainError("T_eps is defined for t >= 1")
    if eps <= 0:
        raise DomainError("T_eps needs eps > 0")
    return float((2 * np.log2(t) + 1) * t ** (2 * np.log2(1 + eps)))


def tau(x, r: float, y, s: float) -> float:
    """max(r, s, 2|x - y|) / min(r, s)."""
    if r <= 0 or s <= 0:
        raise DomainError("scales must be positive")
    d = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
    return max(r, s, 2 * d) / min(r, s)


def check_compatible(F: AffineFamily) -> tuple[float, tuple]:
    """Largest |A'_{x,r} - A'_{y,s}| / min norm over qualifying pairs.

    Pairs qualify when |x - y| <= max(r, s) and 1/2 <= r/s <= 2. Returns the
    value and the witness (i, j, p, q); the first maximum in index order wins.
    """
    norms = F.norms()
    if np.any(norms == 0):
        i, j = np.argwhere(norms == 0)[0]
        raise ZeroLinearPart(f"map at base {int(i)}, scale {int(j)} has zero linear part")
    D = cdist(F.base_points, F.base_points)
    best, wit = 0.0, (0, 0, 0, 0)
    S = len(F.scales)
    for j in range(S):
        for q in range(j, S):
            if F.scales[q] / F.scales[j] > 2 + 1e-12:
                break
            rmax = max(F.scales[j], F.scales[q])
            mask = D <= rmax * (1 + 1e-12)
            diff = F.linear[:, j][:, None] - F.linear[:, q][None, :]
            dn = np.linalg.norm(diff, ord=2, axis=(2, 3))
            mn = np.minimum(norms[:, j][:, None], norms[:, q][None, :])
            ratio = np.where(mask, dn / mn, -1.0)
            k = int(np.argmax(ratio))
            if ratio.flat[k] > best:
                i, p = divmod(k, ratio.shape[1])
                best, wit = float(ratio.flat[k]), (i, j, p, q)
    return best, wit


def approximation_eps(values, E: SampledSet, F: AffineFamily, base_index=None) -> tuple[float, tuple]:
    """Largest |f(z) - A_{x,r}(z)| / (|A'_{x,r}| r) over z in E within B(x, r).

    ``values[k]`` is f at ``E.points[k]``. ``base_index[i]`` gives the sample
    index of base point i (found by coordinates when omitted).
    """
    vals = np.atleast_2d(np.asarray(values, float))
    norms = F.norms()
    if np.any(norms == 0):
        raise ZeroLinearPart("family contains a zero linear part")
    best, wit = 0.0, (0, 0, 0)
    for i, x in enumerate(F.base_points):
        for j, r in enumerate(F.scales):
            idx = E.ball_indices(x, r)
            if idx.size == 0:
                continue
            err = np.linalg.norm(vals[idx] - F.apply(i, j, E.points[idx]), axis=1)
            k = int(np.argmax(err))
            val = float(err[k] / (norms[i, j] * r))
            if val > best:
                best, wit = val, (i, j, int(idx[k]))
    return best, wit


def check_almost_affine(f, E: SampledSet, F: AffineFamily, detail: bool = False):
    """Measured epsilon of (f, E, F): max of approximation and compatibility.

    ``f`` is a SampledMap on E, an array of values on E, or a callable.
    """
    if callable(f) and not hasattr(f, "image"):
        values = f(E.points)
    elif hasattr(f, "image"):
        values = f.image
    else:
        values = f
    e_aa, w_aa = approximation_eps(values, E, F)
    e_c, w_c = check_compatible(F)
    eps = max(e_aa, e_c)
    if detail:
        return eps, {"approx": e_aa, "approx_witness": w_aa, "compat": e_c, "compat_witness": w_c}
    return eps


def psi(V, vol_tol: float = 1e-12) -> float:
    """(diam V)^n / volume of the convex hull, infinite for flat hulls."""
    V = np.atleast_2d(np.asarray(V, float))
    m, n = V.shape
    if m < 2:
        raise ValueError("need at least two points")
    diam = float(np.max(cdist(V, V)))
    if diam == 0:
        return float("inf")
    if m == n + 1:
        vol = abs(np.linalg.det((V[1:] - V[0]).T)) / factorial(n)
    elif n == 1:
        vol = float(V.max() - V.min())
    elif n <= 3:
        try:
            vol = ConvexHull(V).volume
        except (QhullError, ValueError):
            vol = 0.0
    else:
        raise UnsupportedDimension("hull volume only for n <= 3 unless V is a simplex")
    if vol <= vol_tol * diam**n:
        return float("inf")
    return float(diam**n / vol)


def ab_constant(n: int) -> float:
    """4 n^((n+1)/2) / n!"""
    return 4.0 * n ** ((n + 1) / 2) / factorial(n)


def adapt_constant(n: int) -> float:
    """18 (1 + 2 (2n)^((n+1)/2))."""
    return 18.0 * (1.0 + 2.0 * (2.0 * n) ** ((n + 1) / 2))


def stabilize_large_scales(F: AffineFamily, x_star: int = 0) -> AffineFamily:
    """Freeze all maps above the diameter of the base set.

    The threshold is D, the smallest grid scale >= diam of the base points;
    for r > D every map becomes the one at (x_star, D).
    """
    diam = float(np.max(cdist(F.base_points, F.base_points))) if len(F.base_points) > 1 else 0.0
    above = np.nonzero(F.scales >= diam * (1 - 1e-12))[0]
    if above.size == 0:
        return F
    jD = int(above[0])
    lin = F.linear.copy()
    sh = F.shift.copy()
    lin[:, jD + 1:] = F.linear[x_star, jD]
    sh[:, jD + 1:] = F.shift[x_star, jD]
    out = F.with_maps(lin, sh)
    out.meta.update({"stable_scale": float(F.scales[jD]), "x_star": int(x_star)})
    return out


def adapt_small_scales(f, F: AffineFamily, x0, r0: float, E3: Optional[SampledSet] = None,
                       eps: Optional[float] = None) -> AffineFamily:
    """Replace small-scale maps by interpolants of f at x + r e_i.

    ``f`` is a callable on R^n or a SampledMap that contains the nodes. The
    input family must be almost affine over B(x0, 3 r0); its epsilon is
    measured on ``E3`` (samples of that ball) unless given. Base points of
    the output are those of F inside B(x0, r0); maps at scales r <= 2 r0
    interpolate f, larger scales are copied.
    """
    x0 = np.asarray(x0, float)
    n = F.n
    P = adapt_constant(n)
    if eps is None:
        if E3 is None:
            raise ValueError("need samples of B(x0, 3 r0) or an explicit eps")
        eps = check_almost_affine(f, E3, F)
    if P * eps > 1:
        raise EpsilonTooLarge(f"P(n) * eps = {P * eps:.3g} > 1")
    keep = np.nonzero(np.linalg.norm(F.base_points - x0, axis=1) <= r0 * (1 + 1e-12))[0]
    lin = F.linear[keep].copy()
    sh = F.shift[keep].copy()
    evaluate = _node_evaluator(f)
    I = np.eye(n)
    for a, i in enumerate(keep):
        x = F.base_points[i]
        for j, r in enumerate(F.scales):
            if r > 2 * r0 * (1 + 1e-12):
                continue
            nodes = np.vstack([x, x + r * I])
            A = affine_from_samples(nodes, evaluate(nodes))
            lin[a, j] = A.linear
            sh[a, j] = A.shift
    out = AffineFamily(F.base_points[keep], F.scales, lin, sh, P * eps, dict(F.meta))
    out.meta.update({"adapted_r0": float(r0), "input_eps": float(eps)})
    return out


def _node_evaluator(f):
    if hasattr(f, "image"):
        pts, img = f.points, f.image

        def ev(nodes):
            out = []
            for z in nodes:
                d = np.linalg.norm(pts - z, axis=1)
                k = int(np.argmin(d))
                if d[k] > 1e-12 * max(1.0, float(np.linalg.norm(z))):
                    raise MissingSamples(f"f is not sampled at {z}")
                out.append(img[k])
            return np.array(out)
        return ev
    if callable(f):
        return lambda nodes: np.atleast_2d(f(np.atleast_2d(nodes)))
    raise MissingSamples("f must be callable or sampled")


def _smooth_field(rng, N: int, n: int, M: int, dim_out: tuple):
    """Random sum of cosines with unit total amplitude and frequencies <= 1/4."""
    B = rng.standard_normal((M,) + dim_out)
    norms = np.array([np.linalg.norm(b, 2) if b.ndim == 2 else np.linalg.norm(b) for b in B])
    B = B / norms.sum() if norms.sum() > 0 else B
    om = rng.standard_normal((M, n))
    om = om / np.linalg.norm(om, axis=1, keepdims=True) * rng.uniform(0, 0.25, (M, 1))
    ph = rng.uniform(0, 2 * np.pi, M)
    return B, om, ph


def random_compatible_family(n: int, N: int, eps: float, base_points, r_min: float,
                             n_scales: int, seed: int = 0, M: int = 3) -> AffineFamily:
    """Random family whose linear parts drift slowly across scales and points.

    Starting from a similarity at the top scale, each finer level multiplies
    the linear part on the left by (I + eps/4 U(x)), where U is a random
    cosine field with operator norm <= 1 and Lipschitz constant 1/(4 r).
    Compatibility follows from the triangle inequality; the measured value
    is stored as ``eps_nominal`` (with the target in ``meta``); the
    perturbation amplitude is rescaled until it lands in [0.8, 1] x target.
    """
    rng = np.random.default_rng(seed)
    bp = np.atleast_2d(np.asarray(base_points, float))
    scales = r_min * 2.0 ** np.arange(n_scales)
    Q, _ = np.linalg.qr(rng.standard_normal((N, N)))
    L0 = rng.uniform(0.5, 2.0) * Q[:, :n]
    fields = [_smooth_field(rng, N, n, M, (N, N)) for _ in range(n_scales)]
    shift0 = rng.standard_normal(N)
    damp = 1.0
    for _ in range(20):
        lin = np.empty((len(bp), n_scales, N, n))
        for i, x in enumerate(bp):
            L = L0.copy()
            for j in range(n_scales - 1, -1, -1):
                B, om, ph = fields[j]
                U = np.tensordot(np.cos(om @ x / scales[j] + ph), B, axes=1)
                L = (np.eye(N) + damp * eps / 4 * U) @ L
                lin[i, j] = L
        # A_{x,r}(x) = shift0 + L0 x for every r
        sh = shift0 + (bp @ L0.T)[:, None, :] - np.einsum("ijab,ib->ija", lin, bp)
        F = AffineFamily(bp, scales, lin, sh, eps, {"target_eps": eps, "seed": seed})
        measured, _ = check_compatible(F)
        if 0.8 * eps <= measured <= eps:
            break
        damp *= 0.9 * eps / measured
    return F.with_maps(lin, sh, eps_nominal=max(measured, 1e-300))


# ---------------------------------------------------------------------------
# literal verifiers


def _report(kind, lhs, rhs, witness=(), **extra) -> IneqReport:
    return IneqReport(kind, float(lhs), float(rhs), float(rhs - lhs), tuple(witness), extra)


def post_bound(eps, T, Ta, mn, zx, zy, r, s, a):
    """Explicit right side for |A_{x,r}(z) - A_{y,s}(z)| with r <= s.

    Obtained by passing through A_{y,as}: the almost-affine error at x and
    y, the compatible-family estimates with tau and with a, and the
    distances |z - x|, |z - y|. ``mn`` is the smaller of the two norms.
    """
    one_T = 1 + T * eps
    one_Ta = 1 + Ta * eps
    term1 = (T + Ta * one_T) * zx + one_T * r + one_Ta * one_T * a * s
    term2 = one_T * (Ta * zy + one_Ta * a * s + s)
    return eps * mn * (term1 + term2)


def holder_exponent_data(eps: float) -> tuple[float, float]:
    """(theta, exponent) with theta = 1 - 2 log2(1 + eps), exponent = (1 - eps) theta."""
    th = 1.0 - 2.0 * np.log2(1.0 + eps)
    return th, (1.0 - eps) * th


def pre_estimate_scan(F: AffineFamily, eps: Optional[float] = None) -> tuple:
    """Both compatible-family estimates over every ordered pair of maps.

    Returns (worst pre_a report, worst pre_b report, number of pairs); the
    worst is the smallest slack, first in index order.
    """
    eps = float(F.eps_nominal if eps is None else eps)
    B, S = F.linear.shape[:2]
    L = F.linear.reshape(B * S, F.N, F.n)
    nrm = np.linalg.norm(L, ord=2, axis=(1, 2))
    X = np.repeat(F.base_points, S, axis=0)
    R = np.tile(F.scales, B)
    d = cdist(X, X)
    rmin = np.minimum(R[:, None], R[None, :])
    t = np.maximum(np.maximum(R[:, None], R[None, :]), 2 * d) / rmin
    T = (2 * np.log2(t) + 1) * t ** (2 * np.log2(1 + eps))
    mn = np.minimum(nrm[:, None], nrm[None, :])
    mx = np.maximum(nrm[:, None], nrm[None, :])
    M = B * S
    diff = np.empty((M, M))
    for a in range(M):
        diff[a] = np.linalg.norm(L[a][None] - L, ord=2, axis=(1, 2))
    out = []
    for kind, lhs, rhs in (("pre_a", diff, T * eps * mn), ("pre_b", mx, (1 + T * eps) * mn)):
        slack = rhs - lhs
        k = int(np.argmin(slack))
        a, b = divmod(k, M)
        wit = (a // S, a % S, b // S, b % S)
        out.append(_report(kind, lhs.flat[k], rhs.flat[k], wit, tau=float(t.flat[k])))
    return out[0], out[1], M * M


def verify_inequality(kind: str, **kw) -> IneqReport:
    """Evaluate both sides of one estimate on one instance.

    kinds and inputs:

    compat      family, i, j, p, q, eps
    pre_a/pre_b family, i, j, p, q, eps
    post_a      family, i, j, p, q, z, a, eps   (|x-y|, dist(z,{x,y}) <= a max(r,s))
    post_b      same, and additionally tau <= a
    AB_bound    V, A, B, z  [eps]
    holder      x, y, fx, fy, x0, r0, norm0, eps
    inradius    eps, H, t, A (AffineMap), x, r, image_points, image_center, theta_value,
                diam_image, radial  (values measured on samples by the caller)

    Preconditions are checked and HypothesisViolated names the one that failed.
    """
    if kind in ("compat", "pre_a", "pre_b"):
        F, i, j, p, q = kw["family"], kw["i"], kw["j"], kw["p"], kw["q"]
        eps = float(kw.get("eps", F.eps_nominal))
        if eps <= 0:
            raise HypothesisViolated("eps must be positive")
        x, y = F.base_points[i], F.base_points[p]
        r, s = F.scales[j], F.scales[q]
        La, Lb = F.linear[i, j], F.linear[p, q]
        na, nb = np.linalg.norm(La, 2), np.linalg.norm(Lb, 2)
        mn, mx = min(na, nb), max(na, nb)
        dn = np.linalg.norm(La - Lb, 2)
        if kind == "compat":
            if not (np.linalg.norm(x - y) <= max(r, s) * (1 + 1e-12) and 0.5 <= r / s <= 2):
                raise HypothesisViolated("pair does not qualify for compatibility")
            return _report(kind, dn, eps * mn, (i, j, p, q))
        t = tau(x, r, y, s)
        T = T_eps(eps, t)
        if kind == "pre_a":
            return _report(kind, dn, T * eps * mn, (i, j, p, q), tau=t)
        return _report(kind, mx, (1 + T * eps) * mn, (i, j, p, q), tau=t)

    if kind in ("post_a", "post_b"):
        F, i, j, p, q = kw["family"], kw["i"], kw["j"], kw["p"], kw["q"]
        z = np.asarray(kw["z"], float)
        a = float(kw["a"])
        eps = float(kw["eps"])
        x, y = F.base_points[i], F.base_points[p]
        r, s = F.scales[j], F.scales[q]
        if eps > a:
            raise HypothesisViolated("eps <= a")
        big = max(r, s)
        if np.linalg.norm(x - y) > a * big * (1 + 1e-12):
            raise HypothesisViolated("|x - y| <= a max(r, s)")
        if min(np.linalg.norm(z - x), np.linalg.norm(z - y)) > a * big * (1 + 1e-12):
            raise HypothesisViolated("dist(z, {x, y}) <= a max(r, s)")
        t = tau(x, r, y, s)
        if kind == "post_b" and t > a * (1 + 1e-12):
            raise HypothesisViolated("tau <= a")
        # order so that the first map has the smaller scale
        if r > s:
            i, j, p, q = p, q, i, j
            x, y, r, s = y, x, s, r
        lhs = np.linalg.norm(F.apply(i, j, z) - F.apply(p, q, z))
        mn = min(np.linalg.norm(F.linear[i, j], 2), np.linalg.norm(F.linear[p, q], 2))
        T = T_eps(eps, t)
        Ta = T_eps(eps, a)
        rhs = post_bound(eps, T, Ta, mn, np.linalg.norm(z - x), np.linalg.norm(z - y), r, s, a)
        return _report(kind, lhs, rhs, (i, j, p, q), tau=t,
                       constant=lhs / (T * eps * mn * s) if mn > 0 else 0.0)

    if kind == "AB_bound":
        V = np.atleast_2d(np.asarray(kw["V"], float))
        A, B = kw["A"], kw["B"]
        z = np.asarray(kw["z"], float)
        n = V.shape[1]
        if V.shape[0] != n + 1:
            raise HypothesisViolated("V must have n+1 points")
        diam = float(np.max(cdist(V, V)))
        gaps = np.linalg.norm(A(V) - B(V), axis=1)
        eps = float(kw.get("eps", np.max(gaps) / diam))
        if np.max(gaps) > eps * diam * (1 + 1e-12):
            raise HypothesisViolated("|A(v) - B(v)| <= eps diam V on V")
        P = psi(V)
        dist = float(np.min(np.linalg.norm(V - z, axis=1)))
        lhs = float(np.linalg.norm(A(z) - B(z)))
        if np.isinf(P):
            return _report(kind, lhs, float("inf"), (), psi=P)
        rhs = eps * (diam + ab_constant(n) * P * dist)
        return _report(kind, lhs, rhs, (), psi=P, dist=dist)

    if kind == "holder":
        eps = float(kw["eps"])
        if not 0 < eps < HOLDER_EPS_MAX:
            raise HypothesisViolated("0 < eps < sqrt(2) - 1")
        x, y = np.asarray(kw["x"], float), np.asarray(kw["y"], float)
        x0, r0 = np.asarray(kw["x0"], float), float(kw["r0"])
        if max(np.linalg.norm(x - x0), np.linalg.norm(y - x0)) > r0 / 2 * (1 + 1e-12):
            raise HypothesisViolated("x, y in B(x0, r0/2)")
        th, alpha = holder_exponent_data(eps)
        lhs = np.linalg.norm(np.asarray(kw["fx"], float) - np.asarray(kw["fy"], float))
        rhs = 4.0 / (th * log(2.0)) * (np.linalg.norm(x - y) / r0) ** alpha * float(kw["norm0"]) * r0
        return _report(kind, lhs, rhs, (), exponent=alpha)

    if kind == "inradius":
        eps, H, t = float(kw["eps"]), float(kw["H"]), float(kw["t"])
        A = kw["A"]
        r = float(kw["r"])
        sv = singular_values(A)
        if sv[-1] > H * sv[0] * (1 + 1e-12):
            raise HypothesisViolated("lambda_n <= H lambda_1")
        if H * (t + 2 * eps) > 1 + 1e-12:
            raise HypothesisViolated("H (t + 2 eps) <= 1")
        nA = sv[-1]
        diam = float(kw["diam_image"])
        radial = np.asarray(kw["radial"], float)  # |f(x) - f(y)| for y on the sphere
        th = float(kw["theta_value"])
        # each conclusion as (lhs, rhs); the report keeps the tightest
        pairs = [
            ("diam_lower", nA * r, diam),
            ("diam_upper", diam, 3 * nA * r),
            ("radial_lower", t * nA * r, float(np.min(radial))),
            ("radial_upper", float(np.max(radial)), 2 * nA * r),
            ("theta", th, 6 * eps * H),
        ]
        worst = min(pairs, key=lambda p: (p[2] - p[1]) / max(abs(p[2]), 1e-300))
        rep = _report(kind, worst[1], worst[2], (worst[0],))
        rep.extra["parts"] = {name: [lhs, rhs] for name, lhs, rhs in pairs}
        return rep

    raise ValueError(f"unknown inequality kind {kind!r}")
