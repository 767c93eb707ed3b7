"""Weak quasisymmetry constants, their Dini/Carleson functionals, similarity fits."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi
from typing import Optional

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from .errors import DegenerateSamples, NotInjective, ScaleBelowResolution
from .geometry import AffineMap, SampledSet

__all__ = [
    "SampledMap",
    "DistortionReport",
    "farthest_point_subsample",
    "weak_qs_constant",
    "weak_qs_brute",
    "htilde_in_ball",
    "dini_qs_integral",
    "carleson_qs_sum",
    "fit_similarity",
    "ball_volume",
]

MAX_TRIPLE_POINTS = 400


@dataclass(frozen=True)
class SampledMap:
    """A map known on finitely many points: ``image[i] = f(domain.points[i])``."""

    domain: SampledSet
    image: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        dom = self.domain if isinstance(self.domain, SampledSet) else SampledSet.from_points(self.domain)
        img = np.atleast_2d(np.asarray(self.image, float))
        if img.shape[0] != len(dom):
            raise ValueError("domain and image sizes differ")
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "image", img)

    @classmethod
    def from_function(cls, fn, points, meta=None, resolution=None) -> "SampledMap":
        P = np.atleast_2d(np.asarray(points, float))
        return cls(SampledSet.from_points(P, resolution=resolution), fn(P), dict(meta or {}))

    @property
    def points(self) -> np.ndarray:
        return self.domain.points

    def restrict(self, idx) -> "SampledMap":
        idx = np.asarray(idx, dtype=int)
        return SampledMap(SampledSet.from_points(self.points[idx], resolution=self.domain.resolution),
                          self.image[idx], dict(self.meta))


@dataclass
class DistortionReport:
    H: float
    Htilde: float
    witness: tuple  # (x, y, a) indices into the evaluated subset
    dini: float = float("nan")
    carleson: float = float("nan")
    n_points: int = 0
    subsampled: bool = False

    def to_record(self) -> dict:
        return {
            "H": float(self.H),
            "Htilde": float(self.Htilde),
            "witness": [int(i) for i in self.witness],
            "dini": float(self.dini),
            "carleson": float(self.carleson),
            "n_points": int(self.n_points),
            "subsampled": bool(self.subsampled),
        }


def farthest_point_subsample(P: np.ndarray, k: int) -> np.ndarray:
    """Indices of k points chosen greedily by farthest-point insertion.

    Starts from index 0; ties go to the lowest index.
    """
    P = np.atleast_2d(P)
    m = P.shape[0]
    if k >= m:
        return np.arange(m)
    chosen = [0]
    d = np.linalg.norm(P - P[0], axis=1)
    for _ in range(k - 1):
        j = int(np.argmax(d))
        chosen.append(j)
        d = np.minimum(d, np.linalg.norm(P - P[j], axis=1))
    return np.sort(np.array(chosen))


def _ratio_table(D: np.ndarray, I: np.ndarray, rel: float = 1e-12):
    """Best ratio for every (y, a): max |f(x)-f(a)| over |x-a| <= |y-a|, over |f(y)-f(a)|."""
    m = D.shape[0]
    order = np.argsort(D, axis=0, kind="stable")  # per column a
    Ds = np.take_along_axis(D, order, axis=0)
    Is = np.take_along_axis(I, order, axis=0)
    prefmax = np.maximum.accumulate(Is, axis=0)
    # the arg of the running max, for witnesses
    idx_rows = np.where(Is == prefmax, np.arange(m)[:, None], 0)
    prefarg = np.maximum.accumulate(idx_rows, axis=0)
    best_num = np.empty_like(D)
    best_x = np.empty(D.shape, dtype=int)
    for a in range(m):
        col = Ds[:, a]
        last = np.searchsorted(col, col * (1 + rel), side="right") - 1
        best_num[order[:, a], a] = prefmax[last, a]
        best_x[order[:, a], a] = order[prefarg[last, a], a]
    return best_num, best_x


def weak_qs_constant(f: SampledMap, X=None, cap: int = MAX_TRIPLE_POINTS) -> DistortionReport:
    """Weak quasisymmetry constant of the sampled map on the subset X.

    H is the largest |f(x)-f(a)| / |f(y)-f(a)| over sample triples with
    |x-a| <= |y-a|, floored at 1. Triples where both image distances vanish
    are skipped. For each (y, a) only the largest admissible numerator
    matters, so a sort per center replaces the cubic loop. Subsets larger
    than ``cap`` are reduced by farthest-point subsampling.
    """
    idx = np.arange(len(f.domain)) if X is None else np.asarray(X, dtype=int)
    P = f.points[idx]
    Y = f.image[idx]
    subsampled = False
    if len(idx) > cap:
        keep = farthest_point_subsample(P, cap)
        idx, P, Y = idx[keep], P[keep], Y[keep]
        subsampled = True
    m = len(idx)
    if m < 2:
        return DistortionReport(1.0, 0.0, (0, 0, 0), n_points=m, subsampled=subsampled)
    D = cdist(P, P)
    I = cdist(Y, Y)
    num, bx = _ratio_table(D, I)
    den = I
    zero_den = den == 0
    bad = zero_den & (num > 0)
    if np.any(bad):
        y, a = np.argwhere(bad)[0]
        raise NotInjective(f"image points {int(idx[y])} and {int(idx[a])} coincide")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(zero_den, 0.0, num / np.where(zero_den, 1.0, den))
    flat = int(np.argmax(ratio))
    y, a = divmod(flat, m)
    H = float(ratio[y, a])
    witness = (int(idx[bx[y, a]]), int(idx[y]), int(idx[a]))
    if H < 1.0:
        H = 1.0
    return DistortionReport(H, H - 1.0, witness, n_points=m, subsampled=subsampled)


def weak_qs_brute(P, Y) -> float:
    """Triple enumeration of the weak constant; the test oracle."""
    P = np.atleast_2d(np.asarray(P, float))
    Y = np.atleast_2d(np.asarray(Y, float))
    m = P.shape[0]
    H = 1.0
    for a in range(m):
        for x in range(m):
            for y in range(m):
                dxa = np.linalg.norm(P[x] - P[a])
                dya = np.linalg.norm(P[y] - P[a])
                if dxa > dya * (1 + 1e-12):
                    continue
                num = np.linalg.norm(Y[x] - Y[a])
                den = np.linalg.norm(Y[y] - Y[a])
                if den == 0:
                    if num > 0:
                        return float("inf")
                    continue
                H = max(H, num / den)
    return H


def htilde_in_ball(f: SampledMap, y, s: float, cap: int = MAX_TRIPLE_POINTS) -> float:
    idx = f.domain.ball_indices(y, s)
    return weak_qs_constant(f, idx, cap).Htilde


def _log_grid(rmin: float, rmax: float, per_decade: int) -> np.ndarray:
    m = max(2, int(np.ceil(np.log10(rmax / rmin) * per_decade)) + 1)
    return np.exp(np.linspace(np.log(rmin), np.log(rmax), m))


def _trapezoid_log(radii: np.ndarray, vals: np.ndarray) -> float:
    return float(np.sum((vals[1:] + vals[:-1]) / 2 * np.diff(np.log(radii))))


def dini_qs_integral(f: SampledMap, y, rmax: float, grid_per_decade: int = 8,
                     rmin: Optional[float] = None, return_grid: bool = False):
    """Log-grid trapezoid rule for the integral of Htilde(B(y, s))^2 ds/s."""
    res = f.domain.resolution
    if rmin is None:
        rmin = 2.0 * res
    if rmin <= res:
        raise ScaleBelowResolution(f"lower limit {rmin:.3e} not above resolution {res:.3e}")
    if rmax <= rmin:
        return (0.0, np.array([rmax]), np.array([0.0])) if return_grid else 0.0
    radii = _log_grid(rmin, rmax, grid_per_decade)
    vals = np.array([htilde_in_ball(f, y, s) ** 2 for s in radii])
    value = _trapezoid_log(radii, vals)
    return (value, radii, vals) if return_grid else value


def ball_volume(n: int, r: float) -> float:
    return pi ** (n / 2) / gamma(n / 2 + 1) * r**n


def carleson_qs_sum(f: SampledMap, x0, r0: float, center_grid, scale_grid, weights=None) -> float:
    """Ball average of the inner Dini integral of Htilde^2.

    ``center_grid`` are quadrature nodes in B(x0, r0) with ``weights``
    (default: equal weights summing to the ball volume). The inner integral
    runs over ``scale_grid`` by the log-trapezoid rule, so it is truncated
    below at min(scale_grid). The result is divided by the ball volume.
    """
    C = np.atleast_2d(np.asarray(center_grid, float))
    n = C.shape[1]
    vol = ball_volume(n, r0)
    if np.any(np.linalg.norm(C - np.asarray(x0, float), axis=1) > r0 * (1 + 1e-12)):
        raise ValueError("center grid leaves the ball")
    w = np.full(len(C), vol / len(C)) if weights is None else np.asarray(weights, float)
    radii = np.sort(np.asarray(scale_grid, float))
    if radii[0] <= f.domain.resolution:
        raise ScaleBelowResolution("scale grid reaches the sampling resolution")
    total = 0.0
    for c, wc in zip(C, w):
        vals = np.array([htilde_in_ball(f, c, s) ** 2 for s in radii])
        total += wc * _trapezoid_log(radii, vals)
    return total / vol


def _skew(v: np.ndarray, N: int) -> np.ndarray:
    A = np.zeros((N, N))
    A[np.triu_indices(N, 1)] = v
    return A - A.T


def _minimax_similarity(X: np.ndarray, Y: np.ndarray, lin0: np.ndarray, shift0: np.ndarray):
    """Polish a similarity toward the smallest sup residual relative to its scale.

    Epigraph form solved by SLSQP: the linear part is s0 e^a Q R0 with
    Q = exp(skew), the shift is free, and every sample must satisfy
    |Y - L X - b| <= t s0 e^a.
    """
    N = Y.shape[1]
    s0 = float(np.linalg.norm(lin0, 2))
    R0 = lin0 / s0
    k = N * (N - 1) // 2

    def parts(p):
        L = np.exp(p[0]) * s0 * expm(_skew(p[1:1 + k], N)) @ R0
        return L, p[1 + k:1 + k + N], p[-1]

    def cons(p):
        L, b, t = parts(p)
        R = Y - X @ L.T - b
        return (t * np.exp(p[0]) * s0) ** 2 - np.sum(R * R, axis=1)

    t0 = float(np.max(np.linalg.norm(Y - X @ lin0.T - shift0, axis=1))) / s0
    p0 = np.concatenate([[0.0], np.zeros(k), shift0, [t0 * 1.001]])
    grad = np.zeros(len(p0))
    grad[-1] = 1.0
    span = float(np.max(np.abs(Y))) + s0 * float(np.max(np.abs(X))) + 1.0
    bounds = [(-0.5, 0.5)] + [(-0.5, 0.5)] * k + [(-span, span)] * N + [(0.0, 2 * t0 + 1.0)]
    with np.errstate(all="ignore"):
        sol = minimize(lambda p: p[-1], p0, jac=lambda p: grad, method="SLSQP", bounds=bounds,
                       constraints=[{"type": "ineq", "fun": cons}],
                       options={"maxiter": 300, "ftol": 1e-16})
    if not np.all(np.isfinite(sol.x)):
        return None
    L, b, _ = parts(sol.x)
    return AffineMap(L, b)


def fit_similarity(f: SampledMap, x=None, r: Optional[float] = None,
                   refine: bool = True) -> tuple[AffineMap, float]:
    """Similarity (reflections allowed) close to f in the sup norm, and its residual.

    Starts from the least-squares fit: the rotation part is the polar factor
    of the cross-covariance, the scale matches the norms, the translation
    matches centroids. With ``refine`` the fit is then polished to reduce
    the normalized sup residual, and the better of the two is kept. The
    residual is sup |f(y) - S(y)| / (|S'| r) over the samples in B(x, r);
    without a ball all samples are used and r is their radius about the
    centroid.
    """
    if x is not None and r is not None:
        idx = f.domain.ball_indices(x, r)
    else:
        idx = np.arange(len(f.domain))
    X = f.points[idx]
    Y = f.image[idx]
    n = X.shape[1]
    if r is None:
        r = float(np.max(np.linalg.norm(X - X.mean(axis=0), axis=1)))
    if X.shape[0] < n + 1:
        raise DegenerateSamples("need at least n+1 samples")
    mx, my = X.mean(axis=0), Y.mean(axis=0)
    Xc, Yc = X - mx, Y - my
    sx = np.linalg.svd(Xc, compute_uv=False)
    if sx[-1] <= 1e-12 * max(sx[0], 1e-300) or Yc.shape[1] < n:
        raise DegenerateSamples("samples are affinely dependent")
    C = Yc.T @ Xc  # N x n
    U, sig, Vt = np.linalg.svd(C, full_matrices=False)
    R = U @ Vt  # isometric embedding, reflections allowed
    scale = float(np.sum(sig) / np.sum(Xc * Xc))
    if scale == 0:
        raise DegenerateSamples("fitted scale is zero")
    lin = scale * R
    S = AffineMap(lin, my - lin @ mx)

    def normalized(T: AffineMap) -> float:
        return float(np.max(np.linalg.norm(Y - T(X), axis=1))) / (T.norm() * r)

    res = normalized(S)
    if refine and res > 0:
        T = _minimax_similarity(X, Y, lin, S.shift)
        rt = normalized(T) if T is not None else np.inf
        if rt < res:
            S, res = T, rt
    return S, res
