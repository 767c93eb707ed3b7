"""Beta and theta numbers, their scale sums, and Reifenberg flatness checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import PointNotInSet, ScaleBelowResolution
from .geometry import Plane, PlaneFit, SampledSet, fit_plane_minimax, _null_rows, _orth_rows

__all__ = [
    "as_sampled_set",
    "beta",
    "beta_fit",
    "theta",
    "theta_detail",
    "ThetaResult",
    "dyadic_beta_sq_sum",
    "dyadic_tail_bound",
    "dini_beta_integral",
    "check_ratio",
    "reifenberg_check",
    "FlatnessProfile",
    "flatness_profile",
]

# 400 / log(10): constant comparing the dyadic sum with the Dini integral
CHECK_CONSTANT = 400.0 / np.log(10.0)


def as_sampled_set(E) -> SampledSet:
    if isinstance(E, SampledSet):
        return E
    return SampledSet.from_points(E)


def _default_n(E: SampledSet, n: Optional[int]) -> int:
    return E.dim - 1 if n is None else int(n)


def _require_member(E: SampledSet, x) -> np.ndarray:
    x = np.asarray(x, float).reshape(-1)
    d, _ = E.tree.query(x)
    if d > 1e-12 * max(1.0, float(np.linalg.norm(x))):
        raise PointNotInSet(f"point at distance {d:.3e} from the sample")
    return x


def beta_fit(E, x, r: float, centered: bool = False, n: Optional[int] = None,
             tol_fit: Optional[float] = None, seeds: Sequence[Plane] = ()) -> tuple[float, PlaneFit]:
    """Beta number together with the fitted plane."""
    E = as_sampled_set(E)
    if r <= 0:
        raise ValueError("radius must be positive")
    n = _default_n(E, n)
    x = _require_member(E, x)
    pts = E.ball(x, r)
    fit = fit_plane_minimax(pts, n, anchor=x if centered else None, tol_fit=tol_fit, seeds=seeds)
    return min(fit.supdist / r, 1.0), fit


def beta(E, x, r: float, centered: bool = False, n: Optional[int] = None,
         tol_fit: Optional[float] = None, seeds: Sequence[Plane] = ()) -> float:
    """One-sided flatness of E in the closed ball B(x, r), normalized by r.

    With ``centered`` the plane is constrained through x. ``n`` is the plane
    dimension and defaults to one less than the ambient dimension.
    """
    return beta_fit(E, x, r, centered, n, tol_fit, seeds)[0]


@dataclass(frozen=True)
class ThetaResult:
    value: float
    plane: Plane
    one_sided: float  # best one-sided value among evaluated planes, normalized
    h_V: float


def _disk_lattice(n: int, r: float, h: float) -> np.ndarray:
    K = int(np.floor(r / h + 1e-12))
    ticks = np.arange(-K, K + 1) * h
    grids = np.meshgrid(*([ticks] * n), indexing="ij")
    C = np.stack([g.ravel() for g in grids], axis=1)
    return C[np.sum(C**2, axis=1) <= r * r * (1 + 1e-12)]


def _bilateral(E: SampledSet, pts, x, F, r, h):
    one = float(np.max(Plane(x, F).distance(pts))) if len(pts) else 0.0
    Z = x + _disk_lattice(F.shape[0], r, h) @ F
    d, _ = E.tree.query(Z)
    return max(one, float(np.max(d))), one


def _perturb(F: np.ndarray, W: np.ndarray) -> np.ndarray:
    N = F.shape[1]
    Q = _null_rows(F, N)
    return _orth_rows(F + W.T @ Q)


def theta_detail(E, x, r: float, n: Optional[int] = None, h_V: Optional[float] = None,
                 seeds: Sequence[Plane] = (), tol_fit: Optional[float] = None) -> ThetaResult:
    """Bilateral flatness through x with the plane-side sup on a lattice.

    The plane-side supremum of dist(z, E) over V intersected with B(x, r) is
    taken over a lattice of spacing ``h_V`` in V (default r/64). Candidate
    planes: the centered minimax plane, caller seeds, and a sweep of tilted
    frames followed by a shrinking pattern search.
    """
    E = as_sampled_set(E)
    n = _default_n(E, n)
    x = _require_member(E, x)
    h = r / 64.0 if h_V is None else float(h_V)
    pts = E.ball(x, r)
    fit = fit_plane_minimax(pts, n, anchor=x, tol_fit=tol_fit)
    F0 = fit.plane.frame
    k = E.dim - n
    h_search = max(h, r / 16.0)

    forced = [F0] + [np.asarray(s.frame, float) for s in seeds if np.asarray(s.frame).shape == F0.shape]
    pool = {}

    def key(F):
        return tuple(np.round((F.T @ F).ravel(), 12))

    def coarse(F):
        kk = key(F)
        if kk not in pool:
            pool[kk] = (_bilateral(E, pts, x, F, r, h_search)[0], F)
        return pool[kk][0]

    for F in forced:
        coarse(F)
    basis = []
    for i in range(k):
        for j in range(n):
            W = np.zeros((k, n))
            W[i, j] = 1.0
            basis.append(W)
    for t in (0.02, 0.05, 0.1, 0.2, 0.4, 0.8):
        for W in basis:
            for sgn in (1.0, -1.0):
                coarse(_perturb(F0, sgn * t * W))
    best_val, best_F = min(pool.values(), key=lambda p: p[0])
    step = 0.02
    for _ in range(5):
        improved = True
        while improved:
            improved = False
            for W in basis:
                for sgn in (1.0, -1.0):
                    G = _perturb(best_F, sgn * step * W)
                    v = coarse(G)
                    if v < best_val - 1e-15:
                        best_val, best_F, improved = v, G, True
        step /= 2
    ranked = sorted(pool.values(), key=lambda p: p[0])[:4]
    finals = forced + [F for _, F in ranked]
    best = None
    one_best = np.inf
    for F in finals:
        val, one = _bilateral(E, pts, x, F, r, h)
        one_best = min(one_best, one)
        if best is None or val < best[0] - 1e-15:
            best = (val, F)
    value = min(best[0] / r, 1.0)
    return ThetaResult(value, Plane(x, best[1]), min(one_best / r, 1.0), h)


def theta(E, x, r: float, n: Optional[int] = None, h_V: Optional[float] = None,
          seeds: Sequence[Plane] = ()) -> float:
    return theta_detail(E, x, r, n, h_V, seeds).value


def _check_scale(E: SampledSet, r: float, what: str) -> None:
    if r <= E.resolution:
        raise ScaleBelowResolution(
            f"{what} {r:.3e} is not above the sampling resolution {E.resolution:.3e}")


def dyadic_beta_sq_sum(E, x, r0: float, base: float = 10.0, kmax: int = 3,
                       n: Optional[int] = None, tol_fit: Optional[float] = None) -> float:
    """Sum over k = 0..kmax of centered beta(x, base**-k * r0) squared."""
    E = as_sampled_set(E)
    _check_scale(E, r0 * base ** (-kmax), "smallest dyadic scale")
    total = 0.0
    for k in range(kmax + 1):
        total += beta(E, x, r0 * base ** (-k), centered=True, n=n, tol_fit=tol_fit) ** 2
    return total


def dyadic_tail_bound(E, r0: float, base: float, kmax: int) -> float:
    """Reported bound on the truncated tail of the dyadic sum."""
    E = as_sampled_set(E)
    return kmax * (E.resolution / (r0 * base ** (-kmax))) ** 2


def dini_beta_integral(E, x, rmax: float, grid_per_decade: int = 8, rmin: Optional[float] = None,
                       n: Optional[int] = None, centered: bool = False,
                       tol_fit: Optional[float] = None, return_grid: bool = False):
    """Trapezoid rule for the integral of beta(x, r)^2 dr/r over [rmin, rmax].

    The grid is uniform in log r with ``grid_per_decade`` points per decade;
    ``rmin`` defaults to twice the sampling resolution and scales below it
    are truncated.
    """
    E = as_sampled_set(E)
    if rmin is None:
        rmin = 2.0 * E.resolution
    _check_scale(E, rmin, "lower integration limit")
    if rmax <= rmin:
        return (0.0, np.array([rmax]), np.array([0.0])) if return_grid else 0.0
    decades = np.log10(rmax / rmin)
    m = max(2, int(np.ceil(decades * grid_per_decade)) + 1)
    radii = np.exp(np.linspace(np.log(rmin), np.log(rmax), m))
    vals = np.array([beta(E, x, r, centered=centered, n=n, tol_fit=tol_fit) ** 2 for r in radii])
    logs = np.log(radii)
    value = float(np.sum((vals[1:] + vals[:-1]) / 2 * np.diff(logs)))
    if return_grid:
        return value, radii, vals
    return value


def check_ratio(E, x, r0: float, kmax: int, grid_per_decade: int = 8,
                n: Optional[int] = None) -> tuple[float, float]:
    """Dyadic sum at base 10 and the constant times the Dini integral up to 10 r0."""
    E = as_sampled_set(E)
    lhs = dyadic_beta_sq_sum(E, x, r0, 10.0, kmax, n=n)
    rmin = r0 * 10.0 ** (-kmax)
    rhs = CHECK_CONSTANT * dini_beta_integral(E, x, 10 * r0, grid_per_decade, rmin=rmin, n=n)
    return lhs, rhs


def reifenberg_check(E, delta: float, R: float, centers, scale_grid,
                     n: Optional[int] = None, h_V: Optional[float] = None):
    """Whether theta <= delta at all tested centers and scales.

    Returns ``(passed, (x, r, theta))`` with the worst offender; the first
    one wins on ties.
    """
    E = as_sampled_set(E)
    worst = None
    for x in np.atleast_2d(np.asarray(centers, float)):
        for r in scale_grid:
            if r > R:
                raise ValueError("scale above R")
            t = theta(E, x, r, n=n, h_V=h_V)
            if worst is None or t > worst[2]:
                worst = (x.copy(), float(r), t)
    return bool(worst[2] <= delta), worst


@dataclass
class FlatnessProfile:
    center: np.ndarray
    scales: np.ndarray
    beta: np.ndarray
    beta_ctr: np.ndarray
    theta: np.ndarray
    dyadic_sq_sum: float
    dini_integral: float
    resolution: float = 0.0
    tol_fit: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "center": [float(v) for v in self.center],
            "scales": [float(v) for v in self.scales],
            "beta": [float(v) for v in self.beta],
            "beta_ctr": [float(v) for v in self.beta_ctr],
            "theta": [float(v) for v in self.theta],
            "dyadic_sq_sum": float(self.dyadic_sq_sum),
            "dini_integral": float(self.dini_integral),
            "resolution": float(self.resolution),
            "tol_fit": float(self.tol_fit),
        }

    def csv_rows(self) -> list[list]:
        rows = []
        for i, r in enumerate(self.scales):
            rows.append([*map(float, self.center), float(r), float(self.beta[i]),
                         float(self.beta_ctr[i]), float(self.theta[i])])
        return rows


def flatness_profile(E, x, scales, n: Optional[int] = None, h_V: Optional[float] = None,
                     grid_per_decade: int = 8, tol_fit: Optional[float] = None) -> FlatnessProfile:
    """Beta, centered beta and theta at descending scales around x.

    Planes found at a larger scale seed the fits at the next smaller one.
    The centered plane is also a competitor for the uncentered fit, and any
    better plane through x met while computing theta lowers the centered
    value, so the ordering of the three numbers reflects the optimizer.
    """
    E = as_sampled_set(E)
    n = _default_n(E, n)
    x = _require_member(E, x)
    scales = np.sort(np.asarray(scales, float))[::-1]
    if np.any(np.diff(scales) >= 0):
        raise ValueError("scales must be distinct")
    b, bc, th = [], [], []
    seeds: list = []
    diam = float(scales[0]) * 2
    tol = tol_fit if tol_fit is not None else 1e-6 * diam
    for r in scales:
        vc, fc = beta_fit(E, x, r, centered=True, n=n, tol_fit=tol, seeds=seeds)
        vu, fu = beta_fit(E, x, r, centered=False, n=n, tol_fit=tol, seeds=seeds + [fc.plane])
        vu = min(vu, vc)
        tr = theta_detail(E, x, r, n=n, h_V=h_V, seeds=seeds + [fc.plane, fu.plane.through(x)], tol_fit=tol)
        vc = min(vc, tr.one_sided)
        vu = min(vu, vc)
        b.append(vu)
        bc.append(vc)
        th.append(tr.value)
        seeds = [fc.plane, fu.plane, tr.plane]
    bc_arr = np.array(bc)
    dyadic = float(np.sum(bc_arr**2))
    logs = np.log(scales[::-1])
    bsq = np.array(b)[::-1] ** 2
    dini = float(np.sum((bsq[1:] + bsq[:-1]) / 2 * np.diff(logs))) if len(scales) > 1 else 0.0
    return FlatnessProfile(x, scales, np.array(b), bc_arr, np.array(th), dyadic, dini,
                           E.resolution, tol)
