"""Whitney decomposition, smooth partition of unity, extension of a map and its family.

The decomposition lives in a cube ``box``. Box corners that are multiples
of the cube sides (e.g. [-2^k, 2^k]^n) make the box cubes coincide with the
global dyadic grid. Cubes reaching ``min_level`` without clearing the set
are kept as collar cubes; points in the doubled collar cubes cannot be
evaluated faithfully and are flagged.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import (CollarViolation, DomainError, EpsilonTooLarge, ResolutionTooCoarse,
                     UnresolvableCube)
from .families import AffineFamily, check_almost_affine, check_compatible
from .geometry import SampledSet

__all__ = [
    "WhitneyDecomposition",
    "whitney_decompose",
    "PartitionOfUnity",
    "ExtensionEvaluator",
    "extend_map",
    "extend_family",
    "ExtensionReport",
    "measure_extension_constants",
    "cube_comparison_constants",
    "far_constants",
    "near_constants",
    "whitney_property_check",
]

EPS0_MAX = np.sqrt(2.0) - 1.0


@dataclass
class WhitneyDecomposition:
    E: SampledSet
    box_lo: np.ndarray
    box_side: float
    min_level: int
    corners: np.ndarray
    levels: np.ndarray
    collar_corners: np.ndarray
    collar_levels: np.ndarray
    w: np.ndarray = field(default=None)
    z_index: np.ndarray = field(default=None)

    @property
    def n(self) -> int:
        return self.box_lo.shape[0]

    @property
    def sides(self) -> np.ndarray:
        return self.box_side * 2.0 ** -self.levels

    @property
    def diams(self) -> np.ndarray:
        return self.sides * np.sqrt(self.n)

    @property
    def centers(self) -> np.ndarray:
        return self.corners + self.sides[:, None] / 2

    @property
    def collar_sides(self) -> np.ndarray:
        return self.box_side * 2.0 ** -self.collar_levels

    def __len__(self) -> int:
        return len(self.levels)

    def dist_to_E(self, X) -> np.ndarray:
        return self.E.tree.query(np.atleast_2d(X))[0]

    def in_box(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.all((X >= self.box_lo - 1e-12) & (X <= self.box_lo + self.box_side + 1e-12), axis=1)

    def in_collar(self, X) -> np.ndarray:
        """True where X lies in a doubled collar cube (closed)."""
        X = np.atleast_2d(X)
        out = np.zeros(len(X), bool)
        if len(self.collar_levels) == 0:
            return out
        sides = self.collar_sides
        centers = self.collar_corners + sides[:, None] / 2
        tree = cKDTree(centers)
        hits = tree.query_ball_point(X, r=float(sides.max()), p=np.inf)
        for k, cand in enumerate(hits):
            if cand:
                c = np.asarray(cand)
                out[k] = np.any(np.max(np.abs(X[k] - centers[c]), axis=1) <= sides[c] * (1 + 1e-12))
        return out

    def to_json_dict(self) -> dict:
        cubes = [{"corner": [float(v) for v in c], "level": int(l), "side": float(s),
                  "z_index": int(z), "w": [float(v) for v in wq]}
                 for c, l, s, z, wq in zip(self.corners, self.levels, self.sides, self.z_index, self.w)]
        collar = [{"corner": [float(v) for v in c], "level": int(l)}
                  for c, l in zip(self.collar_corners, self.collar_levels)]
        return {"n": self.n, "box_lo": [float(v) for v in self.box_lo], "box_side": float(self.box_side),
                "min_level": int(self.min_level), "cubes": cubes, "collar": collar}


def whitney_decompose(E, box, min_level: int) -> WhitneyDecomposition:
    """Maximal dyadic cubes Q of the box with 3Q disjoint from E.

    ``box`` is (lo, side). A cube is subdivided while its tripled cube meets
    E; at ``min_level`` such cubes become collar cubes.
    """
    E = E if isinstance(E, SampledSet) else SampledSet.from_points(E)
    lo, side = np.asarray(box[0], float).reshape(-1), float(box[1])
    n = E.dim
    if lo.shape[0] != n:
        raise DomainError("box dimension differs from the set")
    if np.any(E.points < lo - 1e-12) or np.any(E.points > lo + side + 1e-12):
        raise DomainError("E must lie in the box")
    if E.resolution >= side * 2.0 ** -min_level:
        raise ResolutionTooCoarse(
            f"sampling resolution {E.resolution:.3g} not below the finest cube side {side * 2.0 ** -min_level:.3g}")
    offsets = np.stack(np.meshgrid(*[[0.0, 1.0]] * n, indexing="ij"), axis=-1).reshape(-1, n)
    todo = lo[None].copy()
    acc_c, acc_l, col_c, col_l = [], [], [], []
    for level in range(min_level + 1):
        if len(todo) == 0:
            break
        s = side * 2.0**-level
        centers = todo + s / 2
        dinf = E.tree.query(centers, p=np.inf)[0]
        clear = dinf > 1.5 * s * (1 + 1e-12)
        acc_c.append(todo[clear])
        acc_l.append(np.full(clear.sum(), level))
        rest = todo[~clear]
        if level == min_level:
            col_c.append(rest)
            col_l.append(np.full(len(rest), level))
            break
        todo = (rest[:, None, :] + offsets[None] * (s / 2)).reshape(-1, n)
    corners = np.vstack(acc_c) if acc_c else np.zeros((0, n))
    levels = np.concatenate(acc_l).astype(int) if acc_l else np.zeros(0, int)
    order = np.lexsort(tuple(corners[:, ::-1].T) + (levels,))
    corners, levels = corners[order], levels[order]
    W = WhitneyDecomposition(E, lo, side, min_level, corners, levels,
                             np.vstack(col_c) if col_c else np.zeros((0, n)),
                             np.concatenate(col_l).astype(int) if col_l else np.zeros(0, int))
    W.w, W.z_index = _closest_points(W)
    return W


def _closest_points(W: WhitneyDecomposition):
    """w_Q: point of Q closest to E; z_Q: the E sample realizing it (lowest index on ties)."""
    P = W.E.points
    sides = W.sides
    centers = W.centers
    w = np.empty_like(centers)
    z = np.empty(len(centers), int)
    dc = W.E.tree.query(centers)[0]
    for k in range(len(centers)):
        rad = dc[k] + sides[k] * np.sqrt(W.n) / 2
        cand = np.sort(np.asarray(W.E.tree.query_ball_point(centers[k], rad * (1 + 1e-9)), int))
        lo = W.corners[k]
        clip = np.clip(P[cand], lo, lo + sides[k])
        d = np.linalg.norm(P[cand] - clip, axis=1)
        dmin = d.min()
        j = int(np.nonzero(d <= dmin * (1 + 1e-12))[0][0])
        w[k] = clip[j]
        # nearest E point to w_Q, ties to the lowest index
        dw = np.linalg.norm(P[cand] - w[k], axis=1)
        z[k] = int(cand[np.nonzero(dw <= dw.min() * (1 + 1e-12))[0][0]])
    return w, z


def whitney_property_check(W: WhitneyDecomposition, points_per_axis: int = 3) -> dict:
    """Worst ratios for properties (b)-(e) at test grids of each Q and 2Q.

    Returned values are normalized so that each property holds iff its
    entry is <= 1 (for the lower bounds, the reciprocal ratio is used).
    ``overlap`` is the largest number of doubled cubes containing a test point.
    """
    n = W.n
    g = np.stack(np.meshgrid(*[np.linspace(0, 1, points_per_axis)] * n, indexing="ij"), axis=-1).reshape(-1, n)
    sides, diams, centers = W.sides, W.diams, W.centers
    sq = np.sqrt(n)
    out = {"b_lower": 0.0, "b_upper": 0.0, "c_lower": 0.0, "c_upper": 0.0, "d": 0.0, "overlap": 0,
           "a_gap": 0.0}
    P = W.corners[:, None, :] + g[None] * sides[:, None, None]
    d = W.dist_to_E(P.reshape(-1, n)).reshape(len(W), -1)
    out["b_lower"] = float(np.max((diams / sq)[:, None] / d))
    out["b_upper"] = float(np.max(d / (4 * diams)[:, None]))
    P2 = centers[:, None, :] + (2 * g[None] - 1) * sides[:, None, None]
    inside = W.in_box(P2.reshape(-1, n)).reshape(len(W), -1)
    d2 = W.dist_to_E(P2.reshape(-1, n)).reshape(len(W), -1)
    d2m = np.where(inside, d2, np.nan)
    out["c_lower"] = float(np.nanmax((diams / (2 * sq))[:, None] / d2m))
    out["c_upper"] = float(np.nanmax(d2m / (4.5 * diams)[:, None]))
    # neighbours: doubled cubes overlapping
    tree = cKDTree(centers)
    smax = float(sides.max())
    for k in range(len(W)):
        cand = np.asarray(tree.query_ball_point(centers[k], r=sides[k] + smax, p=np.inf), int)
        touch = cand[np.max(np.abs(centers[cand] - centers[k]), axis=1) < sides[k] + sides[cand]]
        out["d"] = max(out["d"], float(np.max(diams[touch]) / (9 * sq * diams[k])))
    pts = P2.reshape(-1, n)[inside.reshape(-1)]
    cnt = _count_covering(W, pts)
    out["overlap"] = int(cnt.max()) if len(cnt) else 0
    # (a): every test point of the box outside E and the collar is covered by some Q
    probe = W.box_lo + np.random.default_rng(0).uniform(0, W.box_side, (2000, n))
    probe = probe[~W.in_collar(probe)]
    cover = _count_covering(W, probe, factor=1.0)
    out["a_gap"] = float(np.mean(cover == 0)) if len(probe) else 0.0
    return out


def _level_trees(W: WhitneyDecomposition):
    trees = {}
    for lev in np.unique(W.levels):
        idx = np.nonzero(W.levels == lev)[0]
        trees[int(lev)] = (idx, cKDTree(W.centers[idx]))
    return trees


def _count_covering(W, pts, factor: float = 2.0):
    trees = _level_trees(W)
    cnt = np.zeros(len(pts), int)
    for lev, (idx, tree) in trees.items():
        s = W.box_side * 2.0**-lev
        hits = tree.query_ball_point(pts, r=factor * s / 2 * (1 + 1e-12), p=np.inf)
        cnt += np.array([len(h) for h in hits])
    return cnt


def _bump(t):
    """exp(-1/(1-t^2)) on (-1, 1) with first and second derivatives."""
    t = np.asarray(t, float)
    b = np.zeros_like(t)
    db = np.zeros_like(t)
    d2b = np.zeros_like(t)
    m = np.abs(t) < 1
    tm = t[m]
    u = 1.0 - tm**2
    e = np.exp(-1.0 / u)
    b[m] = e
    g1 = -2.0 * tm / u**2  # derivative of -1/u
    db[m] = e * g1
    g2 = -2.0 / u**2 - 8.0 * tm**2 / u**3
    d2b[m] = e * (g1**2 + g2)
    return b, db, d2b


class PartitionOfUnity:
    """phi_Q = b_Q / sum_R b_R with tensor bumps b_Q supported on 2Q."""

    def __init__(self, W: WhitneyDecomposition):
        self.W = W
        self._trees = _level_trees(W)
        self._sides = W.sides
        self._centers = W.centers

    def active(self, x) -> np.ndarray:
        """Cubes whose open doubled cube contains x."""
        out = []
        for lev, (idx, tree) in self._trees.items():
            s = self.W.box_side * 2.0**-lev
            hit = tree.query_ball_point(x, r=s, p=np.inf)
            if hit:
                h = idx[np.asarray(hit, int)]
                h = h[np.max(np.abs(x - self._centers[h]), axis=1) < s]
                out.append(h)
        return np.sort(np.concatenate(out)) if out else np.zeros(0, int)

    def raw(self, x, idx):
        """Unnormalized bumps with gradients and Hessians at x for cubes idx."""
        n = self.W.n
        s = self._sides[idx][:, None]
        t = (x - self._centers[idx]) / s
        b, db, d2b = _bump(t)  # (k, n)
        val = np.prod(b, axis=1)
        grad = np.empty((len(idx), n))
        hess = np.empty((len(idx), n, n))
        for i in range(n):
            others = np.prod(np.delete(b, i, axis=1), axis=1)
            grad[:, i] = db[:, i] * others / s[:, 0]
            for j in range(n):
                if i == j:
                    hess[:, i, i] = d2b[:, i] * others / s[:, 0] ** 2
                elif j > i:
                    rest = np.prod(np.delete(b, [i, j], axis=1), axis=1)
                    hess[:, i, j] = hess[:, j, i] = db[:, i] * db[:, j] * rest / s[:, 0] ** 2
        return val, grad, hess

    def evaluate(self, x, order: int = 2):
        """(idx, phi, Dphi, D2phi) at a single point x."""
        x = np.asarray(x, float)
        idx = self.active(x)
        if idx.size == 0:
            raise DomainError("point not covered by any doubled cube")
        v, g, h = self.raw(x, idx)
        S = v.sum()
        if S <= 0:
            raise DomainError("partition sum vanishes")
        Sg = g.sum(axis=0)
        Sh = h.sum(axis=0)
        phi = v / S
        if order == 0:
            return idx, phi, None, None
        dphi = g / S - v[:, None] * Sg[None] / S**2
        if order == 1:
            return idx, phi, dphi, None
        d2 = (h / S
              - (np.einsum("ki,j->kij", g, Sg) + np.einsum("i,kj->kij", Sg, g)) / S**2
              - v[:, None, None] * Sh[None] / S**2
              + 2 * v[:, None, None] * np.outer(Sg, Sg)[None] / S**3)
        return idx, phi, dphi, d2


class ExtensionEvaluator:
    """F = f on E and sum phi_Q A_Q off E, with analytic DF and D^2F."""

    def __init__(self, E: SampledSet, values, family: AffineFamily, W: WhitneyDecomposition,
                 eps: float, cube_maps: list):
        self.E, self.values, self.family, self.W, self.eps = E, np.atleast_2d(values), family, W, eps
        self.pou = PartitionOfUnity(W)
        self.AQ_lin = np.array([A.linear for A in cube_maps])
        self.AQ_shift = np.array([A.shift for A in cube_maps])
        self._collar_cache = {}

    @property
    def n(self) -> int:
        return self.W.n

    @property
    def N(self) -> int:
        return self.values.shape[1]

    def d(self, X) -> np.ndarray:
        return self.E.tree.query(np.atleast_2d(X))[0]

    def nearest_index(self, x) -> int:
        return int(self.E.nearest(x)[1][0])

    def classify(self, X) -> np.ndarray:
        """0 = off collar, 1 = sample of E, 2 = collar."""
        X = np.atleast_2d(np.asarray(X, float))
        if not np.all(self.W.in_box(X)):
            raise DomainError("query outside the box")
        dist = self.d(X)
        on_E = dist <= 1e-12 * np.maximum(1.0, np.linalg.norm(X, axis=1))
        col = self.W.in_collar(X)
        return np.where(on_E, 1, np.where(col, 2, 0))

    def _one(self, x, order):
        idx, phi, dphi, d2 = self.pou.evaluate(x, order)
        Ax = np.einsum("kan,n->ka", self.AQ_lin[idx], x) + self.AQ_shift[idx]
        F = phi @ Ax
        if order == 0:
            return F, None, None
        DF = np.einsum("ka,kj->aj", Ax, dphi) + np.einsum("k,kaj->aj", phi, self.AQ_lin[idx])
        if order == 1:
            return F, DF, None
        D2 = (np.einsum("ka,kij->aij", Ax, d2)
              + np.einsum("kai,kj->aij", self.AQ_lin[idx], dphi)
              + np.einsum("kaj,ki->aij", self.AQ_lin[idx], dphi))
        return F, DF, D2

    def evaluate(self, X, order: int = 0):
        """Values (and derivatives up to ``order``) plus a flag per point.

        Flags follow ``classify``. Points of E return f; collar points return
        f at the nearest sample of E and NaN derivatives.
        """
        X = np.atleast_2d(np.asarray(X, float))
        flags = self.classify(X)
        F = np.empty((len(X), self.N))
        DF = np.full((len(X), self.N, self.n), np.nan) if order >= 1 else None
        D2 = np.full((len(X), self.N, self.n, self.n), np.nan) if order >= 2 else None
        for k, x in enumerate(X):
            if flags[k] == 0:
                v, g, h = self._one(x, order)
                F[k] = v
                if order >= 1:
                    DF[k] = g
                if order >= 2:
                    D2[k] = h
            else:
                F[k] = self.values[self.nearest_index(x)]
        if order == 0:
            return F, flags
        if order == 1:
            return F, DF, flags
        return F, DF, D2, flags

    def __call__(self, X) -> np.ndarray:
        return self.evaluate(X)[0]

    def probe_csv(self, X) -> str:
        X = np.atleast_2d(np.asarray(X, float))
        F, flags = self.evaluate(X)
        d = self.d(X)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(self.n)] + [f"F{i}" for i in range(self.N)] + ["d", "flag"])
        names = {0: "ok", 1: "on_set", 2: "collar"}
        for k in range(len(X)):
            w.writerow([f"{v:.17g}" for v in X[k]] + [f"{v:.17g}" for v in F[k]]
                       + [f"{d[k]:.17g}", names[int(flags[k])]])
        return buf.getvalue()


def _sample_index_map(E: SampledSet, family: AffineFamily) -> np.ndarray:
    """For each sample of E, the family base index at the same coordinates (-1 if absent)."""
    tree = cKDTree(family.base_points)
    dist, idx = tree.query(E.points)
    tol = 1e-12 * np.maximum(1.0, np.linalg.norm(E.points, axis=1))
    return np.where(dist <= tol, idx, -1)


def extend_map(E: SampledSet, values, family: AffineFamily, W: WhitneyDecomposition,
               eps: Optional[float] = None, eps0: float = 0.4) -> ExtensionEvaluator:
    """Whitney extension of f from E using A_Q = A_{z_Q, r_Q}.

    ``eps`` defaults to the measured almost-affine constant of (f, E, family).
    Scales r_Q are matched to the nearest grid scale; cubes farther than a
    factor sqrt(2) from every grid scale, or whose z_Q is not a base point,
    raise UnresolvableCube.
    """
    if not eps0 < EPS0_MAX:
        raise EpsilonTooLarge("eps0 must be below sqrt(2) - 1")
    if eps is None:
        eps = check_almost_affine(values, E, family)
    if eps > eps0:
        raise EpsilonTooLarge(f"measured eps {eps:.3g} exceeds eps0 {eps0:.3g}")
    bmap = _sample_index_map(E, family)
    maps = []
    lg = np.log(family.scales)
    for k in range(len(W)):
        i = bmap[W.z_index[k]]
        if i < 0:
            raise UnresolvableCube(f"cube {k}: z_Q is not a base point of the family")
        r = W.diams[k]
        j = family.scale_index(r)
        if abs(lg[j] - np.log(r)) > 0.5 * np.log(2) + 1e-12:
            raise UnresolvableCube(f"cube {k}: r_Q = {r:.3g} outside the scale grid")
        maps.append(family.map(i, j))
    return ExtensionEvaluator(E, values, family, W, float(eps), maps)


def extend_family(ev: ExtensionEvaluator, X, scales=None) -> AffineFamily:
    """The extended family over query points X at the family's grid scales.

    Points of E copy their rows; elsewhere r < d(x)/2 gives the Taylor map of
    F at x and r >= d(x)/2 gives A_{x', r}. Taylor maps need off-collar points.
    """
    X = np.atleast_2d(np.asarray(X, float))
    fam = ev.family
    scales = fam.scales if scales is None else np.asarray(scales, float)
    bmap = _sample_index_map(ev.E, fam)
    flags = ev.classify(X)
    dist = ev.d(X)
    lin = np.empty((len(X), len(scales), ev.N, ev.n))
    sh = np.empty((len(X), len(scales), ev.N))
    for k, x in enumerate(X):
        xp = ev.nearest_index(x)
        i = bmap[xp]
        if i < 0:
            raise UnresolvableCube("nearest point of E is not a base point of the family")
        small = scales < dist[k] / 2
        if flags[k] != 1 and np.any(small):
            if flags[k] == 2:
                raise CollarViolation(f"query {k} lies in the collar but needs a Taylor map")
            Fx, DFx, _ = ev._one(x, 1)
        for j, r in enumerate(scales):
            if flags[k] != 1 and small[j]:
                lin[k, j] = DFx
                sh[k, j] = Fx - DFx @ x
            else:
                jj = fam.scale_index(r)
                lin[k, j] = fam.linear[i, jj]
                sh[k, j] = fam.shift[i, jj]
    return AffineFamily(X, scales, lin, sh, fam.eps_nominal, {"extended": True})


@dataclass
class ExtensionReport:
    eps: float
    C_compat: float
    C_aa: float
    H_F: float
    H_family: float
    H_extended: float
    dini_beta_max: float
    C_E: float
    kappa: float
    on_set_exact: bool
    extra: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = {k: (float(v) if isinstance(v, (float, np.floating)) else v)
               for k, v in self.__dict__.items() if k != "extra"}
        rec.update({k: float(v) for k, v in sorted(self.extra.items())})
        return rec


def _max_lambda_ratio(F: AffineFamily) -> float:
    sv = np.linalg.svd(F.linear, compute_uv=False)
    return float(np.max(sv[..., 0] / sv[..., -1]))


def measure_extension_constants(ev: ExtensionEvaluator, probes, image_grid, beta_centers,
                               qs_points=None, dini_rmax: Optional[float] = None,
                               grid_per_decade: int = 4, c_e_radius: Optional[float] = None,
                               H: Optional[float] = None, c_e_map=None) -> ExtensionReport:
    """Measured constants of the extension against eps.

    ``probes``: off-collar points where the extended family is built (E is
    added). ``image_grid``: points of R^n whose images sample F(R^n) for the
    beta integrals. ``beta_centers``: points of E used as y. ``qs_points``:
    where H_F is measured (defaults to probes). ``c_e_map`` is a sampled map
    whose Htilde Dini integrals at the beta centers give C_E (default: f on E).
    """
    from .flatness import dini_beta_integral
    from .quasisymmetry import SampledMap, dini_qs_integral, weak_qs_constant

    eps = ev.eps
    probes = np.atleast_2d(np.asarray(probes, float))
    probes = probes[ev.classify(probes) == 0]
    X = np.vstack([ev.E.points, probes])
    Aplus = extend_family(ev, X)
    FX = np.vstack([ev.values, ev(probes)])
    on_set = bool(np.array_equal(ev(ev.E.points), ev.values))
    Xs = SampledSet.from_points(X, resolution=ev.E.resolution)
    compat, _ = check_compatible(Aplus)
    aa = check_almost_affine(FX, Xs, Aplus)
    qs_pts = probes if qs_points is None else np.atleast_2d(qs_points)
    qs_pts = qs_pts[ev.classify(qs_pts) != 2]
    fmap = SampledMap(SampledSet.from_points(qs_pts), ev(qs_pts))
    H_F = weak_qs_constant(fmap).H
    grid = np.atleast_2d(np.asarray(image_grid, float))
    grid = grid[ev.classify(grid) == 0]
    img = np.vstack([ev.values, ev(grid)])
    S = SampledSet.from_points(img)
    diam_img = float(np.max(np.ptp(img, axis=0)))
    rmax = 0.25 * diam_img if dini_rmax is None else dini_rmax
    n = ev.n
    dini = 0.0
    for y in np.atleast_2d(beta_centers):
        k = ev.nearest_index(y)
        dini = max(dini, dini_beta_integral(S, ev.values[k], rmax, grid_per_decade=grid_per_decade, n=n))
    fE = SampledMap(ev.E, ev.values) if c_e_map is None else c_e_map
    rE = (c_e_radius if c_e_radius is not None else rmax)
    C_E = 0.0
    for y in np.atleast_2d(beta_centers):
        k = ev.nearest_index(y)
        if rE > 2 * fE.domain.resolution:
            C_E = max(C_E, dini_qs_integral(fE, ev.E.points[k], rE, grid_per_decade=grid_per_decade))
    extra = {"compat": compat, "aa": aa, "rmax": rmax}
    if H is not None:
        extra["H"] = H
    return ExtensionReport(eps, compat / eps, aa / eps, H_F, _max_lambda_ratio(ev.family),
                           _max_lambda_ratio(Aplus), dini, C_E, dini / (C_E + eps**2), on_set, extra)


def cube_comparison_constants(ev: ExtensionEvaluator, points_per_axis: int = 3) -> dict:
    """Largest |A'_Q - A'_R| / (eps |A'_Q|) and |A_Q - A_R| / (eps |A'_Q| diam Q)
    over touching cubes, the second sampled on grids of 2Q and 2R."""
    W = ev.W
    n = W.n
    g = np.stack(np.meshgrid(*[np.linspace(-1, 1, points_per_axis)] * n, indexing="ij"), axis=-1).reshape(-1, n)
    sides, centers, diams = W.sides, W.centers, W.diams
    norms = np.linalg.norm(ev.AQ_lin, ord=2, axis=(1, 2))
    tree = cKDTree(centers)
    smax = float(sides.max())
    c_lin = c_val = 0.0
    for q in range(len(W)):
        cand = np.asarray(tree.query_ball_point(centers[q], r=sides[q] + smax, p=np.inf), int)
        touch = cand[np.max(np.abs(centers[cand] - centers[q]), axis=1) <= sides[q] + sides[cand]]
        for r in touch:
            if r == q:
                continue
            dl = np.linalg.norm(ev.AQ_lin[q] - ev.AQ_lin[r], 2)
            c_lin = max(c_lin, dl / (ev.eps * norms[q]))
            pts = np.vstack([centers[q] + g * sides[q], centers[r] + g * sides[r]])
            diff = pts @ (ev.AQ_lin[q] - ev.AQ_lin[r]).T + (ev.AQ_shift[q] - ev.AQ_shift[r])
            c_val = max(c_val, float(np.max(np.linalg.norm(diff, axis=1))) / (ev.eps * norms[q] * diams[q]))
    return {"lin": c_lin, "val": c_val}


def far_constants(ev: ExtensionEvaluator, centers, radii, m: int = 7) -> dict:
    """Constants for scales r >= d(x)/2 on grids of B(x, r) and B(x, 2r).

    ``val``: sup |F - A_{x', r}| / (eps |A'_{x', r}| r) over B(x, r).
    ``deriv``: sup |DF(y) - A'_{x', r}| / (eps |A'_{x', r}| T_eps(r / d(y)))
    over B(x, 2r) minus E, with T evaluated at max(1, r/d(y)).
    """
    from .families import T_eps
    from .generators import cube_grid

    n = ev.n
    fam = ev.family
    bmap = _sample_index_map(ev.E, fam)
    unit = cube_grid(n, -1, 1, m)
    unit = unit[np.linalg.norm(unit, axis=1) <= 1 + 1e-12]
    c_val = c_der = 0.0
    for x in np.atleast_2d(centers):
        dx = float(ev.d(x)[0])
        i = bmap[ev.nearest_index(x)]
        for r in radii:
            if r < dx / 2:
                continue
            j = fam.scale_index(r)
            A = fam.map(i, j)
            nA = A.norm()
            Y = x + r * unit
            Y = Y[ev.W.in_box(Y)]
            F, fl = ev.evaluate(Y)
            ok = fl != 2
            if np.any(ok):
                c_val = max(c_val, float(np.max(np.linalg.norm(F[ok] - A(Y[ok]), axis=1))) / (ev.eps * nA * r))
            Y2 = x + 2 * r * unit
            Y2 = Y2[ev.W.in_box(Y2)]
            F2, DF2, fl2 = ev.evaluate(Y2, order=1)
            for y, D, f in zip(Y2, DF2, fl2):
                if f != 0:
                    continue
                t = max(1.0, r / float(ev.d(y)[0]))
                c_der = max(c_der, np.linalg.norm(D - A.linear, 2) / (ev.eps * nA * T_eps(ev.eps, t)))
    return {"val": c_val, "deriv": c_der}


def near_constants(ev: ExtensionEvaluator, points, m: int = 5) -> dict:
    """Constants for r < d(x)/2 (Taylor maps of F), on grids of B(x, r).

    ``val``: sup |F(y) - A_{x,r}(y)| / (eps (r/d(x)) |DF(x)| r).
    ``lip``: sup |DF(y) - DF(x)| / (eps (r/d(x)) min(|DF(x)|, |DF(y)|)).
    Both are evaluated at r = d(x)/4 and d(x)/8 for off-collar points x.
    """
    from .generators import cube_grid

    n = ev.n
    unit = cube_grid(n, -1, 1, m)
    unit = unit[np.linalg.norm(unit, axis=1) <= 1 + 1e-12]
    c_val = c_lip = 0.0
    X = np.atleast_2d(points)
    X = X[ev.classify(X) == 0]
    for x in X:
        dx = float(ev.d(x)[0])
        Fx, DFx, _ = ev._one(x, 1)
        nx = np.linalg.norm(DFx, 2)
        for r in (dx / 4, dx / 8):
            Y = x + r * unit
            keep = ev.W.in_box(Y)
            Y = Y[keep]
            F, DF, fl = ev.evaluate(Y, order=1)
            ok = fl == 0
            if not np.any(ok):
                continue
            taylor = Fx + (Y[ok] - x) @ DFx.T
            c_val = max(c_val, float(np.max(np.linalg.norm(F[ok] - taylor, axis=1)))
                        / (ev.eps * (r / dx) * nx * r))
            for D in DF[ok]:
                mn = min(nx, np.linalg.norm(D, 2))
                c_lip = max(c_lip, np.linalg.norm(D - DFx, 2) / (ev.eps * (r / dx) * mn))
    return {"val": c_val, "lip": c_lip}
