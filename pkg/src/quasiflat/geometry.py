"""Affine maps, planes, sampled sets and minimax plane fitting."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import DegenerateSimplex

__all__ = [
    "AffineMap",
    "Plane",
    "PlaneFit",
    "SampledSet",
    "singular_values",
    "affine_from_samples",
    "chebyshev_ball",
    "fit_plane_minimax",
    "line_fit_angle_grid",
]


@dataclass(frozen=True)
class AffineMap:
    """Affine map x -> linear @ x + shift from R^n to R^N."""

    linear: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        lin = np.atleast_2d(np.asarray(self.linear, dtype=float))
        sh = np.asarray(self.shift, dtype=float).reshape(-1)
        if lin.shape[0] != sh.shape[0]:
            raise ValueError("linear part and shift have mismatched target dimension")
        if lin.shape[0] < lin.shape[1]:
            raise ValueError("need N >= n")
        if not np.all(np.isfinite(lin)):
            raise ValueError("linear part must be finite")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "shift", sh)

    @property
    def n(self) -> int:
        return self.linear.shape[1]

    @property
    def N(self) -> int:
        return self.linear.shape[0]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.linear.T + self.shift

    def norm(self) -> float:
        """Operator norm of the linear part."""
        return float(np.linalg.norm(self.linear, 2))

    @classmethod
    def identity(cls, n: int) -> "AffineMap":
        return cls(np.eye(n), np.zeros(n))


def singular_values(A) -> np.ndarray:
    """Singular values of the linear part, ascending (lambda_1 <= ... <= lambda_n)."""
    lin = A.linear if isinstance(A, AffineMap) else np.atleast_2d(np.asarray(A, float))
    s = np.linalg.svd(lin, compute_uv=False)
    return np.sort(s)


def affine_from_samples(nodes, values, rel_tol: float = 1e-12) -> AffineMap:
    """The unique affine map sending the n+1 ``nodes`` to ``values``.

    Raises DegenerateSimplex if the nodes are affinely dependent (simplex
    volume below ``rel_tol * diam**n``).
    """
    X = np.atleast_2d(np.asarray(nodes, dtype=float))
    Y = np.atleast_2d(np.asarray(values, dtype=float))
    n = X.shape[1]
    if X.shape[0] != n + 1 or Y.shape[0] != n + 1:
        raise ValueError("need exactly n+1 nodes and values")
    D = (X[1:] - X[0]).T  # n x n
    diam = max(np.max(np.linalg.norm(X[:, None] - X[None], axis=-1)), np.finfo(float).tiny)
    if abs(np.linalg.det(D)) <= rel_tol * diam**n:
        raise DegenerateSimplex("interpolation nodes are affinely dependent")
    M = (Y[1:] - Y[0]).T  # N x n
    lin = np.linalg.solve(D.T, M.T).T
    shift = Y[0] - lin @ X[0]
    return AffineMap(lin, shift)


@dataclass(frozen=True)
class Plane:
    """Affine n-plane through ``base`` spanned by the orthonormal rows of ``frame``."""

    base: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, float).reshape(-1))
        fr = np.asarray(self.frame, float)
        if fr.ndim == 1:
            fr = fr[None, :]
        object.__setattr__(self, "frame", fr.reshape(-1, self.base.shape[0]))

    @property
    def n(self) -> int:
        return self.frame.shape[0]

    @property
    def N(self) -> int:
        return self.base.shape[0]

    def project(self, points) -> np.ndarray:
        P = np.atleast_2d(np.asarray(points, float)) - self.base
        return self.base + (P @ self.frame.T) @ self.frame

    def distance(self, points) -> np.ndarray:
        P = np.atleast_2d(np.asarray(points, float)) - self.base
        resid = P - (P @ self.frame.T) @ self.frame
        return np.linalg.norm(resid, axis=1)

    def through(self, point) -> "Plane":
        return Plane(np.asarray(point, float), self.frame)


@dataclass(frozen=True)
class SampledSet:
    """Finite sample of a closed set, with an axis-aligned bounding cube.

    ``box`` is ``(lower_corner, side)``. ``resolution`` is the sampling
    gap; when not supplied it is estimated as the largest nearest-neighbour
    distance.
    """

    points: np.ndarray
    box: tuple
    resolution: Optional[float] = None
    _tree: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, float))
        if P.shape[0] == 0:
            raise ValueError("SampledSet must be nonempty")
        if np.isnan(P).any():
            raise ValueError("NaN coordinates")
        lo = np.asarray(self.box[0], float).reshape(-1)
        side = float(self.box[1])
        if lo.shape[0] != P.shape[1]:
            raise ValueError("box dimension mismatch")
        slack = 1e-12 * max(side, 1.0)
        if np.any(P < lo - slack) or np.any(P > lo + side + slack):
            raise ValueError("points outside box")
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "box", (lo, side))
        if self.resolution is None:
            object.__setattr__(self, "resolution", _nn_gap(P))
        object.__setattr__(self, "_tree", cKDTree(P))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def tree(self) -> cKDTree:
        return self._tree

    @classmethod
    def from_points(cls, points, margin: float = 0.0, resolution: Optional[float] = None):
        P = np.atleast_2d(np.asarray(points, float))
        lo = P.min(axis=0)
        side = float(np.max(P.max(axis=0) - lo))
        pad = margin * max(side, 1e-300) if margin else 0.0
        side = side + 2 * pad
        if side == 0.0:
            side = 1.0
        return cls(P, (lo - pad, side), resolution)

    def ball(self, x, r) -> np.ndarray:
        """Points of the set in the closed ball B(x, r)."""
        idx = self._tree.query_ball_point(np.asarray(x, float), r * (1 + 1e-12))
        idx = np.sort(np.asarray(idx, dtype=int))
        return self.points[idx]

    def ball_indices(self, x, r) -> np.ndarray:
        idx = self._tree.query_ball_point(np.asarray(x, float), r * (1 + 1e-12))
        return np.sort(np.asarray(idx, dtype=int))

    def nearest(self, q):
        """Distances and indices of nearest samples; ties go to the lowest index."""
        q = np.atleast_2d(np.asarray(q, float))
        d, i = self._tree.query(q, k=1)
        # a kd-tree may break exact ties arbitrarily, recheck among equals
        d2, i2 = self._tree.query(q, k=min(4, len(self)))
        d2 = np.atleast_2d(d2)
        i2 = np.atleast_2d(i2)
        out = np.array(i, dtype=int).reshape(-1)
        dd = np.asarray(d, float).reshape(-1)
        for row in range(q.shape[0]):
            ties = i2[row][d2[row] <= dd[row] * (1 + 1e-14) + 1e-300]
            if ties.size > 1:
                out[row] = int(ties.min())
        return dd, out


def _nn_gap(P: np.ndarray) -> float:
    if P.shape[0] < 2:
        return 0.0
    d, _ = cKDTree(P).query(P, k=2)
    return float(np.max(d[:, 1]))


# ---------------------------------------------------------------------------
# minimal enclosing ball


def _ball_from_boundary(R: np.ndarray):
    c0 = R[0]
    if R.shape[0] == 1:
        return c0.copy(), 0.0
    A = R[1:] - c0
    G = 2.0 * A @ A.T
    rhs = np.sum(A * A, axis=1)
    lam = np.linalg.lstsq(G, rhs, rcond=None)[0]
    c = c0 + lam @ A
    return c, float(np.max(np.sum((R - c) ** 2, axis=1)))


def _welzl(P: np.ndarray, R: list, tol: float):
    k = P.shape[1]
    if R:
        c, r2 = _ball_from_boundary(np.array(R))
    else:
        c, r2 = P[0].copy(), 0.0
    if len(R) == k + 1:
        return c, r2
    start = 0 if R else 1
    i = start
    m = P.shape[0]
    while i < m:
        d2 = np.sum((P[i:] - c) ** 2, axis=1)
        bad = np.nonzero(d2 > r2 + tol)[0]
        if bad.size == 0:
            break
        j = i + int(bad[0])
        c, r2 = _welzl(P[:j], R + [P[j]], tol)
        i = j + 1
    return c, r2


def chebyshev_ball(points) -> tuple[np.ndarray, float]:
    """Center and radius of the smallest ball containing ``points``."""
    P = np.atleast_2d(np.asarray(points, float))
    if P.shape[1] == 1:
        lo, hi = P.min(), P.max()
        return np.array([(lo + hi) / 2]), float((hi - lo) / 2)
    if P.shape[0] == 1:
        return P[0].copy(), 0.0
    if P.shape[1] == 2 and P.shape[0] > 8:
        try:
            P = P[ConvexHull(P).vertices]
        except QhullError:
            pass
    scale = float(np.max(np.abs(P - P.mean(axis=0)))) + 1e-300
    order = np.random.default_rng(12345).permutation(P.shape[0])
    c, r2 = _welzl(P[order], [], 1e-13 * scale**2)
    r = float(np.sqrt(np.max(np.sum((P - c) ** 2, axis=1))))
    return c, r


# ---------------------------------------------------------------------------
# minimax plane fitting


@dataclass(frozen=True)
class PlaneFit:
    """Result of a minimax fit; unpacks as ``(plane, supdist)``."""

    plane: Plane
    supdist: float
    degenerate: bool = False
    tol: float = 0.0

    def __iter__(self) -> Iterator:
        yield self.plane
        yield self.supdist


def _null_rows(F: np.ndarray, N: int) -> np.ndarray:
    """Orthonormal rows spanning the orthogonal complement of the rows of F."""
    if F.shape[0] == 0:
        return np.eye(N)
    _, _, Vt = np.linalg.svd(F, full_matrices=True)
    return Vt[F.shape[0]:]


def _orth_rows(M: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(M.T)
    return q.T


def _canonical_frame(F: np.ndarray) -> np.ndarray:
    """Basis of span(F) obtained by Gram-Schmidt on projected coordinate axes."""
    n, N = F.shape
    Pj = F.T @ F
    basis = []
    for k in range(N):
        v = Pj[:, k].copy()
        for b in basis:
            v -= (b @ v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            basis.append(v / nv)
        if len(basis) == n:
            break
    return np.array(basis)


def _alignment_key(F: np.ndarray) -> tuple:
    Pj = F.T @ F
    return tuple(np.round(np.diag(Pj), 9))


def _objective(Q: np.ndarray, Z: np.ndarray, centered: bool):
    """Sup distance of rows of Z to the best plane with normal space Q."""
    proj = Z @ Q.T
    if centered:
        return float(np.sqrt(np.max(np.sum(proj**2, axis=1)))), np.zeros(Q.shape[0])
    c, r = chebyshev_ball(proj)
    return r, c


def _surrogate(Q: np.ndarray, Z: np.ndarray, centered: bool) -> float:
    proj = Z @ Q.T
    if centered:
        return float(np.max(np.sum(proj**2, axis=1)))
    if Q.shape[0] == 1:
        return float(np.ptp(proj))
    mid = (proj.max(axis=0) + proj.min(axis=0)) / 2
    return float(np.max(np.sum((proj - mid) ** 2, axis=1)))


def _critical_normals(Z: np.ndarray, max_edges: int = 300) -> list:
    """Candidate normals for the minimal width of Z (codimension one, N <= 3).

    In the plane the optimal strip is parallel to a hull edge; in space the
    supporting planes touch face-vertex or edge-edge.
    """
    N = Z.shape[1]
    out = []
    try:
        hull = ConvexHull(Z)
    except (QhullError, ValueError):
        return out
    if N == 2:
        for a, b in hull.simplices:
            e = Z[b] - Z[a]
            u = np.array([-e[1], e[0]])
            nu = np.linalg.norm(u)
            if nu > 0:
                out.append(u / nu)
        return out
    if N == 3:
        for eq in hull.equations:
            out.append(eq[:3] / np.linalg.norm(eq[:3]))
        edges = set()
        for s in hull.simplices:
            for i in range(3):
                a, b = sorted((int(s[i]), int(s[(i + 1) % 3])))
                edges.add((a, b))
        edges = sorted(edges)
        if len(edges) <= max_edges:
            E = np.array([Z[b] - Z[a] for a, b in edges])
            C = np.cross(E[:, None, :], E[None, :, :]).reshape(-1, 3)
            nc = np.linalg.norm(C, axis=1)
            keep = nc > 1e-12 * (np.max(nc) + 1e-300)
            C = C[keep] / nc[keep, None]
            out.extend(list(C))
    return out


def _refine(Q0: np.ndarray, Z: np.ndarray, centered: bool, tol: float, scale: float):
    """Chebyshev refinement of a candidate normal space by SLSQP on the epigraph.

    Variables are tangent coordinates W (k x n) moving the plane, the center
    c of the projected cloud (uncentered case) and the squared radius t.
    """
    k, N = Q0.shape
    F0 = _null_rows(Q0, N)
    n = F0.shape[0]
    Zs = Z / scale

    def normal_of(W):
        W = W.reshape(k, n)
        M = Q0 - W @ F0
        return _orth_rows(M)

    r0, c0 = _objective(Q0, Zs, centered)
    nw = k * n
    nc = 0 if centered else k
    x0 = np.concatenate([np.zeros(nw), c0 if not centered else [], [r0**2]])

    def cons(x):
        Q = normal_of(x[:nw])
        proj = Zs @ Q.T
        if not centered:
            proj = proj - x[nw:nw + nc]
        return x[-1] - np.sum(proj**2, axis=1)

    try:
        res = minimize(
            lambda x: x[-1],
            x0,
            jac=lambda x: np.eye(len(x))[-1],
            method="SLSQP",
            constraints=[{"type": "ineq", "fun": cons}],
            options={"maxiter": 200, "ftol": min(1e-12, (tol / scale) ** 2)},
        )
        Q = normal_of(res.x[:nw])
    except (ValueError, np.linalg.LinAlgError):
        return Q0
    return Q


def _frame_candidates(Z: np.ndarray, n: int, centered: bool, rng) -> list:
    m, N = Z.shape
    k = N - n
    cands = []
    # principal components
    W = Z if centered else Z - Z.mean(axis=0)
    _, _, Vt = np.linalg.svd(W, full_matrices=True)
    cands.append(Vt[n:])
    if k == 1 and N <= 3:
        pts = np.vstack([Z, -Z]) if centered else Z
        for u in _critical_normals(pts):
            cands.append(u[None, :])
    if n == 1:
        dirs = Z if centered else (Z[:, None, :] - Z[None, :, :]).reshape(-1, N)
        nd = np.linalg.norm(dirs, axis=1)
        dirs = dirs[nd > 1e-12 * (nd.max() + 1e-300)]
        if dirs.shape[0] > 200:
            dirs = dirs[rng.choice(dirs.shape[0], 200, replace=False)]
        for d in dirs:
            cands.append(_null_rows((d / np.linalg.norm(d))[None, :], N))
    for _ in range(24):
        G = rng.standard_normal((n, N))
        cands.append(_null_rows(_orth_rows(G), N))
    return cands


def fit_plane_minimax(
    points,
    n: int,
    anchor=None,
    tol_fit: Optional[float] = None,
    seed: int = 0,
    seeds: Sequence[Plane] = (),
    n_refine: int = 3,
) -> PlaneFit:
    """Best n-plane in the sup-distance sense.

    Minimizes max_i dist(points_i, V) over affine n-planes V, or over planes
    through ``anchor`` when it is given. Candidates (principal components,
    hull-critical directions for hyperplanes in dimension <= 3, point
    directions for lines, seeded random frames and caller ``seeds``) are
    screened and the best few are refined by a Chebyshev (epigraph) solve.
    """
    P = np.atleast_2d(np.asarray(points, float))
    m, N = P.shape
    if not 1 <= n <= N:
        raise ValueError("target dimension must satisfy 1 <= n <= N")
    centered = anchor is not None
    origin = np.asarray(anchor, float).reshape(-1) if centered else P.mean(axis=0)
    Z = P - origin
    diam = float(np.max(np.linalg.norm(Z, axis=1))) * 2 if m else 0.0
    tol = tol_fit if tol_fit is not None else 1e-6 * max(diam, 1e-300)

    if n == N or diam == 0.0:
        return PlaneFit(Plane(origin, np.eye(N)[:n]), 0.0, True, tol)

    sv = np.linalg.svd(Z, compute_uv=False)
    rank = int(np.sum(sv > 1e-12 * max(sv[0], 1e-300)))
    if rank <= n:
        _, _, Vt = np.linalg.svd(Z, full_matrices=True)
        F = _canonical_frame(Vt[:n])
        base = origin if centered else origin
        return PlaneFit(Plane(base, F), 0.0, True, tol)

    rng = np.random.default_rng(seed)
    cands = _frame_candidates(Z, n, centered, rng)
    for s in seeds:
        Fs = np.asarray(s.frame, float)
        if Fs.shape == (n, N):
            cands.append(_null_rows(Fs, N))
    scores = np.array([_surrogate(Q, Z, centered) for Q in cands])
    order = np.argsort(scores, kind="stable")
    n_exact = min(len(cands), max(n_refine, 8))
    pool = []
    for idx in order[:n_exact]:
        Q = cands[idx]
        val, c = _objective(Q, Z, centered)
        pool.append((val, Q))
    pool.sort(key=lambda t: t[0])
    refined = []
    for val, Q in pool[:n_refine]:
        Qr = _refine(Q, Z, centered, tol, diam)
        vr, _ = _objective(Qr, Z, centered)
        refined.append((vr, Qr))
    pool.extend(refined)
    best = min(v for v, _ in pool)
    tie = 1e-10 * diam
    winners = [(v, Q) for v, Q in pool if v <= best + tie]
    chosen = None
    chosen_key = None
    for v, Q in winners:
        F = _canonical_frame(_null_rows(Q, N))
        key = _alignment_key(F)
        if chosen is None or key > chosen_key:
            chosen, chosen_key = (v, Q, F), key
    v, Q, F = chosen
    _, c = _objective(Q, Z, centered)
    if centered:
        base = origin
    else:
        base = origin + c @ Q
    plane = Plane(base, F)
    supdist = float(np.max(plane.distance(P)))
    return PlaneFit(plane, supdist, False, tol)


def line_fit_angle_grid(points, anchor=None, step: float = 1e-4) -> tuple[float, float]:
    """Brute-force best line in the plane over a grid of directions.

    Returns ``(supdist, angle)``: for each direction angle the optimal offset
    is the midrange of the normal projections (or zero offset through the
    anchor). Used as an oracle for the planar line fit.
    """
    P = np.atleast_2d(np.asarray(points, float))
    if anchor is not None:
        P = P - np.asarray(anchor, float)
    angles = np.arange(0.0, np.pi, step)
    best, best_a = np.inf, 0.0
    for chunk in np.array_split(angles, max(1, len(angles) // 2000)):
        normals = np.stack([-np.sin(chunk), np.cos(chunk)], axis=1)
        proj = P @ normals.T
        if anchor is None:
            vals = (proj.max(axis=0) - proj.min(axis=0)) / 2
        else:
            vals = np.abs(proj).max(axis=0)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, best_a = float(vals[i]), float(chunk[i])
    return best, best_a
