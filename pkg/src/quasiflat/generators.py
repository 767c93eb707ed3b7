"""Synthetic sets and maps for experiments and tests."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import BadSpec
from .geometry import AffineMap, SampledSet

__all__ = [
    "similarity",
    "radial_qc",
    "snowflake_curve",
    "snowflake_length_ratio",
    "SnowflakeMap",
    "PerturbedAffine",
    "grid_set",
    "circle_set",
    "cube_grid",
    "ball_grid",
    "snowflake_angles",
]

MAX_SNOWFLAKE_DEPTH = 12


def _random_isometry(rng, N: int, n: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((N, N)))
    Q = Q * np.sign(np.diag(R))
    return Q[:, :n]


def similarity(n: int, N: int, seed: int = 0, scale: Optional[float] = None) -> AffineMap:
    """Random similarity from R^n into R^N."""
    if N < n:
        raise BadSpec("a similarity needs N >= n")
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.5, 2.0) if scale is None else float(scale)
    return AffineMap(s * _random_isometry(rng, N, n), rng.standard_normal(N))


def radial_qc(alpha: float):
    """x -> |x|^(alpha - 1) x, quasiconformal for 0 < alpha <= 1."""
    if not 0 < alpha <= 1:
        raise BadSpec("radial_qc needs alpha in (0, 1]")

    def f(X):
        X = np.atleast_2d(np.asarray(X, float))
        if alpha == 1:
            return X.copy()
        r = np.linalg.norm(X, axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(r > 0, r ** (alpha - 1.0), 0.0)
        return X * s
    return f


def snowflake_angles(spec, depth: int) -> np.ndarray:
    """Per-level angles: a number (constant), "harmonic:c" (c/j), or a list."""
    if isinstance(spec, str):
        kind, _, c = spec.partition(":")
        c = float(c) if c else 1.0
        if kind != "harmonic":
            raise BadSpec(f"unknown angle rule {spec!r}")
        return np.array([c / j for j in range(1, depth + 1)])
    arr = np.atleast_1d(np.asarray(spec, float))
    if arr.size == 1:
        return np.full(depth, float(arr[0]))
    if arr.size < depth:
        raise BadSpec("fewer angles than levels")
    return arr[:depth]


def _check_angles(angles: np.ndarray, depth: int) -> None:
    if not 0 <= depth <= MAX_SNOWFLAKE_DEPTH:
        raise BadSpec(f"snowflake depth must be in [0, {MAX_SNOWFLAKE_DEPTH}]")
    if np.any(angles < 0) or np.any(angles >= np.pi / 3):
        raise BadSpec("snowflake angles must lie in [0, pi/3)")


def snowflake_length_ratio(angle: float) -> float:
    """Length gained when a segment becomes four equal pieces with a tent of this angle."""
    return 2.0 / (1.0 + np.cos(angle))


def _refine_polyline(P: np.ndarray, angle: float) -> np.ndarray:
    a, b = P[:-1], P[1:]
    d = b - a
    L = np.linalg.norm(d, axis=1, keepdims=True)
    u = d / L
    nrm = np.column_stack([-u[:, 1], u[:, 0]])
    ell = L / (2.0 * (1.0 + np.cos(angle)))
    p1 = a + ell * u
    p2 = a + 0.5 * d + ell * np.sin(angle) * nrm
    p3 = b - ell * u
    out = np.empty((4 * len(a) + 1, 2))
    out[0:-1:4], out[1::4], out[2::4], out[3::4] = a, p1, p2, p3
    out[-1] = P[-1]
    return out


def snowflake_curve(angles, depth: int) -> np.ndarray:
    """Vertices of the level-``depth`` polyline starting from [0, 1] x {0}.

    Each segment is replaced by four equal pieces; the middle two form a
    tent that makes angle ``angles[j]`` with the segment at level j + 1.
    """
    ang = snowflake_angles(angles, depth)
    _check_angles(ang, depth)
    P = np.array([[0.0, 0.0], [1.0, 0.0]])
    for a in ang:
        P = _refine_polyline(P, a)
    return P


def _cutoff(t):
    """Smooth even bump, 1 at 0, vanishing for |t| >= 1."""
    t = np.abs(t)
    out = np.zeros_like(t)
    m = t < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
    return out


class SnowflakeMap:
    """Planar homeomorphism carrying [0, 1] x {0} onto the snowflake polyline.

    Level j moves points near each segment of the level j-1 polyline along
    its normal by tent(u) * cutoff(v / (0.3 L)), where (u, v) are segment
    coordinates and L its length. The tent vanishes on the outer quarters,
    so the displacement is supported well inside the segment's nearest-point
    region and the composition is continuous. Angles should be small
    (well below pi/3) for the shear to stay injective.
    """

    def __init__(self, angles, depth: int):
        self.angles = snowflake_angles(angles, depth)
        _check_angles(self.angles, depth)
        self.depth = depth
        self.levels = [np.array([[0.0, 0.0], [1.0, 0.0]])]
        for a in self.angles:
            self.levels.append(_refine_polyline(self.levels[-1], a))

    def _apply_level(self, X: np.ndarray, P: np.ndarray, angle: float) -> np.ndarray:
        a, b = P[:-1], P[1:]
        d = b - a
        L = np.linalg.norm(d, axis=1)
        u = d / L[:, None]
        nrm = np.column_stack([-u[:, 1], u[:, 0]])
        ell = L / (2.0 * (1.0 + np.cos(angle)))
        h = ell * np.sin(angle)
        half = ell * np.cos(angle)
        out = X.copy()
        chunk = max(1, 200000 // max(1, len(a)))
        for s in range(0, len(X), chunk):
            Y = X[s:s + chunk]
            rel = Y[:, None, :] - a[None]
            us = np.einsum("ijk,jk->ij", rel, u)
            vs = np.einsum("ijk,jk->ij", rel, nrm)
            uc = np.clip(us, 0, L[None])
            dist = np.hypot(us - uc, vs)
            k = np.argmin(dist, axis=1)
            rows = np.arange(len(Y))
            uk, vk, Lk = us[rows, k], vs[rows, k], L[k]
            tent = h[k] * np.clip(1.0 - np.abs(uk - Lk / 2) / half[k], 0.0, None)
            disp = tent * _cutoff(vk / (0.3 * Lk))
            out[s:s + chunk] = Y + disp[:, None] * nrm[k]
        return out

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        for P, a in zip(self.levels[:-1], self.angles):
            if a == 0:
                continue
            X = self._apply_level(X, P, a)
        return X


class PerturbedAffine:
    """Multiscale smooth perturbation of an affine map with an explicit family.

    f(x) = L0 x + b + sum_k eta l_k psi_k(x / l_k), l_k = l0 2^-k, where each
    psi_k is a sum of sines with unit total amplitude and frequencies <= 1,
    so |psi|, |D psi|, |D^2 psi| <= 1. The family keeps the Taylor term of
    every level with l_k >= r and only the value at x of finer levels:

        A_{x,r}(z) = f(x) + (L0 + sum_{l_k >= r} eta D psi_k(x / l_k)) (z - x).

    Coarse levels leave a Taylor remainder of at most eta r in total and
    fine levels at most 3 eta r, while linear parts of comparable pairs
    differ by at most 3 eta. So (f, E, A) is almost affine at every scale
    with epsilon <= 4 eta / (sigma - K eta); ``eps_bound`` stores that value.
    """

    def __init__(self, n: int, N: int, eta: float, levels: int = 4, l0: float = 1.0,
                 seed: int = 0, modes: int = 3, sigma: Optional[float] = None):
        if N < n:
            raise BadSpec("perturbed_affine needs N >= n")
        if eta < 0 or levels < 0:
            raise BadSpec("eta and levels must be nonnegative")
        rng = np.random.default_rng(seed)
        self.n, self.N, self.eta, self.K = n, N, float(eta), int(levels)
        s0 = rng.uniform(0.5, 2.0) if sigma is None else float(sigma)
        self.L0 = s0 * _random_isometry(rng, N, n)
        self.b = rng.standard_normal(N)
        self.ells = l0 * 2.0 ** -np.arange(self.K)
        amp = rng.standard_normal((self.K, modes, N))
        amp /= np.linalg.norm(amp, axis=2).sum(axis=1)[:, None, None]
        om = rng.standard_normal((self.K, modes, n))
        om /= np.linalg.norm(om, axis=2, keepdims=True)
        om *= rng.uniform(0.3, 1.0, (self.K, modes, 1))
        self.amp, self.om = amp, om
        self.ph = rng.uniform(0, 2 * np.pi, (self.K, modes))
        denom = s0 - self.K * self.eta
        self.eps_bound = float(4 * self.eta / denom) if denom > 0 else float("inf")

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        out = X @ self.L0.T + self.b
        for k, ell in enumerate(self.ells):
            arg = (X / ell) @ self.om[k].T + self.ph[k]  # (m, modes)
            out += self.eta * ell * np.sin(arg) @ self.amp[k]
        return out

    def _level_jac(self, x: np.ndarray, k: int) -> np.ndarray:
        arg = self.om[k] @ (x / self.ells[k]) + self.ph[k]
        return np.einsum("m,mi,mj->ij", np.cos(arg), self.amp[k], self.om[k])

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        J = self.L0.copy()
        for k in range(self.K):
            J += self.eta * self._level_jac(x, k)
        return J

    def family_map(self, x, r: float) -> AffineMap:
        x = np.asarray(x, float)
        J = self.L0.copy()
        for k in range(self.K):
            if self.ells[k] >= r:
                J += self.eta * self._level_jac(x, k)
        fx = self(x)[0]
        return AffineMap(J, fx - J @ x)


def cube_grid(n: int, lo: float, hi: float, m: int) -> np.ndarray:
    """m^n grid points of [lo, hi]^n in lexicographic order."""
    axes = [np.linspace(lo, hi, m)] * n
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)


def ball_grid(center, r: float, h: float) -> np.ndarray:
    """Grid points of spacing h inside the closed ball, center included."""
    c = np.asarray(center, float)
    k = int(np.floor(r / h))
    g = cube_grid(len(c), -k * h, k * h, 2 * k + 1)
    return c + g[np.linalg.norm(g, axis=1) <= r * (1 + 1e-12)]


def grid_set(n: int, N: int, spacing: float, extent: float = 1.0) -> SampledSet:
    """Grid on the coordinate n-plane of R^N inside [-extent, extent]^n."""
    if N < n or spacing <= 0:
        raise BadSpec("grid_set needs N >= n and positive spacing")
    m = int(round(2 * extent / spacing)) + 1
    P = np.zeros((m**n, N))
    P[:, :n] = cube_grid(n, -extent, extent, m)
    return SampledSet.from_points(P)


def circle_set(N: int, m: int, radius: float = 1.0) -> SampledSet:
    if N < 2 or m < 3:
        raise BadSpec("circle_set needs N >= 2 and at least 3 points")
    t = 2 * np.pi * np.arange(m) / m
    P = np.zeros((m, N))
    P[:, 0], P[:, 1] = radius * np.cos(t), radius * np.sin(t)
    return SampledSet.from_points(P)
