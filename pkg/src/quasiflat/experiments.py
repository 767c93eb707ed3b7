"""End-to-end extension experiment: random set, almost affine map, Whitney extension."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .families import AffineFamily, check_almost_affine
from .generators import PerturbedAffine, cube_grid
from .geometry import SampledSet
from .quasisymmetry import SampledMap
from .whitney import (ExtensionEvaluator, ExtensionReport, WhitneyDecomposition, extend_map,
                      measure_extension_constants, whitney_decompose)

__all__ = ["ExtensionRun", "extension_setup", "extension_experiment", "DEFAULT_LEVELS"]

DEFAULT_LEVELS = {1: 9, 2: 6}
RHO = 2.0


@dataclass
class ExtensionRun:
    n: int
    N: int
    eps: float
    H: float
    g: PerturbedAffine
    E: SampledSet
    family: AffineFamily
    W: WhitneyDecomposition
    ev: ExtensionEvaluator
    eps_measured: float
    report: ExtensionReport = None

    def record(self) -> dict:
        rec = {"n": self.n, "N": self.N, "eps": self.eps, "H": self.H, "rho": RHO,
               "eps_measured_input": self.eps_measured, "cubes": len(self.W),
               "collar_cubes": int(len(self.W.collar_levels))}
        if self.report is not None:
            rec.update(self.report.to_record())
            rec["H_F_bound"] = RHO * self.H
            rec["C_H"] = (self.report.H_F - 1.0) / self.eps
        return rec


def extension_setup(n: int, N: int, eps: float, seed: int, m: int = 20, min_level: int = None,
                    levels: int = 3) -> ExtensionRun:
    """Random finite E in [-1/2, 1/2]^n and a perturbed affine f with a known family.

    The perturbation size eta = eps / (5 levels) keeps every family member
    within lambda_n <= (1 + eps/2) lambda_1 and the measured almost-affine
    constant below eps, so the claimed eps is a valid hypothesis.
    """
    rng = np.random.default_rng(seed)
    L = DEFAULT_LEVELS[n] if min_level is None else min_level
    pts = rng.uniform(-0.5, 0.5, (m, n))
    E = SampledSet.from_points(pts, resolution=1e-9)
    g = PerturbedAffine(n, N, eps / (5 * levels), levels=levels, l0=0.5,
                        seed=int(rng.integers(2**31)), sigma=1.0)
    scales = np.sqrt(n) * 2.0 * 2.0 ** -np.arange(L, -2, -1)
    F = AffineFamily.from_callable(g.family_map, pts, scales, eps_nominal=eps)
    measured = check_almost_affine(g, E, F)
    W = whitney_decompose(E, (-np.ones(n), 2.0), L)
    ev = extend_map(E, g(pts), F, W, eps=eps)
    return ExtensionRun(n, N, eps, 1.0 + eps / 2, g, E, F, W, ev, measured)


def extension_experiment(n: int, N: int, eps: float, seed: int, m: int = 20,
                         n_probes: int = None, image_side: int = None, beta_centers: int = 3,
                         grid_per_decade: int = 4) -> ExtensionRun:
    run = extension_setup(n, N, eps, seed, m)
    rng = np.random.default_rng(seed + 1)
    n_probes = (60 if n == 1 else 120) if n_probes is None else n_probes
    probes = rng.uniform(-0.75, 0.75, (4 * n_probes, n))
    probes = probes[run.ev.classify(probes) == 0][:n_probes]
    side = (801 if n == 1 else 61) if image_side is None else image_side
    grid = cube_grid(n, -1, 1, side)
    dense = cube_grid(n, -0.75, 0.75, 301 if n == 1 else 31)
    fmap = SampledMap(SampledSet.from_points(dense), run.g(dense))
    centers = run.E.points[:beta_centers]
    run.report = measure_extension_constants(run.ev, probes, grid, centers, qs_points=probes,
                                            dini_rmax=None, grid_per_decade=grid_per_decade,
                                            c_e_radius=0.5, H=run.H, c_e_map=fmap)
    return run
