"""Regenerate the bundled JSON fixtures under src/quasiflat/fixtures.

Golden distortion constants are computed with the brute-force triple
enumeration, not the fast routine the package uses at run time.
"""
from pathlib import Path

import numpy as np

from quasiflat.generators import PerturbedAffine, cube_grid, radial_qc, similarity
from quasiflat.quasisymmetry import weak_qs_brute
from quasiflat.serialize import write_json

OUT = Path(__file__).resolve().parents[1] / "src" / "quasiflat" / "fixtures"


def set_fixture(name, pts, **extra):
    write_json(OUT / f"{name}.json", {"type": "set", "N": pts.shape[1], "points": pts, **extra})


def map_fixture(name, pts, img, golden=False, **extra):
    rec = {"type": "map", "n": pts.shape[1], "N": img.shape[1], "points": pts, "image": img, **extra}
    if golden:
        rec["golden_H"] = weak_qs_brute(pts, img)
    write_json(OUT / f"{name}.json", rec)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    t = np.linspace(-1, 1, 41)
    direction = np.array([3.0, 4.0]) / 5
    set_fixture("line_set", np.outer(t, direction) + np.array([0.25, -0.5]))
    rng = np.random.default_rng(11)
    set_fixture("sandwich_cloud", rng.standard_normal((24, 2)), n=1)
    ang = np.linspace(0, 2 * np.pi, 32, endpoint=False)
    set_fixture("circle_set", np.column_stack([np.cos(ang), np.sin(ang)]), n=1)

    grid = cube_grid(2, -1, 1, 9)
    map_fixture("radial_qc_08", grid, radial_qc(0.8)(grid), golden=True, alpha=0.8)
    for (n, N), seed in zip([(1, 2), (2, 2), (2, 3)], [1, 2, 3]):
        P = cube_grid(n, -1, 1, 21 if n == 1 else 7)
        map_fixture(f"similarity_{n}_{N}", P, similarity(n, N, seed)(P), exact_similarity=True)
    map_fixture("near_similarity_radial", grid, radial_qc(0.9995)(grid), golden=True, alpha=0.9995)
    g = PerturbedAffine(2, 3, 1e-4, levels=2, l0=1.0, seed=5, sigma=1.0)
    map_fixture("near_similarity_perturbed", grid, g(grid), golden=True, eta=1e-4)


if __name__ == "__main__":
    main()
