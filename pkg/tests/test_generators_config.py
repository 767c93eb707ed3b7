import numpy as np
import pytest

from quasiflat.config import (ExperimentConfig, GeneratorSpec, config_hash, fixture_names, generate,
                              load_fixture, resolve_object)
from quasiflat.errors import BadSpec
from quasiflat.flatness import beta
from quasiflat.generators import SnowflakeMap, snowflake_curve, snowflake_length_ratio
from quasiflat.quasisymmetry import SampledMap, carleson_qs_sum, weak_qs_brute

from oracles import polyline_length


def test_flat_snowflake_is_a_segment():
    E = generate({"kind": "snowflake", "N": 2, "params": {"angles": 0.0, "depth": 5}})
    assert np.all(E.points[:, 1] == 0.0)
    for k in (0, len(E) // 3, len(E) // 2):
        for r in (0.05, 0.3):
            assert beta(E, E.points[k], r, n=1) == 0.0


def test_radial_alpha_one_is_identity():
    M = generate({"kind": "radial_qc", "n": 2, "N": 2, "resolution": 0.25, "params": {"alpha": 1.0}})
    assert np.allclose(M.image, M.points, atol=1e-15)


@pytest.mark.parametrize("angle", [0.1, 0.4, 0.9])
def test_snowflake_length_growth(angle):
    lengths = [polyline_length(snowflake_curve(angle, d)) for d in range(5)]
    for a, b in zip(lengths, lengths[1:]):
        assert b / a == pytest.approx(snowflake_length_ratio(angle), rel=1e-12)
    # closed form: four pieces of length 1 / (2 (1 + cos a)) per unit segment
    assert snowflake_length_ratio(angle) == pytest.approx(4 / (2 * (1 + np.cos(angle))))


def test_snowflake_map_carries_segment_onto_polyline():
    S = SnowflakeMap(0.2, 3)
    t = np.linspace(0, 1, 2001)
    img = S(np.column_stack([t, np.zeros_like(t)]))
    P = snowflake_curve(0.2, 3)
    a, d = P[:-1], np.diff(P, axis=0)
    # distance from each image point to the polyline
    s = np.clip(np.einsum("ijk,jk->ij", img[:, None] - a[None], d) / np.sum(d * d, axis=1), 0, 1)
    dist = np.linalg.norm(img[:, None] - (a[None] + s[..., None] * d[None]), axis=2).min(axis=1)
    assert dist.max() <= 1e-12
    # and every vertex of the polyline is reached up to the sampling step
    gap = np.linalg.norm(P[:, None] - img[None], axis=2).min(axis=1)
    assert gap.max() <= 1e-3


@pytest.mark.parametrize("spec", [
    {"kind": "nope"},
    {"kind": "radial_qc", "n": 2, "N": 3},
    {"kind": "snowflake", "N": 3},
    {"kind": "snowflake", "N": 2, "params": {"depth": 13}},
    {"kind": "snowflake", "N": 2, "params": {"angles": 1.2}},
    {"kind": "snowflake", "N": 2, "params": {"angles": "cubic:1"}},
    {"kind": "similarity", "n": 3, "N": 2},
    {"kind": "similarity", "resolution": -1},
    {"kind": "grid_set", "bogus": 1},
    {"n": 1},
])
def test_bad_specs(spec):
    with pytest.raises(BadSpec):
        generate(spec)


def test_radial_alpha_range():
    with pytest.raises(BadSpec):
        generate({"kind": "radial_qc", "n": 2, "N": 2, "params": {"alpha": 1.5}})


def test_generation_is_deterministic():
    spec = {"kind": "perturbed_affine", "n": 2, "N": 3, "resolution": 0.2, "seed": 9,
            "params": {"eta": 1e-3}}
    a, b = generate(spec), generate(GeneratorSpec.from_dict(spec))
    assert np.array_equal(a.image, b.image)
    c = generate({**spec, "seed": 10})
    assert not np.array_equal(a.image, c.image)


def test_config_hash_and_sections():
    d = {"seed": 1, "set": {"fixture": "line_set"}}
    assert config_hash(d) == ExperimentConfig.from_dict(d).hash
    assert ExperimentConfig.from_dict(d, seed=2).hash != config_hash(d)
    assert len(config_hash(d)) == 16
    with pytest.raises(BadSpec):
        ExperimentConfig.from_dict({"junk": {}})
    with pytest.raises(BadSpec):
        ExperimentConfig.from_dict({"set": 3}).section("set")


def test_fixtures_load_and_golden_values():
    names = fixture_names()
    assert {"line_set", "radial_qc_08", "similarity_2_3"} <= set(names)
    for nm in names:
        obj = resolve_object({"fixture": nm})
        fx = load_fixture(nm)
        assert (fx["type"] == "map") == isinstance(obj, SampledMap)
    fx = load_fixture("radial_qc_08")
    M = resolve_object({"fixture": "radial_qc_08"})
    assert weak_qs_brute(M.points, M.image) == pytest.approx(fx["golden_H"], rel=1e-12)
    with pytest.raises(BadSpec):
        load_fixture("missing")


def test_snowflake_carleson_trend():
    xs = np.linspace(0.1, 0.9, 161)
    ys = np.linspace(-0.3, 0.3, 121)
    X = np.stack(np.meshgrid(xs, ys, indexing="ij"), -1).reshape(-1, 2)
    C = np.array([[0.37, 0.0], [0.45, 0.0]])
    sums = {}
    for rule in (0.3, "harmonic:0.3"):
        f = SampledMap.from_function(SnowflakeMap(rule, 5), X)
        sums[rule] = np.array([carleson_qs_sum(f, [0.43, 0.0], 0.08, C,
                                               np.geomspace(0.25 * 10**-d, 0.25, int(6 * d) + 1))
                               for d in (0.5, 1.0, 1.5)])
    const, harm = sums[0.3], sums["harmonic:0.3"]
    dc = np.diff(np.concatenate([[0.0], const]))
    dh = np.diff(np.concatenate([[0.0], harm]))
    # constant angles: every half decade adds a comparable amount
    assert np.all(dc >= 0.5 * dc[0])
    # decaying angles: increments shrink and stay below the constant ones
    assert np.all(np.diff(dh) <= 0) and np.all(harm < const)
