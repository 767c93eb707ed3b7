"""Generator specs, experiment configs and bundled fixtures."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Optional, Union

import numpy as np

from .errors import BadSpec
from .generators import (PerturbedAffine, SnowflakeMap, circle_set, cube_grid, grid_set, radial_qc,
                         similarity, snowflake_curve)
from .geometry import SampledSet
from .quasisymmetry import SampledMap
from .serialize import dumps_json

__all__ = ["GeneratorSpec", "generate", "ExperimentConfig", "config_hash", "load_fixture",
           "fixture_names", "resolve_object"]

KINDS = ("similarity", "radial_qc", "snowflake", "perturbed_affine", "grid_set", "circle_set")


@dataclass(frozen=True)
class GeneratorSpec:
    """What to synthesize.

    ``resolution`` is the spacing of the domain grid for maps and of the
    sample for grid sets. ``params`` holds kind-specific values: alpha
    (radial_qc); angles, depth, as_map (snowflake); eta, levels, l0, sigma
    (perturbed_affine); extent (grid_set, map domains); m, radius (circle_set).
    """

    kind: str
    n: int = 1
    N: int = 2
    resolution: float = 0.1
    seed: int = 0
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise BadSpec("generator spec needs a 'kind'")
        extra = set(d) - {"kind", "n", "N", "resolution", "seed", "params"}
        if extra:
            raise BadSpec(f"unknown generator fields: {sorted(extra)}")
        return cls(str(d["kind"]), int(d.get("n", 1)), int(d.get("N", 2)),
                   float(d.get("resolution", 0.1)), int(d.get("seed", 0)), dict(d.get("params", {})))

    def to_dict(self) -> dict:
        return asdict(self)


def _domain_grid(spec: GeneratorSpec, lo=-1.0, hi=1.0) -> np.ndarray:
    ext = spec.params.get("extent")
    if ext is not None:
        lo, hi = -float(ext), float(ext)
    m = int(round((hi - lo) / spec.resolution)) + 1
    if m < 2 or m**spec.n > 200000:
        raise BadSpec("domain grid too small or too large for the resolution")
    return cube_grid(spec.n, lo, hi, m)


def generate(spec: Union[GeneratorSpec, dict]) -> Union[SampledSet, SampledMap]:
    """Deterministic sample for a spec."""
    if isinstance(spec, dict):
        spec = GeneratorSpec.from_dict(spec)
    if spec.kind not in KINDS:
        raise BadSpec(f"unknown generator kind {spec.kind!r}")
    if spec.n < 1 or spec.N < spec.n or spec.resolution <= 0:
        raise BadSpec("need 1 <= n <= N and a positive resolution")
    p = spec.params
    meta = {"spec": spec.to_dict()}
    if spec.kind == "grid_set":
        return grid_set(spec.n, spec.N, spec.resolution, float(p.get("extent", 1.0)))
    if spec.kind == "circle_set":
        return circle_set(spec.N, int(p.get("m", 64)), float(p.get("radius", 1.0)))
    if spec.kind == "similarity":
        S = similarity(spec.n, spec.N, spec.seed, p.get("scale"))
        return SampledMap.from_function(S, _domain_grid(spec), meta)
    if spec.kind == "radial_qc":
        if spec.N != spec.n:
            raise BadSpec("radial_qc maps R^n to itself")
        alpha = float(p.get("alpha", 1.0))
        f = radial_qc(alpha)
        return SampledMap.from_function(f, _domain_grid(spec), meta)
    if spec.kind == "snowflake":
        depth = int(p.get("depth", 4))
        angles = p.get("angles", 0.2)
        if p.get("as_map", False):
            if spec.n != 2 or spec.N != 2:
                raise BadSpec("the snowflake map is planar")
            S = SnowflakeMap(angles, depth)
            lo = float(p.get("lo", -0.25))
            hi = float(p.get("hi", 1.25))
            m = int(round((hi - lo) / spec.resolution)) + 1
            G = cube_grid(2, lo, hi, m)
            G = G[np.abs(G[:, 1]) <= float(p.get("half_height", 0.5)) + 1e-12]
            return SampledMap.from_function(S, G, meta)
        if spec.N != 2:
            raise BadSpec("snowflake curves live in the plane")
        return SampledSet.from_points(snowflake_curve(angles, depth))
    # perturbed_affine
    g = PerturbedAffine(spec.n, spec.N, float(p.get("eta", 1e-3)), int(p.get("levels", 3)),
                        float(p.get("l0", 1.0)), spec.seed, sigma=p.get("sigma"))
    return SampledMap.from_function(g, _domain_grid(spec), meta)


def config_hash(cfg: dict) -> str:
    """First 16 hex digits of the SHA-256 of the canonical config text."""
    return hashlib.sha256(dumps_json(cfg, indent=0).encode()).hexdigest()[:16]


SECTIONS = ("seed", "set", "map", "flatness", "qs", "extend", "verify", "generate")


@dataclass
class ExperimentConfig:
    """A JSON document with optional sections; see the README for the schema."""

    data: dict

    @classmethod
    def from_dict(cls, d: dict, seed: Optional[int] = None) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise BadSpec("config must be a JSON object")
        unknown = set(d) - set(SECTIONS)
        if unknown:
            raise BadSpec(f"unknown config sections: {sorted(unknown)}")
        d = json.loads(json.dumps(d))
        if seed is not None:
            d["seed"] = int(seed)
        d.setdefault("seed", 0)
        return cls(d)

    @classmethod
    def load(cls, path, seed: Optional[int] = None) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise BadSpec(f"{path}: {exc}") from exc
        return cls.from_dict(d, seed)

    @property
    def seed(self) -> int:
        return int(self.data.get("seed", 0))

    def section(self, name: str) -> dict:
        sec = self.data.get(name, {})
        if not isinstance(sec, dict):
            raise BadSpec(f"section {name!r} must be an object")
        return sec

    @property
    def hash(self) -> str:
        return config_hash(self.data)


def fixture_names() -> list:
    root = resources.files("quasiflat") / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_fixture(name: str) -> dict:
    root = resources.files("quasiflat") / "fixtures"
    path = root / f"{name}.json"
    if not path.is_file():
        raise BadSpec(f"no bundled fixture {name!r}")
    return json.loads(path.read_text(encoding="utf-8"))


def resolve_object(desc: dict):
    """A set or map from {"fixture": name}, {"points_csv": path}, or a generator spec."""
    if not isinstance(desc, dict):
        raise BadSpec("object description must be a JSON object")
    if "fixture" in desc:
        fx = load_fixture(desc["fixture"])
        pts = np.asarray(fx["points"], float)
        if fx["type"] == "map":
            return SampledMap(SampledSet.from_points(pts), np.asarray(fx["image"], float),
                              {"fixture": desc["fixture"]})
        return SampledSet.from_points(pts)
    if "points_csv" in desc:
        from .serialize import read_points_csv
        P = read_points_csv(desc["points_csv"])
        n_dom = desc.get("domain_dim")
        if n_dom is not None:
            return SampledMap(SampledSet.from_points(P[:, :n_dom]), P[:, n_dom:])
        return SampledSet.from_points(P)
    return generate(desc)
