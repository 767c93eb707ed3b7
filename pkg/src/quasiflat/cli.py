"""Command line: flatness, qs, extend, verify, generate.

Every command reads a JSON config (``--config``), may override its seed
(``--seed``), and writes sorted CSV/JSON files into ``--out``. Each output
carries the config hash. Exit codes: 0 ok, 1 verification failure,
2 bad input.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, fixture_names, load_fixture, resolve_object
from .errors import BadSpec, QuasiflatError
from .geometry import SampledSet
from .quasisymmetry import SampledMap
from .serialize import csv_text, dumps_json

COMMANDS = ("flatness", "qs", "extend", "verify", "generate")


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def _need(cfg: ExperimentConfig, name: str) -> dict:
    sec = cfg.section(name)
    if not sec:
        raise BadSpec(f"config has no {name!r} section")
    return sec


def _with_seed(desc: dict, seed: int) -> dict:
    """Generator specs inherit the config seed unless they set their own."""
    if "kind" in desc and "seed" not in desc:
        return {**desc, "seed": seed}
    return desc


def _as_set(obj) -> SampledSet:
    return SampledSet.from_points(obj.image) if isinstance(obj, SampledMap) else obj


# --- commands -----------------------------------------------------------------

def cmd_flatness(cfg: ExperimentConfig, out: Path) -> int:
    from .flatness import flatness_profile

    E = _as_set(resolve_object(_with_seed(_need(cfg, "set"), cfg.seed)))
    sec = cfg.section("flatness")
    n = int(sec.get("n", E.dim - 1))
    diam = float(np.max(np.ptp(E.points, axis=0)))
    if "scales" in sec:
        scales = np.asarray(sec["scales"], float)
    else:
        lo, hi = float(sec.get("rmin_frac", 0.1)), float(sec.get("rmax_frac", 0.5))
        scales = diam * np.geomspace(lo, hi, int(sec.get("count", 4)))
    if "centers" in sec:
        centers = sorted({int(i) for i in sec["centers"]})
    else:
        k = min(len(E), int(sec.get("n_centers", 3)))
        centers = sorted({int(i) for i in np.linspace(0, len(E) - 1, k).astype(int)})
    if any(c < 0 or c >= len(E) for c in centers):
        raise BadSpec("center index out of range")
    h = cfg.hash
    rows, records = [], []
    for c in centers:
        prof = flatness_profile(E, E.points[c], scales, n=n, tol_fit=sec.get("tol_fit"),
                                grid_per_decade=int(sec.get("grid_per_decade", 8)))
        for row in sorted(prof.csv_rows(), key=lambda r: r[E.dim]):
            rows.append([c, *row, h])
        rec = prof.to_record()
        rec["point_index"] = c
        records.append(rec)
    header = ["point_index"] + [f"x{i}" for i in range(E.dim)] + ["scale", "beta", "beta_ctr",
                                                                  "theta", "config_hash"]
    _write(out, "flatness.csv", csv_text(header, rows))
    _write(out, "flatness.json", dumps_json({"config_hash": h, "n": n, "N": E.dim,
                                             "profiles": records}))
    return 0


def cmd_qs(cfg: ExperimentConfig, out: Path) -> int:
    from .quasisymmetry import dini_qs_integral, weak_qs_constant

    f = resolve_object(_with_seed(_need(cfg, "map"), cfg.seed))
    if not isinstance(f, SampledMap):
        raise BadSpec("the 'map' section must describe a map")
    sec = cfg.section("qs")
    rep = weak_qs_constant(f)
    rec = {"config_hash": cfg.hash, "n": f.domain.dim, "N": f.image.shape[1], **rep.to_record()}
    rmax = sec.get("dini_rmax")
    if rmax is not None:
        centers = sorted({int(i) for i in sec.get("centers", [0])})
        rec["dini"] = [{"point_index": c,
                        "value": dini_qs_integral(f, f.points[c], float(rmax),
                                                  grid_per_decade=int(sec.get("grid_per_decade", 8)))}
                       for c in centers]
    _write(out, "qs.json", dumps_json(rec))
    return 0


def cmd_extend(cfg: ExperimentConfig, out: Path) -> int:
    from .experiments import extension_experiment
    from .generators import cube_grid

    sec = _need(cfg, "extend")
    n, N = int(sec.get("n", 1)), int(sec.get("N", 2))
    if n not in (1, 2) or N < n:
        raise BadSpec("extend supports n in {1, 2} and N >= n")
    run = extension_experiment(n, N, float(sec.get("eps", 1e-2)), cfg.seed, m=int(sec.get("m", 20)),
                               n_probes=sec.get("n_probes"), image_side=sec.get("image_side"))
    h = cfg.hash
    rec = run.record()
    rec["config_hash"] = h
    _write(out, "extend.json", dumps_json(rec))
    side = int(sec.get("probe_side", 41 if n == 1 else 11))
    X = cube_grid(n, -0.75, 0.75, side)
    text = run.ev.probe_csv(X)
    lines = text.splitlines()
    body = [lines[0] + ",config_hash"] + [ln + "," + h for ln in lines[1:]]
    _write(out, "extend_probes.csv", "\n".join(body) + "\n")
    return 0


def cmd_verify(cfg: ExperimentConfig, out: Path, suite: str = None) -> int:
    from .suites import run_suite

    sec = cfg.section("verify")
    name = suite or sec.get("suite")
    if not name:
        raise BadSpec("no suite given (use --suite or verify.suite)")
    params = dict(sec.get("params", {}))
    if name == "betas-sandwich" and not params:
        params = {"sets": [{"fixture": nm} for nm in fixture_names()
                           if load_fixture(nm)["type"] == "set"]}
    res = run_suite(name, params, cfg.seed)
    reports = sorted(res.reports, key=lambda r: (r.kind, json.dumps(_plain(r.witness))))
    rec = {"config_hash": cfg.hash, "suite": res.name, "instances": res.instances,
           "violations": res.violations, "passed": res.passed, "tol": res.tol,
           "worst": json.loads(res.worst.to_json()) if res.reports else None,
           "extra": _plain(res.extra),
           "reports": [json.loads(r.to_json()) for r in reports]}
    _write(out, f"verify_{res.name}.json", dumps_json(rec))
    status = "PASS" if res.passed else "FAIL"
    print(f"{status} {res.name}: {res.instances} instances, {res.violations} violations",
          file=sys.stderr if not res.passed else sys.stdout)
    return 0 if res.passed else 1


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(u) for k, u in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(u) for u in (v.tolist() if isinstance(v, np.ndarray) else v)]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def cmd_generate(cfg: ExperimentConfig, out: Path) -> int:
    spec = _with_seed(_need(cfg, "generate"), cfg.seed)
    obj = resolve_object(spec)
    h = cfg.hash
    if isinstance(obj, SampledMap):
        n, N = obj.domain.dim, obj.image.shape[1]
        header = [f"x{i}" for i in range(n)] + [f"y{i}" for i in range(N)] + ["config_hash"]
        rows = [[*map(float, p), *map(float, q), h] for p, q in zip(obj.points, obj.image)]
        meta = {"type": "map", "n": n, "N": N, "count": len(rows)}
    else:
        N = obj.dim
        header = [f"x{i}" for i in range(N)] + ["config_hash"]
        rows = [[*map(float, p), h] for p in obj.points]
        meta = {"type": "set", "N": N, "count": len(rows)}
    meta.update({"config_hash": h, "spec": spec})
    _write(out, "generated.csv", csv_text(header, rows))
    _write(out, "generated.json", dumps_json(meta))
    return 0


# --- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quasiflat", description="Flatness, distortion and extension experiments.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--suite", default=None, help="suite name for 'verify'")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise BadSpec("seed must fit in an unsigned 64-bit integer")
        cfg = ExperimentConfig.load(args.config, args.seed % 2**32 if args.seed is not None else None)
        out = Path(args.out)
        if args.command == "verify":
            return cmd_verify(cfg, out, args.suite)
        return {"flatness": cmd_flatness, "qs": cmd_qs, "extend": cmd_extend,
                "generate": cmd_generate}[args.command](cfg, out)
    except (QuasiflatError, OSError, ValueError, KeyError, TypeError) as exc:
        print(f"quasiflat: error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
