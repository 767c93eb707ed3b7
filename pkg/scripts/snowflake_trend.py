"""Carleson sums of snowflake maps: constant angles against angles c/j.

Prints the cumulative sum after each half decade of scales and the
increment it adds. With constant angles the increments stay comparable;
with decaying angles they shrink.
"""
import argparse

import numpy as np

from quasiflat.generators import SnowflakeMap
from quasiflat.quasisymmetry import SampledMap, carleson_qs_sum


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--angle", type=float, default=0.3)
    ap.add_argument("--depth", type=int, default=5)
    ap.add_argument("--step", type=float, default=0.005, help="domain grid spacing")
    args = ap.parse_args()
    xs = np.arange(0.1, 0.9 + 1e-12, args.step)
    ys = np.arange(-0.3, 0.3 + 1e-12, args.step)
    X = np.stack(np.meshgrid(xs, ys, indexing="ij"), -1).reshape(-1, 2)
    C = np.array([[0.37, 0.0], [0.45, 0.0]])
    top = 0.25
    decades = [d for d in np.arange(0.5, 3.01, 0.5) if top * 10**-d > 1.5 * args.step]
    print("rule,decades,sum,increment")
    for rule in (args.angle, f"harmonic:{args.angle}"):
        f = SampledMap.from_function(SnowflakeMap(rule, args.depth), X)
        prev = 0.0
        for d in decades:
            s = carleson_qs_sum(f, [0.43, 0.0], 0.08, C, np.geomspace(top * 10**-d, top, int(6 * d) + 1))
            print(f"{rule},{d},{s:.6f},{s - prev:.6f}")
            prev = s


if __name__ == "__main__":
    main()
