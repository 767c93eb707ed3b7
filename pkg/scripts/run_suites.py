"""Run every verification suite at a chosen size and summarize the worst slack."""
import argparse
import time

from quasiflat.suites import SUITES, run_suite

SIZES = {
    "betas-sandwich": {"random_sets": 200},
    "pre-estimates": {"families": 500},
    "post-estimates": {"instances": 500},
    "ab-bound": {"instances": 500},
    "holder": {"maps": 520},
    "inradius": {"instances": 500},
    "whitney": {"sets": 8, "points": 300},
    "bflat": {"probes": 100, "snowflake_depth": 6},
    "similarity": {},
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("names", nargs="*", default=sorted(SUITES))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for name in args.names:
        t = time.perf_counter()
        res = run_suite(name, SIZES.get(name, {}), args.seed)
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {name}: instances={res.instances} violations={res.violations} "
              f"worst_slack={res.worst.slack:.3e} ({time.perf_counter() - t:.1f}s)")


if __name__ == "__main__":
    main()
