"""Explore-policy runs of the benchmark over a range of saturation margins.

With the explore policy the ratio dist / (delta * xi) is capped at
``1 - margin`` before the transformed error is formed. A tiny margin lets the
error reach its huge near-boundary values, which drives the noise-bound
estimate and the correction gain up without limit; a large margin keeps them
moderate at the cost of a weaker correction.

    python scripts/margin_sweep.py --margins 0.001 0.1 0.5 0.9 --runs 20
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from ppf_attitude import harness as h


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--margins", type=float, nargs="+", default=[1e-3, 0.1, 0.5, 0.9])
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=("cont", "disc"), default="cont")
    args = p.parse_args()

    factory = h.continuous_config if args.preset == "cont" else h.discrete_config
    base = factory(seed=args.seed, policy="explore")
    seeds = [args.seed ^ i for i in range(args.runs)]
    print(f"{'margin':>7} {'estimator':>9} {'envelope':>8} {'mean':>10} {'median':>10} {'max sigma':>10}")
    for margin in args.margins:
        t0 = time.perf_counter()
        res = h.run_seeds(replace(base, ratio_margin=margin), seeds, keep_full=True)
        for kind, (stats, recs) in res.items():
            means = np.array([s.mean for s in stats])
            sig = max(np.max(r[f"sigmahat_{ax}"]) for r in recs for ax in "xyz")
            passed = sum(s.envelope_passed for s in stats)
            print(f"{margin:7.3g} {kind:>9} {passed:>5}/{len(stats):<2} {means.mean():10.3e} "
                  f"{np.median(means):10.3e} {sig:10.3g}")  # fmt: skip
        if args.preset == "cont":
            semi, direct = (res[k][0] for k in ("semi", "direct"))
            paired = sum(a.mean <= b.mean for a, b in zip(semi, direct))
            print(f"{'':>7} semi <= direct in {paired}/{len(seeds)} paired seeds")
        print(f"{'':>7} ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
