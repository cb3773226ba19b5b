"""Strict-policy Monte-Carlo runs of the continuous benchmark with the sensor
noise scaled down, optionally without the vector biases.

Shows at which noise level the estimators stay inside the envelope without
any saturation.

    python scripts/noise_sweep.py --scales 1 0.5 0.25 0.1 --runs 20
"""

import argparse
import time
from dataclasses import replace

from ppf_attitude import harness as h


def scaled(cfg, scale, vector_bias):
    vectors = tuple(
        replace(v, noise_std=v.noise_std * scale, bias=v.bias if vector_bias else (0.0, 0.0, 0.0))
        for v in cfg.vectors
    )
    return replace(cfg, vectors=vectors, gyro=replace(cfg.gyro, noise_std=cfg.gyro.noise_std * scale))


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--scales", type=float, nargs="+", default=[1.0, 0.5, 0.25, 0.1])
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--integrator", default="adaptive", choices=h.INTEGRATORS)
    p.add_argument("--no-vector-bias", action="store_true")
    args = p.parse_args()

    base = h.continuous_config(seed=args.seed, integrator=args.integrator)
    print(f"{'scale':>6} {'estimator':>9} {'completed':>9} {'pass':>6} {'mean':>10} {'std':>10}")
    for scale in args.scales:
        cfg = scaled(base, scale, not args.no_vector_bias)
        t0 = time.perf_counter()
        res = h.run_monte_carlo(cfg, args.runs)
        for kind, e in res.items():
            print(
                f"{scale:6.3g} {kind:>9} {e.n_completed:>6}/{e.n_runs:<2} {e.pass_rate:6.2f} "
                f"{e.mean:10.4g} {e.std:10.3g}"
            )
        print(f"       ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
