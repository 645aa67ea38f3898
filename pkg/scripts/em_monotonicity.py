"""Fit the mixture on random datasets and report the largest log-likelihood drop.

    python scripts/em_monotonicity.py --datasets 500
"""

import argparse
import time

import numpy as np

from etlsieve.gmm import EMConfig, fit_gmm


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--datasets", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    worst, violations, iters, rescues, converged = 0.0, 0, [], 0, 0
    t0 = time.perf_counter()
    for i in range(args.datasets):
        n, d, k = int(rng.integers(50, 501)), int(rng.integers(2, 5)), int(rng.integers(2, 11))
        centers = rng.normal(0, 4, size=(int(rng.integers(1, 6)), d))
        data = centers[rng.integers(0, len(centers), n)] + rng.normal(size=(n, d)) * rng.uniform(0.2, 3.0, d)
        model = fit_gmm(data, k, EMConfig(seed=i))
        drops = -np.diff(model.log_likelihood_trace)
        worst = max(worst, float(drops.max(initial=0.0)))
        violations += int(np.sum(drops > 1e-8))
        iters.append(model.n_iter)
        rescues += len(model.rescues)
        converged += model.converged
    print(f"datasets={args.datasets} violations={violations} worst_drop={worst:.3e} "
          f"median_iters={int(np.median(iters))} converged={converged} rescues={rescues} "
          f"time={time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
