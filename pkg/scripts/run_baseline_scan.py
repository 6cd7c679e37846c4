#!/usr/bin/env python3
"""Run the stochastic baseline over the (kappa, T) grid and print the table.

Baseline: transport drift A1 = Op(xi), self-adjoint shift B1 = Lambda^1,
windowed single-mode Brownian forcing dY = 0.1 e^{ix} dw.
"""

import argparse
import time

from spdolab import CarlemanConfig, scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=256)
    ap.add_argument("--steps", type=int, default=512)
    ap.add_argument("--grid-points", type=int, default=128)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    base = CarlemanConfig(mu=1.0, horizon=0.25, steps=args.steps,
                          paths=args.paths, grid_points=args.grid_points,
                          a1="c-dx", b1="lambda:1",
                          process="brownian-mode:0.1,1", window="sine",
                          seed=args.seed)
    t0 = time.perf_counter()
    result = scan(base, T_list=(0.0625, 0.125, 0.25),
                  kappa_list=(16.0, 64.0, 256.0))
    elapsed = time.perf_counter() - t0

    print(f"{'mu':>10} {'T':>8} {'gap':>13} {'se':>10} {'gap/se':>8}  verdict")
    for row in result.rows:
        ratio = row.gap / row.gap_se if row.gap_se > 0 else float("inf")
        print(f"{row.mu:10.1f} {row.horizon:8.4f} {row.gap:13.4e} "
              f"{row.gap_se:10.2e} {ratio:8.1f}  "
              f"{'pass' if row.verdict else 'fail'}")
    print()
    summary = result.summary
    print(f"{summary['passes']}/{summary['rows']} cells pass, "
          f"{summary['borderline_rows']} borderline, {elapsed:.1f}s")
    for key, trend in sorted(summary["trends"].items()):
        print(f"  {key}: {trend}")


if __name__ == "__main__":
    main()
