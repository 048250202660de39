#!/usr/bin/env python3
"""Physical-scale instability bookkeeping from one measured sweep.

Runs the ghost sweep once, then prints the dimension-n norm-inflation
table (datum differences shrinking in H^sigma while the rescaled solution
differences grow) and the energy-frame table at s = n/4.
"""

import argparse
import time
from pathlib import Path

from scnls.report import write_study_csv, write_summary_json
from scnls.studies import (
    RunCache,
    ScalingParams,
    SweepConfig,
    corollary_bookkeeping,
    ghost_separation_study,
    inflation_bookkeeping,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("scnls_out"))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--n", type=int, default=6, help="ambient dimension (>= 5)")
    ap.add_argument("--s", type=float, default=1.0)
    ap.add_argument("--sigma", type=float, default=1.5)
    ap.add_argument("--k", type=float, default=1.0)
    args = ap.parse_args()

    params = ScalingParams(n=args.n, s=args.s, sigma=args.sigma, k=args.k)
    cfg = SweepConfig(
        eps_list=(0.25, 0.125, 0.0625, 0.03125, 0.015625),
        s_list=tuple(sorted({0.0, 1.0, 2.0, args.k})),
        jobs=args.jobs,
    )

    t0 = time.time()
    measured = ghost_separation_study(cfg, RunCache())
    inflation = inflation_bookkeeping(params, measured)
    corollary = corollary_bookkeeping(args.n, measured)
    print(f"sweep + bookkeeping in {time.time() - t0:.1f}s")
    print(f"note: {inflation.header['limitation']}\n")

    print(
        f"n={args.n} (s_c={params.s_c:g})  s={args.s:g}  k={args.k:g}  "
        f"threshold k*={params.k_threshold:.4f}  exact growth exponent "
        f"{params.growth_exponent():+.4f} ({inflation.header['classification']})"
    )
    js = inflation.values("inflation", "j")
    tjs = inflation.values("inflation", "t_j")
    phys = inflation.values("inflation", "physical_diff_hk")
    data = inflation.values("inflation", "data_diff_hsigma_bound")
    print(f"{'j':>10} {'t_j':>12} {'|data diff|_Hsigma':>20} {'|sol diff|_Hk':>16}")
    for j, tj, d, p in zip(js, tjs, data, phys):
        print(f"{j:>10.1f} {tj:>12.3e} {d:>20.6e} {p:>16.6f}")

    print(f"\nenergy frame at s = n/4 = {args.n / 4:g}:")
    for q in ("mass_data", "energy_data", "energy_data_diff", "energy_solution_diff"):
        vals = corollary.values("corollary", q)
        print(f"  {q:<22} " + " ".join(f"{v:.4e}" for v in vals))
    for name, c in corollary.checks.items():
        print(f"  {name:<32} {'PASS' if c['passed'] else 'FAIL'}")

    args.out.mkdir(parents=True, exist_ok=True)
    write_study_csv(measured, args.out / "ghost_study.csv")
    write_study_csv(inflation, args.out / "inflation_report.csv")
    write_study_csv(corollary, args.out / "corollary_report.csv")
    write_summary_json([measured, inflation, corollary], args.out / "summary.json")
    print(f"\nwrote results under {args.out}")


if __name__ == "__main__":
    main()
