#!/usr/bin/env python3
"""Convergence-order verification: profile errors O(eps), corrector
expansion O(eps^2), small-time phase expansions O(t^3).

Prints every fitted log-log slope with its band; writes both study CSVs.
"""

import argparse
import time
from pathlib import Path

from scnls.report import write_study_csv, write_summary_json
from scnls.studies import RunCache, SweepConfig, small_time_study, wkb_error_study

BANDS = {
    "profile_plain": (0.8, 1.2),
    "profile_perturbed": (0.8, 1.2),
    "hyperbolic_gap": (0.8, 1.2),
    "expansion_gap": (1.7, 2.3),
    "phase_residual": (2.7, 3.3),
    "corrector_phase_residual": (2.7, 3.3),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("scnls_out"))
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = SweepConfig(
        eps_list=(0.25, 0.125, 0.0625, 0.03125, 0.015625),
        s_list=(0.0, 1.0, 2.0),
        jobs=args.jobs,
    )
    cache = RunCache()

    t0 = time.time()
    err = wkb_error_study(cfg, cache)
    small = small_time_study(cfg, cache)
    print(f"studies finished in {time.time() - t0:.1f}s\n")

    for rep in (err, small):
        for sl in rep.slopes:
            lo, hi = BANDS[sl["family"]]
            ok = "ok " if lo <= sl["slope"] <= hi else "OUT"
            print(
                f"  {sl['family']:<26} s={sl['s']:g}: slope {sl['slope']:.3f} "
                f"[{lo}, {hi}] {ok}  (max residual {sl['max_resid']:.3f})"
            )

    args.out.mkdir(parents=True, exist_ok=True)
    write_study_csv(err, args.out / "wkb_error_study.csv")
    write_study_csv(small, args.out / "smalltime_study.csv")
    write_summary_json([err, small], args.out / "summary.json")
    print(f"\nwrote results under {args.out}")


if __name__ == "__main__":
    main()
