"""Controls that separate real heaping from statistical accidents.

Three checks on the same tainted election:

  * half-integer windows, which rounding fraud should NOT light up,
  * trailing-zero exclusion, which distinguishes percentage heaping
    from plain count rounding,
  * a window sweep, whose z-scores should shrink as the window widens
    and hit exactly zero at half width 0.5 (every station is inside).
"""

import argparse
from fractions import Fraction

from pollheap.anomaly import StatisticDef, WindowSpec, run_nulls, window_sweep
from pollheap.synth import FraudSpec, GeneratorConfig, generate, inject_fraud


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--stations", type=int, default=20_000)
    ap.add_argument("--iterations", type=int, default=300)
    ap.add_argument("--seed", type=int, default=17)
    args = ap.parse_args()

    clean = generate(GeneratorConfig(n_stations=args.stations, n_regions=5),
                     seed=args.seed).dataset
    tainted, _ = inject_fraud(clean, FraudSpec("integer_rounding", 0.02),
                              seed=args.seed + 1)

    defs = [
        (StatisticDef(), WindowSpec()),
        (StatisticDef(), WindowSpec(center_kind="half_integer")),
        (StatisticDef(zero_exclusion=True), WindowSpec()),
    ]
    names = ("integer windows", "half-integer control", "trailing-zero excluded")
    reports = run_nulls(tainted, defs, "binomial", args.iterations,
                        master_seed=args.seed + 2)
    for name, report in zip(names, reports):
        print(f"{name:>24}:  q = {report.empirical:>8.0f}   z = {report.z_score:+6.2f}"
              f"   p = {report.p_value_text()}")

    print("\nwindow sweep on the tainted data:")
    widths = [Fraction(1, 20), Fraction(1, 10), Fraction(3, 20),
              Fraction(3, 10), Fraction(1, 2)]
    for report in window_sweep(tainted, StatisticDef(), "binomial",
                               args.iterations, master_seed=args.seed + 3,
                               half_widths=widths):
        hw = report.window.half_width
        print(f"  half width {str(hw):>5}:  z = {report.z_score:+6.2f}")


if __name__ == "__main__":
    main()
