"""Histogram envelopes and the average shape of integer peaks.

Builds the voter-weighted turnout histogram of a tainted election,
wraps it in a Monte Carlo percentile envelope, lists the integer bins
that poke above the envelope, and averages the excess around all 99
integer percentages into one peak profile.
"""

import argparse

import numpy as np

from pollheap.histograms import (
    WeightedHistogram,
    build_histogram,
    envelope_from_matrix,
    mc_histograms,
    peak_shape,
)
from pollheap.synth import FraudSpec, GeneratorConfig, generate, inject_fraud


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--stations", type=int, default=20_000)
    ap.add_argument("--iterations", type=int, default=200)
    ap.add_argument("--seed", type=int, default=23)
    args = ap.parse_args()

    clean = generate(GeneratorConfig(n_stations=args.stations, n_regions=5),
                     seed=args.seed).dataset
    tainted, _ = inject_fraud(clean, FraudSpec("integer_rounding", 0.03),
                              seed=args.seed + 1)

    hist = build_histogram(tainted, "turnout")
    matrix = mc_histograms(tainted, "turnout", "binomial",
                           args.iterations, master_seed=args.seed + 2)
    env = envelope_from_matrix(matrix, "turnout", hist.bin_width)

    centers = hist.bin_centers
    above = np.flatnonzero(hist.weights > env.high)
    # report only breakouts sitting on integer percentages
    integer_bins = above[np.isclose(centers[above] % 1.0, 0.0)]
    print(f"bins above the {env.levels[1]:.1f}th percentile at integer positions:")
    for idx in integer_bins:
        print(f"  {centers[idx]:5.1f}%  weight {hist.weights[idx]:>10.0f}"
              f"  envelope high {env.high[idx]:>10.0f}")

    mc_mean = WeightedHistogram("turnout", hist.bin_width, env.mean)
    shape = peak_shape(hist, mc_mean)
    print(f"\naverage excess around integers ({shape.intervals} windows):")
    for off, exc in zip(shape.offsets, shape.mean_excess):
        bar = "#" * max(0, int(round(exc / max(shape.mean_excess.max(), 1) * 40)))
        print(f"  {off:+5.2f}  {exc:>9.1f}  {bar}")


if __name__ == "__main__":
    main()
