"""Fourier view of percentage heaping.

Mass piled on every integer percentage is a comb with 1% spacing, so
its amplitude spectrum shows harmonics at 1, 2, .. cycles per percent.
The sliding-window spectrogram then localizes WHERE on the 0..100%
scale the comb lives, via the ratio of empirical to simulated
amplitude at the 1 cycle-per-percent line.
"""

import argparse

import numpy as np

from pollheap.histograms import build_histogram, mc_histograms
from pollheap.spectral import amplitude_spectrum, harmonic_profile, spectrogram
from pollheap.synth import FraudSpec, GeneratorConfig, generate, inject_fraud


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--stations", type=int, default=20_000)
    ap.add_argument("--iterations", type=int, default=150)
    ap.add_argument("--seed", type=int, default=29)
    args = ap.parse_args()

    clean = generate(GeneratorConfig(n_stations=args.stations, n_regions=5),
                     seed=args.seed).dataset
    tainted, _ = inject_fraud(clean, FraudSpec("integer_rounding", 0.05),
                              seed=args.seed + 1)

    hist = build_histogram(tainted, "turnout")
    spec = amplitude_spectrum(hist)
    # frequencies below 0.15 carry the histogram's broad shape, not
    # heaping; rank only the band where combs can live
    band = spec.frequencies >= 0.15
    idx_band = np.flatnonzero(band)
    order = idx_band[np.argsort(spec.amplitudes[band])[::-1][:5]]
    print("strongest spectral lines above 0.15 cycles per percent:")
    for idx in order:
        print(f"  f = {spec.frequencies[idx]:4.2f}   amplitude {spec.amplitudes[idx]:>12.1f}")

    matrix = mc_histograms(tainted, "turnout", "binomial",
                           args.iterations, master_seed=args.seed + 2)
    gram = spectrogram(hist, matrix)
    profile = harmonic_profile(gram, frequency=1.0)
    finite = np.isfinite(profile.values)
    print(f"\n1 cycle-per-percent ratio along the scale "
          f"({np.count_nonzero(finite)} defined windows):")
    for lo in range(10, 100, 10):
        sel = finite & (profile.centers >= lo) & (profile.centers < lo + 10)
        if not sel.any():
            continue
        level = float(np.median(profile.values[sel]))
        print(f"  {lo:2d}..{lo + 10:<3d}%  median ratio {level:6.2f}  "
              + "#" * int(round(min(level, 40.0) * 2)))


if __name__ == "__main__":
    main()
