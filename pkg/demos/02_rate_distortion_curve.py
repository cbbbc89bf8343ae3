"""Rate-distortion curves for binary sources under Hamming distortion.

The solver works on any finite source/distortion pair; for a Bernoulli
source with Hamming distortion the curve has the closed form
R(D) = h(q) - h(D) for D < min(q, 1-q), which the table reproduces.
"""

import math

from vlfjscc import Pmf, hamming_distortion, rate_distortion, rd_curve


def h(x: float) -> float:
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log(x) - (1 - x) * math.log(1 - x)


print(__doc__)

d = hamming_distortion(2)

for q in (0.5, 0.3):
    source = Pmf([1 - q, q])
    print(f"Bernoulli({q}) source")
    print(f"  {'D':>6} {'R(D) solver':>14} {'R(D) closed':>14} {'slope':>10}")
    for D in (0.0, 0.05, 0.1, 0.2, 0.25):
        if D >= min(q, 1 - q):
            closed = 0.0
        else:
            closed = h(q) - h(D)
        point = rate_distortion(source, d, D)
        print(f"  {D:>6.2f} {point.R:>14.8f} {closed:>14.8f}"
              f" {point.lagrange_slope:>10.4f}")
    print()

print("Convexity along a grid (rate differences must be nonincreasing):")
Ds = [0.02 * k for k in range(0, 13)]
curve = rd_curve(Pmf([0.5, 0.5]), d, Ds)
rates = [pt.R for pt in curve]
diffs = [rates[i] - rates[i + 1] for i in range(len(rates) - 1)]
print("  drops:", " ".join(f"{x:.4f}" for x in diffs))
print("  nonincreasing:", all(diffs[i] >= diffs[i + 1] - 1e-9
                              for i in range(len(diffs) - 1)))
