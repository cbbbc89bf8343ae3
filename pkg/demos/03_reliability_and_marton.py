"""The reliability ceiling E*(D) and the fixed-length comparison point.

E*(D) = B (1 - R(D)/C) is the best possible decay rate of the excess
distortion probability per expected channel use when feedback and
variable length are allowed.  The Marton exponent plays the same role
for fixed-length codes without feedback; at rates just above R(D) it is
dramatically smaller, which is the whole case for variable length.
"""

import math

from vlfjscc import (
    ChannelMatrix,
    Pmf,
    channel_params,
    hamming_distortion,
    marton_exponent,
    rate_distortion,
    reliability_from_parts,
    reliability_function,
)

print(__doc__)

W = ChannelMatrix([[0.9, 0.1], [0.1, 0.9]])
uniform = Pmf([0.5, 0.5])
skewed = Pmf([0.75, 0.25])
d = hamming_distortion(2)

params = channel_params(W)
point = rate_distortion(uniform, d, 0.2)
e_star = reliability_from_parts(params.B, params.C, point.R)
print("BSC(0.1), uniform source, D = 0.2:")
print(f"  B = {params.B:.6f}, C = {params.C:.6f}, R(D) = {point.R:.6f}")
print(f"  E*(D) = B (1 - R/C) = {e_star:.6f}")
print(f"  one-call form: {reliability_function(uniform, W, d, 0.2):.6f}")
print()

print("E*(D) across distortion budgets (uniform source):")
for D in (0.0, 0.1, 0.2, 0.3, 0.45):
    print(f"  D = {D:4.2f}: E* = {reliability_function(uniform, W, d, D):.6f}")
print("  (D = 0 gives 0: R(0) = ln 2 exceeds C, the trivial regime;")
print("   large D sends R(D) to 0 and E* climbs to B.)")
print()

print("Fixed-length comparison at R = R(D) + 0.08, skewed source, D = 0.05:")
pt = rate_distortion(skewed, d, 0.05)
m = marton_exponent(skewed, pt.R + 0.08, 0.05, d=d)
print(f"  R(D) = {pt.R:.6f}, Marton exponent = {m:.6f}")
print(f"  versus E*(D) = {reliability_function(skewed, W, d, 0.05):.6f}")
print()
print("For the uniform source the Marton exponent is infinite just above")
print("R(D): no other binary source law has a larger rate, so the excess")
print("event cannot happen at all for a good fixed-length code:")
mu = marton_exponent(uniform, point.R + 0.08, 0.2, d=d)
print(f"  marton(uniform, R(0.2) + 0.08, 0.2) = {mu}")
