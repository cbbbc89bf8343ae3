"""Expected-delay lower bound for a target excess probability.

No scheme, however clever, can decide faster than the posterior tail
allows: to push the excess probability below Pd the expected delay must
be at least N R(D)/C (source description) plus -ln(Pd)/B (the channel
must actually distinguish confirm from reject), inflated by 1/(1-d_N)
where d_N shrinks as Pd does.  The bound only binds when Pd is small
enough that d_N < 1; for this channel (lambda = 0.1) that means
Pd below exp(-1/lambda) ~ 4.5e-5.
"""

from vlfjscc import (
    ChannelMatrix,
    Pmf,
    converse_delay_bound,
    hamming_distortion,
)

print(__doc__)

W = ChannelMatrix([[0.9, 0.1], [0.1, 0.9]])
uniform = Pmf([0.5, 0.5])
d = hamming_distortion(2)

print(f"{'Pd target':>12} {'delta_N':>10} {'E[tau] lower':>13} "
      f"{'exponent cap':>13}")
for pd in (1e-5, 1e-6, 1e-8, 1e-12):
    b = converse_delay_bound(uniform, W, d, 0.2, pd, N=200)
    print(f"{pd:>12.0e} {b.delta_N:>10.6f} {b.Etau_lower:>13.6f} "
          f"{b.exponent_upper:>13.6f}")

print()
print("Tighter targets inflate the channel term -ln(Pd)/B and shrink")
print("delta_N, so the bound grows without limit as Pd -> 0.")
print()

try:
    converse_delay_bound(uniform, W, d, 0.2, 1e-2, N=200)
except ValueError as exc:
    print("A loose target makes the bound vacuous and is rejected:")
    print(f"  Pd = 1e-2 -> {exc}")
print()

noiseless = ChannelMatrix([[1.0, 0.0], [0.0, 1.0]])
b = converse_delay_bound(uniform, noiseless, d, 0.2, 1e-9, N=100)
print("On a noiseless channel B is infinite and the channel terms vanish;")
print("only the source description time remains:")
print(f"  E[tau] >= {b.Etau_lower:.6f} = (1 - delta_N) N R(D)/C "
      f"with delta_N = {b.delta_N:.6f}")
