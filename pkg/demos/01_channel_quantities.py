"""Closed-form channel quantities for a few small channels.

For each channel this prints the zero-rate control exponent B (the best
log-likelihood separation per symbol between two inputs), the posterior
contraction floor lambda, the capacity C with its achieving input law,
and the input pair the control phase will use.
"""

import math

from vlfjscc import ChannelMatrix, channel_params


def show(name: str, W: ChannelMatrix) -> None:
    p = channel_params(W)
    caid = " ".join(f"{x:.4f}" for x in p.caid.probs)
    print(f"{name}")
    print(f"  B        = {p.B:.6f}")
    print(f"  lambda   = {p.lam:.6f}")
    print(f"  C        = {p.C:.6f} nats ({p.C / math.log(2):.6f} bits)")
    print(f"  caid     = [{caid}]")
    print(f"  pair     = ({p.x0}, {p.x0_prime}), reverse B = {p.B_reverse:.6f}")
    print()


print(__doc__)

show("BSC(0.1)", ChannelMatrix([[0.9, 0.1], [0.1, 0.9]]))
print("  check: B = (1-2p) ln((1-p)/p) =", f"{0.8 * math.log(9):.6f},",
      "C = ln 2 - h(0.1)")
print()

show("BSC(0.2)", ChannelMatrix([[0.8, 0.2], [0.2, 0.8]]))

show("binary erasure, rate 0.3",
     ChannelMatrix([[0.7, 0.0, 0.3], [0.0, 0.7, 0.3]]))
print("  check: C = 0.7 ln 2 =", f"{0.7 * math.log(2):.6f}")
print()

show("noiseless binary", ChannelMatrix([[1.0, 0.0], [0.0, 1.0]]))
print("  note: disjoint output supports make B infinite; one clean symbol")
print("  resolves the control phase, and lambda = 0 means no contraction")
print("  floor (the posterior can collapse to a point).")
print()

show("useless (identical rows)", ChannelMatrix([[0.6, 0.4], [0.6, 0.4]]))
print("  note: B = C = 0; no control code can exist and the two-phase")
print("  construction refuses to build one for this channel.")
