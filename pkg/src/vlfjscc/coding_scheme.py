"""Construction of the two-phase coding block.

One transmission block of N channel uses splits into a message phase of
``msg_len`` symbols and a control phase of ``ctrl_len`` symbols.  The
pieces built here: a random-covering source code at rate R(D) + 2*eps,
an i.i.d. capacity-achieving channel codebook with ML decoding for the
message phase, a two-word repetition code with a log-likelihood-ratio
threshold test for the control phase, and the phase-split fraction gamma
that makes the message rate land strictly below capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import rate_distortion
from .probability import (
    ChannelMatrix,
    ChannelParams,
    DistortionMatrix,
    Pmf,
    distortion,
    pairwise_distortion,
)

# Source index guard: M may not exceed this (memory predictability).
MAX_MESSAGES = 2 ** 20


@dataclass(frozen=True)
class SourceCodebook:
    """Random-covering source code with a failure sink at index 1.

    Indices run over {1..M}.  Words not covered by any reproduction map
    to index 1, so index 1 doubles as the covering-failure sink.  The
    codebook carries its distortion measure so encoding is self-contained.
    """

    N: int
    M: int
    reproductions: np.ndarray
    D: float
    d: DistortionMatrix

    def __post_init__(self):
        reps = np.asarray(self.reproductions)
        if reps.shape != (self.M, self.N):
            raise ValueError("reproduction table must be M x N")
        reps = reps.copy()
        reps.flags.writeable = False
        object.__setattr__(self, "reproductions", reps)


def build_source_code(P_V: Pmf, d: DistortionMatrix, D: float,
                      epsilon: float, N: int,
                      rng: np.random.Generator) -> SourceCodebook:
    """Draw M = ceil(exp(N(R(D)+2*eps))) reproductions i.i.d.

    Reproduction letters follow the output marginal of the optimal
    rate-distortion test channel, the distribution under which random
    covering succeeds at any rate above R(D).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    point = rate_distortion(P_V, d, D)
    M = math.ceil(math.exp(N * (point.R + 2.0 * epsilon)))
    if M > MAX_MESSAGES:
        raise ValueError(f"source codebook size {M} exceeds guard {MAX_MESSAGES}")
    marginal = point.output_marginal(P_V)
    reps = rng.choice(len(marginal), size=(M, N), p=marginal.probs)
    return SourceCodebook(N=N, M=M, reproductions=reps, D=D, d=d)


def source_encode(cb: SourceCodebook, v) -> int:
    """Smallest index whose reproduction is within D of v, else 1."""
    v = tuple(int(s) for s in v)
    for m in range(cb.M):
        if distortion(cb.d, v, cb.reproductions[m]) <= cb.D:
            return m + 1
    return 1


def source_decode(cb: SourceCodebook, index: int) -> tuple:
    """Reproduction word for a 1-based index."""
    if not 1 <= index <= cb.M:
        raise ValueError(f"index {index} outside 1..{cb.M}")
    return tuple(int(v) for v in cb.reproductions[index - 1])


def source_encode_batch(cb: SourceCodebook, v_batch: np.ndarray) -> np.ndarray:
    """Vectorized first-cover encoding of a batch of source words."""
    dists = pairwise_distortion(cb.d, v_batch, cb.reproductions)
    covered = dists <= cb.D
    idx = covered.argmax(axis=1).astype(np.int64) + 1
    idx[~covered.any(axis=1)] = 1
    return idx


@dataclass(frozen=True)
class ChannelCodebook:
    """Random channel code: M codewords of fixed length."""

    M: int
    length: int
    codewords: np.ndarray

    def __post_init__(self):
        cw = np.asarray(self.codewords)
        if cw.shape != (self.M, self.length):
            raise ValueError("codeword table must be M x length")
        cw = cw.copy()
        cw.flags.writeable = False
        object.__setattr__(self, "codewords", cw)


def build_channel_codebook(caid: Pmf, length: int, M: int,
                           rng: np.random.Generator) -> ChannelCodebook:
    """Every symbol i.i.d. from the capacity-achieving input distribution."""
    if M < 1:
        raise ValueError("need at least one message")
    cw = rng.choice(len(caid), size=(M, length), p=caid.probs)
    return ChannelCodebook(M=M, length=length, codewords=cw)


def ml_channel_decode(cb: ChannelCodebook, y, W: ChannelMatrix) -> int:
    """Maximum-likelihood message (1-based); ties go to the smallest index."""
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (cb.length,):
        raise ValueError("output word length does not match the codebook")
    with np.errstate(divide="ignore"):
        logw = np.log(W.matrix)
    scores = logw[cb.codewords, y[np.newaxis, :]].sum(axis=1)
    return int(np.argmax(scores)) + 1


@dataclass(frozen=True)
class ControlCode:
    """Two repetition codewords and an LLR threshold.

    x_c repeats the divergence-maximizing input x0, x_e its partner
    x0prime.  The decoder accepts (decides c) when the summed LLR
    ln(W(y|x0)/W(y|x0prime)) reaches llr_threshold.
    """

    length: int
    x_c: np.ndarray
    x_e: np.ndarray
    llr_threshold: float

    def __post_init__(self):
        for name in ("x_c", "x_e"):
            arr = np.asarray(getattr(self, name))
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def symbol_llr(W: ChannelMatrix, x0: int, x0_prime: int) -> np.ndarray:
    """Per-output LLR ln(W(y|x0)/W(y|x0prime)); equal entries give 0."""
    p = W.matrix[x0]
    q = W.matrix[x0_prime]
    llr = np.empty(W.num_outputs)
    for i in range(W.num_outputs):
        if p[i] == q[i]:
            llr[i] = 0.0
        elif q[i] == 0.0:
            llr[i] = math.inf
        elif p[i] == 0.0:
            llr[i] = -math.inf
        else:
            llr[i] = math.log(p[i] / q[i])
    return llr


def build_control_code(params: ChannelParams, m: int,
                       delta_ctrl: float) -> ControlCode:
    """Repetition control code of length m with threshold m*(B - delta_ctrl).

    The threshold sits delta_ctrl below the LLR mean under c and above
    the mean under e whenever delta_ctrl < B + B_reverse, so both
    crossover exponents stay positive.  With B infinite the supports of
    the two rows separate and the sign of the LLR sum already decides,
    so the threshold degenerates to 0.
    """
    if m < 1:
        raise ValueError("control phase needs at least one symbol")
    if params.B <= 0.0:
        raise ValueError(
            "chosen control inputs are indistinguishable (B = 0): "
            "the control phase cannot signal")
    if math.isfinite(params.B):
        if not 0.0 < delta_ctrl < params.B + params.B_reverse:
            raise ValueError(
                "delta_ctrl must lie strictly between 0 and B + B_reverse")
        threshold = m * (params.B - delta_ctrl)
    else:
        if delta_ctrl <= 0.0:
            raise ValueError("delta_ctrl must be positive")
        threshold = 0.0
    x_c = np.full(m, params.x0, dtype=np.int64)
    x_e = np.full(m, params.x0_prime, dtype=np.int64)
    return ControlCode(length=m, x_c=x_c, x_e=x_e, llr_threshold=threshold)


def control_decode(ctrl: ControlCode, y, W: ChannelMatrix) -> str:
    """Threshold test on the control block: returns 'c' or 'e'."""
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (ctrl.length,):
        raise ValueError("control block length mismatch")
    llr = symbol_llr(W, int(ctrl.x_c[0]), int(ctrl.x_e[0]))
    terms = llr[y]
    pos = np.isposinf(terms).any()
    neg = np.isneginf(terms).any()
    if pos and not neg:
        return "c"
    if neg:
        return "e"
    return "c" if float(terms.sum()) >= ctrl.llr_threshold else "e"


def control_decode_batch(ctrl: ControlCode, y_batch: np.ndarray,
                         W: ChannelMatrix) -> np.ndarray:
    """Vectorized threshold test; True where the decision is c."""
    llr = symbol_llr(W, int(ctrl.x_c[0]), int(ctrl.x_e[0]))
    terms = llr[y_batch]
    pos = np.isposinf(terms).any(axis=1)
    neg = np.isneginf(terms).any(axis=1)
    finite = np.where(np.isfinite(terms), terms, 0.0)
    is_c = finite.sum(axis=1) >= ctrl.llr_threshold
    is_c[pos & ~neg] = True
    is_c[neg] = False
    return is_c


def derive_gamma(R_D: float, epsilon: float, C: float) -> float:
    """Canonical phase split gamma = (R(D) + 3*eps) / C."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if C <= 0:
        raise ValueError("capacity must be positive")
    if R_D + 3.0 * epsilon >= C:
        raise ValueError(
            "R(D) + 3*epsilon >= C: the reliability exponent is 0 in this "
            "regime and the canonical phase split is undefined")
    return (R_D + 3.0 * epsilon) / C


@dataclass(frozen=True)
class SchemeConfig:
    """Resolved per-block parameters of the two-phase scheme."""

    N: int
    epsilon: float
    gamma: float
    delta_ctrl: float
    M: int
    msg_len: int
    ctrl_len: int
    R_D: float
    C: float
    master_seed: int

    @classmethod
    def derive(cls, N: int, epsilon: float, delta_ctrl: float, R_D: float,
               C: float, master_seed: int = 0) -> "SchemeConfig":
        """Resolve gamma and the integer phase lengths for block length N.

        Uses the canonical split when R(D) + 3*eps < C.  Otherwise, as
        long as the message rate can still clear capacity with margin
        (R(D) + 2*eps < C), gamma falls back to the midpoint of the
        feasible interval ((R(D)+2*eps)/C, 1).
        """
        try:
            gamma = derive_gamma(R_D, epsilon, C)
        except ValueError:
            if R_D + 2.0 * epsilon >= C:
                raise
            gamma = 0.5 * ((R_D + 2.0 * epsilon) / C + 1.0)
        if not (R_D + 2.0 * epsilon) / gamma < C:
            raise ValueError("message-phase rate does not clear capacity")
        msg_len = int(math.floor(gamma * N + 1e-9))
        ctrl_len = N - msg_len
        if msg_len < 1:
            raise ValueError("gamma*N rounds below one message symbol")
        if ctrl_len < 1:
            raise ValueError("no room left for the control phase")
        M = math.ceil(math.exp(N * (R_D + 2.0 * epsilon)))
        if M > MAX_MESSAGES:
            raise ValueError(f"message count {M} exceeds guard {MAX_MESSAGES}")
        return cls(N=N, epsilon=epsilon, gamma=gamma, delta_ctrl=delta_ctrl,
                   M=M, msg_len=msg_len, ctrl_len=ctrl_len, R_D=R_D, C=C,
                   master_seed=master_seed)
