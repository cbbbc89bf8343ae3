"""Finite-alphabet probability primitives and distortion geometry.

Distributions, channel matrices, information measures (all in nats), the
channel parameter triple (B, lambda, C), per-letter distortion, and
distortion balls over word alphabets.

Conventions used throughout: natural logarithms, 0 * log 0 = 0, and
alpha / 0 = +inf for alpha >= 0.  Probabilities below ``ZERO_CLIP`` are
treated as exact zeros before any divergence is computed, so support
decisions are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Entries below this are considered exact zeros for support purposes.
ZERO_CLIP = 1e-15

# Hard ceiling for explicit word enumeration (|V| ** N).
MAX_BALL_WORDS = 2 ** 24


def _as_clipped(probs: np.ndarray) -> np.ndarray:
    out = probs.copy()
    out[out < ZERO_CLIP] = 0.0
    return out


@dataclass(frozen=True)
class Pmf:
    """Probability mass function over {0, ..., k-1}.

    Input weights are normalized once; construction fails on negative
    entries or an all-zero vector.
    """

    probs: np.ndarray

    def __init__(self, probs) -> None:
        arr = np.asarray(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("pmf needs a non-empty 1-d weight vector")
        if np.any(arr < 0):
            raise ValueError("pmf weights must be nonnegative")
        total = float(arr.sum())
        if not math.isfinite(total) or total <= 0:
            raise ValueError("pmf weights must have a positive finite sum")
        arr = arr / total
        if abs(float(arr.sum()) - 1.0) > 1e-12:
            raise ValueError("pmf normalization failed")
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    def __len__(self) -> int:
        return int(self.probs.size)

    @property
    def alphabet_size(self) -> int:
        return len(self)


@dataclass(frozen=True)
class ChannelMatrix:
    """Row-stochastic transition matrix W(y|x), one row per input."""

    matrix: np.ndarray

    def __init__(self, rows) -> None:
        arr = np.asarray(rows, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("channel needs a non-empty 2-d matrix")
        rows_norm = [Pmf(r).probs for r in arr]
        arr = np.vstack(rows_norm)
        arr.flags.writeable = False
        object.__setattr__(self, "matrix", arr)

    @property
    def num_inputs(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def num_outputs(self) -> int:
        return int(self.matrix.shape[1])

    def row(self, x: int) -> Pmf:
        return Pmf(self.matrix[x])


@dataclass(frozen=True)
class DistortionMatrix:
    """Single-letter distortion d(v, vhat) >= 0 with finite entries."""

    matrix: np.ndarray

    def __init__(self, entries) -> None:
        arr = np.asarray(entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.size == 0:
            raise ValueError("distortion needs a square matrix")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("distortion entries must be finite and nonnegative")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "matrix", arr)

    @property
    def alphabet_size(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def d_max(self) -> float:
        return float(self.matrix.max())


def hamming_distortion(alphabet_size: int) -> DistortionMatrix:
    """0/1 distortion: 0 on the diagonal, 1 off it."""
    return DistortionMatrix(1.0 - np.eye(alphabet_size))


@dataclass(frozen=True)
class ChannelParams:
    """Derived channel quantities, all in nats.

    B: largest relative entropy between two transition rows (may be +inf).
    lam: smallest transition probability (support-clipped).
    C: channel capacity, with caid the maximizing input distribution.
    (x0, x0_prime): lexicographically first ordered input pair achieving B.
    B_reverse: relative entropy of the pair in the opposite direction.
    """

    B: float
    lam: float
    C: float
    caid: Pmf
    x0: int
    x0_prime: int
    B_reverse: float


def entropy(p: Pmf) -> float:
    """Shannon entropy in nats."""
    probs = _as_clipped(p.probs)
    mask = probs > 0
    return float(-(probs[mask] * np.log(probs[mask])).sum())


def binary_entropy(x: float) -> float:
    """Entropy of a Bernoulli(x), in nats.  Raises outside [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy argument {x!r} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return float(-x * math.log(x) - (1.0 - x) * math.log(1.0 - x))


def kl_divergence(p: Pmf, q: Pmf) -> float:
    """Relative entropy D(p || q) in nats; +inf on support escape."""
    if len(p) != len(q):
        raise ValueError("kl_divergence needs matching alphabets")
    pp = _as_clipped(p.probs)
    qq = _as_clipped(q.probs)
    mask = pp > 0
    if np.any(qq[mask] == 0.0):
        return math.inf
    return float((pp[mask] * np.log(pp[mask] / qq[mask])).sum())


def mutual_information(px: Pmf, W: ChannelMatrix) -> float:
    """I(X; Y) for input distribution px over channel W, in nats."""
    if len(px) != W.num_inputs:
        raise ValueError("input pmf does not match channel input alphabet")
    total = 0.0
    qy = Pmf(px.probs @ W.matrix)
    for x in range(W.num_inputs):
        if px.probs[x] == 0.0:
            continue
        total += float(px.probs[x]) * kl_divergence(W.row(x), qy)
    return max(total, 0.0)


def channel_params(W: ChannelMatrix, capacity_tol: float = 1e-9) -> ChannelParams:
    """Compute the (B, lambda, C) triple plus the B-achieving input pair.

    Raises if the channel has dead output columns or a degenerate output
    alphabet while B is finite (lambda must land in (0, 1/2] then).
    """
    from .numerics import capacity  # local import to avoid a cycle

    clipped = _as_clipped(W.matrix)
    lam = float(clipped.min())

    nx = W.num_inputs
    best = -1.0
    pair = (0, 0)
    if nx >= 2:
        pair = (0, 1)
        for x in range(nx):
            for xp in range(nx):
                if x == xp:
                    continue
                val = kl_divergence(W.row(x), W.row(xp))
                if val > best:
                    best = val
                    pair = (x, xp)
        B = best
    else:
        B = 0.0
    B_rev = kl_divergence(W.row(pair[1]), W.row(pair[0])) if nx >= 2 else 0.0

    C, caid = capacity(W, tol=capacity_tol)

    if math.isfinite(B) and not (0.0 < lam <= 0.5):
        raise ValueError(
            "channel has finite B but lambda outside (0, 1/2]; "
            "drop dead output columns or degenerate outputs first"
        )
    if B < C - 1e-6:
        raise ValueError("internal inconsistency: B < C beyond solver tolerance")
    return ChannelParams(B=B, lam=lam, C=C, caid=caid,
                         x0=pair[0], x0_prime=pair[1], B_reverse=B_rev)


def distortion(d: DistortionMatrix, v, vhat) -> float:
    """Per-letter average distortion between two equal-length words."""
    a = np.asarray(v, dtype=np.int64)
    b = np.asarray(vhat, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("words must be non-empty and of equal length")
    return float(d.matrix[a, b].mean())


def enumerate_words(base: int, length: int) -> np.ndarray:
    """All words of the given length, lexicographic, shape (base**length, length).

    The first letter is the most significant digit, so row index k encodes
    the word with digits of k in base ``base``.
    """
    count = base ** length
    if count > MAX_BALL_WORDS:
        raise ValueError(f"word space {base}**{length} exceeds enumeration guard")
    idx = np.arange(count)
    cols = []
    for pos in range(length - 1, -1, -1):
        cols.append((idx // (base ** pos)) % base)
    return np.stack(cols, axis=1).astype(np.int8)


def word_index(word, base: int) -> int:
    """Lexicographic rank of a word (inverse of enumerate_words rows)."""
    out = 0
    for letter in word:
        out = out * base + int(letter)
    return out


def pairwise_distortion(d: DistortionMatrix, words_a: np.ndarray,
                        words_b: np.ndarray) -> np.ndarray:
    """Matrix of per-letter distortions between two word lists."""
    a = np.asarray(words_a, dtype=np.int64)
    b = np.asarray(words_b, dtype=np.int64)
    n = a.shape[1]
    out = np.zeros((a.shape[0], b.shape[0]))
    for pos in range(n):
        out += d.matrix[a[:, pos][:, None], b[:, pos][None, :]]
    return out / n


def distortion_ball(d: DistortionMatrix, v, D: float) -> np.ndarray:
    """All words within average distortion D of v, in lexicographic order."""
    if D < 0:
        raise ValueError("distortion radius must be nonnegative")
    center = np.asarray(v, dtype=np.int64)
    base = d.alphabet_size
    words = enumerate_words(base, center.size)
    dist = pairwise_distortion(d, center[None, :], words)[0]
    return words[dist <= D]
