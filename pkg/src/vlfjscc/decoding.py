"""Posterior tracking over source words and distortion-ball MAP decoding.

The decoder side of the converse machinery: exact sequential posteriors
P(v | y^n) for causal encoders with feedback, the decision rule that
maximizes posterior mass of the distortion ball around a candidate word,
brute-force certification that no other rule beats it, and threshold
stopping times on posterior trajectories.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .probability import (
    ChannelMatrix,
    DistortionMatrix,
    Pmf,
    distortion,
    enumerate_words,
    pairwise_distortion,
    word_index,
)

# Dense posterior size guard (weights vector length |V| ** N).
MAX_POSTERIOR_WORDS = 2 ** 22
# Certification instance guard (|V|**N * |Y|**n).
MAX_CERTIFY_CELLS = 2 ** 22


@dataclass(frozen=True)
class Posterior:
    """Distribution over all length-N source words, stored densely.

    weights[k] is the probability of the word whose lexicographic rank is
    k (see enumerate_words for the ordering).
    """

    base: int
    length: int
    weights: np.ndarray

    def __init__(self, base: int, length: int, weights) -> None:
        size = base ** length
        if size > MAX_POSTERIOR_WORDS:
            raise ValueError("posterior support exceeds the dense-storage guard")
        arr = np.asarray(weights, dtype=np.float64)
        if arr.shape != (size,):
            raise ValueError("weight vector does not match |V|**N")
        if abs(float(arr.sum()) - 1.0) > 1e-9:
            raise ValueError("posterior weights must sum to 1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "length", length)
        object.__setattr__(self, "weights", arr)

    @classmethod
    def from_prior(cls, P_V: Pmf, length: int) -> "Posterior":
        """Product measure P_V^N in lexicographic order."""
        w = np.ones(1)
        for _ in range(length):
            w = np.kron(w, P_V.probs)
        return cls(len(P_V), length, w)

    def prob(self, word) -> float:
        return float(self.weights[word_index(word, self.base)])


class EncoderMap:
    """Causal encoding rule: (step, source word, output history) -> input.

    An encoder is tied to words of one fixed length; it wraps a
    deterministic function and must be total over every history it is
    queried with.  Steps count from 0 and ``history`` is the tuple of
    outputs seen so far.
    """

    def __init__(self, fn, num_inputs: int, word_length: int):
        self._fn = fn
        self.num_inputs = int(num_inputs)
        self.word_length = int(word_length)

    def __call__(self, step: int, word, history) -> int:
        word = tuple(int(v) for v in word)
        if len(word) != self.word_length:
            raise ValueError("word length does not match this encoder")
        x = int(self._fn(step, word, tuple(history)))
        if not 0 <= x < self.num_inputs:
            raise ValueError(f"encoder produced input {x} outside the alphabet")
        return x

    @classmethod
    def letter_cycle(cls, num_inputs: int, word_length: int) -> "EncoderMap":
        """Send the word's letters in order, cycling past the end."""
        def fn(step, word, history):
            return word[step % len(word)]
        return cls(fn, num_inputs, word_length)

    @classmethod
    def random_table(cls, base: int, word_length: int, num_inputs: int,
                     rng: np.random.Generator, step_period: int = 8,
                     history_classes: int = 4) -> "EncoderMap":
        """Seeded pseudo-random causal encoder.

        History enters through the sum of past outputs modulo a small
        class count, so the rule is history-dependent yet stays total on
        arbitrarily long histories.
        """
        table = rng.integers(
            0, num_inputs,
            size=(step_period, base ** word_length, history_classes))

        def fn(step, word, history):
            h = sum(history) % history_classes
            return int(table[step % step_period, word_index(word, base), h])
        return cls(fn, num_inputs, word_length)

    def inputs_for_words(self, step: int, words: np.ndarray, history) -> np.ndarray:
        """Channel input for every word row at one step (python loop)."""
        hist = tuple(history)
        return np.array([self(step, tuple(w), hist) for w in words], dtype=np.int64)


def posterior_update(prior: Posterior, enc: EncoderMap, step: int, history,
                     y: int, W: ChannelMatrix) -> Posterior:
    """One Bayes step: reweight by W(y | enc(step, v, history))."""
    words = enumerate_words(prior.base, prior.length)
    x = enc.inputs_for_words(step, words, history)
    lik = W.matrix[x, int(y)]
    w = prior.weights * lik
    total = float(w.sum())
    if total <= 0.0:
        raise ValueError("observed output has zero probability under every word")
    return Posterior(prior.base, prior.length, w / total)


def sequential_posterior(P_V: Pmf, enc: EncoderMap, yn,
                         W: ChannelMatrix) -> Posterior:
    """Posterior after observing the full output word yn (may be empty)."""
    post = Posterior.from_prior(P_V, enc.word_length)
    history: list[int] = []
    for step, y in enumerate(yn):
        post = posterior_update(post, enc, step, history, int(y), W)
        history.append(int(y))
    return post


def posterior_trajectory(P_V: Pmf, enc: EncoderMap, yn,
                         W: ChannelMatrix) -> list[Posterior]:
    """Posterior after each prefix of yn; entry 0 is the prior."""
    post = Posterior.from_prior(P_V, enc.word_length)
    out = [post]
    history: list[int] = []
    for step, y in enumerate(yn):
        post = posterior_update(post, enc, step, history, int(y), W)
        out.append(post)
        history.append(int(y))
    return out


def _ball_masses(post: Posterior, d: DistortionMatrix, D: float) -> np.ndarray:
    """Posterior mass of the distortion-D ball around every candidate word."""
    words = enumerate_words(post.base, post.length)
    masses = np.empty(len(words))
    chunk = 2048
    for lo in range(0, len(words), chunk):
        block = pairwise_distortion(d, words[lo:lo + chunk], words)
        masses[lo:lo + chunk] = (block <= D) @ post.weights
    return masses


def min_tail_mass(post: Posterior, d: DistortionMatrix,
                  D: float) -> tuple[float, tuple]:
    """Smallest achievable conditional excess mass and its candidate word.

    Exact minimum over all candidates of the posterior mass outside the
    distortion-D ball; lexicographic tie-break.
    """
    masses = _ball_masses(post, d, D)
    k = int(np.argmax(masses))
    words = enumerate_words(post.base, post.length)
    value = 1.0 - float(masses[k])
    return max(value, 0.0), tuple(int(v) for v in words[k])


def distortion_map_decode(post: Posterior, d: DistortionMatrix,
                          D: float) -> tuple:
    """Word whose distortion-D ball carries the largest posterior mass.

    Ties break to the lexicographically smallest word.  At D=0 with a
    zero-diagonal distortion this is plain MAP decoding.
    """
    masses = _ball_masses(post, d, D)
    words = enumerate_words(post.base, post.length)
    return tuple(int(v) for v in words[int(np.argmax(masses))])


@dataclass(frozen=True)
class CertificationReport:
    """Outcome of exhaustive decoder-optimality certification."""

    max_violation: float
    worst_output: tuple | None
    excess_probability: float
    outputs_checked: int
    zero_probability_outputs: int


def certify_map_optimality(P_V: Pmf, enc: EncoderMap, W: ChannelMatrix,
                           d: DistortionMatrix, D: float, n: int,
                           decoder=None) -> CertificationReport:
    """Check the decoder against every alternative decision, all outputs.

    For each output word y^n the conditional excess probability of the
    decoder's decision is compared with the best over all candidate
    decisions, recomputed here by direct enumeration (independent of the
    decoder's own ball-mass machinery).  Also accumulates the overall
    excess probability of the decoded word under the true output law.
    """
    base = len(P_V)
    length = enc.word_length
    n_words = base ** length
    if n_words * (W.num_outputs ** n) > MAX_CERTIFY_CELLS:
        raise ValueError("instance exceeds the certification size guard")
    if decoder is None:
        decoder = distortion_map_decode

    words = [tuple(int(v) for v in row)
             for row in enumerate_words(base, length)]
    prior = [float(np.prod([P_V.probs[v] for v in w])) for w in words]
    # Ball membership by direct distortion calls.
    outside = [[distortion(d, v, w) > D for w in words] for v in words]

    max_violation = 0.0
    worst = None
    excess_total = 0.0
    checked = 0
    skipped = 0
    for yn in itertools.product(range(W.num_outputs), repeat=n):
        joint = []
        for w in words:
            p = prior[word_index(w, base)]
            for step in range(n):
                x = enc(step, w, yn[:step])
                p *= float(W.matrix[x, yn[step]])
            joint.append(p)
        evidence = sum(joint)
        checked += 1
        if evidence <= 0.0:
            skipped += 1
            continue
        post_w = [p / evidence for p in joint]
        tails = [sum(pw for pw, out in zip(post_w, outs) if out)
                 for outs in outside]
        best = min(tails)
        decided = decoder(Posterior(base, length, np.array(post_w)), d, D)
        dec_tail = tails[word_index(decided, base)]
        violation = dec_tail - best
        if violation > max_violation:
            max_violation = violation
            worst = yn
        excess_total += evidence * dec_tail
    return CertificationReport(max_violation=max_violation, worst_output=worst,
                               excess_probability=excess_total,
                               outputs_checked=checked,
                               zero_probability_outputs=skipped)


def stopping_threshold_time(trajectory, d: DistortionMatrix, D: float,
                            threshold: float):
    """First index n with min_tail_mass(trajectory[n]) <= threshold, else None."""
    for n, post in enumerate(trajectory):
        value, _ = min_tail_mass(post, d, D)
        if value <= threshold:
            return n
    return None
