"""Unit tests for the two-phase block construction.

Covering-code failure rates are checked against the analytic ball-count
oracle; control thresholds and ML decisions against hand arithmetic.
"""

import math

import numpy as np
import pytest
from scipy.special import comb

from vlfjscc import (
    ChannelCodebook,
    ChannelMatrix,
    ControlCode,
    Pmf,
    SchemeConfig,
    SourceCodebook,
    build_channel_codebook,
    build_control_code,
    build_source_code,
    channel_params,
    control_decode,
    derive_gamma,
    distortion,
    enumerate_words,
    hamming_distortion,
    ml_channel_decode,
    pairwise_distortion,
    source_decode,
    source_encode,
)
from vlfjscc.coding_scheme import (
    control_decode_batch,
    source_encode_batch,
    symbol_llr,
)

# ----------------------------------------------------------------------
# Oracles
# ----------------------------------------------------------------------

def h2(x: float) -> float:
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log(1.0 - x)


RD_HALF_02 = math.log(2.0) - h2(0.2)  # R(0.2), Bern(0.5), Hamming
BSC01_B = 0.8 * math.log(9.0)


def bsc(p: float) -> ChannelMatrix:
    return ChannelMatrix([[1.0 - p, p], [p, 1.0 - p]])


def covering_failure_oracle(N: int, M: int, D: float) -> float:
    """Analytic P(one word uncovered) for uniform binary Hamming covering.

    Each i.i.d. uniform reproduction covers a fixed word with probability
    q = |ball| / 2^N, independently, so failure = (1 - q)^M.
    """
    radius = math.floor(D * N + 1e-9)
    ball = sum(comb(N, k, exact=True) for k in range(radius + 1))
    q = ball / 2.0 ** N
    return (1.0 - q) ** M


# ----------------------------------------------------------------------
# Source code
# ----------------------------------------------------------------------

def test_build_source_code_m_formula():
    source = Pmf([0.5, 0.5])
    d = hamming_distortion(2)
    for N, eps in ((8, 0.05), (12, 0.08), (16, 0.1)):
        cb = build_source_code(source, d, 0.2, eps, N,
                               np.random.default_rng(0))
        oracle = math.ceil(math.exp(N * (RD_HALF_02 + 2 * eps)))
        assert cb.M == oracle
        assert cb.reproductions.shape == (cb.M, N)


def test_build_source_code_rejects_nonpositive_epsilon():
    with pytest.raises(ValueError):
        build_source_code(Pmf([0.5, 0.5]), hamming_distortion(2), 0.2, 0.0,
                          8, np.random.default_rng(0))


def test_build_source_code_guard_on_huge_m():
    with pytest.raises(ValueError, match="guard"):
        build_source_code(Pmf([0.5, 0.5]), hamming_distortion(2), 0.0, 0.1,
                          64, np.random.default_rng(0))


def test_full_budget_covers_everything_at_index_one():
    source = Pmf([0.5, 0.5])
    d = hamming_distortion(2)
    cb = build_source_code(source, d, 1.0, 0.05, 6, np.random.default_rng(1))
    words = enumerate_words(2, 6)
    for w in words:
        assert source_encode(cb, tuple(w)) == 1


def test_exhaustive_reproductions_leave_no_failures():
    # Hand-built codebook enumerating all words: every v is covered at D=0.
    d = hamming_distortion(2)
    words = enumerate_words(2, 3)
    cb = SourceCodebook(N=3, M=8, reproductions=words, D=0.0, d=d)
    for w in words:
        idx = source_encode(cb, tuple(w))
        assert distortion(d, tuple(w), source_decode(cb, idx)) == 0.0


def test_covering_failure_decays_with_n():
    source = Pmf([0.5, 0.5])
    d = hamming_distortion(2)
    eps, D, samples = 0.05, 0.2, 100_000
    rng = np.random.default_rng(42)
    rates = []
    for N in (8, 12, 16):
        cb = build_source_code(source, d, D, eps, N, rng)
        v = rng.integers(0, 2, size=(samples, N))
        dists = pairwise_distortion(d, v, cb.reproductions)
        uncovered = float((dists.min(axis=1) > D).mean())
        oracle = covering_failure_oracle(N, cb.M, D)
        assert abs(uncovered - oracle) <= 0.1
        rates.append(uncovered)
    assert rates[0] > rates[1] > rates[2]


def test_source_encode_first_cover_and_sink():
    d = hamming_distortion(2)
    reps = np.array([[0, 0, 0, 0], [1, 1, 1, 1], [1, 1, 0, 0]])
    cb = SourceCodebook(N=4, M=3, reproductions=reps, D=0.25, d=d)
    # Two flips from reps 1 and 2, zero from rep 3: only index 3 covers.
    assert source_encode(cb, (1, 1, 0, 0)) == 3
    # Exactly a reproduction word: distortion zero at its own index.
    assert source_encode(cb, (1, 1, 1, 1)) == 2
    assert distortion(d, (1, 1, 1, 1), source_decode(cb, 2)) == 0.0
    # Covered by indices 1 and 3 at once: the smallest index wins.
    assert source_encode(cb, (1, 0, 0, 0)) == 1
    # Uncovered word falls into the sink index 1.
    assert source_encode(cb, (0, 0, 1, 1)) == 1
    assert source_decode(cb, 1) == (0, 0, 0, 0)


def test_source_decode_range_checks():
    d = hamming_distortion(2)
    cb = SourceCodebook(N=2, M=2, reproductions=np.array([[0, 0], [1, 1]]),
                        D=0.0, d=d)
    with pytest.raises(ValueError):
        source_decode(cb, 0)
    with pytest.raises(ValueError):
        source_decode(cb, 3)


def test_source_roundtrip_within_budget_exhaustive_n8():
    source = Pmf([0.5, 0.5])
    d = hamming_distortion(2)
    cb = build_source_code(source, d, 0.2, 0.08, 8, np.random.default_rng(7))
    words = enumerate_words(2, 8)
    uncovered = 0
    for w in words:
        w = tuple(w)
        idx = source_encode(cb, w)
        dist = distortion(d, w, source_decode(cb, idx))
        if dist > 0.2:
            uncovered += 1
            assert idx == 1
        else:
            assert dist <= 0.2
    # Some words must be uncovered at this N (analytic rate ~0.67).
    assert uncovered > 0


def test_source_encode_batch_matches_scalar():
    source = Pmf([0.5, 0.5])
    d = hamming_distortion(2)
    cb = build_source_code(source, d, 0.2, 0.05, 8, np.random.default_rng(3))
    rng = np.random.default_rng(4)
    batch = rng.integers(0, 2, size=(300, 8))
    got = source_encode_batch(cb, batch)
    for row, idx in zip(batch, got):
        assert idx == source_encode(cb, tuple(row))


# ----------------------------------------------------------------------
# Channel codebook and ML decoding
# ----------------------------------------------------------------------

def test_point_mass_caid_gives_constant_codebook():
    cb = build_channel_codebook(Pmf([0.0, 1.0]), 5, 3,
                                np.random.default_rng(0))
    assert np.all(cb.codewords == 1)


def test_codebook_seeded_reproducibility():
    a = build_channel_codebook(Pmf([0.5, 0.5]), 6, 4, np.random.default_rng(9))
    b = build_channel_codebook(Pmf([0.5, 0.5]), 6, 4, np.random.default_rng(9))
    assert np.array_equal(a.codewords, b.codewords)


def test_codebook_symbol_frequencies_multinomial():
    caid = Pmf([0.3, 0.7])
    cb = build_channel_codebook(caid, 1000, 100, np.random.default_rng(11))
    freq = float((cb.codewords == 0).mean())
    sigma = math.sqrt(0.3 * 0.7 / cb.codewords.size)
    assert abs(freq - 0.3) <= 3 * sigma


def test_ml_decode_noiseless_permutation_channels_exact():
    codewords = enumerate_words(2, 3)  # 8 distinct words
    cb = ChannelCodebook(M=8, length=3, codewords=codewords)
    identity = ChannelMatrix([[1.0, 0.0], [0.0, 1.0]])
    swap = ChannelMatrix([[0.0, 1.0], [1.0, 0.0]])
    for j in range(8):
        y_id = codewords[j]
        assert ml_channel_decode(cb, y_id, identity) == j + 1
        y_swap = 1 - codewords[j]
        assert ml_channel_decode(cb, y_swap, swap) == j + 1


def test_ml_decode_single_message():
    cb = ChannelCodebook(M=1, length=4, codewords=np.zeros((1, 4), dtype=int))
    assert ml_channel_decode(cb, (1, 1, 0, 1), bsc(0.3)) == 1


def test_ml_decode_bsc_hand_comparison():
    # y matches codeword 1 everywhere and differs from codeword 2 in two
    # places: likelihood 0.9^3 vs 0.9*0.1^2, so message 1 wins.
    cb = ChannelCodebook(M=2, length=3,
                         codewords=np.array([[0, 1, 0], [1, 1, 1]]))
    assert ml_channel_decode(cb, (0, 1, 0), bsc(0.1)) == 1


def test_ml_decode_tie_goes_to_smallest_index():
    cb = ChannelCodebook(M=3, length=2,
                         codewords=np.array([[0, 1], [1, 0], [0, 1]]))
    # Codewords 1 and 3 identical: equal likelihood, index 1 returned.
    assert ml_channel_decode(cb, (0, 1), bsc(0.2)) == 1


def test_ml_decode_length_mismatch():
    cb = ChannelCodebook(M=1, length=3, codewords=np.zeros((1, 3), dtype=int))
    with pytest.raises(ValueError):
        ml_channel_decode(cb, (0, 1), bsc(0.1))


# ----------------------------------------------------------------------
# Control code
# ----------------------------------------------------------------------

def test_symbol_llr_bsc_and_special_cases():
    llr = symbol_llr(bsc(0.1), 0, 1)
    assert llr[0] == pytest.approx(math.log(9.0), abs=1e-12)
    assert llr[1] == pytest.approx(-math.log(9.0), abs=1e-12)
    W = ChannelMatrix([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])
    llr = symbol_llr(W, 0, 1)
    assert math.isinf(llr[0]) and llr[0] > 0
    assert llr[1] == 0.0
    assert math.isinf(llr[2]) and llr[2] < 0


def test_build_control_code_threshold_formula():
    params = channel_params(bsc(0.1))
    for m, delta in ((1, 0.3), (50, 0.3), (20, 1.0)):
        ctrl = build_control_code(params, m, delta)
        assert ctrl.length == m
        assert ctrl.llr_threshold == pytest.approx(m * (BSC01_B - delta),
                                                   abs=1e-9)
        assert np.all(ctrl.x_c == params.x0)
        assert np.all(ctrl.x_e == params.x0_prime)


def test_control_threshold_sits_between_the_llr_means():
    # -m*B_reverse < threshold < m*B for every valid delta_ctrl.
    rng = np.random.default_rng(6)
    for _ in range(20):
        Wm = rng.dirichlet(np.ones(3) * 2.0, size=3)
        Wm = np.maximum(Wm, 1e-3)
        Wm /= Wm.sum(axis=1, keepdims=True)
        params = channel_params(ChannelMatrix(Wm))
        m = int(rng.integers(1, 30))
        delta = float(rng.uniform(1e-6, params.B + params.B_reverse - 1e-6))
        ctrl = build_control_code(params, m, delta)
        assert -m * params.B_reverse < ctrl.llr_threshold < m * params.B


def test_build_control_code_rejects_degenerate_inputs():
    params = channel_params(bsc(0.1))
    with pytest.raises(ValueError):
        build_control_code(params, 0, 0.3)
    with pytest.raises(ValueError):
        build_control_code(params, 4, 0.0)
    with pytest.raises(ValueError):
        build_control_code(params, 4, params.B + params.B_reverse)
    flat = channel_params(ChannelMatrix([[0.4, 0.6], [0.4, 0.6]]))
    with pytest.raises(ValueError, match="control phase"):
        build_control_code(flat, 4, 0.3)


def test_build_control_code_infinite_b_uses_sign_rule():
    params = channel_params(ChannelMatrix([[1.0, 0.0], [0.0, 1.0]]))
    ctrl = build_control_code(params, 3, 0.5)
    assert ctrl.llr_threshold == 0.0
    with pytest.raises(ValueError):
        build_control_code(params, 3, 0.0)


def test_control_decode_clean_c_block():
    params = channel_params(bsc(0.1))
    ctrl = build_control_code(params, 5, 0.3)
    y = np.full(5, params.x0)  # uncorrupted repetition of x_c's output
    assert control_decode(ctrl, y, bsc(0.1)) == "c"


def test_control_decode_hand_threshold_cases():
    # m=2, threshold = 2(B - 0.3) = 2.9156; sums are ln9*(zeros - ones).
    params = channel_params(bsc(0.1))
    ctrl = build_control_code(params, 2, 0.3)
    W = bsc(0.1)
    assert control_decode(ctrl, (0, 0), W) == "c"  # +2 ln 9 = 4.394
    assert control_decode(ctrl, (0, 1), W) == "e"  # 0 < threshold
    assert control_decode(ctrl, (1, 1), W) == "e"


def test_control_decode_zero_llr_symbols_are_ignored():
    # Rows agree on output 0, so those symbols must not move the sum.
    W = ChannelMatrix([[0.5, 0.4, 0.1], [0.5, 0.1, 0.4]])
    params = channel_params(W)
    ctrl = build_control_code(params, 3, 0.3)
    x0, x0p = int(ctrl.x_c[0]), int(ctrl.x_e[0])
    llr = symbol_llr(W, x0, x0p)
    assert llr[0] == 0.0
    with_zeros = control_decode(ctrl, (0, 0, 1), W)
    # Hand sum: only the last symbol contributes.
    expect = "c" if llr[1] >= ctrl.llr_threshold else "e"
    assert with_zeros == expect


def test_control_decode_support_exclusion_forces_e():
    # Output 2 is impossible under x0: one such symbol decides e outright.
    W = ChannelMatrix([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])
    ctrl = ControlCode(length=3, x_c=np.zeros(3, dtype=int),
                       x_e=np.ones(3, dtype=int), llr_threshold=0.0)
    assert control_decode(ctrl, (1, 1, 2), W) == "e"
    # And output 0 is impossible under x0prime: positive proof of c.
    assert control_decode(ctrl, (0, 1, 1), W) == "c"


def test_control_decode_minus_infinite_threshold_always_c():
    ctrl = ControlCode(length=2, x_c=np.zeros(2, dtype=int),
                       x_e=np.ones(2, dtype=int), llr_threshold=-math.inf)
    W = bsc(0.2)
    for y in ((0, 0), (0, 1), (1, 1)):
        assert control_decode(ctrl, y, W) == "c"


def test_control_decode_batch_matches_scalar():
    params = channel_params(bsc(0.1))
    ctrl = build_control_code(params, 4, 0.5)
    rng = np.random.default_rng(13)
    ys = rng.integers(0, 2, size=(200, 4))
    got = control_decode_batch(ctrl, ys, bsc(0.1))
    for y, flag in zip(ys, got):
        assert ("c" if flag else "e") == control_decode(ctrl, y, bsc(0.1))


def test_control_decode_batch_matches_scalar_with_infinite_llrs():
    W = ChannelMatrix([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])
    ctrl = ControlCode(length=3, x_c=np.zeros(3, dtype=int),
                       x_e=np.ones(3, dtype=int), llr_threshold=0.0)
    rng = np.random.default_rng(14)
    ys = rng.integers(0, 3, size=(200, 3))
    got = control_decode_batch(ctrl, ys, W)
    for y, flag in zip(ys, got):
        assert ("c" if flag else "e") == control_decode(ctrl, y, W)


def test_mean_threshold_crossover_near_half():
    # delta_ctrl at the top of its range puts the threshold on the e-side
    # LLR mean, so P(hear c | sent e) should sit near 1/2.
    params = channel_params(bsc(0.1))
    delta = params.B + params.B_reverse - 1e-9
    m = 100
    ctrl = build_control_code(params, m, delta)
    rng = np.random.default_rng(15)
    flips = rng.random((20_000, m)) < 0.1
    y = np.where(flips, 0, 1)  # x_e = all ones through BSC(0.1)
    p_ec = float(control_decode_batch(ctrl, y, bsc(0.1)).mean())
    assert p_ec >= 0.4


# ----------------------------------------------------------------------
# gamma and SchemeConfig
# ----------------------------------------------------------------------

def test_derive_gamma_hand_arithmetic():
    # Oracle: (0.192745 + 3*0.01) / 0.368064 = 0.605180 (hand inputs).
    oracle = (0.192745 + 0.03) / 0.368064
    got = derive_gamma(0.192745, 0.01, 0.368064)
    assert got == pytest.approx(oracle, abs=1e-15)
    assert got == pytest.approx(0.605180, abs=1e-6)
    # Rate condition holds at the canonical split.
    assert (0.192745 + 0.02) / got < 0.368064


def test_derive_gamma_rejects_trivial_regime():
    with pytest.raises(ValueError, match="exponent is 0"):
        derive_gamma(0.3, 0.03, 0.368064)
    with pytest.raises(ValueError):
        derive_gamma(0.1, 0.0, 0.3)
    with pytest.raises(ValueError):
        derive_gamma(0.1, 0.01, 0.0)


def test_derive_gamma_small_rate_small_gamma():
    got = derive_gamma(0.0, 1e-4, math.log(2.0))
    assert 0.0 < got < 0.001


def test_scheme_config_canonical_split():
    C = math.log(2.0)  # generous capacity so the canonical rule applies
    cfg = SchemeConfig.derive(16, 0.05, 0.3, RD_HALF_02, C, master_seed=5)
    gamma = derive_gamma(RD_HALF_02, 0.05, C)
    assert cfg.gamma == pytest.approx(gamma, abs=1e-15)
    assert cfg.msg_len == math.floor(gamma * 16 + 1e-9)
    assert cfg.msg_len + cfg.ctrl_len == 16
    assert cfg.msg_len >= 1 and cfg.ctrl_len >= 1
    assert cfg.M == math.ceil(math.exp(16 * (RD_HALF_02 + 0.1)))
    assert (RD_HALF_02 + 0.1) / cfg.gamma < C
    assert cfg.master_seed == 5


def test_scheme_config_midpoint_fallback():
    # BSC(0.1) at eps=0.08: R+3eps >= C but R+2eps < C, so gamma falls
    # back to the midpoint of ((R+2eps)/C, 1).
    C = 0.3680642071684971
    cfg = SchemeConfig.derive(16, 0.08, 0.3, RD_HALF_02, C)
    oracle = 0.5 * ((RD_HALF_02 + 0.16) / C + 1.0)
    assert cfg.gamma == pytest.approx(oracle, abs=1e-12)
    assert cfg.msg_len == 15 and cfg.ctrl_len == 1
    assert (RD_HALF_02 + 0.16) / cfg.gamma < C


def test_scheme_config_rejects_when_message_rate_cannot_clear_capacity():
    with pytest.raises(ValueError):
        SchemeConfig.derive(16, 0.2, 0.3, RD_HALF_02, 0.368064)


def test_scheme_config_boundary_failures():
    C = math.log(2.0)
    # Tiny gamma*N: message phase would round to zero symbols.
    with pytest.raises(ValueError, match="message symbol"):
        SchemeConfig.derive(2, 1e-4, 0.3, 0.0, C)
    # R + 2*eps a hair under C pushes the fallback gamma so close to 1
    # that the whole block goes to the message phase.
    eps = 1e-9
    R = C - 1e-10 - 2 * eps
    with pytest.raises(ValueError, match="control"):
        SchemeConfig.derive(1, eps, 0.3, R, C)


def test_scheme_config_rate_condition_holds_across_family():
    C = math.log(2.0)
    for N in (8, 12, 16, 24):
        for eps in (0.02, 0.05, 0.1):
            cfg = SchemeConfig.derive(N, eps, 0.3, RD_HALF_02, C)
            assert (cfg.R_D + 2 * cfg.epsilon) / cfg.gamma < cfg.C
            assert cfg.msg_len + cfg.ctrl_len == N


def test_scheme_config_message_guard():
    with pytest.raises(ValueError, match="guard"):
        SchemeConfig.derive(200, 0.05, 0.3, RD_HALF_02, math.log(2.0))
