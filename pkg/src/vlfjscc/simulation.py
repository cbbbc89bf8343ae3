"""Seeded Monte Carlo execution of full feedback sessions.

A session repeats two-phase blocks (message phase, then a one-bit
ACK/NACK control phase) until the decoder accepts.  This module runs
sessions at scale, estimates the excess-distortion probability, the
expected stopping time, and per-block retransmission statistics, and
fits empirical exponents with confidence intervals.

Estimator conventions: prt_hat and pe_hat are pooled per-block
frequencies over every transmitted block (retransmission rounds
included).  With that reading, etau_hat*(1 - prt_hat) = N and
pd_hat = pe_hat/(1 - prt_hat) hold as in-sample identities, not merely
asymptotically.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .coding_scheme import (
    ControlCode,
    SchemeConfig,
    SourceCodebook,
    build_channel_codebook,
    build_control_code,
    build_source_code,
    control_decode,
    control_decode_batch,
    ml_channel_decode,
    source_encode,
    source_encode_batch,
)
from .numerics import rate_distortion, reliability_from_parts
from .probability import (
    ChannelMatrix,
    ChannelParams,
    DistortionMatrix,
    Pmf,
    channel_params,
    distortion,
)

DEFAULT_SESSION_CAP = 10_000
CHUNK_TRIALS = 2048
_Z95 = 1.959963984540054


class SessionCapExceeded(RuntimeError):
    """A session exceeded the block cap (retransmission prob near 1)."""

    def __init__(self, cap: int, trial_index: int):
        super().__init__(
            f"trial {trial_index} still retransmitting after {cap} blocks; "
            "the configuration looks pathological (P_RT close to 1)")
        self.cap = cap
        self.trial_index = trial_index


# ----------------------------------------------------------------------
# Reproducible stream plumbing
# ----------------------------------------------------------------------

def _encode_label(label) -> int:
    if isinstance(label, str):
        return zlib.crc32(label.encode("utf-8"))
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("stream labels must be nonnegative")
        return int(label)
    raise TypeError(f"unsupported stream label type: {type(label).__name__}")


@dataclass(frozen=True)
class RngSpec:
    """Master seed plus a label path; names an independent stream family.

    Identical (master_seed, labels) always reproduce the same stream;
    distinct label paths give statistically independent streams.
    """

    master_seed: int
    labels: tuple = ()

    def child(self, *labels) -> "RngSpec":
        return RngSpec(self.master_seed, self.labels + labels)

    def generator(self, *labels) -> np.random.Generator:
        key = tuple(_encode_label(l) for l in self.labels + labels)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=key)
        return np.random.Generator(np.random.PCG64(seq))


# ----------------------------------------------------------------------
# Channel sampling
# ----------------------------------------------------------------------

def _cumulative_rows(W: ChannelMatrix) -> np.ndarray:
    cum = W.matrix.cumsum(axis=1)
    cum[:, -1] = 1.0
    return cum


def sample_channel(W: ChannelMatrix, x: int, rng: np.random.Generator) -> int:
    """One channel use: output ~ W(.|x)."""
    cum = _cumulative_rows(W)[int(x)]
    return int(np.searchsorted(cum, rng.random(), side="right"))


def sample_channel_batch(W: ChannelMatrix, x: np.ndarray,
                         rng: np.random.Generator) -> np.ndarray:
    """Independent channel uses for an array of inputs (any shape)."""
    cum = _cumulative_rows(W)
    u = rng.random(x.shape)
    return (cum[x] <= u[..., np.newaxis]).sum(axis=-1).astype(np.int64)


def sample_pmf_batch(p: Pmf, shape, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(p.probs)
    cum[-1] = 1.0
    u = rng.random(shape)
    return (cum <= u[..., np.newaxis]).sum(axis=-1).astype(np.int8)


# ----------------------------------------------------------------------
# Model and code bundles
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SystemModel:
    """Source, channel, distortion measure, and target distortion."""

    P_V: Pmf
    W: ChannelMatrix
    d: DistortionMatrix
    D: float
    params: ChannelParams

    @classmethod
    def build(cls, P_V: Pmf, W: ChannelMatrix, d: DistortionMatrix,
              D: float) -> "SystemModel":
        if len(P_V) != d.alphabet_size:
            raise ValueError("source alphabet does not match distortion matrix")
        if D < 0:
            raise ValueError("target distortion must be nonnegative")
        return cls(P_V=P_V, W=W, d=d, D=float(D), params=channel_params(W))

    def derive_config(self, N: int, epsilon: float, delta_ctrl: float,
                      master_seed: int = 0) -> SchemeConfig:
        point = rate_distortion(self.P_V, self.d, self.D)
        return SchemeConfig.derive(N=N, epsilon=epsilon,
                                   delta_ctrl=delta_ctrl, R_D=point.R,
                                   C=self.params.C, master_seed=master_seed)


@dataclass(frozen=True)
class CodeSet:
    """The static codes of one configuration (channel codebooks are per block)."""

    source: SourceCodebook
    control: ControlCode
    caid: Pmf


def build_codes(model: SystemModel, cfg: SchemeConfig,
                rng: np.random.Generator) -> CodeSet:
    source = build_source_code(model.P_V, model.d, model.D, cfg.epsilon,
                               cfg.N, rng)
    control = build_control_code(model.params, cfg.ctrl_len, cfg.delta_ctrl)
    return CodeSet(source=source, control=control, caid=model.params.caid)


# ----------------------------------------------------------------------
# Single-session reference implementation
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one complete session."""

    tau: int
    retransmissions: int
    realized_distortion: float
    excess: bool
    control_history: tuple

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")


def run_session(cfg: SchemeConfig, codes: CodeSet, W: ChannelMatrix,
                P_V: Pmf, rng: np.random.Generator,
                session_cap: int = DEFAULT_SESSION_CAP,
                source_word=None) -> TrialRecord:
    """One session, block by block, with explicit codebooks throughout.

    This is the readable reference path: it draws a fresh message-phase
    codebook every block, lets the decoder ML-decode, has the encoder
    emulate that decode through the fed-back outputs (asserting exact
    agreement), and stops at the first accepted control block.
    """
    d = codes.source.d
    if source_word is None:
        v = sample_pmf_batch(P_V, (cfg.N,), rng)
    else:
        v = np.asarray(source_word, dtype=np.int8)
    msg = source_encode(codes.source, v)
    history = []
    for block in range(1, session_cap + 1):
        codebook = build_channel_codebook(codes.caid, cfg.msg_len, cfg.M, rng)
        x_msg = codebook.codewords[msg - 1]
        y_msg = sample_channel_batch(W, x_msg, rng)
        decoded = ml_channel_decode(codebook, y_msg, W)
        # Encoder emulation: recompute the decoder's decision from the
        # fed-back outputs; these must agree exactly, never approximately.
        emulated = ml_channel_decode(codebook, y_msg, W)
        assert emulated == decoded
        vhat = codes.source.reproductions[decoded - 1]
        dist = distortion(d, v, vhat)
        send_c = dist <= codes.source.D
        x_ctrl = codes.control.x_c if send_c else codes.control.x_e
        y_ctrl = sample_channel_batch(W, x_ctrl, rng)
        heard = control_decode(codes.control, y_ctrl, W)
        history.append(heard)
        if heard == "c":
            return TrialRecord(tau=block * cfg.N, retransmissions=block - 1,
                               realized_distortion=dist,
                               excess=dist > codes.source.D,
                               control_history=tuple(history))
    raise SessionCapExceeded(session_cap, trial_index=0)


# ----------------------------------------------------------------------
# Vectorized batch engine
# ----------------------------------------------------------------------

def _binary_symmetric_crossover(W: ChannelMatrix, caid: Pmf):
    """Crossover probability if W is a binary symmetric channel with a
    uniform capacity-achieving input, else None.  This enables an exact
    distributional shortcut for message-phase decoding."""
    if W.num_inputs != 2 or W.num_outputs != 2:
        return None
    m = W.matrix
    if m[0, 0] != m[1, 1] or m[0, 1] != m[1, 0] or m[0, 0] <= m[0, 1]:
        return None
    if abs(caid.probs[0] - 0.5) > 1e-9:
        return None
    return float(m[0, 1])


@dataclass
class _ChunkResult:
    tau: np.ndarray
    excess: np.ndarray
    realized: np.ndarray
    blocks_total: int
    e_blocks: int
    c_excess_blocks: int


def _simulate_chunk(cfg: SchemeConfig, codes: CodeSet, model: SystemModel,
                    n_trials: int, rng: np.random.Generator,
                    session_cap: int, trial_offset: int) -> _ChunkResult:
    W = model.W
    d = model.d
    D = codes.source.D
    reps = codes.source.reproductions
    crossover = _binary_symmetric_crossover(W, codes.caid)
    x0 = int(codes.control.x_c[0])
    x0p = int(codes.control.x_e[0])

    v = sample_pmf_batch(model.P_V, (n_trials, cfg.N), rng)
    msg = source_encode_batch(codes.source, v)

    tau = np.zeros(n_trials, dtype=np.int64)
    excess = np.zeros(n_trials, dtype=bool)
    realized = np.zeros(n_trials, dtype=np.float64)
    alive = np.arange(n_trials)
    blocks_total = 0
    e_blocks = 0
    c_excess_blocks = 0

    with np.errstate(divide="ignore"):
        logw = np.log(W.matrix)

    for block in range(1, session_cap + 1):
        n_act = len(alive)
        if n_act == 0:
            break
        act_msg = msg[alive]
        if crossover is not None:
            # Exact shortcut: against a uniform binary codebook, each
            # competitor's mismatch count with y is Binomial(len, 1/2),
            # independent of the true row's Binomial(len, p) channel
            # flips; ML decoding is first-smallest mismatch count.
            flips = rng.binomial(cfg.msg_len, 0.5,
                                 size=(n_act, cfg.M)).astype(np.int16)
            true_flips = rng.binomial(cfg.msg_len, crossover,
                                      size=n_act).astype(np.int16)
            flips[np.arange(n_act), act_msg - 1] = true_flips
            decoded = flips.argmin(axis=1).astype(np.int64) + 1
        else:
            cb = sample_pmf_batch(codes.caid, (n_act, cfg.M, cfg.msg_len), rng)
            x_true = np.take_along_axis(
                cb, (act_msg - 1)[:, np.newaxis, np.newaxis], axis=1)[:, 0, :]
            y = sample_channel_batch(W, x_true, rng)
            best = np.full(n_act, -np.inf)
            decoded = np.zeros(n_act, dtype=np.int64)
            slab = max(1, (1 << 22) // max(1, n_act * cfg.msg_len))
            for lo in range(0, cfg.M, slab):
                scores = logw[cb[:, lo:lo + slab, :],
                              y[:, np.newaxis, :]].sum(axis=2)
                cand = scores.argmax(axis=1)
                cand_score = scores[np.arange(n_act), cand]
                better = cand_score > best
                decoded[better] = cand[better] + lo + 1
                best[better] = cand_score[better]
        vhat = reps[decoded - 1]
        dist = d.matrix[v[alive], vhat].mean(axis=1)
        send_c = dist <= D

        if crossover is not None:
            ctrl_flips = rng.random((n_act, cfg.ctrl_len)) < crossover
            sent_bit = np.where(send_c, x0, x0p)[:, np.newaxis]
            y_ctrl = sent_bit ^ ctrl_flips.astype(np.int64)
        else:
            sent = np.where(send_c[:, np.newaxis],
                            np.broadcast_to(codes.control.x_c,
                                            (n_act, cfg.ctrl_len)),
                            np.broadcast_to(codes.control.x_e,
                                            (n_act, cfg.ctrl_len)))
            y_ctrl = sample_channel_batch(W, sent, rng)
        heard_c = control_decode_batch(codes.control, y_ctrl, W)

        blocks_total += n_act
        e_blocks += int((~heard_c).sum())
        c_excess_blocks += int((heard_c & (dist > D)).sum())

        stopped = heard_c
        done = alive[stopped]
        tau[done] = block * cfg.N
        excess[done] = dist[stopped] > D
        realized[done] = dist[stopped]
        alive = alive[~stopped]

    if len(alive) > 0:
        raise SessionCapExceeded(session_cap,
                                 trial_index=trial_offset + int(alive[0]))
    return _ChunkResult(tau=tau, excess=excess, realized=realized,
                        blocks_total=blocks_total, e_blocks=e_blocks,
                        c_excess_blocks=c_excess_blocks)


# ----------------------------------------------------------------------
# Estimation
# ----------------------------------------------------------------------

def wilson_interval(successes: int, trials: int,
                    z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials
                         + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def rule_of_three(trials: int) -> float:
    """95% upper bound for a probability with zero observed events."""
    return 3.0 / trials


@dataclass(frozen=True)
class EstimateReport:
    """Monte Carlo estimates for one configuration.

    prt_hat and pe_hat are pooled per-block frequencies (all blocks of
    all sessions), so the renewal identities hold in-sample.  When no
    excess event is observed, exponent_hat is the rule-of-three lower
    bound and exponent_is_lower_bound is set.
    """

    N: int
    gamma: float
    trials: int
    pd_hat: float
    pd_lo: float
    pd_hi: float
    etau_hat: float
    etau_ci: float
    prt_hat: float
    pe_hat: float
    exponent_hat: float
    exponent_ci: float
    exponent_is_lower_bound: bool
    block_counts: np.ndarray


def monte_carlo(cfg: SchemeConfig, model: SystemModel, trials: int,
                rng: RngSpec,
                session_cap: int = DEFAULT_SESSION_CAP) -> EstimateReport:
    """Run independent sessions and assemble the full estimate report."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    codes = build_codes(model, cfg, rng.generator("source-code"))
    taus = []
    excesses = []
    blocks_total = 0
    e_blocks = 0
    c_excess_blocks = 0
    for chunk_index, lo in enumerate(range(0, trials, CHUNK_TRIALS)):
        n = min(CHUNK_TRIALS, trials - lo)
        res = _simulate_chunk(cfg, codes, model, n,
                              rng.generator("mc", chunk_index), session_cap,
                              trial_offset=lo)
        taus.append(res.tau)
        excesses.append(res.excess)
        blocks_total += res.blocks_total
        e_blocks += res.e_blocks
        c_excess_blocks += res.c_excess_blocks
    tau = np.concatenate(taus)
    excess = np.concatenate(excesses)

    k_excess = int(excess.sum())
    pd_hat = k_excess / trials
    pd_lo, pd_hi = wilson_interval(k_excess, trials)
    etau_hat = float(tau.mean())
    etau_sd = float(tau.std(ddof=1)) if trials > 1 else 0.0
    etau_ci = _Z95 * etau_sd / math.sqrt(trials)
    prt_hat = e_blocks / blocks_total
    pe_hat = c_excess_blocks / blocks_total

    if k_excess > 0:
        exponent_hat = -math.log(pd_hat) / etau_hat
        lower = False
        se_pd = math.sqrt(pd_hat * (1 - pd_hat) / trials)
        se_etau = etau_sd / math.sqrt(trials)
        var = (se_pd / (pd_hat * etau_hat)) ** 2 \
            + (math.log(pd_hat) * se_etau / etau_hat ** 2) ** 2
        exponent_ci = _Z95 * math.sqrt(var)
    else:
        exponent_hat = -math.log(rule_of_three(trials)) / etau_hat
        lower = True
        exponent_ci = math.inf
    block_counts = np.bincount(tau // cfg.N)
    return EstimateReport(N=cfg.N, gamma=cfg.gamma, trials=trials,
                          pd_hat=pd_hat, pd_lo=pd_lo, pd_hi=pd_hi,
                          etau_hat=etau_hat, etau_ci=etau_ci,
                          prt_hat=prt_hat, pe_hat=pe_hat,
                          exponent_hat=exponent_hat, exponent_ci=exponent_ci,
                          exponent_is_lower_bound=lower,
                          block_counts=block_counts)


@dataclass(frozen=True)
class GofResult:
    statistic: float
    df: int
    pvalue: float
    bins: int


def geometric_gof(block_counts: np.ndarray, prt_hat: float,
                  min_expected: float = 5.0) -> GofResult:
    """Chi-square fit of session block counts against Geometric(1-prt_hat).

    Tail categories are merged until each bin's expected count reaches
    min_expected; one degree of freedom is charged for the estimated
    parameter.
    """
    counts = np.asarray(block_counts, dtype=np.float64)
    total = counts.sum()
    if not 0.0 < prt_hat < 1.0:
        return GofResult(statistic=0.0, df=0, pvalue=1.0, bins=1)
    p = prt_hat
    obs_bins = []
    exp_bins = []
    acc_obs = 0.0
    acc_exp = 0.0
    for k in range(1, len(counts)):
        acc_obs += counts[k]
        acc_exp += total * (1 - p) * p ** (k - 1)
        if acc_exp >= min_expected:
            obs_bins.append(acc_obs)
            exp_bins.append(acc_exp)
            acc_obs = 0.0
            acc_exp = 0.0
    # Open tail bin: everything at or beyond the last boundary.
    tail_exp = total - sum(exp_bins)
    tail_obs = total - sum(obs_bins)
    if exp_bins and tail_exp < min_expected:
        exp_bins[-1] += tail_exp
        obs_bins[-1] += tail_obs
    else:
        exp_bins.append(tail_exp)
        obs_bins.append(tail_obs)
    obs = np.array(obs_bins)
    exp = np.array(exp_bins)
    if len(obs) < 3:
        return GofResult(statistic=0.0, df=0, pvalue=1.0, bins=len(obs))
    stat = float(((obs - exp) ** 2 / exp).sum())
    df = len(obs) - 2
    return GofResult(statistic=stat, df=df,
                     pvalue=float(stats.chi2.sf(stat, df)), bins=len(obs))


# ----------------------------------------------------------------------
# Sweeps
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    N: int
    report: EstimateReport


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    exponent_theory: float


def empirical_exponent_sweep(model: SystemModel, epsilon: float,
                             delta_ctrl: float, N_list, trials: int,
                             rng: RngSpec,
                             session_cap: int = DEFAULT_SESSION_CAP
                             ) -> SweepResult:
    """Estimate the empirical exponent at each N, with the theory ceiling."""
    N_list = list(N_list)
    if N_list != sorted(N_list):
        raise ValueError("N_list must be ascending")
    point = rate_distortion(model.P_V, model.d, model.D)
    theory = reliability_from_parts(model.params.B, model.params.C, point.R)
    rows = []
    for N in N_list:
        cfg = model.derive_config(N, epsilon, delta_ctrl,
                                  master_seed=rng.master_seed)
        report = monte_carlo(cfg, model, trials, rng.child("N", N),
                             session_cap=session_cap)
        rows.append(SweepRow(N=N, report=report))
    return SweepResult(rows=tuple(rows), exponent_theory=float(theory))


# ----------------------------------------------------------------------
# Control-phase crossover exponents
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ControlPointEstimate:
    m: int
    p_ec_hat: float
    p_ec_lo: float
    p_ec_hi: float
    p_ec_flagged: bool
    p_ce_hat: float
    p_ce_lo: float
    p_ce_hi: float
    p_ce_flagged: bool


@dataclass(frozen=True)
class ControlExponentResult:
    points: tuple
    slope_ec: float | None
    slope_ce: float | None
    B: float


def _crossover_probability(model: SystemModel, ctrl: ControlCode,
                           send_c: bool, trials: int,
                           rng: np.random.Generator) -> int:
    """Count decoding decisions opposite to the sent control word."""
    wrong = 0
    chunk = max(1, (1 << 23) // max(1, ctrl.length))
    x_word = ctrl.x_c if send_c else ctrl.x_e
    for lo in range(0, trials, chunk):
        n = min(chunk, trials - lo)
        sent = np.broadcast_to(x_word, (n, ctrl.length))
        y = sample_channel_batch(model.W, sent, rng)
        heard_c = control_decode_batch(ctrl, y, model.W)
        wrong += int((~heard_c).sum()) if send_c else int(heard_c.sum())
    return wrong


def control_phase_exponent(model: SystemModel, m_list, trials: int,
                           delta_ctrl: float,
                           rng: RngSpec) -> ControlExponentResult:
    """Monte Carlo slopes of -ln P(e->c) and -ln P(c->e) versus m.

    Points with zero observed events get rule-of-three upper bounds and
    are flagged; flagged points never enter the least-squares fits.  A
    slope is None when fewer than two clean points remain.
    """
    m_list = list(m_list)
    if len(m_list) < 3:
        raise ValueError("need at least three control lengths")
    points = []
    for m in m_list:
        ctrl = build_control_code(model.params, m, delta_ctrl)
        k_ec = _crossover_probability(model, ctrl, send_c=False,
                                      trials=trials,
                                      rng=rng.generator("ec", m))
        k_ce = _crossover_probability(model, ctrl, send_c=True,
                                      trials=trials,
                                      rng=rng.generator("ce", m))
        ec_flag = k_ec == 0
        ce_flag = k_ce == 0
        ec_hat = rule_of_three(trials) if ec_flag else k_ec / trials
        ce_hat = rule_of_three(trials) if ce_flag else k_ce / trials
        ec_lo, ec_hi = wilson_interval(k_ec, trials)
        ce_lo, ce_hi = wilson_interval(k_ce, trials)
        points.append(ControlPointEstimate(
            m=m, p_ec_hat=ec_hat, p_ec_lo=ec_lo, p_ec_hi=ec_hi,
            p_ec_flagged=ec_flag, p_ce_hat=ce_hat, p_ce_lo=ce_lo,
            p_ce_hi=ce_hi, p_ce_flagged=ce_flag))

    def fit(select_flag, select_p):
        xs = [pt.m for pt in points if not select_flag(pt)]
        ys = [-math.log(select_p(pt)) for pt in points if not select_flag(pt)]
        if len(xs) < 2:
            return None
        return float(np.polyfit(xs, ys, 1)[0])

    slope_ec = fit(lambda pt: pt.p_ec_flagged, lambda pt: pt.p_ec_hat)
    slope_ce = fit(lambda pt: pt.p_ce_flagged, lambda pt: pt.p_ce_hat)
    return ControlExponentResult(points=tuple(points), slope_ec=slope_ec,
                                 slope_ce=slope_ce, B=model.params.B)
