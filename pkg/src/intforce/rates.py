"""Effective noise, optimal equalizers, admissibility and achievable rates."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import _kernels as K
from . import errors
from .exact import integer_det, has_full_leading_rank
from .model import (ChannelUplink, Config, DownlinkConfig, EffectiveStats, IntegerMatrix,
                    PowerAllocation, UplinkConfig, block_diag_beams)

UPLINK = "uplink"
DOWNLINK = "downlink"


def _int_rows(a) -> list[list[int]]:
    if isinstance(a, IntegerMatrix):
        return a.rows()
    return [[int(v) for v in row] for row in np.asarray(a)]


def _powers(p) -> np.ndarray:
    return np.asarray(p.diagonal if isinstance(p, PowerAllocation) else p, dtype=float)


def config_arrays(cfg: Config):
    """``(E, H, X, A, P)`` arrays of a configuration, each with a trial axis of 1."""
    if isinstance(cfg, UplinkConfig):
        E, H, X = cfg.b, cfg.channel.entries, cfg.c_matrix()
    else:
        E, H, X = cfg.c_matrix(), cfg.channel.entries, cfg.b
    A = cfg.a.entries.astype(float)
    return E[None], H[None], X[None], A[None], cfg.p.diagonal[None]


def uplink_effective_noise(cfg: UplinkConfig) -> np.ndarray:
    """``sigma_m = ||b_m||^2 + ||(b_m^T H C - a_m^T) P^{1/2}||^2`` for every row ``m``."""
    return K.effective_noise(*config_arrays(cfg))[0]


def downlink_effective_noise(cfg: DownlinkConfig) -> np.ndarray:
    """``sigma_m = ||c_m||^2 + ||(c_m^T H_m B - a_m^T) P^{1/2}||^2`` for every receiver ``m``."""
    return K.effective_noise(*config_arrays(cfg))[0]


def effective_noise(cfg: Config) -> np.ndarray:
    return K.effective_noise(*config_arrays(cfg))[0]


def optimal_uplink_equalizer(h: ChannelUplink, c, p, a) -> np.ndarray:
    """MMSE-style equalizer ``B = A P C^T H^T (I + H C P C^T H^T)^{-1}``."""
    if isinstance(c, (list, tuple)):
        cm = block_diag_beams([np.atleast_1d(np.asarray(v, float)) for v in c], h.user_antennas)
    else:
        cm = np.asarray(c, float)
    A = np.asarray(a.entries if isinstance(a, IntegerMatrix) else a, dtype=float)
    return K.optimal_equalizer(h.entries[None], cm[None], A[None], _powers(p)[None])[0]


def optimal_downlink_equalizer(h_m, b_d, p_d, a_m) -> np.ndarray:
    """Optimal equalizer of one receiver, ``c_m^T = a_m^T P B^T H_m^T (I + H_m B P B^T H_m^T)^{-1}``."""
    h_m = np.atleast_2d(np.asarray(h_m, float))
    b_d = np.asarray(b_d, float)
    pw = _powers(p_d)
    a_m = np.asarray(a_m, float)
    w = h_m @ b_d
    gram = np.eye(h_m.shape[0]) + (w * pw) @ w.T
    return np.linalg.solve(gram, w @ (pw * a_m))


def optimal_downlink_equalizers(cfg: DownlinkConfig) -> tuple[np.ndarray, ...]:
    """Optimal equalizer of every receiver for the configuration's beamformers and powers."""
    offsets = np.concatenate([[0], np.cumsum(cfg.channel.user_antennas)]).astype(int)
    E = K.optimal_equalizer(cfg.channel.entries[None], cfg.b[None],
                            cfg.a.entries.astype(float)[None], cfg.p.diagonal[None], offsets)[0]
    return tuple(E[m, offsets[m]:offsets[m + 1]] for m in range(cfg.num_users))


def check_identity_admissible_uplink(sigma_sq: Sequence[float], a) -> bool:
    """Noise variances nondecreasing and every leading principal submatrix of ``A`` full rank."""
    s = np.asarray(sigma_sq, float)
    return bool(np.all(np.diff(s) >= 0)) and has_full_leading_rank(_int_rows(a))


def check_identity_admissible_downlink(p, a) -> bool:
    """Powers nonincreasing and every leading principal submatrix of ``A`` full rank."""
    pw = _powers(p)
    return bool(np.all(np.diff(pw) <= 0)) and has_full_leading_rank(_int_rows(a))


def _greedy_columns(rows: list[list[int]]) -> list[int]:
    # Extending an independent column set always succeeds while the leading rows
    # have full row rank (exchange lemma), so the greedy pass never backtracks.
    n = len(rows)
    chosen: list[int] = []
    for m in range(n):
        for j in range(n):
            if j in chosen:
                continue
            cols = chosen + [j]
            if integer_det([[rows[r][c] for c in cols] for r in range(m + 1)]) != 0:
                chosen.append(j)
                break
        else:
            raise errors.RankDeficientIntegerMatrix("integer matrix is not full rank")
    return chosen


def find_admissible_permutations(a, order_key: Sequence[float], direction: str = UPLINK):
    """Reindexing that makes the identity permutation admissible.

    Uplink: ``pi`` sorts the effective noise increasingly and permutes rows,
    ``theta`` permutes columns (users). Downlink: ``pi`` sorts the powers
    decreasingly and permutes columns (streams), ``theta`` permutes rows
    (receivers). In both cases the reindexed matrix is
    ``A[rowperm][:, colperm]`` with all leading principal minors nonzero.
    Ties in ``order_key`` keep the original index order.
    """
    rows = _int_rows(a)
    key = np.asarray(order_key, float)
    if direction == UPLINK:
        pi = [int(i) for i in np.argsort(key, kind="stable")]
        theta = _greedy_columns([rows[i] for i in pi])
    elif direction == DOWNLINK:
        pi = [int(i) for i in np.argsort(-key, kind="stable")]
        cols_first = [[rows[r][c] for r in range(len(rows))] for c in pi]
        theta = _greedy_columns(cols_first)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return tuple(pi), tuple(theta)


def permuted_matrix(a, pi, theta, direction: str = UPLINK) -> np.ndarray:
    A = np.asarray(a.entries if isinstance(a, IntegerMatrix) else a)
    if direction == UPLINK:
        return A[np.ix_(pi, theta)]
    return A[np.ix_(theta, pi)]


def if_rates(p, sigma_sq, pi=None, theta=None, direction: str = UPLINK) -> np.ndarray:
    """Integer-forcing rates ``0.5 log2+(P / sigma)`` under an admissible pairing.

    Uplink: user ``theta[m]`` gets ``0.5 log+(P[theta[m]] / sigma[pi[m]])``.
    Downlink: receiver ``theta[m]`` gets ``0.5 log+(P[pi[m]] / sigma[theta[m]])``.
    With no permutations given, user ``m`` is paired with index ``m``.
    """
    pw = _powers(p)
    s = np.asarray(sigma_sq, float)
    L = len(pw)
    pi = np.arange(L) if pi is None else np.asarray(pi)
    theta = np.arange(L) if theta is None else np.asarray(theta)
    if direction == UPLINK:
        num, den = pw[theta], s[pi]
    else:
        num, den = pw[pi], s[theta]
    if np.any((den <= 0) & (num > 0)):
        raise errors.UnboundedRate("zero effective noise with positive power")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(num > 0, num / np.where(den > 0, den, 1.0), 0.0)
        r = np.where(ratio > 1.0, 0.5 * np.log2(np.where(ratio > 1.0, ratio, 1.0)), 0.0)
    out = np.empty(L)
    out[theta] = r
    return out


def effective_stats(cfg: Config) -> EffectiveStats:
    """Noise variances, SINRs, admissible permutations and the resulting rates."""
    sigma = effective_noise(cfg)
    pw = cfg.p.diagonal
    with np.errstate(divide="ignore"):
        beta = np.where(sigma > 0, pw / np.where(sigma > 0, sigma, 1.0), np.inf)
    if isinstance(cfg, UplinkConfig):
        pi, theta = find_admissible_permutations(cfg.a, sigma, UPLINK)
        rates = if_rates(pw, sigma, pi, theta, UPLINK)
    else:
        pi, theta = find_admissible_permutations(cfg.a, pw, DOWNLINK)
        rates = if_rates(pw, sigma, pi, theta, DOWNLINK)
    return EffectiveStats(sigma_sq=sigma, beta=beta, rates=rates, pi=pi, theta=theta)


def conventional_rates(cfg: Config) -> np.ndarray:
    """Single-user-decoding rates ``0.5 log2(1 + SINR_m)`` treating interference as noise.

    The SINR denominator is interference plus the equalized unit-variance
    noise (``||b_m||^2`` uplink, ``||c_m||^2`` downlink).
    """
    E, H, X, _, P = (x[0] for x in config_arrays(cfg))
    G = E @ H @ X
    gain = G * G * P[None, :]
    signal = np.diag(gain)
    denom = gain.sum(axis=1) - signal + np.sum(E * E, axis=1)
    if np.any((denom <= 0) & (signal > 0)):
        raise errors.UnboundedRate("interference-plus-noise is zero")
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = np.where(signal > 0, signal / np.where(denom > 0, denom, 1.0), 0.0)
    return 0.5 * np.log2(1.0 + sinr)
