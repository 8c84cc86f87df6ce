"""Duality-based coordinate ascent over equalizers, beamformers and powers.

Each iteration (uplink view):

1. equalizer <- closed-form optimum for the current beams and powers;
2. jump to the dual downlink at the SINRs just reached (power solve);
3. dual-side equalizers (= uplink beams, transposed) <- closed-form optimum;
4. jump back to the uplink at the improved SINRs (power solve).

Every step improves every effective SINR individually and total power is
conserved by the power solves, so any monotone function of the SINRs
(in particular the sum rate) is nondecreasing along the run.

The integer matrix stays fixed; by default it is picked once by LLL on the
initial configuration.

:func:`run_batch` works on many independent channels at once (leading trial
axis); :func:`iterate_uplink` and :func:`iterate_downlink` are the
single-configuration entry points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from . import errors
from .lattice import DEFAULT_DELTA, select_integer_matrix
from .model import (ChannelDownlink, ChannelUplink, DownlinkConfig, EffectiveStats,
                    IntegerMatrix, PowerAllocation, UplinkConfig)
from .rates import effective_stats

DEGENERATE_BETA = 1e-12
NEG_CLAMP = 1e-12

OK = 0
DEGENERATE = 1
INFEASIBLE = 2


@dataclass(frozen=True)
class OptimizerOptions:
    tol: float = 1e-8
    max_iters: int = 500
    delta: float = DEFAULT_DELTA


@dataclass
class BatchResult:
    """Per-trial outcome of :func:`run_batch` (arrays indexed by trial)."""

    E: np.ndarray
    X: np.ndarray
    P: np.ndarray
    beta: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    status: np.ndarray
    beta_trace: list = field(default_factory=list)

    @property
    def sum_rate(self) -> np.ndarray:
        return sum_rate_of(self.beta)


@dataclass
class OptimizerReport:
    iterations: int
    beta_trace: list
    sum_rate_trace: list
    converged: bool
    final: UplinkConfig | DownlinkConfig
    stats: EffectiveStats


def sum_rate_of(beta) -> np.ndarray:
    """Sum over the last axis of ``0.5 log2+(beta)``."""
    beta = np.asarray(beta, float)
    return 0.5 * np.sum(np.log2(np.maximum(beta, 1.0)), axis=-1)


def _dual(E, H, X, A):
    t = (0, 2, 1)
    return X.transpose(t), H.transpose(t), E.transpose(t), A.transpose(t)


def _nonneg(rho) -> tuple[np.ndarray, np.ndarray]:
    scale = np.maximum(1.0, np.max(np.abs(rho), axis=1))
    ok = np.all(np.isfinite(rho), axis=1) & np.all(rho >= -NEG_CLAMP * scale[:, None], axis=1)
    return np.maximum(rho, 0.0), ok


def _one_iteration(E, H, X, A, P, eq_offsets, tx_offsets):
    E = K.optimal_equalizer(H, X, A, P, eq_offsets)
    beta_fwd = P / K.effective_noise(E, H, X, A, P)
    dE, dH, dX, dA = _dual(E, H, X, A)
    m_d, w_d = K.duality_system(dE, dH, dX, dA)
    rho_d, ok_d = _nonneg(K.solve_powers(m_d, w_d, beta_fwd))
    dE = K.optimal_equalizer(dH, dX, dA, rho_d, tx_offsets)
    beta_dual = rho_d / K.effective_noise(dE, dH, dX, dA, rho_d)
    X = dE.transpose(0, 2, 1)
    m_u, w_u = K.duality_system(E, H, X, A)
    P, ok_u = _nonneg(K.solve_powers(m_u, w_u, beta_dual))
    beta = P / K.effective_noise(E, H, X, A, P)
    return E, X, P, beta, ok_d & ok_u


def run_batch(E, H, X, A, P, eq_offsets=None, tx_offsets=None,
              opts: OptimizerOptions = OptimizerOptions(), keep_trace: bool = False) -> BatchResult:
    """Coordinate ascent on a batch of independent configurations.

    ``(E, H, X, A, P)`` are as in :mod:`intforce._kernels`. A trial stops
    updating once its largest relative SINR change drops below ``opts.tol``,
    so its result does not depend on which other trials share the batch.
    A trial whose power solve fails (``status == INFEASIBLE``) or whose SINR
    collapses below ``1e-12`` (``status == DEGENERATE``) keeps its last
    valid iterate.
    """
    E, H, X, A, P = (np.array(v, dtype=float) for v in (E, H, X, A, P))
    T = P.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = P / K.effective_noise(E, H, X, A, P)
    status = np.where(np.all(beta > DEGENERATE_BETA, axis=1), OK, DEGENERATE)
    iterations = np.zeros(T, dtype=int)
    converged = np.zeros(T, dtype=bool)
    active = status == OK
    trace = [beta.copy()] if keep_trace else []
    for _ in range(opts.max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            e, x, p, b, ok = _one_iteration(E[idx], H[idx], X[idx], A[idx], P[idx],
                                            eq_offsets, tx_offsets)
            good = ok & np.all(np.isfinite(b), axis=1)
            degenerate = good & ~np.all(b > DEGENERATE_BETA, axis=1)
            good &= ~degenerate
            change = np.max(np.abs(b - beta[idx]) / beta[idx], axis=1)
        upd = idx[good]
        E[upd], X[upd], P[upd], beta[upd] = e[good], x[good], p[good], b[good]
        iterations[upd] += 1
        status[idx[~ok]] = INFEASIBLE
        status[idx[degenerate]] = DEGENERATE
        done = good & (change < opts.tol)
        converged[idx[done]] = True
        active[idx[~good | done]] = False
        if keep_trace:
            trace.append(beta.copy())
    return BatchResult(E=E, X=X, P=P, beta=beta, iterations=iterations, converged=converged,
                       status=status, beta_trace=trace)


def _offsets(user_antennas) -> np.ndarray:
    return np.concatenate([[0], np.cumsum(user_antennas)]).astype(int)


def default_uplink_init(h: ChannelUplink, p_total: float, a: IntegerMatrix | None = None,
                        delta: float = DEFAULT_DELTA) -> UplinkConfig:
    """Unit beams along each user's first antenna, uniform powers summing to ``p_total``.

    The integer matrix defaults to the LLL choice for this beam/power pair;
    the equalizer starts at zero (the first iteration overwrites it).
    """
    L = h.num_users
    c = tuple(np.eye(m)[0] for m in h.user_antennas)
    p = PowerAllocation(np.full(L, p_total / L), p_total)
    if a is None:
        a, _ = select_integer_matrix(h, c, p, delta)
    return UplinkConfig(channel=h, a=a, b=np.zeros((L, h.n)), c=c, p=p)


def default_downlink_init(h: ChannelDownlink, p_total: float, a: IntegerMatrix | None = None,
                          delta: float = DEFAULT_DELTA) -> DownlinkConfig:
    """Exact dual of :func:`default_uplink_init` on the transposed channel.

    Beams are the optimal uplink equalizer for that initialization (transposed)
    and powers come from the dual power solve, so the downlink run follows the
    same trajectory as the uplink run on ``H^T``.
    """
    from .duality import dual_transform
    from .rates import optimal_uplink_equalizer

    hu = h.transpose()
    up = default_uplink_init(hu, p_total, None if a is None else a.T, delta)
    up = up.replace(b=optimal_uplink_equalizer(hu, up.c, up.p, up.a))
    return dual_transform(up)


def _report(result: BatchResult, rebuild, opts: OptimizerOptions) -> OptimizerReport:
    if result.status[0] == INFEASIBLE:
        raise errors.InfeasibleDualityStep("power solve left the M-matrix region")
    if result.status[0] == DEGENERATE:
        raise errors.DegenerateBeta("an effective SINR fell below 1e-12")
    final = rebuild(result.E[0], result.X[0], result.P[0])
    trace = [t[0] for t in result.beta_trace]
    return OptimizerReport(iterations=int(result.iterations[0]), beta_trace=trace,
                           sum_rate_trace=[float(sum_rate_of(b)) for b in trace],
                           converged=bool(result.converged[0]), final=final,
                           stats=effective_stats(final))


def iterate_uplink(h: ChannelUplink, p_total: float, a: IntegerMatrix | None = None,
                   init: UplinkConfig | None = None,
                   opts: OptimizerOptions = OptimizerOptions()) -> OptimizerReport:
    """Uplink sum-rate optimization with the integer matrix held fixed.

    ``a`` overrides the integer matrix of ``init``; with neither given the
    LLL choice for the default initialization is used.
    """
    if init is None:
        init = default_uplink_init(h, p_total, a, opts.delta)
    elif a is not None:
        init = init.replace(a=a)
    init.a.require_full_rank()
    offs = _offsets(h.user_antennas)
    result = run_batch(init.b[None], h.entries[None], init.c_matrix()[None],
                       init.a.entries[None], init.p.diagonal[None],
                       eq_offsets=None, tx_offsets=offs, opts=opts, keep_trace=True)

    def rebuild(E, X, P):
        c = tuple(X[offs[m]:offs[m + 1], m] for m in range(h.num_users))
        return UplinkConfig(channel=h, a=init.a, b=E, c=c, p=PowerAllocation(P, p_total))

    return _report(result, rebuild, opts)


def iterate_downlink(h: ChannelDownlink, p_total: float, a: IntegerMatrix | None = None,
                     init: DownlinkConfig | None = None,
                     opts: OptimizerOptions = OptimizerOptions()) -> OptimizerReport:
    """Downlink mirror of :func:`iterate_uplink` (equalizers first, then beams via the virtual uplink)."""
    if init is None:
        init = default_downlink_init(h, p_total, a, opts.delta)
    elif a is not None:
        init = init.replace(a=a)
    init.a.require_full_rank()
    offs = _offsets(h.user_antennas)
    result = run_batch(init.c_matrix()[None], h.entries[None], init.b[None],
                       init.a.entries[None], init.p.diagonal[None],
                       eq_offsets=offs, tx_offsets=None, opts=opts, keep_trace=True)

    def rebuild(E, X, P):
        c = tuple(E[m, offs[m]:offs[m + 1]] for m in range(h.num_users))
        return DownlinkConfig(channel=h, a=init.a, b=X, c=c, p=PowerAllocation(P, p_total))

    return _report(result, rebuild, opts)
