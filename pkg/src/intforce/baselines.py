"""Reference curves: MAC/BC sum capacity, the identity-matrix baseline and the
constant-gap construction for the downlink."""

from __future__ import annotations

import numpy as np

from . import errors
from .duality import dual_transform
from .lattice import DEFAULT_DELTA, select_integer_matrix
from .model import (ChannelDownlink, ChannelUplink, IntegerMatrix, PowerAllocation,
                    UplinkConfig)
from .optimizer import OptimizerOptions, iterate_uplink
from .rates import effective_stats, optimal_uplink_equalizer

LN2 = np.log(2.0)
ARMIJO_C = 1e-4
MIN_STEP = 1e-12
STALL_REL = 1e-14
STALL_ITERS = 3


def _logdet_rate(H, x, p_total):
    """``0.5 log2 det(I + p_total H diag(x) H^T)`` for a batch."""
    N = H.shape[1]
    K = np.eye(N) + p_total[:, None, None] * (H * x[:, None, :]) @ H.transpose(0, 2, 1)
    sign, logdet = np.linalg.slogdet(K)
    return 0.5 * logdet / LN2, K


def _project_budget(v):
    """Euclidean projection of each row onto ``{x >= 0, sum(x) <= 1}``."""
    x = np.maximum(v, 0.0)
    over = x.sum(axis=1) > 1.0
    if np.any(over):
        w = v[over]
        u = -np.sort(-w, axis=1)
        css = np.cumsum(u, axis=1) - 1.0
        k = np.arange(1, w.shape[1] + 1)
        cond = u - css / k > 0
        r = w.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
        tau = css[np.arange(len(w)), r] / (r + 1)
        x[over] = np.maximum(w - tau[:, None], 0.0)
    return x


def mac_sum_capacity_batch(H, p_total, tol: float = 1e-7, max_iters: int = 10_000):
    """Sum capacity of single-antenna-user MACs, one per leading index of ``H``.

    Maximizes ``0.5 log2 det(I + H diag(p) H^T)`` over ``p >= 0``,
    ``sum(p) <= p_total`` by projected gradient ascent on the normalized
    allocation ``x = p / p_total``. Each iteration backtracks (Armijo,
    shrink 0.5) from a trial step that is 1 on the first iteration and the
    Barzilai-Borwein step afterwards. Stops once the Frank-Wolfe duality gap,
    an upper bound on the suboptimality of a concave objective, is below
    ``tol``.

    Returns
    -------
    (values, powers) : arrays of shape ``(T,)`` and ``(T, L)``
    """
    H = np.asarray(H, dtype=float)
    T, N, L = H.shape
    pt = np.broadcast_to(np.asarray(p_total, dtype=float), (T,)).copy()
    x = np.full((T, L), 1.0 / L)
    f, K = _logdet_rate(H, x, pt)
    x_prev = np.zeros((T, L))
    g_prev = np.zeros((T, L))
    has_prev = np.zeros(T, dtype=bool)
    stalls = np.zeros(T, dtype=int)
    active = np.ones(T, dtype=bool)
    for _ in range(max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Hi, xi, fi, pi = H[idx], x[idx], f[idx], pt[idx]
        Kinv_h = np.linalg.solve(K[idx], Hi)
        g = pi[:, None] * np.sum(Hi * Kinv_h, axis=1) / (2 * LN2)
        gap = np.maximum(g.max(axis=1), 0.0) - np.sum(g * xi, axis=1)
        done = gap < tol
        active[idx[done]] = False
        todo = ~done
        idx, Hi, xi, fi, pi, g = idx[todo], Hi[todo], xi[todo], fi[todo], pi[todo], g[todo]
        s = xi - x_prev[idx]
        curv = -np.sum(s * (g - g_prev[idx]), axis=1)
        use_bb = has_prev[idx] & (curv > 0)
        step = np.where(use_bb, np.sum(s * s, axis=1) / np.where(use_bb, curv, 1.0), 1.0)
        step = np.clip(step, MIN_STEP, 1.0 / MIN_STEP)
        x_prev[idx], g_prev[idx], has_prev[idx] = xi, g, True
        pending = np.ones(idx.size, dtype=bool)
        f_start = fi.copy()
        while np.any(pending):
            j = np.flatnonzero(pending)
            cand = _project_budget(xi[j] + step[j, None] * g[j])
            fc, Kc = _logdet_rate(Hi[j], cand, pi[j])
            ok = fc >= fi[j] + ARMIJO_C * np.sum(g[j] * (cand - xi[j]), axis=1)
            acc = j[ok]
            x[idx[acc]], f[idx[acc]], K[idx[acc]] = cand[ok], fc[ok], Kc[ok]
            pending[acc] = False
            step[j[~ok]] *= 0.5
            stuck = j[~ok][step[j[~ok]] < MIN_STEP]
            pending[stuck] = False
            active[idx[stuck]] = False
        # at floating-point resolution the gap can sit just above tol forever
        flat = f[idx] - f_start <= STALL_REL * (1.0 + np.abs(f_start))
        stalls[idx] = np.where(flat, stalls[idx] + 1, 0)
        active[idx[stalls[idx] >= STALL_ITERS]] = False
    return f, x * pt[:, None]


def _require_single_antenna(h: ChannelUplink):
    if any(m != 1 for m in h.user_antennas):
        raise errors.MultiAntennaUserUnsupported("capacity solver handles single-antenna users only")


def mac_sum_capacity(h: ChannelUplink, p_total: float, tol: float = 1e-7) -> float:
    """Uplink sum capacity under a total power constraint."""
    _require_single_antenna(h)
    values, _ = mac_sum_capacity_batch(h.entries[None], p_total, tol)
    return float(values[0])


def mac_capacity_powers(h: ChannelUplink, p_total: float, tol: float = 1e-7) -> np.ndarray:
    _require_single_antenna(h)
    return mac_sum_capacity_batch(h.entries[None], p_total, tol)[1][0]


def bc_sum_capacity(h: ChannelDownlink, p_total: float, tol: float = 1e-7) -> float:
    """Downlink sum capacity, evaluated as the capacity of the dual uplink."""
    return mac_sum_capacity(h.transpose(), p_total, tol)


def zf_baseline(h: ChannelUplink, p_total: float,
                opts: OptimizerOptions = OptimizerOptions()) -> float:
    """Sum rate of the duality optimizer with the integer matrix pinned to the identity.

    Kept under its historical "zero-forcing" name; with the optimal
    equalizer it is the linear MMSE receiver.
    """
    rep = iterate_uplink(h, p_total, a=IntegerMatrix.identity(h.num_users), opts=opts)
    return rep.stats.sum_rate


def constant_gap_check(h: ChannelDownlink, p_total: float, tol: float = 1e-7,
                       delta: float = DEFAULT_DELTA):
    """Build the capacity-based downlink integer-forcing scheme and test the gap bound.

    The dual uplink uses the capacity-achieving powers with unit beams, an
    LLL-selected integer matrix and the optimal equalizer; the resulting
    SINRs are carried to the downlink by the duality power solve. Users the
    capacity solution leaves silent are dropped.

    Returns
    -------
    (if_sum, capacity, gap_bound_ok)
    """
    hu = h.transpose()
    _require_single_antenna(hu)
    L = hu.num_users
    values, powers = mac_sum_capacity_batch(hu.entries[None], p_total, tol)
    capacity, p_opt = float(values[0]), powers[0]
    bound = capacity - 0.5 * L * np.log2(L) - 1e-6
    active = np.flatnonzero(p_opt > 1e-9 * p_total)
    h_act = hu.entries[:, active]
    if active.size == 0 or not np.any(h_act):
        return 0.0, capacity, bool(0.0 >= bound)
    up_ch = ChannelUplink(h_act)
    c = tuple(np.ones(1) for _ in active)
    p = PowerAllocation(p_opt[active], p_total)
    a, _ = select_integer_matrix(up_ch, c, p, delta)
    b = optimal_uplink_equalizer(up_ch, c, p, a)
    up = UplinkConfig(channel=up_ch, a=a, b=b, c=c, p=p)
    down = dual_transform(up)
    if_sum = effective_stats(down).sum_rate
    return if_sum, capacity, bool(if_sum >= bound)
