"""Batched array kernels shared by the rate, duality and optimizer modules.

Uplink and downlink effective noise have the same shape once written in
terms of an *equalization* matrix ``E`` (``L x rx``), a channel ``H``
(``rx x tx``) and a *transmit* matrix ``X`` (``tx x L``)::

    sigma_m = ||e_m||^2 + ||(e_m^T H X - a_m^T) P^{1/2}||^2

Uplink: ``E = B_u``, ``H = H_u``, ``X = C_u`` (block diagonal).
Downlink: ``E = C_d`` (block diagonal), ``H = H_d``, ``X = B_d``.
The dual of ``(E, H, X, A)`` is ``(X^T, H^T, E^T, A^T)``.

Every array carries a leading trial axis ``T``. ``offsets`` describes the
block structure of a block-diagonal equalizer: row ``m`` of ``E`` may only be
nonzero on columns ``offsets[m]:offsets[m+1]``; ``None`` means unconstrained.
"""

from __future__ import annotations

import numpy as np


def effective_matrix(E, H, X):
    return E @ H @ X


def effective_noise(E, H, X, A, P):
    """Effective noise variances, shape ``(T, L)``."""
    resid = effective_matrix(E, H, X) - A
    return np.sum(E * E, axis=2) + np.einsum("tml,tl->tm", resid * resid, P)


def optimal_equalizer(H, X, A, P, offsets=None):
    """Per-row minimizer of :func:`effective_noise` over ``E``.

    Row ``m`` solves ``e_m = (I + W P W^T)^{-1} W P a_m`` with ``W`` the
    effective channel seen by that row (its antenna block of ``H`` times ``X``).
    """
    T, L = P.shape
    rx = H.shape[1]
    if offsets is None:
        W = H @ X                                          # (T, rx, L)
        K = np.eye(rx) + (W * P[:, None, :]) @ W.transpose(0, 2, 1)
        rhs = W @ (P[:, :, None] * A.transpose(0, 2, 1))   # columns W P a_m
        return np.linalg.solve(K, rhs).transpose(0, 2, 1)
    offsets = np.asarray(offsets)
    E = np.zeros((T, L, rx))
    if np.all(np.diff(offsets) == 1):
        # one receive antenna per row: closed-form scalar solve for all rows at once
        W = H @ X                                          # row m is w_m^T
        num = np.sum(W * P[:, None, :] * A, axis=2)
        den = 1.0 + np.sum(W * W * P[:, None, :], axis=2)
        idx = np.arange(L)
        E[:, idx, offsets[:-1]] = num / den
        return E
    for m in range(L):
        lo, hi = offsets[m], offsets[m + 1]
        W = H[:, lo:hi, :] @ X                             # (T, M_m, L)
        K = np.eye(hi - lo) + (W * P[:, None, :]) @ W.transpose(0, 2, 1)
        rhs = W @ (P * A[:, m, :])[:, :, None]
        E[:, m, lo:hi] = np.linalg.solve(K, rhs)[:, :, 0]
    return E


def duality_system(E, H, X, A):
    """Interference matrix ``M`` and noise weights ``w`` of the power linear system.

    ``sigma = w + M rho`` for any power vector ``rho``.
    """
    resid = effective_matrix(E, H, X) - A
    return resid * resid, np.sum(E * E, axis=2)


def solve_powers(M, w, beta):
    """``rho = (I - diag(beta) M)^{-1} (w * beta)``, batched."""
    L = M.shape[-1]
    F = np.eye(L) - beta[:, :, None] * M
    return np.linalg.solve(F, (w * beta)[:, :, None])[:, :, 0]


def transmit_power(X, rho):
    """Total consumed power ``sum_l ||x_l||^2 rho_l`` for transmit matrix columns."""
    return np.sum(np.sum(X * X, axis=1) * rho, axis=1)
