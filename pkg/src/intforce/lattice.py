"""Effective lattice basis and LLL-based integer matrix selection.

With the MMSE-optimal equalizer, the effective noise of the ``m``-th
integer combination is ``||a_m^T F||^2`` where ``F F^T = (P^{-1} + C^T H^T H C)^{-1}``.
Picking the integer matrix is then a short-basis problem for the lattice
``{a^T F : a in Z^L}``, approximated here by LLL.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .model import ChannelUplink, IntegerMatrix, PowerAllocation, block_diag_beams

DEFAULT_DELTA = 0.75
MAX_CONDITION = 1e14


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower-triangular ``F`` with positive diagonal."""

    f: np.ndarray

    @property
    def size(self) -> int:
        return self.f.shape[0]


def _powers(p) -> np.ndarray:
    return np.asarray(p.diagonal if isinstance(p, PowerAllocation) else p, dtype=float)


def _beam_matrix(h: ChannelUplink, c) -> np.ndarray:
    c_arr = np.asarray(c, dtype=float) if not isinstance(c, (list, tuple)) else None
    if c_arr is not None and c_arr.ndim == 2:
        return c_arr
    return block_diag_beams([np.atleast_1d(np.asarray(v, float)) for v in c], h.user_antennas)


def cholesky_effective_basis(h: ChannelUplink, c, p) -> CholeskyFactor:
    """Cholesky factor of ``(P^{-1} + C^T H^T H C)^{-1}``.

    Parameters
    ----------
    h : ChannelUplink
    c : sequence of per-user beamformers, or the ``M x L`` block matrix
    p : PowerAllocation or array of strictly positive powers
    """
    pw = _powers(p)
    if np.any(pw <= 0):
        raise errors.NonpositivePower("every power must be strictly positive to invert P")
    hc = h.entries @ _beam_matrix(h, c)
    gram = np.diag(1.0 / pw) + hc.T @ hc
    if np.linalg.cond(gram) > MAX_CONDITION:
        raise errors.NumericallySingularGram(f"condition number {np.linalg.cond(gram):.3g}")
    cov = np.linalg.inv(gram)
    f = np.linalg.cholesky(0.5 * (cov + cov.T))
    return CholeskyFactor(f)


def _round_half_to_zero(x: float) -> int:
    return int(np.sign(x) * np.ceil(abs(x) - 0.5))


def _gram_schmidt(basis: np.ndarray):
    # rows of basis = R^T Q^T, so mu[k, j] = R[j, k] / R[j, j] and |b*_j|^2 = R[j, j]^2
    r = np.linalg.qr(basis.T, mode="r")
    diag = np.diag(r)
    mu = (r / diag[:, None]).T
    return mu, diag * diag


def lll_reduce(f, delta: float = DEFAULT_DELTA) -> IntegerMatrix:
    """LLL-reduce the row lattice of ``F`` and return the unimodular change of basis.

    The returned rows ``a_m`` satisfy ``a_m^T F = m``-th reduced basis vector,
    sorted by increasing norm (ties keep reduction order).
    """
    if not 0.25 < delta < 1:
        raise ValueError("LLL parameter delta must lie in (1/4, 1)")
    f = np.asarray(f.f if isinstance(f, CholeskyFactor) else f, dtype=float)
    n = f.shape[0]
    basis = f.copy()
    u = np.eye(n, dtype=np.int64)
    mu, bstar = _gram_schmidt(basis)
    k = 1
    swaps = 0
    while k < n:
        for j in range(k - 1, -1, -1):
            q = _round_half_to_zero(mu[k, j])
            if q:
                basis[k] -= q * basis[j]
                u[k] -= q * u[j]
                mu[k, :j] -= q * mu[j, :j]
                mu[k, j] -= q
        if bstar[k] >= (delta - mu[k, k - 1] ** 2) * bstar[k - 1]:
            k += 1
            continue
        basis[[k - 1, k]] = basis[[k, k - 1]]
        u[[k - 1, k]] = u[[k, k - 1]]
        mu, bstar = _gram_schmidt(basis)
        k = max(k - 1, 1)
        swaps += 1
        if swaps > 100_000:
            raise RuntimeError("LLL failed to terminate")
    norms = np.sum((u @ f) ** 2, axis=1)
    order = np.argsort(norms, kind="stable")
    return IntegerMatrix(u[order])


def select_integer_matrix(h: ChannelUplink, c, p, delta: float = DEFAULT_DELTA):
    """Pick ``A`` by LLL on the effective basis.

    Returns
    -------
    (IntegerMatrix, ndarray)
        The integer matrix and the effective noise ``||a_m^T F||^2`` of each
        row, nondecreasing.
    """
    fac = cholesky_effective_basis(h, c, p)
    a = lll_reduce(fac, delta)
    sigma_sq = np.sum((a.entries @ fac.f) ** 2, axis=1)
    return a, sigma_sq
