"""Uplink-downlink duality for integer-forcing.

Effective noise is affine in the power vector: ``sigma = w + M rho``. Fixing
target SINRs ``beta`` turns this into the linear system
``(I - diag(beta) M) rho = w * beta``. Transposing every matrix of a
configuration transposes ``M`` and swaps the role of the weight vector,
which is what makes the same SINRs reachable in the other direction with the
same total power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from . import errors
from .model import DownlinkConfig, PowerAllocation, UplinkConfig
from .rates import config_arrays, effective_noise

NEG_CLAMP = 1e-12
IMAG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DualitySystem:
    """``(I - diag(beta) m) rho = weights * beta``."""

    m: np.ndarray
    weights: np.ndarray
    beta: np.ndarray

    def matrix(self) -> np.ndarray:
        return np.eye(len(self.beta)) - self.beta[:, None] * self.m

    def residual(self, rho) -> np.ndarray:
        return self.matrix() @ np.asarray(rho, float) - self.weights * self.beta


def _check_beta(beta) -> np.ndarray:
    b = np.asarray(beta, dtype=float)
    if np.any(~(b > 0)):
        raise errors.NonpositiveBeta("every target SINR must be strictly positive")
    return b


def _build(cfg, beta) -> DualitySystem:
    beta = _check_beta(beta)
    E, H, X, A, _ = config_arrays(cfg)
    m, w = K.duality_system(E, H, X, A)
    return DualitySystem(m=m[0], weights=w[0], beta=beta)


def build_uplink_system(cfg: UplinkConfig, beta) -> DualitySystem:
    """Entries ``M[m, l] = (b_m^T H c_l - a_ml)^2``, weights ``||b_m||^2``."""
    return _build(cfg, beta)


def build_downlink_system(cfg: DownlinkConfig, beta) -> DualitySystem:
    """Entries ``M[m, l] = (c_m^T H_m b_l - a_ml)^2``, weights ``||c_m||^2``."""
    return _build(cfg, beta)


def verify_m_matrix(f) -> bool:
    """True iff the Z-matrix ``f`` is a nonsingular M-matrix.

    Decided by requiring every real eigenvalue to be positive; eigenvalues
    whose imaginary part is within ``1e-10`` of zero count as real.
    """
    f = np.asarray(f, dtype=float)
    off = f - np.diag(np.diag(f))
    if np.any(off > 0):
        raise errors.NotZMatrix("off-diagonal entries must be nonpositive")
    eig = np.linalg.eigvals(f)
    real = eig[np.abs(eig.imag) <= IMAG_TOL].real
    return bool(np.all(real > 0))


def solve_dual_powers(sys: DualitySystem) -> np.ndarray:
    """Power vector attaining the system's SINRs; raises :class:`NotMMatrix` if none exists."""
    f = sys.matrix()
    if not verify_m_matrix(f):
        raise errors.NotMMatrix("SINR target infeasible: system matrix is not an M-matrix")
    rho = np.linalg.solve(f, sys.weights * sys.beta)
    if np.any(rho < -NEG_CLAMP * max(1.0, float(np.max(np.abs(rho))))):
        raise errors.NotMMatrix("negative power in dual solution")
    return np.maximum(rho, 0.0)


def _beta_of(cfg) -> np.ndarray:
    sigma = effective_noise(cfg)
    with np.errstate(divide="ignore", invalid="ignore"):
        return cfg.p.diagonal / sigma


def dual_transform(cfg, beta=None):
    """Transpose every matrix and re-solve the powers so the SINRs carry over.

    Parameters
    ----------
    cfg : UplinkConfig or DownlinkConfig
    beta : array, optional
        Target SINRs for the dual configuration; defaults to the SINRs the
        input configuration attains.

    Returns
    -------
    DownlinkConfig or UplinkConfig
        The dual configuration. Its budget is copied from ``cfg``.
    """
    beta = _check_beta(_beta_of(cfg) if beta is None else beta)
    if isinstance(cfg, UplinkConfig):
        dual = DownlinkConfig(channel=cfg.channel.transpose(), a=cfg.a.T, b=cfg.b.T, c=cfg.c,
                              p=cfg.p)
    else:
        dual = UplinkConfig(channel=cfg.channel.transpose(), a=cfg.a.T, b=cfg.b.T, c=cfg.c,
                            p=cfg.p)
    rho = solve_dual_powers(_build(dual, beta))
    return dual.replace(p=PowerAllocation(rho, cfg.p.budget))


def sum_rate_compare(rates_u, rates_d) -> bool:
    """Downlink sum rate is at least the uplink sum rate (slack ``1e-9``)."""
    ru = np.asarray(rates_u, float)
    if np.any(ru <= 0):
        raise ValueError("uplink rates must all be positive")
    return bool(np.sum(rates_d) >= np.sum(ru) - 1e-9)
