"""Domain types for uplink (MAC) and downlink (BC) integer-forcing configurations.

All types are frozen dataclasses holding read-only numpy arrays, so a
configuration can be shared between threads or processes without copying.

Conventions
-----------
Uplink: channel ``H`` is ``N x M`` with column blocks of widths
``user_antennas``; ``b`` is ``L x N`` (rows are equalizers); ``c`` holds one
beamformer per user; ``p`` is the per-codeword power.

Downlink: channel is a list of ``M_m x N`` blocks, one per receiver; ``b`` is
``N x L`` (columns are beamformers); ``c`` holds one equalizer per receiver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import errors
from .exact import integer_rank

POWER_SLACK = 1e-9


def _frozen(x, dtype=float) -> np.ndarray:
    arr = np.array(x, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _real(x, what: str) -> np.ndarray:
    arr = np.asarray(x)
    if np.iscomplexobj(arr):
        raise errors.ComplexInputRejected(f"{what}: complex entries are not supported")
    return _frozen(arr)


def block_diag_beams(c: Sequence[np.ndarray], user_antennas: Sequence[int]) -> np.ndarray:
    """Assemble per-user beamformers into the ``M x L`` block-diagonal matrix."""
    offsets = np.concatenate([[0], np.cumsum(user_antennas)])
    out = np.zeros((int(offsets[-1]), len(c)))
    for ell, vec in enumerate(c):
        out[offsets[ell]:offsets[ell + 1], ell] = vec
    return out


@dataclass(frozen=True, eq=False)
class ChannelUplink:
    entries: np.ndarray
    user_antennas: tuple[int, ...] = None

    def __post_init__(self):
        h = _real(self.entries, "uplink channel")
        if h.ndim != 2:
            raise errors.DimensionMismatch("uplink channel must be a 2-D matrix")
        ua = self.user_antennas
        ua = (1,) * h.shape[1] if ua is None else tuple(int(m) for m in ua)
        object.__setattr__(self, "entries", h)
        object.__setattr__(self, "user_antennas", ua)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    @property
    def num_users(self) -> int:
        return len(self.user_antennas)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.user_antennas)]).astype(int)

    def block(self, ell: int) -> np.ndarray:
        o = self.offsets
        return self.entries[:, o[ell]:o[ell + 1]]

    def transpose(self) -> "ChannelDownlink":
        return ChannelDownlink(tuple(self.block(ell).T for ell in range(self.num_users)))


@dataclass(frozen=True, eq=False)
class ChannelDownlink:
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        blocks = tuple(_real(np.atleast_2d(b), "downlink channel block") for b in self.blocks)
        if not blocks:
            raise errors.DimensionMismatch("downlink channel needs at least one receiver")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_matrix(cls, h: np.ndarray, user_antennas: Sequence[int] | None = None):
        h = np.asarray(h)
        ua = [1] * h.shape[0] if user_antennas is None else list(user_antennas)
        o = np.concatenate([[0], np.cumsum(ua)]).astype(int)
        return cls(tuple(h[o[m]:o[m + 1], :] for m in range(len(ua))))

    @property
    def n(self) -> int:
        return self.blocks[0].shape[1]

    @property
    def user_antennas(self) -> tuple[int, ...]:
        return tuple(b.shape[0] for b in self.blocks)

    @property
    def num_users(self) -> int:
        return len(self.blocks)

    @property
    def entries(self) -> np.ndarray:
        return np.vstack(self.blocks)

    def transpose(self) -> ChannelUplink:
        return ChannelUplink(self.entries.T, self.user_antennas)


@dataclass(frozen=True, eq=False)
class IntegerMatrix:
    """Square integer matrix. Full rank is checked by :func:`validate` and by
    :meth:`require_full_rank`, not at construction."""

    entries: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.entries)
        if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
            raise errors.DimensionMismatch("integer matrix must be square")
        if not np.all(np.equal(np.round(raw), raw)):
            raise errors.ConfigError("integer matrix has non-integer entries")
        object.__setattr__(self, "entries", _frozen(np.round(raw), dtype=np.int64))

    @classmethod
    def identity(cls, size: int) -> "IntegerMatrix":
        return cls(np.eye(size, dtype=np.int64))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def T(self) -> "IntegerMatrix":
        return IntegerMatrix(self.entries.T)

    def rows(self) -> list[list[int]]:
        return [[int(v) for v in row] for row in self.entries]

    def rank(self) -> int:
        return integer_rank(self.rows())

    def require_full_rank(self) -> None:
        if self.rank() != self.size:
            raise errors.RankDeficientIntegerMatrix(
                f"integer matrix has rank {self.rank()} < {self.size}")


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    diagonal: np.ndarray
    budget: float

    def __post_init__(self):
        d = _real(self.diagonal, "power allocation")
        if d.ndim != 1:
            raise errors.DimensionMismatch("power allocation must be a vector")
        object.__setattr__(self, "diagonal", d)
        object.__setattr__(self, "budget", float(self.budget))


@dataclass(frozen=True, eq=False)
class UplinkConfig:
    channel: ChannelUplink
    a: IntegerMatrix
    b: np.ndarray
    c: tuple[np.ndarray, ...]
    p: PowerAllocation

    def __post_init__(self):
        if not isinstance(self.a, IntegerMatrix):
            object.__setattr__(self, "a", IntegerMatrix(self.a))
        object.__setattr__(self, "b", _real(self.b, "uplink equalizer"))
        object.__setattr__(self, "c", tuple(_real(np.atleast_1d(v), "uplink beamformer")
                                            for v in self.c))

    @property
    def num_users(self) -> int:
        return self.channel.num_users

    def c_matrix(self) -> np.ndarray:
        return block_diag_beams(self.c, self.channel.user_antennas)

    def consumed_power(self) -> float:
        return float(sum(np.dot(v, v) * pw for v, pw in zip(self.c, self.p.diagonal)))

    def replace(self, **changes) -> "UplinkConfig":
        fields = dict(channel=self.channel, a=self.a, b=self.b, c=self.c, p=self.p)
        fields.update(changes)
        return UplinkConfig(**fields)


@dataclass(frozen=True, eq=False)
class DownlinkConfig:
    channel: ChannelDownlink
    a: IntegerMatrix
    b: np.ndarray
    c: tuple[np.ndarray, ...]
    p: PowerAllocation

    def __post_init__(self):
        if not isinstance(self.a, IntegerMatrix):
            object.__setattr__(self, "a", IntegerMatrix(self.a))
        object.__setattr__(self, "b", _real(self.b, "downlink beamformer"))
        object.__setattr__(self, "c", tuple(_real(np.atleast_1d(v), "downlink equalizer")
                                            for v in self.c))

    @property
    def num_users(self) -> int:
        return self.channel.num_users

    def c_matrix(self) -> np.ndarray:
        """``L x M`` block-diagonal equalization matrix (transpose of the uplink form)."""
        return block_diag_beams(self.c, self.channel.user_antennas).T

    def consumed_power(self) -> float:
        col_norms = np.sum(self.b ** 2, axis=0)
        return float(np.dot(col_norms, self.p.diagonal))

    def replace(self, **changes) -> "DownlinkConfig":
        fields = dict(channel=self.channel, a=self.a, b=self.b, c=self.c, p=self.p)
        fields.update(changes)
        return DownlinkConfig(**fields)


@dataclass(frozen=True, eq=False)
class EffectiveStats:
    """Effective noise variances, SINRs, achievable rates and the pairing used.

    ``rates[theta[m]]`` is achieved by pairing the power of user ``theta[m]``
    with the ``pi[m]``-th effective noise variance (uplink); for the downlink
    the roles of the two permutations follow the row/column convention of
    :func:`intforce.rates.find_admissible_permutations`.
    """

    sigma_sq: np.ndarray
    beta: np.ndarray
    rates: np.ndarray
    pi: tuple[int, ...]
    theta: tuple[int, ...]

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rates))


Config = Union[UplinkConfig, DownlinkConfig]


def _check_shapes(cfg: Config) -> None:
    ch = cfg.channel
    L = ch.num_users
    if any(m <= 0 for m in ch.user_antennas):
        raise errors.DimensionMismatch("every user needs at least one antenna")
    if isinstance(cfg, UplinkConfig):
        if sum(ch.user_antennas) != ch.m:
            raise errors.DimensionMismatch(
                f"user antennas sum to {sum(ch.user_antennas)}, channel has {ch.m} columns")
        if cfg.b.shape != (L, ch.n):
            raise errors.DimensionMismatch(f"equalizer B must be {L}x{ch.n}, got {cfg.b.shape}")
    else:
        if any(blk.shape[1] != ch.n for blk in ch.blocks):
            raise errors.DimensionMismatch("downlink blocks disagree on transmit antenna count")
        if cfg.b.shape != (ch.n, L):
            raise errors.DimensionMismatch(f"beamformer B must be {ch.n}x{L}, got {cfg.b.shape}")
    if cfg.a.size != L:
        raise errors.DimensionMismatch(f"integer matrix must be {L}x{L}")
    if len(cfg.c) != L or any(v.shape != (m,) for v, m in zip(cfg.c, ch.user_antennas)):
        raise errors.DimensionMismatch("per-user vectors do not match user antenna counts")
    if cfg.p.diagonal.shape != (L,):
        raise errors.DimensionMismatch(f"power allocation must have {L} entries")


def validate(cfg: Config) -> None:
    """Check every invariant of an uplink or downlink configuration.

    Returns ``None`` when the configuration is valid and raises the
    :class:`~intforce.errors.ConfigError` subclass for the first violated
    invariant otherwise. Pure: the configuration is never modified.
    """
    _check_shapes(cfg)
    arrays = [cfg.channel.entries, cfg.b, cfg.p.diagonal, *cfg.c]
    if not all(np.all(np.isfinite(x)) for x in arrays):
        raise errors.ConfigError("non-finite entries in configuration")
    cfg.a.require_full_rank()
    if np.any(cfg.p.diagonal < 0):
        raise errors.ConfigError("negative power entry")
    if not cfg.p.budget > 0:
        raise errors.ConfigError("power budget must be positive")
    used = cfg.consumed_power()
    if used > cfg.p.budget * (1 + POWER_SLACK):
        raise errors.PowerBudgetExceeded(f"consumed power {used:.12g} > budget {cfg.p.budget:.12g}")
