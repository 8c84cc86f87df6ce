"""Symbol-level arithmetic over Z_p: algebraic SIC (uplink) and staged pre-inversion (downlink).

Messages live on ``k`` signal levels, level 1 being the most significant.
User ``l`` carries information on levels ``k_c[l]+1 .. k_f[l]``; its top
``k_c[l]`` levels are "don't care" positions it cannot set, and levels below
``k_f[l]`` are zero. Arrays of symbols are stored as ``L x k`` integer arrays
(row = user, column = level, column 0 = level 1), residues in ``[0, p)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import errors
from .exact import integer_det, leading_minors
from .model import IntegerMatrix

PRIME_SEARCH_CAP = 10**6


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _rows(a) -> list[list[int]]:
    if isinstance(a, IntegerMatrix):
        return a.rows()
    if isinstance(a, FieldMatrix):
        return [[int(v) for v in row] for row in a.entries]
    return [[int(v) for v in row] for row in np.asarray(a)]


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    """Square matrix over ``Z_p`` with canonical residues."""

    entries: np.ndarray
    p: int

    def __post_init__(self):
        if not is_prime(int(self.p)):
            raise ValueError(f"modulus {self.p} is not prime")
        arr = np.asarray(self.entries, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("field matrix must be square")
        arr = np.mod(arr, self.p)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "p", int(self.p))

    @classmethod
    def from_integer(cls, a, p: int) -> "FieldMatrix":
        """``[A] mod p``."""
        return cls(np.array(_rows(a), dtype=np.int64), p)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def leading(self, m: int) -> "FieldMatrix":
        """Leading ``m x m`` principal submatrix."""
        return FieldMatrix(self.entries[:m, :m], self.p)

    def __matmul__(self, other):
        if isinstance(other, FieldMatrix):
            return FieldMatrix(self.entries @ other.entries, self.p)
        return np.mod(self.entries @ np.asarray(other, dtype=np.int64), self.p)

    def __eq__(self, other) -> bool:
        return (isinstance(other, FieldMatrix) and self.p == other.p
                and np.array_equal(self.entries, other.entries))

    __hash__ = None

    def tolist(self) -> list[list[int]]:
        return self.entries.tolist()


def choose_prime(a, floor: int = 2, cap: int = PRIME_SEARCH_CAP) -> int:
    """Smallest prime ``p >= floor`` keeping ``det(A)`` and every leading principal minor nonzero mod ``p``.

    ``a`` should already carry its admissible reindexing.
    """
    rows = _rows(a)
    if integer_det(rows) == 0:
        raise errors.RankDeficientIntegerMatrix("integer matrix is singular")
    minors = leading_minors(rows)
    for cand in range(max(int(floor), 2), cap + 1):
        if is_prime(cand) and all(d % cand for d in minors):
            return cand
    raise errors.PrimeSearchExhausted(f"no suitable prime below {cap}")


def invert_mod_p(q: FieldMatrix) -> FieldMatrix:
    """Gauss-Jordan inverse over ``Z_p``."""
    p, n = q.p, q.size
    work = [[int(v) for v in row] + [int(i == r) for i in range(n)] for r, row in enumerate(q.entries)]
    for col in range(n):
        piv = next((r for r in range(col, n) if work[r][col] % p), None)
        if piv is None:
            raise errors.SingularModP(f"matrix is singular over Z_{p}")
        work[col], work[piv] = work[piv], work[col]
        inv = pow(work[col][col], -1, p)
        work[col] = [(v * inv) % p for v in work[col]]
        for r in range(n):
            if r != col and work[r][col]:
                f = work[r][col]
                work[r] = [(x - f * y) % p for x, y in zip(work[r], work[col])]
    return FieldMatrix(np.array([row[n:] for row in work], dtype=np.int64), p)


def triangularize_over_zp(a, p: int, theta: Sequence[int] | None = None):
    """Lower unitriangular ``L_bar`` with ``[L_bar A] mod p`` upper triangular.

    With a column order ``theta``, triangularity holds for ``A_bar[:, theta]``
    (the codewords are cancelled in that order); ``A_bar`` itself is
    returned in the original column order.

    Returns
    -------
    (l_bar, a_bar) : FieldMatrix, FieldMatrix
    """
    q = FieldMatrix.from_integer(a, p)
    n = q.size
    order = list(range(n)) if theta is None else [int(t) for t in theta]
    if sorted(order) != list(range(n)):
        raise ValueError("theta must be a permutation")
    work = [[int(q.entries[r, c]) for c in order] for r in range(n)]
    low = [[int(r == c) for c in range(n)] for r in range(n)]
    for col in range(n):
        if work[col][col] % p == 0:
            raise errors.ZeroLeadingMinor(f"leading minor {col + 1} vanishes mod {p}")
        inv = pow(work[col][col], -1, p)
        for r in range(col + 1, n):
            f = (work[r][col] * inv) % p
            if f:
                work[r] = [(x - f * y) % p for x, y in zip(work[r], work[col])]
                low[r] = [(x - f * y) % p for x, y in zip(low[r], low[col])]
    l_bar = FieldMatrix(np.array(low, dtype=np.int64), p)
    return l_bar, l_bar @ q


def is_lower_unitriangular(f: FieldMatrix) -> bool:
    e = f.entries
    return bool(np.all(np.diag(e) == 1) and not np.any(np.triu(e, 1)))


@dataclass(frozen=True)
class LevelPlan:
    """Signal-level layout: user ``l`` informs levels ``k_c[l]+1 .. k_f[l]`` of ``k``."""

    k_c: tuple[int, ...]
    k_f: tuple[int, ...]
    k: int

    def __post_init__(self):
        kc = tuple(int(v) for v in self.k_c)
        kf = tuple(int(v) for v in self.k_f)
        object.__setattr__(self, "k_c", kc)
        object.__setattr__(self, "k_f", kf)
        if len(kc) != len(kf) or not kc:
            raise ValueError("k_c and k_f need one entry per user")
        if any(not 0 <= c <= f <= self.k for c, f in zip(kc, kf)):
            raise ValueError("need 0 <= k_c[l] <= k_f[l] <= k for every user")
        if any(x > y for x, y in zip(kc, kc[1:])):
            raise ValueError("k_c must be nondecreasing (users sorted by decreasing power)")

    @property
    def num_users(self) -> int:
        return len(self.k_c)

    def info_mask(self) -> np.ndarray:
        """Boolean ``L x k``: True on each user's information levels."""
        lv = np.arange(1, self.k + 1)
        kc, kf = np.array(self.k_c), np.array(self.k_f)
        return (lv[None, :] > kc[:, None]) & (lv[None, :] <= kf[:, None])

    def dont_care_mask(self) -> np.ndarray:
        lv = np.arange(1, self.k + 1)
        return lv[None, :] <= np.array(self.k_c)[:, None]

    def message_lengths(self) -> tuple[int, ...]:
        return tuple(f - c for c, f in zip(self.k_c, self.k_f))


@dataclass(frozen=True, eq=False)
class MessageSet:
    """Zero-padded message symbols ``w_bar`` (``L x k``) for a level plan."""

    padded: np.ndarray
    plan: LevelPlan
    p: int

    def __post_init__(self):
        arr = np.mod(np.asarray(self.padded, dtype=np.int64), self.p)
        if arr.shape != (self.plan.num_users, self.plan.k):
            raise ValueError("padded messages must be L x k")
        if np.any(arr[~self.plan.info_mask()]):
            raise ValueError("symbols outside a user's information band must be zero")
        arr.setflags(write=False)
        object.__setattr__(self, "padded", arr)

    @classmethod
    def from_messages(cls, messages: Sequence[Sequence[int]], plan: LevelPlan, p: int):
        out = np.zeros((plan.num_users, plan.k), dtype=np.int64)
        for ell, (w, n) in enumerate(zip(messages, plan.message_lengths())):
            if len(w) != n:
                raise ValueError(f"user {ell} needs {n} symbols, got {len(w)}")
            out[ell, plan.k_c[ell]:plan.k_f[ell]] = w
        return cls(out, plan, p)

    @classmethod
    def random(cls, plan: LevelPlan, p: int, rng: np.random.Generator):
        out = rng.integers(0, p, size=(plan.num_users, plan.k))
        return cls(np.where(plan.info_mask(), out, 0), plan, p)

    def messages(self) -> list[np.ndarray]:
        return [self.padded[ell, c:f].copy()
                for ell, (c, f) in enumerate(zip(self.plan.k_c, self.plan.k_f))]


@dataclass(frozen=True, eq=False)
class Precoded:
    """Encoder output: level symbols ``v`` and the don't-care interference ``e``."""

    v: np.ndarray
    e: np.ndarray


def interference_labels(plan: LevelPlan, p: int, e_seed: int) -> np.ndarray:
    """Pseudorandom don't-care values, user ``l`` filling only its top ``k_c[l]`` levels."""
    e = np.zeros((plan.num_users, plan.k), dtype=np.int64)
    for ell, kc in enumerate(plan.k_c):
        e[ell, :kc] = np.random.default_rng([int(e_seed), ell]).integers(0, p, size=kc)
    return e


def downlink_precode(w: MessageSet, q_d: FieldMatrix, plan: LevelPlan | None = None,
                     e_seed: int = 0) -> Precoded:
    """Pre-invert the integer combinations level by level.

    On a level that users ``1..m`` can set (``k_c[m] < i <= k_c[m+1]``) the
    first ``m`` users solve ``Q[:m, :m] v = w_bar + Q[:m, m:] e`` so that the
    interference of the silent users cancels at every receiver. Levels no
    user can set stay zero.
    """
    plan = w.plan if plan is None else plan
    p = q_d.p
    if w.p != p:
        raise ValueError("message field and matrix field differ")
    L, k = plan.num_users, plan.k
    if q_d.size != L:
        raise errors.DimensionMismatch("integer matrix size differs from the number of users")
    e = interference_labels(plan, p, e_seed)
    v = np.zeros((L, k), dtype=np.int64)
    kc = np.array(plan.k_c)
    inverses: dict[int, FieldMatrix] = {}
    for i in range(1, k + 1):
        m = int(np.sum(kc < i))
        if m == 0:
            continue
        if m not in inverses:
            inverses[m] = invert_mod_p(q_d.leading(m))
        rhs = w.padded[:m, i - 1] + q_d.entries[:m, m:] @ e[m:, i - 1]
        v[:m, i - 1] = inverses[m] @ rhs
    return Precoded(v=v, e=e)


def combine(v, e, q: FieldMatrix) -> np.ndarray:
    """Linear labels ``u_m = sum_l q_ml (v_l - e_l)`` seen by each receiver."""
    return q @ np.mod(np.asarray(v) - np.asarray(e), q.p)


def downlink_decode_verify(v, e, q_d: FieldMatrix, plan: LevelPlan,
                           expected: MessageSet | None = None) -> list[np.ndarray]:
    """Receiver-side labels, checked against the zero-padding layout (and ``expected`` if given).

    Returns each user's recovered message symbols.
    """
    u = combine(v, e, q_d)
    tail = ~plan.info_mask() & ~plan.dont_care_mask()
    if np.any(u[tail]):
        raise errors.VerificationFailed("nonzero symbol below a user's information band")
    got = [u[ell, c:f].copy() for ell, (c, f) in enumerate(zip(plan.k_c, plan.k_f))]
    if expected is not None:
        for ell, (g, w) in enumerate(zip(got, expected.messages())):
            if not np.array_equal(g, w):
                raise errors.VerificationFailed(f"user {ell} message not recovered")
    return got


def uplink_combine(w: MessageSet, q_u: FieldMatrix, fill_seed: int = 0) -> np.ndarray:
    """Combinations ``u = Q w_tilde`` where ``w_tilde`` has arbitrary don't-care entries."""
    fill = interference_labels(w.plan, w.p, fill_seed)
    return q_u @ np.mod(w.padded + fill, w.p)


def uplink_sic_solve(u, q_u: FieldMatrix, plan: LevelPlan | None = None) -> MessageSet:
    """Solve the decoded combinations for the messages (``Q^{-1} u`` on every level).

    Don't-care entries are discarded. Without a plan every level is treated
    as information.
    """
    u = np.asarray(u, dtype=np.int64)
    inv = invert_mod_p(q_u)
    w_tilde = inv @ u
    if plan is None:
        plan = LevelPlan((0,) * q_u.size, (u.shape[1],) * q_u.size, u.shape[1])
    return MessageSet(np.where(plan.info_mask(), w_tilde, 0), plan, q_u.p)


def _fmt(f) -> str:
    return str(np.asarray(f.entries if isinstance(f, FieldMatrix) else f).tolist())


def example_trace(which: int) -> str:
    """Worked two-user traces over ``Z_3``.

    1: algebraic SIC for ``A = [[2,1],[0,1]]`` in both cancellation orders.
    2: downlink admissibility of ``[[2,1],[0,1]]``, its row swap and ``[[2,1],[1,1]]``.
    """
    p = 3
    lines: list[str] = []
    if which == 1:
        a = [[2, 1], [0, 1]]
        lines.append(f"A = {a} over Z_{p}; prime search from 2 gives p = {choose_prime(a, 2)}")
        for name, theta in (("identity", (0, 1)), ("swapped", (1, 0))):
            l_bar, a_bar = triangularize_over_zp(a, p, theta)
            lines.append(f"order {name} {list(theta)}: L_bar = {_fmt(l_bar)}, "
                         f"A_bar = [L_bar A] mod {p} = {_fmt(a_bar)}, "
                         f"A_bar[:, order] = {_fmt(a_bar.entries[:, list(theta)])}")
        rng = np.random.default_rng(2)
        plan = LevelPlan((0, 1), (3, 3), 3)
        w = MessageSet.random(plan, p, rng)
        q = FieldMatrix.from_integer(a, p)
        u = uplink_combine(w, q, fill_seed=1)
        rec = uplink_sic_solve(u, q, plan)
        lines.append(f"uplink round trip: w_bar = {_fmt(w.padded)}, u = {_fmt(u)}, "
                     f"recovered = {_fmt(rec.padded)}")
    elif which == 2:
        mats = {"A1": [[2, 1], [0, 1]], "A2": [[0, 1], [2, 1]], "A3": [[2, 1], [1, 1]]}
        for name, a in mats.items():
            for label, rows in (("identity", (0, 1)), ("swapped", (1, 0))):
                perm = [a[r] for r in rows]
                minors = [d % p for d in leading_minors(perm)]
                ok = all(minors)
                lines.append(f"{name} = {a}, {label} user order: leading minors mod {p} = "
                             f"{minors} -> {'admissible' if ok else 'inadmissible'}")
        a = mats["A1"]
        q = FieldMatrix.from_integer(a, p)
        plan = LevelPlan((0, 1), (3, 3), 3)
        w = MessageSet.random(plan, p, np.random.default_rng(2))
        pre = downlink_precode(w, q, plan, e_seed=1)
        got = downlink_decode_verify(pre.v, pre.e, q, plan, expected=w)
        lines.append(f"downlink round trip with A1: w_bar = {_fmt(w.padded)}, v = {_fmt(pre.v)}, "
                     f"e = {_fmt(pre.e)}, recovered = {[g.tolist() for g in got]}")
    else:
        raise ValueError("example must be 1 or 2")
    return "\n".join(lines)
