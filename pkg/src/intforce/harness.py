"""Seeded Monte Carlo sweeps over i.i.d. Gaussian channels and CSV output.

Reproducibility rests on three choices:

* every trial draws its channel from its own counter-keyed Philox stream,
  so the sample set does not depend on scheduling;
* trials are processed in fixed chunks whose boundaries depend only on the
  trial count, and each chunk's numbers depend only on its own channels;
* means and standard errors use an explicit pairwise summation tree over
  trial-ordered values.

Together these make the CSV byte-identical for any number of worker processes.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from .baselines import mac_sum_capacity_batch
from .lattice import select_integer_matrix
from .model import ChannelUplink, PowerAllocation
from .optimizer import OK, OptimizerOptions, run_batch
from .rates import UPLINK, find_admissible_permutations, if_rates

log = logging.getLogger(__name__)

CAPACITY = "capacity"
INTEGER_FORCING = "integer_forcing"
ZERO_FORCING = "zero_forcing"
METHODS = (CAPACITY, INTEGER_FORCING, ZERO_FORCING)
ALIASES = {"capacity": CAPACITY, "cap": CAPACITY, "if": INTEGER_FORCING,
           "integer_forcing": INTEGER_FORCING, "zf": ZERO_FORCING, "zero_forcing": ZERO_FORCING}
CHUNK = 256
MAX_DEGENERATE_FRACTION = 0.01


def db_to_power(p_db: float) -> float:
    return 10.0 ** (p_db / 10.0)


def parse_methods(text: str | Iterable[str]) -> tuple[str, ...]:
    items = text.split(",") if isinstance(text, str) else list(text)
    out = []
    for item in items:
        key = item.strip().lower()
        if key not in ALIASES:
            raise ValueError(f"unknown method {item!r}")
        if ALIASES[key] not in out:
            out.append(ALIASES[key])
    return tuple(m for m in METHODS if m in out)


@dataclass(frozen=True)
class SweepSpec:
    """A grid of total powers (dB, unit noise) for one antenna/user count.

    For antenna sweeps use :func:`run_antennas_sweep`, which builds one SweepSpec
    per antenna count.
    """

    n: int
    l: int
    p_db_grid: tuple[float, ...]
    trials: int = 10_000
    seed: int = 0
    methods: tuple[str, ...] = METHODS
    opts: OptimizerOptions = field(default_factory=OptimizerOptions)

    def __post_init__(self):
        object.__setattr__(self, "p_db_grid", tuple(float(x) for x in self.p_db_grid))
        object.__setattr__(self, "methods", parse_methods(self.methods))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.n < 1 or self.l < 1:
            raise ValueError("antenna and user counts must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class PointStats:
    mean: float
    std_err: float
    trials: int
    degenerate: int


@dataclass
class SweepResult:
    """``rows[(x, method)]`` for each grid value ``x`` (dB, or antennas for antenna sweeps)."""

    axis: str
    grid: tuple[float, ...]
    methods: tuple[str, ...]
    rows: dict = field(default_factory=dict)

    def degenerate_fraction(self) -> float:
        tot = sum(s.trials + s.degenerate for s in self.rows.values())
        return sum(s.degenerate for s in self.rows.values()) / tot if tot else 0.0

    def ok(self) -> bool:
        return self.degenerate_fraction() < MAX_DEGENERATE_FRACTION


def generate_channel(seed: int, trial_index: int, n: int, m: int) -> np.ndarray:
    """Standard-normal ``n x m`` matrix from the Philox stream keyed by ``(seed, trial_index)``."""
    ss = np.random.SeedSequence([int(seed), int(trial_index)])
    return np.random.Generator(np.random.Philox(ss)).standard_normal((n, m))


def pairwise_sum(x) -> float:
    """Sum with a fixed balanced binary tree (depends only on the length)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n == 0:
        return 0.0
    if n <= 8:
        s = 0.0
        for v in x:
            s += float(v)
        return s
    h = n // 2
    return pairwise_sum(x[:h]) + pairwise_sum(x[h:])


def mean_and_stderr(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n == 0:
        return math.nan, math.nan
    mean = pairwise_sum(x) / n
    if n == 1:
        return mean, 0.0
    var = pairwise_sum((x - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def _paired_sum_rates(A, P, sigma) -> np.ndarray:
    out = np.empty(len(P))
    for t in range(len(P)):
        pi, theta = find_admissible_permutations(A[t].astype(np.int64), sigma[t], UPLINK)
        out[t] = float(np.sum(if_rates(P[t], sigma[t], pi, theta, UPLINK)))
    return out


def _optimize(H, A, p_total, opts: OptimizerOptions):
    T, N, L = H.shape
    E = np.zeros((T, L, N))
    X = np.broadcast_to(np.eye(L), (T, L, L))
    P = np.full((T, L), p_total / L)
    # single-antenna users: each beam lives on its own antenna
    res = run_batch(E, H, X, A, P, tx_offsets=np.arange(L + 1), opts=opts)
    ok = res.status == OK
    rates = np.full(T, np.nan)
    if np.any(ok):
        sigma = K.effective_noise(res.E[ok], H[ok], res.X[ok], A[ok], res.P[ok])
        rates[ok] = _paired_sum_rates(A[ok], res.P[ok], sigma)
    return rates, ok


def evaluate_trials(H, p_total: float, methods: Sequence[str] = METHODS,
                    opts: OptimizerOptions = OptimizerOptions()) -> dict:
    """Per-trial sum rates of each method on a batch of channels ``H`` (``T x N x L``).

    Integer-forcing runs the optimizer from the default start with the LLL
    matrix for that start, and keeps the better of that run and the
    identity-matrix run (the identity is always an admissible integer
    matrix). Trials whose optimizer run degenerates carry ``nan``.
    """
    H = np.asarray(H, dtype=float)
    T, N, L = H.shape
    out: dict[str, np.ndarray] = {}
    if CAPACITY in methods:
        out[CAPACITY] = mac_sum_capacity_batch(H, p_total)[0]
    zf = None
    if ZERO_FORCING in methods or INTEGER_FORCING in methods:
        ident = np.broadcast_to(np.eye(L), (T, L, L)).copy()
        zf, _ = _optimize(H, ident, p_total, opts)
        if ZERO_FORCING in methods:
            out[ZERO_FORCING] = zf
    if INTEGER_FORCING in methods:
        c = tuple(np.ones(1) for _ in range(L))
        p = PowerAllocation(np.full(L, p_total / L), p_total)
        A = np.stack([select_integer_matrix(ChannelUplink(H[t]), c, p, opts.delta)[0].entries
                      for t in range(T)]).astype(float)
        lll, _ = _optimize(H, A, p_total, opts)
        out[INTEGER_FORCING] = np.where(np.isnan(lll), zf, np.fmax(lll, zf))
    return out


def _chunk_job(args):
    seed, start, stop, n, l, p_totals, methods, opts = args
    H = np.stack([generate_channel(seed, t, n, l) for t in range(start, stop)])
    return start, [evaluate_trials(H, pt, methods, opts) for pt in p_totals]


def _collect(seed, trials, n, l, p_totals, methods, opts, workers):
    jobs = [(seed, s, min(s + CHUNK, trials), n, l, p_totals, methods, opts)
            for s in range(0, trials, CHUNK)]
    values = [{m: np.empty(trials) for m in methods} for _ in p_totals]
    if workers <= 1 or len(jobs) == 1:
        results = map(_chunk_job, jobs)
        return _scatter(results, values)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return _scatter(pool.map(_chunk_job, jobs), values)


def _scatter(results, values):
    for start, per_point in results:
        for dst, src in zip(values, per_point):
            for m, v in src.items():
                dst[m][start:start + len(v)] = v
    return values


def _stats(v: np.ndarray) -> PointStats:
    good = v[~np.isnan(v)]
    mean, se = mean_and_stderr(good)
    return PointStats(mean=mean, std_err=se, trials=len(good), degenerate=len(v) - len(good))


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Average sum rate of each method at every grid power.

    The same channel draws are used at every grid point. Degenerate trials
    are left out of the means and counted.
    """
    p_totals = [db_to_power(x) for x in spec.p_db_grid]
    values = _collect(spec.seed, spec.trials, spec.n, spec.l, p_totals, spec.methods,
                      spec.opts, workers) if p_totals else []
    result = SweepResult(axis="p_db", grid=spec.p_db_grid, methods=spec.methods)
    for x, vals in zip(spec.p_db_grid, values):
        for m in spec.methods:
            result.rows[(x, m)] = _stats(vals[m])
    if not result.ok():
        log.warning("degenerate trial fraction %.3g exceeds %.0f%%",
                    result.degenerate_fraction(), 100 * MAX_DEGENERATE_FRACTION)
    return result


def run_antennas_sweep(l: int, n_grid: Sequence[int], p_db: float, trials: int = 10_000,
                       seed: int = 0, methods=METHODS, opts: OptimizerOptions = OptimizerOptions(),
                       workers: int = 1) -> SweepResult:
    """Average sum rate versus basestation antenna count at a fixed power."""
    methods = parse_methods(methods)
    result = SweepResult(axis="n", grid=tuple(int(n) for n in n_grid), methods=methods)
    for n in result.grid:
        sub = run_sweep(SweepSpec(n=n, l=l, p_db_grid=(p_db,), trials=trials, seed=seed,
                                  methods=methods, opts=opts), workers)
        for m in methods:
            result.rows[(n, m)] = sub.rows[(float(p_db), m)]
    return result


def _g6(x) -> str:
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def emit_csv(result: SweepResult, path) -> None:
    """Write ``<axis>,method,mean_sum_rate,std_err,trials,degenerate`` rows (6 significant digits).

    ``path`` may be a filename or an open text stream.
    """
    header = [result.axis, "method", "mean_sum_rate", "std_err", "trials", "degenerate"]

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for x in result.grid:
            for m in result.methods:
                s = result.rows[(x, m)]
                w.writerow([_g6(x), m, _g6(s.mean), _g6(s.std_err), s.trials, s.degenerate])

    if hasattr(path, "write"):
        write(path)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write(fh)


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
