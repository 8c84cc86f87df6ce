"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import time

import numpy as np
import pytest

from intforce.baselines import constant_gap_check
from intforce.duality import dual_transform
from intforce.exact import integer_det, leading_minors
from intforce.finite_field import (FieldMatrix, LevelPlan, MessageSet, downlink_decode_verify,
                                   downlink_precode, triangularize_over_zp)
from intforce.harness import (CAPACITY, INTEGER_FORCING, ZERO_FORCING, SweepSpec, emit_csv,
                              run_antennas_sweep, run_sweep)
from intforce.lattice import cholesky_effective_basis, lll_reduce
from intforce.model import ChannelDownlink, ChannelUplink, IntegerMatrix
from intforce.optimizer import iterate_uplink
from intforce.rates import effective_noise, uplink_effective_noise

from conftest import random_uplink, report
from oracles import mmse_sinr, successive_minima

pytestmark = pytest.mark.slow


def _ensemble_check(criterion, result, x, targets, extra=""):
    ok = True
    parts = []
    for method, (want, tol) in targets.items():
        got = result.rows[(x, method)].mean
        good = abs(got - want) <= tol
        ok &= good
        parts.append(f"{method}={got:.4f} (target {want} +/- {tol})")
    ok &= result.ok()
    parts.append(f"degenerate={100 * result.degenerate_fraction():.2f}%")
    assert report(criterion, ok, "; ".join(parts) + extra)


def test_c01_two_antennas_four_users_20db():
    t0 = time.perf_counter()
    r = run_sweep(SweepSpec(n=2, l=4, p_db_grid=(20.0,), trials=10_000, seed=0))
    dt = time.perf_counter() - t0
    s = r.rows[(20.0, INTEGER_FORCING)]
    assert s.trials + s.degenerate == 10_000
    _ensemble_check(1, r, 20.0, {CAPACITY: (6.506, 0.08), INTEGER_FORCING: (5.944, 0.15),
                               ZERO_FORCING: (2.638, 0.10)}, f"; {dt:.1f} s")
    assert dt < 300


def test_c02_four_antennas_four_users_20db():
    r = run_sweep(SweepSpec(n=4, l=4, p_db_grid=(20.0,), trials=10_000, seed=0))
    _ensemble_check(2, r, 20.0, {CAPACITY: (10.651, 0.10), INTEGER_FORCING: (10.388, 0.15),
                               ZERO_FORCING: (8.010, 0.12)})


def test_c03_four_antennas_two_users_10db():
    r = run_sweep(SweepSpec(n=4, l=2, p_db_grid=(10.0,), trials=10_000, seed=0))
    _ensemble_check(3, r, 10.0, {CAPACITY: (3.8715, 0.05), INTEGER_FORCING: (3.8360, 0.08),
                               ZERO_FORCING: (3.6640, 0.06)})


def test_c04_six_antennas_six_users_20db():
    r = run_antennas_sweep(6, [6], 20.0, trials=5_000, seed=0)
    _ensemble_check(4, r, 6, {CAPACITY: (16.066, 0.20), INTEGER_FORCING: (15.383, 0.25),
                            ZERO_FORCING: (11.541, 0.25)})


def test_c05_duality_exactness():
    rng = np.random.default_rng(505)
    worst_beta = worst_power = worst_round = 0.0
    for _ in range(500):
        L = int(rng.integers(1, 6))
        antennas = None if rng.random() < 0.7 else tuple(rng.integers(1, 3, L))
        cfg = random_uplink(rng, L=L, N=int(rng.integers(1, 6)), antennas=antennas)
        down = dual_transform(cfg)
        back = dual_transform(down)
        b_up = cfg.p.diagonal / effective_noise(cfg)
        b_dn = down.p.diagonal / effective_noise(down)
        worst_beta = max(worst_beta, float(np.max(np.abs(b_dn - b_up) / b_up)))
        worst_power = max(worst_power, abs(down.consumed_power() - cfg.consumed_power())
                          / cfg.consumed_power())
        worst_round = max(worst_round, float(np.max(np.abs(back.p.diagonal - cfg.p.diagonal)
                                                    / cfg.p.diagonal)))
    ok = worst_beta < 1e-9 and worst_power < 1e-9 and worst_round < 1e-8
    assert report(5, ok, f"max rel beta {worst_beta:.2e}, power {worst_power:.2e}, "
                         f"round trip {worst_round:.2e}")


def test_c06_optimizer_monotone_and_converges():
    rng = np.random.default_rng(2026)
    monotone = converged = 0
    for _ in range(200):
        L, N = (int(v) for v in rng.choice([2, 3, 4], 2))
        p = 10 ** (float(rng.choice([0.0, 10.0, 20.0])) / 10)
        rep = iterate_uplink(ChannelUplink(rng.standard_normal((N, L))), p)
        monotone += bool(np.all(np.diff(rep.sum_rate_trace) >= -1e-9))
        converged += rep.converged and rep.iterations <= 500
    ok = monotone == 200 and converged >= 198
    assert report(6, ok, f"monotone {monotone}/200, converged within 500 iterations "
                         f"{converged}/200 (need 198)")


def test_c07_constant_gap():
    rng = np.random.default_rng(707)
    fails, worst = 0, np.inf
    for _ in range(100):
        L = int(rng.choice([2, 3, 4]))
        n = int(rng.choice([2, 3, 4]))
        p = 10 ** (float(rng.choice([0.0, 10.0, 20.0])) / 10)
        if_sum, cap, ok = constant_gap_check(ChannelDownlink.from_matrix(rng.standard_normal((L, n))), p)
        fails += not ok
        worst = min(worst, if_sum - (cap - 0.5 * L * np.log2(L)))
    assert report(7, fails == 0, f"{100 - fails}/100 within the gap, min slack {worst:.3f} bits")


def test_c08_identity_matrix_mmse_equivalence():
    rng = np.random.default_rng(808)
    worst = 0.0
    for _ in range(200):
        L = int(rng.integers(1, 5))
        cfg = random_uplink(rng, L=L, a=IntegerMatrix.identity(L))
        lhs = 0.5 * np.log2(cfg.p.diagonal / uplink_effective_noise(cfg))
        rhs = 0.5 * np.log2(1 + mmse_sinr(cfg.channel.entries, cfg.c_matrix(), cfg.p.diagonal))
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.abs(rhs))))
    assert report(8, worst < 1e-9, f"max relative difference {worst:.2e}")


def test_c09_lll_validity():
    rng = np.random.default_rng(909)
    unimodular = near = total = 0
    worst = 0.0
    for L in (1, 2, 3, 4):
        for _ in range(6 if L == 4 else 15):
            h = ChannelUplink(rng.standard_normal((int(rng.integers(1, L + 1)), L)))
            p = np.full(L, 10 ** rng.uniform(0, 2))
            f = cholesky_effective_basis(h, (np.ones(1),) * L, p).f
            a = lll_reduce(f)
            total += 1
            unimodular += abs(integer_det(a.rows())) == 1
            norms = np.sqrt(np.sum((a.entries @ f) ** 2, axis=1))
            mins = np.sqrt(successive_minima(f, radius=15)[0])
            ratio = float(np.max(norms / mins / 2 ** ((L - 1) / 2)))
            worst = max(worst, ratio)
            near += ratio <= 1 + 1e-9
    ok = unimodular == total and near == total
    assert report(9, ok, f"unimodular {unimodular}/{total}, within bound {near}/{total}, "
                         f"worst norm / (bound * minimum) {worst:.3f}")


def test_c10_finite_field():
    a = [[2, 1], [0, 1]]
    l1, a1 = triangularize_over_zp(a, 3)
    l2, a2 = triangularize_over_zp(a, 3, theta=(1, 0))
    sic_trace = (l1.tolist() == [[1, 0], [0, 1]] and a1.tolist() == [[2, 1], [0, 1]]
                and l2.tolist() == [[1, 0], [2, 1]] and a2.tolist() == [[2, 1], [1, 0]])
    mod3 = lambda m: [d % 3 for d in leading_minors(m)]
    admissibility_trace = (all(mod3([[2, 1], [0, 1]])) and not all(mod3([[0, 1], [2, 1]]))
                and all(mod3([[2, 1], [1, 1]])) and all(mod3([[1, 1], [2, 1]])))
    rng = np.random.default_rng(1010)
    exact = 0
    for trial in range(1000):
        p = int(rng.choice([3, 5, 7, 11]))
        L = int(rng.integers(1, 5))
        k = int(rng.integers(1, 13))
        kc = np.sort(rng.integers(0, k + 1, L))
        plan = LevelPlan(tuple(kc), tuple(int(rng.integers(c, k + 1)) for c in kc), k)
        while True:
            m = rng.integers(-3, 4, (L, L))
            if all(d % p for d in leading_minors(m.tolist())):
                break
        q = FieldMatrix.from_integer(m, p)
        w = MessageSet.random(plan, p, rng)
        pre = downlink_precode(w, q, plan, e_seed=trial)
        got = downlink_decode_verify(pre.v, pre.e, q, plan)
        exact += all(np.array_equal(g, x) for g, x in zip(got, w.messages()))
    ok = sic_trace and admissibility_trace and exact == 1000
    assert report(10, ok, f"Z_3 SIC trace {'ok' if sic_trace else 'mismatch'}, "
                          f"Z_3 admissibility trace {'ok' if admissibility_trace else 'mismatch'}, "
                          f"exact round trips {exact}/1000")


def test_c11_reproducible_csv(tmp_path):
    spec = SweepSpec(n=2, l=4, p_db_grid=(0.0, 10.0, 20.0), trials=2_000, seed=1234)
    one, eight = tmp_path / "w1.csv", tmp_path / "w8.csv"
    emit_csv(run_sweep(spec, workers=1), one)
    emit_csv(run_sweep(spec, workers=8), eight)
    same = one.read_bytes() == eight.read_bytes()
    assert report(11, same, f"workers 1 vs 8: {'byte-identical' if same else 'differ'} "
                            f"({len(one.read_bytes())} bytes)")
