import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intforce import errors
from intforce.exact import has_full_leading_rank
from intforce.lattice import cholesky_effective_basis
from intforce.model import (ChannelDownlink, ChannelUplink, DownlinkConfig, IntegerMatrix,
                            PowerAllocation, UplinkConfig)
from intforce.rates import (DOWNLINK, UPLINK, check_identity_admissible_downlink,
                            check_identity_admissible_uplink, config_arrays, conventional_rates,
                            downlink_effective_noise, effective_stats,
                            find_admissible_permutations, if_rates, optimal_downlink_equalizer,
                            optimal_downlink_equalizers, optimal_uplink_equalizer, permuted_matrix,
                            uplink_effective_noise)

from conftest import random_uplink
from oracles import mmse_sinr, monte_carlo_noise

I2 = IntegerMatrix.identity(2)
UNIT2 = (np.ones(1), np.ones(1))


def uplink(h, b, p, a=I2, c=UNIT2):
    p = np.asarray(p, float)
    return UplinkConfig(channel=ChannelUplink(np.asarray(h, float)), a=a, b=np.asarray(b, float),
                        c=c, p=PowerAllocation(p, p.sum()))


def test_uplink_noise_perfect_match():
    assert np.allclose(uplink_effective_noise(uplink(np.eye(2), np.eye(2), [3.0, 5.0])), 1.0)


@pytest.mark.parametrize("p", [1.0, 4.0])
def test_uplink_noise_scalar_mmse(p):
    cfg = uplink(np.eye(2), np.eye(2) * p / (1 + p), [p, p])
    assert np.allclose(uplink_effective_noise(cfg), p / (1 + p))


def test_uplink_noise_monte_carlo(rng):
    cfg = random_uplink(rng, L=3, N=3, optimal=False)
    e, h, x, a, p = (v[0] for v in config_arrays(cfg))
    emp = monte_carlo_noise(e, h, x, a, p, 10**6, rng)
    assert np.allclose(emp, uplink_effective_noise(cfg), rtol=1e-2)


def test_downlink_noise_zero_residual():
    ch = ChannelDownlink.from_matrix(np.eye(2))
    cfg = DownlinkConfig(channel=ch, a=I2, b=np.eye(2), c=(np.array([1.0]), np.array([1.0])),
                         p=PowerAllocation(np.array([2.0, 3.0]), 5.0))
    assert np.allclose(downlink_effective_noise(cfg), 1.0)
    ch3 = ChannelDownlink((np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 1.0]])))
    cfg3 = DownlinkConfig(channel=ch3, a=I2, b=np.eye(2), c=(np.array([1.0, 0.0]), np.array([1.0])),
                          p=PowerAllocation(np.array([2.0, 3.0]), 5.0))
    assert np.allclose(downlink_effective_noise(cfg3), 1.0)


def test_downlink_noise_transposed_example():
    # dual of the scalar MMSE uplink at p = 1: beams are the old unit beams,
    # equalizers are the old equalizer rows (1/2)
    ch = ChannelUplink(np.eye(2)).transpose()
    cfg = DownlinkConfig(channel=ch, a=I2, b=np.eye(2), c=(np.array([0.5]), np.array([0.5])),
                         p=PowerAllocation(np.ones(2), 2.0))
    assert np.allclose(downlink_effective_noise(cfg), 0.5)


def test_downlink_noise_monte_carlo(rng):
    ch = ChannelDownlink((rng.standard_normal((2, 3)), rng.standard_normal((1, 3))))
    cfg = DownlinkConfig(channel=ch, a=IntegerMatrix(np.array([[1, 1], [0, 1]])),
                         b=rng.standard_normal((3, 2)), c=(rng.standard_normal(2), rng.standard_normal(1)),
                         p=PowerAllocation(np.array([1.5, 0.5]), 100.0))
    e, h, x, a, p = (v[0] for v in config_arrays(cfg))
    # per-receiver noise is independent across antennas, so the stacked draw is exact
    emp = monte_carlo_noise(e, h, x, a, p, 10**6, rng)
    assert np.allclose(emp, downlink_effective_noise(cfg), rtol=1e-2)


def test_optimal_uplink_scalar():
    h = ChannelUplink(np.ones((1, 1)))
    b = optimal_uplink_equalizer(h, (np.ones(1),), np.ones(1), IntegerMatrix.identity(1))
    assert b[0, 0] == pytest.approx(0.5)
    cfg = UplinkConfig(channel=h, a=IntegerMatrix.identity(1), b=b, c=(np.ones(1),),
                       p=PowerAllocation(np.ones(1), 1.0))
    assert uplink_effective_noise(cfg)[0] == pytest.approx(0.5)


def test_optimal_uplink_zero_channel():
    a = IntegerMatrix(np.array([[1, 2], [0, 1]]))
    p = np.array([2.0, 3.0])
    b = optimal_uplink_equalizer(ChannelUplink(np.zeros((3, 2))), UNIT2, p, a)
    assert np.allclose(b, 0)
    cfg = uplink(np.zeros((3, 2)), b, p, a=a)
    assert np.allclose(uplink_effective_noise(cfg), (a.entries ** 2) @ p)


def test_optimal_uplink_matches_cholesky(rng):
    for _ in range(20):
        cfg = random_uplink(rng, L=3, antennas=(1, 2, 1))
        f = cholesky_effective_basis(cfg.channel, cfg.c, cfg.p).f
        want = np.sum((cfg.a.entries @ f) ** 2, axis=1)
        assert np.allclose(uplink_effective_noise(cfg), want, rtol=1e-9)


def test_optimal_uplink_beats_perturbations():
    rng = np.random.default_rng(8)
    for _ in range(200):
        cfg = random_uplink(rng, L=int(rng.integers(1, 5)))
        e, h, x, a, p = (v[0] for v in config_arrays(cfg))
        base = uplink_effective_noise(cfg)
        pert = e[None] + rng.standard_normal((1000,) + e.shape) * rng.choice([1e-4, 1e-2, 1.0], (1000, 1, 1))
        resid = pert @ (h @ x) - a
        sig = np.sum(pert ** 2, axis=2) + np.sum(resid ** 2 * p, axis=2)
        assert np.all(sig >= base - 1e-12 * (1 + base))


def test_optimal_downlink_scalar_and_zero():
    c = optimal_downlink_equalizer(np.ones((1, 1)), np.ones((1, 1)), np.ones(1), np.ones(1))
    assert c[0] == pytest.approx(0.5)
    assert np.allclose(optimal_downlink_equalizer(np.ones((2, 3)), np.zeros((3, 2)), np.ones(2),
                                                  np.array([1, 1])), 0)


def test_optimal_downlink_finite_difference(rng):
    for _ in range(20):
        ch = ChannelDownlink((rng.standard_normal((2, 3)), rng.standard_normal((3, 3)), rng.standard_normal((1, 3))))
        a = IntegerMatrix(np.array([[1, 0, 1], [0, 1, 0], [1, 1, 2]]))
        base = DownlinkConfig(channel=ch, a=a, b=rng.standard_normal((3, 3)),
                              c=tuple(np.zeros(m) for m in ch.user_antennas),
                              p=PowerAllocation(rng.uniform(0.5, 3, 3), 1e3))
        c = optimal_downlink_equalizers(base)
        for m in range(3):
            assert np.allclose(c[m], optimal_downlink_equalizer(ch.blocks[m], base.b, base.p, a.entries[m]))
        cfg = base.replace(c=c)
        sig = downlink_effective_noise(cfg)
        for m in range(3):
            for k in range(len(c[m])):
                for d in (1e-4, -1e-4):
                    cc = list(c)
                    cc[m] = c[m].copy()
                    cc[m][k] += d
                    assert downlink_effective_noise(cfg.replace(c=tuple(cc)))[m] >= sig[m]


def test_uplink_admissibility_examples():
    assert check_identity_admissible_uplink([1, 2], [[1, 0], [1, 1]])
    assert not check_identity_admissible_uplink([1, 2], [[0, 1], [2, 1]])
    assert not check_identity_admissible_uplink([2, 1], np.eye(2, dtype=int))
    # only the identity order works for [[1,0],[1,1]]: swapping columns kills the 1x1 minor
    assert not has_full_leading_rank([[0, 1], [1, 1]])


def test_downlink_admissibility_examples():
    a3 = [[2, 1], [1, 1]]
    assert check_identity_admissible_downlink([2.0, 1.0], a3)
    assert check_identity_admissible_downlink([2.0, 1.0], [a3[1], a3[0]])
    assert not check_identity_admissible_downlink([2.0, 1.0], [[0, 1], [2, 1]])
    assert check_identity_admissible_downlink([1.0, 1.0], np.eye(2, dtype=int))


def test_find_permutations_examples():
    assert find_admissible_permutations(np.eye(3, dtype=int), [1, 2, 3]) == ((0, 1, 2), (0, 1, 2))
    assert find_admissible_permutations([[0, 1], [1, 0]], [1, 2]) == ((0, 1), (1, 0))
    assert find_admissible_permutations([[2, 1], [1, 1]], [2.0, 1.0], DOWNLINK) == ((0, 1), (0, 1))
    # ties keep index order
    assert find_admissible_permutations(np.eye(2, dtype=int), [1.0, 1.0])[0] == (0, 1)


unimodular = st.integers(2, 5).flatmap(lambda n: st.lists(
    st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.integers(-2, 2)),
    min_size=0, max_size=12).map(lambda ops: (n, ops)))


def build_unimodular(n, ops, seed):
    a = np.eye(n, dtype=np.int64)
    for i, j, k in ops:
        if i != j:
            a[i] += k * a[j]
    perm = np.random.default_rng(seed).permutation(n)
    return a[perm]


@settings(max_examples=200, deadline=None)
@given(unimodular, st.integers(0, 2**32 - 1), st.sampled_from([UPLINK, DOWNLINK]))
def test_found_permutations_are_admissible(data, seed, direction):
    n, ops = data
    a = build_unimodular(n, ops, seed)
    key = np.random.default_rng(seed).uniform(0, 1, n)
    pi, theta = find_admissible_permutations(a, key, direction)
    sorted_key = key[list(pi)]
    if direction == UPLINK:
        assert check_identity_admissible_uplink(sorted_key, permuted_matrix(a, pi, theta, UPLINK))
    else:
        assert check_identity_admissible_downlink(sorted_key, permuted_matrix(a, pi, theta, DOWNLINK))


def test_if_rates_examples():
    assert np.allclose(if_rates(np.array([1.0, 2.0]), np.array([1.0, 2.0])), 0)
    assert if_rates(np.ones(1), np.array([0.5]))[0] == pytest.approx(0.5)
    assert if_rates(np.array([0.1]), np.array([0.5]))[0] == 0
    with pytest.raises(errors.UnboundedRate):
        if_rates(np.ones(1), np.zeros(1))


def test_if_rates_pairing():
    p = np.array([4.0, 1.0, 2.0])
    s = np.array([0.5, 0.25, 1.0])
    r = if_rates(p, s, pi=(1, 0, 2), theta=(2, 0, 1), direction=UPLINK)
    assert r[2] == pytest.approx(0.5 * np.log2(2.0 / 0.25))
    assert r[0] == pytest.approx(0.5 * np.log2(4.0 / 0.5))
    r = if_rates(p, s, pi=(0, 2, 1), theta=(1, 0, 2), direction=DOWNLINK)
    assert r[1] == pytest.approx(0.5 * np.log2(4.0 / 0.25))


def test_effective_stats_rates_consistent(rng):
    for _ in range(30):
        cfg = random_uplink(rng)
        st_ = effective_stats(cfg)
        sig = uplink_effective_noise(cfg)
        for m in range(cfg.num_users):
            t, q = st_.theta[m], st_.pi[m]
            assert st_.rates[t] == pytest.approx(max(0.0, 0.5 * np.log2(cfg.p.diagonal[t] / sig[q])))


def test_conventional_rates_examples():
    p = 3.0
    cfg = uplink(np.eye(2), np.eye(2), [p, p])
    assert np.allclose(conventional_rates(cfg), 0.5 * np.log2(1 + p))
    h = ChannelUplink(np.array([[2.0]]))
    b = optimal_uplink_equalizer(h, (np.ones(1),), np.array([5.0]), IntegerMatrix.identity(1))
    one = UplinkConfig(channel=h, a=IntegerMatrix.identity(1), b=b, c=(np.ones(1),),
                       p=PowerAllocation(np.array([5.0]), 5.0))
    assert conventional_rates(one)[0] == pytest.approx(0.5 * np.log2(1 + 4 * 5))
    ortho = uplink(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([[0.0, 1.0], [0.0, 1.0]]), [1.0, 1.0])
    assert conventional_rates(ortho)[0] == 0


def test_identity_matrix_reproduces_mmse(rng):
    for _ in range(50):
        L = int(rng.integers(1, 5))
        cfg = random_uplink(rng, L=L, a=IntegerMatrix.identity(L))
        sig = uplink_effective_noise(cfg)
        want = mmse_sinr(cfg.channel.entries, cfg.c_matrix(), cfg.p.diagonal)
        assert np.allclose(np.log2(cfg.p.diagonal / sig), np.log2(1 + want), rtol=1e-9)
        assert np.allclose(conventional_rates(cfg), 0.5 * np.log2(1 + want), rtol=1e-9)
