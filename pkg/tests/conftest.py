import numpy as np
import pytest

from intforce.lattice import select_integer_matrix
from intforce.model import ChannelUplink, PowerAllocation, UplinkConfig
from intforce.rates import optimal_uplink_equalizer


def random_uplink(rng, L=None, N=None, antennas=None, p_total=None, optimal=True, a=None):
    """Random uplink configuration spending exactly its budget."""
    L = int(rng.integers(1, 5)) if L is None else L
    N = int(rng.integers(1, 5)) if N is None else N
    antennas = (1,) * L if antennas is None else tuple(antennas)
    h = ChannelUplink(rng.standard_normal((N, sum(antennas))), antennas)
    c = tuple(rng.standard_normal(m) for m in antennas)
    c = tuple(v / np.linalg.norm(v) for v in c)
    p_total = float(10 ** rng.uniform(0, 2)) if p_total is None else p_total
    w = rng.uniform(0.2, 1.0, L)
    p = PowerAllocation(p_total * w / w.sum(), p_total)
    if a is None:
        a, _ = select_integer_matrix(h, c, p)
    b = optimal_uplink_equalizer(h, c, p, a) if optimal else rng.standard_normal((L, N))
    return UplinkConfig(channel=h, a=a, b=b, c=c, p=p)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    """Record and print one acceptance line."""
    line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
