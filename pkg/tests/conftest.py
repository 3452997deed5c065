import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mdhp.hawkes import EventSequences, MdhpParams

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_instance(rng, dims, max_events, t_span=1.0, alpha_scale=0.5):
    """Random positive parameters and random sorted event lists."""
    params = MdhpParams(
        rng.uniform(0.0, alpha_scale, (dims, dims)),
        rng.uniform(0.5, 3.0, (dims, dims)),
        rng.uniform(0.1, 2.0, dims),
    )
    times = [np.sort(rng.uniform(0, t_span, rng.integers(0, max_events + 1))) for _ in range(dims)]
    return params, EventSequences(tuple(times), t_span)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list = []


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""

    def check(number, ok, detail):
        line = f"criterion {str(number):<3}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        def key(line):
            tag = line.split(":")[0].split()[-1]
            return int(tag.rstrip("abc")), tag

        for line in sorted(ACCEPTANCE_LINES, key=key):
            terminalreporter.write_line(line)
