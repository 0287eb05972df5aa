import numpy as np
import pytest


def ar1(rng, T, phi=0.5, burn=100):
    e = rng.standard_normal(T + burn)
    x = np.zeros(T + burn)
    for t in range(1, T + burn):
        x[t] = phi * x[t - 1] + e[t]
    return x[burn:]


def lagged_pair(rng, T, coef=0.8, lag=1, auto=0.0, burn=100):
    """x white noise, y(t) = auto*y(t-1) + coef*x(t-lag) + noise."""
    n = T + burn
    x = rng.standard_normal(n)
    e = rng.standard_normal(n)
    y = np.zeros(n)
    for t in range(max(lag, 1), n):
        y[t] = auto * y[t - 1] + coef * x[t - lag] + e[t]
    return x[burn:], y[burn:]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def chain_spec():
    """X -> Y -> Z at lag 1, each with a lag-1 autodependency."""
    from fpcmci.synth import SCMSpec, Term
    return SCMSpec(3, ((Term(0, 1, 0.5),),
                       (Term(1, 1, 0.4), Term(0, 1, 0.6)),
                       (Term(2, 1, 0.4), Term(1, 1, 0.6))),
                   (1.0, 1.0, 1.0), ("X", "Y", "Z"))


def chain_data(seed, T=1000):
    from fpcmci.synth import simulate
    return simulate(chain_spec(), T, seed)


ACCEPTANCE_LINES = []


def report(number, title, ok, detail):
    ACCEPTANCE_LINES.append(
        f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
