import itertools

import numpy as np
import pytest

from ensemble_bcs.model import BcsInstance

ACCEPTANCE_LINES = []


def all_bits(n):
    """Every x in {0,1}^n as rows of an int8 array, lexicographic order."""
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)


def brute_objective(inst, x, lam):
    """Direct evaluation of ||y - A x||^2 + lam * count(x), no shared code."""
    total = 0.0
    for l in range(inst.m):
        r = inst.y[l] - sum(inst.a[l, i] * x[i] for i in range(inst.n_vars))
        total += r * r
    return total + lam * sum(int(b) for b in x)


def brute_argmin(values, xs, rel=1e-9):
    best = min(values)
    tol = rel * max(1.0, abs(best))
    return {tuple(int(b) for b in x) for v, x in zip(values, xs) if v <= best + tol}


def random_instance(rng, n_vars=None, m=None, k=None):
    n_vars = n_vars or int(rng.integers(1, 13))
    m = m or int(rng.integers(1, 13))
    k = int(rng.integers(0, n_vars + 1)) if k is None else k
    x = np.zeros(n_vars, dtype=np.int8)
    x[rng.choice(n_vars, size=k, replace=False)] = 1
    a = rng.standard_normal((m, n_vars))
    return BcsInstance(a, a @ x, x, k)


@pytest.fixture
def tiny():
    return BcsInstance([[1.0, 1.0]], [1.0])


@pytest.fixture
def criterion():
    def record(name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
