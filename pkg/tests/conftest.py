import itertools

import numpy as np
import pytest

from annlogic.network import LabeledDataset, SimpleAnnModel

# the worked example maps 6 to 3.99, i.e. 4 / (1 + eps) = 3.99
WORKED_EPSILON = 0.0025


@pytest.fixture
def worked_model():
    """One ReLU node whose only active cell has weights (-8, 3, 6, 2)."""
    return SimpleAnnModel((np.array([[-8.0, 3.0, 6.0, 2.0]]),), (np.array([[1.0]]),), 2.0, 2)


@pytest.fixture
def worked_data():
    return LabeledDataset([[0.8, 0.1], [0.5, 0.6]], [1, 0], ["a1", "a2"])


def random_model(rng, n, l, hidden=None):
    """Random bias-free model, optionally with an extra linear layer below the ReLUs."""
    d = 1 << n
    if hidden:
        below = (rng.normal(size=(hidden, d)), rng.normal(size=(l, hidden)))
    else:
        below = (rng.normal(size=(l, d)),)
    above = (rng.normal(size=(1, l)),)
    return SimpleAnnModel(below, above, 0.0, n)


def minterms_oracle(x):
    """Term-by-term product formula, independent of the library's kron build-up."""
    n = len(x)
    out = []
    for k in range(1 << n):
        bits = [(k >> (n - 1 - j)) & 1 for j in range(n)]
        v = 1.0
        for xj, b in zip(x, bits):
            v *= xj if b else 1.0 - xj
        out.append(v)
    return np.array(out)


def synthetic_transfusion(seed=0, m=356):
    """Balanced 4-attribute data driven by a noisy logic rule (a stand-in, not the real dataset)."""
    rng = np.random.default_rng(seed)
    X = rng.beta(0.8, 2.5, size=(m * 3, 4))
    X[:, 2] = np.clip(X[:, 1] + rng.normal(0, 0.02, len(X)), 0, 1)
    logit = 3.0 * (0.35 - X[:, 0]) + 2.5 * X[:, 1] - 1.5 * X[:, 3] + 2.0 * X[:, 0] * X[:, 3]
    y = (logit + rng.logistic(0, 0.4, len(X)) > 0).astype(int)
    i1 = np.flatnonzero(y == 1)[: m // 2]
    i0 = np.flatnonzero(y == 0)[: m // 2]
    keep = np.sort(np.r_[i0, i1])
    return LabeledDataset(X[keep], y[keep], ["r", "f", "m", "t"])


def all_subsets(items):
    items = list(items)
    return itertools.chain.from_iterable(itertools.combinations(items, r) for r in range(len(items) + 1))


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, title, ok, detail=""):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
