import warnings

import numpy as np
import pytest

from annlogic import network
from annlogic.errors import StructuralError
from annlogic.minterms import to_minterms
from annlogic.network import LabeledDataset, SimpleAnnModel

from conftest import random_model


def layerwise(model, mt):
    """Explicit layer-by-layer evaluation returning (pre-activations, output)."""
    h = np.asarray(mt, dtype=float)
    for m in model.below:
        h = np.array([sum(m[i, j] * h[j] for j in range(m.shape[1])) for i in range(m.shape[0])])
    z = h.copy()
    h = np.array([v if v >= 0 else 0.0 for v in h])
    for m in model.above:
        h = np.array([sum(m[i, j] * h[j] for j in range(m.shape[1])) for i in range(m.shape[0])])
    return z, h[0]


def test_worked_scores(worked_model):
    assert network.forward(worked_model, to_minterms([0.8, 0.1])) == pytest.approx(3.1, abs=1e-12)
    assert network.forward(worked_model, to_minterms([0.5, 0.6])) == pytest.approx(1.1, abs=1e-12)


def test_one_hot_reads_weight(worked_model):
    for k, w in enumerate([-8.0, 3.0, 6.0, 2.0]):
        e = np.eye(4)[k]
        p = network.relu_status(worked_model, e)
        assert network.forward(worked_model, e) == pytest.approx(network.cell_weights(worked_model, p)[k])


def test_bias_free_layers_and_shapes():
    with pytest.raises(StructuralError):
        SimpleAnnModel((np.ones((3, 5)),), (np.ones((1, 3)),), 0.0, 2)
    with pytest.raises(StructuralError):
        SimpleAnnModel((np.ones((3, 4)),), (np.ones((2, 3)),), 0.0, 2)
    m = SimpleAnnModel((np.ones((3, 4)),), (np.ones((1, 3)),), 0.0, 2)
    with pytest.raises(StructuralError):
        network.forward(m, np.ones(8))


def test_relu_status_extremes():
    m = SimpleAnnModel((np.ones((3, 4)),), (np.ones((1, 3)),), 0.0, 2)
    assert network.relu_status(m, to_minterms([0.3, 0.9])) == 7
    neg = SimpleAnnModel((-np.ones((3, 4)),), (np.ones((1, 3)),), 0.0, 2)
    assert network.relu_status(neg, to_minterms([0.3, 0.9])) == 0


def test_relu_status_msb_is_first_node():
    w = np.array([[1.0] * 4, [-1.0] * 4, [-1.0] * 4])
    m = SimpleAnnModel((w,), (np.ones((1, 3)),), 0.0, 2)
    assert network.relu_status(m, to_minterms([0.5, 0.5])) == 0b100


def test_boundary_counts_as_active():
    m = SimpleAnnModel((np.zeros((2, 4)),), (np.ones((1, 2)),), 0.0, 2)
    assert network.relu_status(m, to_minterms([0.5, 0.5])) == 3


@pytest.mark.parametrize("seed", range(10))
def test_relu_status_and_forward_against_layerwise(seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng, 3, 4, hidden=5 if seed % 2 else None)
    for _ in range(10):
        mt = to_minterms(rng.random(3))
        z, out = layerwise(model, mt)
        expected_p = int("".join("1" if v >= 0 else "0" for v in z), 2)
        assert network.relu_status(model, mt) == expected_p
        assert network.forward(model, mt) == pytest.approx(out, abs=1e-9)
        mw = network.cell_weights(model, expected_p)
        assert float(mt @ mw) == pytest.approx(out, abs=1e-9)


def test_cell_zero_is_zero_vector():
    model = random_model(np.random.default_rng(1), 2, 3)
    assert not network.cell_weights(model, 0).any()


def test_cell_weights_forced_mask_oracle():
    rng = np.random.default_rng(7)
    model = random_model(rng, 2, 3, hidden=4)
    for p in range(8):
        mask = [(p >> (2 - i)) & 1 for i in range(3)]
        for k in range(4):
            h = np.eye(4)[k]
            for m in model.below:
                h = m @ h
            h = h * mask
            for m in model.above:
                h = m @ h
            assert network.cell_weights(model, p)[k] == pytest.approx(h[0], abs=1e-12)


def test_atomic_sum_example_101():
    model = random_model(np.random.default_rng(3), 2, 3)
    np.testing.assert_allclose(
        network.cell_weights(model, 0b101),
        network.cell_weights(model, 0b100) + network.cell_weights(model, 0b001),
        atol=1e-12,
    )


def test_single_relu_atomic():
    model = random_model(np.random.default_rng(4), 2, 1)
    atomic = network.atomic_weights(model)
    assert list(atomic) == [1]
    np.testing.assert_array_equal(atomic[1], network.cell_weights(model, 1))
    assert not network.weights_from_atomic(atomic, 0, 4).any()


def test_region_linearity():
    rng = np.random.default_rng(11)
    model = random_model(rng, 3, 4)
    checked = 0
    for _ in range(400):
        a, b = to_minterms(rng.random(3)), to_minterms(rng.random(3))
        p = network.relu_status(model, a)
        if network.relu_status(model, b) != p:
            continue
        for t in (0.25, 0.5, 0.75):
            c = t * a + (1 - t) * b
            assert network.relu_status(model, c) == p  # cells are convex
            assert network.forward(model, c) == pytest.approx(
                t * network.forward(model, a) + (1 - t) * network.forward(model, b), abs=1e-9)
        checked += 1
    assert checked > 10


def test_enumerate_cells_counts():
    rng = np.random.default_rng(5)
    model = random_model(rng, 2, 3)
    X = rng.random((60, 2))
    y = rng.integers(0, 2, 60)
    data = LabeledDataset(X, y)
    cells = network.enumerate_cells(model, data)
    assert sum(c.support for c in cells) == 60
    ps = [network.relu_status(model, to_minterms(x)) for x in X]
    for c in cells:
        idx = [i for i, p in enumerate(ps) if p == c.number]
        assert c.count_1 == int(y[idx].sum()) and c.support == len(idx)
        assert c.active_set == {i for i in range(3) if (c.number >> (2 - i)) & 1}


def test_enumerate_edge_cases(worked_model):
    assert network.enumerate_cells(worked_model, LabeledDataset(np.zeros((0, 2)), [])) == []
    one = network.enumerate_cells(worked_model, LabeledDataset([[0.8, 0.1]], [1]))
    assert len(one) == 1 and one[0].support == 1


def _cell(p, c0, c1):
    return network.PartitionCell(p, 3, np.zeros(4), c0, c1)


def test_select_essential():
    cells = [_cell(1, 5, 0), _cell(2, 3, 4), _cell(5, 1, 1), _cell(6, 0, 9)]
    assert [c.number for c in network.select_essential(cells, 1)] == [6, 2, 1, 5]
    assert [c.number for c in network.select_essential(cells, 3, require_mixed=True)] == [2]
    pure = [_cell(1, 5, 0), _cell(6, 0, 9)]
    with pytest.warns(RuntimeWarning):
        assert network.select_essential(pure, 1, require_mixed=True) == []


def test_auto_min_support_covers_80_percent():
    cells = [_cell(1, 50, 50), _cell(2, 20, 10), _cell(3, 5, 5), _cell(4, 1, 0)]
    s = network.auto_min_support(cells, 0.8)
    chosen = network.select_essential(cells, s)
    assert sum(c.support for c in chosen) >= 0.8 * 141
    assert s == 30


def test_fit_threshold_worked_scores(worked_model, worked_data):
    tau = network.fit_threshold(worked_model, worked_data)
    assert 1.1 <= tau < 3.1
    assert network.accuracy(worked_model.with_threshold(tau), worked_data) == 1.0
    assert network.fit_threshold(worked_model, worked_data, midpoint=False) == pytest.approx(1.1)


def test_fit_threshold_single_class(worked_model):
    data = LabeledDataset([[0.8, 0.1], [0.5, 0.6]], [1, 1])
    tau = network.fit_threshold(worked_model, data)
    assert network.accuracy(worked_model.with_threshold(tau), data) == 1.0
    data0 = LabeledDataset([[0.8, 0.1], [0.5, 0.6]], [0, 0])
    tau0 = network.fit_threshold(worked_model, data0)
    assert network.accuracy(worked_model.with_threshold(tau0), data0) == 1.0


def brute_best_accuracy(scores, y):
    cands = sorted(set(scores)) + [min(scores) - 1]
    return max(np.mean((scores > t).astype(int) == y) for t in cands)


@pytest.mark.parametrize("seed", range(5))
def test_best_threshold_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    s = rng.integers(0, 6, 40).astype(float)
    y = rng.integers(0, 2, 40)
    t, acc = network.best_threshold(s, y)
    assert acc == pytest.approx(brute_best_accuracy(s, y))
    assert np.mean((s > t).astype(int) == y) == pytest.approx(acc)


def test_train_separable_toy():
    X = np.array([[0.1, 0.2], [0.2, 0.9], [0.3, 0.4], [0.05, 0.6],
                  [0.8, 0.1], [0.9, 0.7], [0.7, 0.3], [0.95, 0.95]])
    y = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    data = LabeledDataset(X, y)
    model = network.train(data, network.TrainParams(relu_count=2, epochs=3000, seed=1))
    scores = network.forward(model, data.minterms())
    assert brute_best_accuracy(scores, y) == 1.0
    assert network.accuracy(model, data) == 1.0


def test_zero_epochs_returns_initial_model():
    data = LabeledDataset([[0.1, 0.2], [0.9, 0.8]], [0, 1])
    params = network.TrainParams(relu_count=3, epochs=0, seed=9)
    model = network.train(data, params)
    init = network.init_model(2, params)
    for a, b in zip(model.below + model.above, init.below + init.above):
        np.testing.assert_array_equal(a, b)


def test_training_is_seeded():
    rng = np.random.default_rng(0)
    data = LabeledDataset(rng.random((30, 3)), rng.integers(0, 2, 30))
    p = network.TrainParams(relu_count=3, epochs=50, seed=4)
    a, b = network.train(data, p), network.train(data, p)
    np.testing.assert_array_equal(a.below[0], b.below[0])
    assert a.threshold == b.threshold


def test_each_object_in_exactly_one_cell():
    rng = np.random.default_rng(2)
    model = random_model(rng, 3, 4)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ps = network.relu_status(model, np.array([to_minterms(x) for x in rng.random((50, 3))]))
    assert ps.shape == (50,) and ((0 <= ps) & (ps < 16)).all()
