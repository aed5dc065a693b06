"""Constrained ReLU networks over minterm inputs and their partition cells.

The network is a stack of bias-free linear maps, one ReLU layer and a
single output node. For a fixed ReLU activation pattern ``p`` the whole
stack collapses into one linear map ``mw^p`` from minterms to the output,
and ``mw^p`` is the sum of the maps of the atomic cells (one active ReLU)
contained in ``p``.

ReLU_1 is the most significant bit of a partition number.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, StructuralError
from .minterms import check_attribute_count, to_minterms_batch

log = logging.getLogger(__name__)


def _chain(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = m @ out
    return out


@dataclass(frozen=True)
class SimpleAnnModel:
    """Linear stack -> ReLU layer -> linear stack -> one output node.

    ``below`` and ``above`` are lists of matrices applied in order, so the
    pre-activations are ``below[-1] @ ... @ below[0] @ mt``.
    """

    below: tuple[np.ndarray, ...]
    above: tuple[np.ndarray, ...]
    threshold: float
    n_atts: int

    def __post_init__(self):
        below = tuple(np.array(m, dtype=float, ndmin=2) for m in self.below)
        above = tuple(np.array(m, dtype=float, ndmin=2) for m in self.above)
        object.__setattr__(self, "below", below)
        object.__setattr__(self, "above", above)
        check_attribute_count(self.n_atts)
        if not below or not above:
            raise StructuralError("need at least one linear layer below and above the ReLU layer")
        width = 1 << self.n_atts
        for i, m in enumerate(below + above):
            if m.ndim != 2:
                raise StructuralError(f"layer {i} is not a matrix")
            if m.shape[1] != width:
                raise StructuralError(
                    f"layer {i} expects {m.shape[1]} inputs but receives {width}"
                )
            width = m.shape[0]
        if width != 1:
            raise StructuralError(f"network must end in one output node, got {width}")
        for m in below + above:
            m.setflags(write=False)

    @property
    def input_dim(self) -> int:
        return 1 << self.n_atts

    @property
    def relu_count(self) -> int:
        return self.below[-1].shape[0]

    @property
    def pre_relu(self) -> np.ndarray:
        """Combined ``(l, 2^n)`` map from minterms to ReLU pre-activations."""
        return _chain(self.below)

    @property
    def post_relu(self) -> np.ndarray:
        """Combined length-``l`` map from ReLU outputs to the output node."""
        return _chain(self.above)[0]

    def with_threshold(self, threshold: float) -> "SimpleAnnModel":
        return SimpleAnnModel(self.below, self.above, float(threshold), self.n_atts)


@dataclass(frozen=True)
class PartitionCell:
    number: int
    relu_count: int
    mw: np.ndarray
    count_0: int = 0
    count_1: int = 0

    @property
    def support(self) -> int:
        return self.count_0 + self.count_1

    @property
    def active_set(self) -> frozenset[int]:
        """0-based indices of active ReLU nodes."""
        l = self.relu_count
        return frozenset(i for i in range(l) if (self.number >> (l - 1 - i)) & 1)

    def bitcode(self) -> str:
        return format(self.number, f"0{self.relu_count}b")


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2:
            self.X = self.X.reshape(len(self.y), -1)
        if len(self.X) != len(self.y):
            raise StructuralError(f"{len(self.X)} objects but {len(self.y)} targets")
        if self.y.size and not np.isin(self.y, (0, 1)).all():
            raise DomainError("targets must be 0 or 1")
        if self.X.size and ((self.X < 0).any() or (self.X > 1).any()):
            raise DomainError("attribute values must lie in [0, 1]")
        if not self.names:
            self.names = [f"a{j + 1}" for j in range(self.n_atts)]

    @property
    def n_atts(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return len(self.y)

    def minterms(self) -> np.ndarray:
        if len(self) == 0:
            return np.zeros((0, 1 << self.n_atts))
        return to_minterms_batch(self.X)


def _as_batch(model: SimpleAnnModel, mt) -> tuple[np.ndarray, bool]:
    arr = np.asarray(mt, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != model.input_dim:
        raise StructuralError(
            f"model expects {model.input_dim} minterm values, got {arr.shape[1]}"
        )
    return arr, single


def pre_activations(model: SimpleAnnModel, mt) -> np.ndarray:
    arr, single = _as_batch(model, mt)
    h = arr.T
    for m in model.below:
        h = m @ h
    return h.T[0] if single else h.T


def forward(model: SimpleAnnModel, mt) -> float | np.ndarray:
    """Evaluate the layer stack with the ReLU applied."""
    arr, single = _as_batch(model, mt)
    h = arr.T
    for m in model.below:
        h = m @ h
    h = np.where(h >= 0.0, h, 0.0)
    for m in model.above:
        h = m @ h
    out = h[0]
    return float(out[0]) if single else out


def pattern_number(active: np.ndarray) -> np.ndarray:
    """Pack boolean activity rows into partition numbers (first column = MSB)."""
    active = np.atleast_2d(active).astype(np.int64)
    l = active.shape[1]
    weights = 1 << np.arange(l - 1, -1, -1, dtype=np.int64)
    return active @ weights


def relu_status(model: SimpleAnnModel, mt) -> int | np.ndarray:
    """Partition number of one minterm vector (or an array of them)."""
    z = pre_activations(model, mt)
    p = pattern_number(np.atleast_2d(z) >= 0.0)
    return int(p[0]) if np.ndim(z) == 1 else p


def cell_mask(p: int, l: int) -> np.ndarray:
    if not 0 <= p < (1 << l):
        raise DomainError(f"partition number {p} out of range for {l} ReLU nodes")
    return np.array([(p >> (l - 1 - i)) & 1 for i in range(l)], dtype=float)


def cell_weights(model: SimpleAnnModel, p: int) -> np.ndarray:
    """Minterm weights ``mw^p`` with the ReLU nodes forced according to ``p``.

    Each unit vector ``e_k`` is pushed through the stack with active nodes
    acting as identity and inactive ones as zero.
    """
    mask = cell_mask(p, model.relu_count)
    h = np.eye(model.input_dim)
    for m in model.below:
        h = m @ h
    h = h * mask[:, None]
    for m in model.above:
        h = m @ h
    return h[0]


def atomic_weights(model: SimpleAnnModel) -> dict[int, np.ndarray]:
    """Weights of the ``l`` atomic cells keyed by partition number."""
    l = model.relu_count
    return {1 << (l - 1 - i): cell_weights(model, 1 << (l - 1 - i)) for i in range(l)}


def weights_from_atomic(atomic: dict[int, np.ndarray], p: int, input_dim: int) -> np.ndarray:
    out = np.zeros(input_dim)
    for q, w in atomic.items():
        if p & q:
            out = out + w
    return out


def enumerate_cells(model: SimpleAnnModel, data: LabeledDataset) -> list[PartitionCell]:
    """Non-empty partition cells with their class counts, ordered by number."""
    if len(data) == 0:
        return []
    if data.n_atts != model.n_atts:
        raise StructuralError(f"data has {data.n_atts} attributes, model {model.n_atts}")
    ps = np.atleast_1d(relu_status(model, data.minterms()))
    cells = []
    for p in np.unique(ps):
        sel = ps == p
        ones = int(data.y[sel].sum())
        cells.append(
            PartitionCell(
                number=int(p),
                relu_count=model.relu_count,
                mw=cell_weights(model, int(p)),
                count_0=int(sel.sum()) - ones,
                count_1=ones,
            )
        )
    return cells


def select_essential(
    cells: Sequence[PartitionCell], min_support: int = 1, require_mixed: bool = False
) -> list[PartitionCell]:
    """Cells worth interpreting, ordered by descending support.

    An empty selection is reported through :mod:`warnings`, not raised.
    """
    if min_support < 1:
        raise ConfigurationError(f"min_support must be >= 1, got {min_support}")
    chosen = [
        c
        for c in cells
        if c.support >= min_support and (not require_mixed or (c.count_0 > 0 and c.count_1 > 0))
    ]
    if not chosen:
        warnings.warn("no partition cell passes the essential-cell criteria", RuntimeWarning)
    return sorted(chosen, key=lambda c: (-c.support, c.number))


def auto_min_support(cells: Sequence[PartitionCell], coverage: float = 0.8,
                     require_mixed: bool = False) -> int:
    """Largest support threshold whose selection still covers ``coverage`` of all objects."""
    total = sum(c.support for c in cells)
    if total == 0:
        return 1
    pool = [c for c in cells if not require_mixed or (c.count_0 and c.count_1)]
    best = 1
    for s in sorted({c.support for c in pool}):
        covered = sum(c.support for c in pool if c.support >= s)
        if covered >= coverage * total:
            best = s
    return best


def best_threshold(scores: np.ndarray, targets: np.ndarray) -> tuple[float, float]:
    """Threshold ``t`` maximizing accuracy of ``score > t`` against ``targets``.

    Candidates are every observed score plus one value below all of them;
    ties go to the smallest threshold. Returns ``(t, accuracy)``.
    """
    scores = np.asarray(scores, dtype=float)
    targets = np.asarray(targets, dtype=int)
    m = scores.size
    if m == 0:
        raise DomainError("cannot fit a threshold without objects")
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    t = targets[order]
    # threshold at s[i] labels objects 0..i as 0 (and equal scores after i too)
    ones_total = int(t.sum())
    zeros_cum = np.cumsum(1 - t)
    ones_cum = np.cumsum(t)
    last_of_value = np.r_[s[1:] != s[:-1], True]
    correct = zeros_cum + (ones_total - ones_cum)
    cand_thr = np.r_[s[0] - 1.0, s[last_of_value]]
    cand_correct = np.r_[ones_total, correct[last_of_value]]
    i = int(np.argmax(cand_correct))
    return float(cand_thr[i]), float(cand_correct[i]) / m


def fit_threshold(model: SimpleAnnModel, data: LabeledDataset, midpoint: bool = True) -> float:
    """Decision threshold from the training scores.

    With ``midpoint`` the chosen observed score is moved halfway to the next
    larger score, which leaves every training decision unchanged.
    """
    if len(data) == 0:
        raise DomainError("cannot fit a threshold on an empty dataset")
    scores = np.atleast_1d(forward(model, data.minterms()))
    tau, _ = best_threshold(scores, data.y)
    if midpoint:
        above = scores[scores > tau]
        if above.size:
            tau = (tau + float(above.min())) / 2.0
    return tau


def accuracy(model: SimpleAnnModel, data: LabeledDataset) -> float:
    scores = np.atleast_1d(forward(model, data.minterms()))
    return float(np.mean((scores > model.threshold).astype(int) == data.y))


@dataclass
class TrainParams:
    relu_count: int = 5
    epochs: int = 3000
    learning_rate: float = 0.5
    seed: int = 0
    init_scale: float = 0.5

    def __post_init__(self):
        if self.relu_count < 1:
            raise ConfigurationError("relu_count must be >= 1")
        if self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")


def init_model(n_atts: int, params: TrainParams) -> SimpleAnnModel:
    rng = np.random.default_rng(params.seed)
    s = params.init_scale
    w1 = rng.uniform(-s, s, size=(params.relu_count, 1 << n_atts))
    w2 = rng.uniform(-s, s, size=(1, params.relu_count))
    return SimpleAnnModel((w1,), (w2,), 0.0, n_atts)


def train(data: LabeledDataset, params: TrainParams | None = None) -> SimpleAnnModel:
    """Full-batch gradient descent on the squared error ``(out - y)^2``.

    The architecture is one ``l x 2^n`` matrix below the ReLU layer and one
    ``1 x l`` row above it. Weights with the lowest training loss seen are
    returned; the decision threshold is fitted afterwards.
    """
    params = params or TrainParams()
    model = init_model(data.n_atts, params)
    if len(data) == 0:
        raise DomainError("cannot train on an empty dataset")
    if params.epochs == 0:
        return model

    mt = data.minterms()
    y = data.y.astype(float)
    m = len(y)
    w1 = model.below[0].copy()
    w2 = model.above[0][0].copy()
    best = (np.inf, w1.copy(), w2.copy())
    lr = params.learning_rate
    for epoch in range(params.epochs):
        z = mt @ w1.T
        a = np.maximum(z, 0.0)
        out = a @ w2
        err = out - y
        loss = float(np.mean(err**2))
        if not np.isfinite(loss):
            log.warning("training diverged at epoch %d; keeping best weights", epoch)
            break
        if loss < best[0]:
            best = (loss, w1.copy(), w2.copy())
        g_out = 2.0 * err / m
        g_w2 = a.T @ g_out
        g_z = np.outer(g_out, w2) * (z >= 0.0)
        g_w1 = g_z.T @ mt
        w1 -= lr * g_w1
        w2 -= lr * g_w2
    else:
        z = mt @ w1.T
        loss = float(np.mean((np.maximum(z, 0.0) @ w2 - y) ** 2))
        if loss < best[0]:
            best = (loss, w1.copy(), w2.copy())
    log.info("training finished, best loss %.6f", best[0])
    trained = SimpleAnnModel((best[1],), (best[2][None, :],), 0.0, data.n_atts)
    return trained.with_threshold(fit_threshold(trained, data))
