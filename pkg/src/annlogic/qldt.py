"""Logic trees over attribute literals built from minterm sets.

A tree is induced with ID3 on the full truth table of ``n`` attributes, so
its 1-leaf paths partition exactly the given minterm set. Evaluating a
tree on ``x`` in ``[0, 1]^n`` sums, over 1-leaf paths, the product of
``x[j]`` (plain literal) or ``1 - x[j]`` (negated literal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .minterms import attribute_bit, check_attribute_count, validate_attributes
from .network import best_threshold

_GAIN_TOL = 1e-12


@dataclass(frozen=True)
class Node:
    """Inner node when ``attribute`` is set, otherwise a leaf with ``label``."""

    attribute: int | None = None
    pos: "Node | None" = None
    neg: "Node | None" = None
    label: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.attribute is None


@dataclass(frozen=True)
class LeafPath:
    literals: tuple[tuple[int, bool], ...]  # (attribute, negated)
    n: int

    @property
    def depth(self) -> int:
        return len(self.literals)

    @property
    def covered_minterms(self) -> int:
        return 1 << (self.n - self.depth)

    def minterms(self) -> frozenset[int]:
        out = []
        for k in range(1 << self.n):
            if all(bool(k & attribute_bit(j, self.n)) != neg for j, neg in self.literals):
                out.append(k)
        return frozenset(out)

    def evaluate(self, x) -> float:
        v = 1.0
        for j, neg in self.literals:
            v *= (1.0 - x[j]) if neg else x[j]
        return v

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        v = np.ones(len(X))
        for j, neg in self.literals:
            v = v * ((1.0 - X[:, j]) if neg else X[:, j])
        return v

    def render(self, names: Sequence[str] | None = None) -> str:
        if not self.literals:
            return "TRUE"
        names = names or [f"a{j + 1}" for j in range(self.n)]
        return " & ".join(("~" if neg else "") + names[j] for j, neg in self.literals)


@dataclass(frozen=True)
class LogicTree:
    root: Node
    n: int
    minterm_set: frozenset[int]

    @cached_property
    def paths(self) -> tuple[LeafPath, ...]:
        out: list[LeafPath] = []

        def walk(node: Node, lits):
            if node.is_leaf:
                if node.label == 1:
                    out.append(LeafPath(tuple(lits), self.n))
                return
            walk(node.pos, lits + [(node.attribute, False)])
            walk(node.neg, lits + [(node.attribute, True)])

        walk(self.root, [])
        return tuple(out)

    def evaluate(self, x) -> float:
        x = validate_attributes(x)
        if x.size != self.n:
            raise DomainError(f"tree over {self.n} attributes got {x.size} values")
        return float(sum(p.evaluate(x) for p in self.paths))

    def evaluate_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(len(X))
        for p in self.paths:
            out += p.evaluate_batch(X)
        return out


def _entropy(pos: int, total: int) -> float:
    if pos == 0 or pos == total:
        return 0.0
    q = pos / total
    return -(q * math.log2(q) + (1 - q) * math.log2(1 - q))


def build_tree(X2: Iterable[int], n: int) -> LogicTree:
    """ID3 tree reproducing the indicator of ``X2`` on all ``2^n`` corners.

    Splits maximize information gain, ties go to the lowest attribute
    index, and growth stops only at pure leaves.
    """
    check_attribute_count(n)
    target = frozenset(int(k) for k in X2)
    if any(not 0 <= k < (1 << n) for k in target):
        raise DomainError(f"minterm ids must lie in [0, {(1 << n) - 1}]")

    def grow(rows: list[int], free: list[int]) -> Node:
        pos = sum(1 for k in rows if k in target)
        if pos == 0:
            return Node(label=0)
        if pos == len(rows):
            return Node(label=1)
        base = _entropy(pos, len(rows))
        best_attr, best_gain = None, -1.0
        for j in free:
            bit = attribute_bit(j, n)
            on = [k for k in rows if k & bit]
            off = [k for k in rows if not k & bit]
            rem = 0.0
            for part in (on, off):
                if part:
                    p = sum(1 for k in part if k in target)
                    rem += len(part) / len(rows) * _entropy(p, len(part))
            gain = base - rem
            if gain > best_gain + _GAIN_TOL:
                best_attr, best_gain = j, gain
        bit = attribute_bit(best_attr, n)
        rest = [j for j in free if j != best_attr]
        return Node(
            attribute=best_attr,
            pos=grow([k for k in rows if k & bit], rest),
            neg=grow([k for k in rows if not k & bit], rest),
        )

    return LogicTree(grow(list(range(1 << n)), list(range(n))), n, target)


def eval_tree(tree: LogicTree, x) -> float:
    return tree.evaluate(x)


def leaf_paths(tree: LogicTree) -> list[LeafPath]:
    return list(tree.paths)


@dataclass(frozen=True)
class ConceptTree:
    tree: LogicTree
    powersum: int
    cells: frozenset[int]


@dataclass(frozen=True)
class ScoreResult:
    score: float
    label: int
    covered: bool
    contributions: tuple[tuple[int, float], ...] = ()  # (concept index, weighted evaluation)


def score(x, p: int, concepts: Sequence[ConceptTree], tau_prime: float) -> ScoreResult:
    """Weighted tree evaluations of the concepts covering cell ``p``.

    Objects of uncovered cells score 0 and fall back to class 0.
    """
    x = validate_attributes(x)
    parts = []
    for i, c in enumerate(concepts):
        if p in c.cells:
            parts.append((i, c.powersum * c.tree.evaluate(x)))
    if not parts:
        return ScoreResult(0.0, 0, False)
    total = float(sum(v for _, v in parts))
    return ScoreResult(total, int(total > tau_prime), True, tuple(parts))


def score_batch(X, cells, concepts: Sequence[ConceptTree]) -> tuple[np.ndarray, np.ndarray]:
    """Scores and coverage flags for many objects at once."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cells = np.asarray(cells)
    scores = np.zeros(len(X))
    covered = np.zeros(len(X), dtype=bool)
    for c in concepts:
        sel = np.isin(cells, list(c.cells))
        if sel.any():
            scores[sel] += c.powersum * c.tree.evaluate_batch(X[sel])
            covered |= sel
    return scores, covered


@dataclass(frozen=True)
class PathMetrics:
    precision: float | None
    recall: float | None
    accuracy: float
    avg0: float | None
    avg1: float | None
    threshold: float
    support: int


def confusion_metrics(pred: np.ndarray, y: np.ndarray) -> tuple[float | None, float | None, float]:
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    return precision, recall, float(np.mean(pred == y))


def evaluation_metrics(values: np.ndarray, y: np.ndarray) -> PathMetrics:
    """Metrics of thresholding ``values`` at their best-accuracy threshold."""
    values = np.asarray(values, dtype=float)
    y = np.asarray(y, dtype=int)
    if values.size == 0:
        raise DomainError("metrics need at least one object")
    thr, _ = best_threshold(values, y)
    pred = (values > thr).astype(int)
    precision, recall, acc = confusion_metrics(pred, y)
    avg0 = float(values[y == 0].mean()) if (y == 0).any() else None
    avg1 = float(values[y == 1].mean()) if (y == 1).any() else None
    return PathMetrics(precision, recall, acc, avg0, avg1, thr, int(values.size))


def path_metrics(path: LeafPath, X, y) -> PathMetrics:
    """Precision, recall, accuracy and class averages of one leaf path.

    The path labels an object 1 when its evaluation exceeds the threshold
    that maximizes accuracy over the given objects.
    """
    return evaluation_metrics(path.evaluate_batch(np.asarray(X, dtype=float)), y)


def path_implications(paths_a: Sequence[LeafPath], paths_b: Sequence[LeafPath]) -> list[tuple[int, int, str]]:
    """Implications between leaf paths as ``(i, j, arrow)``.

    A conjunction with more literals implies one with a subset of them:
    ``"->"`` when ``a_i`` implies ``b_j``, ``"<-"`` for the converse and
    ``"<->"`` for equal literal sets.
    """
    out = []
    for i, a in enumerate(paths_a):
        la = set(a.literals)
        for j, b in enumerate(paths_b):
            lb = set(b.literals)
            if la == lb:
                out.append((i, j, "<->"))
            elif la >= lb:
                out.append((i, j, "->"))
            elif la <= lb:
                out.append((i, j, "<-"))
    return out


def minterm_relation(a: Iterable[int], b: Iterable[int]) -> dict:
    """Set relations between two minterm sets, e.g. a hypothesis and a tree."""
    a, b = frozenset(a), frozenset(b)
    return {
        "intersection": sorted(a & b),
        "a_implies_b": a <= b,
        "b_implies_a": b <= a,
        "disjoint": not (a & b),
    }


def to_dot(tree: LogicTree, names: Sequence[str] | None = None, title: str = "tree",
           weight: int | None = None) -> str:
    """Graphviz source with only the branches leading to 1-leaves.

    Solid edges are plain literals, dashed edges negated ones.
    """
    names = list(names) if names else [f"a{j + 1}" for j in range(tree.n)]
    lines = [f'digraph "{title}" {{', "  node [fontname=Helvetica];"]
    if weight is not None:
        lines.append(f'  label="{title} (weight {weight})";')
    counter = [0]

    def has_one(node: Node) -> bool:
        if node.is_leaf:
            return node.label == 1
        return has_one(node.pos) or has_one(node.neg)

    def emit(node: Node) -> str:
        nid = f"n{counter[0]}"
        counter[0] += 1
        if node.is_leaf:
            lines.append(f'  {nid} [label="{node.label}", shape=box];')
            return nid
        lines.append(f'  {nid} [label="{names[node.attribute]}", shape=ellipse];')
        for child, style in ((node.pos, "solid"), (node.neg, "dashed")):
            if has_one(child):
                cid = emit(child)
                lines.append(f"  {nid} -> {cid} [style={style}];")
        return nid

    if has_one(tree.root):
        emit(tree.root)
    lines.append("}")
    return "\n".join(lines) + "\n"
