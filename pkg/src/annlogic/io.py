"""CSV ingestion and model files."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IngestionError, StructuralError
from .network import LabeledDataset, SimpleAnnModel

MODEL_MAGIC = "annlogic-model 1"


@dataclass
class Normalization:
    names: list[str]
    mins: list[float]
    maxs: list[float]

    def apply(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        lo, hi = np.asarray(self.mins), np.asarray(self.maxs)
        return np.clip((v - lo) / (hi - lo), 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"names": self.names, "mins": self.mins, "maxs": self.maxs}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalization":
        return cls(list(d["names"]), [float(v) for v in d["mins"]], [float(v) for v in d["maxs"]])


def read_csv(path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Header names, raw attribute matrix and binary targets (last column)."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise IngestionError(f"{path}: need a header and at least one data row")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise IngestionError(f"{path}: need at least one attribute column and a target column")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise IngestionError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        parsed = []
        for name, cell in zip(header, row):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise IngestionError(
                    f"{path}:{lineno}: column {name!r} has non-numeric value {cell!r}"
                ) from None
        data.append(parsed)
    arr = np.array(data)
    y = arr[:, -1]
    if not np.isin(y, (0.0, 1.0)).all():
        raise IngestionError(f"{path}: target column {header[-1]!r} must hold 0/1 values")
    return header[:-1], arr[:, :-1], y.astype(int)


def fit_normalization(names, X) -> Normalization:
    mins = X.min(axis=0)
    maxs = X.max(axis=0)
    for name, lo, hi in zip(names, mins, maxs):
        if lo == hi:
            raise IngestionError(f"column {name!r} is constant ({lo}); cannot normalize")
    return Normalization(list(names), [float(v) for v in mins], [float(v) for v in maxs])


def balance_indices(y: np.ndarray, seed: int = 0) -> np.ndarray:
    """Indices keeping every minority object and an equal random share of the majority."""
    rng = np.random.default_rng(seed)
    idx0 = np.flatnonzero(y == 0)
    idx1 = np.flatnonzero(y == 1)
    small, large = (idx0, idx1) if len(idx0) <= len(idx1) else (idx1, idx0)
    keep = rng.choice(large, size=len(small), replace=False)
    return np.sort(np.concatenate([small, keep]))


def ingest(csv_path, normalize: str = "minmax", balance: bool = False,
           seed: int = 0) -> tuple[LabeledDataset, Normalization | None]:
    names, X, y = read_csv(csv_path)
    norm = None
    if normalize == "minmax":
        norm = fit_normalization(names, X)
        X = norm.apply(X)
    elif normalize != "none":
        raise IngestionError(f"unknown normalization {normalize!r}")
    if balance:
        keep = balance_indices(y, seed)
        X, y = X[keep], y[keep]
    return LabeledDataset(X, y, list(names)), norm


def write_dataset(data: LabeledDataset, path, target_name: str = "target") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(data.names) + [target_name])
        for row, t in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in row] + [int(t)])


def _fmt(v: float) -> str:
    return "%.17g" % v


def dumps_model(model: SimpleAnnModel) -> str:
    layers = list(model.below) + list(model.above)
    lines = [
        MODEL_MAGIC,
        f"n_atts {model.n_atts}",
        f"relu_count {model.relu_count}",
        f"relu_position {len(model.below)}",
        f"threshold {_fmt(model.threshold)}",
        f"layers {len(layers)}",
    ]
    for i, m in enumerate(layers):
        lines.append(f"layer {i} {m.shape[0]} {m.shape[1]}")
        lines += [" ".join(_fmt(v) for v in row) for row in m]
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> SimpleAnnModel:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != MODEL_MAGIC:
        raise StructuralError("not an annlogic model file")
    header = {}
    pos = 1
    for key in ("n_atts", "relu_count", "relu_position", "threshold", "layers"):
        k, _, v = lines[pos].partition(" ")
        if k != key:
            raise StructuralError(f"expected {key!r} in model header, got {k!r}")
        header[key] = v
        pos += 1
    layers = []
    for i in range(int(header["layers"])):
        tag, idx, r, c = lines[pos].split()
        if tag != "layer" or int(idx) != i:
            raise StructuralError(f"malformed layer header {lines[pos]!r}")
        r, c = int(r), int(c)
        rows = [[float(v) for v in lines[pos + 1 + j].split()] for j in range(r)]
        if any(len(row) != c for row in rows):
            raise StructuralError(f"layer {i}: rows must have {c} entries")
        layers.append(np.array(rows, dtype=float).reshape(r, c))
        pos += 1 + r
    split = int(header["relu_position"])
    model = SimpleAnnModel(tuple(layers[:split]), tuple(layers[split:]),
                           float(header["threshold"]), int(header["n_atts"]))
    if model.relu_count != int(header["relu_count"]):
        raise StructuralError("relu_count does not match the layer below the ReLU layer")
    return model


def save_model(model: SimpleAnnModel, path) -> None:
    Path(path).write_text(dumps_model(model))


def load_model(path) -> SimpleAnnModel:
    return loads_model(Path(path).read_text())
