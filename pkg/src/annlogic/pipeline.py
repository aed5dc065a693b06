"""End-to-end interpretation of a constrained ReLU network.

``run_pipeline`` goes from data (and optionally a stored model) to a
report: partition cells, bit tensor, exclusive triadic concepts, their
logic trees, leaf-path statistics, Shapley tables and implications.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import fca, network, quantizer
from .errors import AnnLogicError, ConfigurationError
from .io import Normalization, dumps_model, ingest, loads_model, load_model
from .minterms import to_minterms
from .qldt import (ConceptTree, build_tree, evaluation_metrics, path_implications,
                   path_metrics, score_batch, to_dot)
from .shapley import shapley_global

log = logging.getLogger(__name__)

REPORT_VERSION = 1

M4_NOTE = ("M4 accuracy: best-threshold accuracy of powersum * tree evaluation over the "
           "training objects of the concept's cells")
PATH_NOTE = ("path/concept precision, recall, accuracy: an object is labeled 1 when the "
             "evaluation exceeds the accuracy-maximizing threshold over the objects of the "
             "concept's cells")


@dataclass
class PipelineConfig:
    data: str | None = None
    model: str | None = None
    output: str | None = None
    normalize: str = "minmax"
    balance: bool = False
    n_bits: int = 7
    epsilon: float | None = None
    min_support: int | None = None
    coverage: float = 0.8
    require_mixed: bool = False
    range_over_all_cells: bool = False
    method: str = "M1"
    weighted_energy: bool = False
    seed: int = 0
    epochs: int = 3000
    learning_rate: float = 0.5
    relu_count: int = 5
    refit_threshold: bool = False
    top: int = 5
    figures: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.n_bits < 1:
            raise ConfigurationError("n_bits must be >= 1")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ConfigurationError("epsilon must be positive")
        if self.min_support is not None and self.min_support < 1:
            raise ConfigurationError("min_support must be >= 1")
        if not 0 < self.coverage <= 1:
            raise ConfigurationError("coverage must lie in (0, 1]")
        if self.epochs < 0 or self.relu_count < 1 or self.learning_rate <= 0:
            raise ConfigurationError("training hyperparameters must be positive")
        if self.top < 0:
            raise ConfigurationError("top must be >= 0")
        if self.normalize not in ("minmax", "none"):
            raise ConfigurationError(f"unknown normalization {self.normalize!r}")
        self.method = fca.SelectionMethod.parse(self.method).value

    @classmethod
    def load(cls, path=None, **overrides) -> "PipelineConfig":
        """Defaults, then the YAML file, then explicit overrides (``None`` skipped)."""
        values: dict[str, Any] = {}
        if path:
            loaded = yaml.safe_load(Path(path).read_text()) or {}
            if not isinstance(loaded, dict):
                raise ConfigurationError(f"{path}: config must be a mapping")
            values.update({k.replace("-", "_"): v for k, v in loaded.items()})
        values.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)

    def train_params(self) -> network.TrainParams:
        return network.TrainParams(self.relu_count, self.epochs, self.learning_rate, self.seed)


@dataclass
class PipelineResult:
    """In-memory outcome of a pipeline run."""

    model: network.SimpleAnnModel
    data: network.LabeledDataset
    cells: list
    essential: list
    bit_tensor: quantizer.BitTensor | None
    concepts: list
    trees: list
    report: dict
    normalization: Normalization | None = None
    warnings: list = field(default_factory=list)

    def artifacts(self) -> dict:
        bt = self.bit_tensor
        return {
            "version": REPORT_VERSION,
            "names": list(self.data.names),
            "n_atts": self.data.n_atts,
            "model": dumps_model(self.model),
            "normalization": self.normalization.to_dict() if self.normalization else None,
            "tensor_cells": list(bt.cells) if bt else [],
            "params": _params_dict(bt.params) if bt else None,
            "tau_prime": bt.tau_prime if bt else None,
            "concepts": [_concept_ref(c) for c in self.concepts],
        }


def _params_dict(p: quantizer.QuantizationParams) -> dict:
    return {"a": p.a, "b": p.b, "n_bits": p.n_bits, "epsilon": p.epsilon}


def _concept_ref(c: fca.TriadicConcept) -> dict:
    return {
        "cells": sorted(int(v) for v in c.X1),
        "minterms": sorted(int(v) for v in c.X2),
        "bit_levels": sorted(int(v) for v in c.X3),
        "powersum": c.powersum,
        "power": c.power,
        "relpower": str(c.relpower),
    }


def _ranges(values) -> str:
    """Compact ``0,2-7,9`` rendering of an integer set."""
    vals = sorted(values)
    if not vals:
        return "-"
    out, start, prev = [], vals[0], vals[0]
    for v in vals[1:] + [None]:
        if v is not None and v == prev + 1:
            prev = v
            continue
        out.append(str(start) if start == prev else f"{start}-{prev}")
        if v is not None:
            start = prev = v
    return ",".join(out)


def _maybe(v):
    return None if v is None else float(v)


def run_pipeline(config: PipelineConfig, data: network.LabeledDataset | None = None,
                 model: network.SimpleAnnModel | None = None, write: bool = True) -> PipelineResult:
    """Train or load, partition, quantize, extract concepts and report.

    ``data`` and ``model`` may be injected directly; otherwise they come
    from ``config.data`` / ``config.model``. Files are written to
    ``config.output`` when ``write`` is set and an output directory is given.
    """
    caught: list[str] = []
    norm = None
    stage = "ingest"
    try:
        if data is None:
            if not config.data:
                raise ConfigurationError("no dataset given")
            data, norm = ingest(config.data, config.normalize, config.balance, config.seed)
        stage = "model"
        if model is None:
            if config.model:
                model = load_model(config.model)
            else:
                model = network.train(data, config.train_params())
        if config.refit_threshold:
            model = model.with_threshold(network.fit_threshold(model, data))
        stage = "cells"
        with warnings.catch_warnings(record=True) as wlist:
            warnings.simplefilter("always")
            cells = network.enumerate_cells(model, data)
            min_support = config.min_support or network.auto_min_support(
                cells, config.coverage, config.require_mixed)
            essential = network.select_essential(cells, min_support, config.require_mixed)
        caught += [str(w.message) for w in wlist]
        stage = "quantize"
        bt = None
        concepts: list[fca.TriadicConcept] = []
        trees: list[ConceptTree] = []
        mt = data.minterms()
        obj_cells = np.atleast_1d(network.relu_status(model, mt)) if len(data) else np.zeros(0, int)
        if essential:
            range_cells = cells if config.range_over_all_cells else essential
            params = quantizer.fit_params(range_cells, config.n_bits, config.epsilon)
            bt = quantizer.build_bit_tensor(essential, params, model.threshold,
                                            clamp=config.range_over_all_cells)
            stage = "concepts"
            table = fca.ObjectTable(mt, obj_cells, data.y)
            concepts = fca.excl_triconcepts(bt, config.method, table, config.weighted_energy)
            trees = [ConceptTree(build_tree(c.X2, data.n_atts), c.powersum, frozenset(c.X1))
                     for c in concepts]
        else:
            caught.append("empty essential cell set; no concepts extracted")
        stage = "report"
        report = _build_report(config, model, data, cells, essential, bt, concepts, trees,
                               mt, obj_cells, min_support, caught)
    except AnnLogicError as e:
        raise type(e)(f"[{stage}] {e}") from e
    result = PipelineResult(model, data, cells, essential, bt, concepts, trees, report, norm, caught)
    if write and config.output:
        write_outputs(result, config)
    return result


def _build_report(config, model, data, cells, essential, bt, concepts, trees, mt, obj_cells,
                  min_support, notes) -> dict:
    names = list(data.names)
    ess_numbers = {c.number for c in essential}
    raw_scores = np.atleast_1d(network.forward(model, mt)) if len(data) else np.zeros(0)
    net_pred = (raw_scores > model.threshold).astype(int)

    summary: dict[str, Any] = {
        "objects": len(data),
        "attributes": names,
        "relu_count": model.relu_count,
        "threshold": model.threshold,
        "network_accuracy": float(np.mean(net_pred == data.y)) if len(data) else None,
        "non_empty_cells": len(cells),
        "essential_cells": [c.number for c in essential],
        "min_support": min_support,
        "method": config.method,
        "weighted_energy": config.weighted_energy,
        "notes": [M4_NOTE, PATH_NOTE] + list(notes),
    }

    covered = np.isin(obj_cells, list(ess_numbers)) if len(data) else np.zeros(0, bool)
    summary["covered_objects"] = int(covered.sum())
    if bt is not None:
        summary.update(
            n_bits=bt.n_bits,
            quantization=_params_dict(bt.params),
            tau_prime=bt.tau_prime,
            tensor_power=quantizer.power(bt),
            concept_count=len(concepts),
        )
        q_scores = np.array([
            quantizer.bit_tensor_score(bt, int(p), row) if cov else 0.0
            for p, row, cov in zip(obj_cells, mt, covered)
        ])
        c_scores, c_cov = score_batch(data.X, obj_cells, trees)
        q_pred = (q_scores > bt.tau_prime).astype(int)
        c_pred = (c_scores > bt.tau_prime).astype(int)
        y = data.y
        summary.update(
            quantized_accuracy_covered=_acc(q_pred[covered], y[covered]),
            concept_accuracy_covered=_acc(c_pred[c_cov], y[c_cov]),
            network_accuracy_covered=_acc(net_pred[covered], y[covered]),
            concept_accuracy_all=_acc(np.where(c_cov, c_pred, 0), y),
            max_score_gap=float(np.max(np.abs(q_scores - c_scores)[covered], initial=0.0)),
        )

    cell_rows = [
        {"number": c.number, "bitcode": c.bitcode(), "count_0": c.count_0, "count_1": c.count_1,
         "support": c.support, "essential": c.number in ess_numbers,
         "mw": [float(v) for v in c.mw]}
        for c in cells
    ]
    shap_rows = [
        {"cell": c.number, "values": list(shapley_global(c.mw, data.n_atts).values)}
        for c in essential
    ]

    concept_rows, path_rows = [], []
    for i, (c, t) in enumerate(zip(concepts, trees)):
        sel = np.isin(obj_cells, list(c.X1))
        row = _concept_ref(c)
        row.update(id=f"c{i + 1}", relpower_value=float(c.relpower), support=int(sel.sum()))
        if sel.any():
            m = evaluation_metrics(c.powersum * t.tree.evaluate_batch(data.X[sel]), data.y[sel])
            row.update(precision=_maybe(m.precision), recall=_maybe(m.recall), accuracy=m.accuracy)
        else:
            row.update(precision=None, recall=None, accuracy=None)
        concept_rows.append(row)
        if i < config.top and sel.any():
            for path in t.tree.paths:
                pm = path_metrics(path, data.X[sel], data.y[sel])
                path_rows.append({
                    "concept": f"c{i + 1}", "path": path.render(names),
                    "literals": [[j, neg] for j, neg in path.literals],
                    "precision": _maybe(pm.precision), "recall": _maybe(pm.recall),
                    "accuracy": pm.accuracy, "n_minterms": path.covered_minterms,
                    "avg0": _maybe(pm.avg0), "avg1": _maybe(pm.avg1),
                })

    top_concepts = concepts[: max(config.top, 0)]
    impl = [[f"c{i + 1}", f"c{j + 1}"] for i, j in fca.concept_implications(top_concepts)]
    path_impl = []
    if len(trees) >= 2 and config.top >= 2:
        pa, pb = trees[0].tree.paths, trees[1].tree.paths
        path_impl = [{"a": pa[i].render(names), "b": pb[j].render(names), "arrow": arrow}
                     for i, j, arrow in path_implications(pa, pb)]

    return {
        "version": REPORT_VERSION,
        "summary": summary,
        "cells": cell_rows,
        "shapley": shap_rows,
        "concepts": concept_rows,
        "relpower_sum": str(sum((c.relpower for c in concepts), Fraction(0))),
        "leaf_paths": path_rows,
        "concept_implications": impl,
        "path_implications": path_impl,
    }


def _acc(pred, y):
    return float(np.mean(pred == y)) if len(y) else None


# -- output ------------------------------------------------------------------

def _pct(v):
    return "-" if v is None else f"{100 * v:.0f}%"


def format_report(report: dict) -> str:
    s = report["summary"]
    names = s["attributes"]
    out = []
    out.append("== summary ==")
    for key in ("objects", "relu_count", "threshold", "network_accuracy", "non_empty_cells",
                "essential_cells", "covered_objects", "n_bits", "tau_prime", "tensor_power",
                "method", "concept_count", "network_accuracy_covered",
                "quantized_accuracy_covered", "concept_accuracy_covered"):
        if key in s:
            out.append(f"{key:28s} {s[key]}")
    for note in s["notes"]:
        out.append(f"note: {note}")

    out.append("\n== partition cells ==")
    out.append(f"{'cell':>6} {'bits':>8} {'#0':>5} {'#1':>5} {'support':>8}  essential")
    for c in report["cells"]:
        out.append(f"{c['number']:>6} {c['bitcode']:>8} {c['count_0']:>5} {c['count_1']:>5} "
                   f"{c['support']:>8}  {'*' if c['essential'] else ''}")

    out.append("\n== Shapley values per essential cell ==")
    out.append(f"{'cell':>6} " + " ".join(f"{n:>12.12s}" for n in names))
    for r in report["shapley"]:
        out.append(f"{r['cell']:>6} " + " ".join(f"{v:>12.4f}" for v in r["values"]))

    out.append("\n== exclusive concepts ==")
    out.append(f"{'id':>5} {'cells':>16} {'minterms':>24} {'bit levels':>12} {'relpower':>9} "
               f"{'prec':>5} {'rec':>5} {'acc':>5} {'supp':>6}")
    for c in report["concepts"]:
        out.append(
            f"{c['id']:>5} {_ranges(c['cells']):>16} {_ranges(c['minterms']):>24} "
            f"{_ranges(c['bit_levels']):>12} {100 * c['relpower_value']:>8.1f}% "
            f"{_pct(c['precision']):>5} {_pct(c['recall']):>5} {_pct(c['accuracy']):>5} "
            f"{c['support']:>6}")
    out.append(f"relpower sum: {report['relpower_sum']}")

    out.append("\n== leaf paths ==")
    out.append(f"{'concept':>7}  {'path':40s} {'prec':>5} {'rec':>5} {'acc':>5} {'#mt':>4} "
               f"{'0-avg':>7} {'1-avg':>7}")
    for p in report["leaf_paths"]:
        a0 = "-" if p["avg0"] is None else f"{p['avg0']:.3f}"
        a1 = "-" if p["avg1"] is None else f"{p['avg1']:.3f}"
        out.append(f"{p['concept']:>7}  {p['path']:40s} {_pct(p['precision']):>5} "
                   f"{_pct(p['recall']):>5} {_pct(p['accuracy']):>5} {p['n_minterms']:>4} "
                   f"{a0:>7} {a1:>7}")

    out.append("\n== concept implications ==")
    for a, b in report["concept_implications"]:
        out.append(f"{a} -> {b}")
    out.append("\n== leaf path implications (first two concepts) ==")
    for r in report["path_implications"]:
        out.append(f"{r['a']:40s} {r['arrow']:^5} {r['b']}")
    return "\n".join(out) + "\n"


def _write_csv(path: Path, header, rows) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_tables(report: dict, outdir: Path) -> None:
    names = report["summary"]["attributes"]
    tdir = outdir / "tables"
    tdir.mkdir(parents=True, exist_ok=True)
    _write_csv(tdir / "cells.csv", ["cell", "bitcode", "count_0", "count_1", "support", "essential"],
               [[c["number"], c["bitcode"], c["count_0"], c["count_1"], c["support"],
                 int(c["essential"])] for c in report["cells"]])
    _write_csv(tdir / "shapley.csv", ["cell"] + names,
               [[r["cell"]] + [repr(v) for v in r["values"]] for r in report["shapley"]])
    _write_csv(tdir / "concepts.csv",
               ["id", "cells", "minterms", "bit_levels", "powersum", "power", "relpower",
                "precision", "recall", "accuracy", "support"],
               [[c["id"], _ranges(c["cells"]), _ranges(c["minterms"]), _ranges(c["bit_levels"]),
                 c["powersum"], c["power"], c["relpower"], c["precision"], c["recall"],
                 c["accuracy"], c["support"]] for c in report["concepts"]])
    _write_csv(tdir / "leaf_paths.csv",
               ["concept", "path", "precision", "recall", "accuracy", "n_minterms", "avg0", "avg1"],
               [[p["concept"], p["path"], p["precision"], p["recall"], p["accuracy"],
                 p["n_minterms"], p["avg0"], p["avg1"]] for p in report["leaf_paths"]])
    _write_csv(tdir / "implications.csv", ["from", "to"], report["concept_implications"])


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_outputs(result: PipelineResult, config: PipelineConfig) -> Path:
    outdir = Path(config.output)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(dump_json(result.report))
    (outdir / "report.txt").write_text(format_report(result.report))
    (outdir / "artifacts.json").write_text(dump_json(result.artifacts()))
    (outdir / "model.txt").write_text(dumps_model(result.model))
    write_tables(result.report, outdir)
    export_dot(result.artifacts(), outdir / "dot")
    if config.figures:
        from .plotting import render_figures

        render_figures(result.report, outdir / "figures")
    return outdir


def export_dot(artifacts: dict, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for i, c in enumerate(artifacts["concepts"]):
        tree = build_tree(c["minterms"], artifacts["n_atts"])
        path = outdir / f"c{i + 1}.dot"
        path.write_text(to_dot(tree, artifacts["names"], f"c{i + 1}", c["powersum"]))
        written.append(path)
    return written


# -- per-object explanation ----------------------------------------------------

def load_artifacts(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / "artifacts.json"
    return json.loads(path.read_text())


def explain(values, artifacts: dict, raw: bool = False) -> dict:
    """Score decomposition of one object against stored pipeline artifacts."""
    x = np.asarray(values, dtype=float)
    if raw:
        if not artifacts.get("normalization"):
            raise ConfigurationError("artifacts carry no normalization for raw values")
        x = Normalization.from_dict(artifacts["normalization"]).apply(x)
    model = loads_model(artifacts["model"])
    names = artifacts["names"]
    mt = to_minterms(x)
    p = network.relu_status(model, mt)
    tau_prime = artifacts["tau_prime"]
    trees = []
    total = 0.0
    for i, c in enumerate(artifacts["concepts"]):
        if p not in c["cells"]:
            continue
        tree = build_tree(c["minterms"], len(x))
        paths = [{"path": pth.render(names), "contribution": c["powersum"] * pth.evaluate(x)}
                 for pth in tree.paths]
        contrib = c["powersum"] * tree.evaluate(x)
        total += contrib
        trees.append({"concept": f"c{i + 1}", "powersum": c["powersum"],
                      "evaluation": tree.evaluate(x), "contribution": contrib, "paths": paths})
    covered = bool(trees)
    out = {
        "values": [float(v) for v in x],
        "cell": int(p),
        "network_score": float(network.forward(model, mt)),
        "network_class": int(network.forward(model, mt) > model.threshold),
        "covered": covered,
        "trees": trees,
        "score": total if covered else 0.0,
        "tau_prime": tau_prime,
    }
    out["class"] = int(covered and tau_prime is not None and total > tau_prime)
    if artifacts["tensor_cells"] and p in artifacts["tensor_cells"]:
        params = quantizer.QuantizationParams(**artifacts["params"])
        bt = quantizer.build_bit_tensor(
            [network.PartitionCell(p, model.relu_count, network.cell_weights(model, p))],
            params, clamp=True)
        out["bit_tensor_score"] = quantizer.bit_tensor_score(bt, p, mt)
    return out


def format_explanation(e: dict) -> str:
    lines = [f"partition cell: {e['cell']}",
             f"network score: {e['network_score']:.6g} (class {e['network_class']})"]
    if not e["covered"]:
        lines.append("no concept covers this cell; fallback class 0 (coverage=false)")
    for t in e["trees"]:
        lines.append(f"{t['concept']}: {t['powersum']} * {t['evaluation']:.6g} = "
                     f"{t['contribution']:.6g}")
        for p in t["paths"]:
            lines.append(f"    {p['path']:40s} {p['contribution']:.6g}")
    tp = e["tau_prime"]
    lines.append(f"score: {e['score']:.6g} vs tau' {'-' if tp is None else f'{tp:.6g}'}"
                 f" -> class {e['class']} (coverage={'true' if e['covered'] else 'false'})")
    return "\n".join(lines) + "\n"
