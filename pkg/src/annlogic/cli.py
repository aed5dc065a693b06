"""Command line interface.

Exit codes: 0 on success, 2 on validation errors, 1 on runtime errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import fca, network, quantizer
from .errors import AnnLogicError, ConfigurationError, DomainError, IngestionError, StructuralError
from .io import ingest, loads_model, save_model, write_dataset
from .pipeline import (PipelineConfig, dump_json, explain, export_dot, format_explanation,
                       load_artifacts, run_pipeline)

VALIDATION_ERRORS = (ConfigurationError, DomainError, IngestionError, StructuralError)


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--normalize", choices=["minmax", "none"], default=None,
                   help="attribute normalization (default minmax; use none for ingested files)")
    p.add_argument("--balance", action="store_true", default=None,
                   help="downsample the majority class")
    p.add_argument("--seed", type=int, default=None)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--relu-count", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annlogic",
                                     description="Decompose a ReLU network into logic trees.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize (and balance) a labeled CSV")
    p.add_argument("csv")
    p.add_argument("--out", required=True)
    p.add_argument("--normalization-out", help="write min/max per column as JSON")
    _add_data_flags(p)

    p = sub.add_parser("train", help="train a constrained ReLU network")
    p.add_argument("data")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    _add_data_flags(p)
    _add_train_flags(p)

    p = sub.add_parser("interpret", help="run the full interpretation pipeline")
    p.add_argument("--data")
    p.add_argument("--model", help="model file; trained from --data when omitted")
    p.add_argument("--out", dest="output")
    p.add_argument("--config", help="YAML file with pipeline settings")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--n-bits", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--min-support", type=int, default=None)
    p.add_argument("--coverage", type=float, default=None)
    p.add_argument("--require-mixed", action="store_true", default=None)
    p.add_argument("--range-over-all-cells", action="store_true", default=None)
    p.add_argument("--method", choices=["M1", "M2", "M3", "M4"], default=None)
    p.add_argument("--weighted-energy", action="store_true", default=None)
    p.add_argument("--refit-threshold", action="store_true", default=None)
    p.add_argument("--top", type=int, default=None)
    p.add_argument("--no-figures", dest="figures", action="store_false", default=None)

    p = sub.add_parser("explain", help="explain the score of one object")
    p.add_argument("artifacts", help="output directory of interpret or its artifacts.json")
    p.add_argument("values", nargs="+", type=float)
    p.add_argument("--raw", action="store_true", help="values are unnormalized")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("export-dot", help="write DOT files for all concept trees")
    p.add_argument("artifacts")
    p.add_argument("--out", required=True)

    p = sub.add_parser("export-cxt", help="write each tensor cell slice as a Burmeister CXT file")
    p.add_argument("artifacts")
    p.add_argument("--out", required=True)
    return parser


def _config_from(args, **extra) -> PipelineConfig:
    keys = ["data", "model", "output", "normalize", "balance", "seed", "relu_count", "epochs",
            "learning_rate", "n_bits", "epsilon", "min_support", "coverage", "require_mixed",
            "range_over_all_cells", "method", "weighted_energy", "refit_threshold", "top",
            "figures"]
    overrides = {k: getattr(args, k) for k in keys if hasattr(args, k)}
    overrides.update(extra)
    return PipelineConfig.load(getattr(args, "config", None), **overrides)


def _cmd_ingest(args) -> int:
    data, norm = ingest(args.csv, args.normalize or "minmax", bool(args.balance), args.seed or 0)
    write_dataset(data, args.out)
    if args.normalization_out and norm:
        Path(args.normalization_out).write_text(dump_json(norm.to_dict()))
    print(f"{len(data)} objects, {data.n_atts} attributes, "
          f"{int(data.y.sum())} positive -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    cfg = _config_from(args, data=args.data)
    data, _ = ingest(cfg.data, cfg.normalize, cfg.balance, cfg.seed)
    model = network.train(data, cfg.train_params())
    save_model(model, args.out)
    print(f"training accuracy {network.accuracy(model, data):.4f}, "
          f"threshold {model.threshold:.6g} -> {args.out}")
    return 0


def _cmd_interpret(args) -> int:
    cfg = _config_from(args)
    result = run_pipeline(cfg)
    s = result.report["summary"]
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"cells {s['non_empty_cells']}, essential {s['essential_cells']}, "
          f"concepts {s.get('concept_count', 0)}")
    if "concept_accuracy_covered" in s:
        print(f"accuracy on covered objects: network {s['network_accuracy_covered']}, "
              f"quantized {s['quantized_accuracy_covered']}, "
              f"concepts {s['concept_accuracy_covered']}")
    if cfg.output:
        print(f"report written to {cfg.output}")
    return 0


def _cmd_explain(args) -> int:
    e = explain(args.values, load_artifacts(args.artifacts), raw=args.raw)
    print(dump_json(e) if args.json else format_explanation(e), end="")
    return 0


def _cmd_export_dot(args) -> int:
    for path in export_dot(load_artifacts(args.artifacts), args.out):
        print(path)
    return 0


def _cmd_export_cxt(args) -> int:
    art = load_artifacts(args.artifacts)
    if not art["tensor_cells"]:
        raise ConfigurationError("artifacts contain no bit tensor")
    model = loads_model(art["model"])
    params = quantizer.QuantizationParams(**art["params"])
    cells = [network.PartitionCell(p, model.relu_count, network.cell_weights(model, p))
             for p in art["tensor_cells"]]
    bt = quantizer.build_bit_tensor(cells, params, clamp=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, p in enumerate(bt.cells):
        ctx = fca.DyadicContext.from_matrix(
            bt.bits[i], [f"mt{k}" for k in range(1 << bt.n)], [f"bl{b}" for b in range(bt.n_bits)])
        path = out / f"cell_{p}.cxt"
        path.write_text(fca.write_cxt(ctx))
        print(path)
    return 0


COMMANDS = {
    "ingest": _cmd_ingest,
    "train": _cmd_train,
    "interpret": _cmd_interpret,
    "explain": _cmd_explain,
    "export-dot": _cmd_export_dot,
    "export-cxt": _cmd_export_cxt,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except VALIDATION_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (AnnLogicError, OSError, json.JSONDecodeError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
