"""Interpret simple ReLU networks over minterm inputs as weighted logic trees."""

from .errors import (AnnLogicError, ConfigurationError, DegenerateRangeError, DomainError,
                     IngestionError, StructuralError, UncoveredCellError)
from .fca import (DyadicContext, SelectionMethod, TriadicConcept, TriadicContext,
                  excl_triconcepts, triconcepts)
from .minterms import bitcode_of, index_of, to_minterms
from .network import LabeledDataset, PartitionCell, SimpleAnnModel
from .pipeline import PipelineConfig, explain, run_pipeline
from .qldt import build_tree, eval_tree, leaf_paths
from .quantizer import BitTensor, QuantizationParams, build_bit_tensor
from .shapley import shapley_global, shapley_object

__version__ = "0.1.0"

__all__ = [
    "AnnLogicError", "ConfigurationError", "DegenerateRangeError", "DomainError",
    "IngestionError", "StructuralError", "UncoveredCellError",
    "DyadicContext", "SelectionMethod", "TriadicConcept", "TriadicContext",
    "excl_triconcepts", "triconcepts",
    "bitcode_of", "index_of", "to_minterms",
    "LabeledDataset", "PartitionCell", "SimpleAnnModel",
    "PipelineConfig", "explain", "run_pipeline",
    "build_tree", "eval_tree", "leaf_paths",
    "BitTensor", "QuantizationParams", "build_bit_tensor",
    "shapley_global", "shapley_object",
]
