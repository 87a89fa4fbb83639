"""Combinatorial coverage and set-difference coverage over discretized tabular data."""

from .coverage import (Combination, CombinationSet, CoverageResult, combinatorial_coverage,
                       enumerate_t_way, sdcc, sdcc_datasets)
from .dataset import Dataset, DatasetManifest, Schema, load_csv, make_folds
from .errors import DataError, NumericError, SdccError, UsageError

__version__ = "0.1.0"

__all__ = ["Combination", "CombinationSet", "CoverageResult", "DataError", "Dataset",
           "DatasetManifest", "NumericError", "Schema", "SdccError", "UsageError",
           "combinatorial_coverage", "enumerate_t_way", "load_csv", "make_folds", "sdcc",
           "sdcc_datasets"]
