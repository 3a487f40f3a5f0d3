"""
Dataset handling for shallowmimic.

This package provides the Dataset container, CSV ingestion, preprocessing
(standardization, GCN, ZCA), splits and the synthetic benchmark.
"""

from shallowmimic.data.csv_io import load_csv, read_matrix_csv, save_csv, write_matrix_csv
from shallowmimic.data.dataset import Dataset, LogitScale
from shallowmimic.data.preprocess import (
    PreprocessKind,
    PreprocessStats,
    apply_pipeline,
    apply_stats,
    fit_gcn_zca,
    gcn,
    load_stats,
    save_stats,
    standardize,
    zca_apply,
    zca_fit,
)
from shallowmimic.data.splits import bootstrap, split
from shallowmimic.data.synthetic import SyntheticSpec, SyntheticSplits, make_synthetic

__all__ = [
    "Dataset",
    "LogitScale",
    "load_csv",
    "read_matrix_csv",
    "save_csv",
    "write_matrix_csv",
    "PreprocessKind",
    "PreprocessStats",
    "apply_pipeline",
    "apply_stats",
    "fit_gcn_zca",
    "gcn",
    "load_stats",
    "save_stats",
    "standardize",
    "zca_apply",
    "zca_fit",
    "bootstrap",
    "split",
    "SyntheticSpec",
    "SyntheticSplits",
    "make_synthetic",
]
