"""Univariate z-score outlier detection as a gate in front of k-means clustering."""
from .dataset import (
    Dataset,
    DatasetError,
    RowSelection,
    drop_rows,
    dump_csv,
    iris,
    iris_outlier_fixture,
    load_csv,
)
from .kmeans import DistanceMeasure, KMeansConfig, KMeansResult, centroid, distance, kmeans_single
from .pipeline import PipelineConfig, PipelineDecision, Verdict, run_pipeline
from .univariate import describe, flag_outliers, outlier_threshold, zscores

__version__ = "0.1.0"
