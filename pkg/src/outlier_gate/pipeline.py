"""Outlier gate: drop flagged tuples only if that lowers the best k-means total."""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .dataset import Dataset, DatasetError, RowSelection, drop_rows
from .kmeans import KMeansConfig, kmeans
from .univariate import OutlierReport, flag_outliers

__all__ = ["PipelineConfig", "PipelineDecision", "Verdict", "run_pipeline"]


class Verdict(str, enum.Enum):
    NO_OUTLIERS_DETECTED = "no_outliers_detected"
    REMOVED = "removed"
    RETAINED = "retained"


@dataclass(frozen=True)
class PipelineConfig:
    variables: Optional[Sequence[str]] = None
    threshold_override: Optional[float] = None
    kmeans: KMeansConfig = field(default_factory=KMeansConfig)

    def to_dict(self) -> dict:
        return {
            "variables": None if self.variables is None else list(self.variables),
            "threshold_override": self.threshold_override,
            "kmeans": self.kmeans.to_dict(),
        }


@dataclass(frozen=True)
class PipelineDecision:
    outliers: OutlierReport
    sum_with: Optional[float]
    sum_without: Optional[float]
    removed: RowSelection
    verdict: Verdict
    cleaned: Dataset
    config: PipelineConfig

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "sum_with": self.sum_with,
            "sum_without": self.sum_without,
            "removed": list(self.removed.indices),
            "outliers": self.outliers.to_dict(),
            "config": self.config.to_dict(),
        }


def run_pipeline(
    ds: Dataset, config: PipelineConfig | None = None, n_jobs: int = 1
) -> PipelineDecision:
    """Flag univariate outliers, then keep the removal only if it pays off.

    Both clusterings share the same k-means configuration and seed. Removal
    requires the cleaned best total to be strictly smaller; a tie keeps the
    data as is. The outlier cutoff is derived from the full dataset's size.
    """
    config = config or PipelineConfig()
    report = flag_outliers(ds, config.variables, config.threshold_override)
    cleaned_copy = Dataset(ds.columns, ds.values)
    if not report.union:
        return PipelineDecision(
            report, None, None, RowSelection(), Verdict.NO_OUTLIERS_DETECTED,
            cleaned_copy, config,
        )

    without = drop_rows(ds, report.union)
    if without.n < config.kmeans.k:
        raise DatasetError(
            f"removing {len(report.union)} flagged row(s) leaves {without.n} rows, "
            f"fewer than k={config.kmeans.k}"
        )
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            runs = list(pool.map(lambda d: kmeans(d, config.kmeans), (ds, without)))
    else:
        runs = [kmeans(ds, config.kmeans), kmeans(without, config.kmeans)]
    sum_with, sum_without = runs[0].best.total_sum, runs[1].best.total_sum

    if sum_without < sum_with:
        return PipelineDecision(
            report, sum_with, sum_without, report.union, Verdict.REMOVED, without, config
        )
    return PipelineDecision(
        report, sum_with, sum_without, RowSelection(), Verdict.RETAINED, cleaned_copy, config
    )
