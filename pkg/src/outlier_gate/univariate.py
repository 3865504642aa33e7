"""Descriptive statistics, standard scores and threshold-based outlier flagging."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import Dataset, DatasetError, RowSelection

__all__ = [
    "DescriptiveStats",
    "ZScoreReport",
    "OutlierCriterion",
    "FlaggedValue",
    "OutlierReport",
    "ZeroVarianceError",
    "describe",
    "zscores",
    "outlier_threshold",
    "flag_outliers",
    "SMALL_SAMPLE_MAX",
    "SMALL_SAMPLE_THRESHOLD",
    "LARGE_SAMPLE_THRESHOLD",
]

SMALL_SAMPLE_MAX = 80
SMALL_SAMPLE_THRESHOLD = 2.5
LARGE_SAMPLE_THRESHOLD = 3.0


class ZeroVarianceError(DatasetError):
    """The variable has no spread and cannot be standardized."""


@dataclass(frozen=True)
class DescriptiveStats:
    n: int
    minimum: float
    maximum: float
    mean: float
    std_dev: float


@dataclass(frozen=True, eq=False)
class ZScoreReport:
    variable: str
    scores: np.ndarray
    stats: DescriptiveStats


@dataclass(frozen=True)
class OutlierCriterion:
    threshold: float
    sample_size: int
    inclusive: bool = True

    def flags(self, z: np.ndarray) -> np.ndarray:
        return np.abs(z) >= self.threshold


@dataclass(frozen=True)
class FlaggedValue:
    row_index: int
    value: float
    zscore: float


@dataclass(frozen=True)
class OutlierReport:
    per_variable: dict[str, tuple[FlaggedValue, ...]]
    criterion: OutlierCriterion
    union: RowSelection = field(default_factory=RowSelection)

    def to_dict(self) -> dict:
        return {
            "criterion": {
                "threshold": self.criterion.threshold,
                "sample_size": self.criterion.sample_size,
                "inclusive": self.criterion.inclusive,
            },
            "per_variable": {
                name: [
                    {"row_index": f.row_index, "value": f.value, "zscore": f.zscore}
                    for f in flagged
                ]
                for name, flagged in self.per_variable.items()
            },
            "union": list(self.union.indices),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "OutlierReport":
        crit = doc["criterion"]
        return cls(
            per_variable={
                name: tuple(
                    FlaggedValue(int(f["row_index"]), float(f["value"]), float(f["zscore"]))
                    for f in flagged
                )
                for name, flagged in doc["per_variable"].items()
            },
            criterion=OutlierCriterion(
                float(crit["threshold"]),
                int(crit["sample_size"]),
                bool(crit.get("inclusive", True)),
            ),
            union=RowSelection.of(doc["union"]),
        )


def describe(ds: Dataset, variable: str) -> DescriptiveStats:
    """Count, range, mean and sample (N-1) standard deviation of one column."""
    x = ds.column(variable)
    if x.size < 2:
        raise DatasetError(
            f"column {variable!r} has {x.size} value(s); standard deviation needs at least 2"
        )
    return DescriptiveStats(
        n=int(x.size),
        minimum=float(x.min()),
        maximum=float(x.max()),
        mean=float(x.mean()),
        std_dev=float(x.std(ddof=1)),
    )


def zscores(ds: Dataset, variable: str) -> ZScoreReport:
    stats = describe(ds, variable)
    if stats.std_dev == 0.0:
        raise ZeroVarianceError(f"column {variable!r} has zero variance")
    scores = (ds.column(variable) - stats.mean) / stats.std_dev
    scores.flags.writeable = False
    return ZScoreReport(variable, scores, stats)


def outlier_threshold(sample_size: int) -> OutlierCriterion:
    """Cutoff on |z|: 2.5 for samples of at most 80 cases, 3.0 above that."""
    if sample_size < 1:
        raise ValueError(f"sample_size must be >= 1, got {sample_size}")
    if sample_size <= SMALL_SAMPLE_MAX:
        return OutlierCriterion(SMALL_SAMPLE_THRESHOLD, sample_size)
    return OutlierCriterion(LARGE_SAMPLE_THRESHOLD, sample_size)


def flag_outliers(
    ds: Dataset,
    variables: Sequence[str] | None = None,
    override: float | None = None,
) -> OutlierReport:
    """Flag rows whose standard score reaches the threshold on any variable.

    Parameters
    ----------
    ds : Dataset
    variables : sequence of str, optional
        Columns to screen. Defaults to every column.
    override : float, optional
        Explicit |z| cutoff replacing the sample-size rule.

    Returns
    -------
    OutlierReport
        Flagged rows per variable and their union.
    """
    if variables is None:
        variables = ds.columns
    variables = list(variables)
    if not variables:
        raise ValueError("at least one variable must be selected")
    criterion = outlier_threshold(ds.n)
    if override is not None:
        criterion = OutlierCriterion(float(override), ds.n)

    per_variable = {}
    union: set[int] = set()
    for name in variables:
        report = zscores(ds, name)
        x = ds.column(name)
        hits = np.flatnonzero(criterion.flags(report.scores))
        per_variable[name] = tuple(
            FlaggedValue(int(i), float(x[i]), float(report.scores[i])) for i in hits
        )
        union.update(int(i) for i in hits)
    return OutlierReport(per_variable, criterion, RowSelection.of(union))
