"""Datasets, run configuration and report files.

Tables are comma-delimited UTF-8 with a header row. Reports are written as a
CSV with one record per contrast plus a JSON document carrying the same
records and the run metadata.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

CI_MULTIPLIER = 1.96

ESTIMANDS = ("risk_difference", "log_odds_ratio", "log_risk_ratio", "mean_difference")
METHODS = ("abb", "matching", "ipw")


class DataError(ValueError):
    """Raised when an input table violates the dataset schema."""


@dataclass(frozen=True)
class Dataset:
    """Covariates, treatment labels and observed outcome.

    ``W`` holds internal labels ``1..Z``; ``treatment_labels[w - 1]`` is the
    original label of treatment ``w``. Ordinal outcomes are coded ``1..levels``.
    """

    X: np.ndarray
    W: np.ndarray
    Y: np.ndarray
    outcome_kind: str = "binary"
    levels: int = 2
    treatment_labels: tuple = ()
    covariate_names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        W = np.asarray(self.W, dtype=int)
        Y = np.asarray(self.Y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "Y", Y)
        if not self.treatment_labels:
            object.__setattr__(
                self, "treatment_labels", tuple(range(1, int(W.max(initial=0)) + 1))
            )
        if not self.covariate_names:
            object.__setattr__(
                self, "covariate_names", tuple(f"x{p + 1}" for p in range(X.shape[1]))
            )
        self.validate()

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def P(self) -> int:
        return self.X.shape[1]

    @property
    def Z(self) -> int:
        return len(self.treatment_labels)

    def group_sizes(self) -> np.ndarray:
        return np.bincount(self.W, minlength=self.Z + 1)[1:]

    def validate(self) -> None:
        n = self.W.shape[0]
        if self.X.shape[0] != n or self.Y.shape[0] != n:
            raise DataError("X, W and Y must have the same number of rows")
        if len(self.covariate_names) != self.X.shape[1]:
            raise DataError("covariate_names does not match the number of columns of X")
        if not np.all(np.isfinite(self.X)):
            r, c = np.argwhere(~np.isfinite(self.X))[0]
            raise DataError(f"non-finite covariate at row {r}, column {self.covariate_names[c]}")
        Z = len(self.treatment_labels)
        bad = (self.W < 1) | (self.W > Z)
        if bad.any():
            raise DataError(f"unknown treatment label at row {int(np.argmax(bad))}")
        if np.any(np.bincount(self.W, minlength=Z + 1)[1:] == 0):
            raise DataError("every treatment group must contain at least one unit")
        if self.outcome_kind == "binary":
            ok = np.isin(self.Y, (0, 1))
        elif self.outcome_kind == "ordinal":
            ok = np.isin(self.Y, np.arange(1, self.levels + 1))
        else:
            raise DataError(f"unknown outcome kind {self.outcome_kind!r}")
        if not ok.all():
            raise DataError(f"outcome outside declared domain at row {int(np.argmin(ok))}")

    def subset(self, mask: np.ndarray) -> "Dataset":
        """Rows selected by ``mask``; labels and names are kept."""
        return replace(self, X=self.X[mask], W=self.W[mask], Y=self.Y[mask])

    def with_covariate(self, values: np.ndarray, name: str) -> "Dataset":
        return replace(
            self,
            X=np.column_stack([self.X, values]),
            covariate_names=self.covariate_names + (name,),
        )


@dataclass(frozen=True)
class RunConfig:
    """Settings for one analysis run."""

    seed: int
    reference: int | None = None
    estimands: tuple = ("risk_difference",)
    method: str = "abb"
    Q: int = 5
    M: int = 25
    L: int = 1
    distance: str = "mahalanobis_logit_gps"
    with_replacement: bool = True
    ridge: float = 0.0
    refit_after_trim: bool = False
    rubin_correction: bool = False
    ipw_truncation: float | None = None

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("M must be at least 2")
        if self.Q < 1:
            raise ValueError("Q must be at least 1")
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        unknown = set(self.estimands) - set(ESTIMANDS)
        if unknown:
            raise ValueError(f"unknown estimands: {sorted(unknown)}")
        object.__setattr__(self, "estimands", tuple(self.estimands))

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "estimands" in d:
            d["estimands"] = tuple(d["estimands"])
        return cls(**d)


@dataclass(frozen=True)
class ContrastRecord:
    j: int
    k: int
    estimand: str
    point: float
    se: float
    method: str
    Q: int | None
    M: int | None
    seed: int
    j_label: str = ""
    k_label: str = ""

    @property
    def ci_low(self) -> float:
        return self.point - CI_MULTIPLIER * self.se

    @property
    def ci_high(self) -> float:
        return self.point + CI_MULTIPLIER * self.se


@dataclass
class EstimateReport:
    contrasts: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


REPORT_COLUMNS = (
    "j", "k", "j_label", "k_label", "estimand", "point", "se",
    "ci_low", "ci_high", "method", "Q", "M", "seed",
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _record_row(rec: ContrastRecord) -> dict:
    return {
        "j": rec.j, "k": rec.k, "j_label": rec.j_label, "k_label": rec.k_label,
        "estimand": rec.estimand, "point": float(rec.point), "se": float(rec.se),
        "ci_low": float(rec.ci_low), "ci_high": float(rec.ci_high),
        "method": rec.method, "Q": rec.Q, "M": rec.M, "seed": rec.seed,
    }


def write_report(report: EstimateReport, path) -> Path:
    """Write ``report`` as ``path`` (CSV) and a sibling ``.json`` document.

    Returns the path of the JSON document. Output is byte-identical for
    identical reports.
    """
    path = Path(path)
    rows = [_record_row(r) for r in report.contrasts]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])
    json_path = path.with_suffix(".json")
    doc = {"contrasts": rows, "metadata": _jsonable(report.metadata)}
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return json_path


def read_report(path) -> list[dict]:
    """Read the CSV records written by :func:`write_report`."""
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def load_dataset(
    path,
    treatment: str,
    outcome: str,
    covariates: Sequence[str] | None = None,
    outcome_kind: str = "binary",
    levels: int | None = None,
    treatments: Iterable | None = None,
) -> Dataset:
    """Read a delimited table into a :class:`Dataset`.

    Parameters
    ----------
    path : path-like
        CSV file with a header row.
    treatment, outcome : str
        Column names of the treatment label and the outcome.
    covariates : sequence of str, optional
        Covariate columns. Defaults to every other column, in file order.
    outcome_kind : {"binary", "ordinal"}
    levels : int, optional
        Number of ordinal levels; inferred from the data when omitted.
    treatments : iterable, optional
        Declared treatment labels (as strings in the file). Their order fixes
        the internal numbering. When omitted, labels are numbered in order of
        first appearance.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = list(reader)
    if covariates is None:
        covariates = [h for h in header if h not in (treatment, outcome)]
    for col in (treatment, outcome, *covariates):
        if col not in header:
            raise DataError(f"missing column {col!r}")
    t_idx = header.index(treatment)
    y_idx = header.index(outcome)
    x_idx = [header.index(c) for c in covariates]

    declared = [str(t) for t in treatments] if treatments is not None else None
    label_map: dict[str, int] = {l: i + 1 for i, l in enumerate(declared or [])}
    n = len(rows)
    X = np.empty((n, len(x_idx)))
    W = np.empty(n, dtype=int)
    Y = np.empty(n, dtype=int)
    for r, row in enumerate(rows):
        line = r + 2  # 1-based, after the header
        if len(row) != len(header):
            raise DataError(f"row {line}: expected {len(header)} fields, got {len(row)}")
        lab = row[t_idx].strip()
        if lab not in label_map:
            if declared is not None:
                raise DataError(f"row {line}, column {treatment!r}: unknown treatment label {lab!r}")
            label_map[lab] = len(label_map) + 1
        W[r] = label_map[lab]
        for c, ci in enumerate(x_idx):
            try:
                X[r, c] = float(row[ci])
            except ValueError:
                raise DataError(
                    f"row {line}, column {covariates[c]!r}: non-numeric covariate {row[ci]!r}"
                ) from None
            if not np.isfinite(X[r, c]):
                raise DataError(f"row {line}, column {covariates[c]!r}: non-finite covariate")
        try:
            yv = float(row[y_idx])
        except ValueError:
            raise DataError(f"row {line}, column {outcome!r}: non-numeric outcome {row[y_idx]!r}") from None
        if yv != int(yv):
            raise DataError(f"row {line}, column {outcome!r}: outcome outside declared domain")
        Y[r] = int(yv)

    if outcome_kind == "binary":
        levels = 2
        valid = (0, 1)
    elif outcome_kind == "ordinal":
        if levels is None:
            levels = int(Y.max(initial=1))
        valid = tuple(range(1, levels + 1))
    else:
        raise DataError(f"unknown outcome kind {outcome_kind!r}")
    bad = ~np.isin(Y, valid)
    if bad.any():
        r = int(np.argmax(bad))
        raise DataError(f"row {r + 2}, column {outcome!r}: outcome {Y[r]} outside declared domain")

    labels = tuple(sorted(label_map, key=label_map.get))
    return Dataset(
        X=X, W=W, Y=Y, outcome_kind=outcome_kind, levels=levels,
        treatment_labels=labels, covariate_names=tuple(covariates),
    )


def save_dataset(data: Dataset, path, treatment: str = "W", outcome: str = "Y") -> None:
    """Write ``data`` as CSV at full float precision (``load_dataset`` round-trips it)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([treatment, outcome, *data.covariate_names])
        for i in range(data.n):
            writer.writerow(
                [data.treatment_labels[data.W[i] - 1], int(data.Y[i])]
                + [repr(float(v)) for v in data.X[i]]
            )
