"""Observation matrices: loading, validation, standardization and normality checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import log_ndtr

from psilingam._io import fmt, write_text_atomic
from psilingam.errors import DataError

# Case-3 (mean and variance estimated) critical values for the corrected A².
AD_CRITICAL = {0.10: 0.631, 0.05: 0.752, 0.025: 0.873, 0.01: 1.035}


@dataclass(frozen=True)
class DataMatrix:
    """An n x p sample matrix, rows are observations and columns variables."""

    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError(f"expected a 2-d matrix, got shape {values.shape}")
        labels = tuple(str(s) for s in self.labels)
        n, p = values.shape
        if len(labels) != p:
            raise DataError(f"{len(labels)} labels for {p} columns")
        if n < 3:
            raise DataError(f"need at least 3 samples, got n={n}")
        if p < 2:
            raise DataError(f"need at least 2 variables, got p={p}")
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            r, c = bad[0]
            raise DataError(f"non-finite value at row {r + 1}, column {c + 1} ({labels[c]!r})")
        var = values.var(axis=0, ddof=1)
        for c in np.flatnonzero(~(var > 0)):
            raise DataError(f"constant column {labels[c]!r} (column {c + 1})")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_array(cls, values, labels: Sequence[str] | None = None) -> "DataMatrix":
        values = np.asarray(values, dtype=float)
        if labels is None:
            labels = default_labels(values.shape[1] if values.ndim == 2 else 0)
        return cls(values, tuple(labels))

    def with_values(self, values) -> "DataMatrix":
        return DataMatrix(values, self.labels)

    def permuted(self, perm: Sequence[int]) -> "DataMatrix":
        perm = list(perm)
        return DataMatrix(self.values[:, perm], tuple(self.labels[k] for k in perm))


def default_labels(p: int) -> tuple[str, ...]:
    return tuple(f"V{k + 1}" for k in range(p))


def _sniff_delimiter(first_line: str) -> str:
    if "," in first_line:
        return ","
    if "\t" in first_line:
        return "\t"
    # single-column files cannot be valid (p >= 2); let parsing report it
    return ","


def _is_numeric(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_matrix(path, has_header: bool | None = None) -> DataMatrix:
    """Read a comma- or tab-delimited numeric matrix.

    The delimiter is taken from the first line (comma preferred over tab).
    When ``has_header`` is None the first row is treated as a header if any
    of its cells is non-numeric.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    lines = [ln.rstrip("\r\n") for ln in path.read_text().splitlines()]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty file")
    sep = _sniff_delimiter(lines[0])
    rows = [[c.strip() for c in ln.split(sep)] for ln in lines]
    if has_header is None:
        has_header = not all(_is_numeric(c) for c in rows[0])
    labels = None
    if has_header:
        labels, rows = rows[0], rows[1:]
    width = len(labels) if labels is not None else len(rows[0]) if rows else 0
    values = np.empty((len(rows), width))
    offset = 2 if has_header else 1
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(
                f"{path}: row {r + offset} has {len(row)} fields, expected {width}"
            )
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric cell {cell!r} at row {r + offset}, column {c + 1}"
                ) from None
            if not math.isfinite(v):
                raise DataError(
                    f"{path}: non-finite cell {cell!r} at row {r + offset}, column {c + 1}"
                )
            values[r, c] = v
    return DataMatrix(values, tuple(labels) if labels is not None else default_labels(width))


def save_matrix(data: DataMatrix, path, sep: str = ",") -> Path:
    lines = [sep.join(data.labels)]
    lines += [sep.join(fmt(v) for v in row) for row in data.values]
    return write_text_atomic(path, "\n".join(lines) + "\n")


def zscore_columns(data: DataMatrix) -> DataMatrix:
    x = data.values
    return data.with_values((x - x.mean(axis=0)) / x.std(axis=0, ddof=1))


class ADResult(NamedTuple):
    label: str
    statistic: float
    corrected: float
    non_gaussian: bool


def _ad_statistic(col: np.ndarray) -> float:
    n = col.size
    z = np.sort((col - col.mean()) / col.std(ddof=1))
    i = np.arange(1, n + 1)
    # log(1 - Phi(z)) == log Phi(-z), evaluated without cancellation in the tails
    s = (2 * i - 1) * (log_ndtr(z) + log_ndtr(-z[::-1]))
    return float(-n - s.sum() / n)


def anderson_darling(data: DataMatrix, alpha: float = 0.05) -> list[ADResult]:
    """Per-column Anderson-Darling normality statistics.

    The statistic uses the estimated mean and standard deviation, with the
    small-sample correction ``A2 * (1 + 4/n - 25/n**2)``. A column is flagged
    non-Gaussian when the corrected value exceeds the critical value for
    ``alpha`` (one of 0.10, 0.05, 0.025, 0.01).
    """
    if alpha not in AD_CRITICAL:
        raise ValueError(f"alpha must be one of {sorted(AD_CRITICAL)}")
    n = data.n
    if n < 8:
        raise DataError("insufficient samples for AD test (need n >= 8)")
    crit = AD_CRITICAL[alpha]
    out = []
    for label, col in zip(data.labels, data.values.T):
        a2 = _ad_statistic(col)
        corrected = a2 * (1 + 4 / n - 25 / n**2)
        out.append(ADResult(label, a2, corrected, corrected > crit))
    return out
