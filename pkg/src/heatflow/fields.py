"""Per-vertex fields, multi-column stacks, and their CSV round-trips.

A field is a plain 1-d float array aligned to a mesh. A FieldStack holds one
field per column, either one per subject or one per scale. All CSV values
carry 17 significant digits so write/read round-trips are lossless.
"""

from dataclasses import dataclass

import numpy as np

_FMT = "{:.16e}"


@dataclass(frozen=True)
class FieldStack:
    """N x S matrix of fields with per-column labels.

    axis_meaning is "subjects" or "scales".
    """

    values: np.ndarray
    labels: tuple
    axis_meaning: str

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("stack values must be an (N, S) matrix")
        if not np.all(np.isfinite(vals)):
            raise ValueError("stack values must be finite (no NaN)")
        labels = tuple(str(x) for x in self.labels)
        if len(labels) != vals.shape[1]:
            raise ValueError(
                f"got {len(labels)} labels for {vals.shape[1]} columns"
            )
        if self.axis_meaning not in ("subjects", "scales"):
            raise ValueError(f"unknown axis meaning {self.axis_meaning!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "labels", labels)

    @property
    def n_vertices(self):
        return self.values.shape[0]

    @property
    def n_columns(self):
        return self.values.shape[1]


def write_field_csv(path, values):
    """One value per line, line i = vertex i."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValueError("field must be 1-d")
    with open(path, "w") as fh:
        for v in values:
            fh.write(_FMT.format(v) + "\n")


def read_field_csv(path):
    with open(path) as fh:
        try:
            vals = [float(line) for line in fh if line.strip()]
        except ValueError as exc:
            raise ValueError(f"{path}: malformed field CSV: {exc}") from None
    return np.asarray(vals, dtype=float)


def write_stack_csv(path, stack):
    """Header row of column labels, then one comma-separated row per vertex."""
    with open(path, "w") as fh:
        fh.write(",".join(stack.labels) + "\n")
        for row in stack.values:
            fh.write(",".join(_FMT.format(v) for v in row) + "\n")


def read_stack_csv(path, axis_meaning="scales"):
    with open(path) as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty stack CSV")
    labels = lines[0].split(",")
    try:
        values = np.asarray(
            [[float(tok) for tok in line.split(",")] for line in lines[1:]]
        )
    except ValueError as exc:
        raise ValueError(f"{path}: malformed stack CSV: {exc}") from None
    if values.ndim != 2 or values.shape[1] != len(labels):
        raise ValueError(f"{path}: ragged stack CSV")
    return FieldStack(values, labels, axis_meaning)
