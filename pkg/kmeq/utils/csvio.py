"""CSV artifacts: matrices, iteration traces, bound overlays and surface grids."""

import csv
import io
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import DimensionError
from ..linalg import DenseMatrix, as_dense
from .junkdrawer import atomic_write_text, format_float

TRACE_HEADER = ("iteration", "rse")


def matrix_to_csv(matrix: DenseMatrix) -> str:
    """One row per line, no header, round-trip precision."""
    buf = io.StringIO()
    np.savetxt(buf, matrix, delimiter=",", fmt="%.17g")
    return buf.getvalue()


def write_matrix(path: Path, matrix: DenseMatrix) -> None:
    atomic_write_text(path, matrix_to_csv(matrix))


def read_matrix(path: Path, name: Optional[str] = None) -> DenseMatrix:
    """Shape is inferred from the file."""
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as e:
        raise DimensionError(f"{path}: not a rectangular numeric CSV ({e})") from None
    return as_dense(data, name or path.stem)


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [format_float(cell) if isinstance(cell, float) else cell for cell in row]
        )
    return buf.getvalue()


def write_trace(path: Path, trace: Sequence[Tuple[int, float]]) -> None:
    atomic_write_text(path, rows_to_csv(TRACE_HEADER, trace))


def read_trace(path: Path) -> List[Tuple[int, float]]:
    with path.open(newline="") as fd:
        reader = csv.DictReader(fd)
        return [(int(row["iteration"]), float(row["rse"])) for row in reader]


def read_rows(path: Path) -> List[dict]:
    with path.open(newline="") as fd:
        return list(csv.DictReader(fd))
