"""Headerless CSV data matrices (one sample per row)."""
from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .errors import FormatError


def parse_data(text: str) -> np.ndarray:
    try:
        data = np.loadtxt(io.StringIO(text), delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        raise FormatError(f"bad data file: {exc}") from None
    if data.size == 0:
        raise FormatError("data file has no rows")
    return data


def read_data(path) -> np.ndarray:
    return parse_data(Path(path).read_text())


def format_data(data) -> str:
    buf = io.StringIO()
    np.savetxt(buf, np.asarray(data, dtype=float), delimiter=",", fmt="%.17g")
    return buf.getvalue()


def write_data(data, path) -> None:
    Path(path).write_text(format_data(data))
