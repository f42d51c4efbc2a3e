"""Log-log rate tables and least-squares slope estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


def fit_slope(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """OLS slope of log y against log x, with its standard error.

    Returns (slope, stderr); stderr is nan when there are only two points.
    Raises ValueError on fewer than two points or nonpositive data (a log-log
    fit is meaningless there).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"need matching 1-d arrays, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError(f"need at least 2 points for a slope, got {x.size}")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValueError("log-log fit needs strictly positive data")
    lx = np.log(x)
    ly = np.log(y)
    lx_c = lx - np.mean(lx)
    sxx = float(lx_c @ lx_c)
    if sxx == 0.0:
        raise ValueError("all x values identical")
    slope = float(lx_c @ (ly - np.mean(ly))) / sxx
    if x.size == 2:
        return slope, math.nan
    resid = ly - np.mean(ly) - slope * lx_c
    var = float(resid @ resid) / (x.size - 2)
    return slope, math.sqrt(var / sxx)


@dataclass
class RateTable:
    """Columnar record of a rate experiment; rows arrive via add_row."""

    names: tuple[str, ...]
    meta: dict = field(default_factory=dict)
    _rows: list[tuple[float, ...]] = field(default_factory=list)

    def add_row(self, *values: float) -> None:
        if len(values) != len(self.names):
            raise ValueError(f"expected {len(self.names)} values, got {len(values)}")
        self._rows.append(tuple(float(v) for v in values))

    def __len__(self) -> int:
        return len(self._rows)

    def column(self, name: str) -> np.ndarray:
        idx = self.names.index(name)
        return np.array([row[idx] for row in self._rows])

    def slope(self, xname: str, yname: str) -> Optional[tuple[float, float]]:
        """Fitted log-log slope, or None when undefined (fewer than 2 rows)."""
        if len(self._rows) < 2:
            return None
        return fit_slope(self.column(xname), self.column(yname))

    def rows(self) -> list[tuple[float, ...]]:
        return list(self._rows)
