"""Uniform cell-centred grids on an interval."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass
class Grid1D:
    """Cell averages of N species on ``J`` uniform cells of ``(x_lo, x_hi)``.

    ``values`` has shape (J, N).
    """

    x_lo: float
    x_hi: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.values.ndim != 2:
            raise ValueError("values must have shape (J, N)")
        if self.values.shape[0] < 2:
            raise ValueError("need at least two cells")
        if not self.x_hi > self.x_lo:
            raise ValueError("empty interval")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite cell values")

    @classmethod
    def from_functions(cls, funcs: Sequence[Callable[[np.ndarray], np.ndarray] | float], J: int,
                       x_lo: float = 0.0, x_hi: float = 1.0) -> "Grid1D":
        """Sample one callable (or constant) per species at the cell centres."""
        x = x_lo + (np.arange(J) + 0.5) * (x_hi - x_lo) / J
        cols = [np.broadcast_to(np.asarray(f(x) if callable(f) else f, dtype=float), x.shape) for f in funcs]
        return cls(x_lo, x_hi, np.column_stack(cols))

    @classmethod
    def constant(cls, c, J: int, x_lo: float = 0.0, x_hi: float = 1.0) -> "Grid1D":
        return cls(x_lo, x_hi, np.tile(np.asarray(c, dtype=float), (J, 1)))

    @property
    def J(self) -> int:
        return self.values.shape[0]

    @property
    def n_species(self) -> int:
        return self.values.shape[1]

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def h(self) -> float:
        return self.length / self.J

    @property
    def centers(self) -> np.ndarray:
        return self.x_lo + (np.arange(self.J) + 0.5) * self.h

    def integrals(self) -> np.ndarray:
        """Per-species ``int c dx`` by the midpoint rule."""
        return self.h * self.values.sum(axis=0)

    def means(self) -> np.ndarray:
        return self.values.mean(axis=0)

    def copy(self) -> "Grid1D":
        return Grid1D(self.x_lo, self.x_hi, self.values.copy())
