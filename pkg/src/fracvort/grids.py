"""Dyadic time grids on [0, T]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_LEVEL = 20


@dataclass(frozen=True)
class DyadicGrid:
    """Uniform dyadic partition of [0, horizon] with 2**level intervals."""

    level: int
    horizon: float = 1.0

    def __post_init__(self):
        if not (0 <= self.level <= MAX_LEVEL):
            raise ValueError(f"level must be in [0, {MAX_LEVEL}], got {self.level}")
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")

    @property
    def n_steps(self) -> int:
        return 1 << self.level

    @property
    def mesh(self) -> float:
        return self.horizon / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    def index_of(self, t: float, *, tol: float = 1e-9) -> int:
        """Grid index of t, which must lie on the grid up to tol."""
        j = round(t / self.mesh)
        if not (0 <= j <= self.n_steps) or abs(j * self.mesh - t) > tol * max(1.0, self.horizon):
            raise ValueError(f"t={t} is not a grid point at level {self.level}")
        return j

    def coarsen(self, level: int) -> "DyadicGrid":
        if level > self.level:
            raise ValueError("can only coarsen to a lower level")
        return DyadicGrid(level, self.horizon)
