"""Uniform cell-centred grid on the bounding box ``[-R, R]^n``."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class Grid:
    """``N`` cells of width ``h = 2R/N`` per axis, samples at the cell centres.

    The bounding box plays the role of ``B_R``: every potential handled on
    this grid must have its support strictly inside it.
    """

    n: int
    R: float
    N: int

    def __post_init__(self):
        if self.n not in (2, 3):
            raise InputError("grid dimension must be 2 or 3")
        if not self.R > 0:
            raise InputError("grid radius must be positive")
        if int(self.N) != self.N or self.N < 16:
            raise InputError("need at least 16 samples per axis")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "R", float(self.R))

    @classmethod
    def from_step(cls, n: int, R: float, h: float) -> "Grid":
        N = int(round(2 * R / h))
        if abs(N * h - 2 * R) > 1e-9 * R:
            raise InputError(f"step {h} does not divide the box width {2 * R}")
        return cls(n, R, N)

    @property
    def h(self) -> float:
        return 2.0 * self.R / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def counts(self) -> tuple:
        return self.shape

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def axis(self) -> np.ndarray:
        return -self.R + self.h * (np.arange(self.N) + 0.5)

    @cached_property
    def points(self) -> np.ndarray:
        """Sample coordinates, shape ``grid.shape + (n,)``."""
        return np.stack(np.meshgrid(*([self.axis] * self.n), indexing="ij"), axis=-1)

    def index_of(self, x) -> np.ndarray:
        """Fractional index coordinates of physical points (for interpolation)."""
        return (np.asarray(x, dtype=float) + self.R) / self.h - 0.5

    def to_dict(self) -> dict:
        return {"n": self.n, "R": self.R, "N": self.N, "h": self.h}
