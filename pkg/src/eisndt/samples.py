"""Plain containers passed between the forward solver and the asymptotic formulas."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class BoundarySamples:
    """Complex values at ordered points of the boundary circle."""

    points: np.ndarray
    values: np.ndarray
    a: np.ndarray | None = None
    omega: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex).ravel())
        if len(self.points) != len(self.values):
            raise ValueError("points and values differ in length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("boundary values must be finite")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def angles(self) -> np.ndarray:
        return np.arctan2(self.points[:, 1], self.points[:, 0])

    @property
    def radius(self) -> float:
        return float(np.mean(np.linalg.norm(self.points, axis=1)))

    def with_values(self, values) -> "BoundarySamples":
        return BoundarySamples(self.points, values, self.a, self.omega)


@dataclass(frozen=True, eq=False)
class CrackFlux:
    """One-sided normal derivative and potential jump along one crack.

    Entries are per interface edge. ``endpoints`` has shape (E, 2, 2),
    ``normals`` are unit vectors pointing from the "-" to the "+" side,
    ``flux`` is du/dnu on the "+" side (constant on each edge for linear
    elements) and ``jump`` holds u(+) - u(-) at both edge ends, shape (E, 2).
    """

    endpoints: np.ndarray
    normals: np.ndarray
    flux: np.ndarray
    jump: np.ndarray

    @property
    def midpoints(self) -> np.ndarray:
        return self.endpoints.mean(axis=1)

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.endpoints[:, 1] - self.endpoints[:, 0], axis=1)
