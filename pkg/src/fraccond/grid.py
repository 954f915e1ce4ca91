"""Uniform 1D grids and nodal grid functions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidArgument, PreconditionViolation


@dataclass(frozen=True)
class UniformGrid:
    """``n_nodes`` equispaced nodes on ``[lo, hi]``, endpoints included.

    Functions living on the grid are continuous piecewise linear.  Anything
    that is declared compactly supported must vanish on the ``margin_band``
    at both box edges (default ``2 h``).
    """

    lo: float
    hi: float
    n_nodes: int
    margin_band: Optional[float] = None

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidArgument("grid needs lo < hi", module="assembly")
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 16:
            raise InvalidArgument(f"n_nodes must be an integer >= 16, got {self.n_nodes}",
                                  module="assembly")
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        if self.margin_band is None:
            object.__setattr__(self, "margin_band", 2.0 * self.h)
        elif self.margin_band < 2.0 * self.h * (1 - 1e-12):
            raise InvalidArgument(f"margin_band {self.margin_band} is below 2h = {2 * self.h}",
                                  module="assembly")

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n_nodes - 1)

    @property
    def x(self) -> np.ndarray:
        return self.lo + self.h * np.arange(self.n_nodes)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def margin_mask(self) -> np.ndarray:
        x = self.x
        return (x <= self.lo + self.margin_band) | (x >= self.hi - self.margin_band)

    def nearest(self, x: float) -> int:
        return int(np.clip(np.rint((x - self.lo) / self.h), 0, self.n_nodes - 1))

    def sample(self, f: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return GridFunction(self, np.asarray(f(self.x), dtype=float))

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.n_nodes))

    def ones(self) -> "GridFunction":
        return GridFunction(self, np.ones(self.n_nodes))

    def same_as(self, other: "UniformGrid") -> bool:
        return (self.n_nodes == other.n_nodes and self.lo == other.lo and self.hi == other.hi)


@dataclass
class GridFunction:
    """Nodal values of a continuous piecewise-linear function."""

    grid: UniformGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise InvalidArgument(
                f"expected {self.grid.n_nodes} nodal values, got shape {self.values.shape}",
                module="fracops")
        if not np.all(np.isfinite(self.values)):
            raise InvalidArgument("grid function has non-finite values", module="fracops")

    def __call__(self, x):
        """Piecewise-linear evaluation; zero outside the box."""
        return np.interp(x, self.grid.x, self.values, left=0.0, right=0.0)

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2_norm(self) -> float:
        # trapezoid; the endpoint values are zero for compactly supported data
        v = self.values
        return float(np.sqrt(self.grid.h * (np.sum(v**2) - 0.5 * (v[0] ** 2 + v[-1] ** 2))))

    def integral(self) -> float:
        v = self.values
        return float(self.grid.h * (np.sum(v) - 0.5 * (v[0] + v[-1])))

    def support_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.values != 0.0)

    def support_bounds(self):
        nz = self.support_nodes()
        if nz.size == 0:
            return None
        x = self.grid.x
        return float(x[nz[0]]), float(x[nz[-1]])

    def require_margin(self, band: Optional[float] = None, *, module: str = "fracops"):
        """Raise unless the function vanishes on the margin band."""
        grid = self.grid
        band = grid.margin_band if band is None else band
        x = grid.x
        mask = (x <= grid.lo + band) | (x >= grid.hi - band)
        if np.any(self.values[mask] != 0.0):
            raise PreconditionViolation(
                f"function does not vanish on the margin band of width {band:g}", module=module)
