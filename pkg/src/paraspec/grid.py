"""Uniform 1-D grid, trapezoid inner product, and normalization.

Node convention: ``nodes[0] = 0`` and ``nodes[-1] = length`` are the two
boundary points; ``nodes[1:-1]`` are the interior points.  Fields are plain
float arrays with one value per node (boundary included).  Dirichlet fields
keep zeros at both boundary nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DegenerateInputError, ShapeError


@dataclass(frozen=True)
class Grid1D:
    length: float
    n_interior: int
    h: float
    nodes: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.n_interior + 2

    def quad_weights(self) -> np.ndarray:
        """Composite-trapezoid weights: h at interior nodes, h/2 at the boundary."""
        w = np.full(self.n_nodes, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w


def build_grid(length: float, n_interior: int) -> Grid1D:
    """Uniform grid on (0, length) with n_interior >= 2 interior nodes."""
    if not np.isfinite(length) or length <= 0:
        raise ConfigurationError(f"domain length must be positive, got {length}")
    if n_interior < 2:
        raise ConfigurationError(f"need at least 2 interior nodes, got {n_interior}")
    h = length / (n_interior + 1)
    nodes = np.linspace(0.0, length, n_interior + 2)
    return Grid1D(length=float(length), n_interior=int(n_interior), h=h, nodes=nodes)


def _check_field(u: np.ndarray, grid: Grid1D) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.n_nodes,):
        raise ShapeError(f"field has shape {u.shape}, grid has {grid.n_nodes} nodes")
    return u


def inner_product(u: np.ndarray, v: np.ndarray, grid: Grid1D) -> float:
    """Trapezoid surrogate of the L2 inner product over the domain."""
    u = _check_field(u, grid)
    v = _check_field(v, grid)
    return float(np.dot(grid.quad_weights(), u * v))


def norm(u: np.ndarray, grid: Grid1D) -> float:
    return float(np.sqrt(inner_product(u, u, grid)))


def normalize(u: np.ndarray, grid: Grid1D) -> tuple[np.ndarray, float]:
    """Return (u / ||u||, ||u||) in the trapezoid norm."""
    u = _check_field(u, grid)
    r = norm(u, grid)
    if r == 0.0 or not np.isfinite(r):
        raise DegenerateInputError("cannot normalize a zero or non-finite field")
    return u / r, r
