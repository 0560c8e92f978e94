"""Input coercion and consistency checks shared by the estimators and CLI."""

from __future__ import annotations

import numpy as np

from .exceptions import GridMismatchError
from .grid import BoundaryTrace, Grid, ScalarField

__all__ = ["check_same_grid", "check_trace", "check_weight", "check_tensor"]


def check_same_grid(*fields):
    """Raise :class:`GridMismatchError` unless all non-None fields share a grid."""
    grids = [f.grid for f in fields if f is not None]
    for g in grids[1:]:
        if g != grids[0]:
            raise GridMismatchError(f"grid mismatch: {grids[0]} vs {g}")
    return grids[0] if grids else None


def check_trace(g, grid: Grid | None = None) -> BoundaryTrace:
    if not isinstance(g, BoundaryTrace):
        if grid is None:
            raise TypeError("boundary data must be a BoundaryTrace (or give a grid)")
        g = BoundaryTrace(grid, np.asarray(g, float))
    if grid is not None and g.grid != grid:
        raise GridMismatchError(f"boundary data lives on {g.grid}, expected {grid}")
    return g


def check_weight(a, grid: Grid) -> ScalarField:
    """Positive cell weight; ``None`` means ``a = 1``, scalars broadcast."""
    if a is None:
        return ScalarField(grid, np.ones(grid.shape))
    if isinstance(a, ScalarField):
        if a.grid != grid:
            raise GridMismatchError(f"weight lives on {a.grid}, expected {grid}")
        values = a.values
    else:
        values = np.broadcast_to(np.asarray(a, float), grid.shape)
    if not np.all(values > 0):
        raise ValueError(f"weight must be positive (min {values.min():.3g})")
    return ScalarField(grid, values)


def check_tensor(S, grid: Grid):
    if S is None:
        return None
    S = np.asarray(S, float)
    if S.shape == (3,):
        S = np.broadcast_to(S, grid.shape + (3,))
    if S.shape != grid.shape + (3,):
        raise GridMismatchError(f"tensor has shape {S.shape}, expected {grid.shape + (3,)}")
    return np.array(S)
