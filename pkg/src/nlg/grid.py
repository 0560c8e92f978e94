"""Rectangular staggered grids, discrete fields and differential operators.

Layout (MAC / staggered):

* scalars live at cell centres, ``values[j, i]`` at
  ``(x0 + (i + 1/2) hx, y0 + (j + 1/2) hy)``, shape ``(ny, nx)``;
* x-components live on vertical faces, ``x[j, i]`` at ``x0 + i hx``,
  shape ``(ny, nx + 1)``; columns ``0`` and ``nx`` are boundary faces;
* y-components live on horizontal faces, ``y[j, i]`` at ``y0 + j hy``,
  shape ``(ny + 1, nx)``; rows ``0`` and ``ny`` are boundary faces;
* boundary traces hold one value per boundary face, ordered bottom, right,
  top, left, each edge in increasing coordinate order.

With these choices ``gradient`` and ``divergence`` satisfy the summation by
parts identity

    boundary_integral(normal_trace(F), u)
        == inner(u, divergence(F)) + inner(F, gradient(u))

exactly (up to rounding), for every ``u`` and every ``F``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import GridMismatchError

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "BoundaryTrace",
    "gradient",
    "divergence",
    "normal_trace",
    "with_normal_trace",
    "boundary_integral",
    "boundary_lump",
    "mean_zero",
    "inner",
    "cell_pairs",
    "from_cell_pairs",
    "square_flow",
]


def _frozen(a, shape, name):
    arr = np.array(a, dtype=float, copy=True)
    if arr.shape != shape:
        if arr.size == int(np.prod(shape)):
            arr = arr.reshape(shape)
        else:
            raise ValueError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: values must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid:
    """Uniform ``nx`` by ``ny`` cell grid with spacings ``hx``, ``hy``."""

    nx: int
    ny: int
    hx: float
    hy: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("cell counts must be integers")
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid needs at least 2x2 cells, got {self.nx}x{self.ny}")
        if not (self.hx > 0 and self.hy > 0) or not np.isfinite([self.hx, self.hy]).all():
            raise ValueError("grid spacings must be positive and finite")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "hx", float(self.hx))
        object.__setattr__(self, "hy", float(self.hy))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @classmethod
    def unit_square(cls, n, m=None):
        m = n if m is None else m
        return cls(n, m, 1.0 / n, 1.0 / m)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def lengths(self):
        return (self.nx * self.hx, self.ny * self.hy)

    @property
    def cell_area(self):
        return self.hx * self.hy

    @property
    def h(self):
        return min(self.hx, self.hy)

    @property
    def n_boundary(self):
        return 2 * (self.nx + self.ny)

    def cell_centers(self):
        """Return ``(X, Y)`` arrays of shape ``(ny, nx)``."""
        x0, y0 = self.origin
        xc = x0 + (np.arange(self.nx) + 0.5) * self.hx
        yc = y0 + (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(xc, yc)

    def x_face_centers(self):
        x0, y0 = self.origin
        xf = x0 + np.arange(self.nx + 1) * self.hx
        yc = y0 + (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(xf, yc)

    def y_face_centers(self):
        x0, y0 = self.origin
        xc = x0 + (np.arange(self.nx) + 0.5) * self.hx
        yf = y0 + np.arange(self.ny + 1) * self.hy
        return np.meshgrid(xc, yf)

    def boundary_face_centers(self):
        """Midpoints of boundary faces in trace order, shape ``(2(nx+ny), 2)``."""
        x0, y0 = self.origin
        lx, ly = self.lengths
        xc = x0 + (np.arange(self.nx) + 0.5) * self.hx
        yc = y0 + (np.arange(self.ny) + 0.5) * self.hy
        bottom = np.column_stack([xc, np.full(self.nx, y0)])
        right = np.column_stack([np.full(self.ny, x0 + lx), yc])
        top = np.column_stack([xc, np.full(self.nx, y0 + ly)])
        left = np.column_stack([np.full(self.ny, x0), yc])
        return np.vstack([bottom, right, top, left])

    def boundary_normals(self):
        """Unit outward normals in trace order, shape ``(2(nx+ny), 2)``."""
        nx, ny = self.nx, self.ny
        return np.vstack([
            np.tile([0.0, -1.0], (nx, 1)),
            np.tile([1.0, 0.0], (ny, 1)),
            np.tile([0.0, 1.0], (nx, 1)),
            np.tile([-1.0, 0.0], (ny, 1)),
        ])

    def boundary_lengths(self):
        nx, ny = self.nx, self.ny
        return np.concatenate([
            np.full(nx, self.hx), np.full(ny, self.hy),
            np.full(nx, self.hx), np.full(ny, self.hy),
        ])

    def boundary_slices(self):
        nx, ny = self.nx, self.ny
        return {
            "bottom": slice(0, nx),
            "right": slice(nx, nx + ny),
            "top": slice(nx + ny, 2 * nx + ny),
            "left": slice(2 * nx + ny, 2 * (nx + ny)),
        }

    def scalar(self, values):
        return ScalarField(self, values)

    def zeros_scalar(self):
        return ScalarField(self, np.zeros(self.shape))

    def zeros_vector(self):
        return VectorField(self, np.zeros((self.ny, self.nx + 1)),
                           np.zeros((self.ny + 1, self.nx)))

    def constant_vector(self, cx, cy):
        return VectorField(self, np.full((self.ny, self.nx + 1), float(cx)),
                           np.full((self.ny + 1, self.nx), float(cy)))


def _check_same(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


class _FieldArithmetic:
    # subclasses define _arrays() and _build(*arrays)
    def _binary(self, other, op):
        if isinstance(other, type(self)):
            _check_same(self, other)
            return self._build(*(op(p, q) for p, q in zip(self._arrays(), other._arrays())))
        if np.isscalar(other):
            return self._build(*(op(p, other) for p in self._arrays()))
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        if not np.isscalar(other):
            return NotImplemented
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not np.isscalar(other):
            return NotImplemented
        return self._binary(other, np.divide)

    def __neg__(self):
        return self._build(*(-p for p in self._arrays()))

    def __radd__(self, other):
        return self._binary(other, np.add)


@dataclass(frozen=True, eq=False)
class ScalarField(_FieldArithmetic):
    """Cell-centred scalar function on ``grid``."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.shape, "ScalarField"))

    def _arrays(self):
        return (self.values,)

    def _build(self, values):
        return ScalarField(self.grid, values)

    def integral(self):
        return float(self.values.sum() * self.grid.cell_area)

    def mean(self):
        return float(self.values.mean())

    def apply(self, fn):
        return ScalarField(self.grid, fn(self.values))


@dataclass(frozen=True, eq=False)
class VectorField(_FieldArithmetic):
    """Face-centred (staggered) vector field on ``grid``."""

    grid: Grid
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = self.grid
        object.__setattr__(self, "x", _frozen(self.x, (g.ny, g.nx + 1), "VectorField.x"))
        object.__setattr__(self, "y", _frozen(self.y, (g.ny + 1, g.nx), "VectorField.y"))

    def _arrays(self):
        return (self.x, self.y)

    def _build(self, x, y):
        return VectorField(self.grid, x, y)

    def interior(self):
        """Copy with all boundary-face components set to zero."""
        x = self.x.copy()
        y = self.y.copy()
        x[:, 0] = x[:, -1] = 0.0
        y[0, :] = y[-1, :] = 0.0
        return VectorField(self.grid, x, y)

    def norm(self):
        return float(np.sqrt(inner(self, self)))

    def max_abs(self):
        return float(max(np.abs(self.x).max(), np.abs(self.y).max()))

    def cell_average(self):
        """Average face components to cell centres, shape ``(ny, nx, 2)``."""
        return np.stack([0.5 * (self.x[:, 1:] + self.x[:, :-1]),
                         0.5 * (self.y[1:, :] + self.y[:-1, :])], axis=-1)


@dataclass(frozen=True, eq=False)
class BoundaryTrace(_FieldArithmetic):
    """One value per boundary face, in bottom/right/top/left order."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values",
                           _frozen(self.values, (self.grid.n_boundary,), "BoundaryTrace"))

    def _arrays(self):
        return (self.values,)

    def _build(self, values):
        return BoundaryTrace(self.grid, values)

    def edge(self, name):
        return self.values[self.grid.boundary_slices()[name]]

    @classmethod
    def from_edges(cls, grid, bottom=0.0, right=0.0, top=0.0, left=0.0):
        parts = [np.broadcast_to(np.asarray(v, float), (n,))
                 for v, n in ((bottom, grid.nx), (right, grid.ny),
                              (top, grid.nx), (left, grid.ny))]
        return cls(grid, np.concatenate(parts))

    @classmethod
    def from_function(cls, grid, fn):
        """Sample ``fn(x, y, nu_x, nu_y)`` at boundary face midpoints."""
        pts = grid.boundary_face_centers()
        nu = grid.boundary_normals()
        return cls(grid, fn(pts[:, 0], pts[:, 1], nu[:, 0], nu[:, 1]))

    def integral(self):
        return float(np.dot(self.values, self.grid.boundary_lengths()))

    def max_abs(self):
        return float(np.abs(self.values).max())


def gradient(u: ScalarField) -> VectorField:
    """Face-centred finite differences; boundary-face components are zero."""
    g = u.grid
    v = u.values
    gx = np.zeros((g.ny, g.nx + 1))
    gy = np.zeros((g.ny + 1, g.nx))
    gx[:, 1:-1] = (v[:, 1:] - v[:, :-1]) / g.hx
    gy[1:-1, :] = (v[1:, :] - v[:-1, :]) / g.hy
    return VectorField(g, gx, gy)


def divergence(F: VectorField) -> ScalarField:
    """Cell-centred divergence using all faces, boundary faces included."""
    g = F.grid
    d = (F.x[:, 1:] - F.x[:, :-1]) / g.hx + (F.y[1:, :] - F.y[:-1, :]) / g.hy
    return ScalarField(g, d)


def normal_trace(F: VectorField) -> BoundaryTrace:
    """Outward normal component ``F . nu`` on every boundary face."""
    return BoundaryTrace(F.grid, np.concatenate([
        -F.y[0, :], F.x[:, -1], F.y[-1, :], -F.x[:, 0],
    ]))


def with_normal_trace(F: VectorField, trace: BoundaryTrace) -> VectorField:
    """Copy of ``F`` whose boundary faces carry the given normal trace."""
    _check_same(F, trace)
    s = F.grid.boundary_slices()
    x = F.x.copy()
    y = F.y.copy()
    y[0, :] = -trace.values[s["bottom"]]
    x[:, -1] = trace.values[s["right"]]
    y[-1, :] = trace.values[s["top"]]
    x[:, 0] = -trace.values[s["left"]]
    return VectorField(F.grid, x, y)


def boundary_lump(f: BoundaryTrace) -> np.ndarray:
    """Per-cell sum of ``f * face length`` over each cell's boundary faces.

    ``boundary_integral(f, u) == (boundary_lump(f) * u.values).sum()`` up to
    summation order.
    """
    g = f.grid
    s = g.boundary_slices()
    out = np.zeros(g.shape)
    out[0, :] += f.values[s["bottom"]] * g.hx
    out[:, -1] += f.values[s["right"]] * g.hy
    out[-1, :] += f.values[s["top"]] * g.hx
    out[:, 0] += f.values[s["left"]] * g.hy
    return out


def boundary_integral(f: BoundaryTrace, u: ScalarField) -> float:
    """Sum over boundary faces of ``f * u(adjacent cell) * face length``."""
    _check_same(f, u)
    g = f.grid
    s = g.boundary_slices()
    v = u.values
    fv = f.values
    # fixed edge order keeps the result bitwise reproducible
    total = np.dot(fv[s["bottom"]], v[0, :]) * g.hx
    total += np.dot(fv[s["right"]], v[:, -1]) * g.hy
    total += np.dot(fv[s["top"]], v[-1, :]) * g.hx
    total += np.dot(fv[s["left"]], v[:, 0]) * g.hy
    return float(total)


def mean_zero(u: ScalarField) -> ScalarField:
    """Subtract the area-weighted mean."""
    v = u.values - u.values.mean()
    # second pass removes the rounding left by the first
    v = v - v.mean()
    return ScalarField(u.grid, v)


def inner(a, b) -> float:
    """Area-weighted L2 inner product of two scalar or two vector fields."""
    _check_same(a, b)
    w = a.grid.cell_area
    if isinstance(a, ScalarField):
        return float(np.vdot(a.values, b.values) * w)
    return float((np.vdot(a.x, b.x) + np.vdot(a.y, b.y)) * w)


def cell_pairs(F: VectorField) -> np.ndarray:
    """Attach to each cell its right and top face components.

    Returns an array of shape ``(ny, nx, 2)``.  Every interior face belongs to
    exactly one cell this way; the left and bottom boundary faces belong to
    none.  For ``F = gradient(u)`` this is the forward-difference gradient.
    """
    return np.stack([F.x[:, 1:], F.y[1:, :]], axis=-1)


def from_cell_pairs(P: np.ndarray, grid: Grid, base: VectorField | None = None) -> VectorField:
    """Inverse of :func:`cell_pairs`; left/bottom faces are taken from ``base``."""
    x = np.zeros((grid.ny, grid.nx + 1)) if base is None else base.x.copy()
    y = np.zeros((grid.ny + 1, grid.nx)) if base is None else base.y.copy()
    x[:, 1:] = P[..., 0]
    y[1:, :] = P[..., 1]
    return VectorField(grid, x, y)


def square_flow(grid: Grid, strength=1.0) -> BoundaryTrace:
    """``-strength`` on the left edge, ``+strength`` on the right edge, 0 elsewhere."""
    return BoundaryTrace.from_edges(grid, right=strength, left=-strength)
