"""Neumann problems on the staggered grid.

All solves are posed in weak form against the discrete gradient: find a
mean-zero ``u`` with

    inner(k * gradient(u), gradient(v)) = rhs(v)    for all v,

where ``k`` is 1 (Poisson) or a face conductivity.  The operator is the
5-point Neumann Laplacian; its constant null space is handled by projecting
right-hand sides and iterates onto mean-zero fields.  Systems are solved by
conjugate gradients, preconditioned by default with the exact DCT-II inverse
of the constant-coefficient Laplacian.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy import fft

from .exceptions import (CompatibilityError, ConvergenceError,
                         NonPositiveConductivity, ZeroDataError)
from .grid import (BoundaryTrace, Grid, ScalarField, VectorField,
                   boundary_integral, boundary_lump, gradient, with_normal_trace)

__all__ = [
    "LinearSolveConfig",
    "SolveInfo",
    "neumann_apply",
    "solve_poisson_neumann",
    "solve_harmonic_flux",
    "solve_conductivity",
    "face_conductivity",
    "current_density",
]

COMPAT_RTOL = 1e-8


def _threads():
    try:
        return max(1, int(os.environ.get("NLG_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class LinearSolveConfig:
    cg_tol: float = 1e-10
    cg_max_iter: int | None = None  # None -> 10 * nx * ny
    preconditioner: str = "dct"

    def __post_init__(self):
        if not 0 < self.cg_tol < 1:
            raise ValueError("cg_tol must lie in (0, 1)")
        if self.cg_max_iter is not None and self.cg_max_iter < 1:
            raise ValueError("cg_max_iter must be >= 1")
        if self.preconditioner not in ("dct", "none"):
            raise ValueError("preconditioner must be 'dct' or 'none'")

    def max_iter(self, grid):
        return self.cg_max_iter if self.cg_max_iter is not None else 10 * grid.nx * grid.ny


@dataclass(frozen=True)
class SolveInfo:
    iterations: int
    residual: float  # relative algebraic residual


def face_conductivity(sigma: ScalarField, sigma_y: ScalarField | None = None):
    """Harmonic means across interior faces, as ``(kx, ky)``.

    ``sigma_y`` (default ``sigma``) is used on horizontal faces, which gives
    an axis-aligned anisotropic conductivity ``diag(sigma, sigma_y)``.
    """
    s = sigma.values
    t = s if sigma_y is None else sigma_y.values
    kx = 2.0 * s[:, 1:] * s[:, :-1] / (s[:, 1:] + s[:, :-1])
    ky = 2.0 * t[1:, :] * t[:-1, :] / (t[1:, :] + t[:-1, :])
    return kx, ky


def neumann_apply(u, grid: Grid, k=None):
    """``-div(k grad u)`` with zero boundary flux, on raw ``(ny, nx)`` arrays."""
    gx = (u[:, 1:] - u[:, :-1]) / grid.hx
    gy = (u[1:, :] - u[:-1, :]) / grid.hy
    if k is not None:
        gx = gx * k[0]
        gy = gy * k[1]
    out = np.zeros_like(u)
    out[:, :-1] -= gx / grid.hx
    out[:, 1:] += gx / grid.hx
    out[:-1, :] -= gy / grid.hy
    out[1:, :] += gy / grid.hy
    return out


def _dct_eigenvalues(grid):
    kx = np.arange(grid.nx)
    ky = np.arange(grid.ny)
    lx = (2.0 * np.sin(0.5 * np.pi * kx / grid.nx) / grid.hx) ** 2
    ly = (2.0 * np.sin(0.5 * np.pi * ky / grid.ny) / grid.hy) ** 2
    lam = ly[:, None] + lx[None, :]
    lam[0, 0] = np.inf  # constant mode is projected out
    return lam


def _dct_solve(r, lam, scale=1.0):
    w = _threads()
    rh = fft.dctn(r, type=2, norm="ortho", workers=w)
    return fft.idctn(rh / lam, type=2, norm="ortho", workers=w) / scale


def _project(v):
    v = v - v.mean()
    return v - v.mean()


def _cg(apply_A, b, precond, tol, max_iter, x0=None):
    """Preconditioned CG restricted to mean-zero arrays."""
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), SolveInfo(0, 0.0)
    x = np.zeros_like(b) if x0 is None else _project(x0)
    r = b - apply_A(x) if x0 is not None else b.copy()
    rnorm = np.linalg.norm(r)
    if rnorm <= tol * bnorm:
        return x, SolveInfo(0, rnorm / bnorm)
    z = _project(precond(r))
    p = z.copy()
    rz = np.vdot(r, z)
    for it in range(1, max_iter + 1):
        Ap = apply_A(p)
        step = rz / np.vdot(p, Ap)
        x = x + step * p
        r = r - step * Ap
        rnorm = np.linalg.norm(r)
        if rnorm <= tol * bnorm:
            # confirm against the true residual to avoid drift
            r_true = b - apply_A(x)
            true_norm = np.linalg.norm(r_true)
            if true_norm <= tol * bnorm:
                return _project(x), SolveInfo(it, true_norm / bnorm)
            r = r_true
        z = _project(precond(r))
        rz_new = np.vdot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError(
        f"CG did not reach relative residual {tol:g} in {max_iter} iterations "
        f"(reached {rnorm / bnorm:.3e})")


def _check_compatible(rhs, scale, what):
    total = rhs.sum()
    if abs(total) > COMPAT_RTOL * max(scale, np.finfo(float).tiny):
        raise CompatibilityError(
            f"{what}: data violates the compatibility condition "
            f"(boundary flux integrates to {total:.3e}, expected 0)")


def _solve(grid, rhs, cfg, k=None, x0=None):
    cfg = cfg or LinearSolveConfig()
    lam = _dct_eigenvalues(grid)
    if k is None:
        apply_A = lambda v: neumann_apply(v, grid)  # noqa: E731
        scale = 1.0
    else:
        apply_A = lambda v: neumann_apply(v, grid, k)  # noqa: E731
        scale = float(np.mean(np.concatenate([k[0].ravel(), k[1].ravel()])))
    if cfg.preconditioner == "dct":
        precond = lambda r: _dct_solve(r, lam, scale)  # noqa: E731
    else:
        precond = lambda r: r  # noqa: E731
    return _cg(apply_A, _project(rhs), precond, cfg.cg_tol, cfg.max_iter(grid), x0)


def solve_poisson_neumann(F: VectorField, extra_flux: BoundaryTrace | None = None,
                          cfg: LinearSolveConfig | None = None, *, x0=None,
                          return_info=False):
    """Mean-zero ``u`` with ``<grad u, grad v> = <F, grad v> + <extra_flux, v>``.

    Only interior faces of ``F`` enter; its boundary faces are ignored since
    the discrete gradient vanishes there.  ``x0`` is an optional warm start.
    """
    grid = F.grid
    Fi = F.interior()
    # -div of the interior part is the adjoint of gradient applied to F
    rhs = -((Fi.x[:, 1:] - Fi.x[:, :-1]) / grid.hx + (Fi.y[1:, :] - Fi.y[:-1, :]) / grid.hy)
    scale = np.abs(rhs).sum()
    if extra_flux is not None:
        lump = boundary_lump(extra_flux) / grid.cell_area
        rhs = rhs + lump
        scale += np.abs(lump).sum()
    _check_compatible(rhs, scale, "solve_poisson_neumann")
    x, info = _solve(grid, rhs, cfg, x0=None if x0 is None else np.asarray(getattr(x0, "values", x0)))
    u = ScalarField(grid, x)
    return (u, info) if return_info else u


def _check_data(g: BoundaryTrace):
    if g.max_abs() == 0.0:
        raise ZeroDataError("boundary data g is identically zero")
    lump = boundary_lump(g)
    _check_compatible(lump, np.abs(lump).sum(), "boundary data g")


def solve_harmonic_flux(g: BoundaryTrace, cfg: LinearSolveConfig | None = None,
                        *, return_info=False):
    """Harmonic lift of Neumann data: mean-zero ``w`` with ``<grad w, grad v> = <g, v>``.

    Returns ``(w, <g, w>)``; the pairing equals ``|grad w|^2`` and is positive.
    """
    _check_data(g)
    grid = g.grid
    rhs = boundary_lump(g) / grid.cell_area
    x, info = _solve(grid, rhs, cfg)
    w = ScalarField(grid, x)
    out = (w, boundary_integral(g, w))
    return out + (info,) if return_info else out


def solve_conductivity(sigma: ScalarField, g: BoundaryTrace,
                       cfg: LinearSolveConfig | None = None, *, sigma_y=None,
                       return_info=False):
    """Potential ``u`` of the current ``J = -sigma grad u`` with ``J . nu = g``.

    Weak form ``<sigma grad u, grad v> = -<g, v>``; conductivity on faces is
    the harmonic mean of the adjacent cells.
    """
    for s in (sigma, sigma_y):
        if s is not None and not np.all(s.values > 0):
            raise NonPositiveConductivity(
                f"conductivity must be positive (min {s.values.min():.3g})")
    _check_data(g)
    grid = g.grid
    rhs = -boundary_lump(g) / grid.cell_area
    x, info = _solve(grid, rhs, cfg, k=face_conductivity(sigma, sigma_y))
    u = ScalarField(grid, x)
    return (u, info) if return_info else u


def current_density(sigma: ScalarField, u: ScalarField, g: BoundaryTrace,
                    sigma_y: ScalarField | None = None) -> VectorField:
    """``-sigma grad u`` on interior faces, boundary faces carrying ``g``."""
    kx, ky = face_conductivity(sigma, sigma_y)
    G = gradient(u)
    jx = np.zeros_like(G.x)
    jy = np.zeros_like(G.y)
    jx[:, 1:-1] = -kx * G.x[:, 1:-1]
    jy[1:-1, :] = -ky * G.y[1:-1, :]
    return with_normal_trace(VectorField(u.grid, jx, jy), g)
