"""Cell-centered finite-volume grids on rectangles with reflecting boundaries.

A field lives at cell centers of a uniform mesh over [0, Lx] (times [0, Ly]
in 2d).  The homogeneous Neumann condition is realized by ghost-cell
reflection, which is the same thing as dropping the flux through the outer
boundary: every operator here is written in flux form, so discrete
conservation (zero column sums of the divergence) holds by construction and
not only up to truncation error.

The Laplacian of f is assembled as the divergence of face gradients,

    (Lap f)_i = sum over faces of cell i of  (f_nb - f_i) / h^2,

which on the interior reduces to the usual second-difference stencil and at
the boundary to the one-sided Neumann closure.  Its negative, the stiffness
action f -> -Lap f, is symmetric positive semidefinite with the constants as
kernel; `NeumannOperator` wraps d * stiffness + diagonal reaction, the
building block shared by the implicit diffusion steps and the spectral
computations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Invalid grid geometry (bad extents, too few cells, unsupported dim)."""


class FieldShapeError(ValueError):
    """A field array does not match the grid it is used with."""


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on [0, extents[0]] (x [0, extents[1]]).

    Cell centers along axis a sit at (i + 1/2) * h[a], i = 0..cells[a]-1.
    At least two cells per axis are required so that every axis has an
    interior face (two cells is the smallest mesh on which the stiffness
    matrix is nontrivial, and small closed-form instances live there).
    """

    extents: tuple[float, ...]
    cells: tuple[int, ...]
    h: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        extents = tuple(float(L) for L in self.extents)
        cells = tuple(int(m) for m in self.cells)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "cells", cells)
        if len(extents) not in (1, 2) or len(cells) != len(extents):
            raise GridError(
                f"expected matching 1d or 2d extents/cells, got {extents} / {cells}")
        if any(not np.isfinite(L) or L <= 0 for L in extents):
            raise GridError(f"extents must be positive and finite, got {extents}")
        if any(m < 2 for m in cells):
            raise GridError(f"need at least 2 cells per axis, got {cells}")
        object.__setattr__(self, "h", tuple(L / m for L, m in zip(extents, cells)))

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells))

    @property
    def cell_measure(self) -> float:
        """Volume of a single cell, prod(h)."""
        return float(np.prod(self.h))

    @property
    def omega_measure(self) -> float:
        """|Omega| = prod(extents)."""
        return float(np.prod(self.extents))

    def centers(self, axis: int = 0) -> np.ndarray:
        """1d array of cell-center coordinates along the given axis."""
        m, h = self.cells[axis], self.h[axis]
        return (np.arange(m) + 0.5) * h

    def coordinate_fields(self) -> dict[str, np.ndarray]:
        """Cell-center coordinates as full fields, keyed 'x' (and 'y' in 2d)."""
        if self.dim == 1:
            return {"x": self.centers(0)}
        X, Y = np.meshgrid(self.centers(0), self.centers(1), indexing="ij")
        return {"x": X, "y": Y}

    def check_field(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise FieldShapeError(
                f"{name} has shape {f.shape}, grid expects {self.shape}")
        return f

    def constant_field(self, value: float) -> np.ndarray:
        return np.full(self.shape, float(value))

    # ---- quadrature -----------------------------------------------------

    def integrate(self, f: np.ndarray) -> float:
        """Midpoint quadrature: cell_measure * sum of cell values."""
        f = self.check_field(f)
        return self.cell_measure * float(np.sum(f))

    def grad_sq_integral(self, f: np.ndarray) -> float:
        """Integral of |grad f|^2 from face differences (interior faces only).

        Face gradients are exact for linears; with the reflecting closure the
        boundary face gradient is zero and contributes nothing.
        """
        f = self.check_field(f)
        total = 0.0
        if self.dim == 1:
            g = np.diff(f) / self.h[0]
            total += self.h[0] * float(np.sum(g * g))
        else:
            hx, hy = self.h
            gx = np.diff(f, axis=0) / hx
            gy = np.diff(f, axis=1) / hy
            total += hx * hy * float(np.sum(gx * gx))
            total += hx * hy * float(np.sum(gy * gy))
        return total

    # ---- differential operators ----------------------------------------

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Flux-form five(three)-point Laplacian with reflecting boundaries."""
        f = self.check_field(f)
        out = np.zeros_like(f)
        if self.dim == 1:
            flux = np.diff(f) / self.h[0]          # gradient on interior faces
            out[:-1] += flux / self.h[0]
            out[1:] -= flux / self.h[0]
        else:
            hx, hy = self.h
            fx = np.diff(f, axis=0) / hx
            out[:-1, :] += fx / hx
            out[1:, :] -= fx / hx
            fy = np.diff(f, axis=1) / hy
            out[:, :-1] += fy / hy
            out[:, 1:] -= fy / hy
        return out

    def cross_diffusion_div(self, S: np.ndarray, I: np.ndarray) -> np.ndarray:
        """Conservative divergence div(S grad I) with arithmetic-mean face S.

        The face flux is F = mean(S_i, S_nb) * (I_nb - I_i) / h, and each cell
        receives (sum of its face fluxes) / h.  Every interior flux enters two
        adjacent cells with opposite signs and boundary fluxes are zero, so
        the integral of the result vanishes identically.  When S is constant
        the face mean is that constant and the result collapses to
        S * laplacian(I).
        """
        S = self.check_field(S, "S")
        I = self.check_field(I, "I")
        out = np.zeros_like(S)
        if self.dim == 1:
            h = self.h[0]
            flux = 0.5 * (S[:-1] + S[1:]) * (np.diff(I) / h)
            out[:-1] += flux / h
            out[1:] -= flux / h
        else:
            hx, hy = self.h
            fx = 0.5 * (S[:-1, :] + S[1:, :]) * (np.diff(I, axis=0) / hx)
            out[:-1, :] += fx / hx
            out[1:, :] -= fx / hx
            fy = 0.5 * (S[:, :-1] + S[:, 1:]) * (np.diff(I, axis=1) / hy)
            out[:, :-1] += fy / hy
            out[:, 1:] -= fy / hy
        return out


class NeumannOperator:
    """Symmetric operator  f -> -d * Lap f + r * f  on a grid.

    r is a cellwise reaction coefficient (scalar or field).  The operator is
    positive definite whenever r > 0, and positive semidefinite for r >= 0.
    Provides the matvec, the diagonal (for Jacobi preconditioning), and a
    dense assembly for small instances and test oracles.
    """

    def __init__(self, grid: Grid, d: float, reaction):
        if d < 0:
            raise ValueError(f"diffusion coefficient must be >= 0, got {d}")
        self.grid = grid
        self.d = float(d)
        r = np.asarray(reaction, dtype=float)
        self.reaction = np.broadcast_to(r, grid.shape).copy() if r.ndim == 0 \
            else grid.check_field(r, "reaction")

    def matvec(self, f: np.ndarray) -> np.ndarray:
        return -self.d * self.grid.laplacian(f) + self.reaction * f

    def diagonal(self) -> np.ndarray:
        """Diagonal of the operator matrix.

        Each cell's stiffness diagonal is d/h^2 per interior face it touches
        (one at a physical boundary, two inside).
        """
        g = self.grid
        diag = np.array(self.reaction, copy=True)
        if g.dim == 1:
            w = np.full(g.shape, 2.0)
            w[0] = w[-1] = 1.0
            diag += self.d * w / g.h[0] ** 2
        else:
            hx, hy = g.h
            wx = np.full(g.cells[0], 2.0)
            wx[0] = wx[-1] = 1.0
            wy = np.full(g.cells[1], 2.0)
            wy[0] = wy[-1] = 1.0
            diag += self.d * (wx[:, None] / hx ** 2 + wy[None, :] / hy ** 2)
        return diag

    def dense(self) -> np.ndarray:
        """Materialize the matrix by applying the matvec to basis vectors."""
        n = self.grid.n_cells
        A = np.empty((n, n))
        e = np.zeros(self.grid.shape)
        flat = e.reshape(-1)
        for j in range(n):
            flat[j] = 1.0
            A[:, j] = self.matvec(e).reshape(-1)
            flat[j] = 0.0
        return A

    def tridiagonal_bands(self) -> np.ndarray:
        """(3, n) banded storage of the 1d matrix for LAPACK-style solves."""
        if self.grid.dim != 1:
            raise ValueError("banded assembly is only available in 1d")
        n = self.grid.n_cells
        off = -self.d / self.grid.h[0] ** 2
        ab = np.zeros((3, n))
        ab[0, 1:] = off                    # superdiagonal
        ab[1, :] = self.diagonal()
        ab[2, :-1] = off                   # subdiagonal
        return ab
