"""Periodic-grid fields and Fourier calculus on the unit torus, d in {1, 2}.

All solvers in the package run on a uniform n^d grid over [0,1)^d with
periodic wrap-around; integrals are grid means (the torus has volume one),
derivatives and inverse Laplacians are exact Fourier-multiplier operations
for band-limited fields.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonZeroMean

# Roundoff-scale guard for operations that require an analytically
# mean-zero input: |mean(f)| <= MEAN_TOL_FACTOR * ||f||_2.
MEAN_TOL_FACTOR = 1e-10


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid: `n` points per axis on the unit torus."""

    dim: int
    n: int

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    def axis_points(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def coords(self) -> tuple[np.ndarray, ...]:
        """Node coordinates, one full-shape array per axis."""
        x = self.axis_points()
        if self.dim == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing="ij"))

    def wavenumbers(self, axis: int) -> np.ndarray:
        """Angular wavenumbers 2*pi*k along `axis`, broadcastable to shape."""
        if not 0 <= axis < self.dim:
            raise ValueError(f"axis {axis} out of range for dim {self.dim}")
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=1.0 / self.n)
        if self.dim == 1:
            return k
        shape = [1] * self.dim
        shape[axis] = self.n
        return k.reshape(shape)

    def k_squared(self) -> np.ndarray:
        """|2*pi*k|^2 symbol on the full grid shape."""
        out = np.zeros(self.shape)
        for axis in range(self.dim):
            out = out + self.wavenumbers(axis) ** 2
        return out


@dataclass
class RealField:
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        _check_values(self.grid, self.values)

    def copy(self) -> "RealField":
        return RealField(self.grid, self.values.copy())


@dataclass
class ComplexField:
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=complex)
        _check_values(self.grid, self.values)

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.values.copy())


Field = RealField | ComplexField


def _check_values(grid: TorusGrid, values: np.ndarray) -> None:
    if values.shape != grid.shape:
        raise ValueError(f"values shape {values.shape} != grid shape {grid.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("field values must be finite")


def same_grid(*fields: Field) -> TorusGrid:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ValueError("fields live on different grids")
    return g


def _wrap(grid: TorusGrid, values: np.ndarray) -> Field:
    if np.iscomplexobj(values):
        return ComplexField(grid, values)
    return RealField(grid, values)


def integrate(f: Field) -> float | complex:
    """Integral over the unit torus = mean of node values (trapezoid rule)."""
    m = f.values.mean()
    return complex(m) if np.iscomplexobj(f.values) else float(m)


def l2_norm(f: Field) -> float:
    return float(np.sqrt(np.mean(np.abs(f.values) ** 2)))


def fourier_coefficients(f: Field) -> np.ndarray:
    """Coefficients c_k with f(x) = sum_k c_k exp(2*pi*i k.x) for band-limited f."""
    return np.fft.fftn(f.values) / f.grid.size


def spectral_derivative(f: Field, axis: int) -> Field:
    """Exact first derivative of the trigonometric interpolant along `axis`.

    The Nyquist mode is zeroed (odd-order derivative convention), which keeps
    derivatives of real fields real.
    """
    grid = f.grid
    mult = 1j * grid.wavenumbers(axis)
    nyq = np.where(np.abs(np.fft.fftfreq(grid.n)) == 0.5)[0]
    if grid.dim == 1:
        mult = mult.copy()
        mult[nyq] = 0.0
    else:
        mult = np.broadcast_to(mult, grid.shape).copy()
        index = [slice(None)] * grid.dim
        index[axis] = nyq
        mult[tuple(index)] = 0.0
    out = np.fft.ifftn(np.fft.fftn(f.values) * mult)
    if isinstance(f, RealField):
        return RealField(grid, out.real)
    return ComplexField(grid, out)


def gradient(f: Field) -> tuple[Field, ...]:
    return tuple(spectral_derivative(f, axis) for axis in range(f.grid.dim))


def laplacian(f: Field) -> Field:
    out = np.fft.ifftn(np.fft.fftn(f.values) * (-f.grid.k_squared()))
    if isinstance(f, RealField):
        return RealField(f.grid, out.real)
    return ComplexField(f.grid, out)


def mean_tolerance(f: Field) -> float:
    return MEAN_TOL_FACTOR * l2_norm(f)


def inverse_laplacian_zero_mean(f: RealField) -> RealField:
    """Solve -Lap(g) = f spectrally with mean(g) = 0.

    Requires f to be mean-free up to roundoff; raises NonZeroMean otherwise.
    """
    if abs(f.values.mean()) > mean_tolerance(f):
        raise NonZeroMean(
            f"inverse Laplacian needs a mean-zero field, got mean {f.values.mean():.3e}"
        )
    k2 = f.grid.k_squared()
    k2_safe = np.where(k2 == 0.0, 1.0, k2)
    hat = np.fft.fftn(f.values) / k2_safe
    hat[(0,) * f.grid.dim] = 0.0
    return RealField(f.grid, np.fft.ifftn(hat).real)


def h_minus1_norm(f: RealField) -> float:
    """Homogeneous H^-1 norm (sum over k != 0 of |c_k|^2 / |2 pi k|^2)^(1/2)."""
    if abs(f.values.mean()) > mean_tolerance(f):
        raise NonZeroMean(
            f"H^-1 norm needs a mean-zero field, got mean {f.values.mean():.3e}"
        )
    coeff = fourier_coefficients(f)
    k2 = f.grid.k_squared()
    k2_safe = np.where(k2 == 0.0, 1.0, k2)
    terms = np.abs(coeff) ** 2 / k2_safe
    terms[(0,) * f.grid.dim] = 0.0
    return float(np.sqrt(terms.sum()))


def circular_convolve(f: Field, g: Field) -> Field:
    """Periodic convolution (f * g)(x) = int f(y) g(x - y) dy on the torus."""
    grid = same_grid(f, g)
    out = np.fft.ifftn(np.fft.fftn(f.values) * np.fft.fftn(g.values)) / grid.size
    if isinstance(f, RealField) and isinstance(g, RealField):
        return RealField(grid, out.real)
    return ComplexField(grid, out)
