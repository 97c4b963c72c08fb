"""Periodic 2D grid, Fourier transforms, and diagonal constant-coefficient operators.

Conventions (fixed once, used everywhere):

* forward FFT is unnormalized, the inverse divides by n**2 (numpy default);
* wavenumbers are k = 2*pi*m/L with integer m in [-n/2, n/2);
* first derivatives zero the Nyquist mode so that differentiation of a real
  field stays real; even powers of k (Laplacian, bilaplacian) keep it.

Fields are immutable value objects; every operation returns a new field.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import MeanNotZero, NumericalBlowup, SizeMismatch


class OperatorKind(Enum):
    """Which self-adjoint elliptic operator A the spectrum encodes."""

    NEG_LAPLACIAN = "neg-laplacian"
    BILAPLACIAN = "bilaplacian"


@dataclass(frozen=True)
class Grid:
    """Uniform n-by-n grid on the periodic square (0, length)^2.

    Nodes sit at (i*h, j*h) with h = length/n.  n must be a power of two
    (>= 4) so every backend, including the dense oracle, can assume it.
    """

    n: int
    length: float

    def __post_init__(self):
        if self.n < 4 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 4, got n={self.n}")
        if not self.length > 0:
            raise ValueError(f"domain length must be positive, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.spacing * np.arange(self.n)
        x.flags.writeable = False
        return x

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) node coordinates, axis 0 along x, axis 1 along y."""
        X, Y = np.meshgrid(self.nodes, self.nodes, indexing="ij")
        X.flags.writeable = False
        Y.flags.writeable = False
        return X, Y

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """1D wavenumbers 2*pi*m/L in FFT order; Nyquist carried as -n/2."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        k.flags.writeable = False
        return k

    @cached_property
    def deriv_wavenumbers(self) -> np.ndarray:
        """First-derivative wavenumbers: Nyquist zeroed for real output."""
        k = self.wavenumbers.copy()
        k[self.n // 2] = 0.0
        k.flags.writeable = False
        return k

    @cached_property
    def k2(self) -> np.ndarray:
        """|k|^2 on the 2D mode grid (eigenvalues of -Laplacian)."""
        k = self.wavenumbers
        k2 = k[:, None] ** 2 + k[None, :] ** 2
        k2.flags.writeable = False
        return k2

    @cached_property
    def k4(self) -> np.ndarray:
        """|k|^4 (eigenvalues of the bilaplacian)."""
        k4 = self.k2**2
        k4.flags.writeable = False
        return k4


@dataclass(frozen=True)
class RealField:
    """Scalar field sampled at the grid nodes, values[i, j] = f(x_i, y_j)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n, self.grid.n):
            raise SizeMismatch(
                f"field shape {values.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(values)):
            raise NumericalBlowup("field contains non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "RealField":
        return cls(grid, np.full((grid.n, grid.n), float(value)))

    @classmethod
    def sample(cls, grid: Grid, fn) -> "RealField":
        """Evaluate fn(X, Y) vectorized over node coordinates."""
        X, Y = grid.mesh
        return cls(grid, np.asarray(fn(X, Y), dtype=float))

    def __add__(self, other: "RealField") -> "RealField":
        _check_grids(self, other)
        return RealField(self.grid, self.values + other.values)

    def __sub__(self, other: "RealField") -> "RealField":
        _check_grids(self, other)
        return RealField(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "RealField":
        return RealField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "RealField":
        return RealField(self.grid, -self.values)

    def mean(self) -> float:
        return float(self.values.mean())

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a RealField (unnormalized forward transform)."""

    grid: Grid
    coefficients: np.ndarray

    def __post_init__(self):
        coeff = np.array(self.coefficients, dtype=complex)
        if coeff.shape != (self.grid.n, self.grid.n):
            raise SizeMismatch(
                f"coefficient shape {coeff.shape} does not match grid n={self.grid.n}"
            )
        coeff.flags.writeable = False
        object.__setattr__(self, "coefficients", coeff)


@dataclass(frozen=True)
class OperatorSpectrum:
    """Eigenvalues of A on the mode grid; lambda(0) = 0 and lambda >= 0."""

    grid: Grid
    eigenvalues: np.ndarray
    kind: OperatorKind


def operator_spectrum(grid: Grid, kind: OperatorKind) -> OperatorSpectrum:
    eig = grid.k2 if kind is OperatorKind.NEG_LAPLACIAN else grid.k4
    return OperatorSpectrum(grid, eig, kind)


def _check_grids(*objs) -> Grid:
    grid = objs[0].grid
    for other in objs[1:]:
        if other.grid != grid:
            raise SizeMismatch(f"grid mismatch: {grid} vs {other.grid}")
    return grid


def to_spectral(f: RealField) -> SpectralField:
    return SpectralField(f.grid, np.fft.fft2(f.values))


def from_spectral(F: SpectralField) -> RealField:
    return RealField(F.grid, np.fft.ifft2(F.coefficients).real)


def apply_operator(f: RealField, op: OperatorSpectrum) -> RealField:
    """Return the field with spectrum lambda(k) * f_hat(k)."""
    _check_grids(f, op)
    out = np.fft.ifft2(op.eigenvalues * np.fft.fft2(f.values)).real
    return RealField(f.grid, out)


def solve_shifted(rhs: RealField, c: float, op: OperatorSpectrum) -> RealField:
    """Solve (I + c*A) u = rhs diagonally in Fourier space (c >= 0)."""
    _check_grids(rhs, op)
    if c < 0:
        raise ValueError(f"shift coefficient must be nonnegative, got {c}")
    u_hat = np.fft.fft2(rhs.values) / (1.0 + c * op.eigenvalues)
    return RealField(rhs.grid, np.fft.ifft2(u_hat).real)


def inner_l2(f: RealField, g: RealField) -> float:
    """Discrete L2 inner product h^2 * sum f_ij g_ij."""
    grid = _check_grids(f, g)
    return grid.spacing**2 * float(np.vdot(f.values, g.values).real)


def norm_l2(f: RealField) -> float:
    return float(np.sqrt(max(inner_l2(f, f), 0.0)))


def inner_hm1(f: RealField, g: RealField) -> float:
    """H^-1 inner product ((-Lap)^{-1} f, g) for zero-mean fields.

    Raises MeanNotZero if either argument carries a mean above
    1e-10 * max|field| (zero fields pass trivially).
    """
    grid = _check_grids(f, g)
    for name, field in (("f", f), ("g", g)):
        if abs(field.mean()) > 1e-10 * field.max_abs():
            raise MeanNotZero(
                f"inner_hm1 requires zero-mean fields; mean({name}) = {field.mean():.3e}"
            )
    f_hat = np.fft.fft2(f.values)
    g_hat = np.fft.fft2(g.values)
    k2 = grid.k2.copy()
    k2[0, 0] = 1.0  # zero mode dropped below
    quot = (f_hat * np.conj(g_hat)).real / k2
    quot[0, 0] = 0.0
    return grid.length**2 / grid.n**4 * float(quot.sum())


def gradient(f: RealField) -> tuple[RealField, RealField]:
    """Spectral gradient; Nyquist first-derivative modes are zeroed."""
    grid = f.grid
    kd = grid.deriv_wavenumbers
    f_hat = np.fft.fft2(f.values)
    fx = np.fft.ifft2(1j * kd[:, None] * f_hat).real
    fy = np.fft.ifft2(1j * kd[None, :] * f_hat).real
    return RealField(grid, fx), RealField(grid, fy)


def divergence(fx: RealField, fy: RealField) -> RealField:
    grid = _check_grids(fx, fy)
    kd = grid.deriv_wavenumbers
    out_hat = 1j * kd[:, None] * np.fft.fft2(fx.values)
    out_hat += 1j * kd[None, :] * np.fft.fft2(fy.values)
    return RealField(grid, np.fft.ifft2(out_hat).real)


def two_thirds_truncation(f: RealField) -> RealField:
    """Optional dealiasing: zero all modes with |m| > n/3 (2/3 rule).

    Not applied by default anywhere; exposed for callers who want the
    filtered pseudo-spectral variant.
    """
    grid = f.grid
    m = np.fft.fftfreq(grid.n) * grid.n
    keep = np.abs(m) <= grid.n / 3.0
    mask = keep[:, None] & keep[None, :]
    return RealField(grid, np.fft.ifft2(mask * np.fft.fft2(f.values)).real)
