"""Structured grids: quadrature, Laplacians, Poisson solves and field dumps.

Two geometries are supported.  :class:`PeriodicGrid` samples a rectangular
torus and uses the Fourier symbol ``-|k|^2`` for the Laplacian.
:class:`PlanarBox` samples the interior nodes of the square ``[-L, L]^2``
and uses the 5-point stencil with zero ghost values; the type-I sine
transform diagonalises that stencil exactly, so Dirichlet Poisson solves
and shifted-Laplacian preconditioners are direct.

Fields are plain ``float64`` arrays of shape ``(nx, ny)`` indexed
``[ix, iy]``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft


class SolvabilityError(ValueError):
    """Periodic Poisson right-hand side with nonzero mean."""


@dataclass(frozen=True)
class PeriodicCell:
    lx: float
    ly: float

    def __post_init__(self):
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("cell edge lengths must be positive")

    @property
    def area(self) -> float:
        return self.lx * self.ly


class _Grid:
    kind: str
    nx: int
    ny: int

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def weight(self) -> float:
        return self.hx * self.hy

    def integrate(self, f) -> float:
        """Uniform-weight quadrature of ``f`` (trapezoid on the torus)."""
        return float(np.sum(f) * self.weight)

    def inner(self, f, g) -> float:
        return float(np.vdot(f, g).real * self.weight)

    def zeros(self):
        return np.zeros(self.shape)

    def shifted_inverse(self, rhs, scale: float, shift: float):
        """Solve ``(-scale * Laplacian + shift) x = rhs`` directly."""
        return self.inverse_transform(self.transform(rhs) / (scale * self.symbol + shift))


@dataclass(frozen=True, eq=False)
class PeriodicGrid(_Grid):
    cell: PeriodicCell
    nx: int
    ny: int

    kind = "periodic"

    def __post_init__(self):
        for n in (self.nx, self.ny):
            if n < 16 or n % 2:
                raise ValueError(f"periodic grid sizes must be even and >= 16, got {n}")

    @classmethod
    def square(cls, length: float, n: int) -> "PeriodicGrid":
        return cls(PeriodicCell(length, length), n, n)

    def __eq__(self, other):
        return (isinstance(other, PeriodicGrid) and self.cell == other.cell
                and self.shape == other.shape)

    def __hash__(self):
        return hash((self.kind, self.cell, self.shape))

    @property
    def area(self) -> float:
        return self.cell.area

    @property
    def hx(self) -> float:
        return self.cell.lx / self.nx

    @property
    def hy(self) -> float:
        return self.cell.ly / self.ny

    @property
    def lengths(self) -> tuple[float, float]:
        return (self.cell.lx, self.cell.ly)

    @cached_property
    def axes(self):
        return np.arange(self.nx) * self.hx, np.arange(self.ny) * self.hy

    def coords(self):
        x, y = self.axes
        return np.meshgrid(x, y, indexing="ij")

    @cached_property
    def symbol(self):
        """Eigenvalues of ``-Laplacian`` in the real-FFT layout."""
        kx = 2 * math.pi * np.fft.fftfreq(self.nx, d=self.hx)
        ky = 2 * math.pi * np.fft.rfftfreq(self.ny, d=self.hy)
        return kx[:, None] ** 2 + ky[None, :] ** 2

    def transform(self, f):
        return np.fft.rfft2(f)

    def inverse_transform(self, F):
        return np.fft.irfft2(F, s=self.shape)

    def apply_laplacian(self, f):
        return self.inverse_transform(-self.symbol * self.transform(f))

    def solve_poisson(self, rhs, rtol: float = 1e-8):
        """Zero-mean periodic solution of ``Laplacian u = rhs``.

        Raises
        ------
        SolvabilityError
            If ``rhs`` does not integrate to zero (relative to its L1 norm).
        """
        scale = np.abs(rhs).sum()
        if abs(rhs.sum()) > rtol * max(scale, 1e-300):
            raise SolvabilityError(
                f"periodic Poisson right-hand side has nonzero mean {rhs.mean():.3e}")
        F = self.transform(rhs)
        sym = self.symbol.copy()
        sym[0, 0] = 1.0
        F = -F / sym
        F[0, 0] = 0.0
        return self.inverse_transform(F)

    def header(self) -> str:
        return (f"VXF1 nx={self.nx} ny={self.ny} lx={self.cell.lx!r} "
                f"ly={self.cell.ly!r} kind=periodic")


@dataclass(frozen=True, eq=False)
class PlanarBox(_Grid):
    """Interior nodes of ``[-L, L]^2``; the unknown vanishes on the ghost ring."""

    half_width: float
    nx: int
    ny: int | None = None

    kind = "planar"

    def __post_init__(self):
        if self.ny is None:
            object.__setattr__(self, "ny", self.nx)
        if not self.half_width > 0:
            raise ValueError("box half-width must be positive")
        if min(self.nx, self.ny) < 8:
            raise ValueError("planar box needs at least 8 interior nodes per axis")

    def __eq__(self, other):
        return (isinstance(other, PlanarBox) and self.half_width == other.half_width
                and self.shape == other.shape)

    def __hash__(self):
        return hash((self.kind, self.half_width, self.shape))

    @property
    def hx(self) -> float:
        return 2 * self.half_width / (self.nx + 1)

    @property
    def hy(self) -> float:
        return 2 * self.half_width / (self.ny + 1)

    @property
    def area(self) -> float:
        return (2 * self.half_width) ** 2

    @property
    def lengths(self) -> tuple[float, float]:
        return (2 * self.half_width, 2 * self.half_width)

    @cached_property
    def axes(self):
        L = self.half_width
        return (-L + self.hx * np.arange(1, self.nx + 1),
                -L + self.hy * np.arange(1, self.ny + 1))

    def coords(self):
        x, y = self.axes
        return np.meshgrid(x, y, indexing="ij")

    @cached_property
    def symbol(self):
        """Eigenvalues of the negative 5-point Dirichlet Laplacian (sine basis)."""
        jx = np.arange(1, self.nx + 1)
        jy = np.arange(1, self.ny + 1)
        ex = (4 / self.hx**2) * np.sin(np.pi * jx / (2 * (self.nx + 1))) ** 2
        ey = (4 / self.hy**2) * np.sin(np.pi * jy / (2 * (self.ny + 1))) ** 2
        return ex[:, None] + ey[None, :]

    def transform(self, f):
        return sfft.dstn(f, type=1, norm="ortho")

    def inverse_transform(self, F):
        return sfft.idstn(F, type=1, norm="ortho")

    def apply_laplacian(self, f):
        out = -2 * f * (1 / self.hx**2 + 1 / self.hy**2)
        out[1:, :] += f[:-1, :] / self.hx**2
        out[:-1, :] += f[1:, :] / self.hx**2
        out[:, 1:] += f[:, :-1] / self.hy**2
        out[:, :-1] += f[:, 1:] / self.hy**2
        return out

    def solve_poisson(self, rhs):
        """Dirichlet solution of the 5-point ``Laplacian u = rhs`` (exact sine solve)."""
        return self.inverse_transform(-self.transform(rhs) / self.symbol)

    def ghost_source(self, func):
        """Stencil contribution of nonzero ghost values ``func(x, y)``.

        With ghost values ``b`` on the ring around the box, the 5-point
        Laplacian of a field ``f`` equals ``apply_laplacian(f) + ghost_source``.
        """
        L = self.half_width
        x, y = self.axes
        out = np.zeros(self.shape)
        out[0, :] += func(np.full_like(y, -L), y) / self.hx**2
        out[-1, :] += func(np.full_like(y, L), y) / self.hx**2
        out[:, 0] += func(x, np.full_like(x, -L)) / self.hy**2
        out[:, -1] += func(x, np.full_like(x, L)) / self.hy**2
        return out

    def header(self) -> str:
        lx = 2 * self.half_width
        return f"VXF1 nx={self.nx} ny={self.ny} lx={lx!r} ly={lx!r} kind=planar"


# ---------------------------------------------------------------------------
# field dumps

_HEADER = re.compile(
    r"^VXF1 nx=(\d+) ny=(\d+) lx=(\S+) ly=(\S+) kind=(periodic|planar)$")


def write_field(path, grid, f) -> None:
    """Write ``f`` as a VXF1 dump: text header line, then little-endian float64."""
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {grid.shape}")
    with open(path, "wb") as fh:
        fh.write((grid.header() + "\n").encode("ascii"))
        fh.write(np.ascontiguousarray(f).astype("<f8").tobytes())


def read_field(path):
    """Read a VXF1 dump; returns ``(grid, field)``."""
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ValueError(f"{path}: missing VXF1 header line")
    m = _HEADER.match(raw[:nl].decode("ascii", errors="replace"))
    if m is None:
        raise ValueError(f"{path}: malformed VXF1 header")
    nx, ny = int(m.group(1)), int(m.group(2))
    lx, ly = float(m.group(3)), float(m.group(4))
    body = raw[nl + 1:]
    if len(body) != 8 * nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} samples, found {len(body) // 8}")
    data = np.frombuffer(body, dtype="<f8").reshape(nx, ny).astype(float)
    if m.group(5) == "periodic":
        grid = PeriodicGrid(PeriodicCell(lx, ly), nx, ny)
    else:
        if lx != ly:
            raise ValueError(f"{path}: planar boxes are square")
        grid = PlanarBox(lx / 2, nx, ny)
    return grid, data
