"""Background functions carrying the vortex singularities.

Writing ``u = u0 + v`` moves every Dirac mass into an explicit background
``u0`` so that the unknown ``v`` is smooth.  On the torus ``u0`` is the
zero-mean Poisson solution driven by mollified point masses; on the plane
it is the closed-form sum of ``ln(|x-p|^2 / (mu + |x-p|^2))`` terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid, PlanarBox
from .model import FOUR_PI, ConfigurationError, SystemModel, VortexSet


@dataclass(frozen=True, eq=False)
class BackgroundScalar:
    """Background ``u0`` and its source ``g`` for one vortex set.

    ``lift`` is the stencil source produced by the far-field ghost values of
    the regular part (planar only, zero on the torus); ``clamped`` marks
    nodes sitting on a vortex where the logarithm was cut off.
    """

    grid: object
    vortices: VortexSet
    u0: np.ndarray
    g: np.ndarray
    lift: np.ndarray
    clamped: np.ndarray
    mu: float | None = None
    sigma: float | None = None

    @property
    def total_mass(self) -> float:
        return self.grid.integrate(self.g)

    @property
    def n_vortices(self) -> int:
        return self.vortices.total


def _check_sigma(grid: PeriodicGrid, sigma):
    hmax = max(grid.hx, grid.hy)
    if sigma is None:
        sigma = 3.0 * hmax
    if sigma < 2.0 * hmax * (1 - 1e-12):
        raise ValueError(f"smoothing width {sigma:g} is below grid resolution 2h = {2 * hmax:g}")
    if sigma > min(grid.lengths) / 6:
        raise ValueError(f"smoothing width {sigma:g} is too wide for the cell")
    return float(sigma)


def _periodic_bump(grid: PeriodicGrid, point, sigma):
    lx, ly = grid.lengths
    x, y = grid.axes
    # minimal-image offsets plus one ring of periodic images
    dx = (x - point[0] + lx / 2) % lx - lx / 2
    dy = (y - point[1] + ly / 2) % ly - ly / 2
    bx = sum(np.exp(-((dx + k * lx) ** 2) / (2 * sigma**2)) for k in (-1, 0, 1))
    by = sum(np.exp(-((dy + k * ly) ** 2) / (2 * sigma**2)) for k in (-1, 0, 1))
    return np.outer(bx, by)


def periodic_background(grid: PeriodicGrid, vortices: VortexSet, sigma=None) -> BackgroundScalar:
    """Mollified periodic background.

    Each vortex contributes a periodised Gaussian bump of width ``sigma``
    renormalised so that its discrete mass is exactly ``4*pi*multiplicity``;
    ``u0`` then solves ``Laplacian u0 = g - 4*pi*N/|Omega|`` with zero mean.
    """
    sigma = _check_sigma(grid, sigma)
    vortices = vortices.reduced(*grid.lengths)
    g = grid.zeros()
    for p, k in vortices:
        bump = _periodic_bump(grid, p, sigma)
        g += bump * (FOUR_PI * k / grid.integrate(bump))
    N = vortices.total
    if N:
        u0 = grid.solve_poisson(g - FOUR_PI * N / grid.area)
        u0 -= u0.mean()
    else:
        u0 = grid.zeros()
    zeros = grid.zeros()
    return BackgroundScalar(grid, vortices, u0, g, zeros, np.zeros(grid.shape, bool),
                            sigma=sigma)


def check_inside(box: PlanarBox, vortices: VortexSet) -> None:
    limit = 0.75 * box.half_width
    for (x, y), _ in vortices:
        if max(abs(x), abs(y)) > limit:
            raise ConfigurationError(
                f"vortex at ({x:g}, {y:g}) is closer than L/4 to the box edge (L = {box.half_width:g})")


def _log_profile(vortices: VortexSet, mu: float, x, y, eps: float = 0.0):
    """sum_s k_s ln(|x-p_s|^2 / (mu + |x-p_s|^2)) with |x-p|^2 floored at eps^2."""
    out = np.zeros(np.broadcast(x, y).shape)
    for (px, py), k in vortices:
        r2 = np.maximum((x - px) ** 2 + (y - py) ** 2, eps**2)
        out += k * np.log(r2 / (mu + r2))
    return out


def log_mu(vortices: VortexSet, mu: float, x, y):
    """sum_s k_s ln(mu + |x-p_s|^2); its Laplacian is the planar source ``g``."""
    out = np.zeros(np.broadcast(x, y).shape)
    for (px, py), k in vortices:
        out += k * np.log(mu + (x - px) ** 2 + (y - py) ** 2)
    return out


def planar_background(vortices: VortexSet, mu: float, box: PlanarBox,
                      far_field: str = "vacuum") -> BackgroundScalar:
    """Closed-form planar background and source, evaluated at the nodes.

    ``far_field="vacuum"`` prescribes ghost values ``-u0`` for the regular
    part, so the full field ``u = u0 + v`` vanishes on the box boundary;
    ``far_field="zero"`` keeps ``v = 0`` there instead.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    if far_field not in ("vacuum", "zero"):
        raise ValueError(f"unknown far-field mode {far_field!r}")
    check_inside(box, vortices)
    X, Y = box.coords()
    eps = min(box.hx, box.hy) / 4
    u0 = _log_profile(vortices, mu, X, Y, eps)
    g = np.zeros(box.shape)
    clamped = np.zeros(box.shape, bool)
    for (px, py), k in vortices:
        r2 = (X - px) ** 2 + (Y - py) ** 2
        g += k * 4 * mu / (mu + r2) ** 2
        clamped |= r2 < eps**2
    if far_field == "vacuum" and vortices.total:
        lift = box.ghost_source(lambda x, y: -_log_profile(vortices, mu, x, y))
    else:
        lift = box.zeros()
    return BackgroundScalar(box, vortices, u0, g, lift, clamped, mu=float(mu))


@dataclass(frozen=True, eq=False)
class BackgroundSystem:
    """Backgrounds of both vortex sets plus the composite coefficient fields.

    ``h1m = exp(m u0_1)``, ``H1 = exp(u0_1 + u0_2)`` and
    ``H2 = exp(u0_1 - u0_2)``; ``G1``/``G2`` are the weighted source sums.
    """

    first: BackgroundScalar
    second: BackgroundScalar
    h1m: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    mu: float | None

    @property
    def grid(self):
        return self.first.grid

    @property
    def u0_1(self):
        return self.first.u0

    @property
    def u0_2(self):
        return self.second.u0

    @property
    def g1(self):
        return self.first.g

    @property
    def g2(self):
        return self.second.g

    @property
    def clamped(self):
        return self.first.clamped | self.second.clamped


def check_subset(vortices1: VortexSet, vortices2: VortexSet) -> None:
    bad = vortices2.missing_from(vortices1)
    if bad is not None:
        raise ConfigurationError(
            f"second-field vortex at ({bad[0]:g}, {bad[1]:g}) is not among the first-field "
            "vortices (with multiplicity); required when |C|^2 > 0")


def composite_fields(model: SystemModel, vortices1: VortexSet, vortices2: VortexSet, grid,
                     mu: float = 1.0, sigma=None, far_field: str = "vacuum") -> BackgroundSystem:
    """Backgrounds and composites for the two-field system on either geometry."""
    if isinstance(grid, PeriodicGrid):
        vortices1 = vortices1.reduced(*grid.lengths)
        vortices2 = vortices2.reduced(*grid.lengths)
    if model.effective().c2 > 0:
        check_subset(vortices1, vortices2)
    if isinstance(grid, PeriodicGrid):
        b1 = periodic_background(grid, vortices1, sigma)
        b2 = periodic_background(grid, vortices2, sigma)
        mu = None
    else:
        b1 = planar_background(vortices1, mu, grid, far_field)
        b2 = planar_background(vortices2, mu, grid, far_field)
    u1, u2 = b1.u0, b2.u0
    return BackgroundSystem(
        first=b1,
        second=b2,
        h1m=np.exp(model.m * u1),
        H1=np.exp(u1 + u2),
        H2=np.exp(u1 - u2),
        G1=b1.g / model.lam1 + b2.g / model.lam2,
        G2=b1.g / model.lam1 - b2.g / model.lam2,
        mu=mu,
    )


def default_box_half_width(mu: float, decay_rate: float) -> float:
    """max(16 sqrt(mu), 8 / kappa): at least eight e-foldings to the edge."""
    return max(16.0 * math.sqrt(mu), 8.0 / decay_rate if decay_rate > 0 else 0.0)
