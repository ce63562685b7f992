"""Energy functionals, their L2 gradients and Hessian-vector products.

Unknowns are stacked arrays of shape ``(k, nx, ny)`` with ``k = 1`` for
the scalar equation and ``k = 2`` for the system.  The gradient is the
L2 (quadrature-weighted) gradient, i.e. the Euler-Lagrange residual, so
``d/dt E(v + t w) = grid.inner(gradient(v), w)``.

Planar functionals use the split integrands ``e^l (e^t - 1 - t) + (e^l - 1) t``
which stay integrable on the whole plane; the periodic ones use the plain
exponentials with a linear term fixed by the vortex count.
"""

from __future__ import annotations

import enum

import numpy as np

from .background import BackgroundScalar, BackgroundSystem
from .grid import PeriodicGrid
from .model import (
    FOUR_PI,
    ConfigurationError,
    FeasibilityError,
    Regime,
    ScalarModel,
    SystemModel,
    classify_regime,
    feasibility_scalar_periodic,
    feasibility_system_periodic,
)

EXP_CLAMP = 40.0


class ProblemClass(str, enum.Enum):
    SCALAR_PERIODIC = "SCALAR_PERIODIC"
    SYSTEM_PERIODIC = "SYSTEM_PERIODIC"
    SCALAR_PLANAR = "SCALAR_PLANAR"
    SYSTEM_PLANAR = "SYSTEM_PLANAR"


def _exp(x):
    return np.exp(np.minimum(x, EXP_CLAMP))


def _split(logc, t):
    """e^l (e^t - 1 - t) + (e^l - 1) t, with e^(l+t) clamped."""
    el = np.exp(logc)
    tc = np.minimum(t, EXP_CLAMP - logc)
    return el * (np.expm1(tc) - t) + (el - 1.0) * t


class Problem:
    """Common evaluator interface; see :func:`build_problem`."""

    kind: ProblemClass
    arity: int

    def __init__(self, grid):
        self.grid = grid
        self.planar = not isinstance(grid, PeriodicGrid)

    @property
    def shape(self):
        return (self.arity,) + self.grid.shape

    def zeros(self):
        return np.zeros(self.shape)

    def inner(self, a, b) -> float:
        return self.grid.inner(a, b)

    def random_state(self, rng):
        """Gaussian white-noise field scaled to unit max-norm."""
        v = rng.standard_normal(self.shape)
        return v / np.abs(v).max()

    def _lap(self, f):
        return self.grid.apply_laplacian(f)

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != self.shape:
            if v.shape == self.grid.shape and self.arity == 1:
                return v[None]
            raise ValueError(f"state shape {v.shape} does not match {self.shape}")
        return v

    def overflow(self, v) -> bool:
        """True if any exponent argument exceeds the clamp at ``v``."""
        return any(np.max(a) > EXP_CLAMP for a in self._exponents(self._check(v)))

    def residual_norm(self, v) -> float:
        return float(np.abs(self.gradient(v)).max())


class ScalarProblem(Problem):
    """Scalar functional on a torus or a truncated plane.

    The model's two exponential terms ``a2 e^{m u}`` and ``b2 e^{n u}`` are
    kept generic, so reduced problems (for instance the sum variable of a
    degenerate system) reuse this class with a synthetic model.
    """

    arity = 1

    def __init__(self, grid, model: ScalarModel, background: BackgroundScalar, n_vortices=None):
        super().__init__(grid)
        self.kind = ProblemClass.SCALAR_PLANAR if self.planar else ProblemClass.SCALAR_PERIODIC
        self.model = model
        self.background = background
        self.n_vortices = background.n_vortices if n_vortices is None else n_vortices
        self.terms = [(p, c) for p, c in ((model.m, model.a2), (model.n, model.b2)) if c > 0]
        u0 = background.u0
        self._logs = [p * u0 for p, _ in self.terms]
        if self.planar:
            self.source = background.g - background.lift
            self.linear = 0.0
        else:
            self.source = None
            self.linear = model.lam * model.xi - FOUR_PI * self.n_vortices / grid.area

    def _exponents(self, v):
        return [lg + p * v[0] for lg, (p, _) in zip(self._logs, self.terms)]

    def energy(self, v) -> float:
        v = self._check(v)[0]
        lam = self.model.lam
        dens = -0.5 * v * self._lap(v)
        if self.planar:
            for lg, (p, c) in zip(self._logs, self.terms):
                dens += lam * c * _split(lg, p * v)
            dens += self.source * v
        else:
            for lg, (p, c) in zip(self._logs, self.terms):
                dens += lam * c * _exp(lg + p * v)
            dens -= self.linear * v
        return self.grid.integrate(dens)

    def gradient(self, v):
        v = self._check(v)[0]
        lam = self.model.lam
        out = -self._lap(v)
        for lg, (p, c) in zip(self._logs, self.terms):
            e = _exp(lg + p * v)
            out += lam * p * c * (e - 1.0 if self.planar else e)
        out += self.source if self.planar else -self.linear
        return out[None]

    def curvature(self, v):
        """Pointwise second derivative of the nonlinear density."""
        v = self._check(v)[0]
        lam = self.model.lam
        d = np.zeros(self.grid.shape)
        for lg, (p, c) in zip(self._logs, self.terms):
            d += lam * p * p * c * _exp(lg + p * v)
        return d

    def hessian_vector(self, v, w):
        w = self._check(w)[0]
        return (-self._lap(w) + self.curvature(v) * w)[None]

    def preconditioner(self, v):
        shift = max(float(self.curvature(v).mean()), 1e-12)

        def apply(r):
            return self.grid.shifted_inverse(r[0], 1.0, shift)[None]

        return apply


class SystemProblem(Problem):
    """Two-field functional with 1/lambda_j weights on the Dirichlet terms."""

    arity = 2

    def __init__(self, grid, model: SystemModel, background: BackgroundSystem):
        super().__init__(grid)
        self.kind = ProblemClass.SYSTEM_PLANAR if self.planar else ProblemClass.SYSTEM_PERIODIC
        self.model = model.effective()
        self.background = background
        u1, u2 = background.u0_1, background.u0_2
        self._la = self.model.m * u1
        self._lb = u1 + u2
        self._lc = u1 - u2
        self.N1 = background.first.n_vortices
        self.N2 = background.second.n_vortices
        md = self.model
        if self.planar:
            self.sources = (
                (background.g1 - background.first.lift) / md.lam1,
                (background.g2 - background.second.lift) / md.lam2,
            )
            self.linear = (0.0, 0.0)
        else:
            area = grid.area
            self.sources = None
            self.linear = (
                md.xi1 - FOUR_PI * self.N1 / (area * md.lam1),
                md.xi2 - FOUR_PI * self.N2 / (area * md.lam2),
            )

    def _exponents(self, v):
        m = self.model
        out = []
        if m.a2 > 0:
            out.append(self._la + m.m * v[0])
        if m.b2 > 0:
            out.append(self._lb + v[0] + v[1])
        if m.c2 > 0:
            out.append(self._lc + v[0] - v[1])
        return out

    def _exps(self, v):
        m = self.model
        ea = _exp(self._la + m.m * v[0]) if m.a2 > 0 else 0.0
        eb = _exp(self._lb + v[0] + v[1]) if m.b2 > 0 else 0.0
        ec = _exp(self._lc + v[0] - v[1]) if m.c2 > 0 else 0.0
        return ea, eb, ec

    def energy(self, v) -> float:
        v = self._check(v)
        m = self.model
        dens = -0.5 * (v[0] * self._lap(v[0]) / m.lam1 + v[1] * self._lap(v[1]) / m.lam2)
        s, d = v[0] + v[1], v[0] - v[1]
        if self.planar:
            if m.a2 > 0:
                dens += m.a2 * _split(self._la, m.m * v[0])
            if m.b2 > 0:
                dens += m.b2 * _split(self._lb, s)
            if m.c2 > 0:
                dens += m.c2 * _split(self._lc, d)
            dens += self.sources[0] * v[0] + self.sources[1] * v[1]
        else:
            ea, eb, ec = self._exps(v)
            dens += m.a2 * ea + m.b2 * eb + m.c2 * ec
            dens -= self.linear[0] * v[0] + self.linear[1] * v[1]
        return self.grid.integrate(dens)

    def gradient(self, v):
        v = self._check(v)
        m = self.model
        ea, eb, ec = self._exps(v)
        if self.planar:
            ea = ea - 1.0 if m.a2 > 0 else 0.0
            eb = eb - 1.0 if m.b2 > 0 else 0.0
            ec = ec - 1.0 if m.c2 > 0 else 0.0
        g1 = -self._lap(v[0]) / m.lam1 + m.m * m.a2 * ea + m.b2 * eb + m.c2 * ec
        g2 = -self._lap(v[1]) / m.lam2 + m.b2 * eb - m.c2 * ec
        if self.planar:
            g1 = g1 + self.sources[0]
            g2 = g2 + self.sources[1]
        else:
            g1 = g1 - self.linear[0]
            g2 = g2 - self.linear[1]
        return np.stack([g1, g2])

    def curvature(self, v):
        """Pointwise 2x2 Hessian blocks (d11, d12, d22) of the nonlinear density."""
        v = self._check(v)
        m = self.model
        ea, eb, ec = self._exps(v)
        zero = np.zeros(self.grid.shape)
        d11 = zero + m.m**2 * m.a2 * ea + m.b2 * eb + m.c2 * ec
        d12 = zero + m.b2 * eb - m.c2 * ec
        d22 = zero + m.b2 * eb + m.c2 * ec
        return d11, d12, d22

    def hessian_vector(self, v, w):
        w = self._check(w)
        m = self.model
        d11, d12, d22 = self.curvature(v)
        h1 = -self._lap(w[0]) / m.lam1 + d11 * w[0] + d12 * w[1]
        h2 = -self._lap(w[1]) / m.lam2 + d12 * w[0] + d22 * w[1]
        return np.stack([h1, h2])

    def preconditioner(self, v):
        """Mode-wise 2x2 solve of the constant-coefficient Hessian."""
        m = self.model
        c11, c12, c22 = (float(d.mean()) for d in self.curvature(v))
        reg = 1e-12 * max(1.0, c11, c22)
        sym = self.grid.symbol
        a11 = sym / m.lam1 + c11 + reg
        a22 = sym / m.lam2 + c22 + reg
        det = a11 * a22 - c12 * c12
        grid = self.grid

        def apply(r):
            R1, R2 = grid.transform(r[0]), grid.transform(r[1])
            Z1 = (a22 * R1 - c12 * R2) / det
            Z2 = (a11 * R2 - c12 * R1) / det
            return np.stack([grid.inverse_transform(Z1), grid.inverse_transform(Z2)])

        return apply


def build_problem(kind, model, background, grid=None, check: bool = True) -> Problem:
    """Checked factory for the four problem classes.

    Periodic classes require a feasible configuration, planar classes the
    vacuum constraint, and system classes a regime the two-field functional
    can carry (at least two nonzero constants for the plane, and not a
    single-constant regime on the torus).

    Raises
    ------
    FeasibilityError
        Periodic configuration without a solution.
    ConfigurationError
        Vacuum violated or regime incompatible with the class.
    """
    kind = ProblemClass(kind)
    grid = background.grid if grid is None else grid
    planar = kind in (ProblemClass.SCALAR_PLANAR, ProblemClass.SYSTEM_PLANAR)
    if planar == isinstance(grid, PeriodicGrid):
        raise ConfigurationError(f"{kind.value} does not match a {grid.kind} grid")
    if kind in (ProblemClass.SCALAR_PERIODIC, ProblemClass.SCALAR_PLANAR):
        if check:
            if planar and not model.on_vacuum():
                raise ConfigurationError(
                    f"planar solve needs m*a2 + n*b2 = xi (residual {model.vacuum_residual:.3e})")
            if not planar:
                verdict = feasibility_scalar_periodic(model, background.n_vortices, grid.area)
                if not verdict.feasible:
                    raise FeasibilityError(verdict)
        return ScalarProblem(grid, model, background)

    regime = classify_regime(model)
    if check:
        if regime in (Regime.A_ONLY, Regime.B_ONLY, Regime.C_ONLY, Regime.NONE):
            raise ConfigurationError(
                f"regime {regime.value} is handled by a reduced scalar problem, not {kind.value}")
        if planar and not model.on_vacuum():
            raise ConfigurationError(
                "planar system needs m*a2 + b2 + c2 = xi1 and b2 - c2 = xi2 "
                f"(residuals {model.vacuum_residuals})")
        if not planar:
            verdict = feasibility_system_periodic(
                model, background.first.n_vortices, background.second.n_vortices, grid.area, regime)
            if not verdict.feasible:
                raise FeasibilityError(verdict)
    return SystemProblem(grid, model, background)

