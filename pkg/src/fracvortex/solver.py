"""Damped Newton-Krylov minimisation and the end-to-end solve pipelines.

All four functionals are strictly convex, so their unique critical point is
reached by Newton's method with an Armijo line search.  Newton directions
come from preconditioned conjugate gradients on the Hessian-vector product;
the preconditioner inverts the constant-coefficient part of the Hessian
exactly (Fourier on the torus, sine transform on the box).

Degenerate regimes, where only one of the constants A, B, C survives, are
reduced to a scalar problem and the two fields are recovered afterwards.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as _diag
from .background import (
    BackgroundScalar,
    check_subset,
    composite_fields,
    log_mu,
    periodic_background,
    planar_background,
)
from .energy import ProblemClass, ScalarProblem, build_problem
from .grid import PeriodicGrid, PlanarBox
from .model import (
    ConfigurationError,
    FeasibilityError,
    FeasibilityVerdict,
    Regime,
    ScalarModel,
    SystemModel,
    VortexSet,
    classify_regime,
    feasibility_scalar_periodic,
    feasibility_system_periodic,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    grad_tol: float = 1e-10
    max_newton: int = 50
    cg_tol: float = 1e-4
    cg_maxiter: int = 500
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60

    def __post_init__(self):
        if not 0 < self.grad_tol < 1:
            raise ValueError("grad_tol must lie in (0, 1)")
        if self.max_newton < 0 or self.cg_maxiter < 1 or self.max_backtracks < 1:
            raise ValueError("iteration limits must be positive")
        if not (0 < self.cg_tol < 1 and 0 < self.armijo < 1 and 0 < self.backtrack < 1):
            raise ValueError("cg_tol, armijo and backtrack must lie in (0, 1)")


@dataclass
class SolveReport:
    status: str = "running"
    iterations: int = 0
    cg_iterations: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    step_lengths: list = field(default_factory=list)
    clamped: bool = False
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def energy(self) -> float:
        return self.energies[-1] if self.energies else float("nan")

    @property
    def grad_norm(self) -> float:
        return self.grad_norms[-1] if self.grad_norms else float("nan")

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "cg_iterations": list(self.cg_iterations),
            "energy": self.energy,
            "grad_norm": self.grad_norm,
            "energies": list(self.energies),
            "grad_norms": list(self.grad_norms),
            "clamped": self.clamped,
            "message": self.message,
        }


class ConvergenceError(RuntimeError):
    """Minimisation stopped without meeting the gradient tolerance."""

    def __init__(self, report: SolveReport, state=None, solution=None):
        self.report = report
        self.state = state
        self.solution = solution
        super().__init__(f"{report.status}: {report.message} "
                         f"(|grad|_max = {report.grad_norm:.3e} after {report.iterations} steps)")


def pcg(apply_a, b, precond, inner, rtol, maxiter):
    """Preconditioned conjugate gradients; returns ``(x, iterations)``.

    Stops when the residual norm falls below ``rtol`` times the initial one,
    or on loss of positive curvature (returning the last iterate).
    """
    x = np.zeros_like(b)
    r = b.copy()
    z = precond(r)
    p = z.copy()
    rz = inner(r, z)
    target = rtol * math.sqrt(max(inner(r, r), 0.0))
    for it in range(1, maxiter + 1):
        ap = apply_a(p)
        curv = inner(p, ap)
        if curv <= 0:
            return (x if it > 1 else p), it
        alpha = rz / curv
        x += alpha * p
        r -= alpha * ap
        if math.sqrt(max(inner(r, r), 0.0)) <= target:
            return x, it
        z = precond(r)
        rz_new = inner(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, maxiter


def minimize(problem, v0=None, options: SolverOptions | None = None):
    """Damped Newton-Krylov minimisation of a convex functional.

    Parameters
    ----------
    problem : Problem
        Evaluator bundle from :func:`fracvortex.energy.build_problem`.
    v0 : array, optional
        Initial state (zeros by default).
    options : SolverOptions, optional

    Returns
    -------
    v : ndarray
        Final iterate, shape ``problem.shape``.
    report : SolveReport
        ``report.status`` is ``"converged"``, ``"max_iterations"`` or
        ``"line_search_failed"``; the caller decides whether to raise.
    """
    opts = options or SolverOptions()
    v = problem.zeros() if v0 is None else problem._check(np.array(v0, dtype=float, copy=True))
    report = SolveReport()
    E = problem.energy(v)
    g = problem.gradient(v)
    gnorm = float(np.abs(g).max())
    report.energies.append(E)
    report.grad_norms.append(gnorm)
    report.clamped = problem.overflow(v)
    eps = np.finfo(float).eps

    for it in range(opts.max_newton + 1):
        if gnorm <= opts.grad_tol:
            report.status = "converged"
            break
        if it == opts.max_newton:
            report.status = "max_iterations"
            report.message = f"gradient tolerance {opts.grad_tol:g} not met"
            break
        d, ncg = pcg(
            lambda w: problem.hessian_vector(v, w),
            -g,
            problem.preconditioner(v),
            problem.inner,
            opts.cg_tol,
            opts.cg_maxiter,
        )
        report.cg_iterations.append(ncg)
        slope = problem.inner(g, d)
        if not slope < 0:
            d = -problem.preconditioner(v)(g)
            slope = problem.inner(g, d)
        t = 1.0
        # energy differences below this are rounding noise
        noise = 64 * eps * (abs(E) + problem.grid.integrate(np.abs(g * v)) + 1.0)
        for _ in range(opts.max_backtracks):
            trial = v + t * d
            E_new = problem.energy(trial)
            if np.isfinite(E_new) and E_new <= E + opts.armijo * t * slope + noise:
                break
            t *= opts.backtrack
        else:
            report.status = "line_search_failed"
            report.message = "no acceptable step along the Newton direction"
            break
        g_new = problem.gradient(trial)
        gnorm_new = float(np.abs(g_new).max())
        if E_new > E and gnorm_new >= gnorm:
            report.status = "line_search_failed"
            report.message = "stagnated at rounding level"
            break
        v, E, g, gnorm = trial, E_new, g_new, gnorm_new
        report.iterations += 1
        report.step_lengths.append(t)
        report.energies.append(E)
        report.grad_norms.append(gnorm)
        report.clamped |= problem.overflow(v)
        logger.debug("newton %d: E=%.15g |g|=%.3e t=%g cg=%d", it, E, gnorm, t, ncg)
    return v, report


# ---------------------------------------------------------------------------
# solutions


@dataclass
class Solution:
    """Converged fields plus everything needed to audit them.

    ``u`` and ``v`` have shape ``(k, nx, ny)``; ``u = u0 + v``.  ``inner``
    is the state the minimiser actually worked on (``v`` itself, or the
    reduced sum/difference variable ``w`` in degenerate regimes).
    """

    kind: ProblemClass
    grid: object
    model: object
    vortices: tuple
    u: np.ndarray
    v: np.ndarray
    background: object
    report: SolveReport
    problem: object
    inner: np.ndarray
    regime: Regime | None = None
    verdict: FeasibilityVerdict | None = None
    reduction: str | None = None
    reduced: dict = field(default_factory=dict)
    diagnostics: object = None

    @property
    def is_system(self) -> bool:
        return self.kind in (ProblemClass.SYSTEM_PERIODIC, ProblemClass.SYSTEM_PLANAR)

    @property
    def planar(self) -> bool:
        return isinstance(self.grid, PlanarBox)

    @property
    def clamped(self):
        bg = self.background
        return bg.clamped

    @property
    def n_vortices(self) -> tuple:
        return tuple(vs.total for vs in self.vortices)


def _initial(problem, v0):
    if v0 is None:
        return None
    if isinstance(v0, np.random.Generator):
        return problem.random_state(v0)
    return v0


def _run(problem, v0, options):
    v, report = minimize(problem, _initial(problem, v0), options)
    if not report.converged:
        raise ConvergenceError(report, v)
    return v, report


def _finish(sol: Solution, diagnose: bool) -> Solution:
    if diagnose:
        sol.diagnostics = _diag.run_all(sol)
    return sol


# ---------------------------------------------------------------------------
# scalar pipelines


def solve_scalar_periodic(model: ScalarModel, vortices: VortexSet, grid: PeriodicGrid,
                          options: SolverOptions | None = None, sigma=None, v0=None,
                          diagnose: bool = True) -> Solution:
    """Periodic scalar solve: feasibility, background, minimisation, diagnostics.

    Raises
    ------
    FeasibilityError
        If 4*pi*N/lam >= xi*|Omega|; no field is computed.
    ConvergenceError
        If Newton stops short of the gradient tolerance.
    """
    verdict = feasibility_scalar_periodic(model, vortices.total, grid.area)
    if not verdict.feasible:
        raise FeasibilityError(verdict)
    bg = periodic_background(grid, vortices, sigma)
    problem = build_problem(ProblemClass.SCALAR_PERIODIC, model, bg, grid)
    v, report = _run(problem, v0, options)
    sol = Solution(ProblemClass.SCALAR_PERIODIC, grid, model, (bg.vortices,), bg.u0[None] + v, v,
                   bg, report, problem, v, verdict=verdict)
    return _finish(sol, diagnose)


def solve_scalar_planar(model: ScalarModel, vortices: VortexSet, box: PlanarBox, mu: float = 1.0,
                        options: SolverOptions | None = None, v0=None, far_field: str = "vacuum",
                        diagnose: bool = True) -> Solution:
    """Planar scalar solve on a truncated box with u -> 0 imposed at the edge."""
    if not model.on_vacuum():
        raise ConfigurationError(
            f"planar solve needs m*a2 + n*b2 = xi (residual {model.vacuum_residual:.3e})")
    bg = planar_background(vortices, mu, box, far_field)
    problem = build_problem(ProblemClass.SCALAR_PLANAR, model, bg, box)
    v, report = _run(problem, v0, options)
    sol = Solution(ProblemClass.SCALAR_PLANAR, box, model, (vortices,), bg.u0[None] + v, v, bg,
                   report, problem, v)
    return _finish(sol, diagnose)


# ---------------------------------------------------------------------------
# system pipelines


def _reduced_periodic(model: SystemModel, regime: Regime, bgsys, grid):
    """Scalar problem for the sum (B only) or difference (C only) variable."""
    lam = model.lam1 + model.lam2
    if regime is Regime.B_ONLY:
        xi = (model.lam1 * model.xi1 + model.lam2 * model.xi2) / lam
        coef, u0, g, nv = model.b2, bgsys.u0_1 + bgsys.u0_2, bgsys.g1 + bgsys.g2, \
            bgsys.first.n_vortices + bgsys.second.n_vortices
    else:
        xi = (model.lam1 * model.xi1 - model.lam2 * model.xi2) / lam
        coef, u0, g, nv = model.c2, bgsys.u0_1 - bgsys.u0_2, bgsys.g1 - bgsys.g2, \
            bgsys.first.n_vortices - bgsys.second.n_vortices
    reduced = ScalarModel(lam, xi, 1.0, 0.0, coef, 0.0)
    vs = bgsys.first.vortices.union(bgsys.second.vortices) if regime is Regime.B_ONLY \
        else bgsys.first.vortices.difference(bgsys.second.vortices)
    bg = BackgroundScalar(grid, vs, u0, g, np.zeros(grid.shape), np.zeros(grid.shape, bool))
    return ScalarProblem(grid, reduced, bg, n_vortices=nv), reduced, bg


def solve_system_periodic(model: SystemModel, vortices1: VortexSet, vortices2: VortexSet,
                          grid: PeriodicGrid, options: SolverOptions | None = None, sigma=None,
                          v0=None, diagnose: bool = True) -> Solution:
    """Periodic two-field solve with dispatch on the degeneracy regime.

    FULL/AB/AC minimise the two-field functional (terms with a vanishing
    constant dropped).  A_ONLY solves the decoupled first equation.  B_ONLY
    and C_ONLY solve for ``w = v1 +- v2`` and recover
    ``v1 = lam1 w / (lam1 + lam2)``, ``v2 = +-lam2 w / (lam1 + lam2)``
    (the free additive constant is fixed to zero).
    """
    model = model.effective()
    regime = classify_regime(model)
    N1, N2 = vortices1.total, vortices2.total
    verdict = feasibility_system_periodic(model, N1, N2, grid.area, regime)
    if not verdict.feasible:
        raise FeasibilityError(verdict)
    bgsys = composite_fields(model, vortices1, vortices2, grid, sigma=sigma)
    vsets = (bgsys.first.vortices, bgsys.second.vortices)
    kind = ProblemClass.SYSTEM_PERIODIC
    u0 = np.stack([bgsys.u0_1, bgsys.u0_2])

    if regime in (Regime.FULL, Regime.AB, Regime.AC):
        problem = build_problem(kind, model, bgsys, grid)
        v, report = _run(problem, v0, options)
        sol = Solution(kind, grid, model, vsets, u0 + v, v, bgsys, report, problem, v,
                       regime=regime, verdict=verdict)
        return _finish(sol, diagnose)

    if regime is Regime.A_ONLY:
        reduced = ScalarModel(model.lam1, model.xi1, model.m, 0.0, model.a2, 0.0)
        problem = ScalarProblem(grid, reduced, bgsys.first)
        w, report = _run(problem, v0, options)
        v = np.stack([w[0], np.zeros(grid.shape)])
        sol = Solution(kind, grid, model, vsets, u0 + v, v, bgsys, report, problem, w,
                       regime=regime, verdict=verdict, reduction="decoupled",
                       reduced={"model": reduced})
        return _finish(sol, diagnose)

    problem, reduced, bg = _reduced_periodic(model, regime, bgsys, grid)
    w, report = _run(problem, v0, options)
    lam = model.lam1 + model.lam2
    sign = 1.0 if regime is Regime.B_ONLY else -1.0
    v = np.stack([model.lam1 * w[0] / lam, sign * model.lam2 * w[0] / lam])
    sol = Solution(kind, grid, model, vsets, u0 + v, v, bgsys, report, problem, w,
                   regime=regime, verdict=verdict,
                   reduction="sum" if regime is Regime.B_ONLY else "difference",
                   reduced={"model": reduced, "w": w[0], "background": bg})
    return _finish(sol, diagnose)


def solve_system_planar(model: SystemModel, vortices1: VortexSet, vortices2: VortexSet,
                        box: PlanarBox, mu: float = 1.0, options: SolverOptions | None = None,
                        v0=None, far_field: str = "vacuum", diagnose: bool = True) -> Solution:
    """Planar two-field solve with dispatch on the degeneracy regime.

    With at least two nonzero constants the two-field functional is
    minimised directly.  A_ONLY solves the first field as an Abelian
    equation and sets ``u2 = sum ln|x - p|^2``.  B_ONLY/C_ONLY solve the
    sum/difference variable ``w`` and recover ``v1 = (lam1 w + q)/(lam1+lam2)``
    with ``q`` built from ``ln(mu + |x - p|^2)`` terms, so ``v1, v2`` grow
    logarithmically.
    """
    model = model.effective()
    regime = classify_regime(model)
    if regime is Regime.NONE:
        raise ConfigurationError("all of |A|^2, |B|^2, |C|^2 vanish; the system is empty")
    if not model.on_vacuum():
        raise ConfigurationError(
            "planar system needs m*a2 + b2 + c2 = xi1 and b2 - c2 = xi2 "
            f"(residuals {model.vacuum_residuals})")
    bgsys = composite_fields(model, vortices1, vortices2, box, mu=mu, far_field=far_field)
    kind = ProblemClass.SYSTEM_PLANAR
    vsets = (vortices1, vortices2)
    u0 = np.stack([bgsys.u0_1, bgsys.u0_2])

    if regime in (Regime.FULL, Regime.AB, Regime.AC):
        problem = build_problem(kind, model, bgsys, box)
        v, report = _run(problem, v0, options)
        sol = Solution(kind, box, model, vsets, u0 + v, v, bgsys, report, problem, v,
                       regime=regime)
        return _finish(sol, diagnose)

    X, Y = box.coords()
    if regime is Regime.A_ONLY:
        reduced = ScalarModel(model.lam1, model.xi1, model.m, 0.0, model.a2, 0.0)
        problem = ScalarProblem(box, reduced, bgsys.first)
        w, report = _run(problem, v0, options)
        # u2 = sum ln|x-p|^2 exactly, i.e. v2 = sum ln(mu + |x-p|^2)
        v = np.stack([w[0], log_mu(vortices2, mu, X, Y)])
        sol = Solution(kind, box, model, vsets, u0 + v, v, bgsys, report, problem, w,
                       regime=regime, reduction="decoupled", reduced={"model": reduced})
        return _finish(sol, diagnose)

    lam = model.lam1 + model.lam2
    if regime is Regime.B_ONLY:
        vs = vortices1.union(vortices2)
        coef = model.b2
        q = model.lam2 * log_mu(vortices1, mu, X, Y) - model.lam1 * log_mu(vortices2, mu, X, Y)
    else:
        check_subset(vortices1, vortices2)
        vs = vortices1.difference(vortices2)
        coef = model.c2
        q = model.lam2 * log_mu(vortices1, mu, X, Y) + model.lam1 * log_mu(vortices2, mu, X, Y)
    reduced = ScalarModel(lam, coef, 1.0, 0.0, coef, 0.0)
    bg = planar_background(vs, mu, box, far_field)
    problem = ScalarProblem(box, reduced, bg)
    w, report = _run(problem, v0, options)
    if regime is Regime.B_ONLY:
        v = np.stack([(model.lam1 * w[0] + q) / lam, (model.lam2 * w[0] - q) / lam])
    else:
        v = np.stack([(model.lam1 * w[0] + q) / lam, (q - model.lam2 * w[0]) / lam])
    sol = Solution(kind, box, model, vsets, u0 + v, v, bgsys, report, problem, w,
                   regime=regime, reduction="sum" if regime is Regime.B_ONLY else "difference",
                   reduced={"model": reduced, "w": w[0], "background": bg, "q": q})
    return _finish(sol, diagnose)
