"""Post-solve checks of the integral identities, signs, decay and uniqueness.

Every check returns plain data with its tolerance recorded, so reports can
be serialised and re-verified later.  Relative errors use ``|rhs|`` as the
denominator, or 1 when the right-hand side vanishes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .grid import PlanarBox
from .model import FOUR_PI, Regime, guaranteed_sign_properties

PERIODIC_TOL = 5e-3
PLANAR_TOL = 2e-2
SIGN_TOL = 1e-6
UNIQUENESS_TOL = 1e-8
DECAY_MIN_R2 = 0.95
DECAY_RATE_TOL = 0.2
LOG_GROWTH_TOL = 0.05
RING_ANGLES = 64


@dataclass(frozen=True)
class Residual:
    """One identity ``value = rhs`` checked to a relative tolerance."""

    name: str
    value: float
    rhs: float
    rel_error: float
    tolerance: float
    passed: bool

    @classmethod
    def of(cls, name, value, rhs, tolerance, scale: float = 0.0):
        """``scale`` is the natural size of the terms; right-hand sides
        below ``1e-9 * scale`` count as zero and the error is absolute."""
        value, rhs = float(value), float(rhs)
        rel = abs(value - rhs) / (abs(rhs) if abs(rhs) > 1e-9 * scale and rhs != 0 else 1.0)
        return cls(name, value, rhs, rel, float(tolerance), bool(rel <= tolerance))

    def as_dict(self) -> dict:
        return {"value": self.value, "rhs": self.rhs, "rel_error": self.rel_error,
                "tolerance": self.tolerance, "pass": self.passed}


@dataclass(frozen=True)
class SignEntry:
    name: str
    max_value: float
    guaranteed: bool
    tolerance: float = SIGN_TOL

    @property
    def passed(self) -> bool:
        return (not self.guaranteed) or self.max_value <= self.tolerance

    def as_dict(self) -> dict:
        return {"max": self.max_value, "guaranteed": self.guaranteed,
                "tolerance": self.tolerance, "pass": self.passed}


@dataclass(frozen=True)
class DecayFit:
    """Exponential fit ``ln(ring average |f|) ~ c - rate * r``."""

    field: str
    rate: float
    r2: float
    window: tuple
    linear_rate: float | None
    asserted: bool

    @property
    def rel_to_linear(self) -> float | None:
        if not self.linear_rate:
            return None
        return abs(self.rate - self.linear_rate) / self.linear_rate

    @property
    def passed(self) -> bool:
        return (not self.asserted) or (self.rate > 0 and self.r2 > DECAY_MIN_R2)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        d["rel_to_linear"] = self.rel_to_linear
        d["pass"] = self.passed
        return d


@dataclass(frozen=True)
class LogGrowthFit:
    """Fit of ``ring average f ~ c + coefficient * ln r``."""

    field: str
    coefficient: float
    expected: float
    r2: float
    window: tuple
    tolerance: float = LOG_GROWTH_TOL

    @property
    def rel_error(self) -> float:
        scale = abs(self.expected) if self.expected != 0 else 1.0
        return abs(self.coefficient - self.expected) / scale

    @property
    def passed(self) -> bool:
        return self.rel_error <= self.tolerance

    def as_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        d["rel_error"] = self.rel_error
        d["pass"] = self.passed
        return d


@dataclass(frozen=True)
class ProbeResult:
    spread: float
    count: int
    seed: int
    tolerance: float = UNIQUENESS_TOL

    @property
    def passed(self) -> bool:
        return self.spread <= self.tolerance

    def as_dict(self) -> dict:
        return {"spread": self.spread, "count": self.count, "seed": self.seed,
                "tolerance": self.tolerance, "pass": self.passed}


@dataclass
class DiagnosticsReport:
    residuals: dict = field(default_factory=dict)
    signs: dict = field(default_factory=dict)
    decay: list = field(default_factory=list)
    log_growth: list = field(default_factory=list)
    uniqueness: ProbeResult | None = None
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        items = [*self.residuals.values(), *self.signs.values(), *self.decay, *self.log_growth]
        if self.uniqueness is not None:
            items.append(self.uniqueness)
        return all(it.passed for it in items)

    def failures(self) -> list[str]:
        out = [k for k, r in self.residuals.items() if not r.passed]
        out += [f"sign:{k}" for k, s in self.signs.items() if not s.passed]
        out += [f"decay:{d.field}" for d in self.decay if not d.passed]
        out += [f"log_growth:{g.field}" for g in self.log_growth if not g.passed]
        if self.uniqueness is not None and not self.uniqueness.passed:
            out.append("uniqueness")
        return out

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "residuals": {k: r.as_dict() for k, r in self.residuals.items()},
            "signs": {k: s.as_dict() for k, s in self.signs.items()},
            "decay": [d.as_dict() for d in self.decay],
            "log_growth": [g.as_dict() for g in self.log_growth],
            "uniqueness": None if self.uniqueness is None else self.uniqueness.as_dict(),
            "notes": list(self.notes),
        }


def _tolerance(sol) -> float:
    return PLANAR_TOL if sol.planar else PERIODIC_TOL


def _exp(x):
    return np.exp(np.minimum(x, 700.0))


# ---------------------------------------------------------------------------
# quantization


def _scalar_quantization(sol, tol):
    md, grid, u = sol.model, sol.grid, sol.u[0]
    N = sol.n_vortices[0]
    out = {}
    ea, eb = _exp(md.m * u), _exp(md.n * u)
    flux = grid.integrate(md.xi - md.m * md.a2 * ea - md.n * md.b2 * eb)
    out["flux"] = Residual.of("flux", flux, FOUR_PI * N / md.lam, tol)
    if md.on_vacuum():
        l1 = grid.integrate(md.m * md.a2 * np.abs(ea - 1.0) + md.n * md.b2 * np.abs(eb - 1.0))
        out["quantization"] = Residual.of("quantization", l1, FOUR_PI * N / md.lam, tol)
    return out


def _system_exps(md, u1, u2):
    return _exp(md.m * u1), _exp(u1 + u2), _exp(u1 - u2)


def log_growth_coefficients(sol) -> tuple[float, float]:
    """Coefficients ``c_j`` with ``v_j ~ c_j ln|x|`` at infinity.

    Zero except for planar degenerate recoveries, where part of the flux
    escapes to infinity through this logarithmic growth.
    """
    if not (sol.planar and sol.is_system):
        return (0.0, 0.0)
    md = sol.model
    N1, N2 = sol.n_vortices
    lam = md.lam1 + md.lam2
    if sol.reduction == "sum":
        c = 2 * (md.lam2 * N1 - md.lam1 * N2) / lam
        return (c, -c)
    if sol.reduction == "difference":
        c = 2 * (md.lam2 * N1 + md.lam1 * N2) / lam
        return (c, c)
    if sol.reduction == "decoupled":
        return (0.0, 2.0 * N2)
    return (0.0, 0.0)


def _system_quantization(sol, tol, notes):
    md, grid = sol.model, sol.grid
    u1, u2 = sol.u
    N1, N2 = sol.n_vortices
    ea, eb, ec = _system_exps(md, u1, u2)
    out = {}
    flux1 = grid.integrate(md.xi1 - md.m * md.a2 * ea - md.b2 * eb - md.c2 * ec)
    flux2 = grid.integrate(md.xi2 - md.b2 * eb + md.c2 * ec)
    c1, c2 = log_growth_coefficients(sol)
    if c1 or c2:
        notes.append("regular parts grow like c ln|x|; flux right sides reduced by 2 pi c / lam")
    scale = FOUR_PI * (abs(N1) / md.lam1 + abs(N2) / md.lam2)
    out["flux_1"] = Residual.of(
        "flux_1", flux1, (FOUR_PI * N1 - 2 * math.pi * c1) / md.lam1, tol, scale)
    out["flux_2"] = Residual.of(
        "flux_2", flux2, (FOUR_PI * N2 - 2 * math.pi * c2) / md.lam2, tol, scale)

    if not sol.planar:
        area = grid.area
        eta1 = 0.5 * (md.xi1 + md.xi2) * area - 2 * math.pi * (N1 / md.lam1 + N2 / md.lam2)
        eta2 = 0.5 * (md.xi1 - md.xi2) * area - 2 * math.pi * (N1 / md.lam1 - N2 / md.lam2)
        half = 0.5 * md.m * md.a2 * ea
        scale = 0.5 * (abs(md.xi1) + abs(md.xi2)) * area + 2 * math.pi * (N1 / md.lam1 + N2 / md.lam2)
        out["constraint_eta1"] = Residual.of(
            "constraint_eta1", grid.integrate(half + md.b2 * eb), eta1, tol, scale)
        out["constraint_eta2"] = Residual.of(
            "constraint_eta2", grid.integrate(half + md.c2 * ec), eta2, tol, scale)

    guar = guaranteed_sign_properties(md)
    if md.on_vacuum() and guar.strong and N1 > 0:
        qa = md.m * md.a2 * (1.0 - ea)
        q1 = grid.integrate(qa + 2 * md.b2 * (1.0 - eb))
        q2 = grid.integrate(qa + 2 * md.c2 * (1.0 - ec))
        out["q1"] = Residual.of("q1", q1, FOUR_PI * (N1 / md.lam1 + N2 / md.lam2), tol)
        out["q2"] = Residual.of("q2", q2, FOUR_PI * (N1 / md.lam1 - N2 / md.lam2), tol)
    else:
        notes.append("L1 quantization identities need vacuum constants and the strong sign "
                     "conditions; reporting the weak flux forms only")

    if sol.reduction in ("sum", "difference"):
        lam = md.lam1 + md.lam2
        if sol.reduction == "sum":
            coef, e, Nw = md.b2, eb, N1 + N2
            xi = md.b2 if sol.planar else (md.lam1 * md.xi1 + md.lam2 * md.xi2) / lam
        else:
            coef, e, Nw = md.c2, ec, N1 - N2
            xi = md.c2 if sol.planar else (md.lam1 * md.xi1 - md.lam2 * md.xi2) / lam
        out["w_identity"] = Residual.of(
            "w_identity", grid.integrate(xi - coef * e), FOUR_PI * Nw / lam, tol)
    return out


def quantization_check(sol) -> dict:
    """Named integral identities of a converged solution.

    Scalar: ``flux`` (integral of xi - m a2 e^{mu} - n b2 e^{nu} equals
    4 pi N / lam) and, for vacuum constants, the L1 form ``quantization``.
    System: weak fluxes ``flux_1``/``flux_2`` in every regime, the periodic
    constraints ``constraint_eta1``/``constraint_eta2``, the L1 identities
    ``q1``/``q2`` when the strong sign conditions hold, and ``w_identity``
    for sum/difference reductions.
    """
    return _quantization(sol, [])


def _quantization(sol, notes):
    tol = _tolerance(sol)
    if sol.is_system:
        return _system_quantization(sol, tol, notes)
    return _scalar_quantization(sol, tol)


# ---------------------------------------------------------------------------
# signs


def sign_check(sol) -> dict:
    """Maxima of the sign-relevant combinations over non-clamped nodes.

    Guaranteed combinations are asserted against ``SIGN_TOL``; the rest are
    reported only.
    """
    mask = ~np.asarray(sol.clamped)
    if not mask.any():
        return {}
    if not sol.is_system:
        md = sol.model
        # the maximum principle bounds u by the vacuum level when xi <= m a2 + n b2
        guaranteed = sol.n_vortices[0] > 0 and md.xi <= (md.m * md.a2 + md.n * md.b2) * (1 + 1e-9)
        return {"u": SignEntry("u", float(sol.u[0][mask].max()), bool(guaranteed))}

    md = sol.model
    u1, u2 = sol.u
    l1, l2 = md.lam1, md.lam2
    combos = {
        "u1": u1,
        "u2": u2,
        "u1+u2": u1 + u2,
        "u1-u2": u1 - u2,
        "u1/l1+u2/l2": u1 / l1 + u2 / l2,
        "u1/l1-u2/l2": u1 / l1 - u2 / l2,
    }
    guaranteed = set()
    if md.on_vacuum() and sol.n_vortices[0] > 0:
        if sol.regime in (Regime.FULL, Regime.AB, Regime.AC):
            guaranteed |= set(guaranteed_sign_properties(md).combinations)
    if sol.reduction == "sum" and (sol.planar or md.on_vacuum()):
        guaranteed.add("u1+u2")
    if sol.reduction == "difference" and (sol.planar or md.on_vacuum()):
        guaranteed.add("u1-u2")
    if sol.regime is Regime.A_ONLY and sol.n_vortices[0] > 0 and md.xi1 <= md.m * md.a2 * (1 + 1e-9):
        guaranteed.add("u1")
    return {k: SignEntry(k, float(f[mask].max()), k in guaranteed) for k, f in combos.items()}


# ---------------------------------------------------------------------------
# ring averages and fits


def vortex_centroid(sol):
    pts, wts = [], []
    for vs in sol.vortices:
        for p, k in vs:
            pts.append(p)
            wts.append(abs(k))
    if not pts:
        return (0.0, 0.0)
    c = np.average(np.asarray(pts, float), axis=0, weights=wts)
    return (float(c[0]), float(c[1]))


def ring_average(box: PlanarBox, f, radii, center=(0.0, 0.0), angles: int = RING_ANGLES):
    """Average of ``f`` over circles, sampled at ``angles`` points with bilinear interpolation."""
    radii = np.asarray(radii, float)
    th = 2 * math.pi * np.arange(angles) / angles
    x0, y0 = box.axes[0][0], box.axes[1][0]
    X = center[0] + radii[:, None] * np.cos(th)[None, :]
    Y = center[1] + radii[:, None] * np.sin(th)[None, :]
    idx = np.array([(X - x0) / box.hx, (Y - y0) / box.hy])
    vals = ndimage.map_coordinates(f, idx, order=1, mode="constant", cval=0.0)
    return vals.mean(axis=1)


def _window(box: PlanarBox, samples: int = 48):
    L = box.half_width
    return np.linspace(L / 3, 2 * L / 3, samples)


def _linfit(x, y, *extra):
    """Least squares ``y ~ s x + c (+ extra columns)``; returns ``(s, c, R^2)``."""
    A = np.vstack([x, np.ones_like(x), *extra]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(coef[0]), float(coef[1]), r2


def decay_fit(sol):
    """Exponential decay fits over the window ``[L/3, 2L/3]``; planar only.

    The scalar fit is asserted (rate > 0, R^2 > 0.95) and compared with the
    linearised rate.  System fits are informational.  Returns an empty list
    when there is nothing to fit.
    """
    if not sol.planar or sum(abs(n) for n in sol.n_vortices) == 0:
        return []
    box = sol.grid
    radii = _window(box)
    center = vortex_centroid(sol)
    if not sol.is_system:
        targets = [("u", np.abs(sol.u[0]), sol.model.decay_rate, True)]
    else:
        u1, u2 = sol.u
        if sol.reduction == "sum":
            targets = [("u1+u2", np.abs(u1 + u2), None, False)]
        elif sol.reduction == "difference":
            targets = [("u1-u2", np.abs(u1 - u2), None, False)]
        elif sol.reduction == "decoupled":
            targets = [("u1", np.abs(u1), None, False)]
        else:
            targets = [("|u1|+|u2|", np.abs(u1) + np.abs(u2), sol.model.decay_rate, False)]
    out = []
    for name, f, kappa, asserted in targets:
        avg = ring_average(box, f, radii, center)
        if not np.all(avg > 0):
            continue
        slope, _, r2 = _linfit(radii, np.log(avg))
        out.append(DecayFit(name, -slope, r2, (float(radii[0]), float(radii[-1])),
                            None if kappa is None else float(kappa), asserted))
    return out


def log_growth_fit(sol):
    """Fit the logarithmic growth of recovered ``v1``/``v2`` in planar sum/difference reductions."""
    if not (sol.planar and sol.is_system and sol.reduction in ("sum", "difference")):
        return []
    expected = log_growth_coefficients(sol)
    box = sol.grid
    radii = _window(box)
    center = vortex_centroid(sol)
    out = []
    for name, f, e in zip(("v1", "v2"), sol.v, expected):
        avg = ring_average(box, f, radii, center)
        # the mu-scale offset of the background decays like 1/r^2
        slope, _, r2 = _linfit(np.log(radii), avg, radii**-2.0)
        out.append(LogGrowthFit(name, slope, float(e), r2, (float(radii[0]), float(radii[-1]))))
    return out


# ---------------------------------------------------------------------------
# uniqueness


def uniqueness_probe(pipeline, *args, k: int = 5, seed: int = 0, starts=None, **kwargs) -> ProbeResult:
    """Solve ``k`` times from independent random initial states and measure the spread.

    ``pipeline`` is one of the ``solve_*`` functions, called as
    ``pipeline(*args, v0=..., diagnose=False, **kwargs)``.  Initial states are
    drawn from ``numpy.random.default_rng(seed)``; explicit ``starts`` (arrays)
    replace the random draws.  Any non-convergence propagates.
    """
    if starts is None:
        if k < 2:
            raise ValueError("uniqueness probe needs at least two starts")
        root = np.random.default_rng(seed)
        starts = [np.random.default_rng(s) for s in root.bit_generator.seed_seq.spawn(k)]
    sols = [pipeline(*args, v0=s, diagnose=False, **kwargs).u for s in starts]
    spread = 0.0
    for a, b in itertools.combinations(sols, 2):
        spread = max(spread, float(np.abs(a - b).max()))
    return ProbeResult(spread, len(sols), int(seed))


# ---------------------------------------------------------------------------


def run_all(sol) -> DiagnosticsReport:
    """Quantization, sign, decay and log-growth diagnostics for one solution."""
    report = DiagnosticsReport()
    report.residuals = _quantization(sol, report.notes)
    report.signs = sign_check(sol)
    report.decay = decay_fit(sol)
    report.log_growth = log_growth_fit(sol)
    if sol.planar and np.any(sol.clamped):
        report.notes.append(f"{int(np.sum(sol.clamped))} node(s) sit on a vortex and are "
                            "excluded from sign checks")
    return report
