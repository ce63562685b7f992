"""Parameter types, vortex data and the existence conditions.

Everything here is plain arithmetic on the coupling constants and vortex
counts; no fields are involved.  The periodic existence conditions are
sharp (necessary and sufficient), so the verdicts produced here decide
whether a periodic solve is attempted at all.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

FOUR_PI = 4.0 * math.pi

#: coefficient counts as zero iff value <= ZERO_TOL * max(a2, b2, c2, 1)
ZERO_TOL = 1e-12
#: relative tolerance for the degenerate equality constraints
EQUALITY_RTOL = 1e-9
#: slack below NEAR_CRITICAL * xi * area is flagged as near-critical
NEAR_CRITICAL = 1e-6


class ConfigurationError(ValueError):
    """Inconsistent model or vortex data (vacuum, subset, placement)."""


def _modulus2(value) -> float:
    # accepts real, complex, (re, im) pairs and strings like "1+2j"
    if isinstance(value, str):
        value = complex(value.replace(" ", ""))
    elif isinstance(value, (tuple, list)):
        if len(value) != 2:
            raise ConfigurationError(f"complex amplitude must be [re, im], got {value!r}")
        value = complex(float(value[0]), float(value[1]))
    return float(abs(complex(value)) ** 2)


# ---------------------------------------------------------------------------
# vortex data


@dataclass(frozen=True)
class VortexSet:
    """Prescribed vortex locations with integer multiplicities.

    Coincident points are merged on construction by summing their
    multiplicities, so two sets describing the same divisor compare equal.
    """

    points: tuple[tuple[float, float], ...] = ()
    multiplicities: tuple[int, ...] = ()

    def __post_init__(self):
        pts = [(float(x), float(y)) for x, y in self.points]
        mults = [int(k) for k in self.multiplicities] if self.multiplicities else [1] * len(pts)
        if len(mults) != len(pts):
            raise ConfigurationError("one multiplicity per vortex point is required")
        if any(k < 1 for k in mults):
            raise ConfigurationError("vortex multiplicities must be >= 1")
        merged: dict[tuple[float, float], int] = {}
        for p, k in zip(pts, mults):
            merged[p] = merged.get(p, 0) + k
        object.__setattr__(self, "points", tuple(merged))
        object.__setattr__(self, "multiplicities", tuple(merged.values()))

    @classmethod
    def from_list(cls, entries: Iterable[Sequence[float]]) -> "VortexSet":
        """Build from ``[x, y]`` or ``[x, y, multiplicity]`` entries."""
        pts, mults = [], []
        for e in entries:
            if len(e) not in (2, 3):
                raise ConfigurationError(f"vortex entry must be [x, y] or [x, y, k], got {e!r}")
            pts.append((e[0], e[1]))
            k = e[2] if len(e) == 3 else 1
            if int(k) != k:
                raise ConfigurationError(f"vortex multiplicity must be an integer, got {k!r}")
            mults.append(int(k))
        return cls(tuple(pts), tuple(mults))

    def to_list(self) -> list[list[float]]:
        return [[x, y, k] for (x, y), k in zip(self.points, self.multiplicities)]

    @property
    def total(self) -> int:
        return int(sum(self.multiplicities))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(zip(self.points, self.multiplicities))

    def reduced(self, lx: float, ly: float) -> "VortexSet":
        """Fold the points back into the cell ``[0, lx) x [0, ly)``."""
        pts = tuple((x % lx, y % ly) for x, y in self.points)
        return VortexSet(pts, self.multiplicities)

    def count(self, point) -> int:
        return dict(zip(self.points, self.multiplicities)).get(tuple(point), 0)

    def missing_from(self, other: "VortexSet"):
        """First point of ``self`` not covered (with multiplicity) by ``other``, else None."""
        have = dict(zip(other.points, other.multiplicities))
        for p, k in self:
            if have.get(p, 0) < k:
                return p
        return None

    def union(self, other: "VortexSet") -> "VortexSet":
        return VortexSet(self.points + other.points, self.multiplicities + other.multiplicities)

    def difference(self, other: "VortexSet") -> "VortexSet":
        """Multiset difference; ``other`` must be contained in ``self``."""
        bad = other.missing_from(self)
        if bad is not None:
            raise ConfigurationError(f"vortex {bad} is not contained in the first vortex set")
        have = dict(zip(self.points, self.multiplicities))
        for p, k in other:
            have[p] -= k
        kept = [(p, k) for p, k in have.items() if k > 0]
        return VortexSet(tuple(p for p, _ in kept), tuple(k for _, k in kept))

    def translated(self, dx: float, dy: float) -> "VortexSet":
        return VortexSet(tuple((x + dx, y + dy) for x, y in self.points), self.multiplicities)

    def as_arrays(self):
        if not self.points:
            return np.zeros((0, 2)), np.zeros(0, dtype=int)
        return np.asarray(self.points, dtype=float), np.asarray(self.multiplicities, dtype=int)


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class ScalarModel:
    """Constants of the scalar master equation.

    ``lam`` is the coupling, ``xi`` the vacuum level, ``m``/``n`` the two
    exponents and ``a2``/``b2`` the squared moduli of the vacuum amplitudes.
    """

    lam: float
    xi: float
    m: float = 1.0
    n: float = 1.0
    a2: float = 0.5
    b2: float = 0.5

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigurationError(f"lambda must be positive, got {self.lam}")
        if not self.xi > 0:
            raise ConfigurationError(f"xi must be positive, got {self.xi}")
        if self.m < 0 or self.n < 0:
            raise ConfigurationError("exponents m, n must be nonnegative")
        if self.a2 < 0 or self.b2 < 0:
            raise ConfigurationError("|A|^2 and |B|^2 must be nonnegative")
        if not (self.a2 + self.b2 > 0 and self.m * self.a2 + self.n * self.b2 > 0):
            raise ConfigurationError("need a2 + b2 > 0 and m*a2 + n*b2 > 0")

    @classmethod
    def from_amplitudes(cls, lam, xi, m, n, A, B) -> "ScalarModel":
        return cls(lam, xi, m, n, _modulus2(A), _modulus2(B))

    @classmethod
    def vacuum(cls, lam, m=1.0, n=1.0, a2=0.5, b2=0.5) -> "ScalarModel":
        """Model with xi placed on the vacuum manifold m*a2 + n*b2 = xi."""
        return cls(lam, m * a2 + n * b2, m, n, a2, b2)

    @property
    def vacuum_residual(self) -> float:
        return self.m * self.a2 + self.n * self.b2 - self.xi

    def on_vacuum(self, rtol: float = EQUALITY_RTOL) -> bool:
        return abs(self.vacuum_residual) <= rtol * max(self.xi, 1.0)

    @property
    def decay_rate(self) -> float:
        """Linearized decay rate sqrt(lam * (m^2 a2 + n^2 b2)) at the vacuum."""
        return math.sqrt(self.lam * (self.m**2 * self.a2 + self.n**2 * self.b2))


@dataclass(frozen=True)
class SystemModel:
    """Constants of the two-field master system.

    ``xi2`` may take either sign (it equals b2 - c2 on the vacuum manifold).
    """

    lam1: float
    lam2: float
    xi1: float
    xi2: float
    m: int = 1
    a2: float = 0.0
    b2: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        if not (self.lam1 > 0 and self.lam2 > 0):
            raise ConfigurationError("lambda1 and lambda2 must be positive")
        if not self.xi1 > 0:
            raise ConfigurationError(f"xi1 must be positive, got {self.xi1}")
        if int(self.m) != self.m or self.m < 1:
            raise ConfigurationError(f"m must be a positive integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))
        if min(self.a2, self.b2, self.c2) < 0:
            raise ConfigurationError("squared moduli must be nonnegative")

    @classmethod
    def from_amplitudes(cls, lam1, lam2, xi1, xi2, m, A, B, C) -> "SystemModel":
        return cls(lam1, lam2, xi1, xi2, m, _modulus2(A), _modulus2(B), _modulus2(C))

    @classmethod
    def vacuum(cls, lam1, lam2, m=1, a2=0.0, b2=0.0, c2=0.0) -> "SystemModel":
        """Model whose xi1, xi2 sit on the vacuum manifold."""
        return cls(lam1, lam2, m * a2 + b2 + c2, b2 - c2, m, a2, b2, c2)

    @property
    def vacuum_residuals(self) -> tuple[float, float]:
        return (self.m * self.a2 + self.b2 + self.c2 - self.xi1, self.b2 - self.c2 - self.xi2)

    def on_vacuum(self, rtol: float = EQUALITY_RTOL) -> bool:
        r1, r2 = self.vacuum_residuals
        return max(abs(r1), abs(r2)) <= rtol * max(self.xi1, 1.0)

    def effective(self) -> "SystemModel":
        """Copy with sub-threshold coefficients set exactly to zero."""
        thr = ZERO_TOL * max(self.a2, self.b2, self.c2, 1.0)
        return replace(
            self,
            a2=self.a2 if self.a2 > thr else 0.0,
            b2=self.b2 if self.b2 > thr else 0.0,
            c2=self.c2 if self.c2 > thr else 0.0,
        )

    @property
    def decay_rate(self) -> float:
        """Smallest linearized decay rate of the coupled system at the vacuum."""
        jac = np.array(
            [
                [self.m**2 * self.a2 + self.b2 + self.c2, self.b2 - self.c2],
                [self.b2 - self.c2, self.b2 + self.c2],
            ]
        )
        # diag(lam) @ jac is similar to a symmetric PSD matrix
        s = np.sqrt([self.lam1, self.lam2])
        ev = np.linalg.eigvalsh(s[:, None] * jac * s[None, :])
        return float(math.sqrt(max(ev.min(), 0.0)))


# ---------------------------------------------------------------------------
# regimes


class Regime(str, enum.Enum):
    FULL = "FULL"
    AB = "AB"
    AC = "AC"
    A_ONLY = "A_ONLY"
    B_ONLY = "B_ONLY"
    C_ONLY = "C_ONLY"
    NONE = "NONE"


def classify_regime(model: SystemModel) -> Regime:
    thr = ZERO_TOL * max(model.a2, model.b2, model.c2, 1.0)
    a, b, c = model.a2 > thr, model.b2 > thr, model.c2 > thr
    if b and c:
        return Regime.FULL
    if a and b:
        return Regime.AB
    if a and c:
        return Regime.AC
    if a:
        return Regime.A_ONLY
    if b:
        return Regime.B_ONLY
    if c:
        return Regime.C_ONLY
    return Regime.NONE


# ---------------------------------------------------------------------------
# feasibility


class FeasibilityError(ValueError):
    """Raised when a periodic configuration admits no solution."""

    def __init__(self, verdict: "FeasibilityVerdict"):
        self.verdict = verdict
        super().__init__(verdict.summary())


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    violated: tuple[str, ...]
    slacks: dict = field(default_factory=dict)
    near_critical: tuple[str, ...] = ()
    messages: tuple[str, ...] = ()
    regime: Regime | None = None

    def summary(self) -> str:
        head = "feasible" if self.feasible else "infeasible"
        if self.regime is not None:
            head += f" [{self.regime.value}]"
        lines = [head] + [f"  {m}" for m in self.messages]
        if self.near_critical:
            lines.append("  near-critical: " + ", ".join(self.near_critical))
        lines += [f"  {k} = {v:.10g}" for k, v in self.slacks.items()]
        return "\n".join(lines)


class _Checks:
    """Accumulates strict-inequality and equality checks for a verdict."""

    def __init__(self, scale: float):
        self.scale = scale
        self.violated: list[str] = []
        self.near: list[str] = []
        self.messages: list[str] = []

    def less(self, name: str, lhs: float, rhs: float, lhs_txt: str, rhs_txt: str):
        ok = lhs < rhs
        if not ok:
            self.violated.append(name)
            self.messages.append(f"{name}: {lhs_txt} = {lhs:.6g} >= {rhs_txt} = {rhs:.6g}")
        else:
            self.messages.append(f"{name}: {lhs_txt} = {lhs:.6g} < {rhs_txt} = {rhs:.6g}")
            if rhs - lhs < NEAR_CRITICAL * self.scale:
                self.near.append(name)

    def equal(self, name: str, lhs: float, rhs: float, lhs_txt: str, rhs_txt: str, rtol: float):
        ok = math.isclose(lhs, rhs, rel_tol=rtol, abs_tol=rtol * self.scale)
        rel = "=" if ok else "!="
        if not ok:
            self.violated.append(name)
        self.messages.append(f"{name}: {lhs_txt} = {lhs:.10g} {rel} {rhs_txt} = {rhs:.10g}")

    def verdict(self, slacks, regime=None) -> FeasibilityVerdict:
        return FeasibilityVerdict(
            feasible=not self.violated,
            violated=tuple(self.violated),
            slacks=dict(slacks),
            near_critical=tuple(self.near),
            messages=tuple(self.messages),
            regime=regime,
        )


def feasibility_scalar_periodic(model: ScalarModel, N: float, cell_area: float) -> FeasibilityVerdict:
    """Existence test 4*pi*N/lam < xi*|Omega| for the periodic scalar equation."""
    if cell_area <= 0:
        raise ConfigurationError("cell area must be positive")
    capacity = model.xi * cell_area
    load = FOUR_PI * N / model.lam
    chk = _Checks(capacity)
    chk.less("vortex_capacity", load, capacity, "4πN/λ", "ξ|Ω|")
    return chk.verdict({"eta": capacity - load})


def system_slacks(model: SystemModel, N1: float, N2: float, area: float) -> dict:
    s1 = N1 / model.lam1
    s2 = N2 / model.lam2
    eta1 = 0.5 * (model.xi1 + model.xi2) * area - 2.0 * math.pi * (s1 + s2)
    eta2 = 0.5 * (model.xi1 - model.xi2) * area - 2.0 * math.pi * (s1 - s2)
    return {"eta1": eta1, "eta2": eta2}


def feasibility_system_periodic(
    model: SystemModel,
    N1: float,
    N2: float,
    cell_area: float,
    regime: Regime | None = None,
    equality_rtol: float = EQUALITY_RTOL,
) -> FeasibilityVerdict:
    """Necessary and sufficient existence conditions for the periodic system.

    The condition set depends on which constants vanish.  ``N2`` may be
    negative here: the checker is pure arithmetic, which is what makes the
    (N2, xi2) -> -(N2, xi2) correspondence testable.

    Raises
    ------
    ConfigurationError
        If all of a2, b2, c2 vanish.
    """
    if cell_area <= 0:
        raise ConfigurationError("cell area must be positive")
    if regime is None:
        regime = classify_regime(model)
    if regime is Regime.NONE:
        raise ConfigurationError("all of |A|^2, |B|^2, |C|^2 vanish; the system is empty")

    area = cell_area
    l1, l2, x1, x2 = model.lam1, model.lam2, model.xi1, model.xi2
    s1, s2 = N1 / l1, N2 / l2
    slacks = system_slacks(model, N1, N2, area)
    chk = _Checks(x1 * area)

    if regime is Regime.FULL:
        chk.less("sum_capacity", FOUR_PI * (s1 + s2), (x1 + x2) * area,
                 "4π(N1/λ1+N2/λ2)", "(ξ1+ξ2)|Ω|")
        chk.less("difference_capacity", FOUR_PI * (s1 - s2), (x1 - x2) * area,
                 "4π(N1/λ1-N2/λ2)", "(ξ1-ξ2)|Ω|")
    elif regime is Regime.AB:
        chk.less("difference_capacity", FOUR_PI * (s1 - s2), (x1 - x2) * area,
                 "4π(N1/λ1-N2/λ2)", "(ξ1-ξ2)|Ω|")
        chk.less("second_capacity", FOUR_PI * s2, x2 * area, "4πN2/λ2", "ξ2|Ω|")
        slacks["eta3"] = slacks["eta1"] - slacks["eta2"]
    elif regime is Regime.AC:
        chk.less("sum_capacity", FOUR_PI * (s1 + s2), (x1 + x2) * area,
                 "4π(N1/λ1+N2/λ2)", "(ξ1+ξ2)|Ω|")
        chk.less("second_excess", x2 * area, FOUR_PI * s2, "ξ2|Ω|", "4πN2/λ2")
        slacks["eta4"] = slacks["eta2"] - slacks["eta1"]
    else:
        chk.less("first_capacity", s1, x1 * area / FOUR_PI, "N1/λ1", "ξ1|Ω|/4π")
        slacks["eta_first"] = x1 * area - FOUR_PI * s1
        if regime is Regime.A_ONLY:
            # the decoupled second field obeys a linear equation whose
            # constant right-hand side must integrate to zero on the torus
            chk.equal("second_neutrality", s2, x2 * area / FOUR_PI, "N2/λ2", "ξ2|Ω|/4π",
                      equality_rtol)
        elif regime is Regime.B_ONLY:
            chk.equal("difference_balance", s1 - s2, (x1 - x2) * area / FOUR_PI,
                      "N1/λ1-N2/λ2", "(ξ1-ξ2)|Ω|/4π", equality_rtol)
        else:
            chk.equal("sum_balance", s1 + s2, (x1 + x2) * area / FOUR_PI,
                      "N1/λ1+N2/λ2", "(ξ1+ξ2)|Ω|/4π", equality_rtol)
    return chk.verdict(slacks, regime)


# ---------------------------------------------------------------------------
# sign guarantees


@dataclass(frozen=True)
class SignGuarantees:
    """Which pointwise sign statements are implied by the constants.

    ``weighted`` covers u1/lam1 +- u2/lam2 < 0 and u1 < 0; ``strong``
    additionally covers u1 +- u2 < 0.  Both presuppose vacuum constants and
    at least one vortex of the first kind.
    """

    weighted: bool
    strong: bool
    weighted_margin: float
    strong_margin: float

    @property
    def combinations(self) -> tuple[str, ...]:
        out = []
        if self.weighted:
            out += ["u1", "u1/l1+u2/l2", "u1/l1-u2/l2"]
        if self.strong:
            out += ["u1+u2", "u1-u2"]
        return tuple(out)


def guaranteed_sign_properties(model: SystemModel) -> SignGuarantees:
    ratio = model.lam2 / model.lam1 - 1.0
    base = model.lam2 > model.lam1 and model.b2 > model.c2
    weighted_margin = 2.0 * ratio * model.c2 - model.m**2 * model.a2
    strong_margin = min(1.0, 2.0 / model.m) * ratio * model.c2 - model.m * model.a2
    weighted = base and weighted_margin > 0
    strong = base and model.xi2 > 0 and strong_margin > 0
    return SignGuarantees(weighted or strong, strong, weighted_margin, strong_margin)
