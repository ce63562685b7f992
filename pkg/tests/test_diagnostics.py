import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracvortex.diagnostics import (
    DiagnosticsReport,
    Residual,
    decay_fit,
    log_growth_fit,
    quantization_check,
    ring_average,
    sign_check,
    uniqueness_probe,
    vortex_centroid,
)
from fracvortex.grid import PeriodicGrid, PlanarBox
from fracvortex.model import FeasibilityError, ScalarModel, SystemModel, VortexSet
from fracvortex.solver import (
    solve_scalar_periodic,
    solve_scalar_planar,
    solve_system_periodic,
    solve_system_planar,
)

CELL = PeriodicGrid.square(2 * math.pi, 64)
VAC = ScalarModel.vacuum(1.0)


def test_residual_relative_error():
    r = Residual.of("x", 1.01, 1.0, 0.02)
    assert r.passed and r.rel_error == pytest.approx(0.01)
    assert not Residual.of("x", 1.03, 1.0, 0.02).passed
    d = r.as_dict()
    assert set(d) == {"value", "rhs", "rel_error", "tolerance", "pass"}


def test_residual_zero_rhs_uses_absolute_error():
    r = Residual.of("x", 2e-15, 1e-16, 1e-3, scale=10.0)
    assert r.passed and r.rel_error == pytest.approx(1.9e-15)
    # without a scale a tiny rhs is taken at face value
    assert not Residual.of("x", 2e-15, 1e-16, 1e-3).passed


@given(st.floats(0.2, 3.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
@settings(max_examples=25, deadline=None)
def test_ring_average_of_radial_function(r, cx, cy):
    box = PlanarBox(8.0, 255)
    X, Y = box.coords()
    f = (X - cx) ** 2 + (Y - cy) ** 2
    avg = ring_average(box, f, [r], center=(cx, cy), angles=256)
    # bilinear interpolation of a quadratic overshoots by at most h^2/2
    assert abs(avg[0] - r**2) <= box.hx**2


def test_ring_average_outside_box_is_zero():
    box = PlanarBox(4.0, 31)
    assert ring_average(box, np.ones(box.shape), [10.0])[0] == 0.0


def test_centroid_weights_multiplicity():
    sol = solve_scalar_periodic(VAC, VortexSet.from_list([[1.0, 1.0, 2], [4.0, 1.0]]), CELL)
    assert vortex_centroid(sol) == pytest.approx((2.0, 1.0))


def test_vacuum_solutions_have_exact_residuals():
    sol = solve_scalar_periodic(VAC, VortexSet(), CELL)
    r = sol.diagnostics.residuals
    assert r["flux"].value == pytest.approx(0.0, abs=1e-12)
    assert r["quantization"].value == pytest.approx(0.0, abs=1e-12)
    sol = solve_scalar_planar(VAC, VortexSet(), PlanarBox(8.0, 31))
    assert decay_fit(sol) == []
    assert sign_check(sol)["u"].guaranteed is False


def test_q_identities_right_sides():
    md = SystemModel.vacuum(1.0, 3.0, m=1, a2=0.01, b2=2.0, c2=1.0)
    sol = solve_system_periodic(md, VortexSet.from_list([[1, 1], [4, 2]]),
                                VortexSet.from_list([[1, 1]]), CELL)
    r = quantization_check(sol)
    assert r["q1"].rhs == pytest.approx(4 * math.pi * (2 + 1 / 3))
    assert r["q2"].rhs == pytest.approx(4 * math.pi * (2 - 1 / 3))
    assert r["q1"].passed and r["q2"].passed


def test_q_and_flux_agree_on_vacuum():
    """On vacuum constants the L1 and weak forms are the same integrals."""
    md = SystemModel.vacuum(1.0, 3.0, m=1, a2=0.01, b2=2.0, c2=1.0)
    sol = solve_system_periodic(md, VortexSet.from_list([[1, 1], [4, 2]]),
                                VortexSet.from_list([[1, 1]]), CELL)
    r = sol.diagnostics.residuals
    f1, f2 = r["flux_1"].value, r["flux_2"].value
    # q1 = sum of the two weighted fluxes, q2 = difference
    assert r["q1"].value == pytest.approx(f1 + f2, rel=1e-10)
    assert r["q2"].value == pytest.approx(f1 - f2, rel=1e-10)


def test_non_vacuum_system_reports_weak_forms_only():
    md = SystemModel(1.0, 1.0, 2.5, 0.2, m=1, a2=0.5, b2=1.0, c2=0.5)
    sol = solve_system_periodic(md, VortexSet.from_list([[1, 1]]), VortexSet.from_list([[1, 1]]), CELL)
    assert "q1" not in sol.diagnostics.residuals
    assert any("weak flux" in n for n in sol.diagnostics.notes)
    assert sol.diagnostics.residuals["flux_1"].passed


def test_sign_guarantee_scalar():
    sol = solve_scalar_periodic(VAC, VortexSet.from_list([[1.0, 2.0]]), CELL)
    s = sign_check(sol)["u"]
    assert s.guaranteed and s.passed and s.max_value < 0
    md = ScalarModel(1.0, 2.0)
    sol = solve_scalar_periodic(md, VortexSet.from_list([[1.0, 2.0]]), CELL)
    assert not sign_check(sol)["u"].guaranteed


def test_decay_fit_scalar_planar():
    sol = solve_scalar_planar(VAC, VortexSet.from_list([[0.0, 0.0]]), PlanarBox(16.0, 255))
    (fit,) = decay_fit(sol)
    assert fit.asserted and fit.passed
    assert fit.rel_to_linear < 0.2


def test_log_growth_only_for_planar_reductions():
    md = SystemModel.vacuum(1.0, 2.0, m=1, a2=0.0, b2=1.0, c2=0.0)
    v1, v2 = VortexSet.from_list([[0.3, 0.0]]), VortexSet.from_list([[-0.4, 0.2]])
    sol = solve_system_planar(md, v1, v2, PlanarBox(16.0, 255))
    fits = log_growth_fit(sol)
    assert [f.field for f in fits] == ["v1", "v2"]
    assert all(f.passed for f in fits)
    assert fits[0].expected == pytest.approx(-fits[1].expected)
    sol = solve_system_periodic(SystemModel(1.0, 1.0, 1.0, 1.0, m=1, a2=0.0, b2=1.0, c2=0.0),
                                VortexSet.from_list([[1, 1]]), VortexSet.from_list([[2, 2]]), CELL)
    assert log_growth_fit(sol) == []


def test_uniqueness_probe_from_opposite_starts():
    vs = VortexSet.from_list([[1.0, 2.0], [4.0, 4.0]])
    v0 = 0.5 * np.cos(CELL.coords()[0])[None]
    res = uniqueness_probe(solve_scalar_periodic, VAC, vs, CELL, starts=[v0, -v0])
    assert res.count == 2 and res.passed


def test_uniqueness_probe_seeded():
    vs = VortexSet.from_list([[1.0, 2.0]])
    a = uniqueness_probe(solve_scalar_periodic, VAC, vs, CELL, k=3, seed=7)
    assert a.passed and a.count == 3 and a.seed == 7


def test_uniqueness_probe_rejects_infeasible():
    calls = []

    def pipeline(*args, **kwargs):
        calls.append(1)
        return solve_scalar_periodic(*args, **kwargs)

    vs = VortexSet.from_list([[0.5 + i, 1.0] for i in range(4)])
    with pytest.raises(FeasibilityError):
        uniqueness_probe(pipeline, ScalarModel(1.0, 1.0), vs, CELL)
    assert len(calls) == 1


def test_report_failures_listed():
    rep = DiagnosticsReport(residuals={"flux": Residual.of("flux", 2.0, 1.0, 0.1)})
    assert not rep.passed and rep.failures() == ["flux"]
    assert rep.as_dict()["passed"] is False
