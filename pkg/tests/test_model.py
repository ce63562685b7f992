import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracvortex.model import (
    ConfigurationError,
    Regime,
    ScalarModel,
    SystemModel,
    VortexSet,
    classify_regime,
    feasibility_scalar_periodic,
    feasibility_system_periodic,
    guaranteed_sign_properties,
)

AREA = 4 * math.pi**2


# -- vortex sets -------------------------------------------------------------


def test_duplicate_points_merge():
    vs = VortexSet.from_list([[1, 2], [1, 2, 2], [0, 0]])
    assert vs.total == 4
    assert vs.count((1.0, 2.0)) == 3
    assert len(vs) == 2


def test_multiplicity_must_be_positive():
    with pytest.raises(ConfigurationError):
        VortexSet.from_list([[0, 0, 0]])
    with pytest.raises(ConfigurationError):
        VortexSet.from_list([[0, 0, 1.5]])


def test_lattice_reduction():
    vs = VortexSet.from_list([[7.0, -1.0, 1]]).reduced(2 * math.pi, 2 * math.pi)
    (x, y), = vs.points
    assert 0 <= x < 2 * math.pi and 0 <= y < 2 * math.pi
    assert x == pytest.approx(7.0 - 2 * math.pi)
    assert y == pytest.approx(2 * math.pi - 1.0)


def test_difference_requires_subset():
    a = VortexSet.from_list([[0, 0, 2], [1, 1]])
    b = VortexSet.from_list([[0, 0]])
    assert a.difference(b).total == 2
    assert b.missing_from(a) is None
    with pytest.raises(ConfigurationError):
        b.difference(a)


def test_round_trip_list():
    vs = VortexSet.from_list([[0.25, -1.5, 3], [2.0, 1.0, 1]])
    assert VortexSet.from_list(vs.to_list()) == vs


# -- models ------------------------------------------------------------------


def test_scalar_model_validation():
    with pytest.raises(ValueError):
        ScalarModel(lam=0.0, xi=1.0)
    with pytest.raises(ValueError):
        ScalarModel(lam=1.0, xi=1.0, a2=0.0, b2=0.0)
    with pytest.raises(ValueError):
        ScalarModel(lam=1.0, xi=-1.0)


def test_amplitudes_store_squared_moduli():
    md = ScalarModel.from_amplitudes(1.0, 1.0, 1.0, 1.0, 0.5 + 0.5j, "0.5")
    assert md.a2 == pytest.approx(0.5)
    assert md.b2 == pytest.approx(0.25)


def test_vacuum_constructors():
    md = ScalarModel.vacuum(2.0, m=2.0, n=1.0, a2=0.25, b2=1.0)
    assert md.xi == pytest.approx(1.5)
    assert md.on_vacuum()
    sm = SystemModel.vacuum(1.0, 3.0, m=1, a2=0.01, b2=2.0, c2=1.0)
    assert (sm.xi1, sm.xi2) == pytest.approx((3.01, 1.0))
    assert sm.on_vacuum()


def test_linearised_decay_rate():
    assert ScalarModel.vacuum(1.0).decay_rate == pytest.approx(1.0)
    assert ScalarModel.vacuum(4.0, a2=1.0, b2=0.0).decay_rate == pytest.approx(2.0)


# -- regimes -----------------------------------------------------------------


@pytest.mark.parametrize("a2,b2,c2,tag", [
    (1.0, 0.5, 0.25, Regime.FULL),
    (1.0, 0.5, 0.0, Regime.AB),
    (1.0, 0.0, 0.5, Regime.AC),
    (1.0, 0.0, 0.0, Regime.A_ONLY),
    (0.0, 0.5, 0.0, Regime.B_ONLY),
    (0.0, 0.0, 0.5, Regime.C_ONLY),
    (0.0, 0.5, 0.25, Regime.FULL),
])
def test_classify_regime(a2, b2, c2, tag):
    md = SystemModel(1.0, 1.0, 1.0, 0.5, m=1, a2=a2, b2=b2, c2=c2)
    assert classify_regime(md) is tag


def test_tiny_coefficients_count_as_zero():
    md = SystemModel(1.0, 1.0, 1.0, 0.5, m=1, a2=1.0, b2=0.5, c2=1e-14)
    assert classify_regime(md) is Regime.AB


# -- feasibility -------------------------------------------------------------


@pytest.mark.parametrize("lam,xi,area,N,ok", [
    (1.0, 1.0, AREA, 3, True),
    (1.0, 1.0, AREA, 4, False),
    (2.0, 0.5, 16 * math.pi, 2, True),
])
def test_scalar_feasibility(lam, xi, area, N, ok):
    v = feasibility_scalar_periodic(ScalarModel(lam, xi), N, area)
    assert v.feasible is ok
    assert v.slacks["eta"] == pytest.approx(xi * area - 4 * math.pi * N / lam)
    assert (not v.violated) is ok


def test_scalar_infeasible_message_cites_numbers():
    v = feasibility_scalar_periodic(ScalarModel(1.0, 1.0), 4, AREA)
    text = v.summary()
    assert "4πN/λ = 50.2655 >= ξ|Ω| = 39.4784" in text


def test_near_critical_flag():
    md = ScalarModel(1.0, 1.0)
    area = 4 * math.pi * 3 * (1 + 1e-9)
    v = feasibility_scalar_periodic(md, 3, area)
    assert v.feasible and v.near_critical == ("vortex_capacity",)


def test_system_full_feasible():
    md = SystemModel(1.0, 1.0, 2.0, 1.0, m=1, a2=1.0, b2=0.5, c2=0.25)
    v = feasibility_system_periodic(md, 2, 1, AREA)
    assert v.feasible
    assert v.slacks["eta1"] == pytest.approx(1.5 * AREA - 2 * math.pi * 3)
    assert v.slacks["eta2"] == pytest.approx(0.5 * AREA - 2 * math.pi * 1)


def test_system_full_both_violated():
    md = SystemModel(1.0, 1.0, 2.0, 1.0, m=1, a2=1.0, b2=0.5, c2=0.25)
    v = feasibility_system_periodic(md, 10, 1, AREA)
    assert not v.feasible
    assert set(v.violated) == {"sum_capacity", "difference_capacity"}


def test_b_only_balanced():
    md = SystemModel(1.0, 1.0, 1.0, 1.0, m=1, a2=0.0, b2=0.5, c2=0.0)
    v = feasibility_system_periodic(md, 1, 1, AREA)
    assert v.feasible and v.regime is Regime.B_ONLY
    bad = feasibility_system_periodic(md, 2, 1, AREA)
    assert "difference_balance" in bad.violated


def test_none_regime_rejected():
    md = SystemModel(1.0, 1.0, 1.0, 1.0, m=1, a2=0.0, b2=0.0, c2=0.0)
    with pytest.raises(ConfigurationError):
        feasibility_system_periodic(md, 1, 1, AREA)


def test_a_only_requires_neutral_second_field():
    md = SystemModel(1.0, 1.0, 1.0, 0.0, m=2, a2=0.5, b2=0.0, c2=0.0)
    assert feasibility_system_periodic(md, 1, 0, AREA).feasible
    assert "second_neutrality" in feasibility_system_periodic(md, 1, 1, AREA).violated


counts = st.integers(min_value=0, max_value=12)
positive = st.floats(min_value=0.1, max_value=5.0)


@settings(max_examples=200, deadline=None)
@given(lam=positive, xi=positive, area=st.floats(1.0, 100.0), N=counts)
def test_scalar_feasibility_is_monotone_in_N(lam, xi, area, N):
    md = ScalarModel(lam, xi)
    if not feasibility_scalar_periodic(md, N, area).feasible:
        assert not feasibility_scalar_periodic(md, N + 1, area).feasible


@settings(max_examples=200, deadline=None)
@given(l1=positive, l2=positive, x1=positive, x2=st.floats(-3.0, 3.0), N1=counts, N2=counts,
       area=st.floats(1.0, 100.0))
def test_system_feasibility_is_monotone_in_N1(l1, l2, x1, x2, N1, N2, area):
    md = SystemModel(l1, l2, x1, x2, m=1, a2=1.0, b2=0.5, c2=0.25)
    if not feasibility_system_periodic(md, N1, N2, area).feasible:
        # the sum condition only tightens; the difference condition too
        assert not feasibility_system_periodic(md, N1 + 1, N2, area).feasible


def _swapped(md: SystemModel, **coef):
    return SystemModel(md.lam1, md.lam2, md.xi1, -md.xi2, m=md.m, **coef)


@settings(max_examples=200, deadline=None)
@given(l1=positive, l2=positive, x1=st.floats(0.5, 5.0), x2=st.floats(-3.0, 3.0),
       N1=counts, N2=st.integers(-6, 6), area=st.floats(1.0, 100.0))
def test_swap_correspondence(l1, l2, x1, x2, N1, N2, area):
    """(N2, xi2) -> -(N2, xi2) exchanges the sum/difference conditions."""
    full = SystemModel(l1, l2, x1, x2, m=1, a2=1.0, b2=0.5, c2=0.25)
    v = feasibility_system_periodic(full, N1, N2, area)
    w = feasibility_system_periodic(_swapped(full, a2=1.0, b2=0.5, c2=0.25), N1, -N2, area)
    swap = {"sum_capacity": "difference_capacity", "difference_capacity": "sum_capacity"}
    assert set(w.violated) == {swap[c] for c in v.violated}
    assert w.slacks["eta1"] == pytest.approx(v.slacks["eta2"], abs=1e-9)

    # B only with balance <-> C only with balance
    b = SystemModel(l1, l2, x1, x2, m=1, a2=0.0, b2=0.5, c2=0.0)
    vb = feasibility_system_periodic(b, N1, N2, area)
    vc = feasibility_system_periodic(_swapped(b, a2=0.0, b2=0.0, c2=0.5), N1, -N2, area)
    assert vb.feasible == vc.feasible
    assert {"difference_balance": "sum_balance"}.get(
        next((c for c in vb.violated if "balance" in c), None)) == next(
        (c for c in vc.violated if "balance" in c), None)


@settings(max_examples=200, deadline=None)
@given(l1=positive, l2=positive, x1=st.floats(0.5, 5.0), x2=st.floats(-3.0, 3.0),
       N1=counts, N2=st.integers(-6, 6), area=st.floats(1.0, 100.0))
def test_swap_maps_ab_to_ac(l1, l2, x1, x2, N1, N2, area):
    ab = SystemModel(l1, l2, x1, x2, m=1, a2=1.0, b2=0.5, c2=0.0)
    ac = SystemModel(l1, l2, x1, -x2, m=1, a2=1.0, b2=0.0, c2=0.5)
    v = feasibility_system_periodic(ab, N1, N2, area)
    w = feasibility_system_periodic(ac, N1, -N2, area)
    swap = {"difference_capacity": "sum_capacity", "second_capacity": "second_excess"}
    assert set(w.violated) == {swap[c] for c in v.violated}


# -- sign guarantees ---------------------------------------------------------


def test_both_guarantees():
    g = guaranteed_sign_properties(SystemModel.vacuum(1.0, 3.0, m=1, a2=0.01, b2=2.0, c2=1.0))
    assert g.weighted and g.strong
    assert set(g.combinations) == {"u1", "u1/l1+u2/l2", "u1/l1-u2/l2", "u1+u2", "u1-u2"}


def test_no_guarantee_when_a_dominates():
    g = guaranteed_sign_properties(SystemModel.vacuum(1.0, 1.5, m=2, a2=1.0, b2=2.0, c2=1.0))
    assert not g.weighted and not g.strong


@given(l=positive, a2=st.floats(0.0, 1.0), b2=st.floats(0.1, 3.0), c2=st.floats(0.0, 3.0),
       m=st.integers(1, 4))
def test_equal_couplings_never_guarantee(l, a2, b2, c2, m):
    g = guaranteed_sign_properties(SystemModel.vacuum(l, l, m=m, a2=a2, b2=b2, c2=c2 + 0.01))
    assert g.combinations == ()


@given(l1=positive, ratio=st.floats(1.01, 5.0), a2=st.floats(0.0, 1.0), c2=st.floats(0.01, 2.0),
       m=st.integers(2, 5))
def test_conditions_coincide_for_m_at_least_two(l1, ratio, a2, c2, m):
    md = SystemModel.vacuum(l1, l1 * ratio, m=m, a2=a2, b2=c2 + 1.0, c2=c2)
    g = guaranteed_sign_properties(md)
    assert g.weighted_margin == pytest.approx(g.strong_margin * m, rel=1e-12, abs=1e-12)
    assert g.weighted == g.strong
