import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qflow.errors import DomainError
from qflow.snail import (
    SnailParams,
    fast_energies_charge,
    fast_energies_grid,
    maclaurin_gap,
    single_phase,
    small_cap_limit,
    snail_2d_ground,
    snail_bo_ground,
    transform_and_assemble,
    validate_2d,
)

TRANSMON = SnailParams(EJ1=0.5, EJ2=1.0, k2=0.1, EC=1e-3, k1=0.1, Phi=0.3)
SMALL_CAP = SnailParams(EJ1=1.0, EJ2=1.0, k2=1e-4, EC=1.0)


def test_transform_closed_forms():
    s = transform_and_assemble(SnailParams(EJ1=1.0, EJ2=1.0, k2=0.1, EC=1.0))
    assert s.d2 == pytest.approx(5.0)
    assert s.A[0, 1] == pytest.approx(-0.5)


@given(st.floats(0.0, 2.0), st.floats(0.01, 2.0), st.floats(0.01, 2.0))
def test_transform_diagonalises_kinetic_term(k1, k2, k3):
    p = SnailParams(EJ1=1.0, EJ2=1.0, k2=k2, EC=1.0, k1=k1, k3=k3)
    s = transform_and_assemble(p)
    # x = A^T phi and p = A^-1 n, so n^T C^-1 n = p^T (A^T C^-1 A) p
    K = s.A.T @ np.linalg.inv(p.capacitance) @ s.A
    np.testing.assert_allclose(K, np.diag([s.d1, s.d2]), atol=1e-12)


@given(st.floats(-3.0, 3.0), st.floats(-3.0, 3.0), st.floats(0.01, 1.0))
def test_potential_in_new_coordinates(phi1, phi2, k2):
    p = SnailParams(EJ1=0.7, EJ2=1.3, k2=k2, EC=1.0, Phi=0.4)
    s = transform_and_assemble(p)
    x = s.A.T @ np.array([phi1, phi2])
    direct = -0.7 * np.cos(phi1) - 1.3 * np.cos(phi2) - 1.3 * np.cos(phi1 - phi2 + 0.4)
    assert s.potential(*x) == pytest.approx(direct, abs=1e-12)


def test_renormalised_junction_energy():
    r = single_phase(SnailParams(EJ1=1.0, EJ2=1.0, k2=0.05, EC=0.02), [0.0])
    assert r.EJ2_renormalized == pytest.approx(1 - 0.5 * math.sqrt(0.2), rel=1e-12)


def test_breakdown_point_flagged():
    p = SnailParams(EJ1=1.0, EJ2=1.0, k2=0.1, EC=1e-3, Phi=0.4)
    r = single_phase(p, [math.pi - 0.4, 0.0])
    assert list(r.valid) == [False, True]
    assert math.isnan(r.U_ho[0]) and not math.isnan(r.U_ho[1])


def test_harmonic_correction_refused_outside_transmon_regime():
    r = single_phase(SnailParams(EJ1=1.0, EJ2=1.0, k2=0.1, EC=1.0), [0.0])
    assert not r.harmonic_ok and math.isnan(r.U_ho[0])


def test_asymmetric_single_phase_refused():
    with pytest.raises(DomainError):
        single_phase(SnailParams(EJ1=1.0, EJ2=1.0, k2=0.1, EC=1.0, k3=0.2), [0.0])


def test_invalid_parameters():
    with pytest.raises(DomainError):
        SnailParams(EJ1=1.0, EJ2=1.0, k2=0.0, EC=1.0)
    with pytest.raises(DomainError):
        SnailParams(EJ1=1.0, EJ2=1.0, k2=0.1, EC=-1.0)


def test_maclaurin_gap_is_fourth_order():
    g1, g2 = maclaurin_gap(0.2), maclaurin_gap(0.1)
    assert g1 / g2 == pytest.approx(16.0, rel=0.05)


def test_grid_and_charge_fast_energies_agree():
    x1 = np.linspace(-2.5, 2.5, 7)
    Uc = fast_energies_charge(TRANSMON, x1)[:, 0]
    Ug = fast_energies_grid(TRANSMON, x1)
    np.testing.assert_allclose(Uc, Ug, atol=1e-5)


def test_transmon_regime_prefers_harmonic_curve():
    x1 = np.linspace(-0.9 * np.pi, 0.9 * np.pi, 13)
    t = validate_2d(TRANSMON, x1)
    assert TRANSMON.regime == pytest.approx(0.01)
    assert t.harmonic_better[t.valid].all()


def test_intermediate_regime_is_numerical_only():
    t = validate_2d(SnailParams(EJ1=1.0, EJ2=1.0, k2=0.1, EC=0.1), [0.0, 1.0])
    assert t.numerical_only


def test_small_capacitance_limit():
    r = small_cap_limit(SMALL_CAP, np.linspace(-np.pi, np.pi, 25))
    assert r.sup_relative < 1e-2
    np.testing.assert_allclose(r.deviation, r.predicted_deviation, atol=1e-6)


def test_small_capacitance_grid_vs_charge():
    """Deep small-capacitance regime: periodic grid and plane waves agree to 1e-3 relative."""
    x1 = np.array([-1.0, 0.0, 2.0])
    Uc = fast_energies_charge(SMALL_CAP, x1)[:, 0]
    Ug = fast_energies_grid(SMALL_CAP, x1)
    np.testing.assert_allclose(Ug, Uc, rtol=1e-3)


def test_full_2d_against_bo():
    p = SnailParams(EJ1=1.0, EJ2=1.0, k2=1e-2, EC=0.05)
    e2d = snail_2d_ground(p, 64, 64)
    ebo = snail_bo_ground(p, 64)
    assert abs(e2d - ebo) / abs(e2d) < 1e-2
