import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qflow.boflow import (
    FastScales,
    aitken,
    bo_potential,
    bo_vs_exact,
    classify,
    decade_grid,
    extrapolate_flow,
    flow_exponents,
    flow_sweep,
    radius_bound,
    richardson,
)
from qflow.errors import DomainError
from qflow.potentials import Cosine, PiecewiseLinear, PowerLaw, Quadratic, SelfSimilar, Sum, Tabulated


@pytest.mark.parametrize(
    "spec, kind",
    [
        (Cosine(1.0), "Type1b"),
        (PowerLaw(1.0, 1.5), "Type1a"),
        (PowerLaw(1.0, 4.0), "Type2"),
        (PowerLaw(1.0, 0.5, False), "Type1b"),
        (PiecewiseLinear(0.0, 1.0), "Type1a"),
        (PiecewiseLinear(1.0, 1.0), "Unclassified"),
        (SelfSimilar(), "Unclassified"),
        (Sum((Quadratic(2.0), Cosine(1.0))), "TypeL"),
        (Sum((PowerLaw(1.0, 4.0), Cosine(1.0))), "Type2"),
    ],
)
def test_classification(spec, kind):
    assert classify(spec).kind == kind


def test_type_l_records_inductance():
    assert classify(Sum((Quadratic(2.0), Cosine(1.0)))).Lfrak == 2.0


def test_tabulated_is_not_classified():
    with pytest.raises(DomainError):
        classify(Tabulated((0.0, 1.0), (0.0, 1.0)))


def test_fast_scales():
    sc = FastScales(4.0, 1e-4)
    assert sc.omega == pytest.approx(50.0)
    assert sc.phi_zpf == pytest.approx((4.0 / 1e-4) ** 0.25)
    assert sc.eps == pytest.approx(2.0 / sc.phi_zpf)


@settings(max_examples=10)
@given(st.floats(0.1, 2.0), st.floats(-3.0, 3.0))
def test_quadratic_element_gives_exact_series_potential(Lf, phi):
    """For a linear element, U_BO is exactly phi^2/2(L + Lfrak) at any C'."""
    r = bo_potential(1.0, Quadratic(Lf), 1e-2, np.array([phi]))
    assert r.U[0] == pytest.approx(phi ** 2 / (2 * (1.0 + Lf)), abs=1e-6 * max(1, phi ** 2))


def test_force_and_difference_agree():
    phi = np.linspace(-3, 3, 7)
    a = bo_potential(1.0, Cosine(1.0), 1e-2, phi)
    b = bo_potential(1.0, Cosine(1.0), 1e-2, phi, method="force")
    np.testing.assert_allclose(a.U, b.U, atol=1e-5)


def test_richardson_recovers_limit():
    x = decade_grid(1.0, 1e-6)
    exps = [0.125, 0.25, 0.375]
    y = 0.7 + 2.0 * x ** 0.125 - 1.0 * x ** 0.25 + 0.3 * x ** 0.375
    assert richardson(x[-4:], y[-4:], exps) == pytest.approx(0.7, abs=1e-10)
    assert extrapolate_flow(x, y, exps) == pytest.approx(0.7, abs=1e-10)


def test_aitken_geometric():
    seq = [1.0 + 0.5 ** k for k in range(8)]
    assert aitken(seq) == pytest.approx(1.0, abs=1e-12)


def test_flow_exponents():
    np.testing.assert_allclose(flow_exponents(classify(PowerLaw(1.0, 1.5))), [0.125, 0.25, 0.375])
    np.testing.assert_allclose(flow_exponents(classify(PowerLaw(1.0, 4.0))), [1 / 3, 2 / 3, 1.0])
    assert flow_exponents(classify(Cosine(1.0))) is None


def test_flow_needs_four_decades():
    with pytest.raises(DomainError):
        flow_sweep(1.0, Cosine(1.0), decade_grid(1.0, 1e-2))


def test_radius_bound_closed_form():
    # n = 0 with a = b = 1: r_0 = 1/(2 + 2 + 1)
    r = radius_bound(0.0, 0.0, 0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0)
    assert r == pytest.approx(1 / 5)


def test_radius_bound_rejects_invalid_constants():
    with pytest.raises(DomainError):
        radius_bound(1.0, 1.0, 1, 1.0, 1.5, 1.0, 1.0, 1e-6, 1e-3)
    with pytest.raises(DomainError):
        radius_bound(1.0, 1.0, 1, 1.0, 2.5, 1.0, 1.0, 1.0, 1.0)


def test_oracle_quadratic_case():
    r = bo_vs_exact(1.0, Quadratic(2.0), 1e-3)
    assert r.relative < 1e-3
