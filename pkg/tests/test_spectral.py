import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from qflow.errors import DomainError, GridResolutionError
from qflow.spectral import (
    Grid1D,
    charge_basis_ground,
    convergence_order,
    ground_state_1d,
    ground_state_2d,
)

# frozen from a dense diagonalisation at N = 4096 on [-6, 6] (see test below)
QUARTIC_E0 = 0.667986


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0))
def test_harmonic_levels(mass, k):
    w = np.sqrt(k / mass)
    r = ground_state_1d(lambda x: 0.5 * k * x ** 2, mass, Grid1D(-6, 6, 1024), k=3, rtol=1e-5)
    np.testing.assert_allclose(r.extrapolated, w * (np.arange(3) + 0.5), rtol=1e-6)


def test_quartic_ground_energy():
    r = ground_state_1d(lambda x: x ** 4, 1.0, Grid1D(-5, 5, 512))
    assert r.ground == pytest.approx(QUARTIC_E0, abs=1e-4)


def test_quartic_oracle_dense():
    n = 4096
    x = np.linspace(-6, 6, n + 2)[1:-1]
    h = x[1] - x[0]
    d = 1.0 / h ** 2 + x ** 4
    e = np.full(n - 1, -0.5 / h ** 2)
    E0 = sla.eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, 0))[0]
    assert E0 == pytest.approx(QUARTIC_E0, abs=1e-4)


def test_second_order_convergence():
    p = convergence_order(lambda x: x ** 4, 1.0, Grid1D(-5, 5, 128))
    assert p == pytest.approx(2.0, abs=0.05)


def test_box_is_enlarged_until_tail_decays():
    r = ground_state_1d(lambda x: 0.5 * (x - 3.0) ** 2, 1.0, Grid1D(-2, 2, 128))
    assert r.ground == pytest.approx(0.5, rel=1e-6)
    assert r.grid.hi > 6.0


def test_refinement_failure_is_reported():
    with pytest.raises(GridResolutionError):
        ground_state_1d(lambda x: 0.5 * x ** 2, 1.0, Grid1D(-8, 8, 64), rtol=1e-14, max_refine=1)


def test_invalid_inputs():
    with pytest.raises(DomainError):
        Grid1D(0, 1, 10)
    with pytest.raises(DomainError):
        ground_state_1d(lambda x: x ** 2, -1.0, Grid1D(-1, 1, 64))


@given(st.floats(0.1, 3.0), st.floats(0.0, 0.5))
def test_periodic_grid_matches_plane_waves(EJ, bloch):
    """-(1/2m) d^2 - EJ cos x with Bloch phase against the charge basis (a Mathieu problem)."""
    mass = 0.5
    r = ground_state_1d(lambda x: -EJ * np.cos(x), mass, Grid1D(-np.pi, np.pi, 256, "periodic"), bloch=bloch)
    n = np.arange(-30, 31)
    H = np.diag((n + bloch) ** 2 / (2 * mass)) - 0.5 * EJ * (np.eye(61, k=1) + np.eye(61, k=-1))
    assert r.extrapolated[0] == pytest.approx(np.linalg.eigvalsh(H)[0], abs=1e-6)


def test_coupled_oscillators_2d():
    """Bilinear coupling: E0 = (w+ + w-)/2 from the 2x2 generalised eigenproblem."""
    C, Cp, L, Lf = 1.0, 0.3, 1.0, 2.0
    K = np.array([[1 / L + 1 / Lf, -1 / Lf], [-1 / Lf, 1 / Lf]])
    w = np.sqrt(sla.eigh(K, np.diag([C, Cp]), eigvals_only=True))
    V = lambda x, y: x ** 2 / (2 * L) + (x - y) ** 2 / (2 * Lf)
    g = Grid1D(-7, 7, 160)
    r = ground_state_2d(V, (0.5 / C, 0.5 / Cp), g, g)
    assert r.ground == pytest.approx(w.sum() / 2, rel=1e-3)


def test_2d_limits():
    g = Grid1D(-1, 1, 300)
    with pytest.raises(DomainError):
        ground_state_2d(lambda x, y: x * 0, (1, 1), g, g)


def test_charge_basis_cutoff_grows():
    e = charge_basis_ground(0.0, 50.0, 0.0, 0.0, 1.0, 0.01, [0.0], M=8)
    e_ref = charge_basis_ground(0.0, 50.0, 0.0, 0.0, 1.0, 0.01, [0.0], M=200)
    assert e[0, 0] == pytest.approx(e_ref[0, 0], abs=1e-7)
