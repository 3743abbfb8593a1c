import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qflow.diracberg import (
    dirac_dynamics,
    effective_potential_branches,
    eom_residual,
    find_roots,
    gauge_fix,
    kernel_split,
    reduce,
    youla_block,
)
from qflow.errors import DomainError, UnresolvableConstraintError
from qflow.lagrangian import assemble, legendre_regular, regularize
from qflow.netlist import load_netlist, parse_netlist
from qflow.potentials import Cosine


def random_antisymmetric(rng, k, rank):
    X = rng.normal(size=(k, rank))
    Y = rng.normal(size=(k, rank))
    return X @ Y.T - Y @ X.T


@given(st.integers(0, 2 ** 31))
def test_youla_block_structure(seed):
    rng = np.random.default_rng(seed)
    Lam = random_antisymmetric(rng, 4, 1)
    D, App, l, j, d = youla_block(Lam)
    assert (l, j) == (1, 2)
    np.testing.assert_allclose(D.T @ D, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(D.T @ Lam @ D, 0.5 * (App - App.T), atol=1e-12 * max(1, np.abs(Lam).max()))
    # oracle: the nonzero pair of Lam^2 eigenvalues is -(d/2)^2
    mu = np.linalg.eigvalsh(Lam @ Lam)
    assert mu[0] == pytest.approx(-(d[0] / 2) ** 2, rel=1e-10)


@given(st.integers(0, 2 ** 31), st.integers(1, 3))
def test_youla_block_full_rank(seed, pairs):
    rng = np.random.default_rng(seed)
    Lam = random_antisymmetric(rng, 2 * pairs, pairs)
    D, App, l, j, d = youla_block(Lam)
    assert (l, j) == (pairs, 0)
    np.testing.assert_allclose(D.T @ Lam @ D, 0.5 * (App - App.T), atol=1e-9 * max(1, np.abs(Lam).max()))


def test_kernel_split():
    C = np.array([[2.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    B, Cp, n, k = kernel_split(C)
    assert (n, k) == (2, 1)
    out = B.T @ C @ B
    np.testing.assert_allclose(out[:2, :2], Cp, atol=1e-14)
    np.testing.assert_allclose(out[2:, :], 0.0, atol=1e-14)
    with pytest.raises(DomainError):
        kernel_split(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_gauge_fix_changes_only_symmetric_part():
    rng = np.random.default_rng(3)
    A = random_antisymmetric(rng, 5, 2)
    Afix, F = gauge_fix(A, 2, 1, 1)
    np.testing.assert_allclose(Afix - A, F + F.T)
    np.testing.assert_allclose(Afix[2:, :2], 0.0, atol=1e-14)


def test_series_inductors_add(netlists):
    rh = reduce(assemble(load_netlist(netlists / "fig1a.net")))
    assert (rh.dof, rh.j) == (1, 1)
    M = rh.linear_form()
    assert 1.0 / M[0, 0] == pytest.approx(3.0, rel=1e-12)
    assert M[1, 1] == pytest.approx(1.0, rel=1e-12)


@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_series_rule_random(C, L1, L2):
    rh = reduce(assemble(parse_netlist(f"C 1 0 {C!r}\nL 1 2 {L1!r}\nL 2 0 {L2!r}")))
    w = rh.frequencies()
    assert w[0] == pytest.approx(1.0 / np.sqrt((L1 + L2) * C), rel=1e-10)


def test_regularised_spectrum_converges_to_reduced(netlists):
    lag = assemble(load_netlist(netlists / "fig1a.net"))
    w_red = reduce(lag).frequencies()[0]
    w_reg = legendre_regular(regularize(lag, 1e-6)).frequencies()[0]
    assert w_reg == pytest.approx(w_red, rel=1e-4)


def test_almost_mathieu_circuit(netlists):
    rh = reduce(assemble(load_netlist(netlists / "fig8.net")))
    assert rh.dof == 1 and rh.l == 1
    G, EJ1, EJ2 = 0.5, 1.0, 2.0
    rng = np.random.default_rng(0)
    for x, p in rng.uniform(-4, 4, size=(10, 2)):
        (e,) = rh.energy_branches([x], [p])
        assert e == pytest.approx(-EJ1 * np.cos(x) - EJ2 * np.cos(p / G), abs=1e-12)


def test_kepler_circuit_is_branched(netlists):
    rh = reduce(assemble(load_netlist(netlists / "kepler.net")))
    assert rh.branched and rh.max_branches == 3


def kepler_scan_count(beta, phi, lo=-2 * np.pi, hi=3 * np.pi, n=200001):
    """Oracle: sign changes of phi_c + beta sin phi_c - phi on a dense grid."""
    c = np.linspace(lo, hi, n)
    g = c + beta * np.sin(c) - phi
    return int(np.sum(np.sign(g[:-1]) != np.sign(g[1:])))


def test_kepler_three_branches():
    br = effective_potential_branches(1.0, Cosine(2.0), np.pi)
    assert len(br) == kepler_scan_count(2.0, np.pi) == 3
    assert all(r < 1e-10 for _, _, r in br)


@given(st.floats(0.0, 1.0), st.floats(-10.0, 10.0))
def test_single_branch_when_beta_at_most_one(beta, phi):
    if beta == 0.0:
        beta = 1e-3
    br = effective_potential_branches(1.0, Cosine(beta), phi)
    assert len(br) == 1


def test_branch_energies_against_scan():
    """beta = 3 at phi = pi: each branch energy is the stationary value found by a scan in its basin."""
    beta, phi = 3.0, np.pi
    br = effective_potential_branches(1.0, Cosine(beta), phi)
    energies = [u for _, u, _ in br]
    assert all(a < b for a, b in zip(energies, energies[1:]))
    c = np.linspace(-10, 10, 400001)
    f = (phi - c) ** 2 / 2 + (-beta * np.cos(c))
    df = np.diff(f)
    stationary = np.where(np.sign(df[:-1]) != np.sign(df[1:]))[0] + 1
    scanned = sorted(f[stationary])
    np.testing.assert_allclose(sorted(energies), scanned, atol=1e-8)


def test_find_roots_touching():
    roots = find_roots(lambda x: (x - 1.0) ** 2, -3.0, 3.0)
    assert len(roots) == 1 and roots[0] == pytest.approx(1.0, abs=1e-6)


def test_dirac_energy_drift():
    traj = dirac_dynamics(0.5, 1.0, 0.3, 0.2, 100.0, 1e-3)
    assert not traj.hit_singular
    assert traj.energy_drift < 1e-8


def test_dirac_eom_residual_second_order():
    r1 = eom_residual(dirac_dynamics(0.5, 1.0, 0.3, 0.2, 5.0, 2e-3), 0.5, 1.0)
    r2 = eom_residual(dirac_dynamics(0.5, 1.0, 0.3, 0.2, 5.0, 1e-3), 0.5, 1.0)
    assert 3.0 < r1 / r2 < 5.0


def test_dirac_singular_surface():
    traj = dirac_dynamics(2.0, 1.0, 0.0, 3.0, 20.0, 1e-3)
    assert traj.hit_singular and traj.t_singular is not None
    assert abs(1 + 2.0 * np.cos(traj.y[-1])) < 0.1


def test_unresolvable_constraint():
    # the middle node carries no potential and no gyrator: nothing fixes it
    lag = assemble(parse_netlist("C 1 0 1\nL 1 0 1\nC 2 0 1\nL 2 0 1\nGYR 1 0 2 0 G=1"))
    lag.C[1, 1] = 0.0
    lag.terms = lag.terms[:1]
    lag.A[:] = 0.0
    with pytest.raises(UnresolvableConstraintError):
        reduce(lag)
