"""Two-junction SNAIL shunted by a large capacitor: single-phase approximations and their checks.

Energies are in units of the shunt charging energy scale used by the
caller; the Hamiltonian is H = 4 E_C n^T C^-1 n + U(phi) with [phi_i, n_j] = i.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .spectral import Grid1D, charge_basis_ground, ground_state_1d, ground_state_2d

# samples closer than this to the breakdown line |x1 + Phi| = pi are flagged
VALIDITY_MARGIN = 1e-9


@dataclass(frozen=True)
class SnailParams:
    """Junction energies E_J1 (shunting junction), E_J2, E_J3 (array) and k_i = C_i/C."""

    EJ1: float
    EJ2: float
    k2: float
    EC: float
    k1: float = 0.0
    k3: Optional[float] = None
    EJ3: Optional[float] = None
    Phi: float = 0.0
    nu1: float = 0.0
    nu2: float = 0.0

    def __post_init__(self):
        if self.k3 is None:
            object.__setattr__(self, "k3", self.k2)
        if self.EJ3 is None:
            object.__setattr__(self, "EJ3", self.EJ2)
        if self.k2 <= 0 or self.k3 <= 0:
            raise DomainError("array capacitance ratios k2, k3 must be positive")
        if self.k1 < 0:
            raise DomainError("k1 must be non-negative")
        if self.EC <= 0:
            raise DomainError("E_C must be positive")

    @property
    def symmetric(self) -> bool:
        return self.k2 == self.k3 and self.EJ2 == self.EJ3

    @property
    def capacitance(self) -> np.ndarray:
        k1, k2, k3 = self.k1, self.k2, self.k3
        return np.array([[1.0 + k1 + k3, -k3], [-k3, k2 + k3]])

    @property
    def regime(self) -> float:
        """E_C / (k2 E_J2): small in the transmon regime, large for tiny junction capacitance."""
        return self.EC / (self.k2 * self.EJ2) if self.EJ2 > 0 else math.inf


@dataclass
class SnailSystem:
    A: np.ndarray
    d1: float
    d2: float
    potential: Callable
    params: SnailParams

    @property
    def kinetic(self):
        """Coefficients (4 E_C d1, 4 E_C d2) of p1^2 and p2^2."""
        return 4.0 * self.params.EC * self.d1, 4.0 * self.params.EC * self.d2


def transform_and_assemble(p: SnailParams) -> SnailSystem:
    """Upper-triangular transform x = A^T phi, p = A^-1 n that diagonalises the kinetic term."""
    k1, k2, k3 = p.k1, p.k2, p.k3
    s = k2 + k3
    A = np.array([[1.0, -k3 / s], [0.0, 1.0]])
    d1 = s / (s + k1 * k2 + k2 * k3 + k3 * k1)
    d2 = 1.0 / s
    w2, w3 = k3 / s, k2 / s

    def potential(x1, x2):
        return (-p.EJ1 * np.cos(x1) - p.EJ2 * np.cos(w2 * x1 + x2)
                - p.EJ3 * np.cos(w3 * x1 - x2 + p.Phi))

    return SnailSystem(A, d1, d2, potential, p)


@dataclass
class SinglePhaseResult:
    x1: np.ndarray
    U_cl: np.ndarray
    U_ho: np.ndarray
    EJ2_renormalized: float
    valid: np.ndarray
    harmonic_ok: bool


def classical_potential(p: SnailParams, x1, EJ2: Optional[float] = None):
    EJ2 = p.EJ2 if EJ2 is None else EJ2
    x1 = np.asarray(x1, dtype=float)
    return -p.EJ1 * np.cos(x1) - 2.0 * EJ2 * np.cos(0.5 * (x1 + p.Phi))


def single_phase(p: SnailParams, x1) -> SinglePhaseResult:
    """Classical and harmonic single-phase potentials of the symmetric SNAIL.

    U_ho adds the zero-point energy of the fast mode expanded about x2 = Phi/2.
    It is NaN where |x1 + Phi| >= pi (that point is a maximum in x2) and
    everywhere when E_C/(k2 E_J2) >= 1.
    """
    if not p.symmetric:
        raise DomainError("single-phase formulas need k2 = k3 and E_J2 = E_J3")
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    U_cl = classical_potential(p, x1)
    valid = np.abs(x1 + p.Phi) < math.pi - VALIDITY_MARGIN
    harmonic_ok = p.regime < 1.0
    U_ho = np.full_like(U_cl, np.nan)
    EJt = float("nan")
    if harmonic_ok:
        c = np.cos(0.5 * (x1[valid] + p.Phi))
        U_ho[valid] = U_cl[valid] + np.sqrt(2.0 * p.EC * p.EJ2 * c / p.k2)
        EJt = p.EJ2 * (1.0 - 0.5 * math.sqrt(p.EC / (2.0 * p.k2 * p.EJ2)))
    return SinglePhaseResult(x1, U_cl, U_ho, EJt, valid, harmonic_ok)


def maclaurin_gap(eps_max: float = 0.5, samples: int = 2001) -> float:
    """sup |2 sqrt(cos e) - (cos e + 1)| for |e| <= eps_max."""
    e = np.linspace(-eps_max, eps_max, samples)
    return float(np.max(np.abs(2.0 * np.sqrt(np.cos(e)) - (np.cos(e) + 1.0))))


def fast_energies_charge(p: SnailParams, x1, k: int = 1, M: int = 16) -> np.ndarray:
    """Fast-mode levels at each x1 in the plane-wave basis (spiral boundary honoured exactly)."""
    sysm = transform_and_assemble(p)
    s = p.k2 + p.k3
    return charge_basis_ground(p.EJ1, p.EJ2, p.Phi, p.nu2, sysm.d2, p.EC, x1, M=M, k=k,
                               EJ3=p.EJ3, w2=p.k3 / s, w3=p.k2 / s)


def fast_energies_grid(p: SnailParams, x1, n: int = 256, rtol: float = 1e-6) -> np.ndarray:
    """Fast ground energies from a periodic finite-difference grid in x2 (sector nu2).

    Near |x1 + Phi| = pi the fast energy passes through zero, so convergence
    is also accepted at ``rtol`` times the junction energy scale.
    """
    sysm = transform_and_assemble(p)
    mass = 1.0 / (2.0 * sysm.kinetic[1])
    grid = Grid1D(-math.pi, math.pi, n, "periodic")
    out = []
    for x in np.atleast_1d(np.asarray(x1, dtype=float)):
        r = ground_state_1d(lambda y, x=x: sysm.potential(x, y), mass, grid, k=2, rtol=rtol, bloch=p.nu2,
                             atol=rtol * max(p.EJ1, p.EJ2, p.EJ3))
        out.append(r.values[0])
    return np.array(out)


@dataclass
class SmallCapResult:
    x1: np.ndarray
    U_BO: np.ndarray
    deviation: np.ndarray
    predicted_deviation: np.ndarray
    sup_relative: float
    d1EC: float
    parallel_EC: float


def small_cap_limit(p: SnailParams, x1, M: int = 16) -> SmallCapResult:
    """U_BO(x1) - U_BO(0) from the charge basis against E_J1 (1 - cos x1).

    ``predicted_deviation`` is the second-order correction from the two
    neighbouring charge states, -2|U_{1,0}|^2/(4 E_C d2), shifted the same way.
    """
    if p.nu2 != 0:
        raise DomainError("the small-capacitance limit is evaluated at nu2 = 0")
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    sysm = transform_and_assemble(p)
    s = p.k2 + p.k3
    grid = np.concatenate([[0.0], x1])
    E = fast_energies_charge(p, grid, M=M)[:, 0]
    U = E[1:] - E[0]
    target = p.EJ1 * (1.0 - np.cos(x1))
    dev = U - target

    def second_order(x):
        u = 0.5 * np.abs(p.EJ2 * np.exp(1j * x * p.k3 / s) + p.EJ3 * np.exp(-1j * (x * p.k2 / s + p.Phi)))
        return -2.0 * u ** 2 / sysm.kinetic[1]

    pred = second_order(x1) - second_order(0.0)
    scale = p.EJ1 if p.EJ1 > 0 else 1.0
    parallel = 1.0 / (1.0 / p.EC + p.k1 / p.EC)
    return SmallCapResult(x1, U, dev, pred, float(np.max(np.abs(dev)) / scale), sysm.d1 * p.EC, parallel)


@dataclass
class Snail2DTable:
    x1: np.ndarray
    U_cl: np.ndarray
    U_ho: np.ndarray
    U_charge: np.ndarray
    U_grid: np.ndarray
    valid: np.ndarray
    harmonic_better: np.ndarray
    charge_vs_grid: float
    E_2d: Optional[float] = None
    E_bo: Optional[float] = None
    numerical_only: bool = False
    info: dict = field(default_factory=dict)

    @property
    def bo_relative_error(self) -> Optional[float]:
        if self.E_2d is None:
            return None
        return abs(self.E_bo - self.E_2d) / abs(self.E_2d)


def snail_2d_ground(p: SnailParams, n1: int = 96, n2: int = 96) -> float:
    """Lowest level of the full two-variable Hamiltonian on the spiral torus.

    x1 wraps with period 2 pi and a shift of pi in x2 (nu1 = nu2 = 0), x2 has
    period 2 pi. ``n2`` must be even so the shift lands on a grid point.
    """
    if n2 % 2:
        raise DomainError("n2 must be even for the half-period twist")
    if p.nu1 != 0 or p.nu2 != 0:
        raise DomainError("the grid solver covers the nu1 = nu2 = 0 sector only")
    sysm = transform_and_assemble(p)
    g1 = Grid1D(-math.pi, math.pi, n1, "periodic")
    g2 = Grid1D(-math.pi, math.pi, n2, "periodic")
    r = ground_state_2d(sysm.potential, sysm.kinetic, g1, g2, k=1, twist=n2 // 2)
    return float(r.values[0])


def snail_bo_ground(p: SnailParams, n1: int = 96, M: int = 16) -> float:
    """Slow ground energy with the charge-basis fast energy as potential, x1 periodic."""
    sysm = transform_and_assemble(p)
    g1 = Grid1D(-math.pi, math.pi, n1, "periodic")
    x = g1.points
    E = fast_energies_charge(p, x, M=M)[:, 0]
    mass = 1.0 / (2.0 * sysm.kinetic[0])
    table = dict(zip(np.round(x, 14), E))
    r = ground_state_1d(lambda y: np.array([table[v] for v in np.round(np.atleast_1d(y), 14)]),
                        mass, g1, k=2, check=False)
    return float(r.values[0])


def validate_2d(p: SnailParams, x1, n2: int = 256, full: bool = False, n_full: int = 96) -> Snail2DTable:
    """Compare both single-phase curves with numerically exact fast energies.

    The fast ground energy is computed twice, in the charge basis and on a
    periodic x2 grid. ``harmonic_better`` marks valid samples where U_ho is
    strictly closer to the grid result than U_cl. With ``full`` the ground
    energy of the whole two-variable problem is compared with the BO value.
    """
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    sp_ = single_phase(p, x1)
    Uc = fast_energies_charge(p, x1)[:, 0]
    Ug = fast_energies_grid(p, x1, n=n2)
    with np.errstate(invalid="ignore"):
        better = np.abs(sp_.U_ho - Ug) < np.abs(sp_.U_cl - Ug)
    better &= sp_.valid & sp_.harmonic_ok
    scale = max(float(np.max(np.abs(Ug))), 1e-300)
    agree = float(np.max(np.abs(Uc - Ug)) / scale)
    # neither single-phase form is trusted near E_C/(k2 E_J2) ~ 1
    numerical_only = 0.1 <= p.regime <= 10.0
    table = Snail2DTable(x1, sp_.U_cl, sp_.U_ho, Uc, Ug, sp_.valid, better, agree,
                         numerical_only=numerical_only, info={"regime": p.regime})
    if full:
        table.E_2d = snail_2d_ground(p, n_full, n_full)
        table.E_bo = snail_bo_ground(p, n_full)
    return table
