"""Gyrator circuits: Tellegen equivalents, shunt reductions, BO flows, the almost Mathieu operator and the transformer.

Reduced units: hbar = 1 and the reduced flux quantum is 1, so the flux
quantum is 2 pi and the GKP gyration conductance is 1/(4 pi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq, minimize_scalar

from .boflow import FlowResult, decade_grid, extrapolate_flow, flow_exponents, flow_sweep
from .errors import CommensurabilityError, DomainError
from .potentials import PotentialSpec, PowerLaw, Quadratic
from .spectral import Grid1D, ground_state_1d

GKP_G = 1.0 / (4.0 * math.pi)
GKP_RTOL = 1e-9
COMMENSURATE_TOL = 1e-9


@dataclass(frozen=True)
class GyratorShunt:
    """Gyrator of conductance G terminated by a capacitor C or an inductive potential."""

    G: float
    kind: str
    C: Optional[float] = None
    spec: Optional[PotentialSpec] = None
    Q2: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        if self.G == 0:
            raise DomainError("gyration conductance must be non-zero")
        if self.kind not in ("capacitor", "inductor"):
            raise DomainError(f"unknown shunt kind {self.kind!r}")
        if self.kind == "capacitor" and not (self.C is not None and self.C > 0):
            raise DomainError("a capacitive shunt needs C > 0")
        if self.kind == "inductor" and self.spec is None:
            raise DomainError("an inductive shunt needs a potential spec")


@dataclass(frozen=True)
class EffectiveElement:
    kind: str
    value: float


def tellegen_equiv(shunt: GyratorShunt) -> EffectiveElement:
    """Classical replacement rule: C -> L_eff = C/G^2, L -> C_eff = L G^2."""
    G2 = shunt.G ** 2
    if shunt.kind == "capacitor":
        return EffectiveElement("inductor", shunt.C / G2)
    if isinstance(shunt.spec, Quadratic):
        return EffectiveElement("capacitor", shunt.spec.L * G2)
    raise DomainError("the replacement rule only covers linear shunts")


def tellegen_inverse(element: EffectiveElement, G: float) -> GyratorShunt:
    """Shunt that ``tellegen_equiv`` maps to ``element``."""
    if element.kind == "inductor":
        return GyratorShunt(G, "capacitor", C=element.value * G * G)
    return GyratorShunt(G, "inductor", spec=Quadratic(element.value / (G * G)))


def _is_monotone_derivative(spec: PotentialSpec, lo=-50.0, hi=50.0, n=4001) -> bool:
    x = np.linspace(lo, hi, n)
    d = spec.derivative(x)
    return bool(np.all(np.isfinite(d)) and np.all(np.diff(d) > 0))


def _invert_derivative(spec: PotentialSpec, y: float) -> float:
    """Solve spec'(x) = y for a strictly increasing derivative."""
    if y == 0.0 and spec.derivative(np.array([0.0]))[0] == 0.0:
        return 0.0
    a, b = -1.0, 1.0
    f = lambda x: float(spec.derivative(np.array([x]))[0]) - y
    while f(a) > 0:
        a *= 2.0
        if a < -1e12:
            raise DomainError("derivative does not reach the requested value")
    while f(b) < 0:
        b *= 2.0
        if b > 1e12:
            raise DomainError("derivative does not reach the requested value")
    return brentq(f, a, b, xtol=1e-14, rtol=1e-14)


def legendre_dual(spec: PotentialSpec) -> Callable:
    """q -> q v - g(v) at g'(v) = q, for a convex energy g."""
    if not _is_monotone_derivative(spec):
        raise DomainError("the capacitor energy must have a strictly increasing derivative")

    def dual(q):
        q = np.atleast_1d(np.asarray(q, dtype=float))
        out = np.empty_like(q)
        for i, qi in enumerate(q):
            v = _invert_derivative(spec, qi)
            out[i] = qi * v - float(spec.value(np.array([v]))[0])
        return out

    return dual


@dataclass
class CapReduced:
    """H = Q1^2/2C1 + U1(phi1) + g*(Q2 - G phi1) after eliminating the conserved Q2."""

    C1: float
    U1: PotentialSpec
    G: float
    Q2: float
    shunt_energy: Callable
    L_eff: Optional[float]
    center: float

    def potential(self, phi):
        phi = np.asarray(phi, dtype=float)
        return self.U1.value(phi) + self.shunt_energy(self.Q2 - self.G * phi)

    def spectrum(self, k: int = 4, half: float = 12.0, n: int = 2048) -> np.ndarray:
        """Lowest levels on a Dirichlet grid centred on the potential minimum."""
        grid = Grid1D(self.center - half, self.center + half, n)
        return ground_state_1d(self.potential, self.C1, grid, k=k, check=False).values


def gyrator_cap_reduce(U1: PotentialSpec, C1: float, g: PotentialSpec, G: float, Q2: float = 0.0) -> CapReduced:
    """Primary network (C1, U1) behind a gyrator terminated by a capacitor of energy g(v).

    Quadratic(L) as ``g`` stands for the capacitor energy v^2/2L, i.e. C = 1/L,
    and gives the shifted inductive term (phi1 - Q2/G)^2/(2C/G^2).
    """
    if G == 0:
        raise DomainError("gyration conductance must be non-zero")
    if C1 <= 0:
        raise DomainError("primary capacitance must be positive")
    if isinstance(g, Quadratic):
        C = 1.0 / g.L
        L_eff = C / G ** 2
        shunt = lambda q: np.atleast_1d(np.asarray(q, dtype=float)) ** 2 / (2.0 * C)
    else:
        L_eff = None
        shunt = legendre_dual(g)
    if isinstance(U1, Quadratic) and L_eff is not None:
        center = (Q2 / G / L_eff) / (1.0 / U1.L + 1.0 / L_eff)
    else:
        x = np.linspace(-20.0, 20.0, 4001)
        f = lambda p: float(np.asarray(U1.value(np.array([p])))[0] + shunt(Q2 - G * p)[0])
        i = int(np.argmin([f(p) for p in x]))
        center = float(minimize_scalar(f, bracket=(x[max(i - 1, 0)], x[i], x[min(i + 1, len(x) - 1)])).x) \
            if 0 < i < len(x) - 1 else float(x[i])
    return CapReduced(C1, U1, G, Q2, shunt, L_eff, center)


@dataclass
class IndReduced:
    """Extra kinetic term K(v) = -G v f'^-1(-G v) - f(f'^-1(-G v)) of the primary network."""

    G: float
    spec: PotentialSpec
    exponent: Optional[float]
    coefficient: Optional[float]
    C_eff: Optional[float]

    def kinetic(self, v):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        out = np.empty_like(v)
        for i, vi in enumerate(v):
            y = -self.G * vi
            x = _invert_derivative(self.spec, y)
            out[i] = y * x - float(self.spec.value(np.array([x]))[0])
        return out


def gyrator_ind_reduce(f: PotentialSpec, G: float) -> IndReduced:
    """Eliminate the secondary flux of an inductively terminated gyrator."""
    if G == 0:
        raise DomainError("gyration conductance must be non-zero")
    if isinstance(f, Quadratic):
        return IndReduced(G, f, 2.0, f.L * G * G / 2.0, f.L * G * G)
    if isinstance(f, PowerLaw) and f.is_symmetric and f.gamma > 1:
        g, b = f.gamma, f.beta
        expo = g / (g - 1.0)
        coef = (g - 1.0) * abs(G) ** expo / (g * (b * g) ** (1.0 / (g - 1.0)))
        return IndReduced(G, f, expo, coef, 2.0 * coef if g == 2 else None)
    if not _is_monotone_derivative(f):
        raise DomainError("the inductor derivative is not invertible")
    return IndReduced(G, f, None, None, None)


@dataclass
class GyratorFlowResult:
    flow: FlowResult
    L1: float
    C1: float
    G: float
    c2s: np.ndarray
    inverse_capacitance: np.ndarray
    frequencies: np.ndarray
    frequency_extrapolated: float
    expected_frequency: Optional[float]

    @property
    def verdict(self) -> str:
        return self.flow.verdict


def _curvature(phi, U):
    """a in U ~ a phi^2 + b phi^4, least squares."""
    X = np.column_stack([phi ** 2, phi ** 4])
    coef, *_ = np.linalg.lstsq(X, U, rcond=None)
    return float(coef[0])


def gyrator_bo_flow(spec: PotentialSpec, L1: float = 1.0, C1: float = 1.0, G: float = 1.0,
                    c2s=None, phi=None, jobs: int = 1) -> GyratorFlowResult:
    """BO flow of an LC resonator behind a gyrator terminated by a nonlinear resonator.

    The fast flux phi2 sees G^2 (phi2 + Q1/G)^2/2C1 + f(phi2): a series inductance
    C1/G^2 at flux -Q1/G. U_BO(Q1) plays the role of the slow charging energy,
    so the slow frequency is sqrt(kappa/L1) with kappa the curvature in Q1.
    """
    if c2s is None:
        c2s = decade_grid(1.0, 1e-6)
    if phi is None:
        phi = np.linspace(-2 * np.pi, 2 * np.pi, 33)
    Lser = C1 / G ** 2
    flow = flow_sweep(Lser, spec, c2s, phi, jobs=jobs)
    mask = flow.restricted
    # U(Q1) = a phi^2 with phi = -Q1/G, so the inverse capacitance is 2a/G^2
    kappa = np.array([2.0 * _curvature(flow.phi[mask], u[mask]) / G ** 2 for u in flow.U])
    freqs = np.sqrt(np.clip(kappa, 0.0, None) / L1)
    ext_kappa = extrapolate_flow(flow.cprimes, kappa, flow_exponents(flow.classification))
    f_ext = math.sqrt(max(ext_kappa, 0.0) / L1)
    expected = None
    cls = flow.classification
    if cls is not None:
        if cls.kind in ("Type1a", "Type1b"):
            expected = 0.0
        elif cls.kind == "Type2":
            expected = 1.0 / math.sqrt(L1 * C1)
        elif cls.kind == "TypeL":
            expected = 1.0 / math.sqrt(L1 * (C1 + cls.Lfrak * G ** 2))
    return GyratorFlowResult(flow, L1, C1, G, flow.cprimes, kappa, freqs, f_ext, expected)


@dataclass
class AlmostMathieu:
    matrix: sp.csr_matrix
    grid: Grid1D
    shift: int
    gkp: bool
    representation: str

    def spectrum(self, k: Optional[int] = None) -> np.ndarray:
        w = np.linalg.eigvalsh(self.matrix.toarray())
        return w if k is None else w[:k]


def is_gkp(G: float) -> bool:
    return abs(G - GKP_G) <= GKP_RTOL * GKP_G


def suggest_grid(G: float, per_shift: int = 32, max_denominator: int = 64) -> Optional[Grid1D]:
    """Periodic flux window holding whole periods of 2 pi and at least four shifts 1/G."""
    r = Fraction(1.0 / (2.0 * math.pi * abs(G))).limit_denominator(max_denominator)
    if r == 0 or abs(float(r) - 1.0 / (2.0 * math.pi * abs(G))) > COMMENSURATE_TOL * float(r):
        return None
    # 2 pi p = q/G is the shortest common period; repeat it until 4 shifts fit
    p, q = r.numerator, r.denominator
    k = -(-4 // q)
    return Grid1D(0.0, 2.0 * math.pi * p * k, max(k * q * per_shift, 64), "periodic")


def _shift_steps(length: float, h: float, what: str, G: float) -> int:
    s = length / h
    if abs(s - round(s)) > COMMENSURATE_TOL * max(1.0, abs(s)) or round(s) == 0:
        g = suggest_grid(G)
        hint = ("no periodic window holds whole periods of both 2 pi and 1/G" if g is None
                else f"try window [0, {g.hi:.12g}] with N = {g.n}")
        raise CommensurabilityError(f"{what} of {length:.12g} is {s:.6g} grid steps, not a whole number; {hint}")
    return int(round(s))


def almost_mathieu_build(EJ1: float, EJ2: float, G: float, grid: Grid1D,
                         representation: str = "flux") -> AlmostMathieu:
    """-E_J1 cos(phi) - E_J2 cos(Q/G) on a periodic grid.

    Flux representation: cos(phi) is diagonal and cos(Q/G) shifts the flux
    by +-1/G. Charge representation: the grid holds Q with spacing 2 pi/W
    (W the flux window) and cos(phi) shifts Q by +-1. Both shifts must be
    whole numbers of grid steps. The two representations are exact discrete
    Fourier partners and have identical spectra.
    """
    if grid.boundary != "periodic":
        raise DomainError("the almost Mathieu operator needs a periodic grid")
    if G == 0:
        raise DomainError("gyration conductance must be non-zero")
    W = grid.hi - grid.lo
    n = grid.n
    m = W / (2.0 * math.pi)
    if abs(m - round(m)) > COMMENSURATE_TOL * max(1.0, m):
        raise CommensurabilityError(f"flux window {W:.12g} is not a multiple of 2 pi")
    h = grid.spacing
    if representation == "flux":
        s = _shift_steps(1.0 / abs(G), h, "flux shift 1/G", G)
        x = grid.points
        H = _stencil(-EJ1 * np.cos(x), s, n, EJ2)
    elif representation == "charge":
        hq = 2.0 * math.pi / W
        s = int(round(1.0 / hq))
        _shift_steps(1.0 / abs(G), h, "flux shift 1/G", G)
        q = (np.arange(n) - n // 2) * hq
        H = _stencil(-EJ2 * np.cos(q / G), s, n, EJ1)
    else:
        raise DomainError(f"unknown representation {representation!r}")
    return AlmostMathieu(H, grid, s, is_gkp(G), representation)


def _stencil(diag, s, n, E):
    """diag - (E/2)(T^s + T^-s) with periodic wrap of the shift by s points."""
    i = np.arange(n)
    rows = np.concatenate([i, i])
    cols = np.concatenate([(i + s) % n, (i - s) % n])
    vals = np.full(2 * n, -0.5 * E)
    T = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return (sp.diags(diag) + T).tocsr()


@dataclass
class TransformerResult:
    n: float
    mass: float
    c: float
    linear: bool
    levels: np.ndarray
    gaps: np.ndarray
    potential: Callable
    info: dict = field(default_factory=dict)


def _argmin_scan(f, lo=-40.0, hi=40.0, n=8001):
    x = np.linspace(lo, hi, n)
    v = f(x)
    i = int(np.argmin(v))
    if 0 < i < n - 1:
        r = minimize_scalar(lambda t: float(f(np.array([t]))[0]), bracket=(x[i - 1], x[i], x[i + 1]))
        return float(r.x)
    return float(x[i])


def transformer_reduce(G1: float, G2: float, U1: PotentialSpec, U2: PotentialSpec, c: float = 0.0,
                       C1: float = 1.0, C2: float = 1.0, k: int = 4, half: float = 12.0,
                       npts: int = 2048) -> TransformerResult:
    """Singular cascade: phi1 = n phi2 + c with n = G2/G1.

    The reduced coordinate phi2 has mass n^2 C1 + C2 and potential
    U1(n phi2 + c) + U2(phi2). Levels are computed on a grid centred on the
    potential minimum; ``gaps`` are E_i - E_0, the quantities compared
    across c since an all-linear network only shifts its ground energy.
    """
    if G1 == 0 or G2 == 0:
        raise DomainError("gyration conductances must be non-zero")
    n = G2 / G1
    mass = n * n * C1 + C2
    linear = isinstance(U1, Quadratic) and isinstance(U2, Quadratic)

    def V(x):
        x = np.asarray(x, dtype=float)
        return U1.value(n * x + c) + U2.value(x)

    if linear:
        center = -(n * c / U1.L) / (n * n / U1.L + 1.0 / U2.L)
    else:
        center = _argmin_scan(V)
    grid = Grid1D(center - half, center + half, npts)
    w = ground_state_1d(V, mass, grid, k=k, check=False).values
    info = {}
    if linear:
        info["omega"] = math.sqrt((n * n / U1.L + 1.0 / U2.L) / mass)
    return TransformerResult(n, mass, c, linear, w, w - w[0], V, info)


@dataclass
class RegularTransformer:
    """H = (Q1 - G1 phi)^2/2C1 + U1(phi1) + (Q2 + G2 phi)^2/2C2 + U2(phi2) + Q^2/2C."""

    G1: float
    G2: float
    C1: float
    C2: float
    C: float
    U1: PotentialSpec
    U2: PotentialSpec

    @property
    def n(self):
        return self.G2 / self.G1

    @property
    def fast_frequency(self):
        return math.sqrt((self.G1 ** 2 / self.C1 + self.G2 ** 2 / self.C2) / self.C)

    def fast_potential(self, phi, phi1, phi2, Q1, Q2):
        phi = np.asarray(phi, dtype=float)
        return ((Q1 - self.G1 * phi) ** 2 / (2 * self.C1) + self.U1.value(np.asarray(phi1))
                + (Q2 + self.G2 * phi) ** 2 / (2 * self.C2) + self.U2.value(np.asarray(phi2)))

    def fast_ground(self, phi1, phi2, Q1, Q2) -> float:
        """Ground energy of the harmonic fast mode: sampled minimum plus omega/2.

        The fast potential is quadratic in phi, so three samples fix its
        minimum exactly.
        """
        x = np.array([-1.0, 0.0, 1.0])
        v = self.fast_potential(x, phi1, phi2, Q1, Q2)
        a = 0.5 * (v[2] + v[0] - 2 * v[1])
        b = 0.5 * (v[2] - v[0])
        vmin = v[1] - b * b / (4 * a)
        return float(vmin + 0.5 * self.fast_frequency)


def transformer_regular(G1, G2, U1, U2, C1=1.0, C2=1.0, C=1e-3) -> RegularTransformer:
    if C <= 0:
        raise DomainError("the regularising capacitance must be positive")
    if G1 == 0 or G2 == 0:
        raise DomainError("gyration conductances must be non-zero")
    return RegularTransformer(G1, G2, C1, C2, C, U1, U2)


def conservation_check(rt: RegularTransformer, samples: int = 100, delta: float = 1e-3,
                       direction: Optional[tuple] = None, seed: int = 0) -> float:
    """max |d E_fast / d s| along (dQ1, dQ2) = (1, -n)/sqrt(1 + n^2) at random slow points.

    A vanishing derivative means the BO Hamiltonian depends on Q1 + Q2/n only,
    so phi1 - n phi2 is conserved.
    """
    rng = np.random.default_rng(seed)
    d = np.array(direction if direction is not None else (1.0, -rt.n), dtype=float)
    d /= np.linalg.norm(d)
    worst = 0.0
    for _ in range(samples):
        p1, p2, q1, q2 = rng.uniform(-3, 3, 4)
        ep = rt.fast_ground(p1, p2, q1 + delta * d[0], q2 + delta * d[1])
        em = rt.fast_ground(p1, p2, q1 - delta * d[0], q2 - delta * d[1])
        worst = max(worst, abs(ep - em) / (2 * delta))
    return worst
