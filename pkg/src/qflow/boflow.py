"""Born-Oppenheimer potentials of a nonlinear inductor in series with L, and their C' -> 0 flows.

The fast Hamiltonian is H = Q_c^2/2C' + (phi - phi_c)^2/2L + U(phi_c) and the
BO potential is U_BO(phi) = E_0(phi) - E_0(0).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError
from .potentials import (
    Cosine,
    PiecewiseLinear,
    PotentialSpec,
    PowerLaw,
    Quadratic,
    SelfSimilar,
    Sum,
    Tabulated,
)
from .spectral import Grid1D, ground_state_1d

HBAR = 1.0
VERDICT_TOL = 0.02
# distances closer than this (relative to the short-circuit scale) are below
# the resolution of E_0(phi) - E_0(0) and count as equal in monotonicity tests
NOISE_FLOOR = 1e-4
# grid points per standard deviation of the fast ground state
SIGMA_POINTS = 120.0
# half-width of the fast grid beyond the state centre, in standard deviations
TAIL_SIGMAS = 9.0
# Richardson terms and the trailing decades of C' they are fitted over
RICHARDSON_TERMS = 3
RICHARDSON_DECADES = 3.0


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("QFLOW_JOBS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items, jobs: int = 1):
    """Order-preserving map, in worker processes when jobs > 1."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


@dataclass(frozen=True)
class InductorClass:
    kind: str
    gamma: Optional[float] = None
    Lfrak: Optional[float] = None
    reason: str = ""
    # exact growth exponent when the potential is a pure symmetric power law
    power: Optional[float] = None

    @property
    def expected_verdict(self) -> Optional[str]:
        return {
            "Type1a": "OpenCircuit",
            "Type1b": "OpenCircuit",
            "Type2": "ShortCircuit",
            "TypeL": "LinearInductor",
        }.get(self.kind)


def classify(spec: PotentialSpec) -> InductorClass:
    """Growth class of an inductive potential.

    Type 1 grows slower than |phi|^gamma for some gamma < 2 (1a: symmetric;
    1b: gamma < 1), type 2 faster than phi^2, type L is phi^2/2Lfrak plus a
    type-1 remainder. ``gamma`` is a witness exponent.
    """
    if isinstance(spec, Tabulated):
        raise DomainError("tabulated potentials have no asymptotic growth class")
    if isinstance(spec, Cosine):
        return InductorClass("Type1b", 0.5, reason="bounded")
    if isinstance(spec, Quadratic):
        return InductorClass("TypeL", Lfrak=spec.L, reason="quadratic")
    if isinstance(spec, PowerLaw):
        g = spec.gamma
        if spec.is_symmetric:
            if g < 2:
                return InductorClass("Type1a", 0.5 * (g + 2.0), reason=f"|phi|^{g:g}", power=g)
            if g == 2:
                return InductorClass("TypeL", Lfrak=1.0 / (2.0 * spec.beta), reason="quadratic")
            return InductorClass("Type2", reason=f"|phi|^{g:g}", power=g)
        if g < 1:
            return InductorClass("Type1b", 0.5 * (g + 1.0), reason=f"sign(phi)|phi|^{g:g}")
        return InductorClass("Unclassified", reason="asymmetric growth with exponent >= 1")
    if isinstance(spec, PiecewiseLinear):
        if spec.a == 0:
            return InductorClass("Type1a", 1.5, reason="symmetric |phi|", power=1.0)
        return InductorClass("Unclassified", reason="asymmetric linear growth")
    if isinstance(spec, SelfSimilar):
        return InductorClass("Unclassified", reason="log-periodic growth")
    if isinstance(spec, Sum):
        classes = [classify(t) for t in spec.terms]
        kinds = {c.kind for c in classes}
        if "Unclassified" in kinds:
            return InductorClass("Unclassified", reason="unclassified term")
        if "Type2" in kinds:
            return InductorClass("Type2", reason="super-quadratic term dominates")
        if "TypeL" in kinds:
            inv = sum(1.0 / c.Lfrak for c in classes if c.kind == "TypeL")
            return InductorClass("TypeL", Lfrak=1.0 / inv, reason="quadratic plus type-1 terms")
        gammas = [c.gamma for c in classes]
        if all(c.kind == "Type1a" for c in classes):
            return InductorClass("Type1a", max(gammas), reason="sum of type-1a terms")
        if all(c.kind == "Type1b" or (c.kind == "Type1a" and c.gamma < 1) for c in classes):
            return InductorClass("Type1b", max(gammas), reason="sum of sublinear terms")
        if spec.symmetric:
            return InductorClass("Type1a", max(gammas), reason="symmetric sum of type-1 terms")
        return InductorClass("Unclassified", reason="mixed asymmetric type-1 terms")
    raise DomainError(f"cannot classify {spec!r}")


@dataclass(frozen=True)
class FastScales:
    """omega' = 1/sqrt(L C'), Phi_ZPF = sqrt(hbar) (L/C')^(1/4), eps = sqrt(L)/Phi_ZPF."""

    L: float
    Cprime: float

    def __post_init__(self):
        if self.L <= 0 or self.Cprime <= 0:
            raise DomainError("L and C' must be positive")

    @property
    def omega(self):
        return 1.0 / math.sqrt(self.L * self.Cprime)

    @property
    def phi_zpf(self):
        return math.sqrt(HBAR) * (self.L / self.Cprime) ** 0.25

    @property
    def eps(self):
        return math.sqrt(self.L) / self.phi_zpf


def _feature_length(spec: PotentialSpec) -> float:
    if isinstance(spec, Cosine):
        return 1.0 if spec.EJ > 0 else math.inf
    if isinstance(spec, Sum):
        return min(_feature_length(t) for t in spec.terms)
    return math.inf


@dataclass
class BOResult:
    phi: np.ndarray
    U: np.ndarray
    energies: np.ndarray
    E_ref: float
    min_gap: float
    Cprime: float
    L: float
    grid: Grid1D
    scales: FastScales


def _fast_potential(L, spec, phi):
    return lambda x: (phi - x) ** 2 / (2.0 * L) + spec.value(x)


def _mean_position(r):
    w = r.vectors[:, 0] ** 2
    return float(w @ r.grid.points / w.sum())


def bo_potential(L: float, spec: PotentialSpec, Cprime: float, phi, rtol: float = 1e-6,
                 method: str = "difference", sigma_points: float = SIGMA_POINTS) -> BOResult:
    """Born-Oppenheimer potential on the flux samples ``phi``.

    The fast grid is sized at the reference point phi = 0 and at the
    outermost samples (tail decay and Richardson check), then every sample
    is solved on that common grid so discretisation errors largely cancel
    in E_0(phi) - E_0(0).

    ``method="force"`` instead integrates the Hellmann-Feynman force
    dE_0/dphi = (phi - <phi_c>)/L from 0 with Gauss-Legendre quadrature.
    It avoids subtracting two large energies and stays accurate when
    E_0 is many orders of magnitude above U_BO.
    """
    if method not in ("difference", "force"):
        raise DomainError(f"unknown BO method {method!r}")
    phi = np.asarray(phi, dtype=float)
    sc = FastScales(L, Cprime)
    Z = sc.phi_zpf
    reach = float(np.max(np.abs(phi))) if phi.size else 0.0
    feat = _feature_length(spec)
    mass = Cprime
    probes = [0.0] + ([reach, -reach] if reach > 0 else [])
    # coarse pass: locate each probe state and measure its width
    coarse = ground_state_1d(_fast_potential(L, spec, 0.0), mass,
                             Grid1D.around(0.0, reach + 8.0 * Z, min(Z / 16.0, feat / 10.0)), k=2, check=False)
    half, h = 0.0, math.inf
    for ph in probes:
        r = ground_state_1d(_fast_potential(L, spec, ph), mass, coarse.grid, k=2, check=False)
        x = r.grid.points
        w = r.vectors[:, 0] ** 2
        w = w / w.sum()
        mu = float(w @ x)
        sigma = math.sqrt(max(float(w @ (x - mu) ** 2), 1e-300))
        half = max(half, abs(mu) + TAIL_SIGMAS * sigma)
        h = min(h, sigma / sigma_points, feat / 20.0)
    grid = Grid1D.around(0.0, half, h)
    for ph in probes:
        r = ground_state_1d(_fast_potential(L, spec, ph), mass, grid, k=2, rtol=rtol)
        g = r.grid
        if g.spacing < grid.spacing * 0.999 or (g.hi - g.lo) > (grid.hi - grid.lo) * 1.001:
            grid = Grid1D.around(0.0, max(g.hi - g.lo, grid.hi - grid.lo) / 2.0, min(g.spacing, grid.spacing))

    def solve(ph):
        return ground_state_1d(_fast_potential(L, spec, ph), mass, grid, k=2, check=False)

    ref = solve(0.0)
    E0 = float(ref.values[0])
    E = np.empty(phi.shape)
    gaps = np.empty(phi.shape)
    for i, ph in enumerate(phi):
        r = solve(ph)
        E[i] = r.values[0]
        gaps[i] = r.values[1] - r.values[0]
    if method == "difference":
        U = E - E0
    else:
        U = _force_integral(L, phi, solve)
    return BOResult(phi, U, E, E0, float(gaps.min()) if gaps.size else float("nan"), Cprime, L, grid, sc)


FORCE_NODES = 8


def _force_integral(L, phi, solve):
    """U(phi) = int_0^phi (s - <phi_c>_s)/L ds, accumulated between sorted samples."""
    xg, wg = np.polynomial.legendre.leggauss(FORCE_NODES)
    U = np.zeros(phi.shape)
    for sign in (1.0, -1.0):
        idx = [i for i in np.argsort(sign * phi) if sign * phi[i] > 0]
        acc, prev = 0.0, 0.0
        for i in idx:
            a, b = prev, float(phi[i])
            s = 0.5 * (b - a) * xg + 0.5 * (a + b)
            f = np.array([(si - _mean_position(solve(si))) / L for si in s])
            acc += 0.5 * (b - a) * float(wg @ f)
            U[i] = acc
            prev = b
    return U


def aitken(seq) -> float:
    """Aitken delta-squared limit of the last three terms of a geometric-like sequence.

    This is Richardson extrapolation with the convergence ratio estimated
    from the data; without a contracting ratio the last term is returned.
    """
    s = np.asarray(seq, dtype=float)
    if len(s) < 3:
        return float(s[-1])
    s0, s1, s2 = s[-3:]
    d1, d2 = s1 - s0, s2 - s1
    denom = d2 - d1
    if d1 == 0.0 or denom == 0.0:
        return float(s2)
    r = d2 / d1
    if not (0.0 < r < 1.0):
        return float(s2)
    return float(s2 - d2 * d2 / denom)


def flow_exponents(cls: Optional[InductorClass], count: int = RICHARDSON_TERMS):
    """Leading powers of C' in the approach of U_BO to its limit, when the class fixes them.

    For sym. |phi|^gamma with gamma < 2 the fast problem depends on C' through
    lambda ~ C'^((2 - gamma)/4) and the flux expansion through C'^(1/2); for
    gamma > 2 the anharmonic length gives powers of C'^((gamma - 2)/(gamma + 2)).
    Returns None when the class gives no power law (e.g. exponential approach).
    """
    if cls is None or cls.power is None:
        return None
    g = cls.power
    if g < 2:
        bases = [(2.0 - g) / 4.0, 0.5]
    elif g > 2:
        bases = [(g - 2.0) / (g + 2.0)]
    else:
        return None
    out = set()
    for k in range(count + 1):
        for m in range(count + 1):
            e = k * bases[0] + (m * bases[1] if len(bases) > 1 else 0.0)
            if e > 0:
                out.add(round(e, 12))
    return sorted(out)[:count]


def richardson(x, values, exponents) -> float:
    """Limit at x -> 0 of values ~ s + sum_k A_k x^p_k (least squares when overdetermined)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    K = min(len(exponents), len(x) - 1)
    if K < 1:
        return float(v[-1])
    X = np.column_stack([np.ones_like(x)] + [x ** p for p in exponents[:K]])
    coef, *_ = np.linalg.lstsq(X, v, rcond=None)
    return float(coef[0])


def extrapolate_flow(cprimes, values, exponents=None, decades: float = RICHARDSON_DECADES) -> float:
    """C' -> 0 limit of a sequence from a sweep: Richardson with known powers, else Aitken."""
    cprimes = np.asarray(cprimes, dtype=float)
    values = np.asarray(values, dtype=float)
    if exponents is None:
        return aitken(values)
    logc = np.log10(cprimes)
    sel = logc <= logc.min() + decades + 1e-9
    return richardson(cprimes[sel], values[sel], exponents)


def _bo_task(args):
    L, spec, cp, phi, rtol, method, sigma_points = args
    return bo_potential(L, spec, cp, phi, rtol, method, sigma_points)


@dataclass
class FlowResult:
    cprimes: np.ndarray
    phi: np.ndarray
    U: np.ndarray
    verdict: str
    distances: dict
    extrapolated: dict
    decreasing: dict
    classification: Optional[InductorClass]
    consistent: Optional[bool]
    scale: float
    restricted: np.ndarray
    min_gaps: np.ndarray
    tail: np.ndarray = field(default=None)

    @property
    def sup_norm(self) -> np.ndarray:
        return np.max(np.abs(self.U[:, self.restricted]), axis=1)

    def candidate(self, name: str, L: float, Lfrak: Optional[float] = None):
        phi = self.phi
        if name == "OpenCircuit":
            return np.zeros_like(phi)
        if name == "ShortCircuit":
            return phi ** 2 / (2 * L)
        return phi ** 2 / (2 * (L + Lfrak))


def decade_grid(start: float, stop: float, per_decade: int = 1) -> np.ndarray:
    a, b = math.log10(start), math.log10(stop)
    n = int(round(abs(b - a) * per_decade)) + 1
    return 10.0 ** np.linspace(a, b, n)


def flow_sweep(
    L: float,
    spec: PotentialSpec,
    cprimes=None,
    phi=None,
    jobs: int = 1,
    tol: float = VERDICT_TOL,
    rtol: float = 1e-6,
    method: str = "difference",
    sigma_points: float = SIGMA_POINTS,
) -> FlowResult:
    """BO potentials over decreasing C' and the limit they approach.

    Candidates are the open circuit 0, the short circuit phi^2/2L and, for
    a type-L element, phi^2/2(L + Lfrak). A candidate is accepted when its
    sup-norm distance on |phi| <= max|phi|/2, relative to max phi^2/2L there,
    is non-increasing over the tail of the sweep (the last half, at least
    3 decades) and its extrapolated value is below ``tol``. Extrapolation is
    Richardson in the powers of C' fixed by the growth class when there are
    such powers, and Aitken otherwise.
    """
    if cprimes is None:
        cprimes = decade_grid(1.0, 1e-6)
    if phi is None:
        phi = np.linspace(-2 * np.pi, 2 * np.pi, 33)
    cprimes = np.sort(np.asarray(cprimes, dtype=float))[::-1]
    phi = np.asarray(phi, dtype=float)
    span = math.log10(cprimes[0] / cprimes[-1])
    if span < 4 - 1e-9:
        raise DomainError("a flow sweep needs at least 4 decades of C'")
    try:
        cls = classify(spec)
    except DomainError:
        cls = None
    results = parallel_map(_bo_task, [(L, spec, cp, phi, rtol, method, sigma_points) for cp in cprimes], jobs)
    U = np.array([r.U for r in results])
    gaps = np.array([r.min_gap for r in results])
    restricted = np.abs(phi) <= 0.5 * np.max(np.abs(phi)) + 1e-12
    scale = float(np.max(phi[restricted] ** 2 / (2 * L)))
    names = ["OpenCircuit", "ShortCircuit"]
    if cls is not None and cls.kind == "TypeL":
        names.append("LinearInductor")
    logc = np.log10(cprimes)
    tail = logc <= logc[-1] + max(3.0, span / 2.0) + 1e-9
    dist, extrap, decr = {}, {}, {}
    exps = flow_exponents(cls)
    probe = FlowResult(cprimes, phi, U, "", {}, {}, {}, cls, None, scale, restricted, gaps)
    for name in names:
        X = probe.candidate(name, L, cls.Lfrak if cls is not None else None)
        d = np.max(np.abs(U[:, restricted] - X[restricted]), axis=1) / scale
        dist[name] = d
        dt = d[tail]
        decr[name] = bool(np.all(np.diff(dt) <= NOISE_FLOOR))
        extrap[name] = extrapolate_flow(cprimes, d, exps)
    ok = [n for n in names if decr[n] and abs(extrap[n]) <= tol]
    verdict = min(ok, key=lambda n: abs(extrap[n])) if ok else "NoLimit"
    expected = cls.expected_verdict if cls is not None else None
    consistent = None if expected is None else (verdict == expected)
    return FlowResult(cprimes, phi, U, verdict, dist, extrap, decr, cls, consistent, scale, restricted, gaps, tail)


@dataclass
class PathologicalResult:
    masses: np.ndarray
    x: np.ndarray
    E0: np.ndarray
    U: np.ndarray
    scaling_ratios: list
    fit_residual: float
    amplitude: float
    flow: FlowResult


PERIOD_DECADES = 8.0
# the force integral is insensitive to grid density; a coarser grid keeps the
# 16-decade sweep fast
PATHOLOGICAL_SIGMA_POINTS = 40.0


def _periodic_fit(u, y, period, harmonics=None):
    """Least-squares Fourier series with the given period.

    By default every harmonic the sampling resolves (up to Nyquist) is used.
    """
    if harmonics is None:
        du = float(np.min(np.diff(np.sort(u))))
        harmonics = max(1, int(math.floor(period / du / 2.0 + 1e-9)))
    cols = [np.ones_like(u)]
    for k in range(1, harmonics + 1):
        w = 2 * np.pi * k * u / period
        cols += [np.cos(w), np.sin(w)]
    X = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    fit = X @ coef
    return fit, float(np.max(np.abs(y - fit)))


def pathological_study(masses=None, x_probe: float = 10.0, L: float = 5.0, jobs: int = 1, rtol: float = 1e-6):
    """BO flow of the log-periodic potential over several scaling periods of the mass.

    The fast Hamiltonian is p^2/2m + U(y) + (y - x)^2/10 (L = 5, C' = m).
    Reports E_0(x=0) scaling between masses 1e8 apart, a periodic fit of
    U_BO(x_probe) against log10(1/m) with period 8 decades, and the flow verdict.
    U_BO comes from the force integral because E_0 grows to ~1e10 here.
    """
    if masses is None:
        masses = decade_grid(1e-4, 1e-20, 2)
    masses = np.sort(np.asarray(masses, dtype=float))[::-1]
    if masses[0] / masses[-1] < 1e16 * (1 - 1e-9):
        raise DomainError("masses must span at least two scaling periods (16 decades)")
    x = np.linspace(-2 * x_probe, 2 * x_probe, 9)
    flow = flow_sweep(L, SelfSimilar(), masses, x, jobs=jobs, rtol=rtol, method="force",
                      sigma_points=PATHOLOGICAL_SIGMA_POINTS)
    E0 = np.array([_e0_at_zero(L, m, rtol) for m in masses])
    ratios = []
    logm = np.log10(masses)
    for i, lm in enumerate(logm):
        j = np.where(np.abs(logm - (lm - PERIOD_DECADES)) < 1e-9)[0]
        if j.size:
            ratios.append((float(masses[i]), float(E0[j[0]] / E0[i])))
    ip = int(np.argmin(np.abs(x - x_probe)))
    u = -logm
    y = flow.U[:, ip]
    fit, resid = _periodic_fit(u, y, PERIOD_DECADES)
    amp = 0.5 * float(fit.max() - fit.min())
    return PathologicalResult(masses, x, E0, flow.U, ratios, resid, amp, flow)


def _e0_at_zero(L, m, rtol):
    sc = FastScales(L, m)
    grid = Grid1D.around(0.0, 7.0 * sc.phi_zpf, sc.phi_zpf / 32.0)
    return ground_state_1d(_fast_potential(L, SelfSimilar(), 0.0), m, grid, rtol=rtol).values[0]


@dataclass
class AsymmetricResult:
    cprimes: np.ndarray
    phi_zpf: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    c1_pred: np.ndarray
    c2_pred: np.ndarray
    phi_m: np.ndarray
    dphi: np.ndarray
    c1_limit: float
    c1_extrapolated: float
    dphi_increasing: bool
    ratio_decreasing: bool

    @property
    def ratio(self):
        return self.dphi / np.abs(self.phi_m)


def asymmetric_study(a: float, b: float, L: float = 1.0, cprimes=None, phi=None, C: float = 1.0,
                     jobs: int = 1, rtol: float = 1e-6) -> AsymmetricResult:
    """Quadratic fit U_BO ~ c1 phi + c2 phi^2 for the piecewise-linear element.

    The slow well sits at phi_m = -c1/2c2 with width dphi = (hbar^2/(2 c2 C))^(1/4).
    c1 is a series in 1/Phi_ZPF ~ C'^(1/4) and is extrapolated in those powers.
    """
    if cprimes is None:
        cprimes = decade_grid(1.0, 1e-8)
    if phi is None:
        phi = np.linspace(-2 * np.pi, 2 * np.pi, 33)
    cprimes = np.sort(np.asarray(cprimes, dtype=float))[::-1]
    phi = np.asarray(phi, dtype=float)
    spec = PiecewiseLinear(a, b)
    results = parallel_map(_bo_task, [(L, spec, cp, phi, rtol, "difference", SIGMA_POINTS) for cp in cprimes], jobs)
    mask = np.abs(phi) <= 0.5 * np.max(np.abs(phi)) + 1e-12
    X = np.column_stack([phi[mask], phi[mask] ** 2])
    c1, c2 = [], []
    for r in results:
        coef, *_ = np.linalg.lstsq(X, r.U[mask], rcond=None)
        c1.append(coef[0])
        c2.append(coef[1])
    c1, c2 = np.array(c1), np.array(c2)
    Z = np.array([FastScales(L, cp).phi_zpf for cp in cprimes])
    sp = math.sqrt(math.pi)
    c1_pred = a * b / 2 - a * (2 + a) * b * b * L / (2 * sp * Z)
    c2_pred = (2 + a) * b / (2 * sp * Z)
    phi_m = -c1 / (2 * c2)
    dphi = (HBAR ** 2 / (2 * c2 * C)) ** 0.25
    logc = np.log10(cprimes)
    tail = logc <= logc[-1] + 3.0 + 1e-9
    ratio = dphi / np.abs(phi_m)
    return AsymmetricResult(
        cprimes, Z, c1, c2, c1_pred, c2_pred, phi_m, dphi, a * b / 2,
        extrapolate_flow(cprimes, c1, [0.25, 0.5, 0.75]),
        bool(np.all(np.diff(dphi[tail]) > 0)), bool(np.all(np.diff(ratio[tail]) < 0)),
    )


def radius_bound(phi: float, alpha: float, n: int, L: float, gamma: float, beta: float, M: float,
                 Ap: float, Bp: float) -> float:
    """Lower bound r_n on the convergence radius of the perturbation series.

    r_n = 1/(2a + (3n + 2) b + 1) with
    a = max(phi^2/2L + 1, alpha^gamma M + L^(gamma/2) beta (A' + 2B')) and
    b = max(1, 2 L^(gamma/2) beta B'), using A = phi/2 sqrt(L), B = sqrt(L)/2 phi.
    A', B' must satisfy |y|^gamma <= B' y^2 + A'.
    """
    if not (0 < gamma < 2):
        raise DomainError("gamma must lie in (0, 2)")
    if L <= 0 or beta < 0 or M < 0 or alpha < 0 or n < 0 or Bp <= 0:
        raise DomainError("invalid bound parameters")
    need = (1 - gamma / 2) * (gamma / (2 * Bp)) ** (gamma / (2 - gamma))
    if Ap < need * (1 - 1e-12):
        raise DomainError(f"A' = {Ap} too small for B' = {Bp}; need A' >= {need}")
    lg = L ** (gamma / 2)
    a = max(phi * phi / (2 * L) + 1.0, alpha ** gamma * M + lg * beta * (Ap + 2 * Bp))
    b = max(1.0, 2 * lg * beta * Bp)
    return 1.0 / (2 * a + (3 * n + 2) * b + 1)


@dataclass
class OracleResult:
    E_bo: float
    E_exact: float
    grids: tuple

    @property
    def relative(self) -> float:
        return abs(self.E_bo - self.E_exact) / abs(self.E_exact)


def bo_vs_exact(L: float, spec: PotentialSpec, Cprime: float, C: float = 1.0, L0: float = 1.0,
                n_slow: int = 128, n_fast: int = 256) -> OracleResult:
    """Ground energy of the series circuit, BO against the full two-variable solve.

    H = P^2/2C + p^2/2C' + phi^2/2L0 + (phi - y)^2/2L + U(y). The inductor L0
    to ground keeps the slow mode bound for every growth class. Both methods
    share the same product grid, so the difference isolates the adiabatic error.
    """
    from .spectral import ground_state_2d

    sc_fast = FastScales(L, Cprime)
    slow_half = 9.0 * (L0 / C) ** 0.25 / math.sqrt(2.0)
    fast_half = slow_half + 9.0 * sc_fast.phi_zpf / math.sqrt(2.0)
    gs = Grid1D(-slow_half, slow_half, n_slow)
    gf = Grid1D(-fast_half, fast_half, n_fast)

    def V(x, y):
        return x ** 2 / (2 * L0) + (x - y) ** 2 / (2 * L) + spec.value(y)

    exact = ground_state_2d(V, (0.5 / C, 0.5 / Cprime), gs, gf, k=1)
    fast = np.array([ground_state_1d(_fast_potential(L, spec, x), Cprime, gf, k=1, check=False).values[0]
                     for x in gs.points])
    table = dict(zip(gs.points.round(12), fast))
    slow_v = lambda x: np.array([table[v] for v in np.round(np.atleast_1d(x), 12)]) + np.asarray(x) ** 2 / (2 * L0)
    bo = ground_state_1d(slow_v, C, gs, k=1, check=False)
    return OracleResult(float(bo.values[0]), float(exact.values[0]), (gs, gf))
