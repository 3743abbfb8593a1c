"""Reduction of singular circuit Lagrangians to a regular Hamiltonian.

Pipeline: split off the kernel of C, bring the kernel block of A to
canonical form, fix the gauge so the kernel variables pair up as
(position, momentum) or become constrained, then eliminate the constrained
variables by solving their stationarity conditions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, UnresolvableConstraintError
from .lagrangian import CircuitLagrangian, PotentialTerm, hamiltonian_frequencies
from .potentials import Cosine, PotentialSpec, Quadratic, Sum

SCAN_SAMPLES = 4096
ROOT_XTOL = 1e-12
RESIDUAL_TOL = 1e-10


def _fix_signs(V):
    V = V.copy()
    for j in range(V.shape[1]):
        i = np.argmax(np.abs(V[:, j]))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V


def kernel_split(C: np.ndarray):
    """Orthogonal B with B^T C B = diag(C', 0_k).

    Returns (B, Cprime, n, k); the first n columns of B span the image.
    Eigenvalues below eps * trace(C) * dim count as kernel.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DomainError("capacitance matrix must be square")
    if not np.allclose(C, C.T, atol=1e-14 * max(1.0, np.abs(C).max())):
        raise DomainError("capacitance matrix must be symmetric")
    m = C.shape[0]
    w, V = np.linalg.eigh(C)
    tol = np.finfo(float).eps * max(np.trace(C), 1e-300) * m
    if w[0] < -tol:
        raise DomainError("capacitance matrix has a negative eigenvalue")
    pos = w >= tol
    B = _fix_signs(np.hstack([V[:, pos], V[:, ~pos]]))
    n = int(pos.sum())
    Cp = np.diag(w[pos])
    return B, Cp, n, m - n


def youla_block(Lam: np.ndarray, rtol: float = 1e-10):
    """Canonical form of an antisymmetric block.

    Returns (D, App, l, j, d) with D orthogonal and
    D^T Lam D = (App - App^T)/2, App = [[0, diag(d), 0], [0, 0, 0], [0, 0, 0]]
    in (a, b, c) blocks of sizes (l, l, j). Columns come from eigenvectors of
    Lam^2: each pair (a_i, b_i) spans an eigenspace with eigenvalue -(d_i/2)^2,
    with a_i = Lam b_i / (d_i/2).
    """
    Lam = np.asarray(Lam, dtype=float)
    k = Lam.shape[0]
    if k == 0:
        return np.zeros((0, 0)), np.zeros((0, 0)), 0, 0, np.zeros(0)
    Lam = 0.5 * (Lam - Lam.T)
    mu, V = np.linalg.eigh(Lam @ Lam)
    scale = max(1.0, np.abs(Lam).max()) ** 2
    zero = np.abs(mu) <= rtol * scale
    a_cols, b_cols, ds = [], [], []
    idx = np.where(~zero)[0]
    groups = []
    for i in idx:
        if groups and abs(mu[i] - mu[groups[-1][-1]]) <= 1e-8 * abs(mu[i]):
            groups[-1].append(i)
        else:
            groups.append([i])
    for g in groups:
        S = V[:, g]
        s = np.sqrt(-np.mean(mu[g]))
        while S.shape[1] >= 2:
            # deterministic pick: project basis vectors from the last one backwards
            P = S @ S.T
            proj = P[:, ::-1]
            u = proj[:, np.argmax(np.linalg.norm(proj, axis=0))]
            u = u / np.linalg.norm(u)
            v = Lam @ u / s
            b_cols.append(u)
            a_cols.append(v)
            ds.append(2.0 * s)
            S = S - np.outer(u, u @ S) - np.outer(v, v @ S)
            U, sv, _ = np.linalg.svd(S, full_matrices=False)
            S = U[:, sv > 0.5]
        if S.shape[1]:
            raise DomainError("odd-dimensional eigenspace in antisymmetric block")
    c_cols = [V[:, i] for i in np.where(zero)[0]]
    l, j = len(ds), len(c_cols)
    D = np.column_stack(a_cols + b_cols + c_cols) if k else np.zeros((0, 0))
    d = np.array(ds)
    App = np.zeros((k, k))
    App[:l, l:2 * l] = np.diag(d)
    return D, App, l, j, d


def gauge_fix(Ahat: np.ndarray, n: int, l: int, j: int):
    """Gauge transform to the upper block form [[A', Atilde], [0, A'']].

    ``Ahat`` must be antisymmetric and already in the canonical kernel basis.
    Returns (A_fixed, F) with A_fixed = Ahat + F + F^T.
    """
    m = Ahat.shape[0]
    F = np.zeros((m, m))
    F[:n, n:] = Ahat[:n, n:]
    # half of the upper-triangular A'' (entries d/2 between the a and b blocks)
    F[n:n + l, n + l:n + 2 * l] = Ahat[n:n + l, n + l:n + 2 * l]
    Afix = Ahat + F + F.T
    return Afix, F


@dataclass
class ConstraintRecord:
    kind: str
    detail: str
    vector: Optional[np.ndarray] = None


def find_roots(g, lo: float, hi: float, samples: int = SCAN_SAMPLES, xtol: float = ROOT_XTOL, scale: float = 1.0):
    """All roots of a vectorised scalar function on [lo, hi].

    Dense scan for sign changes, then bracketing refinement to ``xtol``.
    Touching roots are picked up from local minima of |g|.
    """
    x = np.linspace(lo, hi, samples)
    y = np.asarray(g(x), dtype=float)
    g1 = lambda t: float(g(np.array([t]))[0])
    tol = RESIDUAL_TOL * max(1.0, scale)
    roots = list(x[y == 0.0])
    for i in np.where(y[:-1] * y[1:] < 0.0)[0]:
        roots.append(brentq(g1, x[i], x[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))
    a = np.abs(y)
    dips = np.where((a[1:-1] < a[:-2]) & (a[1:-1] < a[2:]) & (y[:-2] * y[1:-1] > 0) & (y[1:-1] * y[2:] > 0))[0] + 1
    for i in dips:
        res = minimize_scalar(lambda t: abs(g1(t)), bounds=(x[i - 1], x[i + 1]), method="bounded", options={"xatol": xtol})
        if res.fun < tol:
            roots.append(res.x)
    out = []
    for r in sorted(roots):
        if not out or abs(r - out[-1]) > 10 * xtol:
            out.append(r)
    return np.array(out)


@dataclass
class ReducedHamiltonian:
    """Hamiltonian on the surviving variables after constraint elimination.

    Positions x = (s, psi_a) and momenta p = (Q_s, Q_a). The kernel
    variables psi_b = d^-1 Q_a are momenta in disguise; psi_c are fixed by
    stationarity of H. ``psi' = P s + p0`` allows for an integrated velocity
    constraint.
    """

    T: np.ndarray
    n: int
    l: int
    j: int
    Cinv: np.ndarray
    Aprime: np.ndarray
    At: np.ndarray
    d: np.ndarray
    terms: list
    P: np.ndarray
    p0: np.ndarray
    constraints: list = field(default_factory=list)
    branched: bool = False
    max_branches: int = 1
    labels: list = field(default_factory=list)

    @property
    def ns(self) -> int:
        return self.P.shape[1]

    @property
    def dof(self) -> int:
        return self.ns + self.l

    @property
    def is_linear(self) -> bool:
        return all(isinstance(t.spec, Quadratic) for t in self.terms)

    def _split(self, x, p):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if x.shape[0] != self.dof or p.shape[0] != self.dof:
            raise DomainError(f"expected {self.dof} positions and momenta")
        s, xa = x[: self.ns], x[self.ns:]
        Qs, Qa = p[: self.ns], p[self.ns:]
        return s, xa, Qs, Qa

    def full_psi(self, x, p, psi_c):
        s, xa, Qs, Qa = self._split(x, p)
        psi_p = self.P @ s + self.p0
        psi_b = Qa / self.d if self.l else np.zeros(0)
        return np.concatenate([psi_p, xa, psi_b, np.atleast_1d(psi_c)])

    def node_flux(self, x, p, psi_c):
        return self.T @ self.full_psi(x, p, psi_c)

    def _canonical_kinetic(self, x, p, psi_c):
        """Q' - A' psi' - Atilde psi'' expressed in the reduced coordinates."""
        s, xa, Qs, Qa = self._split(x, p)
        psi = self.full_psi(x, p, psi_c)
        psi_p = psi[: self.n]
        psi_k = psi[self.n:]
        return Qs - self.P.T @ (self.Aprime @ psi_p + self.At @ psi_k), psi

    def energy(self, x, p, psi_c):
        kin, psi = self._canonical_kinetic(x, p, psi_c)
        u = 0.0
        phi = self.T @ psi
        for t in self.terms:
            u += float(t.spec.value(t.row @ phi + t.offset))
        return 0.5 * kin @ self.Cinv @ kin + u

    def constraint_residual(self, x, p, psi_c):
        """dH/dpsi_c, which vanishes on the constraint surface."""
        if self.j == 0:
            return np.zeros(0)
        kin, psi = self._canonical_kinetic(x, p, psi_c)
        phi = self.T @ psi
        grad_phi = np.zeros(len(phi))
        for t in self.terms:
            grad_phi += t.row * float(t.spec.derivative(t.row @ phi + t.offset))
        grad_psi = self.T.T @ grad_phi
        Atc = self.P.T @ self.At[:, 2 * self.l:]
        return grad_psi[self.n + 2 * self.l:] - Atc.T @ (self.Cinv @ kin)

    def solve_constraints(self, x, p):
        return solve_constraints(self, x, p)

    def energy_branches(self, x, p):
        """Energies on every constraint branch at (x, p), ascending."""
        roots = solve_constraints(self, x, p)
        return np.sort([self.energy(x, p, r) for r in roots])

    def linear_form(self):
        """Quadratic matrix M, H = z^T M z / 2 with z = (x, p), after eliminating psi_c.

        Only for linear circuits. Built from second differences of H, which
        are exact for a quadratic form.
        """
        if not self.is_linear:
            raise DomainError("linear_form needs an all-quadratic circuit")
        N = 2 * self.dof + self.j
        saved = [t.offset for t in self.terms]
        for t in self.terms:
            t.offset = 0.0
        try:
            def h(z):
                x = z[: self.dof]
                p = z[self.dof: 2 * self.dof]
                c = z[2 * self.dof:]
                return self.energy(x, p, c)

            H = np.zeros((N, N))
            E = np.eye(N)
            for a in range(N):
                for b in range(a, N):
                    val = h(E[a] + E[b]) - h(E[a]) - h(E[b])
                    H[a, b] = H[b, a] = val
        finally:
            for t, o in zip(self.terms, saved):
                t.offset = o
        m = 2 * self.dof
        Hzz, Hzc, Hcc = H[:m, :m], H[:m, m:], H[m:, m:]
        if self.j:
            Hzz = Hzz - Hzc @ np.linalg.solve(Hcc, Hzc.T)
        return Hzz

    def frequencies(self):
        return hamiltonian_frequencies(self.linear_form())


def _kernel_term_info(rh: ReducedHamiltonian):
    """Rows of the potential terms restricted to the c variables."""
    cstart = rh.n + 2 * rh.l
    rows = [t.row @ rh.T[:, cstart:] for t in rh.terms]
    return rows


def _spec_slope_scale(spec: PotentialSpec) -> float:
    if isinstance(spec, Cosine):
        return spec.EJ
    if isinstance(spec, Sum):
        return sum(_spec_slope_scale(t) for t in spec.terms if not isinstance(t, Quadratic))
    x = np.linspace(-10.0, 10.0, 201)
    return float(np.max(np.abs(spec.derivative(x))))


def solve_constraints(rh: ReducedHamiltonian, x, p):
    """All solutions psi_c of dH/dpsi_c = 0 at the given (x, p).

    A single constrained variable is handled by a dense scan on
    +-(|x0| + 10 (1 + beta)), where x0 solves the quadratic part and beta
    is the nonlinear slope scale over the quadratic curvature. Several
    variables are solved exactly when the circuit is linear.
    """
    if rh.j == 0:
        return [np.zeros(0)]
    rows = _kernel_term_info(rh)
    Atc = rh.P.T @ rh.At[:, 2 * rh.l:]
    if rh.is_linear:
        c0 = np.zeros(rh.j)
        r0 = rh.constraint_residual(x, p, c0)
        Hcc = np.zeros((rh.j, rh.j))
        for i in range(rh.j):
            e = np.zeros(rh.j)
            e[i] = 1.0
            Hcc[:, i] = rh.constraint_residual(x, p, e) - r0
        try:
            sol = np.linalg.solve(Hcc, -r0)
        except np.linalg.LinAlgError:
            raise UnresolvableConstraintError("linear constraint system is singular") from None
        return [sol]
    if rh.j > 1:
        raise UnresolvableConstraintError(
            "nonlinear elimination of several coupled singular variables is not implemented"
        )
    kappa = float(Atc[:, 0] @ rh.Cinv @ Atc[:, 0])
    slope = 0.0
    for t, r in zip(rh.terms, rows):
        if isinstance(t.spec, Quadratic):
            kappa += r[0] ** 2 / t.spec.L
        else:
            slope += abs(r[0]) * _spec_slope_scale(t.spec)
    g = _scalar_constraint(rh, x, p)
    lin0 = g(np.array([0.0]))[0]
    if kappa > 0:
        x0 = abs(lin0) / kappa
        beta = slope / kappa
    else:
        x0, beta = 0.0, slope
    half = x0 + 10.0 * (1.0 + beta)
    roots = find_roots(g, -half, half, scale=max(kappa, slope, 1.0))
    good = []
    for r in roots:
        res = abs(g(np.array([r]))[0])
        if res < RESIDUAL_TOL * max(1.0, kappa * abs(r), slope):
            good.append(np.array([r]))
    if not good:
        raise UnresolvableConstraintError("no real solution of the constraint equation in the scan window")
    return good


def _scalar_constraint(rh: ReducedHamiltonian, x, p):
    """Vectorised dH/dpsi_c for a single constrained variable."""
    kin0, psi0 = rh._canonical_kinetic(x, p, np.zeros(1))
    phi0 = rh.T @ psi0
    tc = rh.T[:, -1]
    atc = rh.P.T @ rh.At[:, -1]
    parts = [(t.spec, float(t.row @ phi0 + t.offset), float(t.row @ tc)) for t in rh.terms]
    base = float(atc @ rh.Cinv @ kin0)
    curv = float(atc @ rh.Cinv @ atc)

    def g(c):
        c = np.asarray(c, dtype=float)
        out = -(base - curv * c)
        for spec, a0, b in parts:
            if b != 0.0:
                out = out + b * spec.derivative(a0 + b * c)
        return out

    return g


def _term_rows_in(rh_T, terms):
    return [PotentialTerm(t.spec, t.row.copy(), t.offset, t.label) for t in terms]


def reduce(lag: CircuitLagrangian, probe=None, constant: float = 0.0) -> ReducedHamiltonian:
    """Constrained reduction of a (possibly singular) circuit Lagrangian.

    ``probe`` optionally lists reduced positions at which the number of
    constraint branches is counted; by default one-dimensional systems
    are probed on [-2 pi, 2 pi]. ``constant`` is the integration constant
    of a velocity constraint, if one arises.
    """
    m = lag.size
    A = 0.5 * (lag.A - lag.A.T)
    B, Cp, n, k = kernel_split(lag.C)
    Ab = B.T @ A @ B
    D, App, l, j, d = youla_block(Ab[n:, n:])
    Dfull = np.eye(m)
    if k:
        Dfull[n:, n:] = D
    T = B @ Dfull
    Ahat = T.T @ A @ T
    Afix, _ = gauge_fix(Ahat, n, l, j)
    Aprime = Afix[:n, :n]
    At = Afix[:n, n:]
    Cinv = np.linalg.inv(Cp) if n else np.zeros((0, 0))
    terms = _term_rows_in(T, lag.terms)
    constraints = []
    if l:
        constraints.append(ConstraintRecord("momentum", f"{l} kernel pair(s): psi_b = Q_a / d"))

    P = np.eye(n)
    p0 = np.zeros(n)
    cstart = n + 2 * l
    crow = np.array([t.row @ T[:, cstart:] for t in terms]).reshape(len(terms), j) if j else np.zeros((0, 0))
    absent = [i for i in range(j) if not np.any(np.abs(crow[:, i]) > 1e-12)] if j else []
    if absent:
        if len(absent) > 1 or l:
            raise UnresolvableConstraintError("singular variables with no potential and no single velocity constraint")
        w = At[:, 2 * l + absent[0]]
        if np.linalg.norm(w) < 1e-12:
            raise UnresolvableConstraintError("a singular variable appears in neither the potential nor the gyrator terms")
        constraints.append(ConstraintRecord("velocity", "w . psi' is conserved", w.copy()))
        # restrict psi' to the hyperplane w . psi' = constant
        u = w / np.linalg.norm(w)
        Q, _ = np.linalg.qr(np.column_stack([u, np.eye(n)]))
        P = Q[:, 1:n]
        p0 = constant * w / (w @ w)
        keep = [i for i in range(j) if i != absent[0]]
        sel = list(range(n)) + list(range(n, cstart)) + [cstart + i for i in keep]
        T = T[:, sel]
        At = At[:, [c for c in range(At.shape[1]) if c != 2 * l + absent[0]]]
        j -= 1
        Cs = P.T @ Cp @ P
        Cinv = np.linalg.inv(Cs)
        Aprime_s = P.T @ Aprime @ P
        # keep A' in psi' form; the projection happens inside the energy
        _ = Aprime_s
    if j:
        constraints.append(ConstraintRecord("stationary", f"{j} variable(s) fixed by dH/dpsi_c = 0"))

    rh = ReducedHamiltonian(T, n, l, j, Cinv, Aprime, At, d, terms, P, p0, constraints, labels=list(lag.labels))

    if j and not rh.is_linear:
        if probe is None and rh.dof == 1:
            probe = np.linspace(-2 * np.pi, 2 * np.pi, 129)
        if probe is not None:
            counts = []
            for xv in np.atleast_1d(probe):
                xs = np.atleast_1d(xv).astype(float)
                if xs.shape[0] != rh.dof:
                    xs = np.full(rh.dof, float(xv))
                counts.append(len(solve_constraints(rh, xs, np.zeros(rh.dof))))
            rh.max_branches = int(max(counts))
            rh.branched = rh.max_branches > 1
    return rh


def effective_potential_branches(L: float, spec: PotentialSpec, phi: float):
    """Branches of the series L + nonlinear element at slow flux ``phi``.

    Solves (phi_c - phi)/L + U'(phi_c) = 0 and returns a list of
    (phi_c, U_eff) sorted by energy, U_eff = (phi - phi_c)^2/2L + U(phi_c).
    """
    if L <= 0:
        raise DomainError("L must be positive")
    g = lambda c: (np.asarray(c) - phi) / L + spec.derivative(c)
    beta = L * _spec_slope_scale(spec)
    half = abs(phi) + 10.0 * (1.0 + beta)
    roots = find_roots(g, -half, half, scale=max(1.0 / L, beta / L))
    out = []
    for r in roots:
        res = abs(float(g(np.array([r]))[0]))
        if res < RESIDUAL_TOL * max(1.0, abs(r) / L, beta / L):
            u = (phi - r) ** 2 / (2 * L) + float(spec.value(r))
            out.append((float(r), u, res))
    if not out:
        raise UnresolvableConstraintError("no constraint branch found")
    out.sort(key=lambda t: t[1])
    return out


@dataclass
class DiracTrajectory:
    t: np.ndarray
    y: np.ndarray
    p: np.ndarray
    energy: np.ndarray
    hit_singular: bool
    t_singular: Optional[float] = None

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))


def _dirac_rhs(beta, m):
    def f(state):
        y, p = state
        return np.array([p / (m * (1.0 + beta * np.cos(y))), -beta * np.sin(y)])

    return f


def dirac_energy(beta, m, y, p):
    y = np.asarray(y)
    return np.asarray(p) ** 2 / (2 * m) + 0.5 * beta ** 2 * np.sin(y) ** 2 - beta * np.cos(y)


def dirac_dynamics(beta: float, m: float, y0: float, p0: float, T: float, dt: float, singular_tol: float = 1e-3):
    """Integrate the constrained oscillator with Josephson element by RK4.

    The reduced variables are y (the constrained flux) and p (momentum of
    the slow flux), with y' = p / (m (1 + beta cos y)) and p' = -beta sin y.
    Integration stops when 1 + beta cos y comes within ``singular_tol`` of
    zero or changes sign, and the partial trajectory is returned.
    """
    if m <= 0 or dt <= 0 or T <= 0:
        raise DomainError("m, dt and T must be positive")
    f = _dirac_rhs(beta, m)
    steps = int(round(T / dt))
    ys = np.empty(steps + 1)
    ps = np.empty(steps + 1)
    s = np.array([y0, p0], dtype=float)
    if abs(1 + beta * np.cos(y0)) < singular_tol:
        raise DomainError("initial point lies on the singular surface")
    ys[0], ps[0] = s
    sign0 = np.sign(1 + beta * np.cos(y0))
    hit = False
    last = steps
    for i in range(steps):
        k1 = f(s)
        k2 = f(s + 0.5 * dt * k1)
        k3 = f(s + 0.5 * dt * k2)
        k4 = f(s + dt * k3)
        new = s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        gate = 1 + beta * np.cos(new[0])
        if not np.all(np.isfinite(new)) or np.sign(gate) != sign0 or abs(gate) < singular_tol:
            hit = True
            last = i
            break
        s = new
        ys[i + 1], ps[i + 1] = s
    ts = dt * np.arange(last + 1)
    ys, ps = ys[: last + 1], ps[: last + 1]
    return DiracTrajectory(ts, ys, ps, dirac_energy(beta, m, ys, ps), hit, ts[-1] if hit else None)


def eom_residual(traj: DiracTrajectory, beta: float, m: float) -> float:
    """Max |m y'' - beta sin y (m y'^2 - 1)/(1 + beta cos y)| with y'' by central differences."""
    y = traj.y
    dt = traj.t[1] - traj.t[0]
    ydd = (y[2:] - 2 * y[1:-1] + y[:-2]) / dt ** 2
    yc = y[1:-1]
    yd = traj.p[1:-1] / (m * (1 + beta * np.cos(yc)))
    r = m * ydd - beta * np.sin(yc) * (m * yd ** 2 - 1) / (1 + beta * np.cos(yc))
    return float(np.max(np.abs(r)))
