"""Circuit Lagrangians L = 1/2 phi'^T C phi' + phi'^T A phi - U(phi) and their Legendre transforms."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, SingularMatrixError
from .netlist import Capacitor, Gyrator, Inductor, Junction, Netlist
from .potentials import Cosine, PotentialSpec, Quadratic

COND_LIMIT = 1e12


@dataclass
class PotentialTerm:
    """One inductive branch: spec evaluated at row . phi + offset."""

    spec: PotentialSpec
    row: np.ndarray
    offset: float = 0.0
    label: str = ""

    def argument(self, phi):
        return np.tensordot(self.row, phi, axes=(0, 0)) + self.offset


def _potential(terms, phi):
    phi = np.asarray(phi, dtype=float)
    u = 0.0
    for t in terms:
        u = u + t.spec.value(t.argument(phi))
    return u


def _gradient(terms, phi):
    phi = np.asarray(phi, dtype=float)
    g = np.zeros_like(phi)
    for t in terms:
        du = t.spec.derivative(t.argument(phi))
        g = g + np.multiply.outer(t.row, du) if phi.ndim > 1 else g + t.row * du
    return g


def _stiffness(terms, m):
    K = np.zeros((m, m))
    for t in terms:
        if not isinstance(t.spec, Quadratic):
            raise DomainError("stiffness matrix requested for a nonlinear circuit")
        K += np.outer(t.row, t.row) / t.spec.L
    return K


@dataclass
class CircuitLagrangian:
    C: np.ndarray
    A: np.ndarray
    terms: list = field(default_factory=list)
    labels: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.C.shape[0]

    @property
    def is_linear(self) -> bool:
        return all(isinstance(t.spec, Quadratic) for t in self.terms)

    def potential(self, phi):
        return _potential(self.terms, phi)

    def gradient(self, phi):
        return _gradient(self.terms, phi)

    def stiffness(self):
        return _stiffness(self.terms, self.size)

    def value(self, phi, phidot):
        phi = np.asarray(phi, dtype=float)
        v = np.asarray(phidot, dtype=float)
        return 0.5 * v @ self.C @ v + v @ self.A @ phi - self.potential(phi)

    def generalized_force(self, phi, phidot):
        """Right-hand side f in C phi'' = f from the Euler-Lagrange equations."""
        v = np.asarray(phidot, dtype=float)
        return -(self.A - self.A.T) @ v - self.gradient(phi)


def assemble(net: Netlist) -> CircuitLagrangian:
    """Node-flux Lagrangian of a netlist, gyrators in the symmetric gauge."""
    m = net.num_nodes
    C = np.zeros((m, m))
    A = np.zeros((m, m))
    terms = []

    def incidence(p, q):
        r = np.zeros(m)
        if p:
            r[p - 1] += 1.0
        if q:
            r[q - 1] -= 1.0
        return r

    for i, b in enumerate(net.branches):
        if isinstance(b, Capacitor):
            r = incidence(b.n_plus, b.n_minus)
            C += b.C * np.outer(r, r)
        elif isinstance(b, Inductor):
            r = incidence(b.n_plus, b.n_minus)
            terms.append(PotentialTerm(b.spec, r, net.flux_offset(b.loop), f"branch{i}"))
        elif isinstance(b, Junction):
            r = incidence(b.n_plus, b.n_minus)
            terms.append(PotentialTerm(Cosine(b.EJ), r, net.flux_offset(b.loop), f"branch{i}"))
            if b.Cint is not None:
                C += b.Cint * np.outer(r, r)
        elif isinstance(b, Gyrator):
            u = incidence(b.a_plus, b.a_minus)
            v = incidence(b.b_plus, b.b_minus)
            A += 0.5 * b.G * (np.outer(u, v) - np.outer(v, u))
    labels = [f"phi{i + 1}" for i in range(m)]
    return CircuitLagrangian(C, A, terms, labels)


def gauge_transform(lag: CircuitLagrangian, F: np.ndarray) -> CircuitLagrangian:
    """Add the total derivative d/dt(phi^T F phi), i.e. A -> A + F + F^T."""
    F = np.asarray(F, dtype=float)
    return replace(lag, A=lag.A + F + F.T)


def regularize(lag: CircuitLagrangian, eps: float) -> CircuitLagrangian:
    """Add capacitance ``eps`` to ground on nodes that carry none.

    Nodes with a non-zero row in C are left alone. If the matrix is still
    singular afterwards (floating capacitor islands) the remaining kernel
    is filled with ``eps`` times its orthogonal projector.
    """
    if not eps > 0.0:
        raise DomainError(f"regularisation capacitance must be positive, got {eps}")
    C = lag.C.copy()
    empty = np.all(C == 0.0, axis=1)
    C[empty, empty] += eps
    w, V = np.linalg.eigh(C)
    tol = np.finfo(float).eps * max(np.trace(C), 1e-300) * len(C)
    ker = V[:, w < tol]
    if ker.shape[1]:
        C = C + eps * ker @ ker.T
    return replace(lag, C=C)


@dataclass
class RegularHamiltonian:
    """H = 1/2 (Q - A phi)^T C^-1 (Q - A phi) + U(phi)."""

    Cinv: np.ndarray
    A: np.ndarray
    terms: list
    labels: list

    @property
    def size(self):
        return self.Cinv.shape[0]

    def energy(self, phi, Q):
        p = np.asarray(Q, dtype=float) - self.A @ np.asarray(phi, dtype=float)
        return 0.5 * p @ self.Cinv @ p + _potential(self.terms, phi)

    def quadratic_matrix(self):
        """Matrix M with H = z^T M z / 2 for z = (phi, Q), linear circuits only."""
        K = _stiffness(self.terms, self.size)
        CA = self.Cinv @ self.A
        top = self.A.T @ CA + K
        return np.block([[top, -CA.T], [-CA, self.Cinv]])

    def frequencies(self):
        return hamiltonian_frequencies(self.quadratic_matrix())


def legendre_regular(lag: CircuitLagrangian) -> RegularHamiltonian:
    """Standard Legendre transform; C must be well conditioned."""
    w = np.linalg.eigvalsh(lag.C)
    if w[0] <= 0.0 or w[-1] / w[0] > COND_LIMIT:
        cond = np.inf if w[0] <= 0.0 else w[-1] / w[0]
        raise SingularMatrixError(
            f"capacitance matrix is singular or ill conditioned (cond {cond:.3g}); use the constrained reduction"
        )
    return RegularHamiltonian(np.linalg.inv(lag.C), lag.A.copy(), list(lag.terms), list(lag.labels))


def hamiltonian_frequencies(M: np.ndarray) -> np.ndarray:
    """Positive normal-mode frequencies of H = z^T M z / 2, z = (x, p)."""
    n = M.shape[0] // 2
    J = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    ev = np.linalg.eigvals(J @ M)
    w = np.sort(np.abs(ev.imag))
    return w[1::2]


def normal_modes(lag: CircuitLagrangian) -> np.ndarray:
    """Frequencies straight from C phi'' + (A - A^T) phi' + K phi = 0."""
    K = lag.stiffness()
    G = lag.A - lag.A.T
    if not np.any(G):
        w2 = sla.eigh(K, lag.C, eigvals_only=True)
        return np.sqrt(np.clip(w2, 0.0, None))
    m = lag.size
    Z = np.zeros((m, m))
    # first-order pencil in (phi, phi'): [[I,0],[0,C]] s = [[0,I],[-K,-G]] s
    lhs = np.block([[np.eye(m), Z], [Z, lag.C]])
    rhs = np.block([[Z, np.eye(m)], [-K, -G]])
    ev = sla.eigvals(rhs, lhs)
    w = np.sort(np.abs(ev.imag))
    return w[1::2]
