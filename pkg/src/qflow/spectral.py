"""Finite-difference and charge-basis eigensolvers for low-lying states.

All Hamiltonians use hbar = 1. One-dimensional problems are
H = -(1/2m) d^2/dx^2 + V(x) with a three-point Laplacian; the
Dirichlet case is symmetric tridiagonal and handled by LAPACK bisection
plus inverse iteration (``scipy.linalg.eigh_tridiagonal``).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import eigsh

from .errors import ConvergenceError, DomainError, GridResolutionError
from .potentials import PotentialSpec

MIN_POINTS = 64
MAX_2D_SIDE = 256


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [lo, hi].

    Dirichlet grids hold the n interior points of n + 1 equal intervals;
    periodic grids hold n points with the endpoint ``hi`` identified with ``lo``.
    """

    lo: float
    hi: float
    n: int
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.boundary not in ("dirichlet", "periodic"):
            raise DomainError(f"unknown boundary {self.boundary!r}")
        if self.n < MIN_POINTS:
            raise DomainError(f"grid needs at least {MIN_POINTS} points, got {self.n}")
        if not self.hi > self.lo:
            raise DomainError("grid needs hi > lo")

    @property
    def spacing(self) -> float:
        if self.boundary == "periodic":
            return (self.hi - self.lo) / self.n
        return (self.hi - self.lo) / (self.n + 1)

    @property
    def points(self) -> np.ndarray:
        h = self.spacing
        if self.boundary == "periodic":
            return self.lo + h * np.arange(self.n)
        return self.lo + h * np.arange(1, self.n + 1)

    def refined(self) -> "Grid1D":
        """Halve the spacing; Dirichlet nodes nest in the refined grid."""
        n = 2 * self.n if self.boundary == "periodic" else 2 * self.n + 1
        return replace(self, n=n)

    def enlarged(self, factor: float) -> "Grid1D":
        """Widen the box about its centre, keeping the spacing."""
        mid = 0.5 * (self.lo + self.hi)
        half = 0.5 * (self.hi - self.lo) * factor
        h = self.spacing
        n = int(np.ceil(2.0 * half / h)) - (0 if self.boundary == "periodic" else 1)
        return replace(self, lo=mid - half, hi=mid + half, n=max(n, MIN_POINTS))

    @classmethod
    def around(cls, center: float, half_width: float, spacing: float) -> "Grid1D":
        n = max(MIN_POINTS, int(np.ceil(2.0 * half_width / spacing)) - 1)
        return cls(center - half_width, center + half_width, n)


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    grid: object = None
    extrapolated: Optional[np.ndarray] = None
    relative_change: float = 0.0
    tolerance: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def ground(self) -> float:
        return float(self.values[0])

    @property
    def gap(self) -> float:
        if len(self.values) < 2:
            return float("nan")
        return float(self.values[1] - self.values[0])


def _as_callable(potential):
    if isinstance(potential, PotentialSpec):
        return potential.value
    if not callable(potential):
        raise DomainError("potential must be callable or a PotentialSpec")
    return potential


def _tridiagonal(v, mass, h):
    t = 1.0 / (2.0 * mass * h * h)
    return 2.0 * t + v, -t * np.ones(len(v) - 1)


def _residuals_tridiag(d, e, w, vecs):
    hv = d[:, None] * vecs
    hv[:-1] += e[:, None] * vecs[1:]
    hv[1:] += e[:, None] * vecs[:-1]
    scale = max(1.0, float(np.max(np.abs(d)) + 2.0 * np.max(np.abs(e), initial=0.0)))
    return np.linalg.norm(hv - vecs * w[None, :], axis=0) / scale


def _solve_dirichlet(vfun, mass, grid, k):
    v = np.asarray(vfun(grid.points), dtype=float)
    if not np.all(np.isfinite(v)):
        raise DomainError("potential is not finite on the grid")
    d, e = _tridiagonal(v, mass, grid.spacing)
    w, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1))
    for j in range(vecs.shape[1]):
        i = np.argmax(np.abs(vecs[:, j]))
        if vecs[i, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return w, vecs, _residuals_tridiag(d, e, w, vecs)


def _periodic_operator(v, mass, h, twist_phase=1.0):
    n = len(v)
    t = 1.0 / (2.0 * mass * h * h)
    main = 2.0 * t + v
    off = -t * np.ones(n - 1)
    dtype = complex if np.iscomplexobj(twist_phase) else float
    H = sp.diags([off, main, off], [-1, 0, 1], shape=(n, n), format="lil", dtype=dtype)
    H[0, n - 1] = -t * np.conj(twist_phase)
    H[n - 1, 0] = -t * twist_phase
    return H.tocsc()


def _sparse_lowest(H, k, vmin):
    n = H.shape[0]
    if n <= 600:
        w, vecs = np.linalg.eigh(H.toarray())
        w, vecs = w[:k], vecs[:, :k]
    else:
        w, vecs = eigsh(H, k=k, sigma=vmin - 1.0, which="LM", tol=0.0)
        order = np.argsort(w)
        w, vecs = w[order], vecs[:, order]
    r = H @ vecs - vecs * w[None, :]
    scale = max(1.0, abs(H).max() * 3.0)
    return w, vecs, np.linalg.norm(r, axis=0) / scale


def _solve_periodic(vfun, mass, grid, k, bloch=0.0):
    v = np.asarray(vfun(grid.points), dtype=float)
    phase = np.exp(2j * np.pi * bloch) if bloch else 1.0
    H = _periodic_operator(v, mass, grid.spacing, phase)
    return _sparse_lowest(H, k, float(v.min()))


def _tail_ratio(vecs):
    psi = np.abs(vecs[:, 0])
    top = psi.max()
    m = max(2, len(psi) // 200)
    return float(max(psi[:m].max(), psi[-m:].max()) / top)


def ground_state_1d(
    potential,
    mass: float,
    grid: Grid1D,
    k: int = 1,
    rtol: float = 1e-6,
    tail_tol: float = 1e-8,
    max_enlarge: int = 6,
    max_refine: int = 4,
    check: bool = True,
    bloch: float = 0.0,
    atol: float = 0.0,
) -> EigenResult:
    """Lowest ``k`` eigenpairs of -(1/2m) d^2 + V on ``grid``.

    With ``check`` the Dirichlet box is widened by 1.5x until the ground
    state has decayed below ``tail_tol`` at the walls, and the grid is
    halved until doubling the resolution changes the low eigenvalues by
    less than ``rtol`` relative (or ``atol`` absolute). The returned pairs come from the finest
    grid; ``extrapolated`` holds the Richardson combination (4E_h/2 - E_h)/3.
    """
    if not np.isfinite(mass) or mass <= 0.0:
        raise DomainError(f"mass must be positive, got {mass}")
    if k < 1:
        raise DomainError("k must be at least 1")
    vfun = _as_callable(potential)
    kk = max(k, 2)
    if grid.boundary == "periodic":
        solve = lambda g: _solve_periodic(vfun, mass, g, kk, bloch)
    else:
        solve = lambda g: _solve_dirichlet(vfun, mass, g, kk)

    w, vecs, res = solve(grid)
    if not check:
        return EigenResult(w[:k], vecs[:, :k], res[:k], grid, tolerance=rtol)

    if grid.boundary == "dirichlet":
        for attempt in range(max_enlarge + 1):
            tail = _tail_ratio(vecs)
            if tail < tail_tol:
                break
            if attempt == max_enlarge:
                raise GridResolutionError(
                    f"wavefunction tail {tail:.2e} exceeds {tail_tol:.0e} after {max_enlarge} enlargements"
                )
            grid = grid.enlarged(1.5)
            w, vecs, res = solve(grid)

    change = np.inf
    for _ in range(max_refine + 1):
        fine = grid.refined()
        w2, vecs2, res2 = solve(fine)
        scale = max(abs(w2[0]), abs(w2[1] - w2[0]), 1e-300)
        diff = float(np.max(np.abs(w2[:k] - w[:k])))
        change = diff / scale
        if change < rtol or diff < atol:
            extrap = (4.0 * w2 - w) / 3.0
            return EigenResult(
                w2[:k], vecs2[:, :k], res2[:k], fine, extrap[:k], change, rtol,
                {"gap": float(w2[1] - w2[0])},
            )
        grid, w, vecs, res = fine, w2, vecs2, res2
    raise GridResolutionError(
        f"eigenvalue changed by {change:.2e} (relative) under grid doubling; tolerance {rtol:.0e}"
    )


def convergence_order(potential, mass, grid, levels=3) -> float:
    """Observed order p from E(h) - E(h/2) ~ h^p over successive halvings."""
    vfun = _as_callable(potential)
    es = []
    g = grid
    for _ in range(levels):
        es.append(_solve_dirichlet(vfun, mass, g, 2)[0][0])
        g = g.refined()
    d1 = es[0] - es[1]
    d2 = es[1] - es[2]
    return float(np.log2(abs(d1 / d2)))


def _laplacian_1d(grid, coeff, twist=0):
    n = grid.n
    t = coeff / grid.spacing ** 2
    T = sp.diags([-t * np.ones(n - 1), 2.0 * t * np.ones(n), -t * np.ones(n - 1)], [-1, 0, 1], format="lil")
    if grid.boundary == "periodic":
        T[0, n - 1] = -t
        T[n - 1, 0] = -t
    return T.tocsr()


def _twisted_x1(g1, g2, coeff, twist):
    """x1 kinetic term on a torus whose x1 wrap shifts x2 by ``twist`` points."""
    n1, n2 = g1.n, g2.n
    t = coeff / g1.spacing ** 2
    rows, cols, vals = [], [], []
    idx = np.arange(n1 * n2).reshape(n1, n2)
    j = np.arange(n2)
    for i in range(n1):
        rows.append(idx[i]); cols.append(idx[i]); vals.append(np.full(n2, 2.0 * t))
        if i + 1 < n1:
            rows.append(idx[i]); cols.append(idx[i + 1]); vals.append(np.full(n2, -t))
            rows.append(idx[i + 1]); cols.append(idx[i]); vals.append(np.full(n2, -t))
    if g1.boundary == "periodic":
        # psi(x1 + period, x2) = psi(x1, x2 + twist * h2)
        rows.append(idx[n1 - 1]); cols.append(idx[0, (j + twist) % n2]); vals.append(np.full(n2, -t))
        rows.append(idx[0, (j + twist) % n2]); cols.append(idx[n1 - 1]); vals.append(np.full(n2, -t))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n1 * n2, n1 * n2)
    )


def ground_state_2d(
    potential: Callable,
    kinetic: tuple,
    grid1: Grid1D,
    grid2: Grid1D,
    k: int = 1,
    twist: int = 0,
) -> EigenResult:
    """Lowest eigenpairs of -c1 d1^2 - c2 d2^2 + V(x1, x2) on a product grid.

    ``kinetic`` is (c1, c2), i.e. 1/(2 m_i). A non-zero ``twist`` glues the
    x1 boundary with a shift of ``twist`` grid points along periodic x2.
    """
    c1, c2 = (float(c) for c in kinetic)
    if c1 <= 0 or c2 <= 0:
        raise DomainError("kinetic coefficients must be positive")
    if grid1.n > MAX_2D_SIDE or grid2.n > MAX_2D_SIDE:
        raise DomainError(f"2D grids are limited to {MAX_2D_SIDE} points per side")
    if twist and (grid1.boundary != "periodic" or grid2.boundary != "periodic"):
        raise DomainError("a twisted wrap needs periodic grids in both directions")
    x1, x2 = np.meshgrid(grid1.points, grid2.points, indexing="ij")
    v = np.asarray(potential(x1, x2), dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise DomainError("potential is not finite on the grid")
    T2 = sp.kron(sp.identity(grid1.n), _laplacian_1d(grid2, c2))
    if twist:
        T1 = _twisted_x1(grid1, grid2, c1, twist)
    else:
        T1 = sp.kron(_laplacian_1d(grid1, c1), sp.identity(grid2.n))
    H = (T1 + T2 + sp.diags(v)).tocsc()
    w, vecs, res = _sparse_lowest(H, max(k, 2), float(v.min()))
    return EigenResult(w[:k], vecs[:, :k], res[:k], (grid1, grid2), info={"gap": float(w[1] - w[0])})


def _charge_levels(diag, off, k):
    return eigh_tridiagonal(diag, np.full(len(diag) - 1, off), eigvals_only=True, select="i", select_range=(0, k - 1))


def charge_basis_ground(
    EJ1: float,
    EJ2: float,
    Phi: float,
    nu2: float,
    d2: float,
    EC: float,
    x1,
    M: int = 16,
    k: int = 1,
    EJ3: Optional[float] = None,
    w2: float = 0.5,
    w3: float = 0.5,
    tol: float = 1e-8,
    max_M: int = 4096,
):
    """Fast-variable energies of the two-junction loop in plane waves exp(i(nu2+n)x2).

    The potential is -EJ1 cos x1 - EJ2 cos(w2 x1 + x2) - EJ3 cos(w3 x1 - x2 + Phi),
    with EJ3 = EJ2 and w2 = w3 = 1/2 by default. The Hermitian tridiagonal
    matrix has constant off-diagonal U_{n+1,n} = -(EJ2 e^{i w2 x1} + EJ3 e^{-i(w3 x1 + Phi)})/2,
    and a diagonal phase transform makes it real with off-diagonal -|U_{n+1,n}|.
    Returns an array of shape (len(x1), k). The cutoff M is raised in steps
    of 8 until the lowest level moves by less than ``tol``.
    """
    if M < 8:
        raise DomainError("charge cutoff M must be at least 8")
    if d2 <= 0 or EC <= 0:
        raise DomainError("d2 and EC must be positive")
    EJ3 = EJ2 if EJ3 is None else EJ3
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    out = np.empty((len(x1), k))
    for i, x in enumerate(x1):
        u = -0.5 * (EJ2 * np.exp(1j * w2 * x) + EJ3 * np.exp(-1j * (w3 * x + Phi)))
        off = -abs(u)
        m = M
        prev = None
        while True:
            n = np.arange(-m, m + 1) + np.round(-nu2)
            diag = 4.0 * EC * d2 * (nu2 + n) ** 2 - EJ1 * np.cos(x)
            e = _charge_levels(diag, off, k)
            if prev is not None and abs(e[0] - prev[0]) < tol:
                break
            if m > max_M:
                raise ConvergenceError("charge-basis cutoff did not converge")
            prev = e
            m += 8
        out[i] = e
    return out
