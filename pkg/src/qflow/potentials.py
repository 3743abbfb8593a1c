"""Inductive potential energy functions U(phi) and their derivatives.

Every variant evaluates vectorised over numpy arrays and returns the pair
``(U, dU/dphi)``. Fluxes are in reduced units (flux quantum over 2 pi = 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError


class PotentialSpec:
    """Base class; subclasses are frozen dataclasses."""

    kind: ClassVar[str] = ""

    def evaluate(self, phi):
        raise NotImplementedError

    def value(self, phi):
        return self.evaluate(phi)[0]

    def derivative(self, phi):
        return self.evaluate(phi)[1]

    @property
    def symmetric(self) -> bool:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params()}


def _positive(name, value):
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f"{name} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class Quadratic(PotentialSpec):
    """Linear inductor, U = phi^2 / 2L."""

    L: float
    kind: ClassVar[str] = "quadratic"

    def __post_init__(self):
        object.__setattr__(self, "L", _positive("L", self.L))

    def evaluate(self, phi):
        phi = np.asarray(phi, dtype=float)
        return phi * phi / (2.0 * self.L), phi / self.L

    @property
    def symmetric(self):
        return True

    def params(self):
        return {"L": self.L}


@dataclass(frozen=True)
class Cosine(PotentialSpec):
    """Josephson element, U = -E_J cos(phi + offset)."""

    EJ: float
    offset: float = 0.0
    kind: ClassVar[str] = "cosine"

    def __post_init__(self):
        ej = float(self.EJ)
        if not math.isfinite(ej) or ej < 0.0:
            raise DomainError(f"EJ must be non-negative, got {ej}")
        object.__setattr__(self, "EJ", ej)
        object.__setattr__(self, "offset", float(self.offset))

    def evaluate(self, phi):
        arg = np.asarray(phi, dtype=float) + self.offset
        return -self.EJ * np.cos(arg), self.EJ * np.sin(arg)

    @property
    def symmetric(self):
        return self.EJ == 0.0 or math.isclose(math.sin(self.offset), 0.0, abs_tol=1e-15)

    def params(self):
        return {"EJ": self.EJ, "offset": self.offset}


@dataclass(frozen=True)
class PowerLaw(PotentialSpec):
    """beta |phi|^gamma, or sign(phi) beta |phi|^gamma when not symmetric.

    The derivative of an asymmetric law with gamma < 1 is infinite at zero
    and is reported as ``inf``. Symmetric laws report 0 there.
    """

    beta: float
    gamma: float
    is_symmetric: bool = True
    kind: ClassVar[str] = "powerlaw"

    def __post_init__(self):
        object.__setattr__(self, "beta", _positive("beta", self.beta))
        object.__setattr__(self, "gamma", _positive("gamma", self.gamma))
        object.__setattr__(self, "is_symmetric", bool(self.is_symmetric))

    def evaluate(self, phi):
        phi = np.asarray(phi, dtype=float)
        a = np.abs(phi)
        g = self.gamma
        mag = self.beta * a ** g
        with np.errstate(divide="ignore", invalid="ignore"):
            dmag = self.beta * g * a ** (g - 1.0)
        if self.is_symmetric:
            u = mag
            du = np.sign(phi) * dmag
            du = np.where(a == 0.0, 0.0, du)
        else:
            u = np.sign(phi) * mag
            du = dmag
            if g > 1.0:
                du = np.where(a == 0.0, 0.0, du)
            elif g == 1.0:
                du = np.where(a == 0.0, self.beta, du)
        return u, du

    @property
    def symmetric(self):
        return self.is_symmetric

    def params(self):
        return {"beta": self.beta, "gamma": self.gamma, "symmetric": self.is_symmetric}


@dataclass(frozen=True)
class PiecewiseLinear(PotentialSpec):
    """b (1 + a Theta(phi)) |phi|; slope b(1+a) on the right and -b on the left."""

    a: float
    b: float
    kind: ClassVar[str] = "piecewise"

    def __post_init__(self):
        a = float(self.a)
        if not math.isfinite(a) or a <= -1.0:
            raise DomainError(f"a must exceed -1, got {a}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", _positive("b", self.b))

    def evaluate(self, phi):
        phi = np.asarray(phi, dtype=float)
        right = self.b * (1.0 + self.a)
        u = np.where(phi > 0.0, right * phi, -self.b * phi)
        du = np.where(phi > 0.0, right, np.where(phi < 0.0, -self.b, 0.5 * self.a * self.b))
        return u, du

    @property
    def symmetric(self):
        return self.a == 0.0

    def params(self):
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True)
class SelfSimilar(PotentialSpec):
    """Log-periodic potential with U(100 y) = 1e4 U(y).

    On each band 10^(2n-2) <= |y| <= 10^(2n-1) the energy is
    10^((3 - 4n + 2 log|y|)^3) 10^(8n - 7) / y^2, and on
    10^(2n-1) <= |y| <= 10^(2n) it is 10^(-4n) y^4. Both pieces and their
    derivatives match at the band edges.
    """

    kind: ClassVar[str] = "selfsimilar"

    def evaluate(self, phi):
        y = np.asarray(phi, dtype=float)
        a = np.abs(y)
        u = np.zeros_like(a)
        du = np.zeros_like(a)
        nz = a > 0.0
        t = np.log10(a[nz])
        k = np.floor(t / 2.0)
        n = k + 1.0
        frac = t - 2.0 * k
        inner = frac < 1.0
        s = 3.0 - 4.0 * n + 2.0 * t
        log_u = np.where(inner, s ** 3 + 8.0 * n - 7.0 - 2.0 * t, -4.0 * n + 4.0 * t)
        slope = np.where(inner, 6.0 * s * s - 2.0, 4.0)
        val = 10.0 ** log_u
        u[nz] = val
        du[nz] = val * slope / y[nz]
        return u, du

    @property
    def symmetric(self):
        return True


@dataclass(frozen=True)
class Sum(PotentialSpec):
    terms: tuple = field(default_factory=tuple)
    kind: ClassVar[str] = "sum"

    def __post_init__(self):
        terms = []
        for t in self.terms:
            terms.extend(t.terms if isinstance(t, Sum) else [t])
        terms = tuple(terms)
        if not terms:
            raise DomainError("sum needs at least one term")
        for t in terms:
            if not isinstance(t, PotentialSpec):
                raise DomainError(f"sum term {t!r} is not a potential")
        object.__setattr__(self, "terms", terms)

    def evaluate(self, phi):
        phi = np.asarray(phi, dtype=float)
        u = np.zeros_like(phi)
        du = np.zeros_like(phi)
        for t in self.terms:
            tu, tdu = t.evaluate(phi)
            u = u + tu
            du = du + tdu
        return u, du

    @property
    def symmetric(self):
        return all(t.symmetric for t in self.terms)

    def to_dict(self):
        return {"kind": self.kind, "terms": [t.to_dict() for t in self.terms]}


@dataclass(frozen=True)
class Tabulated(PotentialSpec):
    """Monotone cubic (PCHIP) interpolation of sampled energies."""

    flux: tuple
    energy: tuple
    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        flux = tuple(float(v) for v in self.flux)
        energy = tuple(float(v) for v in self.energy)
        if len(flux) != len(energy) or len(flux) < 2:
            raise DomainError("tabulated potential needs matching flux/energy lists of length >= 2")
        if any(b <= a for a, b in zip(flux, flux[1:])):
            raise DomainError("tabulated flux samples must be strictly increasing")
        object.__setattr__(self, "flux", flux)
        object.__setattr__(self, "energy", energy)

    @cached_property
    def _interp(self):
        return PchipInterpolator(np.array(self.flux), np.array(self.energy), extrapolate=False)

    def evaluate(self, phi):
        phi = np.asarray(phi, dtype=float)
        if np.any(phi < self.flux[0]) or np.any(phi > self.flux[-1]):
            raise DomainError(
                f"flux outside tabulated range [{self.flux[0]}, {self.flux[-1]}]"
            )
        return self._interp(phi), self._interp(phi, 1)

    @property
    def symmetric(self):
        f = np.array(self.flux)
        e = np.array(self.energy)
        return bool(np.allclose(f, -f[::-1]) and np.allclose(e, e[::-1]))

    def params(self):
        return {"flux": list(self.flux), "energy": list(self.energy)}


def potential_eval(spec: PotentialSpec, phi):
    """Return (U, dU/dphi) for a potential spec at flux ``phi``."""
    return spec.evaluate(phi)


_KINDS = {
    cls.kind: cls
    for cls in (Quadratic, Cosine, PowerLaw, PiecewiseLinear, SelfSimilar, Sum, Tabulated)
}


def _as_bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes"):
        return True
    if s in ("0", "false", "no"):
        return False
    raise DomainError(f"expected a boolean, got {v!r}")


def _floats(v) -> Sequence[float]:
    if isinstance(v, str):
        return [float(x) for x in v.split(",") if x.strip()]
    return [float(x) for x in v]


def spec_from_params(kind: str, params: dict) -> PotentialSpec:
    """Build a spec from a kind name and a flat parameter mapping."""
    kind = kind.lower()
    if kind not in _KINDS:
        raise DomainError(f"unknown potential kind {kind!r}")
    p = {k.lower(): v for k, v in params.items()}
    try:
        if kind == "quadratic":
            return Quadratic(float(p.pop("l")))
        if kind == "cosine":
            ej = p.pop("ej")
            return Cosine(float(ej), float(p.pop("offset", 0.0)))
        if kind == "powerlaw":
            return PowerLaw(float(p.pop("beta")), float(p.pop("gamma")), _as_bool(p.pop("symmetric", True)))
        if kind == "piecewise":
            return PiecewiseLinear(float(p.pop("a")), float(p.pop("b")))
        if kind == "selfsimilar":
            return SelfSimilar()
        if kind == "tabulated":
            return Tabulated(tuple(_floats(p.pop("flux"))), tuple(_floats(p.pop("energy"))))
    except KeyError as exc:
        raise DomainError(f"{kind} potential is missing parameter {exc.args[0]!r}") from None
    raise DomainError(f"{kind} terms must be given as a list")


def spec_from_dict(d: dict) -> PotentialSpec:
    """Inverse of ``PotentialSpec.to_dict``."""
    d = dict(d)
    kind = str(d.pop("kind", "")).lower()
    if kind == "sum":
        return Sum(tuple(spec_from_dict(t) for t in d["terms"]))
    return spec_from_params(kind, d)


def scale_spec(spec: PotentialSpec, flux_unit: float, energy_unit: float) -> PotentialSpec:
    """Convert a spec written in SI units to reduced units."""
    if isinstance(spec, Quadratic):
        return Quadratic(spec.L * energy_unit / flux_unit ** 2)
    if isinstance(spec, Cosine):
        return Cosine(spec.EJ / energy_unit, spec.offset)
    if isinstance(spec, PowerLaw):
        return PowerLaw(spec.beta * flux_unit ** spec.gamma / energy_unit, spec.gamma, spec.is_symmetric)
    if isinstance(spec, PiecewiseLinear):
        return PiecewiseLinear(spec.a, spec.b * flux_unit / energy_unit)
    if isinstance(spec, Tabulated):
        return Tabulated(
            tuple(f / flux_unit for f in spec.flux), tuple(e / energy_unit for e in spec.energy)
        )
    if isinstance(spec, Sum):
        return Sum(tuple(scale_spec(t, flux_unit, energy_unit) for t in spec.terms))
    if isinstance(spec, SelfSimilar):
        raise DomainError("the self-similar potential is only defined in reduced units")
    raise DomainError(f"cannot rescale {spec!r}")
