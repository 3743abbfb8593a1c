"""Lumped-element netlist model, text parser and serializer.

Line format (one element per line, ``#`` starts a comment)::

    units si|reduced
    ground 0
    C   n+ n- value
    L   n+ n- value               [loop=id]
    JJ  n+ n- EJ=value [Cint=value] [loop=id]
    NL  n+ n- kind key=val ...    [loop=id]
    NL  n+ n- sum [kind key=val ...] [kind key=val ...]
    GYR a+ a- b+ b- G=value
    FLUX loop=id phi=value

Node 0 is ground. SI input is converted to reduced units (hbar = 1,
flux quantum / 2 pi = 1, charge unit 2e, energy unit h x 1 GHz) at parse
time, so a parsed ``Netlist`` always holds reduced values.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from scipy import constants as sc

from .errors import DomainError, NetlistSyntaxError
from .potentials import PotentialSpec, Quadratic, Sum, scale_spec, spec_from_params

FLUX_UNIT = sc.hbar / (2.0 * sc.e)
CHARGE_UNIT = 2.0 * sc.e
ENERGY_UNIT = sc.h * 1.0e9


@dataclass(frozen=True)
class Capacitor:
    n_plus: int
    n_minus: int
    C: float


@dataclass(frozen=True)
class Inductor:
    n_plus: int
    n_minus: int
    spec: PotentialSpec
    loop: Optional[str] = None


@dataclass(frozen=True)
class Junction:
    n_plus: int
    n_minus: int
    EJ: float
    Cint: Optional[float] = None
    loop: Optional[str] = None


@dataclass(frozen=True)
class Gyrator:
    a_plus: int
    a_minus: int
    b_plus: int
    b_minus: int
    G: float


@dataclass(frozen=True)
class FluxTag:
    loop: str
    phi: float


Branch = Union[Capacitor, Inductor, Junction, Gyrator]


@dataclass
class Netlist:
    branches: list = field(default_factory=list)
    fluxes: dict = field(default_factory=dict)
    units: str = "reduced"

    @property
    def num_nodes(self) -> int:
        """Number of non-ground nodes."""
        top = 0
        for b in self.branches:
            top = max(top, *_terminals(b))
        return top

    def flux_offset(self, loop: Optional[str]) -> float:
        if loop is None:
            return 0.0
        return float(self.fluxes.get(loop, 0.0))

    def __eq__(self, other):
        if not isinstance(other, Netlist):
            return NotImplemented
        return self.branches == other.branches and self.fluxes == other.fluxes


def _terminals(b):
    if isinstance(b, Gyrator):
        return (b.a_plus, b.a_minus, b.b_plus, b.b_minus)
    return (b.n_plus, b.n_minus)


_TOKEN = re.compile(r"\[[^\]]*\]|\S+")


def _tokens(line):
    return [(m.group(0), m.start() + 1) for m in _TOKEN.finditer(line)]


def _keyvals(toks, lineno):
    out = {}
    for tok, col in toks:
        if "=" not in tok:
            raise NetlistSyntaxError(f"expected key=value, got {tok!r}", lineno, col)
        k, v = tok.split("=", 1)
        if not k or not v:
            raise NetlistSyntaxError(f"malformed key=value {tok!r}", lineno, col)
        out[k.lower()] = (v, col)
    return out


def _number(text, lineno, col, positive=True, name="value"):
    try:
        v = float(text)
    except ValueError:
        raise NetlistSyntaxError(f"expected a number, got {text!r}", lineno, col) from None
    if not math.isfinite(v):
        raise NetlistSyntaxError(f"{name} must be finite", lineno, col)
    if positive and v <= 0.0:
        raise NetlistSyntaxError(f"{name} must be positive, got {v}", lineno, col)
    return v


def _node(text, lineno, col):
    if not re.fullmatch(r"\d+", text):
        raise NetlistSyntaxError(f"node labels are non-negative integers, got {text!r}", lineno, col)
    return int(text)


def _spec(kind, toks, lineno, col):
    kind = kind.lower()
    if kind == "sum":
        terms = []
        for tok, tcol in toks:
            if not (tok.startswith("[") and tok.endswith("]")):
                raise NetlistSyntaxError("sum terms must be bracketed, e.g. [cosine EJ=1]", lineno, tcol)
            inner = _tokens(tok[1:-1])
            if not inner:
                raise NetlistSyntaxError("empty sum term", lineno, tcol)
            sub = [(t, c + tcol) for t, c in inner]
            terms.append(_spec(sub[0][0], sub[1:], lineno, sub[0][1]))
        return Sum(tuple(terms))
    kv = _keyvals(toks, lineno)
    try:
        return spec_from_params(kind, {k: v for k, (v, _) in kv.items()})
    except (DomainError, ValueError) as exc:
        raise NetlistSyntaxError(str(exc), lineno, col) from None


def parse_netlist(text: str) -> Netlist:
    """Parse netlist text; raises ``NetlistSyntaxError`` with line/column."""
    lines = text.splitlines()
    units = None
    for i, raw in enumerate(lines, 1):
        toks = _tokens(raw.split("#", 1)[0])
        if toks and toks[0][0].lower() == "units":
            if units is not None:
                raise NetlistSyntaxError("units declared twice", i, toks[0][1])
            if len(toks) != 2 or toks[1][0].lower() not in ("si", "reduced"):
                raise NetlistSyntaxError("units must be 'si' or 'reduced'", i, toks[0][1])
            units = toks[1][0].lower()
    units = units or "reduced"
    si = units == "si"

    branches = []
    fluxes = {}
    ground_seen = False
    for i, raw in enumerate(lines, 1):
        toks = _tokens(raw.split("#", 1)[0])
        if not toks:
            continue
        head, hcol = toks[0]
        key = head.upper()
        rest = toks[1:]
        if key == "UNITS":
            continue
        if key == "GROUND":
            if ground_seen:
                raise NetlistSyntaxError("duplicate ground definition", i, hcol)
            if len(rest) != 1 or rest[0][0] != "0":
                raise NetlistSyntaxError("ground must be node 0", i, hcol)
            ground_seen = True
            continue
        if key in ("C", "L", "JJ", "NL"):
            if len(rest) < 3:
                raise NetlistSyntaxError(f"{head} needs two nodes and a value", i, hcol)
            n1 = _node(rest[0][0], i, rest[0][1])
            n2 = _node(rest[1][0], i, rest[1][1])
            if n1 == n2:
                raise NetlistSyntaxError("branch terminals must differ", i, rest[1][1])
            args = rest[2:]
            if key == "C":
                if len(args) != 1:
                    raise NetlistSyntaxError("C takes exactly one value", i, args[-1][1])
                c = _number(args[0][0], i, args[0][1], name="capacitance")
                if si:
                    c *= ENERGY_UNIT / CHARGE_UNIT ** 2
                branches.append(Capacitor(n1, n2, c))
                continue
            loop = None
            loop_toks = [t for t in args if t[0].lower().startswith("loop=")]
            args = [t for t in args if not t[0].lower().startswith("loop=")]
            if loop_toks:
                loop = loop_toks[0][0].split("=", 1)[1]
            if key == "L":
                if len(args) != 1:
                    raise NetlistSyntaxError("L takes exactly one value", i, hcol)
                spec = Quadratic(_number(args[0][0], i, args[0][1], name="inductance"))
                if si:
                    spec = scale_spec(spec, FLUX_UNIT, ENERGY_UNIT)
                branches.append(Inductor(n1, n2, spec, loop))
            elif key == "JJ":
                kv = _keyvals(args, i)
                if "ej" not in kv:
                    raise NetlistSyntaxError("JJ needs EJ=", i, hcol)
                ej = _number(kv["ej"][0], i, kv["ej"][1], name="EJ")
                cint = None
                if "cint" in kv:
                    cint = _number(kv["cint"][0], i, kv["cint"][1], name="Cint")
                unknown = set(kv) - {"ej", "cint"}
                if unknown:
                    raise NetlistSyntaxError(f"unknown JJ parameter {sorted(unknown)[0]!r}", i, hcol)
                if si:
                    ej /= ENERGY_UNIT
                    if cint is not None:
                        cint *= ENERGY_UNIT / CHARGE_UNIT ** 2
                branches.append(Junction(n1, n2, ej, cint, loop))
            else:
                spec = _spec(args[0][0], args[1:], i, args[0][1])
                if si:
                    try:
                        spec = scale_spec(spec, FLUX_UNIT, ENERGY_UNIT)
                    except DomainError as exc:
                        raise NetlistSyntaxError(str(exc), i, args[0][1]) from None
                branches.append(Inductor(n1, n2, spec, loop))
            continue
        if key == "GYR":
            if len(rest) != 5:
                raise NetlistSyntaxError("GYR takes four nodes and G=", i, hcol)
            nodes = [_node(t, i, c) for t, c in rest[:4]]
            if nodes[0] == nodes[1] or nodes[2] == nodes[3]:
                raise NetlistSyntaxError("gyrator port terminals must differ", i, hcol)
            kv = _keyvals(rest[4:], i)
            if "g" not in kv:
                raise NetlistSyntaxError("GYR needs G=", i, rest[4][1])
            g = _number(kv["g"][0], i, kv["g"][1], name="G")
            if si:
                g *= FLUX_UNIT ** 2 / sc.hbar
            branches.append(Gyrator(*nodes, g))
            continue
        if key == "FLUX":
            kv = _keyvals(rest, i)
            if "loop" not in kv or "phi" not in kv:
                raise NetlistSyntaxError("FLUX needs loop= and phi=", i, hcol)
            phi = _number(kv["phi"][0], i, kv["phi"][1], positive=False, name="phi")
            if si:
                phi /= FLUX_UNIT
            fluxes[kv["loop"][0]] = phi
            continue
        raise NetlistSyntaxError(f"unknown element {head!r}", i, hcol)

    net = Netlist(branches, fluxes, units)
    validate(net)
    return net


def validate(net: Netlist):
    """Check ground, dense node numbering, dangling nodes and connectivity."""
    if not net.branches:
        raise DomainError("netlist has no elements")
    degree = {}
    adj = {}
    for b in net.branches:
        # a junction with intrinsic capacitance is two parallel elements
        weight = 2 if isinstance(b, Junction) and b.Cint is not None else 1
        for t in _terminals(b):
            degree[t] = degree.get(t, 0) + weight
        pairs = [(b.a_plus, b.a_minus), (b.b_plus, b.b_minus)] if isinstance(b, Gyrator) else [_terminals(b)]
        for u, v in pairs:
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
    if 0 not in degree:
        raise DomainError("no element touches ground node 0")
    m = max(degree)
    missing = sorted(set(range(m + 1)) - set(degree))
    if missing:
        raise DomainError(f"node numbering must be dense; missing node {missing[0]}")
    for node, d in sorted(degree.items()):
        if node != 0 and d < 2:
            raise DomainError(f"dangling node {node}")
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    floating = sorted(set(degree) - seen)
    if floating:
        raise DomainError(f"node {floating[0]} is not connected to ground")
    for b in net.branches:
        if isinstance(b, (Inductor, Junction)) and b.loop is not None and b.loop not in net.fluxes:
            raise DomainError(f"loop {b.loop!r} has no FLUX declaration")


def _fmt(v):
    return repr(float(v))


def _spec_text(spec):
    if isinstance(spec, Sum):
        return "sum " + " ".join(f"[{_spec_text(t)}]" for t in spec.terms)
    parts = [spec.kind]
    for k, v in spec.params().items():
        if isinstance(v, bool):
            parts.append(f"{k}={str(v).lower()}")
        elif isinstance(v, list):
            parts.append(f"{k}=" + ",".join(_fmt(x) for x in v))
        else:
            parts.append(f"{k}={_fmt(v)}")
    return " ".join(parts)


def serialize(net: Netlist) -> str:
    """Write a netlist in reduced units; ``parse_netlist`` inverts this."""
    out = ["units reduced"]
    for b in net.branches:
        if isinstance(b, Capacitor):
            out.append(f"C {b.n_plus} {b.n_minus} {_fmt(b.C)}")
        elif isinstance(b, Inductor):
            loop = f" loop={b.loop}" if b.loop is not None else ""
            if isinstance(b.spec, Quadratic):
                out.append(f"L {b.n_plus} {b.n_minus} {_fmt(b.spec.L)}{loop}")
            else:
                out.append(f"NL {b.n_plus} {b.n_minus} {_spec_text(b.spec)}{loop}")
        elif isinstance(b, Junction):
            cint = f" Cint={_fmt(b.Cint)}" if b.Cint is not None else ""
            loop = f" loop={b.loop}" if b.loop is not None else ""
            out.append(f"JJ {b.n_plus} {b.n_minus} EJ={_fmt(b.EJ)}{cint}{loop}")
        elif isinstance(b, Gyrator):
            out.append(f"GYR {b.a_plus} {b.a_minus} {b.b_plus} {b.b_minus} G={_fmt(b.G)}")
    for loop, phi in net.fluxes.items():
        out.append(f"FLUX loop={loop} phi={_fmt(phi)}")
    return "\n".join(out) + "\n"


def load_netlist(path) -> Netlist:
    with open(path) as fh:
        return parse_netlist(fh.read())
