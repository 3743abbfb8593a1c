import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qflow.errors import DomainError, NetlistSyntaxError
from qflow.netlist import (
    ENERGY_UNIT,
    FLUX_UNIT,
    Capacitor,
    Gyrator,
    Inductor,
    Junction,
    load_netlist,
    parse_netlist,
    serialize,
)
from qflow.potentials import (
    Cosine,
    PiecewiseLinear,
    PowerLaw,
    Quadratic,
    SelfSimilar,
    Sum,
    Tabulated,
    potential_eval,
    spec_from_dict,
)


def test_series_inductors():
    net = parse_netlist("C 1 0 1.0\nL 1 2 1.0\nL 2 0 2.0")
    assert net.num_nodes == 2
    assert net.branches == [Capacitor(1, 0, 1.0), Inductor(1, 2, Quadratic(1.0)), Inductor(2, 0, Quadratic(2.0))]


def test_junction_with_intrinsic_capacitance():
    net = parse_netlist("JJ 1 0 EJ=1.0 Cint=1e-4")
    assert net.branches == [Junction(1, 0, 1.0, 1e-4)]


def test_non_positive_value_rejected():
    with pytest.raises(NetlistSyntaxError) as exc:
        parse_netlist("L 1 0 -2.0")
    assert exc.value.line == 1 and exc.value.column is not None


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("C 1 0 1.0\nX 1 0 2", "unknown element"),
        ("ground 0\nground 0\nC 1 0 1", "duplicate ground"),
        ("C 1 0 1\nL 1 2 1", "dangling node 2"),
        ("C 1 1 1", "terminals must differ"),
        ("C 1 0 1\nC 3 0 1", "dense"),
        ("C 1 0 abc", "line 1"),
        ("units si\nunits si\nC 1 0 1", "units declared twice"),
        ("C 1 0 1\nL 1 0 1 loop=a", "FLUX declaration"),
        ("C 1 2 1\nL 1 2 1", "ground"),
    ],
)
def test_syntax_and_graph_errors(text, fragment):
    with pytest.raises(DomainError, match=fragment):
        parse_netlist(text)


def test_comments_and_sum_terms():
    net = parse_netlist(
        "# header\nunits reduced\nC 1 0 2.0  # shunt\nNL 1 0 sum [quadratic L=2] [cosine EJ=1]\n"
    )
    spec = net.branches[1].spec
    assert isinstance(spec, Sum) and spec.terms == (Quadratic(2.0), Cosine(1.0))


def test_si_units_are_normalised():
    net = parse_netlist(f"units si\nC 1 0 1e-13\nJJ 1 0 EJ={ENERGY_UNIT * 5}\nFLUX loop=a phi={FLUX_UNIT * 0.5}")
    assert net.branches[1].EJ == pytest.approx(5.0)
    assert net.fluxes["a"] == pytest.approx(0.5)


def test_shipped_netlists_parse(netlists):
    for path in sorted(netlists.glob("*.net")):
        net = load_netlist(path)
        assert parse_netlist(serialize(net)) == net


_value = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


@st.composite
def netlists_strategy(draw):
    """Random connected netlists: a chain to ground plus optional extras."""
    m = draw(st.integers(1, 4))
    lines = []
    for node in range(1, m + 1):
        lines.append(f"C {node} {node - 1} {draw(_value)!r}")
        kind = draw(st.sampled_from(["L", "JJ", "NL"]))
        if kind == "L":
            lines.append(f"L {node} 0 {draw(_value)!r}")
        elif kind == "JJ":
            lines.append(f"JJ {node} 0 EJ={draw(_value)!r} Cint={draw(_value)!r}")
        else:
            lines.append(f"NL {node} 0 powerlaw beta={draw(_value)!r} gamma={draw(_value)!r}")
    if m >= 2 and draw(st.booleans()):
        lines.append(f"GYR 1 0 2 0 G={draw(_value)!r}")
    return "\n".join(lines)


@given(netlists_strategy())
def test_roundtrip(text):
    net = parse_netlist(text)
    assert parse_netlist(serialize(net)) == net


def test_potential_eval_examples():
    assert potential_eval(Cosine(1.0), 0.0) == (-1.0, 0.0)
    u, du = potential_eval(PowerLaw(1.0, 4.0), 2.0)
    assert (u, du) == (16.0, 32.0)
    u, du = potential_eval(Quadratic(2.0), 3.0)
    assert (u, du) == (2.25, 1.5)


SMOOTH_SPECS = [
    Quadratic(1.7),
    Cosine(0.8, 0.3),
    PowerLaw(0.5, 1.5),
    PowerLaw(2.0, 4.0),
    Sum((Quadratic(2.0), Cosine(1.0))),
]
TABLE = Tabulated(tuple(np.linspace(-10, 10, 41)), tuple(np.cos(np.linspace(-10, 10, 41))))
SYMMETRIC_SPECS = [Quadratic(1.0), Cosine(1.0), PowerLaw(1.0, 1.5), PowerLaw(1.0, 3.0), PiecewiseLinear(0.0, 2.0),
                   SelfSimilar(), Sum((Quadratic(2.0), Cosine(1.0)))]


@given(st.lists(st.floats(-9.0, 9.0), min_size=100, max_size=100))
def test_symmetric_specs_are_even(phis):
    phi = np.array(phis)
    for spec in SYMMETRIC_SPECS:
        assert spec.symmetric
        np.testing.assert_array_equal(spec.value(phi), spec.value(-phi))


@given(st.floats(-9.0, 9.0).filter(lambda x: abs(x) > 1e-2))
def test_derivative_matches_finite_difference(phi):
    h = 1e-5
    for spec in SMOOTH_SPECS:
        fd = (spec.value(phi + h) - spec.value(phi - h)) / (2 * h)
        du = spec.derivative(phi)
        assert abs(fd - du) <= 1e-6 * max(1.0, abs(du)) + 1e-7


@pytest.mark.parametrize("y", [0.05, 0.3, 7.0, 31.0])
def test_self_similar_scaling(y):
    s = SelfSimilar()
    assert s.value(100 * y) == pytest.approx(1e4 * s.value(y), rel=1e-12)
    assert s.derivative(100 * y) == pytest.approx(1e2 * s.derivative(y), rel=1e-12)


def test_self_similar_is_smooth_at_band_edges():
    s = SelfSimilar()
    for edge in (0.1, 1.0, 10.0, 100.0):
        lo, hi = edge * (1 - 1e-9), edge * (1 + 1e-9)
        assert s.value(lo) == pytest.approx(s.value(hi), rel=1e-6)
        assert s.derivative(lo) == pytest.approx(s.derivative(hi), rel=1e-6)


@given(st.floats(-9.5, 9.5))
def test_tabulated_is_c1(phi):
    h = 1e-7
    assert TABLE.derivative(phi - h) == pytest.approx(TABLE.derivative(phi + h), abs=1e-5)
    fd = (TABLE.value(phi + h) - TABLE.value(phi - h)) / (2 * h)
    assert fd == pytest.approx(TABLE.derivative(phi), abs=1e-5)


def test_tabulated_refuses_to_extrapolate():
    t = Tabulated((0.0, 1.0, 2.0), (0.0, 1.0, 4.0))
    with pytest.raises(DomainError):
        t.value(2.5)


@pytest.mark.parametrize("bad", [lambda: Quadratic(0.0), lambda: PowerLaw(-1.0, 2.0), lambda: PowerLaw(1.0, 0.0),
                                 lambda: PiecewiseLinear(0.0, 0.0), lambda: Sum(())])
def test_spec_invariants(bad):
    with pytest.raises(DomainError):
        bad()


def test_asymmetric_power_law_convention():
    s = PowerLaw(1.0, 0.5, is_symmetric=False)
    assert s.value(-4.0) == pytest.approx(-2.0)
    assert not s.symmetric


def test_piecewise_linear_slopes():
    s = PiecewiseLinear(1.0, 2.0)
    assert s.value(1.0) == 4.0 and s.value(-1.0) == 2.0


@pytest.mark.parametrize("spec", SMOOTH_SPECS + [TABLE, PiecewiseLinear(0.5, 1.0), SelfSimilar()])
def test_dict_roundtrip(spec):
    assert spec_from_dict(spec.to_dict()) == spec


def test_gyrator_has_four_terminals():
    net = parse_netlist("C 1 0 1\nC 2 0 1\nL 1 0 1\nL 2 0 1\nGYR 1 0 2 0 G=2")
    g = net.branches[-1]
    assert isinstance(g, Gyrator) and (g.a_plus, g.a_minus, g.b_plus, g.b_minus, g.G) == (1, 0, 2, 0, 2.0)
    assert math.isclose(g.G, 2.0)
