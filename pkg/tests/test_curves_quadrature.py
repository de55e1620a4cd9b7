import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from casimir_trench.curves import (KINDS, ForceCurve, read_curve_csv, read_table_csv, write_curve_csv,
                                   write_table_csv)
from casimir_trench.errors import DomainError, NumericalError, ParseError, ValidationError
from casimir_trench.quadrature import integrate

finite = st.floats(-1e30, 1e30, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(finite, st.floats(0, 1e30)), min_size=1, max_size=25), st.sampled_from(KINDS),
       st.text(st.characters(blacklist_categories=("Cc", "Cs")), max_size=30))
def test_curve_csv_round_trip(tmp_path_factory, rows, kind, prov):
    z = np.cumsum(np.linspace(1e-9, 2e-9, len(rows)))
    c = ForceCurve(z, [r[0] for r in rows], [r[1] for r in rows], kind=kind, provenance=prov.strip())
    p = tmp_path_factory.mktemp("c") / "c.csv"
    write_curve_csv(c, p)
    back = read_curve_csv(p)
    assert np.array_equal(back.z, c.z) and np.array_equal(back.value, c.value)
    assert np.array_equal(back.sigma, c.sigma)
    assert back.kind == kind and back.provenance == c.provenance


def test_curve_invariants():
    with pytest.raises(ValidationError):
        ForceCurve([2.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValidationError):
        ForceCurve([1.0, 2.0], [1.0])
    with pytest.raises(ValidationError):
        ForceCurve([1.0], [1.0], [-1.0])
    with pytest.raises(ValidationError):
        ForceCurve([1.0], [1.0], kind="torque")
    with pytest.raises(ValidationError):
        ForceCurve([], [])
    c = ForceCurve([1.0, 2.0], [3.0, 4.0], [0.1, 0.2])
    with pytest.raises(ValueError):
        c.value[0] = 0.0
    s = c.scaled(-2.0)
    assert s.value.tolist() == [-6.0, -8.0] and s.sigma.tolist() == [0.2, 0.4]
    assert c.same_grid(s) and not c.same_grid(ForceCurve([1.0, 3.0], [0, 0]))


def test_curve_csv_errors(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("z,value\n1,2\n")
    with pytest.raises(ParseError):
        read_curve_csv(p)
    p.write_text("z_m,value,sigma,kind\n1,2,0,pressure\n2,2,0,ratio\n")
    with pytest.raises(ParseError) as ei:
        read_curve_csv(p)
    assert ei.value.line == 3
    p.write_text("z_m,value,sigma,kind\n")
    with pytest.raises(ParseError):
        read_curve_csv(p)


def test_table_csv_round_trip(tmp_path):
    cols = {"a": [1.0, 2.5, float("inf")], "b": [0.1, -3e-300, 7.0]}
    p = tmp_path / "t.csv"
    write_table_csv(cols, p, comment="x")
    back = read_table_csv(p)
    assert list(back) == ["a", "b"]
    assert back["a"].tolist() == cols["a"] and back["b"].tolist() == cols["b"]
    with pytest.raises(ValidationError):
        write_table_csv({"a": [1.0], "b": [1.0, 2.0]}, p)
    p.write_text("a,b\n1\n")
    with pytest.raises(ParseError):
        read_table_csv(p)


# -- quadrature -----------------------------------------------------------------

def test_polynomial_exact():
    assert integrate(lambda x: x**5 - 3 * x, [0.0, 2.0]) == pytest.approx(64 / 6 - 6, rel=1e-14)


def test_peaked_and_vector_integrands():
    val = integrate(lambda x: 1.0 / (1e-4 + x**2), [-1.0, 0.0, 1.0], rtol=1e-10)
    assert val == pytest.approx(2 * math.atan(1 / 1e-2) / 1e-2, rel=1e-9)
    k = np.array([1.0, 2.0, 3.0])
    vec = integrate(lambda x: np.exp(-np.outer(x, k)), [0.0, 1.0, 50.0], rtol=1e-12)
    assert np.allclose(vec, (1 - np.exp(-50 * k)) / k, rtol=1e-11)


def test_sqrt_endpoint_singularity():
    val = integrate(lambda x: 1 / np.sqrt(x), [0.0, 1.0], rtol=1e-8, max_panels=20000)
    assert val == pytest.approx(2.0, rel=1e-7)


def test_panel_cap_raises_with_diagnostics():
    with pytest.raises(NumericalError) as ei:
        integrate(lambda x: 1.0 / x, [0.0, 1.0], rtol=1e-8, max_panels=200)
    assert "max_panels" in ei.value.diagnostics


def test_bad_breakpoints():
    with pytest.raises(DomainError):
        integrate(np.sin, [1.0, 0.0])


def test_jump_is_localized():
    val = integrate(lambda x: np.sign(x - 1 / 3), [0.0, 1.0], rtol=1e-12)
    assert val == pytest.approx(1 / 3, rel=1e-11)
