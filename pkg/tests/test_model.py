import pytest

from symred.catalog import all_entries
from symred.expr import U_T, U_X, ExprError, canonical, differentiate, parse
from symred.model import ModelError, Pde, Tau0, Tau1, characteristic, rhs


def p(text):
    return parse(text)


def same(a, b):
    return canonical(a) == canonical(b)


def test_rhs_examples():
    assert same(rhs(Pde(p("c"))), p("c*u^2*(1-u)"))
    assert same(rhs(Pde(p("2*x^(-2)"))), p("2*u^2*(1-u)/x^2"))
    assert same(rhs(Pde(p("c*tan(x)^2"))), p("c*tan(x)^2*u^2*(1-u)"))


def test_pde_rejects_bad_coefficients():
    with pytest.raises(ModelError):
        Pde(p("0"))
    with pytest.raises(ModelError):
        Pde(p("x - x"))
    with pytest.raises(ModelError):
        Pde(p("t*x"))
    with pytest.raises(ModelError):
        Pde(p("u"))
    assert issubclass(ModelError, ExprError)


def test_characteristic_examples():
    assert same(characteristic(Tau1(p("-1/x"), 0)).expr, p("-u_t + u_x/x"))
    assert same(characteristic(Tau0(p("(u^2-1)/x"))).expr, p("(u^2-1)/x - u_x"))
    assert characteristic(Tau1(0, 0)).expr == -U_T


def test_tau_normalizations():
    assert Tau1(p("x"), 0).tau == 1
    op = Tau0(p("u"))
    assert op.tau == 0 and op.xi == p("1")


def test_characteristic_is_linear_in_jet_slots():
    for entry in all_entries():
        _, op = entry.instantiate()
        q = characteristic(op).expr
        assert same(differentiate(q, "u_t"), p(str(-op.tau)))
        assert same(differentiate(q, "u_x"), -op.xi)
        assert differentiate(differentiate(q, "u_x"), "u_x") == p("0")
    assert U_X.name == "u_x"
