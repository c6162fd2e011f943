import numpy as np
import pytest

from symred.catalog import all_entries
from symred.detsys import (
    ANSATZ_SOURCES,
    TAU1_ROUTE_SIGNS,
    ClosureSingular,
    LaurentAnsatz,
    Tau1Ansatz,
    case_ii_closure,
    conditional_invariance_residual,
    determining_residual_tau0,
    determining_system_tau0,
    determining_system_tau1,
    prolongation_system,
    reduced_system_ansatz,
    split_laurent_ansatz,
)
from symred.expr import (
    ZeroTestPolicy,
    canonical,
    is_zero,
    normalize_u_poly,
    parse,
    substitute,
)
from symred.model import Pde, Tau0, Tau1

F = {"k": 1, "B": 1}


def p(text):
    return parse(text, functions=F)


def same(a, b):
    return canonical(a) == canonical(b)


def test_trivial_operator_any_k():
    system = determining_system_tau1(Pde(p("k(x)")), p("0"), p("0"))
    assert len(system) == 4
    assert all(canonical(r.expr) == p("0") for r in system)


def test_case4_residuals_vanish_symbolically():
    system = determining_system_tau1(Pde(p("c*x^2")), p("-1/x"), p("0"))
    assert [str(canonical(r.expr)) for r in system] == ["0"] * 4
    assert [r.tag for r in system] == ["tau1.a", "tau1.b", "tau1.c", "tau1.d"]


def test_translation_operator_exposes_k_prime():
    system = determining_system_tau1(Pde(p("k(x)")), p("1"), p("0"))
    assert same(system[3].expr, p("k'(x)*u^2*(1-u)"))
    assert "k'(x)*u^2 - k'(x)*u^3" in system.to_text()


def test_tau0_equation_matches_item5():
    assert is_zero(determining_residual_tau0(Pde(p("2/x^2")), p("(u^2-1)/x")))
    assert len(determining_system_tau0(Pde(p("c")), p("0"))) == 1


def _random_instances(n, seed=3):
    """Random (k, operator) pairs built from a small menu of smooth pieces."""
    rng = np.random.default_rng(seed)
    ks = ["2 + sin(x)", "x^2 + 1", "c*exp(x)", "3/x", "c*tanh(x)^2"]
    pieces = ["x*t", "sin(x)", "u^2", "t*u", "x/(1+u^2)", "exp(t)*u^3", "cos(x*u)", "c*u"]
    out = []
    for i in range(n):
        k = p(ks[rng.integers(len(ks))])
        pick = lambda: " + ".join(rng.choice(pieces, size=2, replace=False))  # noqa: E731
        if i % 4 == 3:
            out.append((Pde(k), Tau0(p(pick()))))
        else:
            out.append((Pde(k), Tau1(p(pick()), p(pick()))))
    return out


def test_routes_agree_residual_by_residual_on_random_instances():
    policy = ZeroTestPolicy(samples=60, param_draws=2)
    for pde, op in _random_instances(20):
        if op.tau == 1:
            system = determining_system_tau1(pde, op.xi, op.eta)
            prolonged = prolongation_system(pde, op)
            for sign, a, b in zip(TAU1_ROUTE_SIGNS, system, prolonged):
                assert is_zero(b.expr - sign * a.expr, policy)
        else:
            a = determining_residual_tau0(pde, op.eta)
            assert is_zero(prolongation_system(pde, op)[0].expr - a, policy)
            assert is_zero(conditional_invariance_residual(pde, op) - a, policy)


def test_routes_agree_on_catalog():
    for entry in all_entries():
        pde, op = entry.instantiate()
        policy = ZeroTestPolicy().with_boxes(**entry.domain).with_param_ranges(entry.params)
        a = determining_system_tau1(pde, op.xi, op.eta) if op.tau == 1 else determining_system_tau0(pde, op.eta)
        b = prolongation_system(pde, op)
        assert all(is_zero(r.expr, policy) for r in a) == all(is_zero(r.expr, policy) for r in b)


def test_ansatz_equations_are_u_power_coefficients():
    pde = Pde(p("2 + sin(x)"))
    ansatz = Tau1Ansatz(p("x + t^2"), p("cos(x*t)"), p("x^2 - t"), p("exp(x)*t"))
    system = determining_system_tau1(pde, ansatz.xi, ansatz.eta)
    assert is_zero(system[0].expr) and is_zero(system[1].expr)
    forms = {"c": normalize_u_poly(system[2].expr), "d": normalize_u_poly(system[3].expr)}
    assert forms["c"].max_power == 3 and forms["d"].max_power == 4
    reduced = reduced_system_ansatz(pde, ansatz)
    assert len(reduced) == 9
    for i, (which, power) in ANSATZ_SOURCES.items():
        assert is_zero(reduced[i].expr - forms[which][power])


def test_ansatz_reconstruction():
    a = Tau1Ansatz()
    assert same(a.xi, parse("phi(t,x)*u + psi(t,x)", functions={"phi": 2, "psi": 2}))
    assert "phi" in reduced_system_ansatz(Pde(p("k(x)")), a).unknowns


def test_closure_phi_three_over_x():
    res = case_ii_closure(p("3/x"))
    assert same(res.pde.k, p("2*x^(-2)"))
    assert same(res.ansatz.psi, p("-3/x"))
    assert same(res.ansatz.A, p("-3/x^2"))
    assert same(res.ansatz.B, p("0"))
    assert is_zero(res.constraint)


def test_closure_constant_phi_and_constraint_failure():
    res = case_ii_closure(p("c"))
    assert same(res.pde.k, p("2/9*c^2"))
    assert same(res.ansatz.psi, p("-c/3"))
    assert is_zero(res.constraint)
    assert not is_zero(case_ii_closure(p("x")).constraint)


def test_closure_singular_denominator():
    # 2 phi^2 - 9 phi_x vanishes for phi = -9/(2x)
    with pytest.raises(ClosureSingular):
        case_ii_closure(p("-9/(2*x)"))


def test_laurent_split_recovers_item1_ode():
    ansatz = LaurentAnsatz(0, 2, {2: p("B(x)"), 1: p("-tan(x)"), 0: p("0")})
    system = split_laurent_ansatz(Pde(p("2*B(x)^2")), ansatz)
    item1 = p("-4*B(x)*B'(x) + 4*B'(x)*tan(x) - B''(x) + 2*B(x) + 2*B(x)^2*tan(x)")
    assert len(system) == 1
    assert same(system[0].expr, item1)
    assert system[0].tag == "laurent.u^2"


def test_laurent_split_symbolic_coefficients():
    system = split_laurent_ansatz(Pde(p("2*B(x)^2")), LaurentAnsatz(0, 2))
    assert [r.tag for r in system] == ["laurent.u^4", "laurent.u^3", "laurent.u^2", "laurent.u^1", "laurent.u^0"]
    assert {"phi_0", "phi_1", "phi_2", "B"} <= set(system.unknowns)


def test_laurent_ansatz_negative_powers_and_validation():
    system = split_laurent_ansatz(Pde(p("2/x^2")), LaurentAnsatz(1, 2, {-1: p("0"), 0: p("-1/x"), 1: p("0"),
                                                                         2: p("1/x")}))
    assert all(canonical(r.expr) == p("0") for r in system)
    with pytest.raises(Exception):
        LaurentAnsatz(0, 1, {0: p("0"), 1: p("0")})


def test_substitute_over_system():
    system = determining_system_tau1(Pde(p("k(x)")), p("1"), p("0"))
    bound = system.substitute({"k": p("x^2")})
    assert same(bound[3].expr, p("2*x*u^2*(1-u)"))
    assert substitute(p("k(x)"), {"k": p("x")}) == p("x")
