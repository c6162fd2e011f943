from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from symred.catalog import (
    EquivalenceError,
    EquivalenceTransform,
    all_entries,
    apply_equivalence,
    case_i_branches,
    export_text,
    get_entry,
    lie_cases,
    same_form,
    tau0_cases,
    tau1_cases,
)
from symred.expr import ZeroTestPolicy, canonical, is_zero, normalize_u_poly, parse, substitute
from symred.model import Pde, Tau0, Tau1
from symred.verify import negative_controls, verify_operator

GOLDEN = Path(__file__).parent / "data" / "catalog.txt"


def p(text):
    return parse(text, functions={"B": 1, "k": 1})


def test_entry_counts_and_ids():
    assert [e.id for e in lie_cases()] == ["thm1.case1", "thm1.case2", "thm1.case3"]
    assert [e.id for e in tau1_cases()] == [
        "thm2.case1", "thm2.case2", "thm2.case3", "thm2.case4", "thm2.case5+", "thm2.case5-", "thm2.case6",
    ]
    assert [e.id for e in tau0_cases()] == [f"tau0.item{i}" for i in range(1, 9)]
    assert len({e.id for e in all_entries()}) == 18


def test_lie_entries():
    e1, e2, e3 = lie_cases()
    assert e1.operator == Tau1(0, 0)
    assert e2.operator == Tau0(0) and e2.k == p("c")
    assert same_form(e3.operator.xi, p("x/(2*t)"))
    # the normalized generator is the second case-(i) family psi = (a x + b)/(2 t a + m) with b = m = 0
    family = parse("(a*x + b)/(2*t*a + m)", params=("a", "b", "m"))
    assert same_form(e3.operator.xi, substitute(family, {"b": 0, "m": 0}))


def test_tau1_examples():
    case4 = get_entry("thm2.case4")
    assert case4.k == p("c*x^2") and same_form(case4.operator.xi, p("-1/x")) and case4.operator.eta == p("0")
    plus, minus = get_entry("thm2.case5+"), get_entry("thm2.case5-")
    assert same_form(plus.operator.xi, -minus.operator.xi)
    assert plus.params == {"c": ((0.1, 3.0),)}
    eta6 = normalize_u_poly(get_entry("thm2.case6").operator.eta)
    assert {k: canonical(v) for k, v in eta6.coeffs.items()} == {
        1: canonical(p("-3/x^2")), 2: canonical(p("6/x^2")), 3: canonical(p("-3/x^2")),
    }


def test_tau0_examples():
    item1 = get_entry("tau0.item1")
    assert item1.k == p("2*B(x)^2")
    assert same_form(item1.operator.eta, p("B(x)*u^2 - tan(x)*u"))
    assert item1.solution == {"B": p("tan(x)")}
    assert same_form(item1.ode, p("-4*B(x)*B'(x) + 4*B'(x)*tan(x) - B''(x) + 2*B(x) + 2*B(x)^2*tan(x)"))
    for i, sol in zip(range(2, 5), ("-tanh(x)", "-coth(x)", "-1/x")):
        assert get_entry(f"tau0.item{i}").solution == {"B": p(sol)}
    assert get_entry("tau0.item8").k == p("2*tanh(2*x)^2")
    assert same_form(get_entry("tau0.item6").operator.eta, p("u^2/(2*x)"))
    for i in range(5, 9):
        assert get_entry(f"tau0.item{i}").ode is None


def test_parameter_ranges_nonempty():
    for e in all_entries():
        for ranges in e.params.values():
            assert ranges and all(lo < hi for lo, hi in ranges)


def test_branches():
    branches = case_i_branches()
    assert [b.a for b in branches] == [1, -1, -1, 0]
    for b in branches:
        policy = ZeroTestPolicy().with_boxes(x=b.domain)
        assert is_zero(substitute(b.ode_residual, {"psi": b.psi}), policy)
        target = get_entry(b.matches)
        assert same_form(b.k, target.k)
        assert b.operator() == target.operator
        assert str(b.operator().xi) == str(target.operator.xi)


def test_golden_export():
    assert export_text() == GOLDEN.read_text()


def test_equivalence_examples():
    ident = EquivalenceTransform()
    pde, op = Pde(p("c*tan(x)^2")), Tau1(p("-cot(x)"), p("0"))
    assert apply_equivalence(ident, pde, op) == (pde, op)
    k, _ = apply_equivalence(EquivalenceTransform(2), Pde(p("c")), Tau0(0))
    assert same_form(k.k, p("c/4"))
    for e1 in (Fraction(3), Fraction(-1, 2), Fraction(7, 5)):
        k, _ = apply_equivalence(EquivalenceTransform(e1), Pde(p("c*x^(-2)")), Tau0(0))
        assert same_form(k.k, p("c*x^(-2)"))
    with pytest.raises(EquivalenceError):
        EquivalenceTransform(0)


def _transforms(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        e1 = Fraction(int(rng.integers(2, 9)), int(rng.integers(2, 6))) * (1 if rng.random() < 0.7 else -1)
        out.append(EquivalenceTransform(e1, Fraction(int(rng.integers(-4, 5)), 4), Fraction(int(rng.integers(-4, 5)), 4)))
    return out


def _cases():
    for entry in all_entries():
        pde, op = entry.instantiate()
        yield entry.id, pde, op, entry, "pass"
    for cid, pde, op, base in negative_controls():
        yield cid, pde, op, base, "fail"


@pytest.mark.parametrize("case", list(_cases()), ids=lambda c: c[0])
def test_equivariance(case):
    cid, pde, op, entry, expected = case
    base_policy = ZeroTestPolicy().with_boxes(**entry.domain).with_param_ranges(entry.params)
    assert verify_operator(pde, op, base_policy).verdict == expected
    for g in _transforms(5, seed=len(cid)):
        new_pde, new_op = apply_equivalence(g, pde, op)
        boxes = {name: g.map_interval(name, iv) for name, iv in entry.domain.items()}
        policy = ZeroTestPolicy().with_boxes(**boxes).with_param_ranges(entry.params)
        assert verify_operator(new_pde, new_op, policy).verdict == expected, (cid, g)
