"""Pass/fail engine over the catalog, with JSON reports.

Every operator is checked twice: once against the transcribed determining
system and once against residuals split out of the prolonged operator.  The
two routes must agree; a disagreement is an internal-consistency error.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .catalog import (
    CaseIBranch,
    CatalogEntry,
    all_entries,
    case_i_branches,
    get_entry,
    same_form,
)
from .detsys import (
    case_ii_closure,
    determining_system_tau1,
    determining_system_tau0,
    prolongation_system,
)
from .expr import (
    EvaluationError,
    Expr,
    ZeroTestPolicy,
    add,
    is_zero,
    lift,
    mul,
    param,
    parse,
    substitute,
)
from .model import Pde, ReductionOperator, Tau0, Tau1

DEFAULT_TOL = 1e-9
CONTROL_FACTOR = 1e3
ROUTES = ("system", "prolongation")


@dataclass(frozen=True)
class ResidualRecord:
    id: str
    route: str
    residual_index: int
    verdict: str
    witness: dict | None = None

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "route": self.route,
            "residual_index": self.residual_index,
            "verdict": self.verdict,
            "witness": self.witness,
        }


@dataclass
class VerificationReport:
    id: str
    kind: str
    expected: str
    records: list = field(default_factory=list)
    policy: dict = field(default_factory=dict)
    param_draws: int = 0
    errors: list = field(default_factory=list)
    min_failure: float | None = None  # smallest relative residual among failing records

    def route_verdict(self, route: str) -> str:
        recs = [r for r in self.records if r.route == route]
        return "pass" if recs and all(r.verdict == "pass" for r in recs) else "fail"

    @property
    def verdict(self) -> str:
        if self.errors:
            return "fail"
        return "pass" if all(r.verdict == "pass" for r in self.records) else "fail"

    @property
    def consistent(self) -> bool:
        routes = {r.route for r in self.records} & set(ROUTES)
        if len(routes) < 2:
            return True
        return len({self.route_verdict(r) for r in routes}) == 1

    @property
    def tolerance_sensitive(self) -> bool:
        """A failure that would have passed at the default tolerance."""
        return self.min_failure is not None and self.min_failure <= DEFAULT_TOL

    @property
    def ok(self) -> bool:
        return self.consistent and self.verdict == self.expected and not self.errors

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "expected": self.expected,
            "verdict": self.verdict,
            "consistent": self.consistent,
            "tolerance_sensitive": self.tolerance_sensitive,
            "param_draws": self.param_draws,
            "errors": list(self.errors),
            "records": [r.as_dict() for r in self.records],
        }

    def _note_failure(self, relative: float):
        if self.min_failure is None or relative < self.min_failure:
            self.min_failure = relative


def _policy_for(policy: ZeroTestPolicy, domain=None, params=None) -> ZeroTestPolicy:
    if domain:
        policy = policy.with_boxes(**domain)
    if params:
        policy = policy.with_param_ranges(params)
    return policy


def _check(report: VerificationReport, route: str, index: int, e: Expr, policy: ZeroTestPolicy):
    try:
        res = is_zero(e, policy)
    except EvaluationError as exc:
        report.errors.append(f"{route}[{index}]: {exc}")
        report.records.append(ResidualRecord(report.id, route, index, "fail"))
        return
    if res:
        report.records.append(ResidualRecord(report.id, route, index, "pass"))
    else:
        report._note_failure(res.witness.relative)
        report.records.append(ResidualRecord(report.id, route, index, "fail", res.witness.as_dict()))


def _system(pde: Pde, op: ReductionOperator):
    if op.tau == 1:
        return determining_system_tau1(pde, op.xi, op.eta)
    return determining_system_tau0(pde, op.eta)


def verify_operator(pde: Pde, op: ReductionOperator, policy: ZeroTestPolicy | None = None, *,
                    id: str = "operator", expected: str = "pass", kind: str = "operator") -> VerificationReport:
    """Check ``op`` against ``pde`` by both routes."""
    policy = policy or ZeroTestPolicy()
    report = VerificationReport(id, kind, expected, policy=policy.as_dict(), param_draws=policy.param_draws)
    for route, system in (("system", _system(pde, op)), ("prolongation", prolongation_system(pde, op))):
        for i, r in enumerate(system):
            _check(report, route, i, r.expr, policy)
    return report


def check_ode_solution(ode_residual: Expr, candidate, domain, policy: ZeroTestPolicy | None = None,
                       name: str = "B"):
    policy = _policy_for(policy or ZeroTestPolicy(), {"x": tuple(domain)})
    return is_zero(substitute(ode_residual, {name: lift(candidate)}), policy)


def verify_ode_solution(ode_residual: Expr, candidate, domain, policy: ZeroTestPolicy | None = None,
                        name: str = "B") -> bool:
    """True when ``candidate`` (an Expr in x) solves the ODE for the function symbol ``name``."""
    return bool(check_ode_solution(ode_residual, candidate, domain, policy, name))


def verify_entry(entry: CatalogEntry, policy: ZeroTestPolicy | None = None) -> VerificationReport:
    pol = _policy_for(policy or ZeroTestPolicy(), entry.domain, entry.params)
    pde, op = entry.instantiate()
    return verify_operator(pde, op, pol, id=entry.id, expected=entry.expected)


def _ode_report(entry: CatalogEntry, policy: ZeroTestPolicy) -> VerificationReport:
    pol = _policy_for(policy, entry.domain, entry.params)
    report = VerificationReport(f"{entry.id}.ode", "ode", "pass", policy=pol.as_dict(), param_draws=pol.param_draws)
    _check(report, "ode", 0, substitute(entry.ode, entry.solution), pol)
    return report


def _structural(report: VerificationReport, index: int, same: bool):
    report.records.append(ResidualRecord(report.id, "structure", index, "pass" if same else "fail"))


def _branch_report(branch: CaseIBranch, policy: ZeroTestPolicy) -> VerificationReport:
    pol = _policy_for(policy, {"x": branch.domain})
    report = VerificationReport(branch.id, "branch", "pass", policy=pol.as_dict(), param_draws=pol.param_draws)
    _check(report, "ode", 0, substitute(branch.ode_residual, {"psi": branch.psi}), pol)
    target = get_entry(branch.matches)
    _structural(report, 1, same_form(branch.k, target.k))
    _structural(report, 2, same_form(branch.psi, target.operator.xi) and same_form(lift(0), target.operator.eta))
    return report


def _closure_report(cid: str, phi: str, target_id: str, rename: dict, policy: ZeroTestPolicy) -> VerificationReport:
    target = get_entry(target_id)
    pol = _policy_for(policy, target.domain, target.params)
    report = VerificationReport(cid, "closure", "pass", policy=pol.as_dict(), param_draws=pol.param_draws)
    closure = case_ii_closure(parse(phi, params=("c",)), pol)
    op = closure.operator
    k, xi, eta = (substitute(e, rename) for e in (closure.pde.k, op.xi, op.eta))
    _structural(report, 0, same_form(k, target.k))
    _structural(report, 1, same_form(xi, target.operator.xi))
    _structural(report, 2, same_form(eta, target.operator.eta))
    _check(report, "constraint", 3, closure.constraint, pol)
    return report


CLOSURES = (
    # (id, phi, matching entry, parameter renaming)
    ("closure.phi=3/x", "3/x", "thm2.case6", {}),
    ("closure.phi=c", "c", "thm2.case5+", {"c": mul(Fraction(3, 2), param("c"))}),
)


def closure_reports(policy: ZeroTestPolicy | None = None) -> list:
    policy = policy or ZeroTestPolicy()
    return [_closure_report(*spec, policy) for spec in CLOSURES]


def negative_controls() -> list:
    """Perturbed (id, pde, operator, domain, params) tuples that must fail."""
    out = []
    case3 = get_entry("thm2.case3")
    out.append(("control.thm2.case3.xi*2", case3.pde, Tau1(mul(2, case3.operator.xi), case3.operator.eta), case3))
    case6 = get_entry("thm2.case6")
    out.append(("control.thm2.case6.-eta", case6.pde, Tau1(case6.operator.xi, mul(-1, case6.operator.eta)), case6))
    case4 = get_entry("thm2.case4")
    out.append(("control.thm2.case4.k+1", Pde(add(case4.k, 1)), case4.operator, case4))
    item5 = get_entry("tau0.item5")
    out.append(("control.tau0.item5.eta*2", item5.pde, Tau0(mul(2, item5.operator.eta)), item5))
    item6 = get_entry("tau0.item6")
    out.append(("control.tau0.item6.k+1", Pde(add(item6.k, 1)), item6.operator, item6))
    return out


def _control_report(cid, pde, op, base: CatalogEntry, policy: ZeroTestPolicy) -> VerificationReport:
    pol = _policy_for(policy, base.domain, base.params)
    report = verify_operator(pde, op, pol, id=cid, expected="fail", kind="control")
    floor = CONTROL_FACTOR * pol.tol
    weak = [r for r in report.records if r.verdict == "fail" and r.witness and abs(r.witness["value"]) < floor]
    if weak:
        report.errors.append(f"control witness below {floor:g}")
    return report


def _matches(ident: str, ids) -> bool:
    if ids is None:
        return True
    return any(ident == i or ident.startswith(i + ".") for i in ids)


def catalog_jobs(policy: ZeroTestPolicy, ids=None) -> list:
    """Zero-argument callables producing reports, in report order."""
    jobs = []
    entries = all_entries()
    for e in entries:
        if _matches(e.id, ids):
            jobs.append(lambda e=e: verify_entry(e, policy))
    for e in entries:
        if e.ode is not None and _matches(f"{e.id}.ode", ids):
            jobs.append(lambda e=e: _ode_report(e, policy))
    for b in case_i_branches():
        if _matches(b.id, ids):
            jobs.append(lambda b=b: _branch_report(b, policy))
    for spec in CLOSURES:
        if _matches(spec[0], ids):
            jobs.append(lambda spec=spec: _closure_report(*spec, policy))
    for cid, pde, op, base in negative_controls():
        if _matches(cid, ids):
            jobs.append(lambda a=(cid, pde, op, base): _control_report(*a, policy))
    return jobs


def verify_catalog(policy: ZeroTestPolicy | None = None, ids=None, workers: int = 1) -> list:
    """Run every check (or those whose id matches ``ids``); order is fixed regardless of ``workers``."""
    policy = policy or ZeroTestPolicy()
    jobs = catalog_jobs(policy, ids)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: job(), jobs))
    else:
        results = [job() for job in jobs]
    out = []
    for r in results:
        out.extend(r if isinstance(r, list) else [r])
    return out


def summarize(reports) -> dict:
    kinds = {}
    for r in reports:
        bucket = kinds.setdefault(r.kind, {"total": 0, "pass": 0, "fail": 0})
        bucket["total"] += 1
        bucket[r.verdict] += 1
    return {
        "reports": len(reports),
        "by_kind": dict(sorted(kinds.items())),
        "ok": all(r.ok for r in reports),
        "consistent": all(r.consistent for r in reports),
        "tolerance_sensitive": sorted(r.id for r in reports if r.tolerance_sensitive),
    }


def reports_to_json(reports, policy: ZeroTestPolicy) -> str:
    doc = {
        "seed": policy.seed,
        "policy": policy.as_dict(),
        "summary": summarize(reports),
        "reports": [r.as_dict() for r in reports],
    }
    return json.dumps(doc, indent=2) + "\n"
