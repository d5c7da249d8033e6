"""Equivalence and similarity checkers for contact systems.

All checkers verify pointwise identities on a deterministic sample plan and
reduce to a CheckReport: conformal and dynamical equivalence of Hamiltonian
systems, horizontal similarity of second order fields, projectability, and
strong/general equivalence of Lagrangian systems under a change of action
coordinate.  Bar-Lagrangians are supplied in their zeta-chart (the action
slot written ``z``); composition with the horizontal map happens here.
"""

from __future__ import annotations

import numpy as np

from .checks import (
    ERROR, FAIL, CheckReport, PointRecord, SamplePlan, SamplingError,
    Tolerances, report_from_records, sample_states,
)
from .contact import (
    ContactConditionError, ContactHamiltonianSystem, CoordVectorField,
    hamiltonian_field,
)
from .expr import (
    Expr, StatePoint, differentiate, evaluate, merge_params, q, sub, v, z,
)
from .extended import (
    ActionFunction, ExtendedLagrangianSystem, compose_with_zeta,
    extended_lagrangian_form, extended_sode_check_points, zeta_herglotz_field,
    zeta_hessian, zeta_partial,
)
from .lagrangian import (
    ContactLagrangianSystem, herglotz_field, lagrangian_form, velocity_hessian,
)

__all__ = [
    "conformal_similarity_check", "dynamical_equivalence_check",
    "zero_set_diagnostic", "horizontal_similarity_check",
    "projectability_check", "strong_equivalence_check",
    "general_equivalence_check", "extended_sode_check",
]

ZERO_TOL = 1e-8


def _error_report(message: str, tol: Tolerances, plan: SamplePlan | None,
                  records: list[PointRecord] | None = None) -> CheckReport:
    return CheckReport(verdict=ERROR, max_residual=float("nan"),
                       records=records or [], diagnostics=[message],
                       tolerances=tol, plan=plan)


def extended_sode_check(X: CoordVectorField, points: list[StatePoint],
                        params: dict | None = None,
                        tol: Tolerances | None = None) -> CheckReport:
    """Second order condition: the q-components of X equal the velocities."""
    tol = tol or Tolerances()
    residuals = extended_sode_check_points(X, points, params)
    records = [PointRecord(p, {"sode_defect": r})
               for p, r in zip(points, residuals)]
    return report_from_records(records, tol)


def conformal_similarity_check(sys_a: ContactHamiltonianSystem,
                               sys_b: ContactHamiltonianSystem,
                               factor: Expr | None = None,
                               plan: SamplePlan | None = None,
                               tol: Tolerances | None = None) -> CheckReport:
    """Check eta_b = f eta_a and H_b = f H_a for a nonvanishing factor f.

    With ``factor`` omitted, f is estimated pointwise as H_b/H_a wherever
    |H_a| > 1e-8; if no sampled point admits the estimate the verdict is an
    error.  A vanishing factor at any sampled point forces a fail.
    """
    tol = tol or Tolerances()
    plan = (plan or SamplePlan()).with_default_bounds(sys_a.n_dim)
    points = sample_states(plan, sys_a.n_dim)
    records: list[PointRecord] = []
    diagnostics: list[str] = []
    skipped = 0
    for p in points:
        h_a = evaluate(sys_a.H, p, sys_a.params)
        h_b = evaluate(sys_b.H, p, sys_b.params)
        if factor is not None:
            f_val = evaluate(factor, p, merge_params(sys_a.params, sys_b.params))
        elif abs(h_a) > 1e-8:
            f_val = h_b / h_a
        else:
            skipped += 1
            continue
        eta_a = sys_a.eta.values(p, sys_a.params)
        eta_b = sys_b.eta.values(p, sys_b.params)
        values = {
            "form_defect": float(np.max(np.abs(eta_b - f_val * eta_a))),
            "hamiltonian_defect": abs(h_b - f_val * h_a),
            "factor_vanishes": 1.0 if abs(f_val) <= ZERO_TOL else 0.0,
            "factor": f_val,
        }
        records.append(PointRecord(p, values))
    if skipped:
        diagnostics.append(
            f"{skipped} points skipped for factor estimation (|H| <= 1e-8)")
    if not records:
        return _error_report(
            "conformal factor inestimable: H vanishes at every sampled point",
            tol, plan)
    return report_from_records(
        records, tol, plan, diagnostics,
        residual_keys=("form_defect", "hamiltonian_defect", "factor_vanishes"))


def dynamical_equivalence_check(sys_a: ContactHamiltonianSystem,
                                sys_b: ContactHamiltonianSystem,
                                plan: SamplePlan | None = None,
                                tol: Tolerances | None = None) -> CheckReport:
    """Check X_H = X_Hbar pointwise (equality of Hamiltonian vector fields)."""
    tol = tol or Tolerances()
    plan = (plan or SamplePlan()).with_default_bounds(sys_a.n_dim)
    points = sample_states(plan, sys_a.n_dim)
    records = []
    for p in points:
        try:
            x_a = hamiltonian_field(sys_a, p)
            x_b = hamiltonian_field(sys_b, p)
        except ContactConditionError as exc:
            return _error_report(f"solver failure at {p}: {exc}", tol, plan, records)
        records.append(PointRecord(p, {
            "field_mismatch": float(np.max(np.abs(x_a - x_b)))}))
    return report_from_records(records, tol, plan,
                               residual_keys=("field_mismatch",))


def zero_set_diagnostic(sys_a: ContactHamiltonianSystem,
                        sys_b: ContactHamiltonianSystem,
                        plan: SamplePlan | None = None,
                        tol: Tolerances | None = None) -> CheckReport:
    """Report sampled points where the zero sets of H and Hbar disagree.

    Informational companion to the similarity checks: a conformal similarity
    preserves the zero set, so any mismatch rules one out.  A point
    mismatches when exactly one Hamiltonian is (numerically) zero or when
    both are nonzero with opposite signs.
    """
    tol = tol or Tolerances()
    plan = (plan or SamplePlan()).with_default_bounds(sys_a.n_dim)
    points = sample_states(plan, sys_a.n_dim)
    records = []
    mismatches = 0
    for p in points:
        h_a = evaluate(sys_a.H, p, sys_a.params)
        h_b = evaluate(sys_b.H, p, sys_b.params)
        zero_a, zero_b = abs(h_a) <= ZERO_TOL, abs(h_b) <= ZERO_TOL
        mismatch = (zero_a != zero_b) or \
            (not zero_a and not zero_b and (h_a > 0) != (h_b > 0))
        if mismatch:
            mismatches += 1
        records.append(PointRecord(p, {
            "zero_set_mismatch": 1.0 if mismatch else 0.0,
            "H": h_a, "H_bar": h_b}))
    report = report_from_records(records, tol, plan,
                                 [f"zero-set mismatches at {mismatches} of "
                                  f"{len(points)} points"],
                                 residual_keys=("zero_set_mismatch",))
    return report


def horizontal_similarity_check(xi: CoordVectorField, xi_bar: CoordVectorField,
                                zeta: ActionFunction,
                                plan: SamplePlan | None = None,
                                params: dict | None = None,
                                tol: Tolerances | None = None) -> CheckReport:
    """Check that (Id, zeta) pushes xi to xi_bar.

    Conditions: a_i = a_bar_i composed with the horizontal map, and
    xi(zeta) = b_bar composed with the horizontal map, with dzeta/dz
    bounded away from zero on the sample.
    """
    tol = tol or Tolerances()
    n = xi.n_dim
    plan = (plan or SamplePlan()).with_default_bounds(n)
    merged = merge_params(params or {}, zeta.params)
    try:
        points = sample_states(plan, n, predicate=lambda p: zeta.frame_ok(p, merged))
    except SamplingError as exc:
        return _error_report(str(exc), tol, plan)
    for field, name in ((xi, "xi"), (xi_bar, "xi_bar")):
        sode = extended_sode_check(field, points, merged, tol)
        if not sode.passed:
            return _error_report(
                f"{name} is not a second order field (defect {sode.max_residual:.3e})",
                tol, plan)
    xi_zeta = xi.apply(zeta.zeta)
    records = []
    for p in points:
        values: dict[str, float] = {}
        for i in range(n):
            a_i = evaluate(xi.components[n + i], p, merged)
            a_bar = evaluate(compose_with_zeta(xi_bar.components[n + i], zeta),
                             p, merged)
            values[f"acceleration_defect_{i + 1}"] = abs(a_i - a_bar)
        b_bar = evaluate(compose_with_zeta(xi_bar.components[2 * n], zeta), p, merged)
        values["action_rate_defect"] = abs(evaluate(xi_zeta, p, merged) - b_bar)
        records.append(PointRecord(p, values))
    return report_from_records(records, tol, plan)


def projectability_check(xi: CoordVectorField,
                         plan: SamplePlan | None = None,
                         params: dict | None = None,
                         tol: Tolerances | None = None) -> CheckReport:
    """Do the accelerations depend on the action coordinate?  Residual is
    max_i |d(a_i)/dz| over the sample."""
    tol = tol or Tolerances()
    n = xi.n_dim
    plan = (plan or SamplePlan()).with_default_bounds(n)
    points = sample_states(plan, n)
    sode = extended_sode_check(xi, points, params, tol)
    if not sode.passed:
        return _error_report(
            f"input is not a second order field (defect {sode.max_residual:.3e})",
            tol, plan)
    dz_exprs = [differentiate(xi.components[n + i], z()) for i in range(n)]
    records = []
    for p in points:
        values = {f"dz_dependence_{i + 1}": abs(evaluate(dz_exprs[i], p, params))
                  for i in range(n)}
        records.append(PointRecord(p, values))
    return report_from_records(records, tol, plan)


def strong_equivalence_check(sys: ContactLagrangianSystem,
                             lbar_zeta_chart: Expr, zeta: ActionFunction,
                             plan: SamplePlan | None = None,
                             tol: Tolerances | None = None) -> CheckReport:
    """Velocity-independent change of action coordinate.

    Checks that zeta is independent of the velocities and that
    (dzeta/dz) L + v_i dzeta/dq_i equals the bar-Lagrangian composed with
    the horizontal map; on the passing locus the conformal identity
    eta^zeta_Lbar = (dzeta/dz) eta_L is asserted as well.
    """
    tol = tol or Tolerances()
    n = sys.n_dim
    plan = (plan or SamplePlan()).with_default_bounds(n)
    merged = merge_params(sys.params, zeta.params)
    try:
        points = sample_states(plan, n, predicate=lambda p: zeta.frame_ok(p, merged))
    except SamplingError as exc:
        return _error_report(str(exc), tol, plan)

    lbar_base = compose_with_zeta(lbar_zeta_chart, zeta)
    ext = ExtendedLagrangianSystem(n, lbar_base, zeta, merged)
    eta_l = lagrangian_form(sys)
    eta_bar = extended_lagrangian_form(ext)
    dzeta_dz = zeta.dz
    transported: Expr = sys.L * dzeta_dz
    for i in range(1, n + 1):
        transported = transported + v(i) * differentiate(zeta.zeta, q(i))

    records = []
    for p in points:
        det_l = float(np.linalg.det(velocity_hessian(sys, p)))
        det_bar = float(np.linalg.det(zeta_hessian(ext, p)))
        if abs(det_l) <= tol.det_tol or abs(det_bar) <= tol.det_tol:
            return _error_report(
                f"regularity failure at {p}: det W = {det_l:.3e}, "
                f"det W^zeta = {det_bar:.3e}", tol, plan, records)
        values = {}
        values["velocity_dependence"] = max(
            abs(evaluate(differentiate(zeta.zeta, v(i)), p, merged))
            for i in range(1, n + 1))
        values["lagrangian_defect"] = abs(
            evaluate(transported, p, merged) - evaluate(lbar_base, p, merged))
        factor = evaluate(dzeta_dz, p, merged)
        eta_l_vals = eta_l.values(p, merged)
        eta_bar_vals = eta_bar.values(p, merged)
        values["form_conformal_defect"] = float(
            np.max(np.abs(eta_bar_vals - factor * eta_l_vals)))
        records.append(PointRecord(p, values))
    return report_from_records(records, tol, plan)


def general_equivalence_check(sys: ContactLagrangianSystem,
                              lbar_zeta_chart: Expr, zeta: ActionFunction,
                              plan: SamplePlan | None = None,
                              tol: Tolerances | None = None) -> CheckReport:
    """Equality of dynamics for (L, z) and (Lbar, zeta).

    Residuals per point: the action-rate condition
    Lbar o phi = xi_L(zeta); the momentum condition
    xi_L(p_i) - (dLbar/dq_i)_zeta - (dLbar/dzeta) p_i with
    p_i = (dLbar/dv_i)_zeta; and the direct mismatch of the two Herglotz
    fields.  Regularity failures (either side) yield an error verdict, not
    a fail: a singular instance is undecided, not inequivalent.
    """
    tol = tol or Tolerances()
    n = sys.n_dim
    plan = (plan or SamplePlan()).with_default_bounds(n)
    merged = merge_params(sys.params, zeta.params)
    try:
        points = sample_states(plan, n, predicate=lambda p: zeta.frame_ok(p, merged))
    except SamplingError as exc:
        return _error_report(str(exc), tol, plan)

    lbar_base = compose_with_zeta(lbar_zeta_chart, zeta)
    ext = ExtendedLagrangianSystem(n, lbar_base, zeta, merged)
    xi_l = herglotz_field(sys)

    momenta = [zeta_partial(lbar_base, zeta, v(i)) for i in range(1, n + 1)]
    dlbar_dzeta = zeta_partial(lbar_base, zeta, "zeta")
    l_condition = sub(lbar_base, xi_l.apply(zeta.zeta))
    p_conditions = [
        sub(sub(xi_l.apply(momenta[i]), zeta_partial(lbar_base, zeta, q(i + 1))),
            dlbar_dzeta * momenta[i])
        for i in range(n)]
    xi_bar = zeta_herglotz_field(ext)

    records = []
    for p in points:
        det_l = float(np.linalg.det(velocity_hessian(sys, p)))
        det_bar = float(np.linalg.det(zeta_hessian(ext, p)))
        if abs(det_l) <= tol.det_tol or abs(det_bar) <= tol.det_tol:
            return _error_report(
                f"zeta-regularity violated at {p}: det W = {det_l:.3e}, "
                f"det W^zeta = {det_bar:.3e}", tol, plan, records)
        values = {"L_condition": abs(evaluate(l_condition, p, merged))}
        for i in range(n):
            values[f"p_condition_{i + 1}"] = abs(evaluate(p_conditions[i], p, merged))
        mismatch = max(abs(evaluate(a, p, merged) - evaluate(b, p, merged))
                       for a, b in zip(xi_l.components, xi_bar.components))
        values["field_mismatch"] = mismatch
        records.append(PointRecord(p, values))
    report = report_from_records(records, tol, plan)
    if report.verdict != FAIL and any(
            rec.values["field_mismatch"] > tol.fail_tol for rec in records):
        report.verdict = FAIL
        report.diagnostics.append("Herglotz field mismatch forces fail")
    return report
