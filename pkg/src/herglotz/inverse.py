"""Inverse-problem verifiers for second order fields on the contact chart.

A SODE system xi = v_i d/dq_i + a_i d/dv_i + b d/dz can only be an
(ordinary) Herglotz field of the Lagrangian L = b; the naive check verifies
the residual xi(db/dv_i) - db/dq_i - (db/dz)(db/dv_i) together with
regularity of the velocity Hessian of b.  The extended check verifies, for
a user-supplied velocity-independent action function zeta, the first order
condition

    (d xi(zeta)/dq_i - xi(d xi(zeta)/dv_i)) dzeta/dz
        = (dzeta/dq_i - d xi(zeta)/dv_i) d xi(zeta)/dz.

We verify candidate action functions only; no attempt is made to solve the
condition as a PDE for an unknown zeta.  When no zeta is known, the
pointwise obstruction diagnostics D_i / E_i provide necessary conditions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .checks import (
    CheckReport, ERROR, PointRecord, SamplePlan, SamplingError, Tolerances,
    report_from_records, sample_states,
)
from .contact import CoordVectorField
from .expr import (
    Const, Expr, depends_on, det_expr, differentiate, div, evaluate,
    merge_params, q, sub, v, z,
)
from .extended import ActionFunction

__all__ = [
    "SODESystem", "naive_inverse_check", "extended_inverse_check",
    "di_ei_diagnostics", "NaiveInverseResult", "ExtendedInverseResult",
]

ZERO_TOL = 1e-8
RATIO_EXCLUDE = 1e-6


@dataclass(frozen=True)
class SODESystem:
    """xi = v_i d/dq_i + a_i d/dv_i + b d/dz in the global chart."""

    n_dim: int
    accelerations: tuple[Expr, ...]
    z_rate: Expr
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.accelerations) != self.n_dim:
            raise ValueError(f"expected {self.n_dim} acceleration components")

    def as_field(self) -> CoordVectorField:
        comps = tuple(v(i) for i in range(1, self.n_dim + 1)) \
            + tuple(self.accelerations) + (self.z_rate,)
        return CoordVectorField(self.n_dim, comps)

    def apply(self, f: Expr) -> Expr:
        return self.as_field().apply(f)


@dataclass
class NaiveInverseResult:
    report: CheckReport
    lagrangian: Expr | None


@dataclass
class ExtendedInverseResult:
    report: CheckReport
    lagrangian: Expr | None          # base-chart candidate xi(zeta)
    momenta: tuple[Expr, ...] | None  # y_i = d xi(zeta)/dv_i
    conformal_rate: Expr | None      # g = (d xi(zeta)/dz)/(dzeta/dz)


def naive_inverse_check(sode: SODESystem, plan: SamplePlan | None = None,
                        tol: Tolerances | None = None) -> NaiveInverseResult:
    """Is xi the Herglotz field of L = b?

    Residuals: the Herglotz defect per index, plus a regularity defect that
    forces a fail wherever |det d2b/dv dv| <= det_tol (an irregular b cannot
    carry a contact structure, so the verdict is fail, not error).
    """
    tol = tol or Tolerances()
    n = sode.n_dim
    plan = (plan or SamplePlan()).with_default_bounds(n)
    points = sample_states(plan, n)
    b = sode.z_rate
    db_dz = differentiate(b, z())
    fibers = [differentiate(b, v(i)) for i in range(1, n + 1)]
    defects = [sub(sub(sode.apply(fibers[i]), differentiate(b, q(i + 1))),
                   db_dz * fibers[i]) for i in range(n)]
    hessian_det = det_expr([[differentiate(fibers[i], v(j + 1)) for j in range(n)]
                            for i in range(n)])
    records = []
    irregular = 0
    for p in points:
        values = {f"herglotz_defect_{i + 1}": abs(evaluate(defects[i], p, sode.params))
                  for i in range(n)}
        det = evaluate(hessian_det, p, sode.params)
        regular = abs(det) > tol.det_tol
        if not regular:
            irregular += 1
        values["regularity_defect"] = 0.0 if regular else 1.0
        values["hessian_det"] = det
        records.append(PointRecord(p, values))
    diagnostics = []
    if irregular:
        diagnostics.append(
            f"velocity Hessian of the z-rate singular at {irregular} of "
            f"{len(points)} points")
    keys = tuple(f"herglotz_defect_{i + 1}" for i in range(n)) + ("regularity_defect",)
    report = report_from_records(records, tol, plan, diagnostics, residual_keys=keys)
    recovered = b if report.passed else None
    if report.passed:
        report.diagnostics.append(f"recovered Lagrangian: {b}")
    return NaiveInverseResult(report, recovered)


def extended_inverse_check(sode: SODESystem, zeta: ActionFunction,
                           plan: SamplePlan | None = None,
                           tol: Tolerances | None = None) -> ExtendedInverseResult:
    """Is xi a Herglotz field after the change of action coordinate zeta?

    The candidate zeta must be independent of the velocities (checked
    structurally) with dzeta/dz bounded away from zero on the sample.  On a
    pass the recovered data is y_i = d xi(zeta)/dv_i, the conformal rate
    g = (d xi(zeta)/dz)/(dzeta/dz) and the base-chart Lagrangian candidate
    xi(zeta).
    """
    tol = tol or Tolerances()
    n = sode.n_dim
    plan = (plan or SamplePlan()).with_default_bounds(n)
    if any(depends_on(zeta.zeta, v(i)) for i in range(1, n + 1)):
        report = CheckReport(verdict=ERROR, max_residual=float("nan"),
                             diagnostics=["zeta depends on the velocities; the "
                                          "extended check requires zeta(q, z)"],
                             tolerances=tol, plan=plan)
        return ExtendedInverseResult(report, None, None, None)
    merged = merge_params(sode.params, zeta.params)
    try:
        points = sample_states(plan, n,
                               predicate=lambda p: zeta.frame_ok(p, merged))
    except SamplingError as exc:
        report = CheckReport(verdict=ERROR, max_residual=float("nan"),
                             diagnostics=[str(exc)], tolerances=tol, plan=plan)
        return ExtendedInverseResult(report, None, None, None)

    xi_zeta = sode.apply(zeta.zeta)
    dzeta_dz = zeta.dz
    dxz_dz = differentiate(xi_zeta, z())
    momenta = tuple(differentiate(xi_zeta, v(i)) for i in range(1, n + 1))
    defects = []
    for i in range(n):
        lhs = sub(differentiate(xi_zeta, q(i + 1)), sode.apply(momenta[i])) * dzeta_dz
        rhs = sub(differentiate(zeta.zeta, q(i + 1)), momenta[i]) * dxz_dz
        defects.append(sub(lhs, rhs))
    records = []
    for p in points:
        values = {f"extended_defect_{i + 1}": abs(evaluate(defects[i], p, merged))
                  for i in range(n)}
        records.append(PointRecord(p, values))
    report = report_from_records(records, tol, plan)
    if report.passed:
        g = div(dxz_dz, dzeta_dz)
        report.diagnostics.append(f"recovered Lagrangian candidate: {xi_zeta}")
        return ExtendedInverseResult(report, xi_zeta, momenta, g)
    return ExtendedInverseResult(report, None, None, None)


def di_ei_diagnostics(sode: SODESystem, plan: SamplePlan | None = None,
                      tol: Tolerances | None = None) -> CheckReport:
    """Necessary pointwise obstructions for a velocity-independent zeta.

    With r the z-rate and a_j the accelerations,

        D_i = a_j d2r/dv_i dv_j + v_j d2r/dv_i dq_j - dr/dq_i
        E_i = (dr/dv_i)(dr/dz) - r d2r/dv_i dz

    and any admissible zeta satisfies D_i = (dzeta/dz) E_i.  The check
    reports (i) zero-set mismatches between D_i and E_i, (ii) the pairwise
    spread of the ratios D_i/E_i, and (iii) the velocity gradient of each
    ratio, the last two only where |E_i| > 1e-6 (exclusion counts are
    reported).  A clean report is necessary, not sufficient.
    """
    tol = tol or Tolerances()
    n = sode.n_dim
    plan = (plan or SamplePlan()).with_default_bounds(n)
    points = sample_states(plan, n)
    r = sode.z_rate
    dr_dz = differentiate(r, z())
    d_exprs: list[Expr] = []
    e_exprs: list[Expr] = []
    for i in range(1, n + 1):
        fiber = differentiate(r, v(i))
        d_i: Expr = Const(0.0)
        for j in range(1, n + 1):
            d_i = d_i + sode.accelerations[j - 1] * differentiate(fiber, v(j))
            d_i = d_i + v(j) * differentiate(fiber, q(j))
        d_i = sub(d_i, differentiate(r, q(i)))
        e_i = sub(fiber * dr_dz, r * differentiate(fiber, z()))
        d_exprs.append(d_i)
        e_exprs.append(e_i)
    ratio_grads = [[differentiate(div(d_exprs[i], e_exprs[i]), v(k + 1))
                    for k in range(n)] for i in range(n)]

    records = []
    excluded = 0
    for p in points:
        d_vals = [evaluate(d, p, sode.params) for d in d_exprs]
        e_vals = [evaluate(e, p, sode.params) for e in e_exprs]
        values: dict[str, float] = {}
        usable = []
        for i in range(n):
            zero_d, zero_e = abs(d_vals[i]) <= ZERO_TOL, abs(e_vals[i]) <= ZERO_TOL
            values[f"zero_set_mismatch_{i + 1}"] = 1.0 if zero_d != zero_e else 0.0
            values[f"D_{i + 1}"] = d_vals[i]
            values[f"E_{i + 1}"] = e_vals[i]
            if abs(e_vals[i]) > RATIO_EXCLUDE:
                usable.append(i)
            else:
                excluded += 1
        spread = 0.0
        ratios = {i: d_vals[i] / e_vals[i] for i in usable}
        for a_idx in usable:
            for b_idx in usable:
                spread = max(spread, abs(ratios[a_idx] - ratios[b_idx]))
        values["ratio_spread"] = spread
        grad_max = 0.0
        for i in usable:
            for k in range(n):
                grad_max = max(grad_max,
                               abs(evaluate(ratio_grads[i][k], p, sode.params)))
        values["ratio_velocity_gradient"] = grad_max
        records.append(PointRecord(p, values))
    keys = tuple(f"zero_set_mismatch_{i + 1}" for i in range(n)) + \
        ("ratio_spread", "ratio_velocity_gradient")
    diagnostics = [f"{excluded} index-point pairs excluded from ratio tests "
                   f"(|E_i| <= {RATIO_EXCLUDE})"]
    return report_from_records(records, tol, plan, diagnostics, residual_keys=keys)
