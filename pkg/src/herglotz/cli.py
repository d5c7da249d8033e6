"""Batch verification CLI: config ingestion, subcommand dispatch, reports.

Subcommands: simulate, herglotz, check-strong-eq, check-eq, check-horizontal,
check-inverse, check-inverse-ext, check-conformal, check-dynamical, legendre,
stationarity, batch.  Each run writes a JSON report and exits with 0 (pass),
1 (fail), 2 (error or inconclusive) or 3 (configuration problem).  Identical
configuration and seed produce byte-identical reports; the timestamp lives
in a separate ``metadata`` field that comparisons may strip.

The environment variable HERGLOTZ_SEED overrides the seed of every sample
plan.  In zeta-chart expressions (bar-Lagrangians) the action coordinate may
be written ``z`` or ``zeta``; both denote the reparametrized coordinate.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .checks import CheckReport, PointRecord, SamplePlan, Tolerances
from .contact import ContactHamiltonianSystem, CoordOneForm, darboux_form
from .dynamics import (
    SampledCurve, integrate, stationarity_test, trajectory_to_csv,
    trajectory_to_curve,
)
from .equivalence import (
    conformal_similarity_check, dynamical_equivalence_check,
    general_equivalence_check, horizontal_similarity_check,
    strong_equivalence_check, zero_set_diagnostic,
)
from .expr import (
    Expr, Param, ParseError, StatePoint, evaluate, merge_params, parse,
    substitute, unparse, z,
)
from .extended import (
    ActionFunction, ExtendedLagrangianSystem, legendre_pullback_residual,
    zeta_herglotz_field, zeta_legendre,
)
from .fixtures import builtin_plans, builtin_systems, default_tasks
from .inverse import (
    SODESystem, di_ei_diagnostics, extended_inverse_check, naive_inverse_check,
)
from .lagrangian import ContactLagrangianSystem, herglotz_field

EXIT_PASS, EXIT_FAIL, EXIT_SOFT, EXIT_CONFIG = 0, 1, 2, 3

_SEVERITY = {"pass": 0, "fail": 1, "error": 2, "inconclusive": 2}


class ConfigError(ValueError):
    def __init__(self, message: str, path: str):
        super().__init__(f"{message} (config path: {path})")
        self.path = path


@dataclass
class RunConfig:
    systems: dict = field(default_factory=dict)
    plans: dict = field(default_factory=dict)
    tolerances: Tolerances = field(default_factory=Tolerances)
    output_dir: Path = Path("reports")
    tasks: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Configuration loading


def _parse_expr(text, n: int, path: str) -> Expr:
    if not isinstance(text, str):
        raise ConfigError("expression must be a string", path)
    try:
        return parse(text, n)
    except ParseError as exc:
        raise ConfigError(f"bad expression: {exc}", path) from None


def _load_params(raw, path: str) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError("params must be an object", path)
    out = {}
    for key, value in raw.items():
        if not isinstance(value, (int, float)):
            raise ConfigError(f"parameter {key!r} must be a number", f"{path}.{key}")
        out[key] = float(value)
    return out


def _load_system(name: str, raw: dict, path: str):
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError("system entry needs a 'kind'", path)
    kind = raw["kind"]
    n = raw.get("n", 1)
    if not isinstance(n, int) or n < 1:
        raise ConfigError("'n' must be a positive integer", f"{path}.n")
    params = _load_params(raw.get("params"), f"{path}.params")
    if kind == "lagrangian":
        return ContactLagrangianSystem(n, _parse_expr(raw.get("L"), n, f"{path}.L"),
                                       params)
    if kind == "bar_lagrangian":
        expr = _parse_expr(raw.get("L"), n, f"{path}.L")
        # allow the ident "zeta" for the action slot; normalize to z
        return _BarLagrangian(substitute(expr, Param("zeta"), z()), params, n)
    if kind == "hamiltonian":
        if "eta" in raw:
            comps = raw["eta"]
            if not isinstance(comps, list) or len(comps) != 2 * n + 1:
                raise ConfigError(f"'eta' must list {2 * n + 1} components",
                                  f"{path}.eta")
            eta = CoordOneForm(n, tuple(
                _parse_expr(c, n, f"{path}.eta[{k}]") for k, c in enumerate(comps)))
        else:
            eta = darboux_form(n)
        return ContactHamiltonianSystem(n, eta, _parse_expr(raw.get("H"), n,
                                                            f"{path}.H"), params)
    if kind == "sode":
        accels = raw.get("accelerations")
        if not isinstance(accels, list) or len(accels) != n:
            raise ConfigError(f"'accelerations' must list {n} expressions",
                              f"{path}.accelerations")
        return SODESystem(
            n,
            tuple(_parse_expr(a, n, f"{path}.accelerations[{k}]")
                  for k, a in enumerate(accels)),
            _parse_expr(raw.get("z_rate"), n, f"{path}.z_rate"), params)
    if kind == "action":
        return ActionFunction(_parse_expr(raw.get("zeta"), n, f"{path}.zeta"),
                              params)
    raise ConfigError(f"unknown system kind {kind!r}", f"{path}.kind")


@dataclass
class _BarLagrangian:
    """A Lagrangian written in a zeta-chart, plus its own parameters."""
    expr: Expr
    params: dict
    n_dim: int


def _load_plan(raw: dict, path: str) -> SamplePlan:
    if not isinstance(raw, dict):
        raise ConfigError("plan entry must be an object", path)
    mode = raw.get("mode", "random")
    bounds = raw.get("bounds", [])
    count = raw.get("count", 200)
    seed = raw.get("seed", 0)
    try:
        return SamplePlan(mode, tuple(tuple(b) for b in bounds), count, seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad sample plan: {exc}", path) from None


def load_config(path: str | None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}", path) from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object", "$")
    for name, entry in (raw.get("systems") or {}).items():
        cfg.systems[name] = _load_system(name, entry, f"systems.{name}")
    for name, entry in (raw.get("plans") or {}).items():
        cfg.plans[name] = _load_plan(entry, f"plans.{name}")
    tol_raw = raw.get("tolerances") or {}
    try:
        cfg.tolerances = Tolerances(
            pass_tol=float(tol_raw.get("pass_tol", 1e-8)),
            fail_tol=float(tol_raw.get("fail_tol", 1e-4)),
            det_tol=float(tol_raw.get("det_tol", 1e-10)))
    except ValueError as exc:
        raise ConfigError(str(exc), "tolerances") from None
    if "output_dir" in raw:
        cfg.output_dir = Path(raw["output_dir"])
    tasks = raw.get("tasks") or []
    if not isinstance(tasks, list):
        raise ConfigError("'tasks' must be a list", "tasks")
    for k, task in enumerate(tasks):
        if not isinstance(task, dict) or "command" not in task:
            raise ConfigError("task entries need a 'command'", f"tasks[{k}]")
    cfg.tasks = tasks
    return cfg


# ---------------------------------------------------------------------------
# Name resolution


def _resolve(cfg: RunConfig, name: str, kinds: tuple[type, ...], what: str):
    obj = None
    if name in cfg.systems:
        obj = cfg.systems[name]
    else:
        reg = builtin_systems()
        if name in reg:
            obj = reg[name]()
    if obj is None:
        raise ConfigError(f"unknown {what} {name!r}", f"systems.{name}")
    if not isinstance(obj, kinds):
        raise ConfigError(
            f"{name!r} is a {type(obj).__name__}, expected {what}", f"systems.{name}")
    return obj


def _resolve_bar(cfg: RunConfig, name: str) -> tuple[Expr, dict]:
    if name in cfg.systems:
        obj = cfg.systems[name]
    else:
        reg = builtin_systems()
        obj = reg[name]() if name in reg else None
    if obj is None:
        raise ConfigError(f"unknown bar-Lagrangian {name!r}", f"systems.{name}")
    if isinstance(obj, Expr):
        return obj, {}
    if isinstance(obj, _BarLagrangian):
        return obj.expr, obj.params
    if isinstance(obj, ContactLagrangianSystem):
        return obj.L, dict(obj.params)
    raise ConfigError(f"{name!r} cannot serve as a bar-Lagrangian",
                      f"systems.{name}")


def _require_consistent_n(n: int, **named_exprs) -> None:
    """Chart dimension must be consistent within a task (config invariant)."""
    from .expr import max_coord_index
    for name, expr in named_exprs.items():
        top = max_coord_index(expr)
        if top > n:
            raise ConfigError(
                f"{name} references coordinate index {top} but the task chart "
                f"has n={n}", f"args.{name}")


def _resolve_plan(cfg: RunConfig, name: str | None) -> SamplePlan:
    if name is None:
        plan = builtin_plans()["box1_200"]
    elif name in cfg.plans:
        plan = cfg.plans[name]
    elif name in builtin_plans():
        plan = builtin_plans()[name]
    else:
        raise ConfigError(f"unknown sample plan {name!r}", f"plans.{name}")
    env_seed = os.environ.get("HERGLOTZ_SEED")
    if env_seed is not None:
        try:
            plan = replace(plan, seed=int(env_seed))
        except ValueError:
            raise ConfigError("HERGLOTZ_SEED must be an integer", "env") from None
    return plan


# ---------------------------------------------------------------------------
# Report emission


def write_report(report: CheckReport, path: Path) -> None:
    data = report.to_dict()
    data["metadata"] = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "version": __version__,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n")


def _exit_code(report: CheckReport) -> int:
    return {0: EXIT_PASS, 1: EXIT_FAIL, 2: EXIT_SOFT}[_SEVERITY[report.verdict]]


def _subsample(records: list[PointRecord], cap: int = 200) -> list[PointRecord]:
    if len(records) <= cap:
        return records
    step = -(-len(records) // cap)
    return records[::step]


# ---------------------------------------------------------------------------
# Task execution


def _task_check_eq(cfg, args, strong: bool) -> CheckReport:
    sys_l = _resolve(cfg, args["lagrangian"], (ContactLagrangianSystem,),
                     "Lagrangian system")
    bar_expr, bar_params = _resolve_bar(cfg, args["lagrangian_bar"])
    zeta = _resolve(cfg, args["zeta"], (ActionFunction,), "action function")
    _require_consistent_n(sys_l.n_dim, lagrangian_bar=bar_expr, zeta=zeta.zeta)
    if bar_params:
        sys_l = ContactLagrangianSystem(
            sys_l.n_dim, sys_l.L, merge_params(sys_l.params, bar_params))
    plan = _resolve_plan(cfg, args.get("plan"))
    check = strong_equivalence_check if strong else general_equivalence_check
    return check(sys_l, bar_expr, zeta, plan, cfg.tolerances)


def _task_check_horizontal(cfg, args) -> CheckReport:
    xi = _resolve(cfg, args["xi"], (SODESystem,), "second order system")
    xi_bar = _resolve(cfg, args["xi_bar"], (SODESystem,), "second order system")
    zeta = _resolve(cfg, args["zeta"], (ActionFunction,), "action function")
    if xi.n_dim != xi_bar.n_dim:
        raise ConfigError("the two fields live on different charts", "args")
    _require_consistent_n(xi.n_dim, zeta=zeta.zeta)
    plan = _resolve_plan(cfg, args.get("plan"))
    params = merge_params(xi.params, xi_bar.params)
    return horizontal_similarity_check(xi.as_field(), xi_bar.as_field(), zeta,
                                       plan, params, cfg.tolerances)


def _task_check_inverse(cfg, args) -> CheckReport:
    sode = _resolve(cfg, args["sode"], (SODESystem,), "second order system")
    plan = _resolve_plan(cfg, args.get("plan"))
    result = naive_inverse_check(sode, plan, cfg.tolerances)
    report = result.report
    companion = di_ei_diagnostics(sode, plan, cfg.tolerances)
    report.diagnostics.append(
        f"obstruction diagnostics: verdict {companion.verdict}, "
        f"max residual {companion.max_residual!r}")
    return report


def _task_check_inverse_ext(cfg, args) -> CheckReport:
    sode = _resolve(cfg, args["sode"], (SODESystem,), "second order system")
    zeta = _resolve(cfg, args["zeta"], (ActionFunction,), "action function")
    _require_consistent_n(sode.n_dim, zeta=zeta.zeta)
    plan = _resolve_plan(cfg, args.get("plan"))
    result = extended_inverse_check(sode, zeta, plan, cfg.tolerances)
    if result.conformal_rate is not None:
        result.report.diagnostics.append(
            f"conformal rate: {unparse(result.conformal_rate)}")
    return result.report


def _as_hamiltonian_system(obj) -> ContactHamiltonianSystem:
    if isinstance(obj, ContactHamiltonianSystem):
        return obj
    if isinstance(obj, ContactLagrangianSystem):
        from .lagrangian import as_hamiltonian
        return as_hamiltonian(obj)
    raise ConfigError("expected a Hamiltonian or Lagrangian system", "systems")


def _task_check_conformal(cfg, args) -> CheckReport:
    sys_a = _as_hamiltonian_system(_resolve(
        cfg, args["system"], (ContactHamiltonianSystem, ContactLagrangianSystem),
        "contact system"))
    sys_b = _as_hamiltonian_system(_resolve(
        cfg, args["system_b"], (ContactHamiltonianSystem, ContactLagrangianSystem),
        "contact system"))
    factor = None
    if args.get("factor"):
        factor = _parse_expr(args["factor"], sys_a.n_dim, "args.factor")
    plan = _resolve_plan(cfg, args.get("plan"))
    return conformal_similarity_check(sys_a, sys_b, factor, plan, cfg.tolerances)


def _task_check_dynamical(cfg, args) -> CheckReport:
    sys_a = _as_hamiltonian_system(_resolve(
        cfg, args["system"], (ContactHamiltonianSystem, ContactLagrangianSystem),
        "contact system"))
    sys_b = _as_hamiltonian_system(_resolve(
        cfg, args["system_b"], (ContactHamiltonianSystem, ContactLagrangianSystem),
        "contact system"))
    if sys_a.n_dim != sys_b.n_dim:
        raise ConfigError("the two systems live on different charts", "args")
    plan = _resolve_plan(cfg, args.get("plan"))
    report = dynamical_equivalence_check(sys_a, sys_b, plan, cfg.tolerances)
    zero = zero_set_diagnostic(sys_a, sys_b, plan, cfg.tolerances)
    report.diagnostics.extend(zero.diagnostics)
    return report


def _task_herglotz(cfg, args) -> CheckReport:
    name = args["lagrangian"]
    obj = _resolve(cfg, name, (ContactLagrangianSystem, ExtendedLagrangianSystem),
                   "Lagrangian system")
    if args.get("zeta"):
        zeta = _resolve(cfg, args["zeta"], (ActionFunction,), "action function")
        obj = ExtendedLagrangianSystem(obj.n_dim, obj.L, zeta, obj.params)
        field_obj = zeta_herglotz_field(obj)
    elif isinstance(obj, ExtendedLagrangianSystem):
        field_obj = zeta_herglotz_field(obj)
    else:
        field_obj = herglotz_field(obj)
    n = field_obj.n_dim
    names = [f"d{c}/dt" for c in
             [f"q{i}" for i in range(1, n + 1)]
             + [f"v{i}" for i in range(1, n + 1)] + ["z"]]
    diagnostics = [f"{label} = {unparse(comp)}"
                   for label, comp in zip(names, field_obj.components)]
    return CheckReport(verdict="pass", max_residual=0.0, diagnostics=diagnostics,
                       tolerances=cfg.tolerances)


def _task_legendre(cfg, args) -> CheckReport:
    from .checks import report_from_records, sample_states
    sys_l = _resolve(cfg, args["lagrangian"], (ContactLagrangianSystem,),
                     "Lagrangian system")
    zeta = _resolve(cfg, args.get("zeta", "zeta_identity"), (ActionFunction,),
                    "action function")
    ext = ExtendedLagrangianSystem(sys_l.n_dim, sys_l.L, zeta, sys_l.params)
    plan = _resolve_plan(cfg, args.get("plan"))
    points = sample_states(plan.with_default_bounds(sys_l.n_dim), sys_l.n_dim,
                           predicate=lambda p: zeta.frame_ok(p, sys_l.params))
    records = []
    for p in points:
        records.append(PointRecord(p, {
            "pullback_defect": legendre_pullback_residual(ext, p)}))
    report = report_from_records(records, cfg.tolerances, plan)
    qv, momenta, zeta_val = zeta_legendre(ext, points[0])
    report.diagnostics.append(
        f"sample transform at {points[0]}: q={qv.tolist()}, "
        f"p={momenta.tolist()}, action={zeta_val!r}")
    return report


def _task_simulate(cfg, args, out_dir: Path, tag: str) -> tuple[CheckReport, Path]:
    obj = _resolve(cfg, args["system"], (ContactLagrangianSystem, SODESystem),
                   "simulable system")
    if isinstance(obj, SODESystem):
        field_obj, params, n = obj.as_field(), obj.params, obj.n_dim
    else:
        field_obj, params, n = herglotz_field(obj), obj.params, obj.n_dim
    initial = args.get("initial")
    if initial is None:
        raise ConfigError("simulate requires an initial state", "args.initial")
    if isinstance(initial, str):
        initial = [float(x) for x in initial.split(",")]
    p0 = StatePoint.from_coords(np.asarray(initial, dtype=float), n)
    t_end = float(args.get("t", 1.0))
    dt = float(args.get("dt", 1e-3))
    traj = integrate(field_obj, p0, t_end, dt, params)
    csv_path = out_dir / f"{tag}.csv"
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    trajectory_to_csv(traj, csv_path)
    diagnostics = [f"trajectory written to {csv_path.name}",
                   f"steps = {len(traj.times) - 1}, dt = {dt!r}, t_end = {t_end!r}"]
    records = []
    max_res = 0.0
    resid_texts = args.get("accel_residual")
    if resid_texts:
        if isinstance(resid_texts, str):
            resid_texts = [resid_texts]
        exprs = [_parse_expr(t, n, "args.accel_residual") for t in resid_texts]
        if len(exprs) != n:
            raise ConfigError(f"need {n} acceleration expressions",
                              "args.accel_residual")
        accel_comps = field_obj.components[n:2 * n]
        all_records = []
        for k, state in enumerate(traj.states()):
            values = {}
            for i in range(n):
                defect = abs(evaluate(accel_comps[i], state, params)
                             - evaluate(exprs[i], state, params))
                values[f"acceleration_defect_{i + 1}"] = defect
                max_res = max(max_res, defect)
            all_records.append(PointRecord(state, values))
        records = _subsample(all_records)
        diagnostics.append(
            f"acceleration defect vs expected: max {max_res!r} over "
            f"{len(all_records)} samples (records subsampled)")
    from .checks import verdict_for
    verdict = verdict_for(max_res, cfg.tolerances)
    report = CheckReport(verdict=verdict, max_residual=max_res, records=records,
                         diagnostics=diagnostics, tolerances=cfg.tolerances)
    return report, csv_path


def _task_stationarity(cfg, args) -> CheckReport:
    sys_l = _resolve(cfg, args["lagrangian"], (ContactLagrangianSystem,),
                     "Lagrangian system")
    initial = args.get("initial", [0.0, 2.0, 0.0])
    if isinstance(initial, str):
        initial = [float(x) for x in initial.split(",")]
    p0 = StatePoint.from_coords(np.asarray(initial, dtype=float), sys_l.n_dim)
    grid = int(args.get("grid", 200))
    perturbations = int(args.get("perturbations", 8))
    amplitude = float(args.get("amplitude", 1e-4))
    stat_tol = float(args.get("stat_tol", 1e-3))
    field_obj = herglotz_field(sys_l)
    traj = integrate(field_obj, p0, 1.0, 1.0 / (grid - 1), sys_l.params)
    curve = trajectory_to_curve(traj)
    if args.get("random_curve"):
        rng = np.random.default_rng(int(args.get("curve_seed", 0)))
        t = curve.times
        qa = np.outer(1 - t, curve.q[0]) + np.outer(t, curve.q[-1])
        va = np.tile(curve.q[-1] - curve.q[0], (len(t), 1)).astype(float)
        for k in range(1, 4):
            coeff = rng.uniform(-0.5, 0.5, size=curve.n)
            qa += np.outer(np.sin(k * np.pi * t), coeff)
            va += np.outer(k * np.pi * np.cos(k * np.pi * t), coeff)
        curve = SampledCurve(t, qa, va)
    return stationarity_test(sys_l.L, curve, p0.z, perturbations, amplitude,
                             stat_tol, sys_l.params)


def run_task(cfg: RunConfig, command: str, args: dict, out_dir: Path,
             tag: str) -> tuple[CheckReport, list[Path]]:
    """Execute one subcommand; returns the report and extra emitted files.

    Library-level runtime failures (singular systems, evaluation domain
    errors, sampling exhaustion) become error reports, not tracebacks.
    """
    try:
        return _run_task_inner(cfg, command, args, out_dir, tag)
    except ConfigError:
        raise
    except Exception as exc:
        report = CheckReport(verdict="error", max_residual=float("nan"),
                             diagnostics=[f"{type(exc).__name__}: {exc}"],
                             tolerances=cfg.tolerances)
        report.task = tag
        return report, []


def _run_task_inner(cfg: RunConfig, command: str, args: dict, out_dir: Path,
                    tag: str) -> tuple[CheckReport, list[Path]]:
    extra: list[Path] = []
    if command == "check-eq":
        report = _task_check_eq(cfg, args, strong=False)
    elif command == "check-strong-eq":
        report = _task_check_eq(cfg, args, strong=True)
    elif command == "check-horizontal":
        report = _task_check_horizontal(cfg, args)
    elif command == "check-inverse":
        report = _task_check_inverse(cfg, args)
    elif command == "check-inverse-ext":
        report = _task_check_inverse_ext(cfg, args)
    elif command == "check-conformal":
        report = _task_check_conformal(cfg, args)
    elif command == "check-dynamical":
        report = _task_check_dynamical(cfg, args)
    elif command == "herglotz":
        report = _task_herglotz(cfg, args)
    elif command == "legendre":
        report = _task_legendre(cfg, args)
    elif command == "simulate":
        report, csv_path = _task_simulate(cfg, args, out_dir, tag)
        extra.append(csv_path)
    elif command == "stationarity":
        report = _task_stationarity(cfg, args)
    else:
        raise ConfigError(f"unknown command {command!r}", "tasks")
    report.task = tag
    return report, extra


# ---------------------------------------------------------------------------
# Argument parsing


def _global_options(parser, suppress: bool) -> None:
    kwargs = {"default": argparse.SUPPRESS} if suppress else {"default": None}
    parser.add_argument("--config", help="JSON run configuration", **kwargs)
    parser.add_argument("--out", help="output directory for reports", **kwargs)
    parser.add_argument("--report", help="explicit report path (single task)",
                        **kwargs)
    parser.add_argument("--tag", help="report tag / file stem", **kwargs)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="herglotz",
        description="Batch verification for contact Lagrangian/Hamiltonian "
                    "systems: simulation, equivalence and inverse checks.")
    _global_options(parser, suppress=False)
    # the same options are accepted after the subcommand; SUPPRESS keeps a
    # value given before it from being clobbered by the subparser default
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name, **flags):
        p = sub.add_parser(name, parents=[common])
        for flag, kwargs in flags.items():
            p.add_argument(f"--{flag.replace('_', '-')}", dest=flag, **kwargs)
        return p

    cmd("simulate", system={"required": True}, initial={},
        t={"type": float, "default": 1.0}, dt={"type": float, "default": 1e-3},
        accel_residual={"action": "append"})
    cmd("herglotz", lagrangian={"required": True}, zeta={})
    cmd("check-strong-eq", lagrangian={"required": True},
        lagrangian_bar={"required": True}, zeta={"required": True}, plan={})
    cmd("check-eq", lagrangian={"required": True},
        lagrangian_bar={"required": True}, zeta={"required": True}, plan={})
    cmd("check-horizontal", xi={"required": True}, xi_bar={"required": True},
        zeta={"required": True}, plan={})
    cmd("check-inverse", sode={"required": True}, plan={})
    cmd("check-inverse-ext", sode={"required": True}, zeta={"required": True},
        plan={})
    cmd("check-conformal", system={"required": True}, system_b={"required": True},
        factor={}, plan={})
    cmd("check-dynamical", system={"required": True}, system_b={"required": True},
        plan={})
    cmd("legendre", lagrangian={"required": True}, zeta={}, plan={})
    cmd("stationarity", lagrangian={"required": True}, initial={},
        grid={"type": int, "default": 200},
        perturbations={"type": int, "default": 8},
        amplitude={"type": float, "default": 1e-4},
        stat_tol={"type": float, "default": 1e-3},
        random_curve={"action": "store_true"},
        curve_seed={"type": int, "default": 0})
    sub.add_parser("batch", parents=[common])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = load_config(ns.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(ns.out) if ns.out else cfg.output_dir

    if ns.command == "batch":
        tasks = cfg.tasks or default_tasks()
        worst = EXIT_PASS
        for idx, task in enumerate(tasks):
            tag = task.get("tag") or f"task{idx}"
            stem = f"{task['command']}_{tag}"
            try:
                report, _ = run_task(cfg, task["command"], task.get("args", {}),
                                     out_dir, stem)
            except ConfigError as exc:
                print(f"config error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            write_report(report, out_dir / f"{stem}.json")
            print(f"{stem}: {report.verdict} (max residual "
                  f"{report.max_residual!r})")
            worst = max(worst, _exit_code(report))
        return worst

    args = {key: value for key, value in vars(ns).items()
            if key not in ("command", "config", "out", "report", "tag")
            and value is not None and value is not False}
    tag = ns.tag or ns.command
    try:
        report, _ = run_task(cfg, ns.command, args, out_dir, tag)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report_path = Path(ns.report) if ns.report else out_dir / f"{tag}.json"
    write_report(report, report_path)
    print(f"{ns.command}: {report.verdict} (max residual {report.max_residual!r}; "
          f"report {report_path})")
    return _exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
