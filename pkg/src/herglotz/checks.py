"""Sample plans, tolerances and check reports shared by all verifiers.

Checks are sampled residual verifications, not symbolic proofs: residuals
at or below ``pass_tol`` pass, residuals at or above ``fail_tol`` fail, and
the band in between yields an "inconclusive" verdict so that near-degenerate
instances are not reported with false certainty.  Identical plans (mode,
bounds, count, seed) always produce the identical point sequence.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .expr import StatePoint

__all__ = [
    "Tolerances", "SamplePlan", "CheckReport", "PointRecord", "SamplingError",
    "sample_states", "verdict_for",
]

# Points where |dzeta/dz| falls at or below this threshold are rejected when
# a check involves an action-function frame.
FRAME_TOL = 1e-8

PASS, FAIL, ERROR, INCONCLUSIVE = "pass", "fail", "error", "inconclusive"


class SamplingError(RuntimeError):
    """Predicate rejection exceeded the 10x oversampling cap."""


@dataclass(frozen=True)
class Tolerances:
    pass_tol: float = 1e-8
    fail_tol: float = 1e-4
    det_tol: float = 1e-10

    def __post_init__(self):
        if not (self.pass_tol > 0 and self.fail_tol > 0 and self.det_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.pass_tol >= self.fail_tol:
            raise ValueError("pass_tol must be smaller than fail_tol")

    def to_dict(self) -> dict:
        return {"pass_tol": self.pass_tol, "fail_tol": self.fail_tol,
                "det_tol": self.det_tol}


def verdict_for(max_residual: float, tol: Tolerances) -> str:
    if max_residual <= tol.pass_tol:
        return PASS
    if max_residual >= tol.fail_tol:
        return FAIL
    return INCONCLUSIVE


@dataclass(frozen=True)
class SamplePlan:
    """Deterministic point source: seeded uniform draws or a lattice."""

    mode: str = "random"            # "random" or "grid"
    bounds: tuple[tuple[float, float], ...] = ()
    count: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("random", "grid"):
            raise ValueError(f"unknown sample mode {self.mode!r}")
        if self.count < 1:
            raise ValueError("count must be at least 1")
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        for lo, hi in bounds:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValueError(f"invalid bounds ({lo}, {hi})")
        object.__setattr__(self, "bounds", bounds)

    def with_default_bounds(self, n: int) -> "SamplePlan":
        if self.bounds:
            return self
        return SamplePlan(self.mode, tuple((-1.0, 1.0) for _ in range(2 * n + 1)),
                          self.count, self.seed)

    def raw_points(self, limit: int) -> Iterable[np.ndarray]:
        """Up to ``limit`` candidate coordinate rows, in a fixed order."""
        d = len(self.bounds)
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        if self.mode == "random":
            rng = np.random.default_rng(self.seed)
            for _ in range(limit):
                yield lo + (hi - lo) * rng.uniform(size=d)
        else:
            per_axis = max(2, math.ceil(limit ** (1.0 / d)))
            axes = [np.linspace(b[0], b[1], per_axis) for b in self.bounds]
            for combo in itertools.islice(itertools.product(*axes), limit):
                yield np.array(combo)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "seed": self.seed,
                "bounds": [list(b) for b in self.bounds], "count": self.count}


def sample_states(plan: SamplePlan, n: int,
                  predicate: Callable[[StatePoint], bool] | None = None
                  ) -> list[StatePoint]:
    """Draw ``plan.count`` chart points, rejecting ones that fail the predicate.

    At most 10x oversampling is attempted before raising SamplingError; the
    accepted sequence is a deterministic function of the plan.
    """
    plan = plan.with_default_bounds(n)
    if len(plan.bounds) != 2 * n + 1:
        raise ValueError(
            f"plan has {len(plan.bounds)} bounds, chart needs {2 * n + 1}")
    states: list[StatePoint] = []
    for row in plan.raw_points(10 * plan.count):
        point = StatePoint.from_coords(row, n)
        if predicate is None or predicate(point):
            states.append(point)
            if len(states) == plan.count:
                return states
    raise SamplingError(
        f"could not draw {plan.count} admissible points within the 10x cap "
        f"({len(states)} accepted)")


@dataclass
class PointRecord:
    point: StatePoint
    values: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "point": {"q": self.point.q.tolist(), "v": self.point.v.tolist(),
                      "z": self.point.z},
            "values": self.values,
        }


@dataclass
class CheckReport:
    verdict: str
    max_residual: float = 0.0
    records: list[PointRecord] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    tolerances: Tolerances = field(default_factory=Tolerances)
    plan: SamplePlan | None = None
    task: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "verdict": self.verdict,
            "max_residual": self.max_residual,
            "tolerances": self.tolerances.to_dict(),
            "sample_plan": self.plan.to_dict() if self.plan else None,
            "residuals": [r.to_dict() for r in self.records],
            "diagnostics": self.diagnostics,
        }


def report_from_records(records: Sequence[PointRecord], tol: Tolerances,
                        plan: SamplePlan | None = None,
                        diagnostics: Iterable[str] = (),
                        residual_keys: Sequence[str] | None = None) -> CheckReport:
    """Reduce per-point residual records to a verdict report.

    The reduction (maximum over the named residual values, records kept in
    point order) is deterministic.
    """
    max_res = 0.0
    for rec in records:
        for key, value in rec.values.items():
            if residual_keys is not None and key not in residual_keys:
                continue
            max_res = max(max_res, abs(float(value)))
    return CheckReport(verdict=verdict_for(max_res, tol), max_residual=max_res,
                       records=list(records), diagnostics=list(diagnostics),
                       tolerances=tol, plan=plan)
