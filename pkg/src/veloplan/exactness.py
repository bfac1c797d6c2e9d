"""When does the relaxation return a point of the original problem?

Two kinds of certificate are offered:

* a-priori sufficient conditions on the data (step length, maximum speed
  profile, critical speed), evaluated before solving;
* the a-posteriori gap ``max_i |t_i - 1/sqrt(w_i)|`` at the relaxed optimum.

Indices are 0-based grid positions throughout. Conditions that involve a
slope use the steps ``0..n-2``, since the slope of a step is only defined
between two grid points.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import evaluate_objective, feasibility_check
from .errors import ConditionUndefined, SingularSpeed
from .model import ProblemInstance, SolverStatus, SpeedSolution, critical_speed

DEFAULT_GAP_THRESHOLD = 1e-6
SINGULAR_W = 1e-12


def check_h_condition(instance: ProblemInstance) -> tuple[bool, float, float]:
    """Step-length condition ``lhs > rhs``.

    ``lhs = (1 - h gamma) wbar - h g (1 + c)`` and
    ``rhs = (P h / (2 M (lam gamma P h + 1 - lam)))^(2/3)``.
    """
    lhs = _h_lhs(instance)
    rhs = _h_rhs(instance, subtract_lambda=True)
    return bool(lhs > rhs), lhs, rhs


def _h_lhs(instance: ProblemInstance) -> float:
    veh, h = instance.vehicle, instance.path.h
    return (1.0 - h * veh.gamma) * critical_speed(veh) - h * veh.g * (1.0 + veh.c)


def _h_rhs(instance: ProblemInstance, subtract_lambda: bool) -> float:
    veh, h, lam = instance.vehicle, instance.path.h, instance.lam
    denom = lam * veh.gamma * veh.P_max * h + 1.0 - (lam if subtract_lambda else 0.0)
    if not denom > 0:
        raise ConditionUndefined(
            f"step-length condition undefined: denominator {denom:g} <= 0 at lambda={lam:g}")
    return (veh.P_max * h / (2.0 * veh.M * denom)) ** (2.0 / 3.0)


def check_wmax_condition(instance: ProblemInstance) -> tuple[bool, np.ndarray]:
    """Per-step margin ``P/(M sqrt(wmax_i)) - gamma wmax_i - g (sin a_i + c)``.

    The condition holds when every margin is non-negative.
    """
    veh, path = instance.vehicle, instance.path
    wm = path.w_max[:-1]
    margins = (veh.P_max / (veh.M * np.sqrt(wm)) - veh.gamma * wm
               - veh.g * (path.slope_sin + veh.c))
    return bool(np.all(margins >= 0)), margins


def check_critical_condition(instance: ProblemInstance) -> tuple[bool, np.ndarray, np.ndarray]:
    """Critical-speed condition over the steps whose speed limit exceeds ``wbar``.

    Returns ``(holds, I, brackets)``; the condition holds vacuously when
    ``I`` is empty.
    """
    veh, path = instance.vehicle, instance.path
    h = path.h
    if h * veh.gamma >= 1.0:
        raise ConditionUndefined(f"critical-speed condition undefined: h*gamma = {h * veh.gamma:g} >= 1")
    wbar = critical_speed(veh)
    idx = np.flatnonzero(path.w_max[:-1] > wbar)
    grade = veh.g * (path.slope_sin[idx] + veh.c)
    shifted = wbar + h * grade
    with np.errstate(invalid="ignore"):
        root = np.sqrt((1.0 - h * veh.gamma) / shifted)
    brackets = (veh.P_max / veh.M) * root - veh.gamma / (1.0 - h * veh.gamma) * shifted - grade
    # a non-positive shifted speed leaves the bracket undefined (nan): not certified
    holds = bool(np.all(brackets >= 0)) if len(idx) else True
    return holds, idx, brackets


def gap_profile(w, t) -> np.ndarray:
    """Per-step ``t_i - 1/sqrt(w_i)`` (non-negative for relaxed points)."""
    w = np.asarray(w, float).reshape(-1)
    t = np.asarray(t, float).reshape(-1)
    ws = w[:len(t)]
    if np.any(ws <= SINGULAR_W):
        bad = int(np.flatnonzero(ws <= SINGULAR_W)[0])
        raise SingularSpeed(f"squared speed {ws[bad]:g} at point {bad} is not positive")
    return t - 1.0 / np.sqrt(ws)


def posterior_gap(solution) -> float:
    """``max_i |t_i - 1/sqrt(w_i)|`` of a solved relaxation."""
    return float(np.max(np.abs(gap_profile(solution.w, solution.t)), initial=0.0))


@dataclass(frozen=True)
class GapCertificate:
    gap: float
    threshold: float
    worst_index: int
    violating: tuple[int, ...]

    @property
    def exact(self) -> bool:
        return self.gap <= self.threshold

    @property
    def last_violating(self) -> Optional[int]:
        return self.violating[-1] if self.violating else None


def gap_certificate(solution, threshold: float = DEFAULT_GAP_THRESHOLD) -> GapCertificate:
    profile = np.abs(gap_profile(solution.w, solution.t))
    worst = int(np.argmax(profile)) if len(profile) else -1
    violating = tuple(int(i) for i in np.flatnonzero(profile > threshold))
    return GapCertificate(float(profile.max(initial=0.0)), threshold, worst, violating)


@dataclass(frozen=True)
class NotExact:
    """The relaxed optimum is not feasible for the original problem.

    ``indices`` are the steps where ``t_i > 1/sqrt(w_i)`` beyond the
    threshold. ``power_excess_W`` is the largest ``F_i sqrt(w_i) - P_max``,
    positive when the relaxed point breaks the power limit.
    """

    indices: tuple[int, ...]
    gap: float
    threshold: float
    power_excess_W: float
    force_bound_ok: bool
    power_bound_exceeded: bool
    speed_decreasing: bool

    def to_dict(self) -> dict:
        return {
            "indices": list(self.indices), "gap": self.gap, "threshold": self.threshold,
            "power_excess_W": self.power_excess_W,
            "force_bound_ok": self.force_bound_ok,
            "power_bound_exceeded": self.power_bound_exceeded,
            "speed_decreasing": self.speed_decreasing,
        }


def recover_nonconvex(solution, gap_threshold: float = DEFAULT_GAP_THRESHOLD):
    """Turn a solved relaxation into a :class:`SpeedSolution` when exact.

    ``solution`` is an :class:`~veloplan.formulation.ExtractedSolution`.
    Returns :class:`NotExact` when the gap exceeds ``gap_threshold``.
    """
    inst = solution.instance
    veh = inst.vehicle
    cert = gap_certificate(solution, gap_threshold)
    w = np.asarray(solution.w, float)
    f = np.asarray(solution.f, float)
    F = veh.M * f
    if not cert.exact:
        idx = np.array(cert.violating, dtype=int)
        root = np.sqrt(w[:-1])
        power = F * root - veh.P_max
        # at a violating step the force limit still holds while the power
        # limit is exceeded, and the speed drops across the step
        tol = 1e-6
        force_ok = bool(np.all(f[idx] <= veh.g * veh.mu * (1 + tol)))
        power_over = bool(np.all(veh.M * f[idx] / veh.P_max > 1.0 / root[idx]))
        decreasing = bool(np.all(w[idx] > w[idx + 1]))
        return NotExact(cert.violating, cert.gap, gap_threshold, float(np.max(power)),
                        force_ok, power_over, decreasing)
    obj = evaluate_objective(w, F, inst)
    report = feasibility_check(w, F, inst)
    return SpeedSolution(
        w=w.copy(), F=F, t=1.0 / np.sqrt(w[:-1]), energy=obj.energy, time=obj.travel_time,
        weighted_objective=obj.weighted, exactness_gap=cert.gap,
        solver_status=SolverStatus(solution.status),
        residuals=dict(report.residuals, power_excess_W=report.power_W),
    )


@dataclass
class ExactnessReport:
    """A-priori conditions plus, when a solution is supplied, the gap.

    ``certified_by`` names the clause that certified exactness: ``"a-priori"``
    when the step-length condition holds together with the speed-limit or
    the critical-speed condition, ``"a-posteriori"`` when only the gap does,
    ``None`` otherwise. Conditions that cannot be evaluated are listed in
    ``undefined`` and count as not holding.
    """

    h_condition: Optional[bool]
    h_lhs: Optional[float]
    h_rhs: Optional[float]
    h_rhs_without_lambda_term: Optional[float]
    wmax_condition: bool
    wmax_margins: np.ndarray
    critical_condition: Optional[bool]
    critical_speed: float
    index_set: np.ndarray
    critical_brackets: np.ndarray
    posterior_gap: Optional[float] = None
    gap_threshold: float = DEFAULT_GAP_THRESHOLD
    undefined: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def a_priori(self) -> bool:
        return bool(self.h_condition) and (self.wmax_condition or bool(self.critical_condition))

    @property
    def a_posteriori(self) -> bool:
        return self.posterior_gap is not None and self.posterior_gap <= self.gap_threshold

    @property
    def certified_by(self) -> Optional[str]:
        if self.a_priori:
            return "a-priori"
        if self.a_posteriori:
            return "a-posteriori"
        return None

    @property
    def certified_exact(self) -> bool:
        return self.certified_by is not None

    def to_dict(self) -> dict:
        def opt(v):
            return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else v

        return {
            "h_condition": {"holds": self.h_condition, "lhs": opt(self.h_lhs),
                            "rhs": opt(self.h_rhs),
                            "rhs_without_lambda_term": opt(self.h_rhs_without_lambda_term)},
            "wmax_condition": {"holds": self.wmax_condition,
                               "min_margin": _min_or_none(self.wmax_margins),
                               "margins": _finite_list(self.wmax_margins)},
            "critical_condition": {"holds": self.critical_condition,
                                   "critical_speed": self.critical_speed,
                                   "index_set": [int(i) for i in self.index_set],
                                   "min_bracket": _min_or_none(self.critical_brackets),
                                   "brackets": _finite_list(self.critical_brackets)},
            "posterior_gap": self.posterior_gap,
            "gap_threshold": self.gap_threshold,
            "certified_exact": self.certified_exact,
            "certified_by": self.certified_by,
            "undefined": dict(self.undefined),
            "notes": list(self.notes),
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _finite_list(v) -> list:
    return [float(x) if np.isfinite(x) else None for x in np.asarray(v, float)]


def _min_or_none(v):
    v = np.asarray(v, float)
    return float(np.min(v)) if len(v) and np.all(np.isfinite(v)) else None


def exactness_report(instance: ProblemInstance, solution=None,
                     gap_threshold: float = DEFAULT_GAP_THRESHOLD) -> ExactnessReport:
    """Evaluate all conditions; never raises on an undefined condition."""
    undefined, notes = {}, []
    try:
        h_ok, lhs, rhs = check_h_condition(instance)
    except ConditionUndefined as exc:
        h_ok, lhs, rhs = None, _h_lhs(instance), None
        undefined["h_condition"] = str(exc)
    try:
        rhs_alt = _h_rhs(instance, subtract_lambda=False)
    except ConditionUndefined:
        rhs_alt = None
    if h_ok is not None and rhs_alt is not None and (lhs > rhs_alt) != h_ok:
        notes.append("step-length condition changes outcome when the '- lambda' term "
                     f"is dropped from the denominator (rhs {rhs:g} vs {rhs_alt:g})")
    wm_ok, margins = check_wmax_condition(instance)
    try:
        cr_ok, idx, brackets = check_critical_condition(instance)
    except ConditionUndefined as exc:
        cr_ok, idx, brackets = None, np.array([], int), np.array([])
        undefined["critical_condition"] = str(exc)
    gap = None
    if solution is not None:
        gap = posterior_gap(solution)
    return ExactnessReport(
        h_condition=h_ok, h_lhs=lhs, h_rhs=rhs, h_rhs_without_lambda_term=rhs_alt,
        wmax_condition=wm_ok, wmax_margins=margins, critical_condition=cr_ok,
        critical_speed=critical_speed(instance.vehicle), index_set=idx,
        critical_brackets=brackets, posterior_gap=gap, gap_threshold=gap_threshold,
        undefined=undefined, notes=notes,
    )
