"""Independent evaluation of speed profiles.

Everything here works directly on ``(w, F)`` in physical units and never
touches the conic program, so it can be used to cross-check the optimiser.
The discretised longitudinal dynamics are

    w[i+1] = w[i] + (h / M) * (F[i] - Gamma w[i] - M g (sin a[i] + c)),

the same relation the relaxation imposes as an equality constraint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .errors import InvalidParameter, SingularSpeed
from .model import (PathProfile, ProblemInstance, SolverStatus, SpeedSolution,
                    VehicleParams)

DEFAULT_TOLERANCES = {
    "speed_max": 1e-6,   # m^2/s^2
    "speed_min": 1e-6,   # m^2/s^2
    "force": 1e-6,       # N
    "power": 1e-6,       # relative to P_max
    "dynamics": 1e-6,    # N
    "initial": 1e-6,     # m^2/s^2
}

MAX_BRUTE_FORCE_POINTS = 5
MAX_BRUTE_FORCE_GRID = 101


@dataclass(frozen=True)
class Simulation:
    """Result of :func:`forward_simulate`.

    ``w`` is returned unclipped; ``negative`` lists the grid points where the
    simulated squared speed dropped below zero.
    """

    w: np.ndarray
    negative: tuple[int, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.negative


@dataclass(frozen=True)
class ObjectiveBreakdown:
    travel_time: float
    energy: float
    weighted: float
    per_step_power: np.ndarray

    def to_dict(self) -> dict:
        return {
            "travel_time_s": self.travel_time,
            "energy_J": self.energy,
            "weighted": self.weighted,
            "max_power_W": float(np.max(self.per_step_power, initial=-np.inf)),
        }


@dataclass(frozen=True)
class FeasibilityReport:
    """Worst violation of each constraint family (positive means violated).

    Units: squared speeds in m^2/s^2, forces in N, power relative to
    ``P_max``. ``power_W`` carries the absolute power excess for reference.
    """

    residuals: dict
    tolerances: dict
    power_W: float = 0.0

    @property
    def feasible(self) -> bool:
        return all(self.residuals[k] <= self.tolerances[k] for k in self.residuals)

    @property
    def violated(self) -> list[str]:
        return [k for k in self.residuals if self.residuals[k] > self.tolerances[k]]

    def to_dict(self) -> dict:
        return {"feasible": self.feasible, "residuals": dict(self.residuals),
                "power_excess_W": self.power_W, "violated": self.violated}


def _check_lengths(w, F, n):
    if w is not None and len(w) != n:
        raise InvalidParameter(f"expected {n} squared speeds, got {len(w)}")
    if len(F) != n - 1:
        raise InvalidParameter(f"expected {n - 1} forces, got {len(F)}")


def forward_simulate(w_init: float, F, path: PathProfile, vehicle: VehicleParams) -> Simulation:
    """Integrate the discrete dynamics from ``w_init`` under forces ``F``."""
    F = np.asarray(F, dtype=float).reshape(-1)
    _check_lengths(None, F, path.n)
    if not w_init > 0:
        raise InvalidParameter(f"w_init must be positive, got {w_init}")
    h, M, g = path.h, vehicle.M, vehicle.g
    w = np.empty(path.n)
    w[0] = w_init
    load = M * g * (path.slope_sin + vehicle.c)
    for i in range(path.n - 1):
        w[i + 1] = w[i] + (h / M) * (F[i] - vehicle.Gamma * w[i] - load[i])
    negative = tuple(int(i) for i in np.flatnonzero(w < 0))
    return Simulation(w, negative)


def evaluate_objective(w, F, instance: ProblemInstance) -> ObjectiveBreakdown:
    """Travel time, energy and their weighted sum for a given profile."""
    w = np.asarray(w, dtype=float).reshape(-1)
    F = np.asarray(F, dtype=float).reshape(-1)
    _check_lengths(w, F, instance.n)
    ws = w[:-1]
    if np.any(ws <= 0):
        bad = int(np.flatnonzero(ws <= 0)[0])
        raise SingularSpeed(f"non-positive squared speed {ws[bad]:g} at point {bad}")
    h, eta = instance.path.h, instance.vehicle.eta
    root = np.sqrt(ws)
    travel_time = float(np.sum(h / root))
    energy = float(np.sum(h * np.maximum(eta * F, F)))
    return ObjectiveBreakdown(
        travel_time=travel_time,
        energy=energy,
        weighted=instance.lam * energy + travel_time,
        per_step_power=F * root,
    )


def feasibility_check(w, F, instance: ProblemInstance,
                      tolerances: Optional[Mapping[str, float]] = None) -> FeasibilityReport:
    """Evaluate every constraint of the original (non-relaxed) problem."""
    w = np.asarray(w, dtype=float).reshape(-1)
    F = np.asarray(F, dtype=float).reshape(-1)
    _check_lengths(w, F, instance.n)
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    veh, path = instance.vehicle, instance.path
    M, g, h = veh.M, veh.g, path.h
    predicted = (M * (w[1:] - w[:-1]) / h + veh.Gamma * w[:-1]
                 + M * g * (path.slope_sin + veh.c))
    power_W = F * np.sqrt(np.maximum(w[:-1], 0.0)) - veh.P_max
    residuals = {
        "speed_max": float(np.max(w - path.w_max)),
        "speed_min": float(np.max(-w)),
        "force": float(np.max(np.abs(F) - M * g * veh.mu)),
        "power": float(np.max(power_W) / veh.P_max),
        "dynamics": float(np.max(np.abs(F - predicted))),
        "initial": float(abs(w[0] - instance.w_init)),
    }
    return FeasibilityReport(residuals, {k: tol[k] for k in residuals},
                             float(np.max(power_W)))


def brute_force_small(instance: ProblemInstance, force_grid_size: int = 41,
                      chunk: int = 200_000) -> Optional[SpeedSolution]:
    """Exhaustive search over a uniform force grid for tiny instances.

    Every combination of ``F_i`` in ``linspace(-M g mu, M g mu, size)`` is
    simulated forward; the feasible combination with the lowest weighted
    objective wins, ties going to the lexicographically smallest force
    vector. Returns ``None`` if no grid point is feasible.
    """
    n = instance.n
    if n > MAX_BRUTE_FORCE_POINTS:
        raise InvalidParameter(f"brute force supports n <= {MAX_BRUTE_FORCE_POINTS}, got {n}")
    if not 2 <= force_grid_size <= MAX_BRUTE_FORCE_GRID:
        raise InvalidParameter(f"force grid size must be in [2, {MAX_BRUTE_FORCE_GRID}]")
    veh, path = instance.vehicle, instance.path
    M, g, h = veh.M, veh.g, path.h
    grid = np.linspace(-M * g * veh.mu, M * g * veh.mu, force_grid_size)
    steps = n - 1
    total = force_grid_size ** steps
    load = M * g * (path.slope_sin + veh.c)

    best_val, best_idx = np.inf, -1
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        # C-order unravel keeps flat order equal to lexicographic order
        idx = np.unravel_index(flat, (force_grid_size,) * steps)
        w = np.full(len(flat), instance.w_init)
        ok = w <= path.w_max[0]
        obj = np.zeros(len(flat))
        for i in range(steps):
            F = grid[idx[i]]
            ok &= w > 0
            root = np.sqrt(np.where(w > 0, w, 1.0))
            ok &= F * root <= veh.P_max
            obj += h / root + instance.lam * h * np.maximum(veh.eta * F, F)
            w = w + (h / M) * (F - veh.Gamma * w - load[i])
            ok &= (w >= 0) & (w <= path.w_max[i + 1])
        if np.any(ok):
            cand = np.where(ok, obj, np.inf)
            k = int(np.argmin(cand))
            if cand[k] < best_val:
                best_val, best_idx = float(cand[k]), int(flat[k])
    if best_idx < 0:
        return None
    idx = np.unravel_index(best_idx, (force_grid_size,) * steps)
    F = grid[np.array(idx, dtype=int)]
    w = forward_simulate(instance.w_init, F, path, veh).w
    obj = evaluate_objective(w, F, instance)
    return SpeedSolution(
        w=w, F=F, t=1.0 / np.sqrt(w[:-1]), energy=obj.energy, time=obj.travel_time,
        weighted_objective=obj.weighted, exactness_gap=0.0,
        solver_status=SolverStatus.OPTIMAL,
        residuals=feasibility_check(w, F, instance).residuals,
    )
