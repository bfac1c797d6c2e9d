"""Physical data of the speed planning problem.

Units are SI throughout. Speeds enter the optimisation as *squared* speeds
``w = v**2`` in m^2/s^2; the helpers :func:`kmh_to_w` and :func:`w_to_kmh`
convert to and from the km/h values used for speed limits.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import InvalidParameter, MalformedInput

GRAVITY = 9.81
SCHEMA = "velo-plan/1"


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class VehicleParams:
    """Longitudinal vehicle model.

    ``gamma`` is the drag coefficient normalised by mass. It is derived from
    ``Gamma / M`` when omitted and cross-checked when given.
    """

    M: float
    P_max: float
    eta: float
    c: float
    Gamma: float
    mu: float
    gamma: Optional[float] = None
    v_max_kmh: Optional[float] = None
    name: str = "custom"
    g: float = GRAVITY

    def __post_init__(self):
        if self.gamma is None and self.M:
            object.__setattr__(self, "gamma", self.Gamma / self.M)

    @property
    def w_cap(self) -> float:
        """Squared top speed of the vehicle, ``inf`` when unspecified."""
        if self.v_max_kmh is None:
            return math.inf
        return kmh_to_w(self.v_max_kmh)

    def with_mu(self, mu: float) -> "VehicleParams":
        return _replace(self, mu=mu)

    def with_power(self, P_max: float) -> "VehicleParams":
        return _replace(self, P_max=P_max)

    def violations(self) -> list[str]:
        out = []
        if not self.M > 0:
            out.append("M > 0")
        if not self.P_max > 0:
            out.append("P_max > 0")
        if not 0.0 <= self.eta <= 1.0:
            out.append("eta in [0, 1]")
        if not self.c >= 0:
            out.append("c >= 0")
        if not self.Gamma >= 0:
            out.append("Gamma >= 0")
        if not self.mu > 0:
            out.append("mu > 0")
        if self.M > 0 and self.gamma is not None:
            if abs(self.gamma - self.Gamma / self.M) > 1e-12 * abs(self.gamma):
                out.append("gamma == Gamma / M")
        return out


def _replace(vehicle: VehicleParams, **changes) -> VehicleParams:
    from dataclasses import replace

    return replace(vehicle, **changes)


FIAT_500 = VehicleParams(
    M=967.0, P_max=50750.0, eta=0.0, c=0.007, Gamma=0.406, mu=0.7,
    v_max_kmh=160.0, name="fiat500",
)
FIAT_500E = VehicleParams(
    M=1365.0, P_max=87000.0, eta=0.7, c=0.007, Gamma=0.399, mu=0.7,
    v_max_kmh=150.0, name="fiat500e",
)
PRESETS = {"fiat500": FIAT_500, "fiat500e": FIAT_500E}


def vehicle_preset(name: str) -> VehicleParams:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise InvalidParameter(
            f"unknown vehicle preset {name!r}; choose from {sorted(PRESETS)}"
        ) from None


@dataclass(frozen=True)
class PathProfile:
    """Uniformly sampled path: step ``h`` and per-step slope sines.

    ``slope_sin`` has one entry per step (n - 1 values), ``w_max`` one entry
    per grid point (n values).
    """

    h: float
    slope_sin: np.ndarray
    w_max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "slope_sin", _frozen_array(self.slope_sin))
        object.__setattr__(self, "w_max", _frozen_array(self.w_max))

    @property
    def n(self) -> int:
        return len(self.w_max)

    @property
    def s(self) -> np.ndarray:
        """Arc length of each grid point."""
        return self.h * np.arange(self.n)

    @property
    def length(self) -> float:
        return self.h * (self.n - 1)

    def altitude(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.h * self.slope_sin)])

    def violations(self) -> list[str]:
        out = []
        if not self.h > 0:
            out.append("h > 0")
        if self.n < 2:
            out.append("n >= 2")
        if len(self.slope_sin) != self.n - 1:
            out.append("len(slope_sin) == n - 1")
        if not np.all(np.isfinite(self.slope_sin)) or np.any(np.abs(self.slope_sin) > 1.0):
            out.append("sin α ∈ [−1,1]")
        if not np.all(self.w_max > 0):
            out.append("w_max > 0")
        return out


@dataclass(frozen=True)
class ProblemInstance:
    vehicle: VehicleParams
    path: PathProfile
    lam: float = 0.0
    w_init: float = 0.1

    @property
    def n(self) -> int:
        return self.path.n

    def with_lambda(self, lam: float) -> "ProblemInstance":
        return ProblemInstance(self.vehicle, self.path, lam, self.w_init)

    def to_dict(self) -> dict:
        v = self.vehicle
        return {
            "schema": SCHEMA,
            "vehicle": {
                "name": v.name, "M": v.M, "P_max": v.P_max, "eta": v.eta,
                "c": v.c, "Gamma": v.Gamma, "mu": v.mu, "v_max_kmh": v.v_max_kmh,
            },
            "path": {
                "h": self.path.h,
                "slope_sin": self.path.slope_sin.tolist(),
                "w_max": self.path.w_max.tolist(),
            },
            "lambda": self.lam,
            "w_init": self.w_init,
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; equal instances hash equal."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    @classmethod
    def from_dict(cls, doc: dict) -> "ProblemInstance":
        if not isinstance(doc, dict):
            raise MalformedInput("instance document must be a JSON object")
        schema = doc.get("schema", SCHEMA)
        if schema != SCHEMA:
            raise MalformedInput(f"unsupported schema {schema!r}, expected {SCHEMA!r}")
        try:
            vdoc = doc["vehicle"]
            if isinstance(vdoc, str):
                vehicle = vehicle_preset(vdoc)
            else:
                vehicle = VehicleParams(
                    M=float(vdoc["M"]), P_max=float(vdoc["P_max"]),
                    eta=float(vdoc["eta"]), c=float(vdoc["c"]),
                    Gamma=float(vdoc["Gamma"]), mu=float(vdoc["mu"]),
                    gamma=None if vdoc.get("gamma") is None else float(vdoc["gamma"]),
                    v_max_kmh=None if vdoc.get("v_max_kmh") is None else float(vdoc["v_max_kmh"]),
                    name=str(vdoc.get("name", "custom")),
                )
            pdoc = doc["path"]
            path = PathProfile(
                h=float(pdoc["h"]), slope_sin=pdoc["slope_sin"], w_max=pdoc["w_max"]
            )
            return cls(vehicle, path, float(doc["lambda"]), float(doc["w_init"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad instance document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "ProblemInstance":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc)


class SolverStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    MAX_ITER = "MaxIter"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class SpeedSolution:
    """A speed profile feasible for the original (non-relaxed) problem."""

    w: np.ndarray
    F: np.ndarray
    t: np.ndarray
    energy: float
    time: float
    weighted_objective: float
    exactness_gap: float
    solver_status: SolverStatus = SolverStatus.OPTIMAL
    residuals: dict = field(default_factory=dict)

    @property
    def v_kmh(self) -> np.ndarray:
        return 3.6 * np.sqrt(np.maximum(self.w, 0.0))


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_instance(instance: ProblemInstance) -> ValidationReport:
    """Collect every violated invariant of ``instance``; empty means valid."""
    out = list(instance.vehicle.violations()) + list(instance.path.violations())
    if not instance.lam >= 0:
        out.append("lambda >= 0")
    if not instance.w_init > 0:
        out.append("w_init > 0")
    elif instance.path.n >= 1 and instance.w_init > instance.path.w_max[0]:
        out.append("w_init <= w_max_1")
    return ValidationReport(tuple(out))


def require_valid(instance: ProblemInstance) -> None:
    report = validate_instance(instance)
    if not report.ok:
        raise InvalidParameter("invalid instance: " + "; ".join(report.violations))


def critical_speed(vehicle: VehicleParams, mu: Optional[float] = None) -> float:
    """Squared speed at which the force and power limits coincide.

    Solves ``P_max / (M sqrt(w)) = g mu`` for ``w``. ``mu`` overrides the
    vehicle's friction coefficient when given.
    """
    mu = vehicle.mu if mu is None else mu
    if not mu > 0:
        raise InvalidParameter(f"friction coefficient must be positive, got {mu}")
    return (vehicle.P_max / (vehicle.M * vehicle.g * mu)) ** 2


def kmh_to_w(v_kmh):
    """Speed in km/h to squared speed in m^2/s^2."""
    v = np.asarray(v_kmh, dtype=float)
    if np.any(v < 0):
        raise InvalidParameter("speed must be non-negative")
    out = (v / 3.6) ** 2
    return float(out) if out.ndim == 0 else out


def w_to_kmh(w):
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise InvalidParameter("squared speed must be non-negative")
    out = 3.6 * np.sqrt(w)
    return float(out) if out.ndim == 0 else out


def speed_convert(value, direction: str):
    """Convert between km/h and squared speed; ``direction`` is
    ``"kmh_to_w"`` or ``"w_to_kmh"``."""
    if direction == "kmh_to_w":
        return kmh_to_w(value)
    if direction == "w_to_kmh":
        return w_to_kmh(value)
    raise InvalidParameter(f"unknown direction {direction!r}")

