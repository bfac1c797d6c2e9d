"""Ready-made problem instances.

* :func:`counterexample_instance`: a short steep climb with an underpowered
  car, for which the relaxation is not exact.
* :func:`benchmark_path_instance`: the 600 m reference path with two 4 %
  ramps and three speed-limit sections.
* :func:`random_instance`: seeded random paths of the same length.
* :func:`load_elevation_csv`: ingestion of surveyed elevation data.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidParameter, MalformedInput
from .model import (FIAT_500, PathProfile, ProblemInstance, VehicleParams, kmh_to_w,
                    require_valid)

DEFAULT_W_INIT = 0.1
BENCHMARK_LENGTH = 600.0
SPEED_MENU_KMH = (30.0, 50.0, 70.0, 90.0, 110.0, 130.0)
DEGENERATE_LAMBDAS = (0.1, 0.99)

# (start, end, grade) of the ramps on the benchmark path, in metres
_BENCHMARK_RAMPS = ((100.0, 250.0, 0.04), (350.0, 500.0, -0.04))
_BENCHMARK_LIMITS_KMH = (70.0, 90.0, 30.0)
_SECTION_LENGTH = 200.0


def lambda_grid(count: int = 100, low: float = 1e-7, high: float = 1e-2,
                include_zero: bool = True) -> np.ndarray:
    """``{0} U logspace(low, high, count)`` in ascending order."""
    grid = np.logspace(math.log10(low), math.log10(high), count)
    return np.concatenate([[0.0], grid]) if include_zero else grid


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of the random-instance generator."""

    seed: int = 0
    n: int = 200
    h: float = 3.0
    incline_bound: float = 0.05
    speed_menu: tuple = SPEED_MENU_KMH
    lambda_count: int = 100
    lambda_range: tuple = (1e-7, 1e-2)
    knot_spacing: float = 100.0
    w_init: float = DEFAULT_W_INIT

    def __post_init__(self):
        object.__setattr__(self, "speed_menu", tuple(float(v) for v in self.speed_menu))
        bad = self.violations()
        if bad:
            raise InvalidParameter("invalid scenario config: " + "; ".join(bad))

    def violations(self) -> list[str]:
        out = []
        if not 0.0 <= self.incline_bound < 1.0:
            out.append("incline_bound in [0, 1)")
        if not self.speed_menu:
            out.append("speed_menu nonempty")
        if any(not v > 0 for v in self.speed_menu):
            out.append("speed_menu values > 0")
        if self.n < 2:
            out.append("n >= 2")
        if not self.h > 0:
            out.append("h > 0")
        if self.lambda_count < 1:
            out.append("lambda_count >= 1")
        lo, hi = self.lambda_range
        if not 0 < lo <= hi:
            out.append("0 < lambda_range[0] <= lambda_range[1]")
        return out

    def lambda_values(self) -> np.ndarray:
        return lambda_grid(self.lambda_count, *self.lambda_range)


def _section_limits(s: np.ndarray, limits_kmh: Sequence[float], cap: float) -> np.ndarray:
    section = np.minimum((s // _SECTION_LENGTH).astype(int), len(limits_kmh) - 1)
    w = kmh_to_w(np.asarray(limits_kmh, float))[section]
    return np.minimum(w, cap)


def counterexample_instance() -> ProblemInstance:
    """Underpowered Fiat 500 (12.5 kW) on wet asphalt facing a 22.5 degree climb.

    200 points with h = 1 m. Steps are split 66 / 67 / 66 into flat, incline
    and flat sections, so the climb occupies steps 66..132 (0-based).
    """
    vehicle = FIAT_500.with_power(12500.0).with_mu(0.3)
    n = 200
    slope = np.zeros(n - 1)
    slope[66:133] = math.sin(math.radians(22.5))
    path = PathProfile(h=1.0, slope_sin=slope, w_max=np.full(n, 1975.0))
    return ProblemInstance(vehicle, path, lam=0.0, w_init=DEFAULT_W_INIT)


def benchmark_altitude(s) -> np.ndarray:
    """Altitude of the benchmark path at arc length ``s`` (metres)."""
    s = np.asarray(s, float)
    z = np.zeros_like(s)
    for start, end, grade in _BENCHMARK_RAMPS:
        z += grade * np.clip(s - start, 0.0, end - start)
    return z


def benchmark_path_instance(vehicle: VehicleParams = FIAT_500, lam: float = 0.0,
                            n: int = 200, w_init: float = DEFAULT_W_INIT) -> ProblemInstance:
    """The 600 m reference path sampled with ``h = 600 / n`` (``h = 3`` at n = 200).

    The slope of each step is the altitude change over the step divided by
    ``h``, so steps crossing a ramp boundary get an intermediate value and
    the altitude returns to zero exactly. Speed limits are 70, 90 and
    30 km/h on consecutive 200 m sections, capped by the vehicle top speed.
    """
    if n < 2:
        raise InvalidParameter(f"n must be at least 2, got {n}")
    h = BENCHMARK_LENGTH / n
    s = h * np.arange(n)
    slope = np.diff(benchmark_altitude(s)) / h
    w_max = _section_limits(s, _BENCHMARK_LIMITS_KMH, vehicle.w_cap)
    inst = ProblemInstance(vehicle, PathProfile(h, slope, w_max), lam=lam, w_init=w_init)
    require_valid(inst)
    return inst


def degenerate_instances(vehicle: VehicleParams = FIAT_500, n: int = 200) -> list[ProblemInstance]:
    """Benchmark path with energy weights so large that the car barely moves."""
    return [benchmark_path_instance(vehicle, lam, n) for lam in DEGENERATE_LAMBDAS]


def random_instance(config: ScenarioConfig, vehicle: VehicleParams = FIAT_500) -> ProblemInstance:
    """Random smooth incline, random section limits and random ``lambda``.

    The incline is a cubic spline through knots every ``knot_spacing`` metres
    with values uniform in ``[-bound, bound]``, clipped to the same range.
    Each of the three 200 m sections draws its limit from the speed menu
    plus the vehicle top speed.
    """
    rng = np.random.default_rng(config.seed)
    n, h, bound = config.n, config.h, config.incline_bound
    length = h * (n - 1)
    knots = np.arange(0.0, length + config.knot_spacing, config.knot_spacing)
    if len(knots) < 2:
        knots = np.array([0.0, max(length, config.knot_spacing)])
    values = rng.uniform(-bound, bound, len(knots))
    spline = CubicSpline(knots, values) if len(knots) > 2 else (
        lambda x: np.interp(x, knots, values))
    mid = h * (np.arange(n - 1) + 0.5)
    slope = np.clip(spline(mid), -bound, bound)

    menu = list(config.speed_menu)
    if vehicle.v_max_kmh is not None and vehicle.v_max_kmh not in menu:
        menu.append(float(vehicle.v_max_kmh))
    limits = rng.choice(menu, size=3)
    s = h * np.arange(n)
    w_max = _section_limits(s, limits, vehicle.w_cap)

    lam = float(rng.choice(config.lambda_values()))
    inst = ProblemInstance(vehicle, PathProfile(h, slope, w_max), lam=lam, w_init=config.w_init)
    require_valid(inst)
    return inst


def grade_to_sine(grade):
    """Rise over run to the sine of the slope angle."""
    grade = np.asarray(grade, float)
    return grade / np.sqrt(1.0 + grade ** 2)


def load_elevation_csv(path, h: float, vehicle: VehicleParams = FIAT_500, lam: float = 0.0,
                       w_max_default: Optional[float] = None,
                       w_init: float = DEFAULT_W_INIT) -> ProblemInstance:
    """Read ``arc_length_m, elevation_m[, speed_limit_kmh]`` rows and resample.

    Elevation is interpolated linearly onto a uniform grid of step ``h``
    starting at the first arc length. The grade of each step is converted to
    a sine. A speed limit applies from its row up to the next row; missing
    limits fall back to ``w_max_default`` (squared speed), which itself
    defaults to the vehicle top speed.
    """
    if not h > 0:
        raise InvalidParameter(f"h must be positive, got {h}")
    try:
        with open(Path(path), newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
            header = rows[0].keys() if rows else []
    except OSError as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise MalformedInput("need at least two rows of elevation data")
    for col in ("arc_length_m", "elevation_m"):
        if col not in header:
            raise MalformedInput(f"missing column {col!r}")
    try:
        arc = np.array([float(r["arc_length_m"]) for r in rows])
        elev = np.array([float(r["elevation_m"]) for r in rows])
        limit = np.array([float(r["speed_limit_kmh"]) if (r.get("speed_limit_kmh") or "").strip()
                          else np.nan for r in rows])
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"non-numeric entry: {exc}") from exc
    if not (np.all(np.isfinite(arc)) and np.all(np.isfinite(elev))):
        raise MalformedInput("non-finite arc length or elevation")
    if np.any(np.diff(arc) <= 0):
        raise MalformedInput("arc_length_m must be strictly increasing")

    span = arc[-1] - arc[0]
    n = int(math.floor(span / h + 1e-9)) + 1
    if n < 2:
        raise MalformedInput(f"path of {span:g} m is shorter than one step of {h:g} m")
    s = arc[0] + h * np.arange(n)
    z = np.interp(s, arc, elev)
    slope = np.clip(grade_to_sine(np.diff(z) / h), -1.0, 1.0)

    if w_max_default is None:
        w_max_default = vehicle.w_cap
    if not math.isfinite(w_max_default) and np.any(np.isnan(limit)):
        raise MalformedInput("speed limits missing and no default squared speed given")
    row = np.searchsorted(arc, s, side="right") - 1
    with np.errstate(invalid="ignore"):
        w_rows = np.where(np.isnan(limit), w_max_default, (np.nan_to_num(limit) / 3.6) ** 2)
    if np.any(np.where(np.isnan(limit), False, limit < 0)):
        raise MalformedInput("negative speed limit")
    w_max = np.minimum(w_rows[row], vehicle.w_cap)
    inst = ProblemInstance(vehicle, PathProfile(h, slope, w_max), lam=lam, w_init=w_init)
    require_valid(inst)
    return inst
