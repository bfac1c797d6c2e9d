"""
When the relaxation is not exact
================================

An underpowered car (12.5 kW, wet road) faces a 22.5 degree climb in the
middle of a 200 m path. The relaxation still solves, but its optimum breaks
the power limit on the climb: the car "borrows" power it does not have.
"""

import numpy as np

from veloplan import (NotExact, counterexample_instance, critical_speed, exactness_report,
                      recover_nonconvex, solve_relaxation, w_to_kmh)

instance = counterexample_instance()
vehicle = instance.vehicle
solution = solve_relaxation(instance)
print("status:", solution.status.value)

# %% Which a-priori conditions fail?
report = exactness_report(instance, solution)
print("step-length:", report.h_condition, " speed-limit:", report.wmax_condition,
      " critical-speed:", report.critical_condition)
print("worst speed-limit margin:", round(float(report.wmax_margins.min()), 3))

# %% Recovery reports where and how the relaxed point is infeasible
outcome = recover_nonconvex(solution)
assert isinstance(outcome, NotExact)
print(f"gap {outcome.gap:.3f} s/m on steps {outcome.indices[0]}..{outcome.indices[-1]}")
print("force limit still respected:", outcome.force_bound_ok)
print("power limit exceeded:", outcome.power_bound_exceeded,
      f"(by up to {outcome.power_excess_W / 1e3:.1f} kW)")
print("speed decreasing across those steps:", outcome.speed_decreasing)

# %% The speed drops below the critical speed on the climb
w_bar = critical_speed(vehicle)
w_min = solution.w[66:].min()
print(f"critical speed {w_to_kmh(w_bar):.1f} km/h; slowest point after the climb starts "
      f"{w_to_kmh(w_min):.2f} km/h (w = {w_min:.2f})")
power = solution.F * np.sqrt(solution.w[:-1])
for i in range(60, 140, 8):
    print(f"step {i:3d}  slope {instance.path.slope_sin[i]:.3f}  "
          f"power {power[i] / 1e3:6.1f} kW  gap {solution.t[i] - 1 / np.sqrt(solution.w[i]):.4f}")
