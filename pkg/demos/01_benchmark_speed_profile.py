"""
Minimum-time speed profile on the 600 m reference path
======================================================

A Fiat 500 drives 600 m with a 4 % climb, a 4 % descent and three speed
limits (70, 90, 30 km/h). We solve the convex relaxation, check that it is
exact and recover a profile that satisfies the original power constraint.
"""

import numpy as np

from veloplan import (FIAT_500, benchmark_path_instance, exactness_report, feasibility_check,
                      recover_nonconvex, solve_relaxation, w_to_kmh)

instance = benchmark_path_instance(FIAT_500, lam=0.0, n=200)
print(f"{instance.n} points, step {instance.path.h} m, start at "
      f"{w_to_kmh(instance.w_init):.2f} km/h")

# %% Solve the relaxation
solution = solve_relaxation(instance)
print("status:", solution.status.value, " objective:", round(solution.objective, 4), "s")

# %% Exactness: a-priori conditions and the posterior gap
report = exactness_report(instance, solution)
print("step-length condition:", report.h_condition,
      f"({report.h_lhs:.2f} > {report.h_rhs:.2f})")
print("speed-limit condition:", report.wmax_condition,
      " critical-speed condition:", report.critical_condition)
print("posterior gap:", f"{report.posterior_gap:.2e}", " certified by:", report.certified_by)

# %% Recover the non-convex solution and check it against the original model
profile = recover_nonconvex(solution)
check = feasibility_check(profile.w, profile.F, instance)
print("feasible:", check.feasible, " power excess:", f"{check.power_W:.2e} W")

# %% A coarse text plot of the speed along the path
v = w_to_kmh(profile.w)
for s, speed in zip(instance.path.s[::10], v[::10]):
    print(f"{s:6.0f} m {speed:6.1f} km/h " + "#" * int(speed / 2))
print(f"travel time {profile.time:.2f} s, traction energy {profile.energy / 1e3:.1f} kJ, "
      f"top speed {np.max(v):.1f} km/h")
