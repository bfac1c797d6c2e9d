"""
A-priori exactness conditions
=============================

The relaxation is guaranteed exact when the step length is short enough and
either every speed limit leaves enough power to hold it, or the car can
still accelerate at the critical speed. Here we vary the step length and
the engine power and watch the certificate switch on and off, then confirm
the a-posteriori gap by solving.
"""

from veloplan import (FIAT_500, benchmark_path_instance, critical_speed, exactness_report,
                      solve_relaxation, w_to_kmh)

print(f"Fiat 500 critical speed: {w_to_kmh(critical_speed(FIAT_500)):.1f} km/h")

print(f"{'P kW':>5} {'n':>5} {'h m':>5} | {'step':>5} {'limit':>5} {'crit':>5} | "
      f"{'a-priori':>8} {'gap':>8}")
for power in (12_500.0, 25_000.0, 50_750.0):
    vehicle = FIAT_500.with_power(power)
    for n in (50, 200, 600):
        inst = benchmark_path_instance(vehicle, 0.0, n)
        report = exactness_report(inst, solve_relaxation(inst))
        print(f"{power / 1e3:5.1f} {n:5d} {inst.path.h:5.1f} | {str(report.h_condition):>5} "
              f"{str(report.wmax_condition):>5} {str(report.critical_condition):>5} | "
              f"{str(report.a_priori):>8} {report.posterior_gap:8.1e}")

# The conditions are sufficient, not necessary: every row above has a tiny
# gap even where the a-priori certificate is missing.
