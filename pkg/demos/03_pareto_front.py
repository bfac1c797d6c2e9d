"""
Trading travel time against energy
==================================

Sweeping the weight lambda of the energy term traces the time/energy
Pareto front of each vehicle. The electric Fiat 500e recovers 70 % of the
braking energy, so at every weight it needs less energy than the petrol
Fiat 500. A reduced sweep of 21 weights keeps this demo short.
"""

from veloplan import FIAT_500, FIAT_500E, lambda_grid, pareto_sweep
from veloplan.experiments import write_pareto_csv

lambdas = lambda_grid(count=20)
fronts = {v.name: pareto_sweep(v, lambdas, n=200) for v in (FIAT_500, FIAT_500E)}

print(f"{'lambda':>9} | {'500 time':>8} {'500 kJ':>8} | {'500e time':>9} {'500e kJ':>8}")
for a, b in zip(fronts["fiat500"], fronts["fiat500e"]):
    print(f"{a.lam:9.2e} | {a.travel_time:8.2f} {a.energy / 1e3:8.1f} | "
          f"{b.travel_time:9.2f} {b.energy / 1e3:8.1f}")

worst = max(p.exactness_gap for pts in fronts.values() for p in pts)
print(f"largest posterior gap over both sweeps: {worst:.1e}")

write_pareto_csv(fronts["fiat500e"], "pareto_fiat500e.csv")
print("wrote pareto_fiat500e.csv")
