"""
The interior-point solver and how it scales
===========================================

The relaxation is a sparse second-order cone program whose equality
constraints couple neighbouring grid points only. The built-in
primal-dual solver exploits this: solve time grows roughly linearly with
the number of grid points.
"""

from veloplan import FIAT_500, build_relaxation, kkt_residuals, runtime_scaling, solve_socp
from veloplan.scenarios import benchmark_path_instance

program = build_relaxation(benchmark_path_instance(FIAT_500, 0.0, 200))
print(f"{program.num_vars} variables, {program.A.shape[0]} equalities, "
      f"{program.lp_dim} linear inequalities, {len(program.soc_dims)} three-dimensional cones")

result = solve_socp(program)
res = kkt_residuals(program, result)
print(f"{result.status.value} in {result.iterations} iterations, {result.wall_time:.3f} s")
print(f"primal {res.primal:.1e}, dual {res.dual:.1e}, gap {res.gap:.1e}")
for row in result.history[:: max(1, len(result.history) // 6)]:
    print(f"  iter {row['iter']:2d}  pres {row['pres']:.1e}  dres {row['dres']:.1e}  "
          f"gap {row['gap']:.1e}")

for rec in runtime_scaling(FIAT_500, [50, 100, 200, 400, 800], repeats=3):
    print(f"n = {rec.n:4d}: {rec.solve_time:.3f} s ({rec.iterations} iterations)")
