"""
Planning on surveyed elevation data
===================================

Elevation samples along a road, possibly irregularly spaced and with
posted speed limits, are resampled onto a uniform grid. Grades become
sines of the slope angle and each limit holds until the next row. A blank
limit would fall back to the vehicle top speed.
"""

import tempfile
from pathlib import Path

from veloplan import (FIAT_500E, load_elevation_csv, recover_nonconvex, solve_relaxation,
                      w_to_kmh)

rows = """arc_length_m,elevation_m,speed_limit_kmh
0,120.0,50
80,121.5,50
170,125.0,70
260,126.0,90
330,123.0,90
420,118.5,40
500,118.0,40
"""
path = Path(tempfile.mkdtemp()) / "road.csv"
path.write_text(rows)

instance = load_elevation_csv(path, h=2.5, vehicle=FIAT_500E, lam=1e-5)
print(f"{instance.n} points, slopes between {instance.path.slope_sin.min():.3f} and "
      f"{instance.path.slope_sin.max():.3f}")

profile = recover_nonconvex(solve_relaxation(instance))
v = w_to_kmh(profile.w)
for i in range(0, instance.n, 20):
    limit = w_to_kmh(instance.path.w_max[i])
    print(f"{instance.path.s[i]:6.1f} m  limit {limit:5.1f}  speed {v[i]:5.1f} km/h")
print(f"time {profile.time:.1f} s, net energy {profile.energy / 1e3:.1f} kJ")
