"""Geometry of the attainable (I, J) plane.

The currents of any transmission live in a lens-shaped region: I between
the two one-sided extremal boxcars, and J between the curves traced by the
compact boxcar anchored at eps0 and its complement.  Inside, the optimal
topology changes across bifurcation curves; this script samples the whole
map and writes it as plot-ready CSV files.
"""

import numpy as np

from turbox import (
    ReservoirPair,
    compute_region_map,
    current_bounds,
    j_extrema,
)

res = ReservoirPair.from_temperatures(1.0, 0.2, 0.1, 0.6)

# ----------------------------
# Extremal currents and their boxcars
# ----------------------------
cb = current_bounds(res)
print(f"I range: [{cb.I_min:.6f}, {cb.I_max:.6f}]")
print(f"  I_min boxcar: {cb.boxcar_min.intervals}")
print(f"  I_max boxcar: {cb.boxcar_max.intervals}")

# ----------------------------
# Energy-current bounds at a few fixed I
# ----------------------------
print("\n   I        J_min      J_max      eps1")
for f in (0.2, 0.5, 0.8):
    I = cb.I_min + f * (cb.I_max - cb.I_min)
    ex = j_extrema(res, I)
    print(f"{I:9.5f}  {ex.J_min:9.5f}  {ex.J_max:9.5f}  {ex.eps1:9.5f}")

# ----------------------------
# Full region map (a coarse grid keeps the demo quick)
# ----------------------------
rm = compute_region_map(res, n_boundary=24, n_topology=(24, 24), tol=1e-5)
sigs = {}
for _, _, count, li, ri in rm.topology:
    key = (count, li, ri)
    sigs[key] = sigs.get(key, 0) + 1
print("\ntopology signatures (count, left-infinite, right-infinite):")
for key in sorted(sigs):
    print(f"  {key}: {sigs[key]} samples")
print(f"largest interval count observed: {rm.max_interval_count()}")

rm.write_csv_dir("region_map_out")
print("\nwrote boundary.csv, bifurcations.csv, topology.csv, region.json "
      "to region_map_out/")
