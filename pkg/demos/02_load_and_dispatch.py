"""From monthly sector energy to generator schedules.

Sector shapes are scaled to match each season's daily energy, then summed
into a system load curve. An economic dispatch with loss iteration then
supplies every half-hour of the winter day on the IEEE 118-bus case.

Run with ``python3 demos/02_load_and_dispatch.py``.
"""

import numpy as np

from seasonal_voltage.dispatch import build_dispatch_schedule
from seasonal_voltage.ingest import load_ieee118
from seasonal_voltage.load import build_load_profiles, default_shapes
from seasonal_voltage.powerflow import solve_acpf
from seasonal_voltage.synthetic import SAMPLE_SEEDS, synthetic_demand_table
from seasonal_voltage.wind import SEASONS

table = synthetic_demand_table(seed=SAMPLE_SEEDS["demand"])
loads = build_load_profiles(table, default_shapes())
for s in SEASONS:
    p = loads[s]
    print(f"{s:7s} peak {p.peak_mw:8.0f} MW at {(np.argmax(p.percent)) / 2:4.1f} h, "
          f"night minimum {p.percent.min():5.1f} % of peak")

# The base case itself: Newton-Raphson with generator reactive limits.
case = load_ieee118()
base = solve_acpf(case)
print(f"\nbase case: {base.iterations} iterations, mismatch {base.mismatch:.1e} p.u., "
      f"{len(base.q_limited)} generators at a reactive limit")
print(f"voltages between {base.vm.min():.4f} and {base.vm.max():.4f} p.u.")

# One dispatch per half-hour. The load percentage scales every bus's base
# demand, and the losses come back from the AC solution.
sched = build_dispatch_schedule(case, loads["winter"])
total = sched.pg.sum(axis=1)
print(f"\nwinter generation {total.min():.0f}-{total.max():.0f} MW, "
      f"losses {sched.losses.min():.1f}-{sched.losses.max():.1f} MW")
print(f"worst power-balance closure {sched.closure().max():.1e} MW")
