"""Seasonal wind profiles from a multi-year power record.

This walk-through builds the four normative days from five years of
synthetic farm output. It then checks how well they bound four further
years.

Run with ``python3 demos/01_wind_profiles.py``.
"""

import numpy as np

from seasonal_voltage.synthetic import SAMPLE_SEEDS, synthetic_wind_power, synthetic_wind_speed
from seasonal_voltage.wind import SEASONS, build_annual_profile, build_seasonal_profiles, fit_weibull, validate_holdout

# Five training years of half-hourly output. Every day is divided by its
# first half-hour, so the profile describes the shape of a day, not its level.
train = synthetic_wind_power(range(2007, 2012), seed=SAMPLE_SEEDS["wind_train"])
profiles = build_seasonal_profiles(train)

print("season   MP (MW)  MXWP (MW)  MNWP (MW)  band width")
for s in SEASONS:
    p = profiles[s]
    width = np.mean(p.upper - p.lower)
    print(f"{s:7s} {p.mp:8.1f} {p.mxwp:10.1f} {p.mnwp:10.1f} {width:11.3f}")

# The representative day follows the mean shape while the band holds the
# spread of the other years. Spring and summer are the windier, more variable
# seasons in the synthetic record.
summer = profiles["summer"]
print("\nsummer normative day, every 4 h:", np.round(summer.normp[::8], 3))

# Hold-out check: the share of test-year points that fall outside the band.
test = synthetic_wind_power(range(2012, 2016), seed=SAMPLE_SEEDS["wind_test"])
for s, rep in validate_holdout(test, profiles).items():
    print(f"{s:7s} outliers {rep.percentage:5.2f} %")

# The season-blind alternative uses one year of wind speed, a Weibull fit and
# a turbine power curve, averaged into one normalized day.
speed = synthetic_wind_speed([2007], seed=SAMPLE_SEEDS["speed"])
fit = fit_weibull(speed.values.ravel())
print(f"\nWeibull fit: shape {fit.shape:.2f}, scale {fit.scale:.2f} m/s")
annual = build_annual_profile(speed)
print("annual normalized day, every 4 h:", np.round(annual.values[::8], 3))
