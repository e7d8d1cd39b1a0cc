"""
Forecasting with the builtin model zoo
=======================================

Every model answers the same call: forecast(panel, h, levels) returning a
frame of point forecasts plus an optional quantile matrix. This demo fits
a few of them on AirPassengers and prints next year's forecast with an
80% interval.
"""

from datetime import datetime

import numpy as np

from agentcast.datasets import load_air_passengers
from agentcast.models import available_models, get_model
from agentcast.panel import Frequency, Series, SeriesPanel, format_timestamp, future_grid

panel = load_air_passengers()
H = 12
LEVELS = (0.1, 0.5, 0.9)

print("registry:", ", ".join(available_models()))
print()

# Side-by-side point forecasts for the next year.
aliases = ("naive", "seasonalnaive", "theta", "autoets")
frames = {alias: get_model(alias).forecast(panel, H, LEVELS) for alias in aliases}
header = "month      " + "".join(f"{alias:>15}" for alias in aliases)
print(header)
entry = frames["naive"]["AirPassengers"]
for k, ts in enumerate(entry.timestamps):
    cells = "".join(f"{frames[a]['AirPassengers'].mean[k]:15.1f}" for a in aliases)
    print(f"{format_timestamp(ts)} {cells}")

# The quantile matrix has one row per step, one column per level, and the
# rows are ordered: q10 <= q50 <= q90.
print()
print("autoets with an 80% interval")
e = frames["autoets"]["AirPassengers"]
for k, ts in enumerate(e.timestamps):
    q10, q50, q90 = e.quantiles[k]
    print(f"{format_timestamp(ts)}  mean {e.mean[k]:7.1f}   "
          f"[{q10:7.1f} .. {q90:7.1f}]")
width = e.quantiles[:, 2] - e.quantiles[:, 0]
print(f"horizon-end interval wider than first-step interval: {width[-1] > width[0]} "
      f"({width[0]:.1f} -> {width[-1]:.1f})")

# Intermittent-demand models skip quantiles entirely; their rate forecast
# is flat by construction: demand size level divided by interval level.
values = np.zeros(36)
values[::4] = 3.0
anchor = datetime(2020, 1, 1)
timestamps = tuple([anchor] + future_grid(anchor, Frequency("M"), 35))
sparse = SeriesPanel({"spares": Series(timestamps, values)}, Frequency("M"))
frame = get_model("croston").forecast(sparse, 6)
print()
print(f"croston on intermittent demand: rate {frame['spares'].mean[0]:.3f} "
      f"per period, quantiles: {frame['spares'].quantiles}")
