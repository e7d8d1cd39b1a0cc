"""
Loading panels and reading the diagnostic features
===================================================

A panel is a collection of aligned time series in long format. This demo
loads the bundled AirPassengers series, shows how the same data round-trips
through CSV, and walks the feature table that drives candidate proposal.
"""

import io

from agentcast.datasets import load_air_passengers
from agentcast.features import compute_features
from agentcast.panel import parse_panel

# Load the classic monthly airline passengers series (1949-1960).
panel = load_air_passengers()
series = panel["AirPassengers"]
print(f"series: {panel.keys()}")
print(f"points: {len(series.values)}, freq: {panel.freq.unit}, "
      f"season length: {panel.season_length}")
print(f"first observations: {series.values[:6]}")

# Panels serialize to plain unique_id,ds,y CSV and parse back unchanged.
buffer = io.StringIO()
panel.to_csv(buffer)
reparsed = parse_panel(io.StringIO(buffer.getvalue()))
print(f"round-trips through CSV: {panel.equals(reparsed)}")

# The feature table summarizes each series: length, season length, trend
# and seasonal strength on the 0..1 scale, lag-1 autocorrelation, a KPSS
# level-stationarity verdict, and the share of zero observations.
report = compute_features(panel)
row = report["AirPassengers"]
print()
print("diagnostics")
print(f"  trend strength:    {row.trend_strength:.3f}")
print(f"  seasonal strength: {row.seasonal_strength:.3f}")
print(f"  acf(1):            {row.acf1:.3f}")
print(f"  kpss statistic:    {row.kpss_stat:.3f} "
      f"(level stationary: {row.kpss_level_stationary})")
print(f"  intermittency:     {row.intermittency:.3f}")

# A strongly trending, strongly seasonal, never-zero series: exactly the
# profile that sends the planner toward seasonal models.
print()
print(report.to_csv(), end="")
