"""
Median ensembles and monotone quantiles
========================================

Combining heterogeneous forecasts by an elementwise median is robust to a
single bad member, and isotonic regression repairs any quantile crossings
the combination (or a member) introduces.
"""

import numpy as np

from agentcast.adapters import resolve_model
from agentcast.datasets import load_air_passengers
from agentcast.ensemble import median_ensemble, monotonize_quantiles, pava_isotonic
from agentcast.models import get_model

panel = load_air_passengers()
H = 12

# Combine three members frame-by-frame. The ensemble's point forecast at
# every step is the median of the member values, so it always lies inside
# the member envelope.
members = [get_model(a).forecast(panel, H) for a in ("seasonalnaive", "theta", "autoets")]
combined = median_ensemble(members)
print(f"combined model name: {combined.model}")

stack = np.stack([m["AirPassengers"].mean for m in members])
mean = combined["AirPassengers"].mean
inside = np.all(mean >= stack.min(axis=0)) & np.all(mean <= stack.max(axis=0))
print(f"median stays inside the member envelope: {bool(inside)}")

# The combined quantiles are medians per (step, level) cell; a final
# isotonic pass guarantees rows never cross.
final = monotonize_quantiles(combined)
rows_ok = np.all(np.diff(final["AirPassengers"].quantiles, axis=1) >= 0.0)
print(f"monotone quantile rows after the isotonic pass: {bool(rows_ok)}")

# pava_isotonic is the underlying solver: weighted least-squares fit under
# a nondecreasing constraint, by pooling adjacent violators.
row = np.array([4.0, 2.0, 3.0, 5.0, 1.0])
print()
print(f"raw row:      {row}")
print(f"isotonic fit: {pava_isotonic(row, np.ones_like(row))}")

# The same combination is addressable as a model alias, which is how the
# CLI and the cross-validator reach it.
ens = resolve_model("median_ensemble:seasonalnaive+theta+autoets")
frame = ens.forecast(panel, H)
print()
print(f"alias form: {ens.name}")
print(f"next-year total: {frame['AirPassengers'].mean.sum():,.0f}")
