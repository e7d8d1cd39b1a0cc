"""
The forecasting agent, end to end
==================================

One call runs the whole pipeline: diagnose the series, propose candidate
models from the diagnostics, backtest them, select the winner, refit on
full history, forecast with monotone quantiles, and answer the question
that was actually asked. Deterministic mode does all of this offline with
a rule-based planner and templated text.
"""

from agentcast.agent import run_agent
from agentcast.datasets import load_air_passengers

panel = load_air_passengers()
result = run_agent(
    panel,
    query="how many passengers are expected in total over the next 12 months?",
    h=12,
)

# The trace records each pipeline step in order.
print("trace")
for line in result.trace:
    print(f"  {line}")

print()
print(f"candidates: {[c.alias for c in result.candidates]}")
print(f"selected:   {result.selected}")
print(f"rationale:  {result.rationale}")

# The explanation is templated from computed numbers only; nothing in it
# is invented.
print()
print(result.explanation)
print()
print("Q: how many passengers over the next 12 months?")
print(f"A: {result.user_query_response}")

# The forecast frame itself is a regular ForecastFrame: monotone quantile
# rows, one entry per series.
entry = result.frame["AirPassengers"]
lo = result.frame.levels.index(0.1)
hi = result.frame.levels.index(0.9)
print()
print(f"first forecast step: mean {entry.mean[0]:.1f}, "
      f"80% interval [{entry.quantiles[0, lo]:.1f} .. {entry.quantiles[0, hi]:.1f}]")

# Everything above serializes to JSON for downstream tooling.
print(f"json payload: {len(result.to_json())} bytes")
