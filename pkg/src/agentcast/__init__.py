"""Agentic time-series forecasting toolkit.

Univariate panel forecasting with native statistical models behind one
contract, rolling-origin cross-validation, median ensembling with monotone
quantiles, remote-model adapters, and a forecasting agent that runs either
fully deterministically or driven by an LLM.
"""

from .panel import (
    DEFAULT_LEVELS,
    ForecastEntry,
    ForecastFrame,
    Frequency,
    Series,
    SeriesPanel,
    frames_to_csv,
    future_grid,
    infer_frequency,
    parse_panel,
    train_test_split,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_LEVELS",
    "ForecastEntry",
    "ForecastFrame",
    "Frequency",
    "Series",
    "SeriesPanel",
    "frames_to_csv",
    "future_grid",
    "infer_frequency",
    "parse_panel",
    "train_test_split",
    "__version__",
]
