"""Bundled example data."""

from importlib import resources

from .panel import SeriesPanel, parse_panel


def load_air_passengers() -> SeriesPanel:
    """Monthly international airline passenger totals, 1949-1960 (144 points)."""
    ref = resources.files("agentcast").joinpath("data/air_passengers.csv")
    with ref.open("r") as fp:
        return parse_panel(fp)
