import io

import numpy as np
import pytest

from agentcast.datasets import load_air_passengers
from agentcast.panel import Frequency, Series, SeriesPanel, parse_panel


@pytest.fixture(scope="session")
def air_passengers():
    return load_air_passengers()


@pytest.fixture(scope="session")
def air_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "air.csv"
    load_air_passengers().to_csv(str(path))
    return str(path)


@pytest.fixture()
def monthly_panel_csv():
    return (
        "unique_id,ds,y\n"
        "a,2020-01-01,1.0\n"
        "b,2020-01-01,10.0\n"
        "a,2020-02-01,2.0\n"
        "b,2020-02-01,20.0\n"
        "a,2020-03-01,3.0\n"
        "b,2020-03-01,30.0\n"
        "a,2020-04-01,4.0\n"
        "b,2020-04-01,40.0\n"
    )


def make_panel(values_by_key, unit="M", start=(2015, 1, 1)):
    """Build a panel from plain value lists on a regular grid."""
    from datetime import datetime

    from agentcast.panel import future_grid

    freq = Frequency(unit)
    anchor = datetime(*start)
    series = {}
    for key, values in values_by_key.items():
        ts = [anchor] + future_grid(anchor, freq, len(values) - 1) if len(values) > 1 else [anchor]
        series[key] = Series(tuple(ts), np.asarray(values, dtype=float))
    return SeriesPanel(series, freq)


@pytest.fixture()
def make_monthly_panel():
    return make_panel


def parse_csv_text(text, **kwargs):
    return parse_panel(io.StringIO(text), **kwargs)
