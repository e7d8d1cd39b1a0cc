"""Model resolution and the remote-forecaster wire protocol (v1).

A model is requested by a spec string: a bare registry alias, an
"adapter:<url>" pointing at a forecast server, or
"median_ensemble:a+b+c" combining other specs.  Remote models are
called with one JSON request per series (POST {base}/forecast) and
their responses validated against the requested horizon and levels.
A threaded stub server mirroring any builtin model backs the tests.

Wire format, request:  {"id", "freq", "ds", "y", "h", "levels"}
           response:   {"model", "mean", "quantiles"?, "elapsed_ms"}
Numbers travel as JSON decimals with at most 12 significant digits;
timestamps as ISO-8601 text.
"""

from __future__ import annotations

import json
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
from collections import deque
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    ProtocolError,
    RequestError,
    TransportError,
    UnknownModelError,
)
from .ensemble import EnsembleForecaster
from .models import MODEL_REGISTRY, get_model
from .panel import (
    DEFAULT_LEVELS,
    ForecastEntry,
    ForecastFrame,
    Frequency,
    Series,
    SeriesPanel,
    format_timestamp,
    future_grid,
    parse_timestamp,
)

DEFAULT_TIMEOUT_S = 30.0
DEFAULT_MAX_RETRIES = 2
DEFAULT_BACKOFF_MS = 250.0


@dataclass(frozen=True)
class ModelSpec:
    alias: str
    kind: str  # builtin | adapter | ensemble
    url: str | None = None
    timeout: float = DEFAULT_TIMEOUT_S
    max_retries: int = DEFAULT_MAX_RETRIES
    backoff_ms: float = DEFAULT_BACKOFF_MS
    members: tuple["ModelSpec", ...] = ()
    params: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.kind not in ("builtin", "adapter", "ensemble"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


def parse_model_alias(spec: str, **adapter_overrides) -> ModelSpec:
    """Parse a model spec string into a ModelSpec tree."""
    spec = spec.strip()
    if not spec:
        raise ConfigError("empty model spec")
    if spec.startswith("adapter:"):
        url = spec[len("adapter:"):]
        parsed = urllib.parse.urlparse(url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ConfigError(f"malformed adapter URL {url!r}")
        return ModelSpec(alias=spec, kind="adapter", url=url.rstrip("/"), **adapter_overrides)
    if spec.startswith("median_ensemble:"):
        body = spec[len("median_ensemble:"):]
        names = [part for part in body.split("+") if part]
        if not names:
            raise ConfigError(f"ensemble spec {spec!r} names no members")
        members = []
        for name in names:
            if name.startswith("median_ensemble:"):
                raise ConfigError("nested ensembles are not supported")
            members.append(parse_model_alias(name, **adapter_overrides))
        return ModelSpec(alias=spec, kind="ensemble", members=tuple(members))
    if spec not in MODEL_REGISTRY:
        known = ", ".join(MODEL_REGISTRY)
        raise UnknownModelError(f"unknown model {spec!r} (known: {known})")
    return ModelSpec(alias=spec, kind="builtin")


def resolve_model(spec: ModelSpec | str, **adapter_overrides):
    """Turn a spec (or spec string) into a ready forecaster object."""
    if isinstance(spec, str):
        spec = parse_model_alias(spec, **adapter_overrides)
    if spec.kind == "builtin":
        return get_model(spec.alias)
    if spec.kind == "adapter":
        return RemoteForecaster(spec)
    return EnsembleForecaster([resolve_model(m) for m in spec.members])


def _round12(x: float) -> float:
    return float(f"{float(x):.12g}")


def _level_key(level: float) -> str:
    return f"{level:g}"


def _post_json(url: str, payload: dict, timeout: float) -> dict:
    body = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(
        url, data=body, headers={"Content-Type": "application/json"}, method="POST"
    )
    with urllib.request.urlopen(request, timeout=timeout) as response:
        return json.loads(response.read().decode("utf-8"))


def _request_with_retries(spec: ModelSpec, payload: dict) -> dict:
    """POST to the adapter; retry transport errors and 5xx, never 4xx."""
    url = f"{spec.url}/forecast"
    attempts = spec.max_retries + 1
    last_error = None
    for attempt in range(attempts):
        try:
            return _post_json(url, payload, spec.timeout)
        except urllib.error.HTTPError as exc:
            if 400 <= exc.code < 500:
                detail = ""
                try:
                    detail = json.loads(exc.read().decode("utf-8")).get("error", "")
                except Exception:
                    pass
                raise RequestError(
                    f"adapter rejected the request (HTTP {exc.code}): {detail}"
                ) from None
            last_error = f"HTTP {exc.code}"
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            last_error = str(exc)
        if attempt < attempts - 1:
            time.sleep(spec.backoff_ms * (2.0**attempt) / 1000.0)
    raise TransportError(
        f"adapter {spec.url} unreachable after {attempts} attempts: {last_error}"
    )


def _validate_response(data: dict, h: int, levels, key: str):
    if not isinstance(data, dict) or "mean" not in data:
        raise ProtocolError(f"adapter response for {key!r} lacks a 'mean' field")
    mean = data["mean"]
    if not isinstance(mean, list) or len(mean) != h:
        got = len(mean) if isinstance(mean, list) else type(mean).__name__
        raise ProtocolError(f"expected {h} mean values for {key!r}, got {got}")
    quantiles = None
    if levels is not None:
        raw = data.get("quantiles")
        if not isinstance(raw, dict):
            raise ProtocolError(
                f"expected quantiles for {len(levels)} levels for {key!r}, got none"
            )
        columns = []
        for level in levels:
            col = raw.get(_level_key(level))
            if not isinstance(col, list) or len(col) != h:
                got = len(col) if isinstance(col, list) else "missing"
                raise ProtocolError(
                    f"expected {h} values at level {level:g} for {key!r}, got {got}"
                )
            columns.append(col)
        quantiles = np.array(columns, dtype=float).T
    return np.asarray(mean, dtype=float), quantiles


def remote_forecast(
    spec: ModelSpec,
    panel: SeriesPanel,
    h: int,
    levels: Sequence[float] | None = DEFAULT_LEVELS,
) -> ForecastFrame:
    """Forecast every series in the panel through the adapter protocol."""
    if spec.kind != "adapter":
        raise ValueError(f"remote_forecast needs an adapter spec, got {spec.kind!r}")
    if h < 1:
        raise ValueError(f"horizon must be >= 1, got {h}")
    levels = tuple(levels) if levels is not None else None
    entries = {}
    for key, series in panel.items():
        payload = {
            "id": key,
            "freq": panel.freq.unit,
            "ds": [format_timestamp(ts) for ts in series.timestamps],
            "y": [_round12(v) for v in series.values],
            "h": h,
            "levels": [float(lv) for lv in (levels or ())],
        }
        data = _request_with_retries(spec, payload)
        mean, quantiles = _validate_response(data, h, levels, key)
        timestamps = tuple(future_grid(series.timestamps[-1], panel.freq, h))
        entries[key] = ForecastEntry(timestamps, mean, quantiles, False)
    return ForecastFrame(spec.alias, entries, levels)


class RemoteForecaster:
    """Forecaster-shaped wrapper over remote_forecast."""

    supports_quantiles = True

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.name = spec.alias

    def forecast(self, panel, h, levels=DEFAULT_LEVELS):
        return remote_forecast(self.spec, panel, h, levels)


class _StubState:
    def __init__(self, alias: str):
        self.alias = alias
        self.lock = threading.Lock()
        self.requests = 0
        self.failures: deque[int] = deque()
        self.delay_s = 0.0


class _StubHandler(BaseHTTPRequestHandler):
    state: _StubState  # set by the server factory

    def log_message(self, *args):
        pass

    def _send(self, code: int, payload: dict):
        body = json.dumps(payload).encode("utf-8")
        try:
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
        except OSError:
            pass  # client gave up (e.g. timed out); nothing to answer

    def do_GET(self):
        state = self.state
        with state.lock:
            state.requests += 1
        if self.path == "/health":
            self._send(200, {"status": "ok", "model": state.alias})
        else:
            self._send(404, {"error": f"no such path {self.path}"})

    def do_POST(self):
        state = self.state
        with state.lock:
            state.requests += 1
            injected = state.failures.popleft() if state.failures else None
            delay = state.delay_s
        if delay:
            time.sleep(delay)
        if injected is not None:
            self._send(injected, {"error": "injected failure"})
            return
        if self.path != "/forecast":
            self._send(404, {"error": f"no such path {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            data = json.loads(self.rfile.read(length).decode("utf-8"))
            response = _stub_forecast(state.alias, data)
        except Exception as exc:
            self._send(400, {"error": str(exc)})
            return
        self._send(200, response)


def _stub_forecast(alias: str, data: dict) -> dict:
    started = time.monotonic()
    for field_name in ("id", "freq", "ds", "y", "h"):
        if field_name not in data:
            raise ValueError(f"request lacks required field {field_name!r}")
    timestamps = tuple(parse_timestamp(ts) for ts in data["ds"])
    values = np.asarray(data["y"], dtype=float)
    if len(timestamps) != len(values):
        raise ValueError("ds and y lengths differ")
    freq = Frequency(data["freq"])
    panel = SeriesPanel({data["id"]: Series(timestamps, values)}, freq)
    levels = tuple(float(lv) for lv in data.get("levels") or ()) or None
    frame = get_model(alias).forecast(panel, int(data["h"]), levels)
    entry = frame[data["id"]]
    response = {
        "model": alias,
        "mean": [_round12(v) for v in entry.mean],
        "elapsed_ms": int((time.monotonic() - started) * 1000.0),
    }
    if frame.levels is not None:
        response["quantiles"] = {
            _level_key(level): [_round12(v) for v in entry.quantiles[:, j]]
            for j, level in enumerate(frame.levels)
        }
    return response


class _QuietServer(ThreadingHTTPServer):
    daemon_threads = True

    def handle_error(self, request, client_address):
        pass  # dropped connections are expected in the timeout tests


@dataclass
class StubServer:
    """Handle on a running stub; close() releases the port."""

    server: ThreadingHTTPServer
    thread: threading.Thread
    state: _StubState = field(repr=False)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    @property
    def request_count(self) -> int:
        with self.state.lock:
            return self.state.requests

    def inject_failures(self, statuses: Sequence[int]) -> None:
        with self.state.lock:
            self.state.failures.extend(statuses)

    def set_delay(self, seconds: float) -> None:
        with self.state.lock:
            self.state.delay_s = seconds

    def close(self) -> None:
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5.0)


def serve_stub(host: str = "127.0.0.1", port: int = 0, alias: str = "seasonalnaive") -> StubServer:
    """Start a threaded stub mirroring a builtin model; port 0 picks a free one."""
    if alias not in MODEL_REGISTRY:
        known = ", ".join(MODEL_REGISTRY)
        raise UnknownModelError(f"unknown model {alias!r} (known: {known})")
    state = _StubState(alias)
    handler = type("BoundStubHandler", (_StubHandler,), {"state": state})
    server = _QuietServer((host, port), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return StubServer(server=server, thread=thread, state=state)
