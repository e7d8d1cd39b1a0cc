"""Additive exponential smoothing with automatic structure selection.

Candidate space is additive error x trend {N, A, Ad} x season {N, A},
seasonal structures only when the series holds two full periods.  Each
candidate's smoothing parameters are fitted by a coarse 0.1 grid over
the admissible region followed by 0.01 coordinate descent, scored by
AICc (Gaussian likelihood of the one-step residuals, k = free
parameters + initial states), lowest wins.  Quantiles come from seeded
simulation of future sample paths with Gaussian innovations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError
from ..features import decompose
from .base import Forecaster

TRENDS = ("N", "A", "Ad")
SEASONS = ("N", "A")
PHI_BOUNDS = (0.8, 0.98)
ALPHA_BOUNDS = (0.01, 0.99)
SIGMA2_FLOOR = 1e-10
N_SIM_PATHS = 1000
SIM_SEED = 12345
MIN_OBS = 10


@dataclass(frozen=True)
class ETSParams:
    """Fitted structure, smoothing weights and initial states."""

    trend: str
    season: str
    alpha: float
    beta: float | None
    gamma: float | None
    phi: float | None
    initial_level: float
    initial_slope: float | None
    initial_seasonal: tuple[float, ...] | None
    sigma: float
    aicc: float

    def __post_init__(self):
        if self.trend not in TRENDS or self.season not in SEASONS:
            raise ValueError(f"unknown structure ({self.trend},{self.season})")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha out of [0,1]: {self.alpha}")
        if self.beta is not None and not 0.0 <= self.beta <= self.alpha:
            raise ValueError(f"beta must lie in [0, alpha], got {self.beta}")
        if self.gamma is not None and not 0.0 <= self.gamma <= 1.0 - self.alpha:
            raise ValueError(f"gamma must lie in [0, 1-alpha], got {self.gamma}")
        if self.phi is not None and not PHI_BOUNDS[0] <= self.phi <= PHI_BOUNDS[1]:
            raise ValueError(f"phi out of {PHI_BOUNDS}: {self.phi}")
        if self.initial_seasonal is not None:
            scale = max(1.0, max(abs(s) for s in self.initial_seasonal))
            if abs(sum(self.initial_seasonal)) > 1e-6 * scale:
                raise ValueError("initial seasonal states must sum to 0")

    @property
    def label(self) -> str:
        return f"ETS(A,{self.trend},{self.season})"


@dataclass(frozen=True)
class ETSFit:
    """Selected model plus everything needed to forecast from it."""

    params: ETSParams
    final_level: float
    final_slope: float
    final_seasonal: np.ndarray
    n_obs: int
    candidates: tuple[tuple[str, float], ...]

    def forecast_mean(self, h: int) -> np.ndarray:
        p = self.params
        k = np.arange(1, h + 1, dtype=float)
        if p.trend == "N":
            growth = np.zeros(h)
        elif p.trend == "A":
            growth = k * self.final_slope
        else:
            growth = np.cumsum(p.phi**k) * self.final_slope
        mean = self.final_level + growth
        if p.season == "A":
            m = len(self.final_seasonal)
            mean = mean + self.final_seasonal[(self.n_obs + np.arange(h)) % m]
        return mean

    def simulate_quantiles(
        self,
        h: int,
        levels: tuple[float, ...],
        n_paths: int = N_SIM_PATHS,
        seed: int = SIM_SEED,
    ) -> np.ndarray:
        """Empirical per-step quantiles of seeded Gaussian sample paths."""
        p = self.params
        m = len(self.final_seasonal)
        rng = np.random.default_rng(seed)
        level = np.full(n_paths, self.final_level)
        slope = np.full(n_paths, self.final_slope)
        seasonal = np.tile(self.final_seasonal, (n_paths, 1))
        alpha = p.alpha
        beta = p.beta or 0.0
        gamma = p.gamma or 0.0
        phi = {"N": 0.0, "A": 1.0, "Ad": p.phi}[p.trend]
        paths = np.empty((n_paths, h))
        for k in range(h):
            slot = (self.n_obs + k) % m
            point = level + phi * slope + seasonal[:, slot]
            eps = rng.normal(0.0, p.sigma, n_paths)
            paths[:, k] = point + eps
            level = level + phi * slope + alpha * eps
            slope = phi * slope + beta * eps
            seasonal[:, slot] = seasonal[:, slot] + gamma * eps
        return np.quantile(paths, levels, axis=0).T


def _initial_states(y: np.ndarray, m: int, seasonal: bool) -> tuple[float, float, np.ndarray]:
    """Heuristic starting states: first-period level, period-mean slope,
    decomposition seasonal pattern."""
    n = len(y)
    if seasonal:
        s0 = decompose(y, m).seasonal[:m].copy()
        level = float(y[:m].mean())
    else:
        s0 = np.zeros(max(m, 1))
        level = float(y[:m].mean()) if m > 1 else float(y[0])
    if m > 1 and n >= 2 * m:
        period_means = y[: (n // m) * m].reshape(-1, m).mean(axis=1)
        slope = float(np.diff(period_means).mean() / m)
    else:
        slope = float(np.diff(y).mean()) if n >= 2 else 0.0
    return level, slope, s0


def _sse_batch(
    y: np.ndarray,
    trend: str,
    season: str,
    alphas: np.ndarray,
    betas: np.ndarray,
    gammas: np.ndarray,
    phis: np.ndarray,
    init: tuple[float, float, np.ndarray],
) -> np.ndarray:
    """One-step in-sample SSE for a batch of parameter combinations."""
    level0, slope0, s0 = init
    c = len(alphas)
    level = np.full(c, level0)
    slope = np.full(c, slope0 if trend != "N" else 0.0)
    seasonal = np.tile(s0, (c, 1))
    phi = phis if trend == "Ad" else np.full(c, 1.0 if trend == "A" else 0.0)
    beta = betas if trend != "N" else np.zeros(c)
    gamma = gammas if season == "A" else np.zeros(c)
    m_buf = seasonal.shape[1]
    sse = np.zeros(c)
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(len(y)):
            slot = t % m_buf
            e = y[t] - (level + phi * slope + seasonal[:, slot])
            sse += e * e
            level = level + phi * slope + alphas * e
            slope = phi * slope + beta * e
            seasonal[:, slot] = seasonal[:, slot] + gamma * e
    sse[~np.isfinite(sse)] = np.inf
    return sse


def _coarse_grid(trend: str, season: str) -> list[tuple[float, float, float, float]]:
    alphas = [round(0.1 * i, 2) for i in range(1, 10)]
    combos = []
    for a in alphas:
        if trend != "N":
            bs = [round(0.1 * i, 2) for i in range(0, 10) if 0.1 * i <= a + 1e-9]
        else:
            bs = [0.0]
        if season == "A":
            gs = [round(0.1 * i, 2) for i in range(0, 10) if 0.1 * i <= 1.0 - a + 1e-9]
        else:
            gs = [0.0]
        ps = [0.8, 0.9, 0.98] if trend == "Ad" else [0.0]
        for b in bs:
            for g in gs:
                for p in ps:
                    combos.append((a, b, g, p))
    return combos


def _clamp_combo(trend, season, a, b, g, p):
    a = min(max(a, ALPHA_BOUNDS[0]), ALPHA_BOUNDS[1])
    b = min(max(b, 0.0), a) if trend != "N" else 0.0
    g = min(max(g, 0.0), 1.0 - a) if season == "A" else 0.0
    p = min(max(p, PHI_BOUNDS[0]), PHI_BOUNDS[1]) if trend == "Ad" else 0.0
    return a, b, g, p


def _refine(y, trend, season, init, combo, sse):
    """Steepest coordinate descent with 0.01 steps around the coarse winner."""
    free = [0]
    if trend != "N":
        free.append(1)
    if season == "A":
        free.append(2)
    if trend == "Ad":
        free.append(3)
    best = tuple(combo)
    best_sse = sse
    for _ in range(500):
        trials = []
        for idx in free:
            for step in (0.01, -0.01):
                trial = list(best)
                trial[idx] = round(trial[idx] + step, 10)
                trial = _clamp_combo(trend, season, *trial)
                if trial != best and trial not in trials:
                    trials.append(trial)
        if not trials:
            break
        arr = np.asarray(trials)
        sses = _sse_batch(
            y, trend, season, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], init
        )
        i = int(np.argmin(sses))
        if sses[i] < best_sse - 1e-12:
            best, best_sse = trials[i], float(sses[i])
        else:
            break
    return best, best_sse


def _aicc(sse: float, n: int, k: int) -> float:
    if not np.isfinite(sse) or n - k - 1 <= 0:
        return np.inf
    sigma2 = max(sse / n, SIGMA2_FLOOR)
    loglik = -0.5 * n * (np.log(2.0 * np.pi * sigma2) + 1.0)
    return -2.0 * loglik + 2.0 * k + 2.0 * k * (k + 1) / (n - k - 1)


def _final_states(y, trend, season, combo, init):
    """Rerun the winning recursion once to capture end-of-sample states."""
    a, b, g, p = combo
    level = init[0]
    slope = init[1] if trend != "N" else 0.0
    seasonal = init[2].copy()
    phi = p if trend == "Ad" else (1.0 if trend == "A" else 0.0)
    beta = b if trend != "N" else 0.0
    gamma = g if season == "A" else 0.0
    m_buf = len(seasonal)
    sse = 0.0
    for t in range(len(y)):
        slot = t % m_buf
        e = y[t] - (level + phi * slope + seasonal[slot])
        sse += e * e
        level = level + phi * slope + a * e
        slope = phi * slope + beta * e
        seasonal[slot] = seasonal[slot] + gamma * e
    return level, slope, seasonal, sse


def _param_count(trend: str, season: str, m: int) -> int:
    smoothing = 1 + (trend != "N") + (season == "A") + (trend == "Ad")
    states = 1 + (trend != "N") + (m if season == "A" else 0)
    return smoothing + states


def ets_fit(y: np.ndarray, m: int) -> ETSFit:
    """Fit every admissible structure and keep the lowest-AICc one."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < MIN_OBS:
        raise InsufficientDataError(
            f"auto ETS needs at least {MIN_OBS} observations, got {n}"
        )
    allow_seasonal = m > 1 and n >= 2 * m
    results = []
    candidates = []
    for trend in TRENDS:
        for season in SEASONS:
            if season == "A" and not allow_seasonal:
                continue
            label = f"ETS(A,{trend},{season})"
            init = _initial_states(y, m, season == "A")
            combos = _coarse_grid(trend, season)
            arr = np.asarray(combos)
            sses = _sse_batch(
                y, trend, season, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], init
            )
            best_i = int(np.argmin(sses))
            if not np.isfinite(sses[best_i]):
                candidates.append((label, np.inf))
                continue
            combo, sse = _refine(y, trend, season, init, combos[best_i], sses[best_i])
            aicc = _aicc(sse, n, _param_count(trend, season, m))
            candidates.append((label, aicc))
            if np.isfinite(aicc):
                results.append((aicc, trend, season, combo, init))
    if not results:
        raise InsufficientDataError("no ETS candidate produced a finite likelihood")
    aicc, trend, season, combo, init = min(results, key=lambda r: r[0])
    level, slope, seasonal, sse = _final_states(y, trend, season, combo, init)
    sigma = float(np.sqrt(max(sse / n, SIGMA2_FLOOR)))
    params = ETSParams(
        trend=trend,
        season=season,
        alpha=combo[0],
        beta=combo[1] if trend != "N" else None,
        gamma=combo[2] if season == "A" else None,
        phi=combo[3] if trend == "Ad" else None,
        initial_level=init[0],
        initial_slope=init[1] if trend != "N" else None,
        initial_seasonal=tuple(init[2]) if season == "A" else None,
        sigma=sigma,
        aicc=float(aicc),
    )
    return ETSFit(
        params=params,
        final_level=float(level),
        final_slope=float(slope),
        final_seasonal=np.asarray(seasonal, dtype=float),
        n_obs=n,
        candidates=tuple(candidates),
    )


class AutoETS(Forecaster):
    name = "autoets"
    fallback_to_naive = True

    def _forecast_series(self, y, m, h, levels):
        fit = ets_fit(y, m)
        mean = fit.forecast_mean(h)
        quantiles = fit.simulate_quantiles(h, levels) if levels is not None else None
        return mean, quantiles
