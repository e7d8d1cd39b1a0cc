"""Stepwise seasonal ARIMA fitted by conditional sum of squares.

Differencing orders come first: one seasonal difference when the
seasonal strength is high, then regular differences while the KPSS
test keeps rejecting level stationarity (d <= 2).  A stepwise search
over small (p,q)(P,Q) orders fits each candidate by Nelder-Mead on the
conditional sum of squares and scores it with AICc; non-stationary or
non-invertible fits are skipped.  Forecast variance accumulates
psi-weights of the fitted (integrated) lag polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from ..errors import InsufficientDataError
from ..features import decompose, kpss_statistic, seasonal_strength
from .base import Forecaster, gaussian_quantiles

MAX_PQ = 3
MAX_D = 2
SEASONAL_STRENGTH_D = 0.64
SIGMA2_FLOOR = 1e-10
ROOT_MARGIN = 1e-6


@dataclass(frozen=True)
class ARIMAOrder:
    p: int
    d: int
    q: int
    P: int
    D: int
    Q: int
    m: int
    ar: tuple[float, ...]
    ma: tuple[float, ...]
    seasonal_ar: tuple[float, ...]
    seasonal_ma: tuple[float, ...]
    intercept: float | None
    sigma2: float
    aicc: float

    def __post_init__(self):
        if not (0 <= self.p <= MAX_PQ and 0 <= self.q <= MAX_PQ):
            raise ValueError(f"p,q must lie in 0..{MAX_PQ}")
        if not 0 <= self.d <= MAX_D:
            raise ValueError(f"d must lie in 0..{MAX_D}")
        if not (self.P in (0, 1) and self.D in (0, 1) and self.Q in (0, 1)):
            raise ValueError("seasonal orders must be 0 or 1")

    @property
    def label(self) -> str:
        return _order_label(self.p, self.d, self.q, self.P, self.D, self.Q, self.m)


@dataclass(frozen=True)
class ARIMAFit:
    order: ARIMAOrder
    ar_poly: np.ndarray
    ma_poly: np.ndarray
    residuals: np.ndarray
    w: np.ndarray
    chain: tuple[np.ndarray, ...]
    history: np.ndarray
    candidates: tuple[tuple[str, float], ...]


def _order_label(p, d, q, P, D, Q, m) -> str:
    base = f"ARIMA({p},{d},{q})"
    if m > 1 and (P or D or Q):
        base += f"({P},{D},{Q})[{m}]"
    return base


def _seasonal_poly(coeffs: np.ndarray, m: int, sign: float) -> np.ndarray:
    """[1, 0, ..., sign*c1 at lag m, ...]; sign -1 for AR, +1 for MA."""
    poly = np.zeros(len(coeffs) * m + 1)
    poly[0] = 1.0
    for i, c in enumerate(coeffs):
        poly[(i + 1) * m] = sign * c
    return poly


def _lag_polys(params, p, q, P, Q, m):
    ar = params[:p]
    ma = params[p : p + q]
    sar = params[p + q : p + q + P]
    sma = params[p + q + P : p + q + P + Q]
    ar_poly = np.r_[1.0, -ar]
    if P:
        ar_poly = np.polymul(ar_poly, _seasonal_poly(sar, m, -1.0))
    ma_poly = np.r_[1.0, ma]
    if Q:
        ma_poly = np.polymul(ma_poly, _seasonal_poly(sma, m, 1.0))
    return ar, ma, sar, sma, ar_poly, ma_poly


def _css_residuals(w, ar_poly, ma_poly, c):
    z = lfilter(ar_poly, [1.0], w) - c
    return lfilter([1.0], ma_poly, z)


def _roots_outside(poly: np.ndarray) -> bool:
    if len(poly) <= 1:
        return True
    roots = np.roots(poly[::-1])
    if roots.size == 0:
        return True
    return bool(np.all(np.abs(roots) > 1.0 + ROOT_MARGIN))


def _fit_candidate(w, p, q, P, Q, m, use_intercept):
    """CSS fit of one order; returns None when invalid or not estimable."""
    n_coef = p + q + P + Q + (1 if use_intercept else 0)
    burn = p + m * P
    n_eff = len(w) - burn
    if n_eff <= n_coef + 2:
        return None

    def objective(params):
        c = params[-1] if use_intercept else 0.0
        _, _, _, _, ar_poly, ma_poly = _lag_polys(params, p, q, P, Q, m)
        with np.errstate(over="ignore", invalid="ignore"):
            eps = _css_residuals(w, ar_poly, ma_poly, c)
            css = float(np.sum(eps[burn:] ** 2))
        return css if np.isfinite(css) else 1e300

    x0 = np.zeros(n_coef)
    if use_intercept:
        x0[-1] = w.mean()
    if n_coef:
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"maxiter": 2000, "xatol": 1e-6, "fatol": 1e-10})
        params = res.x
    else:
        params = x0
    c = params[-1] if use_intercept else 0.0
    ar, ma, sar, sma, ar_poly, ma_poly = _lag_polys(params, p, q, P, Q, m)
    if not (_roots_outside(ar_poly) and _roots_outside(ma_poly)):
        return None
    eps = _css_residuals(w, ar_poly, ma_poly, c)
    css = float(np.sum(eps[burn:] ** 2))
    if not np.isfinite(css):
        return None
    sigma2 = max(css / n_eff, SIGMA2_FLOOR)
    k = n_coef + 1  # plus the innovation variance
    if n_eff - k - 1 <= 0:
        return None
    loglik = -0.5 * n_eff * (np.log(2.0 * np.pi * sigma2) + 1.0)
    aicc = -2.0 * loglik + 2.0 * k + 2.0 * k * (k + 1) / (n_eff - k - 1)
    return {
        "aicc": aicc, "sigma2": sigma2, "c": c if use_intercept else None,
        "ar": ar, "ma": ma, "sar": sar, "sma": sma,
        "ar_poly": ar_poly, "ma_poly": ma_poly, "eps": eps,
    }


def differencing_orders(y: np.ndarray, m: int) -> tuple[int, int]:
    """(d, D): one seasonal difference when seasonal strength >= 0.64,
    then regular differences while KPSS rejects level stationarity."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    seasonal_ok = m > 1 and n >= 3 * m
    D = 0
    if seasonal_ok and seasonal_strength(decompose(y, m)) >= SEASONAL_STRENGTH_D:
        D = 1
    w = y[m:] - y[:-m] if D else y
    d = 0
    while d < MAX_D and not kpss_statistic(w)[1]:
        w = np.diff(w)
        d += 1
    return d, D


def arima_fit(y: np.ndarray, m: int) -> ARIMAFit:
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 20:
        raise InsufficientDataError(
            f"auto ARIMA needs at least 20 observations, got {n}"
        )
    seasonal_ok = m > 1 and n >= 3 * m
    d, D = differencing_orders(y, m)
    u = y[m:] - y[:-m] if D else y
    w = np.diff(u, n=d) if d else u

    # the chain of partially differenced series, for integrating forecasts
    chain = [u]
    for _ in range(d):
        chain.append(np.diff(chain[-1]))
    use_intercept = (d + D) == 0

    start = [(2, 2, 1, 1), (0, 0, 0, 0), (1, 0, 1, 0), (0, 1, 0, 1)]
    if not seasonal_ok:
        start = [(p, q, 0, 0) for (p, q, _, _) in start]
    seen: dict[tuple[int, int, int, int], dict | None] = {}

    def evaluate(order):
        p, q, P, Q = order
        if not (0 <= p <= MAX_PQ and 0 <= q <= MAX_PQ):
            return None
        if not (0 <= P <= (1 if seasonal_ok else 0) and 0 <= Q <= (1 if seasonal_ok else 0)):
            return None
        if order not in seen:
            seen[order] = _fit_candidate(w, p, q, P, Q, m, use_intercept)
        return seen[order]

    best_order, best = None, None
    for order in dict.fromkeys(start):
        fit = evaluate(order)
        if fit and (best is None or fit["aicc"] < best["aicc"]):
            best_order, best = order, fit
    if best is None:
        raise RuntimeError("no valid ARIMA candidate")

    for _ in range(25):
        p, q, P, Q = best_order
        moves = [
            (p + 1, q, P, Q), (p - 1, q, P, Q),
            (p, q + 1, P, Q), (p, q - 1, P, Q),
            (p, q, P + 1, Q), (p, q, P - 1, Q),
            (p, q, P, Q + 1), (p, q, P, Q - 1),
        ]
        improved = False
        for order in moves:
            fit = evaluate(order)
            if fit and fit["aicc"] < best["aicc"] - 1e-12:
                best_order, best = order, fit
                improved = True
        if not improved:
            break

    p, q, P, Q = best_order
    order = ARIMAOrder(
        p=p, d=d, q=q, P=P, D=D, Q=Q, m=m,
        ar=tuple(best["ar"]), ma=tuple(best["ma"]),
        seasonal_ar=tuple(best["sar"]), seasonal_ma=tuple(best["sma"]),
        intercept=best["c"], sigma2=best["sigma2"], aicc=best["aicc"],
    )
    candidates = tuple(
        (_order_label(o[0], d, o[1], o[2], D, o[3], m), f["aicc"] if f else np.inf)
        for o, f in seen.items()
    )
    return ARIMAFit(
        order=order,
        ar_poly=best["ar_poly"],
        ma_poly=best["ma_poly"],
        residuals=best["eps"],
        w=w,
        chain=tuple(chain),
        history=y,
        candidates=candidates,
    )


def _difference_poly(d: int, D: int, m: int) -> np.ndarray:
    poly = np.array([1.0])
    for _ in range(d):
        poly = np.polymul(poly, [1.0, -1.0])
    for _ in range(D):
        poly = np.polymul(poly, _seasonal_poly(np.array([1.0]), m, -1.0))
    return poly


def forecast_arima(fit: ARIMAFit, h: int, levels=None):
    """Mean by lag recursion, variance by psi-weight accumulation."""
    order = fit.order
    c = order.intercept or 0.0
    ar_poly, ma_poly = fit.ar_poly, fit.ma_poly
    w_ext = list(fit.w)
    eps_ext = list(fit.residuals)
    n_ar, n_ma = len(ar_poly) - 1, len(ma_poly) - 1
    for _ in range(h):
        val = c
        for i in range(1, n_ar + 1):
            val -= ar_poly[i] * w_ext[-i]
        for j in range(1, min(n_ma, len(eps_ext)) + 1):
            val += ma_poly[j] * eps_ext[-j]
        w_ext.append(val)
        eps_ext.append(0.0)  # future innovations are zero
    w_fore = np.array(w_ext[len(fit.w):])

    # integrate the regular differences back through the chain
    fore = w_fore
    for series in reversed(fit.chain[:-1]):
        fore = np.cumsum(fore) + series[-1]
    # then the seasonal difference against the original history
    if order.D:
        hist = list(fit.history)
        out = []
        for k in range(h):
            out.append(fore[k] + hist[-order.m])
            hist.append(out[-1])
        fore = np.array(out)

    if levels is None:
        return fore, None
    full_ar = np.polymul(ar_poly, _difference_poly(order.d, order.D, order.m))
    impulse = np.zeros(h)
    impulse[0] = 1.0
    psi = lfilter(ma_poly, full_ar, impulse)
    var = order.sigma2 * np.cumsum(psi**2)
    return fore, gaussian_quantiles(fore, np.sqrt(var), levels)


class AutoARIMA(Forecaster):
    name = "autoarima"
    fallback_to_naive = True

    def _forecast_series(self, y, m, h, levels):
        fit = arima_fit(y, m)
        return forecast_arima(fit, h, levels)
