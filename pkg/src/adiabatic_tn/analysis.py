"""Scaling-model fits over run results.

All fitters are ordinary least squares on linearised models and take their
fit windows explicitly; the chosen window is echoed in every result.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "BracketError",
    "DecayFit",
    "ErrorDensityFit",
    "FitError",
    "FidelitySearch",
    "PowerLawFit",
    "crossover_size",
    "fit_error_density",
    "fit_exponential_decay",
    "fit_power_law",
    "kappa_window",
    "model_time_for_fidelity",
    "time_for_fidelity",
]

log = logging.getLogger(__name__)

CROSSOVER_RANGE = (1.0, 1e9)


class FitError(ValueError):
    """Too few usable points for the requested fit."""


class BracketError(ValueError):
    """The search bounds do not bracket the target fidelity."""

    def __init__(self, lo: float, hi: float, f_lo: float, f_hi: float, target: float) -> None:
        super().__init__(
            f"F(T={lo:g})={f_lo:.6g} and F(T={hi:g})={f_hi:.6g} do not bracket target {target:g}"
        )
        self.bounds = (lo, hi)
        self.fidelities = (f_lo, f_hi)


def _line(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


@dataclass(frozen=True)
class ErrorDensityFit:
    T: float
    kappa: float
    c: float
    residual: float
    relative_residual: float
    n_points: int


def fit_error_density(points: Sequence[tuple[float, float]], T: float) -> ErrorDensityFit:
    """Fit ``F = exp(-kappa N - c)`` at fixed ``T``.

    ``residual`` is the largest absolute deviation of ``-ln F`` from the
    line; ``relative_residual`` divides it by the largest ``-ln F``.
    """
    kept = []
    for n, f in points:
        if not 0.0 < f <= 1.0 + 1e-9:
            log.warning("dropping point N=%g with fidelity %g", n, f)
            continue
        kept.append((float(n), -math.log(min(f, 1.0))))
    if len({n for n, _ in kept}) < 3:
        raise FitError(f"error-density fit needs >= 3 distinct N, got {len(kept)} usable points")
    x, y = np.array(kept).T
    kappa, c = _line(x, y)
    dev = np.abs(y - (kappa * x + c))
    res = float(dev.max())
    scale = float(np.abs(y).max())
    rel = res / scale if scale > 0 else 0.0
    return ErrorDensityFit(float(T), kappa, c, res, rel, len(kept))


@dataclass(frozen=True)
class DecayFit:
    kappa0: float
    gamma: float
    fit_window: tuple[float, float]
    r_squared: float
    n_points: int


def fit_exponential_decay(
    points: Sequence[tuple[float, float]], window: tuple[float, float] | None = None
) -> DecayFit:
    """Fit ``kappa(T) = kappa0 exp(-gamma T)`` over ``window`` in ``T``.

    Without a window every point is used and the data range is recorded.
    """
    pts = sorted((float(t), float(k)) for t, k in points)
    if window is None:
        window = (pts[0][0], pts[-1][0]) if pts else (0.0, 0.0)
    lo, hi = window
    sel = []
    for t, k in pts:
        if not lo <= t <= hi:
            continue
        if k <= 0:
            log.warning("dropping nonpositive kappa %g at T=%g", k, t)
            continue
        sel.append((t, math.log(k)))
    if len(sel) < 4:
        raise FitError(f"exponential-decay fit needs >= 4 points in window {window}, got {len(sel)}")
    x, y = np.array(sel).T
    slope, intercept = _line(x, y)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(math.exp(intercept), -slope, (float(lo), float(hi)), r2, len(sel))


def kappa_window(
    points: Sequence[tuple[float, float]], kappa_range: tuple[float, float] = (1e-6, 1e-1)
) -> tuple[float, float]:
    """Smallest ``T`` window covering every point with ``kappa`` in ``kappa_range``.

    This is the default exponential-regime window; pass its result to
    :func:`fit_exponential_decay` so the choice is recorded.
    """
    lo, hi = kappa_range
    ts = [float(t) for t, k in points if lo <= k <= hi]
    if not ts:
        raise FitError(f"no kappa values inside {kappa_range}")
    return min(ts), max(ts)


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    prefactor: float
    tail_window: tuple[float, float]
    residual: float
    high_residual: bool
    n_points: int


def fit_power_law(
    points: Sequence[tuple[float, float]],
    tail_window: tuple[float, float] | None = None,
    residual_flag: float = 0.1,
) -> PowerLawFit:
    """Fit ``1 - F = A T^-alpha`` over ``tail_window``.

    The default window is the last decade of the supplied ``T`` values. A
    tail that is not monotone, or whose max log-deviation from the line
    exceeds ``residual_flag``, is returned with ``high_residual`` set.
    """
    pts = sorted((float(t), float(e)) for t, e in points)
    if not pts:
        raise FitError("power-law fit needs data")
    if tail_window is None:
        t_max = pts[-1][0]
        tail_window = (t_max / 10.0, t_max)
    lo, hi = tail_window
    sel = [(t, e) for t, e in pts if lo <= t <= hi]
    if len(sel) < 4:
        raise FitError(f"power-law fit needs >= 4 points in window {tail_window}, got {len(sel)}")
    if any(e <= 0 for _, e in sel):
        raise FitError("power-law fit needs positive infidelities")
    x = np.log([t for t, _ in sel])
    y = np.log([e for _, e in sel])
    slope, intercept = _line(x, y)
    res = float(np.abs(y - (slope * x + intercept)).max())
    monotone = bool(np.all(np.diff(y) < 0))
    return PowerLawFit(-slope, math.exp(intercept), (float(lo), float(hi)), res, res > residual_flag or not monotone, len(sel))


@dataclass(frozen=True)
class FidelitySearch:
    T: float
    fidelity: float
    evaluations: list[tuple[float, float]]
    converged: bool


def time_for_fidelity(
    final_fidelity: Callable[[float], float],
    target: float,
    bounds: tuple[float, float],
    tol: float = 5e-4,
    max_evals: int = 12,
) -> FidelitySearch:
    """Bisect ``T`` until ``|F(T) - target| < tol``.

    ``final_fidelity`` maps a total time to the final fidelity of one run
    and is assumed nondecreasing on ``bounds``.
    """
    if not 0.0 < target < 1.0:
        raise ValueError(f"target fidelity must lie in (0, 1), got {target}")
    lo, hi = bounds
    if not 0.0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got {bounds}")
    evals: list[tuple[float, float]] = []

    def run(t: float) -> float:
        f = float(final_fidelity(t))
        evals.append((t, f))
        return f

    f_lo, f_hi = run(lo), run(hi)
    if not f_lo <= target <= f_hi:
        raise BracketError(lo, hi, f_lo, f_hi, target)
    for t, f in ((lo, f_lo), (hi, f_hi)):
        if abs(f - target) < tol:
            return FidelitySearch(t, f, evals, True)
    best = min(evals, key=lambda e: abs(e[1] - target))
    while len(evals) < max_evals:
        mid = 0.5 * (lo + hi)
        f = run(mid)
        if abs(f - target) < abs(best[1] - target):
            best = (mid, f)
        if abs(f - target) < tol:
            return FidelitySearch(mid, f, evals, True)
        if f < target:
            lo = mid
        else:
            hi = mid
    log.warning("bisection stopped after %d runs at |F - target| = %.2e", len(evals), abs(best[1] - target))
    return FidelitySearch(best[0], best[1], evals, False)


def _boundary(c: float | Callable[[float], float], t: float) -> float:
    return c(t) if callable(c) else float(c)


def model_time_for_fidelity(
    decay: DecayFit, n: float, target: float, c: float | Callable[[float], float] = 0.0
) -> float:
    """``T`` at which ``exp(-kappa0 e^{-gamma T} N - c(T))`` reaches ``target``.

    With constant ``c`` this is closed form; otherwise it is root-found.
    """
    need = -math.log(target)
    if not callable(c):
        rest = need - c
        if rest <= 0:
            raise ValueError("boundary term alone exceeds the infidelity budget")
        return math.log(decay.kappa0 * n / rest) / decay.gamma

    def excess(t: float) -> float:
        return decay.kappa0 * math.exp(-decay.gamma * t) * n + c(t) - need

    hi = 1.0
    while excess(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("model never reaches the target fidelity")
    return brentq(excess, 0.0, hi, xtol=1e-12) if excess(0.0) > 0 else 0.0


def crossover_size(
    decay: DecayFit, target: float = 0.99, c: float | Callable[[float], float] = 0.0
) -> float:
    """Size ``N_c`` where the model's preparation time equals ``N``.

    Solves ``kappa0 e^{-gamma N} N + c(N) = -ln(target)`` for the largest
    root in ``[1, 1e9]``. Returns ``inf`` if the model never reaches the
    target within that range and ``1`` if it beats ``T = N`` everywhere.
    """
    need = -math.log(target)

    def excess(n: float) -> float:
        return decay.kappa0 * math.exp(-decay.gamma * n) * n + _boundary(c, n) - need

    lo, hi = CROSSOVER_RANGE
    if excess(hi) > 0:
        return math.inf
    # the model term peaks at N = 1/gamma; the physical crossing is on the decreasing side
    start = max(lo, 1.0 / decay.gamma) if decay.gamma > 0 else lo
    if excess(start) <= 0:
        return lo
    return float(brentq(excess, start, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps))
