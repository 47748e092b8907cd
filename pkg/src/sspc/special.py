"""The Laplace-type integral ``I(s) = int_0^inf exp(s t - t^(k+1)) dt``.

It controls the norm of the truncated resolvent integral and has three
regimes: bounded for ``|s| <= 1``, ``O(1/|s|)`` for ``s <= -1`` and a
saddle-point envelope ``s^(-(k-1)/(2k)) exp(f*)`` for ``s >= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

S_GUARD = 50.0
BUDGET = 10.0


@dataclass(frozen=True)
class SaddleData:
    """Critical point, value and curvature of ``f_s(t) = s t - t^(k+1)``."""

    t_star: float
    f_star: float
    f_second: float


def saddle_data(k: int, s: float) -> SaddleData:
    if s <= 0:
        raise ValueError("the saddle exists only for s > 0")
    t_star = (s / (k + 1)) ** (1.0 / k)
    f_star = k / (k + 1) ** ((k + 1) / k) * s ** ((k + 1) / k)
    f_second = -k * (k + 1) ** (1.0 / k) * s ** ((k - 1) / k)
    return SaddleData(t_star, f_star, f_second)


def _check_k(k):
    if k < 1 or int(k) != k:
        raise ValueError("k must be a positive integer")


def _truncation(k, s):
    if s > 0:
        sd = saddle_data(k, s)
        # beyond 4 t* the exponent is below -T^(k+1)/2
        T = max(5.0, 4.0 * sd.t_star, (2.0 * (40.0 + sd.f_star)) ** (1.0 / (k + 1)))
        return T, sd.t_star, sd.f_star
    # T^(k+1) >= 40 keeps the tail below exp(-40)
    return max(5.0, 40.0 ** (1.0 / (k + 1))), None, 0.0


def _scaled_integral(k, s, epsabs=0.0, epsrel=1e-12):
    """``int_0^T exp(f_s(t) - shift) dt`` and ``shift``."""
    T, t_star, shift = _truncation(k, s)

    def f(t):
        return np.exp(s * t - t ** (k + 1) - shift)

    points = None if t_star is None else [t_star]
    val, err = integrate.quad(f, 0.0, T, epsabs=epsabs, epsrel=epsrel, points=points, limit=200)
    return val, err, shift


def I_of_s(k: int, s: float, epsrel: float = 1e-12) -> float:
    """``I(s)`` by adaptive Gauss-Kronrod quadrature (QUADPACK).

    ``|s| <= 50``; use :func:`log_I_of_s` beyond.
    """
    _check_k(k)
    if abs(s) > S_GUARD:
        raise ValueError(f"|s| = {abs(s)} exceeds {S_GUARD}; use log_I_of_s")
    val, _, shift = _scaled_integral(k, s, epsrel=epsrel)
    return float(val * np.exp(shift))


def log_I_of_s(k: int, s: float, epsrel: float = 1e-12) -> float:
    """``log I(s)`` with the saddle value factored out; no range guard."""
    _check_k(k)
    val, _, shift = _scaled_integral(k, s, epsrel=epsrel)
    return float(np.log(val) + shift)


def I_with_error(k: int, s: float, epsrel: float = 1e-12) -> tuple:
    """``(I(s), error estimate)`` from the quadrature."""
    val, err, shift = _scaled_integral(k, s, epsrel=epsrel)
    scale = np.exp(shift)
    return float(val * scale), float(err * scale)


def bound_shape(k: int, s: float) -> float:
    """The envelope each regime is measured against."""
    if abs(s) <= 1:
        return 1.0
    if s < -1:
        return 1.0 / abs(s)
    sd = saddle_data(k, s)
    return s ** (-(k - 1) / (2 * k)) * np.exp(sd.f_star)


def laplace_ratio(k: int, s: float) -> float:
    """``I(s)`` over its Laplace approximation ``sqrt(2 pi / |f''|) exp(f*)``."""
    sd = saddle_data(k, s)
    log_ratio = log_I_of_s(k, s) - sd.f_star - 0.5 * np.log(2 * np.pi / abs(sd.f_second))
    return float(np.exp(log_ratio))


@dataclass
class Re2Report:
    """Implied constants per regime, the Laplace ratio and a sample table."""

    k: int
    constants: dict
    laplace: dict
    rows: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def check_re2_bounds(k: int, s_samples, budget: float = BUDGET, laplace_window=(0.3, 3.0)) -> Re2Report:
    """Measure ``I(s) / bound_shape(s)`` in each regime.

    Each regime must be sampled.  A regime whose largest ratio exceeds
    ``budget``, or whose ratio is still growing at the largest ``|s|``
    sampled, is listed in ``violations``.  For ``s >= 1`` the Laplace ratio at
    the largest sample must lie in ``laplace_window``.
    """
    s_samples = np.sort(np.asarray(s_samples, dtype=float))
    regimes = {
        "central": s_samples[np.abs(s_samples) <= 1],
        "negative": s_samples[s_samples < -1],
        "positive": s_samples[s_samples > 1],
    }
    missing = [name for name, v in regimes.items() if v.size == 0]
    if missing:
        raise ValueError(f"s samples miss the regimes {missing}")

    rows = []
    constants = {}
    violations = []
    for name, ss in regimes.items():
        ratios = []
        for s in ss:
            if abs(s) <= S_GUARD:
                val = I_of_s(k, s)
                ratio = val / bound_shape(k, s)
            else:
                val = np.exp(log_I_of_s(k, s))
                ratio = np.exp(log_I_of_s(k, s) - np.log(bound_shape(k, s)))
            ratios.append(ratio)
            rows.append((k, float(s), float(val), float(bound_shape(k, s)), float(ratio)))
        ratios = np.array(ratios)
        constants[name] = float(ratios.max())
        if ratios.max() > budget:
            violations.append(f"{name}: implied constant {ratios.max():.3g} > {budget}")
        if name != "central" and ratios.size >= 3:
            tail = ratios[-3:] if name == "positive" else ratios[:3][::-1]
            if np.all(np.diff(tail) > 0) and tail[-1] > 0.9 * budget:
                violations.append(f"{name}: ratio still growing towards the budget")

    s_top = float(regimes["positive"].max())
    lr = laplace_ratio(k, s_top)
    laplace = {"s": s_top, "ratio": lr}
    if not laplace_window[0] <= lr <= laplace_window[1]:
        violations.append(f"Laplace ratio {lr:.3g} at s = {s_top} outside {laplace_window}")
    rows.sort(key=lambda r: r[1])
    return Re2Report(k, constants, laplace, rows, violations)
