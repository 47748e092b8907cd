"""Resolvents, semigroups and scaling fits for discretised operators."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla
from scipy import stats

from .errors import (
    NumericallySingular,
    QuadratureError,
    SemigroupOverflow,
    ThresholdNotCrossed,
)
from .operators import DiscretizedOperator


# ---------------------------------------------------------------------------
# power laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFit:
    """``y ~ constant * x**exponent`` fitted on ``window``.

    ``flags`` carries diagnostics such as an exponent that misses its
    target.
    """

    exponent: float
    constant: float
    r_squared: float
    window: tuple
    flags: tuple = ()

    def to_record(self) -> dict:
        return {
            "exponent": self.exponent,
            "constant": self.constant,
            "r_squared": self.r_squared,
            "window": [self.window[0], self.window[1]],
        }


def fit_power_law(xs, ys, window=None) -> ScalingFit:
    """Least squares for ``log y = log C + a log x`` over ``window``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if window is None:
        window = (float(xs.min()), float(xs.max()))
    lo, hi = window
    mask = (xs >= lo) & (xs <= hi)
    if mask.sum() < 4:
        raise ValueError(f"need at least 4 points in window {window}, got {int(mask.sum())}")
    x, y = xs[mask], ys[mask]
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fits need positive data")
    fit = stats.linregress(np.log(x), np.log(y))
    r2 = min(1.0, max(0.0, fit.rvalue**2))
    return ScalingFit(float(fit.slope), float(np.exp(fit.intercept)), float(r2), (float(lo), float(hi)))


# ---------------------------------------------------------------------------
# resolvent norms
# ---------------------------------------------------------------------------


def _smallest_singular_inverse(B, tol=1e-12) -> float:
    lu = spla.splu(B.tocsc())
    n = B.shape[0]
    op = spla.LinearOperator(
        (n, n), matvec=lambda x: lu.solve(lu.solve(x, trans="H")), dtype=complex
    )
    # fixed start vector keeps results reproducible
    v0 = np.ones(n, dtype=complex) / np.sqrt(n)
    w = spla.eigsh(op, k=1, which="LM", tol=tol, v0=v0, return_eigenvectors=False)
    return float(1.0 / np.sqrt(w[0]))


def smallest_singular_value(op: DiscretizedOperator, z: complex, method: str = "auto") -> float:
    """``sigma_min(zI - A)``.

    ``method`` is ``"dense"`` (full SVD), ``"inverse"`` (Lanczos on
    ``(B^* B)^{-1}`` with a sparse LU of ``B = zI - A``) or ``"auto"``, which
    uses the dense route for ``N <= 1024``.
    """
    if method == "auto":
        method = "dense" if op.N <= 1024 else "inverse"
    if method == "dense":
        B = z * np.eye(op.N) - op.matrix
        return float(la.svdvals(B, check_finite=False)[-1])
    if method == "inverse":
        import scipy.sparse as sp

        B = z * sp.identity(op.N, format="csc", dtype=complex) - op.to_sparse()
        try:
            return _smallest_singular_inverse(B)
        except RuntimeError:
            # exactly singular LU
            return 0.0
    raise ValueError(f"unknown method {method!r}")


def resolvent_norm(op: DiscretizedOperator, z: complex, method: str = "auto") -> float:
    """``||(zI - A)^{-1}|| = 1 / sigma_min(zI - A)``.

    Raises :class:`NumericallySingular` when ``sigma_min`` falls below
    ``1e-14 ||A||``; the exception carries the resulting lower bound.
    """
    s = smallest_singular_value(op, complex(z), method)
    floor = 1e-14 * max(op.norm2, 1.0)
    if s < floor:
        raise NumericallySingular(f"zI - A is numerically singular at z = {z}", lower_bound=1.0 / floor)
    return 1.0 / s


@dataclass(frozen=True)
class PseudospectrumMap:
    """``log10 ||(z - A)^{-1}||`` on a rectangular ``z`` lattice.

    ``values[j, i]`` belongs to ``re[i] + 1j * im[j]``; nodes where the
    matrix is singular hold the lower bound and are marked in ``singular``.
    """

    re: np.ndarray
    im: np.ndarray
    values: np.ndarray
    singular: np.ndarray
    h: float
    model: str


def pseudospectrum_map(op, zrect, nx: int, ny: int, workers: int | None = None, method="auto") -> PseudospectrumMap:
    """Resolvent norms on ``zrect = (re_lo, re_hi, im_lo, im_hi)``."""
    if nx * ny > 1_000_000:
        raise ValueError("at most 1e6 lattice nodes")
    re = np.linspace(zrect[0], zrect[1], nx)
    im = np.linspace(zrect[2], zrect[3], ny)
    nodes = [complex(x, y) for y in im for x in re]

    def job(z):
        try:
            return np.log10(resolvent_norm(op, z, method)), False
        except NumericallySingular as exc:
            return np.log10(exc.lower_bound), True

    if workers == 1:
        results = [job(z) for z in nodes]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, nodes))
    values = np.array([r[0] for r in results]).reshape(ny, nx)
    singular = np.array([r[1] for r in results]).reshape(ny, nx)
    return PseudospectrumMap(re, im, values, singular, op.h, op.model)


# ---------------------------------------------------------------------------
# semigroups
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemigroupTrace:
    t: np.ndarray
    norms: np.ndarray
    h: float

    def decay(self) -> np.ndarray:
        """``-h log ||U(t)||``."""
        return -self.h * np.log(self.norms)


def _step_propagator(A, dt, h, rtol=1e-8, depth=0):
    E = la.expm(-dt / h * A)
    half = la.expm(-0.5 * dt / h * A)
    E2 = half @ half
    scale = max(la.norm(E2, 2), 1e-300)
    if la.norm(E - E2, 2) / scale < rtol or depth >= 20:
        return E2
    half = _step_propagator(A, 0.5 * dt, h, rtol, depth + 1)
    return half @ half


def _opnorm(M) -> float:
    if M.shape[0] <= 1024:
        return float(la.svdvals(M, check_finite=False)[0])
    return float(spla.svds(M, k=1, return_singular_vectors=False)[0])


def semigroup_trace(op: DiscretizedOperator, t_grid, rtol: float = 1e-8) -> SemigroupTrace:
    """Operator norms of ``U(t) = exp(-t A / h)`` on ``t_grid``.

    The propagator is composed stepwise from scaling-and-squaring matrix
    exponentials of the grid increments.  Each increment is halved until
    one step and two half steps agree to ``rtol``.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must start at 0 and increase strictly")
    left = op.numerical_abscissa_left()
    if left < -1e-10:
        warnings.warn(
            f"operator is not accretive (min Re <Au,u> = {left:.3e}); norms may grow",
            stacklevel=2,
        )
    A = op.matrix
    cache = {}
    U = np.eye(op.N, dtype=complex)
    norms = [1.0]
    for dt in np.diff(t):
        key = round(dt, 14)
        if key not in cache:
            cache[key] = _step_propagator(A, dt, op.h, rtol)
        U = cache[key] @ U
        nrm = _opnorm(U)
        if not np.isfinite(nrm) or nrm > 1e300:
            raise SemigroupOverflow(
                f"propagator norm overflowed; max Re(-symbol) on the numerical range is {-left:.3e}"
            )
        norms.append(nrm)
    return SemigroupTrace(t, np.array(norms), op.h)


def semigroup_decay_fit(trace: SemigroupTrace, window=(0.05, 0.4)) -> ScalingFit:
    """Fit ``-h log ||U(t)|| ~ t**exponent / C`` on ``window``.

    ``constant`` is reported as ``C``, the reciprocal of the prefactor.
    """
    fit = fit_power_law(trace.t, trace.decay(), window)
    return ScalingFit(fit.exponent, 1.0 / fit.constant, fit.r_squared, fit.window)


# ---------------------------------------------------------------------------
# quadrature resolvent
# ---------------------------------------------------------------------------


def _gauss_panels(B, h, T, panels, nodes, weights):
    """Composite Gauss-Legendre rule for ``int_0^T exp(-t B / h) dt`` times ``-1/h``."""
    N = B.shape[0]
    width = T / panels
    tau = 0.5 * width * (nodes + 1.0)
    local = [la.expm(-s / h * B) for s in tau]
    shift = la.expm(-width / h * B)
    acc = sum(w * L for w, L in zip(weights, local))
    out = np.zeros((N, N), dtype=complex)
    start = np.eye(N, dtype=complex)
    for _ in range(panels):
        out += acc @ start
        start = shift @ start
    return -0.5 * width / h * out


def quadrature_resolvent(
    op: DiscretizedOperator,
    z: complex,
    delta: float = 0.3,
    quad_points: int = 8,
    k: int = 2,
    t_max: float | None = None,
    tail_tol: float | None = None,
    rtol: float = 1e-6,
    max_panels: int = 4096,
    full_output: bool = False,
):
    """``-(1/h) int_0^T exp(t z / h) U(t) dt`` with ``U(t) = exp(-t A / h)``.

    This approximates ``(zI - A)^{-1}`` once the integrand is negligible at
    ``T``.  ``T`` defaults to ``h**delta`` with ``delta (k+1) < 1``; when
    ``tail_tol`` is given, ``T`` is doubled until the integrand norm at ``T``
    drops below it.  Composite Gauss-Legendre panels are doubled until the
    Frobenius norm changes by less than ``rtol``.

    With ``full_output`` a dict with ``t_max``, ``tail_norm`` and ``panels``
    is returned as well.
    """
    z = complex(z)
    if not delta * (k + 1) < 1 or delta <= 0:
        raise ValueError(f"need 0 < delta and delta (k+1) < 1, got delta = {delta}, k = {k}")
    A = op.matrix
    h = op.h
    T = h**delta if t_max is None else float(t_max)

    # exp(t z / h) U(t) = exp(-t (A - z) / h); folding z in avoids overflow of the scalar factor
    B = A - z * np.eye(op.N)

    def tail(T):
        with np.errstate(over="ignore", invalid="ignore"):
            E = la.expm(-T / h * B)
        if not np.all(np.isfinite(E)):
            return np.inf
        return _opnorm(E)

    tail_norm = tail(T)
    if tail_tol is not None:
        best = tail_norm
        for _ in range(60):
            if tail_norm <= tail_tol:
                break
            T *= 2.0
            tail_norm = tail(T)
            # roundoff in non-normal directions grows like exp(T Re z / h) and eventually overflows
            if not np.isfinite(tail_norm):
                raise QuadratureError(
                    f"integrand overflowed at cutoff {T:g} (smallest norm seen {best:.3e}); "
                    "Re z is too far into the range for double precision"
                )
            best = min(best, tail_norm)
        else:
            raise QuadratureError(f"integrand never dropped below {tail_tol:g}; smallest norm {best:.3e}")

    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    panels = 1
    prev = _gauss_panels(B, h, T, panels, nodes, weights)
    history = [la.norm(prev)]
    while True:
        panels *= 2
        if panels > max_panels:
            raise QuadratureError(
                f"panel doubling did not converge; last two Frobenius norms {history[-2:]}"
            )
        cur = _gauss_panels(B, h, T, panels, nodes, weights)
        history.append(la.norm(cur))
        if la.norm(cur - prev) <= rtol * la.norm(cur):
            break
        prev = cur
    if full_output:
        return cur, {"t_max": T, "tail_norm": tail_norm, "panels": panels}
    return cur


# ---------------------------------------------------------------------------
# critical radius
# ---------------------------------------------------------------------------


def polynomial_threshold(power: float = 3.0) -> Callable[[float], float]:
    """``h -> h**(-power)``: the edge of polynomial resolvent growth."""
    return lambda h: h ** (-power)


def scaled_threshold(factor: float = 10.0, k: int = 2) -> Callable[[float], float]:
    """``h -> factor * h**(-k/(k+1))``: a fixed multiple of the boundary scale."""
    return lambda h: factor * h ** (-k / (k + 1))


def exponential_threshold(power: float = 0.25) -> Callable[[float], float]:
    """``h -> exp(h**(-power))``."""
    return lambda h: float(np.exp(h ** (-power)))


THRESHOLDS = {
    "polynomial": polynomial_threshold,
    "scaled": scaled_threshold,
    "exponential": exponential_threshold,
}


@dataclass(frozen=True)
class CriticalRadius:
    delta: float
    threshold: float
    h: float
    evaluations: int = field(default=0, compare=False)


def critical_radius(
    model: Callable[[float], DiscretizedOperator] | DiscretizedOperator,
    h: float,
    z0: complex,
    direction: complex = 1.0,
    threshold_rule: Callable[[float], float] | None = None,
    delta_max: float = 0.5,
    tol: float = 1e-3,
    method: str = "auto",
) -> CriticalRadius:
    """First ``delta`` in ``[0, delta_max]`` where ``||(z - A)^{-1}||`` exceeds the threshold.

    ``z = z0 + delta * direction``; the search is a bisection to ``tol``.
    ``model`` is either an operator or a builder ``h -> operator``.  The
    default threshold is :func:`polynomial_threshold`.
    """
    op = model(h) if callable(model) else model
    rule = threshold_rule or polynomial_threshold()
    thr = float(rule(h))
    direction = complex(direction) / abs(direction)
    count = 0

    def above(delta):
        nonlocal count
        count += 1
        try:
            return resolvent_norm(op, z0 + delta * direction, method) > thr
        except NumericallySingular:
            return True

    if above(0.0):
        return CriticalRadius(0.0, thr, h, count)
    if not above(delta_max):
        value = resolvent_norm(op, z0 + delta_max * direction, method)
        raise ThresholdNotCrossed(
            f"resolvent stays below {thr:.3e} up to delta = {delta_max}", delta_max, value
        )
    lo, hi = 0.0, delta_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if above(mid):
            hi = mid
        else:
            lo = mid
    return CriticalRadius(0.5 * (lo + hi), thr, h, count)


def critical_radius_sweep(model, hs: Sequence[float], z0, direction=1.0, threshold_rule=None,
                          delta_max=0.5, tol=1e-3, workers=None, method="auto"):
    """:func:`critical_radius` for each ``h``; the slope of ``log delta*``
    against ``log(h log(1/h))`` is returned as a :class:`ScalingFit`."""

    def job(h):
        return critical_radius(model, h, z0, direction, threshold_rule, delta_max, tol, method)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        radii = list(pool.map(job, hs))
    hs = np.asarray(hs, dtype=float)
    deltas = np.array([r.delta for r in radii])
    fit = fit_power_law(hs * np.log(1.0 / hs), deltas)
    return radii, fit
