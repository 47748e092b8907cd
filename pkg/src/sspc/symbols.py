"""Phase-space symbols and their classical dynamics.

A symbol is an entire function ``p(x, xi)`` on ``R^n x R^n`` together with
its analytic gradient.  Everything here works on the real parts of ``p``:
Hamilton fields of ``Re p`` and ``Im p``, their flows, the accumulated
damping ``J(t, rho)`` along ``Im p``-trajectories and the order of vanishing
of ``Re p`` along those trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.spatial import ConvexHull, Delaunay, QhullError
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import minimum_spanning_tree

from .errors import (
    AssumptionViolation,
    EvaluationError,
    OrderExceedsError,
    TruncationError,
    UnsupportedModel,
)

REAL = "real"
IMAG = "imag"


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhasePoint:
    """A point ``(x, xi)`` of real phase space."""

    x: tuple
    xi: tuple

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        xi = tuple(float(v) for v in np.atleast_1d(self.xi))
        if len(x) != len(xi) or not x:
            raise ValueError("x and xi must have the same positive length")
        if not np.all(np.isfinite(x + xi)):
            raise ValueError("phase point has non-finite entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @property
    def dim(self) -> int:
        return len(self.x)

    def as_array(self) -> np.ndarray:
        return np.array(self.x + self.xi)

    @classmethod
    def from_array(cls, arr) -> "PhasePoint":
        arr = np.asarray(arr, dtype=float)
        n = arr.size // 2
        return cls(tuple(arr[:n]), tuple(arr[n:]))


@dataclass(frozen=True)
class ComplexPhasePoint:
    """A point of complexified phase space."""

    x: tuple
    xi: tuple

    def __post_init__(self):
        x = tuple(complex(v) for v in np.atleast_1d(self.x))
        xi = tuple(complex(v) for v in np.atleast_1d(self.xi))
        if len(x) != len(xi) or not x:
            raise ValueError("x and xi must have the same positive length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)


def as_point(rho) -> PhasePoint:
    """Accept a :class:`PhasePoint`, a flat ``(x..., xi...)`` sequence or ``(x, xi)`` pairs of sequences."""
    if isinstance(rho, PhasePoint):
        return rho
    if len(rho) == 2 and all(np.ndim(part) == 1 for part in rho):
        return PhasePoint(tuple(rho[0]), tuple(rho[1]))
    return PhasePoint.from_array(rho)


# ---------------------------------------------------------------------------
# trigonometric polynomials
# ---------------------------------------------------------------------------


def _as_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"complex numbers are written as [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


@dataclass(frozen=True)
class TrigPolynomial:
    """``c0 + sum_m cos_m cos(m x) + sin_m sin(m x)`` with complex coefficients."""

    const: complex = 0j
    cos: tuple = ()
    sin: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "const", complex(self.const))
        object.__setattr__(self, "cos", tuple(complex(c) for c in self.cos))
        object.__setattr__(self, "sin", tuple(complex(c) for c in self.sin))

    @classmethod
    def from_spec(cls, spec) -> "TrigPolynomial":
        """Build from a config mapping ``{"const", "cos", "sin"}``.

        Complex coefficients may be given as ``[re, im]`` pairs.
        """
        if isinstance(spec, TrigPolynomial):
            return spec
        if not isinstance(spec, Mapping):
            raise UnsupportedModel(
                f"coefficient function must be a trigonometric polynomial, got {spec!r}"
            )
        unknown = set(spec) - {"const", "cos", "sin"}
        if unknown:
            raise UnsupportedModel(f"unknown trigonometric polynomial keys {sorted(unknown)}")
        return cls(
            const=_as_complex(spec.get("const", 0.0)),
            cos=tuple(_as_complex(c) for c in spec.get("cos", ())),
            sin=tuple(_as_complex(c) for c in spec.get("sin", ())),
        )

    def to_spec(self) -> dict:
        def enc(c):
            return [c.real, c.imag]

        return {
            "const": enc(self.const),
            "cos": [enc(c) for c in self.cos],
            "sin": [enc(c) for c in self.sin],
        }

    @property
    def degree(self) -> int:
        return max(len(self.cos), len(self.sin))

    @property
    def is_real(self) -> bool:
        coeffs = (self.const,) + self.cos + self.sin
        return all(c.imag == 0.0 for c in coeffs)

    def __call__(self, x):
        x = np.asarray(x)
        out = np.full(x.shape, self.const, dtype=complex)
        for m, c in enumerate(self.cos, start=1):
            out = out + c * np.cos(m * x)
        for m, c in enumerate(self.sin, start=1):
            out = out + c * np.sin(m * x)
        return out

    def derivative(self, x):
        x = np.asarray(x)
        out = np.zeros(x.shape, dtype=complex)
        for m, c in enumerate(self.cos, start=1):
            out = out - m * c * np.sin(m * x)
        for m, c in enumerate(self.sin, start=1):
            out = out + m * c * np.cos(m * x)
        return out

    def fourier(self) -> dict:
        """Coefficients ``g_m`` with ``g(x) = sum_m g_m exp(i m x)``."""
        coeffs = {0: self.const}
        for m, c in enumerate(self.cos, start=1):
            coeffs[m] = coeffs.get(m, 0j) + c / 2
            coeffs[-m] = coeffs.get(-m, 0j) + c / 2
        for m, c in enumerate(self.sin, start=1):
            coeffs[m] = coeffs.get(m, 0j) + c / 2j
            coeffs[-m] = coeffs.get(-m, 0j) - c / 2j
        return coeffs


# ---------------------------------------------------------------------------
# symbols
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemiclassicalSymbol:
    """An entire phase-space function with an analytic gradient.

    ``func(x, xi)`` and ``grad_func(x, xi)`` take arrays whose leading axis
    has length ``dim`` and may be complex; ``grad_func`` returns the pair
    ``(dp/dx, dp/dxi)`` with the same leading axis.
    """

    name: str
    dim: int
    func: Callable
    grad_func: Callable
    periods: tuple = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        periods = tuple(self.periods) or (None,) * self.dim
        if len(periods) != self.dim:
            raise ValueError("one period entry per position coordinate")
        object.__setattr__(self, "periods", periods)

    def _split(self, rho):
        rho = as_point(rho)
        if rho.dim != self.dim:
            raise ValueError(f"{self.name} lives on R^{2 * self.dim}, got a point of dimension {2 * rho.dim}")
        return np.array(rho.x), np.array(rho.xi)

    def eval(self, rho) -> complex:
        x, xi = self._split(rho)
        return complex(self.func(x, xi))

    def eval_complex(self, rho: ComplexPhasePoint) -> complex:
        return complex(self.func(np.array(rho.x), np.array(rho.xi)))

    def evaluate(self, x, xi):
        """Vectorised evaluation; ``x`` and ``xi`` have leading axis ``dim``."""
        return np.asarray(self.func(np.asarray(x), np.asarray(xi)), dtype=complex)

    def grad(self, rho) -> np.ndarray:
        """``(dp/dx_1..dp/dx_n, dp/dxi_1..dp/dxi_n)`` at a real point."""
        x, xi = self._split(rho)
        gx, gxi = self.grad_func(x, xi)
        out = np.concatenate([np.atleast_1d(gx), np.atleast_1d(gxi)]).astype(complex)
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"non-finite gradient of {self.name} at {rho}")
        return out

    def gradient(self, x, xi):
        gx, gxi = self.grad_func(np.asarray(x), np.asarray(xi))
        return np.asarray(gx, dtype=complex), np.asarray(gxi, dtype=complex)


def _lead(v):
    return np.asarray(v)[None]


def circle_advection(g=None, rotate_about=None) -> SemiclassicalSymbol:
    """``p = xi + g(x)`` on the circle; optionally ``i (p - z0)``."""
    g = TrigPolynomial(cos=(1j,)) if g is None else TrigPolynomial.from_spec(g)
    if rotate_about is None:
        scale, shift = 1.0, 0j
    else:
        scale, shift = 1j, complex(rotate_about)

    def func(x, xi):
        return scale * (xi[0] + g(x[0]) - shift)

    def grad_func(x, xi):
        return _lead(scale * g.derivative(x[0])), _lead(scale * np.ones_like(xi[0], dtype=complex))

    params = {"g": g.to_spec()}
    if rotate_about is not None:
        params["rotate_about"] = [shift.real, shift.imag]
    return SemiclassicalSymbol("circle-advection", 1, func, grad_func, (2 * np.pi,), params)


def nsa_harmonic() -> SemiclassicalSymbol:
    """``p = xi^2 + i x^2`` on the line."""

    def func(x, xi):
        return xi[0] ** 2 + 1j * x[0] ** 2

    def grad_func(x, xi):
        return _lead(2j * x[0]), _lead(2 * xi[0] + 0j)

    return SemiclassicalSymbol("nsa-harmonic", 1, func, grad_func, (None,), {})


def torus_schrodinger(V=None) -> SemiclassicalSymbol:
    """``p = xi^2 + i V(x)`` on the circle with a real trigonometric ``V``."""
    V = TrigPolynomial(cos=(1.0,)) if V is None else TrigPolynomial.from_spec(V)
    if not V.is_real:
        raise UnsupportedModel("the potential V must be real")

    def func(x, xi):
        return xi[0] ** 2 + 1j * V(x[0])

    def grad_func(x, xi):
        return _lead(1j * V.derivative(x[0])), _lead(2 * xi[0] + 0j)

    return SemiclassicalSymbol("torus-schrodinger", 1, func, grad_func, (2 * np.pi,), {"V": V.to_spec()})


def kfp(quartic: float = 0.0) -> SemiclassicalSymbol:
    """Kramers-Fokker-Planck symbol on ``R^4`` with ``V'(x) = x + quartic x^3``.

    Coordinates are ``x = (x, y)`` and ``xi = (xi, eta)``;
    ``p = i (y xi - V'(x) eta) + (y^2 + eta^2) / 2``.
    """

    def dV(x):
        return x + quartic * x**3

    def d2V(x):
        return 1 + 3 * quartic * x**2

    def func(x, xi):
        return 1j * (x[1] * xi[0] - dV(x[0]) * xi[1]) + 0.5 * (x[1] ** 2 + xi[1] ** 2)

    def grad_func(x, xi):
        gx = np.stack([-1j * d2V(x[0]) * xi[1], 1j * xi[0] + x[1]])
        gxi = np.stack([1j * x[1] + 0 * xi[0], -1j * dV(x[0]) + xi[1]])
        return gx, gxi

    return SemiclassicalSymbol("kfp", 2, func, grad_func, (None, None), {"quartic": quartic})


SYMBOLS = {
    "circle-advection": circle_advection,
    "nsa-harmonic": nsa_harmonic,
    "torus-schrodinger": torus_schrodinger,
    "kfp": kfp,
}


def get_symbol(name: str, **params) -> SemiclassicalSymbol:
    try:
        factory = SYMBOLS[name]
    except KeyError:
        raise UnsupportedModel(f"unknown model {name!r}; known: {sorted(SYMBOLS)}") from None
    return factory(**params)


# ---------------------------------------------------------------------------
# Hamilton fields and flows
# ---------------------------------------------------------------------------


def _field_array(sym: SemiclassicalSymbol, part: str, state: np.ndarray) -> np.ndarray:
    n = sym.dim
    gx, gxi = sym.gradient(state[:n], state[n:])
    if part == REAL:
        fx, fxi = gx.real, gxi.real
    elif part == IMAG:
        fx, fxi = gx.imag, gxi.imag
    else:
        raise ValueError(f"part must be {REAL!r} or {IMAG!r}, got {part!r}")
    out = np.concatenate([fxi, -fx])
    if not np.all(np.isfinite(out)):
        raise EvaluationError(f"non-finite Hamilton field of {sym.name}")
    return out


def hamiltonian_field(sym: SemiclassicalSymbol, part: str, rho) -> np.ndarray:
    """Hamilton field ``(df/dxi, -df/dx)`` of ``f = Re p`` or ``Im p``."""
    return _field_array(sym, part, as_point(rho).as_array())


def flow_array(sym, part, rho, t, steps, box=None) -> np.ndarray:
    """RK4 trajectory as an array of shape ``(steps + 1, 2n)``.

    ``box`` is an optional sequence of ``(lo, hi)`` per phase-space
    coordinate; periodic position coordinates are never checked.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    y = as_point(rho).as_array()
    n = sym.dim
    dt = t / steps
    out = np.empty((steps + 1, y.size))
    out[0] = y
    checked = None
    if box is not None:
        box = np.asarray(box, dtype=float)
        checked = np.array([i >= n or sym.periods[i] is None for i in range(2 * n)])
    for i in range(steps):
        k1 = _field_array(sym, part, y)
        k2 = _field_array(sym, part, y + 0.5 * dt * k1)
        k3 = _field_array(sym, part, y + 0.5 * dt * k2)
        k4 = _field_array(sym, part, y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = y
        if checked is not None:
            outside = (y < box[:, 0]) | (y > box[:, 1])
            if np.any(outside & checked):
                raise TruncationError(
                    f"trajectory of {sym.name} left the box at t = {(i + 1) * dt:.6g}",
                    escape_time=(i + 1) * dt,
                )
    return out


def flow(sym, part, rho0, t, steps, box=None) -> list:
    """RK4 trajectory of ``H_{Re p}`` or ``H_{Im p}`` as phase points."""
    return [PhasePoint.from_array(row) for row in flow_array(sym, part, rho0, t, steps, box)]


def accumulate_J(sym, rho, t, steps: int = 256, tol: float = 1e-12) -> float:
    """``J(t, rho) = int_0^t Re p(exp(s H_{Im p}) rho) ds`` by composite Simpson.

    Raises :class:`AssumptionViolation` when ``Re p`` is negative on the
    trajectory beyond ``tol``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return 0.0
    steps = steps + (steps % 2)
    traj = flow_array(sym, IMAG, rho, t, steps)
    n = sym.dim
    re_p = sym.evaluate(traj[:, :n].T, traj[:, n:].T).real
    if np.min(re_p) < -tol:
        raise AssumptionViolation(
            f"Re p = {np.min(re_p):.3e} < 0 along the trajectory; the damping must be nonnegative"
        )
    w = np.ones(steps + 1)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    return float(t / steps / 3.0 * np.dot(w, re_p))


# ---------------------------------------------------------------------------
# bracket order
# ---------------------------------------------------------------------------


def fornberg_weights(order: int, offsets) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at 0."""
    z = np.asarray(offsets, dtype=float)
    n = z.size
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, z[0]
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, z[i]
        for j in range(i):
            c3 = z[i] - z[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


@dataclass(frozen=True)
class BracketClassification:
    """Order and leading coefficient of ``Re p`` along ``H_{Im p}``.

    ``coefficient`` is ``H_{Im p}^k Re p`` at the point and
    ``probe_values[j]`` the estimate of the ``j``-th derivative.
    """

    order_k: int
    coefficient: float
    probe_values: tuple


# base step for the j-th derivative probe; larger j needs larger steps to
# keep roundoff amplification (~ eps / step^j) under control
_PROBE_STEPS = {0: 0.0, 1: 0.05, 2: 0.05, 3: 0.1, 4: 0.15, 5: 0.2, 6: 0.25, 7: 0.3, 8: 0.35}


def _derivative_probe(g, j: int, levels: int = 3) -> float:
    if j == 0:
        return g(0.0)
    half = (j + 1) // 2
    offsets = np.arange(-half, half + 1)
    w = fornberg_weights(j, offsets)
    step = _PROBE_STEPS[j]
    estimates = []
    for level in range(levels):
        s = step / 2**level
        estimates.append(sum(wi * g(o * s) for wi, o in zip(w, offsets)) / s**j)
    # Richardson on the even error expansion s^2, s^4, ...
    table = list(estimates)
    for m in range(1, levels):
        factor = 4.0**m
        table = [(factor * table[i + 1] - table[i]) / (factor - 1) for i in range(len(table) - 1)]
    return float(table[0])


def bracket_order(sym, rho, j_max: int = 8, tol: float = 1e-6, flow_steps: int = 200) -> BracketClassification:
    """Smallest ``j`` with ``H_{Im p}^j Re p (rho) != 0``.

    The derivatives are those of ``g(t) = Re p(exp(t H_{Im p}) rho)`` at
    ``t = 0``, estimated by central differences with three levels of
    Richardson extrapolation.  A probe counts as nonzero when it exceeds
    ``tol * max(1, largest earlier probe)``.
    """
    if not 1 <= j_max <= 8:
        raise ValueError("j_max must lie in 1..8")
    rho = as_point(rho)
    n = sym.dim

    def g(t):
        if t == 0.0:
            return sym.eval(rho).real
        end = flow_array(sym, IMAG, rho, t, flow_steps)[-1]
        return float(sym.evaluate(end[:n], end[n:]).real)

    probes = [g(0.0)]
    for j in range(1, j_max + 1):
        value = _derivative_probe(g, j)
        threshold = tol * max(1.0, max(abs(p) for p in probes))
        probes.append(value)
        if abs(value) > threshold:
            return BracketClassification(j, value, tuple(probes))
    raise OrderExceedsError(
        f"all derivative probes of Re p along H_Im p vanish up to order {j_max} at {rho}"
    )


def J_taylor_coefficients(sym, rho, k: int) -> np.ndarray:
    """``d^{j+1}/dt^{j+1} J(0, rho) / (j+1)!`` for ``j = 0..k`` from the probes."""
    cls = bracket_order(sym, rho, j_max=max(k, 1), tol=0.0)
    probes = np.array(cls.probe_values[: k + 1])
    return probes / np.array([factorial(j + 1) for j in range(probes.size)])


# ---------------------------------------------------------------------------
# range of the symbol
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RangeSample:
    """Samples of ``p`` over a lattice with hull and alpha-shape boundary."""

    samples: np.ndarray
    hull: np.ndarray
    boundary: tuple
    _points: np.ndarray = field(repr=False)
    _delaunay: object = field(repr=False, default=None)
    _kept: np.ndarray = field(repr=False, default=None)

    def contains(self, z, margin: float = 0.0) -> np.ndarray:
        """Whether each ``z`` lies in the alpha shape or within ``margin`` of it."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        pts = np.column_stack([z.real, z.imag])
        inside = np.zeros(len(z), dtype=bool)
        if self._delaunay is not None:
            simplex = self._delaunay.find_simplex(pts, tol=margin)
            inside = (simplex >= 0) & self._kept[np.maximum(simplex, 0)]
        for i in np.flatnonzero(~inside):
            inside[i] = _distance_to_edges(pts[i], self.boundary, self._points) <= margin
        return inside


def _distance_to_edges(pt, boundary, points) -> float:
    best = np.inf
    for line in boundary:
        if len(line) == 1:
            best = min(best, float(np.hypot(*(pt - line[0]))))
            continue
        a, b = line[:-1], line[1:]
        ab = b - a
        denom = np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300)
        s = np.clip(np.einsum("ij,ij->i", pt - a, ab) / denom, 0.0, 1.0)
        proj = a + s[:, None] * ab
        best = min(best, float(np.min(np.hypot(*(pt - proj).T))))
    if not boundary:
        best = float(np.min(np.hypot(*(points - pt).T)))
    return best


def _circumradius(tri: np.ndarray) -> np.ndarray:
    a = np.linalg.norm(tri[:, 1] - tri[:, 2], axis=1)
    b = np.linalg.norm(tri[:, 0] - tri[:, 2], axis=1)
    c = np.linalg.norm(tri[:, 0] - tri[:, 1], axis=1)
    cross = (tri[:, 1, 0] - tri[:, 0, 0]) * (tri[:, 2, 1] - tri[:, 0, 1]) - (
        tri[:, 1, 1] - tri[:, 0, 1]
    ) * (tri[:, 2, 0] - tri[:, 0, 0])
    area = 0.5 * np.abs(cross)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(area > 0, a * b * c / (4 * area), np.inf)


def _chain_edges(edges) -> list:
    adjacency = {}
    for a, b in edges:
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)
    unused = {tuple(sorted(e)) for e in edges}
    chains = []
    while unused:
        a, b = unused.pop()
        chain = [a, b]
        while True:
            nxt = [v for v in adjacency[chain[-1]] if tuple(sorted((chain[-1], v))) in unused]
            if not nxt:
                break
            unused.discard(tuple(sorted((chain[-1], nxt[0]))))
            chain.append(nxt[0])
        chains.append(chain)
    return chains


def range_sample(sym, lattice, alpha_radius: float | None = None) -> RangeSample:
    """Image of ``p`` over a product lattice and an estimate of its boundary.

    ``lattice`` is a sequence of ``(lo, hi, count)`` triples, one per
    phase-space coordinate ``(x_1..x_n, xi_1..xi_n)``.  The boundary is the
    alpha shape of the sampled values: Delaunay triangles with circumradius
    at most ``alpha_radius`` are kept, by default twice the longest edge of
    the Euclidean minimum spanning tree.
    """
    lattice = list(lattice)
    if len(lattice) != 2 * sym.dim:
        raise ValueError(f"need {2 * sym.dim} lattice axes, got {len(lattice)}")
    axes = [np.linspace(lo, hi, int(cnt)) for lo, hi, cnt in lattice]
    if any(a.size == 0 for a in axes):
        raise ValueError("empty lattice")
    grids = np.meshgrid(*axes, indexing="ij")
    n = sym.dim
    values = sym.evaluate(np.array(grids[:n]), np.array(grids[n:])).ravel()
    pts = np.unique(np.round(np.column_stack([values.real, values.imag]), 12), axis=0)

    try:
        hull_idx = ConvexHull(pts).vertices
        hull = pts[np.append(hull_idx, hull_idx[0])]
        tri = Delaunay(pts)
    except (QhullError, ValueError):
        # fewer than three points or all collinear
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        line = pts[order]
        return RangeSample(values, line, (line,), pts)

    simplices = tri.simplices
    edges = np.vstack([simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [0, 2]]])
    edges = np.unique(np.sort(edges, axis=1), axis=0)
    lengths = np.linalg.norm(pts[edges[:, 0]] - pts[edges[:, 1]], axis=1)
    if alpha_radius is None:
        graph = coo_matrix((lengths + 1e-300, (edges[:, 0], edges[:, 1])), shape=(len(pts),) * 2)
        alpha_radius = 2.0 * float(minimum_spanning_tree(graph).data.max())
    kept = _circumradius(pts[simplices]) <= alpha_radius
    count = {}
    for s in simplices[kept]:
        for e in ((s[0], s[1]), (s[1], s[2]), (s[0], s[2])):
            e = tuple(sorted(e))
            count[e] = count.get(e, 0) + 1
    boundary_edges = [e for e, c in count.items() if c == 1]
    boundary = tuple(pts[chain] for chain in _chain_edges(boundary_edges))
    return RangeSample(values, hull, boundary, pts, tri, kept)


# ---------------------------------------------------------------------------
# pointwise invariants
# ---------------------------------------------------------------------------


def rotation_angle(sym, z0, rho, tol: float = 1e-8) -> float:
    """Angle ``theta`` in ``[0, pi)`` with ``exp(-i theta) dp(rho)`` real.

    ``rho`` must lie on ``p^{-1}(z0)``.
    """
    z0 = complex(z0)
    value = sym.eval(rho)
    if abs(value - z0) > tol * max(1.0, abs(z0)):
        raise ValueError(f"p(rho) = {value} differs from z0 = {z0}")
    g = sym.grad(rho)
    scale = np.max(np.abs(g))
    if scale == 0.0:
        raise AssumptionViolation(f"dp vanishes at {rho}; no rotation angle")
    theta = float(np.angle(g[np.argmax(np.abs(g))]) % np.pi)
    if np.isclose(theta, np.pi, rtol=0, atol=1e-15):
        theta = 0.0
    residual = np.max(np.abs((np.exp(-1j * theta) * g).imag))
    if residual > tol * scale:
        raise AssumptionViolation(
            f"dp at {rho} is not a complex multiple of a real covector (residual {residual:.3e})"
        )
    return theta


def poisson_bracket_self(sym, rho) -> float:
    """``i^{-1} {p, conj p}`` at ``rho``, i.e. ``2 sum Im(dp/dxi conj(dp/dx))``."""
    g = sym.grad(rho)
    n = sym.dim
    return float(2.0 * np.sum((g[n:] * np.conj(g[:n])).imag))
