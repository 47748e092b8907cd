"""Evolution of the phase-space weight ``G_t``.

``G_t`` solves ``dG/dt + Re p(rho + i H_G(rho)) = 0`` with ``G_0 = 0`` on a
two-dimensional lattice (one position, one momentum).  With
``H_G = (dG/dxi, -dG/dx)`` the complexified point is
``(x + i G_xi, xi - i G_x)``; models are entire, so ``p`` is evaluated there
exactly.

Along the flow of ``H_{Im p}`` the solution is comparable to the
accumulated damping ``J``; :func:`G_characteristic` is that linearised
solution and serves as an oracle for :func:`evolve_G`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import CertificationError, EvaluationError, MonotonicityViolation
from .spectral import ScalingFit, fit_power_law
from .symbols import IMAG, PhasePoint, accumulate_J, as_point, flow_array


@dataclass(frozen=True)
class PhaseLattice:
    """Uniform lattice over ``[x_lo, x_hi] x [xi_lo, xi_hi]``.

    With ``periodic`` the position axis is ``[x_lo, x_hi)`` with period
    ``x_hi - x_lo`` and the right endpoint is not a node.
    """

    x_range: tuple
    xi_range: tuple
    nx: int
    nxi: int
    periodic: bool = False

    def __post_init__(self):
        if self.nx < 16 or self.nxi < 16:
            raise ValueError("at least 16 nodes per axis")
        if not (self.x_range[1] > self.x_range[0] and self.xi_range[1] > self.xi_range[0]):
            raise ValueError("empty lattice range")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.nx, endpoint=not self.periodic)

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(*self.xi_range, self.nxi)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dxi(self) -> float:
        return float(self.xi[1] - self.xi[0])

    @property
    def spacing(self) -> float:
        return min(self.dx, self.dxi)

    @property
    def period(self) -> float:
        return float(self.x_range[1] - self.x_range[0])

    def mesh(self):
        return np.meshgrid(self.x, self.xi, indexing="ij")


@dataclass(frozen=True)
class WeightField:
    """``G_t`` on the lattice; ``values[i, j]`` sits at ``(x[i], xi[j])``."""

    t: float
    values: np.ndarray
    lattice: PhaseLattice
    grad: tuple = field(default=None, repr=False)

    def at(self, rho) -> float:
        """Bicubic interpolation of ``G_t`` at a phase point."""
        rho = as_point(rho)
        x, xi = rho.x[0], rho.xi[0]
        lat = self.lattice
        xs, vals = lat.x, self.values
        if lat.periodic:
            x = lat.x_range[0] + (x - lat.x_range[0]) % lat.period
            # pad with wrapped copies so the spline sees a smooth periodic field
            pad = 4
            xs = np.concatenate([xs[-pad:] - lat.period, xs, xs[:pad] + lat.period])
            vals = np.concatenate([vals[-pad:], vals, vals[:pad]], axis=0)
        spline = RectBivariateSpline(xs, lat.xi, vals, kx=3, ky=3)
        return float(spline(x, xi)[0, 0])


def _gradient(G, lat: PhaseLattice):
    if lat.periodic:
        Gx = (np.roll(G, -1, axis=0) - np.roll(G, 1, axis=0)) / (2 * lat.dx)
    else:
        Gx = np.gradient(G, lat.dx, axis=0, edge_order=1)
    Gxi = np.gradient(G, lat.dxi, axis=1, edge_order=1)
    return Gx, Gxi


def _rhs(sym, lat, X, XI, G):
    Gx, Gxi = _gradient(G, lat)
    re_p = sym.evaluate((X + 1j * Gxi)[None], (XI - 1j * Gx)[None]).real
    return -re_p, (Gx, Gxi)


def stability_bound(sym, lat: PhaseLattice) -> float:
    """``0.25 * spacing / max |grad Im p|`` over the lattice."""
    X, XI = lat.mesh()
    gx, gxi = sym.gradient(X[None], XI[None])
    speed = np.sqrt(gx.imag[0] ** 2 + gxi.imag[0] ** 2).max()
    return float(np.inf if speed == 0 else 0.25 * lat.spacing / speed)


def evolve_G(sym, lattice: PhaseLattice, t_end: float, dt: float, tol: float = 1e-10) -> list:
    """Explicit midpoint time stepping from ``G_0 = 0`` up to ``t_end``.

    Spatial derivatives are central differences, one-sided at non-periodic
    edges.  Every slab, ``t = 0`` included, is returned.
    """
    if sym.dim != 1:
        raise ValueError("weight evolution is implemented for one degree of freedom")
    if not 0 < t_end <= 1:
        raise ValueError("t_end must lie in (0, 1]")
    bound = stability_bound(sym, lattice)
    if dt > bound * (1 + 1e-12):
        raise ValueError(f"dt = {dt} violates the stability bound {bound:.4g}")
    steps = int(np.ceil(t_end / dt - 1e-9))
    dt = t_end / steps
    X, XI = lattice.mesh()
    G = np.zeros_like(X)
    fields = [WeightField(0.0, G.copy(), lattice, _gradient(G, lattice))]
    for i in range(steps):
        k1, _ = _rhs(sym, lattice, X, XI, G)
        k2, _ = _rhs(sym, lattice, X, XI, G + 0.5 * dt * k1)
        G = G + dt * k2
        if not np.all(np.isfinite(G)):
            raise EvaluationError(f"G became non-finite at t = {(i + 1) * dt:.4g}; shrink the lattice or dt")
        worst = G.max()
        if worst > tol:
            raise MonotonicityViolation(f"G = {worst:.3e} > 0 at t = {(i + 1) * dt:.4g}")
        fields.append(WeightField((i + 1) * dt, G.copy(), lattice, _gradient(G, lattice)))
    return fields


def G_characteristic(sym, rho, t: float, steps: int = 256) -> float:
    """``-J(t, rho)``: the linearised weight at the endpoint of the ``H_{Im p}`` orbit from ``rho``."""
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    return -accumulate_J(sym, rho, t, steps)


def orbit_points(sym, rho0, times, steps_per_unit: int = 400) -> list:
    """``exp(t H_{Im p}) rho0`` for each ``t`` in ``times``."""
    out = []
    for t in times:
        steps = max(1, int(np.ceil(abs(t) * steps_per_unit)))
        out.append(flow_array(sym, IMAG, rho0, t, steps)[-1])
    return out


def certify_decay(fields, k: int, orbit, window=(0.05, 0.5), exponent_tol: float = 0.3) -> ScalingFit:
    """Fit ``-G_t ~ t**exponent`` along ``orbit`` and find the smallest ``C``
    with ``G_t <= -t**(k+1) / C`` on ``window``.

    ``orbit`` holds one phase point per field, or a single point used for
    every field.  An exponent further than ``exponent_tol`` from ``k + 1``
    is flagged.
    """
    if isinstance(orbit, PhasePoint) or (len(orbit) == 2 and np.isscalar(orbit[0])):
        orbit = [orbit] * len(fields)
    if len(orbit) != len(fields):
        raise ValueError("need one orbit point per field")
    ts, gs = [], []
    for f, rho in zip(fields, orbit):
        if window[0] <= f.t <= window[1]:
            ts.append(f.t)
            gs.append(f.at(rho))
    ts, gs = np.array(ts), np.array(gs)
    if ts.size < 4:
        raise CertificationError(f"fewer than 4 slabs in the window {window}")
    if np.any(gs >= 0):
        raise CertificationError(f"G is nonnegative at t = {ts[gs >= 0][0]:.4g} on the orbit")
    fit = fit_power_law(ts, -gs, window)
    C = float(np.max(ts ** (k + 1) / -gs))
    flags = ()
    if abs(fit.exponent - (k + 1)) > exponent_tol:
        flags = (f"exponent {fit.exponent:.3f} differs from k+1 = {k + 1}",)
    return ScalingFit(fit.exponent, C, fit.r_squared, fit.window, flags)


def write_slabs(fields, path) -> None:
    """CSV with columns ``t, x, xi, G``, one row per node per slab."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "xi", "G"])
        for f in fields:
            X, XI = f.lattice.mesh()
            for x, xi, g in zip(X.ravel(), XI.ravel(), f.values.ravel()):
                w.writerow([f"{f.t:.17g}", f"{x:.17g}", f"{xi:.17g}", f"{g:.17g}"])
