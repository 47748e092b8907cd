"""Leading-order Gaussian beams at points where ``i^{-1}{p, conj p} > 0``.

The beam ``u(x) = exp(i (xi0 (x - x0) + A (x - x0)^2 / 2) / h)`` solves the
eikonal equation to first order when ``dp/dxi * A + dp/dx = 0`` at the
centre; the bracket condition is exactly ``Im A > 0``.  Its residual
``||(P - p(rho)) u||`` is ``O(h)`` or better, so the resolvent at
``p(rho)`` is at least the reciprocal of that residual.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, ResolutionError
from .operators import FOURIER_CIRCLE, FOURIER_TORUS, DiscretizedOperator, fourier_modes
from .spectral import fit_power_law, smallest_singular_value
from .symbols import PhasePoint, as_point, poisson_bracket_self

MIN_POINTS_PER_WIDTH = 8
ALIAS_TOL = 1e-10


@dataclass(frozen=True)
class GaussianBeam:
    """Beam samples on ``grid`` with unit discrete L2 norm (``sum |u|^2 dx = 1``)."""

    center: PhasePoint
    A: complex
    h: float
    grid: np.ndarray
    samples: np.ndarray
    value: complex
    periodic: bool

    @property
    def dx(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def second_moment(self) -> float:
        """``int (x - x0)^2 |u|^2 dx`` with the offset taken on the circle if periodic."""
        d = self.grid - self.center.x[0]
        if self.periodic:
            d = (d + np.pi) % (2 * np.pi) - np.pi
        return float(np.sum(d**2 * np.abs(self.samples) ** 2) * self.dx)


def _smooth_step(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(s, 0.0, 1.0)
    a = np.where(s > 0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
    b = np.where(s < 1, np.exp(-1.0 / np.maximum(1 - s, 1e-300)), 0.0)
    return a / (a + b)


def _cutoff(d):
    """1 for ``|d| <= pi/4``, 0 for ``|d| >= pi/2``: supported on half the circle."""
    return _smooth_step((np.pi / 2 - np.abs(d)) / (np.pi / 4))


def make_beam(sym, rho, h: float, grid) -> GaussianBeam:
    """Gaussian beam centred at ``rho`` for a one-dimensional symbol."""
    rho = as_point(rho)
    if sym.dim != 1:
        raise ValueError("beams are built for one degree of freedom")
    bracket = poisson_bracket_self(sym, rho)
    if not bracket > 0:
        raise ConstructionError(f"i^-1 {{p, conj p}} = {bracket:.3e} <= 0 at {rho}; no decaying beam")
    g = sym.grad(rho)
    px, pxi = g[0], g[1]
    if pxi == 0:
        raise ConstructionError(f"dp/dxi vanishes at {rho}")
    A = -px / pxi
    if not A.imag > 0:
        raise ConstructionError(f"eikonal root A = {A} has no positive imaginary part")

    grid = np.asarray(grid, dtype=float)
    dx = grid[1] - grid[0]
    width = np.sqrt(h)
    if width / dx < MIN_POINTS_PER_WIDTH:
        raise ResolutionError(
            f"grid spacing {dx:.3g} resolves the beam width sqrt(h) = {width:.3g} with fewer "
            f"than {MIN_POINTS_PER_WIDTH} points"
        )
    x0, xi0 = rho.x[0], rho.xi[0]
    periodic = sym.periods[0] is not None
    d = grid - x0
    if periodic:
        d = (d + np.pi) % (2 * np.pi) - np.pi
    u = np.exp(1j * (xi0 * d + 0.5 * A * d**2) / h)
    if periodic:
        u = u * _cutoff(d)
    u = u / np.sqrt(np.sum(np.abs(u) ** 2) * dx)
    return GaussianBeam(rho, complex(A), h, grid, u, sym.eval(rho), periodic)


def beam_coefficients(beam: GaussianBeam, op: DiscretizedOperator) -> np.ndarray:
    """Coefficients of the beam in the operator's Fourier basis.

    Raises :class:`ResolutionError` when more than ``1e-10`` of the beam's
    energy lies outside the retained modes.
    """
    if op.basis not in (FOURIER_CIRCLE, FOURIER_TORUS):
        raise ValueError(f"beams can be transformed to Fourier bases only, not {op.basis}")
    M = beam.grid.size
    if M < op.N:
        raise ResolutionError("beam grid is coarser than the operator's mode count")
    # c_n = int u exp(-i n x) dx / sqrt(2 pi) on an equispaced periodic grid
    phase = np.exp(-1j * np.fft.fftfreq(M, d=1.0 / M) * beam.grid[0])
    full = np.fft.fft(beam.samples) * phase * beam.dx / np.sqrt(2 * np.pi)
    freqs = np.fft.fftfreq(M, d=1.0 / M).astype(int)
    modes = fourier_modes(op.N)
    lookup = {n: i for i, n in enumerate(freqs)}
    coeffs = np.array([full[lookup[n]] for n in modes])
    total = np.sum(np.abs(full) ** 2)
    outside = 1.0 - np.sum(np.abs(coeffs) ** 2) / total
    if outside > ALIAS_TOL:
        raise ResolutionError(
            f"{outside:.3e} of the beam energy lies outside modes {modes[0]}..{modes[-1]}"
        )
    return coeffs


def residual(op: DiscretizedOperator, beam: GaussianBeam, z: complex) -> float:
    """``||(A - z) u||`` in the operator's basis; ``z`` must equal ``p(center)``."""
    z = complex(z)
    if abs(z - beam.value) > 1e-10 * max(1.0, abs(z)):
        raise ValueError(f"z = {z} differs from p(center) = {beam.value}")
    c = beam_coefficients(beam, op)
    c = c / np.linalg.norm(c)
    return float(np.linalg.norm(op.matrix @ c - z * c))


@dataclass(frozen=True)
class BlowupCertificate:
    """``sigma_min(zI - A) <= residual`` certifies ``||(zI - A)^{-1}|| >= 1 / residual``.

    ``product`` is ``residual * ||(zI - A)^{-1}||``; it is infinite when
    ``sigma_min`` underflows to zero.
    """

    h: float
    z: complex
    residual: float
    sigma_min: float

    @property
    def product(self) -> float:
        return float("inf") if self.sigma_min == 0 else self.residual / self.sigma_min

    @property
    def holds(self) -> bool:
        return self.product >= 1 - 1e-8


def certify_blowup(op: DiscretizedOperator, beam: GaussianBeam) -> BlowupCertificate:
    """Residual of ``beam`` at ``z = p(center)`` and the smallest singular value there."""
    z = beam.value
    r = residual(op, beam, z)
    return BlowupCertificate(op.h, z, r, smallest_singular_value(op, z))


def residual_sweep(sym, rho, hs, build, points_per_width: int = 16):
    """Beam residuals for each ``h`` with ``build(h, N)`` returning the operator.

    Returns ``(certificates, fit)`` where ``fit`` is the log-log slope of the
    residual in ``h``.
    """
    rho = as_point(rho)
    certs = []
    for h in hs:
        N = modes_for_beam(h, rho.xi[0])
        beam = make_beam(sym, rho, h, beam_grid(h, points_per_width))
        certs.append(certify_blowup(build(h, N), beam))
    fit = fit_power_law([c.h for c in certs], [c.residual for c in certs])
    return certs, fit


def width_fit(sym, rho, hs, points_per_width: int = 16):
    """Log-log slope of the beam's second moment in ``h`` (expected 1)."""
    moments = [make_beam(sym, rho, h, beam_grid(h, points_per_width)).second_moment() for h in hs]
    return fit_power_law(hs, moments)


def beam_grid(h: float, points_per_width: int = 16) -> np.ndarray:
    """Periodic grid on ``[0, 2 pi)`` with a power-of-two size resolving the beam."""
    need = points_per_width * 2 * np.pi / np.sqrt(h)
    M = 1 << int(np.ceil(np.log2(max(need, 64))))
    return np.linspace(0.0, 2 * np.pi, M, endpoint=False)


def modes_for_beam(h: float, xi0: float = 0.0, minimum: int = 128) -> int:
    """Even mode count keeping the beam's Fourier tail below ``1e-10``.

    The beam energy at frequency ``n`` decays like ``exp(-h (n - xi0/h)^2)``.
    """
    spread = np.sqrt(30.0 / h)
    N = 2 * int(np.ceil(abs(xi0) / h + spread)) + 2
    return max(minimum, 1 << int(np.ceil(np.log2(N))))


def write_beam(beam: GaussianBeam, path) -> None:
    """CSV with columns ``x, re_u, im_u``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "re_u", "im_u"])
        for x, u in zip(beam.grid, beam.samples):
            w.writerow([f"{x:.17g}", f"{u.real:.17g}", f"{u.imag:.17g}"])
