"""Dense discretisations of the model operators.

Circle and torus models use the Fourier basis ``e_n = exp(i n x) / sqrt(2 pi)``
with ``n = -N/2 .. N/2 - 1``; multiplication by a trigonometric polynomial is
then an exactly banded Toeplitz matrix and ``hD_x`` is diagonal.  For
symbols that are linear in ``xi`` plus a function of ``x`` (or ``xi^2`` plus
a function of ``x``) the Weyl and standard quantisations coincide, so the
matrices below realise either.

The non-self-adjoint harmonic oscillator ``-d^2/dy^2 + i y^2`` uses Hermite
functions, where ``y^2`` is pentadiagonal.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .errors import SpectrumError, UnsupportedModel
from .symbols import (
    SemiclassicalSymbol,
    TrigPolynomial,
    circle_advection,
    nsa_harmonic,
    torus_schrodinger,
)

MAGIC = b"SSPC"

FOURIER_CIRCLE = "fourier-circle"
FOURIER_TORUS = "fourier-torus"
HERMITE_LINE = "hermite-line"


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    """A dense ``N x N`` complex matrix realising a model at parameter ``h``.

    ``bandwidth`` is the number of nonzero off-diagonals on each side and
    ``symbol`` the principal symbol of the realised operator, when known.
    """

    matrix: np.ndarray
    h: float
    model: str
    basis: str
    grid: dict = field(default_factory=dict)
    bandwidth: int | None = None
    symbol: SemiclassicalSymbol | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        if m.shape[0] < 16:
            raise ValueError("N must be at least 16")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix has non-finite entries")
        if not self.h > 0:
            raise ValueError("h must be positive")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def norm2(self) -> float:
        return float(la.norm(self.matrix, 2))

    def to_sparse(self) -> sp.csc_matrix:
        return sp.csc_matrix(self.matrix)

    def numerical_abscissa_left(self) -> float:
        """Smallest eigenvalue of the Hermitian part ``(A + A^*)/2``."""
        herm = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(la.eigvalsh(herm, subset_by_index=[0, 0])[0])

    def is_accretive(self, tol: float = 1e-10) -> bool:
        return self.numerical_abscissa_left() >= -tol

    def with_matrix(self, matrix, **changes) -> "DiscretizedOperator":
        kw = dict(h=self.h, model=self.model, basis=self.basis, grid=dict(self.grid),
                  bandwidth=self.bandwidth, symbol=self.symbol)
        kw.update(changes)
        return DiscretizedOperator(matrix, **kw)


def fourier_modes(N: int) -> np.ndarray:
    if N % 2:
        raise ValueError("N must be even")
    return np.arange(-N // 2, N // 2)


def toeplitz_from_trig(g: TrigPolynomial, N: int) -> np.ndarray:
    """Matrix of multiplication by ``g`` in the truncated Fourier basis."""
    coeffs = g.fourier()
    out = np.zeros((N, N), dtype=complex)
    for m, c in coeffs.items():
        if c != 0 and abs(m) < N:
            out += np.diag(np.full(N - abs(m), c), -m)
    return out


def _trig(spec, default) -> TrigPolynomial:
    if spec is None:
        return default
    if callable(spec) and not isinstance(spec, TrigPolynomial):
        raise UnsupportedModel("only trigonometric polynomial coefficients are supported")
    return TrigPolynomial.from_spec(spec)


def build_circle_model(g=None, h: float = 1 / 32, N: int = 128, rotate_about=None) -> DiscretizedOperator:
    """``hD_x + g(x)`` on the circle, optionally rotated to ``i (A - z0)``."""
    g = _trig(g, TrigPolynomial(cos=(1j,)))
    if N < 16:
        raise ValueError("N must be at least 16")
    if not h > 0:
        raise ValueError("h must be positive")
    n = fourier_modes(N)
    A = np.diag(h * n).astype(complex) + toeplitz_from_trig(g, N)
    if rotate_about is not None:
        z0 = complex(rotate_about)
        A = 1j * (A - z0 * np.eye(N))
    return DiscretizedOperator(
        A, h, "circle-advection", FOURIER_CIRCLE,
        grid={"modes": [int(n[0]), int(n[-1])],
              "rotate_about": None if rotate_about is None else [z0.real, z0.imag]},
        bandwidth=g.degree,
        symbol=circle_advection(g, rotate_about),
    )


def build_torus_schrodinger(V=None, h: float = 1 / 16, N: int = 128) -> DiscretizedOperator:
    """``-h^2 d^2/dx^2 + i V(x)`` on the circle."""
    V = _trig(V, TrigPolynomial(cos=(1.0,)))
    if not V.is_real:
        raise UnsupportedModel("the potential V must be real")
    n = fourier_modes(N)
    A = np.diag((h * n) ** 2).astype(complex) + 1j * toeplitz_from_trig(V, N)
    return DiscretizedOperator(
        A, h, "torus-schrodinger", FOURIER_TORUS,
        grid={"modes": [int(n[0]), int(n[-1])]},
        bandwidth=V.degree,
        symbol=torus_schrodinger(V),
    )


def position_squared_hermite(N: int) -> np.ndarray:
    """``y^2`` in the first ``N`` Hermite functions (exact entries, truncated)."""
    n = np.arange(N)
    off = np.sqrt((n[:-2] + 1) * (n[:-2] + 2)) / 2
    return np.diag(n + 0.5) + np.diag(off, 2) + np.diag(off, -2)


def build_hermite_oscillator(N: int = 200) -> DiscretizedOperator:
    """``Q = -d^2/dy^2 + i y^2`` in the Hermite-function basis, ``h = 1``."""
    if N < 32:
        raise ValueError("N must be at least 32")
    n = np.arange(N)
    A = np.diag(2.0 * n + 1).astype(complex) + (1j - 1) * position_squared_hermite(N)
    return DiscretizedOperator(A, 1.0, "nsa-harmonic", HERMITE_LINE, grid={"functions": N},
                               bandwidth=2, symbol=nsa_harmonic())


def build_nsa_rescaled(lam: float, N: int = 600) -> DiscretizedOperator:
    """``Q / lam``, i.e. ``-h^2 d^2/dx^2 + i x^2`` with ``h = 1 / lam``.

    Substituting ``y = sqrt(lam) x`` identifies the two; large spectral
    parameters ``E = i lam + mu`` of ``Q`` correspond to ``z = i + mu / lam``.
    """
    Q = build_hermite_oscillator(N)
    return Q.with_matrix(Q.matrix / lam, h=1.0 / lam, grid={"functions": N, "lambda": lam})


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    residual: float


def spectrum(op: DiscretizedOperator, sample: int = 10) -> SpectrumResult:
    """All eigenvalues by a dense non-symmetric solver.

    ``residual`` is ``max ||A v - lam v|| / ||v||`` over ``sample`` eigenpairs
    spread evenly through the list sorted by modulus.
    """
    if op.N > 4096:
        raise ValueError("dense eigensolves are limited to N <= 4096")
    try:
        w, v = la.eig(op.matrix)
    except la.LinAlgError as exc:
        cond = np.linalg.cond(op.matrix)
        raise SpectrumError(f"eigensolver failed ({exc}); condition estimate {cond:.3e}") from exc
    order = np.argsort(np.abs(w), kind="stable")
    w, v = w[order], v[:, order]
    idx = np.unique(np.linspace(0, len(w) - 1, min(sample, len(w))).round().astype(int))
    res = [np.linalg.norm(op.matrix @ v[:, i] - w[i] * v[:, i]) / np.linalg.norm(v[:, i]) for i in idx]
    return SpectrumResult(w, float(max(res)))


# ---------------------------------------------------------------------------
# binary matrix files
# ---------------------------------------------------------------------------


def write_matrix(op: DiscretizedOperator, path) -> None:
    """Write ``SSPC | u32 N | f64 h | N^2 (re, im) f64 pairs``, little-endian, row-major."""
    data = np.empty((op.N, op.N, 2), dtype="<f8")
    data[..., 0] = op.matrix.real
    data[..., 1] = op.matrix.imag
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Id", op.N, op.h))
        fh.write(data.tobytes(order="C"))


def read_matrix(path) -> tuple:
    """Inverse of :func:`write_matrix`; returns ``(matrix, h)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:4]!r}")
    N, h = struct.unpack("<Id", raw[4:16])
    body = np.frombuffer(raw[16:], dtype="<f8")
    if body.size != 2 * N * N:
        raise ValueError(f"{path}: expected {2 * N * N} floats, found {body.size}")
    body = body.reshape(N, N, 2)
    return body[..., 0] + 1j * body[..., 1], h
