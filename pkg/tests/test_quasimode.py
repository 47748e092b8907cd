import numpy as np
import pytest

from sspc.errors import ConstructionError, ResolutionError
from sspc.operators import build_circle_model, build_hermite_oscillator
from sspc.quasimode import (
    BlowupCertificate,
    beam_coefficients,
    beam_grid,
    certify_blowup,
    make_beam,
    modes_for_beam,
    residual,
    residual_sweep,
    width_fit,
    write_beam,
)
from sspc.symbols import circle_advection

SYM = circle_advection()
HS = [2.0**-k for k in range(5, 10)]


def build(h, N):
    return build_circle_model(h=h, N=N)


def test_beam_at_pi_half():
    h = 1 / 64
    beam = make_beam(SYM, (np.pi / 2, 0.0), h, beam_grid(h))
    assert beam.A == pytest.approx(1j, abs=1e-12)
    assert beam.value == pytest.approx(0.0, abs=1e-15)
    assert np.sum(np.abs(beam.samples) ** 2) * beam.dx == pytest.approx(1.0, abs=1e-12)


def test_beam_width_scales_like_sqrt_h():
    fit = width_fit(SYM, (np.pi / 3, 0.0), HS)
    assert fit.exponent == pytest.approx(1.0, abs=0.1)


def test_coarse_grid_is_rejected():
    with pytest.raises(ResolutionError):
        make_beam(SYM, (np.pi / 2, 0.0), 1 / 256, np.linspace(0, 2 * np.pi, 64, endpoint=False))


@pytest.mark.parametrize("x0", [-np.pi / 2, -np.pi / 3])
def test_negative_bracket_is_rejected(x0):
    with pytest.raises(ConstructionError):
        make_beam(SYM, (x0, 0.0), 1 / 64, beam_grid(1 / 64))


def test_residual_needs_matching_z():
    h = 1 / 64
    beam = make_beam(SYM, (np.pi / 3, 0.0), h, beam_grid(h))
    with pytest.raises(ValueError):
        residual(build(h, 128), beam, 0.1j)


def test_aliasing_is_rejected():
    h = 1 / 512
    beam = make_beam(SYM, (np.pi / 3, 0.0), h, beam_grid(h))
    with pytest.raises(ResolutionError):
        beam_coefficients(beam, build(h, 32))


def test_hermite_basis_is_rejected():
    h = 1 / 64
    beam = make_beam(SYM, (np.pi / 3, 0.0), h, beam_grid(h))
    with pytest.raises(ValueError):
        beam_coefficients(beam, build_hermite_oscillator(64))


def test_coefficients_keep_norm():
    h = 1 / 128
    beam = make_beam(SYM, (np.pi / 3, 0.0), h, beam_grid(h))
    c = beam_coefficients(beam, build(h, modes_for_beam(h)))
    assert np.linalg.norm(c) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("x0", [np.pi / 2, np.pi / 3])
def test_residual_sweep(x0):
    certs, fit = residual_sweep(SYM, (x0, 0.0), HS, build)
    assert fit.exponent >= 0.9
    assert all(c.holds for c in certs)


def test_certificate_product():
    assert BlowupCertificate(0.1, 0j, 1e-3, 0.0).product == np.inf
    assert BlowupCertificate(0.1, 0j, 1e-3, 1e-3).holds
    assert not BlowupCertificate(0.1, 0j, 1e-3, 2e-3).holds


def test_single_certificate():
    h = 1 / 32
    beam = make_beam(SYM, (np.pi / 3, 0.0), h, beam_grid(h))
    cert = certify_blowup(build(h, modes_for_beam(h)), beam)
    assert cert.z == pytest.approx(0.5j)
    assert cert.sigma_min <= cert.residual


def test_modes_for_beam_is_power_of_two():
    for h in HS:
        N = modes_for_beam(h)
        assert N >= 128 and N & (N - 1) == 0


def test_write_beam(tmp_path):
    h = 1 / 32
    beam = make_beam(SYM, (np.pi / 3, 0.0), h, beam_grid(h))
    path = tmp_path / "beam.csv"
    write_beam(beam, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,re_u,im_u"
    assert len(lines) == 1 + beam.grid.size
