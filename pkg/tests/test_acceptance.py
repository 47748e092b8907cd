"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line with the measured values and
the wall-clock time, whether or not its assertions hold.
"""

import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg as la
from scipy.special import gamma

from sspc.cli import THRESHOLDS, make_operator
from sspc.hjb import (
    G_characteristic,
    PhaseLattice,
    certify_decay,
    evolve_G,
    orbit_points,
    stability_bound,
)
from sspc.operators import build_circle_model, build_hermite_oscillator, spectrum
from sspc.quasimode import residual_sweep
from sspc.special import I_of_s, check_re2_bounds, laplace_ratio
from sspc.spectral import (
    critical_radius_sweep,
    fit_power_law,
    quadrature_resolvent,
    semigroup_decay_fit,
    semigroup_trace,
)
from sspc.symbols import accumulate_J, bracket_order, circle_advection, torus_schrodinger

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
ROTATED = circle_advection(rotate_about=1j)
HS = [2.0**-k for k in range(5, 11)]


@pytest.fixture
def verdict(capsys):
    """Call with ``(number, title, checks, detail)`` after measuring; prints and asserts."""
    start = time.perf_counter()

    def report(number, title, checks, detail, budget):
        elapsed = time.perf_counter() - start
        checks = dict(checks, runtime=elapsed <= budget)
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        with capsys.disabled():
            line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}; {elapsed:.1f} s"
            print("\n" + line + (f"  [failed: {', '.join(failed)}]" if failed else ""))
        assert ok, failed

    return report


def load(name):
    config = json.loads((CONFIGS / name).read_text())
    config.pop("output", None)
    return config


def test_criterion_01_J_closed_form(verdict):
    errs = [abs(accumulate_J(ROTATED, (0.0, 0.0), t) - (t - np.sin(t))) for t in (0.1, 0.5, 1.0)]
    ts = np.linspace(0.025, 0.3, 12)
    ratios = np.array([accumulate_J(ROTATED, (0.0, 0.0), t) / t**3 for t in ts])
    verdict(
        1, "J closed form",
        {"closed_form": max(errs) <= 1e-8,
         "small_t_ratio": bool(np.all((ratios >= 1 / 6.6) & (ratios <= 1 / 5.5)))},
        f"max error {max(errs):.2e}, J/t^3 in [{ratios.min():.4f}, {ratios.max():.4f}]",
        budget=1.0,
    )


def test_criterion_02_bracket_order(verdict):
    a = bracket_order(ROTATED, (0.0, 0.0))
    b = bracket_order(torus_schrodinger(), (np.pi / 2, 0.0))
    verdict(
        2, "bracket classification",
        {"rotated_circle": a.order_k == 2 and abs(a.coefficient - 1.0) <= 1e-4,
         "torus": b.order_k == 2 and abs(b.coefficient - 2.0) <= 1e-4},
        f"k={a.order_k} c={a.coefficient:.8f}; k={b.order_k} c={b.coefficient:.8f}",
        budget=1.0,
    )


def test_criterion_03_G_certification(verdict):
    lat = PhaseLattice((-np.pi, np.pi), (-4.0, 4.0), 128, 128, periodic=True)
    fields = evolve_G(ROTATED, lat, 0.5, stability_bound(ROTATED, lat))
    orbit = orbit_points(ROTATED, (0.0, 0.0), [f.t for f in fields])
    fit = certify_decay(fields, 2, orbit, window=(0.05, 0.5))
    ratios = [f.at(o) / G_characteristic(ROTATED, (0.0, 0.0), f.t)
              for f, o in zip(fields, orbit) if 0.05 <= f.t <= 0.5]
    g_max = max(float(f.values.max()) for f in fields)
    verdict(
        3, "G_t certification",
        {"G_nonpositive": g_max <= 0, "oracle_factor": 0.5 <= min(ratios) and max(ratios) <= 2,
         "exponent": 2.7 <= fit.exponent <= 3.3},
        f"max G {g_max:.1e}, oracle ratio [{min(ratios):.3f}, {max(ratios):.3f}], exponent {fit.exponent:.3f}",
        budget=120.0,
    )


def test_criterion_04_semigroup_decay(verdict):
    # N = 256: at N = 128 the truncated high modes put a floor under the decay
    t = np.linspace(0.0, 0.4, 41)
    exps, r2s, peak = [], [], 0.0
    for h in HS:
        tr = semigroup_trace(build_circle_model(h=h, N=256, rotate_about=1j), t)
        fit = semigroup_decay_fit(tr, (0.05, 0.4))
        exps.append(fit.exponent)
        r2s.append(fit.r_squared)
        peak = max(peak, float(tr.norms.max()))
    verdict(
        4, "semigroup decay",
        {"exponent": all(2.7 <= e <= 3.3 for e in exps), "r_squared": min(r2s) >= 0.98,
         "contraction": peak <= 1 + 1e-8},
        f"exponents [{min(exps):.3f}, {max(exps):.3f}], min r^2 {min(r2s):.4f}, max norm {peak:.12f}",
        budget=300.0,
    )


def test_criterion_05_quadrature_resolvent(verdict):
    h = 1 / 64
    op = build_circle_model(h=h, N=128, rotate_about=1j)
    I = np.eye(op.N)

    def rel_err(z):
        R = quadrature_resolvent(op, z, tail_tol=1e-10)
        D = la.inv(z * I - op.matrix)
        return la.norm(R - D, 2) / la.norm(D, 2)

    points = [-1.0, -0.5, -0.3 + 0.2j, -0.2 - 0.5j, -0.1, -0.05 + 1.0j, -0.02, -0.01 - 0.3j, 0.0, 0.7j]
    left = [rel_err(z) for z in points]
    inside = rel_err(0.5 * h ** (2 / 3))
    verdict(
        5, "quadrature resolvent",
        {"left_half_plane": max(left) <= 1e-3, "inside_range": inside <= 1e-2},
        f"max rel error {max(left):.1e} on Re z <= 0, {inside:.1e} at Re z = 0.5 h^(2/3)",
        budget=120.0,
    )


def radius_sweep(config):
    opts = config["options"]
    thr = opts["threshold"]
    rule = THRESHOLDS[thr["rule"]](**thr.get("params", {}))
    return critical_radius_sweep(
        lambda h: make_operator(config, h), config["h"], complex(*opts["z0"]),
        complex(*opts["direction"]), rule, opts["delta_max"], opts["tol"],
    )


def test_criterion_06_critical_radius(verdict):
    config = load("critical_radius.json")
    assert config["h"] == HS
    radii, fit = radius_sweep(config)
    verdict(
        6, "critical-radius scaling",
        {"slope": 0.57 <= fit.exponent <= 0.77},
        f"slope {fit.exponent:.3f} against h ln(1/h), r^2 {fit.r_squared:.4f}, "
        f"delta* {radii[0].delta:.4f}..{radii[-1].delta:.4f}",
        budget=600.0,
    )


def test_criterion_07_nsa_oscillator(verdict):
    ev = spectrum(build_hermite_oscillator(200)).eigenvalues[:10]
    target = (2 * np.arange(10) + 1) * np.exp(1j * np.pi / 4)
    ev_err = float(np.max(np.abs(ev - target)))
    config = load("nsa_radius.json")
    radii, _ = radius_sweep(config)
    lam = np.array([1 / r.h for r in radii])
    mu = np.array([r.delta / r.h for r in radii])
    fit = fit_power_law(lam, mu)
    verdict(
        7, "NSA harmonic oscillator",
        {"eigenvalues": ev_err <= 1e-6, "mu_exponent": 0.23 <= fit.exponent <= 0.43},
        f"eigenvalue error {ev_err:.1e}, mu* exponent {fit.exponent:.3f} over lambda in "
        f"[{lam.min():.0f}, {lam.max():.0f}]",
        budget=600.0,
    )


def test_criterion_08_special_regimes(verdict):
    s = np.linspace(-20, 20, 81)
    reports = {k: check_re2_bounds(k, s, budget=10.0) for k in (2, 4)}
    worst = max(c for r in reports.values() for c in r.constants.values())
    laplace = {k: laplace_ratio(k, 10.0) for k in (2, 4)}
    gam = max(abs(I_of_s(k, 0.0) - gamma((k + 2) / (k + 1))) for k in (2, 4))
    verdict(
        8, "special-function regimes",
        {"constants": all(r.passed for r in reports.values()) and worst <= 10,
         "laplace": all(0.3 <= v <= 3 for v in laplace.values()), "gamma": gam <= 1e-8},
        f"largest constant {worst:.3f}, Laplace ratio at s=10 "
        + ", ".join(f"k={k}: {v:.4f}" for k, v in laplace.items()) + f", I(0) error {gam:.1e}",
        budget=30.0,
    )


def test_criterion_09_quasimode(verdict):
    certs, fit = residual_sweep(circle_advection(), (np.pi / 3, 0.0), [2.0**-k for k in range(5, 10)],
                                lambda h, N: build_circle_model(h=h, N=N))
    products = [c.product for c in certs]
    verdict(
        9, "quasimode blow-up",
        {"slope": fit.exponent >= 0.9, "certificate": all(c.holds for c in certs)},
        f"residual slope {fit.exponent:.3f}, min residual * resolvent norm {min(products):.3e}",
        budget=120.0,
    )


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_10_determinism(verdict, tmp_path):
    names = ["pseudospectrum.json", "brackets.json", "special.json"]
    same, sizes = [], 0
    for name in names:
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag / Path(name).stem
            proc = subprocess.run([sys.executable, "-m", "sspc.cli", "run", str(CONFIGS / name),
                                   "--out", str(out), "--quiet"], capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            outs.append(tree(out))
        same.append(outs[0] == outs[1])
        sizes += len(outs[0])
    verdict(
        10, "determinism",
        {"byte_identical": all(same)},
        f"{sizes} files over {len(names)} configs, identical: {all(same)}",
        budget=600.0,
    )
