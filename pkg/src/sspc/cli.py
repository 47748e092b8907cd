"""Command line entry point: ``sspc run|validate|list-models|version``.

A run reads one JSON configuration, executes a single experiment and writes
CSV/JSON artifacts plus ``report.json`` into the output directory.  Exit
status is 0 on success, 2 when an assumption of the experiment fails and 1
on any other error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import exports
from .errors import AssumptionViolation, SSPCError, UnsupportedModel
from .hjb import (
    G_characteristic,
    PhaseLattice,
    certify_decay,
    evolve_G,
    orbit_points,
    stability_bound,
    write_slabs,
)
from .operators import (
    build_circle_model,
    build_nsa_rescaled,
    build_torus_schrodinger,
    spectrum,
)
from .quasimode import beam_grid, make_beam, residual_sweep, width_fit, write_beam
from .special import check_re2_bounds
from .spectral import (
    THRESHOLDS,
    critical_radius_sweep,
    fit_power_law,
    pseudospectrum_map,
    semigroup_decay_fit,
    semigroup_trace,
)
from .symbols import SYMBOLS, bracket_order, get_symbol

DEFAULT_OUT = "sspc-out"

# what each experiment measures, recorded in the report
TARGETS = {
    "pseudospectrum": "resolvent norm map log10 ||(z - P)^-1|| near the range of p",
    "semigroup": "semigroup decay ||exp(-tP/h)|| <= C exp(-t^(k+1) / (C h))",
    "critical-radius": "resolvent extension radius ~ (h log(1/h))^(k/(k+1))",
    "hjb": "weight decay G_t <= -t^(k+1) / C along the H_Im p orbit",
    "special": "regime bounds for I(s) = int exp(s t - t^(k+1)) dt",
    "quasimode": "Gaussian beam residual O(h) and resolvent blow-up at p(rho)",
    "brackets": "order k of the first nonvanishing H_Im p^j Re p",
}

MODEL_INFO = {
    "circle-advection": ("hD_x + g(x) on the circle", "g (trig), rotate_about [re, im]"),
    "torus-schrodinger": ("-h^2 d^2/dx^2 + i V(x) on the circle", "V (real trig)"),
    "nsa-harmonic": ("-h^2 d^2/dx^2 + i x^2 on the line, Hermite basis", "none"),
    "kfp": ("Kramers-Fokker-Planck symbol on R^4 (symbol only)", "quartic"),
}


class UsageError(SSPCError):
    """Configuration rejected before any computation."""


def load_schema() -> dict:
    text = resources.files("sspc").joinpath("data/config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_config(config) -> None:
    """Raise :class:`UsageError` naming the offending key."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise UsageError(f"config key {where}: {err.message}")


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc
    validate_config(config)
    return config


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------


def _model_params(config) -> tuple:
    model = config["model"]
    params = dict(model.get("params", {}))
    if "rotate_about" in params:
        re, im = params["rotate_about"]
        params["rotate_about"] = complex(re, im)
    return model["id"], params


def make_symbol(config):
    mid, params = _model_params(config)
    return get_symbol(mid, **params)


def make_operator(config, h: float, N: int | None = None):
    mid, params = _model_params(config)
    N = N or config.get("N")
    if mid == "circle-advection":
        return build_circle_model(params.get("g"), h, N or 128, params.get("rotate_about"))
    if mid == "torus-schrodinger":
        return build_torus_schrodinger(params.get("V"), h, N or 128)
    if mid == "nsa-harmonic":
        return build_nsa_rescaled(1.0 / h, N or 600)
    raise UnsupportedModel(f"model {mid!r} has no operator discretisation")


def _htag(h: float) -> str:
    return f"{h:.17g}"


# ---------------------------------------------------------------------------
# experiments; each returns (results, files, violation or None)
# ---------------------------------------------------------------------------


def run_pseudospectrum(config, out: Path, workers):
    opts = config["options"]
    results, files = [], []
    for h in config["h"]:
        op = make_operator(config, h)
        pmap = pseudospectrum_map(op, opts["zrect"], opts["nx"], opts["ny"], workers=workers)
        files.append(exports.write_map(out / f"map_h{_htag(h)}.csv", pmap))
        entry = {"h": h, "N": op.N, "max_log10_norm": float(pmap.values.max()),
                 "singular_nodes": int(pmap.singular.sum())}
        if opts.get("eigenvalues", True):
            spec = spectrum(op)
            files.append(exports.write_spectrum(out / f"spectrum_h{_htag(h)}.csv", spec.eigenvalues))
            entry["eigen_residual"] = spec.residual
        results.append(entry)
    return {"maps": results}, files, None


def run_semigroup(config, out: Path, workers):
    opts = config.get("options", {})
    t = np.linspace(0.0, opts.get("t_stop", 0.4), opts.get("t_num", 41))
    window = tuple(opts.get("window", (0.05, 0.4)))
    fits, files = [], []
    for h in config["h"]:
        trace = semigroup_trace(make_operator(config, h), t)
        files.append(exports.write_trace(out / f"trace_h{_htag(h)}.csv", trace))
        fit = semigroup_decay_fit(trace, window)
        fits.append({"h": h, **fit.to_record(), "max_norm": float(trace.norms.max())})
    files.append(exports.write_json(out / "fit.json", {"fits": fits}))
    return {"fits": fits}, files, None


def run_critical_radius(config, out: Path, workers):
    opts = config["options"]
    z0 = complex(*opts["z0"])
    direction = complex(*opts.get("direction", (1.0, 0.0)))
    thr = opts.get("threshold", {"rule": "polynomial"})
    rule = THRESHOLDS[thr["rule"]](**thr.get("params", {}))
    radii, fit = critical_radius_sweep(
        lambda h: make_operator(config, h), config["h"], z0, direction, rule,
        opts.get("delta_max", 0.5), opts.get("tol", 1e-3), workers=workers,
    )
    rows = [(r.h, r.delta, r.threshold, r.evaluations) for r in radii]
    # plain slope in h; for the rescaled oscillator mu* = delta* / h grows like h^(slope - 1)
    fit_h = fit_power_law([r.h for r in radii], [r.delta for r in radii])
    record = {"fit": fit.to_record(), "fit_h": fit_h.to_record()}
    files = [
        exports.write_csv(out / "radii.csv", ["h", "delta", "threshold", "evaluations"], rows),
        exports.write_json(out / "fit.json", record),
    ]
    return {"radii": [{"h": r[0], "delta": r[1]} for r in rows], **record}, files, None


def run_hjb(config, out: Path, workers):
    opts = config["options"]
    sym = make_symbol(config)
    lat_cfg = opts["lattice"]
    lat = PhaseLattice(tuple(lat_cfg["x_range"]), tuple(lat_cfg["xi_range"]),
                       lat_cfg["nx"], lat_cfg["nxi"], lat_cfg.get("periodic", False))
    t_end = opts.get("t_end", 0.5)
    dt = opts.get("dt", stability_bound(sym, lat))
    fields = evolve_G(sym, lat, t_end, dt)
    rho = tuple(opts["rho"])
    orbit = orbit_points(sym, rho, [f.t for f in fields])
    stride = opts.get("slab_stride", 10)
    write_slabs(fields[::stride], out / "slabs.csv")
    files = [out / "slabs.csv"]
    window = tuple(opts.get("window", (0.05, 0.5)))
    rows = []
    for f, o in zip(fields, orbit):
        if f.t > 0:
            rows.append((f.t, f.at(o), G_characteristic(sym, rho, f.t)))
    files.append(exports.write_csv(out / "orbit.csv", ["t", "G", "G_characteristic"], rows))
    fit = certify_decay(fields, opts.get("k", 2), orbit, window)
    ratios = [g / c for t, g, c in rows if c < 0 and window[0] <= t <= window[1]]
    record = {**fit.to_record(), "flags": list(fit.flags),
              "oracle_ratio": [min(ratios), max(ratios)], "G_max": max(float(f.values.max()) for f in fields)}
    files.append(exports.write_json(out / "fit.json", record))
    return record, files, None


def run_special(config, out: Path, workers):
    opts = config["options"]
    s = np.linspace(opts["s"]["start"], opts["s"]["stop"], opts["s"]["num"])
    rows, reports, violations = [], [], []
    for k in opts["k"]:
        rep = check_re2_bounds(k, s, budget=opts.get("budget", 10.0))
        rows.extend(rep.rows)
        reports.append({"k": k, "constants": rep.constants, "laplace": rep.laplace,
                        "violations": rep.violations})
        violations.extend(f"k={k}: {v}" for v in rep.violations)
    files = [
        exports.write_special_table(out / "table.csv", rows),
        exports.write_json(out / "regimes.json", {"reports": reports}),
    ]
    return {"reports": reports}, files, "; ".join(violations) or None


def run_quasimode(config, out: Path, workers):
    opts = config["options"]
    sym = make_symbol(config)
    rho = tuple(opts["rho"])
    ppw = opts.get("points_per_width", 16)
    hs = sorted(config["h"], reverse=True)
    certs, fit = residual_sweep(sym, rho, hs, lambda h, N: make_operator(config, h, N), ppw)
    rows = [(c.h, c.residual, c.sigma_min, c.product) for c in certs]
    files = [exports.write_csv(out / "residuals.csv", ["h", "residual", "sigma_min", "product"], rows)]
    if opts.get("export_beams", False):
        for h in hs:
            path = out / f"beam_h{_htag(h)}.csv"
            write_beam(make_beam(sym, rho, h, beam_grid(h, ppw)), path)
            files.append(path)
    wfit = width_fit(sym, rho, hs, ppw)
    record = {"residual_fit": fit.to_record(), "width_fit": wfit.to_record(),
              "certified": all(c.holds for c in certs)}
    files.append(exports.write_json(out / "fit.json", record))
    return record, files, None


def run_brackets(config, out: Path, workers, seed: int):
    opts = config["options"]
    sym = make_symbol(config)
    n = sym.dim
    points = [list(p) for p in opts.get("points", [])]
    if "random" in opts:
        rng = np.random.default_rng(seed)
        box = opts["random"]["box"]
        if len(box) != 2 * n:
            raise UsageError(f"options/random/box needs {2 * n} ranges for {sym.name}")
        lo = np.array([b[0] for b in box])
        hi = np.array([b[1] for b in box])
        points.extend(rng.uniform(lo, hi, size=(opts["random"]["count"], 2 * n)).tolist())
    rows, results = [], []
    for p in points:
        if len(p) != 2 * n:
            raise UsageError(f"points for {sym.name} need {2 * n} coordinates, got {len(p)}")
        rho = (tuple(p[:n]), tuple(p[n:]))
        cls = bracket_order(sym, rho, opts.get("j_max", 8), opts.get("tol", 1e-6))
        rows.append((*p, cls.order_k, cls.coefficient))
        results.append({"point": p, "order_k": cls.order_k, "coefficient": cls.coefficient})
    header = [f"x{i + 1}" for i in range(n)] + [f"xi{i + 1}" for i in range(n)] + ["order_k", "coefficient"]
    if n == 1:
        header = ["x", "xi", "order_k", "coefficient"]
    files = [exports.write_csv(out / "brackets.csv", header, rows)]
    return {"points": results}, files, None


def run(config, out_dir, workers=None) -> tuple:
    """Execute ``config`` into ``out_dir``; returns ``(exit_code, report)``."""
    validate_config(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kind = config["kind"]
    workers = workers or config.get("workers") or os.cpu_count() or 1
    seed = config.get("seed", 0)
    dispatch = {
        "pseudospectrum": run_pseudospectrum,
        "semigroup": run_semigroup,
        "critical-radius": run_critical_radius,
        "hjb": run_hjb,
        "special": run_special,
        "quasimode": run_quasimode,
    }
    report = {"tool": "sspc", "version": __version__, "kind": kind, "target": TARGETS[kind],
              "config": config}
    status, code = "ok", 0
    files = []
    try:
        if kind == "brackets":
            results, files, violation = run_brackets(config, out, workers, seed)
        else:
            results, files, violation = dispatch[kind](config, out, workers)
        report["results"] = results
        if violation:
            status, code = "assumption-violation", 2
            report["violation"] = violation
    except AssumptionViolation as exc:
        status, code = "assumption-violation", 2
        report["violation"] = f"{type(exc).__name__}: {exc}"
    report["status"] = status
    report["files"] = [
        {"name": Path(f).name, "sha256": exports.sha256(f), "bytes": Path(f).stat().st_size}
        for f in sorted(files, key=lambda p: Path(p).name)
    ]
    exports.write_json(out / "report.json", report)
    return code, report


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sspc", description="Semiclassical pseudospectra and semigroup experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment described by a JSON config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--out", type=Path, default=None, help="output directory (overrides SSPC_OUT and the config)")
    p_run.add_argument("--workers", type=int, default=None, help="parallel jobs (default: available cores)")
    p_run.add_argument("--quiet", action="store_true", help="suppress the summary on stderr")

    p_val = sub.add_parser("validate", help="check a config against the schema")
    p_val.add_argument("config", type=Path)

    sub.add_parser("list-models", help="list built-in models")
    sub.add_parser("version", help="print the version")
    return parser


def resolve_out(arg, config) -> Path:
    if arg is not None:
        return Path(arg)
    env = os.environ.get("SSPC_OUT")
    if env:
        return Path(env)
    return Path(config.get("output", DEFAULT_OUT))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "version":
            print(f"sspc {__version__}")
            return 0
        if args.command == "list-models":
            for name in sorted(SYMBOLS):
                desc, params = MODEL_INFO[name]
                print(f"{name:18s} {desc}; params: {params}")
            return 0
        config = load_config(args.config)
        if args.command == "validate":
            print(f"{args.config}: valid {config['kind']} config")
            return 0
        if args.workers is not None and args.workers < 1:
            raise UsageError("--workers must be at least 1")
        out = resolve_out(args.out, config)
        start = time.perf_counter()
        code, report = run(config, out, args.workers)
        if not args.quiet:
            # wall-clock goes to stderr only; artifacts stay byte-identical
            elapsed = time.perf_counter() - start
            print(f"{report['kind']}: {report['status']} in {elapsed:.2f} s -> {out}", file=sys.stderr)
            if "violation" in report:
                print(f"  {report['violation']}", file=sys.stderr)
        return code
    except AssumptionViolation as exc:
        print(f"sspc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (SSPCError, ValueError, OSError) as exc:
        print(f"sspc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
