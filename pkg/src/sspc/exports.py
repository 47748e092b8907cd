"""Deterministic CSV and JSON writers.

Floats are printed with 17 significant digits, lines end in LF and JSON
keys keep their insertion order, so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np


def fmt(v) -> str:
    """17 significant digits for floats; integers and strings verbatim."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _plain(obj):
    """Convert numpy scalars, arrays, complex numbers and tuples to JSON types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [_plain(obj.real), _plain(obj.imag)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            return str(v)
        # round-trips through repr at 17 digits
        return float(f"{v:.17g}")
    return obj


def write_json(path, record) -> Path:
    path = Path(path)
    text = json.dumps(_plain(record), indent=2, ensure_ascii=False)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text + "\n")
    return path


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_spectrum(path, eigenvalues) -> Path:
    return write_csv(path, ["re", "im"], ((z.real, z.imag) for z in np.asarray(eigenvalues)))


def write_map(path, pmap) -> Path:
    """Rows ``re_z, im_z, log10_norm`` in row-major lattice order (imaginary part outer)."""
    rows = []
    for j, y in enumerate(pmap.im):
        for i, x in enumerate(pmap.re):
            rows.append((x, y, pmap.values[j, i]))
    return write_csv(path, ["re_z", "im_z", "log10_norm"], rows)


def write_trace(path, trace) -> Path:
    return write_csv(path, ["t", "norm"], zip(trace.t, trace.norms))


def write_special_table(path, rows) -> Path:
    return write_csv(path, ["k", "s", "I", "bound_shape", "ratio"], rows)
