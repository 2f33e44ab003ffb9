"""Plain-text export and import of the library's objects (CSV and JSON)."""

import csv
import json
from pathlib import Path

import numpy as np

from .tree import CellFunction

FLOAT = "{:.17g}"


def _addr(a):
    return ".".join(str(int(d)) for d in a) if len(a) else "root"


def _parse_addr(s):
    return () if s in ("", "root") else tuple(int(d) for d in s.split("."))


def _f(x):
    return FLOAT.format(float(x))


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def write_function(path, f):
    tree = f.tree
    rows = [(_addr(a), _f(v.real), _f(v.imag)) for a, v in zip(tree.addresses(tree.depth), f.values)]
    return _write_csv(path, ("address", "re", "im"), rows)


def read_function(path, tree):
    values = np.zeros(tree.n_leaves, dtype=complex)
    seen = np.zeros(tree.n_leaves, dtype=bool)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            x = tree.leaf(_parse_addr(row["address"]))
            values[x] = complex(float(row["re"]), float(row.get("im") or 0.0))
            seen[x] = True
    if not seen.all():
        raise ValueError(f"{path}: {int((~seen).sum())} leaf cells have no value")
    return CellFunction(tree, values)


def spectrum_rows(spectrum):
    rows = [{"scale": -1, "address": "root", "index": 0,
             "re": float(np.real(spectrum.mean)), "im": float(np.imag(spectrum.mean))}]
    for (j, a, i), c in zip(spectrum.system.keys(), spectrum.coefficients):
        rows.append({"scale": int(j), "address": _addr(a), "index": int(i),
                     "re": float(c.real), "im": float(c.imag)})
    return rows


def write_spectrum(path, spectrum):
    """JSON list of ``{scale, address, index, re, im}``; scale ``-1`` holds the mean."""
    return _write_json(path, spectrum_rows(spectrum))


def read_spectrum(path, system):
    rows = json.loads(Path(path).read_text())
    s = system.zeros()
    lookup = {(j, _addr(a), i): k for k, (j, a, i) in enumerate(system.keys())}
    for r in rows:
        c = complex(r["re"], r["im"])
        if r["scale"] == -1:
            s.mean = c
        else:
            s.coefficients[lookup[(r["scale"], r["address"], r["index"])]] = c
    return s


def write_eigen(path, eigen):
    header = ["scale", "address", "index", "m_h", "predicted_m", "rel_dev"]
    if eigen.reference_constant is not None:
        header.append("reference_m")
    rows = [[r[0], _addr(r[1]), r[2]] + [_f(v) for v in r[3:]] for r in eigen.rows()]
    return _write_csv(path, header, rows)


def write_besov(path, report):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.to_json() + "\n")
    return path


def write_convergence(stem, table, caption=""):
    """CSV, gnuplot-ready ``.dat`` and a caption manifest for one table."""
    stem = Path(stem)
    rows = [[_f(v) for v in r] for r in table.rows()]
    csv_path = _write_csv(stem.with_suffix(".csv"), ("t", "l2_err", "besov_err", "sup_err"), rows)
    dat = stem.with_suffix(".dat")
    dat.write_text("# t l2_err besov_err sup_err\n" + "".join(" ".join(r) + "\n" for r in rows))
    meta = _write_json(stem.with_suffix(".json"), {
        "caption": caption or f"errors of u(t) against u0, beta={table.beta}, lambda={table.lam}",
        "beta": table.beta, "lambda": table.lam, "monotone": table.monotone(),
        "columns": ["t", "l2_err", "besov_err", "sup_err"],
        "files": [csv_path.name, dat.name],
    })
    return csv_path, dat, meta


def write_field(path, field):
    tree = field.tree
    rows = [(_addr(a), _f(v)) for a, v in zip(tree.addresses(tree.depth), field.values)]
    return _write_csv(path, ("address", "value"), rows)


def write_geometry(path, tree, geometry, level=None):
    level = tree.depth if level is None else level
    rows = [(_addr(a), *(_f(c) for c in v.ravel()))
            for a, v in zip(tree.addresses(level), geometry.vertices[level])]
    return _write_csv(path, ("address", "x0", "y0", "x1", "y1", "x2", "y2"), rows)


def write_density(path, rows):
    out = [(_addr(a), _f(t), _f(re), _f(im), _f(p)) for a, t, re, im, p in rows]
    return _write_csv(path, ("address", "t", "re", "im", "abs2"), out)


__all__ = [
    "write_function", "read_function", "write_spectrum", "read_spectrum", "spectrum_rows",
    "write_eigen", "write_besov", "write_convergence", "write_field", "write_geometry",
    "write_density",
]
