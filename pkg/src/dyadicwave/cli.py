"""Command-line harness: reproducible runs driven by a JSON config.

Exit codes: 0 all checks passed, 1 an invariant failed, 2 the config (or a
tree file it names) is invalid.
"""

import argparse
import hashlib
import json
import logging
import platform
import re
import sys
from importlib import metadata
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__, io
from .besov import besov_report
from .evolution import check_equation, convergence_study, evolve, partial_sums, sample_points
from .gasket import build_gasket, decay_spectrum, explicit_gasket_wavelets, flow_experiment
from .haar import analyze, build_haar, project, synthesize
from .maximal import bound_constants, bound_report_json, default_t_grid, m_dy, m_sharp, s_maximal
from .operator import RatioNonconstancyError, gasket_reference_constant, measure_eigenvalues
from .tree import TreeError, build_uniform_tree, load_tree

log = logging.getLogger("dyadicwave")

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2

_order = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_times = {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["tree"],
    "properties": {
        "tree": {
            "type": "object",
            "oneOf": [
                {"required": ["uniform"]},
                {"required": ["gasket"]},
                {"required": ["file"]},
                {"required": ["children"]},
            ],
            "properties": {
                "uniform": {
                    "type": "object", "required": ["b", "N"], "additionalProperties": False,
                    "properties": {"b": {"type": "integer", "minimum": 2, "maximum": 8},
                                   "N": {"type": "integer", "minimum": 1}},
                },
                "gasket": {
                    "type": "object", "required": ["N"], "additionalProperties": False,
                    "properties": {"N": {"type": "integer", "minimum": 1}},
                },
                "file": {"type": "string"},
                "measure": {"type": "number"},
                "children": {"type": "array"},
            },
        },
        "beta": _order,
        "lambda": _order,
        "sigma": _order,
        "t": _times,
        "tau": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "samples": {
            "type": "object", "additionalProperties": False,
            "properties": {"count": {"type": "integer", "minimum": 1}},
        },
        "f": {
            "type": "object", "additionalProperties": False, "required": ["kind"],
            "properties": {
                "kind": {"enum": ["random", "decay", "wavelet", "file"]},
                "complex": {"type": "boolean"},
                "exponent": {"type": "number"},
                "index": {"type": "integer", "minimum": 0},
                "path": {"type": "string"},
                "count": {"type": "integer", "minimum": 1},
            },
        },
        "tolerances": {
            "type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0},
        },
    },
}

DEFAULT_TOL = {"basis": 1e-12, "eigen": 1e-10, "unitary": 1e-12, "maximal": 1e-12, "gasket": 1e-12}


class ConfigError(Exception):
    pass


def _line_of(text, path):
    """Best-effort line number of the JSON node at ``path`` inside ``text``."""
    pos = 0
    for part in path:
        if isinstance(part, str):
            m = re.compile(r'"%s"\s*:' % re.escape(part)).search(text, pos)
            if m is None:
                break
            pos = m.start()
        else:
            # skip to the part-th element of the array that follows
            start = text.find("[", pos)
            if start < 0:
                break
            depth, k, i = 0, 0, start + 1
            while i < len(text) and k < part:
                ch = text[i]
                if ch in "[{":
                    depth += 1
                elif ch in "]}":
                    depth -= 1
                elif ch == "," and depth == 0:
                    k += 1
                i += 1
            pos = i
    return text.count("\n", 0, pos) + 1


def load_config(path):
    """Parse and validate; errors carry ``file:line`` prefixes."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from None
    errors = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(cfg),
                    key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        msgs = []
        for e in errors:
            where = "/".join(map(str, e.absolute_path)) or "<root>"
            msgs.append(f"{path}:{_line_of(text, list(e.absolute_path))}: {where}: {e.message}")
        raise ConfigError("\n".join(msgs))
    if "beta" in cfg and "lambda" in cfg and not cfg["beta"] < cfg["lambda"]:
        line = _line_of(text, ["lambda"])
        raise ConfigError(f"{path}:{line}: lambda: need beta < lambda, got {cfg['beta']} >= {cfg['lambda']}")
    return cfg, text.encode()


def _tree(cfg, base):
    spec = cfg["tree"]
    try:
        if "uniform" in spec:
            return build_uniform_tree(spec["uniform"]["b"], spec["uniform"]["N"]), None
        if "gasket" in spec:
            return build_gasket(spec["gasket"]["N"])
        if "file" in spec:
            p = Path(spec["file"])
            return load_tree(p if p.is_absolute() else base / p), None
        return load_tree(spec), None
    except (TreeError, OSError, ValueError, KeyError, TypeError) as e:
        raise ConfigError(f"tree: {e}") from None


def _need(cfg, key, default=None):
    if key in cfg:
        return cfg[key]
    if default is not None:
        return default
    raise ConfigError(f"config needs '{key}' for this command")


def _rng(cfg):
    if "seed" not in cfg:
        raise ConfigError("a seed is required for randomized runs (config 'seed' or --seed)")
    return np.random.default_rng(cfg["seed"])


def _random_function(tree, rng, complex_=False):
    v = rng.standard_normal(tree.n_leaves)
    if complex_:
        v = v + 1j * rng.standard_normal(tree.n_leaves)
    f = tree.function(v)
    return f - tree.constant(f.integral())


def _initial(cfg, tree, system, base):
    """Initial data from the ``f`` block (default: random, zero mean)."""
    spec = cfg.get("f", {"kind": "random"})
    kind = spec["kind"]
    if kind == "random":
        return _random_function(tree, _rng(cfg), spec.get("complex", False))
    if kind == "decay":
        exponent = spec.get("exponent", _need(cfg, "lambda") + 0.1)
        return synthesize(decay_spectrum(system, exponent))
    if kind == "wavelet":
        k = spec.get("index", 0)
        if k >= len(system):
            raise ConfigError(f"f.index {k} out of range ({len(system)} wavelets)")
        return system.function(k)
    p = Path(_need(spec, "path"))
    try:
        return io.read_function(p if p.is_absolute() else base / p, tree)
    except (OSError, ValueError, KeyError) as e:
        raise ConfigError(f"f.path: {e}") from None


class Run:
    def __init__(self, command, cfg, raw, out, threads):
        self.command = command
        self.cfg = cfg
        self.raw = raw
        self.out = Path(out)
        self.threads = threads
        self.outputs = []
        self.checks = {}
        self.tol = dict(DEFAULT_TOL, **cfg.get("tolerances", {}))

    def path(self, name):
        self.outputs.append(name)
        return self.out / name

    def check(self, name, value, limit):
        ok = bool(value <= limit)
        self.checks[name] = {"value": float(value), "limit": float(limit), "pass": ok}
        if not ok:
            log.error("invariant failed: %s = %.3e > %.3e", name, value, limit)
        return ok

    @property
    def passed(self):
        return all(c["pass"] for c in self.checks.values())

    def write_json(self, name, obj):
        io._write_json(self.path(name), obj)

    def manifest(self):
        return {
            "command": self.command,
            "config_sha256": hashlib.sha256(self.raw).hexdigest(),
            "config": self.cfg,
            "seed": self.cfg.get("seed"),
            "threads": self.threads,
            "versions": {
                "dyadicwave": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "jsonschema": metadata.version("jsonschema"),
            },
            "outputs": sorted(self.outputs),
            "checks": self.checks,
            "status": "pass" if self.passed else "fail",
        }


def _max_gram_error(system):
    H = system.dense()
    G = (H * system.tree.leaf_measures) @ H.T
    return float(np.abs(G - np.eye(len(system))).max())


def cmd_verify_basis(run, tree, system, geom, base):
    mu = tree.leaf_measures
    H = system.dense()
    orth = _max_gram_error(system)
    means = float(np.abs(H @ mu).max()) if len(system) else 0.0
    rng = _rng(run.cfg)
    count = run.cfg.get("f", {}).get("count", 8)
    pars = rt = 0.0
    for _ in range(count):
        v = rng.standard_normal(tree.n_leaves) + 1j * rng.standard_normal(tree.n_leaves)
        f = tree.function(v)
        s = analyze(f, system)
        pars = max(pars, abs(s.norm2() - f.norm() ** 2) / f.norm() ** 2)
        rt = max(rt, float(np.abs(synthesize(s).values - f.values).max() / np.abs(v).max()))
    tol = run.tol["basis"]
    run.check("orthonormality", orth, tol)
    run.check("wavelet_mean", means, tol)
    run.check("parseval", pars, tol)
    run.check("round_trip", rt, tol)
    run.write_json("verify_basis.json", {"n_leaves": tree.n_leaves, "n_wavelets": len(system),
                                         "functions": count, "worst": {k: v["value"] for k, v in run.checks.items()}})


def _eigen(run, system, geom):
    beta = _need(run.cfg, "beta")
    reference = gasket_reference_constant(beta) if geom is not None else None
    try:
        return measure_eigenvalues(system, beta, tol=run.tol["eigen"], workers=run.threads,
                                   reference_constant=reference)
    except RatioNonconstancyError as e:
        run.checks["ratio_constancy"] = {"value": float("inf"), "limit": run.tol["eigen"], "pass": False}
        log.error("%s", e)
        return None


def cmd_eigen(run, tree, system, geom, base):
    eigen = _eigen(run, system, geom)
    if eigen is None:
        return
    beta = eigen.beta
    run.check("closed_form", float(np.abs(eigen.m - eigen.predicted).max()), run.tol["eigen"])
    io.write_eigen(run.path("eigen.csv"), eigen)
    rows = [[j, io._f(a), io._f(b)] + ([io._f(eigen.reference_constant)] if eigen.reference_constant else [])
            for j, (a, b) in sorted(eigen.per_scale().items())]
    header = ["scale", "mean_m_h", "mean_predicted_m"] + (["reference_m"] if eigen.reference_constant else [])
    io._write_csv(run.path("eigen_per_scale.csv"), header, rows)
    lo, hi = eigen.bounds
    summary = {"beta": beta, "m_min": lo, "m_max": hi,
               "max_closed_form_error": run.checks["closed_form"]["value"],
               "max_ratio_deviation": float(eigen.rel_dev.max())}
    if eigen.reference_constant is not None:
        summary["reference_constant"] = eigen.reference_constant
        summary["reference_constant_rel_dev"] = float(np.abs(eigen.m / eigen.reference_constant - 1).max())
    run.write_json("eigen_summary.json", summary)


def cmd_besov(run, tree, system, geom, base):
    sigma = _need(run.cfg, "sigma", run.cfg.get("lambda"))
    f = _initial(run.cfg, tree, system, base)
    report = besov_report(f, system, sigma)
    io.write_besov(run.path("besov.json"), report)
    io.write_spectrum(run.path("spectrum.json"), analyze(f, system))


def _zero_mean_spectrum(f, system):
    s = analyze(f, system)
    if abs(s.mean) > 1e-12 * max(1.0, f.norm()):
        raise ConfigError("initial data must have zero mean")
    return s.replace(mean=0.0)


def cmd_evolve(run, tree, system, geom, base):
    times = _need(run.cfg, "t", [0.0, 0.1, 1.0])
    eigen = _eigen(run, system, geom)
    if eigen is None:
        return
    f = _initial(run.cfg, tree, system, base)
    u0 = _zero_mean_spectrum(f, system)
    w = system.cube_measure ** (-2.0 * run.cfg.get("lambda", eigen.beta))
    e0 = float(np.sum(np.abs(u0.coefficients) ** 2 * w))
    rows, drift = [], 0.0
    for i, t in enumerate(times):
        u = evolve(u0, t, eigen)
        uf = u.function()
        io.write_function(run.path(f"u_{i:03d}.csv"), uf)
        n2 = uf.norm() ** 2
        e = float(np.sum(np.abs(u.spectrum.coefficients) ** 2 * w))
        drift = max(drift, abs(n2 - f.norm() ** 2) / max(f.norm() ** 2, 1e-300),
                    abs(e - e0) / max(e0, 1e-300))
        if t == 0:
            run.check("identity_at_zero", float(np.abs(uf.values - f.values).max()), run.tol["unitary"])
        rows.append([io._f(t), io._f(n2), io._f(e), f"u_{i:03d}.csv"])
    run.check("conservation", drift, run.tol["unitary"])
    io._write_csv(run.path("evolve.csv"), ("t", "l2_norm2", "besov_energy", "file"), rows)


def cmd_converge(run, tree, system, geom, base):
    lam = _need(run.cfg, "lambda")
    times = _need(run.cfg, "t", [1e-1, 1e-2, 1e-3, 1e-4])
    eigen = _eigen(run, system, geom)
    if eigen is None:
        return
    cfg = dict(run.cfg)
    cfg.setdefault("f", {"kind": "decay"})
    u0 = _zero_mean_spectrum(_initial(cfg, tree, system, base), system)
    samples = sample_points(tree, run.cfg.get("samples", {}).get("count", 64))
    table = convergence_study(u0, eigen, lam, times, samples)
    io.write_convergence(run.path("convergence.csv").with_suffix(""), table)
    run.outputs += ["convergence.dat", "convergence.json"]
    run.checks["monotone"] = {"value": float(not table.monotone()), "limit": 0.0, "pass": table.monotone()}
    if not table.monotone():
        log.error("invariant failed: convergence table is not monotone")
    taus = run.cfg.get("tau", [1e-3, 5e-4, 2.5e-4])
    t = max(times)
    res = [check_equation(u0, t, eigen, tau, lam) for tau in taus]
    io._write_csv(run.path("residual.csv"), ("t", "tau", "l2", "besov", "max_phase_step", "step_too_coarse"),
                  [[io._f(r.t), io._f(r.tau), io._f(r.l2), io._f(r.besov), io._f(r.max_phase_step),
                    int(r.step_too_coarse)] for r in res])


def cmd_maximal(run, tree, system, geom, base):
    lam = _need(run.cfg, "lambda")
    eigen = _eigen(run, system, geom)
    if eigen is None:
        return
    f = _initial(run.cfg, tree, system, base)
    u0 = _zero_mean_spectrum(f, system)
    f = synthesize(u0)
    md, ms = m_dy(f), m_sharp(f, lam)
    S0 = partial_sums(u0, 0.0, eigen)
    proj = max(float(np.abs(S0[n] - project(f, system, n + 1).values).max()) for n in range(tree.depth))
    run.check("partial_sum_is_projection", proj, run.tol["maximal"])
    over = np.abs(S0).max(axis=0) - md.values
    run.check("dyadic_domination", float(max(over.max(), 0.0)), run.tol["maximal"])
    t_grid = run.cfg.get("t") or list(default_t_grid())
    t_grid = [t for t in t_grid if 0 < t < 1]
    if not t_grid:
        raise ConfigError("t: maximal needs at least one time inside (0, 1)")
    star = s_maximal(u0, eigen, t_grid)
    consts = bound_constants(u0, eigen, lam, t_grid)
    io.write_field(run.path("m_dy.csv"), md)
    io.write_field(run.path("m_sharp.csv"), ms)
    io.write_field(run.path("s_star.csv"), star)
    p = run.path("bounds.json")
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(bound_report_json([consts]))
    finite = all(np.isfinite(v) for v in [consts["C_b"], consts["C_c"]] + consts["C_a"] + consts["C_diff"])
    run.checks["constants_finite"] = {"value": float(not finite), "limit": 0.0, "pass": finite}


def cmd_gasket_demo(run, tree, system, geom, base):
    if geom is None:
        tree, geom = build_gasket(run.cfg["tree"].get("uniform", {}).get("N", tree.depth))
        system = build_haar(tree)
    explicit = explicit_gasket_wavelets(tree.depth, tree)
    stencil_err = max((float(abs(explicit.W[j] - system.W[j]).max()) for j in range(tree.depth)), default=0.0)
    run.check("gasket_stencils", stencil_err, run.tol["gasket"])
    inside = 0.0
    for j in range(1, tree.depth + 1):
        kids, par = geom.vertices[j], geom.vertices[j - 1][tree.parents[j]]
        # barycentric coordinates of child vertices in the parent triangle
        a, b, c = par[:, 0], par[:, 1], par[:, 2]
        T = np.stack([b - a, c - a], axis=-1)
        lam_ = np.linalg.solve(T[:, None], (kids - a[:, None])[..., None])[..., 0]
        bary = np.concatenate([lam_, 1 - lam_.sum(-1, keepdims=True)], axis=-1)
        inside = max(inside, float(max(-bary.min(), 0.0)))
        run.check(f"area_ratio_{j}", float(np.abs(geom.areas(j) / geom.areas(j - 1)[tree.parents[j]] - 0.25).max()),
                  run.tol["gasket"])
        run.check(f"measure_ratio_{j}",
                  float(np.abs(tree.measures[j] / tree.measures[j - 1][tree.parents[j]] - 1 / 3).max()),
                  run.tol["gasket"])
    run.check("vertices_inside_parent", inside, run.tol["gasket"])
    beta = _need(run.cfg, "beta")
    lam = _need(run.cfg, "lambda")
    cfg = dict(run.cfg)
    cfg.setdefault("f", {"kind": "decay"})
    f = _initial(cfg, tree, system, base)
    times = [t for t in _need(run.cfg, "t", [1e-1, 1e-2, 1e-3]) if t > 0]
    res = flow_experiment(f, system, geom, beta, lam, times, tau=min(run.cfg.get("tau", [1e-3])))
    io.write_geometry(run.path("geometry.csv"), tree, geom)
    io.write_density(run.path("density.csv"), res.density)
    io.write_eigen(run.path("eigen.csv"), res.eigen)
    io.write_convergence(run.path("convergence.csv").with_suffix(""), res.table,
                         caption="gasket: errors of u(t) against u0 as t decreases")
    run.outputs += ["convergence.dat", "convergence.json"]
    run.checks["monotone"] = {"value": float(not res.table.monotone()), "limit": 0.0,
                              "pass": res.table.monotone()}


COMMANDS = {
    "verify-basis": cmd_verify_basis,
    "eigen": cmd_eigen,
    "besov": cmd_besov,
    "evolve": cmd_evolve,
    "converge": cmd_converge,
    "maximal": cmd_maximal,
    "gasket-demo": cmd_gasket_demo,
}


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="dyadicwave", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, metavar="PATH")
        s.add_argument("--out", default="out", metavar="DIR")
        s.add_argument("--threads", type=int, default=1, metavar="K")
        s.add_argument("--seed", type=_seed, metavar="U64")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, raw = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        run = Run(args.command, cfg, raw, args.out, args.threads)
        try:
            run.out.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"--out: cannot create {run.out}: {e.strerror}") from None
        tree, geom = _tree(cfg, Path(args.config).resolve().parent)
        system = build_haar(tree)
        COMMANDS[args.command](run, tree, system, geom, Path(args.config).resolve().parent)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    run.write_json("manifest.json", run.manifest())
    for name, c in run.checks.items():
        print(f"{'PASS' if c['pass'] else 'FAIL'} {name} {c['value']:.3e} (limit {c['limit']:.1e})")
    print(f"wrote {len(run.outputs)} files to {run.out}")
    return EXIT_OK if run.passed else EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
