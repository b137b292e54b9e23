"""Command-line front end.

    luttrap density --set model.alpha0=-1 --out dens.csv
    luttrap density --config fig1.json --set figure.enabled=true

A run is described by one JSON config (defaults below, then ``--config``,
then ``--set`` overrides with dotted keys).  The resolved config is written
into every artifact, and all output is deterministic.
"""

import argparse
import copy
import csv
import io
import json
import sys
import time

import numpy as np

from . import couplings as cp
from .constants import MU_B, SPECIES
from .edoracle import BasisTooSmall, ConvergenceError, oracle_report
from .observables import GridTooCoarse, default_grid, density, duality_check, free_density, friedel_metrics, momentum
from .occupations import QuadratureError, occupation_matrix, particle_hole_violation, sum_rule
from .trapmodel import DEFAULT_MASS, DEFAULT_OMEGA, InteractionModel, ModelInvalidError, TrapConfig, validate_model

TASKS = ("density", "momentum", "occupations", "duality", "oracle", "couplings", "validate")

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULTS = {
    "task": "density",
    "trap": {"N": 10, "omega_l": DEFAULT_OMEGA, "mass": DEFAULT_MASS},
    "model": {"kind": "IM2", "alpha0": 1.0, "r_gamma": 0.3, "r_alpha": 0.4},
    "grid": {"range": None, "points": 2048},
    "quadrature": {"M_max": None, "method": "auto", "tol": None, "m_cut": None},
    "output": {"path": None, "format": "csv"},
    "figure": {"enabled": False},
    "oracle": {"sizes": [[4, 8], [6, 10]], "m_cut": 1},
    "couplings": {
        "potential": "dipole",
        "species": "Li6",
        "moment_bohr": None,
        "c6_au": None,
        "lam": None,
        "m": None,
        "p": None,
        "compare": "Cr53",
        "panel": [],
    },
}

# sections whose contents are checked elsewhere (model by InteractionModel)
_FREE_SECTIONS = {"model"}


class ConfigError(ValueError):
    pass


def _merge(base, override, path=""):
    for key, val in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config field {where!r}")
        if isinstance(base[key], dict) and key not in _FREE_SECTIONS:
            if not isinstance(val, dict):
                raise ConfigError(f"{where!r} must be an object")
            _merge(base[key], val, where + ".")
        else:
            base[key] = val
    return base


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _set_dotted(cfg, key, value):
    parts = key.split(".")
    node = cfg
    for i, part in enumerate(parts[:-1]):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown config field {'.'.join(parts[:i + 1])!r}")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict):
        raise ConfigError(f"cannot set {key!r}")
    if node is not cfg.get("model") and leaf not in node:
        raise ConfigError(f"unknown config field {key!r}")
    node[leaf] = value


def resolve_config(config=None, sets=(), task=None):
    """Defaults <- config dict <- dotted overrides; returns a new dict."""
    cfg = copy.deepcopy(DEFAULTS)
    if config:
        model = config.get("model")
        _merge(cfg, config)
        if model is not None:
            cfg["model"] = dict(model)
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        _set_dotted(cfg, key.strip(), _parse_value(val))
    if task is not None:
        cfg["task"] = task
    if cfg["task"] not in TASKS:
        raise ConfigError(f"unknown task {cfg['task']!r}")
    if cfg["output"]["format"] not in ("csv", "json"):
        raise ConfigError("output.format must be csv or json")
    return cfg


def _trap(cfg):
    t = cfg["trap"]
    try:
        return TrapConfig(t["N"], float(t["omega_l"]), float(t["mass"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"trap: {exc}") from exc


def _model(cfg, N):
    try:
        return InteractionModel.from_dict(cfg["model"], N=N)
    except ModelInvalidError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"model: {exc}") from exc


def _grid(cfg, N):
    g = cfg["grid"]
    if g["range"] is None:
        return default_grid(N, int(g["points"]))
    lo, hi = g["range"]
    return np.linspace(float(lo), float(hi), int(g["points"]))


def _occ(cfg, trap, model):
    q = cfg["quadrature"]
    return occupation_matrix(trap, model, q["M_max"], q["method"], q["tol"], q["m_cut"])


def _embedded(cfg):
    """The resolved config as recorded in artifacts; the output path is left
    out so that the same run written to two files is byte-identical."""
    cfg = copy.deepcopy(cfg)
    cfg["output"].pop("path", None)
    return cfg


def _header(cfg, extra=None):
    h = {"config": json.dumps(_embedded(cfg), sort_keys=True)}
    h.update(extra or {})
    return h


def _kv_csv(header, rows, columns):
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _json(cfg, payload):
    return json.dumps({"config": _embedded(cfg), **payload}, sort_keys=True, indent=1) + "\n"


def emit_figure_data(free, repulsive, attractive, header=None):
    """Three density curves on one grid as CSV: v, n_free, n_repulsive, n_attractive.

    ``free`` may be an array of values; the others are Profiles.
    """
    grid = repulsive.grid
    if not np.array_equal(grid, attractive.grid):
        raise ValueError("profiles are on different grids")
    free_vals = free.values if hasattr(free, "values") else np.asarray(free, dtype=float)
    if free_vals.shape != grid.shape:
        raise ValueError("free baseline does not match the grid")
    rows = zip(grid.tolist(), free_vals.tolist(), repulsive.values.tolist(), attractive.values.tolist())
    return _kv_csv(header or {}, rows, ["v", "n_free", "n_repulsive", "n_attractive"])


# ---- tasks ----------------------------------------------------------------

def _task_profile(cfg, kind):
    trap = _trap(cfg)
    model = _model(cfg, trap.N)
    grid = _grid(cfg, trap.N)
    fmt = cfg["output"]["format"]
    if kind == "density" and cfg["figure"]["enabled"]:
        if model.kind != "IM2":
            raise ConfigError("figure mode expects an IM2 model")
        a0 = abs(model.alpha0)
        pair = []
        for sign in (1, -1):
            spec = dict(cfg["model"], kind="IM2", alpha0=sign * a0)
            spec.pop("gamma0", None)
            spec.pop("sign", None)
            m = InteractionModel.from_dict(spec, N=trap.N)
            pair.append(density(trap, _occ(cfg, trap, m), grid))
        free = free_density(trap.N, grid)
        ratios = {f"friedel_ratio_{name}": repr(friedel_metrics(p, trap).ratio_to_free)
                  for name, p in zip(("repulsive", "attractive"), pair)}
        text = emit_figure_data(free, *pair, header=_header(cfg, ratios))
        if fmt == "json":
            text = _json(cfg, {"v": grid.tolist(), "n_free": free.tolist(),
                               "n_repulsive": pair[0].values.tolist(),
                               "n_attractive": pair[1].values.tolist(),
                               **{k: float(v) for k, v in ratios.items()}})
        return text, f"figure N={trap.N} " + " ".join(f"{k}={v}" for k, v in ratios.items())
    occ = _occ(cfg, trap, model)
    prof = (density if kind == "density" else momentum)(trap, occ, grid)
    rule = sum_rule(occ)
    extra = {**prof.header(), "sum_rule_residual": repr(rule.residual)}
    if fmt == "csv":
        text = prof.to_csv(_header(cfg, extra))
    else:
        text = _json(cfg, {**prof.to_dict(), "sum_rule_residual": rule.residual})
    return text, f"{kind} {occ.model_id} integral={prof.integral:.10g} sum_rule_residual={rule.residual:.3e}"


def _task_occupations(cfg):
    trap = _trap(cfg)
    model = _model(cfg, trap.N)
    occ = _occ(cfg, trap, model)
    rule = sum_rule(occ)
    ph = particle_hole_violation(occ)
    if cfg["output"]["format"] == "json":
        text = _json(cfg, {"occupations": occ.to_dict(), "sum_rule_residual": rule.residual,
                           "particle_hole_violation": ph})
    else:
        rows = [(M, p, float(v)) for (M, p), v in sorted(occ.entries.items())]
        text = _kv_csv(_header(cfg, {"model_id": occ.model_id, "sum_rule_residual": repr(rule.residual),
                                     "particle_hole_violation": repr(ph)}),
                       rows, ["M", "p", "value"])
    return text, f"occupations {occ.model_id} entries={len(occ.entries)} sum_rule_residual={rule.residual:.3e}"


def _task_duality(cfg):
    trap = _trap(cfg)
    model = _model(cfg, trap.N)
    if model.kind != "IM1":
        raise ConfigError("duality expects an IM1 model")
    alpha1 = model.couplings(1)[1]
    q = cfg["quadrature"]
    rep = duality_check(trap, alpha1, _grid(cfg, trap.N), q["M_max"])
    payload = {"alpha1": alpha1, "max_deviation": rep.max_deviation, "tol": rep.tol, "passed": rep.passed}
    if cfg["output"]["format"] == "json":
        text = _json(cfg, payload)
    else:
        text = _kv_csv(_header(cfg), [(k, payload[k]) for k in sorted(payload)], ["key", "value"])
    return text, f"duality alpha1={alpha1:.6g} max_deviation={rep.max_deviation:.3e}"


def _task_oracle(cfg):
    trap = _trap(cfg)
    model = _model(cfg, trap.N)
    o = cfg["oracle"]
    rep = oracle_report(trap.N, model, tuple(tuple(s) for s in o["sizes"]), int(o["m_cut"]))
    if cfg["output"]["format"] == "json":
        text = _json(cfg, rep.to_dict())
    else:
        cols = ["lo", "hi", "dim", "max_diag", "rms_diag", "max_offdiag"]
        rows = [[r.to_dict()[c] for c in cols] for r in rep.runs]
        text = _kv_csv(_header(cfg, {"monotone": rep.monotone}), rows, cols)
    return text, f"oracle N={trap.N} max_diag=" + ",".join(f"{r.max_diag:.3e}" for r in rep.runs)


def _task_couplings(cfg):
    trap = _trap(cfg)
    c = cfg["couplings"]
    if c["species"] not in SPECIES:
        raise ConfigError(f"unknown species {c['species']!r}; known: {sorted(SPECIES)}")
    sp = SPECIES[c["species"]]
    if c["potential"] == "dipole":
        mu = sp.magnetic_equivalent() if c["moment_bohr"] is None else float(c["moment_bohr"]) * MU_B
        pot = cp.dipole_potential(mu, trap, c["lam"])
    elif c["potential"] == "vdw":
        c6 = c["c6_au"] if c["c6_au"] is not None else sp.c6_au
        if c6 is None:
            raise ConfigError(f"species {sp.name} has no C6; set couplings.c6_au")
        pot = cp.vdw_potential(cp.a_from_c6(float(c6)), trap, c["lam"])
    else:
        raise ConfigError("couplings.potential must be dipole or vdw")
    est = cp.estimate_v1(pot, trap, c["m"], c["p"])
    payload = {"potential": pot.kind, "prefactor": est.prefactor, "integral": est.integral,
               "v1": est.value, "m": est.m, "p": est.p}
    if c["compare"]:
        if c["compare"] not in SPECIES:
            raise ConfigError(f"unknown species {c['compare']!r}")
        payload["enhancement"] = cp.species_enhancement(sp, SPECIES[c["compare"]])
    elements = [cp.matrix_element_exact(pot, *map(int, idx)) for idx in c["panel"]]
    if cfg["output"]["format"] == "json":
        payload["panel"] = [{"indices": list(e.indices), "value": e.value, "method": e.method} for e in elements]
        text = _json(cfg, payload)
    else:
        header = _header(cfg, {k: repr(v) if isinstance(v, float) else v for k, v in payload.items()})
        text = _kv_csv(header, [(*e.indices, e.value, e.method) for e in elements],
                       ["m", "p", "q", "n", "value", "method"])
    return text, f"couplings {pot.kind} prefactor={est.prefactor:.4g} integral={est.integral:.4g}"


def _task_validate(cfg):
    trap = _trap(cfg)
    model = _model(cfg, trap.N)
    # IM2 tails need a few hundred modes to fall below the 1e-6 stability tolerance
    rep = validate_model(model, m_max=max(4 * trap.N, 400))
    occ = _occ(cfg, trap, model)
    rule = sum_rule(occ)
    ph = particle_hole_violation(occ)
    checks = {
        "coupling_consistency": rep.ok,
        "sum_rule": abs(rule.residual) <= 1e-6,
        "particle_hole": ph <= 1e-7,
    }
    payload = {"checks": checks, "sum_rule_residual": rule.residual, "particle_hole_violation": ph,
               "validation": rep.to_dict()}
    if cfg["output"]["format"] == "json":
        text = _json(cfg, payload)
    else:
        text = _kv_csv(_header(cfg), [(k, checks[k]) for k in sorted(checks)], ["check", "passed"])
    ok = all(checks.values())
    return text, f"validate {model.model_id} " + " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()), ok


def run(cfg, out=None, err=None):
    """Execute a resolved config.  Returns the exit status."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    t0 = time.perf_counter()
    try:
        task = cfg["task"]
        ok = True
        if task in ("density", "momentum"):
            text, summary = _task_profile(cfg, task)
        elif task == "occupations":
            text, summary = _task_occupations(cfg)
        elif task == "duality":
            text, summary = _task_duality(cfg)
        elif task == "oracle":
            text, summary = _task_oracle(cfg)
        elif task == "couplings":
            text, summary = _task_couplings(cfg)
        else:
            text, summary, ok = _task_validate(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    except ModelInvalidError as exc:
        print(f"invalid model: {exc}", file=err)
        return EXIT_MODEL
    except (QuadratureError, ConvergenceError, GridTooCoarse, BasisTooSmall) as exc:
        print(f"numerical failure: {exc}", file=err)
        return EXIT_NUMERIC
    path = cfg["output"]["path"]
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    print(f"{summary} time={time.perf_counter() - t0:.2f}s", file=err)
    return EXIT_OK if ok else EXIT_MODEL


def build_parser():
    parser = argparse.ArgumentParser(prog="luttrap", description="Luttinger-model observables for trapped 1D fermions.")
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry by dotted path, e.g. model.alpha0=-1")
    parser.add_argument("--out", help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"))
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = None
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                config = json.load(fh)
            if not isinstance(config, dict):
                raise ConfigError("config file must hold a JSON object")
        sets = list(args.set)
        if args.out:
            sets.append(f"output.path={json.dumps(args.out)}")
        if args.format:
            sets.append(f"output.format={json.dumps(args.format)}")
        cfg = resolve_config(config, sets, args.task)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
