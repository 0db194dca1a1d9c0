"""fraclame command line: apply, verify, kernels, extend, dirichlet.

Each command reads an optional JSON config (--config) and flat overrides of the
form --key=value (values parsed as JSON when possible, so --s=0.5 and
--routes='["spectral","quadrature"]' both work; dotted keys reach nested
records, e.g. --mask.params.radius=0.8). Exit codes: 0 ok, 2 usage or schema
error, 3 accuracy or solver failure (including failed verification checks).
"""

import argparse
import copy
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import acceptance, fieldio
from . import dirichlet as dr
from . import extension as ex
from . import fields as fl
from . import kernels as kn
from . import quadrature as q
from .errors import AccuracyError, DomainError, PreconditionError, SolverError
from .symbol import ElasticModuli

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 2, 3


class UsageError(Exception):
    pass


# Configuration

COMMON = {"seed": 0, "workers": 1, "out": "fraclame-out"}
MEDIUM = {"d": 2, "n": 64, "L": 12.0, "s": 0.5, "mu": 1.0, "lambda": 0.5}
PACKET = {"type": "wave_packet", "params": {}}

DEFAULTS = {
    "apply": {**COMMON, **MEDIUM, "operator": "lame_s", "routes": ["spectral"], "field": PACKET},
    "verify": {**COMMON, "suite": "all"},
    "kernels": {
        **COMMON, "d": 2, "s": 0.5, "mu": 1.0, "lambda": 0.5, "kernel": "fundamental", "t": 1.0, "eps": 1.0,
        "direction": None, "r_min": 0.5, "r_max": 4.0, "count": 8,
    },
    "extend": {**COMMON, **MEDIUM, "field": PACKET, "t_min": 1e-3, "t_max": 2.0, "levels": 80},
    "dirichlet": {
        **COMMON, "d": 2, "n": 64, "L": 4.0, "s": 0.5, "mu": 1.0, "lambda": 0.5,
        "mask": {"type": "ball", "params": {"radius": 1.0}},
        "f": {"type": "constant", "params": {"value": [1.0, 0.5]}},
        "convergence": [32, 64],
    },
}

INTEGER_KEYS = {"seed", "workers", "d", "n", "count", "levels"}
REAL_KEYS = {"L", "s", "mu", "lambda", "t", "eps", "r_min", "r_max", "t_min", "t_max"}
OPERATORS = ("lame_s", "frac_laplacian", "grad_s", "div_s", "riesz", "f_op", "state_based")
ROUTES = ("spectral", "quadrature")


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _set_dotted(config, key, value):
    parts = key.split(".")
    node = config
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            raise UsageError(f"override {key!r} does not address a record")
        node = node[part]
    node[parts[-1]] = value


def build_config(command, config_path, overrides):
    config = copy.deepcopy(DEFAULTS[command])
    if config_path:
        try:
            loaded = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        for key, value in loaded.items():
            if key not in config:
                raise UsageError(f"unknown config key {key!r} for {command}")
            config[key] = value
    for item in overrides:
        if not item.startswith("--") or "=" not in item:
            raise UsageError(f"unrecognized argument {item!r}; overrides look like --key=value")
        key, _, raw = item[2:].partition("=")
        if key.split(".")[0] not in config:
            raise UsageError(f"unknown config key {key!r} for {command}")
        _set_dotted(config, key, _parse_value(raw))
    return _validate(command, config)


def _validate(command, config):
    for key in INTEGER_KEYS & config.keys():
        if isinstance(config[key], bool) or not isinstance(config[key], int):
            raise UsageError(f"{key} must be an integer")
    for key in REAL_KEYS & config.keys():
        if isinstance(config[key], bool) or not isinstance(config[key], (int, float)):
            raise UsageError(f"{key} must be a number")
        config[key] = float(config[key])
    if config["workers"] < 1:
        raise UsageError("workers must be at least 1")
    if not isinstance(config["out"], str):
        raise UsageError("out must be a path")
    if "mu" in config:
        ElasticModuli(config["mu"], config["lambda"])
    if command == "apply":
        if config["operator"] not in OPERATORS:
            raise UsageError(f"operator must be one of {OPERATORS}")
        routes = config["routes"]
        if routes == "both":
            routes = list(ROUTES)
        if isinstance(routes, str):
            routes = [routes]
        if not routes or any(r not in ROUTES for r in routes) or len(set(routes)) != len(routes):
            raise UsageError(f"routes must be a nonempty subset of {ROUTES}")
        config["routes"] = routes
    if command == "verify" and config["suite"] not in acceptance.SUITES:
        raise UsageError(f"suite must be one of {sorted(acceptance.SUITES)}")
    if command == "kernels" and config["kernel"] not in kn.KERNELS:
        raise UsageError(f"kernel must be one of {kn.KERNELS}")
    if command == "dirichlet":
        conv = config["convergence"]
        if not isinstance(conv, list) or not all(isinstance(n, int) and not isinstance(n, bool) for n in conv):
            raise UsageError("convergence must be a list of grid sizes")
    for key in ("field", "mask", "f"):
        if key in config and not (isinstance(config[key], dict) and "type" in config[key]):
            raise UsageError(f"{key} must be a record with a 'type'")
    return config


def _moduli(config):
    return ElasticModuli(config["mu"], config["lambda"])


def _grid(config):
    return fl.PeriodicGrid(config["d"], config["n"], config["L"])


def _params(spec):
    params = spec.get("params", {})
    if not isinstance(params, dict):
        raise UsageError("params must be a record")
    return params


def input_field(config, grid):
    """The configured input field on the grid, plus a sampled evaluator for quadrature."""
    spec = config["field"]
    params = _params(spec)
    kind = spec["type"]
    if kind == "wave_packet":
        allowed = {"width", "wavevector", "polarization", "center"}
        if set(params) - allowed:
            raise UsageError(f"wave_packet params are {sorted(allowed)}")
        field = fl.gaussian_wave_packet(grid, **params)
        sampled = q.wave_packet_field(grid.d, tol=1e-13, **params)
        return field, sampled
    if kind == "random":
        field = fl.random_smooth_field(grid, config["seed"], cutoff=params.get("cutoff"))
    elif kind == "file":
        if "path" not in params:
            raise UsageError("file field needs params.path")
        field = fieldio.read_field(params["path"])
        if field.grid != grid:
            raise UsageError("field file grid disagrees with d, n, L")
    else:
        raise UsageError(f"unknown field type {kind!r}")
    return field, q.SampledField.from_grid(field, upsample=4)


# Output helpers


def _out_dir(config):
    path = Path(config["out"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if isinstance(v, float) and math.isnan(v) else (repr(v) if isinstance(v, float) else v)
                         for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _l2(values, grid):
    return float(math.sqrt(np.sum(values**2) * grid.cell_volume))


# Commands


def _spectral(operator, u, s, m):
    if operator in ("lame_s", "state_based"):
        return fl.frac_lame_apply(u, s, m)
    if operator == "frac_laplacian":
        return fl.frac_laplacian(u, s)
    if operator == "grad_s":
        return fl.frac_gradient(u, s)
    if operator == "div_s":
        return fl.frac_divergence(u, s)
    if operator == "f_op":
        return fl.f_operator(u, s)
    # the potential is defined on mean-zero fields; the removed mean is reported in the summary
    return fl.riesz_potential_apply(fl.Field(u.grid, u.values - u.mean()), s, m)


def _quadrature(operator, sampled, grid, s, m, spec):
    pts = grid.points().reshape(-1, grid.d)
    if operator == "lame_s":
        vals = q.frac_lame_pv(sampled, pts, s, m, spec)
    elif operator == "frac_laplacian":
        vals = q.frac_laplacian_pv(sampled, pts, s, spec)
    elif operator == "grad_s":
        vals = q.nonlocal_gradient_direct(sampled, pts, s, spec)
    elif operator == "div_s":
        vals = q.nonlocal_divergence_direct(sampled, pts, s, spec)
    elif operator == "f_op":
        vals = q.f_operator_apply(sampled, pts, s, spec)
    elif operator == "state_based":
        vals = q.state_based_apply(sampled, pts, s, m, spec, grid=grid)
    else:
        raise UsageError("riesz has no quadrature route; use route spectral")
    return fl.Field(grid, vals.reshape(grid.shape + vals.shape[1:]))


def cmd_apply(config):
    grid, m, s = _grid(config), _moduli(config), config["s"]
    u, sampled = input_field(config, grid)
    spec = q.QuadratureSpec(n_radial=8, n_angular=8, workers=config["workers"])
    out = _out_dir(config)
    results = {}
    for route in config["routes"]:
        if route == "spectral":
            results[route] = _spectral(config["operator"], u, s, m)
        else:
            results[route] = _quadrature(config["operator"], sampled, grid, s, m, spec)
        fieldio.write_field(out / f"{config['operator']}_{route}.field", results[route])
    summary = {
        "operator": config["operator"],
        "s": s,
        "mu": config["mu"],
        "lambda": config["lambda"],
        "grid": {"d": grid.d, "n": grid.n, "L": grid.L},
        "input_norm": _l2(u.values, grid),
        "norms": {route: _l2(f.values, grid) for route, f in results.items()},
    }
    if config["operator"] == "riesz":
        summary["removed_mean"] = np.asarray(u.mean(), float).tolist()
    if len(results) == 2:
        a, b = results["quadrature"].values, results["spectral"].values
        summary["discrepancy"] = float(np.linalg.norm(a - b) / np.linalg.norm(b))
    _write_json(out / "summary.json", summary)
    return summary


def cmd_verify(config):
    records = acceptance.run_suite(config["suite"], seed=config["seed"], workers=config["workers"])
    text = acceptance.report_json(config["suite"], records, seed=config["seed"])
    (_out_dir(config) / f"verify_{config['suite']}.json").write_text(text, encoding="utf-8")
    for r in records:
        print(f"[{r['status'].upper()}] {r['criterion']:>2} {r['test']}: {r['measured']:.3e} <= {r['tolerance']:.1e}")
    return records


def cmd_kernels(config):
    d = config["d"]
    direction = np.asarray(config["direction"] if config["direction"] is not None else [1.0] + [0.0] * (d - 1), float)
    if direction.shape != (d,) or not np.linalg.norm(direction) > 0.0:
        raise UsageError("direction must be a nonzero vector of length d")
    if not 0.0 < config["r_min"] < config["r_max"] or config["count"] < 2:
        raise UsageError("need 0 < r_min < r_max and count >= 2")
    radii = np.linspace(config["r_min"], config["r_max"], config["count"])
    points = np.outer(radii, direction / np.linalg.norm(direction))
    text = kn.tabulate_csv(config["kernel"], points, config["t"], config["s"], _moduli(config), config["eps"])
    path = _out_dir(config) / f"{config['kernel']}.csv"
    path.write_text(text, encoding="utf-8")
    return path


def cmd_extend(config):
    grid, m, s = _grid(config), _moduli(config), config["s"]
    u, _ = input_field(config, grid)
    if not 0.0 < config["t_min"] < config["t_max"] or config["levels"] < 5:
        raise UsageError("need 0 < t_min < t_max and at least 5 levels")
    slab = ex.ExtensionSlab.geometric(grid, config["t_min"], config["t_max"], config["levels"])
    U = ex.extend(u, s, m, slab)
    out = _out_dir(config)
    width = len(str(len(U.levels) - 1))
    for k, level in enumerate(U.levels):
        fieldio.write_field(out / f"level_{k:0{width}d}.field", level)
    residual = ex.pde_residual_levels(U, m)
    target = fl.frac_lame_apply(u, s, m).values * ex.neumann_constant(s)
    scale = np.abs(target).max()
    rows = []
    for k in reversed(range(len(U.levels))):
        t = slab.t_levels[k]
        gap = np.abs(ex.neumann_quotient(u, t, s, m).values - target).max() / scale
        rows.append((t, float(residual[k]), float(gap)))
    _write_csv(out / "extension.csv", ["t", "residual", "neumann_error"], rows)
    limit = ex.dtn_neumann(u, s, m)
    summary = {
        "levels": len(U.levels),
        "pde_residual": ex.pde_residual(U, m),
        "neumann_limit_error": float(np.abs(limit.values - target).max() / scale),
    }
    _write_json(out / "summary.json", summary)
    return summary


def _mask(config, grid):
    spec = config["mask"]
    params = _params(spec)
    try:
        if spec["type"] == "ball":
            return dr.DomainMask.ball(grid, params.get("radius", 1.0), params.get("center"))
        if spec["type"] == "box":
            return dr.DomainMask.box(grid, params.get("half_widths", 1.0), params.get("center"))
    except TypeError as exc:
        raise UsageError(f"bad mask params: {exc}") from exc
    raise UsageError(f"unknown mask type {spec['type']!r}")


def _force(config, grid):
    spec = config["f"]
    params = _params(spec)
    d = grid.d
    if spec["type"] == "constant":
        value = np.asarray(params.get("value", [1.0] * d), float)
        if value.shape != (d,):
            raise UsageError("constant force needs d components")
        return fl.Field(grid, np.broadcast_to(value, grid.shape + (d,)).copy()), value
    if spec["type"] == "gaussian":
        amp = np.asarray(params.get("amplitude", [1.0] * d), float)
        center = np.asarray(params.get("center", [0.0] * d), float)
        width = float(params.get("width", 0.5))
        if amp.shape != (d,) or center.shape != (d,) or width <= 0.0:
            raise UsageError("gaussian force needs d-vectors amplitude, center and a positive width")
        r2 = np.sum((grid.points() - center) ** 2, axis=-1)
        return fl.Field(grid, np.exp(-r2 / (2 * width**2))[..., None] * amp), None
    raise UsageError(f"unknown force type {spec['type']!r}")


def _has_closed_form(config, mask, const_force):
    geom = mask.geometry
    center = geom.get("center")
    centered = center is None or not np.any(center)
    return const_force is not None and config["lambda"] == -config["mu"] and geom["type"] == "ball" and centered


def cmd_dirichlet(config):
    m, s = _moduli(config), config["s"]
    spec = dr.GalerkinSpec(workers=config["workers"])
    sizes = sorted(set(config["convergence"]) | {config["n"]})
    out = _out_dir(config)
    rows = []
    final = None
    for n in sizes:
        grid = fl.PeriodicGrid(config["d"], n, config["L"])
        mask = _mask(config, grid)
        f, const_force = _force(config, grid)
        system = dr.assemble(mask, s, m, spec)
        sol = dr.solve_system(system, f, spec)
        error = float("nan")
        if _has_closed_form(config, mask, const_force):
            exact = dr.ball_solution(grid.points(), mask.geometry["radius"], s, m.mu, const_force)
            error = float(np.linalg.norm(sol.field.values - exact) / np.linalg.norm(exact))
        rows.append((n, grid.spacing, system.size, sol.iterations, sol.residual, sol.energy, sol.l2_norm(), error))
        if n == config["n"]:
            final = sol
            fieldio.write_field(out / "solution.field", sol.field)
    _write_csv(out / "convergence.csv",
               ["n", "h", "unknowns", "iterations", "cg_residual", "energy", "l2_norm", "exact_l2_error"], rows)
    summary = {
        "n": config["n"],
        "energy": final.energy,
        "work": final.work,
        "energy_identity_gap": abs(final.energy - final.work) / abs(final.work) if final.work else 0.0,
        "iterations": final.iterations,
    }
    _write_json(out / "summary.json", summary)
    return summary


COMMANDS = {
    "apply": cmd_apply,
    "verify": cmd_verify,
    "kernels": cmd_kernels,
    "extend": cmd_extend,
    "dirichlet": cmd_dirichlet,
}


def _parser():
    parser = argparse.ArgumentParser(prog="fraclame", description="Fractional Lame-Navier operator toolkit.",
                                     epilog="Any config key can be overridden with --key=value.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON file with command parameters")
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _parser()
    try:
        args, rest = parser.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        config = build_config(args.command, args.config, rest)
        result = COMMANDS[args.command](config)
    except (UsageError, DomainError, PreconditionError) as exc:
        print(f"fraclame {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AccuracyError, SolverError) as exc:
        print(f"fraclame {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if args.command == "verify" and any(r["status"] == "fail" for r in result):
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
