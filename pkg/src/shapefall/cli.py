"""Command-line front end: every operation as a subcommand with JSON
config, CSV/JSON outputs, and a manifest naming the config hash.

Common config fields (all subcommands, all optional -- defaults below):
    masses : [m1, m2, m3], all > 0
    h      : energy parameter, > 0
    rtol, atol : integration tolerances, in [1e-14, 1e-4]
    seed   : u64, recorded in the manifest (mandatory for sampling runs,
             supplied by default so every run is reproducible)

Exit codes: 0 success, 2 config error (schema violation, with the field
path), 3 numerical failure (diagnostic file written), 4 acceptance
failure from verify-all.

Determinism: a fixed config + seed produces byte-identical CSV output;
floats are written with repr (shortest round-trip).  --threads only
distributes independent grid points over a pool and reassembles them in
input order, so it never changes the bytes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from . import __version__
from .core import derive_mass_params
from .dynamics import blowup_rhs_timed, energy_residual
from .integrate import brake_lift, integrate
from .isosceles import admissible, find_periodic_brake, trace_branch
from .jm import minimize_fixed, minimize_to_boundary, seifert_scaling_probe
from .potential import chart_terms
from .restpoints import find_restpoints, linearize, spiraling_scan
from .syzygy import SyzygyRecord, first_syzygy, winding_degree

_TOL = {"type": "number", "minimum": 1e-14, "maximum": 1e-4}
_POS = {"type": "number", "exclusiveMinimum": 0.0}
_SEED = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}
_MASSES = {"type": "array", "items": _POS, "minItems": 3, "maxItems": 3}
_SHAPE = {"type": "array", "items": {"type": "number"}, "minItems": 2,
          "maxItems": 2}
_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 3,
          "maxItems": 3}


def _schema(extra: dict, required: list | None = None) -> dict:
    props = {"masses": _MASSES, "h": _POS, "rtol": _TOL, "atol": _TOL,
             "seed": _SEED}
    props.update(extra)
    return {"type": "object", "properties": props,
            "required": required or [], "additionalProperties": False}


SCHEMAS = {
    "potential-grid": _schema({"n": {"type": "integer", "minimum": 2,
                                     "maximum": 4001}}),
    "integrate": _schema({"start": _SHAPE, "s_max": _POS,
                          "n_samples": {"type": "integer", "minimum": 2,
                                        "maximum": 100000}}),
    "syzygy-map": _schema({"starts": {"type": "array", "items": _SHAPE},
                           "n_random": {"type": "integer", "minimum": 1,
                                        "maximum": 100000},
                           "s_max": _POS}),
    "image-scan": _schema({"n_lat": {"type": "integer", "minimum": 1,
                                     "maximum": 400},
                           "n_lon": {"type": "integer", "minimum": 1,
                                     "maximum": 400},
                           "s_max": _POS}),
    "winding": _schema({"latitude": {"type": "number",
                                     "exclusiveMinimum": 0.0,
                                     "exclusiveMaximum": 1.0},
                        "n": {"type": "integer", "minimum": 4,
                              "maximum": 4000},
                        "reverse": {"type": "boolean"}}),
    "restpoints": _schema({}),
    "spiraling-scan": _schema({"mass_triples": {"type": "array",
                                                "items": _POINT,
                                                "minItems": 1}}),
    "iso-branches": _schema({"m3": _POS, "delta": _TOL, "s_max": _POS}),
    "iso-admissible": _schema({"m3": _POS}),
    "iso-periodic": _schema({"m3": _POS, "v_tol": _TOL,
                             "n_grid": {"type": "integer", "minimum": 8,
                                        "maximum": 4096},
                             "bracket": {"type": "array",
                                         "items": {"type": "number"},
                                         "minItems": 2, "maxItems": 2}}),
    "jm-minimize": _schema({"q0": _POINT, "q1": _POINT,
                            "mode": {"enum": ["boundary", "fixed"]},
                            "N": {"type": "integer", "minimum": 8,
                                  "maximum": 16384},
                            "n_starts": {"type": "integer", "minimum": 1,
                                         "maximum": 64},
                            "end_guess": _SHAPE}),
    "seifert-probe": _schema({"shape": _SHAPE, "t0": _POS}),
    "verify-all": _schema({"criteria": {"type": "array",
                                        "items": {"type": "integer",
                                                  "minimum": 1,
                                                  "maximum": 11}}}),
}

DEFAULTS = {
    "potential-grid": {"masses": [1.0, 1.0, 1.0], "h": 1.0, "n": 201},
    "integrate": {"masses": [1.0, 1.0, 1.0], "h": 1.0, "start": [0.3, 0.2],
                  "s_max": 10.0, "rtol": 1e-10, "atol": 1e-12,
                  "n_samples": 400},
    "syzygy-map": {"masses": [1.0, 1.0, 1.0], "h": 1.0, "n_random": 100,
                   "seed": 0, "s_max": 40.0, "rtol": 1e-10, "atol": 1e-12},
    "image-scan": {"masses": [1.0, 1.0, 1.0], "h": 1.0, "n_lat": 20,
                   "n_lon": 36, "s_max": 40.0, "rtol": 1e-10, "atol": 1e-12},
    "winding": {"masses": [1.0, 1.0, 1.0], "h": 1.0, "latitude": 0.05,
                "n": 24, "reverse": False, "rtol": 1e-10, "atol": 1e-12},
    "restpoints": {"masses": [1.0, 1.0, 1.0], "h": 1.0},
    "spiraling-scan": {"h": 1.0,
                       "mass_triples": [[1.0, 1.0, m] for m in
                                        (0.5, 1.0, 2.0, 5.0, 20.0, 100.0)]},
    "iso-branches": {"m3": 1.0, "delta": 1e-6, "rtol": 1e-12, "atol": 1e-14,
                     "s_max": 60.0},
    "iso-admissible": {"m3": 1.0},
    "iso-periodic": {"m3": 1.0, "rtol": 1e-10, "atol": 1e-12,
                     "v_tol": 1e-10, "n_grid": 96},
    "jm-minimize": {"masses": [1.0, 1.0, 1.0], "h": 1.0,
                    "q0": [0.0, 0.0, 0.0], "mode": "boundary", "N": 128,
                    "n_starts": 8, "seed": 0},
    "seifert-probe": {"masses": [1.0, 1.0, 1.0], "h": 1.0,
                      "shape": [0.2, 0.1], "t0": 2.5e-4},
    "verify-all": {},
}


class ConfigError(Exception):
    pass


def load_config(subcommand: str, path: str | None, seed_flag: int | None):
    cfg = dict(DEFAULTS[subcommand])
    if path is not None:
        try:
            with open(path) as f:
                user = json.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}")
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        cfg.update(user)
    if seed_flag is not None:
        cfg["seed"] = seed_flag
    if jsonschema is not None:
        try:
            jsonschema.validate(cfg, SCHEMAS[subcommand])
        except jsonschema.ValidationError as e:
            where = "config" + "".join(
                f"[{p}]" if isinstance(p, int) else f".{p}"
                for p in e.absolute_path)
            raise ConfigError(f"{where}: {e.message}")
    return cfg


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> str:
    with open(path, "w", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")
    return path.name


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def write_json(path: Path, payload) -> str:
    with open(path, "w") as f:
        json.dump(_jsonable(payload), f, indent=2, sort_keys=True)
        f.write("\n")
    return path.name


def _pmap(fn, items, threads: int):
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _mp(cfg):
    return derive_mass_params(*cfg["masses"])


def _safe_syzygy(x0, y0, mp, h, **kw) -> SyzygyRecord:
    try:
        return first_syzygy(x0, y0, mp, h, **kw)
    except Exception as e:
        return SyzygyRecord(x0=x0, y0=y0, angle=math.nan, r=math.nan,
                            state=np.full(6, math.nan), s0=math.nan,
                            t0=math.nan, collision=False, type_tag=0,
                            flags=[f"failed: {type(e).__name__}: {e}"])


_SYZ_HEADER = ["x0", "y0", "angle", "r", "s0", "t0", "collision",
               "type_tag", "flags"]


def _syz_row(rec: SyzygyRecord, prefix=()):
    return list(prefix) + [rec.x0, rec.y0, rec.angle, rec.r, rec.s0,
                           rec.t0, rec.collision, rec.type_tag,
                           ";".join(rec.flags)]


# ---------------------------------------------------------------- handlers

def run_potential_grid(cfg, out: Path, threads: int) -> list[str]:
    mp, h, n = _mp(cfg), cfg["h"], cfg["n"]
    ax = np.linspace(-1.0, 1.0, n)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    inside = X * X + Y * Y < 1.0
    t = chart_terms(X[inside], Y[inside], mp)
    rows = zip(X[inside], Y[inside], t["V"], t["phi"], t["kappa"],
               t["V"] / h)
    return [write_csv(out / "potential_grid.csv",
                      ["x", "y", "V", "phi", "kappa", "hill_r"], rows)]


def run_integrate(cfg, out: Path, threads: int) -> list[str]:
    mp, h = _mp(cfg), cfg["h"]
    x0, y0 = cfg["start"]
    st = brake_lift(x0, y0, mp, h)
    y7 = [st.r, st.v, st.x, st.y, st.xp, st.yp, 0.0]
    traj = integrate(blowup_rhs_timed, y7, (0.0, cfg["s_max"]),
                     rtol=cfg["rtol"], atol=cfg["atol"], args=(mp,),
                     residual=lambda y: energy_residual(y[:6], mp, h))
    ss = np.linspace(0.0, traj.t_end, cfg["n_samples"])
    ys = traj(ss)
    rows = ([s] + [ys[k, i] for k in (6, 0, 1, 2, 3, 4, 5)]
            for i, s in enumerate(ss))
    files = [write_csv(out / "trajectory.csv",
                       ["s", "t", "r", "v", "x", "y", "xp", "yp"], rows)]
    files.append(write_json(out / "integrate_summary.json", {
        "start": [x0, y0], "r0": st.r, "s_end": traj.t_end,
        "t_end": float(traj.y_end[6]), "status": traj.status,
        "max_energy_residual": traj.stats.get("max_residual"),
        "n_steps": len(traj.t)}))
    return files


def run_syzygy_map(cfg, out: Path, threads: int) -> list[str]:
    mp, h = _mp(cfg), cfg["h"]
    if "starts" in cfg:
        starts = [tuple(p) for p in cfg["starts"]]
    else:
        rng = np.random.default_rng(cfg["seed"])
        starts = []
        while len(starts) < cfg["n_random"]:
            x0, y0 = rng.uniform(-1.0, 1.0, 2)
            if 1e-3 < math.hypot(x0, y0) < 0.999:
                starts.append((x0, y0))
    kw = dict(s_max=cfg["s_max"], rtol=cfg["rtol"], atol=cfg["atol"])
    recs = _pmap(lambda p: _safe_syzygy(p[0], p[1], mp, h, **kw),
                 starts, threads)
    return [write_csv(out / "syzygy_map.csv", _SYZ_HEADER,
                      (_syz_row(r) for r in recs))]


def run_image_scan(cfg, out: Path, threads: int) -> list[str]:
    mp, h = _mp(cfg), cfg["h"]
    n_lat, n_lon = cfg["n_lat"], cfg["n_lon"]
    grid = []
    for i in range(n_lat):
        rho = (i + 1) / (n_lat + 1)
        for j in range(n_lon):
            alpha = 2.0 * math.pi * j / n_lon
            grid.append((i, j, rho * math.cos(alpha), rho * math.sin(alpha)))
    kw = dict(s_max=cfg["s_max"], rtol=cfg["rtol"], atol=cfg["atol"])
    recs = _pmap(lambda g: _safe_syzygy(g[2], g[3], mp, h, **kw),
                 grid, threads)
    rows = (_syz_row(rec, prefix=(g[0], g[1]))
            for g, rec in zip(grid, recs))
    return [write_csv(out / "image_scan.csv",
                      ["i_lat", "i_lon"] + _SYZ_HEADER, rows)]


def run_winding(cfg, out: Path, threads: int) -> list[str]:
    mp = _mp(cfg)
    deg = winding_degree(cfg["latitude"], cfg["n"], mp, cfg["h"],
                         reverse=cfg["reverse"], rtol=cfg["rtol"],
                         atol=cfg["atol"])
    return [write_json(out / "winding.json",
                       {"latitude": cfg["latitude"], "n": cfg["n"],
                        "reverse": cfg["reverse"], "degree": deg})]


def run_restpoints(cfg, out: Path, threads: int) -> list[str]:
    mp = _mp(cfg)
    rps = find_restpoints(mp)
    rows = [(rp.kind, rp.sign, rp.x, rp.y, rp.v, rp.V) for rp in rps]
    files = [write_csv(out / "restpoints.csv",
                       ["kind", "sign", "x", "y", "v", "V"], rows)]
    lins = {}
    for rp in rps:
        lin = linearize(rp, mp, cfg["h"])
        lins[f"{rp.kind}{'+' if rp.sign > 0 else '-'}"] = {
            "eigenvalues": list(lin.eigenvalues),
            "stable_dim": lin.stable_dim,
            "unstable_dim": lin.unstable_dim,
            "homothety_eigenvalue": lin.homothety_eigenvalue,
            "flags": lin.flags,
        }
    files.append(write_json(out / "linearizations.json", lins))
    return files


def run_spiraling_scan(cfg, out: Path, threads: int) -> list[str]:
    rows = spiraling_scan([tuple(t) for t in cfg["mass_triples"]],
                          h=cfg["h"])
    csv_rows = [(r["m1"], r["m2"], r["m3"], r["spiral_euler_1"],
                 r["spiral_euler_2"], r["spiral_euler_3"]) for r in rows]
    files = [write_csv(out / "spiraling_scan.csv",
                       ["m1", "m2", "m3", "spiral_euler_1",
                        "spiral_euler_2", "spiral_euler_3"], csv_rows)]
    files.append(write_json(out / "spiraling_detail.json", rows))
    return files


def run_iso_branches(cfg, out: Path, threads: int) -> list[str]:
    rows, summary = [], {}
    for which in ("gamma", "gamma_prime"):
        tr = trace_branch(which, cfg["m3"], delta=cfg["delta"],
                          rtol=cfg["rtol"], atol=cfg["atol"],
                          s_max=cfg["s_max"])
        rows.extend((which, s, th, v, w) for s, th, v, w in
                    zip(tr.s, tr.theta, tr.v, tr.w))
        summary[which] = {"theta0": tr.theta0, "v_at": tr.v_at,
                          "reached_zero": tr.reached_zero, "died": tr.died,
                          "term_theta": tr.term_theta,
                          "energy_residual": tr.energy_residual,
                          "flags": tr.flags}
    files = [write_csv(out / "branches.csv",
                       ["branch", "s", "theta", "v", "w"], rows)]
    files.append(write_json(out / "branches_summary.json", summary))
    return files


def run_iso_admissible(cfg, out: Path, threads: int) -> list[str]:
    rep = admissible(cfg["m3"])
    return [write_json(out / "admissible.json", {
        "m3": rep.m3, "admissible": rep.admissible, "v1": rep.v1,
        "v2": rep.v2, "v3": rep.v3, "reason": rep.reason})]


def run_iso_periodic(cfg, out: Path, threads: int) -> list[str]:
    kw = dict(n_grid=cfg["n_grid"], rtol=cfg["rtol"], atol=cfg["atol"],
              v_tol=cfg["v_tol"])
    if "bracket" in cfg:
        kw["bracket"] = tuple(cfg["bracket"])
    orb = find_periodic_brake(cfg["m3"], **kw)
    rows = ((s,) + tuple(y) for s, y in zip(orb.quarter.t, orb.quarter.y))
    files = [write_csv(out / "quarter_orbit.csv",
                       ["s", "r", "v", "theta", "w", "t"], rows)]
    files.append(write_json(out / "periodic_orbit.json", {
        "m3": orb.m3, "theta0": orb.theta0, "r0": orb.r0, "T2": orb.T2,
        "t_quarter": orb.t_quarter, "s_syzygy": orb.s_syzygy,
        "v_syzygy": orb.v_syzygy, "r_end": orb.r_end, "w_end": orb.w_end,
        "closure_error": orb.closure_error, "roots": orb.roots,
        "flags": orb.flags}))
    return files


def run_jm_minimize(cfg, out: Path, threads: int) -> list[str]:
    mp, h = _mp(cfg), cfg["h"]
    if cfg["mode"] == "fixed":
        if "q1" not in cfg:
            raise ConfigError("config.q1: required when mode is 'fixed'")
        res = minimize_fixed(tuple(cfg["q0"]), tuple(cfg["q1"]), cfg["N"],
                             mp, h, n_starts=cfg["n_starts"],
                             seed=cfg["seed"])
    else:
        res = minimize_to_boundary(
            tuple(cfg["q0"]), cfg["N"], mp, h,
            end_guess=tuple(cfg["end_guess"]) if "end_guess" in cfg else None,
            n_starts=cfg["n_starts"], seed=cfg["seed"])
    nodes = res.path.nodes
    rows = ((i, nodes[i, 0], nodes[i, 1], nodes[i, 2])
            for i in range(nodes.shape[0]))
    files = [write_csv(out / "path.csv", ["node", "r", "x", "y"], rows)]
    rec = res.reconstruction or {}
    files.append(write_json(out / "jm_result.json", {
        "mode": cfg["mode"], "action": res.action,
        "grad_norm": res.grad_norm, "converged": res.converged,
        "first_contact": res.first_contact, "flags": res.flags,
        "end_mode": res.path.end_mode, "grading": res.path.grading,
        "n_local_minima": len(res.local_minima),
        "local_minima_actions": [m[0] for m in res.local_minima],
        "energy_residual": rec.get("energy_residual"),
        "newton_residual": rec.get("newton_residual"),
        "layer_segments": rec.get("layer_segments")}))
    return files


def run_seifert_probe(cfg, out: Path, threads: int) -> list[str]:
    mp, h = _mp(cfg), cfg["h"]
    x, y = cfg["shape"]
    probe = seifert_scaling_probe(x, y, mp, h, t0=cfg["t0"])
    return [write_json(out / "seifert_probe.json", probe)]


def run_verify_all(cfg, out: Path, threads: int) -> list[str]:
    from . import acceptance
    wanted = cfg.get("criteria") or list(range(1, 12))
    results = []
    for k in wanted:
        res = acceptance.ALL_CRITERIA[k - 1]()
        results.append(res)
        print(res.line())
        if not res.passed:
            for d in res.details:
                print(f"    {d}")
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria pass")
    files = [write_json(out / "criteria.json",
                        [{"index": r.index, "name": r.name,
                          "passed": r.passed, "runtime": r.runtime,
                          "details": r.details} for r in results])]
    if n_pass < len(results):
        raise _AcceptanceFailure(files)
    return files


class _AcceptanceFailure(Exception):
    def __init__(self, files):
        self.files = files


HANDLERS = {
    "potential-grid": run_potential_grid,
    "integrate": run_integrate,
    "syzygy-map": run_syzygy_map,
    "image-scan": run_image_scan,
    "winding": run_winding,
    "restpoints": run_restpoints,
    "spiraling-scan": run_spiraling_scan,
    "iso-branches": run_iso_branches,
    "iso-admissible": run_iso_admissible,
    "iso-periodic": run_iso_periodic,
    "jm-minimize": run_jm_minimize,
    "seifert-probe": run_seifert_probe,
    "verify-all": run_verify_all,
}


def _write_manifest(out: Path, sub: str, cfg, t0: float, files: list[str]):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    manifest = {
        "tool": "shapefall",
        "version": __version__,
        "subcommand": sub,
        "config": cfg,
        "config_sha256": hashlib.sha256(blob.encode()).hexdigest(),
        "seed": cfg.get("seed"),
        "wall_time_s": round(time.time() - t0, 3),
        "outputs": sorted(files),
    }
    write_json(out / "manifest.json", manifest)


def main(argv=None) -> int:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="JSON config file (merged over defaults)")
    common.add_argument("--out", metavar="DIR", default="out",
                        help="output directory (default: ./out)")
    common.add_argument("--threads", type=int, default=1, metavar="N",
                        help="worker threads for grid scans")
    common.add_argument("--seed", type=int, default=None, metavar="U64",
                        help="override the config seed")
    ap = argparse.ArgumentParser(
        prog="shapefall",
        description="zero-angular-momentum three-body lab in shape "
                    "coordinates")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in HANDLERS:
        sub.add_parser(name, parents=[common],
                       help=f"run the {name} operation")
    args = ap.parse_args(argv)

    try:
        cfg = load_config(args.subcommand, args.config, args.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    try:
        files = HANDLERS[args.subcommand](cfg, out, max(1, args.threads))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except _AcceptanceFailure as e:
        _write_manifest(out, args.subcommand, cfg, t0, e.files)
        print(f"acceptance failure; outputs in {out}", file=sys.stderr)
        return 4
    except Exception as e:
        diag = {"subcommand": args.subcommand, "config": cfg,
                "error": f"{type(e).__name__}: {e}",
                "traceback": traceback.format_exc()}
        write_json(out / "diagnostic.json", diag)
        print(f"numerical failure: {type(e).__name__}: {e}\n"
              f"diagnostic written to {out / 'diagnostic.json'}",
              file=sys.stderr)
        return 3
    _write_manifest(out, args.subcommand, cfg, t0, files)
    for name in sorted(files):
        print(out / name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
