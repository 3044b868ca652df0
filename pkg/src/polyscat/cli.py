"""Command line runner: ``polyscat <command> --config FILE --out DIR``.

Every run writes its result files plus ``manifest.json`` (version, config
hash, wall time, sha256 of each artifact).  Exit status is 0 on success,
1 on a numerical failure and 2 on invalid input; failures also write
``error.json``.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, defaults, forward
from .conelab import certify_nonvanishing, choose_rho, laplace_split_sweep
from .errors import InputError, MissingFile, NumericalError, PolyscatError, UnknownResultType
from .farfield import far_field, sphere_directions, write_pattern_csv
from .forward import IncidentWave, solve_total_field, write_field_dump
from .geometry import Cone, cell_from_dict, cone_at_vertex, structure_from_dict
from .grid import Grid
from .hashing import canonical_json, content_hash, file_hash
from .identities import corner_limit, GridInterpolant, nodal_check, quarter_disc_study, scattered_norm_ratio
from .inverse import (
    ExperimentSpec,
    distinguishability_campaign,
    noise_sweep,
    perturbation_sweep,
    pixel_spec,
    reconstruction_run,
    write_ledger,
)
from .media import builtin_potential, contrast_product, load_potential, potential_from_dict

logger = logging.getLogger("polyscat")

COMMANDS = ("forward", "farfield", "conelab", "verify", "distinguish", "reconstruct", "plot")
OUT_ENV = "POLYSCAT_OUT"


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path, overrides=(), seed=None) -> dict:
    cfg = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise MissingFile(path, "config file")
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from None
        cfg["_base"] = str(path.parent.resolve())
    for item in overrides:
        if "=" not in item:
            raise InputError(f"override {item!r} is not KEY=VAL")
        key, val = item.split("=", 1)
        defaults.set_dotted(cfg, key.strip(), _parse_value(val))
    if seed is not None:
        cfg["seed"] = seed
    defaults.check_ranges(cfg)
    return cfg


def _path(cfg, value) -> Path:
    p = Path(value)
    if not p.is_absolute():
        p = Path(cfg.get("_base", ".")) / p
    if not p.exists():
        raise MissingFile(p)
    return p


def _potential(cfg):
    if "potential_file" in cfg:
        return load_potential(_path(cfg, cfg["potential_file"]))
    if "geometry_file" in cfg:
        doc = json.loads(_path(cfg, cfg["geometry_file"]).read_text())
        doc["values"] = cfg["values"]
        return potential_from_dict(doc)
    if "potential" in cfg:
        return potential_from_dict(cfg["potential"])
    raise InputError("config needs 'potential', 'potential_file' or 'geometry_file'")


def _grid(cfg) -> Grid:
    g = defaults.get
    return Grid(int(g(cfg, "grid.n")), float(g(cfg, "grid.R")), int(g(cfg, "grid.N")))


def _incident(cfg, n) -> IncidentWave:
    d = defaults.get(cfg, "d")
    d = np.eye(n)[0] if d is None else np.asarray(d, dtype=float)
    return IncidentWave(d / np.linalg.norm(d), float(defaults.get(cfg, "k")))


def _solve(cfg):
    V = _potential(cfg)
    grid = _grid(cfg)
    inc = _incident(cfg, grid.n)
    g = defaults.get
    sol = solve_total_field(V, inc, grid, method=g(cfg, "solver.method"), tol=float(g(cfg, "solver.tol")),
                            maxit=int(g(cfg, "solver.maxit")), terms=int(g(cfg, "solver.terms")))
    return V, sol


def _cone(cfg) -> Cone:
    c = cfg.get("cone")
    if c is None:
        raise InputError("config needs a 'cone' table")
    if "polytope" in c:
        return cone_at_vertex(cell_from_dict(c["polytope"]), np.asarray(c["vertex"], dtype=float))
    gens = np.asarray(c["generators"], dtype=float)
    return Cone(np.asarray(c.get("apex", np.zeros(gens.shape[1])), dtype=float), gens)


def _experiment(cfg) -> ExperimentSpec:
    e = dict(cfg.get("experiment", {}))
    seed = int(defaults.get(cfg, "seed"))
    if "geometry" in e or "geometry_file" in e:
        geom = e.get("geometry")
        if geom is None:
            geom = json.loads(_path(cfg, e["geometry_file"]).read_text())
        structure = structure_from_dict(geom)
        grid = Grid(structure.dimension, float(e.get("R", 0.5)), int(e.get("N", 64)))
        d = np.asarray(e.get("d", np.eye(grid.n)[0]), dtype=float)
        return ExperimentSpec(structure, IncidentWave(d, float(e.get("k", 16.0))), grid,
                              int(e.get("n_dirs", 64)), seed, float(e.get("tol", 1e-10)))
    return pixel_spec(**{k: e[k] for k in ("k", "d", "side", "N", "R", "n_dirs", "tol") if k in e}, seed=seed)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _write_jsonl(out: Path, name: str, records) -> Path:
    return write_ledger(records, out / name)


def cmd_forward(cfg, out):
    _, sol = _solve(cfg)
    fmt = defaults.get(cfg, "dump_format")
    path = write_field_dump(sol, out / f"field.{fmt}", fmt)
    return [path], {"iterations": sol.iterations, "residual": sol.residual}


def cmd_farfield(cfg, out):
    V, sol = _solve(cfg)
    A = far_field(V, sol, directions=sphere_directions(sol.grid.n, int(defaults.get(cfg, "n_dirs"))))
    geo = content_hash(cfg.get("potential", cfg.get("potential_file", cfg.get("geometry_file"))))
    return [write_pattern_csv(A, out / "pattern.csv", geo)], {"norm": A.norm()}


def cmd_conelab(cfg, out):
    action = cfg.get("action", "certify")
    cone = _cone(cfg)
    s_list = [float(s) for s in defaults.get(cfg, "s_list")]
    if action == "split":
        recs = [{"kind": "split", **r} for r in laplace_split_sweep(cone, defaults.get(cfg, "eps_list"))]
        return [_write_jsonl(out, "split.jsonl", recs)], {}
    if action != "certify":
        raise InputError(f"unknown conelab action {action!r}")
    recs = []
    if cone.dimension == 3:
        for eps in defaults.get(cfg, "eps_list"):
            cert = certify_nonvanishing(cone, s_list, rho=choose_rho(cone, float(eps)))
            recs += [{"kind": "certification", **r} for r in cert.records]
    else:
        cert = certify_nonvanishing(cone, s_list)
        recs = [{"kind": "certification", **r} for r in cert.records]
    for r in recs:
        r.pop("T", None)
    return [_write_jsonl(out, "certification.jsonl", recs)], {"min_scaled": min(r["sn_abs_T"] for r in recs)}


def _verify_corner(cfg):
    c = cfg.get("corner", {})
    k = float(defaults.get(cfg, "k"))
    side, V, Vp = float(c.get("side", 1.0)), complex(*c.get("V", [1.0, 0.0])), complex(*c.get("Vp", [0.5, 0.0]))
    grid = Grid.from_step(2, float(c.get("R", 1.0)), float(c.get("h", 1 / 64)))
    solp = solve_total_field(builtin_potential("square", Vp, side=side), _incident(cfg, 2), grid,
                             tol=float(defaults.get(cfg, "solver.tol")))
    xc = np.array([-side / 2, -side / 2])
    cone = Cone(xc, np.eye(2))
    dq = k**2 * (V - Vp)
    up = GridInterpolant(grid, solp.u)
    s_list = c.get("s_list", [16, 32, 64, 128])
    res = corner_limit(cone, float(c.get("radius", side / 2)), dq, up, s_list=s_list, grid=grid)
    ref = dq * up(xc[None])[0]
    recs = [{"kind": "corner", "s": s, "re_J": J.real, "im_J": J.imag} for s, J in zip(res.s, res.J)]
    recs.append({"kind": "corner_limit", "limit": res.limit, "reference": ref,
                 "relative_error": float(abs(res.limit - ref) / abs(ref))})
    return recs


def cmd_verify(cfg, out):
    check = cfg.get("check", "alessandrini")
    if check == "alessandrini":
        a = cfg.get("alessandrini", {})
        study = quarter_disc_study(hs=a.get("hs", [1 / 32, 1 / 64, 1 / 128]), k=float(defaults.get(cfg, "k")))
        recs = [{"kind": "convergence", "h": r["h"], "residual": r["residual"], "fitted_order": r["fitted_order"]}
                for r in study.records]
        summary = {"fitted_order": study.order}
    elif check == "corner":
        recs = _verify_corner(cfg)
        summary = {"relative_error": recs[-1]["relative_error"]}
    elif check in ("nodal", "norm"):
        V, sol = _solve(cfg)
        cp = contrast_product(V, sol.k)
        if check == "nodal":
            rep = nodal_check(sol)
            recs = [{"kind": "nodal", "contrast": cp, "min_abs_u": rep.min_abs_u, "argmin": rep.argmin,
                     "sup_us": rep.sup_us}]
        else:
            recs = []
            for s in (1.0, 0.5):
                Vs = V.scaled(s)
                sol_s = solve_total_field(Vs, sol.incident, sol.grid, tol=float(defaults.get(cfg, "solver.tol")))
                recs.append({"kind": "norm_ratio", "contrast": cp * s, "ratio": scattered_norm_ratio(sol_s, Vs)})
        summary = {}
    else:
        raise InputError(f"unknown verify check {check!r}")
    return [_write_jsonl(out, "verify.jsonl", recs)], summary


def cmd_distinguish(cfg, out):
    spec = _experiment(cfg)
    recs = distinguishability_campaign(spec, int(defaults.get(cfg, "n_pairs")), float(defaults.get(cfg, "contrast")))
    paths = [_write_jsonl(out, "ledger.jsonl", recs)]
    if "perturbation" in cfg:
        p = cfg["perturbation"]
        base = np.asarray(p.get("base", [[0.002, 0.001]] * spec.n_cells), dtype=float)
        sweep, slope = perturbation_sweep(spec, base[:, 0] + 1j * base[:, 1], int(p.get("cell", 0)))
        paths.append(_write_jsonl(out, "perturbation.jsonl", sweep + [{"kind": "perturbation_fit", "slope": slope}]))
    gaps = [r["gap"] for r in recs]
    flagged = [r["pair"] for r in recs if r["counterexample_candidate"]]
    return paths, {"min_gap": min(gaps), "counterexample_candidates": flagged}


def cmd_reconstruct(cfg, out):
    spec = _experiment(cfg)
    truth = cfg.get("truth")
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        truth = truth[:, 0] + 1j * truth[:, 1]
    rec = reconstruction_run(spec, truth, float(defaults.get(cfg, "contrast")), int(defaults.get(cfg, "maxit")),
                             int(defaults.get(cfg, "data_refine")))
    recs = [rec]
    levels = defaults.get(cfg, "noise")
    if levels:
        recs += noise_sweep(spec, rec["truth"], levels, maxit=int(defaults.get(cfg, "maxit")))
    return [_write_jsonl(out, "ledger.jsonl", recs)], {"max_relative_error": rec["max_relative_error"],
                                                       "iterations": rec["iterations"]}


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------


def _read_records(path) -> list:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path, "result file")
    try:
        return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
    except json.JSONDecodeError:
        raise UnknownResultType(f"{path} is not a JSON-lines result file") from None


def emit_plot_data(paths, out_path) -> Path:
    """Tidy ``series,x,y`` CSV from result ledgers.

    Recognized records: corner sweeps (``re_J``/``im_J`` against ``s``),
    distinguishability batches (gap against pair id), grid convergence
    studies (residual and fitted order against ``h``), perturbation sweeps
    and certification records.
    """
    rows = []
    for path in [paths] if isinstance(paths, (str, Path)) else paths:
        recs = _read_records(path)
        kinds = {r.get("kind") for r in recs}
        if "corner" in kinds:
            sweep = sorted((r for r in recs if r.get("kind") == "corner"), key=lambda r: r["s"])
            rows += [("re_J", r["s"], r["re_J"]) for r in sweep] + [("im_J", r["s"], r["im_J"]) for r in sweep]
        elif "distinguishability" in kinds:
            rows += [("gap", r["pair"], r["gap"]) for r in recs if r.get("kind") == "distinguishability"]
        elif "convergence" in kinds:
            study = sorted((r for r in recs if r.get("kind") == "convergence"), key=lambda r: r["h"])
            rows += [("residual", r["h"], r["residual"]) for r in study]
            rows += [("fitted_order", r["h"], r["fitted_order"]) for r in study]
        elif "perturbation" in kinds:
            rows += [("gap", r["size"], r["gap"]) for r in recs if r.get("kind") == "perturbation"]
        elif "certification" in kinds:
            rows += [(f"eps={r['eps']}", r["s"], r["sn_abs_T"]) for r in recs]
        elif "split" in kinds:
            rows += [("C1_part", r["eps"], r["C1_part"]) for r in recs] + [("Cprime_part", r["eps"], r["Cprime_part"]) for r in recs]
        else:
            raise UnknownResultType(f"{path}: no plottable records (kinds {sorted(map(str, kinds))})")
    out_path = Path(out_path)
    with out_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "x", "y"])
        for s, x, y in rows:
            w.writerow([s, repr(float(x)), repr(float(y))])
    return out_path


def cmd_plot(cfg, out):
    inputs = cfg.get("inputs")
    if not inputs:
        raise InputError("plot needs result files (positional arguments or 'inputs')")
    return [emit_plot_data([_path(cfg, p) for p in inputs], out / "plot.csv")], {}


HANDLERS = {
    "forward": cmd_forward,
    "farfield": cmd_farfield,
    "conelab": cmd_conelab,
    "verify": cmd_verify,
    "distinguish": cmd_distinguish,
    "reconstruct": cmd_reconstruct,
    "plot": cmd_plot,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def write_manifest(out: Path, command: str, cfg: dict, artifacts, wall: float, status: str, summary=None) -> Path:
    clean = {k: v for k, v in cfg.items() if not k.startswith("_")}
    doc = {
        "version": __version__,
        "command": command,
        "config_hash": content_hash(clean),
        "config": clean,
        "status": status,
        "wall_time": wall,
        "artifacts": {Path(p).name: file_hash(p) for p in artifacts},
        "summary": summary or {},
    }
    path = out / "manifest.json"
    path.write_text(canonical_json(doc) + "\n")
    return path


def _error_record(exc: Exception) -> dict:
    rec = {"status": "error", "type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, MissingFile):
        rec["path"] = exc.path
    return rec


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyscat", description="Scattering by piecewise-constant polyhedral media.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "conelab":
            sp.add_argument("action", nargs="?", choices=("certify", "split"), default=None)
        if name == "plot":
            sp.add_argument("inputs", nargs="*", help="result ledgers (JSON lines)")
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<command> or ./polyscat-out/<command>)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VAL")
        sp.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("defaults", help="print the table of numeric defaults")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "defaults":
        print(defaults.describe())
        return 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out) if args.out else Path(os.environ.get(OUT_ENV, "polyscat-out")) / args.command
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    cfg = {}
    try:
        cfg = load_config(args.config, args.override, args.seed)
        if getattr(args, "action", None):
            cfg["action"] = args.action
        if getattr(args, "inputs", None):
            cfg["inputs"] = [str(Path(p).resolve()) for p in args.inputs]
        threads = args.threads if args.threads is not None else cfg.get("threads", 1)
        forward.FFT_WORKERS = int(threads)
        artifacts, summary = HANDLERS[args.command](copy.deepcopy(cfg), out)
    except (PolyscatError, KeyError, TypeError, ValueError, ArithmeticError) as exc:
        code = 1 if isinstance(exc, (NumericalError, ArithmeticError)) and not isinstance(exc, InputError) else 2
        err = out / "error.json"
        err.write_text(canonical_json(_error_record(exc)) + "\n")
        write_manifest(out, args.command, cfg, [err], time.perf_counter() - t0, "error")
        print(f"polyscat {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    write_manifest(out, args.command, cfg, artifacts, time.perf_counter() - t0, "ok", summary)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
