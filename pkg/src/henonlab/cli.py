"""Batch experiment runner: every pipeline as a subcommand.

Configuration comes from defaults, an optional JSON file with flat dotted
keys, and --set overrides (in that order).  Every run writes a manifest
echoing the resolved configuration; outputs are plain CSV/JSON.  Exit codes:
0 success, 1 domain error (error name in the manifest), 2 configuration
error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import cantor
from .core import HenonLikeFamily, find_periodic_orbit
from .errors import DynamicsError
from .paramcantor import (
    CantorTree,
    SyntheticWindowSource,
    build_tree,
    calibrate_schedule,
    tree_dimension,
    validate_tree,
)
from .renorm import conditions_c1_c2, fit_normal_form, return_map
from .tangency import find_tangency, grow_stable_arc, slice_thickness
from .unimodal import UnimodalMap, cantor_cover, expansion_check
from .windows import (
    follow_sink,
    locate_window,
    principal_tangency,
    scaling_fit,
    scan_sinks,
)

DEFAULTS: dict[str, dict] = {
    "scan-sinks": {
        "family.b": 0.0,
        "family.file": None,
        "a.min": -2.0,
        "a.max": -1.0,
        "grid": 101,
        "max_period": 14,
        "transient": 2000,
        "tol": 1e-6,
    },
    "windows": {
        "family.b": 0.0,
        "family.file": None,
        "periods.min": 4,
        "periods.max": 8,
        "tangency.min": -2.1,
        "tangency.max": -1.9,
        "a_tol": 1e-12,
    },
    "scaling-fit": {"windows.csv": None},
    "find-tangency": {
        "family.b": 0.0,
        "family.file": None,
        "a.min": -2.1,
        "a.max": -1.9,
        "tol": 1e-9,
    },
    "thickness": {
        "cover.fixture": "middle-thirds",
        "cover.depth": 6,
        "cover.ratio": 0.4,
        "cover.csv": None,
    },
    "gap-check": {
        "k1.fixture": "two-branch",
        "k1.depth": 6,
        "k1.ratio": 0.45,
        "k1.lo": 0.0,
        "k1.hi": 1.0,
        "k2.fixture": "two-branch",
        "k2.depth": 6,
        "k2.ratio": 0.45,
        "k2.lo": 0.5,
        "k2.hi": 1.5,
    },
    "cantor-cover": {
        "family.b": 0.0,
        "family.file": None,
        "a": -2.0,
        "which": "C1",
        "depth": 6,
    },
    "box-dim": {
        "cover.fixture": "middle-thirds",
        "cover.depth": 10,
        "cover.ratio": 0.4,
        "cover.csv": None,
    },
    "falconer": {
        "schedule.kind": "geometric",
        "schedule.m": 2,
        "schedule.eps_ratio": 3.0,
        "schedule.levels": 400000,
        "schedule.alpha": 0.45,
        "schedule.growth_constant": 1.0,
        "schedule.expansion": 2.0,
        "schedule.json": None,
    },
    "covering-upper": {"epsilon": 0.04, "bins": "100"},
    "renorm": {
        "family.b": 1e-2,
        "family.file": None,
        "a_star": -2.0,
        "n.min": 3,
        "n.max": 7,
        "grid": 33,
        "chart_halfwidth": 0.1,
    },
    "conditions": {
        "family.b": 1e-2,
        "family.file": None,
        "a_star": -2.0,
        "n": 6,
        "margin": 0.1,
    },
    "param-cantor": {
        "alpha": 0.45,
        "expansion": 2.0,
        "expansion_hi": 4.0,
        "levels": 4,
        "seed": 7,
        "jitter": 1.05,
    },
    "tree-dim": {"tree.json": None},
    "validate-tree": {"tree.json": None},
    "slice-thickness": {
        "family.b": 1e-2,
        "family.file": None,
        "a": -2.0,
        "which": "C1",
        "depth": 6,
        "transversal_length": 0.4,
    },
}


class ConfigError(Exception):
    pass


def _resolve_config(subcommand: str, config_file, overrides) -> dict:
    base = dict(DEFAULTS[subcommand])
    provided = {}
    if config_file:
        with open(config_file) as fh:
            provided.update(json.load(fh))
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not key=value")
        key, value = item.split("=", 1)
        provided[key] = value
    for key, value in provided.items():
        if key not in base:
            raise ConfigError(f"unknown config key '{key}' for {subcommand}")
        default = base[key]
        if isinstance(value, str) and not (isinstance(default, str) or default is None):
            if isinstance(default, bool):
                value = value.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                value = int(value)
            elif isinstance(default, float):
                value = float(value)
        base[key] = value
    return base


def _family(cfg) -> HenonLikeFamily:
    if cfg.get("family.file"):
        return HenonLikeFamily.load(cfg["family.file"])
    return HenonLikeFamily.pure(float(cfg["family.b"]))


def _fixture_cover(prefix, cfg):
    kind = cfg[f"{prefix}.fixture"]
    depth = int(cfg.get(f"{prefix}.depth", 6))
    if cfg.get(f"{prefix}.csv"):
        rows = np.loadtxt(cfg[f"{prefix}.csv"], delimiter=",", skiprows=1, ndmin=2)
        return cantor.IntervalCover(rows[:, 1:3], depth=int(rows[0, 0]))
    hull = (float(cfg.get(f"{prefix}.lo", 0.0)), float(cfg.get(f"{prefix}.hi", 1.0)))
    if kind == "middle-thirds":
        return cantor.middle_thirds_cover(depth, hull)
    if kind == "two-branch":
        return cantor.two_branch_affine_cover(float(cfg[f"{prefix}.ratio"]), depth, hull)
    raise ConfigError(f"unknown cover fixture '{kind}'")


def _write_cover_csv(path, cover):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["depth", "left", "right"])
        for lo, hi in cover.pairs():
            writer.writerow([cover.depth if cover.depth is not None else "", repr(lo), repr(hi)])


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


# --- subcommand bodies -----------------------------------------------------------


def _run_scan_sinks(cfg, outdir):
    fam = _family(cfg)
    hits = scan_sinks(
        fam,
        (float(cfg["a.min"]), float(cfg["a.max"])),
        int(cfg["grid"]),
        int(cfg["max_period"]),
        int(cfg["transient"]),
        float(cfg["tol"]),
    )
    path = outdir / "sinks.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["a", "period"])
        for a, p in hits:
            writer.writerow([repr(a), p])
    return [path]


def _superstable_parameter(period, seed):
    a = seed
    for _ in range(200):
        x = 0.0
        dx = 0.0
        for _ in range(period):
            x, dx = x * x + a, 2.0 * x * dx + 1.0
        step = x / dx
        a -= step
        if abs(step) < 1e-15:
            break
    return a


def _run_windows(cfg, outdir):
    fam = _family(cfg)
    fam0 = HenonLikeFamily.pure(0.0)
    p_lo, p_hi = int(cfg["periods.min"]), int(cfg["periods.max"])
    rng = (float(cfg["tangency.min"]), float(cfg["tangency.max"]))
    a0, mult = principal_tangency(fam, rng)
    seeds = {}
    prev = -1.9408
    for p in range(4, p_hi + 1):
        seeds[p] = _superstable_parameter(p, prev if p == 4 else -2.0 + (seeds[p - 1] + 2.0) / 4.0)
        prev = seeds[p]
    rows = []
    for p in range(p_lo, p_hi + 1):
        if fam.b == 0.0:
            seed, orbit_pt = seeds[p], None
        else:
            seed, orbit = follow_sink(fam0, fam, p, seeds[p], steps=100)
            orbit_pt = orbit.point
        w = locate_window(
            fam,
            p,
            seed,
            a_tol=float(cfg["a_tol"]),
            tangency_parameter=a0,
            saddle_multiplier=mult,
            orbit_seed=orbit_pt,
        )
        rows.append(w)
    path = outdir / "windows.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["period", "sigma", "a_lo", "a_hi", "dist"])
        for w in rows:
            writer.writerow([w.period, repr(w.sigma), repr(w.a_lo), repr(w.a_hi), repr(w.dist)])
    return [path]


def _run_scaling_fit(cfg, outdir):
    if not cfg["windows.csv"]:
        raise ConfigError("scaling-fit needs windows.csv")
    from .windows import StabilityWindow

    rows = []
    with open(cfg["windows.csv"]) as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                StabilityWindow(
                    period=int(rec["period"]),
                    sigma=float(rec["sigma"]),
                    a_lo=float(rec["a_lo"]),
                    a_hi=float(rec["a_hi"]),
                    dist=float(rec["dist"]),
                )
            )
    fit = scaling_fit(rows)
    path = outdir / "scaling_fit.json"
    _write_json(
        path,
        {
            "slope_length": fit.slope_length,
            "slope_dist": fit.slope_dist,
            "diagnostics": fit.diagnostics,
        },
    )
    return [path]


def _run_find_tangency(cfg, outdir):
    fam = _family(cfg)
    rng = (float(cfg["a.min"]), float(cfg["a.max"]))
    saddle = find_periodic_orbit(fam, 0.5 * (rng[0] + rng[1]), 1, (1.9, 0.0))
    rec = find_tangency(fam, rng, saddle, tol=float(cfg["tol"]))
    path = outdir / "tangency.json"
    _write_json(
        path,
        {
            "a_star": rec.a_star,
            "point": list(rec.point),
            "xi_hat": rec.xi_hat,
            "speed_hat": rec.speed_hat,
            "nondegenerate": rec.nondegenerate,
        },
    )
    return [path]


def _run_thickness(cfg, outdir):
    cover = _fixture_cover("cover", cfg)
    report = cantor.thickness(cover)
    path = outdir / "thickness.json"
    _write_json(
        path,
        {
            "tau": report.tau if math.isfinite(report.tau) else "inf",
            "witness_gap": report.witness_gap,
            "witness_bridge": report.witness_bridge,
            "endpoints": len(report.per_endpoint),
        },
    )
    return [path]


def _run_gap_check(cfg, outdir):
    k1 = _fixture_cover("k1", cfg)
    k2 = _fixture_cover("k2", cfg)
    rep = cantor.gap_lemma(k1, k2)
    path = outdir / "gap_check.json"
    _write_json(
        path,
        {
            "verdict": rep.verdict,
            "tau1": rep.tau1,
            "tau2": rep.tau2,
            "product": rep.product,
            "overlap": rep.overlap,
        },
    )
    return [path]


def _run_cantor_cover(cfg, outdir):
    fam = _family(cfg)
    P = UnimodalMap.from_family(fam, float(cfg["a"]))
    cover = cantor_cover(P, cfg["which"], int(cfg["depth"]))
    path = outdir / "cover.csv"
    _write_cover_csv(path, cover)
    extras = {
        "count": cover.count,
        "chebyshev_expansion": expansion_check(P, cover, "chebyshev"),
        "euclidean_expansion": expansion_check(P, cover, "euclidean"),
    }
    path2 = outdir / "cover_summary.json"
    _write_json(path2, extras)
    return [path, path2]


def _run_box_dim(cfg, outdir):
    cover = _fixture_cover("cover", cfg)
    est = cantor.box_dimension([cover])
    path = outdir / "box_dimension.json"
    _write_json(path, est.to_json())
    return [path]


def _run_falconer(cfg, outdir):
    kind = cfg["schedule.kind"]
    if cfg.get("schedule.json"):
        with open(cfg["schedule.json"]) as fh:
            data = json.load(fh)
        schedule = cantor.CantorSchedule.from_values(data["m"], data["eps"])
    elif kind == "geometric":
        L = int(cfg["schedule.levels"])
        ratio = float(cfg["schedule.eps_ratio"])
        schedule = cantor.CantorSchedule(
            np.full(L, math.log(float(cfg["schedule.m"]))),
            -np.arange(1, L + 1) * math.log(ratio),
        )
    elif kind == "paper":
        schedule = cantor.CantorSchedule.from_paper_formula(
            float(cfg["schedule.alpha"]),
            float(cfg["schedule.growth_constant"]),
            int(cfg["schedule.levels"]),
            float(cfg["schedule.expansion"]),
        )
    else:
        raise ConfigError(f"unknown schedule kind '{kind}'")
    est = cantor.falconer_bound(schedule)
    path = outdir / "falconer.json"
    _write_json(path, est.to_json())
    return [path]


def _run_covering_upper(cfg, outdir):
    bins = [int(tok) for tok in str(cfg["bins"]).split(";") if tok]
    est = cantor.covering_upper_bound(float(cfg["epsilon"]), [(i, None) for i in bins])
    path = outdir / "covering_upper.json"
    _write_json(path, est.to_json())
    return [path]


def _run_renorm(cfg, outdir):
    fam = _family(cfg)
    rows = []
    for n in range(int(cfg["n.min"]), int(cfg["n.max"]) + 1):
        sm = return_map(
            fam,
            float(cfg["a_star"]),
            n,
            grid=int(cfg["grid"]),
            chart_halfwidth=float(cfg["chart_halfwidth"]),
        )
        rf = fit_normal_form(sm)
        rows.append(
            {
                "n": n,
                "delta": rf.delta,
                "det_estimate": rf.det_estimate,
                "xi": rf.fitted["xi"],
                "a_map_slope": rf.a_map[0],
                "a_map_intercept": rf.a_map[1],
            }
        )
    path = outdir / "renorm.json"
    _write_json(path, {"runs": rows})
    return [path]


def _run_conditions(cfg, outdir):
    fam = _family(cfg)
    sm = return_map(fam, float(cfg["a_star"]), int(cfg["n"]))
    rf = fit_normal_form(sm)
    rep = conditions_c1_c2(rf, fam.b, margin=float(cfg["margin"]))
    path = outdir / "conditions.json"
    _write_json(path, {"C1": rep.c1, "C2": rep.c2, "witness": rep.witness})
    return [path]


def _run_param_cantor(cfg, outdir):
    alpha = float(cfg["alpha"])
    spec = calibrate_schedule(
        alpha,
        int(cfg["levels"]),
        float(cfg["expansion"]),
        float(cfg["expansion_hi"]),
    )
    source = SyntheticWindowSource(
        float(cfg["expansion"]),
        float(cfg["expansion_hi"]),
        alpha,
        spec.d_prime / (4.0 * math.sqrt(float(cfg["expansion_hi"])) ** alpha),
        int(cfg["seed"]),
        float(cfg["jitter"]),
    )
    tree = build_tree(source, int(cfg["levels"]), schedule=spec)
    path = outdir / "tree.json"
    tree.save(path)
    return [path]


def _run_tree_dim(cfg, outdir):
    if not cfg["tree.json"]:
        raise ConfigError("tree-dim needs tree.json")
    tree = CantorTree.load(cfg["tree.json"])
    est = tree_dimension(tree)
    path = outdir / "tree_dimension.json"
    _write_json(path, est.to_json())
    return [path]


def _run_validate_tree(cfg, outdir):
    if not cfg["tree.json"]:
        raise ConfigError("validate-tree needs tree.json")
    tree = CantorTree.load(cfg["tree.json"])
    val = validate_tree(tree)
    path = outdir / "tree_validation.json"
    _write_json(
        path,
        {
            "ok": val.ok,
            "issues": list(val.issues),
            "derived_eps": list(val.derived_eps),
            "derived_multiplicity": list(val.derived_multiplicity),
        },
    )
    return [path]


def _run_slice_thickness(cfg, outdir):
    fam = _family(cfg)
    a = float(cfg["a"])
    alpha_orbit = find_periodic_orbit(fam, a, 1, (-1.0, 0.0))
    arc = grow_stable_arc(fam, a, alpha_orbit, float(cfg["transversal_length"]))
    rep = slice_thickness(fam, a, cfg["which"], arc, int(cfg["depth"]))
    path = outdir / "slice_thickness.json"
    _write_json(
        path,
        {
            "tau": rep.tau if math.isfinite(rep.tau) else "inf",
            "witness_gap": rep.witness_gap,
            "witness_bridge": rep.witness_bridge,
        },
    )
    return [path]


RUNNERS = {
    "scan-sinks": _run_scan_sinks,
    "windows": _run_windows,
    "scaling-fit": _run_scaling_fit,
    "find-tangency": _run_find_tangency,
    "thickness": _run_thickness,
    "gap-check": _run_gap_check,
    "cantor-cover": _run_cantor_cover,
    "box-dim": _run_box_dim,
    "falconer": _run_falconer,
    "covering-upper": _run_covering_upper,
    "renorm": _run_renorm,
    "conditions": _run_conditions,
    "param-cantor": _run_param_cantor,
    "tree-dim": _run_tree_dim,
    "validate-tree": _run_validate_tree,
    "slice-thickness": _run_slice_thickness,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="henonlab", description="Batch experiments for dissipative planar families."
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON config with flat dotted keys")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key (repeatable)",
        )
    args = parser.parse_args(argv)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest_path = outdir / "manifest.json"
    manifest = {"subcommand": args.subcommand, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S")}
    try:
        cfg = _resolve_config(args.subcommand, args.config, args.set)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        manifest["error"] = type(exc).__name__
        manifest["detail"] = str(exc)
        manifest["outputs"] = []
        _write_json(manifest_path, manifest)
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    manifest["resolved_config"] = cfg
    try:
        outputs = RUNNERS[args.subcommand](cfg, outdir)
    except DynamicsError as exc:
        manifest["error"] = exc.name
        manifest["detail"] = str(exc)
        manifest["outputs"] = []
        _write_json(manifest_path, manifest)
        print(f"domain error: {exc.name}: {exc}", file=sys.stderr)
        return 1
    manifest["outputs"] = [str(p) for p in outputs]
    _write_json(manifest_path, manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
