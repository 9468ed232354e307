"""Reproducible experiment driver.

Every run is described by a manifest: the experiment kind plus its fully
resolved parameters (defaults, then config-file values, then command-line
flags).  The manifest's canonical JSON hash is stamped into every artifact —
embedded in JSON outputs, carried as a trailing column in CSVs, and written as
a `<file>.meta.json` sidecar next to binary dumps — so any output can be traced
to the exact inputs that produced it.  All randomness flows from manifest
seeds; two runs of the same manifest produce byte-identical artifacts.

Exit codes: 0 built-in assertions passed, 1 assertions failed, 2 usage error,
3 numerical abort (partial artifacts are retained and marked).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import fbm, hurst, solver, spectral, young
from .grids import DyadicGrid

__all__ = ["ExperimentManifest", "main", "run"]

KINDS = ("fbm-gen", "prop15", "young-check", "simulate", "estimate", "sweep")

DEFAULTS = {
    "fbm-gen": {"hurst": 0.75, "level": 12, "horizon": 1.0, "seed": 0, "format": "fbm1"},
    "prop15": {"hurst": 0.6, "t": 1.0, "ensemble": 2000, "seed": 0, "n_range": "64:4096"},
    "young-check": {
        "hurst": 0.75, "gamma": 0.7, "grid_n": 32, "alpha": 1.25,
        "levels": "6:12", "seed": 0, "omega0": "two_mode", "t": 1.0,
    },
    "simulate": {
        "hurst": 0.75, "gamma": 0.7, "grid_n": 64, "alpha": 1.25,
        "horizon": 0.5, "level": 8, "seed": 0, "mode": "stepper",
        "omega0": "two_mode", "xi": "shear", "observe": "1,0",
    },
    "estimate": {
        "hurst": 0.75, "gamma": 0.7, "grid_n": 64, "alpha": 1.25,
        "horizon": 0.5, "level": 15, "seed": 0, "mode": "stepper",
        "omega0": "two_mode", "xi": "shear", "observe": "1,0",
        "levels": "10:14", "source": "solver",
    },
    "sweep": {
        "hursts": "0.6,0.75,0.9", "seeds": "0:9", "k": 10, "budget": 200,
        "source": "raw", "gamma": 0.7, "grid_n": 64, "alpha": 1.25,
        "horizon": 0.5, "omega0": "two_mode", "xi": "shear", "observe": "1,0",
    },
}


class ExperimentManifest:
    """Kind + fully resolved parameter map, with a canonical form and hash."""

    def __init__(self, kind: str, params: dict, out_dir: str):
        if kind not in KINDS:
            raise ValueError(f"unknown experiment kind {kind!r}")
        self.kind = kind
        self.params = dict(sorted(params.items()))
        self.out_dir = Path(out_dir)

    def canonical(self) -> str:
        return json.dumps(
            {"kind": self.kind, "params": self.params},
            sort_keys=True,
            separators=(",", ":"),
        )

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    @classmethod
    def from_canonical(cls, text: str, out_dir: str = ".") -> "ExperimentManifest":
        doc = json.loads(text)
        return cls(doc["kind"], doc["params"], out_dir)

    def write(self) -> None:
        path = self.out_dir / "manifest.json"
        with open(path, "w") as fh:
            json.dump(
                {"kind": self.kind, "params": self.params, "hash": self.hash},
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _read_config_file(path: str) -> dict:
    """Flat `key = value` lines; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected 'key = value', got {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = _parse_value(val)
    return out


def _resolve_params(kind: str, args: argparse.Namespace) -> dict:
    params = dict(DEFAULTS[kind])
    if args.config:
        file_params = _read_config_file(args.config)
        unknown = set(file_params) - set(params)
        if unknown:
            raise ValueError(f"unknown config keys for {kind}: {sorted(unknown)}")
        params.update(file_params)
    for key in params:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            params[key] = flag_val
    return params


def _parse_range(text: str) -> tuple[int, int]:
    lo, hi = (int(s) for s in str(text).split(":"))
    if lo > hi:
        raise ValueError(f"range {text!r} has lo > hi")
    return lo, hi


def _parse_mode(text: str) -> tuple[int, int]:
    a, b = (int(s) for s in str(text).split(","))
    return a, b


def _n_workers() -> int:
    cap = os.environ.get("FRACVORT_THREADS")
    workers = os.cpu_count() or 1
    if cap:
        workers = min(workers, max(1, int(cap)))
    return workers


def _sidecar(path: Path, manifest: ExperimentManifest) -> None:
    with open(str(path) + ".meta.json", "w") as fh:
        json.dump({"manifest_hash": manifest.hash, "file": path.name}, fh)
        fh.write("\n")


def _write_summary(manifest: ExperimentManifest, payload: dict) -> None:
    payload = dict(payload)
    payload["manifest_hash"] = manifest.hash
    with open(manifest.out_dir / "summary.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _write_csv(path: Path, header: list, rows: list, manifest: ExperimentManifest) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header + ["manifest_hash"])
        for row in rows:
            writer.writerow(list(row) + [manifest.hash])


# ---------------------------------------------------------------------------
# experiment bodies
# ---------------------------------------------------------------------------


def _run_fbm_gen(manifest: ExperimentManifest) -> dict:
    p = manifest.params
    grid = DyadicGrid(int(p["level"]), float(p["horizon"]))
    path = fbm.generate_path(float(p["hurst"]), grid, int(p["seed"]))
    fmt = p["format"]
    if fmt in ("fbm1", "both"):
        out = manifest.out_dir / "path.fbm1"
        fbm.write_fbm1(path, out)
        _sidecar(out, manifest)
    if fmt in ("csv", "both"):
        out = manifest.out_dir / "path.csv"
        fbm.write_path_csv(path, out)
        _sidecar(out, manifest)
    return {"passed": True, "terminal_value": float(path.values[-1])}


def _run_prop15(manifest: ExperimentManifest) -> dict:
    p = manifest.params
    lo, hi = _parse_range(p["n_range"])
    n_list = []
    n = lo
    while n <= hi:
        n_list.append(n)
        n *= 2
    table = hurst.prop15_monte_carlo(
        float(p["hurst"]), n_list, float(p["t"]), int(p["ensemble"]), int(p["seed"])
    )
    _write_csv(
        manifest.out_dir / "table.csv",
        ["n", "mse"],
        [(r["n"], repr(r["mse"])) for r in table["rows"]],
        manifest,
    )
    passed = table["slope"] >= table["slope_floor"] - 0.2
    return {"passed": bool(passed), "slope": table["slope"], "slope_floor": table["slope_floor"]}


def _frozen_transport_trace(p: dict, k_max: int) -> tuple[young.IntegrandTrace, fbm.FbmPath]:
    """Transport coefficient along a heat-flow trajectory: Y_s = xi.grad(S_s w0)."""
    n = int(p["grid_n"])
    xi = solver.shear_flow(n)
    w0 = solver.preset_vorticity(str(p["omega0"]), n)
    grid = DyadicGrid(k_max, float(p.get("t", 1.0)))
    decay = np.exp(-grid.mesh * spectral._ksq(n))
    fields = []
    c = w0.coeffs
    for _ in range(grid.n_steps + 1):
        fields.append(spectral.transport(xi, spectral.FourierField(c)))
        c = decay * c
    trace = young.IntegrandTrace.from_fields(
        grid, fields, alpha_base=float(p["alpha"]), gamma=float(p["gamma"])
    )
    W = fbm.generate_path(float(p["hurst"]), grid, int(p["seed"]))
    return trace, W


def _run_young_check(manifest: ExperimentManifest) -> dict:
    p = manifest.params
    k_lo, k_hi = _parse_range(p["levels"])
    trace, W = _frozen_transport_trace(p, k_hi)
    t = float(p["t"])
    alpha = float(p["alpha"])
    prev = None
    rows = []
    gaps = []
    for k in range(k_lo, k_hi + 1):
        cur = young.dyadic_sum(trace, W, t, k)
        if prev is not None:
            gap = spectral.coeff_norm(cur - prev, alpha)
            rows.append((k, repr(gap)))
            gaps.append(gap)
        prev = cur
    _write_csv(manifest.out_dir / "convergence.csv", ["k", "gap"], rows, manifest)
    ks = np.arange(k_lo + 1, k_hi + 1, dtype=float)
    slope = -float(np.polyfit(ks, np.log2(gaps), 1)[0])
    floor = float(p["gamma"]) - 0.5 - 0.1
    return {"passed": bool(slope >= floor), "slope": slope, "slope_floor": floor}


def _model_config(p: dict) -> solver.ModelConfig:
    n = int(p["grid_n"])
    xi = (
        (spectral.FourierField.zero(n), spectral.FourierField.zero(n))
        if str(p["xi"]) == "none"
        else solver.shear_flow(n)
    )
    return solver.ModelConfig(
        grid_n=n,
        alpha=float(p["alpha"]),
        hurst=float(p["hurst"]),
        gamma=float(p["gamma"]),
        xi=xi,
        omega0=solver.preset_vorticity(str(p["omega0"]), n),
        horizon=float(p["horizon"]),
        level=int(p["level"]),
    )


def _run_simulate(manifest: ExperimentManifest) -> dict:
    p = manifest.params
    config = _model_config(p)
    driver = fbm.generate_path(config.hurst_param, config.grid, int(p["seed"]))
    mode = _parse_mode(p["observe"])
    aborted = False
    try:
        state = solver.solve(
            config, driver, mode=str(p["mode"]), observe=(mode,), store_fields=True
        )
    except solver.BlowupError as err:
        state = err.state
        aborted = True
    obs = state.observables[mode]
    _write_csv(
        manifest.out_dir / "observable.csv",
        ["t", "x_real", "x_imag", "drift_real", "drift_imag", "noise_real", "noise_imag"],
        [
            (repr(float(t)), repr(v.real), repr(v.imag), repr(a.real), repr(a.imag),
             repr(x.real), repr(x.imag))
            for t, v, a, x in zip(obs.times, obs.values, obs.drift_channel, obs.noise_channel)
        ],
        manifest,
    )
    if state.omegas:
        out = manifest.out_dir / "final_field.fld1"
        spectral.write_fld1(state.omegas[-1], out)
        _sidecar(out, manifest)
    summary = {"aborted": aborted, "failure": state.failure, "mode": str(p["mode"])}
    if not aborted:
        summary["weak_residual"] = solver.weak_residual(state, mode)
        summary["passed"] = True
    else:
        summary["passed"] = False
    return summary


def _run_estimate(manifest: ExperimentManifest) -> dict:
    p = manifest.params
    k_lo, k_hi = _parse_range(p["levels"])
    h_true = float(p["hurst"])
    if str(p["source"]) == "raw":
        grid = DyadicGrid(k_hi + 1, float(p["horizon"]))
        path = fbm.generate_path(h_true, grid, int(p["seed"]))
        report = hurst.hurst_estimate(path, k_hi, k_lo=k_lo)
        reports = [report]
    else:
        config = _model_config({**p, "level": k_hi + 1})
        driver = fbm.generate_path(config.hurst_param, config.grid, int(p["seed"]))
        state = solver.solve(
            config, driver, mode=str(p["mode"]),
            observe=(_parse_mode(p["observe"]),), store_fields=False,
        )
        est = hurst.estimate_from_solver(state, _parse_mode(p["observe"]), k_hi)
        report = est.real
        reports = [est.real, est.imag]
    out = manifest.out_dir / "report.csv"
    hurst.write_report_csv(reports, out)
    _sidecar(out, manifest)
    errs = np.abs(report.h_sequence - h_true)
    tail = errs[-min(3, len(errs)):]
    passed = bool(not report.degenerate and np.isfinite(report.final_h))
    return {
        "passed": passed,
        "final_h": report.final_h,
        "abs_error": float(errs[-1]),
        "trend_improving": bool(tail[-1] <= tail[0] + 0.05),
        "degenerate": report.degenerate,
    }


def _sweep_cell(p: dict, h: float, seed: int, k: int) -> dict:
    if str(p["source"]) == "solver":
        config = _model_config({**p, "hurst": h, "level": k + 1})
        driver = fbm.generate_path(config.hurst_param, config.grid, seed)
        state = solver.solve(
            config, driver, mode="stepper",
            observe=(_parse_mode(p["observe"]),), store_fields=False,
        )
        est = hurst.estimate_from_solver(state, _parse_mode(p["observe"]), k)
        h_k = est.real.final_h
    else:
        grid = DyadicGrid(k + 1, 1.0)
        path = fbm.generate_path(h, grid, seed)
        h_k = hurst.hurst_estimate(path, k).final_h
    return {"hurst": h, "seed": seed, "k": k, "h_k": h_k}


def _run_sweep(manifest: ExperimentManifest) -> dict:
    p = manifest.params
    hs = [float(s) for s in str(p["hursts"]).split(",")]
    s_lo, s_hi = _parse_range(p["seeds"])
    seeds = list(range(s_lo, s_hi + 1))
    k = int(p["k"])
    cells = [(h, s) for h in hs for s in seeds]
    if len(cells) > int(p["budget"]):
        raise ValueError(
            f"sweep of {len(cells)} cells exceeds the budget of {p['budget']}; refusing"
        )
    cell_dir = manifest.out_dir / "cells"
    cell_dir.mkdir(exist_ok=True)

    def cell_path(h, s) -> Path:
        return cell_dir / f"cell_h{h}_s{s}_{manifest.hash}.json"

    def compute(args):
        h, s = args
        out = cell_path(h, s)
        if out.exists():  # resume: hash-stamped name, so a hit is a manifest match
            with open(out) as fh:
                return json.load(fh)
        row = _sweep_cell(p, h, s, k)
        row["manifest_hash"] = manifest.hash
        with open(out, "w") as fh:
            json.dump(row, fh)
            fh.write("\n")
        return row

    with ThreadPoolExecutor(max_workers=_n_workers()) as pool:
        rows = list(pool.map(compute, cells))

    out_rows = [(r["hurst"], r["seed"], r["k"], repr(float(r["h_k"]))) for r in rows]
    medians = {}
    iqrs = {}
    for h in hs:
        vals = np.array([r["h_k"] for r in rows if r["hurst"] == h])
        med = float(np.median(vals))
        q1, q3 = (float(q) for q in np.percentile(vals, [25, 75]))
        medians[h] = med
        iqrs[h] = q3 - q1
        out_rows.append((h, "aggregate", k, repr(med)))
    _write_csv(
        manifest.out_dir / "sweep.csv", ["hurst", "seed", "k", "h_k"], out_rows, manifest
    )
    errs = {h: abs(m - h) for h, m in medians.items()}
    return {
        "passed": bool(max(errs.values()) <= 0.07),
        "median_h": medians,
        "iqr_h": iqrs,
        "median_abs_error": errs,
        "n_cells": len(cells),
    }


_RUNNERS = {
    "fbm-gen": _run_fbm_gen,
    "prop15": _run_prop15,
    "young-check": _run_young_check,
    "simulate": _run_simulate,
    "estimate": _run_estimate,
    "sweep": _run_sweep,
}


def run(manifest: ExperimentManifest) -> int:
    manifest.out_dir.mkdir(parents=True, exist_ok=True)
    manifest.write()
    try:
        summary = _RUNNERS[manifest.kind](manifest)
    except solver.BlowupError as err:
        _write_summary(manifest, {"passed": False, "aborted": True, "failure": str(err)})
        return 3
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    _write_summary(manifest, summary)
    return 0 if summary.get("passed") else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracvort",
        description="seeded experiments: fBm generation, limit-theorem checks, "
        "vorticity simulation, and Hurst estimation",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    flag_types = {
        "hurst": float, "gamma": float, "alpha": float, "horizon": float, "t": float,
        "level": int, "grid_n": int, "seed": int, "ensemble": int, "k": int, "budget": int,
    }
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", help="flat key=value config file")
        sp.add_argument("--out", default=None, help="output directory (default: ./out/<kind>)")
        for key in DEFAULTS[kind]:
            sp.add_argument(
                f"--{key.replace('_', '-')}",
                dest=key,
                type=flag_types.get(key, str),
                default=None,
                help=f"default: {DEFAULTS[kind][key]}",
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        params = _resolve_params(args.kind, args)
        manifest = ExperimentManifest(args.kind, params, args.out or f"out/{args.kind}")
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    code = run(manifest)
    print(f"{manifest.kind}: manifest {manifest.hash} -> exit {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
