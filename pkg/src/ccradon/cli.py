"""Batch front-end: scenario files in, JSON reports and CSV plot data out.

One experiment is one scenario file.  Reports are deterministic given the
scenario and seed (timestamps live in a metadata sidecar); exit status is
0 on pass, 1 on assertion failure, 2 on usage errors, 3 on resolution errors.
"""
from __future__ import annotations

import csv
import datetime
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import __version__, calibration
from .ccball import ComparabilityWindow, lemma_balls_report, mc_ball, reach_ball, slab_profile
from .decomp import partition, stratify, to_pi_fibers, widthbound_check
from .errors import CCRadonError, OrderingError, ResolutionError
from .exponents import classify_triple, default_h_rule, estimate_region
from .geometry import builtin_models, load_model
from .lattice import LatticeSet
from .radon import necessity_union, rwt_ratio, superlevel_set

EXIT_PASS = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_RESOLUTION = 3


def _require(mapping, key, path):
    if not isinstance(mapping, dict) or key not in mapping:
        raise click.UsageError(f"scenario missing required field '{path}'")
    return mapping[key]


def _parse_exponent(value):
    if value in ("inf", "Infinity", None):
        return math.inf
    if isinstance(value, str):
        return Fraction(value)
    return value


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def _write_report(out_dir: Path, name: str, report: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(_sanitize(report), sort_keys=True, indent=2) + "\n"
    (out_dir / name).write_text(payload)
    meta = {
        "written_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "package_version": __version__,
        "numpy_version": np.__version__,
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def _write_csv(out_dir: Path, name: str, header, rows):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / name, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _load_scenario(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise click.UsageError(f"scenario file not found: {path}")
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"scenario file is not valid JSON: {exc}")


def _resolve_model(scenario):
    return load_model(_require(scenario, "model", "model"))


def _parse_set(spec, h: float, dim: int) -> LatticeSet:
    if "rects" in spec:
        parts = None
        for rect in spec["rects"]:
            if len(rect) != dim:
                raise click.UsageError("set rect dimensionality mismatch")
            box = LatticeSet.from_box([a for a, _ in rect], [b for _, b in rect], h)
            parts = box if parts is None else parts.union(box)
        return parts
    if "cells" in spec:
        return LatticeSet(h, np.asarray(spec["cells"], dtype=np.int64))
    raise click.UsageError("set spec requires 'rects' or 'cells'")


def _h_rule(params):
    rule = params.get("h_rule", "auto")
    if rule == "auto":
        return default_h_rule
    if isinstance(rule, (int, float)):
        return lambda d1, d2: float(rule)
    raise click.UsageError("parameters.h_rule must be 'auto' or a number")


def _pool_map(fn, jobs, threads: int):
    if threads <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


def _ball_pairs_sweep(model, deltas, h_rule, p, q, r, threads):
    def one(d):
        h = h_rule(d, d)
        ball = reach_ball(model, (0.0,) * model.dim_z, d, d, h)
        ratio = rwt_ratio(model, ball.proj1, ball.proj2, p, q, r)
        return {"delta": d, "h": h, "ratio": ratio, "volume": ball.volume}

    return _pool_map(one, sorted(deltas, reverse=True), threads)


# --------------------------------------------------------------------------
# Command implementations (shared by the CLI and tests)
# --------------------------------------------------------------------------

def run_ball(scenario: dict, out_dir: Path, seed, threads: int) -> dict:
    model = _resolve_model(scenario)
    params = _require(scenario, "parameters", "parameters")
    h = _require(params, "h", "parameters.h")
    d1 = _require(params, "delta1", "parameters.delta1")
    d2 = _require(params, "delta2", "parameters.delta2")
    center = params.get("center", [0.0] * model.dim_z)
    ball = reach_ball(model, center, d1, d2, h, tau=params.get("tau"))
    report = {"command": "ball", "parameters": _sanitize(params), "model": model.to_json_dict(), "ball": ball.to_report(), "passed": True}
    if "mc" in params:
        if seed is None:
            raise click.UsageError("scenario missing required field 'seed' (stochastic run)")
        mc = mc_ball(
            model,
            center,
            d1,
            d2,
            paths=_require(params["mc"], "paths", "parameters.mc.paths"),
            steps=params["mc"].get("steps", 32),
            seed=seed,
            h=h,
        )
        lo, hi = calibration.MC_AGREEMENT_BAND
        agreement = mc.volume / ball.volume if ball.volume > 0 else math.inf
        report["mc"] = {
            "volume": mc.volume,
            "paths": mc.n_paths,
            "escaped": mc.n_escaped,
            "agreement": agreement,
            "band": [lo, hi],
        }
        report["passed"] = bool(lo <= agreement <= hi)
        if not report["passed"]:
            report["failures"] = [f"mc_agreement={agreement:.4g} outside [{lo}, {hi}]"]
    _write_csv(out_dir, "slab_profile.csv", ["t", "f"], slab_profile(ball))
    _write_report(out_dir, "ball_report.json", report)
    return report


def run_lemma_check(scenario: dict, out_dir: Path, seed, threads: int) -> dict:
    model = _resolve_model(scenario)
    params = _require(scenario, "parameters", "parameters")
    q = float(_parse_exponent(_require(params, "q", "parameters.q")))
    r = float(_parse_exponent(_require(params, "r", "parameters.r")))
    p = float(_parse_exponent(params["p"])) if "p" in params else None
    grid = _require(params, "grid", "parameters.grid")
    thetas = grid.get("theta_list", [0.5, 0.75, 1.0])
    d1s = _require(grid, "delta1_list", "parameters.grid.delta1_list")
    h_rule = _h_rule(params)
    halve = bool(params.get("halve_h", False))

    jobs = []
    for theta in thetas:
        for d1 in d1s:
            d2 = min(d1 ** theta, 0.375)
            hs = [h_rule(d1, d2)]
            if halve:
                hs.append(hs[0] / 2.0)
            for h in hs:
                jobs.append((theta, d1, d2, h))

    def one(job):
        theta, d1, d2, h = job
        rep = lemma_balls_report(model, (0.0,) * model.dim_z, d1, d2, q, r, h, p=p,
                                 window=ComparabilityWindow(theta=theta, bigA=2.0))
        rep["theta"] = theta
        return rep

    reports = _pool_map(one, jobs, threads)
    rows = []
    passed = True
    failures = []
    for rep in reports:
        for key, val in rep["ratios"].items():
            lo, hi = calibration.LEMMA_BANDS[key]
            ok = lo <= val <= hi
            passed &= ok
            if not ok:
                failures.append(f"ratio {key}={val:.4g} at theta={rep['theta']} d1={rep['delta1']:g} h={rep['h']:g}")
            rows.append([rep["theta"], rep["delta1"], rep["delta2"], rep["h"], key, val, lo, hi, int(ok)])
    _write_csv(out_dir, "lemma_ratios.csv",
               ["theta", "delta1", "delta2", "h", "ratio", "value", "band_lo", "band_hi", "ok"], rows)
    report = {
        "command": "lemma-check",
        "parameters": _sanitize(params),
        "bands": calibration.LEMMA_BANDS,
        "results": reports,
        "failures": failures,
        "passed": bool(passed),
    }
    _write_report(out_dir, "lemma_report.json", report)
    return report


def _region_from_params(model, params, threads):
    windows = None
    if "windows" in params:
        windows = [ComparabilityWindow(theta=t, bigA=a) for t, a in params["windows"]]
    kwargs = {}
    for grid_key in ("c1_grid", "c2_grid"):
        if grid_key in params:
            g = params[grid_key]
            kwargs[grid_key] = np.round(np.arange(g["start"], g["stop"] + 1e-9, g["step"]), 10)
    if "delta_grid" in params:
        kwargs["delta_grid"] = tuple(params["delta_grid"])
    if "z_samples" in params:
        kwargs["z_samples"] = [tuple(z) for z in params["z_samples"]]

    runner = None
    if threads > 1:
        from .exponents import _region_sequences, default_h_rule as _dh, default_windows, default_z_samples

        win = windows if windows is not None else default_windows()
        seqs = _region_sequences(win, kwargs.get("delta_grid", (2.0 ** -4, 2.0 ** -5, 2.0 ** -6)))
        zs = kwargs.get("z_samples") or default_z_samples(model)
        jobs = []
        seen = set()
        for seq in seqs:
            for d1, d2 in zip(seq.delta1, seq.delta2):
                hh = _dh(d1, d2)
                for z in zs:
                    key = (tuple(z), round(d1, 14), round(d2, 14), round(hh, 14))
                    if key not in seen:
                        seen.add(key)
                        jobs.append((z, d1, d2, hh))
        results = {}
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(reach_ball, model, z, d1, d2, hh): (z, d1, d2, hh) for z, d1, d2, hh in jobs}
            for fut, key in futures.items():
                z, d1, d2, hh = key
                results[(tuple(z), round(d1, 14), round(d2, 14), round(hh, 14))] = fut.result()

        def runner(model_, z, d1, d2, h, tau=None):
            key = (tuple(np.asarray(z, dtype=float).tolist()), round(d1, 14), round(d2, 14), round(h, 14))
            if key in results:
                return results[key]
            return reach_ball(model_, z, d1, d2, h, tau=tau)

    return estimate_region(model, windows=windows, ball_runner=runner, **kwargs)


def run_region(scenario: dict, out_dir: Path, seed, threads: int) -> dict:
    model = _resolve_model(scenario)
    params = scenario.get("parameters", {})
    region = _region_from_params(model, params, threads)
    rows = [[r["c1"], r["c2"], r["infimum"], r["worst_rate"], r["label"]] for r in region.to_rows()]
    _write_csv(out_dir, "region.csv", ["c1", "c2", "infimum", "worst_rate", "label"], rows)
    passed = True
    checks = []
    failures = []
    for expect in params.get("expect", []):
        got = region.label_at(expect["c1"], expect["c2"])
        ok = got == expect["label"]
        passed &= ok
        if not ok:
            failures.append(f"node ({expect['c1']}, {expect['c2']}): want {expect['label']}, got {got}")
        checks.append({"c1": expect["c1"], "c2": expect["c2"], "want": expect["label"], "got": got, "ok": ok})
    report = {
        "command": "region",
        "parameters": _sanitize(params),
        "meta": _sanitize(region.meta),
        "checks": checks,
        "failures": failures,
        "passed": bool(passed),
    }
    _write_report(out_dir, "region_report.json", report)
    return report


def run_classify(scenario: dict, out_dir: Path, seed, threads: int) -> dict:
    model = _resolve_model(scenario)
    params = _require(scenario, "parameters", "parameters")
    triples = _require(params, "triples", "parameters.triples")
    margin = params.get("margin", 0.1)
    region = _region_from_params(model, params, threads)
    results = []
    passed = True
    failures = []
    for entry in triples:
        trip = tuple(_parse_exponent(v) for v in entry["triple"])
        try:
            label = classify_triple(trip, region, margin=margin)
        except OrderingError as exc:
            label = "ordering-error"
            if entry.get("expect") not in (None, "ordering-error"):
                passed = False
            results.append({"triple": [str(t) for t in trip], "label": label, "detail": str(exc)})
            continue
        ok = entry.get("expect") is None or entry["expect"] == label
        passed &= ok
        if not ok:
            failures.append(f"triple {trip}: want {entry['expect']}, got {label}")
        results.append({"triple": [str(t) for t in trip], "label": label, "ok": ok})
    report = {
        "command": "classify",
        "parameters": _sanitize(params),
        "resolved": {"margin": margin},
        "meta": _sanitize(region.meta),
        "results": results,
        "failures": failures,
        "passed": bool(passed),
    }
    _write_report(out_dir, "classify_report.json", report)
    return report


def run_test_inequality(scenario: dict, out_dir: Path, seed, threads: int) -> dict:
    model = _resolve_model(scenario)
    params = _require(scenario, "parameters", "parameters")
    p, q, r = (_parse_exponent(v) for v in _require(params, "triple", "parameters.triple"))
    deltas = _require(params, "delta_list", "parameters.delta_list")
    h_rule = _h_rule(params)
    sweep = _ball_pairs_sweep(model, deltas, h_rule, p, q, r, threads)
    ratios = [s["ratio"] for s in sweep]
    factors = [ratios[i + 1] / ratios[i] for i in range(len(ratios) - 1)]
    mean_factor = float(np.exp(np.mean(np.log(factors)))) if factors else 1.0
    if mean_factor <= 1.25:
        verdict = "bounded"
    elif mean_factor >= 1.5:
        verdict = "growing"
    else:
        verdict = "indeterminate"
    passed = True
    failures = []
    expect = params.get("expect")
    if expect is not None:
        passed = expect == verdict
        if not passed:
            failures.append(f"verdict {verdict} (mean halving factor {mean_factor:.3g}), expected {expect}")
    _write_csv(out_dir, "inequality_sweep.csv", ["delta", "h", "ratio"],
               [[s["delta"], s["h"], s["ratio"]] for s in sweep])
    report = {
        "command": "test-inequality",
        "parameters": _sanitize(params),
        "sweep": sweep,
        "mean_halving_factor": mean_factor,
        "verdict": verdict,
        "failures": failures,
        "passed": bool(passed),
    }
    _write_report(out_dir, "inequality_report.json", report)
    return report


def run_necessity(scenario: dict, out_dir: Path, seed, threads: int) -> dict:
    model = _resolve_model(scenario)
    params = _require(scenario, "parameters", "parameters")
    p, q, r = (_parse_exponent(v) for v in _require(params, "triple", "parameters.triple"))
    deltas = _require(params, "delta_list", "parameters.delta_list")
    h_rule = _h_rule(params)

    def one(pair):
        d1, d2 = pair
        return reach_ball(model, (0.0,) * model.dim_z, d1, d2, h_rule(d1, d2))

    balls = _pool_map(one, [tuple(d) for d in deltas], threads)
    records = necessity_union(model, balls, p, q, r, n_translates=params.get("n_translates"))
    failures = [
        f"certificates failed at n={rec.n}" for rec in records
        if not (rec.disjoint and rec.proj1_subadditive)
    ]
    growth = []
    for i in range(len(records) - 2):
        growth.append(records[i + 2].ratio / records[i].ratio)
    if params.get("expect_growth", False):
        failures.extend(
            f"growth {g:.3g} < 2 from n={i} to n={i + 2}" for i, g in enumerate(growth) if g < 2.0
        )
    passed = not failures
    _write_csv(out_dir, "necessity.csv",
               ["n", "delta1", "delta2", "n_translates", "ratio", "disjoint"],
               [[rec.n, rec.delta1, rec.delta2, rec.n_translates, rec.ratio, int(rec.disjoint)] for rec in records])
    report = {
        "command": "necessity",
        "parameters": _sanitize(params),
        "records": [vars(rec) for rec in records],
        "growth_n_plus_2": growth,
        "failures": failures,
        "passed": bool(passed),
    }
    _write_report(out_dir, "necessity_report.json", report)
    return report


def run_decompose(scenario: dict, out_dir: Path, seed, threads: int) -> dict:
    model = _resolve_model(scenario)
    params = _require(scenario, "parameters", "parameters")
    h = _require(params, "h", "parameters.h")
    beta = _require(params, "beta", "parameters.beta")
    F = _parse_set(_require(params, "F", "parameters.F"), h, model.d)
    eta = params.get("eta", 0.125)
    c_eta = params.get("c_eta", 0.25)
    C = params.get("C", 4.0)
    sl = superlevel_set(model, F, beta)
    if sl.is_empty:
        report = {"command": "decompose", "parameters": _sanitize(params), "empty": True, "passed": True}
        _write_report(out_dir, "decompose_report.json", report)
        return report
    fibs = to_pi_fibers(sl)
    strat = stratify(fibs, eta=eta, c_eta=c_eta)
    part = partition(model, fibs, strat, F, C=C)
    wb_ok, wb_worst = widthbound_check(fibs, strat)
    strata_rows = [[s.m, s.k, len(s.indices), s.pairing, int(s.selected)] for s in strat.strata]
    _write_csv(out_dir, "strata.csv", ["m", "k", "count", "pairing", "selected"], strata_rows)
    part_rows = [
        [n, part.e_counts[n], part.f_counts[n], part.omega_measure[n], part.alpha1[n], part.alpha2[n]]
        for n in part.n_values
    ]
    _write_csv(out_dir, "partition.csv", ["n", "E_n_cells", "F_n_cells", "omega_n", "alpha_n1", "alpha_n2"], part_rows)
    failures = [
        f"stratify verdict {k}" for k, v in strat.verdicts.items()
        if isinstance(v, (bool, np.bool_)) and not v
    ]
    failures += [
        f"partition verdict {k}" for k, v in part.verdicts.items()
        if isinstance(v, (bool, np.bool_)) and not v
    ]
    if not wb_ok:
        failures.append(f"width bound exceeded (worst {wb_worst:.3g})")
    passed = not failures
    report = {
        "command": "decompose",
        "parameters": _sanitize(params),
        "resolved": {"h": h, "beta": beta, "eta": eta, "c_eta": c_eta, "C": C},
        "superlevel_cells": sl.E.n_cells,
        "strata": strata_rows,
        "stratify_verdicts": _sanitize(strat.verdicts),
        "partition_verdicts": _sanitize(part.verdicts),
        "widthbound_worst": wb_worst,
        "failures": failures,
        "passed": bool(passed),
    }
    _write_report(out_dir, "decompose_report.json", report)
    return report


_RUNNERS = {
    "ball": run_ball,
    "lemma-check": run_lemma_check,
    "region": run_region,
    "classify": run_classify,
    "test-inequality": run_test_inequality,
    "necessity": run_necessity,
    "decompose": run_decompose,
}


def run_scenario(command: str, scenario: dict, out_dir: Path, seed=None, threads: int = 1) -> dict:
    if seed is None:
        seed = scenario.get("seed")
    kind = scenario.get("kind", command)
    if kind != command:
        raise click.UsageError(f"scenario kind '{kind}' does not match command '{command}'")
    return _RUNNERS[command](scenario, out_dir, seed, threads)


# --------------------------------------------------------------------------
# Click wiring
# --------------------------------------------------------------------------

def _common_options(fn):
    fn = click.option("--scenario", "scenario_path", required=True, type=str, help="Scenario JSON file.")(fn)
    fn = click.option("--out", "out_dir", default=None, type=str, help="Output directory.")(fn)
    fn = click.option("--seed", default=None, type=int, help="Seed override for stochastic runs.")(fn)
    fn = click.option("--threads", default=1, type=int, show_default=True, help="Worker threads.")(fn)
    return fn


def _invoke(command: str, scenario_path: str, out_dir, seed, threads):
    scenario = _load_scenario(scenario_path)
    out = Path(out_dir) if out_dir else Path(scenario.get("out", f"ccradon-out/{command}"))
    try:
        report = run_scenario(command, scenario, out, seed=seed, threads=threads)
    except ResolutionError as exc:
        click.echo(f"resolution error: {exc}", err=True)
        sys.exit(EXIT_RESOLUTION)
    except OrderingError as exc:
        raise click.UsageError(str(exc))
    except CCRadonError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ASSERTION)
    if not report.get("passed", True):
        names = "; ".join(report.get("failures", [])) or "see report"
        click.echo(f"assertion failure: {names}", err=True)
        sys.exit(EXIT_ASSERTION)
    click.echo(f"ok: report written to {out}")


@click.group()
@click.version_option(version=__version__)
def main():
    """Numerical laboratory for two-parameter balls and curve transforms."""


@main.group()
def model():
    """Model catalog."""


@model.command("list")
def model_list():
    for name in sorted(builtin_models()):
        click.echo(name)


@model.command("show")
@click.argument("name")
def model_show(name):
    try:
        m = load_model(name)
    except CCRadonError as exc:
        raise click.UsageError(str(exc))
    click.echo(json.dumps(m.to_json_dict(), sort_keys=True, indent=2))


for _name in _RUNNERS:
    def _make(cmd):
        @_common_options
        def _cmd(scenario_path, out_dir, seed, threads):
            _invoke(cmd, scenario_path, out_dir, seed, threads)

        _cmd.__name__ = f"cmd_{cmd.replace('-', '_')}"
        return _cmd

    main.command(name=_name)(_make(_name))


if __name__ == "__main__":
    main()
