"""Command-line front end: sweeps, evolutions, and figure-reproduction presets.

Every file-producing command writes a JSON manifest next to its outputs with
the fully resolved parameters (including every default the run filled in),
the package version, and a sha256 per emitted file. Analytic one-shot
commands print a JSON result to stdout and only touch the filesystem when
--outdir is passed.

Angle-valued flags accept arithmetic expressions in pi ("pi/2-0.1") so the
coupling angles need not be rounded to decimals. Sweep ranges are written
MIN:MAX:STEPS (STEPS intervals, STEPS+1 samples).
"""

from __future__ import annotations

import argparse
import ast
import hashlib
import json
import math
import operator
import os
import sys
import warnings
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .dynamics import (evolve, initial_excitation, periodicity_classify,
                       revival_amplitude)
from .errors import InsufficientDataError, NumericalGuardError
from .models import ModelSpec
from .spectrum import (SweepCurve, classify_transition, sweep_delta,
                       theta_exact, theta_wkb, ws_ladder_eigenvalues)
from .walk import (QWParams, qw_band_collapse_check, qw_continuum_check,
                   qw_continuum_params, qw_evolve, qw_quasi_energy,
                   qw_recurrence_classify, qw_sweep_delta)

_BIN_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY_OPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _eval_expr(node) -> float:
    if isinstance(node, ast.Expression):
        return _eval_expr(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _BIN_OPS:
        return _BIN_OPS[type(node.op)](_eval_expr(node.left),
                                       _eval_expr(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY_OPS:
        return _UNARY_OPS[type(node.op)](_eval_expr(node.operand))
    raise ValueError("only numbers, pi, + - * / ** and parentheses allowed")


def parse_number(text: str) -> float:
    """Float from a plain literal or a pi-expression like 'pi/2-0.1'."""
    try:
        value = _eval_expr(ast.parse(str(text).strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
        raise argparse.ArgumentTypeError(
            f"could not parse number {text!r}: {exc}") from None
    if not np.isfinite(value):
        raise argparse.ArgumentTypeError(f"{text!r} is not finite")
    return float(value)


def parse_range(text: str) -> Tuple[float, float, int]:
    """MIN:MAX:STEPS sweep range (STEPS intervals)."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"range must be MIN:MAX:STEPS, got {text!r}")
    lo, hi = parse_number(parts[0]), parse_number(parts[1])
    try:
        steps = int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"STEPS must be an integer, got {parts[2]!r}") from None
    if steps < 1:
        raise argparse.ArgumentTypeError("STEPS must be >= 1")
    return lo, hi, steps


def _cnum(z: complex) -> Dict[str, float]:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{float(x):.17g}"


def _write_csv(path: str, header: Sequence[str],
               rows) -> Dict[str, str]:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell if isinstance(cell, str) else _fmt(cell)
                              for cell in row) + "\n")
    return _output_entry(path)


def _write_json(path: str, payload) -> Dict[str, str]:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return _output_entry(path)


def _output_entry(path: str) -> Dict[str, str]:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return {"path": os.path.basename(path), "sha256": digest.hexdigest()}


def _write_manifest(outdir: str, command: str, params: Dict,
                    outputs: List[Dict[str, str]]) -> str:
    manifest = {
        "command": command,
        "params": params,
        "version": __version__,
        "outputs": outputs,
    }
    path = os.path.join(outdir, f"{command.replace('-', '_')}_manifest.json")
    _write_json(path, manifest)
    return path


def _resolve_threads(value: Optional[int]) -> int:
    if value is not None:
        if value < 1:
            raise ValueError(f"--threads must be >= 1, got {value}")
        return value
    env = os.environ.get("BZL_THREADS", "").strip()
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"BZL_THREADS={env!r} is not an integer") from None
        if value < 1:
            raise ValueError(f"BZL_THREADS must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


def _ensure_outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _model_from_args(ns) -> ModelSpec:
    return ModelSpec(ns.model, t1=ns.t1, t2=ns.t2, delta=ns.delta)


def _qw_params_from_args(ns) -> QWParams:
    return QWParams(beta1=ns.beta1, beta2=ns.beta2, delta=ns.delta, M=ns.m)


def _emit(result: Dict, ns, command: str, params: Dict) -> None:
    print(json.dumps(result, indent=2, sort_keys=True))
    if getattr(ns, "outdir", None):
        outdir = _ensure_outdir(ns.outdir)
        name = command.replace("-", "_")
        out = _write_json(os.path.join(outdir, f"{name}.json"), result)
        _write_manifest(outdir, command, params, [out])


# ---------------------------------------------------------------- commands

def _cmd_spectrum(ns) -> int:
    model = _model_from_args(ns)
    res = theta_exact(model, ns.force, ns.n_k)
    params = {"model": model.kind.value, "t1": model.t1, "t2": model.t2,
              "delta": model.delta, "force": ns.force, "n_k": res.n_k}
    result = {"theta": _cnum(res.theta), "phi": _cnum(res.phi),
              "n_k": res.n_k, "bloch_period": res.bloch_period,
              "beat_period": res.beat_period}
    _emit(result, ns, "spectrum", params)
    return 0


def _cmd_wkb(ns) -> int:
    model = _model_from_args(ns)
    n_k = ns.n_k if ns.n_k is not None else 4096
    theta = theta_wkb(model, n_k)
    params = {"model": model.kind.value, "t1": model.t1, "t2": model.t2,
              "delta": model.delta, "n_k": n_k}
    _emit({"theta_wkb": _cnum(theta), "n_k": n_k}, ns, "wkb", params)
    return 0


def _cmd_ws_diag(ns) -> int:
    model = _model_from_args(ns)
    eigvals, interior = ws_ladder_eigenvalues(model, ns.force, ns.cells)
    outdir = _ensure_outdir(ns.outdir)
    rows = [(e.real, e.imag, "1" if flag else "0")
            for e, flag in zip(eigvals, interior)]
    out = _write_csv(os.path.join(outdir, "ws_diag.csv"),
                     ["re_energy", "im_energy", "interior"], rows)
    params = {"model": model.kind.value, "t1": model.t1, "t2": model.t2,
              "delta": model.delta, "force": ns.force, "cells": ns.cells}
    _write_manifest(outdir, "ws-diag", params, [out])
    print(json.dumps({"n_eigenvalues": len(eigvals),
                      "n_interior": int(np.sum(interior))}))
    return 0


def _sweep_rows(curve: SweepCurve) -> List[Tuple]:
    rows = []
    wkb = curve.thetas_wkb
    for j, d in enumerate(curve.deltas):
        th = curve.thetas[j]
        if wkb is None:
            rows.append((d, th.real, th.imag, "", ""))
        else:
            rows.append((d, th.real, th.imag, wkb[j].real, wkb[j].imag))
    return rows


def _cmd_sweep(ns) -> int:
    lo, hi, steps = ns.delta
    model = ModelSpec(ns.model, t1=ns.t1, t2=ns.t2, delta=lo)
    threads = _resolve_threads(ns.threads)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        curve = sweep_delta(model, lo, hi, steps, ns.force, n_k=ns.n_k,
                            include_wkb=not ns.no_wkb,
                            eps_floor=ns.eps_floor, threads=threads)
    outdir = _ensure_outdir(ns.outdir)
    out = _write_csv(os.path.join(outdir, "sweep.csv"),
                     ["delta", "re_theta", "im_theta",
                      "re_theta_wkb", "im_theta_wkb"], _sweep_rows(curve))
    params = {"model": ns.model, "t1": ns.t1, "t2": ns.t2,
              "delta_range": {"min": lo, "max": hi, "steps": steps},
              "force": ns.force,
              "n_k": ns.n_k if ns.n_k is not None else "auto",
              "include_wkb": not ns.no_wkb, "eps_floor": ns.eps_floor,
              "threads": threads,
              "classification": curve.classification.value,
              "delta_star": curve.delta_star}
    _write_manifest(outdir, "sweep", params, [out])
    print(json.dumps({"classification": curve.classification.value,
                      "delta_star": curve.delta_star}))
    return 0


def _cmd_evolve(ns) -> int:
    model = _model_from_args(ns)
    init = initial_excitation(model, ns.force, ns.cells)
    if ns.t_end is not None:
        t_end = ns.t_end
    elif ns.force > 0:
        t_end = ns.periods * 2 * np.pi / ns.force
    else:
        raise ValueError("--t-end is required when --force is 0")
    traj = evolve(model, ns.force, init, t_end, dt=ns.dt,
                  sample_every=ns.sample_every)
    site = traj.revival_site + ns.revival_offset
    series = revival_amplitude(traj, site)

    classification = None
    mismatch = None
    if ns.force > 0:
        try:
            res = periodicity_classify(series, traj.dt * traj.sample_every,
                                       2 * np.pi / ns.force)
            classification, mismatch = res.kind.value, res.mismatch
        except InsufficientDataError:
            pass

    outdir = _ensure_outdir(ns.outdir)
    rows = []
    for j, t in enumerate(traj.times):
        for i in range(traj.n_cells):
            n_rel = i - traj.revival_site
            rows.append((t, str(n_rel), "a", traj.a_abs[j, i]))
            rows.append((t, str(n_rel), "b", traj.b_abs[j, i]))
    out_csv = _write_csv(
        os.path.join(outdir, "evolve_trajectory.csv"),
        ["t", "n", "sublattice", "abs_normalized_amplitude"], rows)
    summary = {"times": [float(t) for t in traj.times],
               "revival": [float(x) for x in series],
               "log_amp": [float(x) for x in traj.log_amp],
               "classification": classification,
               "mismatch": mismatch}
    out_json = _write_json(os.path.join(outdir, "evolve_summary.json"), summary)
    params = {"model": model.kind.value, "t1": model.t1, "t2": model.t2,
              "delta": model.delta, "force": ns.force,
              "cells": init.n_cells, "t_end": t_end, "dt": traj.dt,
              "sample_every": traj.sample_every,
              "revival_offset": ns.revival_offset,
              "cell_origin": int(traj.revival_site + traj.n0)}
    _write_manifest(outdir, "evolve", params, [out_csv, out_json])
    print(json.dumps({"classification": classification,
                      "mismatch": mismatch, "dt": traj.dt,
                      "cells": init.n_cells}))
    return 0


def _cmd_classify(ns) -> int:
    deltas: List[float] = []
    thetas: List[complex] = []
    with open(ns.csv, newline="") as fh:
        header = fh.readline().strip().split(",")
        try:
            i_d = header.index("delta")
            i_im = header.index("im_theta")
        except ValueError:
            raise ValueError(
                f"{ns.csv} lacks the delta/im_theta columns") from None
        i_re = header.index("re_theta") if "re_theta" in header else None
        for line in fh:
            cells = line.rstrip("\n").split(",")
            if not cells or cells == [""]:
                continue
            deltas.append(float(cells[i_d]))
            re = float(cells[i_re]) if i_re is not None and cells[i_re] else 0.0
            thetas.append(complex(re, float(cells[i_im])))
    curve = SweepCurve(deltas=np.asarray(deltas),
                       thetas=np.asarray(thetas, dtype=complex),
                       force=float("nan"), eps_floor=ns.eps_floor)
    result = classify_transition(curve)
    print(json.dumps({"classification": result.kind.value,
                      "delta_star": result.delta_star,
                      "rise_threshold": result.rise_threshold}))
    return 0


def _cmd_qw_spectrum(ns) -> int:
    params_obj = _qw_params_from_args(ns)
    theta = qw_quasi_energy(ns.q, params_obj)
    spread = qw_band_collapse_check(params_obj, ns.n_q)
    params = {"m": ns.m, "beta1": ns.beta1, "beta2": ns.beta2,
              "delta": ns.delta, "q": ns.q, "n_q": ns.n_q}
    _emit({"theta": _cnum(theta), "band_spread": spread},
          ns, "qw-spectrum", params)
    return 0


def _cmd_qw_sweep(ns) -> int:
    lo, hi, steps = ns.delta
    params_obj = QWParams(beta1=ns.beta1, beta2=ns.beta2, delta=lo, M=ns.m)
    curve = qw_sweep_delta(params_obj, lo, hi, steps, eps_floor=ns.eps_floor)
    outdir = _ensure_outdir(ns.outdir)
    out = _write_csv(os.path.join(outdir, "qw_sweep.csv"),
                     ["delta", "re_theta", "im_theta",
                      "re_theta_wkb", "im_theta_wkb"], _sweep_rows(curve))
    params = {"m": ns.m, "beta1": ns.beta1, "beta2": ns.beta2,
              "delta_range": {"min": lo, "max": hi, "steps": steps},
              "eps_floor": ns.eps_floor,
              "classification": curve.classification.value,
              "delta_star": curve.delta_star}
    _write_manifest(outdir, "qw-sweep", params, [out])
    print(json.dumps({"classification": curve.classification.value,
                      "delta_star": curve.delta_star}))
    return 0


def _qw_evolve_outputs(params_obj: QWParams, m_end: int, map_stride: int,
                       outdir: str, prefix: str) -> Tuple[Dict, List[Dict]]:
    traj = qw_evolve(params_obj, m_end)
    rows = []
    for j in range(0, m_end + 1, map_stride):
        for i in range(traj.n_sites):
            rows.append((str(int(traj.steps[j])), str(i + traj.n_min),
                         traj.u_abs[j, i], traj.v_abs[j, i]))
    out_map = _write_csv(os.path.join(outdir, f"{prefix}_trajectory.csv"),
                         ["m", "n", "u_abs", "v_abs"], rows)
    rec_rows = [(str(int(m)), traj.recurrence[j], traj.log_amp[j])
                for j, m in enumerate(traj.steps)]
    out_rec = _write_csv(os.path.join(outdir, f"{prefix}_recurrence.csv"),
                         ["m", "a_m", "log_amp"], rec_rows)
    classification = None
    mismatch = None
    try:
        res = qw_recurrence_classify(traj.recurrence, params_obj.M)
        classification, mismatch = res.kind.value, res.mismatch
    except InsufficientDataError:
        pass
    info = {"m": params_obj.M, "beta1": params_obj.beta1,
            "beta2": params_obj.beta2, "delta": params_obj.delta,
            "steps": m_end, "map_stride": map_stride,
            "classification": classification, "mismatch": mismatch}
    return info, [out_map, out_rec]


def _cmd_qw_evolve(ns) -> int:
    params_obj = _qw_params_from_args(ns)
    stride = ns.map_stride if ns.map_stride is not None \
        else max(1, ns.steps // 100)
    outdir = _ensure_outdir(ns.outdir)
    info, outputs = _qw_evolve_outputs(params_obj, ns.steps, stride,
                                       outdir, "qw_evolve")
    _write_manifest(outdir, "qw-evolve", info, outputs)
    print(json.dumps({"classification": info["classification"],
                      "mismatch": info["mismatch"]}))
    return 0


def _cmd_qw_flatness(ns) -> int:
    params_obj = _qw_params_from_args(ns)
    spread = qw_band_collapse_check(params_obj, ns.n_q)
    params = {"m": ns.m, "beta1": ns.beta1, "beta2": ns.beta2,
              "delta": ns.delta, "n_q": ns.n_q}
    _emit({"band_spread": spread}, ns, "qw-flatness", params)
    return 0


def _cmd_continuum_check(ns) -> int:
    theta_qw, theta_rm = qw_continuum_check(ns.t1, ns.t2, ns.delta, ns.force)
    walk = qw_continuum_params(ns.t1, ns.t2, ns.delta, ns.force)
    params = {"t1": ns.t1, "t2": ns.t2, "delta": ns.delta,
              "force": ns.force, "walk_m": walk.M,
              "walk_beta1": walk.beta1, "walk_beta2": walk.beta2}
    _emit({"theta_walk": _cnum(theta_qw), "theta_rice_mele": _cnum(theta_rm),
           "walk_m": walk.M}, ns, "continuum-check", params)
    return 0


# ------------------------------------------------------------------ repro

_BETA1_DEFAULT = math.pi / 2 - 0.1
_BETA2_DEFAULT = math.pi / 2 - 0.15


def _repro_dual_sweep(outdir: str, threads: int, prefix: str,
                      kind: str, t1: float) -> Tuple[Dict, List[Dict]]:
    params: Dict = {"model": kind, "t1": t1, "t2": 1.0,
                    "delta_range": {"min": 0.0, "max": 1.2, "steps": 120},
                    "n_k": "auto", "panels": {}}
    outputs = []
    for force in (0.2, 0.02):
        model = ModelSpec(kind, t1=t1, t2=1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            curve = sweep_delta(model, 0.0, 1.2, 120, force, threads=threads)
        name = f"{prefix}_F{force:g}.csv"
        outputs.append(_write_csv(
            os.path.join(outdir, name),
            ["delta", "re_theta", "im_theta", "re_theta_wkb", "im_theta_wkb"],
            _sweep_rows(curve)))
        params["panels"][f"F={force:g}"] = {
            "force": force,
            "classification": curve.classification.value,
            "delta_star": curve.delta_star,
        }
    return params, outputs


def _repro_dual_evolve(outdir: str, prefix_pair: Tuple[str, str],
                       kind: str, t1: float) -> Tuple[Dict, List[Dict]]:
    force = 0.2
    t_end = 10 * 2 * np.pi / force
    params: Dict = {"model": kind, "t1": t1, "t2": 1.0, "force": force,
                    "t_end": t_end, "panels": {}}
    outputs = []
    for prefix, delta in zip(prefix_pair, (0.4, 0.7)):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = ModelSpec(kind, t1=t1, t2=1.0, delta=delta)
            init = initial_excitation(model, force)
            traj = evolve(model, force, init, t_end)
        series = revival_amplitude(traj)
        res = periodicity_classify(series, traj.dt * traj.sample_every,
                                   2 * np.pi / force)
        rows = []
        for j, t in enumerate(traj.times):
            for i in range(traj.n_cells):
                n_rel = i - traj.revival_site
                rows.append((t, str(n_rel), "a", traj.a_abs[j, i]))
                rows.append((t, str(n_rel), "b", traj.b_abs[j, i]))
        outputs.append(_write_csv(
            os.path.join(outdir, f"{prefix}_trajectory.csv"),
            ["t", "n", "sublattice", "abs_normalized_amplitude"], rows))
        outputs.append(_write_json(
            os.path.join(outdir, f"{prefix}_summary.json"),
            {"times": [float(t) for t in traj.times],
             "revival": [float(x) for x in series],
             "log_amp": [float(x) for x in traj.log_amp],
             "classification": res.kind.value,
             "mismatch": res.mismatch}))
        params["panels"][prefix] = {"delta": delta, "cells": traj.n_cells,
                                    "dt": traj.dt,
                                    "sample_every": traj.sample_every,
                                    "classification": res.kind.value}
    return params, outputs


def _repro_fig3a(outdir: str, threads: int) -> Tuple[Dict, List[Dict]]:
    params: Dict = {"beta1": _BETA1_DEFAULT, "beta2": _BETA2_DEFAULT,
                    "delta_range": {"min": 0.0, "max": 0.1, "steps": 100},
                    "panels": {}}
    outputs = []
    for m in (61, 102):
        curve = qw_sweep_delta(
            QWParams(beta1=_BETA1_DEFAULT, beta2=_BETA2_DEFAULT, delta=0.0, M=m),
            0.0, 0.1, 100)
        name = f"fig3a_M{m}.csv"
        outputs.append(_write_csv(
            os.path.join(outdir, name),
            ["delta", "re_theta", "im_theta", "re_theta_wkb", "im_theta_wkb"],
            _sweep_rows(curve)))
        params["panels"][f"M={m}"] = {
            "m": m, "classification": curve.classification.value,
            "delta_star": curve.delta_star}
    return params, outputs


def _repro_fig3bc(outdir: str) -> Tuple[Dict, List[Dict]]:
    m = 61
    m_end = 10 * m
    params: Dict = {"m": m, "beta1": _BETA1_DEFAULT, "beta2": _BETA2_DEFAULT,
                    "steps": m_end, "panels": {}}
    outputs = []
    for prefix, delta in (("fig3b", 0.036), ("fig3c", 0.06)):
        pp = QWParams(beta1=_BETA1_DEFAULT, beta2=_BETA2_DEFAULT, delta=delta, M=m)
        info, outs = _qw_evolve_outputs(pp, m_end, max(1, m_end // 100),
                                        outdir, prefix)
        outputs.extend(outs)
        params["panels"][prefix] = info
    return params, outputs


def _cmd_repro(ns) -> int:
    outdir = _ensure_outdir(ns.outdir)
    threads = _resolve_threads(ns.threads)
    preset = ns.preset
    if preset == "fig1b":
        params, outputs = _repro_dual_sweep(outdir, threads, "fig1b",
                                            "model1", 0.2)
    elif preset == "fig2b":
        params, outputs = _repro_dual_sweep(outdir, threads, "fig2b",
                                            "rice-mele", 0.4)
    elif preset == "fig1cd":
        params, outputs = _repro_dual_evolve(outdir, ("fig1c", "fig1d"),
                                             "model1", 0.2)
    elif preset == "fig2cd":
        params, outputs = _repro_dual_evolve(outdir, ("fig2c", "fig2d"),
                                             "rice-mele", 0.4)
    elif preset == "fig3a":
        params, outputs = _repro_fig3a(outdir, threads)
    elif preset == "fig3bc":
        params, outputs = _repro_fig3bc(outdir)
    else:  # argparse choices should prevent this
        raise ValueError(f"unknown preset {preset!r}")
    params["preset"] = preset
    params["threads"] = threads
    _write_manifest(outdir, f"repro-{preset}", params, outputs)
    print(json.dumps({"preset": preset,
                      "outputs": [o["path"] for o in outputs]}))
    return 0


# ------------------------------------------------------------------ parser

def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["model1", "rice-mele"], default=None)
    p.add_argument("--t1", type=parse_number, default=None)
    p.add_argument("--t2", type=parse_number, default=None)


def _add_qw_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, default=None, help="force period M (F = 2*pi/M)")
    p.add_argument("--beta1", type=parse_number, default=None)
    p.add_argument("--beta2", type=parse_number, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bzl",
        description="Wannier-Stark ladders, Bloch-Zener dynamics, and driven "
                    "quantum walks in non-Hermitian two-band lattices.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help="JSON file with flag values (flags override it)")
    common.add_argument("--outdir", default=None,
                        help="directory for output files")

    p = sub.add_parser("spectrum", parents=[common],
                       help="ladder offset theta for one parameter point")
    _add_model_flags(p)
    p.add_argument("--delta", type=parse_number, default=None)
    p.add_argument("--force", type=parse_number, default=None)
    p.add_argument("--n-k", type=int, default=None)
    p.set_defaults(handler=_cmd_spectrum)

    p = sub.add_parser("wkb", parents=[common],
                       help="WKB ladder offset (force-free band integral)")
    _add_model_flags(p)
    p.add_argument("--delta", type=parse_number, default=None)
    p.add_argument("--n-k", type=int, default=None)
    p.set_defaults(handler=_cmd_wkb)

    p = sub.add_parser("ws-diag", parents=[common],
                       help="dense real-space ladder eigenvalues")
    _add_model_flags(p)
    p.add_argument("--delta", type=parse_number, default=None)
    p.add_argument("--force", type=parse_number, default=None)
    p.add_argument("--cells", type=int, default=None)
    p.set_defaults(handler=_cmd_ws_diag)

    p = sub.add_parser("sweep", parents=[common],
                       help="theta over a gain/loss range, with classification")
    _add_model_flags(p)
    p.add_argument("--delta", type=parse_range, default=None,
                   metavar="MIN:MAX:STEPS")
    p.add_argument("--force", type=parse_number, default=None)
    p.add_argument("--n-k", type=int, default=None)
    p.add_argument("--no-wkb", action="store_true")
    p.add_argument("--eps-floor", type=parse_number, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("evolve", parents=[common],
                       help="real-space wavepacket evolution")
    _add_model_flags(p)
    p.add_argument("--delta", type=parse_number, default=None)
    p.add_argument("--force", type=parse_number, default=None)
    p.add_argument("--cells", type=int, default=None,
                   help="lattice cells (default: auto-sized)")
    p.add_argument("--periods", type=parse_number, default=None,
                   help="run length in Bloch periods (force > 0)")
    p.add_argument("--t-end", type=parse_number, default=None,
                   help="run length in time units (overrides --periods)")
    p.add_argument("--dt", type=parse_number, default=None)
    p.add_argument("--sample-every", type=int, default=None)
    p.add_argument("--revival-offset", type=int, default=None,
                   help="revival site as a cell offset from the excited cell")
    p.set_defaults(handler=_cmd_evolve)

    p = sub.add_parser("classify", parents=[common],
                       help="re-run transition classification on a sweep CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--eps-floor", type=parse_number, default=None)
    p.set_defaults(handler=_cmd_classify)

    p = sub.add_parser("qw-spectrum", parents=[common],
                       help="walk quasi-energy theta and band-flatness spread")
    _add_qw_flags(p)
    p.add_argument("--delta", type=parse_number, default=None)
    p.add_argument("--q", type=parse_number, default=None)
    p.add_argument("--n-q", type=int, default=None)
    p.set_defaults(handler=_cmd_qw_spectrum)

    p = sub.add_parser("qw-sweep", parents=[common],
                       help="walk theta over a gain/loss range")
    _add_qw_flags(p)
    p.add_argument("--delta", type=parse_range, default=None,
                   metavar="MIN:MAX:STEPS")
    p.add_argument("--eps-floor", type=parse_number, default=None)
    p.set_defaults(handler=_cmd_qw_sweep)

    p = sub.add_parser("qw-evolve", parents=[common],
                       help="pulse dynamics of the walk")
    _add_qw_flags(p)
    p.add_argument("--delta", type=parse_number, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--map-stride", type=int, default=None,
                   help="record every k-th step in the map CSV")
    p.set_defaults(handler=_cmd_qw_evolve)

    p = sub.add_parser("qw-flatness", parents=[common],
                       help="band-collapse spread of theta(q)")
    _add_qw_flags(p)
    p.add_argument("--delta", type=parse_number, default=None)
    p.add_argument("--n-q", type=int, default=None)
    p.set_defaults(handler=_cmd_qw_flatness)

    p = sub.add_parser("continuum-check", parents=[common],
                       help="walk vs Rice-Mele theta at matched parameters")
    p.add_argument("--t1", type=parse_number, default=None)
    p.add_argument("--t2", type=parse_number, default=None)
    p.add_argument("--delta", type=parse_number, default=None)
    p.add_argument("--force", type=parse_number, default=None,
                   help="continuum force (walk force is half)")
    p.set_defaults(handler=_cmd_continuum_check)

    p = sub.add_parser("repro", parents=[common],
                       help="bundled parameter presets, one per figure panel set")
    p.add_argument("preset", choices=["fig1b", "fig1cd", "fig2b", "fig2cd",
                                      "fig3a", "fig3bc"])
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(handler=_cmd_repro)

    return parser


_DEFAULTS = {
    "spectrum": {"model": "model1", "t1": 0.2, "t2": 1.0, "delta": 0.0,
                 "force": 0.2},
    "wkb": {"model": "model1", "t1": 0.2, "t2": 1.0, "delta": 0.0},
    "ws-diag": {"model": "model1", "t1": 0.2, "t2": 1.0, "delta": 0.0,
                "force": 0.2, "cells": 200, "outdir": "."},
    "sweep": {"model": "model1", "t1": 0.2, "t2": 1.0,
              "delta": (0.0, 1.2, 120), "force": 0.2, "eps_floor": 1e-6,
              "outdir": "."},
    "evolve": {"model": "model1", "t1": 0.2, "t2": 1.0, "delta": 0.4,
               "force": 0.2, "periods": 10.0, "revival_offset": 0,
               "outdir": "."},
    "classify": {"eps_floor": 1e-6},
    "qw-spectrum": {"m": 61, "beta1": _BETA1_DEFAULT, "beta2": _BETA2_DEFAULT,
                    "delta": 0.0, "q": 0.0, "n_q": 64},
    "qw-sweep": {"m": 61, "beta1": _BETA1_DEFAULT, "beta2": _BETA2_DEFAULT,
                 "delta": (0.0, 0.1, 100), "eps_floor": 1e-6, "outdir": "."},
    "qw-evolve": {"m": 61, "beta1": _BETA1_DEFAULT, "beta2": _BETA2_DEFAULT,
                  "delta": 0.036, "steps": 610, "outdir": "."},
    "qw-flatness": {"m": 61, "beta1": _BETA1_DEFAULT, "beta2": _BETA2_DEFAULT,
                    "delta": 0.0, "n_q": 64},
    "continuum-check": {"t1": 0.05, "t2": 0.1, "delta": 0.0, "force": 0.02},
    "repro": {"outdir": "."},
}

_STR_ATTRS = {"model", "csv", "outdir", "preset", "config"}
_INT_ATTRS = {"m", "steps", "cells", "n_k", "n_q", "threads",
              "sample_every", "map_stride", "revival_offset"}
_RANGE_COMMANDS = {"sweep", "qw-sweep"}


def _coerce_config_value(ns, attr: str, value):
    if attr in _STR_ATTRS:
        if not isinstance(value, str):
            raise ValueError(f"config key {attr!r} must be a string")
        return value
    if attr == "delta" and ns.command in _RANGE_COMMANDS:
        if isinstance(value, str):
            return parse_range(value)
        if isinstance(value, (list, tuple)) and len(value) == 3:
            return (float(value[0]), float(value[1]), int(value[2]))
        raise ValueError("config key 'delta' must be MIN:MAX:STEPS here")
    if attr == "no_wkb":
        return bool(value)
    if isinstance(value, str):
        value = parse_number(value)
    if attr in _INT_ATTRS:
        return int(value)
    return float(value)


def _apply_config_and_defaults(ns: argparse.Namespace) -> None:
    """Fill None-valued flags from --config, then from command defaults."""
    if getattr(ns, "config", None):
        with open(ns.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError(f"{ns.config} must hold a JSON object")
        for key, value in loaded.items():
            attr = key.replace("-", "_")
            if not hasattr(ns, attr) or attr in ("handler", "command"):
                raise ValueError(
                    f"unknown config key {key!r} for {ns.command}")
            current = getattr(ns, attr)
            if current is None or current is False and attr == "no_wkb":
                setattr(ns, attr, _coerce_config_value(ns, attr, value))
    for key, value in _DEFAULTS.get(ns.command, {}).items():
        if getattr(ns, key, None) is None:
            setattr(ns, key, value)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        _apply_config_and_defaults(ns)
        return ns.handler(ns)
    except NumericalGuardError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, json.JSONDecodeError,
            argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
