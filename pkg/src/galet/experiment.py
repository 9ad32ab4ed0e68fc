"""Run configured experiments, write traces, summarise trace directories.

Trace CSV layout: ``#``-prefixed header lines carrying run metadata (one
``key=value`` per line), then a column header and one row per outer
iteration plus a terminal row for the final iterate. Missing quantities are
empty fields. JSON traces carry the same metadata, columns and rows.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import metrics
from .errors import DivergenceError, InvalidInputError
from .rng import RNG_NAME
from .solver import TraceRecord, galet_run

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("k", "r_x", "r_w", "r_y", "dx_norm_sq", "val_kkt_score",
                 "optimality_gap", "b_k", "wall_time_ms", "flags")
TRACE_FORMAT = "galet-trace/1"
SUMMARY_SCHEMA_VERSION = 1
CONVERGED_TOL = 1e-6

EXIT_OK, EXIT_INVALID, EXIT_ALL_DIVERGED, EXIT_PARTIAL = 0, 1, 2, 3


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _vec_str(v):
    return " ".join(repr(float(a)) for a in np.atleast_1d(v))


def record_row(rec):
    return [rec.k, rec.r_x, rec.r_w, rec.r_y, rec.dx_norm_sq, rec.val_kkt_score,
            rec.optimality_gap, rec.b_k, rec.wall_time_ms,
            "r_y_approx" if rec.r_y_approx else ""]


def terminal_record(oracle, it, config):
    """Trace row for the final iterate (no update taken from it)."""
    res = metrics.residuals(oracle, it.x, it.y, it.w, approx_g_star=config.approx_g_star)
    rec = TraceRecord(k=it.k, r_x=res.r_x, r_w=res.r_w, r_y=res.r_y, r_y_approx=res.r_y_approx)
    if res.r_y is not None:
        rec.val_kkt_score = metrics.val_kkt_score(oracle, it.x, it.y, r_y=res.r_y)
    if oracle.has_optimality_gap:
        rec.optimality_gap = float(oracle.optimality_gap(it.x, it.y))
    return rec


@dataclass
class RunResult:
    index: int
    status: str  # ok | diverged
    meta: dict
    rows: list
    message: str = ""


def _run_one(job):
    cfg, index, params, solver_cfg, x0, y0 = job
    problem = cfg.build_problem()
    meta = {
        "format": TRACE_FORMAT,
        "run": index,
        "problem": cfg.problem,
        "problem_params": json.dumps(cfg.problem_params, sort_keys=True),
        "seed": cfg.seed,
        "rng": RNG_NAME,
        "solver": json.dumps(params, sort_keys=True),
        "x0": _vec_str(x0),
        "y0": _vec_str(y0),
    }
    status, message = "ok", ""
    try:
        final, trace = galet_run(problem, x0, y0, solver_cfg)
        trace = trace + [terminal_record(problem, final, solver_cfg)]
    except DivergenceError as exc:
        status, message, trace, final = "diverged", str(exc), exc.trace, exc.iterate
    meta["status"] = status
    meta["r_y_approx"] = _fmt(any(r.r_y_approx for r in trace))
    if status == "ok":
        meta["x_final"] = _vec_str(final.x)
        if cfg.lyapunov and problem.has_g_star and problem.has_dense_hessian:
            meta["lyapunov_final"] = _fmt(metrics.lyapunov_value(problem, final.x, final.y, cfg.lyapunov_c))
    if cfg.interface_checks:
        from .oracle import check_interface
        rep = check_interface(problem, [(x0, y0)])
        meta["interface"] = json.dumps({k: float(v) for k, v in asdict(rep).items()}, sort_keys=True)
    return RunResult(index, status, meta, [record_row(r) for r in trace], message)


def write_trace(path, result, fmt="csv"):
    if fmt == "json":
        doc = {"meta": result.meta, "columns": list(TRACE_COLUMNS),
               "rows": [_json_row(row) for row in result.rows]}
        Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        return
    buf = io.StringIO()
    for key, value in result.meta.items():
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for row in result.rows:
        writer.writerow([row[-1] if i == len(row) - 1 else _fmt(v) for i, v in enumerate(row)])
    Path(path).write_text(buf.getvalue())


def _json_row(row):
    out = []
    for v in row[:-1]:
        out.append(None if v is None else (int(v) if isinstance(v, (int, np.integer)) else float(v)))
    out.append(row[-1])
    return out


def read_trace(path):
    """Parse a trace file into (meta dict, list of row dicts)."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        cols = doc["columns"]
        if list(cols[:len(TRACE_COLUMNS) - 1]) != list(TRACE_COLUMNS[:-1]):
            raise ValueError("unexpected columns")
        return doc["meta"], [dict(zip(cols, r)) for r in doc["rows"]]
    meta, body = {}, []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        elif line.strip():
            body.append(line)
    if not body:
        raise ValueError("no column header")
    reader = csv.reader(body)
    cols = next(reader)
    if tuple(cols) != TRACE_COLUMNS:
        raise ValueError(f"unexpected columns {cols}")
    rows = []
    for raw in reader:
        if len(raw) != len(cols):
            raise ValueError("ragged row")
        row = {}
        for c, v in zip(cols, raw):
            if c == "flags":
                row[c] = v
            elif c == "k":
                row[c] = int(v)
            else:
                row[c] = float(v) if v != "" else None
        rows.append(row)
    return meta, rows


def _rates(rows):
    out = {}
    for key in ("r_x", "r_w", "r_y"):
        vals = [r[key] for r in rows]
        if any(v is None for v in vals):
            out[key] = "unavailable"
            continue
        try:
            fit = metrics.fit_rate(vals)
        except InvalidInputError:
            out[key] = "insufficient data"
            continue
        out[key] = {"slope": fit.slope, "intercept": fit.intercept,
                    "r_squared": fit.r_squared, "k_range": list(fit.k_range)}
    return out


def summarize(directory, converged_tol=CONVERGED_TOL):
    """Summary document for every trace file in ``directory``."""
    directory = Path(directory)
    files = sorted(p for p in directory.iterdir()
                   if p.name.startswith("run_") and p.suffix in (".csv", ".json"))
    runs, skipped = [], []
    for path in files:
        try:
            meta, rows = read_trace(path)
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            log.warning("skipping malformed trace %s: %s", path.name, exc)
            skipped.append({"file": path.name, "reason": str(exc)})
            continue
        diverged = meta.get("status") == "diverged"
        last = rows[-1] if rows else {}
        final = {k: last.get(k) for k in ("r_x", "r_w", "r_y", "optimality_gap", "val_kkt_score")}
        if last.get("optimality_gap") is not None:
            converged = last["optimality_gap"] <= converged_tol
        elif rows:
            converged = max(v for v in (last["r_x"], last["r_w"], last["r_y"]) if v is not None) <= converged_tol
        else:
            converged = False
        runs.append({
            "run": int(meta.get("run", len(runs))),
            "file": path.name,
            "problem": meta.get("problem"),
            "seed": meta.get("seed"),
            "solver": json.loads(meta["solver"]) if "solver" in meta else None,
            "x0": meta.get("x0"),
            "y0": meta.get("y0"),
            "iterations": len(rows),
            "diverged": diverged,
            "converged": (not diverged) and converged,
            "r_y_approx": meta.get("r_y_approx") == "true",
            "final": final,
            "rates": _rates(rows) if rows else {k: "insufficient data" for k in ("r_x", "r_w", "r_y")},
        })
    runs.sort(key=lambda r: r["run"])
    best = {}
    for r in runs:
        if r["diverged"] or not r["final"]:
            continue
        score = r["final"]["optimality_gap"]
        if score is None:
            score = max(v for v in (r["final"]["r_x"], r["final"]["r_w"], r["final"]["r_y"]) if v is not None)
        if r["problem"] not in best or score < best[r["problem"]][1]:
            best[r["problem"]] = (r["run"], score)
    return {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "converged_tol": converged_tol,
        "runs": runs,
        "counts": {
            "traces": len(runs),
            "converged": sum(r["converged"] for r in runs),
            "diverged": sum(r["diverged"] for r in runs),
            "skipped": len(skipped),
        },
        "converged_runs": [r["run"] for r in runs if r["converged"]],
        "diverged_runs": [r["run"] for r in runs if r["diverged"]],
        "not_converged_runs": [r["run"] for r in runs if not r["converged"] and not r["diverged"]],
        "best_run": {k: {"run": v[0], "score": v[1]} for k, v in best.items()},
        "skipped": skipped,
    }


def plan_runs(cfg):
    problem = cfg.build_problem()
    inits = cfg.initial_points(problem)
    jobs = []
    for params, solver_cfg in cfg.solver_configs():
        for x0, y0 in inits:
            jobs.append((cfg, len(jobs), params, solver_cfg, np.asarray(x0), np.asarray(y0)))
    return jobs


def run_experiment(cfg, out_dir=None, fmt=None, workers=None):
    """Execute every run of ``cfg``; returns (exit code, summary dict)."""
    out = Path(out_dir or cfg.out_dir)
    fmt = fmt or cfg.fmt
    workers = workers or cfg.workers
    out.mkdir(parents=True, exist_ok=True)
    jobs = plan_runs(cfg)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    width = max(3, len(str(len(results) - 1)))
    for res in results:
        write_trace(out / f"run_{res.index:0{width}d}.{fmt}", res, fmt)
    summary = summarize(out)
    summary["seed"] = cfg.seed
    summary["rng"] = RNG_NAME
    summary["problem"] = cfg.problem
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    n_div = sum(r.status == "diverged" for r in results)
    if results and n_div == len(results):
        return EXIT_ALL_DIVERGED, summary
    if n_div:
        return EXIT_PARTIAL, summary
    return EXIT_OK, summary


def strip_wall_time(text):
    """Trace CSV text with the wall_time_ms column blanked, for comparisons."""
    out = []
    idx = TRACE_COLUMNS.index("wall_time_ms")
    for line in text.splitlines():
        if line.startswith("#") or line.startswith("k,"):
            out.append(line)
            continue
        cells = next(csv.reader([line]))
        cells[idx] = ""
        out.append(",".join(cells))
    return "\n".join(out)
