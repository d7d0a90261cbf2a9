"""Run manifests and serialize reports (JSON with 17 significant digits, CSV series)."""
from __future__ import annotations

import dataclasses
import datetime
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .criteria import (
    SUFFICIENT_C_DETERMINATE, extended_carleman_check, integral_criterion, shohat_tamarkin_check,
    strengthen_to_determinate, verify_moment_relation,
)
from .density import poly_projection_error, series_csv, trig_projection_error
from .errors import MomentDetError
from .expr import Expression
from .manifest import Manifest
from .measures import Cone, Measure
from .moments import build_table, dominance, generalized_holder, holder_monotone, multi_indices
from .quad import CLASSIFY_TOL, DELTA as TAIL_DELTA, default_schedule, monte_carlo_options
from .series import DELTA as SERIES_DELTA
from .signedlog import SignedLog
from .weights import classify_quasianalytic

__all__ = ["Report", "run_manifest", "emit", "dumps", "to_jsonable", "DECISION_RULES"]

DECISION_RULES = {
    "series_delta": SERIES_DELTA,
    "series_fit_window": "top half of the horizon",
    "series_rule": "least-squares slope of -log(term) against log(m); beta <= 1 - delta divergent, "
                   "beta >= 1 + delta convergent, otherwise inconclusive",
    "tail_ratio_band": [1.0 - TAIL_DELTA, 1.0 + TAIL_DELTA],
    "tail_classify_tol": CLASSIFY_TOL,
    "note": "finite-horizon heuristics; the underlying conditions are statements about infinite series and integrals",
}


# ---------------------------------------------------------------------------
# serialization

def to_jsonable(obj):
    """Plain JSON-ready structure (dicts, lists, str, int, float, bool, None)."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, SignedLog):
        return {"sign": int(obj.sign), "log": float(obj.log)}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Expression):
        return obj.text
    if isinstance(obj, Cone):
        return {"generators": to_jsonable(np.asarray(obj.matrix).T)}
    if isinstance(obj, Measure):
        return {"type": type(obj).__name__, "fingerprint": obj.fingerprint()}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {"type": type(obj).__name__}
        for f in dataclasses.fields(obj):
            out[f.name] = to_jsonable(getattr(obj, f.name))
        return out
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return f"<{type(obj).__name__}>"


def _fmt_float(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    s = format(v, ".17g")
    if not any(c in s for c in ".e"):
        s += ".0"
    return s


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits; non-finite floats become strings."""
    obj = to_jsonable(obj)
    pad = " " * indent

    def enc(v, level):
        if v is None:
            return "null"
        if v is True:
            return "true"
        if v is False:
            return "false"
        if isinstance(v, int):
            return str(v)
        if isinstance(v, float):
            return _fmt_float(v)
        if isinstance(v, str):
            return json.dumps(v, ensure_ascii=False)
        inner = pad * (level + 1)
        if isinstance(v, dict):
            if not v:
                return "{}"
            items = [f"{inner}{json.dumps(k, ensure_ascii=False)}: {enc(x, level + 1)}" for k, x in v.items()]
            return "{\n" + ",\n".join(items) + "\n" + pad * level + "}"
        if not v:
            return "[]"
        if all(isinstance(x, (int, float, str, bool)) or x is None for x in v):
            return "[" + ", ".join(enc(x, level + 1) for x in v) + "]"
        return "[\n" + ",\n".join(inner + enc(x, level + 1) for x in v) + "\n" + pad * level + "]"

    return enc(obj, 0) + "\n"


# ---------------------------------------------------------------------------
# running

@dataclass
class Report:
    data: dict
    series: dict = field(default_factory=dict)   # analysis id -> CSV text

    @property
    def ok(self) -> bool:
        return all(r["status"] == "ok" for r in self.data["results"])

    def to_json(self) -> str:
        return dumps(self.data)


def _carleman_csv(verdict):
    cols, header = [], ["m"]
    for link in verdict.evidence:
        s = link.data.get("series")
        if s is None:
            continue
        header += [f"{link.name}_term", f"{link.name}_partial_sum"]
        terms = np.exp(np.minimum(np.array(s.log_terms), 700.0))
        cols.append((terms, np.array(s.partial_sums)))
    if not cols:
        return None
    M = max(len(t) for t, _ in cols)
    rows = []
    for i in range(M):
        row = [i + 1]
        for t, p in cols:
            row += [float(t[i]), float(p[i])] if i < len(t) else ["", ""]
        rows.append(row)
    return series_csv(header, rows)


def _tail_csv(verdict):
    for link in verdict.evidence:
        prof = link.data.get("profile") if link.name == "tail" else None
        if prof is not None:
            rows = []
            for k, (R, inc, err, part) in enumerate(zip(prof.radii, prof.increments, prof.errors,
                                                          prof.partial_floats())):
                rows.append([k, float(R), int(inc.sign), float(inc.log), float(err), float(part)])
            return series_csv(["k", "radius", "increment_sign", "increment_log", "rel_err", "partial"], rows)
    return None


def _run_moments(m: Manifest, a):
    p = a.params
    table = build_table(m.measure, m.basis, p["M"], p["t_grid"], p["A"], m.numerics["tol"],
                        p["closed_forms"])
    checks = {}
    if abs(m.measure.total_mass() - 1.0) < 1e-9:
        grid = [s for s in p["t_grid"] if s >= 1]
        checks["holder_monotone"] = [holder_monotone(m.measure, j, grid, m.numerics["tol"])[0]
                                     for j in range(m.dimension)]
        checks["generalized_holder"] = all(generalized_holder(m.measure, al, m.numerics["tol"])[0]
                                           for al in multi_indices(m.dimension, p["A"]))
    if m.basis is None:
        checks["dominance"] = dominance(table)[0]
    res = {"directions": table.directions, "s": table.s, "lambda": table.lam, "checks": checks}
    return res, table.to_csv()


def _run_carleman(m: Manifest, a):
    p = a.params
    v = extended_carleman_check(m.measure, m.basis, p["M"], p["mode"], m.cone, m.numerics["tol"])
    return {"verdict": v}, _carleman_csv(v)


def _run_shohat(m: Manifest, a):
    v = shohat_tamarkin_check(m.measure, a.params["M"], m.numerics["tol"])
    return {"verdict": v}, _carleman_csv(v)


def _run_weight(m: Manifest, a):
    return {"verdict": classify_quasianalytic(a.built["weight"], a.params["max_m"])}, None


def _run_criterion(m: Manifest, a):
    crit = a.built["criterion"]
    schedule = default_schedule(m.numerics["r0"], m.numerics["shells"])
    v = integral_criterion(m.measure, crit, schedule, m.numerics["tol"])
    out = {"verdict": v}
    if crit.stieltjes and a.params["strengthen"] and v.outcome == SUFFICIENT_C_DETERMINATE:
        out["strengthened"] = strengthen_to_determinate(v, m.measure, crit.cone)
    return out, _tail_csv(v)


def _run_density(m: Manifest, a):
    p = a.params
    f = a.built["target"]
    res = poly_projection_error(f, m.measure, p["max_degree"])
    rows = [["poly", k, float(e)] for k, e in enumerate(res.errors)]
    out = {"poly": {"errors": res.errors, "coefficients": res.coefficients, "norm": res.norm,
                    "degree": res.basis.degree, "truncated": res.basis.truncated,
                    "gram_condition": res.basis.condition, "exact_moments": res.basis.exact,
                    "method": res.method}}
    trig = []
    for grid in p["trig_grids"]:
        tr = trig_projection_error(f, m.measure, grid)
        trig.append({"grid_size": len(grid), "error": tr.error, "regularized": tr.regularized,
                     "floor": tr.floor, "notes": tr.notes})
        rows.append(["trig", len(grid), float(tr.error)])
    out["trig"] = trig
    return out, series_csv(["kind", "size", "error"], rows)


def _run_relation(m: Manifest, a):
    ok, res, lhs, rhs = verify_moment_relation(m.measure, m.cone, a.params["e"], a.params["tol"])
    return {"passed": ok, "residual": res, "lhs": lhs, "rhs": rhs}, None


RUNNERS = {
    "moments": _run_moments, "carleman": _run_carleman, "shohat_tamarkin": _run_shohat,
    "classify_weight": _run_weight, "criterion": _run_criterion, "density": _run_density,
    "stieltjes_relation": _run_relation,
}


def run_manifest(m: Manifest, timestamps: bool = True) -> Report:
    """Execute every analysis in manifest order; failures are recorded per entry."""
    results, series = [], {}
    for a in m.analyses:
        t0 = time.perf_counter()
        entry = {"id": a.id, "kind": a.kind}
        nm = m.numerics
        try:
            with monte_carlo_options(not nm["deterministic"], nm["mc_samples"], nm["seed"]):
                out, csv_text = RUNNERS[a.kind](m, a)
            entry["status"] = "ok"
            entry.update(out)
            if csv_text is not None:
                series[a.id] = csv_text
        except (MomentDetError, ValueError, ArithmeticError) as exc:
            entry["status"] = "error"
            entry["error"] = f"{type(exc).__name__}: {exc}"
        if timestamps:
            entry["wall_clock_s"] = time.perf_counter() - t0
        results.append(entry)
    data = {
        "tool": "momentdet",
        "version": __version__,
        "seed": m.numerics["seed"],
        "deterministic": m.numerics["deterministic"],
        "decision_rules": DECISION_RULES,
        "manifest": m.echo(),
        "results": results,
    }
    if timestamps:
        data["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return Report(to_jsonable(data), series)


def emit(report: Report, out_dir, fmt: str = "json") -> list:
    """Write ``report.json`` (and with ``csv`` one ``<analysis_id>.csv`` per series); returns paths."""
    if fmt not in ("json", "csv"):
        raise ValueError("format must be json or csv")
    written = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "report.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        written.append(path)
        if fmt == "csv":
            for aid, text in report.series.items():
                path = os.path.join(out_dir, f"{aid}.csv")
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(text)
                written.append(path)
    except OSError as exc:
        raise MomentDetError(f"cannot write {exc.filename or out_dir}: {exc.strerror}") from None
    return written
