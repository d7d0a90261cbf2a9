"""Analysis manifests: strict JSON schema, builders for measures, weights and criteria."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .criteria import HAMBURGER_KINDS, STIELTJES_KINDS, CriterionSpec
from .errors import ExprSyntaxError, ManifestError, MomentDetError
from .expr import parse_expression
from .measures import (
    Cone, Discrete, DensityExpr, Exponential1D, Gamma1D, GaussianProduct, LogNormal1D, Measure,
    PerturbedLogNormal, ProductOf1D, Pushforward, SupportDescriptor,
)
from .weights import (
    ALIASES_1D, AffineImage, CompactSupport, ExpDecay, ExprWeight, RadialRho, RepeatedLog, Tensor,
    Weight, radial_extension,
)

__all__ = [
    "Manifest", "Analysis", "parse_manifest", "load_manifest", "build_measure", "build_weight",
    "build_criterion", "DEFAULT_NUMERICS", "ANALYSIS_KINDS",
]

DEFAULT_NUMERICS = {
    "M": 30, "tol": 1e-8, "seed": 0, "r0": 2.0, "shells": 12, "mc_samples": 1_000_000,
    "max_degree": 15, "det_threshold": 1e-10, "deterministic": False,
}
TOP_KEYS = {"dimension", "measure", "basis", "cone", "analyses", "numerics", "output"}
ANALYSIS_KINDS = {
    "moments": {"M", "t_grid", "A", "closed_forms"},
    "carleman": {"mode", "M"},
    "shohat_tamarkin": {"M"},
    "classify_weight": {"weight", "max_m"},
    "criterion": {"spec", "strengthen"},
    "density": {"target", "max_degree", "trig_grids"},
    "stieltjes_relation": {"e", "tol"},
}
MEASURE_FREE = {"classify_weight"}


def _check_keys(obj, path, allowed, required=()):
    if not isinstance(obj, dict):
        raise ManifestError(path, "expected an object")
    for k in obj:
        if k not in allowed:
            raise ManifestError(f"{path}.{k}", "unknown key")
    for k in required:
        if k not in obj:
            raise ManifestError(f"{path}.{k}", "missing required key")


def _num(obj, key, path, default=None, positive=False, integer=False):
    v = obj.get(key, default)
    if v is None:
        raise ManifestError(f"{path}.{key}", "missing required key")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ManifestError(f"{path}.{key}", "expected a number")
    if integer and float(v) != int(v):
        raise ManifestError(f"{path}.{key}", "expected an integer")
    if positive and not v > 0:
        raise ManifestError(f"{path}.{key}", "must be positive")
    return int(v) if integer else float(v)


def _vec(v, path, n=None):
    try:
        a = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ManifestError(path, "expected a list of numbers") from None
    if a.ndim != 1 or (n is not None and a.size != n):
        raise ManifestError(path, f"expected a list of {n} numbers" if n else "expected a list of numbers")
    return a


def _matrix(v, path, n, det_threshold):
    try:
        A = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ManifestError(path, "expected a matrix") from None
    if A.shape != (n, n):
        raise ManifestError(path, f"expected a {n}x{n} matrix")
    if abs(np.linalg.det(A)) < det_threshold:
        raise ManifestError(path, "matrix is singular")
    return A


def _expr(text, path, dim, aliases=None):
    if not isinstance(text, str) or not text.strip():
        raise ManifestError(path, "expected a non-empty expression string")
    try:
        return parse_expression(text, dim, aliases)
    except ExprSyntaxError as exc:
        raise ManifestError(path, str(exc)) from None


# ---------------------------------------------------------------------------
# measures

def _support(obj, path, dim, det_threshold):
    _check_keys(obj, path, {"kind", "basis", "bounds", "predicate", "contains_origin", "discrete_unbounded"},
                ("kind",))
    kind = obj["kind"]
    flags = {}
    for key in ("contains_origin", "discrete_unbounded"):
        if key in obj:
            v = obj[key]
            v = [v] * dim if not isinstance(v, list) else v
            if len(v) != dim or any(x not in (True, False, None) for x in v):
                raise ManifestError(f"{path}.{key}", "expected true/false/null per direction")
            flags[key] = tuple(v)
    if kind == "cone":
        B = np.eye(dim) if "basis" not in obj else _matrix(obj["basis"], f"{path}.basis", dim, det_threshold)
        return SupportDescriptor("cone", cone=Cone(tuple(map(tuple, B.T))), **flags)
    if kind == "box":
        b = obj.get("bounds")
        if not isinstance(b, list) or len(b) != dim or any(not isinstance(r, list) or len(r) != 2 for r in b):
            raise ManifestError(f"{path}.bounds", f"expected {dim} [lo, hi] pairs")
        return SupportDescriptor("box", bounds=tuple((float(lo), float(hi)) for lo, hi in b), **flags)
    if kind == "predicate":
        return SupportDescriptor("predicate", predicate=_expr(obj.get("predicate"), f"{path}.predicate", dim),
                                 **flags)
    if kind in ("all_space", "halfline"):
        if kind == "halfline" and dim != 1:
            raise ManifestError(f"{path}.kind", "halfline support is one-dimensional")
        return SupportDescriptor(kind, **flags)
    raise ManifestError(f"{path}.kind", f"unknown support kind {kind!r}")


def build_measure(obj, dim: int, path="measure", cone: Cone | None = None, det_threshold=1e-10) -> Measure:
    """Measure from its manifest object."""
    if not isinstance(obj, dict):
        raise ManifestError(path, "expected an object")
    try:
        if "family" in obj:
            fam = obj["family"]
            if fam == "gaussian":
                _check_keys(obj, path, {"family", "mean", "sd"})
                mean = _vec(obj.get("mean", [0.0] * dim), f"{path}.mean", dim)
                sd = _vec(obj.get("sd", [1.0] * dim), f"{path}.sd", dim)
                return GaussianProduct(tuple(mean), tuple(sd))
            one_d = {"lognormal": ({"mu", "sigma"}, lambda o: LogNormal1D(_num(o, "mu", path, 0.0),
                                                                          _num(o, "sigma", path, 1.0, True))),
                     "gamma": ({"shape", "scale"}, lambda o: Gamma1D(_num(o, "shape", path, None, True),
                                                                     _num(o, "scale", path, 1.0, True))),
                     "exponential": ({"rate"}, lambda o: Exponential1D(_num(o, "rate", path, 1.0, True))),
                     "perturbed_lognormal": ({"theta"}, lambda o: PerturbedLogNormal(_num(o, "theta", path, 0.0)))}
            if fam in one_d:
                keys, make = one_d[fam]
                _check_keys(obj, path, keys | {"family"})
                if dim != 1:
                    raise ManifestError(f"{path}.family", f"{fam} is one-dimensional; use a product")
                return make(obj)
            if fam == "product":
                _check_keys(obj, path, {"family", "factors"}, ("factors",))
                fs = obj["factors"]
                if not isinstance(fs, list) or len(fs) != dim:
                    raise ManifestError(f"{path}.factors", f"expected {dim} one-dimensional factors")
                return ProductOf1D(tuple(build_measure(f, 1, f"{path}.factors[{i}]") for i, f in enumerate(fs)))
            raise ManifestError(f"{path}.family", f"unknown family {fam!r}")
        if "density" in obj:
            _check_keys(obj, path, {"density", "support", "normalization"})
            aliases = ALIASES_1D if dim == 1 else None
            e = _expr(obj["density"], f"{path}.density", dim, aliases)
            sd = _support(obj.get("support", {"kind": "all_space"}), f"{path}.support", dim, det_threshold)
            norm = obj.get("normalization")
            if norm is not None:
                norm = _num(obj, "normalization", path, positive=True)
            return DensityExpr(e, sd, norm)
        if "discrete" in obj:
            _check_keys(obj, path, {"discrete", "truncated"})
            atoms = obj["discrete"]
            if not isinstance(atoms, list) or not atoms:
                raise ManifestError(f"{path}.discrete", "expected a non-empty list of [point, mass]")
            out = []
            for i, a in enumerate(atoms):
                if not isinstance(a, list) or len(a) != 2:
                    raise ManifestError(f"{path}.discrete[{i}]", "expected [point, mass]")
                p = _vec(np.atleast_1d(a[0]).tolist(), f"{path}.discrete[{i}]", dim)
                out.append((tuple(p), float(a[1])))
            return Discrete(tuple(out), bool(obj.get("truncated", False)))
        if "pushforward" in obj:
            _check_keys(obj, path, {"pushforward", "map", "signs"}, ("map",))
            if cone is None:
                raise ManifestError(f"{path}.map", "pushforward maps need the manifest cone")
            inner = build_measure(obj["pushforward"], dim, f"{path}.pushforward", cone, det_threshold)
            signs = tuple(obj["signs"]) if "signs" in obj else None
            return Pushforward(inner, obj["map"], cone, signs)
    except ManifestError:
        raise
    except (MomentDetError, ValueError) as exc:
        raise ManifestError(path, str(exc)) from None
    raise ManifestError(path, "expected one of family / density / discrete / pushforward")


# ---------------------------------------------------------------------------
# weights and criteria

def _rho_pair(obj, path):
    _check_keys(obj, path, {"R", "rho"}, ("R", "rho"))
    R = _num(obj, "R", path, positive=True)
    return (R, _expr(obj["rho"], f"{path}.rho", 1, ALIASES_1D))


def build_weight(obj, dim: int, path="weight", det_threshold=1e-10) -> Weight:
    """Weight from its manifest object."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ManifestError(path, "expected an object with a kind")
    kind = obj["kind"]
    dim = int(obj.get("dim", dim))
    try:
        if kind == "radial_rho":
            _check_keys(obj, path, {"kind", "R", "rho", "C", "dim"}, ("R", "rho"))
            R, rho = _rho_pair({"R": obj["R"], "rho": obj["rho"]}, path)
            return RadialRho(R, rho, _num(obj, "C", path, 1.0, True), dim)
        if kind == "repeated_log":
            _check_keys(obj, path, {"kind", "a", "p", "R", "C", "dim"}, ("p",))
            p = tuple(_vec(obj["p"], f"{path}.p"))
            a = tuple(_vec(obj.get("a", [1.0] * len(p)), f"{path}.a"))
            return RepeatedLog(a, p, _num(obj, "R", path, 0.0), _num(obj, "C", path, 1.0, True), dim)
        if kind == "exp_decay":
            _check_keys(obj, path, {"kind", "eps", "C", "dim"}, ("eps",))
            return ExpDecay(_num(obj, "eps", path, positive=True), _num(obj, "C", path, 1.0, True), dim)
        if kind == "compact_support":
            _check_keys(obj, path, {"kind", "radius", "dim"}, ("radius",))
            return CompactSupport(_num(obj, "radius", path, positive=True), dim)
        if kind == "tensor":
            _check_keys(obj, path, {"kind", "factors", "dim"}, ("factors",))
            fs = obj["factors"]
            if not isinstance(fs, list) or len(fs) != dim:
                raise ManifestError(f"{path}.factors", f"expected {dim} one-dimensional factors")
            return Tensor(tuple(build_weight(f, 1, f"{path}.factors[{i}]") for i, f in enumerate(fs)))
        if kind == "affine":
            _check_keys(obj, path, {"kind", "matrix", "offset", "inner", "dim"}, ("matrix", "inner"))
            A = _matrix(obj["matrix"], f"{path}.matrix", dim, det_threshold)
            b = _vec(obj.get("offset", [0.0] * dim), f"{path}.offset", dim)
            inner = build_weight(obj["inner"], dim, f"{path}.inner", det_threshold)
            return AffineImage(tuple(map(tuple, A)), tuple(b), inner)
        if kind == "radial_extension":
            _check_keys(obj, path, {"kind", "inner", "dim"}, ("inner",))
            return radial_extension(build_weight(obj["inner"], 1, f"{path}.inner"), dim)
        if kind == "expr":
            _check_keys(obj, path, {"kind", "formula", "dim"}, ("formula",))
            e = _expr(obj["formula"], f"{path}.formula", dim, ALIASES_1D if dim == 1 else None)
            return ExprWeight(e, dim)
    except ManifestError:
        raise
    except (MomentDetError, ValueError) as exc:
        raise ManifestError(path, str(exc)) from None
    raise ManifestError(f"{path}.kind", f"unknown weight kind {kind!r}")


def build_criterion(obj, dim: int, cone: Cone | None, path="spec", det_threshold=1e-10) -> CriterionSpec:
    """CriterionSpec from its manifest object."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ManifestError(path, "expected an object with a kind")
    kind = obj["kind"]
    if kind not in HAMBURGER_KINDS + STIELTJES_KINDS:
        raise ManifestError(f"{path}.kind", f"unknown criterion kind {kind!r}")
    if kind in STIELTJES_KINDS and cone is None:
        raise ManifestError(f"{path}.kind", f"{kind} needs the manifest cone")
    c = cone if kind in STIELTJES_KINDS else None
    try:
        if kind == "radial_rho":
            _check_keys(obj, path, {"kind", "R", "rho"}, ("R", "rho"))
            return CriterionSpec(kind, rho=(_rho_pair({"R": obj["R"], "rho": obj["rho"]}, path),))
        if kind in ("tensor_affine", "stieltjes_tensor"):
            extra = {"matrix", "offset"} if kind == "tensor_affine" else set()
            _check_keys(obj, path, {"kind", "factors"} | extra, ("factors",))
            fs = obj["factors"]
            if not isinstance(fs, list) or len(fs) != dim:
                raise ManifestError(f"{path}.factors", f"expected {dim} (R, rho) objects")
            rho = tuple(_rho_pair(f, f"{path}.factors[{i}]") for i, f in enumerate(fs))
            A = b = None
            if "matrix" in obj:
                A = tuple(map(tuple, _matrix(obj["matrix"], f"{path}.matrix", dim, det_threshold)))
            if "offset" in obj:
                b = tuple(_vec(obj["offset"], f"{path}.offset", dim))
            return CriterionSpec(kind, rho=rho, matrix=A, offset=b, cone=c)
        if kind in ("repeated_log", "stieltjes_repeated_log"):
            _check_keys(obj, path, {"kind", "a", "p", "R"}, ("p",))
            p = tuple(_vec(obj["p"], f"{path}.p"))
            a = tuple(_vec(obj.get("a", [1.0] * len(p)), f"{path}.a"))
            return CriterionSpec(kind, a=a, p=p, R=_num(obj, "R", path, 0.0), cone=c)
        _check_keys(obj, path, {"kind", "weight"}, ("weight",))
        wdim = 1 if kind == "stieltjes_radial" else dim
        return CriterionSpec(kind, weight=build_weight(obj["weight"], wdim, f"{path}.weight", det_threshold), cone=c)
    except ManifestError:
        raise
    except (MomentDetError, ValueError) as exc:
        raise ManifestError(path, str(exc)) from None


# ---------------------------------------------------------------------------
# manifest

@dataclass
class Analysis:
    index: int
    id: str
    kind: str
    params: dict
    built: dict = field(default_factory=dict)


@dataclass
class Manifest:
    dimension: int
    measure: Measure | None
    basis: np.ndarray | None          # rows are the basis vectors v_j
    cone: Cone | None
    analyses: list
    numerics: dict
    output: dict
    raw: dict

    @property
    def directions(self):
        return np.eye(self.dimension) if self.basis is None else self.basis

    def echo(self) -> dict:
        """The manifest with every default filled in."""
        out = copy.deepcopy(self.raw)
        out["numerics"] = dict(self.numerics)
        out["output"] = dict(self.output)
        if "basis" not in out:
            out["basis"] = np.eye(self.dimension).tolist()
        out["analyses"] = [dict(a.params, id=a.id, kind=a.kind) for a in self.analyses]
        return out


def _analysis_defaults(kind, params, numerics):
    p = dict(params)
    if kind in ("moments", "carleman", "shohat_tamarkin"):
        p.setdefault("M", numerics["M"])
    if kind == "carleman":
        p.setdefault("mode", "hamburger")
    if kind == "moments":
        p.setdefault("A", 4)
        p.setdefault("t_grid", [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0])
        p.setdefault("closed_forms", True)
    if kind == "density":
        p.setdefault("max_degree", numerics["max_degree"])
        p.setdefault("trig_grids", [])
    if kind == "classify_weight":
        p.setdefault("max_m", 40)
    if kind == "criterion":
        p.setdefault("strengthen", True)
    if kind == "stieltjes_relation":
        p.setdefault("tol", 1e-6)
    return p


def parse_manifest(text) -> Manifest:
    """Validate a manifest (JSON text or an already-decoded object) and fill in defaults."""
    if isinstance(text, (str, bytes)):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ManifestError("<document>", f"invalid JSON: {exc}") from None
    else:
        data = copy.deepcopy(text)
    _check_keys(data, "manifest", TOP_KEYS, ("dimension", "analyses"))
    n = data["dimension"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ManifestError("dimension", "expected a positive integer")

    numerics = dict(DEFAULT_NUMERICS)
    if "numerics" in data:
        _check_keys(data["numerics"], "numerics", set(DEFAULT_NUMERICS))
        numerics.update(data["numerics"])
    for key in ("M", "shells", "seed", "mc_samples", "max_degree"):
        numerics[key] = _num(numerics, key, "numerics", integer=True)
    for key in ("tol", "r0", "det_threshold"):
        numerics[key] = _num(numerics, key, "numerics", positive=True)
    if numerics["M"] < 1:
        raise ManifestError("numerics.M", "must be at least 1")
    if numerics["shells"] < 3:
        raise ManifestError("numerics.shells", "need at least 3 shells")
    if not isinstance(numerics["deterministic"], bool):
        raise ManifestError("numerics.deterministic", "expected true or false")
    thr = numerics["det_threshold"]

    basis = None
    if "basis" in data:
        basis = _matrix(data["basis"], "basis", n, thr).T      # columns are the vectors
    cone = None
    if "cone" in data:
        c = data["cone"]
        if c is True:
            cone = Cone(tuple(map(tuple, basis))) if basis is not None else Cone.standard(n)
        elif isinstance(c, dict):
            _check_keys(c, "cone", {"basis"}, ("basis",))
            cone = Cone(tuple(map(tuple, _matrix(c["basis"], "cone.basis", n, thr).T)))
        elif c is not False:
            raise ManifestError("cone", "expected true, false or {\"basis\": matrix}")

    if not isinstance(data["analyses"], list):
        raise ManifestError("analyses", "expected a list")
    analyses, ids = [], set()
    for i, a in enumerate(data["analyses"]):
        path = f"analyses[{i}]"
        if not isinstance(a, dict) or "kind" not in a:
            raise ManifestError(path, "expected an object with a kind")
        kind = a["kind"]
        if kind not in ANALYSIS_KINDS:
            raise ManifestError(f"{path}.kind", f"unknown analysis kind {kind!r}")
        _check_keys(a, path, ANALYSIS_KINDS[kind] | {"kind", "id"})
        aid = str(a.get("id", f"{i:02d}_{kind}"))
        if aid in ids:
            raise ManifestError(f"{path}.id", f"duplicate id {aid!r}")
        ids.add(aid)
        params = _analysis_defaults(kind, {k: v for k, v in a.items() if k not in ("kind", "id")}, numerics)
        analyses.append(Analysis(i, aid, kind, params))

    needs_measure = any(a.kind not in MEASURE_FREE for a in analyses)
    if "measure" not in data and needs_measure:
        raise ManifestError("measure", "missing required key")
    measure = build_measure(data["measure"], n, "measure", cone, thr) if "measure" in data else None

    for a in analyses:
        path = f"analyses[{a.index}]"
        p = a.params
        if a.kind in ("moments", "carleman", "shohat_tamarkin"):
            _num(p, "M", path, positive=True, integer=True)
        if a.kind == "carleman":
            if p["mode"] not in ("hamburger", "stieltjes"):
                raise ManifestError(f"{path}.mode", "expected hamburger or stieltjes")
            if p["mode"] == "stieltjes" and cone is None:
                raise ManifestError(f"{path}.mode", "stieltjes mode needs the manifest cone")
        if a.kind == "classify_weight":
            if "weight" not in p:
                raise ManifestError(f"{path}.weight", "missing required key")
            a.built["weight"] = build_weight(p["weight"], n, f"{path}.weight", thr)
        if a.kind == "criterion":
            if "spec" not in p:
                raise ManifestError(f"{path}.spec", "missing required key")
            a.built["criterion"] = build_criterion(p["spec"], n, cone, f"{path}.spec", thr)
        if a.kind == "density":
            if "target" not in p:
                raise ManifestError(f"{path}.target", "missing required key")
            a.built["target"] = _expr(p["target"], f"{path}.target", n, ALIASES_1D if n == 1 else None)
            _num(p, "max_degree", path, integer=True)
        if a.kind == "stieltjes_relation":
            if cone is None:
                raise ManifestError(f"{path}.e", "stieltjes_relation needs the manifest cone")
            e = p.get("e")
            if not isinstance(e, list) or len(e) != n or any(not isinstance(k, int) or k < 0 for k in e):
                raise ManifestError(f"{path}.e", f"expected {n} non-negative integers")

    output = {"dir": None, "format": "json"}
    if "output" in data:
        _check_keys(data["output"], "output", {"dir", "format"})
        output.update(data["output"])
        if output["format"] not in ("json", "csv"):
            raise ManifestError("output.format", "expected json or csv")
    return Manifest(n, measure, basis, cone, analyses, numerics, output, data)


def load_manifest(path) -> Manifest:
    with open(path, encoding="utf-8") as fh:
        return parse_manifest(fh.read())

