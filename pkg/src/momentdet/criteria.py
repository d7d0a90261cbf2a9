"""Determinacy criteria: Carleman-type series tests, weight integral tests, Stieltjes reductions.

Every check returns a :class:`DeterminacyVerdict` whose evidence chain lists
each link the conclusion rests on.  The criteria are sufficient conditions
only, so a failed check is reported as CRITERION_NOT_MET and never as a
claim of indeterminacy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CriterionError, SupportError
from .measures import Cone, Discrete, Measure, Mixture, Pushforward, marginal_support, sign_group
from .moments import MomentEntry, directional_moments, lambda_sequence
from .quad import FINITE, INFINITE, LogFn, classify_tail, default_schedule, integrate, tail_profile
from .series import CONVERGENT, DIVERGENT, SeriesClassification, classify_series
from .signedlog import SignedLog
from .weights import (
    QUASI_ANALYTIC, AffineImage, RadialRho, RepeatedLog, Tensor, Weight, classify_quasianalytic,
)

__all__ = [
    "SUFFICIENT_DETERMINATE", "SUFFICIENT_C_DETERMINATE", "CRITERION_NOT_MET", "INCONCLUSIVE",
    "Link", "DeterminacyVerdict", "CarlemanSeries", "CriterionSpec",
    "carleman_partial_sums", "classify_series", "extended_carleman_check", "shohat_tamarkin_check",
    "integral_criterion", "criterion_weight", "phi_pushforward", "symmetrize",
    "verify_moment_relation", "strengthen_to_determinate", "HAMBURGER_KINDS", "STIELTJES_KINDS",
]

SUFFICIENT_DETERMINATE = "SUFFICIENT_DETERMINATE"
SUFFICIENT_C_DETERMINATE = "SUFFICIENT_C_DETERMINATE"
CRITERION_NOT_MET = "CRITERION_NOT_MET"
INCONCLUSIVE = "INCONCLUSIVE"

HAMBURGER_KINDS = ("radial_rho", "tensor_affine", "repeated_log", "weight_reciprocal")
STIELTJES_KINDS = ("stieltjes_weight", "stieltjes_tensor", "stieltjes_radial", "stieltjes_repeated_log")


@dataclass(frozen=True)
class Link:
    """One step of an evidence chain."""

    name: str
    outcome: str
    positive: bool
    data: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DeterminacyVerdict:
    outcome: str
    criterion: str
    density: bool = False
    evidence: tuple = ()
    notes: tuple = ()

    def __post_init__(self):
        if self.outcome in (SUFFICIENT_DETERMINATE, SUFFICIENT_C_DETERMINATE):
            if not all(link.positive for link in self.evidence):
                raise ValueError("a sufficient verdict needs every evidence link positive")
        if self.density and self.outcome != SUFFICIENT_DETERMINATE:
            raise ValueError("density conclusions only accompany SUFFICIENT_DETERMINATE")

    @property
    def sufficient(self) -> bool:
        return self.outcome in (SUFFICIENT_DETERMINATE, SUFFICIENT_C_DETERMINATE)


# ---------------------------------------------------------------------------
# Carleman-type series

@dataclass(frozen=True)
class CarlemanSeries:
    """Terms ``1/s(k_m)^{1/2m}`` for ``m = 1..M`` with ``k_m = 2m`` (or ``m``)."""

    log_terms: np.ndarray
    degrees: tuple

    @property
    def terms(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_terms)

    @property
    def partial_sums(self):
        return np.cumsum(self.terms)

    def __len__(self):
        return self.log_terms.size


def _as_signed_log(v):
    if isinstance(v, MomentEntry):
        return v.value
    if isinstance(v, SignedLog):
        return v
    return SignedLog.from_float(float(v))


def carleman_partial_sums(moments, M: int | None = None, half_degree: bool = False) -> CarlemanSeries:
    """Terms and partial sums of ``Σ_m 1/s(2m)^{1/2m}``.

    ``moments[k]`` is ``s(k)`` (SignedLog, MomentEntry or float).  With
    ``half_degree`` the term uses ``s(m)`` instead of ``s(2m)``, the form taken
    by the cone version with dual-basis moments.  A vanishing moment gives an
    infinite term.
    """
    moments = list(moments)
    step = 1 if half_degree else 2
    avail = (len(moments) - 1) // step
    M = avail if M is None else M
    if M > avail:
        raise ValueError(f"need moments up to degree {step * M}, have {len(moments) - 1}")
    logs, degrees = [], []
    for m in range(1, M + 1):
        k = step * m
        v = _as_signed_log(moments[k])
        if v is None:
            raise ValueError(f"moment of degree {k} is missing")
        if v.sign < 0:
            raise ValueError(f"moment of degree {k} is negative")
        logs.append(math.inf if v.sign == 0 else -float(v.log) / (2 * m))
        degrees.append(k)
    return CarlemanSeries(np.array(logs), tuple(degrees))


def _series_link(name, series: CarlemanSeries, extra=None):
    cls = classify_series(log_terms=series.log_terms)
    data = {"series": cls, "degrees": series.degrees}
    if extra:
        data.update(extra)
    return Link(name, cls.outcome, cls.outcome == DIVERGENT, data), cls


def _combine_series(links, success, criterion, density, notes=()):
    outs = [link.outcome for link in links]
    if all(o == DIVERGENT for o in outs):
        return DeterminacyVerdict(success, criterion, density, tuple(links), tuple(notes))
    if any(o == CONVERGENT for o in outs):
        return DeterminacyVerdict(CRITERION_NOT_MET, criterion, False, tuple(links), tuple(notes))
    return DeterminacyVerdict(INCONCLUSIVE, criterion, False, tuple(links), tuple(notes))


def extended_carleman_check(spec: Measure, basis=None, M: int = 30, mode: str = "hamburger",
                            cone: Cone | None = None, tol: float = 1e-10) -> DeterminacyVerdict:
    """Carleman condition along every basis direction.

    ``hamburger``: ``Σ_m s_j(2m)^{-1/2m}`` with ``s_j(k) = ∫ (v_j, x)^k dμ``.
    ``stieltjes``: ``Σ_m s_j(m)^{-1/2m}`` with moments against the dual basis
    of ``cone``; ``spec`` must live in the cone.  ``M`` is the number of series
    terms.
    """
    if M < 8:
        raise ValueError("M must be at least 8 for the growth fit")
    if mode == "hamburger":
        degree, half, success, density = 2 * M, False, SUFFICIENT_DETERMINATE, True
        directions = basis
    elif mode == "stieltjes":
        if cone is None:
            raise ValueError("stieltjes mode needs a cone")
        if not spec.supported_in(cone):
            raise SupportError("measure is not supported in the cone")
        degree, half, success, density = M, True, SUFFICIENT_C_DETERMINATE, False
        directions = cone.dual
    else:
        raise ValueError(f"unknown mode {mode!r}")
    table = directional_moments(spec, directions, degree, tol)
    links = []
    for j, col in enumerate(table.s):
        bad = [k for k, e in enumerate(col) if not e.ok]
        if bad:
            links.append(Link(f"direction_{j}", INCONCLUSIVE, False,
                              {"failed_degrees": tuple(bad), "message": col[bad[0]].message}))
            continue
        series = carleman_partial_sums(col, M, half_degree=half)
        link, _ = _series_link(f"direction_{j}", series, {"direction": tuple(table.directions[j])})
        links.append(link)
    return _combine_series(links, success, f"carleman_{mode}", density)


def shohat_tamarkin_check(spec: Measure, M: int = 30, tol: float = 1e-10) -> DeterminacyVerdict:
    """Divergence of ``Σ_m λ(2m)^{-1/2m}``, ``λ(m) = ∫ Σ_j x_j^m dμ``."""
    if M < 8:
        raise ValueError("M must be at least 8 for the growth fit")
    lam = lambda_sequence(spec, 2 * M, tol)
    bad = [k for k, e in enumerate(lam) if not e.ok]
    if bad:
        link = Link("lambda", INCONCLUSIVE, False, {"failed_degrees": tuple(bad)})
        return DeterminacyVerdict(INCONCLUSIVE, "shohat_tamarkin", False, (link,))
    link, _ = _series_link("lambda", carleman_partial_sums(lam, M))
    return _combine_series([link], SUFFICIENT_DETERMINATE, "shohat_tamarkin", True)


# ---------------------------------------------------------------------------
# integral criteria

@dataclass(frozen=True)
class CriterionSpec:
    """Which integral criterion to run.

    ``rho`` holds ``(R, rho_expression)`` pairs: one for ``radial_rho``, one
    per axis for the tensor kinds.  ``matrix``/``offset`` give the affine map
    ``A`` of ``tensor_affine``; ``a``/``p``/``R`` parameterize the
    repeated-log kinds.
    """

    kind: str
    rho: tuple = ()
    matrix: tuple | None = None
    offset: tuple | None = None
    a: tuple = ()
    p: tuple = ()
    R: float = 0.0
    weight: Weight | None = None
    cone: Cone | None = None

    def __post_init__(self):
        if self.kind not in HAMBURGER_KINDS + STIELTJES_KINDS:
            raise CriterionError(f"unknown criterion kind {self.kind!r}")
        if self.kind in STIELTJES_KINDS and self.cone is None:
            raise CriterionError(f"{self.kind} needs a cone")
        if self.kind in ("radial_rho",) and len(self.rho) != 1:
            raise CriterionError("radial_rho takes exactly one (R, rho) pair")
        if self.kind in ("tensor_affine", "stieltjes_tensor") and not self.rho:
            raise CriterionError(f"{self.kind} needs one (R, rho) pair per axis")
        if self.kind in ("repeated_log", "stieltjes_repeated_log"):
            if not self.p:
                raise CriterionError("repeated_log needs exponents p")
        if self.kind in ("weight_reciprocal", "stieltjes_weight", "stieltjes_radial") and self.weight is None:
            raise CriterionError(f"{self.kind} needs a weight")

    @property
    def stieltjes(self) -> bool:
        return self.kind in STIELTJES_KINDS


def criterion_weight(crit: CriterionSpec, dim: int) -> Weight:
    """The weight ``w`` whose reciprocal (composed as the kind requires) is integrated."""
    k = crit.kind
    if k == "radial_rho":
        R, rho = crit.rho[0]
        return RadialRho(float(R), rho, dim=dim)
    if k in ("tensor_affine", "stieltjes_tensor"):
        if len(crit.rho) != dim:
            raise CriterionError(f"expected {dim} (R, rho) pairs, got {len(crit.rho)}")
        inner = Tensor(tuple(RadialRho(float(R), rho, dim=1) for R, rho in crit.rho))
        if k == "stieltjes_tensor":
            # w(y) = inner((v_j', y)_j)
            return AffineImage(tuple(map(tuple, crit.cone.matrix)), None, inner)
        A0 = np.eye(dim) if crit.matrix is None else np.array(crit.matrix, dtype=float)
        b = np.zeros(dim) if crit.offset is None else np.asarray(crit.offset, dtype=float)
        if A0.shape != (dim, dim) or abs(np.linalg.det(A0)) < 1e-12:
            raise CriterionError("affine map must be an invertible n x n matrix")
        # inner(A0 x + b) = inner(B^{-1}(x - c)) with B = A0^{-1}, c = -A0^{-1} b
        B = np.linalg.inv(A0)
        return AffineImage(tuple(map(tuple, B)), tuple(-B @ b), inner)
    if k in ("repeated_log", "stieltjes_repeated_log"):
        w = RepeatedLog(tuple(crit.a) or (1.0,) * len(crit.p), tuple(crit.p), crit.R,
                        dim=dim if k == "repeated_log" else 1)
        if w.p_j0 >= 1:
            raise CriterionError(f"p_j0 = {w.p_j0} must be below 1")
        return w
    w = crit.weight
    expected = 1 if k == "stieltjes_radial" else dim
    if w.dim != expected:
        raise CriterionError(f"{k} needs a weight on R^{expected}, got R^{w.dim}")
    return w


def _integrand(crit: CriterionSpec, w: Weight, dim: int) -> LogFn:
    if crit.kind in ("stieltjes_radial", "stieltjes_repeated_log"):
        def fn(X):
            r = np.sqrt(np.linalg.norm(X, axis=1))
            return np.ones(X.shape[0]), -w.log_at(r[:, None])
        return LogFn(fn, "w(sqrt|x|)^-1")
    if crit.stieltjes:
        phi = Pushforward(_placeholder(dim), "phi_sqrt", crit.cone)

        def fn(X):
            return np.ones(X.shape[0]), -w.log_at(phi.map(X))
        return LogFn(fn, "(w o phi)^-1")

    def fn(X):
        return np.ones(X.shape[0]), -w.log_at(X)
    return LogFn(fn, "w^-1")


def _placeholder(dim):
    # phi only needs the cone; any measure of the right dimension carries it
    return Discrete(((tuple([0.0] * dim), 1.0),))


def _weight_link(crit, w, dim):
    if crit.kind in ("stieltjes_radial", "stieltjes_repeated_log"):
        need = np.eye(1)
    elif crit.stieltjes:
        need = crit.cone.dual
    else:
        need = np.eye(dim)
    qa = classify_quasianalytic(w)
    # the Hamburger side accepts any basis; cone kinds need the dual basis
    ok = qa.covers(need) if crit.stieltjes else qa.outcome == QUASI_ANALYTIC
    return Link("weight", qa.outcome, ok, {"characterization": qa.characterization,
                                            "basis": qa.basis, "verdict": qa})


def integral_criterion(spec: Measure, crit: CriterionSpec, schedule=None, tol: float = 1e-8,
                       classify_tol: float = 1e-3) -> DeterminacyVerdict:
    """Run one integral criterion: weight check, then tail profile of the integrand."""
    dim = spec.dim
    if crit.stieltjes:
        if crit.cone.dim != dim:
            raise CriterionError("cone dimension does not match the measure")
        if not spec.supported_in(crit.cone):
            raise SupportError("measure is not supported in the criterion's cone")
    w = criterion_weight(crit, dim)
    wlink = _weight_link(crit, w, dim)
    links = [wlink]
    success = SUFFICIENT_C_DETERMINATE if crit.stieltjes else SUFFICIENT_DETERMINATE
    density = not crit.stieltjes
    if wlink.outcome != QUASI_ANALYTIC:
        out = INCONCLUSIVE if wlink.outcome == "INCONCLUSIVE" else CRITERION_NOT_MET
        return DeterminacyVerdict(out, crit.kind, False, tuple(links),
                                  ("weight is not certified quasi-analytic",))
    if not wlink.positive:
        return DeterminacyVerdict(CRITERION_NOT_MET, crit.kind, False, tuple(links),
                                  ("weight is quasi-analytic only for a different basis",))
    f = _integrand(crit, w, dim)
    profile = tail_profile(f, spec, schedule or default_schedule(), tol)
    tv = classify_tail(profile, tol=classify_tol)
    links.append(Link("tail", tv.outcome, tv.outcome == FINITE,
                      {"value": tv.value, "err": tv.err, "evidence": tv.evidence, "profile": profile}))
    if tv.outcome == FINITE:
        return DeterminacyVerdict(success, crit.kind, density, tuple(links))
    if tv.outcome == INFINITE:
        return DeterminacyVerdict(CRITERION_NOT_MET, crit.kind, False, tuple(links))
    return DeterminacyVerdict(INCONCLUSIVE, crit.kind, False, tuple(links))


# ---------------------------------------------------------------------------
# cone machinery

def phi_pushforward(spec: Measure, cone: Cone) -> Measure:
    """Image of ``spec`` under ``Σ y_j v_j -> Σ sqrt(y_j) v_j``."""
    if not spec.supported_in(cone):
        raise SupportError("measure is not supported in the cone")
    if isinstance(spec, Discrete):
        tmp = Pushforward(spec, "phi_sqrt", cone)
        return Discrete(tuple((tuple(p), m) for p, m in zip(tmp.map(spec.points), spec.masses)),
                        spec.truncated)
    return Pushforward(spec, "phi_sqrt", cone)


def symmetrize(spec: Measure, cone: Cone) -> Measure:
    """Average of ``spec`` over the 2^n sign flips of the cone coordinates."""
    n = spec.dim
    if cone.dim != n:
        raise ValueError("cone dimension does not match the measure")
    wt = 2.0 ** -n
    if isinstance(spec, Discrete):
        atoms = {}
        for signs in sign_group(n):
            img = Pushforward(spec, "sign_flip", cone, signs).map(spec.points)
            for p, m in zip(img, spec.masses):
                key = tuple(np.round(p, 14) + 0.0)
                atoms[key] = atoms.get(key, 0.0) + wt * m
        return Discrete(tuple(atoms.items()), spec.truncated)
    return Mixture(tuple((wt, Pushforward(spec, "sign_flip", cone, s)) for s in sign_group(n)))


def _cone_monomial(cone, e, half):
    D = cone.dual
    e = np.asarray(e, dtype=float)
    powers = e / 2.0 if half else e

    def fn(X):
        Y = X @ D.T
        sg = np.ones(X.shape[0])
        l = np.zeros(X.shape[0])
        with np.errstate(divide="ignore"):
            for j, k in enumerate(powers):
                if k == 0:
                    continue
                sg = sg * np.sign(Y[:, j]) ** (k if float(k).is_integer() else 1)
                l = l + k * np.log(np.abs(Y[:, j]))
        return sg, l

    return LogFn(fn, f"cone monomial {tuple(powers)}")


def verify_moment_relation(spec: Measure, cone: Cone, e, tol: float = 1e-6, quad_tol: float = 1e-10):
    """Check ``∫ Π (v_j', x)^{e_j} d(sym φ_*μ) = ∫ Π (v_j', x)^{e_j/2} dμ`` (0 when some ``e_j`` is odd).

    Returns ``(ok, residual, lhs, rhs)``; the residual is relative for even
    ``e`` and absolute for odd ``e``.
    """
    e = tuple(int(k) for k in e)
    if len(e) != spec.dim or any(k < 0 for k in e):
        raise ValueError("e must be a non-negative multi-index of length n")
    xi = symmetrize(phi_pushforward(spec, cone), cone)
    lhs = integrate(_cone_monomial(cone, e, False), xi, quad_tol).value
    if any(k % 2 for k in e):
        rhs = 0.0
        res = abs(lhs)
        return res <= tol * 1e-2, res, lhs, rhs
    rhs = integrate(_cone_monomial(cone, e, True), spec, quad_tol).value
    res = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    return res <= tol, res, lhs, rhs


def strengthen_to_determinate(verdict: DeterminacyVerdict, spec: Measure, cone: Cone) -> DeterminacyVerdict:
    """Upgrade cone determinacy when no cone marginal is a discrete unbounded set through 0."""
    if verdict.outcome != SUFFICIENT_C_DETERMINATE:
        return replace(verdict, notes=verdict.notes + ("strengthening needs a SUFFICIENT_C_DETERMINATE verdict",))
    flags = [marginal_support(spec, cone, j) for j in range(spec.dim)]
    data = {"flags": tuple((f.contains_origin, f.discrete_unbounded) for f in flags)}
    if all(f.allows_upgrade() for f in flags):
        link = Link("support", "UPGRADE", True, data)
        return DeterminacyVerdict(SUFFICIENT_DETERMINATE, verdict.criterion, False,
                                  verdict.evidence + (link,), verdict.notes)
    if any(f.unknown() for f in flags):
        note = "marginal support flags unknown; verdict left unchanged"
    else:
        note = "a marginal is a discrete unbounded set containing 0; verdict left unchanged"
    return replace(verdict, notes=verdict.notes + (note,))
