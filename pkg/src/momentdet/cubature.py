"""Adaptive tensor Gauss-Kronrod (7/15) cubature on boxes in up to 3 dimensions.

Integrands are supplied in log form: ``logg(U) -> (sign, log|g|)`` for points
``U`` of shape ``(N, d)``.  Values are rescaled by the running maximum of
``log|g|`` before summation, so integrals of size ``exp(2000)`` are as easy
as integrals of size one.

Infinite or very wide boxes are first reduced to the region where
``log|g| >= peak - CUT`` by line scans through the peak, followed by a
face check that pushes a face outward while the integrand is still
significant on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["CubatureResult", "log_cubature", "GK_NODES", "GK_WEIGHTS", "G_WEIGHTS"]

_XGK = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
]
_WGK = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
]
_WG = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
]

GK_NODES = np.array([-x for x in _XGK[:7]] + [0.0] + _XGK[6::-1])
GK_WEIGHTS = np.array(_WGK[:7] + [_WGK[7]] + _WGK[6::-1])
G_WEIGHTS = np.zeros(15)
for _i, _w in zip((1, 3, 5), _WG[:3]):
    G_WEIGHTS[_i] = _w
    G_WEIGHTS[14 - _i] = _w
G_WEIGHTS[7] = _WG[3]

CUT = 60.0  # exp(-60) ~ 1e-26 relative to the peak is dropped
_SCAN_POINTS = 1025
_INIT_CELLS = {1: 16, 2: 6, 3: 3}
_MAX_CELLS = {1: 6000, 2: 4000, 3: 900}


@dataclass
class CubatureResult:
    sign: int
    log: float          # log |integral|
    log_abs: float      # log of the integral of |g|
    rel_err: float      # error estimate relative to the integral of |g|
    n_eval: int
    converged: bool
    n_cells: int = 0

    @property
    def value(self):
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log) if self.log < 709.78 else self.sign * math.inf


def _zero(n_eval=0):
    return CubatureResult(0, -math.inf, -math.inf, 0.0, n_eval, True)


class _Counter:
    def __init__(self, logg):
        self.logg = logg
        self.n = 0

    def __call__(self, U):
        self.n += U.shape[0]
        s, l = self.logg(U)
        s = np.asarray(s, dtype=float)
        l = np.asarray(l, dtype=float)
        if np.any(np.isnan(l)) or np.any(np.isnan(s)):
            raise FloatingPointError("integrand produced NaN")
        l = np.where(s == 0, -np.inf, l)
        return s, l


def _grid(lo, hi, k=_SCAN_POINTS):
    # interior midpoints: scans never touch the box boundary
    return lo + (hi - lo) * (np.arange(k) + 0.5) / k


def _scan_line(f, point, axis, lo, hi, center, scale):
    """Return (grid, logs) along one axis through ``point``.

    Infinite sides are handled by an expanding window that stops once the
    open edge is CUT below the best value seen.
    """
    d = point.shape[0]
    c = min(max(center, lo), hi) if math.isfinite(lo) or math.isfinite(hi) else center
    if math.isfinite(lo) and math.isfinite(hi):
        g = _grid(lo, hi)
        P = np.repeat(point[None, :], g.size, axis=0)
        P[:, axis] = g
        return g, f(P)[1]
    width = 16.0 * scale
    for _ in range(14):
        a = lo if math.isfinite(lo) else c - width
        b = hi if math.isfinite(hi) else c + width
        if math.isfinite(lo) and not math.isfinite(hi):
            b = max(lo + width, c + width)
        if math.isfinite(hi) and not math.isfinite(lo):
            a = min(hi - width, c - width)
        g = _grid(a, b)
        P = np.repeat(point[None, :], g.size, axis=0)
        P[:, axis] = g
        L = f(P)[1]
        top = L.max()
        if top == -np.inf:
            width *= 4.0
            continue
        open_lo = not math.isfinite(lo) and L[:8].max() >= top - CUT
        open_hi = not math.isfinite(hi) and L[-8:].max() >= top - CUT
        if not (open_lo or open_hi):
            return g, L
        width *= 4.0
        if width > 1e15 * max(scale, 1.0):
            break
    return g, L


def _refine_peak(f, point, axis, g, L):
    j = int(np.argmax(L))
    step = g[1] - g[0] if g.size > 1 else 1.0
    a, b = g[max(j - 2, 0)] - 0.5 * step, g[min(j + 2, g.size - 1)] + 0.5 * step
    fine = np.linspace(a, b, 257)
    P = np.repeat(point[None, :], fine.size, axis=0)
    P[:, axis] = fine
    Lf = f(P)[1]
    k = int(np.argmax(Lf))
    if Lf[k] > L[j]:
        return fine[k], Lf[k]
    return g[j], L[j]


def _extent(g, L, peak, lo, hi, xpeak=None):
    keep = np.nonzero(L >= peak - CUT)[0]
    step = g[1] - g[0] if g.size > 1 else 1.0
    if keep.size == 0:
        if xpeak is None:
            return None
        # the significant region is narrower than one scan step
        return max(xpeak - step, lo), min(xpeak + step, hi)
    i0, i1 = keep[0], keep[-1]
    a = g[i0] - step if i0 > 0 else (lo if math.isfinite(lo) else g[0] - step)
    b = g[i1] + step if i1 < g.size - 1 else (hi if math.isfinite(hi) else g[-1] + step)
    return max(a, lo), min(b, hi)


def _find_box(f, lo, hi, center, scale):
    d = lo.size
    point = np.array([min(max(c, a), b) if math.isfinite(a) or math.isfinite(b) else c
                      for c, a, b in zip(center, lo, hi)], dtype=float)
    for i in range(d):
        if not (math.isfinite(lo[i]) and math.isfinite(hi[i])):
            continue
        if point[i] <= lo[i] or point[i] >= hi[i]:
            point[i] = 0.5 * (lo[i] + hi[i])
    peak = -np.inf
    scans = [None] * d
    for _sweep in range(3 if d > 1 else 1):
        moved = False
        for i in range(d):
            g, L = _scan_line(f, point, i, lo[i], hi[i], center[i], scale[i])
            if L.max() == -np.inf:
                scans[i] = (g, L)
                continue
            x, v = _refine_peak(f, point, i, g, L)
            if v > peak:
                moved = moved or (point[i] != x)
                point[i] = x
                peak = v
            scans[i] = (g, L)
        if not moved:
            break
    if peak == -np.inf:
        return None
    box_lo = np.empty(d)
    box_hi = np.empty(d)
    for i in range(d):
        g, L = _scan_line(f, point, i, lo[i], hi[i], point[i], scale[i])
        peak = max(peak, L.max())
        ext = _extent(g, L, peak, lo[i], hi[i], point[i])
        if ext is None:
            ext = (g[0], g[-1])
        box_lo[i], box_hi[i] = ext
    if d > 1:
        box_lo, box_hi, peak = _check_faces(f, box_lo, box_hi, lo, hi, point, peak)
    return box_lo, box_hi, peak


def _check_faces(f, box_lo, box_hi, lo, hi, point, peak):
    d = box_lo.size
    k = 9 if d == 2 else 7
    for _ in range(40):
        grew = False
        for i in range(d):
            others = [j for j in range(d) if j != i]
            axes = [np.linspace(box_lo[j], box_hi[j], k) for j in others]
            mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d - 1)
            for side in (0, 1):
                face = box_lo[i] if side == 0 else box_hi[i]
                bound = lo[i] if side == 0 else hi[i]
                if face == bound:
                    continue
                P = np.empty((mesh.shape[0], d))
                P[:, others] = mesh
                P[:, i] = face
                L = f(P)[1]
                peak = max(peak, L.max())
                if L.max() >= peak - CUT + 5.0:
                    span = max(abs(face - point[i]), 1e-3 * max(box_hi[i] - box_lo[i], 1.0))
                    new = face - span if side == 0 else face + span
                    new = max(new, lo[i]) if side == 0 else min(new, hi[i])
                    if side == 0:
                        box_lo[i] = new
                    else:
                        box_hi[i] = new
                    grew = True
        if not grew:
            break
    return box_lo, box_hi, peak


class _Rule:
    def __init__(self, d):
        self.d = d
        grids = np.meshgrid(*([GK_NODES] * d), indexing="ij")
        self.nodes = np.stack(grids, -1).reshape(-1, d)  # (15^d, d)

    def apply(self, f, lo, hi, shift):
        """Evaluate a batch of cells; returns (I_K, I_abs, per-axis err, max log)."""
        d = self.d
        C = lo.shape[0]
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        P = mid[:, None, :] + half[:, None, :] * self.nodes[None, :, :]
        s, l = f(P.reshape(-1, d))
        top = l.max() if l.size else -np.inf
        if np.isnan(top) or top == np.inf:
            raise OverflowError("integrand is infinite or NaN at a quadrature node; "
                                "pass it in log form (LogFn) to avoid overflow")
        v = (s * np.exp(l - shift)).reshape((C,) + (15,) * d)
        a = np.abs(v)
        vol = np.prod(half, axis=1)
        IK = _contract(v, [GK_WEIGHTS] * d) * vol
        IA = _contract(a, [GK_WEIGHTS] * d) * vol
        errs = np.empty((C, d))
        for i in range(d):
            ws = [GK_WEIGHTS] * d
            ws[i] = G_WEIGHTS
            errs[:, i] = np.abs(IK - _contract(v, ws) * vol)
        return IK, IA, errs, top


def _contract(v, weights):
    out = v
    for w in weights:
        out = np.tensordot(out, w, axes=([1], [0])) if out.ndim > 1 else out
    return out


def _initial_cells(lo, hi, d, breakpoints):
    k = _INIT_CELLS[d]
    edges = []
    for i in range(d):
        e = np.linspace(lo[i], hi[i], k + 1)
        if breakpoints is not None and breakpoints[i]:
            extra = [b for b in breakpoints[i] if lo[i] < b < hi[i]]
            e = np.unique(np.concatenate([e, extra]))
        edges.append(e)
    los = np.stack(np.meshgrid(*[e[:-1] for e in edges], indexing="ij"), -1).reshape(-1, d)
    his = np.stack(np.meshgrid(*[e[1:] for e in edges], indexing="ij"), -1).reshape(-1, d)
    return los, his


def log_cubature(logg, lo, hi, center=None, scale=None, tol=1e-10, breakpoints=None,
                 max_cells=None, find_box=True):
    """Integrate ``exp(logg)`` (with sign) over the box ``[lo, hi]``.

    Parameters
    ----------
    logg : callable
        ``U -> (sign, log|g|)`` on arrays of shape ``(N, d)``.
    lo, hi : array_like
        Box bounds, may be infinite.
    center, scale : array_like, optional
        Where to start looking for mass and its rough width per axis.
    tol : float
        Target error relative to the integral of ``|g|``.
    breakpoints : list of lists, optional
        Per-axis points where the integrand is known to have a kink.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float)).copy()
    hi = np.atleast_1d(np.asarray(hi, dtype=float)).copy()
    d = lo.size
    if d not in _INIT_CELLS:
        raise ValueError("deterministic cubature supports 1 <= d <= 3")
    if np.any(hi <= lo):
        return _zero()
    center = np.zeros(d) if center is None else np.atleast_1d(np.asarray(center, dtype=float))
    scale = np.ones(d) if scale is None else np.atleast_1d(np.asarray(scale, dtype=float))
    f = _Counter(logg)

    if find_box or not np.all(np.isfinite(lo) & np.isfinite(hi)):
        found = _find_box(f, lo, hi, center, scale)
        if found is None:
            return _zero(f.n)
        blo, bhi, peak = found
    else:
        blo, bhi = lo, hi
        peak = f(np.atleast_2d(0.5 * (lo + hi)))[1].max()
    if not np.all(bhi > blo):
        return _zero(f.n)

    shift = peak if math.isfinite(peak) else 0.0
    rule = _Rule(d)
    max_cells = max_cells or _MAX_CELLS[d]

    cl, ch = _initial_cells(blo, bhi, d, breakpoints)
    IK, IA, ER, top = rule.apply(f, cl, ch, shift)
    if top > shift + 30.0:
        shift = top
        IK, IA, ER, _ = rule.apply(f, cl, ch, shift)

    converged = False
    for _ in range(400):
        err_cell = ER.sum(axis=1)
        total_abs = IA.sum()
        total_err = err_cell.sum()
        if total_abs == 0.0 or total_err <= tol * total_abs:
            converged = True
            break
        if cl.shape[0] >= max_cells:
            break
        order = np.argsort(err_cell)[::-1]
        cum = np.cumsum(err_cell[order])
        # split the cells carrying the bulk of the error, at most 128 per pass
        nsplit = int(np.searchsorted(cum, 0.8 * total_err) + 1)
        nsplit = min(nsplit, 128, max_cells - cl.shape[0])
        nsplit = max(nsplit, 1)
        pick = order[:nsplit]
        keep = np.setdiff1d(np.arange(cl.shape[0]), pick, assume_unique=True)
        axis = np.argmax(ER[pick], axis=1)
        plo, phi = cl[pick], ch[pick]
        midp = 0.5 * (plo[np.arange(nsplit), axis] + phi[np.arange(nsplit), axis])
        alo, ahi = plo.copy(), phi.copy()
        ahi[np.arange(nsplit), axis] = midp
        blo2, bhi2 = plo.copy(), phi.copy()
        blo2[np.arange(nsplit), axis] = midp
        nlo = np.concatenate([alo, blo2])
        nhi = np.concatenate([ahi, bhi2])
        nIK, nIA, nER, top = rule.apply(f, nlo, nhi, shift)
        if top > shift + 30.0:
            scale_f = math.exp(shift - top)
            IK, IA, ER = IK * scale_f, IA * scale_f, ER * scale_f
            shift = top
            nIK, nIA, nER, _ = rule.apply(f, nlo, nhi, shift)
        cl = np.concatenate([cl[keep], nlo])
        ch = np.concatenate([ch[keep], nhi])
        IK = np.concatenate([IK[keep], nIK])
        IA = np.concatenate([IA[keep], nIA])
        ER = np.concatenate([ER[keep], nER])

    total = float(IK.sum())
    total_abs = float(IA.sum())
    total_err = float(ER.sum())
    if total_abs == 0.0:
        return CubatureResult(0, -math.inf, -math.inf, 0.0, f.n, True, cl.shape[0])
    sign = 0 if total == 0.0 else (1 if total > 0 else -1)
    log = shift + math.log(abs(total)) if sign else -math.inf
    return CubatureResult(sign, log, shift + math.log(total_abs), total_err / total_abs,
                          f.n, converged, cl.shape[0])
