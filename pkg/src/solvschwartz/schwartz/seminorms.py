"""Weighted seminorms ``‖σ^k X^α φ‖_{L^q}`` and the membership diagnostic.

Sup-seminorms are sampled maxima over nested scrambled Halton clouds followed
by a Nelder–Mead refinement from the best sample.  Finite-``q`` seminorms use
tensor Gauss–Legendre quadrature on the decay box, with an envelope-based
estimate of the mass outside the box.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erfcx

from ..errors import InputError, RefusalError
from ..numerics import Box, MAX_FD_ORDER, batched_nelder_mead, halton_points, tensor_rule
from ..realization import Realization
from ..weights import Weight
from .derivatives import coordinate_derivative, multi_indices, word_derivative, word_from_alpha
from .functions import CompactDecay, GaussianDecay, SmoothFunction, weight_growth_rate

__all__ = [
    "SeminormSpec",
    "SeminormResult",
    "seminorm",
    "default_box",
    "sup_table",
    "membership_report",
    "es_seminorm",
    "is_exponential",
    "STABILITY_TOL",
]

STABILITY_TOL = 0.05
FLAG_RATIO = 1e-6
_LOG_TINY = -1.0e300


@dataclass(frozen=True)
class SeminormSpec:
    """``(q, k, α)`` of the seminorm ``‖σ^k X^α φ‖_{L^q}``."""

    q: float
    k: int
    alpha: tuple[int, ...]

    def __post_init__(self):
        q = float(self.q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "alpha", tuple(int(a) for a in self.alpha))
        if not (q >= 1.0):
            raise InputError(f"q must satisfy 1 <= q <= inf, got {q}")
        if self.k < 0:
            raise InputError("k must be nonnegative")
        if any(a < 0 for a in self.alpha) or sum(self.alpha) > MAX_FD_ORDER:
            raise InputError(f"|alpha| must lie in 0..{MAX_FD_ORDER}: {self.alpha}")

    @property
    def order(self) -> int:
        return sum(self.alpha)


@dataclass
class SeminormResult:
    """Seminorm value with its truncation estimate.

    ``flagged`` is set when the tail estimate exceeds ``1e-6`` of the value
    or cannot be computed.
    """

    value: float
    tail_bound: float
    flagged: bool
    method: str
    box: dict
    nodes: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("value", "tail_bound"):
            if not math.isfinite(out[key]):
                out[key] = str(out[key])
        return out


def _box_dict(box: Box) -> dict:
    return {"center": list(box.center), "half_widths": list(box.half_widths)}


def default_box(r: Realization, f: SmoothFunction, k: int, order: int,
                scale: float = 1.0, points: int = 16) -> Box:
    """Decay box wide enough for ``σ^k`` and ``order`` derivatives.

    On exponential directions ``σ^k`` grows like ``e^{ck|t|}`` and each left
    derivative can contribute another ``e^{c|t|}``; polynomial growth of
    degree about ``(k + order)(class + 1)`` is allowed for.
    """
    c = weight_growth_rate(r)
    poly = (k + order) * (r.n_class + 1)
    return f.box(scale=scale, weight_rate=c * (k + order), poly=poly, points=points)


def _log_abs(v: np.ndarray) -> np.ndarray:
    a = np.abs(v)
    with np.errstate(divide="ignore"):
        out = np.log(a)
    return np.where(a > 0, out, _LOG_TINY)


def _faces(box: Box, n: int, seed: int) -> np.ndarray:
    """Halton samples on every face of ``box``."""
    pts = []
    m = box.dim
    for axis in range(m):
        for side, val in ((0, box.lower[axis]), (1, box.upper[axis])):
            if m == 1:
                pts.append(np.array([[val]]))
                continue
            others = [i for i in range(m) if i != axis]
            u = halton_points(m - 1, n, seed + 2 * axis + side, box.lower[others],
                              box.upper[others])
            p = np.empty((n, m))
            p[:, others] = u
            p[:, axis] = val
            pts.append(p)
    return np.vstack(pts)


def _nested_samples(box: Box, n: int, seed: int, fractions=(0.125, 0.25, 0.5, 1.0)) -> np.ndarray:
    c = np.asarray(box.center)
    hw = np.asarray(box.half_widths)
    clouds = [halton_points(box.dim, n, seed + i, c - fr * hw, c + fr * hw)
              for i, fr in enumerate(fractions)]
    return np.vstack([c[None, :]] + clouds)


def sup_table(r: Realization, w: Weight, f: SmoothFunction, alphas: Sequence[tuple[int, ...]],
              ks: Sequence[int], box: Box, n_samples: int = 1024, seed: int = 0,
              refine: bool = True, side: str = "left", extra_points: np.ndarray | None = None,
              maxiter: int | None = None, inner: Box | None = None) -> dict:
    """``log sup |σ^k X^α f|`` for every ``(k, α)`` on a shared sample set.

    Returns a dict keyed by ``(k, α)`` with entries ``{"log_value", "argmax",
    "boundary_log"}``.  All values are natural logarithms so that
    exponentially large weights never overflow.  With ``inner`` each entry
    also carries ``inner_log_value``, the best value found inside that
    sub-box (samples and refined point alike).
    """
    pts = _nested_samples(box, n_samples, seed)
    if extra_points is not None and len(extra_points):
        pts = np.vstack([pts, extra_points[box.contains(extra_points, 1e-12)]])
    faces = _faces(box, max(16, n_samples // 16), seed + 97)
    log_sig = w.log(pts)
    log_sig_face = w.log(faces)
    words = {a: word_from_alpha(a) for a in alphas}
    log_d = {a: _log_abs(word_derivative(r, f, words[a], pts, side)) for a in alphas}
    log_face = {a: _log_abs(word_derivative(r, f, words[a], faces, side)) for a in alphas}

    problems = [(k, a) for a in alphas for k in ks]
    x0 = np.empty((len(problems), r.dim))
    best = np.empty(len(problems))
    inside = inner.contains(pts, 1e-12) if inner is not None else None
    inner_best = np.full(len(problems), _LOG_TINY)
    for i, (k, a) in enumerate(problems):
        vals = k * log_sig + log_d[a]
        j = int(np.argmax(vals))
        x0[i], best[i] = pts[j], vals[j]
        if inside is not None and inside.any():
            inner_best[i] = float(np.max(vals[inside]))
    if refine and problems:
        ks_arr = np.array([k for k, _ in problems], float)
        alpha_of = [a for _, a in problems]

        def objective(x, idx):
            out = np.empty(len(idx))
            ls = w.log(x)
            for a in set(alpha_of[i] for i in idx):
                sel = np.flatnonzero([alpha_of[i] == a for i in idx])
                out[sel] = ks_arr[idx[sel]] * ls[sel] + _log_abs(
                    word_derivative(r, f, words[a], x[sel], side))
            return -np.where(np.isfinite(out), out, _LOG_TINY)

        spacing = np.asarray(box.half_widths) / max(n_samples, 1) ** (1.0 / r.dim)
        xs, fv = batched_nelder_mead(objective, x0, spacing, box.lower, box.upper,
                                     maxiter=maxiter or 40 * r.dim)
        improved = -fv > best
        x0[improved] = xs[improved]
        best = np.maximum(best, -fv)
        if inner is not None:
            hit = inner.contains(xs, 1e-12)
            inner_best[hit] = np.maximum(inner_best[hit], -fv[hit])
    out = {}
    for i, (k, a) in enumerate(problems):
        bnd = float(np.max(k * log_sig_face + log_face[a]))
        out[(k, a)] = {"log_value": float(best[i]), "argmax": x0[i].tolist(),
                       "boundary_log": bnd}
        if inner is not None:
            out[(k, a)]["inner_log_value"] = float(inner_best[i])
    out["_samples"] = pts
    return out


def _exp(x: float) -> float:
    if x <= _LOG_TINY / 2:
        return 0.0
    return math.exp(x) if x < 709.0 else math.inf


def _sup_seminorm(r, w, f, spec, box, n_samples, seed, refine, side) -> SeminormResult:
    table = sup_table(r, w, f, [spec.alpha], [spec.k], box, n_samples, seed, refine, side)
    entry = table[(spec.k, spec.alpha)]
    value = _exp(entry["log_value"])
    bound = _exp(entry["boundary_log"])
    flagged = bool(value > 0 and bound > FLAG_RATIO * value) or not math.isfinite(value)
    return SeminormResult(value, bound, flagged, "sampled-max+nelder-mead", _box_dict(box),
                          len(table["_samples"]),
                          {"argmax": entry["argmax"], "log_value": entry["log_value"]})


def _quad_layout(box: Box, f: SmoothFunction, q: float, budget: int) -> Box:
    """Panels sized to the Gaussian width (or the bump radius)."""
    m = box.dim
    decay = f.decay
    if isinstance(decay, GaussianDecay):
        a = max(decay.rates) * q if max(decay.rates) > 0 else 0.25
        width = 2.0 / math.sqrt(a)
    elif isinstance(decay, CompactDecay):
        width = min(decay.half_widths) / 2.0
    else:
        width = 1.0
    points = 8
    per_axis_cap = max(points, int(budget ** (1.0 / m)))
    panels = max(1, math.ceil(max(box.half_widths) / width))
    panels = min(panels * {1: 4, 2: 2}.get(m, 1), max(1, per_axis_cap // (2 * points)))
    return Box(box.half_widths, points=points, center=box.center, panels=panels)


def _gaussian_tail(box: Box, face_max: float, rates: Sequence[float]) -> float:
    """``B·Σ_faces area·∫_R^∞ e^{-a(x²-R²)}dx`` with ``B`` the largest face value."""
    hw = np.asarray(box.half_widths)
    c = np.abs(np.asarray(box.center))
    total = 0.0
    for i, a in enumerate(rates):
        if a <= 0:
            return math.inf
        area = float(np.prod(np.delete(2 * hw, i))) if len(hw) > 1 else 1.0
        reach = hw[i] - c[i]
        total += 2 * area * math.sqrt(math.pi) / (2 * math.sqrt(a)) * erfcx(math.sqrt(a) * max(reach, 0))
    return face_max * total


def _lq_seminorm(r, w, f, spec, box, side, budget, seed) -> SeminormResult:
    q = spec.q
    qbox = _quad_layout(box, f, q, budget)
    word = word_from_alpha(spec.alpha)
    rules = [qbox.axis_rule(i) for i in range(qbox.dim)]
    acc, nodes = [], 0
    for pts, wts in tensor_rule(rules, chunk=1 << 14):
        lv = spec.k * w.log(pts) + _log_abs(word_derivative(r, f, word, pts, side))
        acc.append(np.sum(np.exp(q * np.minimum(lv, 700.0 / q)) * wts))
        nodes += len(wts)
    integral = math.fsum(acc)
    value = integral ** (1.0 / q)
    # tail of |σ^k X^α f|^q beyond the box, from face samples and the decay class
    decay = f.decay
    if isinstance(decay, CompactDecay):
        tail_int = decay.tail_mass(box)
    elif isinstance(decay, GaussianDecay):
        faces = _faces(box, 64, seed + 5)
        lv = spec.k * w.log(faces) + _log_abs(word_derivative(r, f, word, faces, side))
        tail_int = _gaussian_tail(box, float(np.exp(q * np.max(lv))),
                                  [q * a for a in decay.rates])
    else:
        tail_int = math.inf
    # |(I + T)^{1/q} - I^{1/q}| <= T^{1/q} (concavity); use the sharper derivative bound when tiny
    if math.isfinite(tail_int):
        if integral > 0:
            tail = min(tail_int ** (1.0 / q), value * ((1 + tail_int / integral) ** (1.0 / q) - 1))
        else:
            tail = tail_int ** (1.0 / q)
    else:
        tail = math.inf
    flagged = (not math.isfinite(tail)) or (value > 0 and tail > FLAG_RATIO * value)
    return SeminormResult(value, float(tail), bool(flagged), "gauss-legendre", _box_dict(qbox),
                          nodes, {"integral": integral, "panels": qbox.panels})


def seminorm(r: Realization, w: Weight, f: SmoothFunction, spec: SeminormSpec,
             box: Box | None = None, side: str = "left", n_samples: int = 2048,
             seed: int = 0, refine: bool = True, budget: int = 200_000,
             grow: int = 2) -> SeminormResult:
    """``‖σ^k X^α f‖_{L^q(G)}`` (``X̃`` when ``side="right"``).

    When no box is given the decay box is used, and it is enlarged by 1.5
    up to ``grow`` times while the tail estimate is flagged.
    """
    if len(spec.alpha) != r.dim:
        raise InputError(f"alpha must have length {r.dim}")
    if f.decay is None and box is None:
        raise RefusalError(f"{f.label}: no decay metadata and no box; cannot bound the tail")
    auto = box is None
    box = default_box(r, f, spec.k, spec.order) if auto else box
    for attempt in range(grow + 1):
        if math.isinf(spec.q):
            res = _sup_seminorm(r, w, f, spec, box, n_samples, seed, refine, side)
        else:
            res = _lq_seminorm(r, w, f, spec, box, side, budget, seed)
        if not (auto and res.flagged and attempt < grow):
            break
        box = box.scaled(1.5)
    res.details["spec"] = {"q": spec.q if math.isfinite(spec.q) else "inf", "k": spec.k,
                           "alpha": list(spec.alpha)}
    return res


def membership_report(r: Realization, w: Weight, f: SmoothFunction, k_max: int = 6,
                      alpha_max: int = 3, box: Box | None = None,
                      scales: Sequence[float] = (1.0, 1.5), n_samples: int = 1024,
                      seed: int = 0, refine: bool = True) -> dict:
    """Sup-seminorm table at two box scales and a stabilization verdict.

    The larger-scale sample set contains the smaller one and its refined
    maxima, and the smaller box's value is the best found anywhere inside
    it.  Sampled maxima are therefore monotone in the box, and their change
    measures only what lies between the boxes.  A seminorm is *stable* if it
    changes by less than 5% (relative) between scales.  The verdict is "consistent with
    membership" iff every entry is finite and stable.
    """
    alphas = multi_indices(r.dim, alpha_max)
    ks = list(range(k_max + 1))
    base = box if box is not None else default_box(r, f, k_max, alpha_max)
    boxes = [base.scaled(s) for s in scales]
    tables, prev = [], None
    for i, b in enumerate(boxes):
        inner = boxes[i - 1] if i else None
        t = sup_table(r, w, f, alphas, ks, b, n_samples, seed + 1000 * i, refine,
                      extra_points=prev, inner=inner)
        # carry samples and refined maxima forward so larger boxes see them too
        prev = np.vstack([t.pop("_samples")] + [np.array([v["argmax"] for v in t.values()])])
        tables.append(t)
    rows = []
    stable_all = True
    for a in alphas:
        for k in ks:
            logs = [t[(k, a)]["log_value"] for t in tables]
            # each box's value uses everything found inside it, so the change
            # between scales only reflects the shell between the boxes
            for i in range(len(tables) - 1):
                logs[i] = max(logs[i], tables[i + 1][(k, a)]["inner_log_value"])
            v0, v1 = logs[0], logs[-1]
            if v1 <= _LOG_TINY / 2 and v0 <= _LOG_TINY / 2:
                rel = 0.0
            else:
                rel = float(math.expm1(abs(v1 - v0))) if math.isfinite(v1 - v0) else math.inf
            stable = rel < STABILITY_TOL and v1 < 700.0
            stable_all &= stable
            rows.append({
                "k": k, "alpha": list(a),
                "values": [_exp(v) for v in logs],
                "log_values": [v if v > _LOG_TINY / 2 else None for v in logs],
                "relative_change": rel,
                "stable": bool(stable),
            })
    return {
        "function": f.label,
        "group": r.name,
        "k_max": k_max,
        "alpha_max": alpha_max,
        "scales": list(scales),
        "box": _box_dict(base),
        "table": rows,
        "n_unstable": sum(not row["stable"] for row in rows),
        "verdict": "consistent with membership" if stable_all else "not a member",
        "member": bool(stable_all),
    }


# ---------------------------------------------------------------------------
# exponential-group seminorms


def is_exponential(r: Realization, tol: float = 1e-9) -> bool:
    """No ``ad T_i`` on the complement basis has purely imaginary nonzero eigenvalues."""
    for i in range(r.k):
        ev = np.linalg.eigvals(r.adapted.ad(np.eye(r.dim)[i]))
        if np.any((np.abs(ev.real) <= tol) & (np.abs(ev.imag) > tol)):
            return False
    return True


def es_seminorm(r: Realization, f: SmoothFunction, rho: float, j: int,
                alpha: Sequence[int], box: Box | None = None, n_samples: int = 2048,
                seed: int = 0, refine: bool = True) -> SeminormResult:
    """``sup |e^{ρ|t|} |n|^j ∂^α f(t, n)|`` with Euclidean coordinate derivatives.

    Raises
    ------
    RefusalError
        If the group is not exponential.
    """
    if not is_exponential(r):
        raise RefusalError(f"{r.name}: ad has purely imaginary eigenvalues; "
                           "the exponential-decay seminorms do not apply")
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != r.dim:
        raise InputError(f"alpha must have length {r.dim}")
    if box is None:
        box = f.box(weight_rate=rho, poly=j + sum(alpha))

    def log_h(x):
        t, n = r.split(x)
        with np.errstate(divide="ignore"):
            ln = np.log(np.linalg.norm(n, axis=-1)) if j else 0.0
        lv = rho * np.linalg.norm(t, axis=-1) + j * ln + _log_abs(coordinate_derivative(f, alpha, x))
        return np.where(np.isfinite(lv), lv, _LOG_TINY)

    pts = _nested_samples(box, n_samples, seed)
    vals = log_h(pts)
    i = int(np.argmax(vals))
    best_x, best = pts[i], float(vals[i])
    if refine:
        spacing = np.asarray(box.half_widths) / n_samples ** (1.0 / r.dim)
        xs, fv = batched_nelder_mead(lambda x, idx: -log_h(x), best_x[None, :], spacing,
                                     box.lower, box.upper, maxiter=40 * r.dim)
        if -fv[0] > best:
            best_x, best = xs[0], float(-fv[0])
    faces = _faces(box, max(16, n_samples // 16), seed + 97)
    bound = _exp(float(np.max(log_h(faces))))
    value = _exp(best)
    flagged = bool(value > 0 and bound > FLAG_RATIO * value)
    return SeminormResult(value, bound, flagged, "sampled-max+nelder-mead", _box_dict(box),
                          len(pts), {"rho": rho, "j": j, "alpha": list(alpha),
                                     "argmax": np.asarray(best_x).tolist()})
