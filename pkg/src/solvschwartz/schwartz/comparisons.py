"""Sampled two-sided comparisons between seminorm families.

Each check evaluates both sides of an inequality ``A(φ) ≤ C·B(φ)`` on a probe
set and reports the smallest constant ``C`` that works.  A comparison
*holds* when every ratio is finite and the fitted constant is at most
``cap``.  These are evidence for the equivalence of topologies, not proofs.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import InputError
from ..numerics import Box, halton_points, tensor_rule
from ..realization import Realization
from ..weights import CONSTANT_CAP, Weight
from .convolution import convolve
from .derivatives import multi_indices, word_derivative
from .functions import (CompactDecay, GaussianDecay, SmoothFunction, bump, gaussian,
                        oscillating_gaussian)
from .seminorms import (SeminormSpec, _exp, default_box, es_seminorm, seminorm, sup_table)

__all__ = [
    "Comparison",
    "fit_constant",
    "extended_probe_set",
    "lq_linf_comparison",
    "linf_lq_comparison",
    "side_comparison",
    "basis_comparison",
    "basis_word_derivative",
    "es_comparison",
    "convolution_continuity",
    "left_haar_integrability",
    "modular_eigenvalue_check",
    "truncation_tail_check",
]


@dataclass
class Comparison:
    """Fitted constant for ``lhs ≤ C·rhs`` over a probe set."""

    name: str
    constant: float
    holds: bool
    cap: float
    ratios: list[float] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["constant"] = self.constant if math.isfinite(self.constant) else str(self.constant)
        out["ratios"] = [x if math.isfinite(x) else str(x) for x in self.ratios]
        return out


def fit_constant(name: str, lhs: Sequence[float], rhs: Sequence[float],
                 labels: Sequence[str] = (), cap: float = CONSTANT_CAP,
                 details: dict | None = None) -> Comparison:
    """Smallest ``C`` with ``lhs_i ≤ C·rhs_i``; pairs with ``lhs = 0`` are skipped."""
    ratios = []
    for a, b in zip(lhs, rhs):
        if a == 0:
            ratios.append(0.0)
        elif b == 0 or not math.isfinite(b) or not math.isfinite(a):
            ratios.append(math.inf)
        else:
            ratios.append(a / b)
    c = max(ratios, default=0.0)
    return Comparison(name, c, bool(math.isfinite(c) and c <= cap), cap, ratios,
                      list(labels), details or {})


def extended_probe_set(r: Realization, n: int = 20, seed: int = 0) -> list[SmoothFunction]:
    """``n`` probes: Gaussians with assorted rates and centres, bumps and oscillations."""
    rng = np.random.default_rng(seed)
    m = r.dim
    out: list[SmoothFunction] = []
    i = 0
    while len(out) < n:
        kind = i % 4
        c = rng.uniform(-0.75, 0.75, m)
        if kind in (0, 1):
            rate = float(rng.choice([0.5, 1.0, 2.0]))
            out.append(gaussian(r, rate, center=c, label=f"gauss-{rate:g}@{i}"))
        elif kind == 2:
            out.append(bump(r, c, radius=float(rng.uniform(0.5, 1.5)), label=f"bump@{i}"))
        else:
            xi = rng.uniform(-2.0, 2.0, m)
            out.append(oscillating_gaussian(r, xi, float(rng.choice([0.5, 1.0])), f"osc@{i}"))
        i += 1
    return out


def _sup_values(r, w, f, alphas, ks, n_samples, seed, side="left", refine=True) -> dict:
    box = default_box(r, f, max(ks), max(sum(a) for a in alphas))
    t = sup_table(r, w, f, alphas, ks, box, n_samples, seed, refine, side)
    t.pop("_samples")
    return {key: _exp(v["log_value"]) for key, v in t.items()}


def lq_linf_comparison(r: Realization, w: Weight, probes: Sequence[SmoothFunction],
                       k: int, alpha: Sequence[int], p: int, budget: int = 40_000,
                       n_samples: int = 1024, seed: int = 0,
                       cap: float = CONSTANT_CAP) -> Comparison:
    """``‖φ‖¹_{k,α} ≤ C‖φ‖^∞_{k+p,α}`` with ``p`` the volume-compensation exponent."""
    alpha = tuple(int(a) for a in alpha)
    lhs, rhs, labels, tails = [], [], [], []
    for f in probes:
        l1 = seminorm(r, w, f, SeminormSpec(1, k, alpha), budget=budget, seed=seed)
        sup = _sup_values(r, w, f, [alpha], [k + p], n_samples, seed)[(k + p, alpha)]
        lhs.append(l1.value)
        rhs.append(sup)
        labels.append(f.label)
        tails.append(l1.tail_bound)
    return fit_constant(f"L1[k={k},a={list(alpha)}] <= C Linf[k={k + p}]", lhs, rhs, labels,
                        cap, {"p": p, "tail_bounds": tails})


def linf_lq_comparison(r: Realization, w: Weight, probes: Sequence[SmoothFunction],
                       k: int, alpha: Sequence[int], r_exp: int, s_exp: int,
                       budget: int = 20_000, n_samples: int = 1024, seed: int = 0,
                       cap: float = CONSTANT_CAP) -> Comparison:
    """``‖φ‖^∞_{k,α} ≤ C Σ_{|γ| ≤ m+|α|} ‖φ‖¹_{s(k+rm),γ}``.

    The order ``m + |α|`` is capped at the finite-difference limit; the
    truncation is recorded in ``details``.
    """
    alpha = tuple(int(a) for a in alpha)
    m = r.dim
    order = min(m + sum(alpha), 4)
    k1 = s_exp * (k + r_exp * m)
    gammas = multi_indices(m, order)
    lhs, rhs, labels = [], [], []
    for f in probes:
        sup = _sup_values(r, w, f, [alpha], [k], n_samples, seed)[(k, alpha)]
        total = 0.0
        for g in gammas:
            total += seminorm(r, w, f, SeminormSpec(1, k1, g), budget=budget, seed=seed).value
        lhs.append(sup)
        rhs.append(total)
        labels.append(f.label)
    return fit_constant(f"Linf[k={k},a={list(alpha)}] <= C sum L1[k={k1},|g|<={order}]",
                        lhs, rhs, labels, cap,
                        {"r": r_exp, "s": s_exp, "order": order,
                         "order_capped": order < m + sum(alpha)})


def side_comparison(r: Realization, w: Weight, probes: Sequence[SmoothFunction],
                    k_max: int = 2, alpha_max: int = 2, n_samples: int = 1024, seed: int = 0,
                    cap: float = CONSTANT_CAP) -> dict:
    """Right- versus left-invariant sup-seminorms, both directions.

    Since ``X̃_j φ(g) = Σ_l (Ad(g⁻¹)X_j)_l X_l φ(g)`` and ``‖Ad(g^{±1})‖ ≤ σ(g)``,
    ``‖φ‖~_{k,α} ≤ C Σ_{|β|≤|α|} ‖φ‖_{k+|α|,β}`` and symmetrically.
    """
    alphas = multi_indices(r.dim, alpha_max, 1)
    all_alphas = multi_indices(r.dim, alpha_max)
    ks = list(range(k_max + alpha_max + 1))
    rows = {"right<=left": ([], [], []), "left<=right": ([], [], [])}
    for f in probes:
        left = _sup_values(r, w, f, all_alphas, ks, n_samples, seed, "left")
        right = _sup_values(r, w, f, all_alphas, ks, n_samples, seed, "right")
        for a in alphas:
            lower = [b for b in all_alphas if sum(b) <= sum(a)]
            for k in range(k_max + 1):
                kk = k + sum(a)
                for key, (x, y) in (("right<=left", (right, left)), ("left<=right", (left, right))):
                    rows[key][0].append(x[(k, a)])
                    rows[key][1].append(sum(y[(kk, b)] for b in lower))
                    rows[key][2].append(f"{f.label}:k={k},a={list(a)}")
    out = {key: fit_constant(key, *vals, cap=cap) for key, vals in rows.items()}
    out["holds"] = all(c.holds for c in out.values() if isinstance(c, Comparison))
    return out


def basis_word_derivative(r: Realization, f: Callable, basis: np.ndarray, word: Sequence[int],
                          g: np.ndarray) -> np.ndarray:
    """``Y_{w_1} ⋯ Y_{w_n} f`` for left-invariant fields ``Y_j = Σ_l basis[l, j] X_l``.

    Expanded exactly into words of the adapted basis.
    """
    basis = np.asarray(basis, float)
    total = 0.0
    for letters in np.ndindex(*([r.dim] * len(word))):
        coef = float(np.prod([basis[l, j] for l, j in zip(letters, word)]))
        if coef != 0.0:
            total = total + coef * word_derivative(r, f, letters, g)
    return total


def basis_comparison(r: Realization, w: Weight, probes: Sequence[SmoothFunction],
                     k: int = 1, alpha_max: int = 2, seed: int = 0, n_samples: int = 1024,
                     cap: float = CONSTANT_CAP) -> dict:
    """Seminorms for a random second basis against those of the adapted basis.

    Both directions use ``Σ_{|β|=|α|}`` on the other side; the constant is
    governed by the change-of-basis matrix and its inverse.
    """
    rng = np.random.default_rng(seed)
    m = r.dim
    while True:
        basis = np.eye(m) + 0.5 * rng.standard_normal((m, m))
        if np.linalg.cond(basis) < 10:
            break
    alphas = multi_indices(m, alpha_max, 1)
    rows = {"new<=adapted": ([], [], []), "adapted<=new": ([], [], [])}
    for f in probes:
        box = default_box(r, f, k, alpha_max)
        pts = np.vstack([np.asarray(box.center)[None, :],
                         halton_points(m, n_samples, seed + 7, box.lower, box.upper)])
        sk = np.exp(k * w.log(pts))
        old = {a: np.max(sk * np.abs(word_derivative(r, f, _word(a), pts))) for a in alphas}
        new = {a: np.max(sk * np.abs(basis_word_derivative(r, f, basis, _word(a), pts)))
               for a in alphas}
        for a in alphas:
            same = [b for b in alphas if sum(b) == sum(a)]
            for key, (x, y) in (("new<=adapted", (new, old)), ("adapted<=new", (old, new))):
                rows[key][0].append(x[a])
                rows[key][1].append(sum(y[b] for b in same))
                rows[key][2].append(f"{f.label}:a={list(a)}")
    out = {key: fit_constant(key, *vals, cap=cap) for key, vals in rows.items()}
    out["basis"] = basis.tolist()
    out["holds"] = all(c.holds for c in out.values() if isinstance(c, Comparison))
    return out


def _word(alpha):
    return tuple(i for i, a in enumerate(alpha) for _ in range(a))


def es_comparison(r: Realization, w: Weight, probes: Sequence[SmoothFunction],
                  k_max: int = 2, alpha_max: int = 1, n_samples: int = 1024, seed: int = 0,
                  cap: float = CONSTANT_CAP) -> dict:
    """Two-sided sampled bounds between ``ℰ𝒮`` seminorms and ``𝒮_σ`` seminorms.

    Forward: ``‖φ‖^∞_{k,α} ≤ C Σ_{|β|≤|α|} es_{ρ,j,β}(φ)`` with ``ρ = c(k+|α|)``,
    ``j = k`` where ``c`` bounds the exponential growth rate of σ.
    Reverse: ``es_{ρ,j,α}(φ) ≤ C Σ_{|β|≤|α|} ‖φ‖^∞_{K,β}`` with ``K = ⌈ρ⌉ + j + |α|``.
    Coordinate derivatives are combinations of left-invariant ones with
    coefficients of size ``e^{c|t|}`` (and vice versa), which the index shifts absorb.
    """
    from .functions import weight_growth_rate

    c = max(weight_growth_rate(r), 1.0)
    alphas = multi_indices(r.dim, alpha_max)
    fwd, rev = ([], [], []), ([], [], [])
    for f in probes:
        lower = {a: [b for b in alphas if sum(b) <= sum(a)] for a in alphas}
        ks = list(range(k_max + 1))
        k_rev = [math.ceil(c * k) + k + alpha_max for k in ks]
        sup = _sup_values(r, w, f, alphas, sorted(set(ks) | set(k_rev)), n_samples, seed)
        es_cache: dict = {}

        def es(rho, j, b):
            key = (rho, j, b)
            if key not in es_cache:
                # es seminorms may grow at most like e^{ρ|t|}|n|^j on top of the decay
                box = default_box(r, f, int(math.ceil(rho)) + j, sum(b))
                es_cache[key] = es_seminorm(r, f, rho, j, b, box, n_samples, seed).value
            return es_cache[key]

        for a in alphas:
            for k in ks:
                rho = c * (k + sum(a))
                fwd[0].append(sup[(k, a)])
                fwd[1].append(sum(es(rho, jj, b) for b in lower[a] for jj in range(k + 1)))
                fwd[2].append(f"{f.label}:k={k},a={list(a)}")
                rho_k = c * k
                rev[0].append(es(rho_k, k, a))
                rev[1].append(sum(sup[(math.ceil(rho_k) + k + alpha_max, b)] for b in lower[a]))
                rev[2].append(f"{f.label}:rho={rho_k:g},j={k},a={list(a)}")
    out = {"sigma<=es": fit_constant("sigma<=es", *fwd, cap=cap),
           "es<=sigma": fit_constant("es<=sigma", *rev, cap=cap), "rate": c}
    out["holds"] = out["sigma<=es"].holds and out["es<=sigma"].holds
    return out


def convolution_continuity(r: Realization, w: Weight, pairs: Sequence[tuple[SmoothFunction, SmoothFunction]],
                           k: int, s: int, p: int, n_points: int = 64, seed: int = 0,
                           cap: float = CONSTANT_CAP) -> Comparison:
    """``‖φ∗ψ‖^∞_{k,0} ≤ C‖φ‖^∞_{ks,0}‖ψ‖^∞_{ks+p,0}``, the sup of ``φ∗ψ`` sampled."""
    zero = (0,) * r.dim
    lhs, rhs, labels = [], [], []
    for phi, psi in pairs:
        box = Box(tuple(np.asarray(phi.box().half_widths) + np.asarray(psi.box().half_widths)))
        pts = np.vstack([np.zeros((1, r.dim)),
                         halton_points(r.dim, n_points, seed, 0.5 * box.lower, 0.5 * box.upper)])
        conv = np.abs(convolve(r, phi, psi, pts).values)
        lhs.append(float(np.max(np.exp(k * w.log(pts)) * conv)))
        a = _sup_values(r, w, phi, [zero], [k * s], 1024, seed)[(k * s, zero)]
        b = _sup_values(r, w, psi, [zero], [k * s + p], 1024, seed)[(k * s + p, zero)]
        rhs.append(a * b)
        labels.append(f"{phi.label}*{psi.label}")
    return fit_constant(f"conv k={k}", lhs, rhs, labels, cap, {"s": s, "p": p})


def left_haar_integrability(r: Realization, f: SmoothFunction, scales: Sequence[float] = (1.0, 1.5),
                            budget: int = 60_000, rel_tol: float = 1e-3) -> dict:
    """``∫|φ| δ⁻¹ dg`` at growing boxes; converged when the relative change is below ``rel_tol``."""
    from .seminorms import _quad_layout

    values = []
    for s in scales:
        box = f.box(scale=s, weight_rate=_modular_rate(r))
        qbox = _quad_layout(box, f, 1.0, budget)
        acc = 0.0
        for pts, wts in tensor_rule([qbox.axis_rule(i) for i in range(r.dim)]):
            acc += float(np.sum(np.abs(f(pts)) / r.modular(pts) * wts))
        values.append(acc)
    rel = abs(values[-1] - values[0]) / max(abs(values[-1]), 1e-300)
    return {"values": values, "relative_change": rel,
            "converged": bool(math.isfinite(values[-1]) and rel < rel_tol)}


def _modular_rate(r: Realization) -> float:
    return float(sum(abs(np.trace(r.adapted.ad(np.eye(r.dim)[i]))) for i in range(r.k)))


def modular_eigenvalue_check(r: Realization, alpha: Sequence[int], samples: np.ndarray,
                             tol: float = 1e-5) -> dict:
    """``X^α δ = λ_α δ`` with ``λ_α = Π_j tr(ad X_j)^{α_j}``, checked at samples.

    ``λ_α`` is also extracted numerically at the identity and compared.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != r.dim:
        raise InputError(f"alpha must have length {r.dim}")
    traces = [float(np.trace(r.adapted.ad(np.eye(r.dim)[j]))) for j in range(r.dim)]
    lam = float(np.prod([tr ** a for tr, a in zip(traces, alpha)]))
    word = _word(alpha)
    lam_e = float(word_derivative(r, r.modular, word, r.identity()))
    samples = np.atleast_2d(samples)
    lhs = word_derivative(r, r.modular, word, samples)
    rhs = lam * r.modular(samples)
    err = float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1.0)))
    return {"alpha": list(alpha), "lambda": lam, "lambda_at_identity": lam_e,
            "max_relative_error": err, "ok": bool(err < tol and abs(lam_e - lam) < tol)}


def truncation_tail_check(r: Realization, w: Weight, f: SmoothFunction, l: float, k: int = 0,
                          budget: int = 60_000) -> dict:
    """``‖f − f·1_box‖¹_{k,0} ≤ (1+l)⁻¹‖f‖¹_{k+1,0}`` for the box of half-width ``l``.

    Outside the box ``σ(g) ≥ 1 + |g|_∞ > 1 + l``, which gives the inequality.
    """
    from .seminorms import _quad_layout

    box = default_box(r, f, k + 1, 0)
    qbox = _quad_layout(box, f, 1.0, budget)
    trunc = Box.cube(r.dim, float(l))
    outside = 0.0
    full = 0.0
    for pts, wts in tensor_rule([qbox.axis_rule(i) for i in range(r.dim)]):
        ls = w.log(pts)
        a = np.abs(f(pts))
        out = ~trunc.contains(pts)
        outside += float(np.sum((np.exp(k * ls) * a * wts)[out]))
        full += float(np.sum(np.exp((k + 1) * ls) * a * wts))
    bound = full / (1.0 + l)
    return {"lhs": outside, "rhs": bound, "ok": bool(outside <= bound * (1 + 1e-9))}
