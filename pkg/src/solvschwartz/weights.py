"""The weight function σ and sampled checks of its four structural properties.

``σ(g) = max(‖Ad g‖, ‖Ad g⁻¹‖) · (1 + |t| + |n|)`` where the word lengths of
the group and of the nilradical are replaced by Euclidean norms of the
coordinates.  The two choices are mutually polynomially bounded, so they
define the same rapidly decreasing functions; every exponent below is fitted
rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import CheckFailed, InputError
from .numerics import Box, operator_norm, tensor_rule
from .realization import Realization

__all__ = [
    "Weight",
    "PowerFit",
    "fit_power_bound",
    "sample_box",
    "sigma",
    "check_volume_compensation",
    "check_modular_domination",
    "check_inverse_equivalence",
    "check_subpolynomial",
    "fit_length_exponents",
    "compare_to_euclidean",
    "property_report",
    "SAMPLE_SCALES",
    "CONSTANT_CAP",
]

SAMPLE_SCALES = (1.0, 8.0, 64.0)
CONSTANT_CAP = 1.0e3
MAX_EXPONENT = 64
_ROUNDING = 4.0 * np.finfo(float).eps


@dataclass(frozen=True)
class PowerFit:
    """Result of fitting ``lhs ≤ C · base^exponent`` on samples."""

    exponent: int
    constant: float
    ok: bool
    n_samples: int
    cap: float = CONSTANT_CAP

    def to_dict(self) -> dict:
        return asdict(self)


def fit_power_bound(lhs: np.ndarray, base: np.ndarray, cap: float = CONSTANT_CAP,
                    min_exponent: int = 1, max_exponent: int = MAX_EXPONENT) -> PowerFit:
    """Minimal integer ``e`` with ``lhs ≤ C·base^e`` on every sample, ``C ≤ cap``.

    ``C`` is the sample maximum of ``lhs / base^e`` (max-based, so adding
    samples never lowers the fitted exponent).  Both arrays must be positive;
    ``base`` must be at least 1.
    """
    lhs = np.asarray(lhs, float).ravel()
    base = np.asarray(base, float).ravel()
    if lhs.shape != base.shape:
        raise InputError("lhs and base must have the same number of samples")
    if lhs.size == 0:
        raise InputError("no samples to fit")
    if np.any(lhs <= 0) or np.any(base < 1.0 - 1e-12):
        raise InputError("fit needs lhs > 0 and base >= 1")
    la, lb = np.log(lhs), np.log(np.maximum(base, 1.0))
    logcap = math.log(cap)
    for e in range(min_exponent, max_exponent + 1):
        lc = float(np.max(la - e * lb))
        if lc <= logcap:
            return PowerFit(e, math.exp(lc), True, lhs.size, cap)
    lc = float(np.max(la - max_exponent * lb))
    return PowerFit(max_exponent, math.exp(min(lc, 700.0)), False, lhs.size, cap)


def sample_box(r: Realization, half_width: float, n: int, seed: int = 0) -> np.ndarray:
    """Seeded uniform samples from the coordinate cube ``[-h, h]^m``."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-half_width, half_width, (n, r.dim))


@dataclass(eq=False)
class Weight:
    """The weight function of a realization.

    ``length_surrogate`` records that the word-length factor
    ``1 + |g|_G + |n|_N`` is evaluated as ``1 + |t| + |n|`` (Euclidean).
    ``fits`` caches exponent fits computed by the property checks.
    """

    realization: Realization
    length_surrogate: str = "euclidean: 1+|t|+|n|"
    fits: dict = field(default_factory=dict)

    def __call__(self, g: np.ndarray) -> np.ndarray:
        return sigma(self, g)

    def ad_factor(self, g: np.ndarray) -> np.ndarray:
        """``max(‖Ad g‖, ‖Ad g⁻¹‖)`` (spectral norms in the adapted basis)."""
        ad, ad_inv = self.realization.adjoint_pair(np.asarray(g, float))
        return np.maximum(operator_norm(ad), operator_norm(ad_inv))

    def length_factor(self, g: np.ndarray) -> np.ndarray:
        t, n = self.realization.split(np.asarray(g, float))
        return 1.0 + np.linalg.norm(t, axis=-1) + np.linalg.norm(n, axis=-1)

    def log(self, g: np.ndarray) -> np.ndarray:
        """``log σ``; points where ``Ad`` overflows double precision map to ``+inf``."""
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.log(self.ad_factor(g)) + np.log(self.length_factor(g))
        return np.where(np.isfinite(out), out, np.inf)


def sigma(w: Weight, g: np.ndarray) -> np.ndarray:
    """``σ(g) = max(‖Ad g‖, ‖Ad g⁻¹‖)·(1 + |t| + |n|)``, always at least 1."""
    g = np.asarray(g, float)
    val = w.ad_factor(g) * w.length_factor(g)
    # ‖A‖·‖A⁻¹‖ ≥ 1 forces the Ad factor to be at least 1
    if np.any(val < 1.0 - 1e-12):
        raise CheckFailed("σ < 1 encountered", np.asarray(g)[np.argmin(val)].tolist())
    return val


# ---------------------------------------------------------------------------
# Property 1: volume compensation


def fit_length_exponents(w: Weight, scales: Sequence[float] = SAMPLE_SCALES,
                         n: int = 2000, seed: int = 0) -> dict:
    """Fit the integer exponents that enter the sufficient volume exponent.

    ``q``: minimal integer with ``1 + |g| ≤ C σ(g)^q`` (the surrogate length
    factor already gives ``q = 1`` with ``C = 1``).
    ``q_prime``: minimal integer with ``‖Ad(n)|_𝔫‖ ≤ C (1 + |n|)^{q'}``.
    """
    r = w.realization
    g = np.concatenate([sample_box(r, s, n, seed + i) for i, s in enumerate(scales)])
    length = 1.0 + np.linalg.norm(g, axis=-1)
    q = fit_power_bound(length, w(g))
    out = {"q": q.to_dict()}
    if r.d:
        n_only = g.copy()
        n_only[:, : r.k] = 0.0
        ad = r.adjoint(n_only)[:, r.k:, r.k:]
        qp = fit_power_bound(operator_norm(ad), 1.0 + np.linalg.norm(n_only, axis=-1),
                             min_exponent=0)
        out["q_prime"] = qp.to_dict()
    return out


def check_volume_compensation(w: Weight, p: float, levels: int | None = None,
                              points: int | None = None, ratio_threshold: float = 0.85) -> dict:
    """Partial integrals of ``σ^{-p}`` over nested cubes of half-width ``2^j``.

    The integrand is evaluated once on a geometrically graded tensor grid
    whose breakpoints coincide with the nested cube boundaries, and the
    increments ``I_j = ∫_{cube_j \\ cube_{j-1}} σ^{-p}`` are read off by
    sorting nodes into shells.  The verdict is *convergent* when the last
    three increment ratios are all below ``ratio_threshold`` (geometric
    decay) or the increments have fallen below rounding of the total.
    """
    if p < 0:
        raise InputError("p must be nonnegative")
    r = w.realization
    m = r.dim
    if levels is None or points is None:
        # keep the tensor grid near 4e5 nodes at most
        auto = {1: (12, 8), 2: (10, 6), 3: (8, 4)}.get(m, (5, 3))
        levels = auto[0] if levels is None else levels
        points = auto[1] if points is None else points
    radius = 2.0 ** levels
    box = Box.cube(m, radius, points=points, panels=levels + 1, grading="geometric")
    shells = np.zeros(levels + 1)
    rules = [box.axis_rule(i) for i in range(m)]
    for pts, wts in tensor_rule(rules, chunk=1 << 15):
        vals = (np.exp(-p * w.log(pts)) if p > 0 else 1.0) * wts
        sup = np.max(np.abs(pts), axis=-1)
        lvl = np.clip(np.ceil(np.log2(np.maximum(sup, 1e-300))), 0, levels).astype(int)
        np.add.at(shells, lvl, vals)
    partial = np.cumsum(shells)
    total = partial[-1]
    inc = shells[1:]
    ratios = []
    for a, b in zip(inc[:-1], inc[1:]):
        ratios.append(float(b / a) if a > 0 else 0.0)
    last = ratios[-3:]
    negligible = inc[-1] <= 1e-14 * max(total, 1e-300)
    convergent = bool(negligible or (len(last) == 3 and all(x < ratio_threshold for x in last)))
    rho = max(last) if last else 1.0
    tail = float(inc[-1] * rho / (1.0 - rho)) if convergent and rho < 1 else math.inf
    return {
        "p": p,
        "radii": [2.0 ** j for j in range(levels + 1)],
        "partial_integrals": partial.tolist(),
        "increments": inc.tolist(),
        "increment_ratios": ratios,
        "verdict": "convergent" if convergent else "divergent",
        "value": float(total),
        "tail_bound": tail,
        "nodes": int(np.prod([len(x) for x, _ in rules])),
    }


def sufficient_volume_exponents(w: Weight, q: int) -> dict:
    """The two readings of the sufficient exponent: ``(k+d+2)/q`` and ``(k+d+2)·q``."""
    r = w.realization
    base = r.k + r.d + 2
    return {"divided": base / q, "multiplied": base * q}


# ---------------------------------------------------------------------------
# Property 2: modular domination


def check_modular_domination(w: Weight, samples: np.ndarray) -> dict:
    """Pointwise ``δ(g) ≤ σ(g)^m`` with no constant (up to rounding)."""
    r = w.realization
    g = np.asarray(samples, float)
    ad, ad_inv = r.adjoint_pair(g)
    _, log_delta = np.linalg.slogdet(ad)
    log_sigma = np.log(np.maximum(operator_norm(ad), operator_norm(ad_inv))) + \
        np.log(w.length_factor(g))
    bound = r.dim * log_sigma
    slack = _ROUNDING * (1.0 + np.abs(bound)) * r.dim
    viol = np.flatnonzero(log_delta > bound + slack)
    out = {
        "n_samples": int(len(g)),
        "violations": int(len(viol)),
        "max_log_ratio": float(np.max(log_delta - bound)),
        "ok": len(viol) == 0,
    }
    if len(viol):
        out["witness"] = g[viol[0]].tolist()
    return out


# ---------------------------------------------------------------------------
# Property 3 and 4


def check_inverse_equivalence(w: Weight, samples: np.ndarray) -> dict:
    """Fit ``σ(g⁻¹) ≤ C σ(g)^r`` and the symmetric bound."""
    r = w.realization
    g = np.asarray(samples, float)
    s = w(g)
    s_inv = w(r.inverse(g))
    fwd = fit_power_bound(s_inv, s)
    back = fit_power_bound(s, s_inv)
    ad_g = w.ad_factor(g)
    ad_ginv = w.ad_factor(r.inverse(g))
    ad_resid = float(np.max(np.abs(ad_g - ad_ginv) / ad_g))
    return {
        "r": max(fwd.exponent, back.exponent),
        "forward": fwd.to_dict(),
        "backward": back.to_dict(),
        "ad_factor_symmetry_residual": ad_resid,
        "ok": fwd.ok and back.ok and ad_resid < 1e-9,
    }


def check_subpolynomial(w: Weight, g: np.ndarray, h: np.ndarray) -> dict:
    """Fit ``σ(g·h) ≤ C σ(g)^s σ(h)^s`` on sampled pairs."""
    r = w.realization
    lhs = w(r.multiply(g, h))
    fit = fit_power_bound(lhs, w(g) * w(h))
    return {"s": fit.exponent, "fit": fit.to_dict(), "ok": fit.ok}


# ---------------------------------------------------------------------------
# comparisons with the Euclidean norm


def compare_to_euclidean(w: Weight, samples: np.ndarray) -> dict:
    """Two-sided polynomial fits between ``σ`` and ``1 + |g|``."""
    g = np.asarray(samples, float)
    s = w(g)
    e = 1.0 + np.linalg.norm(g, axis=-1)
    upper = fit_power_bound(s, e)
    lower = fit_power_bound(e, s)
    return {"sigma_le_C_norm_pow": upper.to_dict(), "norm_le_C_sigma_pow": lower.to_dict(),
            "ok": upper.ok and lower.ok}


def sandwich_constant(w: Weight, samples: np.ndarray, lower_exp: float = 1.0,
                      upper_exp: float = 2.0) -> float:
    """Smallest ``C`` with ``C⁻¹(1+|g|)^a ≤ σ(g) ≤ C(1+|g|)^b`` on the samples."""
    g = np.asarray(samples, float)
    s = w(g)
    e = 1.0 + np.linalg.norm(g, axis=-1)
    return float(max(np.max(e ** lower_exp / s), np.max(s / e ** upper_exp)))


def property_report(w: Weight, scales: Sequence[float] = SAMPLE_SCALES, n_samples: int = 10_000,
                    n_pairs: int = 2000, seed: int = 0, levels: int | None = None) -> dict:
    """Run all four property checks; the per-scale fits are cached on ``w``."""
    r = w.realization
    per_scale = []
    mod_total = {"n_samples": 0, "violations": 0}
    for i, s in enumerate(scales):
        g = sample_box(r, s, n_samples, seed + 100 * i)
        h = sample_box(r, s, n_pairs, seed + 100 * i + 1)
        mod = check_modular_domination(w, g)
        inv = check_inverse_equivalence(w, g[: max(n_pairs, 1000)])
        sub = check_subpolynomial(w, g[:n_pairs], h)
        mod_total["n_samples"] += mod["n_samples"]
        mod_total["violations"] += mod["violations"]
        per_scale.append({"half_width": s, "modular": mod, "inverse": inv, "subpolynomial": sub})
    lengths = fit_length_exponents(w, scales, seed=seed)
    q = lengths["q"]["exponent"]
    candidates = sufficient_volume_exponents(w, q)
    volume, done = {}, {}
    for name, p in candidates.items():
        if p not in done:
            done[p] = check_volume_compensation(w, p, levels=levels)
        volume[name] = done[p]
    supported = [name for name, rep in volume.items() if rep["verdict"] == "convergent"]
    r_fit = max(x["inverse"]["r"] for x in per_scale)
    s_fit = max(x["subpolynomial"]["s"] for x in per_scale)
    w.fits.update({"q": q, "r": r_fit, "s": s_fit,
                   "p": min(candidates[n] for n in supported) if supported else None})
    ok = (mod_total["violations"] == 0
          and all(x["inverse"]["ok"] and x["subpolynomial"]["ok"] for x in per_scale)
          and bool(supported))
    return {
        "group": r.name,
        "length_surrogate": w.length_surrogate,
        "scales": list(scales),
        "per_scale": per_scale,
        "modular_domination": mod_total,
        "length_exponents": lengths,
        "volume_candidates": candidates,
        "volume": volume,
        "volume_exponents_supported": supported,
        "fits": dict(w.fits),
        "ok": ok,
    }
