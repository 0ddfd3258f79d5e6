"""Direct products ``G₁ × G₂`` and tensor functions on them.

The product algebra is built in the factors' adapted bases with the
ordering ``(t₁, t₂, n₁, n₂)``: the complement is ``𝔠₁ ⊕ 𝔠₂``, the nilradical
``𝔫₁ ⊕ 𝔫₂``, and the general-position element is ``(X₁, X₂)``.  In these
coordinates the product law is block diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import algebra as alg
from .errors import ConstructionError, InputError, NonMemberError
from .realization import Realization, eigenvalue_clusters, realize
from .schwartz.derivatives import left_derivative
from .schwartz.functions import (CompactDecay, GaussianDecay, SampledDecay, SlowGrowth,
                                 SmoothFunction)
from .schwartz.seminorms import _exp, default_box, membership_report, sup_table
from .weights import CONSTANT_CAP, SAMPLE_SCALES, Weight, fit_power_bound, sample_box

__all__ = [
    "ProductRealization",
    "direct_product",
    "check_block_structure",
    "check_sigma_product",
    "tensor",
    "tensor_derivative_check",
    "seminorm_factorization",
    "kernel_pair",
    "separable_kernel_check",
]

ROOT_SEPARATION = 1e-6  # relative gap required between root values of the factors
_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)


@dataclass(frozen=True, eq=False)
class ProductRealization:
    """``G₁ × G₂`` with index maps between product and factor coordinates.

    ``idx1[i]`` is the product coordinate of factor-1 coordinate ``i`` (and
    likewise ``idx2``); ``x2_scale`` is the factor applied to ``X₂``.
    """

    r1: Realization
    r2: Realization
    r: Realization
    idx1: tuple[int, ...]
    idx2: tuple[int, ...]
    x2_scale: float = 1.0

    @property
    def dim(self) -> int:
        return self.r.dim

    def split(self, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = np.asarray(g, float)
        return g[..., list(self.idx1)], g[..., list(self.idx2)]

    def join(self, g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
        g1, g2 = np.asarray(g1, float), np.asarray(g2, float)
        lead = np.broadcast_shapes(g1.shape[:-1], g2.shape[:-1])
        out = np.zeros(lead + (self.dim,))
        out[..., list(self.idx1)] = np.broadcast_to(g1, lead + (self.r1.dim,))
        out[..., list(self.idx2)] = np.broadcast_to(g2, lead + (self.r2.dim,))
        return out

    def summary(self) -> dict:
        return {"factors": [self.r1.name, self.r2.name], "dim": self.dim,
                "k": self.r.k, "d": self.r.d, "x2_scale": self.x2_scale,
                "idx1": list(self.idx1), "idx2": list(self.idx2),
                "tolerance": {"root_separation": ROOT_SEPARATION}}


def _index_maps(r1: Realization, r2: Realization) -> tuple[tuple[int, ...], tuple[int, ...]]:
    k1, k2, d1 = r1.k, r2.k, r1.d
    idx1 = tuple(range(k1)) + tuple(k1 + k2 + i for i in range(d1))
    idx2 = tuple(k1 + i for i in range(k2)) + tuple(k1 + k2 + d1 + i for i in range(r2.d))
    return idx1, idx2


def _nonzero_roots(r: Realization, x: np.ndarray) -> list[complex]:
    mat = r.adapted.ad(x)
    scale = max(1.0, float(np.linalg.norm(mat, 2)))
    return [c for c, _ in eigenvalue_clusters(mat) if abs(c) > 1e-9 * scale]


def direct_product(r1: Realization, r2: Realization, seed: int = 0,
                   name: str | None = None) -> ProductRealization:
    """Realization of ``G₁ × G₂`` with ``𝔠 = 𝔠₁ ⊕ 𝔠₂`` and ``𝔫 = 𝔫₁ ⊕ 𝔫₂``.

    If a nonzero root value of ``X₁`` coincides with one of ``X₂``, ``X₂`` is
    rescaled by ``1/2, 1/3, 1/5, …`` until the union is separated.

    Raises
    ------
    ConstructionError
        If every rescaling in the schedule still collides.
    """
    m1, m2 = r1.dim, r2.dim
    m = m1 + m2
    idx1, idx2 = _index_maps(r1, r2)
    c = np.zeros((m, m, m))
    for (ri, idx) in ((r1, idx1), (r2, idx2)):
        ix = np.array(idx)
        c[np.ix_(ix, ix, ix)] = ri.adapted.constants
    labels = [""] * m
    for ri, idx, tag in ((r1, idx1, "1"), (r2, idx2, "2")):
        for i, p in enumerate(idx):
            labels[p] = f"{ri.labels[i]}_{tag}"
    a = alg.LieAlgebra(c, tuple(labels))
    x1 = r1.to_adapted(r1.general_position)
    x2 = r2.to_adapted(r2.general_position)
    roots1 = _nonzero_roots(r1, x1)
    tol = ROOT_SEPARATION * max([1.0] + [abs(z) for z in roots1])
    for scale in (1.0,) + tuple(1.0 / p for p in _PRIMES):
        roots2 = _nonzero_roots(r2, scale * x2)
        if all(abs(z1 - z2) > tol for z1 in roots1 for z2 in roots2):
            break
    else:
        raise ConstructionError("root values of the factors collide for every rescaling of X2; "
                                "rescale one factor's structure constants")
    x = np.zeros(m)
    x[list(idx1)] = x1
    x[list(idx2)] = scale * x2
    eye = np.eye(m)
    k = r1.k + r2.k
    nil = alg.Subspace(eye[:, k:])
    comp = eye[:, :k]
    r = realize(a, nil, seed=seed, general_position=x, complement=comp,
                name=name or f"{r1.name}x{r2.name}", validate=True)
    return ProductRealization(r1, r2, r, idx1, idx2, scale)


def check_block_structure(pr: ProductRealization, n: int = 1000, seed: int = 0,
                          half_width: float = 2.0) -> dict:
    """Block product law, block modular function and ``𝔤₀ = 𝔤₁,₀ ⊕ 𝔤₂,₀``."""
    rng = np.random.default_rng(seed)
    g = rng.uniform(-half_width, half_width, (n, pr.dim))
    h = rng.uniform(-half_width, half_width, (n, pr.dim))
    g1, g2 = pr.split(g)
    h1, h2 = pr.split(h)
    prod = pr.r.multiply(g, h)
    blocks = pr.join(pr.r1.multiply(g1, h1), pr.r2.multiply(g2, h2))
    mult_err = float(np.max(np.abs(prod - blocks) / (1.0 + np.abs(blocks))))
    d = pr.r.modular(g)
    d12 = pr.r1.modular(g1) * pr.r2.modular(g2)
    mod_err = float(np.max(np.abs(d - d12) / np.maximum(d12, 1e-300)))
    dims = (pr.r.zero_space.dim, pr.r1.zero_space.dim + pr.r2.zero_space.dim)
    # rank test: the block zero spaces together span the product zero space
    z1 = np.zeros((pr.dim, pr.r1.zero_space.dim))
    z1[list(pr.idx1)] = pr.r1.to_adapted(pr.r1.zero_space.basis.T).T
    z2 = np.zeros((pr.dim, pr.r2.zero_space.dim))
    z2[list(pr.idx2)] = pr.r2.to_adapted(pr.r2.zero_space.basis.T).T
    blocks0 = np.hstack([z1, z2])
    joint = alg.rank(np.hstack([blocks0, pr.r.zero_space.basis]))
    g0_ok = dims[0] == dims[1] == joint
    return {"multiply_max_rel_error": mult_err, "modular_max_rel_error": mod_err,
            "g0_dims": list(dims), "g0_block": bool(g0_ok),
            "ok": bool(mult_err < 1e-10 and mod_err < 1e-9 and g0_ok)}


def check_sigma_product(pr: ProductRealization, w: Weight, w1: Weight, w2: Weight,
                        scales: Sequence[float] = SAMPLE_SCALES, n: int = 2000,
                        seed: int = 0, cap: float = CONSTANT_CAP) -> dict:
    """Fit ``σ ≤ C σ₁ σ₂`` per scale, and the reverse ``σ₁σ₂ ≤ C' σ^{s'}`` (reported only).

    The constant at scale ``h`` is the sup of ``σ/(σ₁σ₂)`` over the identity
    and the samples of every box of half-width ``≤ h``, i.e. the minimal
    constant on ``[-h, h]^m``.  Uniform samples of a large box alone miss the
    neighbourhood of ``e`` where the ratio peaks.  ``stable`` is true when the
    per-scale constants agree within a factor 2.
    """
    if n < 1000:
        raise InputError("use at least 10^3 samples")
    per_scale = []
    pool = [np.zeros((1, pr.dim))]
    for i, s in enumerate(scales):
        pool.append(sample_box(pr.r, s, n, seed + i))
        g = np.vstack(pool)
        g1, g2 = pr.split(g)
        ls = w.log(g)
        l12 = w1.log(g1) + w2.log(g2)
        c = float(np.exp(np.max(ls - l12)))
        shell = float(np.exp(np.max(ls[-n:] - l12[-n:])))
        finite = bool(np.all(np.isfinite(l12)) and np.max(l12) < 700.0)
        rev = fit_power_bound(np.exp(l12), np.exp(ls), cap=cap) if finite else None
        per_scale.append({"half_width": s, "C": c, "C_box_samples_only": shell,
                          "n_samples": int(g.shape[0]),
                          "reverse": rev.to_dict() if rev is not None else None})
    cs = [p["C"] for p in per_scale]
    ratio = max(cs) / min(cs)
    return {"per_scale": per_scale, "C": max(cs), "stability_ratio": ratio,
            "stable": bool(ratio <= 2.0), "ok": bool(max(cs) <= cap and ratio <= 2.0)}


def _combined_decay(pr: ProductRealization, d1, d2):
    if isinstance(d1, GaussianDecay) and isinstance(d2, GaussianDecay):
        rates = np.zeros(pr.dim)
        center = np.zeros(pr.dim)
        rates[list(pr.idx1)] = d1.rates
        rates[list(pr.idx2)] = d2.rates
        center[list(pr.idx1)] = d1.center
        center[list(pr.idx2)] = d2.center
        return GaussianDecay(tuple(rates), tuple(center))
    if isinstance(d1, CompactDecay) and isinstance(d2, CompactDecay):
        hw = np.zeros(pr.dim)
        center = np.zeros(pr.dim)
        hw[list(pr.idx1)] = d1.half_widths
        hw[list(pr.idx2)] = d2.half_widths
        center[list(pr.idx1)] = d1.center
        center[list(pr.idx2)] = d2.center
        return CompactDecay(tuple(hw), tuple(center), d1.bound * d2.bound)
    b1, b2 = d1.box(), d2.box()
    lo = pr.join(b1.lower, b2.lower)
    hi = pr.join(b1.upper, b2.upper)
    return SampledDecay.from_points(np.vstack([lo, hi]), d1.tail_mass(b1) + d2.tail_mass(b2), pad=0.0)


def tensor(pr: ProductRealization, phi1: SmoothFunction, phi2: SmoothFunction,
           check: bool = False, w1: Weight | None = None, w2: Weight | None = None,
           k_max: int = 2, alpha_max: int = 1) -> SmoothFunction:
    """``φ₁ ⊗ φ₂ : (g₁, g₂) ↦ φ₁(g₁) φ₂(g₂)``.

    Factors without decay metadata (such as constants) are refused.  With
    ``check`` a reduced membership report is also required on each factor.

    Raises
    ------
    NonMemberError
        If a factor is not (numerically) in the weighted Schwartz space.
    """
    for f, ri, wi in ((phi1, pr.r1, w1), (phi2, pr.r2, w2)):
        if f.decay is None or isinstance(f.decay, SlowGrowth):
            raise NonMemberError(f"{f.label} has no decay; it is not a Schwartz function on {ri.name}")
        if check:
            rep = membership_report(ri, wi or Weight(ri), f, k_max=k_max, alpha_max=alpha_max,
                                    n_samples=512)
            if not rep["member"]:
                raise NonMemberError(f"{f.label} fails the membership check on {ri.name}",
                                     rep["n_unstable"])

    def ev(g):
        g1, g2 = pr.split(g)
        return phi1(g1) * phi2(g2)

    return SmoothFunction(ev, _combined_decay(pr, phi1.decay, phi2.decay),
                          f"({phi1.label})x({phi2.label})", pr.dim)


def _product_alpha(pr: ProductRealization, a1: Sequence[int], a2: Sequence[int]) -> tuple[int, ...]:
    out = [0] * pr.dim
    for i, a in enumerate(a1):
        out[pr.idx1[i]] = int(a)
    for i, a in enumerate(a2):
        out[pr.idx2[i]] = int(a)
    return tuple(out)


def tensor_derivative_check(pr: ProductRealization, phi1: SmoothFunction, phi2: SmoothFunction,
                            a1: Sequence[int], a2: Sequence[int], n: int = 64,
                            seed: int = 0) -> dict:
    """``X^{(α₁,α₂)}(φ₁⊗φ₂) = X^{α₁}φ₁ ⊗ X^{α₂}φ₂`` at sampled points.

    The product-side word is ordered by product coordinates; since the two
    blocks commute this equals the factor-wise derivative.
    """
    t = tensor(pr, phi1, phi2)
    box = t.box()
    rng = np.random.default_rng(seed)
    g = box.center + rng.uniform(-0.5, 0.5, (n, pr.dim)) * np.asarray(box.half_widths)
    lhs = left_derivative(pr.r, t, _product_alpha(pr, a1, a2), g)
    g1, g2 = pr.split(g)
    rhs = left_derivative(pr.r1, phi1, a1, g1) * left_derivative(pr.r2, phi2, a2, g2)
    err = float(np.max(np.abs(lhs - rhs)))
    scale = float(max(np.max(np.abs(rhs)), 1.0))
    return {"max_abs_error": err, "scale": scale, "ok": bool(err <= 1e-5 * scale)}


def seminorm_factorization(pr: ProductRealization, w: Weight, w1: Weight, w2: Weight,
                           phi1: SmoothFunction, phi2: SmoothFunction, k: int,
                           a1: Sequence[int], a2: Sequence[int], n_samples: int = 1024,
                           seed: int = 0) -> dict:
    """Fitted ``C`` in ``‖σ^k X^α(φ⊗ψ)‖_∞ ≤ C ‖σ₁^k X^{α₁}φ‖_∞ ‖σ₂^k X^{α₂}ψ‖_∞``."""
    a1, a2 = tuple(int(a) for a in a1), tuple(int(a) for a in a2)
    a = _product_alpha(pr, a1, a2)
    t = tensor(pr, phi1, phi2)

    def sup(r, wi, f, alpha):
        box = default_box(r, f, k, sum(alpha))
        tab = sup_table(r, wi, f, [alpha], [k], box, n_samples, seed)
        return _exp(tab[(k, alpha)]["log_value"])

    lhs = sup(pr.r, w, t, a)
    rhs = sup(pr.r1, w1, phi1, a1) * sup(pr.r2, w2, phi2, a2)
    c = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return {"lhs": lhs, "rhs": rhs, "C": c, "ok": bool(math.isfinite(c) and c <= CONSTANT_CAP)}


def kernel_pair(pr: ProductRealization, K, phi1: SmoothFunction, phi2: SmoothFunction,
                budget: int | None = None):
    """``⟨K, φ₁ ⊗ φ₂⟩`` for a distribution ``K`` on the product group."""
    t = tensor(pr, phi1, phi2)
    return K.pair(t) if budget is None else K.pair(t, budget)


def separable_kernel_check(pr: ProductRealization, w1: Weight, w2: Weight, f1, f2,
                           k1: float, k2: float, phi1: SmoothFunction, phi2: SmoothFunction,
                           budget: int | None = None) -> dict:
    """``⟨[f₁⊗f₂], φ₁⊗φ₂⟩ = ⟨[f₁], φ₁⟩·⟨[f₂], φ₂⟩`` for a separable kernel."""
    from .distributions import Embedded

    def f(g):
        g1, g2 = pr.split(g)
        return f1(g1) * f2(g2)

    K = Embedded(pr.r, f, k1 + k2, "f1xf2")
    kw = {} if budget is None else {"budget": budget}
    joint = kernel_pair(pr, K, phi1, phi2, budget)
    p1 = Embedded(pr.r1, f1, k1).pair(phi1, **kw)
    p2 = Embedded(pr.r2, f2, k2).pair(phi2, **kw)
    prod = p1.value * p2.value
    tail = joint.tail_bound + abs(p1.value) * p2.tail_bound + abs(p2.value) * p1.tail_bound
    return {"kernel": joint.to_dict(), "factors": [p1.to_dict(), p2.to_dict()],
            "product": complex(prod) if np.iscomplexobj(prod) else float(prod),
            "difference": float(abs(joint.value - prod)), "tail_bound": float(tail)}
