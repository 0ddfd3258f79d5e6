"""Convolution, involution, mollifiers and the truncate-then-mollify construction.

With the right Haar measure ``dg = dt dn`` the convolution has two equivalent
integral forms,

    φ∗ψ(g) = ∫ φ(g h⁻¹) ψ(h) dh = ∫ φ(u) ψ(u⁻¹ g) δ(u)⁻¹ du,

and the one integrating over the narrower of the two decay boxes is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from ..errors import InputError, RefusalError
from ..numerics import (Box, composite_rule, gauss_legendre, halton_points, monte_carlo,
                        tensor_rule)
from ..realization import Realization
from .functions import CompactDecay, GaussianDecay, SampledDecay, SmoothFunction

__all__ = [
    "ConvolutionResult",
    "convolve",
    "convolution_function",
    "involution",
    "mollifier",
    "truncate_mollify",
    "quad_layout",
]

_CHUNK = 1 << 18  # max number of (g, node) pairs evaluated at once


@dataclass
class ConvolutionResult:
    """Values of ``φ∗ψ`` at a batch of points with the quadrature metadata."""

    values: np.ndarray
    tail_bound: float
    nodes: int
    method: str
    form: str
    box: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        vals = np.asarray(self.values)
        if np.iscomplexobj(vals):
            v = {"real": vals.real.tolist(), "imag": vals.imag.tolist()}
        else:
            v = vals.tolist()
        return {"values": v, "tail_bound": self.tail_bound, "nodes": self.nodes,
                "method": self.method, "form": self.form, "box": self.box}


def _feature_width(f: SmoothFunction, power: float = 1.0) -> float:
    decay = f.decay
    if isinstance(decay, GaussianDecay) and max(decay.rates) > 0:
        return 2.0 / math.sqrt(max(decay.rates) * power)
    if isinstance(decay, CompactDecay):
        return max(min(decay.half_widths) / 2.0, 1e-12)
    return 1.0


def quad_layout(box: Box, f: SmoothFunction, budget: int, points: int = 8,
                power: float = 1.0, other: SmoothFunction | None = None) -> Box:
    """Panel layout with panels about two feature widths wide, within a node budget.

    ``other`` is a second factor of the integrand whose width also limits
    the panel size.
    """
    m = box.dim
    width = _feature_width(f, power)
    if other is not None:
        width = min(width, _feature_width(other))
    panels = max(1, math.ceil(max(box.half_widths) / width)) * {1: 4, 2: 2}.get(m, 1)
    cap = max(1, int(budget ** (1.0 / m)) // (2 * points))
    if cap == 0 or 2 * points > budget ** (1.0 / m):
        points = max(2, int(budget ** (1.0 / m)) // 2)
        cap = 1
    return Box(box.half_widths, points=points, center=box.center, panels=min(panels, cap))


def _outer_sup(f: SmoothFunction, n: int = 512) -> float:
    """Sampled sup of ``|f|`` over its own box (used in tail bounds)."""
    b = f.box()
    pts = np.vstack([np.asarray(b.center)[None, :],
                     halton_points(b.dim, n, 11, b.lower, b.upper)])
    return float(np.max(np.abs(f(pts))))


def convolve(r: Realization, phi: SmoothFunction, psi: SmoothFunction, g: np.ndarray,
             budget: int = 120_000, form: str = "auto", mc_samples: int | None = None,
             seed: int = 0) -> ConvolutionResult:
    """``φ∗ψ(g) = ∫ φ(g h⁻¹) ψ(h) dh`` at one point or a batch of points.

    Parameters
    ----------
    budget : int
        Maximum tensor-rule nodes; larger rules switch to Monte Carlo with
        ``mc_samples`` (default ``budget``) samples per point.
    form : {"auto", "right", "left"}
        ``"right"`` integrates over ``h`` in ψ's box, ``"left"`` over ``u`` in
        φ's box (with the ``δ(u)⁻¹`` factor); ``"auto"`` picks the smaller box.

    Raises
    ------
    RefusalError
        If either function lacks decay metadata.
    """
    if phi.decay is None or psi.decay is None:
        raise RefusalError("convolution needs decay metadata on both factors to bound tails")
    if r.dim > 3:
        raise InputError("convolution is limited to groups of dimension <= 3")
    g = np.asarray(g, float)
    single = g.ndim == 1
    g2 = np.atleast_2d(g).reshape(-1, r.dim)
    if form == "auto":
        form = "right" if psi.box().volume <= phi.box().volume else "left"
    if form not in ("right", "left"):
        raise InputError("form must be 'auto', 'right' or 'left'")
    inner = psi if form == "right" else phi
    other = phi if form == "right" else psi
    box = inner.box()
    qbox = quad_layout(box, inner, budget, other=other)
    n_nodes = int(np.prod([len(qbox.axis_rule(i)[0]) for i in range(r.dim)]))

    def node_weights(nodes: np.ndarray) -> np.ndarray:
        if form == "right":
            return psi(nodes).astype(complex if np.iscomplexobj(psi(nodes[:1])) else float)
        return phi(nodes) / r.modular(nodes)

    def integrand_points(nodes: np.ndarray, gg: np.ndarray) -> np.ndarray:
        if form == "right":
            return r.multiply(gg[:, None, :], r.inverse(nodes)[None, :, :])
        return r.multiply(r.inverse(nodes)[None, :, :], gg[:, None, :])

    if r.k and form == "right" and phi.decay is not None:
        method = "nested-gauss-legendre"
        values = np.array([_nested_right(r, phi, psi, gi) for gi in g2])
        nodes_used = n_nodes
    elif n_nodes <= budget:
        method = "gauss-legendre"
        rules = [qbox.axis_rule(i) for i in range(r.dim)]
        acc = 0.0
        chunk = max(1, _CHUNK // max(len(g2), 1))
        for nodes, wts in tensor_rule(rules, chunk):
            wv = wts * node_weights(nodes)
            keep = wv != 0
            if not keep.any():
                continue
            vals = other(integrand_points(nodes[keep], g2))
            acc = acc + vals @ wv[keep]
        values = np.asarray(acc) * np.ones(len(g2))
        nodes_used = n_nodes
    else:
        method = "monte-carlo"
        ns = mc_samples or budget
        vals = []
        for gi in g2:
            res = monte_carlo(lambda x: other(integrand_points(x, gi[None, :]))[0] * node_weights(x),
                              box, ns, seed)
            vals.append(res.value)
        values = np.asarray(vals)
        nodes_used = ns
    tail = _outer_sup(other) * inner.decay.tail_mass(box)
    if form == "left" and math.isfinite(tail) and tail > 0:
        faces = np.vstack([box.lower, box.upper])
        tail *= float(np.max(1.0 / r.modular(faces)))
    out = values[0] if single else values.reshape(g.shape[:-1])
    return ConvolutionResult(out, float(tail), nodes_used, method, form,
                             {"center": list(box.center), "half_widths": list(box.half_widths),
                              "panels": qbox.panels, "points": qbox.points})


def _axis_rule(lo: float, hi: float, width: float, points: int = 8):
    panels = max(1, math.ceil((hi - lo) / width))
    return composite_rule(np.linspace(lo, hi, panels + 1), points)


def _gauss_width(f: SmoothFunction, idx: slice) -> float:
    d = f.decay
    if isinstance(d, GaussianDecay):
        rates = [a for a in d.rates[idx] if a > 0]
        return 2.0 / math.sqrt(max(rates)) if rates else 1.0
    if isinstance(d, CompactDecay):
        return max(min(d.half_widths[idx], default=1.0) / 2.0, 1e-12)
    return 1.0


def _nested_right(r: Realization, phi: SmoothFunction, psi: SmoothFunction, g: np.ndarray,
                  inner_points: int = 10, inner_panels: int = 6) -> complex | float:
    """``∫ φ(g h⁻¹) ψ(h) dh`` with an outer rule in ``t`` and per-node ``n`` boxes.

    At each outer node ``t_h`` the inner box is the intersection of ψ's
    ``n``-box with the preimage of φ's ``n``-box under ``x_h ↦ (g h⁻¹)_n``;
    this follows the ``e^{ad t}`` stretching that defeats a fixed grid.
    """
    k, d = r.k, r.d
    bp, bq = phi.box(), psi.box()
    tg = g[:k]
    # t_h must lie in ψ's t-box and t_g - t_h in φ's t-box
    lo_t = np.maximum(bq.lower[:k], tg - bp.upper[:k])
    hi_t = np.minimum(bq.upper[:k], tg - bp.lower[:k])
    if np.any(lo_t >= hi_t):
        return 0.0
    width_t = min(_gauss_width(phi, slice(0, k)), _gauss_width(psi, slice(0, k)))
    t_rules = [_axis_rule(lo_t[i], hi_t[i], width_t) for i in range(k)]
    width_n = _gauss_width(psi, slice(k, None))
    grid = np.linspace(0.0, 1.0, 5)
    unit = np.array(np.meshgrid(*([grid] * d), indexing="ij")).reshape(d, -1).T
    phi_n = bp.lower[k:] + unit * (bp.upper[k:] - bp.lower[k:])
    total = 0.0
    for t_nodes, t_w in tensor_rule(t_rules):
        for th, tw in zip(t_nodes, t_w):
            # preimage: h = u⁻¹ g with u = (t_g - t_h, x_u), x_u over φ's n-box
            u = np.concatenate([np.broadcast_to(tg - th, (len(phi_n), k)), phi_n], axis=1)
            xh = r.multiply(r.inverse(u), g[None, :])[:, k:]
            span = xh.max(axis=0) - xh.min(axis=0)
            lo = np.maximum(bq.lower[k:], xh.min(axis=0) - 0.1 * span)
            hi = np.minimum(bq.upper[k:], xh.max(axis=0) + 0.1 * span)
            if np.any(lo >= hi):
                continue
            rules = [_axis_rule(lo[i], hi[i], min(width_n, (hi[i] - lo[i]) / inner_panels),
                                inner_points) for i in range(d)]
            for xn, xw in tensor_rule(rules):
                h = np.concatenate([np.broadcast_to(th, (len(xn), k)), xn], axis=1)
                vals = phi(r.multiply(g[None, :], r.inverse(h))) * psi(h)
                total = total + tw * (vals @ xw)
    return total


def convolution_function(r: Realization, phi: SmoothFunction, psi: SmoothFunction,
                         budget: int = 120_000, form: str = "auto") -> SmoothFunction:
    """``φ∗ψ`` as a :class:`SmoothFunction` (each evaluation runs a quadrature)."""
    bp, bq = phi.box(), psi.box()
    corners_p = _corners(bp)
    corners_q = _corners(bq)
    prods = r.multiply(corners_p[:, None, :], corners_q[None, :, :]).reshape(-1, r.dim)
    tail = _outer_sup(phi) * psi.decay.tail_mass(bq) if psi.decay else math.inf
    decay = SampledDecay.from_points(np.vstack([prods, corners_p, corners_q]), tail)
    return SmoothFunction(lambda g: convolve(r, phi, psi, g, budget, form).values, decay,
                          f"({phi.label})*({psi.label})", r.dim)


def _corners(box: Box, per_axis: int = 3) -> np.ndarray:
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(box.lower, box.upper)]
    return np.array(np.meshgrid(*axes, indexing="ij")).reshape(box.dim, -1).T


def involution(r: Realization, f: SmoothFunction) -> SmoothFunction:
    """``φ*(g) = conj(φ(g⁻¹))·δ(g⁻¹)``; decay box from inverse images of φ's box."""

    def ev(g):
        g = np.asarray(g, float)
        ginv = r.inverse(g)
        return np.conj(f(ginv)) * r.modular(ginv)

    decay = None
    if f.decay is not None:
        b = f.box()
        pts = np.vstack([_corners(b, 5), halton_points(b.dim, 2048, 3, b.lower, b.upper)])
        decay = SampledDecay.from_points(r.inverse(pts), f.decay.tail_mass(b))
    return SmoothFunction(ev, decay, f"({f.label})^*", r.dim)


def _bump_mass(m: int, eps: float) -> float:
    """``∫_{|x|<ε} exp(−1/(1 − |x|²/ε²)) dx`` via the radial integral."""
    sphere = 2.0 * math.pi ** (m / 2.0) / math.gamma(m / 2.0)
    radial, _ = quad(lambda s: math.exp(-1.0 / (1.0 - s * s)) * s ** (m - 1) if s < 1 else 0.0,
                     0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return sphere * radial * eps ** m


def mollifier(r: Realization, j: int, points: int = 6) -> tuple[SmoothFunction, np.ndarray, np.ndarray]:
    """Radial bump ``ρ_j`` of radius ``ε = 2^{-j}`` with ``∫ ρ_j dg = 1``.

    Returns ``(ρ_j, nodes, weights)``.  The weights approximate
    ``ρ_j(u) δ(u)⁻¹ du`` on a tensor rule and are rescaled to sum to one,
    so ``Σ w F(u⁻¹g) ≈ F(g)`` reproduces constants exactly.
    """
    if j < 0:
        raise InputError("mollifier index j must be nonnegative")
    eps = 2.0 ** (-j)
    m = r.dim
    x, wq = gauss_legendre(points, -eps, eps)
    rules = [(x, wq)] * m
    nodes, wts = next(tensor_rule(rules, chunk=points ** m))

    def shape(u):
        s = np.sum(np.asarray(u) ** 2, axis=-1) / eps ** 2
        out = np.zeros(s.shape)
        inside = s < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - s[inside]))
        return out

    c = 1.0 / _bump_mass(m, eps)
    rho = SmoothFunction(lambda u: c * shape(u), CompactDecay((eps,) * m, bound=c), f"rho_{j}", m)
    raw = wts * shape(nodes) / r.modular(nodes)
    keep = raw > 0
    return rho, nodes[keep], raw[keep] / raw.sum()


def truncate_mollify(r: Realization, f: SmoothFunction, l: float, j: int,
                     points: int = 6) -> SmoothFunction:
    """``f_{j,l} = ρ_j ∗ (f·1_{[-l,l]^m})``, smooth with compact support.

    The support lies in ``{u·g : |u| < 2^{-j}, g ∈ [-l,l]^m}``, whose bounding
    box becomes the decay metadata.
    """
    if l <= 0:
        raise InputError("truncation scale l must be positive")
    _, nodes, weights = mollifier(r, j, points)
    inv_nodes = r.inverse(nodes)
    trunc = Box.cube(r.dim, float(l))

    def F(x):
        return np.where(trunc.contains(x), f(x), 0.0)

    def ev(g):
        g = np.asarray(g, float)
        lead = g.shape[:-1]
        g2 = g.reshape(-1, r.dim)
        out = None
        step = max(1, _CHUNK // max(len(nodes), 1))
        parts = []
        for s in range(0, len(g2), step):
            pts = r.multiply(inv_nodes[None, :, :], g2[s:s + step, None, :])
            parts.append(F(pts) @ weights)
        out = np.concatenate(parts) if parts else np.zeros(0)
        return out.reshape(lead)

    corners = _corners(trunc, 3)
    eps = 2.0 ** (-j)
    u = _corners(Box.cube(r.dim, eps), 3)
    support = r.multiply(u[:, None, :], corners[None, :, :]).reshape(-1, r.dim)
    decay = SampledDecay.from_points(support, 0.0, pad=0.1)
    return SmoothFunction(ev, decay, f"{f.label}_(j={j},l={l:g})", r.dim,
                          {"j": j, "l": l, "epsilon": eps})
