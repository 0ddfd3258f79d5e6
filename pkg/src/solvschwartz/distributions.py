"""σ-tempered distributions represented by their pairings.

A distribution is an embedded slowly increasing function ``[f]``, a
derivative ``X^α T`` or a finite linear combination of these.  Pairings are
computed by tensor Gauss–Legendre quadrature on the test function's box and
report a truncation estimate.

The module also implements the constructive steps of the structure theorem:
the iterated antiderivative ``h♭`` of ``σ^j h``, the integration-by-parts
identity ``∫ h♭ Dφ = (−1)^m ∫ σ^j h φ`` with ``D = ∂_1 ⋯ ∂_m`` expanded in the
left-invariant frame, and the evaluation of a decomposition
``T = Σ_α X^α[f_α]``.
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import DepthExceededError, InputError, SlowGrowthError, UnsupportedDimensionError
from .numerics import MAX_FD_ORDER, Box, composite_rule, gauss_legendre, tensor_rule
from .realization import Realization
from .schwartz.derivatives import (coordinate_derivative, derivative_function, frame_change,
                                   word_derivative, word_from_alpha)
from .schwartz.functions import (CompactDecay, GaussianDecay, SlowGrowth, SmoothFunction,
                                 weight_growth_rate)
from .schwartz.seminorms import FLAG_RATIO, _faces, _gaussian_tail
from .weights import SAMPLE_SCALES, Weight, sample_box

__all__ = [
    "PairingResult",
    "TemperedDistribution",
    "Embedded",
    "Derivative",
    "Sum",
    "embed",
    "derivative",
    "pair",
    "slowly_increasing_test",
    "growth_order",
    "slow_function",
    "slow_labels",
    "flat_antiderivative",
    "flat_grid",
    "coordinate_operator",
    "apply_coordinate_operator",
    "verify_flat_identity",
    "StructureDecomposition",
    "evaluate_decomposition",
    "load_decomposition",
]

MAX_GROWTH_ORDER = 16
PAIRING_BUDGET = 1 << 16
MAX_AXIS_NODES = 256
MAX_PANEL_POINTS = 32
HERMITE_MIN_DIM = 4
MAX_HERMITE_NODES = 24
_DOUBLING = math.log(2.0)


@dataclass
class PairingResult:
    """``⟨T, φ⟩`` with a truncation estimate; ``flagged`` when the tail is not controlled."""

    value: complex | float
    tail_bound: float
    flagged: bool
    nodes: int = 0

    def to_dict(self) -> dict:
        v = self.value
        if isinstance(v, complex) or np.iscomplexobj(v):
            v = {"real": float(np.real(v)), "imag": float(np.imag(v))}
        else:
            v = float(v)
        tb = self.tail_bound if math.isfinite(self.tail_bound) else str(self.tail_bound)
        return {"value": v, "tail_bound": tb, "flagged": self.flagged, "nodes": self.nodes}


# ---------------------------------------------------------------------------
# slowly increasing test


def slowly_increasing_test(r: Realization, w: Weight, f: Callable, k: float,
                           scales: Sequence[float] = SAMPLE_SCALES, n: int = 2000,
                           seed: int = 0) -> dict:
    """Sampled test that ``σ^{−k} |f|`` is bounded.

    The log-maximum of ``σ^{−k}|f|`` is taken on boxes of growing size; the
    test passes if it grows by less than a factor 2 from each scale to the
    next.  A polynomially or exponentially growing ratio fails at the
    largest scales.
    """
    maxima, witness = [], None
    for i, s in enumerate(scales):
        g = sample_box(r, s, n, seed + i)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            lv = np.log(np.abs(np.asarray(f(g)))) - k * w.log(g)
        lv = np.where(np.isnan(lv), -np.inf, lv)
        j = int(np.argmax(lv))
        maxima.append(float(lv[j]))
        witness = g[j].tolist()
    growth = [b - a for a, b in zip(maxima, maxima[1:])]
    ok = all(math.isfinite(x) or x == -math.inf for x in maxima) and \
        all(not (dg > _DOUBLING) for dg in growth if math.isfinite(dg))
    if any(x == math.inf for x in maxima):
        ok = False
    return {"k": k, "log_max": maxima, "growth": growth, "ok": bool(ok), "witness": witness}


def growth_order(r: Realization, w: Weight, f: Callable, max_order: int = MAX_GROWTH_ORDER,
                 seed: int = 0) -> int:
    """Smallest integer ``k`` passing :func:`slowly_increasing_test`."""
    for k in range(max_order + 1):
        if slowly_increasing_test(r, w, f, k, seed=seed)["ok"]:
            return k
    raise SlowGrowthError(f"no growth order <= {max_order} found")


# ---------------------------------------------------------------------------
# distributions


class TemperedDistribution(ABC):
    """A continuous linear functional on the weighted Schwartz space."""

    r: Realization

    @abstractmethod
    def pair(self, phi: SmoothFunction, budget: int = PAIRING_BUDGET) -> PairingResult:
        """``⟨T, φ⟩`` using at most about ``budget`` quadrature nodes."""

    @property
    def depth(self) -> int:
        """Total derivative order applied to test functions."""
        return 0

    def __add__(self, other: "TemperedDistribution") -> "Sum":
        return Sum(self.r, [(1.0, self), (1.0, other)])

    def __rmul__(self, c: complex) -> "Sum":
        return Sum(self.r, [(c, self)])


def _pairing_box(r: Realization, phi: SmoothFunction, k: float, order: int = 0) -> Box:
    c = weight_growth_rate(r)
    return phi.box(weight_rate=c * k, poly=(k + order) * (r.n_class + 1))


def _integrate_product(r: Realization, f: Callable, phi: SmoothFunction, k: float,
                       budget: int) -> PairingResult:
    if phi.decay is None:
        raise InputError(f"{phi.label}: test functions need decay metadata")
    decay = phi.decay
    # few long panels of high order: the integrands are analytic on each panel
    per_axis = min(MAX_AXIS_NODES, max(16, int(round(budget ** (1.0 / r.dim)))))
    points = min(MAX_PANEL_POINTS, per_axis // 2)
    if isinstance(decay, CompactDecay):
        # bumps are flat at the edge of their support: use the tanh-mapped rule
        box = decay.support()
        rules = [mapped_rule(box.lower[i], box.upper[i], max(2, per_axis // points), points)
                 for i in range(r.dim)]
    elif isinstance(decay, GaussianDecay) and r.dim >= HERMITE_MIN_DIM and min(decay.rates) > 0:
        # panels cannot resolve a Gaussian in many dimensions; Hermite nodes
        # matched to the decay integrate f·φ·e^{+a(x-c)²} against e^{-a(x-c)²}
        box = _pairing_box(r, phi, k)
        n = min(MAX_HERMITE_NODES, max(12, int(budget ** (1.0 / r.dim))))
        u, wq = np.polynomial.hermite.hermgauss(n)
        rules = [(c + u / math.sqrt(a), wq * np.exp(u ** 2) / math.sqrt(a))
                 for a, c in zip(decay.rates, decay.center)]
    else:
        box = _pairing_box(r, phi, k)
        # Box panels are per half-axis
        qbox = Box(box.half_widths, points=points, center=box.center,
                   panels=max(1, per_axis // (2 * points)))
        rules = [qbox.axis_rule(i) for i in range(r.dim)]
    acc, nodes = [], 0
    for pts, wts in tensor_rule(rules, chunk=1 << 15):
        acc.append(np.sum(np.asarray(f(pts)) * np.asarray(phi(pts)) * wts))
        nodes += len(wts)
    value = sum(acc) if acc else 0.0
    if isinstance(decay, CompactDecay):
        tail = decay.tail_mass(box)
    elif isinstance(decay, GaussianDecay) and min(decay.rates) > 0:
        faces = _faces(box, 64, 5)
        face_max = float(np.max(np.abs(f(faces) * phi(faces))))
        tail = _gaussian_tail(box, face_max, decay.rates)
    else:
        tail = decay.tail_mass(box)
    if np.isrealobj(value):
        value = float(value)
    else:
        value = complex(value)
    flagged = (not math.isfinite(tail)) or (abs(value) > 0 and tail > FLAG_RATIO * max(abs(value), 1.0))
    return PairingResult(value, float(tail), bool(flagged), nodes)


@dataclass
class Embedded(TemperedDistribution):
    """``[f]``: ``⟨[f], φ⟩ = ∫ f φ dg`` for ``f`` slowly increasing of order ``k``."""

    r: Realization
    f: Callable
    k: float
    label: str = "f"

    def pair(self, phi: SmoothFunction, budget: int = PAIRING_BUDGET) -> PairingResult:
        return _integrate_product(self.r, self.f, phi, self.k, budget)


@dataclass
class Derivative(TemperedDistribution):
    """``X^W T`` for a word ``W = (w_1, …, w_n)``: ``⟨X^W T, φ⟩ = (−1)^n ⟨T, X^{W'} φ⟩``.

    ``W'`` is the reversed word (the formal transpose of ``X_{w_1} ⋯ X_{w_n}``
    for the right Haar measure), so that ``X^W [f] = [X^W f]`` for smooth
    slowly increasing ``f``.  For words in a single letter, or on abelian
    groups, ``W' `` acts as ``W``.
    """

    r: Realization
    base: TemperedDistribution
    word: tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.word) + self.base.depth

    def pair(self, phi: SmoothFunction, budget: int = PAIRING_BUDGET) -> PairingResult:
        if not self.word:
            return self.base.pair(phi, budget)
        dphi = derivative_function(self.r, phi, word=self.word[::-1])
        res = self.base.pair(dphi, budget)
        sign = -1.0 if len(self.word) % 2 else 1.0
        return PairingResult(sign * res.value, res.tail_bound, res.flagged, res.nodes)


@dataclass
class Sum(TemperedDistribution):
    """Finite linear combination ``Σ c_i T_i``."""

    r: Realization
    terms: list = field(default_factory=list)

    @property
    def depth(self) -> int:
        return max((t.depth for _, t in self.terms), default=0)

    def pair(self, phi: SmoothFunction, budget: int = PAIRING_BUDGET) -> PairingResult:
        value, tail, flagged, nodes = 0.0, 0.0, False, 0
        for c, t in self.terms:
            res = t.pair(phi, budget)
            value = value + c * res.value
            tail += abs(c) * res.tail_bound
            flagged |= res.flagged
            nodes += res.nodes
        return PairingResult(value, tail, flagged, nodes)


def embed(r: Realization, w: Weight, f: Callable, k: float, label: str = "f",
          seed: int = 0) -> Embedded:
    """``[f]`` after checking that ``σ^{−k} f`` is bounded on samples.

    Raises
    ------
    SlowGrowthError
        With the sample that maximised ``σ^{−k}|f|`` at the largest scale.
    """
    test = slowly_increasing_test(r, w, f, k, seed=seed)
    if not test["ok"]:
        raise SlowGrowthError(f"{label} is not slowly increasing of order {k}", test["witness"])
    return Embedded(r, f, k, label)


def derivative(T: TemperedDistribution, alpha: Sequence[int] | None = None,
               word: Sequence[int] | None = None) -> TemperedDistribution:
    """``X^α T`` (or a word of left-invariant fields)."""
    r = T.r
    if word is None:
        if alpha is None or len(alpha) != r.dim:
            raise InputError(f"alpha must have length {r.dim}")
        word = word_from_alpha(alpha)
    word = tuple(int(j) for j in word)
    if any(not 0 <= j < r.dim for j in word):
        raise InputError(f"word letters must lie in 0..{r.dim - 1}")
    if len(word) + T.depth > MAX_FD_ORDER:
        raise DepthExceededError(f"total derivative order {len(word) + T.depth} exceeds {MAX_FD_ORDER}")
    if not word:
        return T
    if isinstance(T, Derivative):
        # X^W (X^V T) = X^{WV} T
        return Derivative(r, T.base, word + T.word)
    return Derivative(r, T, word)


def pair(T: TemperedDistribution, phi: SmoothFunction, budget: int = PAIRING_BUDGET) -> PairingResult:
    """``⟨T, φ⟩``; the result is flagged when the truncation is not controlled."""
    return T.pair(phi, budget)


# ---------------------------------------------------------------------------
# library of slowly increasing functions


def slow_labels() -> tuple[str, ...]:
    return ("zero", "one", "sigma", "quad", "cos", "ramp", "heaviside", "exp2t")


def slow_function(r: Realization, w: Weight, label: str) -> tuple[Callable, str]:
    """Slowly increasing function by label, returned with its label.

    ``quad`` is ``1 + |g|²``, ``cos`` is ``cos⟨ξ, g⟩``, ``ramp`` and
    ``heaviside`` act on the first coordinate, ``exp2t`` is ``e^{2|t|}``.
    """
    m = r.dim
    xi = np.linspace(1.0, 2.0, m)
    table: dict[str, Callable] = {
        "zero": lambda g: np.zeros(np.shape(g)[:-1]),
        "one": lambda g: np.ones(np.shape(g)[:-1]),
        "sigma": lambda g: w(g),
        "quad": lambda g: 1.0 + np.sum(np.asarray(g) ** 2, axis=-1),
        "cos": lambda g: np.cos(np.asarray(g) @ xi),
        "ramp": lambda g: np.maximum(np.asarray(g)[..., 0], 0.0),
        "heaviside": lambda g: (np.asarray(g)[..., 0] > 0).astype(float),
    }
    if label == "exp2t":
        if r.k == 0:
            raise InputError("exp2t needs a nontrivial complement")
        return (lambda g: np.exp(2.0 * np.linalg.norm(np.asarray(g)[..., : r.k], axis=-1))), label
    if label not in table:
        raise InputError(f"unknown slowly increasing function {label!r}; "
                         f"available: {', '.join(slow_labels())}")
    return table[label], label


# ---------------------------------------------------------------------------
# the iterated antiderivative h♭


def _check_flat_dim(r: Realization) -> None:
    if r.dim > 4:
        raise UnsupportedDimensionError("iterated antiderivatives are limited to dimension <= 4")


def flat_antiderivative(r: Realization, w: Weight, h: Callable, j: int,
                        points: int = 8, panels: int = 2) -> Callable[[np.ndarray], np.ndarray]:
    """``h♭(g) = ∫_0^{g_1} ⋯ ∫_0^{g_m} σ^j h dx`` by per-axis Gauss–Legendre.

    Each axis segment ``[0, g_i]`` is split into ``panels`` panels of
    ``points`` nodes.  Negative ``g_i`` give the oriented integral.
    """
    _check_flat_dim(r)
    if j < 0:
        raise InputError("j must be nonnegative")
    x, wq = gauss_legendre(points, 0.0, 1.0)
    u = ((np.arange(panels)[:, None] + x[None, :]) / panels).ravel()  # nodes in [0, 1]
    wu = np.tile(wq / panels, panels)
    m = r.dim
    grid = np.array(np.meshgrid(*([u] * m), indexing="ij")).reshape(m, -1).T
    wgrid = np.prod(np.array(np.meshgrid(*([wu] * m), indexing="ij")).reshape(m, -1), axis=0)

    def integrand(x):
        vals = np.asarray(h(x))
        return vals * np.exp(j * w.log(x)) if j else vals

    def hflat(g):
        g = np.asarray(g, float)
        lead = g.shape[:-1]
        g2 = g.reshape(-1, m)
        out = []
        for gi in g2:
            pts = grid * gi[None, :]
            out.append(np.prod(gi) * np.sum(integrand(pts) * wgrid))
        return np.asarray(out).reshape(lead)

    return hflat


def flat_grid(r: Realization, w: Weight, h: Callable, j: int, axes: Sequence[np.ndarray],
              cell_points: int = 4) -> np.ndarray:
    """``h♭`` on the tensor grid ``axes[0] × ⋯ × axes[m-1]``.

    The integral of ``σ^j h`` over every cell between consecutive grid
    coordinates (with ``0`` inserted) is computed once by Gauss–Legendre;
    ``h♭`` at each node is then a signed sum of cells between the origin
    and the node.  This is the same iterated per-axis quadrature as
    :func:`flat_antiderivative`, shared across nodes.
    """
    _check_flat_dim(r)
    m = r.dim
    breaks, signs = [], []
    for a in axes:
        b = np.unique(np.concatenate([np.asarray(a, float), [0.0]]))
        breaks.append(b)
        mids = 0.5 * (b[:-1] + b[1:])
        # sign[node, cell] = ±1 if the cell lies between 0 and the node
        nodes = np.asarray(a, float)[:, None]
        between = ((mids[None, :] > 0) & (mids[None, :] < nodes)) | \
            ((mids[None, :] < 0) & (mids[None, :] > nodes))
        signs.append(np.where(between, np.sign(mids)[None, :], 0.0))
    x, wq = gauss_legendre(cell_points, 0.0, 1.0)
    cell_rules = []
    for b in breaks:
        lo, width = b[:-1], np.diff(b)
        cell_rules.append((lo[:, None] + width[:, None] * x[None, :], width[:, None] * wq[None, :]))
    shape = tuple(len(b) - 1 for b in breaks)
    # local tensor rule inside each cell, vectorised over cells
    local = np.array(np.meshgrid(*([np.arange(cell_points)] * m), indexing="ij")).reshape(m, -1).T
    cells = np.zeros(shape)
    idx = np.array(np.meshgrid(*[np.arange(s) for s in shape], indexing="ij")).reshape(m, -1).T
    step = max(1, (1 << 17) // len(local))
    for s in range(0, len(idx), step):
        block = idx[s:s + step]
        pts = np.stack([cell_rules[i][0][block[:, i][:, None], local[None, :, i]]
                        for i in range(m)], axis=-1)
        wts = np.prod([cell_rules[i][1][block[:, i][:, None], local[None, :, i]]
                       for i in range(m)], axis=0)
        vals = np.asarray(h(pts))
        if j:
            vals = vals * np.exp(j * w.log(pts))
        cells[tuple(block.T)] = np.sum(vals * wts, axis=-1)
    out = cells
    for i in range(m):
        out = np.tensordot(signs[i], out, axes=([1], [i]))
        out = np.moveaxis(out, 0, i)
    return out


# ---------------------------------------------------------------------------
# D = ∂_1 ⋯ ∂_m in the left-invariant frame


Coefficient = Callable[[np.ndarray], np.ndarray]


def _frame_entry(r: Realization, l: int, i: int, cache: dict) -> Coefficient:
    def c(g):
        g = np.ascontiguousarray(g, dtype=float)
        key = (g.shape, g.tobytes())
        if key not in cache:
            if len(cache) > 256:
                cache.clear()
            cache[key] = frame_change(r, g)[0]
        return cache[key][..., l, i]
    return c


def _partial(c: Coefficient, i: int, m: int) -> Coefficient:
    e = tuple(1 if a == i else 0 for a in range(m))

    def dc(g):
        return coordinate_derivative(c, e, g)
    return dc


def _product(c1: Coefficient, c2: Coefficient) -> Coefficient:
    return lambda g: c1(g) * c2(g)


def coordinate_operator(r: Realization, axes: Sequence[int] | None = None) -> list[tuple[tuple[int, ...], Coefficient]]:
    """Expand ``∂_{a_1} ⋯ ∂_{a_n}`` (default ``∂_1 ⋯ ∂_m``) as ``Σ_w η_w X^w``.

    With ``∂_i = Σ_l M[l, i] X_l`` from :func:`frame_change`, applying
    ``∂_i`` to ``η X^w`` gives ``(∂_i η) X^w + Σ_l η M[l, i] X_l X^w``.  The
    coefficients ``η_w`` are returned as callables evaluated pointwise;
    derivatives of the frame entries are taken by finite differences.
    """
    m = r.dim
    axes = list(range(m)) if axes is None else [int(a) for a in axes]
    if len(axes) > MAX_FD_ORDER:
        raise DepthExceededError(f"operator order {len(axes)} exceeds {MAX_FD_ORDER}")
    cache: dict = {}  # frame matrices are shared by every coefficient at the same points
    terms: list[tuple[tuple[int, ...], Coefficient, bool]] = [((), lambda g: np.ones(np.shape(g)[:-1]), True)]
    for i in reversed(axes):
        new: list[tuple[tuple[int, ...], Coefficient, bool]] = []
        for word, c, const in terms:
            if not const:
                new.append((word, _partial(c, i, m), False))
            for l in range(m):
                entry = _frame_entry(r, l, i, cache)
                coef = entry if const and not word else _product(c, entry)
                new.append(((l,) + word, coef, False))
        terms = new
    return [(word, c) for word, c, _ in terms]


def apply_coordinate_operator(r: Realization, phi: Callable, g: np.ndarray,
                              operator: list | None = None) -> np.ndarray:
    """``Dφ(g) = Σ_w η_w(g) X^w φ(g)``."""
    op = coordinate_operator(r) if operator is None else operator
    g = np.asarray(g, float)
    total = 0.0
    for word, c in op:
        total = total + c(g) * word_derivative(r, phi, word, g)
    return total


def mapped_rule(lo: float, hi: float, panels: int, points: int, u_max: float = 3.0,
                kink: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre in ``u`` for ``x = c + R tanh(u)`` on ``(lo, hi)``.

    Functions that vanish to infinite order at the ends of the interval
    (bumps) become analytic and double-exponentially small in ``u``, where
    Gauss–Legendre converges quickly.  ``u`` runs over ``[-u_max, u_max]``
    split into ``panels`` panels, with an extra breakpoint at the image of
    ``kink`` so that a kink of the integrand sits on a panel edge.
    """
    c, R = 0.5 * (lo + hi), 0.5 * (hi - lo)
    br = np.linspace(-u_max, u_max, panels + 1)
    if lo < kink < hi:
        br = np.unique(np.concatenate([br, [math.atanh((kink - c) / R)]]))
    u, wu = composite_rule(br, points)
    x = c + R * np.tanh(u)
    return x, wu * R / np.cosh(u) ** 2


def verify_flat_identity(r: Realization, w: Weight, h: Callable, j: int, phi: SmoothFunction,
                         points: int = 8, panels: int = 2, cell_points: int = 4) -> dict:
    """Residual of ``∫ h♭ Dφ dg = (−1)^m ∫ σ^j h φ dg`` for compactly supported ``φ``.

    Both sides use the tensor product of :func:`mapped_rule` (``panels``
    panels of ``points`` nodes per axis) on φ's support box; ``h♭`` is
    evaluated on that grid by :func:`flat_grid`.  ``D`` is built in the left-invariant
    frame; the direct coordinate derivative is also reported.
    """
    _check_flat_dim(r)
    if not isinstance(phi.decay, CompactDecay):
        raise InputError("verify_flat_identity needs a compactly supported test function")
    m = r.dim
    box = phi.decay.support()
    rules = [mapped_rule(box.lower[i], box.upper[i], panels, points) for i in range(m)]
    axes = [x for x, _ in rules]
    grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(m, -1).T
    wts = np.prod(np.array(np.meshgrid(*[wq for _, wq in rules], indexing="ij")).reshape(m, -1), axis=0)
    hf = flat_grid(r, w, h, j, axes, cell_points).reshape(-1)
    d_phi = apply_coordinate_operator(r, phi, grid)
    lhs = np.sum(hf * d_phi * wts)
    sig = np.exp(j * w.log(grid)) if j else 1.0
    rhs = (-1.0) ** m * np.sum(np.asarray(h(grid)) * sig * np.asarray(phi(grid)) * wts)
    direct = coordinate_derivative(phi, (1,) * m, grid)
    return {
        "lhs": complex(lhs) if np.iscomplexobj(lhs) else float(lhs),
        "rhs": complex(rhs) if np.iscomplexobj(rhs) else float(rhs),
        "residual": float(abs(lhs - rhs)),
        "frame_vs_direct": float(np.max(np.abs(d_phi - direct))),
        "nodes": int(len(grid)),
        "points": points,
        "panels": panels,
    }


# ---------------------------------------------------------------------------
# decompositions T = Σ X^α [f_α]


@dataclass
class StructureDecomposition:
    """Order ``M`` and components ``(α, f_α, growth order k_α, label)``."""

    order: int
    components: list = field(default_factory=list)

    def __post_init__(self):
        for alpha, _, _, label in self.components:
            if sum(alpha) > self.order:
                raise InputError(f"component {label}: |alpha| = {sum(alpha)} exceeds order {self.order}")
            if sum(alpha) > MAX_FD_ORDER:
                raise DepthExceededError(f"component {label}: |alpha| exceeds {MAX_FD_ORDER}")

    def distribution(self, r: Realization) -> Sum:
        terms = [(1.0, derivative(Embedded(r, f, k, label), alpha=alpha))
                 for alpha, f, k, label in self.components]
        return Sum(r, terms)

    def to_dict(self) -> dict:
        return {"order": self.order,
                "components": [{"alpha": list(a), "function": lab, "growth_order": k}
                               for a, _, k, lab in self.components]}


def evaluate_decomposition(r: Realization, dec: StructureDecomposition, phi: SmoothFunction,
                           budget: int = PAIRING_BUDGET) -> PairingResult:
    """``Σ_α (−1)^{|α|} ⟨[f_α], X^α φ⟩``."""
    return dec.distribution(r).pair(phi, budget)


def load_decomposition(source: str | Path | dict, r: Realization, w: Weight,
                       validate: bool = True) -> StructureDecomposition:
    """Decomposition from JSON: ``{"order": M, "components": [{"alpha", "function", "growth_order"}]}``.

    Function labels refer to :func:`slow_labels`.  With ``validate`` each
    component is checked to be slowly increasing of its stated order.
    """
    if isinstance(source, dict):
        data = source
    else:
        text = Path(source).read_text() if Path(str(source)).exists() else str(source)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"decomposition JSON: {exc.msg} at line {exc.lineno}") from None
    try:
        order = int(data["order"])
        comps = []
        for c in data["components"]:
            alpha = tuple(int(a) for a in c["alpha"])
            if len(alpha) != r.dim:
                raise InputError(f"component alpha must have length {r.dim}")
            f, label = slow_function(r, w, c["function"])
            k = float(c.get("growth_order", 0))
            if validate:
                embed(r, w, f, k, label)
            comps.append((alpha, f, k, label))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed decomposition: {exc}") from None
    return StructureDecomposition(order, comps)
