"""Smooth functions on a realized group, their decay metadata and the probe set.

A :class:`SmoothFunction` pairs a vectorised evaluator with a :class:`Decay`
object.  The decay object supplies an integration box adapted to a weight
growth rate and an estimate of the mass outside a box; quadrature and
seminorm routines use it to bound truncation error.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erfc

from ..errors import InputError
from ..numerics import Box, halton_points
from ..realization import Realization

__all__ = [
    "Decay",
    "GaussianDecay",
    "CompactDecay",
    "SlowGrowth",
    "SampledDecay",
    "SmoothFunction",
    "gaussian",
    "bump",
    "oscillating_gaussian",
    "tensor_bump",
    "zero_function",
    "constant_function",
    "probe",
    "probe_labels",
    "probe_set",
    "weight_growth_rate",
]

_GAUSS_CUTOFF = 36.0  # e^{-36} ≈ 2e-16 relative to the peak


class Decay(ABC):
    """Decay metadata for a function on ``ℝ^m`` (adapted coordinates)."""

    dim: int

    @abstractmethod
    def box(self, scale: float = 1.0, weight_rate: float = 0.0, poly: float = 0.0) -> Box:
        """Box holding the essential support of ``|f|·e^{weight_rate·|t|}·(1+|g|)^poly``."""

    @abstractmethod
    def tail_mass(self, box: Box) -> float:
        """Estimate of ``∫_{outside box} |f|`` (``inf`` if unknown)."""

    @abstractmethod
    def envelope(self, g: np.ndarray) -> np.ndarray:
        """Pointwise upper envelope of ``|f|`` (``inf`` if none)."""

    def to_dict(self) -> dict:
        return {"kind": type(self).__name__}


@dataclass(frozen=True)
class GaussianDecay(Decay):
    """``|f(g)| ≲ amplitude·exp(-Σ rates_i (g_i - center_i)²)`` up to polynomial factors."""

    rates: tuple[float, ...]
    center: tuple[float, ...] = ()
    amplitude: float = 1.0
    slack: float = 0.0  # additional half-width for polynomial prefactors

    def __post_init__(self):
        rates = tuple(float(a) for a in self.rates)
        object.__setattr__(self, "rates", rates)
        if not self.center:
            object.__setattr__(self, "center", (0.0,) * len(rates))
        if any(a < 0 for a in rates):
            raise InputError("Gaussian rates must be nonnegative")

    @property
    def dim(self) -> int:
        return len(self.rates)

    def _half_widths(self, scale: float, weight_rate: float, poly: float) -> np.ndarray:
        hw = []
        for a in self.rates:
            if a == 0:
                hw.append(8.0)
            else:
                h = weight_rate / (2 * a) + math.sqrt(_GAUSS_CUTOFF / a) + self.slack
                h += math.sqrt(max(poly, 0.0) / a)
                hw.append(h)
        return scale * np.asarray(hw)

    def box(self, scale=1.0, weight_rate=0.0, poly=0.0, points=16) -> Box:
        hw = self._half_widths(scale, weight_rate, poly)
        c = np.asarray(self.center)
        return Box(tuple(np.abs(c) + hw), points=points)

    def tail_mass(self, box: Box) -> float:
        c = np.asarray(self.center)
        lo, hi = box.lower - c, box.upper - c
        total, log_in = 1.0, 0.0
        for a, l, h in zip(self.rates, lo, hi):
            if a == 0:
                return math.inf
            s = math.sqrt(a)
            frac_out = 0.5 * (erfc(h * s) + erfc(-l * s))  # mass above h plus below l
            if frac_out >= 1.0:
                return float(self.amplitude * total * math.sqrt(math.pi / a))
            log_in += math.log1p(-frac_out)
            total *= math.sqrt(math.pi / a)
        # outside fraction 1 - prod(1 - f_i), computed without cancellation
        return float(self.amplitude * total * -math.expm1(log_in))

    def envelope(self, g):
        g = np.asarray(g, float)
        d2 = np.sum(np.asarray(self.rates) * (g - np.asarray(self.center)) ** 2, axis=-1)
        return self.amplitude * np.exp(-d2)

    def to_dict(self):
        return {"kind": "gaussian", "rates": list(self.rates), "center": list(self.center),
                "amplitude": self.amplitude}


@dataclass(frozen=True)
class CompactDecay(Decay):
    """Support inside ``center ± half_widths``; ``bound`` bounds ``|f|``."""

    half_widths: tuple[float, ...]
    center: tuple[float, ...] = ()
    bound: float = 1.0

    def __post_init__(self):
        hw = tuple(float(x) for x in self.half_widths)
        object.__setattr__(self, "half_widths", hw)
        if not self.center:
            object.__setattr__(self, "center", (0.0,) * len(hw))

    @property
    def dim(self) -> int:
        return len(self.half_widths)

    def box(self, scale=1.0, weight_rate=0.0, poly=0.0, points=16) -> Box:
        # the support is fixed; scaling only pads it
        return Box(tuple(h * max(scale, 1.0) for h in self.half_widths), points=points,
                   center=self.center)

    def support(self) -> Box:
        return Box(self.half_widths, center=self.center)

    def tail_mass(self, box: Box) -> float:
        sup = self.support()
        if np.all(box.lower <= sup.lower + 1e-12) and np.all(box.upper >= sup.upper - 1e-12):
            return 0.0
        return self.bound * sup.volume

    def envelope(self, g):
        g = np.asarray(g, float)
        inside = np.all(np.abs(g - np.asarray(self.center)) <= np.asarray(self.half_widths),
                        axis=-1)
        return np.where(inside, self.bound, 0.0)

    def to_dict(self):
        return {"kind": "compact", "half_widths": list(self.half_widths),
                "center": list(self.center)}


@dataclass(frozen=True)
class SlowGrowth(Decay):
    """``|f| ≤ C σ^order``: no decay, used for distributions."""

    order: float
    dim_: int = 1
    half_width: float = 8.0

    @property
    def dim(self) -> int:
        return self.dim_

    def box(self, scale=1.0, weight_rate=0.0, poly=0.0, points=16) -> Box:
        return Box.cube(self.dim_, self.half_width * scale, points=points)

    def tail_mass(self, box):
        return math.inf

    def envelope(self, g):
        return np.full(np.shape(g)[:-1], np.inf)

    def to_dict(self):
        return {"kind": "slow_growth", "order": self.order}


@dataclass(frozen=True)
class SampledDecay(Decay):
    """Essential support taken from sample images (inverses, products, convolutions).

    ``base`` is the box of the derived function; ``tail`` the mass estimate
    outside it, taken from the source metadata.
    """

    base: Box
    tail: float = 0.0

    @property
    def dim(self) -> int:
        return self.base.dim

    def box(self, scale=1.0, weight_rate=0.0, poly=0.0, points=16) -> Box:
        return Box(tuple(h * scale for h in self.base.half_widths), points=points,
                   center=self.base.center)

    def tail_mass(self, box):
        inside = np.all(box.lower <= self.base.lower + 1e-9) and \
            np.all(box.upper >= self.base.upper - 1e-9)
        return self.tail if inside else math.inf

    def envelope(self, g):
        return np.full(np.shape(g)[:-1], np.inf)

    def to_dict(self):
        return {"kind": "sampled", "center": list(self.base.center),
                "half_widths": list(self.base.half_widths), "tail": self.tail}

    @classmethod
    def from_points(cls, points: np.ndarray, tail: float = 0.0, pad: float = 0.05) -> "SampledDecay":
        p = np.asarray(points, float)
        lo, hi = p.min(axis=0), p.max(axis=0)
        center = 0.5 * (lo + hi)
        hw = 0.5 * (hi - lo) * (1.0 + pad) + 1e-3
        return cls(Box(tuple(hw), center=tuple(center)), tail)


@dataclass(frozen=True, eq=False)
class SmoothFunction:
    """A smooth function on the group in adapted coordinates.

    Parameters
    ----------
    evaluator : callable
        Maps points of shape ``(..., m)`` to values of shape ``(...)``
        (real or complex).  Must be pure.
    decay : Decay or None
        Decay metadata; ``None`` makes integrals refuse to bound tails.
    label : str
        Human-readable name used in reports.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    decay: Decay | None
    label: str = "f"
    dim: int = 0
    meta: dict = field(default_factory=dict)

    def __call__(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, float)
        if self.dim and g.shape[-1] != self.dim:
            raise InputError(f"{self.label}: expected points of dimension {self.dim}")
        return np.asarray(self.evaluator(g))

    def box(self, scale: float = 1.0, weight_rate: float = 0.0, poly: float = 0.0,
            points: int = 16) -> Box:
        if self.decay is None:
            raise InputError(f"{self.label}: no decay metadata")
        return self.decay.box(scale, weight_rate, poly, points=points)

    def scaled(self, c: complex, label: str | None = None) -> "SmoothFunction":
        return SmoothFunction(lambda g: c * self.evaluator(g), self.decay,
                              label or f"{c}*{self.label}", self.dim)

    def __sub__(self, other: "SmoothFunction") -> "SmoothFunction":
        decay = self.decay if self.decay is not None else other.decay
        return SmoothFunction(lambda g: self.evaluator(g) - other.evaluator(g), decay,
                              f"({self.label})-({other.label})", self.dim)

    def __add__(self, other: "SmoothFunction") -> "SmoothFunction":
        return SmoothFunction(lambda g: self.evaluator(g) + other.evaluator(g),
                              _union_decay(self.decay, other.decay),
                              f"({self.label})+({other.label})", self.dim)

    def check_metadata(self, n: int = 64, seed: int = 0) -> bool:
        """Spot check: ``|f|`` at the box corners and samples stays under 10× the envelope."""
        if self.decay is None:
            return False
        box = self.box()
        corners = np.array(np.meshgrid(*[[lo, hi] for lo, hi in zip(box.lower, box.upper)],
                                       indexing="ij")).reshape(box.dim, -1).T
        pts = np.vstack([corners, halton_points(box.dim, n, seed, box.lower, box.upper)])
        vals = np.abs(self(pts))
        env = self.decay.envelope(pts)
        return bool(np.all(vals <= 10.0 * env + 1e-300))


def _union_decay(a: Decay | None, b: Decay | None) -> Decay | None:
    """Decay of a sum: the union of both boxes; identical metadata is kept as is."""
    if a is None or b is None:
        return None
    if a == b:
        return a
    if isinstance(a, SlowGrowth) or isinstance(b, SlowGrowth):
        order = max(getattr(a, "order", 0.0), getattr(b, "order", 0.0))
        return SlowGrowth(order, a.dim)
    ba, bb = a.box(), b.box()
    lo = np.minimum(ba.lower, bb.lower)
    hi = np.maximum(ba.upper, bb.upper)
    box = Box(tuple(0.5 * (hi - lo)), center=tuple(0.5 * (hi + lo)))
    return SampledDecay(box, a.tail_mass(ba) + b.tail_mass(bb))


# ---------------------------------------------------------------------------
# probe library


def weight_growth_rate(r: Realization) -> float:
    """Rate ``c`` with ``log σ(t, n) ≲ c|t| + O(log(1 + |n|))``.

    Uses the largest real part of the eigenvalues of ``ad T_i`` summed over
    the complement basis (the Ad factor grows like ``e^{c|t|}``).
    """
    c = 0.0
    for i in range(r.k):
        ev = np.linalg.eigvals(r.adapted.ad(np.eye(r.dim)[i]))
        c += float(np.max(np.abs(ev.real), initial=0.0))
    return c


def gaussian(r: Realization, rate: float | tuple = 1.0, center=None, rates_t=None,
             rates_n=None, label: str | None = None) -> SmoothFunction:
    """``exp(-Σ a_i (g_i - c_i)²)`` in adapted coordinates."""
    m = r.dim
    rates = np.full(m, float(rate)) if np.ndim(rate) == 0 else np.asarray(rate, float)
    if rates_t is not None:
        rates[: r.k] = rates_t
    if rates_n is not None:
        rates[r.k:] = rates_n
    c = np.zeros(m) if center is None else np.asarray(center, float)

    def ev(g):
        return np.exp(-np.sum(rates * (g - c) ** 2, axis=-1))

    decay = GaussianDecay(tuple(rates), tuple(c))
    return SmoothFunction(ev, decay, label or f"gauss-{float(np.max(rates)):g}", m)


def bump(r: Realization, center=None, radius: float = 1.0, label: str | None = None) -> SmoothFunction:
    """Radial bump ``exp(1 - 1/(1 - |g-c|²/R²))`` (peak value 1, support radius R)."""
    m = r.dim
    c = np.zeros(m) if center is None else np.asarray(center, float)

    def ev(g):
        u = np.sum((g - c) ** 2, axis=-1) / radius ** 2
        inside = u < 1.0
        out = np.zeros(u.shape)
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside]))
        return out

    decay = CompactDecay((radius,) * m, tuple(c), 1.0)
    return SmoothFunction(ev, decay, label or "bump", m)


def tensor_bump(r: Realization, center=None, radius: float = 1.0,
                label: str | None = None) -> SmoothFunction:
    """Product ``Π_i exp(1 - 1/(1 - (g_i - c_i)²/R²))`` supported on a cube."""
    m = r.dim
    c = np.zeros(m) if center is None else np.asarray(center, float)

    def ev(g):
        u = ((np.asarray(g) - c) / radius) ** 2
        inside = u < 1.0
        e = np.where(inside, 1.0 - 1.0 / np.where(inside, 1.0 - u, 1.0), -np.inf)
        return np.exp(np.sum(e, axis=-1))

    decay = CompactDecay((radius,) * m, tuple(c), 1.0)
    return SmoothFunction(ev, decay, label or "tbump", m)


def oscillating_gaussian(r: Realization, xi=None, rate: float = 1.0,
                         label: str = "osc") -> SmoothFunction:
    """``e^{i⟨ξ, g⟩}·exp(-a|g|²)``."""
    m = r.dim
    xi = np.linspace(1.0, 2.0, m) if xi is None else np.asarray(xi, float)

    def ev(g):
        return np.exp(1j * (g @ xi) - rate * np.sum(g ** 2, axis=-1))

    return SmoothFunction(ev, GaussianDecay((rate,) * m), label, m)


def zero_function(r: Realization) -> SmoothFunction:
    return SmoothFunction(lambda g: np.zeros(np.shape(g)[:-1]),
                          CompactDecay((1.0,) * r.dim, bound=0.0), "zero", r.dim)


def constant_function(r: Realization, value: float = 1.0) -> SmoothFunction:
    return SmoothFunction(lambda g: np.full(np.shape(g)[:-1], value),
                          SlowGrowth(0.0, r.dim), f"const-{value:g}", r.dim)


def _bump_centers(m: int) -> list[np.ndarray]:
    alt = np.array([(-1.0) ** i for i in range(m)])
    return [np.zeros(m), 0.5 * np.ones(m), 0.75 * alt]


def probe_labels(r: Realization) -> tuple[str, ...]:
    labels = ["gauss-0.5", "gauss-1", "gauss-2", "bump-0", "bump-1", "bump-2", "osc", "zero"]
    if r.k >= 1 and r.d >= 1:
        labels.append("nonmember-n")
    return tuple(labels)


def probe(r: Realization, label: str) -> SmoothFunction:
    """Probe function by label (see :func:`probe_labels`)."""
    if label.startswith("gauss-"):
        try:
            a = float(label.split("-", 1)[1])
        except ValueError:
            raise InputError(f"bad Gaussian probe label {label!r}") from None
        return gaussian(r, a, label=label)
    if label == "gauss":
        return gaussian(r, 1.0, label="gauss")
    if label.startswith("bump-"):
        idx = int(label.split("-", 1)[1])
        centers = _bump_centers(r.dim)
        if not 0 <= idx < len(centers):
            raise InputError(f"bump index must be 0..{len(centers) - 1}")
        return tensor_bump(r, centers[idx], label=label)
    if label == "bump":
        return tensor_bump(r, label="bump")
    if label == "osc":
        return oscillating_gaussian(r)
    if label == "zero":
        return zero_function(r)
    if label == "nonmember-n":
        if r.k == 0:
            raise InputError("nonmember-n needs a nontrivial complement")
        # Gaussian in the nilradical only; no decay in t
        return gaussian(r, 1.0, rates_t=0.0, label="nonmember-n")
    raise InputError(f"unknown probe {label!r}; available: {', '.join(probe_labels(r))}")


def probe_set(r: Realization, members_only: bool = True) -> list[SmoothFunction]:
    labels = [lab for lab in probe_labels(r)
              if not (members_only and lab in ("zero", "nonmember-n"))]
    return [probe(r, lab) for lab in labels]
