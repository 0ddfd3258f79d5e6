"""Dense-matrix, quadrature and finite-difference utilities.

Everything here is vectorised over leading axes: a stack of matrices with
shape ``(..., n, n)`` is exponentiated or normed elementwise, and integrands
and finite-difference targets receive whole batches of points at once.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import InputError, UnsupportedDimensionError

__all__ = [
    "Box",
    "QuadResult",
    "matrix_exp",
    "operator_norm",
    "gauss_legendre",
    "integrate",
    "monte_carlo",
    "halton_points",
    "mixed_partial",
    "directional_derivative",
    "default_step",
    "batched_nelder_mead",
    "MAX_QUAD_DIM",
    "MAX_FD_ORDER",
]

MAX_QUAD_DIM = 6
MAX_FD_ORDER = 4

_TAYLOR_ORDER = 16
_SCALED_NORM = 0.5
_NORM_LIMIT = 1.0e300


# ---------------------------------------------------------------------------
# matrices


def _check_square(a: np.ndarray) -> None:
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise InputError(f"expected square matrices, got shape {a.shape}")


def matrix_exp(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with an order-16 Taylor core.

    Parameters
    ----------
    a : array_like, shape (..., n, n)
        Real or complex square matrices.  Each matrix in a stack gets its own
        scaling exponent, so small and large matrices can be mixed freely.

    Returns
    -------
    numpy.ndarray
        ``exp(a)`` with the same shape.

    Raises
    ------
    InputError
        If the input is not square or has non-finite entries.
    OverflowError
        If the result cannot be represented in double precision.
    """
    a = np.asarray(a)
    if not np.iscomplexobj(a):
        a = a.astype(float)
    _check_square(a)
    if not np.all(np.isfinite(a)):
        raise InputError("matrix_exp: non-finite entries")
    n = a.shape[-1]
    norms = np.abs(a).sum(axis=-2).max(axis=-1) if n else np.zeros(a.shape[:-2])
    if np.any(norms > _NORM_LIMIT):
        raise OverflowError("matrix_exp: norm too large for double range")
    with np.errstate(divide="ignore"):
        s = np.ceil(np.log2(np.maximum(norms, 1e-300) / _SCALED_NORM))
    s = np.maximum(s, 0).astype(int)
    scaled = a / np.ldexp(1.0, s)[..., None, None]
    eye = np.eye(n, dtype=a.dtype)
    result = eye + scaled / _TAYLOR_ORDER
    for j in range(_TAYLOR_ORDER - 1, 0, -1):
        result = eye + (scaled @ result) / j
    smax = int(s.max()) if s.size else 0
    for i in range(smax):
        with np.errstate(over="ignore", invalid="ignore"):
            squared = result @ result
        result = np.where((s > i)[..., None, None], squared, result)
    if not np.all(np.isfinite(result)):
        raise OverflowError("matrix_exp: result overflows double precision")
    return result


def operator_norm(a: np.ndarray) -> np.ndarray | float:
    """Spectral norm (largest singular value) of one matrix or a stack.

    Computed as the square root of the top eigenvalue of the Gram matrix
    ``AᴴA`` (symmetric LAPACK solver).  Squaring only hurts the small
    singular values, so the largest one keeps full relative accuracy.
    """
    a = np.asarray(a)
    _check_square(a)
    if a.shape[-1] == 0:
        return np.zeros(a.shape[:-2]) if a.ndim > 2 else 0.0
    gram = np.swapaxes(a.conj(), -1, -2) @ a
    sv = np.sqrt(np.maximum(np.linalg.eigvalsh(gram)[..., -1], 0.0))
    return float(sv) if sv.ndim == 0 else sv


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class Box:
    """Axis-aligned integration domain ``center ± half_widths``.

    Each half-axis is cut into ``panels`` pieces carrying ``points``
    Gauss–Legendre nodes apiece.  With ``grading="geometric"`` the
    breakpoints sit at ``R/2**j`` instead of being evenly spaced, which suits
    integrands that decay away from the center.
    """

    half_widths: tuple[float, ...]
    points: int = 16
    center: tuple[float, ...] | None = None
    panels: int = 1
    grading: str = "uniform"

    def __post_init__(self):
        hw = tuple(float(x) for x in np.atleast_1d(self.half_widths))
        object.__setattr__(self, "half_widths", hw)
        if not hw or not all(math.isfinite(x) and x > 0 for x in hw):
            raise InputError(f"Box half-widths must be finite and positive: {hw}")
        if self.center is None:
            object.__setattr__(self, "center", (0.0,) * len(hw))
        else:
            c = tuple(float(x) for x in np.atleast_1d(self.center))
            if len(c) != len(hw):
                raise InputError("Box center and half-widths differ in length")
            object.__setattr__(self, "center", c)
        if self.points < 1 or self.panels < 1:
            raise InputError("Box needs at least one point and one panel per axis")
        if self.grading not in ("uniform", "geometric"):
            raise InputError(f"unknown grading {self.grading!r}")

    @classmethod
    def cube(cls, dim: int, half_width: float, **kw) -> "Box":
        return cls((half_width,) * dim, **kw)

    @property
    def dim(self) -> int:
        return len(self.half_widths)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.center) - np.asarray(self.half_widths)

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.center) + np.asarray(self.half_widths)

    @property
    def volume(self) -> float:
        return float(np.prod(2.0 * np.asarray(self.half_widths)))

    def scaled(self, factor: float) -> "Box":
        return Box(tuple(factor * r for r in self.half_widths), self.points,
                   self.center, self.panels, self.grading)

    def with_points(self, points: int, panels: int | None = None) -> "Box":
        return Box(self.half_widths, points, self.center,
                   self.panels if panels is None else panels, self.grading)

    def breakpoints(self, axis: int) -> np.ndarray:
        r = self.half_widths[axis]
        if self.grading == "uniform":
            pos = r * np.arange(1, self.panels + 1) / self.panels
        else:
            pos = r * 2.0 ** np.arange(-(self.panels - 1), 1)
        rel = np.concatenate([-pos[::-1], [0.0], pos])
        return self.center[axis] + rel

    def axis_rule(self, axis: int) -> tuple[np.ndarray, np.ndarray]:
        return composite_rule(self.breakpoints(axis), self.points)

    def contains(self, points: np.ndarray, slack: float = 0.0) -> np.ndarray:
        p = np.asarray(points)
        return np.all(np.abs(p - np.asarray(self.center))
                      <= np.asarray(self.half_widths) * (1 + slack), axis=-1)


@lru_cache(maxsize=None)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``n``-point Gauss–Legendre rule on ``[a, b]``."""
    x, w = _leggauss(int(n))
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def composite_rule(breaks: Sequence[float], points: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss–Legendre rule over consecutive breakpoints."""
    xs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b > a:
            x, w = gauss_legendre(points, a, b)
            xs.append(x)
            ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


@dataclass(frozen=True)
class QuadResult:
    """Outcome of a truncated integral.

    ``tail_bound`` estimates the mass outside the box (from decay metadata
    when the caller supplies it); ``truncated`` is set when no such estimate
    was available, so the box value may miss an uncontrolled tail.
    """

    value: complex | float
    tail_bound: float
    nodes_used: int
    truncated: bool = False
    error_estimate: float = 0.0

    def __post_init__(self):
        if not self.tail_bound >= 0:
            raise InputError("tail_bound must be nonnegative")


TailSpec = float | Callable[[Box], float] | None


def _resolve_tail(tail: TailSpec, box: Box) -> tuple[float, bool]:
    if tail is None:
        return 0.0, True
    value = tail(box) if callable(tail) else float(tail)
    if not math.isfinite(value):
        return math.inf, True
    return float(value), False


def _finish_sum(chunks: list) -> complex | float:
    arr = np.asarray(chunks)
    if np.iscomplexobj(arr):
        return complex(math.fsum(arr.real), math.fsum(arr.imag))
    return math.fsum(arr)


def tensor_rule(rules: Sequence[tuple[np.ndarray, np.ndarray]], chunk: int = 1 << 16):
    """Yield ``(points, weights)`` chunks of a tensor-product rule."""
    sizes = [len(x) for x, _ in rules]
    total = int(np.prod(sizes))
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(start + chunk, total)), sizes)
        pts = np.stack([rules[d][0][i] for d, i in enumerate(idx)], axis=-1)
        wts = np.prod([rules[d][1][i] for d, i in enumerate(idx)], axis=0)
        yield pts, wts


def integrate(f: Callable[[np.ndarray], np.ndarray], box: Box, tail: TailSpec = None,
              chunk: int = 1 << 16) -> QuadResult:
    """Tensor-product Gauss–Legendre integral of ``f`` over ``box``.

    Parameters
    ----------
    f : callable
        Vectorised integrand mapping points of shape ``(N, D)`` to values of
        shape ``(N,)`` (real or complex).
    box : Box
        Integration domain and node layout.
    tail : float or callable, optional
        Tail estimate for the mass outside the box, or a function computing
        it from the box.  Without it the result is flagged ``truncated``.

    Raises
    ------
    UnsupportedDimensionError
        If ``box.dim`` exceeds six; use :func:`monte_carlo` instead.
    """
    if box.dim > MAX_QUAD_DIM:
        raise UnsupportedDimensionError(
            f"tensor quadrature limited to dimension {MAX_QUAD_DIM}; use monte_carlo")
    rules = [box.axis_rule(i) for i in range(box.dim)]
    sums, nodes = [], 0
    for pts, wts in tensor_rule(rules, chunk):
        vals = np.asarray(f(pts))
        if vals.shape != wts.shape:
            vals = np.broadcast_to(vals, wts.shape)
        sums.append(np.sum(vals * wts))
        nodes += len(wts)
    tail_bound, truncated = _resolve_tail(tail, box)
    return QuadResult(_finish_sum(sums), tail_bound, nodes, truncated)


def halton_points(dim: int, n: int, seed: int, lower=None, upper=None) -> np.ndarray:
    """Scrambled Halton points, deterministic for a given seed."""
    u = qmc.Halton(d=dim, scramble=True, seed=np.random.default_rng(seed)).random(n)
    if lower is None:
        return u
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    return lower + u * (upper - lower)


def monte_carlo(f: Callable[[np.ndarray], np.ndarray], box: Box, n_samples: int,
                seed: int = 0, replicates: int = 8) -> QuadResult:
    """Randomised quasi-Monte Carlo integral over ``box``.

    The sample budget is split across ``replicates`` independently scrambled
    Halton sequences; the reported ``tail_bound`` is the standard error of
    the replicate means (there is no truncation estimate here).
    """
    if n_samples < 1:
        raise InputError("n_samples must be positive")
    replicates = max(1, min(replicates, n_samples))
    per = -(-n_samples // replicates)
    seeds = np.random.SeedSequence(seed).spawn(replicates)
    means = []
    for ss in seeds:
        u = qmc.Halton(d=box.dim, scramble=True, seed=np.random.default_rng(ss)).random(per)
        vals = np.asarray(f(box.lower + u * (box.upper - box.lower)))
        means.append(np.mean(vals))
    means = np.asarray(means)
    vol = box.volume
    value = vol * np.mean(means)
    if np.iscomplexobj(value):
        value = complex(value)
    else:
        value = float(value)
    stderr = 0.0
    if replicates > 1:
        stderr = float(vol * np.std(means, ddof=1) / math.sqrt(replicates))
    return QuadResult(value, stderr, per * replicates, truncated=False, error_estimate=stderr)


# ---------------------------------------------------------------------------
# finite differences

# Central stencils (offsets in units of h, weights) for derivative orders 1..4,
# all with an O(h^2) leading error so one Richardson step gives O(h^4).
_STENCILS = {
    1: ((-1.0, 1.0), (-0.5, 0.5)),
    2: ((-1.0, 0.0, 1.0), (1.0, -2.0, 1.0)),
    3: ((-2.0, -1.0, 1.0, 2.0), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2.0, -1.0, 0.0, 1.0, 2.0), (1.0, -4.0, 6.0, -4.0, 1.0)),
}

# Default steps balance the O(h^4) truncation error against eps/h^order roundoff.
_DEFAULT_STEPS = {1: 1e-3, 2: 2e-3, 3: 5e-3, 4: 1e-2}


def default_step(total_order: int) -> float:
    """Finite-difference step used when none is given, by total order."""
    return _DEFAULT_STEPS.get(int(total_order), 1e-2)


@lru_cache(maxsize=None)
def _tensor_stencil(orders: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    parts = [_STENCILS[o] for o in orders]
    offsets = np.array(list(itertools.product(*[p[0] for p in parts])), dtype=float)
    weights = np.array([np.prod(w) for w in itertools.product(*[p[1] for p in parts])])
    offsets = offsets.reshape(len(weights), len(orders))
    return offsets, weights


def mixed_partial(F: Callable[[np.ndarray], np.ndarray], orders: Sequence[int],
                  h: float | None = None) -> np.ndarray:
    """Mixed partial derivative of ``F`` at the origin of its parameter space.

    Parameters
    ----------
    F : callable
        Maps a parameter array of shape ``(P, R)`` to values of shape
        ``(P, ...)``; trailing axes are carried through (e.g. a batch of base
        points).
    orders : sequence of int
        Derivative order in each of the ``R`` parameters, each in 1..4.
    h : float, optional
        Step size; defaults to :func:`default_step` of the total order.

    Returns
    -------
    numpy.ndarray
        Richardson-extrapolated estimate ``(4 D(h/2) - D(h)) / 3``.
    """
    orders = tuple(int(o) for o in orders)
    if not orders:
        return np.asarray(F(np.zeros((1, 0))))[0]
    if any(o < 1 or o > MAX_FD_ORDER for o in orders):
        raise InputError(f"derivative orders must lie in 1..{MAX_FD_ORDER}: {orders}")
    total = sum(orders)
    if total > MAX_FD_ORDER:
        raise InputError(f"total derivative order {total} exceeds {MAX_FD_ORDER}")
    h = default_step(total) if h is None else float(h)
    if not h > 0:
        raise InputError("step h must be positive")
    offsets, weights = _tensor_stencil(orders)
    params = np.concatenate([offsets * h, offsets * (h / 2)])
    vals = np.asarray(F(params))
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite value in finite-difference stencil")
    p = len(weights)
    coarse = np.tensordot(weights, vals[:p], axes=1) / h ** total
    fine = np.tensordot(weights, vals[p:], axes=1) / (h / 2) ** total
    return (4.0 * fine - coarse) / 3.0


def directional_derivative(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                           curve: Callable[[np.ndarray], np.ndarray], order: int = 1,
                           h: float | None = None) -> float:
    """Derivative of ``f ∘ curve`` at parameter 0.

    ``curve`` maps an array of parameters ``s`` (shape ``(P,)``) to points of
    shape ``(P, D)`` with ``curve(0) == x``; ``f`` maps points to values.
    """
    x = np.asarray(x, float)
    c0 = np.asarray(curve(np.zeros(1)))[0]
    if not np.allclose(c0, x, rtol=1e-12, atol=1e-12):
        raise InputError("curve(0) must equal x")
    val = mixed_partial(lambda s: np.asarray(f(np.asarray(curve(s[:, 0])))), (order,), h)
    val = np.asarray(val)
    return complex(val) if np.iscomplexobj(val) else float(val)


# ---------------------------------------------------------------------------
# local optimisation


def batched_nelder_mead(f: Callable[[np.ndarray, np.ndarray], np.ndarray], x0: np.ndarray,
                        step: np.ndarray | float, lower: np.ndarray | None = None,
                        upper: np.ndarray | None = None, maxiter: int = 100,
                        xtol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Minimise many independent problems with Nelder–Mead in lockstep.

    Parameters
    ----------
    f : callable
        ``f(x, idx)`` returns objective values for points ``x`` of shape
        ``(N, D)`` belonging to problems ``idx`` (shape ``(N,)``).
    x0 : array, shape (P, D)
        Starting point of each problem.
    step : float or array (P, D)
        Initial simplex edge lengths.
    lower, upper : array (P, D), optional
        Box constraints, enforced by clipping trial points.

    Returns
    -------
    (x_best, f_best) with shapes ``(P, D)`` and ``(P,)``.
    """
    x0 = np.atleast_2d(np.asarray(x0, float))
    p, d = x0.shape
    step = np.broadcast_to(np.asarray(step, float), (p, d))
    lo = np.full((p, d), -np.inf) if lower is None else np.broadcast_to(lower, (p, d))
    hi = np.full((p, d), np.inf) if upper is None else np.broadcast_to(upper, (p, d))
    all_idx = np.arange(p)

    def clip(x):
        return np.clip(x, lo, hi)

    def evaluate(x, idx):
        vals = np.asarray(f(x, idx), float)
        return np.where(np.isnan(vals), np.inf, vals)

    simplex = np.repeat(x0[:, None, :], d + 1, axis=1)
    for j in range(d):
        simplex[:, j + 1, j] += step[:, j]
    simplex = clip(simplex.transpose(1, 0, 2)).transpose(1, 0, 2)
    fs = evaluate(simplex.reshape(-1, d), np.repeat(all_idx, d + 1)).reshape(p, d + 1)
    active = np.ones(p, bool)
    for _ in range(maxiter):
        order = np.argsort(fs, axis=1)
        simplex = np.take_along_axis(simplex, order[:, :, None], axis=1)
        fs = np.take_along_axis(fs, order, axis=1)
        spread = np.max(np.abs(simplex[:, 1:] - simplex[:, :1]), axis=(1, 2))
        active &= spread > xtol * (1.0 + np.max(np.abs(simplex[:, 0]), axis=1))
        ids = np.flatnonzero(active)
        if ids.size == 0:
            break
        s, fv = simplex[ids], fs[ids]
        worst, fw = s[:, -1], fv[:, -1]
        c = s[:, :-1].mean(axis=1)
        xr = np.clip(2 * c - worst, lo[ids], hi[ids])
        fr = evaluate(xr, ids)
        new_x, new_f = worst.copy(), fw.copy()
        shrink = np.zeros(len(ids), bool)
        # expansion
        exp_mask = fr < fv[:, 0]
        if exp_mask.any():
            xe = np.clip(c[exp_mask] + 2 * (c[exp_mask] - worst[exp_mask]), lo[ids[exp_mask]],
                         hi[ids[exp_mask]])
            fe = evaluate(xe, ids[exp_mask])
            better = fe < fr[exp_mask]
            new_x[exp_mask] = np.where(better[:, None], xe, xr[exp_mask])
            new_f[exp_mask] = np.where(better, fe, fr[exp_mask])
        # plain reflection
        refl = ~exp_mask & (fr < fv[:, -2])
        new_x[refl], new_f[refl] = xr[refl], fr[refl]
        # contraction
        con = ~exp_mask & ~refl
        if con.any():
            outside = fr[con] < fw[con]
            target = np.where(outside[:, None], xr[con], worst[con])
            xc = c[con] + 0.5 * (target - c[con])
            fc = evaluate(xc, ids[con])
            ok = fc < np.where(outside, fr[con], fw[con])
            sub = np.flatnonzero(con)
            new_x[sub[ok]], new_f[sub[ok]] = xc[ok], fc[ok]
            shrink[sub[~ok]] = True
        simplex[ids, -1], fs[ids, -1] = new_x, new_f
        if shrink.any():
            sid = ids[shrink]
            best = simplex[sid, :1]
            pts = best + 0.5 * (simplex[sid, 1:] - best)
            vals = evaluate(pts.reshape(-1, d), np.repeat(sid, d)).reshape(len(sid), d)
            simplex[sid, 1:], fs[sid, 1:] = pts, vals
    k = np.argmin(fs, axis=1)
    return simplex[all_idx, k], fs[all_idx, k]
