"""Left- and right-invariant differential operators by finite differences.

For a word ``w = (j_1, …, j_n)`` of adapted basis indices,

    X_{j_1} ⋯ X_{j_n} φ(g) = ∂_{s_1} ⋯ ∂_{s_n} φ(g · e^{s_1 X_{j_1}} ⋯ e^{s_n X_{j_n}}) |_{s=0},

and the right-invariant ``X̃`` uses ``e^{s_n X_{j_n}} ⋯ e^{s_1 X_{j_1}} · g``.
Runs of equal consecutive letters share one parameter (``e^{sX}e^{s'X} =
e^{(s+s')X}``), which keeps the tensor stencil small.  A multi-index ``α``
stands for the word ``1^{α_1} 2^{α_2} ⋯ m^{α_m}``.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import ConstructionError, DepthExceededError, InputError
from ..numerics import MAX_FD_ORDER, default_step, mixed_partial
from ..realization import Realization
from .functions import SmoothFunction

__all__ = [
    "word_from_alpha",
    "runs",
    "left_derivative",
    "right_derivative",
    "word_derivative",
    "coordinate_derivative",
    "frame_change",
    "frame_matrix",
    "derivative_function",
    "multi_indices",
]

Word = tuple[int, ...]


def word_from_alpha(alpha: Sequence[int]) -> Word:
    """Word ``(0,…,0, 1,…,1, …)`` with ``alpha[i]`` copies of ``i``."""
    alpha = tuple(int(a) for a in alpha)
    if any(a < 0 for a in alpha):
        raise InputError(f"multi-index entries must be nonnegative: {alpha}")
    return tuple(i for i, a in enumerate(alpha) for _ in range(a))


def runs(word: Sequence[int]) -> list[tuple[int, int]]:
    """Merge consecutive equal letters: ``(0,0,2) -> [(0,2), (2,1)]``."""
    out: list[list[int]] = []
    for j in word:
        if out and out[-1][0] == j:
            out[-1][1] += 1
        else:
            out.append([int(j), 1])
    return [(j, o) for j, o in out]


def multi_indices(m: int, max_order: int, min_order: int = 0) -> list[tuple[int, ...]]:
    """All ``α ∈ ℕ^m`` with ``min_order ≤ |α| ≤ max_order``, graded then lexicographic."""
    out = []
    for total in range(min_order, max_order + 1):
        def rec(prefix, remaining, slots):
            if slots == 1:
                out.append(tuple(prefix + [remaining]))
                return
            for a in range(remaining, -1, -1):
                rec(prefix + [a], remaining - a, slots - 1)
        if m == 0:
            continue
        rec([], total, m)
    return out


def _check_word(r: Realization, word: Word) -> None:
    if len(word) > MAX_FD_ORDER:
        raise DepthExceededError(
            f"derivative order {len(word)} exceeds the finite-difference limit {MAX_FD_ORDER}")
    if any(not 0 <= j < r.dim for j in word):
        raise InputError(f"word letters must lie in 0..{r.dim - 1}: {word}")


def _flow_elements(r: Realization, rs: list[tuple[int, int]], params: np.ndarray,
                   reverse: bool) -> np.ndarray:
    """Group elements ``Π_r exp(s_r X_{j_r})`` for parameters of shape ``(..., R)``."""
    factors = []
    for col, (j, _) in enumerate(rs):
        e = np.zeros(params.shape[:-1] + (r.dim,))
        e[..., j] = params[..., col]  # exp of a pure direction is the identity map
        factors.append(e)
    if reverse:
        factors = factors[::-1]
    out = factors[0]
    for f in factors[1:]:
        out = r.multiply(out, f)
    return out


def flow_speed(r: Realization, g: np.ndarray, j: int, side: str = "left",
               eps: float = 1e-6) -> np.ndarray:
    """Coordinate speed ``|d/ds (g·e^{sX_j})|`` at ``s = 0`` (``e^{sX_j}·g`` on the right side)."""
    e = np.zeros(g.shape)
    e[..., j] = eps
    if side == "left":
        diff = r.multiply(g, e) - r.multiply(g, -e)
    else:
        diff = r.multiply(e, g) - r.multiply(-e, g)
    return np.linalg.norm(diff, axis=-1) / (2.0 * eps)


def word_derivative(r: Realization, f: Callable[[np.ndarray], np.ndarray], word: Sequence[int],
                    g: np.ndarray, side: str = "left", h: float | None = None) -> np.ndarray:
    """Apply the word ``X_{w_1} ⋯ X_{w_n}`` (or ``X̃``) to ``f`` at points ``g``.

    Parameters
    ----------
    side : {"left", "right"}
        ``"left"`` for left-invariant fields (right translations ``g·e^{sX}``),
        ``"right"`` for right-invariant fields (``e^{sX}·g``).

    Notes
    -----
    Flows can move the coordinates at speeds like ``e^{±t}`` on exponential
    groups.  Each flow step is therefore divided by the local coordinate
    speed, so the stencil spans about ``h`` in coordinates at every point,
    and the result is rescaled by ``speed^order``.
    """
    word = tuple(int(j) for j in word)
    _check_word(r, word)
    g = np.asarray(g, float)
    single = g.ndim == 1
    g2 = np.atleast_2d(g).reshape(-1, r.dim)
    if not word:
        out = np.asarray(f(g2))
        return out[0] if single else out.reshape(g.shape[:-1])
    rs = runs(word)
    orders = [o for _, o in rs]
    left = side == "left"
    if side not in ("left", "right"):
        raise InputError("side must be 'left' or 'right'")
    speed = np.stack([np.maximum(1e-12, flow_speed(r, g2, j, side)) for j, _ in rs], axis=-1)

    def F(params: np.ndarray) -> np.ndarray:
        e = _flow_elements(r, rs, params[:, None, :] / speed[None, :, :], reverse=not left)
        pts = r.multiply(g2[None, :, :], e) if left else r.multiply(e, g2[None, :, :])
        return np.asarray(f(pts))

    out = mixed_partial(F, orders, h) * np.prod(speed ** np.asarray(orders, float), axis=-1)
    return out[0] if single else out.reshape(g.shape[:-1])


def left_derivative(r: Realization, f: Callable, alpha: Sequence[int], g: np.ndarray,
                    h: float | None = None) -> np.ndarray:
    """``X^α f(g)`` with left-invariant fields of the adapted basis."""
    if len(alpha) != r.dim:
        raise InputError(f"multi-index must have length {r.dim}")
    return word_derivative(r, f, word_from_alpha(alpha), g, "left", h)


def right_derivative(r: Realization, f: Callable, alpha: Sequence[int], g: np.ndarray,
                     h: float | None = None) -> np.ndarray:
    """``X̃^α f(g)`` with right-invariant fields of the adapted basis."""
    if len(alpha) != r.dim:
        raise InputError(f"multi-index must have length {r.dim}")
    return word_derivative(r, f, word_from_alpha(alpha), g, "right", h)


def coordinate_derivative(f: Callable, alpha: Sequence[int], g: np.ndarray,
                          h: float | None = None) -> np.ndarray:
    """Euclidean partial derivative ``∂^α f`` in the coordinates."""
    alpha = tuple(int(a) for a in alpha)
    g = np.asarray(g, float)
    single = g.ndim == 1
    g2 = np.atleast_2d(g).reshape(-1, g.shape[-1])
    axes = [i for i, a in enumerate(alpha) if a]
    if not axes:
        out = np.asarray(f(g2))
        return out[0] if single else out.reshape(g.shape[:-1])
    if sum(alpha) > MAX_FD_ORDER:
        raise DepthExceededError(f"derivative order {sum(alpha)} exceeds {MAX_FD_ORDER}")

    def F(params):
        shift = np.zeros((params.shape[0], g2.shape[-1]))
        shift[:, axes] = params
        return np.asarray(f(g2[None, :, :] + shift[:, None, :]))

    out = mixed_partial(F, [alpha[i] for i in axes], h)
    return out[0] if single else out.reshape(g.shape[:-1])


def frame_matrix(r: Realization, g: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """Columns = coordinate components of the left-invariant fields ``X_j`` at ``g``.

    Computed by differentiating ``s ↦ g·e^{sX_j}`` (central differences with
    one Richardson step).  Batched over leading axes of ``g``.
    """
    g = np.asarray(g, float)
    m = r.dim
    lead = g.shape[:-1]
    g2 = g.reshape(-1, m)
    cols = []
    for j in range(m):
        def F(params, j=j):
            e = np.zeros((params.shape[0], m))
            e[:, j] = params[:, 0]
            return r.multiply(g2[None, :, :], e[:, None, :])
        cols.append(mixed_partial(F, (1,), h))
    mat = np.stack(cols, axis=-1)  # (N, m, m): [coord i, field j]
    return mat.reshape(lead + (m, m))


def frame_change(r: Realization, g: np.ndarray, h: float = 1e-3,
                 max_condition: float = 1e12) -> tuple[np.ndarray, np.ndarray]:
    """Express coordinate vector fields in the left-invariant frame.

    Returns ``(M, cond)`` where ``∂/∂x_i = Σ_l M[l, i] X_l`` at ``g`` and
    ``cond`` is the condition number of the frame matrix.

    Raises
    ------
    ConstructionError
        If the frame is numerically singular.
    """
    a = frame_matrix(r, g, h)
    cond = np.linalg.cond(a)
    if np.any(~np.isfinite(cond)) or np.any(cond > max_condition):
        raise ConstructionError("left-invariant frame is numerically singular",
                                float(np.max(cond)))
    return np.linalg.inv(a), cond


def derivative_function(r: Realization, f: SmoothFunction, alpha: Sequence[int] | None = None,
                        word: Sequence[int] | None = None, side: str = "left") -> SmoothFunction:
    """``X^α f`` (or a word) as a new :class:`SmoothFunction` sharing ``f``'s decay box."""
    if word is None:
        word = word_from_alpha(alpha if alpha is not None else (0,) * r.dim)
    word = tuple(word)
    _check_word(r, word)
    tag = "X~" if side == "right" else "X"
    return SmoothFunction(lambda g: word_derivative(r, f, word, g, side), f.decay,
                          f"{tag}{list(word)}({f.label})", r.dim)


def step_for(word: Sequence[int]) -> float:
    return default_step(max(len(word), 1))
