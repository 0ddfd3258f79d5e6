"""Campbell–Baker–Hausdorff product via Dynkin's commutator series.

Coefficients are generated once per degree as exact fractions.  For a
nilpotent algebra of class ``c`` every nested bracket of length ``c + 1``
vanishes, so truncating at degree ``c`` is exact.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ContractViolation

__all__ = ["MAX_CBH_ORDER", "dynkin_coefficients", "cbh"]

MAX_CBH_ORDER = 6

Word = tuple[int, ...]  # letters: 0 for x, 1 for y


def _segmentations(word: Word):
    """Ways of cutting ``word`` into consecutive blocks of the form x^r y^s."""
    if not word:
        yield []
        return
    for end in range(1, len(word) + 1):
        head = word[:end]
        # a block may not contain "y then x"
        if any(a == 1 and b == 0 for a, b in zip(head, head[1:])):
            break
        for rest in _segmentations(word[end:]):
            yield [head] + rest


@lru_cache(maxsize=None)
def dynkin_coefficients(degree: int) -> tuple[tuple[Fraction, Word], ...]:
    """Dynkin coefficients of the degree-``degree`` part of ``log(e^x e^y)``.

    Returns pairs ``(coefficient, word)`` meaning ``coefficient`` times the
    right-nested bracket ``[w1, [w2, … [w_{n-1}, w_n]…]]``.  Words whose
    nested bracket vanishes trivially are dropped.
    """
    if degree < 1:
        raise ValueError("degree must be positive")
    out = []
    for word in itertools.product((0, 1), repeat=degree):
        if degree > 1 and word[-1] == word[-2]:
            continue
        coeff = Fraction(0)
        for blocks in _segmentations(word):
            n = len(blocks)
            denom = degree
            for b in blocks:
                r = b.count(0)
                denom *= math.factorial(r) * math.factorial(len(b) - r)
            coeff += Fraction((-1) ** (n - 1), n * denom)
        if coeff:
            out.append((coeff, word))
    return tuple(out)


def cbh(bracket: Callable[[np.ndarray, np.ndarray], np.ndarray], x: np.ndarray,
        y: np.ndarray, order: int) -> np.ndarray:
    """``log(exp(x) exp(y))`` truncated at total degree ``order``.

    Parameters
    ----------
    bracket : callable
        Vectorised Lie bracket.
    x, y : numpy.ndarray
        Stacks of vectors (broadcastable) in a nilpotent algebra.
    order : int
        Nilpotency class of the ambient nilpotent (sub)algebra.

    Raises
    ------
    ContractViolation
        If ``order`` is outside 0..6.
    """
    if not 0 <= order <= MAX_CBH_ORDER:
        raise ContractViolation(f"CBH order {order} outside supported range 0..{MAX_CBH_ORDER}")
    x = np.asarray(x)
    y = np.asarray(y)
    shape = np.broadcast_shapes(x.shape, y.shape)
    z = np.broadcast_to(x, shape) + np.broadcast_to(y, shape)
    if order <= 1:
        return np.array(z)
    cache: dict[Word, np.ndarray] = {}

    def nested(word: Word) -> np.ndarray:
        if len(word) == 1:
            return x if word[0] == 0 else y
        if word not in cache:
            cache[word] = bracket(nested(word[:1]), nested(word[1:]))
        return cache[word]

    for deg in range(2, order + 1):
        for coeff, word in dynkin_coefficients(deg):
            z = z + float(coeff) * nested(word)
    return z
