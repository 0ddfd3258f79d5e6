"""The group ``G = 𝔠 × 𝔫`` built from a solvable Lie algebra.

Coordinates are taken in the *adapted basis*: a basis of the complement
``𝔠`` followed by the declared basis of the nilradical ``𝔫``.  A group
element is a float array of shape ``(..., m)`` whose first ``k`` entries are
``t ∈ 𝔠`` and last ``d`` entries are ``n ∈ 𝔫``; all group operations
broadcast over the leading axes.

The product law is

    (t, x)·(t', x') = (t + t', P(t, t') ∘ x ∘ e^{ad t} x'),

with ``∘`` the CBH product of ``𝔫`` and ``P(t, t') = cbh(t, t') - t - t'``
computed in the nilpotent subalgebra ``𝔤₀``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from . import algebra as alg
from .algebra import LieAlgebra, Subspace
from .cbh import MAX_CBH_ORDER, cbh
from .errors import ConstructionError, ContractViolation, InputError, UnsupportedDirectionError
from .numerics import matrix_exp

__all__ = [
    "Realization",
    "realize",
    "find_general_position",
    "eigenvalue_clusters",
    "zero_eigenspace",
    "choose_complement",
    "cbh_polynomial_P",
    "multiply",
    "inverse",
    "exp_pure",
    "adjoint",
    "modular",
    "alternate_complement_check",
    "translation_jacobian",
    "group_law_report",
]

GENERAL_POSITION_DRAWS = 64
EIGEN_CLUSTER_TOL = 1e-7
_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# general position and the zero root space


def _cluster_tol(m: int, scale: float) -> float:
    # A Jordan block of size j perturbs eigenvalues by about (eps·‖A‖)^(1/j)·‖A‖^(1-1/j);
    # the 1e-7 floor alone would split defective eigenvalues into spurious clusters.
    return max(EIGEN_CLUSTER_TOL, 10.0 * _EPS ** (1.0 / max(m, 1))) * max(1.0, scale)


def eigenvalue_clusters(mat: np.ndarray, tol: float | None = None) -> list[tuple[complex, int]]:
    """Group the eigenvalues of ``mat`` into clusters (center, multiplicity)."""
    mat = np.asarray(mat, float)
    m = mat.shape[0]
    if m == 0:
        return []
    ev = np.linalg.eigvals(mat)
    tol = _cluster_tol(m, float(np.linalg.norm(mat, 2))) if tol is None else tol
    # single-linkage clustering
    labels = list(range(m))
    for i in range(m):
        for j in range(i + 1, m):
            if abs(ev[i] - ev[j]) <= tol:
                old, new = labels[j], labels[i]
                labels = [new if lab == old else lab for lab in labels]
    clusters = {}
    for lab, val in zip(labels, ev):
        clusters.setdefault(lab, []).append(val)
    return [(complex(np.mean(v)), len(v)) for v in clusters.values()]


def _position_score(a: LieAlgebra, x: np.ndarray) -> tuple[int, float]:
    clusters = eigenvalue_clusters(a.ad(x / max(np.linalg.norm(x), 1e-300)))
    centers = [c for c, _ in clusters]
    gap = min((abs(p - q) for i, p in enumerate(centers) for q in centers[i + 1:]),
              default=np.inf)
    return len(centers), float(gap)


def find_general_position(a: LieAlgebra, n: Subspace | None = None, seed: int = 0,
                          draws: int = GENERAL_POSITION_DRAWS,
                          hint: np.ndarray | None = None) -> np.ndarray:
    """Seeded search for an element in general position.

    Draws ``draws`` standard-normal candidates and keeps the one whose
    ``ad`` has the most distinct eigenvalues, breaking ties by the largest
    minimum gap between distinct eigenvalues.  When ``hint`` (columns
    spanning a preferred complement) is given, a generic element of its
    span is returned instead whenever it achieves the same eigenvalue count.
    """
    m = a.dim
    rng = np.random.default_rng(seed)
    cands = rng.standard_normal((draws, m))
    best, best_score = cands[0], (-1, -np.inf)
    for x in cands:
        score = _position_score(a, x)
        if score > best_score:
            best, best_score = x, score
    if hint is not None and np.size(hint):
        h = np.asarray(hint, float).reshape(m, -1)
        coeffs = 1.0 + rng.random(h.shape[1])  # generic positive weights
        x = h @ coeffs
        if _position_score(a, x)[0] >= best_score[0]:
            return x
    return best


def zero_eigenspace(a: LieAlgebra, x: np.ndarray) -> Subspace:
    """Generalized 0-eigenspace of ``ad(x)``, i.e. ``ker ad(x)^m``.

    The invariant subspace is extracted from an ordered real Schur form, which
    stays reliable when small nonzero eigenvalues would vanish in ``ad(x)^m``;
    the kernel property is then confirmed on ``ad(x)^m``.
    """
    m = a.dim
    x = np.asarray(x, float)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        return Subspace.whole(m)
    adx = a.ad(x / nrm)
    zero_mult = sum(mult for c, mult in eigenvalue_clusters(adx)
                    if abs(c) <= _cluster_tol(m, float(np.linalg.norm(adx, 2))))
    if zero_mult == 0:
        return Subspace.zero(m)
    if zero_mult == m:
        return Subspace.whole(m)
    ev = np.linalg.eigvals(adx)
    cut = np.sort(np.abs(ev))[zero_mult - 1:zero_mult + 1].mean()
    _, z, sdim = sla.schur(adx, output="real", sort=lambda re, im: np.hypot(re, im) <= cut)
    if sdim != zero_mult:
        raise ConstructionError(f"Schur reordering found {sdim} zero roots, expected {zero_mult}")
    g0 = Subspace(z[:, :sdim])
    power = np.linalg.matrix_power(adx, m)
    resid = np.linalg.norm(power @ g0.basis) / max(1.0, np.linalg.norm(power))
    if resid > 1e-6:
        raise ConstructionError(f"ad(X)^m does not vanish on the zero root space ({resid:.2e})")
    return g0


def _canonical_orientation(basis: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of a column span, aligned with coordinate axes."""
    if basis.shape[1] == 0:
        return basis
    q = np.linalg.qr(basis)[0]
    _, _, piv = sla.qr(q.T, pivoting=True)
    pivots = piv[: q.shape[1]]
    ech = q @ np.linalg.inv(q[pivots, :])  # identity on the pivot rows
    order = np.argsort(pivots)
    ech = ech[:, order]
    out = np.linalg.qr(ech)[0]
    # keep each vector pointing along its pivot axis
    signs = np.sign(np.sum(out * ech, axis=0))
    signs[signs == 0] = 1.0
    return out * signs


def choose_complement(g0: Subspace, n: Subspace, hint: np.ndarray | None = None,
                      tol: float = alg.RANK_TOL) -> Subspace:
    """Orthogonal complement of ``𝔤₀ ∩ 𝔫`` inside ``𝔤₀``.

    If ``hint`` is given and lies in ``𝔤₀``, its projection onto the same
    complement is used, which keeps the hint's orientation.
    """
    m = g0.ambient
    if alg.rank(np.hstack([g0.basis, n.basis])) != m:
        raise ConstructionError("𝔤₀ + 𝔫 does not span 𝔤: the nilradical looks invalid")
    w = alg.intersection(g0, n, tol)
    qw = w.orthonormal()
    proj = np.eye(m) - qw @ qw.T
    k = g0.dim - w.dim
    if k != m - n.dim:
        raise ConstructionError(f"complement dimension {k} differs from m - d = {m - n.dim}")
    if k == 0:
        return Subspace.zero(m)
    if hint is not None and np.size(hint):
        h = np.asarray(hint, float).reshape(m, -1)
        if h.shape[1] == k and g0.contains(h, 1e-7):
            ph = proj @ h
            if alg.rank(ph) == k:
                q, r = np.linalg.qr(ph)
                q = q * np.sign(np.diag(r))
                return Subspace(q)
        warnings.warn("complement hint ignored: it does not lie in the zero root space",
                      stacklevel=2)
    u, s, _ = np.linalg.svd(proj @ g0.orthonormal(), full_matrices=False)
    return Subspace(_canonical_orientation(u[:, :k]))


# ---------------------------------------------------------------------------
# realization


@dataclass(frozen=True, eq=False)
class Realization:
    """Coordinates ``(t, n) ∈ 𝔠 × 𝔫`` and the product law on them.

    Construct with :func:`realize`.  ``basis`` holds the adapted basis as
    columns in input coordinates, ``adapted`` the structure constants in that
    basis.
    """

    algebra: LieAlgebra
    nilradical: Subspace
    zero_space: Subspace
    complement: Subspace
    general_position: np.ndarray
    basis: np.ndarray
    adapted: LieAlgebra
    n_class: int
    g0_class: int
    name: str = ""
    seed: int = 0
    _c_abelian: bool = field(default=True, repr=False)

    # dimensions -------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def k(self) -> int:
        return self.complement.dim

    @property
    def d(self) -> int:
        return self.nilradical.dim

    @property
    def cbh_order(self) -> int:
        return self.n_class

    @property
    def labels(self) -> tuple[str, ...]:
        """Adapted-basis labels (``T1..Tk`` then the nilradical labels)."""
        out = []
        for j in range(self.dim):
            col = self.basis[:, j]
            nz = np.flatnonzero(np.abs(col) > 1e-12)
            if len(nz) == 1 and abs(abs(col[nz[0]]) - 1) < 1e-12:
                sign = "-" if col[nz[0]] < 0 else ""
                out.append(sign + self.algebra.labels[nz[0]])
            else:
                out.append(f"b{j + 1}")
        return tuple(out)

    def identity(self, shape: tuple[int, ...] = ()) -> np.ndarray:
        return np.zeros(shape + (self.dim,))

    def split(self, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = np.asarray(g)
        return g[..., : self.k], g[..., self.k:]

    def join(self, t: np.ndarray, n: np.ndarray) -> np.ndarray:
        t = np.asarray(t, float)
        n = np.asarray(n, float)
        shape = np.broadcast_shapes(t.shape[:-1], n.shape[:-1])
        return np.concatenate([np.broadcast_to(t, shape + t.shape[-1:]),
                               np.broadcast_to(n, shape + n.shape[-1:])], axis=-1)

    def to_adapted(self, v: np.ndarray) -> np.ndarray:
        """Adapted coordinates of Lie algebra vectors given in the input basis."""
        return np.linalg.solve(self.basis, np.asarray(v, float).T).T

    def from_adapted(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, float) @ self.basis.T

    # brackets ---------------------------------------------------------------
    def bracket_n(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        c = self.adapted.constants[self.k:, self.k:, self.k:]
        return np.einsum("...i,...j,ijk->...k", x, y, c)

    def ad_t_on_n(self, t: np.ndarray) -> np.ndarray:
        """Matrix of ``ad(t)`` restricted to 𝔫 (d×d), batched over ``t``."""
        c = self.adapted.constants[: self.k, self.k:, self.k:]
        return np.einsum("...i,ijk->...kj", t, c)

    def exp_ad_t(self, t: np.ndarray) -> np.ndarray:
        """``e^{ad t}`` restricted to 𝔫 (the ideal block of the full matrix)."""
        return self.exp_ad_t_full(t)[..., self.k:, self.k:]

    def cbh_n(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return cbh(self.bracket_n, x, y, self.n_class)

    # group law --------------------------------------------------------------
    def P(self, t: np.ndarray, t2: np.ndarray) -> np.ndarray:
        return cbh_polynomial_P(self, t, t2)

    def multiply(self, g: np.ndarray, h: np.ndarray) -> np.ndarray:
        g = np.asarray(g, float)
        h = np.asarray(h, float)
        t, x = self.split(g)
        t2, x2 = self.split(h)
        if self.d == 0:
            return t + t2
        if self.k:
            rot = self.exp_ad_t(t)  # computed on g's own batch shape, then broadcast
            y = np.einsum("...ij,...j->...i", rot, x2)
        else:
            y = x2
        n = self.cbh_n(x, y)
        if self.k and not self._c_abelian:
            n = self.cbh_n(self.P(t, t2), n)
        t_out = t + t2
        n = np.broadcast_to(n, np.broadcast_shapes(n.shape[:-1], t_out.shape[:-1]) + (self.d,))
        t_out = np.broadcast_to(t_out, n.shape[:-1] + (self.k,))
        return np.concatenate([t_out, n], axis=-1)

    def inverse(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, float)
        t, x = self.split(g)
        if self.k and self.d:
            x = np.einsum("...ij,...j->...i", self.exp_ad_t(-t), x)
        return np.concatenate([-t, -x], axis=-1)

    def exp_pure(self, v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        v = np.asarray(v, float)
        if v.shape[-1] != self.dim:
            raise InputError(f"vector must have length {self.dim}")
        t, n = self.split(v)
        scale = max(1.0, float(np.abs(v).max(initial=0.0)))
        if np.any((np.abs(t).max(axis=-1, initial=0.0) > tol * scale)
                  & (np.abs(n).max(axis=-1, initial=0.0) > tol * scale)):
            raise UnsupportedDirectionError("exp_pure: direction mixes 𝔠 and 𝔫 components")
        return v.copy()

    def exp_zero_space(self, v: np.ndarray) -> np.ndarray:
        """Group exponential of ``v ∈ 𝔤₀`` (adapted coordinates).

        Uses ``exp(v) = exp(n')·exp(t)`` with ``n' = cbh(v, -t)``, which lies
        in ``𝔤₀ ∩ 𝔫`` because ``𝔤₀`` is nilpotent.
        """
        v = np.asarray(v, float)
        t, _ = self.split(v)
        tt = np.concatenate([t, np.zeros(t.shape[:-1] + (self.d,))], axis=-1)
        n_prime = cbh(self.adapted.bracket, v, -tt, self.g0_class)
        resid = np.abs(n_prime[..., : self.k]).max(initial=0.0)
        if resid > 1e-9 * max(1.0, float(np.abs(v).max(initial=0.0))):
            raise ContractViolation("exp_zero_space: argument not in 𝔤₀")
        return np.concatenate([t, n_prime[..., self.k:]], axis=-1)

    # adjoint representation -------------------------------------------------
    def ad_s(self, v: np.ndarray) -> np.ndarray:
        return self.adapted.ad(np.asarray(v, float))

    @cached_property
    def _t_eigen(self) -> list | None:
        """Eigen-decompositions of ``ad T_i`` on 𝔤, or None if one is defective.

        The ``ad T_i`` commute when 𝔠 is abelian, so ``e^{ad t}`` is the product
        of ``V_i e^{t_i Λ_i} V_i^{-1}``; this is exact up to rounding and far
        cheaper than a batched Taylor exponential.
        """
        if not self._c_abelian:
            return None
        out = []
        for i in range(self.k):
            a = self.adapted.ad(np.eye(self.dim)[i])
            lam, v = np.linalg.eig(a)
            if np.linalg.cond(v) > 1e6:
                return None
            out.append((lam, v, np.linalg.inv(v)))
        return out

    def exp_ad_t_full(self, t: np.ndarray) -> np.ndarray:
        """``e^{ad t}`` on 𝔤 for ``t ∈ 𝔠`` (batched over ``t``)."""
        t = np.asarray(t, float)
        eig = self._t_eigen
        if eig is None:
            tpart = np.concatenate([t, np.zeros(t.shape[:-1] + (self.d,))], axis=-1)
            return matrix_exp(self.ad_s(tpart))
        out = None
        for i, (lam, v, vinv) in enumerate(eig):
            e = np.exp(t[..., i, None] * lam)
            mat = np.einsum("ij,...j,jk->...ik", v, e, vinv)
            out = mat if out is None else out @ mat
        if out is None:
            return np.broadcast_to(np.eye(self.dim), t.shape[:-1] + (self.dim, self.dim)).copy()
        return np.ascontiguousarray(out.real)

    def exp_ad_n_full(self, n: np.ndarray) -> np.ndarray:
        """``e^{ad n}`` on 𝔤 for ``n ∈ 𝔫``; ``ad n`` is nilpotent so the series ends."""
        n = np.asarray(n, float)
        zn = np.zeros(n.shape[:-1] + (self.k,))
        a = self.ad_s(np.concatenate([zn, n], axis=-1))
        eye = np.eye(self.dim)
        out = np.broadcast_to(eye, a.shape).copy()
        for j in range(self.dim - 1, 0, -1):  # Horner: I + a(I + a/2(I + ...))
            out = eye + (a @ out) / j
        return out

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        t, n = self.split(np.asarray(g, float))
        return self.exp_ad_n_full(n) @ self.exp_ad_t_full(t)

    def adjoint_inverse(self, g: np.ndarray) -> np.ndarray:
        """``Ad(g)^{-1} = e^{-ad t} e^{-ad n}`` without a matrix inversion."""
        t, n = self.split(np.asarray(g, float))
        return self.exp_ad_t_full(-t) @ self.exp_ad_n_full(-n)

    def adjoint_pair(self, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(Ad(g), Ad(g)^{-1})``."""
        t, n = self.split(np.asarray(g, float))
        et = self.exp_ad_t_full(np.stack([t, -t]))
        en = self.exp_ad_n_full(np.stack([n, -n]))
        return en[0] @ et[0], et[1] @ en[1]

    def modular(self, g: np.ndarray) -> np.ndarray:
        return np.abs(np.linalg.det(self.adjoint(g)))

    # reporting ------------------------------------------------------------
    def summary(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "k": self.k,
            "d": self.d,
            "cbh_order": self.cbh_order,
            "zero_space_class": self.g0_class,
            "general_position": [float(v) for v in self.general_position],
            "zero_space": self.zero_space.tolist(),
            "complement": self.complement.tolist(),
            "nilradical": self.nilradical.tolist(),
            "adapted_basis": self.basis.T.tolist(),
            "adapted_labels": list(self.labels),
            "complement_abelian": self._c_abelian,
        }


def realize(a: LieAlgebra, nilradical: Subspace, seed: int = 0,
            complement_hint: np.ndarray | None = None,
            general_position: np.ndarray | None = None,
            complement: np.ndarray | None = None, name: str = "",
            validate: bool = True) -> Realization:
    """Build the realization ``G = 𝔠 × 𝔫``.

    Parameters
    ----------
    a : LieAlgebra
        Solvable algebra in the input basis.
    nilradical : Subspace
        Declared nilradical; its basis becomes the 𝔫 coordinates.
    seed : int
        Seed of the general-position search.
    complement_hint : array, optional
        Columns spanning a preferred complement (must lie in some ``𝔤₀``).
    general_position, complement : array, optional
        Explicit choices bypassing the search and the orthogonal rule (used
        for product groups and alternative complements).
    """
    m = a.dim
    if validate:
        if not alg.is_solvable(a):
            raise ConstructionError("algebra is not solvable")
        alg.validate_nilradical(a, nilradical)
    ok, n_class = alg.is_nilpotent(a, nilradical)
    if not ok:
        raise ConstructionError("declared nilradical is not nilpotent")
    if general_position is None:
        x = find_general_position(a, nilradical, seed, hint=complement_hint)
    else:
        x = np.asarray(general_position, float)
    g0 = zero_eigenspace(a, x)
    ok0, g0_class = alg.is_nilpotent(a, g0)
    if not ok0:
        raise ConstructionError("zero root space is not nilpotent")
    if not g0.contains_subspace(_bracket_closure(a, g0)):
        raise ConstructionError("zero root space is not a subalgebra")
    if complement is None:
        c = choose_complement(g0, nilradical, complement_hint)
    else:
        cm = np.asarray(complement, float).reshape(m, -1)
        c = Subspace(cm) if cm.shape[1] else Subspace.zero(m)
        if c.dim and not g0.contains_subspace(c, 1e-7):
            raise ConstructionError("explicit complement does not lie in 𝔤₀")
    if alg.rank(np.hstack([c.basis, nilradical.basis])) != m:
        raise ConstructionError("𝔠 ⊕ 𝔫 does not span 𝔤")
    if max(n_class, g0_class) > MAX_CBH_ORDER:
        raise ConstructionError(f"nilpotency class above {MAX_CBH_ORDER} is not supported")
    basis = np.hstack([c.basis, nilradical.basis])
    adapted = a.basis_change(basis)
    k = c.dim
    cc = adapted.constants
    scale = max(1.0, float(np.abs(cc).max(initial=0.0)))
    if np.abs(cc[:, k:, :k]).max(initial=0.0) > 1e-9 * scale:
        raise ConstructionError("𝔫 is not an ideal in the adapted basis")
    c_abelian = bool(np.abs(cc[:k, :k, :]).max(initial=0.0) <= 1e-12 * scale)
    if not c_abelian:
        warnings.warn("complement is not abelian; the coordinate product law is only "
                      "checked numerically in this case", stacklevel=2)
    return Realization(a, nilradical, g0, c, x, basis, adapted, n_class, g0_class,
                       name, seed, c_abelian)


def _bracket_closure(a: LieAlgebra, s: Subspace) -> Subspace:
    if s.dim == 0:
        return s
    prods = a.bracket(s.basis.T[:, None, :], s.basis.T[None, :, :]).reshape(-1, a.dim)
    return alg.span(prods.T, a.dim)


# ---------------------------------------------------------------------------
# module-level operations


def cbh_polynomial_P(r: Realization, t: np.ndarray, t2: np.ndarray,
                     tol: float = 1e-10) -> np.ndarray:
    """``P(t, t') = cbh(t, t') - t - t'`` as 𝔫-coordinates (in ``𝔤₀ ∩ 𝔫``)."""
    t = np.asarray(t, float)
    t2 = np.asarray(t2, float)
    shape = np.broadcast_shapes(t.shape[:-1], t2.shape[:-1])
    if r.k == 0 or r._c_abelian:
        return np.zeros(shape + (r.d,))
    pad = np.zeros(shape + (r.d,))
    x = np.concatenate([np.broadcast_to(t, shape + (r.k,)), pad], axis=-1)
    y = np.concatenate([np.broadcast_to(t2, shape + (r.k,)), pad], axis=-1)
    z = cbh(r.adapted.bracket, x, y, r.g0_class) - x - y
    scale = max(1.0, float(np.abs(z).max(initial=0.0)))
    if np.abs(z[..., : r.k]).max(initial=0.0) > tol * scale:
        raise ContractViolation("P(t, t') escapes 𝔤₀ ∩ 𝔫")
    return z[..., r.k:]


def multiply(r: Realization, g: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Product law ``(t,x)·(t',x') = (t+t', P(t,t') ∘ x ∘ e^{ad t}x')``."""
    return r.multiply(g, h)


def inverse(r: Realization, g: np.ndarray) -> np.ndarray:
    """Two-sided inverse ``(-t, -e^{-ad t} n)`` derived from the product law."""
    return r.inverse(g)


def exp_pure(r: Realization, v: np.ndarray) -> np.ndarray:
    """Exponential of a direction lying wholly in 𝔠 or wholly in 𝔫."""
    return r.exp_pure(v)


def adjoint(r: Realization, g: np.ndarray) -> np.ndarray:
    """``Ad(g) = exp(ad(0,n)) · exp(ad(t,0))`` in the adapted basis."""
    return r.adjoint(g)


def modular(r: Realization, g: np.ndarray) -> np.ndarray:
    """Modular function ``δ(g) = |det Ad(g)|``."""
    return r.modular(g)


def alternate_complement_check(r: Realization, seed: int = 0, n_samples: int = 200,
                               scale: float = 2.0) -> dict:
    """Compare the realization with one built on a sheared complement.

    The second complement is ``𝔰 = {c + S c : c ∈ 𝔠}`` with a random shear
    ``S: 𝔠 → 𝔤₀ ∩ 𝔫``.  The map ``I(s, x) = (0, x)·exp(s)`` must be a group
    isomorphism, and the two weights must be mutually polynomially bounded.
    """
    from .weights import Weight, fit_power_bound  # local import: weights builds on us

    w_space = alg.intersection(r.zero_space, r.nilradical)
    if r.k == 0 or w_space.dim == 0:
        return {"status": "unique", "k": r.k, "dim_g0_cap_n": w_space.dim}
    rng = np.random.default_rng(seed)
    shear = rng.standard_normal((w_space.dim, r.k))
    s_basis = r.complement.basis + w_space.orthonormal() @ shear
    r2 = realize(r.algebra, r.nilradical, general_position=r.general_position,
                 complement=s_basis, name=f"{r.name}-sheared", validate=False)
    s_adapted = r.to_adapted(s_basis.T)  # rows: adapted coords of the new complement vectors

    def iso(g2: np.ndarray) -> np.ndarray:
        s, x = r2.split(g2)
        v = s @ s_adapted
        zero_t = np.zeros(x.shape[:-1] + (r.k,))
        return r.multiply(np.concatenate([zero_t, x], axis=-1), r.exp_zero_space(v))

    g = rng.uniform(-scale, scale, (n_samples, r.dim))
    h = rng.uniform(-scale, scale, (n_samples, r.dim))
    lhs = iso(r2.multiply(g, h))
    rhs = r.multiply(iso(g), iso(h))
    resid = float(np.max(np.abs(lhs - rhs) / (1.0 + np.abs(rhs))))
    w1, w2 = Weight(r), Weight(r2)
    sig_new = w2(g)
    sig_old = w1(iso(g))
    up = fit_power_bound(sig_new, sig_old)
    down = fit_power_bound(sig_old, sig_new)
    return {
        "status": "checked",
        "k": r.k,
        "dim_g0_cap_n": w_space.dim,
        "shear": shear.tolist(),
        "isomorphism_residual": resid,
        "isomorphism_ok": resid < 1e-8,
        "sigma_new_vs_old": {"exponent": up.exponent, "constant": up.constant},
        "sigma_old_vs_new": {"exponent": down.exponent, "constant": down.constant},
        "n_samples": n_samples,
    }


def translation_jacobian(r: Realization, g: np.ndarray, h: np.ndarray, side: str = "right",
                         step: float = 1e-5) -> np.ndarray:
    """Determinant of the Jacobian of ``g ↦ g·h`` (``side="right"``) or ``g ↦ h·g``.

    Fourth-order central differences, batched over the leading axes.
    """
    g = np.asarray(g, float)
    h = np.broadcast_to(np.asarray(h, float), g.shape)
    f = (lambda x: r.multiply(x, h)) if side == "right" else (lambda x: r.multiply(h, x))
    cols = []
    for i in range(r.dim):
        e = np.zeros(r.dim)
        e[i] = step
        cols.append((8.0 * (f(g + e) - f(g - e)) - (f(g + 2 * e) - f(g - 2 * e))) / (12.0 * step))
    return np.linalg.det(np.stack(cols, axis=-1))


def group_law_report(r: Realization, n: int = 1000, seed: int = 0, half_width: float = 1.0,
                     n_jacobian: int = 200) -> dict:
    """Group axioms, Haar and modular consistency on seeded random samples.

    Errors of group-law identities are relative to ``1 + |result|``; the
    Jacobian checks use a smaller sample because each costs ``4m`` products.
    """
    rng = np.random.default_rng(seed)
    g, h, l = (rng.uniform(-half_width, half_width, (n, r.dim)) for _ in range(3))

    def rel(a, b):
        return float(np.max(np.abs(a - b) / (1.0 + np.abs(b))))

    gh = r.multiply(g, h)
    assoc = rel(r.multiply(gh, l), r.multiply(g, r.multiply(h, l)))
    e = r.identity((n,))
    ident = max(rel(r.multiply(g, e), g), rel(r.multiply(e, g), g))
    ginv = r.inverse(g)
    inv = max(rel(r.multiply(g, ginv), e), rel(r.multiply(ginv, g), e))
    dg, dh = r.modular(g), r.modular(h)
    mult = float(np.max(np.abs(r.modular(gh) - dg * dh) / (dg * dh)))
    ad, ad_inv = r.adjoint(g), r.adjoint(ginv)
    eye = np.eye(r.dim)
    ad_err = float(np.max(np.abs(ad @ ad_inv - eye)))
    # 𝔫 is an ideal: the (𝔫 → 𝔠) block of e^{ad t} vanishes
    t, _ = r.split(g)
    ideal = float(np.max(np.abs(r.exp_ad_t_full(t)[..., : r.k, r.k:]), initial=0.0))
    nj = min(n, n_jacobian)
    right = translation_jacobian(r, g[:nj], h[:nj], "right")
    left = translation_jacobian(r, g[:nj], h[:nj], "left")
    right_err = float(np.max(np.abs(right - 1.0)))
    left_err = float(np.max(np.abs(left / dh[:nj] - 1.0)))
    tol = {"group_law": 1e-9, "modular_multiplicative": 1e-9, "adjoint_inverse": 1e-8,
           "ideal_block": 1e-10, "jacobian": 1e-6}
    checks = {
        "associativity": assoc <= tol["group_law"],
        "identity": ident <= tol["group_law"],
        "inverse": inv <= tol["group_law"],
        "modular_multiplicative": mult <= tol["modular_multiplicative"],
        "adjoint_inverse": ad_err <= tol["adjoint_inverse"],
        "ideal_block": ideal <= tol["ideal_block"],
        "right_haar_jacobian": right_err <= tol["jacobian"],
        "left_translation_jacobian": left_err <= tol["jacobian"],
    }
    return {
        "group": r.name, "n_samples": n, "n_jacobian": nj, "half_width": half_width,
        "errors": {"associativity": assoc, "identity": ident, "inverse": inv,
                   "modular_multiplicative": mult, "adjoint_inverse": ad_err,
                   "ideal_block": ideal, "right_haar_jacobian": right_err,
                   "left_translation_jacobian": left_err},
        "tolerances": tol, "checks": checks, "ok": all(checks.values()),
    }
