"""Structure-constant Lie algebras and subspace arithmetic.

A :class:`LieAlgebra` stores the tensor ``c[i, j, k]`` with
``[X_i, X_j] = sum_k c[i, j, k] X_k``.  Vectors are coordinate arrays in the
fixed basis; every operation accepts stacks of vectors along leading axes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import AlgebraValidationError, InputError, NilradicalError

__all__ = [
    "RANK_TOL",
    "LieAlgebra",
    "Subspace",
    "NilradicalReport",
    "rank",
    "null_space",
    "span",
    "intersection",
    "bracket",
    "ad_matrix",
    "derived_series",
    "lower_central_series",
    "is_solvable",
    "is_nilpotent",
    "validate_nilradical",
    "killing_form",
    "direct_sum",
]

RANK_TOL = 1e-9
ANTISYMMETRY_TOL = 1e-12
JACOBI_TOL = 1e-12


# ---------------------------------------------------------------------------
# linear algebra helpers


def rank(mat: np.ndarray, tol: float = RANK_TOL) -> int:
    """Numerical rank by QR with column pivoting.

    A diagonal entry of ``R`` counts when it exceeds ``tol`` times the
    largest column norm.
    """
    mat = np.atleast_2d(np.asarray(mat, float))
    if mat.size == 0:
        return 0
    scale = np.linalg.norm(mat, axis=0).max()
    if scale == 0:
        return 0
    r = sla.qr(mat, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    return int(np.sum(diag > tol * scale))


def null_space(mat: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel, relative SVD cutoff ``tol``."""
    mat = np.atleast_2d(np.asarray(mat, float))
    n = mat.shape[1]
    if mat.size == 0 or not np.any(mat):
        return np.eye(n)
    return sla.null_space(mat, rcond=tol)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace of ℝ^m given by independent basis columns."""

    basis: np.ndarray  # shape (m, r)

    def __post_init__(self):
        b = np.asarray(self.basis, float)
        if b.ndim != 2:
            raise InputError("Subspace basis must be a 2-d array (m, r)")
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        if b.shape[1] and rank(b) != b.shape[1]:
            raise InputError("Subspace basis vectors are linearly dependent")

    @classmethod
    def from_vectors(cls, vectors: Iterable[Sequence[float]], ambient: int) -> "Subspace":
        vecs = [np.asarray(v, float) for v in vectors]
        if any(v.shape != (ambient,) for v in vecs):
            raise InputError(f"subspace vectors must have length {ambient}")
        mat = np.stack(vecs, axis=1) if vecs else np.zeros((ambient, 0))
        return cls(mat)

    @classmethod
    def zero(cls, ambient: int) -> "Subspace":
        return cls(np.zeros((ambient, 0)))

    @classmethod
    def whole(cls, ambient: int) -> "Subspace":
        return cls(np.eye(ambient))

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def orthonormal(self) -> np.ndarray:
        if self.dim == 0:
            return np.zeros((self.ambient, 0))
        q, _ = np.linalg.qr(self.basis)
        return q

    def projector(self) -> np.ndarray:
        q = self.orthonormal()
        return q @ q.T

    def contains(self, v: np.ndarray, tol: float = RANK_TOL) -> bool:
        v = np.atleast_2d(np.asarray(v, float))
        if v.shape[0] != self.ambient:
            v = v.T
        scale = max(np.linalg.norm(v), 1e-300)
        resid = v - self.projector() @ v
        return bool(np.linalg.norm(resid) <= tol * max(scale, 1.0))

    def contains_subspace(self, other: "Subspace", tol: float = RANK_TOL) -> bool:
        return other.dim == 0 or self.contains(other.basis, tol)

    def equals(self, other: "Subspace", tol: float = RANK_TOL) -> bool:
        return (self.dim == other.dim and self.contains_subspace(other, tol)
                and other.contains_subspace(self, tol))

    def coordinates(self, v: np.ndarray) -> np.ndarray:
        """Least-squares coordinates of ``v`` (columns) in this basis."""
        return np.linalg.lstsq(self.basis, np.asarray(v, float), rcond=None)[0]

    def tolist(self) -> list[list[float]]:
        return self.basis.T.tolist()


def span(vectors: np.ndarray, ambient: int | None = None, tol: float = RANK_TOL) -> Subspace:
    """Subspace spanned by the columns of ``vectors`` (orthonormal basis)."""
    mat = np.asarray(vectors, float)
    if mat.ndim == 1:
        mat = mat[:, None]
    m = mat.shape[0] if ambient is None else ambient
    if mat.size == 0:
        return Subspace.zero(m)
    scale = np.linalg.norm(mat, axis=0).max()
    if scale == 0:
        return Subspace.zero(m)
    q, r, _ = sla.qr(mat, mode="economic", pivoting=True)
    rk = int(np.sum(np.abs(np.diag(r)) > tol * scale))
    return Subspace(q[:, :rk])


def intersection(u: Subspace, v: Subspace, tol: float = RANK_TOL) -> Subspace:
    """Intersection of two subspaces via the kernel of ``[U, -V]``."""
    if u.dim == 0 or v.dim == 0:
        return Subspace.zero(u.ambient)
    qu, qv = u.orthonormal(), v.orthonormal()
    kern = null_space(np.hstack([qu, -qv]), tol)
    if kern.shape[1] == 0:
        return Subspace.zero(u.ambient)
    return span(qu @ kern[: qu.shape[1]], u.ambient, tol)


# ---------------------------------------------------------------------------
# Lie algebras


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """Real Lie algebra given by structure constants.

    Parameters
    ----------
    constants : array_like, shape (m, m, m)
        ``constants[i, j, k]`` is the ``X_k`` coefficient of ``[X_i, X_j]``.
    labels : sequence of str, optional
        Basis labels; default ``X1..Xm``.
    validate : bool
        Check antisymmetry (hard error above 1e-12, otherwise symmetrised)
        and the Jacobi identity on all basis triples.
    """

    constants: np.ndarray
    labels: tuple[str, ...] = ()
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        c = np.array(self.constants, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]):
            raise InputError(f"structure constants must have shape (m, m, m), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InputError("structure constants must be finite")
        m = c.shape[0]
        asym = np.abs(c + c.transpose(1, 0, 2)).max() if m else 0.0
        if asym > ANTISYMMETRY_TOL:
            i, j, k = np.unravel_index(np.argmax(np.abs(c + c.transpose(1, 0, 2))), c.shape)
            raise AlgebraValidationError(
                f"antisymmetry violated by {asym:.3g} at c[{i}][{j}][{k}]",
                witness=[int(i), int(j), int(k)])
        c = 0.5 * (c - c.transpose(1, 0, 2))
        c.setflags(write=False)
        object.__setattr__(self, "constants", c)
        labels = tuple(self.labels) or tuple(f"X{i + 1}" for i in range(m))
        if len(labels) != m:
            raise InputError("number of labels differs from the dimension")
        object.__setattr__(self, "labels", labels)
        if self.validate:
            resid, witness = self.jacobi_residual()
            scale = max(1.0, float(np.abs(c).max()) ** 2) if m else 1.0
            if resid > JACOBI_TOL * scale:
                raise AlgebraValidationError(
                    f"Jacobi identity fails (residual {resid:.3g}) on basis triple {witness}",
                    witness=witness)

    # construction helpers -------------------------------------------------
    @classmethod
    def from_entries(cls, dim: int, entries: Iterable[tuple[int, int, int, float]],
                     labels: Sequence[str] = ()) -> "LieAlgebra":
        """Build from sparse ``(i, j, k, value)`` entries with ``i < j``."""
        c = np.zeros((dim, dim, dim))
        seen = set()
        for i, j, k, val in entries:
            i, j, k = int(i), int(j), int(k)
            if not (0 <= i < dim and 0 <= j < dim and 0 <= k < dim):
                raise InputError(f"index out of range in entry {(i, j, k)}")
            if i >= j:
                raise InputError(f"only i<j entries allowed, got {(i, j, k)}")
            if (i, j, k) in seen:
                raise InputError(f"duplicate entry {(i, j, k)}")
            seen.add((i, j, k))
            c[i, j, k] = float(val)
            c[j, i, k] = -float(val)
        return cls(c, tuple(labels))

    @classmethod
    def abelian(cls, dim: int) -> "LieAlgebra":
        return cls(np.zeros((dim, dim, dim)))

    @property
    def dim(self) -> int:
        return self.constants.shape[0]

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("...i,...j,ijk->...k", x, y, self.constants)

    def ad(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ``y ↦ [x, y]``; column ``j`` is ``[x, X_j]``."""
        return np.einsum("...i,ijk->...kj", x, self.constants)

    def jacobi_residual(self) -> tuple[float, list[int] | None]:
        """Largest Jacobi residual over basis triples and the offending triple."""
        m = self.dim
        if m == 0:
            return 0.0, None
        c = self.constants
        # [[X_i, X_j], X_l] = sum_k c_ijk c_klp
        t = np.einsum("ijk,klp->ijlp", c, c)
        jac = t + t.transpose(1, 2, 0, 3) + t.transpose(2, 0, 1, 3)
        norms = np.abs(jac).max(axis=-1)
        idx = np.unravel_index(np.argmax(norms), norms.shape)
        return float(norms[idx]), [int(v) for v in idx]

    def basis_change(self, basis: np.ndarray) -> "LieAlgebra":
        """Structure constants in the basis given by the columns of ``basis``."""
        b = np.asarray(basis, float)
        inv = np.linalg.inv(b)
        br = np.einsum("ia,jb,ijk->abk", b, b, self.constants)
        new = np.einsum("lk,abk->abl", inv, br)
        return LieAlgebra(new, validate=False)

    def restricted(self, indices: Sequence[int]) -> "LieAlgebra":
        """Structure constants of the subalgebra spanned by basis vectors ``indices``."""
        idx = np.asarray(indices, int)
        return LieAlgebra(self.constants[np.ix_(idx, idx, idx)],
                          tuple(self.labels[i] for i in idx), validate=False)

    def to_entries(self, tol: float = 0.0) -> list[tuple[int, int, int, float]]:
        m = self.dim
        return [(i, j, k, float(self.constants[i, j, k]))
                for i in range(m) for j in range(i + 1, m) for k in range(m)
                if abs(self.constants[i, j, k]) > tol]


def bracket(a: LieAlgebra, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``[x, y] = sum_ij x_i y_j c[i][j][·]``."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.shape[-1] != a.dim or y.shape[-1] != a.dim:
        raise InputError(f"vectors must have length {a.dim}")
    return a.bracket(x, y)


def ad_matrix(a: LieAlgebra, x: np.ndarray) -> np.ndarray:
    """m×m matrix of ``y ↦ [x, y]`` in the fixed basis."""
    x = np.asarray(x, float)
    if x.shape[-1] != a.dim:
        raise InputError(f"vector must have length {a.dim}")
    return a.ad(x)


def _bracket_span(a: LieAlgebra, u: np.ndarray, v: np.ndarray) -> Subspace:
    if u.shape[1] == 0 or v.shape[1] == 0:
        return Subspace.zero(a.dim)
    prods = a.bracket(u.T[:, None, :], v.T[None, :, :]).reshape(-1, a.dim)
    return span(prods.T, a.dim)


def derived_series(a: LieAlgebra, sub: Subspace | None = None, max_len: int = 64) -> list[Subspace]:
    """``𝔤 ⊇ [𝔤,𝔤] ⊇ …`` until it stabilises (or reaches {0})."""
    cur = Subspace.whole(a.dim) if sub is None else sub
    series = [cur]
    for _ in range(max_len):
        nxt = _bracket_span(a, cur.basis, cur.basis)
        if nxt.dim == cur.dim:
            break
        series.append(nxt)
        cur = nxt
        if cur.dim == 0:
            break
    return series


def lower_central_series(a: LieAlgebra, sub: Subspace | None = None,
                         max_len: int = 64) -> list[Subspace]:
    """``𝔥 ⊇ [𝔥,𝔥] ⊇ [𝔥,[𝔥,𝔥]] ⊇ …`` for ``𝔥 = sub`` (default the whole algebra)."""
    top = Subspace.whole(a.dim) if sub is None else sub
    cur = top
    series = [cur]
    for _ in range(max_len):
        nxt = _bracket_span(a, top.basis, cur.basis)
        if nxt.dim == cur.dim:
            break
        series.append(nxt)
        cur = nxt
        if cur.dim == 0:
            break
    return series


def is_solvable(a: LieAlgebra) -> bool:
    return derived_series(a)[-1].dim == 0


def is_nilpotent(a: LieAlgebra, sub: Subspace | None = None) -> tuple[bool, int]:
    """Whether the (sub)algebra is nilpotent, and its class.

    The class is the number of nonzero terms in the lower central series,
    so an abelian algebra has class 1 and the zero algebra class 0.
    """
    series = lower_central_series(a, sub)
    if series[-1].dim != 0:
        return False, -1
    return True, len(series) - 1


def killing_form(a: LieAlgebra, x: np.ndarray, y: np.ndarray) -> float:
    """``tr(ad x · ad y)``."""
    return float(np.trace(ad_matrix(a, x) @ ad_matrix(a, y)))


def direct_sum(a1: LieAlgebra, a2: LieAlgebra) -> LieAlgebra:
    """Block structure constants of ``𝔤₁ ⊕ 𝔤₂`` (basis of 𝔤₁ first)."""
    m1, m2 = a1.dim, a2.dim
    c = np.zeros((m1 + m2,) * 3)
    c[:m1, :m1, :m1] = a1.constants
    c[m1:, m1:, m1:] = a2.constants
    return LieAlgebra(c, tuple(a1.labels) + tuple(a2.labels), validate=False)


# ---------------------------------------------------------------------------
# nilradical validation


@dataclass
class NilradicalReport:
    """Outcome of :func:`validate_nilradical`.

    ``maximality_evidence`` lists, for each complement basis vector, the
    traces ``tr(ad(v)^k)`` and the verdict.  Passing the trace test is
    evidence of maximality, not a proof: a combination of complement
    vectors could still be ad-nilpotent in degenerate cases.
    """

    is_ideal: bool
    is_nilpotent: bool
    contains_derived: bool
    nilpotency_class: int
    maximality_evidence: list[dict] = field(default_factory=list)
    maximality_supported: bool = True
    warnings: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.is_ideal and self.is_nilpotent and self.contains_derived

    def to_dict(self) -> dict:
        return {
            "is_ideal": self.is_ideal,
            "is_nilpotent": self.is_nilpotent,
            "contains_derived_algebra": self.contains_derived,
            "nilpotency_class": self.nilpotency_class,
            "maximality_evidence": self.maximality_evidence,
            "maximality_supported": self.maximality_supported,
            "maximality_is_proof": False,
            "warnings": list(self.warnings),
        }


def validate_nilradical(a: LieAlgebra, n: Subspace, raise_on_failure: bool = True,
                        tol: float = RANK_TOL) -> NilradicalReport:
    """Check a declared nilradical.

    Verifies (i) ideal, (ii) nilpotent, (iii) contains ``[𝔤,𝔤]``, which are
    hard errors, and (iv) that every vector of the orthogonal complement has
    a non-nilpotent ``ad`` (some ``tr(ad(v)^k) ≠ 0``), which only warns.
    """
    m = a.dim
    if n.ambient != m:
        raise InputError("nilradical vectors have the wrong length")
    # (i) ideal
    brackets = _bracket_span(a, np.eye(m), n.basis)
    is_ideal = n.contains_subspace(brackets, tol)
    # (ii) nilpotent
    nil, cls = is_nilpotent(a, n) if is_ideal else (False, -1)
    if is_ideal and not nil:
        cls = -1
    # (iii) derived algebra inside n
    derived = _bracket_span(a, np.eye(m), np.eye(m))
    contains = n.contains_subspace(derived, tol)
    report = NilradicalReport(is_ideal, nil, contains, cls)
    if raise_on_failure:
        if not is_ideal:
            raise NilradicalError("ideal", "[𝔤, 𝔫] is not contained in 𝔫",
                                  witness=_first_escape(a, n, tol))
        if not nil:
            raise NilradicalError("nilpotent", "lower central series of 𝔫 does not reach {0}")
        if not contains:
            raise NilradicalError("derived", "[𝔤, 𝔤] is not contained in 𝔫")
    # (iv) maximality evidence on a complement basis
    comp = null_space(n.orthonormal().T, tol) if n.dim < m else np.zeros((m, 0))
    supported = True
    for v in comp.T:
        adv = a.ad(v)
        scale = max(np.linalg.norm(adv, 2), 1e-300)
        traces, p = [], np.eye(m)
        for _k in range(1, m + 1):
            p = p @ adv
            traces.append(float(np.trace(p)))
        nonnil = any(abs(tr) > tol * scale ** (i + 1) * m for i, tr in enumerate(traces))
        report.maximality_evidence.append({
            "vector": [float(x) for x in v],
            "traces": traces,
            "verdict": "ad(v) non-nilpotent" if nonnil else "ad(v) nilpotent",
        })
        supported &= nonnil
    report.maximality_supported = supported
    if not supported:
        msg = ("a complement vector has nilpotent ad: the declared nilradical "
               "may not be maximal")
        report.warnings.append(msg)
        warnings.warn(msg, stacklevel=2)
    return report


def _first_escape(a: LieAlgebra, n: Subspace, tol: float) -> list[int] | None:
    for i in range(a.dim):
        for j in range(n.dim):
            v = a.bracket(np.eye(a.dim)[i], n.basis[:, j])
            if not n.contains(v, tol):
                return [i, j]
    return None
