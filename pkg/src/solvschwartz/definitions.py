"""Group-definition files: parsing, validation and the bundled examples.

A definition is a UTF-8 JSON object::

    {"name": "axb", "dim": 2,
     "structure_constants": [[0, 1, 1, "1"]],
     "nilradical": [["0", "1"]],
     "complement_hint": [["1", "0"]],     # optional
     "labels": ["T", "Y"],                # optional
     "seed": 0}                           # optional

Numbers inside ``structure_constants``, ``nilradical`` and
``complement_hint`` are decimal strings, parsed with :mod:`decimal` so that
no precision is silently lost before the single conversion to float.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path

import numpy as np

from .algebra import LieAlgebra, NilradicalReport, Subspace, validate_nilradical
from .errors import AlgebraValidationError, GroupDefinitionError

__all__ = ["GroupDefinition", "parse_definition", "load_definition", "bundled_names",
           "load_group", "BUNDLED"]

BUNDLED = ("heisenberg", "axb", "m2", "r1")
_REQUIRED = ("dim", "structure_constants", "nilradical")
_KNOWN = set(_REQUIRED) | {"name", "labels", "complement_hint", "seed"}


def _line_of(text: str, key: str, occurrence: int = 0) -> int | None:
    """1-based line of the ``occurrence``-th appearance of a JSON key."""
    hits = [m.start() for m in re.finditer(rf'"{re.escape(key)}"\s*:', text)]
    if not hits:
        return None
    return text.count("\n", 0, hits[min(occurrence, len(hits) - 1)]) + 1


def _decimal(value, where: str, text: str, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise _err(f"{where}: expected a decimal string, got {value!r}", text, key)
    try:
        d = Decimal(str(value).strip())
    except InvalidOperation:
        raise _err(f"{where}: {value!r} is not a decimal number", text, key) from None
    if not d.is_finite():
        raise _err(f"{where}: non-finite value {value!r}", text, key)
    return float(d)


def _err(msg: str, text: str, key: str) -> GroupDefinitionError:
    line = _line_of(text, key)
    return GroupDefinitionError(f"line {line}: {msg}" if line else msg)


@dataclass(frozen=True, eq=False)
class GroupDefinition:
    """Parsed group definition."""

    name: str
    dim: int
    structure_constants: tuple[tuple[int, int, int, float], ...]
    nilradical: np.ndarray  # (d, m) rows
    complement_hint: np.ndarray | None = None  # (k, m) rows
    seed: int = 0
    labels: tuple[str, ...] = ()
    source: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    def algebra(self) -> LieAlgebra:
        return LieAlgebra.from_entries(self.dim, self.structure_constants, labels=self.labels)

    def nilradical_space(self) -> Subspace:
        return Subspace(self.nilradical.T.copy()) if len(self.nilradical) else Subspace.zero(self.dim)

    def check(self) -> NilradicalReport:
        return validate_nilradical(self.algebra(), self.nilradical_space(), raise_on_failure=False)

    def realize(self, seed: int | None = None):
        from .realization import realize

        hint = None if self.complement_hint is None else self.complement_hint.T
        return realize(self.algebra(), self.nilradical_space(),
                       seed=self.seed if seed is None else seed,
                       complement_hint=hint, name=self.name)

    def canonical_json(self) -> str:
        """Canonical serialization used for report digests."""
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))


def parse_definition(text: str, source: str = "<string>") -> GroupDefinition:
    """Parse and validate a definition from JSON text.

    Raises
    ------
    GroupDefinitionError
        On JSON syntax errors or schema violations (message carries the line).
    AlgebraValidationError
        If the constants violate antisymmetry or the Jacobi identity.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GroupDefinitionError(f"{source}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise GroupDefinitionError(f"{source}: top level must be an object")
    for key in _REQUIRED:
        if key not in raw:
            raise GroupDefinitionError(f"{source}: missing required field {key!r}")
    unknown = set(raw) - _KNOWN
    if unknown:
        raise _err(f"unknown field(s) {sorted(unknown)}", text, sorted(unknown)[0])
    dim = raw["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise _err(f"dim must be a positive integer, got {dim!r}", text, "dim")

    entries = []
    seen = set()
    sc = raw["structure_constants"]
    if not isinstance(sc, list):
        raise _err("structure_constants must be a list", text, "structure_constants")
    for pos, item in enumerate(sc):
        where = f"structure_constants[{pos}]"
        if not isinstance(item, list) or len(item) != 4:
            raise _err(f"{where}: expected [i, j, k, value]", text, "structure_constants")
        i, j, k, val = item
        for idx in (i, j, k):
            if isinstance(idx, bool) or not isinstance(idx, int) or not 0 <= idx < dim:
                raise _err(f"{where}: index {idx!r} out of range 0..{dim - 1}", text,
                           "structure_constants")
        if i >= j:
            raise _err(f"{where}: entries must have i < j (got i={i}, j={j}); "
                       "antisymmetry is implied", text, "structure_constants")
        if (i, j, k) in seen:
            raise _err(f"{where}: duplicate entry ({i}, {j}, {k})", text, "structure_constants")
        seen.add((i, j, k))
        entries.append((i, j, k, _decimal(val, where, text, "structure_constants")))

    def _vectors(key: str) -> np.ndarray:
        vecs = raw[key]
        if not isinstance(vecs, list):
            raise _err(f"{key} must be a list of vectors", text, key)
        out = []
        for pos, v in enumerate(vecs):
            if not isinstance(v, list) or len(v) != dim:
                raise _err(f"{key}[{pos}]: expected a vector of length {dim}", text, key)
            out.append([_decimal(c, f"{key}[{pos}]", text, key) for c in v])
        return np.array(out, float).reshape(len(out), dim)

    nil = _vectors("nilradical")
    hint = _vectors("complement_hint") if "complement_hint" in raw else None
    labels = raw.get("labels", [])
    if labels and (not isinstance(labels, list) or len(labels) != dim
                   or not all(isinstance(s, str) for s in labels)):
        raise _err(f"labels must be {dim} strings", text, "labels")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise _err("seed must be an integer", text, "seed")
    name = raw.get("name", Path(source).stem if source != "<string>" else "group")
    definition = GroupDefinition(str(name), dim, tuple(entries), nil, hint, seed,
                                 tuple(labels), source, raw)
    try:
        definition.algebra()
    except AlgebraValidationError as exc:
        raise AlgebraValidationError(f"{source}: {exc}", exc.witness) from None
    return definition


def bundled_names() -> tuple[str, ...]:
    files = resources.files("solvschwartz").joinpath("groups")
    return tuple(sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json")))


def load_definition(name_or_path: str | Path) -> GroupDefinition:
    """Load a bundled group by name or a definition file by path."""
    p = Path(name_or_path)
    if p.suffix == ".json" or p.exists():
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise GroupDefinitionError(f"cannot read {p}: {exc}") from None
        return parse_definition(text, str(p))
    res = resources.files("solvschwartz").joinpath("groups", f"{name_or_path}.json")
    if not res.is_file():
        raise GroupDefinitionError(
            f"unknown group {name_or_path!r}; bundled groups: {', '.join(bundled_names())}")
    return parse_definition(res.read_text(encoding="utf-8"), f"{name_or_path}.json")


_CACHE: dict[str, object] = {}


def load_group(name_or_path: str | Path, seed: int | None = None):
    """Load a definition and return its realization (cached for bundled names)."""
    key = f"{name_or_path}|{seed}"
    if key not in _CACHE:
        _CACHE[key] = load_definition(name_or_path).realize(seed)
    return _CACHE[key]
