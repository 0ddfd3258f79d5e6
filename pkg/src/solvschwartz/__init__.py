"""Weighted Schwartz spaces on simply connected solvable Lie groups.

Subpackages and modules:

* :mod:`.numerics` quadrature, finite differences, matrix exponential;
* :mod:`.algebra` and :mod:`.cbh` Lie algebras and the CBH product;
* :mod:`.realization` the group ``G = 𝔠 × 𝔫`` and its product law;
* :mod:`.weights` the weight ``σ`` and its four properties;
* :mod:`.schwartz` test functions, derivatives, seminorms, convolution;
* :mod:`.distributions` σ-tempered distributions and the structure theorem;
* :mod:`.products` direct products and separable kernels;
* :mod:`.cli` the ``solvschwartz`` command.
"""

__version__ = "0.1.0"

from .definitions import BUNDLED, load_definition, load_group  # noqa: E402
from .realization import Realization, group_law_report, realize  # noqa: E402
from .weights import Weight  # noqa: E402

__all__ = ["__version__", "BUNDLED", "load_definition", "load_group", "Realization", "realize",
           "group_law_report", "Weight"]
