"""Flag-algebra toolkit for K4-minus-free 3-graphs with exact certificates."""

__version__ = "0.1.0"

from .hypercore import Hypergraph, canonical_form, contains_forbidden, linear_density  # noqa: F401
