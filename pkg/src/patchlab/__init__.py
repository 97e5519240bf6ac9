"""Exact commutative algebra over finite local rings and finite-level patching."""

from .errors import PatchlabError
from .rings import RingSpec, make_ring

__version__ = "0.1.0"
__all__ = ["PatchlabError", "RingSpec", "make_ring", "__version__"]
