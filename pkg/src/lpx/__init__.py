"""Exact algebra of Lie-Poisson bracket extensions."""

from ._backend import BACKEND
from .exactfield import Matrix, Scalar

__version__ = "0.1.0"
__all__ = ["BACKEND", "Matrix", "Scalar", "__version__"]
