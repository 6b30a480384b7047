"""Unsupervised neural eigensolver for the 1-D quantum (an)harmonic
oscillator, validated against an independent grid-diagonalization solver.
"""

from ._kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
