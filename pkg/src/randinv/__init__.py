"""Randomization tests under group invariance.

Haar sampling on sign-flip, permutation and rotation groups, randomization
p-values and thresholds, uniform sampling in l_p balls, and closed-form
bounds comparing parametric and randomization null laws.
"""

from .core import derive_stream, SeededStream

__version__ = "0.1.0"

__all__ = ["derive_stream", "SeededStream", "__version__"]
