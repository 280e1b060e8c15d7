"""Finite-dimensional quantum measurement engine.

Represents quantum instruments in Kraus form, classifies them
(projective / sharp-repeatable-non-projective / sharp-non-repeatable /
unsharp), computes order-effect, replicability, QQ-equality, total
probability and noncommutativity diagnostics, searches instrument
parameter manifolds for prescribed effect combinations, and samples
synthetic respondents.
"""

__version__ = "0.1.0"

from . import charts, classify, effects, linalg, models, montecarlo, scenario, search
from . import instrument
from .instrument import Instrument, Povm

__all__ = [
    "Instrument",
    "Povm",
    "charts",
    "classify",
    "effects",
    "instrument",
    "linalg",
    "models",
    "montecarlo",
    "scenario",
    "search",
    "__version__",
]
