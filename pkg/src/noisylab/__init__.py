"""noisylab: a desk-scale laboratory for learning with open-set label noise.

The package trains small fully connected classifiers on synthetic datasets
whose labels have been corrupted with closed-set flips and open-set
out-of-distribution contamination. Training separates each batch into
clean, in-distribution-noisy, and out-of-distribution groups, reassigns
labels per group, and optimizes a composite objective. Everything is
deterministic given a seed.
"""

from .backend import BACKEND, PROB_FLOOR
from .errors import NumericalError, ShapeError

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "PROB_FLOOR",
    "NumericalError",
    "ShapeError",
    "__version__",
]
