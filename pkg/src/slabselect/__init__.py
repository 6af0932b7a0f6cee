"""Recommend the cheapest iterative solver for slab transport problems.

Three discrete-ordinates solvers (source iteration, diffusion synthetic
acceleration, nonlinear diffusion acceleration) are benchmarked over a
feature grid, and five classifiers learn to predict the winner.
"""
from slabselect._backend import BACKEND

SOLVERS = ("richardson", "dsa", "nda")
CLASSES = ("dsa", "nda", "richardson")
FEATURES = ("sn_order", "num_cells", "scattering_ratio")

__version__ = "0.1.0"
__all__ = ["BACKEND", "CLASSES", "FEATURES", "SOLVERS", "__version__"]
