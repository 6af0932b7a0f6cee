"""Gauss-Legendre angular quadrature for slab discrete ordinates."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True, eq=False)
class AngularQuadrature:
    """Nodes (ascending angular cosines) and weights summing to 2."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def positive(self) -> np.ndarray:
        return self.nodes > 0

    @property
    def negative(self) -> np.ndarray:
        return self.nodes < 0


def _legendre_and_derivative(n: int, x: np.ndarray):
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


@lru_cache(maxsize=None)
def _gauss_legendre(order: int):
    k = np.arange(1, order + 1)
    # Tricomi asymptotic guess for the k-th root, descending in x
    x = (1 - (order - 1) / (8.0 * order**3)) * np.cos(np.pi * (4 * k - 1) / (4 * order + 2))
    for _ in range(100):
        p, dp = _legendre_and_derivative(order, x)
        step = p / dp
        x = x - step
        if np.max(np.abs(step)) < 1e-14:
            break
    p, dp = _legendre_and_derivative(order, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    x = x[::-1].copy()
    w = w[::-1].copy()
    # exact mirror symmetry
    half = order // 2
    x[:half] = -x[order - half:][::-1]
    w[:half] = w[order - half:][::-1]
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(order: int) -> AngularQuadrature:
    """Gauss-Legendre S_N set of even ``order`` on [-1, 1].

    Raises
    ------
    ValueError
        If ``order`` is odd or not positive.
    """
    if isinstance(order, bool) or int(order) != order:
        raise ValueError(f"quadrature order must be an integer, got {order!r}")
    order = int(order)
    if order < 2 or order % 2:
        raise ValueError(f"quadrature order must be a positive even integer, got {order}")
    nodes, weights = _gauss_legendre(order)
    return AngularQuadrature(order, nodes, weights)
