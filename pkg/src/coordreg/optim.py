"""RMSProp parameter updates."""

from __future__ import annotations

import numpy as np

from .autodiff import Variable


class RMSProp:
    """Running-mean-square gradient scaling.

    Per parameter: ``s <- a*s + (1-a)*g^2`` then
    ``p <- p - lr * g / (sqrt(s) + eps)``. Parameters with zero gradient are
    left unchanged on a fresh state.
    """

    def __init__(self, params, learning_rate: float,
                 smoothing: float = 0.99, epsilon: float = 1e-8):
        if learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < smoothing < 1.0:
            raise ValueError("smoothing must lie in (0, 1)")
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.params: list[Variable] = list(params)
        self.learning_rate = learning_rate
        self.smoothing = smoothing
        self.epsilon = epsilon
        self._mean_square = [np.zeros_like(p.value) for p in self.params]

    def step(self) -> None:
        """Apply one update from the gradients populated by ``backward``."""
        a = self.smoothing
        for p, s in zip(self.params, self._mean_square):
            g = p.grad
            s *= a
            s += (1.0 - a) * g * g
            p.value = p.value - self.learning_rate * g / (np.sqrt(s) + self.epsilon)
