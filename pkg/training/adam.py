from typing import Dict

import numpy as np

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


class Adam:
    """First and second moment estimates with bias correction, one learning rate per parameter group."""

    def __init__(self, learning_rates: Dict[str, float]):
        self.learning_rates = dict(learning_rates)
        self.first: Dict[str, np.ndarray] = {}
        self.second: Dict[str, np.ndarray] = {}
        self.steps = 0

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray],
             rate_factor: float = 1.0) -> Dict[str, np.ndarray]:
        self.steps += 1
        updated = dict(params)
        for name, grad in grads.items():
            lr = self.learning_rates.get(name, 0.0) * rate_factor
            grad = np.asarray(grad, dtype=float)
            m = BETA1 * self.first.get(name, np.zeros_like(grad)) + (1.0 - BETA1) * grad
            v = BETA2 * self.second.get(name, np.zeros_like(grad)) + (1.0 - BETA2) * grad * grad
            self.first[name] = m
            self.second[name] = v
            if lr == 0.0:
                continue
            m_hat = m / (1.0 - BETA1 ** self.steps)
            v_hat = v / (1.0 - BETA2 ** self.steps)
            updated[name] = np.asarray(params[name], dtype=float) - lr * m_hat / (np.sqrt(v_hat) + EPSILON)
        return updated
