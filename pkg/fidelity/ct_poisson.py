import numpy as np

from cnst import defaults
from cnst.fidelity_kind import FidelityKind
from fidelity.fidelity import Fidelity


class CTPoissonFidelity(Fidelity):
    """Poisson negative log-likelihood of transmission counts, per bin

        N0 exp(-mu t) + N0 exp(-mu y) (mu t - log N0),  t = (Hx)_i.

    Below ``t_floor`` the attenuation factor exp(-mu t) is continued by its
    second-order Taylor polynomial at the floor, so the term stays convex with a
    global gradient Lipschitz constant mu^2 N0 exp(-mu t_floor).
    """

    kind = FidelityKind.CT_POISSON

    def __init__(self, n0: float = defaults.CT_PHOTON_COUNT, mu_ct: float = defaults.CT_ATTENUATION,
                 t_floor: float = 0.0):
        if not n0 > 0:
            raise ValueError(f"CT fidelity needs N0 > 0, got {n0}")
        if not mu_ct > 0:
            raise ValueError(f"CT fidelity needs mu_ct > 0, got {mu_ct}")
        self.n0 = float(n0)
        self.mu_ct = float(mu_ct)
        self.t_floor = float(t_floor)

    def _attenuation(self, t: np.ndarray):
        """exp(-mu t) continued below the floor, minus its t-derivative over mu, and its second derivative."""
        mu = self.mu_ct
        at_floor = np.exp(-mu * self.t_floor)
        below = t < self.t_floor
        d = np.where(below, t - self.t_floor, 0.0)
        exact = np.exp(-mu * np.maximum(t, self.t_floor))
        value = np.where(below, at_floor * (1.0 - mu * d + 0.5 * mu ** 2 * d ** 2), exact)
        rate = np.where(below, at_floor * (1.0 - mu * d), exact)
        second = np.where(below, at_floor * mu ** 2, mu ** 2 * exact)
        return value, rate, second

    def value(self, hx: np.ndarray, y: np.ndarray) -> float:
        hx, y = self._check(hx, y)
        attenuation, _, _ = self._attenuation(hx)
        data = np.exp(-self.mu_ct * y)
        return float(np.sum(self.n0 * attenuation + self.n0 * data * (self.mu_ct * hx - np.log(self.n0))))

    def gradient(self, hx: np.ndarray, y: np.ndarray) -> np.ndarray:
        hx, y = self._check(hx, y)
        _, rate, _ = self._attenuation(hx)
        return self.mu_ct * self.n0 * (np.exp(-self.mu_ct * y) - rate)

    def hessian_diag(self, hx: np.ndarray, y: np.ndarray) -> np.ndarray:
        hx, y = self._check(hx, y)
        _, _, second = self._attenuation(hx)
        return self.n0 * second

    def lipschitz(self) -> float:
        return self.mu_ct ** 2 * self.n0 * float(np.exp(-self.mu_ct * self.t_floor))
