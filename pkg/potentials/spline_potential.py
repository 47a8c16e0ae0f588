from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from cnst import defaults

ArrayLike = Union[float, np.ndarray]


def project_coefficients(raw: np.ndarray) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(raw)):
        raise ValueError("Spline coefficients must be finite")
    return np.clip(raw, 0.0, 1.0)


def default_psi_minus(n_intervals: int, width: int = defaults.PSI_MINUS_DEFAULT_INTERVALS) -> np.ndarray:
    coeffs = np.zeros(n_intervals)
    width = min(width, n_intervals)
    start = (n_intervals - width) // 2
    coeffs[start:start + width] = 1.0
    return coeffs


@dataclass(frozen=True, eq=False)
class SplinePotential:
    """Quadratic spline psi = mu * psi_plus - c_cvx * psi_minus.

    Both splines store a piecewise-constant second derivative in [0, 1] on the
    ``knot_count - 1`` intervals of a uniform grid centred at the origin. psi and
    psi' are integrated from 0, so psi'(0) = 0 and psi(0) = 0 up to the constant
    that lifts the minimum to zero. Beyond the grid psi' is held constant, except
    that a tail sloping downward bends back to slope 0 with curvature
    ``TAIL_CURVATURE`` and stays flat from there, so psi is bounded below.
    """

    second_derivs_plus: np.ndarray
    second_derivs_minus: np.ndarray
    mu: float = 1.0
    c_cvx: int = 0
    knot_count: int = defaults.KNOT_COUNT
    spacing: float = defaults.KNOT_SPACING
    value_offset: float = field(init=False, default=0.0)
    slope_offset: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.knot_count < 3 or self.knot_count % 2 == 0:
            raise ValueError(f"knot_count must be an odd integer >= 3, got {self.knot_count}")
        if self.spacing <= 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.c_cvx not in (0, 1):
            raise ValueError(f"c_cvx must be 0 or 1, got {self.c_cvx}")
        n = self.knot_count - 1
        plus = np.asarray(self.second_derivs_plus, dtype=float).copy()
        minus = np.asarray(self.second_derivs_minus, dtype=float).copy()
        if plus.shape != (n,) or minus.shape != (n,):
            raise ValueError(f"Expected {n} second-derivative coefficients per spline")
        if np.any(plus < 0) or np.any(plus > 1) or np.any(minus < 0) or np.any(minus > 1):
            raise ValueError("Second-derivative coefficients must lie in [0, 1]")
        plus.setflags(write=False)
        minus.setflags(write=False)
        object.__setattr__(self, "second_derivs_plus", plus)
        object.__setattr__(self, "second_derivs_minus", minus)

        d = self.second_derivs
        center = n // 2
        # psi' and psi at the knots, integrated outward from the centre knot
        slopes = np.zeros(self.knot_count)
        values = np.zeros(self.knot_count)
        for j in range(center, n):
            slopes[j + 1] = slopes[j] + d[j] * self.spacing
            values[j + 1] = values[j] + slopes[j] * self.spacing + 0.5 * d[j] * self.spacing ** 2
        for j in range(center - 1, -1, -1):
            slopes[j] = slopes[j + 1] - d[j] * self.spacing
            values[j] = values[j + 1] - slopes[j + 1] * self.spacing + 0.5 * d[j] * self.spacing ** 2
        # outward slope and ramp length of the left and right tails
        kappa = defaults.TAIL_CURVATURE
        outward = (-float(slopes[0]), float(slopes[-1]))
        ramps = tuple(max(0.0, -s) / kappa for s in outward)
        tail_floors = [values[k] - s * s / (2.0 * kappa) for k, s in ((0, outward[0]), (-1, outward[1])) if s < 0]
        floor = float(min([values.min()] + tail_floors))
        object.__setattr__(self, "_tail_ramps", ramps)
        object.__setattr__(self, "value_offset", max(0.0, -floor))
        object.__setattr__(self, "slope_offset", 0.0)
        slopes.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "_knot_slopes", slopes)
        object.__setattr__(self, "_knot_values", values)

    @classmethod
    def create(cls, second_derivs_plus: Optional[np.ndarray] = None, second_derivs_minus: Optional[np.ndarray] = None,
               mu: float = 1.0, c_cvx: int = 0, knot_count: int = defaults.KNOT_COUNT,
               spacing: float = defaults.KNOT_SPACING) -> 'SplinePotential':
        n = knot_count - 1
        if second_derivs_plus is None:
            second_derivs_plus = np.ones(n)
        if second_derivs_minus is None:
            second_derivs_minus = default_psi_minus(n) if c_cvx == 1 else np.zeros(n)
        return cls(second_derivs_plus=np.asarray(second_derivs_plus, dtype=float),
                   second_derivs_minus=np.asarray(second_derivs_minus, dtype=float),
                   mu=mu, c_cvx=c_cvx, knot_count=knot_count, spacing=spacing)

    @classmethod
    def zero(cls, knot_count: int = defaults.KNOT_COUNT, spacing: float = defaults.KNOT_SPACING) -> 'SplinePotential':
        n = knot_count - 1
        return cls(second_derivs_plus=np.zeros(n), second_derivs_minus=np.zeros(n),
                   knot_count=knot_count, spacing=spacing)

    def replace(self, **changes) -> 'SplinePotential':
        params = dict(second_derivs_plus=self.second_derivs_plus, second_derivs_minus=self.second_derivs_minus,
                      mu=self.mu, c_cvx=self.c_cvx, knot_count=self.knot_count, spacing=self.spacing)
        params.update(changes)
        return SplinePotential(**params)

    @property
    def n_intervals(self) -> int:
        return self.knot_count - 1

    @property
    def knots(self) -> np.ndarray:
        half = (self.knot_count - 1) // 2
        return (np.arange(self.knot_count) - half) * self.spacing

    @property
    def second_derivs(self) -> np.ndarray:
        return self.mu * self.second_derivs_plus - self.c_cvx * self.second_derivs_minus

    @property
    def knot_range(self) -> Tuple[float, float]:
        knots = self.knots
        return float(knots[0]), float(knots[-1])

    @property
    def boundary_slopes(self) -> Tuple[float, float]:
        return float(self._knot_slopes[0]), float(self._knot_slopes[-1])

    @property
    def tail_ramps(self) -> Tuple[float, float]:
        """Lengths of the bending ramps beyond the left and right knots (0 for tails that rise)."""
        return self._tail_ramps

    @property
    def max_abs_second_deriv(self) -> float:
        bound = float(np.max(np.abs(self.second_derivs)))
        if any(r > 0 for r in self._tail_ramps):
            bound = max(bound, defaults.TAIL_CURVATURE)
        return bound

    @property
    def max_abs_first_deriv(self) -> float:
        return float(np.max(np.abs(self._knot_slopes)))

    def eval(self, x: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
        """psi(x), psi'(x) and the piecewise-constant psi''(x), elementwise."""
        scalar = np.ndim(x) == 0
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("Potential arguments must be finite")
        lo, hi = self.knot_range
        d = self.second_derivs
        idx = np.clip(np.floor((x - lo) / self.spacing).astype(np.int64), 0, self.n_intervals - 1)
        u = x - self.knots[idx]
        slope = self._knot_slopes[idx] + d[idx] * u
        value = self._knot_values[idx] + self._knot_slopes[idx] * u + 0.5 * d[idx] * u * u
        curvature = d[idx].copy()

        below = x < lo
        above = x > hi
        if np.any(below):
            t_value, t_slope, t_curv = self._tail(lo - x, 0)
            slope = np.where(below, -t_slope, slope)
            value = np.where(below, t_value, value)
            curvature = np.where(below, t_curv, curvature)
        if np.any(above):
            t_value, t_slope, t_curv = self._tail(x - hi, -1)
            slope = np.where(above, t_slope, slope)
            value = np.where(above, t_value, value)
            curvature = np.where(above, t_curv, curvature)
        value = value + self.value_offset
        if scalar:
            return float(value), float(slope), float(curvature)
        return value, slope, curvature

    def _tail(self, t: np.ndarray, end: int):
        """Value, outward slope and curvature at distance t >= 0 past the end knot."""
        outward = self._knot_slopes[end] if end == -1 else -self._knot_slopes[end]
        ramp = self._tail_ramps[0 if end == 0 else 1]
        t = np.maximum(t, 0.0)
        if ramp == 0.0:
            return self._knot_values[end] + outward * t, np.full_like(t, outward), np.zeros_like(t)
        kappa = defaults.TAIL_CURVATURE
        bent = np.minimum(t, ramp)
        value = self._knot_values[end] + outward * bent + 0.5 * kappa * bent * bent
        return value, outward + kappa * bent, np.where(t < ramp, kappa, 0.0)

    def scaled_eval(self, alpha: float, x: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
        """alpha^-2 psi(alpha x), alpha^-1 psi'(alpha x) and psi''(alpha x)."""
        if not np.isfinite(alpha) or alpha <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        value, slope, curvature = self.eval(alpha * np.asarray(x, dtype=float))
        if np.ndim(x) == 0:
            return float(value) / alpha ** 2, float(slope) / alpha, float(curvature)
        return value / alpha ** 2, slope / alpha, curvature

    def slope_basis(self, u: np.ndarray) -> np.ndarray:
        """Signed overlap of [0, u] with every knot interval, shape (len(u), n_intervals).

        psi_plus'(u) = slope_basis(u) @ second_derivs_plus, and likewise for psi_minus.
        """
        u = np.asarray(u, dtype=float).reshape(-1)
        knots = self.knots
        a = knots[:-1]
        b = knots[1:]
        return np.clip(u[:, None], a, b) - np.clip(0.0, a, b)

    def slope_sensitivity(self, u: np.ndarray) -> np.ndarray:
        """slope_basis with zero rows where a bent tail has gone flat.

        d psi'(u) / d psi_plus'' = mu * row and d psi'(u) / d psi_minus'' = -c_cvx * row.
        """
        u = np.asarray(u, dtype=float).reshape(-1)
        basis = self.slope_basis(u)
        lo, hi = self.knot_range
        left, right = self._tail_ramps
        flat = np.zeros(u.shape, dtype=bool)
        if left > 0:
            flat |= u <= lo - left
        if right > 0:
            flat |= u >= hi + right
        basis[flat] = 0.0
        return basis

    def plus_slope(self, u: np.ndarray) -> np.ndarray:
        return self.slope_basis(u) @ self.second_derivs_plus

    def minus_slope(self, u: np.ndarray) -> np.ndarray:
        return self.slope_basis(u) @ self.second_derivs_minus
