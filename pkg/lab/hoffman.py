import logging
from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from cnst import defaults

logger = logging.getLogger(__name__)

MAX_VARIABLES = 12
MAX_ROWS = 24
FEASIBILITY_TOL = 1e-9


def _as_matrix(a: Optional[np.ndarray], n: int) -> np.ndarray:
    if a is None:
        return np.zeros((0, n))
    a = np.asarray(a, dtype=float)
    return a.reshape(0, n) if a.size == 0 else np.atleast_2d(a)


def matrix_rank(a: np.ndarray, threshold: float = defaults.RANK_THRESHOLD) -> int:
    if a.size == 0:
        return 0
    return int(np.sum(np.linalg.svd(a, compute_uv=False) > threshold))


def range_basis(a: np.ndarray, threshold: float = defaults.RANK_THRESHOLD) -> np.ndarray:
    """Orthonormal basis of range(a) as columns."""
    if a.size == 0:
        return np.zeros((a.shape[0], 0))
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    return u[:, s > threshold]


@dataclass(eq=False)
class PolyhedralSystem:
    """{x : E x = b, F x <= q}"""

    E: np.ndarray
    F: np.ndarray
    b: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        n = self.n_vars
        self.E = _as_matrix(self.E, n)
        self.F = _as_matrix(self.F, n)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.q = np.asarray(self.q, dtype=float).reshape(-1)
        if self.E.shape[1] != n or self.F.shape[1] != n:
            raise ValueError("E and F must have the same number of columns")
        if self.b.size != self.E.shape[0] or self.q.size != self.F.shape[0]:
            raise ValueError("Right-hand sides do not match the constraint rows")
        check_size(self.E, self.F)

    @property
    def n_vars(self) -> int:
        for a in (self.E, self.F):
            a = np.asarray(a)
            if a.ndim == 2 and a.shape[1] > 0:
                return a.shape[1]
        raise ValueError("Cannot infer the number of variables from empty E and F")

    def residual(self, x: np.ndarray) -> np.ndarray:
        return np.concatenate([self.E @ x - self.b, np.maximum(self.F @ x - self.q, 0.0)])

    def is_feasible(self) -> bool:
        n = self.n_vars
        result = linprog(np.zeros(n), A_ub=self.F if self.F.shape[0] else None, b_ub=self.q if self.q.size else None,
                         A_eq=self.E if self.E.shape[0] else None, b_eq=self.b if self.b.size else None,
                         bounds=[(None, None)] * n, method="highs")
        return result.status == 0


def check_size(E: np.ndarray, F: np.ndarray) -> None:
    n = max(E.shape[1], F.shape[1])
    if n > MAX_VARIABLES or E.shape[0] + F.shape[0] > MAX_ROWS:
        raise ValueError(f"System too large for exact enumeration (n <= {MAX_VARIABLES}, rows <= {MAX_ROWS})")


def feasible_subsets(E: np.ndarray, F: np.ndarray) -> List[Tuple[int, ...]]:
    """Row sets J of F with rank(F_J) = |J| and range(E^T) meeting range(F_J^T) only at 0.

    Both conditions together read rank([E^T, F_J^T]) = rank(E) + |J|. A failing J
    makes every superset fail, so the search prunes there.
    """
    n = max(np.shape(E)[-1] if np.size(E) else 0, np.shape(F)[-1] if np.size(F) else 0)
    E = _as_matrix(E, n)
    F = _as_matrix(F, n)
    check_size(E, F)
    rank_e = matrix_rank(E)
    found: List[Tuple[int, ...]] = []

    def qualifies(subset: Tuple[int, ...]) -> bool:
        stacked = np.vstack([E, F[list(subset)]]) if subset else E
        return matrix_rank(stacked) == rank_e + len(subset)

    def extend(subset: Tuple[int, ...], start: int) -> None:
        found.append(subset)
        for i in range(start, F.shape[0]):
            candidate = subset + (i,)
            if qualifies(candidate):
                extend(candidate, i + 1)

    extend((), 0)
    return found


def cone_sphere_minimum(M: np.ndarray, n_free: int) -> float:
    """min ||M w|| over unit w whose trailing columns (after ``n_free``) carry non-negative weights.

    Every face of the cone is enumerated; on a face the constrained minimum is an
    eigenvector of the face Gram matrix with a non-negative cone part.
    """
    n_cone = M.shape[1] - n_free
    best = np.inf
    for size in range(n_cone + 1):
        for active in combinations(range(n_cone), size):
            columns = list(range(n_free)) + [n_free + j for j in active]
            if not columns:
                continue
            sub = M[:, columns]
            eigvals, eigvecs = np.linalg.eigh(sub.T @ sub)
            for k in range(eigvals.size):
                v = eigvecs[n_free:, k]
                if size == 0 or np.all(v >= -1e-12) or np.all(v <= 1e-12):
                    best = min(best, max(float(eigvals[k]), 0.0))
    return float(np.sqrt(best))


def hoffman_constant(E: np.ndarray, F: np.ndarray) -> float:
    """K(E, F): the largest reciprocal inner minimum over all feasible row sets."""
    n = max(np.shape(E)[-1] if np.size(E) else 0, np.shape(F)[-1] if np.size(F) else 0)
    E = _as_matrix(E, n)
    F = _as_matrix(F, n)
    basis = range_basis(E)
    constant = 0.0
    terms = 0
    for subset in feasible_subsets(E, F):
        blocks = [E.T @ basis, F[list(subset)].T]
        M = np.hstack(blocks)
        if M.shape[1] == 0:
            continue
        inner = cone_sphere_minimum(M, basis.shape[1])
        terms += 1
        if inner <= 0.0:
            raise ValueError(f"Inner minimum vanished for row set {subset}")
        constant = max(constant, 1.0 / inner)
    if terms == 0:
        raise ValueError("Degenerate system: no feasible row set yields an inner problem")
    logger.debug(f"Hoffman constant {constant:.6g} over {terms} row sets")
    return constant


def project_onto_polyhedron(system: PolyhedralSystem, x_probe: np.ndarray) -> np.ndarray:
    """Euclidean projection by enumerating active inequality sets of size at most n."""
    x_probe = np.asarray(x_probe, dtype=float)
    if np.all(system.residual(x_probe) == 0.0) or (
            np.allclose(system.E @ x_probe, system.b, atol=FEASIBILITY_TOL)
            and np.all(system.F @ x_probe <= system.q + FEASIBILITY_TOL)):
        return x_probe.copy()
    n = system.n_vars
    best = None
    best_dist = np.inf
    for size in range(min(n, system.F.shape[0]) + 1):
        for active in combinations(range(system.F.shape[0]), size):
            C = np.vstack([system.E, system.F[list(active)]])
            d = np.concatenate([system.b, system.q[list(active)]])
            if C.shape[0] == 0:
                candidate = x_probe.copy()
            else:
                candidate = x_probe + np.linalg.pinv(C) @ (d - C @ x_probe)
                if not np.allclose(C @ candidate, d, atol=1e-8):
                    continue
            if not (np.allclose(system.E @ candidate, system.b, atol=1e-8)
                    and np.all(system.F @ candidate <= system.q + 1e-8)):
                continue
            dist = float(np.linalg.norm(candidate - x_probe))
            if dist < best_dist:
                best, best_dist = candidate, dist
    if best is None:
        raise ValueError("No feasible projection found; the system is likely infeasible")
    return best


def hoffman_distance_check(system: PolyhedralSystem, x_probe: np.ndarray,
                           constant: Optional[float] = None) -> Tuple[float, float]:
    """(K * ||(Ex - b, (Fx - q)_+)||, true distance to the polyhedron)."""
    if not system.is_feasible():
        raise ValueError("Polyhedral system is infeasible")
    constant = hoffman_constant(system.E, system.F) if constant is None else constant
    bound = constant * float(np.linalg.norm(system.residual(np.asarray(x_probe, dtype=float))))
    distance = float(np.linalg.norm(project_onto_polyhedron(system, x_probe) - x_probe))
    if distance > bound * (1.0 + 1e-8) + 1e-12:
        logger.warning(f"Distance {distance:.6g} exceeds Hoffman bound {bound:.6g}")
    return bound, distance
