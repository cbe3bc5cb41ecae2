"""Forces, pair energy and equilibrium solvers for the bead model.

All quantities are in normalized units: unit needle, unit charges, and the
Coulomb prefactor dropped. Charge indices in the public API are 1-based.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .config import ChargeConfiguration, ClosedSimplexPoint, OpenSimplexPoint, equispaced
from .errors import IndexOutOfRange, InvalidCount, NotConverged, StepUnderflow, ValidationError

log = logging.getLogger(__name__)

# phi is only used to localize the equilibrium before descent takes over
PHI_WARM_START_ITERATIONS = 500
PHI_WARM_START_DISPLACEMENT = 1e-3


class Method(str, enum.Enum):
    FIXED_POINT = "FixedPoint"
    GRADIENT_DESCENT = "GradientDescent"
    GRADIENT_FLOW = "GradientFlow"
    HYBRID = "Hybrid"


@dataclass(frozen=True)
class EquilibriumReport:
    configuration: ChargeConfiguration
    residual: float
    iterations: int
    method: Method

    def __post_init__(self):
        if not self.residual >= 0.0:
            raise ValidationError(f"residual must be non-negative, got {self.residual!r}")

    @property
    def positions(self) -> np.ndarray:
        return self.configuration.positions

    @property
    def n(self) -> int:
        return self.configuration.n

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "method": self.method.value,
            "iterations": int(self.iterations),
            "residual": float(self.residual),
            "positions": [float(v) for v in self.positions],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "EquilibriumReport":
        return cls(
            configuration=ChargeConfiguration(data["positions"]),
            residual=float(data["residual"]),
            iterations=int(data["iterations"]),
            method=Method(data["method"]),
        )


def default_tolerance(n: int) -> float:
    """Gradient tolerance used when the caller does not pick one.

    1e-10 up to 64 charges, 1e-8 * n/64 beyond. For large n the bound is
    raised to the double-precision floor of the force evaluation, which
    grows like n**3 (an ulp of position moves the force by ~ 2 ulp / gap**3).
    """
    tol = 1e-10 if n <= 64 else 1e-8 * (n / 64)
    return max(tol, 2e-15 * float(n) ** 3)


# -- forces and energy -------------------------------------------------------

def _inverse_square_matrix(x: np.ndarray) -> np.ndarray:
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, np.inf)
    return 1.0 / (d * d)


def forces(positions) -> np.ndarray:
    """Net force on every charge (array of length n).

    Entry i is sum_{j<i} 1/(x_i-x_j)^2 - sum_{j>i} 1/(x_i-x_j)^2. The values
    at the pinned endpoints are returned as computed but play no role.
    """
    x = np.asarray(positions, dtype=float)
    w = _inverse_square_matrix(x)
    left = np.tril(w, -1).sum(axis=1)
    right = np.triu(w, 1).sum(axis=1)
    return left - right


def interior_forces(positions) -> np.ndarray:
    return forces(positions)[1:-1]


def residual(positions) -> float:
    """Max |net force| over interior charges (0 for two charges)."""
    f = interior_forces(positions)
    return float(np.max(np.abs(f))) if f.size else 0.0


def net_force(config: ChargeConfiguration, i: int) -> float:
    """Net force on charge i (1-based, 2 <= i <= n-1)."""
    n = config.n
    if not 2 <= i <= n - 1:
        raise IndexOutOfRange(f"charge index must be in [2, {n - 1}], got {i}")
    x = config.positions
    xi = x[i - 1]
    left = np.sum(1.0 / (xi - x[: i - 1]) ** 2)
    right = np.sum(1.0 / (xi - x[i:]) ** 2)
    return float(left - right)


def energy(point: OpenSimplexPoint) -> float:
    """Sum of 1/(a_k - a_j) over all pairs j < k, pinned endpoints included."""
    a = point.full()
    d = a[None, :] - a[:, None]
    iu = np.triu_indices(a.size, 1)
    return float(np.sum(1.0 / d[iu]))


def energy_gradient(point: OpenSimplexPoint) -> np.ndarray:
    """Gradient of :func:`energy`; equals minus the interior forces."""
    return -interior_forces(point.full())


def energy_hessian(point: OpenSimplexPoint) -> np.ndarray:
    """Hessian of :func:`energy` in the free coordinates.

    Off-diagonal entries are -2/|a_k-a_j|^3; the diagonal carries the sum over
    every other charge, endpoints included. Positive definite on the open
    simplex, which is what makes Newton directions descent directions.
    """
    a = point.full()
    d = np.abs(a[:, None] - a[None, :])
    np.fill_diagonal(d, np.inf)
    w = 2.0 / d**3
    h = -w
    np.fill_diagonal(h, w.sum(axis=1))
    return h[1:-1, 1:-1]


# -- the fixed-point map -----------------------------------------------------

def _damped_sign(f: np.ndarray) -> np.ndarray:
    # sgn(F) * exp(-1/F^2), extended by continuity at F = 0 (sgn(0) = 0)
    out = np.zeros_like(f)
    with np.errstate(divide="ignore", over="ignore"):
        inv = 1.0 / (f * f)
    ok = np.isfinite(inv)
    out[ok] = np.sign(f[ok]) * np.exp(-inv[ok])
    return out


def phi_map(point: ClosedSimplexPoint) -> ClosedSimplexPoint:
    """One application of the continuous self-map whose fixed points are equilibria.

    All charges are updated simultaneously from the input coordinates. Ties
    between neighbours are resolved by the one-sided branches (move a third
    of the way toward the free side); a charge tied on both sides stays
    put. Otherwise the charge moves by a third of its smaller neighbour gap,
    scaled by sgn(F) exp(-1/F^2) with F its net force.
    """
    x = np.array(point.coords, dtype=float)
    n = x.size
    y = x.copy()
    y[0], y[-1] = 0.0, 1.0
    if n <= 2:
        return ClosedSimplexPoint(y)
    lo, xi, hi = x[:-2], x[1:-1], x[2:]
    tie_lo = lo == xi
    tie_hi = xi == hi
    free = ~tie_lo & ~tie_hi
    mid = y[1:-1]
    mid[~tie_lo & tie_hi] = (xi - (xi - lo) / 3.0)[~tie_lo & tie_hi]
    mid[tie_lo & ~tie_hi] = (xi + (hi - xi) / 3.0)[tie_lo & ~tie_hi]
    if np.any(free):
        d = x[:, None] - x[None, :]
        with np.errstate(divide="ignore"):
            w = 1.0 / (d * d)
        # coincident pairs never reach a free charge; blank them out
        w[~np.isfinite(w)] = 0.0
        f = (np.tril(w, -1).sum(axis=1) - np.triu(w, 1).sum(axis=1))[1:-1]
        step = np.minimum(xi - lo, hi - xi) / 3.0
        mid[free] = (xi + step * _damped_sign(f))[free]
    return ClosedSimplexPoint(y)


def _phi_iterate(x: np.ndarray, max_iter: int, tol: float):
    """Iterate phi; return (point, iterations, last displacement)."""
    point = ClosedSimplexPoint(x)
    moved = math.inf
    it = 0
    while it < max_iter:
        nxt = phi_map(point)
        it += 1
        moved = float(np.max(np.abs(nxt.coords - point.coords))) if point.n > 2 else 0.0
        point = nxt
        if moved < tol:
            break
    return point, it, moved


def solve_fixed_point(start: ClosedSimplexPoint, max_iter: int = 100_000, tol: float = 1e-6) -> EquilibriumReport:
    """Iterate phi until the largest interior move drops below ``tol``.

    Convergence is very slow near the fixed point: the exp(-1/F^2) damping
    freezes a charge once its net force falls to a few tenths, so the
    result is only a coarse localization (error ~1e-3 for small n).
    Raises NotConverged, carrying the last iterate, if ``max_iter`` runs out.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    point, it, moved = _phi_iterate(start.coords, max_iter, tol)
    if not point.is_strict():
        raise NotConverged(f"phi iterate still degenerate after {it} iterations")
    config = ChargeConfiguration(point.coords)
    report = EquilibriumReport(config, residual(config.positions), it, Method.FIXED_POINT)
    if moved >= tol:
        raise NotConverged(f"phi did not settle within {max_iter} iterations (last move {moved:.3g})", report)
    return report


# -- descent ----------------------------------------------------------------

def _energy_full(x: np.ndarray) -> float:
    d = x[None, :] - x[:, None]
    iu = np.triu_indices(x.size, 1)
    return float(np.sum(1.0 / d[iu]))


def solve_gradient_descent(
    start: OpenSimplexPoint,
    tol: float | None = None,
    max_iter: int = 10_000,
    direction: str = "newton",
) -> EquilibriumReport:
    """Minimize the pair energy from ``start`` until max |gradient| < tol.

    ``direction="newton"`` scales the gradient by the inverse Hessian (a
    descent direction since the energy is strictly convex);
    ``direction="steepest"`` uses the plain negative gradient. Either way a
    backtracking line search halves the step until the trial point is
    strictly ordered and satisfies the Armijo decrease. Once the predicted
    decrease is below the rounding noise of the energy, a step is accepted
    if it reduces the gradient instead.
    """
    if direction not in ("newton", "steepest"):
        raise ValidationError(f"unknown direction {direction!r}")
    n = start.n
    if tol is None:
        tol = default_tolerance(n)
    if tol <= 0:
        raise ValidationError("tol must be positive")
    x = start.full()
    if n <= 2:
        return EquilibriumReport(ChargeConfiguration(x), 0.0, 0, Method.GRADIENT_DESCENT)

    g = -interior_forces(x)
    e = _energy_full(x)
    it = 0
    while True:
        gmax = float(np.max(np.abs(g)))
        if gmax < tol:
            return EquilibriumReport(ChargeConfiguration(x), gmax, it, Method.GRADIENT_DESCENT)
        if it >= max_iter:
            report = EquilibriumReport(ChargeConfiguration(x), gmax, it, Method.GRADIENT_DESCENT)
            raise NotConverged(f"descent stopped at |grad| = {gmax:.3g} after {it} iterations", report)
        it += 1

        if direction == "newton":
            d = -np.linalg.solve(energy_hessian(OpenSimplexPoint(x[1:-1])), g)
            if not float(g @ d) < 0.0:
                d = -g
        else:
            d = -g
        slope = float(g @ d)
        # largest step that keeps every neighbour gap positive
        dd = np.diff(np.concatenate(([0.0], d, [0.0])))
        gaps = np.diff(x)
        shrinking = dd < 0
        t = 1.0
        if np.any(shrinking):
            t = min(1.0, 0.9 * float(np.min(gaps[shrinking] / -dd[shrinking])))
        noise = 64 * np.finfo(float).eps * abs(e)
        while True:
            trial = x.copy()
            trial[1:-1] += t * d
            if np.all(np.diff(trial) > 0.0):
                e_trial = _energy_full(trial)
                if e_trial <= e + 1e-4 * t * slope:
                    g_trial = -interior_forces(trial)
                    break
                if abs(t * slope) <= noise:
                    g_trial = -interior_forces(trial)
                    if np.max(np.abs(g_trial)) < gmax:
                        break
            t *= 0.5
            if t * float(np.max(np.abs(d))) < np.finfo(float).eps * 1e-2:
                report = EquilibriumReport(ChargeConfiguration(x), gmax, it, Method.GRADIENT_DESCENT)
                raise StepUnderflow(f"line search underflow at |grad| = {gmax:.3g}", report)
        x, e, g = trial, e_trial, g_trial


def solve(n: int, tol: float | None = None) -> EquilibriumReport:
    """Equilibrium of n charges: coarse phi iterations, then Newton descent."""
    if int(n) != n or n < 2:
        raise InvalidCount(f"need at least 2 charges, got {n}")
    n = int(n)
    if tol is None:
        tol = default_tolerance(n)
    start = equispaced(n).positions
    if n <= 3:
        # the symmetric start is already the equilibrium
        return EquilibriumReport(equispaced(n), residual(start), 0, Method.HYBRID)
    point, phi_iters, _ = _phi_iterate(start, PHI_WARM_START_ITERATIONS, PHI_WARM_START_DISPLACEMENT)
    log.debug("phi warm start for n=%d: %d iterations", n, phi_iters)
    warm = point.coords if point.is_strict() else start
    report = solve_gradient_descent(OpenSimplexPoint(warm[1:-1]), tol=tol)
    return EquilibriumReport(report.configuration, report.residual, phi_iters + report.iterations, Method.HYBRID)
