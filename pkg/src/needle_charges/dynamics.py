"""Time integration of the charge systems.

Two systems are supported:

* ``Newtonian``: x_i'' = f_i with zero initial velocities, integrated in
  first-order form on (velocity, position) with velocities unconstrained.
* ``GradientFlow``: x_i' = f_i, which descends the pair energy and settles
  on the equilibrium.

Both use an embedded Dormand-Prince 5(4) pair with a geometric safeguard:
a step that would shrink any neighbour gap below 10% of its current value
(or cross two charges at any stage) is halved and retried.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import ChargeConfiguration, equispaced
from .equilibrium import EquilibriumReport, Method, forces, residual
from .errors import InsufficientSamples, InvalidCount, NotConverged, OrderingBreached, ValidationError

log = logging.getLogger(__name__)

RTOL = 1e-9
ATOL = 1e-9
GAP_FLOOR = 0.1

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_A_ROWS = [np.array(row) for row in _A]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


class System(str, enum.Enum):
    NEWTONIAN = "Newtonian"
    GRADIENT_FLOW = "GradientFlow"


@dataclass(frozen=True)
class DynamicsSpec:
    system: System
    initial_positions: ChargeConfiguration
    horizon: float
    sampling_step: float

    def __post_init__(self):
        object.__setattr__(self, "system", System(self.system))
        if not self.sampling_step > 0 or not self.horizon >= self.sampling_step:
            raise ValidationError("need horizon >= sampling_step > 0")

    @property
    def n(self) -> int:
        return self.initial_positions.n


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples on a fixed time grid.

    ``positions`` has shape (samples, n); ``velocities`` has the same shape
    for the Newtonian system and is None for the gradient flow.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray | None = None
    system: System = System.NEWTONIAN

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        if t.ndim != 1 or x.shape[0] != t.size:
            raise ValidationError("times and positions disagree in length")
        if t.size and (t[0] != 0.0 or np.any(np.diff(t) <= 0)):
            raise ValidationError("times must start at 0 and increase strictly")
        if np.any(x[:, 0] != 0.0) or np.any(x[:, -1] != 1.0) or np.any(np.diff(x, axis=1) <= 0):
            raise ValidationError("every sampled state must be a valid configuration")
        if self.velocities is not None:
            v = np.asarray(self.velocities, dtype=float)
            if v.shape != x.shape or np.any(v[:, 0] != 0.0) or np.any(v[:, -1] != 0.0):
                raise ValidationError("velocities must match positions and vanish at the endpoints")

    @property
    def n(self) -> int:
        return int(self.positions.shape[1])

    @property
    def states(self) -> list[ChargeConfiguration]:
        return [ChargeConfiguration(row) for row in self.positions]

    def state_at(self, t: float) -> ChargeConfiguration:
        """Sampled state at the grid time nearest to ``t``."""
        k = int(np.argmin(np.abs(self.times - t)))
        return ChargeConfiguration(self.positions[k])


# -- integrator ---------------------------------------------------------------

class _Stepper:
    """Adaptive DP45 on a state vector whose tail holds the interior positions."""

    def __init__(self, rhs: Callable[[np.ndarray], np.ndarray], n_interior: int, rtol=RTOL, atol=ATOL):
        self.rhs = rhs
        self.m = n_interior
        self.rtol = rtol
        self.atol = atol
        self.h = None
        self.steps = 0
        self.rejected = 0

    def _gaps(self, y: np.ndarray) -> np.ndarray:
        x = y[len(y) - self.m:]
        return np.diff(np.concatenate(([0.0], x, [1.0])))

    def _initial_step(self, y, k0) -> float:
        scale = self.atol + self.rtol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2)) if y.size else 0.0
        d1 = np.sqrt(np.mean((k0 / scale) ** 2)) if y.size else 0.0
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        return min(h, 1e-2)

    def advance(self, y: np.ndarray, t0: float, t1: float) -> np.ndarray:
        """Integrate from t0 to exactly t1."""
        t = t0
        if self.m == 0:
            return y
        k0 = self.rhs(y)
        if self.h is None:
            self.h = self._initial_step(y, k0)
        while t1 - t > 1e-14 * max(1.0, abs(t1)):
            h = min(self.h, t1 - t)
            last = h == t1 - t
            y_new, k_new, err = self._try(y, k0, h)
            if y_new is None or err > 1.0:
                self.rejected += 1
                if y_new is None:
                    self.h = h * 0.5
                else:
                    self.h = h * max(0.2, 0.9 * err ** -0.2)
                if self.h < 1e-15 * max(1.0, abs(t)):
                    raise OrderingBreached(f"step size underflow at t = {t:.6g} while keeping charges ordered")
                continue
            self.steps += 1
            t = t1 if last else t + h
            y, k0 = y_new, k_new
            factor = 5.0 if err == 0 else min(5.0, 0.9 * err ** -0.2)
            # a step shortened to hit t1 must not shrink the running step size
            self.h = max(self.h, h * factor) if last else h * factor
        return y

    def _try(self, y, k0, h):
        gaps0 = self._gaps(y)
        ks = np.empty((7, y.size))
        ks[0] = k0
        for s in range(1, 7):
            ys = y + h * (_A_ROWS[s][:s] @ ks[:s])
            if np.any(self._gaps(ys) <= 0.0):
                return None, None, math.inf
            ks[s] = self.rhs(ys)
        y_new = y + h * (_B @ ks)
        if np.any(self._gaps(y_new) < GAP_FLOOR * gaps0):
            return None, None, math.inf
        e = h * (_E @ ks)
        scale = self.atol + self.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(e) / scale))
        return y_new, ks[6].copy(), err


def _full(interior: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], interior, [1.0]))


class _ForceKernel:
    """Interior forces for a fixed charge count, with the sign pattern precomputed."""

    def __init__(self, n: int):
        idx = np.arange(n)
        self.sign = np.sign(idx[:, None] - idx[None, :]).astype(float)[1:-1]
        self.eye = np.eye(n)[1:-1]
        self.x = np.empty(n)
        self.x[0], self.x[-1] = 0.0, 1.0

    def __call__(self, interior: np.ndarray) -> np.ndarray:
        self.x[1:-1] = interior
        d = interior[:, None] - self.x[None, :] + self.eye
        return np.sum(self.sign / (d * d), axis=1)


def _newton_rhs(m: int):
    kernel = _ForceKernel(m + 2)

    def rhs(y):
        out = np.empty_like(y)
        out[:m] = kernel(y[m:])
        out[m:] = y[:m]
        return out
    return rhs


def _flow_rhs(m: int):
    return _ForceKernel(m + 2)


def _sample_grid(horizon: float, step: float) -> np.ndarray:
    k = int(math.floor(horizon / step + 1e-9))
    times = step * np.arange(k + 1)
    if horizon - times[-1] > 1e-9 * step:
        times = np.append(times, horizon)
    return times


def simulate(spec: DynamicsSpec) -> Trajectory:
    """Integrate the chosen system over [0, horizon], sampled every ``sampling_step``.

    The endpoints stay pinned and ordering is checked at every internal
    stage; OrderingBreached is raised if the step size underflows while
    trying to avoid a crossing.
    """
    x0 = spec.initial_positions.positions
    n = x0.size
    m = n - 2
    times = _sample_grid(spec.horizon, spec.sampling_step)
    pos = np.empty((times.size, n))
    pos[:, 0], pos[:, -1] = 0.0, 1.0
    if spec.system is System.NEWTONIAN:
        stepper = _Stepper(_newton_rhs(m), m)
        y = np.concatenate((np.zeros(m), x0[1:-1]))
        vel = np.zeros((times.size, n))
    else:
        stepper = _Stepper(_flow_rhs(m), m)
        y = np.array(x0[1:-1])
        vel = None
    pos[0, 1:-1] = y[len(y) - m:]
    for k in range(1, times.size):
        y = stepper.advance(y, times[k - 1], times[k])
        pos[k, 1:-1] = y[len(y) - m:]
        if vel is not None:
            vel[k, 1:-1] = y[:m]
    log.debug("%s n=%d: %d steps, %d rejected", spec.system.value, n, stepper.steps, stepper.rejected)
    return Trajectory(times, pos, vel, spec.system)


def time_average(traj: Trajectory, start: float = 1.0) -> ChargeConfiguration:
    """Trapezoidal time average of the positions over [start, horizon].

    If ``start`` falls between samples the state there is linearly
    interpolated. Endpoints stay exactly 0 and 1.
    """
    t = traj.times
    if start < 0 or t.size < 2 or start >= t[-1]:
        raise InsufficientSamples("need at least two samples covering [start, horizon]")
    keep = t > start
    ts = np.concatenate(([start], t[keep]))
    first = np.array([np.interp(start, t, traj.positions[:, j]) for j in range(traj.n)])
    xs = np.vstack((first, traj.positions[keep]))
    avg = np.trapezoid(xs, ts, axis=0) / (ts[-1] - ts[0])
    avg[0], avg[-1] = 0.0, 1.0
    return ChargeConfiguration(avg)


def flow_to_equilibrium(
    n: int,
    start: ChargeConfiguration | None = None,
    tol: float = 1e-9,
    time_budget: float = 1e3,
    check_every: float = 0.05,
    integrator_tol: float = 1e-12,
) -> EquilibriumReport:
    """Follow the gradient flow until the max interior force is below ``tol``.

    ``start`` defaults to :func:`shifted_start`.

    The integrator runs tighter than for trajectory sampling: near the
    equilibrium an explicit step sits at its stability limit and the stiff
    modes leave a force floor of roughly (largest Hessian eigenvalue) x
    (integrator tolerance).

    ``iterations`` in the report counts accepted integrator steps.
    Raises NotConverged once ``time_budget`` units of flow time have passed.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if start is None:
        start = shifted_start(n)
    if start.n != n:
        raise ValidationError(f"start has {start.n} charges, expected {n}")
    if n <= 2:
        return EquilibriumReport(start, 0.0, 0, Method.GRADIENT_FLOW)
    stepper = _Stepper(_flow_rhs(n - 2), n - 2, rtol=integrator_tol, atol=integrator_tol)
    y = np.array(start.positions[1:-1])
    t = 0.0
    while True:
        r = residual(_full(y))
        if r < tol:
            return EquilibriumReport(ChargeConfiguration(_full(y)), r, stepper.steps, Method.GRADIENT_FLOW)
        if t >= time_budget:
            report = EquilibriumReport(ChargeConfiguration(_full(y)), r, stepper.steps, Method.GRADIENT_FLOW)
            raise NotConverged(f"flow force still {r:.3g} at t = {t:g}", report)
        y = stepper.advance(y, t, t + check_every)
        t += check_every


# -- initial conditions --------------------------------------------------------

def half_needle(n: int) -> ChargeConfiguration:
    """Charges packed on the left half: x_i = (i-1)/(2n-1) for 1 < i < n, x_n = 1."""
    if n < 2:
        raise InvalidCount(f"need at least 2 charges, got {n}")
    x = np.arange(n, dtype=float) / (2 * n - 1)
    x[-1] = 1.0
    return ChargeConfiguration(x)


def shifted_start(n: int) -> ChargeConfiguration:
    """x_i = (i-1)/n for i < n with the last charge pinned at 1."""
    if n < 2:
        raise InvalidCount(f"need at least 2 charges, got {n}")
    x = np.arange(n, dtype=float) / n
    x[-1] = 1.0
    return ChargeConfiguration(x)


INITIAL_CONDITIONS = {
    "equispaced": equispaced,
    "half-needle": half_needle,
    "shifted": shifted_start,
}
