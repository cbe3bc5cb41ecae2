"""Distribution functions of normalized charge configurations.

With total charge 1, n charges define a discrete probability on [0, 1]
whose distribution function jumps by 1/n at every position. The tools
here measure how far that step function is from the identity, follow
individual charges across the dyadic family n = 2**m + 1, and predict
the equilibrium obtained by adding one charge.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .config import ChargeConfiguration
from .equilibrium import solve
from .errors import CountNotDyadic, InvalidCount, ResolutionTooCoarse, ValidationError


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    """Right-continuous step function F(x) = #{positions <= x} / n."""

    jump_points: np.ndarray

    def __post_init__(self):
        pts = np.sort(np.asarray(self.jump_points, dtype=float).ravel())
        if pts.size == 0:
            raise InvalidCount("an empirical CDF needs at least one point")
        pts.flags.writeable = False
        object.__setattr__(self, "jump_points", pts)

    @classmethod
    def from_configuration(cls, config: ChargeConfiguration) -> "EmpiricalCdf":
        return cls(config.positions)

    @property
    def n(self) -> int:
        return int(self.jump_points.size)

    @property
    def jump_height(self) -> float:
        return 1.0 / self.n

    def jumps(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct jump locations and the mass carried by each."""
        loc, counts = np.unique(self.jump_points, return_counts=True)
        return loc, counts / self.n

    def __call__(self, x):
        return cdf_eval(self, x)


def cdf_eval(cdf: EmpiricalCdf, x):
    """Fraction of positions <= x (vectorized over x)."""
    counts = np.searchsorted(cdf.jump_points, x, side="right")
    out = counts / cdf.n
    return float(out) if np.ndim(out) == 0 else out


def sup_distance_to_uniform(cdf: EmpiricalCdf) -> float:
    """sup over [0, 1] of |F(x) - x|, exact.

    F is constant between jumps and x is monotone, so the supremum is
    reached at a jump (value F) or approached just before it (left limit).
    The right end x = 1 is included for samples that stop short of 1.
    """
    loc, mass = cdf.jumps()
    after = np.cumsum(mass)
    before = after - mass
    inside = (loc >= 0.0) & (loc <= 1.0)
    cand = [0.0]
    if np.any(inside):
        cand.append(float(np.max(np.abs(after[inside] - loc[inside]))))
        cand.append(float(np.max(np.abs(before[inside] - loc[inside]))))
    cand.append(abs(cdf_eval(cdf, 1.0) - 1.0))
    cand.append(abs(cdf_eval(cdf, 0.0) - 0.0))
    return max(cand)


# -- dyadic tracking -----------------------------------------------------------

@dataclass(frozen=True)
class DyadicTarget:
    """The dyadic fraction q / 2**s with q odd and 0 < q < 2**s."""

    q: int
    s: int

    def __post_init__(self):
        if self.s < 1 or self.q <= 0 or self.q >= 2**self.s or self.q % 2 == 0:
            raise ValidationError(f"{self.q}/2^{self.s} is not a reduced dyadic fraction in (0, 1)")

    @classmethod
    def from_fraction(cls, value) -> "DyadicTarget":
        """Accepts a Fraction or a string like '5/8'."""
        frac = Fraction(value)
        den = frac.denominator
        if den & (den - 1) or den < 2:
            raise ValidationError(f"{frac} is not a dyadic fraction in (0, 1)")
        return cls(frac.numerator, den.bit_length() - 1)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.q, 2**self.s)

    def __float__(self) -> float:
        return self.q / 2**self.s

    def __str__(self) -> str:
        return f"{self.q}/{2**self.s}"


def dyadic_exponent(n: int) -> int:
    """m such that n = 2**m + 1, or CountNotDyadic."""
    k = n - 1
    if k < 1 or k & (k - 1):
        raise CountNotDyadic(f"{n} is not of the form 2^m + 1")
    return k.bit_length() - 1


def dyadic_index(n: int, target: DyadicTarget) -> int:
    """1-based index of the charge with a fraction q/2**s of the others to its left."""
    m = dyadic_exponent(n)
    if m < target.s:
        raise ResolutionTooCoarse(f"{n} charges cannot resolve {target}")
    return target.q * 2 ** (m - target.s) + 1


def dyadic_position(config: ChargeConfiguration, target: DyadicTarget) -> float:
    return float(config.positions[dyadic_index(config.n, target) - 1])


# -- gaps ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GapStats:
    gaps: np.ndarray
    max_gap: float
    min_gap: float

    @property
    def ratio(self) -> float:
        return self.max_gap / self.min_gap

    @property
    def spread(self) -> float:
        return self.max_gap - self.min_gap


def gap_stats(config: ChargeConfiguration) -> GapStats:
    gaps = np.diff(config.positions)
    return GapStats(gaps, float(gaps.max()), float(gaps.min()))


# -- adding a charge -----------------------------------------------------------

def predict_added_charge(config: ChargeConfiguration) -> ChargeConfiguration:
    """First-order prediction of the (n+1)-charge equilibrium.

    y_1 = 0, y_{n+1} = 1 and, for k = 2..n (1-based),
    y_k = (k-1)/n * x_{k-1} + (n+1-k)/n * x_k.
    """
    x = config.positions
    n = x.size
    if n < 3:
        raise InvalidCount(f"prediction needs at least 3 charges, got {n}")
    k = np.arange(2, n + 1)
    y = np.empty(n + 1)
    y[0], y[-1] = 0.0, 1.0
    y[1:-1] = (k - 1) / n * x[k - 2] + (n + 1 - k) / n * x[k - 1]
    return ChargeConfiguration(y)


def second_charge_ratio(n: int, solver: Callable[[int], object] = solve) -> float:
    """X_{n,2} / X_{2n-1,2} from solved equilibria (first-order theory predicts 2)."""
    if n < 5:
        raise InvalidCount(f"ratio is tabulated from n = 5, got {n}")
    a = solver(n).positions[1]
    b = solver(2 * n - 1).positions[1]
    return float(a / b)


def prediction_error(n: int, solver: Callable[[int], object] = solve) -> float:
    """Max |predicted - solved| over the n+1 positions, starting from solve(n)."""
    predicted = predict_added_charge(solver(n).configuration)
    return float(np.max(np.abs(predicted.positions - solver(n + 1).positions)))


def cdf_snapshots(trajectory, times) -> list[tuple[float, EmpiricalCdf]]:
    """Empirical CDFs of a trajectory at the sampled times nearest to ``times``."""
    out = []
    for t in times:
        k = int(np.argmin(np.abs(trajectory.times - t)))
        out.append((float(trajectory.times[k]), EmpiricalCdf(trajectory.positions[k])))
    return out


def cdf_rows(cdf: EmpiricalCdf) -> list[tuple[float, float]]:
    """(x, F(x)) at each jump, F taken after the jump."""
    loc, mass = cdf.jumps()
    return list(zip(loc.tolist(), np.cumsum(mass).tolist()))


def dyadic_family(min_exp: int, max_exp: int) -> list[int]:
    return [2**m + 1 for m in range(min_exp, max_exp + 1)]
