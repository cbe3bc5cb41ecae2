"""Electric fields of charges on the needle [0, 1] x {0} x {0}.

Fields are normalized: total charge 1 and the Coulomb prefactor dropped.
Along the needle the sign convention is "positive points toward
increasing x".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .config import ChargeConfiguration
from .distribution import EmpiricalCdf
from .errors import DomainViolation, Endpoint, NonpositiveArgument, PointOnCharge, PointOnNeedle


@dataclass(frozen=True)
class SpacePoint:
    x: float
    y: float = 0.0
    z: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @property
    def rho(self) -> float:
        """Distance to the needle axis."""
        return math.hypot(self.y, self.z)

    def on_needle(self) -> bool:
        return self.y == 0.0 and self.z == 0.0 and 0.0 <= self.x <= 1.0

    def reflected(self) -> "SpacePoint":
        return SpacePoint(1.0 - self.x, self.y, self.z)


@dataclass(frozen=True, eq=False)
class FieldSample:
    point: SpacePoint
    vector: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


def _as_point(p) -> SpacePoint:
    if isinstance(p, SpacePoint):
        return p
    return SpacePoint(*map(float, p))


def _coulomb_sum(locations: np.ndarray, weights: np.ndarray, p: SpacePoint) -> np.ndarray:
    # sum_i w_i (X - X_i) / |X - X_i|^3 with X_i = (t_i, 0, 0)
    dx = p.x - locations
    r2 = dx * dx + (p.y * p.y + p.z * p.z)
    inv3 = weights / (r2 * np.sqrt(r2))
    return np.array([np.sum(inv3 * dx), np.sum(inv3) * p.y, np.sum(inv3) * p.z])


def discrete_field(config: ChargeConfiguration, p) -> FieldSample:
    """Field of n charges of 1/n each at the configuration's positions."""
    p = _as_point(p)
    x = config.positions
    if p.y == 0.0 and p.z == 0.0 and np.any(x == p.x):
        raise PointOnCharge(f"{p} coincides with a charge")
    weights = np.full(x.size, 1.0 / x.size)
    return FieldSample(p, _coulomb_sum(x, weights, p))


def stieltjes_field(cdf: EmpiricalCdf, p) -> FieldSample:
    """Integral of the Coulomb kernel against dF over [0, 1].

    For a step function the integral is the sum of kernel values at the
    jumps weighted by the jump sizes, which is the discrete field itself.
    """
    p = _as_point(p)
    if p.on_needle():
        raise PointOnNeedle(f"{p} lies on the needle")
    loc, mass = cdf.jumps()
    return FieldSample(p, _coulomb_sum(loc, mass, p))


def uniform_field_offneedle(p) -> FieldSample:
    """Closed-form field of the uniform unit density on the needle.

    With r0, r1 the distances to the needle ends and rho to the axis,
    the axial part is 1/r1 - 1/r0 and the radial part is
    (x/r0 - (x-1)/r1) / rho, both rearranged to avoid cancellation.
    """
    p = _as_point(p)
    if p.on_needle():
        raise PointOnNeedle(f"{p} lies on the needle")
    rho = p.rho
    a, b = p.x, p.x - 1.0
    r0, r1 = math.hypot(a, rho), math.hypot(b, rho)
    ex = (2.0 * p.x - 1.0) / (r0 * r1 * (r0 + r1))
    if rho == 0.0:
        return FieldSample(p, np.array([ex, 0.0, 0.0]))
    if a * b >= 0.0:
        # beyond an end: a*r1 - b*r0 = rho^2 (a^2 - b^2) / (a*r1 + b*r0)
        er = rho * (2.0 * p.x - 1.0) / ((a * r1 + b * r0) * r0 * r1)
    else:
        er = (a * r1 - b * r0) / (rho * r0 * r1)
    return FieldSample(p, np.array([ex, er * p.y / rho, er * p.z / rho]))


def pv_field_on_needle(x: float) -> float:
    """Principal-value field of the uniform density at x in (0, 1).

    Equals (2x - 1) / (x (1 - x)): positive on the right half, where the
    larger share of the charge sits to the left.
    """
    if not 0.0 < x < 1.0:
        raise Endpoint(f"field is unbounded at or beyond the needle ends (x = {x})")
    return (2.0 * x - 1.0) / (x * (1.0 - x))


def same_sign_divergence_check(x: float, eps: float) -> float:
    """Both one-sided integrals of 1/(x-t)^2 with the hole (x-eps, x+eps) removed.

    Closed form 1/(x-1) - 1/x + 2/eps, which grows without bound as eps -> 0.
    """
    if not (eps > 0.0 and x - eps > 0.0 and x + eps < 1.0):
        raise DomainViolation(f"need 0 < x - eps and x + eps < 1 (x = {x}, eps = {eps})")
    return 1.0 / (x - 1.0) - 1.0 / x + 2.0 / eps


def field_gap(config: ChargeConfiguration, p) -> float:
    """Euclidean distance between the discrete and uniform fields at p."""
    return float(np.linalg.norm(discrete_field(config, p).vector - uniform_field_offneedle(p).vector))


# -- trigamma and uniform-lattice sums ------------------------------------------

# Bernoulli numbers B_2 .. B_10
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66)
_ASYMPTOTIC_FROM = 12.0


def trigamma(x: float) -> float:
    """psi_1(x) for x > 0.

    Shifts x up with psi_1(x) = psi_1(x + 1) + 1/x^2 until x >= 12, then
    sums the asymptotic expansion through the x**-11 term.
    """
    if not x > 0.0:
        raise NonpositiveArgument(f"trigamma needs x > 0, got {x}")
    shift = []
    while x < _ASYMPTOTIC_FROM:
        shift.append(1.0 / (x * x))
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    tail = 0.0
    power = inv * inv2
    for b in _BERNOULLI:
        tail += b * power
        power *= inv2
    series = inv + 0.5 * inv2 + tail
    return math.fsum(shift + [series])


@dataclass(frozen=True)
class SumCheck:
    """A quantity evaluated by direct summation and by its trigamma closed form."""

    finite: float
    closed: float

    @property
    def relative_error(self) -> float:
        return abs(self.finite - self.closed) / abs(self.closed)


@dataclass(frozen=True)
class NearestChargeRatios:
    q_minus: SumCheck
    q_plus: SumCheck


def _lattice(q: int, s: int, n: int) -> tuple[int, int]:
    if s < 1 or not 0 < q < 2**s:
        raise DomainViolation(f"{q}/2^{s} is not a dyadic in (0, 1)")
    if n < s + 1:
        raise DomainViolation(f"need n >= s + 1, got n = {n}, s = {s}")
    return 2**n, q * 2 ** (n - s)


def lattice_sums(q: int, s: int, n: int, exact: bool = False):
    """Inverse-square sums seen by the charge at q/2**s on the uniform lattice k/2**n.

    Returns (left, right): sums over charges k < m and k > m, m = q 2**(n-s).
    Computed term by term from the definition; ``exact=True`` returns
    Fractions.
    """
    big, m = _lattice(q, s, n)
    u = Fraction(q, 2**s)
    if exact:
        left = sum(1 / (Fraction(k, big) - u) ** 2 for k in range(m))
        right = sum(1 / (Fraction(k, big) - u) ** 2 for k in range(m + 1, big + 1))
        return left, right
    uf = q / 2**s
    # k / 2**n - q / 2**s is exact in binary, so each term is rounded once
    left = math.fsum(1.0 / (k / big - uf) ** 2 for k in range(m))
    right = math.fsum(1.0 / (k / big - uf) ** 2 for k in range(m + 1, big + 1))
    return left, right


def nearest_charge_ratios(q: int, s: int, n: int) -> NearestChargeRatios:
    """Share of the one-sided force due to the nearest neighbour, each side.

    Closed forms: 3 * 2**(1-4n) / (pi^2 - 6 psi_1(1 + m)) on the left and
    the same with psi_1(1 + 2**n - m) on the right, m = q 2**(n-s).
    """
    big, m = _lattice(q, s, n)
    left, right = lattice_sums(q, s, n)
    nearest = 1.0 / float(big) ** 2
    num = 3.0 * 2.0 ** (1 - 4 * n)
    return NearestChargeRatios(
        q_minus=SumCheck(nearest / left, num / (math.pi**2 - 6.0 * trigamma(1 + m))),
        q_plus=SumCheck(nearest / right, num / (math.pi**2 - 6.0 * trigamma(1 + big - m))),
    )


def partial_force_sum(q: int, s: int, n: int) -> SumCheck:
    """Force from the charges left of q/2**s, each charge worth 1/(2**n + 1).

    Closed form 2**(2n-1) (pi^2 - 6 psi_1(1 + m)) / (3 (1 + 2**n)); grows
    without bound in n.
    """
    big, m = _lattice(q, s, n)
    left, _ = lattice_sums(q, s, n)
    closed = 2.0 ** (2 * n - 1) * (math.pi**2 - 6.0 * trigamma(1 + m)) / (3.0 * (1 + big))
    return SumCheck(left / (big + 1), closed)


def uniform_net_field(q: int, s: int, n: int) -> SumCheck:
    """Net field at the lattice charge sitting at q/2**s, positive toward +x.

    (left sum - right sum) / (2**n + 1) against
    4**n (psi_1(1 + 2**n - m) - psi_1(1 + m)) / (1 + 2**n). Tends to
    pv_field_on_needle(q / 2**s) as n grows.
    """
    big, m = _lattice(q, s, n)
    left, right = lattice_sums(q, s, n)
    closed = 4.0**n * (trigamma(1 + big - m) - trigamma(1 + m)) / (1 + big)
    return SumCheck((left - right) / (big + 1), closed)


# -- grids -------------------------------------------------------------------

def field_map(source, xs, ys):
    """Evaluate a field on the z = 0 grid xs x ys.

    ``source`` is a ChargeConfiguration (discrete field) or None (uniform
    density). Points on the needle are skipped. Returns (rows, skipped)
    with rows (x, y, Ex, Ey).
    """
    rows = []
    skipped = 0
    for y in ys:
        for x in xs:
            p = SpacePoint(float(x), float(y), 0.0)
            if p.on_needle():
                skipped += 1
                continue
            if source is None:
                v = uniform_field_offneedle(p).vector
            else:
                v = discrete_field(source, p).vector
            rows.append((p.x, p.y, float(v[0]), float(v[1])))
    return rows, skipped
