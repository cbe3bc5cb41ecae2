"""Charge configurations on the unit needle.

Positions are stored 0-based in numpy arrays. Every function that takes a
charge *index* documents whether it is 1-based (charge numbering, as used in
tables and the CLI) or 0-based (array offsets).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EndpointNotPinned, InvalidCount, OrderViolation, OutOfRange


def _frozen(values: Iterable[float]) -> np.ndarray:
    arr = np.array(values, dtype=float).ravel()
    arr.flags.writeable = False
    return arr


def validate(positions: Sequence[float]) -> None:
    """Raise the first violated configuration invariant, or return None.

    Checks, in order: at least two charges, finite values, pinned endpoints
    (bit-exact 0 and 1), every coordinate inside [0, 1], strict increase.
    ``OrderViolation.index`` is the 1-based index of the first coordinate
    that fails to exceed its predecessor.
    """
    x = np.asarray(positions, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise InvalidCount(f"need at least 2 charges, got {n}")
    if not np.all(np.isfinite(x)):
        raise OutOfRange("positions must be finite")
    if x[0] != 0.0 or x[-1] != 1.0:
        raise EndpointNotPinned(f"endpoints must be exactly 0 and 1, got {x[0]!r} and {x[-1]!r}")
    bad = np.flatnonzero((x < 0.0) | (x > 1.0))
    if bad.size:
        i = int(bad[0])
        raise OutOfRange(f"position {i + 1} = {x[i]!r} lies outside [0, 1]")
    steps = np.diff(x)
    bad = np.flatnonzero(steps <= 0.0)
    if bad.size:
        i = int(bad[0]) + 2
        raise OrderViolation(f"position {i} does not exceed position {i - 1}", index=i)


@dataclass(frozen=True, eq=False)
class ChargeConfiguration:
    """Strictly increasing positions in [0, 1] with x[0] == 0 and x[-1] == 1."""

    positions: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.positions)
        validate(arr)
        object.__setattr__(self, "positions", arr)

    @property
    def n(self) -> int:
        return int(self.positions.size)

    @property
    def interior(self) -> "OpenSimplexPoint":
        return OpenSimplexPoint(self.positions[1:-1])

    @classmethod
    def from_interior(cls, interior: Sequence[float]) -> "ChargeConfiguration":
        return cls(np.concatenate(([0.0], np.asarray(interior, dtype=float), [1.0])))

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i):
        return self.positions[i]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.positions, dtype=dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChargeConfiguration):
            return NotImplemented
        return np.array_equal(self.positions, other.positions)

    def __hash__(self) -> int:
        return hash(self.positions.tobytes())

    def __repr__(self) -> str:
        return f"ChargeConfiguration(n={self.n}, positions={self.positions.tolist()!r})"


@dataclass(frozen=True, eq=False)
class OpenSimplexPoint:
    """Free coordinates a_2 < ... < a_{n-1}, all strictly inside (0, 1).

    The pinned endpoints a_1 = 0 and a_n = 1 are implicit. An empty interior
    stands for the two-charge needle.
    """

    interior: np.ndarray

    def __post_init__(self):
        a = _frozen(self.interior)
        if not np.all(np.isfinite(a)):
            raise OutOfRange("coordinates must be finite")
        if a.size and (a[0] <= 0.0 or a[-1] >= 1.0):
            raise OutOfRange("interior coordinates must lie strictly inside (0, 1)")
        bad = np.flatnonzero(np.diff(a) <= 0.0)
        if bad.size:
            # report in full-configuration numbering (a_2 is index 2)
            i = int(bad[0]) + 3
            raise OrderViolation(f"coordinate {i} does not exceed coordinate {i - 1}", index=i)
        object.__setattr__(self, "interior", a)

    @property
    def n(self) -> int:
        return int(self.interior.size) + 2

    def full(self) -> np.ndarray:
        return np.concatenate(([0.0], self.interior, [1.0]))

    def to_configuration(self) -> ChargeConfiguration:
        return ChargeConfiguration(self.full())


@dataclass(frozen=True, eq=False)
class ClosedSimplexPoint:
    """Non-strictly increasing coordinates in [0, 1]; ties are allowed."""

    coords: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coords)
        if c.size < 2:
            raise InvalidCount(f"need at least 2 coordinates, got {c.size}")
        if not np.all(np.isfinite(c)) or c[0] < 0.0 or c[-1] > 1.0:
            raise OutOfRange("coordinates must lie in [0, 1]")
        bad = np.flatnonzero(np.diff(c) < 0.0)
        if bad.size:
            i = int(bad[0]) + 2
            raise OrderViolation(f"coordinate {i} is smaller than coordinate {i - 1}", index=i)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return int(self.coords.size)

    @classmethod
    def from_configuration(cls, config: ChargeConfiguration) -> "ClosedSimplexPoint":
        return cls(config.positions)

    def is_strict(self) -> bool:
        return bool(np.all(np.diff(self.coords) > 0.0))


def equispaced(n: int) -> ChargeConfiguration:
    """Positions (i-1)/(n-1), i = 1..n."""
    if int(n) != n or n < 2:
        raise InvalidCount(f"need at least 2 charges, got {n}")
    n = int(n)
    x = np.arange(n, dtype=float) / (n - 1)
    # guard the right endpoint against rounding in the division
    x[-1] = 1.0
    return ChargeConfiguration(x)


def reflect(config: ChargeConfiguration) -> ChargeConfiguration:
    """Mirror image under x -> 1 - x, renumbered so order is kept.

    1 - x is rounded to the spacing of doubles near 1, so two charges closer
    than about 1e-16 may land on the same value; OrderViolation is raised then.
    """
    x = 1.0 - config.positions[::-1]
    x[0], x[-1] = 0.0, 1.0
    return ChargeConfiguration(x)


# -- serialization -----------------------------------------------------------

def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def to_text(config: ChargeConfiguration) -> str:
    """One position per line, 17 significant digits."""
    return "".join(_fmt(v) + "\n" for v in config.positions)


def from_text(text: str) -> ChargeConfiguration:
    values = [float(line) for line in text.split() if line.strip()]
    return ChargeConfiguration(values)


def to_json(config: ChargeConfiguration) -> str:
    # json emits repr(float), which round-trips exactly
    return json.dumps([float(v) for v in config.positions])


def from_json(text: str) -> ChargeConfiguration:
    data = json.loads(text)
    if isinstance(data, dict):
        data = data["positions"]
    return ChargeConfiguration(data)
