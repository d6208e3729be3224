"""Canonical temporal-unit arithmetic in log-second space.

Everything downstream (extraction labels, model targets, evaluation
protocols) funnels through the conversions here: normalization of a
"quantity + unit" pair to the natural log of its length in seconds,
bucketing a log-second value to the closest unit, approximate agreement
between units, and the one-day coarse split.
"""

from __future__ import annotations

import enum
import math
from typing import Sequence

__all__ = [
    "TemporalUnit",
    "UnitInventory",
    "UNITS_7",
    "UNITS_8",
    "LESS_THAN_DAY",
    "MORE_THAN_DAY",
    "DAY_BOUNDARY_SECONDS",
    "InvalidQuantityError",
    "normalize",
    "closest_unit",
    "approx_match",
    "coarse_of_value",
    "coarse_of_unit",
    "format_duration",
]


class InvalidQuantityError(ValueError):
    """Raised for quantities that do not describe a positive finite duration."""


class TemporalUnit(enum.IntEnum):
    """The eight units, ordered from shortest to longest.

    The integer value doubles as the ordinal used for adjacency checks.
    """

    SECOND = 0
    MINUTE = 1
    HOUR = 2
    DAY = 3
    WEEK = 4
    MONTH = 5
    YEAR = 6
    DECADE = 7

    @property
    def seconds(self) -> int:
        return _UNIT_SECONDS[self]

    @property
    def log_seconds(self) -> float:
        return _UNIT_LOG_SECONDS[self]

    @property
    def word(self) -> str:
        return self.name.lower()

    @classmethod
    def from_string(cls, text: str) -> "TemporalUnit":
        """Parse a unit word, tolerating case and a plural trailing "s"."""
        word = text.strip().lower()
        if word.endswith("s") and word != "s":
            word = word[:-1]
        try:
            return cls[word.upper()]
        except KeyError:
            raise ValueError(f"unknown temporal unit: {text!r}") from None

    def __str__(self) -> str:
        return self.word


# Calendar approximations: 30-day month, 365-day year, 10-year decade.
# The day value (86,400 s) is also the coarse-task boundary.
_UNIT_SECONDS = {
    TemporalUnit.SECOND: 1,
    TemporalUnit.MINUTE: 60,
    TemporalUnit.HOUR: 3_600,
    TemporalUnit.DAY: 86_400,
    TemporalUnit.WEEK: 604_800,
    TemporalUnit.MONTH: 2_592_000,
    TemporalUnit.YEAR: 31_536_000,
    TemporalUnit.DECADE: 315_360_000,
}
_UNIT_LOG_SECONDS = {u: math.log(s) for u, s in _UNIT_SECONDS.items()}

DAY_BOUNDARY_SECONDS = 86_400
_LOG_DAY = math.log(DAY_BOUNDARY_SECONDS)

# Coarse labels for the less-than-a-day / longer-than-a-day split.
LESS_THAN_DAY = "<day"
MORE_THAN_DAY = ">day"

UnitInventory = Sequence[TemporalUnit]

# The two inventories in use: classification over second..year, or the
# full set with "decade" appended.
UNITS_8: tuple[TemporalUnit, ...] = tuple(TemporalUnit)
UNITS_7: tuple[TemporalUnit, ...] = UNITS_8[:7]


def inventory_of_size(n: int) -> tuple[TemporalUnit, ...]:
    """Return the n shortest units as an inventory (n in 1..8)."""
    if not 1 <= n <= len(UNITS_8):
        raise ValueError(f"inventory size must be in 1..{len(UNITS_8)}, got {n}")
    return UNITS_8[:n]


def normalize(quantity: float, unit: TemporalUnit) -> float:
    """Map a duration expression to log-second space: ln(quantity * seconds(unit))."""
    if not math.isfinite(quantity) or quantity <= 0:
        raise InvalidQuantityError(f"quantity must be positive and finite, got {quantity!r}")
    return math.log(quantity * unit.seconds)


def closest_unit(value: float, inventory: UnitInventory = UNITS_8) -> TemporalUnit:
    """Return the inventory unit whose log-second point is nearest to `value`.

    Distance is measured in log space, so bucket boundaries fall at
    geometric midpoints between adjacent units. Exact ties go to the
    smaller unit.
    """
    if not math.isfinite(value):
        raise InvalidQuantityError(f"value must be finite, got {value!r}")
    if not inventory:
        raise ValueError("inventory must be nonempty")
    best = inventory[0]
    best_dist = abs(value - best.log_seconds)
    for unit in inventory[1:]:
        dist = abs(value - unit.log_seconds)
        if dist < best_dist:
            best, best_dist = unit, dist
    return best


def approx_match(a: TemporalUnit, b: TemporalUnit) -> bool:
    """Approximate agreement: units match when identical or adjacent."""
    return abs(int(a) - int(b)) <= 1


def coarse_of_value(value: float) -> str:
    """Coarse label for a log-second value: "<day" iff strictly below one day."""
    if not math.isfinite(value):
        raise InvalidQuantityError(f"value must be finite, got {value!r}")
    return LESS_THAN_DAY if value < _LOG_DAY else MORE_THAN_DAY


def coarse_of_unit(unit: TemporalUnit) -> str:
    """Coarse label for a unit prediction: second/minute/hour mean "<day"."""
    return LESS_THAN_DAY if unit <= TemporalUnit.HOUR else MORE_THAN_DAY


def format_duration(quantity: int, unit: TemporalUnit) -> str:
    """Render a duration expression the way it appears in text, e.g. "3 hours"."""
    suffix = "" if quantity == 1 else "s"
    return f"{quantity} {unit.word}{suffix}"
