"""Power and gain values with unit conversion.

Radio quantities are stored linear internally (watts, linear gain); dB and
dBm forms are only accepted at the configuration boundary.
"""

import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Dict, Union


class PowerUnit(StrEnum):
    """Available power units."""
    WATTS = "W"
    MILLIWATTS = "mW"
    DBW = "dBW"
    DBM = "dBm"


# Conversion factors to watts for the linear units
POWER_TO_WATTS: Dict[PowerUnit, float] = {
    PowerUnit.WATTS: 1.0,
    PowerUnit.MILLIWATTS: 1e-3,
}

# Offsets to dBW for the logarithmic units
DB_OFFSET_TO_DBW: Dict[PowerUnit, float] = {
    PowerUnit.DBW: 0.0,
    PowerUnit.DBM: -30.0,
}


class GainUnit(StrEnum):
    """Available gain units."""
    LINEAR = "linear"
    DB = "dB"


def db_to_linear(value_db: float) -> float:
    """Convert a dB ratio to linear scale."""
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    """Convert a positive linear ratio to dB."""
    if value <= 0:
        raise ValueError(f"cannot express non-positive ratio {value} in dB")
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class Power:
    """A power level that can be read back in any supported unit."""
    watts: float

    @classmethod
    def from_value(cls, value: Union[float, int, str], unit: Union[PowerUnit, str]) -> "Power":
        """Create a Power from a value expressed in ``unit``."""
        value = float(value)
        if isinstance(unit, str):
            unit = PowerUnit(unit)

        if unit in DB_OFFSET_TO_DBW:
            watts = db_to_linear(value + DB_OFFSET_TO_DBW[unit])
        else:
            if value < 0:
                raise ValueError(f"negative power {value} {unit}")
            watts = value * POWER_TO_WATTS[unit]
        return cls(watts=watts)

    def to_unit(self, unit: Union[PowerUnit, str]) -> float:
        """Express the stored power in ``unit``."""
        if isinstance(unit, str):
            unit = PowerUnit(unit)
        if unit in DB_OFFSET_TO_DBW:
            return linear_to_db(self.watts) - DB_OFFSET_TO_DBW[unit]
        return self.watts / POWER_TO_WATTS[unit]

    @property
    def dbm(self) -> float:
        return self.to_unit(PowerUnit.DBM)

    def __str__(self) -> str:
        return f"{self.dbm:.2f} dBm"


@dataclass(frozen=True)
class Gain:
    """An antenna gain or power ratio."""
    linear: float

    @classmethod
    def from_value(cls, value: Union[float, int, str], unit: Union[GainUnit, str]) -> "Gain":
        """Create a Gain from a value expressed in ``unit``."""
        value = float(value)
        if isinstance(unit, str):
            unit = GainUnit(unit)
        if unit == GainUnit.DB:
            return cls(linear=db_to_linear(value))
        if value <= 0:
            raise ValueError(f"linear gain must be positive, got {value}")
        return cls(linear=value)

    @property
    def db(self) -> float:
        return linear_to_db(self.linear)

    def __str__(self) -> str:
        return f"{self.db:.2f} dB"
