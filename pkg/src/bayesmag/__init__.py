"""Bayesian estimation of rf-signal parameters with a dressed-state 171Yb+ sensor."""

from .physics import (
    PhysicalConstants,
    SensorConfig,
    SignalConfig,
    gauss,
    hz,
    khz,
    mhz,
    millitesla,
    to_khz,
)

__version__ = "0.1.0"
