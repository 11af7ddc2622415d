"""Physical constants and unit conversion.

Internal units are eV for energies and fs for times throughout the
package.  Every time-evolution phase carries an explicit division by
``HBAR_EV_FS`` so that eV energies and fs times mix safely.
"""

from __future__ import annotations

import math

from .errors import UnknownUnit

HBAR_EV_FS = 0.6582119569
"""Reduced Planck constant in eV*fs."""

EV_PER_CM1 = 1.239841984e-4
"""Energy of one wavenumber (cm^-1) in eV."""

TWO_PI = 2.0 * math.pi

# canonical spellings of the supported unit tags
_ALIASES = {
    "ev": "eV",
    "cm-1": "cm-1",
    "cm^-1": "cm-1",
    "cm1": "cm-1",
    "fs-period": "fs-period",
    "fs-inverse": "fs-inverse",
}

# linear units: factor to eV
_TO_EV = {"eV": 1.0, "cm-1": EV_PER_CM1}


def _canonical(tag: str) -> str:
    try:
        return _ALIASES[tag.strip().lower()]
    except KeyError:
        raise UnknownUnit(f"unknown unit tag {tag!r}") from None


def convert_units(value: float, from_unit: str, to_unit: str) -> float:
    """Convert ``value`` between energy-like and time-like unit tags.

    Supported tags: ``eV``, ``cm-1``, ``fs-period`` (oscillation period
    2*pi*hbar/E) and ``fs-inverse`` (angular frequency E/hbar in rad/fs).
    Conversions route through eV.  Raises :class:`UnknownUnit` for
    unrecognized tags.
    """
    src = _canonical(from_unit)
    dst = _canonical(to_unit)
    if src == dst:
        return value

    # to eV
    if src in _TO_EV:
        ev = value * _TO_EV[src]
    elif src == "fs-period":
        ev = TWO_PI * HBAR_EV_FS / value
    else:  # fs-inverse
        ev = value * HBAR_EV_FS

    # from eV
    if dst in _TO_EV:
        return ev / _TO_EV[dst]
    if dst == "fs-period":
        return TWO_PI * HBAR_EV_FS / ev
    return ev / HBAR_EV_FS


def cm1_to_ev(value: float) -> float:
    return value * EV_PER_CM1


def ev_to_period_fs(energy_ev: float) -> float:
    return TWO_PI * HBAR_EV_FS / energy_ev
