"""Physical constants shared across the simulator.

All values are SI (CODATA via scipy.constants). ``hbar`` is derived from the
exact SI Planck constant so that ``planck_h == 2*pi*hbar`` holds to full
double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import scipy.constants as _sc

__all__ = ["PhysicalConstants", "CODATA"]


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants used by the signal chain.

    ``bohr_magneton`` is the Bohr magneton (named explicitly to avoid any
    collision with the vacuum permeability).
    """

    hbar: float = _sc.hbar                  # J s
    planck_h: float = _sc.h                 # J s
    electron_charge: float = _sc.e          # C
    bohr_magneton: float = _sc.physical_constants["Bohr magneton"][0]  # J/T
    speed_of_light: float = _sc.c           # m/s

    def validate(self) -> "PhysicalConstants":
        for name in ("hbar", "planck_h", "electron_charge",
                     "bohr_magneton", "speed_of_light"):
            value = getattr(self, name)
            if not (value > 0.0) or not math.isfinite(value):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        rel = abs(self.planck_h - 2.0 * math.pi * self.hbar) / self.planck_h
        if rel > 1e-12:
            raise ValueError(
                f"planck_h and 2*pi*hbar disagree (relative {rel:.3e}, "
                f"planck_h={self.planck_h!r})"
            )
        return self


#: Default constant set.
CODATA = PhysicalConstants().validate()
