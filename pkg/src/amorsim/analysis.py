"""Derived magnetometer quantities: SNR, slope, sensitivity, SNL ranges.

Conventions used throughout:

* SNR is per unit bandwidth: SNR^2 = rbw * S_sig / S_bg, equivalently the
  rotation amplitude over the rotation-noise density in rad/sqrt(Hz). The
  resolution bandwidth cancels, as does any common detection gain.
* Sensitivity delta_B = (pi*hbar/(g_F*mu_B)) * gamma / SNR carries units of
  T/sqrt(Hz) under that convention.
* The quadrature slope against field comes in two conventions: "larmor"
  references the dispersive slope to the Larmor frequency shift and gives
  (g_F*mu_B/(pi*hbar)) * phi0/gamma; "doubled" references it to the
  doubled-frequency resonance that is actually swept, which is exactly
  twice that. Sensitivities quoted from the two differ by the same factor
  2, so anything that consumes a slope names the convention in use.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .config import AtomConfig
from .constants import CODATA, PhysicalConstants
from .detector import NoiseBudget

__all__ = [
    "SnlRange",
    "SensitivityReport",
    "compute_snr",
    "quadrature_slope",
    "sensitivity",
    "sensitivity_from_noise_density",
    "projection_noise",
    "snl_range",
    "snl_map",
    "classify_operating_point",
    "make_sensitivity_report",
    "snl_map_to_csv",
]

_NEVER_SNL = float("inf")


@dataclass
class SnlRange:
    """Shot-noise-limited power window [p_low, p_high] at margin k."""

    k: float
    p_low: float    # W; k*A/B
    p_high: float   # W; B/(k*C), inf when C = 0
    nonempty: bool

    def __post_init__(self) -> None:
        if not self.k >= 1.0:
            raise ValueError(f"k must be >= 1, got {self.k!r}")
        if self.nonempty != (self.p_low < self.p_high):
            raise ValueError("nonempty flag inconsistent with bounds")


@dataclass
class SensitivityReport:
    """Everything needed to judge one operating point.

    snr is always a derived quantity here (inferred from spectra or from
    the fitted amplitude and noise floor, never measured directly), and is
    quoted per sqrt(Hz) of detection bandwidth.
    """

    gamma_fwhm: float        # Hz
    snr: float               # dimensionless, per sqrt(Hz)
    delta_B: float           # T/sqrt(Hz)
    delta_B_atomic: float    # T/sqrt(Hz)
    operating_power: float   # W
    detection_freq: float    # Hz
    snl_class: str

    def __post_init__(self) -> None:
        if not self.delta_B > 0:
            raise ValueError(f"delta_B must be > 0, got {self.delta_B!r}")
        if not self.delta_B_atomic > 0:
            raise ValueError(
                f"delta_B_atomic must be > 0, got {self.delta_B_atomic!r}"
            )
        if not self.snr > 0:
            raise ValueError(f"snr must be > 0, got {self.snr!r}")

    def to_json(self, path=None) -> str:
        doc = {
            "gamma_fwhm_hz": self.gamma_fwhm,
            "snr": self.snr,
            "snr_provenance": "derived",
            "snr_convention": "per-sqrt-hz",
            "delta_b_t_per_sqrt_hz": self.delta_B,
            "delta_b_atomic_t_per_sqrt_hz": self.delta_B_atomic,
            "operating_power_w": self.operating_power,
            "detection_freq_hz": self.detection_freq,
            "snl_class": self.snl_class,
        }
        text = json.dumps(doc, indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text


def compute_snr(s_sig: float, s_bg: float, rbw: float) -> float:
    """Amplitude SNR from displayed peak and background densities.

    SNR = sqrt(rbw * s_sig / s_bg); the rbw factor undoes the peak's
    bandwidth-normalization so the result is independent of the analyzer
    settings and of any common gain.
    """
    if not s_bg > 0:
        raise ValueError(f"background density must be > 0, got {s_bg!r}")
    if s_sig < 0:
        raise ValueError(f"signal density must be >= 0, got {s_sig!r}")
    if not rbw > 0:
        raise ValueError(f"rbw must be > 0, got {rbw!r}")
    return math.sqrt(rbw * s_sig / s_bg)


def quadrature_slope(phi0: float, gamma_fwhm: float, g_f: float,
                     convention: str = "larmor",
                     constants: PhysicalConstants = CODATA) -> float:
    """On-resonance slope of the dispersive quadrature against field, rad/T.

    "larmor" references the slope to the Larmor frequency; "doubled"
    references it to the doubled-frequency resonance and is exactly 2x.
    """
    if not gamma_fwhm > 0:
        raise ValueError(f"gamma_fwhm must be > 0, got {gamma_fwhm!r}")
    if not g_f > 0:
        raise ValueError(f"g_f must be > 0, got {g_f!r}")
    base = (g_f * constants.bohr_magneton / (math.pi * constants.hbar)
            * phi0 / gamma_fwhm)
    if convention == "larmor":
        return base
    if convention == "doubled":
        return 2.0 * base
    raise ValueError(f"unknown slope convention {convention!r}")


def sensitivity(gamma_fwhm: float, snr: float, g_f: float,
                constants: PhysicalConstants = CODATA) -> float:
    """Field sensitivity delta_B = (pi*hbar/(g_F*mu_B)) * gamma/SNR."""
    if not snr > 0:
        raise ValueError(f"snr must be > 0, got {snr!r}")
    if not gamma_fwhm > 0:
        raise ValueError(f"gamma_fwhm must be > 0, got {gamma_fwhm!r}")
    if not g_f > 0:
        raise ValueError(f"g_f must be > 0, got {g_f!r}")
    return (math.pi * constants.hbar / (g_f * constants.bohr_magneton)
            * gamma_fwhm / snr)


def sensitivity_from_noise_density(noise_angle_density: float, phi0: float,
                                   gamma_fwhm: float, g_f: float,
                                   convention: str = "larmor",
                                   constants: PhysicalConstants = CODATA
                                   ) -> float:
    """Sensitivity as rotation-noise density over the quadrature slope.

    With SNR = phi0/noise_angle_density this is algebraically identical to
    sensitivity() under the Larmor-referenced slope convention.
    """
    if not noise_angle_density > 0:
        raise ValueError(
            f"noise_angle_density must be > 0, got {noise_angle_density!r}"
        )
    slope = quadrature_slope(phi0, gamma_fwhm, g_f, convention=convention,
                             constants=constants)
    if not slope > 0:
        raise ValueError(f"slope must be > 0 to invert, got {slope!r}")
    return noise_angle_density / slope


def projection_noise(atom: AtomConfig, integration_time: float,
                     constants: PhysicalConstants = CODATA) -> float:
    """Atomic projection-noise floor in T/sqrt(Hz).

    delta_B_at = (hbar*pi/(g_F*mu_B)) * sqrt(gamma / (N_at * tau)); quoted
    alongside delta_B for context, never subtracted from it.
    """
    if not integration_time > 0:
        raise ValueError(
            f"integration_time must be > 0, got {integration_time!r}"
        )
    n_atoms = atom.atom_number
    if not n_atoms > 0:
        raise ValueError(f"atom number must be > 0, got {n_atoms!r}")
    return (constants.hbar * math.pi / (atom.g_f * constants.bohr_magneton)
            * math.sqrt(atom.relaxation_gamma / (n_atoms * integration_time)))


# ---------------------------------------------------------------------------
# Shot-noise-limited power ranges
# ---------------------------------------------------------------------------

def snl_range(budget: NoiseBudget, k: float) -> SnlRange:
    """Power window where the shot term exceeds both others by factor k.

    p_low = k*A/B and p_high = B/(k*C). A vanishing shot coefficient means
    the chain is never shot-noise limited; that comes back as an empty
    range with infinite lower bound rather than an exception.
    """
    if not k >= 1.0:
        raise ValueError(f"k must be >= 1, got {k!r}")
    budget.validate()
    a, b, c = budget.coef_elec, budget.coef_shot, budget.coef_tech
    if b == 0.0:
        return SnlRange(k=k, p_low=_NEVER_SNL, p_high=0.0, nonempty=False)
    p_low = k * a / b
    p_high = math.inf if c == 0.0 else b / (k * c)
    return SnlRange(k=k, p_low=p_low, p_high=p_high,
                    nonempty=p_low < p_high)


def snl_map(budgets: Sequence[NoiseBudget],
            k_values: Iterable[float]) -> list[dict]:
    """Tabulate SNL windows over detection frequency and margin.

    Rows are ordered by (frequency, k) and keep the per-frequency nesting
    of windows for increasing k.
    """
    budgets = list(budgets)
    if not budgets:
        raise ValueError("budgets must be nonempty")
    ks = sorted(set(float(k) for k in k_values))
    if not ks:
        raise ValueError("k_values must be nonempty")
    rows = []
    for budget in sorted(budgets, key=lambda b: b.detection_freq):
        for k in ks:
            rng = snl_range(budget, k)
            rows.append({
                "freq_hz": budget.detection_freq,
                "k": k,
                "p_low_w": rng.p_low,
                "p_high_w": rng.p_high,
                "nonempty": rng.nonempty,
            })
    return rows


def classify_operating_point(budget: NoiseBudget, power: float,
                             k: float) -> str:
    """Which budget term bounds the window containing this power.

    Boundary powers classify as SNL(k): the window is treated as closed
    since a measured power sits exactly on a boundary with probability
    zero anyway.
    """
    if power < 0:
        raise ValueError(f"power must be >= 0, got {power!r}")
    rng = snl_range(budget, k)
    if power < rng.p_low:
        return "electronic-limited"
    if power > rng.p_high:
        return "technical-limited"
    return f"SNL({k:g})"


def make_sensitivity_report(gamma_fwhm: float, snr: float, atom: AtomConfig,
                            budget: NoiseBudget, power: float, k: float,
                            integration_time: float = 1.0,
                            constants: PhysicalConstants = CODATA
                            ) -> SensitivityReport:
    """Bundle the derived quantities for one operating point."""
    return SensitivityReport(
        gamma_fwhm=gamma_fwhm,
        snr=snr,
        delta_B=sensitivity(gamma_fwhm, snr, atom.g_f, constants=constants),
        delta_B_atomic=projection_noise(atom, integration_time,
                                        constants=constants),
        operating_power=power,
        detection_freq=budget.detection_freq,
        snl_class=classify_operating_point(budget, power, k),
    )


def snl_map_to_csv(rows: Sequence[dict], path, seed=None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# seed = {seed!r}\n")
        fh.write("freq_hz,k,p_low_w,p_high_w,nonempty\n")
        for row in rows:
            fh.write(
                f"{float(row['freq_hz'])!r},{float(row['k'])!r},"
                f"{float(row['p_low_w'])!r},{float(row['p_high_w'])!r},"
                f"{row['nonempty']}\n"
            )
