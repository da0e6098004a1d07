"""Phenomenological SNSPD response and a simulated efficiency calibration.

Efficiency follows a logistic in bias current that saturates at a plateau;
dark counts grow exponentially towards the switching current. Neither form is
microscopic; both are fitted to the published operating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .errors import DetectorLatched, InvalidParameter


@dataclass(frozen=True)
class DetectorModel:
    switching_current_uA: float = 2.0
    plateau_efficiency: float = 0.935
    inflection_current_uA: float = 1.3
    transition_width_uA: float = 0.08
    dark_base_cps: float = 9.18e-7
    dark_exponent_per_uA: float = 30.0

    def __post_init__(self):
        if not 0 < self.inflection_current_uA < self.switching_current_uA:
            raise InvalidParameter("need 0 < inflection current < switching current")
        if not 0 <= self.plateau_efficiency <= 1:
            raise InvalidParameter("plateau efficiency must be in [0, 1]")
        if self.transition_width_uA <= 0:
            raise InvalidParameter("transition width must be positive")
        if self.dark_base_cps < 0 or self.dark_exponent_per_uA < 0:
            raise InvalidParameter("dark-count parameters must be non-negative")

    def _check_bias(self, bias_uA):
        b = np.asarray(bias_uA, dtype=float)
        if np.any(b >= self.switching_current_uA):
            raise DetectorLatched(
                f"bias {np.max(b):.3g} uA at or above switching current {self.switching_current_uA} uA"
            )
        if np.any(b < 0):
            raise InvalidParameter("bias current must be non-negative")
        return b


@dataclass(frozen=True)
class CalibrationRun:
    photon_flux_per_s: float = 1e5
    duration_s: float = 10.0
    power_meter_rel_uncertainty: float = 0.03
    seed: int = 0

    def __post_init__(self):
        if self.photon_flux_per_s <= 0:
            raise InvalidParameter("photon flux must be positive")
        if self.duration_s <= 0:
            raise InvalidParameter("duration must be positive")
        if self.power_meter_rel_uncertainty < 0:
            raise InvalidParameter("power-meter uncertainty must be non-negative")


@dataclass(frozen=True)
class CalibrationResult:
    sde: float
    rel_uncertainty: float
    poisson_rel: float
    meter_rel: float
    counts: int
    net_counts: float


def _logistic(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def sde(model: DetectorModel, bias_uA):
    b = model._check_bias(bias_uA)
    z = (b - model.inflection_current_uA) / model.transition_width_uA
    out = model.plateau_efficiency * _logistic(z)
    return float(out) if out.ndim == 0 else out


def dark_rate(model: DetectorModel, bias_uA):
    b = model._check_bias(bias_uA)
    out = model.dark_base_cps * np.exp(model.dark_exponent_per_uA * (b - model.inflection_current_uA))
    return float(out) if out.ndim == 0 else out


def simulate_calibration(model: DetectorModel, run: CalibrationRun, bias_uA: float,
                         rng: np.random.Generator | None = None) -> CalibrationResult:
    """One attenuated-laser efficiency measurement.

    Counts are Poisson at ``flux * sde + dark``; the expected dark counts are
    subtracted and the result divided by a flux reading carrying the
    power-meter's Gaussian relative error. The reported relative uncertainty
    adds the counting and power-meter terms in quadrature.
    """
    if rng is None:
        rng = np.random.default_rng(run.seed)
    eff = sde(model, bias_uA)
    dark = dark_rate(model, bias_uA)
    T = run.duration_s
    counts = int(rng.poisson((run.photon_flux_per_s * eff + dark) * T))
    flux_reading = run.photon_flux_per_s * (1.0 + run.power_meter_rel_uncertainty * rng.standard_normal())
    net = counts - dark * T
    estimate = net / (flux_reading * T)
    poisson_rel = math.sqrt(counts) / net if net > 0 else 0.0
    meter = run.power_meter_rel_uncertainty
    return CalibrationResult(
        sde=estimate,
        rel_uncertainty=math.hypot(poisson_rel, meter),
        poisson_rel=poisson_rel,
        meter_rel=meter,
        counts=counts,
        net_counts=net,
    )


def fit_sde_curve(bias_uA, efficiency, switching_current_uA: float,
                  p0=(0.9, 1.3, 0.1)) -> tuple[float, float, float]:
    """Least-squares fit of (plateau, inflection, width) to an efficiency-vs-bias curve."""

    def f(b, plateau, inflection, width):
        return plateau * _logistic((b - inflection) / width)

    popt, _ = curve_fit(f, np.asarray(bias_uA, float), np.asarray(efficiency, float), p0=p0,
                        bounds=([0, 0, 1e-6], [1, switching_current_uA, switching_current_uA]))
    return tuple(float(v) for v in popt)


def fit_dark_curve(bias_uA, dark_cps, inflection_current_uA: float) -> tuple[float, float]:
    """Fit ``base * exp(k (bias - inflection))`` by linear regression on ``log(dark)``."""
    b = np.asarray(bias_uA, float)
    d = np.asarray(dark_cps, float)
    if np.any(d <= 0):
        raise InvalidParameter("dark-count points must be positive for a log fit")
    k, c = np.polyfit(b - inflection_current_uA, np.log(d), 1)
    return float(np.exp(c)), float(k)


def fit_model(bias_uA, efficiency, dark_bias_uA, dark_cps, switching_current_uA: float,
              p0=(0.9, 1.3, 0.1)) -> DetectorModel:
    plateau, inflection, width = fit_sde_curve(bias_uA, efficiency, switching_current_uA, p0)
    base, k = fit_dark_curve(dark_bias_uA, dark_cps, inflection)
    return DetectorModel(switching_current_uA, plateau, inflection, width, base, k)


def anchored_dark_base(dark_cps_at_bias: float, bias_uA: float, inflection_current_uA: float,
                       dark_exponent_per_uA: float) -> float:
    """Dark-count prefactor that puts ``dark_cps_at_bias`` at ``bias_uA``."""
    return dark_cps_at_bias * math.exp(-dark_exponent_per_uA * (bias_uA - inflection_current_uA))
