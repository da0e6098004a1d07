"""Heralded single-photon source built on a below-threshold OPO.

A two-mode squeezed vacuum is split into signal and idler; the signal leaves
the cavity with the escape efficiency, the idler crosses the filtering path
and an on/off detector with dark counts. A click conditions the signal.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import fock
from .errors import FarBelowThresholdWarning, InvalidParameter, NoHeraldError

FAR_BELOW_THRESHOLD = 0.1


@dataclass(frozen=True)
class OpoParams:
    output_coupler_T: float = 0.10
    intracavity_loss_L: float = 0.0042
    bandwidth_MHz: float = 53.0
    pump_power_mW: float = 1.0
    # pairs/s per mW emitted into the filtered mode at low pump; see calibrate_pair_rate
    pair_rate_per_mW: float = 6.84e5
    # pair probability per temporal mode per mW of pump
    pair_prob_per_mW: float = 0.01

    def __post_init__(self):
        T, L = self.output_coupler_T, self.intracavity_loss_L
        if not (0 < T < 1 and 0 <= L < 1 and T + L < 1):
            raise InvalidParameter(f"need 0 < T, L < 1 and T + L < 1 (T={T}, L={L})")
        if self.bandwidth_MHz <= 0:
            raise InvalidParameter("OPO bandwidth must be positive")
        if self.pump_power_mW < 0:
            raise InvalidParameter("pump power must be non-negative")
        if self.pair_rate_per_mW < 0 or self.pair_prob_per_mW < 0:
            raise InvalidParameter("pair calibration constants must be non-negative")

    @property
    def escape_efficiency(self) -> float:
        return escape_efficiency(self.output_coupler_T, self.intracavity_loss_L)

    def at_pump(self, pump_mW: float) -> "OpoParams":
        return replace(self, pump_power_mW=pump_mW)


@dataclass(frozen=True)
class HeraldChain:
    filter_transmission: float = 0.5
    detector_efficiency: float = 0.93
    dark_rate_cps: float = 3.0
    # None -> 1 / (pi * OPO bandwidth)
    herald_window_s: Optional[float] = None
    polarization_factor: float = 1.0

    def __post_init__(self):
        for name in ("filter_transmission", "detector_efficiency", "polarization_factor"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise InvalidParameter(f"{name} must be in [0, 1], got {v}")
        if self.dark_rate_cps < 0:
            raise InvalidParameter("dark rate must be non-negative")
        if self.herald_window_s is not None and self.herald_window_s <= 0:
            raise InvalidParameter("herald window must be positive")

    @property
    def efficiency(self) -> float:
        """Overall idler-path transmission including the detector."""
        return self.filter_transmission * self.detector_efficiency * self.polarization_factor

    def window(self, bandwidth_MHz: float) -> float:
        if self.herald_window_s is not None:
            return self.herald_window_s
        return 1.0 / (math.pi * bandwidth_MHz * 1e6)

    def dark_probability(self, bandwidth_MHz: float) -> float:
        return min(1.0, self.dark_rate_cps * self.window(bandwidth_MHz))


@dataclass(frozen=True)
class HeraldResult:
    conditional_state: fock.PhotonDistribution
    heralding_rate_hz: float
    g2_approx: float
    g2_exact: float
    brightness: float
    pair_prob: float
    click_probability: float


def escape_efficiency(T: float, L: float) -> float:
    if T < 0 or L < 0 or T + L <= 0:
        raise InvalidParameter(f"escape efficiency needs T > 0, L >= 0 (T={T}, L={L})")
    return T / (T + L)


def pair_amplitude(pump_power_mW: float, pair_prob_per_mW: float) -> float:
    """Pair amplitude ``lambda`` for a pump power, with ``lambda**2 = k * pump``."""
    if pump_power_mW < 0:
        raise InvalidParameter("pump power must be non-negative")
    lam2 = pair_prob_per_mW * pump_power_mW
    if lam2 >= 1:
        raise InvalidParameter(f"lambda^2 = {lam2:.3g} is at or above the OPO threshold")
    if lam2 > FAR_BELOW_THRESHOLD:
        warnings.warn(
            f"lambda^2 = {lam2:.3g} exceeds {FAR_BELOW_THRESHOLD}; the source is no longer far below threshold",
            FarBelowThresholdWarning,
            stacklevel=2,
        )
    return math.sqrt(lam2)


def click_probabilities(p_dark: float, N: int) -> np.ndarray:
    """On/off detector: ``P(click | i photons arrive) = 1 - (1 - p_dark) [i == 0]``."""
    click = np.ones(N + 1)
    click[0] = p_dark
    return click


def _conditional(lam: float, eta_signal: float, eta_idler: float, p_dark: float, N: int,
                 max_deficit: float):
    joint = fock.tmsv_joint(lam, N, max_deficit=max_deficit)
    joint = fock.apply_loss_marginal(joint, eta_signal, eta_idler)
    weights = joint.probs @ click_probabilities(p_dark, N)
    return weights, float(weights.sum()), joint


def herald(opo: OpoParams, chain: HeraldChain, N: int = fock.DEFAULT_TRUNCATION,
           max_deficit: float = fock.DEFAULT_MAX_DEFICIT, lam: Optional[float] = None) -> HeraldResult:
    """Conditional signal state and rates for one source configuration.

    ``lam`` overrides the pump-derived pair amplitude. The conditional state
    is taken at the OPO output, before any homodyne losses.
    """
    if lam is None:
        lam = pair_amplitude(opo.pump_power_mW, opo.pair_prob_per_mW)
    eta_s = opo.escape_efficiency
    eta_i = chain.efficiency
    p_dark = chain.dark_probability(opo.bandwidth_MHz)

    weights, p_click, joint = _conditional(lam, eta_s, eta_i, p_dark, N, max_deficit)
    if p_click <= 0:
        raise NoHeraldError("click probability is zero; nothing heralds the signal")
    state = fock.PhotonDistribution(weights / p_click, joint.deficit)

    rate = heralding_rate(opo, chain, N=N, lam=lam)
    pump = opo.pump_power_mW
    brightness = rate / (pump * opo.bandwidth_MHz) if pump > 0 else float("nan")
    if fock.mean_photon(state) > 0:
        g2_exact = fock.g2_zero(state)
        g2_approx = fock.g2_two_term(state)
    else:
        g2_exact = g2_approx = float("nan")
    return HeraldResult(state, rate, g2_approx, g2_exact, brightness, lam * lam, p_click)


def heralding_rate(opo: OpoParams, chain: HeraldChain, N: int = fock.DEFAULT_TRUNCATION,
                   lam: Optional[float] = None) -> float:
    """Photon-triggered heralds per second plus the detector dark rate.

    At low pump the photon part is ``pair_rate * eta_herald``. Away from that
    limit it is scaled by ``P(photon click) / (eta_herald * nbar)``, which
    accounts for multi-pair events yielding a single click.
    """
    if lam is None:
        lam = pair_amplitude(opo.pump_power_mW, opo.pair_prob_per_mW)
    eta_i = chain.efficiency
    pair_rate = opo.pair_rate_per_mW * opo.pump_power_mW
    x = lam * lam
    if x > 0 and eta_i > 0:
        n = np.arange(N + 1)
        pn = (1 - x) * x**n
        pn /= pn.sum()
        nbar = float(n @ pn)
        photon_click = float(pn @ (1.0 - (1.0 - eta_i) ** n))
        linearization = photon_click / (eta_i * nbar)
    else:
        linearization = 1.0
    return pair_rate * eta_i * linearization + chain.dark_rate_cps


def calibrate_pair_rate(opo: OpoParams, chain: HeraldChain, target_brightness: float,
                        pump_mW: float = 1.0, N: int = fock.DEFAULT_TRUNCATION) -> float:
    """Pair rate per mW that makes the heralding brightness at ``pump_mW`` equal the target."""
    if target_brightness <= 0 or pump_mW <= 0:
        raise InvalidParameter("calibration needs positive brightness and pump")
    probe = replace(opo, pump_power_mW=pump_mW, pair_rate_per_mW=1.0)
    no_dark = replace(chain, dark_rate_cps=0.0)
    per_unit = heralding_rate(probe, no_dark, N=N)
    if per_unit <= 0:
        raise InvalidParameter("idler path transmits nothing; cannot calibrate")
    target_rate = target_brightness * pump_mW * opo.bandwidth_MHz - chain.dark_rate_cps
    return target_rate / per_unit


def brightness_ceiling(chain: HeraldChain, opo: Optional[OpoParams] = None,
                       brightness: Optional[float] = None) -> float:
    """Brightness with a perfect detector and lossless heralding path."""
    eta = chain.efficiency
    if eta <= 0:
        raise InvalidParameter("heralding-path efficiency is zero")
    if brightness is None:
        if opo is None:
            raise InvalidParameter("need either an OPO configuration or a measured brightness")
        brightness = herald(opo, chain).brightness
    return brightness / eta


def temporal_mode(t, bandwidth_MHz: float):
    """Double-sided exponential mode ``sqrt(g) exp(-g |t|)``, ``g = pi * bandwidth``.

    ``bandwidth_MHz`` is the full cavity linewidth in MHz; ``g`` is then the
    field decay rate in s^-1 and the mode is unit-normalized in ``|f|^2``.
    """
    if bandwidth_MHz <= 0:
        raise InvalidParameter("bandwidth must be positive")
    g = math.pi * bandwidth_MHz * 1e6
    return np.sqrt(g) * np.exp(-g * np.abs(t))
