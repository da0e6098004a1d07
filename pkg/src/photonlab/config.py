"""INI configuration holding every physical constant, plus builders for model objects."""

from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from . import homodyne, snspd, source
from .errors import ConfigError

ENV_VAR = "PHOTONLAB_CONFIG"


def default_config_path() -> Path:
    return Path(str(resources.files("photonlab") / "data" / "default.ini"))


@dataclass
class Config:
    parser: configparser.ConfigParser
    base_dir: Path
    source_path: Optional[Path] = None

    def get(self, section: str, key: str) -> str:
        try:
            return self.parser[section][key].strip()
        except KeyError:
            raise ConfigError(f"missing config key [{section}] {key}") from None

    def float(self, section: str, key: str) -> float:
        raw = self.get(section, key)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from None

    def int(self, section: str, key: str) -> int:
        v = self.float(section, key)
        if v != int(v):
            raise ConfigError(f"[{section}] {key} must be an integer")
        return int(v)

    def auto_float(self, section: str, key: str) -> Optional[float]:
        return None if self.get(section, key).lower() == "auto" else self.float(section, key)

    def floats(self, section: str, key: str) -> list:
        raw = self.get(section, key)
        try:
            return [float(v) for v in raw.replace(";", ",").split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be a comma-separated list of numbers") from None

    def path(self, section: str, key: str) -> Path:
        p = Path(self.get(section, key))
        return p if p.is_absolute() else self.base_dir / p

    def digest(self) -> str:
        """SHA-256 over the effective key/value content, independent of comments and order."""
        h = hashlib.sha256()
        for sec in sorted(self.parser.sections()):
            for k in sorted(self.parser[sec]):
                h.update(f"[{sec}]{k}={self.parser[sec][k].strip()}\n".encode())
        return h.hexdigest()[:16]


def load_config(path=None, overrides: Iterable[str] = ()) -> Config:
    """Read the config: explicit path, else ``$PHOTONLAB_CONFIG``, else the packaged default.

    ``overrides`` are ``section.key=value`` strings applied on top.
    """
    if path is None:
        path = os.environ.get(ENV_VAR) or default_config_path()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}".replace("\n", " ")) from None
    for item in overrides:
        key, sep, value = item.partition("=")
        sec, dot, opt = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        if not parser.has_section(sec):
            parser.add_section(sec)
        parser[sec][opt] = value.strip()
    return Config(parser, path.parent, path)


# -- builders ----------------------------------------------------------------


def herald_chain(cfg: Config) -> source.HeraldChain:
    s = "herald_chain"
    return source.HeraldChain(
        filter_transmission=cfg.float(s, "filter_transmission"),
        detector_efficiency=cfg.float(s, "detector_efficiency"),
        dark_rate_cps=cfg.float(s, "dark_rate_cps"),
        herald_window_s=cfg.auto_float(s, "herald_window_s"),
        polarization_factor=cfg.float(s, "polarization_factor"),
    )


def opo_params(cfg: Config, chain: Optional[source.HeraldChain] = None) -> source.OpoParams:
    """OPO parameters with the pair rate calibrated to the configured brightness when ``auto``."""
    s = "source"
    opo = source.OpoParams(
        output_coupler_T=cfg.float(s, "output_coupler_T"),
        intracavity_loss_L=cfg.float(s, "intracavity_loss_L"),
        bandwidth_MHz=cfg.float(s, "bandwidth_MHz"),
        pump_power_mW=cfg.float(s, "pump_power_mW"),
        pair_rate_per_mW=1.0,
        pair_prob_per_mW=cfg.float(s, "pair_prob_per_mW"),
    )
    rate = cfg.auto_float(s, "pair_rate_per_mW")
    if rate is None:
        chain = chain or herald_chain(cfg)
        rate = source.calibrate_pair_rate(opo, chain, cfg.float(s, "target_brightness"),
                                          cfg.float(s, "calibration_pump_mW"), N=cfg.int(s, "truncation"))
    return replace(opo, pair_rate_per_mW=rate)


def detector_model(cfg: Config) -> snspd.DetectorModel:
    s = "detector"
    inflection = cfg.float(s, "inflection_current_uA")
    k = cfg.float(s, "dark_exponent_per_uA")
    base = cfg.auto_float(s, "dark_base_cps")
    if base is None:
        base = snspd.anchored_dark_base(cfg.float(s, "dark_anchor_cps"), cfg.float(s, "operating_bias_uA"),
                                        inflection, k)
    return snspd.DetectorModel(
        switching_current_uA=cfg.float(s, "switching_current_uA"),
        plateau_efficiency=cfg.float(s, "plateau_efficiency"),
        inflection_current_uA=inflection,
        transition_width_uA=cfg.float(s, "transition_width_uA"),
        dark_base_cps=base,
        dark_exponent_per_uA=k,
    )


def calibration_run(cfg: Config, seed: int) -> snspd.CalibrationRun:
    s = "detector"
    return snspd.CalibrationRun(
        photon_flux_per_s=cfg.float(s, "calibration_flux_per_s"),
        duration_s=cfg.float(s, "calibration_duration_s"),
        power_meter_rel_uncertainty=cfg.float(s, "power_meter_rel_uncertainty"),
        seed=seed,
    )


def homodyne_chain(cfg: Config) -> homodyne.HomodyneChain:
    s = "homodyne"
    return homodyne.HomodyneChain(
        visibility=cfg.float(s, "visibility"),
        photodiode_qe=cfg.float(s, "photodiode_qe"),
        electronic_noise_equiv_loss=cfg.float(s, "electronic_noise_equiv_loss"),
        propagation_loss=cfg.float(s, "propagation_loss"),
    )


def detection_efficiency(cfg: Config) -> float:
    raw = cfg.get("homodyne", "detection_efficiency").lower()
    if raw == "chain":
        return homodyne.effective_efficiency(homodyne_chain(cfg))
    return cfg.float("homodyne", "detection_efficiency")


def correction_eta(cfg: Config) -> float:
    raw = cfg.get("tomography", "correction_eta").lower()
    if raw == "detection":
        return detection_efficiency(cfg)
    if raw == "chain":
        return homodyne.effective_efficiency(homodyne_chain(cfg))
    return cfg.float("tomography", "correction_eta")
