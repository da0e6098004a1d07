"""Scenario runs that chain the models together; the CLI is a thin shell over these."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import config as cfgmod
from . import fock, homodyne, snspd, source, thinfilm, tomography
from .config import Config


def herald_sweep(cfg: Config, pumps: Optional[Sequence[float]] = None) -> list:
    """One row per pump power: pump, lambda^2, rate, g2 (exact and two-term), P0..P3, brightness."""
    chain = cfgmod.herald_chain(cfg)
    opo = cfgmod.opo_params(cfg, chain)
    N = cfg.int("source", "truncation")
    max_def = cfg.float("source", "max_deficit")
    if pumps is None:
        pumps = cfg.floats("source", "pumps")
    rows = []
    for pump in pumps:
        res = source.herald(opo.at_pump(pump), chain, N=N, max_deficit=max_def)
        st = res.conditional_state
        rows.append({
            "pump_mW": float(pump),
            "lambda_sq": res.pair_prob,
            "rate_hz": res.heralding_rate_hz,
            "g2_exact": res.g2_exact,
            "g2_approx": res.g2_approx,
            "P0": st[0], "P1": st[1], "P2": st[2], "P3": st[3],
            "brightness": res.brightness,
        })
    return rows


def sde_curve(cfg: Config) -> list:
    model = cfgmod.detector_model(cfg)
    npts = cfg.int("detector", "sweep_points")
    # stop one step short of the switching current, where the detector latches
    bias = np.linspace(0.0, model.switching_current_uA, npts + 1)[:-1]
    eff = snspd.sde(model, bias)
    dark = snspd.dark_rate(model, bias)
    return [{"bias_uA": float(b), "sde": float(e), "dark_cps": float(d)} for b, e, d in zip(bias, eff, dark)]


@dataclass
class TomoRun:
    herald: source.HeraldResult
    batch: homodyne.QuadratureBatch
    mle: tomography.MleResult
    uncorrected: fock.PhotonDistribution
    corrected: fock.PhotonDistribution
    detection_efficiency: float
    correction_eta: float
    bootstrap_std: Optional[np.ndarray] = None

    def report(self) -> dict:
        rep = self.mle.report()
        rep.update({
            "detection_efficiency": self.detection_efficiency,
            "correction_eta": self.correction_eta,
            "loss_matrix_condition": float(np.linalg.cond(
                fock.loss_matrix(self.correction_eta, self.uncorrected.truncation))),
            "source_populations": [float(p) for p in self.herald.conditional_state.probs],
            "uncorrected_P1": self.uncorrected[1],
            "corrected_P0": self.corrected[0],
            "corrected_P1": self.corrected[1],
            "n_samples": len(self.batch),
        })
        if self.bootstrap_std is not None:
            rep["bootstrap_std_uncorrected"] = [float(v) for v in self.bootstrap_std]
        return rep


def tomo_pipeline(cfg: Config, n_samples: Optional[int] = None, seed: Optional[int] = None) -> TomoRun:
    """Herald -> homodyne sampling -> maximum-likelihood -> loss correction."""
    if seed is None:
        seed = cfg.int("run", "seed")
    if n_samples is None:
        n_samples = cfg.int("tomography", "samples")
    chain = cfgmod.herald_chain(cfg)
    opo = cfgmod.opo_params(cfg, chain)
    her = source.herald(opo, chain, N=cfg.int("source", "truncation"), max_deficit=cfg.float("source", "max_deficit"))

    eta_det = cfgmod.detection_efficiency(cfg)
    hchain = cfgmod.homodyne_chain(cfg)
    batch = homodyne.sample(her.conditional_state, hchain, n_samples, seed=seed, efficiency=eta_det)

    mode = cfg.get("tomography", "mode").lower()
    kwargs = dict(max_iters=cfg.int("tomography", "max_iters"), tol=cfg.float("tomography", "tol"),
                  diagonal=mode == "diagonal", bins=cfg.int("tomography", "bins") or None)
    N = cfg.int("tomography", "truncation")
    mle = tomography.mle_reconstruct(batch, N, **kwargs)
    uncorrected = mle.populations
    eta_corr = cfgmod.correction_eta(cfg)
    corrected = tomography.loss_correct(uncorrected, eta_corr)

    boot = None
    n_boot = cfg.int("tomography", "bootstrap")
    if n_boot > 0:
        boot = tomography.bootstrap_populations(batch, N, n_boot=n_boot, seed=seed, **kwargs)
    return TomoRun(her, batch, mle, uncorrected, corrected, eta_det, eta_corr, boot)


def load_stack(cfg: Config) -> thinfilm.LayerStack:
    materials = thinfilm.load_material_table(cfg.path("thinfilm", "materials"))
    return thinfilm.load_stack(cfg.path("thinfilm", "stack"), materials)
