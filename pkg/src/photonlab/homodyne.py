"""Homodyne quadrature statistics and simulated detection.

Quadratures use the convention ``x = (a + a^dag) / sqrt(2)``, so the vacuum
variance is 1/2, and ``x_theta = (a e^{i theta} + a^dag e^{-i theta}) / sqrt(2)``.
Every module that touches quadrature data shares it.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import fock
from .errors import InvalidParameter, InvalidState, ResolutionError

GRID_POINTS = 2**14
CDF_MASS_TOL = 1e-9
DEFAULT_PHASES = tuple(np.arange(12) * np.pi / 12)


@dataclass(frozen=True)
class HomodyneChain:
    visibility: float = 0.99
    photodiode_qe: float = 0.97
    electronic_noise_equiv_loss: float = 0.04
    propagation_loss: float = 0.06

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not 0 <= v <= 1:
                raise InvalidParameter(f"{k} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class QuadratureBatch:
    theta: np.ndarray
    x: np.ndarray
    chain: Optional[HomodyneChain] = None
    seed: Optional[int] = None
    detection_efficiency: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        th = np.array(self.theta, dtype=float).ravel()
        x = np.array(self.x, dtype=float).ravel()
        if th.shape != x.shape:
            raise InvalidParameter("theta and x must have the same length")
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(x))):
            raise InvalidParameter("quadrature samples must be finite")
        if np.any(th < 0) or np.any(th >= np.pi):
            raise InvalidParameter("phases must lie in [0, pi)")
        th.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "x", x)

    def __len__(self):
        return self.x.size

    def subset(self, idx) -> "QuadratureBatch":
        return QuadratureBatch(self.theta[idx], self.x[idx], self.chain, self.seed,
                               self.detection_efficiency, dict(self.meta))

    def write_csv(self, path, comment: Optional[str] = None):
        path = Path(path)
        with open(path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theta", "x"])
            for t, v in zip(self.theta, self.x):
                w.writerow([repr(float(t)), repr(float(v))])

    def sidecar(self) -> dict:
        return {
            "n_samples": len(self),
            "seed": self.seed,
            "convention": "x = (a + a^dag)/sqrt(2), vacuum variance 1/2",
            "detection_efficiency": self.detection_efficiency,
            "chain": asdict(self.chain) if self.chain else None,
            **self.meta,
        }

    def write_sidecar(self, path):
        Path(path).write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read_csv(cls, path, sidecar=None) -> "QuadratureBatch":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(line for line in fh if not line.startswith("#"))
            header = next(reader)
            if [h.strip() for h in header] != ["theta", "x"]:
                raise InvalidParameter(f"{path}: expected header 'theta,x', got {header}")
            for row in reader:
                if row:
                    rows.append((float(row[0]), float(row[1])))
        arr = np.array(rows, dtype=float).reshape(-1, 2)
        chain = seed = eff = None
        if sidecar is not None and Path(sidecar).exists():
            meta = json.loads(Path(sidecar).read_text())
            chain = HomodyneChain(**meta["chain"]) if meta.get("chain") else None
            seed = meta.get("seed")
            eff = meta.get("detection_efficiency")
        return cls(arr[:, 0], arr[:, 1], chain, seed, eff)


def effective_efficiency(chain: HomodyneChain) -> float:
    """Overall homodyne efficiency; visibility enters squared as a mode-overlap loss."""
    return (
        chain.visibility**2
        * chain.photodiode_qe
        * (1.0 - chain.electronic_noise_equiv_loss)
        * (1.0 - chain.propagation_loss)
    )


def eigenfunctions(N: int, x) -> np.ndarray:
    """Oscillator eigenfunctions ``psi_0..psi_N`` at ``x``, shape ``(N+1, len(x))``.

    Upward three-term recurrence
    ``psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}``
    from ``psi_0 = pi^(-1/4) exp(-x^2/2)``; no Hermite polynomials or
    factorials are formed.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    psi = np.empty((N + 1, x.size))
    psi[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if N >= 1:
        psi[1] = math.sqrt(2.0) * x * psi[0]
    for n in range(1, N):
        psi[n + 1] = math.sqrt(2.0 / (n + 1)) * x * psi[n] - math.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


def _as_state(rho) -> fock.DensityMatrix:
    if isinstance(rho, (fock.DensityMatrix, fock.PhotonDistribution)):
        return fock.DensityMatrix.coerce(rho)
    r = np.asarray(rho, dtype=complex)
    if r.ndim == 2 and abs(np.trace(r).real - 1.0) > 1e-9:
        raise InvalidState(f"density matrix trace {np.trace(r).real:.6g} is not 1")
    return fock.DensityMatrix(r)


def marginal_pdf(rho, theta: float, x):
    """Quadrature density ``p(x | theta) = sum Re[rho_nm e^{i(n-m)theta}] psi_n psi_m``."""
    rho = _as_state(rho)
    N = rho.truncation
    psi = eigenfunctions(N, x)
    n = np.arange(N + 1)
    if rho.is_diagonal():
        p = np.diag(rho.elements).real @ (psi * psi)
    else:
        phased = rho.elements * np.exp(1j * np.subtract.outer(n, n) * theta)
        p = np.einsum("nm,nx,mx->x", phased.real, psi, psi)
    p = np.clip(p, 0.0, None)
    return float(p[0]) if np.ndim(x) == 0 else p


def quadrature_variance(rho, theta: float = 0.0) -> float:
    """Variance of ``x_theta`` from the ladder-operator moments."""
    r = _as_state(rho).elements
    N = r.shape[0] - 1
    a = np.diag(np.sqrt(np.arange(1, N + 1)), 1)
    X = (a * np.exp(1j * theta) + a.T * np.exp(-1j * theta)) / math.sqrt(2)
    m1 = np.trace(r @ X).real
    m2 = np.trace(r @ X @ X).real
    # the truncated X @ X misses the <N|a a^dag|N> term
    m2 += r[N, N].real * (N + 1) / 2
    return m2 - m1 * m1


def _grid_half_width(rho: fock.DensityMatrix) -> float:
    nbar = float(np.arange(rho.truncation + 1) @ np.diag(rho.elements).real)
    return 6.0 * max(1.0, math.sqrt(2 * nbar + 1))


def _inverse_cdf_table(rho, theta, half_width, max_doublings=4):
    for _ in range(max_doublings + 1):
        grid = np.linspace(-half_width, half_width, GRID_POINTS)
        pdf = marginal_pdf(rho, theta, grid)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid))])
        mass = cdf[-1]
        if abs(1.0 - mass) <= CDF_MASS_TOL:
            return grid, cdf / mass
        half_width *= 2
    raise ResolutionError(f"quadrature grid captured mass {mass:.12f}; cannot reach 1-{CDF_MASS_TOL}")


def sample(rho, chain: Optional[HomodyneChain], n_samples: int, phases: Optional[Sequence[float]] = None,
           seed: Optional[int] = None, efficiency: Optional[float] = None) -> QuadratureBatch:
    """Simulated homodyne record of ``rho`` seen through ``chain``.

    The state first passes the loss channel with the chain's effective
    efficiency (or ``efficiency`` when given). Samples are split round-robin
    over ``phases`` and drawn by inverting a tabulated CDF.
    """
    if n_samples < 1:
        raise InvalidParameter("need at least one sample")
    rho = _as_state(rho)
    if efficiency is None:
        efficiency = effective_efficiency(chain) if chain is not None else 1.0
    if efficiency < 1.0:
        if rho.is_diagonal():
            rho = fock.DensityMatrix.from_distribution(fock.apply_loss(fock.diagonal(rho), efficiency))
        else:
            rho = fock.loss_channel(rho, efficiency)
    if phases is None:
        phases = (0.0,) if rho.is_diagonal() else DEFAULT_PHASES
    phases = np.asarray(phases, dtype=float)
    if np.any(phases < 0) or np.any(phases >= np.pi):
        raise InvalidParameter("phases must lie in [0, pi)")

    rng = np.random.default_rng(seed)
    u = rng.random(n_samples)
    which = np.arange(n_samples) % phases.size
    theta = phases[which]
    x = np.empty(n_samples)
    half = _grid_half_width(rho)
    diag = rho.is_diagonal()
    table = None
    for k, th in enumerate(phases):
        sel = which == k
        if table is None or not diag:
            table = _inverse_cdf_table(rho, th, half)
        grid, cdf = table
        x[sel] = np.interp(u[sel], cdf, grid)
    return QuadratureBatch(theta, x, chain, seed, efficiency)
