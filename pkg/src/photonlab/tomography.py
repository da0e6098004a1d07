"""Maximum-likelihood state reconstruction from homodyne data and loss inversion.

The reconstruction is the iterative R rho R fixed point. When a full R rho R
step would lower the likelihood, the step is diluted,
``rho <- (1 + eps R) rho (1 + eps R)`` with ``eps`` halved until it does not;
small enough ``eps`` always gains, so the likelihood never decreases.
"""

from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from . import fock
from .errors import DegenerateData, IllConditioned, InconsistentData, InvalidParameter
from .homodyne import QuadratureBatch, eigenfunctions

log = logging.getLogger(__name__)

DEFAULT_BINS = 200
MAX_PHASE_GROUPS = 64
PHASE_BINS = 16


@dataclass
class MleResult:
    rho: fock.DensityMatrix
    iterations: int
    log_likelihood: float
    converged: bool
    history: list = field(default_factory=list, repr=False)
    diluted_steps: int = 0
    mode: str = "full"

    @property
    def populations(self) -> fock.PhotonDistribution:
        return fock.diagonal(self.rho)

    def report(self) -> dict:
        return {
            "mode": self.mode,
            "iterations": self.iterations,
            "converged": self.converged,
            "final_log_likelihood": self.log_likelihood,
            "diluted_steps": self.diluted_steps,
            "populations": [float(p) for p in self.populations.probs],
        }


def _kernels(batch: QuadratureBatch, N: int, diagonal: bool, bins: Optional[int]):
    """Projector vectors and multiplicities for each (binned) outcome.

    Returns ``(v, w)`` where row ``v[j]`` is ``<n|x_theta>`` (or ``|psi_n|^2``
    in diagonal mode) and ``w[j]`` counts the samples sharing that outcome.
    """
    theta, x = batch.theta, batch.x
    if bins is None:
        centres_t, centres_x, w = theta, x, np.ones_like(x)
    else:
        lo, hi = x.min(), x.max()
        edges = np.linspace(lo, hi, bins + 1)
        ix = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, bins - 1)
        mids = 0.5 * (edges[1:] + edges[:-1])
        if diagonal:
            t_vals, it = np.zeros(1), np.zeros(x.size, dtype=int)
        else:
            uniq = np.unique(theta)
            if uniq.size <= MAX_PHASE_GROUPS:
                t_vals, it = uniq, np.searchsorted(uniq, theta)
            else:
                t_edges = np.linspace(0.0, np.pi, PHASE_BINS + 1)
                it = np.clip(np.searchsorted(t_edges, theta, side="right") - 1, 0, PHASE_BINS - 1)
                t_vals = 0.5 * (t_edges[1:] + t_edges[:-1])
        counts = np.zeros((t_vals.size, bins))
        np.add.at(counts, (it, ix), 1.0)
        kt, kx = np.nonzero(counts)
        centres_t, centres_x, w = t_vals[kt], mids[kx], counts[kt, kx]
    psi = eigenfunctions(N, centres_x).T  # (J, N+1)
    if diagonal:
        return psi * psi, w
    n = np.arange(N + 1)
    return psi * np.exp(-1j * np.outer(centres_t, n)), w


def _probabilities(rho, v, diagonal):
    if diagonal:
        return v @ rho
    return np.einsum("jn,nm,jm->j", v.conj(), rho, v).real


def _R(rho, v, w, diagonal):
    p = np.clip(_probabilities(rho, v, diagonal), 1e-300, None)
    c = w / p
    if diagonal:
        return c @ v / w.sum(), p
    return (v.T * c) @ v.conj() / w.sum(), p


def _loglik(p, w):
    return float(w @ np.log(np.clip(p, 1e-300, None)))


def mle_reconstruct(batch: QuadratureBatch, N: int, max_iters: int = 5000, tol: float = 1e-10,
                    diagonal: bool = False, bins: Optional[int] = DEFAULT_BINS,
                    record_history: bool = False) -> MleResult:
    """Maximum-likelihood density matrix on ``0..N`` for a quadrature batch.

    ``diagonal=True`` restricts the search to phase-insensitive states and
    ignores the recorded phases. ``bins=None`` uses every sample as its own
    outcome; otherwise samples are histogrammed into ``bins`` quadrature bins
    per phase. Stops once the log-likelihood gain falls below ``tol`` or after
    ``max_iters`` iterations (``converged`` is then False).
    """
    if len(batch) == 0:
        raise InvalidParameter("empty quadrature batch")
    if N < 1:
        raise InvalidParameter("truncation must be at least 1")
    if np.ptp(batch.x) == 0:
        raise DegenerateData("all quadrature samples are identical")

    v, w = _kernels(batch, N, diagonal, bins)
    dim = N + 1
    rho = np.full(dim, 1.0 / dim) if diagonal else np.eye(dim, dtype=complex) / dim
    R, p = _R(rho, v, w, diagonal)
    L = _loglik(p, w)
    history = [L]
    converged = False
    diluted = 0
    it = 0
    for it in range(1, max_iters + 1):
        eps = None  # None: plain R rho R
        while True:
            if diagonal:
                G = R if eps is None else 1.0 + eps * R
                new = G * rho * G
                new = new / new.sum()
            else:
                G = R if eps is None else np.eye(dim) + eps * R
                new = G @ rho @ G.conj().T
                new = 0.5 * (new + new.conj().T)
                new = new / np.trace(new).real
            R_new, p_new = _R(new, v, w, diagonal)
            L_new = _loglik(p_new, w)
            if L_new >= L or (eps is not None and eps < 1e-12):
                break
            eps = 1.0 if eps is None else eps / 2
            diluted += 1
        gain = L_new - L
        if gain < 0:
            # dilution bottomed out: the current point is stationary to working precision
            converged = True
            break
        rho, R, L = new, R_new, L_new
        if record_history:
            history.append(L)
        if gain < tol:
            converged = True
            break
    if not converged:
        log.warning("MLE stopped at max_iters=%d without meeting tol=%g", max_iters, tol)

    mat = np.diag(rho).astype(complex) if diagonal else rho
    mat = 0.5 * (mat + mat.conj().T)
    mat = mat / np.trace(mat).real
    return MleResult(fock.DensityMatrix(mat), it, L, converged, history if record_history else [L],
                     diluted, "diagonal" if diagonal else "full")


def bootstrap_populations(batch: QuadratureBatch, N: int, n_boot: int = 50, seed: int = 0,
                          **kwargs) -> np.ndarray:
    """Standard deviation of the reconstructed ``P_n`` over a seeded bootstrap.

    This is a resampling stand-in for error bars, not a propagated uncertainty.
    """
    rng = np.random.default_rng(seed)
    kwargs.setdefault("diagonal", True)
    pops = []
    for _ in range(n_boot):
        idx = rng.integers(0, len(batch), len(batch))
        res = mle_reconstruct(batch.subset(idx), N, **kwargs)
        pops.append(res.populations.probs)
    return np.std(pops, axis=0, ddof=1)


MAX_CONDITION = 1e8
CLAMP_SILENT = 1e-6
CLAMP_LIMIT = 1e-3


def loss_correct(dist: fock.PhotonDistribution, eta: float) -> fock.PhotonDistribution:
    """Undo a loss of transmission ``eta`` by inverting the Bernoulli matrix.

    Negative entries down to ``-1e-6`` are clamped silently, down to ``-1e-3``
    with a warning; anything more negative is inconsistent with the assumed
    loss and raises.
    """
    if not 0 < eta <= 1:
        raise InvalidParameter(f"loss correction needs eta in (0, 1], got {eta}")
    B = fock.loss_matrix(eta, dist.truncation)
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllConditioned(f"loss inversion condition number {cond:.3g} exceeds {MAX_CONDITION:.0e}")
    out = solve_triangular(B, dist.probs, lower=False)
    worst = out.min()
    if worst < -CLAMP_LIMIT:
        raise InconsistentData(f"corrected distribution has negative weight {worst:.3g}")
    if worst < -CLAMP_SILENT:
        warnings.warn(f"clamping negative corrected weight {worst:.3g} to zero", RuntimeWarning, stacklevel=2)
    out = np.clip(out, 0.0, None)
    return fock.PhotonDistribution(out / out.sum(), dist.deficit)


def _psd_sqrt(a):
    w, V = np.linalg.eigh(a)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T


def fidelity(a, b) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(a) b sqrt(a)))**2``."""
    a = fock.DensityMatrix.coerce(a).elements
    b = fock.DensityMatrix.coerce(b).elements
    if a.shape != b.shape:
        n = max(a.shape[0], b.shape[0])
        a = np.pad(a, (0, n - a.shape[0]))
        b = np.pad(b, (0, n - b.shape[0]))
    sa = _psd_sqrt(a)
    m = sa @ b @ sa
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    f = float(np.sum(np.sqrt(np.clip(ev, 0.0, None))) ** 2)
    return min(1.0, max(0.0, f))


def write_distribution_csv(dist: fock.PhotonDistribution, path, comment: Optional[str] = None):
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "prob"])
        for n, p in enumerate(dist.probs):
            w.writerow([n, repr(float(p))])


def read_distribution_csv(path) -> fock.PhotonDistribution:
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        rows = sorted((int(r["n"]), float(r["prob"])) for r in reader)
    p = np.zeros(rows[-1][0] + 1)
    for n, v in rows:
        p[n] = v
    return fock.PhotonDistribution.from_weights(p)


def write_report(report: dict, path):
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
