"""Truncated Fock-space states and loss channels.

Photon-number distributions, two-mode pair statistics and density matrices
live on ``n = 0..N``. Values are immutable once built; all functions are pure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from .errors import (
    InvalidParameter,
    InvalidState,
    TruncationError,
    TruncationWarning,
    UndefinedMoment,
)

DEFAULT_TRUNCATION = 10
DEFAULT_MAX_DEFICIT = 1e-4

_NORM_TOL = 1e-9


@lru_cache(maxsize=None)
def _pascal(size: int) -> np.ndarray:
    tri = np.zeros((size + 1, size + 1))
    tri[:, 0] = 1.0
    for n in range(1, size + 1):
        tri[n, 1 : n + 1] = tri[n - 1, : n] + tri[n - 1, 1 : n + 1]
    tri.setflags(write=False)
    return tri


def binomial_table(N: int) -> np.ndarray:
    """``table[n, m] = C(n, m)`` for ``0 <= m <= n <= N``; cached up to 2N."""
    return _pascal(max(2 * N, 1))[: N + 1, : N + 1]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_deficit(deficit: float, max_deficit: float, on_excess: str):
    if deficit <= max_deficit:
        return
    msg = f"truncated probability mass {deficit:.3g} exceeds {max_deficit:.3g}; raise N"
    if on_excess == "warn":
        warnings.warn(msg, TruncationWarning, stacklevel=3)
    else:
        raise TruncationError(msg)


@dataclass(frozen=True)
class PhotonDistribution:
    """Photon-number probabilities of one mode, truncated at ``N``.

    ``deficit`` records the probability mass that was cut off (and then
    renormalized away) when the distribution was built.
    """

    probs: np.ndarray
    deficit: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise InvalidState("photon distribution must be a non-empty vector")
        if not np.all(np.isfinite(p)):
            raise InvalidState("photon distribution has non-finite entries")
        if np.any(p < -_NORM_TOL) or np.any(p > 1 + _NORM_TOL):
            raise InvalidState("photon probabilities must lie in [0, 1]")
        if abs(p.sum() - 1.0) > _NORM_TOL:
            raise InvalidState(f"photon probabilities sum to {p.sum():.12g}, not 1")
        object.__setattr__(self, "probs", _frozen(np.clip(p, 0.0, 1.0)))

    @classmethod
    def from_weights(cls, weights, deficit: float = 0.0) -> "PhotonDistribution":
        """Normalize non-negative weights into a distribution."""
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise InvalidState("weights must be non-negative")
        total = w.sum()
        if total <= 0:
            raise InvalidState("weights sum to zero")
        return cls(w / total, deficit)

    @property
    def truncation(self) -> int:
        return self.probs.size - 1

    def __getitem__(self, n: int) -> float:
        return float(self.probs[n]) if 0 <= n < self.probs.size else 0.0

    def padded(self, N: int) -> "PhotonDistribution":
        if N < self.truncation:
            raise InvalidParameter("cannot pad to a smaller truncation")
        p = np.zeros(N + 1)
        p[: self.probs.size] = self.probs
        return PhotonDistribution(p, self.deficit)


@dataclass(frozen=True)
class JointDistribution:
    """Pair statistics ``probs[n_signal, n_idler]``."""

    probs: np.ndarray
    deficit: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2:
            raise InvalidState("joint distribution must be a matrix")
        if np.any(p < -_NORM_TOL) or np.any(p > 1 + _NORM_TOL):
            raise InvalidState("joint probabilities must lie in [0, 1]")
        if abs(p.sum() - 1.0) > _NORM_TOL:
            raise InvalidState(f"joint probabilities sum to {p.sum():.12g}, not 1")
        object.__setattr__(self, "probs", _frozen(np.clip(p, 0.0, 1.0)))

    @property
    def truncation(self) -> int:
        return self.probs.shape[0] - 1

    def signal(self) -> PhotonDistribution:
        return PhotonDistribution(self.probs.sum(axis=1), self.deficit)

    def idler(self) -> PhotonDistribution:
        return PhotonDistribution(self.probs.sum(axis=0), self.deficit)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite Fock-basis matrix."""

    elements: np.ndarray = field(repr=False)

    def __post_init__(self):
        r = np.array(self.elements, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise InvalidState("density matrix must be square")
        if not np.all(np.isfinite(r)):
            raise InvalidState("density matrix has non-finite entries")
        if np.max(np.abs(r - r.conj().T)) > 1e-12:
            raise InvalidState("density matrix is not Hermitian")
        if abs(np.trace(r).real - 1.0) > _NORM_TOL:
            raise InvalidState(f"density matrix trace is {np.trace(r).real:.12g}")
        if np.linalg.eigvalsh(r).min() < -1e-9:
            raise InvalidState("density matrix has negative eigenvalues")
        r.setflags(write=False)
        object.__setattr__(self, "elements", r)

    @classmethod
    def from_distribution(cls, dist: PhotonDistribution) -> "DensityMatrix":
        return cls(np.diag(dist.probs).astype(complex))

    @classmethod
    def from_ket(cls, ket) -> "DensityMatrix":
        v = np.asarray(ket, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def coerce(cls, rho) -> "DensityMatrix":
        if isinstance(rho, DensityMatrix):
            return rho
        if isinstance(rho, PhotonDistribution):
            return cls.from_distribution(rho)
        return cls(rho)

    @property
    def truncation(self) -> int:
        return self.elements.shape[0] - 1

    def is_diagonal(self, tol: float = 1e-14) -> bool:
        off = self.elements - np.diag(np.diag(self.elements))
        return bool(np.max(np.abs(off), initial=0.0) <= tol)


# -- constructors ------------------------------------------------------------


def vacuum(N: int = DEFAULT_TRUNCATION) -> PhotonDistribution:
    return fock_state(0, N)


def fock_state(n: int, N: int = DEFAULT_TRUNCATION) -> PhotonDistribution:
    if not 0 <= n <= N:
        raise InvalidParameter(f"photon number {n} outside 0..{N}")
    p = np.zeros(N + 1)
    p[n] = 1.0
    return PhotonDistribution(p)


def poisson(mean: float, N: int = DEFAULT_TRUNCATION, max_deficit: float = DEFAULT_MAX_DEFICIT,
            on_excess: str = "error") -> PhotonDistribution:
    """Coherent-state photon statistics, renormalized over ``0..N``."""
    if mean < 0:
        raise InvalidParameter("mean photon number must be non-negative")
    w = stats.poisson.pmf(np.arange(N + 1), mean)
    deficit = max(0.0, 1.0 - w.sum())
    _check_deficit(deficit, max_deficit, on_excess)
    return PhotonDistribution(w / w.sum(), deficit)


def tmsv_joint(lam: float, N: int = DEFAULT_TRUNCATION, max_deficit: float = DEFAULT_MAX_DEFICIT,
               on_excess: str = "error") -> JointDistribution:
    """Photon-pair statistics of a two-mode squeezed vacuum.

    ``P(n, n) = (1 - lam**2) * lam**(2n)``, zero off the diagonal. The mass
    beyond ``N`` is ``lam**(2(N+1))``; it is recorded as ``deficit`` and the
    window is renormalized.
    """
    if not 0 <= lam < 1:
        raise InvalidParameter(f"pair amplitude must be in [0, 1), got {lam}")
    if N < 2:
        raise InvalidParameter("truncation must be at least 2")
    x = lam * lam
    diag = (1 - x) * x ** np.arange(N + 1)
    deficit = x ** (N + 1)
    _check_deficit(deficit, max_deficit, on_excess)
    return JointDistribution(np.diag(diag / diag.sum()), deficit)


# -- loss --------------------------------------------------------------------


def loss_matrix(eta: float, N: int) -> np.ndarray:
    """Bernoulli map ``B[m, n] = C(n, m) eta^m (1 - eta)^(n - m)``."""
    if not 0.0 <= eta <= 1.0 or not np.isfinite(eta):
        raise InvalidParameter(f"transmission must be in [0, 1], got {eta}")
    C = binomial_table(N).T  # C[m, n] = C(n, m)
    m = np.arange(N + 1)[:, None]
    n = np.arange(N + 1)[None, :]
    k = n - m
    with np.errstate(invalid="ignore"):
        B = C * np.power(eta, m) * np.power(1.0 - eta, np.where(k >= 0, k, 0))
    return np.where(k >= 0, B, 0.0)


def apply_loss(dist: PhotonDistribution, eta: float) -> PhotonDistribution:
    """Send a photon-number distribution through a beam splitter of transmission ``eta``."""
    B = loss_matrix(eta, dist.truncation)
    out = B @ dist.probs
    return PhotonDistribution(out / out.sum(), dist.deficit)


def apply_loss_marginal(joint: JointDistribution, eta_signal: float, eta_idler: float) -> JointDistribution:
    N = joint.truncation
    Bs = loss_matrix(eta_signal, N)
    Bi = loss_matrix(eta_idler, N)
    out = Bs @ joint.probs @ Bi.T
    return JointDistribution(out / out.sum(), joint.deficit)


def loss_channel(rho, eta: float) -> DensityMatrix:
    """Kraus form of the loss channel acting on a full density matrix.

    ``E_k = sum_n sqrt(C(n, k) eta^(n-k) (1-eta)^k) |n-k><n|``; reduces to
    :func:`apply_loss` on the diagonal.
    """
    rho = DensityMatrix.coerce(rho)
    if not 0.0 <= eta <= 1.0:
        raise InvalidParameter(f"transmission must be in [0, 1], got {eta}")
    N = rho.truncation
    C = binomial_table(N)
    r = rho.elements
    out = np.zeros_like(r)
    for k in range(N + 1):
        E = np.zeros((N + 1, N + 1))
        for n in range(k, N + 1):
            E[n - k, n] = np.sqrt(C[n, k] * eta ** (n - k) * (1 - eta) ** k)
        out += E @ r @ E.T
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out / np.trace(out).real)


# -- moments -----------------------------------------------------------------


def mean_photon(dist: PhotonDistribution) -> float:
    return float(np.arange(dist.probs.size) @ dist.probs)


def diagonal(rho) -> PhotonDistribution:
    rho = DensityMatrix.coerce(rho)
    p = np.clip(np.diag(rho.elements).real, 0.0, None)
    return PhotonDistribution(p / p.sum())


def g2_zero(dist: PhotonDistribution) -> float:
    """Zero-delay autocorrelation ``sum n(n-1)P(n) / (sum n P(n))**2``."""
    n = np.arange(dist.probs.size)
    mean = float(n @ dist.probs)
    if mean <= 0:
        raise UndefinedMoment("g2 is undefined for the vacuum")
    # divide twice so a tiny mean does not underflow to 0 when squared
    return float((n * (n - 1)) @ dist.probs) / mean / mean


def g2_two_term(dist: PhotonDistribution) -> float:
    """Two-component estimate ``2 P2 / (P1 + 2 P2)**2``, valid when P(n>=3) is negligible."""
    p1, p2 = dist[1], dist[2]
    denom = (p1 + 2 * p2) ** 2
    if denom <= 0:
        raise UndefinedMoment("g2 approximation needs a non-zero one- or two-photon weight")
    return 2 * p2 / denom
