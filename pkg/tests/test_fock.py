import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from photonlab import fock
from photonlab.errors import InvalidParameter, InvalidState, TruncationError, TruncationWarning, UndefinedMoment

import oracles

# frozen from oracles (direct enumeration of the geometric series)
TMSV_MEAN_001 = 0.010101010101010102
TMSV_MEAN_01 = 0.11111111100111112

etas = st.floats(0.0, 1.0)


def dists(max_n=10):
    return st.lists(st.floats(0.0, 1.0), min_size=2, max_size=max_n + 1).filter(lambda w: sum(w) > 1e-3).map(
        fock.PhotonDistribution.from_weights)


def test_tmsv_vacuum_limit():
    joint = fock.tmsv_joint(0.0, 10)
    assert joint.probs[0, 0] == 1.0
    assert joint.probs.sum() == 1.0


def test_tmsv_geometric_law():
    joint = fock.tmsv_joint(math.sqrt(0.1), 10)
    expected = [0.9 * 0.1**n for n in range(11)]
    assert np.diag(joint.probs) == pytest.approx(expected, abs=1e-9)
    assert np.count_nonzero(joint.probs - np.diag(np.diag(joint.probs))) == 0


def test_tmsv_mean_photon():
    joint = fock.tmsv_joint(0.1, 10)
    assert fock.mean_photon(joint.signal()) == pytest.approx(TMSV_MEAN_001, abs=1e-15)
    assert fock.mean_photon(joint.idler()) == pytest.approx(TMSV_MEAN_001, abs=1e-15)


def test_tmsv_rejects_threshold():
    with pytest.raises(InvalidParameter):
        fock.tmsv_joint(1.0, 10)


def test_tmsv_truncation_guard():
    # lambda^2 = 0.5 at N = 5 leaves ~1.6% outside the basis
    with pytest.raises(TruncationError):
        fock.tmsv_joint(math.sqrt(0.5), 5)
    with pytest.warns(TruncationWarning):
        joint = fock.tmsv_joint(math.sqrt(0.5), 5, on_excess="warn")
    assert joint.deficit == pytest.approx(0.5**6)


def test_apply_loss_examples():
    one = fock.fock_state(1, 3)
    assert fock.apply_loss(one, 1.0).probs == pytest.approx([0, 1, 0, 0])
    assert fock.apply_loss(one, 0.85).probs == pytest.approx([0.15, 0.85, 0, 0])
    two = fock.fock_state(2, 2)
    assert fock.apply_loss(two, 0.5).probs == pytest.approx(oracles.loss_enumeration([0, 0, 1], 0.5), abs=1e-15)
    assert fock.apply_loss(two, 0.5).probs == pytest.approx([0.25, 0.5, 0.25])


@pytest.mark.parametrize("eta", [-0.1, 1.1, float("nan")])
def test_apply_loss_rejects_eta(eta):
    with pytest.raises(InvalidParameter):
        fock.apply_loss(fock.vacuum(3), eta)


@given(dists(), etas)
def test_apply_loss_matches_enumeration(d, eta):
    assert fock.apply_loss(d, eta).probs == pytest.approx(oracles.loss_enumeration(list(d.probs), eta), abs=1e-12)


@given(dists(), etas, etas)
def test_loss_composition(d, a, b):
    twice = fock.apply_loss(fock.apply_loss(d, a), b)
    once = fock.apply_loss(d, a * b)
    assert np.max(np.abs(twice.probs - once.probs)) < 1e-10


@given(dists(), etas)
def test_loss_preserves_norm(d, eta):
    assert abs(fock.apply_loss(d, eta).probs.sum() - 1.0) < 1e-10


def test_loss_marginal_examples():
    joint = fock.tmsv_joint(math.sqrt(0.1), 10)
    same = fock.apply_loss_marginal(joint, 1.0, 1.0)
    assert np.array_equal(same.probs, joint.probs)

    half = fock.apply_loss_marginal(joint, 1.0, 0.5)
    assert fock.mean_photon(half.idler()) == pytest.approx(0.5 * fock.mean_photon(joint.idler()), rel=1e-12)
    assert fock.mean_photon(half.signal()) == pytest.approx(fock.mean_photon(joint.signal()), rel=1e-12)

    dark = fock.apply_loss_marginal(joint, 0.0, 0.7)
    assert dark.signal().probs[0] == pytest.approx(1.0, abs=1e-15)


@pytest.mark.filterwarnings("ignore::photonlab.errors.TruncationWarning")
@given(st.floats(0.0, 0.3), st.integers(3, 12))
def test_tmsv_marginals_geometric(lam2, N):
    joint = fock.tmsv_joint(math.sqrt(lam2), N, on_excess="warn")
    geometric = np.array([(1 - lam2) * lam2**n for n in range(N + 1)])
    assert np.max(np.abs(joint.signal().probs - geometric)) <= joint.deficit + 1e-15


def test_g2_examples():
    assert fock.g2_zero(fock.fock_state(1, 4)) == 0.0
    coherent = fock.poisson(0.5, 20)
    assert fock.g2_zero(coherent) == pytest.approx(1.0, abs=1e-6)
    dist = fock.PhotonDistribution.from_weights([1 - 0.93 - 0.0039, 0.93, 0.0039])
    assert fock.g2_two_term(dist) == pytest.approx(0.008868989605134842, rel=1e-12)
    assert 0.006 < fock.g2_two_term(dist) < 0.012


def test_g2_vacuum_undefined():
    with pytest.raises(UndefinedMoment):
        fock.g2_zero(fock.vacuum(4))


@given(dists(12))
def test_g2_matches_moment_enumeration(d):
    # the squared-mean oracle itself underflows below this
    assume(fock.mean_photon(d) > 1e-150)
    assert fock.g2_zero(d) == pytest.approx(oracles.g2_moments(list(d.probs)), abs=1e-12, rel=1e-12)


def test_mean_photon_and_diagonal():
    assert fock.mean_photon(fock.vacuum(5)) == 0
    assert fock.mean_photon(fock.fock_state(1, 5)) == 1
    marginal = fock.tmsv_joint(math.sqrt(0.1), 10).signal()
    assert fock.mean_photon(marginal) == pytest.approx(TMSV_MEAN_01, abs=1e-15)
    assert fock.mean_photon(marginal) == pytest.approx(1 / 9, abs=1e-9)
    rho = fock.DensityMatrix.from_distribution(marginal)
    assert fock.diagonal(rho).probs == pytest.approx(marginal.probs)


def test_distribution_validation():
    with pytest.raises(InvalidState):
        fock.PhotonDistribution([0.5, 0.4])
    with pytest.raises(InvalidState):
        fock.PhotonDistribution([1.1, -0.1])
    d = fock.PhotonDistribution([0.2, 0.8])
    assert d[5] == 0.0
    assert d.padded(4).probs == pytest.approx([0.2, 0.8, 0, 0, 0])


def test_density_matrix_validation():
    with pytest.raises(InvalidState):
        fock.DensityMatrix(np.array([[0.5, 0.6], [0.6, 0.5]]))
    with pytest.raises(InvalidState):
        fock.DensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]]))
    rho = fock.DensityMatrix.from_ket([1, 1j])
    assert np.trace(rho.elements).real == pytest.approx(1.0)
    assert not rho.is_diagonal()


@settings(deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1, allow_nan=False, allow_infinity=False), min_size=2, max_size=6)
       .filter(lambda v: np.linalg.norm(v) > 1e-3), etas)
def test_loss_channel_agrees_with_diagonal_loss(ket, eta):
    rho = fock.DensityMatrix.from_ket(ket)
    lost = fock.loss_channel(rho, eta)
    assert fock.diagonal(lost).probs == pytest.approx(fock.apply_loss(fock.diagonal(rho), eta).probs, abs=1e-12)
    assert np.min(np.linalg.eigvalsh(lost.elements)) > -1e-12


def test_loss_channel_coherence_decay():
    # (|0> + |1>)/sqrt2 keeps an off-diagonal element scaled by sqrt(eta)
    rho = fock.DensityMatrix.from_ket([1, 1])
    lost = fock.loss_channel(rho, 0.64)
    assert lost.elements[0, 1] == pytest.approx(0.5 * 0.8)


def test_binomial_table_matches_math_comb():
    table = fock.binomial_table(12)
    for n in range(13):
        for k in range(13):
            assert table[n, k] == (math.comb(n, k) if k <= n else 0)


def test_poisson_default_truncation_warns_or_errors():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fock.poisson(0.1, 10)
    with pytest.raises(TruncationError):
        fock.poisson(5.0, 10)
