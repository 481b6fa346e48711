import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from core_prob import (
    Channel,
    ProbVector,
    ValidationError,
    binary_symmetric_channel,
    compose,
    conditional_kl,
    constant_channel,
    erasure_channel,
    identity_channel,
    kl_divergence,
    random_channel,
)
from core_prob import conditional_mutual_information, mutual_information, random_joint3
from projection import blackwell_sufficient, deficiency, ri_project


def test_matching_atom_gives_lowest_index_point_mass():
    atoms = [[0.5, 0.5], [0.2, 0.8], [0.5, 0.5]]
    weights, divergence = ri_project([0.5, 0.5], atoms)
    assert divergence == 0.0
    assert_allclose(weights.probs, [1.0, 0.0, 0.0])


def test_target_inside_hull_has_zero_divergence():
    weights, divergence = ri_project([0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]], tol=1e-14)
    assert divergence < 1e-10
    assert_allclose(weights.probs, [0.5, 0.5], atol=1e-6)


def test_target_outside_hull():
    # hull of [0.8, 0.2] and [0.6, 0.4]; nearest point to [0.3, 0.7] in KL is the second atom
    weights, divergence = ri_project([0.3, 0.7], [[0.8, 0.2], [0.6, 0.4]], tol=1e-14)
    assert_allclose(weights.probs, [0.0, 1.0], atol=1e-4)
    assert_allclose(divergence, kl_divergence(ProbVector([0.3, 0.7]), ProbVector([0.6, 0.4])), atol=1e-6)


def test_infinite_divergence_when_support_is_missed():
    weights, divergence = ri_project([0.5, 0.5], [[1.0, 0.0], [1.0, 0.0]])
    assert divergence == np.inf
    assert_allclose(weights.probs, [0.5, 0.5])


def test_history_is_monotone():
    rng = np.random.default_rng(3)
    atoms = rng.dirichlet(np.ones(4), size=3)
    history = []
    ri_project(rng.dirichlet(np.ones(4)), atoms, tol=1e-13, history=history)
    assert len(history) >= 2
    assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))


def test_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        ri_project([0.5, 0.5], [[0.2, 0.3, 0.5]])
    with pytest.raises(ValidationError):
        ri_project([0.5, 0.5], [[0.5, 0.5]], tol=0.0)


def test_decoder_equal_to_channel_has_zero_deficiency():
    kappa = Channel([[0.9, 0.1], [0.2, 0.8]])
    result = deficiency(kappa, kappa, ProbVector.uniform(2))
    assert result.value == 0.0
    assert_allclose(result.encoder.rows, np.eye(2))


def test_identity_decoder_is_always_sufficient():
    rng = np.random.default_rng(11)
    kappa = random_channel(rng, 4, 3)
    result = deficiency(identity_channel(3), kappa, ProbVector.uniform(4), tol=1e-13)
    assert result.value < 1e-8
    report = blackwell_sufficient(identity_channel(3), kappa)
    assert report.sufficient
    assert_allclose(compose(identity_channel(3), report.witness_encoder).rows, kappa.rows, atol=1e-8)


def test_constant_decoder_deficiency_is_conditional_kl_to_best_constant():
    pi = ProbVector([0.3, 0.7])
    kappa = binary_symmetric_channel(0.1)
    q = ProbVector([0.6, 0.4])
    result = deficiency(constant_channel(q, 1), kappa, pi)
    assert_allclose(result.value, conditional_kl(kappa, constant_channel(q, 2), pi), atol=1e-12)


def test_unsupported_inputs_get_uniform_rows():
    d = Channel([[0.9, 0.1], [0.1, 0.9], [0.5, 0.5]])
    kappa = Channel([[0.9, 0.1], [0.3, 0.7]])
    result = deficiency(d, kappa, ProbVector([1.0, 0.0]))
    assert [item.x for item in result.per_input] == [0]
    assert_allclose(result.encoder.rows[1], np.full(3, 1 / 3))


def test_infinite_deficiency_for_erasure_decoder():
    kappa = erasure_channel(0.2)
    d = Channel([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    result = deficiency(d, kappa, ProbVector.uniform(2))
    assert result.value == np.inf
    assert not result.is_finite


def test_degraded_channel_is_blackwell_sufficient():
    # κ = bsc(0.1) followed by bsc(0.2): d = bsc(0.1) suffices with e = bsc(0.2)
    d = binary_symmetric_channel(0.1)
    kappa = compose(d, binary_symmetric_channel(0.2))
    report = blackwell_sufficient(d, kappa)
    assert report.sufficient
    assert report.max_residual <= 1e-8
    assert_allclose(report.witness_encoder.rows, binary_symmetric_channel(0.2).rows, atol=1e-8)


def test_noisier_decoder_is_not_sufficient():
    report = blackwell_sufficient(binary_symmetric_channel(0.3), binary_symmetric_channel(0.1))
    assert not report.sufficient
    assert report.witness_encoder is None
    # the nearest point of the hull to [0.9, 0.1] is [0.7, 0.3]
    assert_allclose(report.residuals, [0.4, 0.4], atol=1e-9)


def test_blackwell_rejects_alphabet_mismatch():
    with pytest.raises(ValidationError):
        blackwell_sufficient(identity_channel(3), binary_symmetric_channel(0.1))


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_sufficiency_iff_zero_deficiency(seed):
    rng = np.random.default_rng(seed)
    n_x, n_z, n_y = rng.integers(2, 4), rng.integers(2, 4), rng.integers(2, 4)
    pi = ProbVector(rng.dirichlet(np.ones(n_x)))
    d = random_channel(rng, n_z, n_y)
    if rng.random() < 0.5:
        kappa = compose(d, random_channel(rng, n_x, n_z))
    else:
        kappa = random_channel(rng, n_x, n_y)
    report = blackwell_sufficient(d, kappa)
    result = deficiency(d, kappa, pi, tol=1e-14, max_iter=100000)
    if report.sufficient:
        assert result.value < 1e-6
    else:
        assert result.value > 0.0


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_deficiency_bounded_by_any_encoder(seed):
    rng = np.random.default_rng(seed)
    pi = ProbVector(rng.dirichlet(np.ones(3)))
    kappa = random_channel(rng, 3, 3)
    d = random_channel(rng, 2, 3)
    result = deficiency(d, kappa, pi, tol=1e-12)
    for _ in range(5):
        e = random_channel(rng, 3, 2)
        assert result.value <= conditional_kl(kappa, compose(d, e), pi) + 1e-9
    assert_allclose(result.value, conditional_kl(kappa, compose(d, result.encoder), pi), atol=1e-9)


def test_projection_outside_hull_matches_weight_grid():
    target, atoms = np.array([0.9, 0.1]), np.array([[0.6, 0.4], [0.5, 0.5]])
    weights, divergence = ri_project(target, atoms, tol=1e-14)
    assert_allclose(weights.probs, [1.0, 0.0], atol=1e-4)
    grid = np.linspace(0.0, 1.0, 10001)
    mixtures = grid[:, None] * atoms[0] + (1 - grid[:, None]) * atoms[1]
    brute = (target * np.log2(target / mixtures)).sum(axis=1).min()
    assert_allclose(divergence, brute, atol=1e-9)


def test_deficiency_matches_per_input_grid():
    rng = np.random.default_rng(2024)
    kappa = random_channel(rng, 3, 3)
    d = random_channel(rng, 2, 3)
    pi = ProbVector.uniform(3)
    result = deficiency(d, kappa, pi, tol=1e-14, max_iter=100000)
    grid = np.linspace(0.0, 1.0, 100001)
    mixtures = grid[:, None] * d.rows[0] + (1 - grid[:, None]) * d.rows[1]
    brute = sum(
        pi.probs[x] * (kappa.rows[x] * np.log2(kappa.rows[x] / mixtures)).sum(axis=1).min() for x in range(3)
    )
    assert_allclose(result.value, brute, atol=1e-5)


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_redundant_atom_never_hurts(seed):
    rng = np.random.default_rng(seed)
    atoms = rng.dirichlet(np.ones(3), size=2)
    target = rng.dirichlet(np.ones(3))
    _, base = ri_project(target, atoms, tol=1e-13)
    extended = np.vstack([atoms, 0.3 * atoms[0] + 0.7 * atoms[1]])
    _, with_redundant = ri_project(target, extended, tol=1e-13)
    assert with_redundant <= base + 1e-7


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_reverse_channel_deficiency_bounds(seed):
    P = random_joint3(np.random.default_rng(seed), (3, 3, 2))
    result = deficiency(P.channel_y_given("Z", restrict_support=True), P.channel_y_given("X"), P.marginal("X"))
    bound = min(mutual_information(P.pair("Y", "X")), conditional_mutual_information(P, ("Y", "X"), "Z"))
    assert 0.0 <= result.value <= bound + 1e-6


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_constructed_degradations_and_constant_decoders(seed):
    rng = np.random.default_rng(seed)
    n_x, n_z, n_y = rng.integers(2, 5), rng.integers(2, 5), rng.integers(2, 5)
    d = random_channel(rng, n_z, n_y)
    kappa = compose(d, random_channel(rng, n_x, n_z))
    report = blackwell_sufficient(d, kappa)
    assert report.sufficient
    assert report.max_residual <= 1e-8
    assert_allclose(compose(d, report.witness_encoder).rows, kappa.rows, atol=1e-8)

    constant = constant_channel(ProbVector(rng.dirichlet(np.ones(n_y))), n_z)
    negative = blackwell_sufficient(constant, random_channel(rng, n_x, n_y))
    assert not negative.sufficient
    assert negative.max_residual > 1e-8
