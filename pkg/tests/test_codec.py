import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikecept.codec import (
    BigramModel,
    EncoderState,
    LabelAssignment,
    assign_labels,
    consecutive_pairs,
    encode_image,
    fit_bigram,
    predict_bigram,
    predict_vfa,
    predict_vote,
    vfa_scores,
    vote_scores,
)
from spikecept.errors import ConfigurationError


def manual_assignment(R):
    R = np.asarray(R, dtype=float)
    return LabelAssignment(R, R.argmax(axis=1), R.sum(axis=1) == 0, np.arange(R.shape[1]))


class TestEncoder:
    def test_mean_count(self):
        S = encode_image(np.full(10_000, 255.0), 0.25, 350.0, 0.5, np.random.default_rng(0))
        assert S.shape == (700, 10_000)
        assert S.sum(axis=0).mean() == pytest.approx(63.75 * 0.35, rel=0.01)
        assert 63.75 * 0.35 == 22.3125

    def test_zero_pixel_never_spikes(self):
        S = encode_image(np.zeros((28, 28)), 1.0, 350.0, 0.5, np.random.default_rng(1))
        assert not S.any() and S.shape == (700, 784)

    def test_deterministic(self):
        img = np.arange(784) % 256
        a = encode_image(img, 0.3, 100.0, 0.5, np.random.default_rng(5))
        b = encode_image(img, 0.3, 100.0, 0.5, np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    def test_probability_capped(self):
        S = encode_image(np.full(4, 255.0), 10_000.0, 10.0, 0.5, np.random.default_rng(0))
        assert S.all()

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            encode_image(np.zeros(4), 0.25, 0.0, 0.5, np.random.default_rng(0))
        with pytest.raises(ConfigurationError):
            EncoderState(lam=2.0, lam_max=1.0)

    def test_state_reset(self):
        enc = EncoderState()
        enc.lam = 0.9
        enc.reset()
        assert enc.lam == 0.25


@settings(max_examples=20, deadline=None)
@given(st.floats(1.0, 200.0), st.integers(0, 2**32 - 1))
def test_encoder_within_three_standard_errors(rate_hz, seed):
    dt, T = 0.5, 350.0
    assert rate_hz * dt / 1000 <= 0.1
    S = encode_image(np.full(10_000, rate_hz), 1.0, T, dt, np.random.default_rng(seed))
    c = S.sum(axis=0)
    p = rate_hz * dt / 1000
    expected = p * (T / dt)
    se = np.sqrt((T / dt) * p * (1 - p) / c.size)
    assert abs(c.mean() - expected) <= 3 * se + 1e-12


class TestAssignLabels:
    def test_single_class_neuron(self):
        resp = np.array([[0, 5], [0, 0], [0, 4], [1, 0]] + [[0, 0]] * 8)
        labels = np.array([3, 1, 3, 2] + list(range(10)) * 0 + [0, 4, 5, 6, 7, 8, 9, 1])
        la = assign_labels(resp, labels)
        assert la.neuron_label[1] == 3
        assert la.neuron_label[0] == 2

    def test_silent_neuron_gets_zero(self):
        la = assign_labels(np.zeros((10, 3)), np.arange(10))
        assert la.neuron_label.tolist() == [0, 0, 0] and la.silent.all()

    def test_toy_matrix_brute_force(self):
        resp = np.array([[1, 0, 2], [3, 1, 2], [0, 4, 4], [2, 2, 0]], dtype=float)
        labels = np.array([0, 0, 1, 1])
        la = assign_labels(resp, labels, n_classes=2)
        for i in range(3):
            m = [np.mean([resp[k, i] for k in range(4) if labels[k] == c]) for c in range(2)]
            assert la.response_matrix[i].tolist() == m
            best = max(range(2), key=lambda c: (m[c], -c))
            assert la.neuron_label[i] == best
        assert la.neuron_label.tolist() == [0, 1, 0]

    def test_missing_class_listed(self):
        with pytest.raises(ConfigurationError, match=r"\[2, 9\]"):
            assign_labels(np.ones((8, 2)), np.array([0, 1, 3, 4, 5, 6, 7, 8]))

    def test_permutation_equivariant(self, rng):
        resp = rng.poisson(2.0, (50, 12))
        labels = np.arange(50) % 10
        perm = rng.permutation(12)
        a = assign_labels(resp, labels)
        b = assign_labels(resp[:, perm], labels)
        np.testing.assert_array_equal(b.neuron_label, a.neuron_label[perm])


class TestVote:
    def test_only_class_seven(self):
        la = manual_assignment(np.eye(10)[[7, 7, 2, 0]])
        assert predict_vote([3, 1, 0, 0], la) == 7

    def test_no_spikes_class_zero(self):
        la = manual_assignment(np.eye(10)[[7, 3]])
        assert predict_vote([0, 0], la) == 0

    def test_mixed_counts_brute_force(self, rng):
        for _ in range(50):
            labels = rng.integers(0, 10, 30)
            la = manual_assignment(np.eye(10)[labels])
            counts = rng.poisson(1.5, 30)
            score = []
            for c in range(10):
                members = [counts[i] for i in range(30) if labels[i] == c]
                score.append(sum(members) / len(members) if members else 0.0)
            assert predict_vote(counts, la) == int(np.argmax(score))
            np.testing.assert_allclose(vote_scores(counts, la)[0], score)

    def test_silent_and_excluded_neurons_ignored(self):
        R = np.eye(10)[[1, 1, 2]]
        R[1] = 0
        la = manual_assignment(R)
        # the silent neuron would otherwise halve class 0's mean
        assert vote_scores([4, 100, 3], la)[0, 1] == 4
        assert predict_vote([4, 0, 3], la, exclude=np.array([True, False, False])) == 2


class TestVFA:
    def test_one_hot_reduces_to_vote(self, rng):
        la = manual_assignment(np.eye(10)[rng.integers(0, 10, 40)] * rng.uniform(1, 5, (40, 1)))
        for _ in range(20):
            counts = rng.poisson(1.0, 40)
            np.testing.assert_allclose(vfa_scores(counts, la), vote_scores(counts, la))
            assert predict_vfa(counts, la) == predict_vote(counts, la)

    def test_uniform_profiles_tie(self):
        la = manual_assignment(np.ones((5, 10)))
        assert predict_vfa([3, 1, 4, 1, 5], la) == 0

    def test_toy_weighted_vote(self):
        R = np.array([[4, 0, 0], [1, 1, 2], [0, 3, 1], [2, 2, 0]], dtype=float)
        la = manual_assignment(R)
        counts = np.array([1, 6, 2, 0])
        prof = [[x / sum(row) for x in row] for row in R.tolist()]
        score = [sum(counts[i] * prof[i][c] for i in range(4)) / sum(prof[i][c] for i in range(4))
                 for c in range(3)]
        np.testing.assert_allclose(vfa_scores(counts, la)[0], score)
        assert predict_vfa(counts, la) == int(np.argmax(score)) == 2


class TestBigram:
    def test_pairs_merge_repeats(self):
        assert consecutive_pairs([3, 3, 1, 1, 3, 2]) == [(3, 1), (1, 3), (3, 2)]
        assert consecutive_pairs([4]) == [] and consecutive_pairs([]) == []

    def test_single_pair_class_five(self):
        model = fit_bigram([[2, 9]], [5])
        assert predict_bigram([0, 2, 9], model) == 5

    def test_empty_sequence_falls_back(self):
        model = fit_bigram([[2, 9]], [5])
        la = manual_assignment(np.eye(10)[[7, 1]])
        assert predict_bigram([], model, counts=[4, 0], la=la) == 7
        assert predict_bigram([], model) == 0

    def test_toy_corpus_table(self):
        seqs = [[0, 1, 2], [1, 2, 1], [2, 0, 0, 1], [0, 1]]
        labels = [0, 1, 1, 0]
        model = fit_bigram(seqs, labels, n_classes=2)
        table = {}
        for s, y in zip(seqs, labels):
            for a, b in itertools.pairwise(s):
                if a != b:
                    table.setdefault((a, b), [0, 0])[y] += 1
        assert {k: v.tolist() for k, v in model.counts.items()} == table
        assert predict_bigram([1, 2, 0], model) == 1

    def test_array_round_trip(self):
        model = fit_bigram([[0, 1, 2], [2, 1]], [3, 4])
        back = BigramModel.from_arrays(*model.to_arrays())
        assert {k: v.tolist() for k, v in back.counts.items()} == {k: v.tolist() for k, v in model.counts.items()}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 50.0))
def test_vote_scale_invariant_and_pure(seed, scale):
    rng = np.random.default_rng(seed)
    la = manual_assignment(rng.poisson(1.0, (20, 10)))
    counts = rng.poisson(2.0, 20)
    a = predict_vote(counts, la)
    assert predict_vote(counts * scale, la) == a
    assert predict_vote(counts, la) == a
    assert predict_vfa(counts, la) == predict_vfa(counts, la)
