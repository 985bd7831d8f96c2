import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from spikecept import SpikingInceptionClassifier
from spikecept._validation import check_images, check_labels


def test_params_round_trip():
    est = SpikingInceptionClassifier(topology="baseline-fc-I", iterations=5, decoder="vfa", seed=3)
    p = est.get_params()
    assert p["topology"] == "baseline-fc-I" and p["iterations"] == 5 and p["seed"] == 3
    assert clone(est).get_params() == p
    est.set_params(decoder="bigram")
    assert est.decoder == "bigram"


def test_not_fitted():
    with pytest.raises(NotFittedError):
        SpikingInceptionClassifier().predict(np.zeros((1, 784)))


def test_input_validation():
    assert check_images(np.zeros((2, 28, 28))).shape == (2, 784)
    with pytest.raises(ValueError):
        check_images(np.full((1, 784), 300))
    with pytest.raises(ValueError):
        check_images(np.zeros((1, 10)))
    with pytest.raises(ValueError):
        check_labels([1, 2], 3)
    with pytest.raises(ValueError):
        SpikingInceptionClassifier(decoder="knn").fit(np.zeros((10, 784)), np.arange(10))


def test_fit_predict_transform(digits):
    tr, te = digits
    X = tr.images[:200].reshape(200, -1)
    est = SpikingInceptionClassifier(iterations=30, decoder="bigram", seed=1).fit(X, tr.labels[:200])
    assert est.n_features_in_ == 784 and est.classes_.tolist() == list(range(10))
    counts = est.transform(te.images[:5])
    assert counts.shape == (5, 100) and (counts >= 0).all()
    pred = est.predict(te.images[:5])
    assert pred.shape == (5,) and set(pred) <= set(range(10))
    np.testing.assert_array_equal(pred, est.predict(te.images[:5]))
    assert 0.0 <= est.score(te.images[:5], te.labels[:5]) <= 1.0
