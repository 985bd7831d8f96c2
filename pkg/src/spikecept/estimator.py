"""scikit-learn style wrapper around training, labeling and decoding."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from ._validation import check_fitted, check_images, check_labels
from .config import build, preset
from .engine import TEST, SpikingNetwork
from .harness import collect_responses, decode, fit_readout, label_indices, train


class SpikingInceptionClassifier(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Unsupervised STDP network with a vote-style readout.

    ``fit`` trains the network on ``X`` (labels unused), then labels the
    output neurons with a frozen pass over a class-balanced subset.
    ``transform`` returns output spike counts per image.

    Parameters
    ----------
    topology : str
        Preset name, e.g. ``"desk-sp-inception-64"`` or ``"baseline-fc-I"``.
    iterations : int or None
        Training presentations per stage; ``None`` trains one pass over ``X``.
    decoder : {"vote", "vfa", "bigram"}
    """

    def __init__(self, topology="desk-fc-100", iterations=None, decoder="vote", S_min=10, R=90.0,
                 inhibition_weight=None, seed=0):
        self.topology = topology
        self.iterations = iterations
        self.decoder = decoder
        self.S_min = S_min
        self.R = R
        self.inhibition_weight = inhibition_weight
        self.seed = seed

    def _build(self, n_images):
        doc = preset(self.topology)
        if self.inhibition_weight is not None:
            for st in doc["stages"]:
                st["module"]["inhibition_weight"] = self.inhibition_weight
        doc["neuron"] = {"R": float(self.R)}
        doc["simulation"] = {"S_min": int(self.S_min)}
        doc["train"] = {**doc.get("train", {}), "iterations": int(self.iterations or n_images), "seed": int(self.seed)}
        doc["train"].pop("stage_schedule", None)
        return build(doc)

    def fit(self, X, y):
        X = check_images(X)
        y = check_labels(y, len(X))
        if self.decoder not in ("vote", "vfa", "bigram"):
            raise ValueError(f"decoder must be vote, vfa or bigram, got {self.decoder!r}")
        spec, cfg = self._build(len(X))
        net = SpikingNetwork(spec, cfg.sim, cfg.seed)
        train(net, X, cfg)
        idx = label_indices(y, cfg.label_fraction, cfg.label_min_per_class)
        self.readout_ = fit_readout(net, X[idx], y[idx], with_bigram=self.decoder == "bigram", indices=idx)
        self.network_ = net
        self.classes_ = np.arange(10)
        self.n_features_in_ = X.shape[1]
        return self

    def _responses(self, X):
        check_fitted(self)
        return collect_responses(self.network_, check_images(X), TEST)

    def transform(self, X):
        return self._responses(X).counts

    def predict(self, X):
        r = self._responses(X)
        return decode(r, self.readout_, self.decoder, ~self.network_.layers[-1].alive)
