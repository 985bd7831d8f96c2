"""Poisson rate encoding and spike-count decoders (vote, VFA, bigram)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

N_CLASSES = 10


@dataclass
class EncoderState:
    """Rate scale of the input layer, in Hz per pixel unit (0-255).

    The default maps a white pixel to 63.75 Hz; each adaptive step adds
    32 Hz at a white pixel.
    """

    lam: float = 0.25
    lam_step: float = 32.0 / 255.0
    lam_max: float = 1.0
    lam_init: float | None = None

    def __post_init__(self):
        if self.lam_init is None:
            self.lam_init = self.lam
        if not 0 < self.lam <= self.lam_max:
            raise ConfigurationError(f"need 0 < lambda <= lambda_max, got {self.lam} / {self.lam_max}")
        if self.lam_step <= 0:
            raise ConfigurationError("lambda_step must be > 0")

    def reset(self):
        self.lam = self.lam_init


def encode_image(pixels, lam: float, T_present: float, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Bernoulli-per-step spike trains approximating Poisson rates ``pixel * lam``.

    Returns a boolean raster of shape ``(n_steps, n_pixels)``.
    """
    if T_present <= 0:
        raise ConfigurationError("T_present must be > 0")
    p = np.asarray(pixels, dtype=np.float64).ravel()
    prob = np.minimum(1.0, p * (lam * dt / 1000.0))
    n_steps = int(round(T_present / dt))
    return rng.random((n_steps, p.size)) < prob


# --- label assignment --------------------------------------------------------


@dataclass
class LabelAssignment:
    response_matrix: np.ndarray  # (n_neurons, n_classes) mean spike counts
    neuron_label: np.ndarray
    silent: np.ndarray
    classes: np.ndarray = field(default_factory=lambda: np.arange(N_CLASSES))

    @property
    def profile(self) -> np.ndarray:
        """Row-normalised responses; zero rows for silent neurons."""
        s = self.response_matrix.sum(axis=1, keepdims=True)
        return np.divide(self.response_matrix, s, out=np.zeros_like(self.response_matrix), where=s > 0)


def assign_labels(responses, labels, n_classes: int = N_CLASSES) -> LabelAssignment:
    """Give every neuron the class it responds to most (lowest class on ties)."""
    responses = np.asarray(responses, dtype=np.float64)
    labels = np.asarray(labels)
    missing = [c for c in range(n_classes) if not np.any(labels == c)]
    if missing:
        raise ConfigurationError(f"labeling set has no examples of class(es) {missing}")
    R = np.stack([responses[labels == c].mean(axis=0) for c in range(n_classes)], axis=1)
    return LabelAssignment(R, R.argmax(axis=1), R.sum(axis=1) == 0, np.arange(n_classes))


def _as_2d(counts):
    counts = np.asarray(counts, dtype=np.float64)
    return counts[None, :] if counts.ndim == 1 else counts


def vote_scores(counts, la: LabelAssignment, exclude=None) -> np.ndarray:
    """Mean count over the (non-silent, non-excluded) neurons of each class."""
    counts = _as_2d(counts)
    use = ~la.silent if exclude is None else ~la.silent & ~np.asarray(exclude)
    n_classes = la.response_matrix.shape[1]
    onehot = np.zeros((len(use), n_classes))
    onehot[np.flatnonzero(use), la.neuron_label[use]] = 1.0
    members = onehot.sum(axis=0)
    return np.divide(counts @ onehot, members, out=np.zeros((len(counts), n_classes)), where=members > 0)


def vfa_scores(counts, la: LabelAssignment, exclude=None) -> np.ndarray:
    """Every neuron votes for all classes in proportion to its response profile.

    ``score(c) = sum_i count_i * profile[i, c] / sum_i profile[i, c]``: a
    profile-weighted mean, which is exactly the vote score when every
    profile is one-hot.
    """
    counts = _as_2d(counts)
    prof = la.profile
    if exclude is not None:
        prof = prof * ~np.asarray(exclude)[:, None]
    mass = prof.sum(axis=0)
    return np.divide(counts @ prof, mass, out=np.zeros((len(counts), prof.shape[1])), where=mass > 0)


def argmax_rows(scores, rtol=1e-9) -> np.ndarray:
    """Row-wise lowest index among the maxima; rounding-level differences count as ties."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    top = scores.max(axis=1, keepdims=True)
    return (scores >= top - rtol * np.abs(top)).argmax(axis=1)


def _argmax(scores) -> int:
    return int(argmax_rows(scores)[0])


def predict_vote(counts, la: LabelAssignment, exclude=None) -> int:
    """Class with the highest mean count among its neurons; 0 when nothing fired."""
    return _argmax(vote_scores(counts, la, exclude)[0])


def predict_vfa(counts, la: LabelAssignment, exclude=None) -> int:
    return _argmax(vfa_scores(counts, la, exclude)[0])


# --- bigram ------------------------------------------------------------------


def consecutive_pairs(sequence) -> list:
    """Ordered pairs of consecutive distinct firing neurons."""
    seq = np.asarray(sequence)
    if seq.size < 2:
        return []
    keep = np.concatenate([[True], seq[1:] != seq[:-1]])
    seq = seq[keep]
    return list(zip(seq[:-1].tolist(), seq[1:].tolist()))


@dataclass
class BigramModel:
    counts: dict = field(default_factory=dict)  # (a, b) -> per-class counts
    n_classes: int = N_CLASSES

    def to_arrays(self):
        keys = sorted(self.counts)
        pairs = np.array(keys, dtype=np.int64).reshape(-1, 2)
        table = np.array([self.counts[k] for k in keys], dtype=np.int64).reshape(-1, self.n_classes)
        return pairs, table

    @classmethod
    def from_arrays(cls, pairs, table):
        model = cls(n_classes=table.shape[1] if table.ndim == 2 and table.shape[1] else N_CLASSES)
        for (a, b), row in zip(pairs.tolist(), table):
            model.counts[(a, b)] = row.astype(np.int64).copy()
        return model


def fit_bigram(sequences, labels, n_classes: int = N_CLASSES) -> BigramModel:
    model = BigramModel(n_classes=n_classes)
    for seq, y in zip(sequences, labels):
        for pair in consecutive_pairs(seq):
            model.counts.setdefault(pair, np.zeros(n_classes, dtype=np.int64))[int(y)] += 1
    return model


def predict_bigram(sequence, model: BigramModel, counts=None, la: LabelAssignment | None = None,
                   exclude=None) -> int:
    """Sum the class counts of every known pair; fall back to voting when none is known."""
    score = np.zeros(model.n_classes, dtype=np.int64)
    known = False
    for pair in consecutive_pairs(sequence):
        row = model.counts.get(pair)
        if row is not None:
            score += row
            known = True
    if known:
        return _argmax(score)
    if counts is None or la is None:
        return 0
    return predict_vote(counts, la, exclude)
