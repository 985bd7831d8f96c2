"""Training, labeling, evaluation, ablation sweeps, intensity and MSDS."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .codec import (
    BigramModel,
    LabelAssignment,
    argmax_rows,
    assign_labels,
    fit_bigram,
    predict_bigram,
    vfa_scores,
    vote_scores,
)
from .dynamics import SpikeRecord
from .engine import LABEL, PROBE, REPLAY, TEST, TRAIN, SimParams, SpikingNetwork, adaptive_present, forward
from .errors import ConfigurationError
from .topology import GRID, ablate

log = logging.getLogger(__name__)

DECODERS = ("vote", "vfa", "bigram")


@dataclass(frozen=True)
class TrainConfig:
    """Training protocol. Neuron and learning constants live in ``sim``."""

    iterations: int = 3000
    checkpoint_every: int = 500
    seed: int = 0
    sim: SimParams = field(default_factory=SimParams)
    stage_schedule: tuple | None = None
    label_fraction: float = 0.1
    label_min_per_class: int = 100

    def __post_init__(self):
        if self.iterations <= 0:
            raise ConfigurationError("iterations must be > 0")
        if self.checkpoint_every < 0:
            raise ConfigurationError("checkpoint_every must be >= 0")
        if self.stage_schedule is not None:
            object.__setattr__(self, "stage_schedule", tuple(int(n) for n in self.stage_schedule))
            if any(n < 0 for n in self.stage_schedule):
                raise ConfigurationError("stage_schedule entries must be >= 0")

    def schedule(self, n_stages: int) -> tuple:
        if self.stage_schedule is None:
            return (self.iterations,) * n_stages
        if len(self.stage_schedule) != n_stages:
            raise ConfigurationError(f"stage_schedule has {len(self.stage_schedule)} entries for {n_stages} stages")
        return self.stage_schedule


@dataclass
class TrainState:
    """Position in the stage schedule: next iteration of ``stage`` to run."""

    stage: int = 0
    iteration: int = 0
    retries: int = 0
    flagged: int = 0


def _flat(images) -> np.ndarray:
    X = np.asarray(images)
    return X.reshape(len(X), int(np.prod(X.shape[1:], dtype=np.int64)))


def upstream_of(net: SpikingNetwork, image, stage: int, index: int) -> np.ndarray:
    """Output raster of stage ``stage - 1`` for one image, from the frozen upstream network."""
    return forward(net, image, (REPLAY, index), through=stage - 1)[-1].output


def train(net: SpikingNetwork, images, cfg: TrainConfig, state: TrainState | None = None, on_checkpoint=None):
    """Train stage by stage; each finished stage is frozen before the next one starts.

    Stage ``n > 1`` sees the frozen output of stages ``1..n-1`` through its
    PRA layer.  ``on_checkpoint(net, state)`` is called every
    ``checkpoint_every`` iterations of a stage and at the end of each stage.
    Passing a ``state`` saved with a checkpoint resumes exactly.
    """
    X = _flat(images)
    state = state or TrainState()
    schedule = cfg.schedule(net.n_stages)
    if len(X) == 0 and any(schedule):
        raise ConfigurationError("training set is empty")
    while state.stage < net.n_stages:
        s = state.stage
        layer = net.layers[s]
        net.unfreeze(s)
        while state.iteration < schedule[s]:
            i = state.iteration
            idx = i % len(X)
            if idx == 0 and i > 0:
                log.info("stage %d: training set exhausted after %d iterations, starting epoch %d",
                         s + 1, i, i // len(X) + 1)
                if s == 0:
                    net.encoder.reset()
                else:
                    net.w_p[s] = net.pra_spec(s).w_p_init
            src = X[idx] if s == 0 else upstream_of(net, X[idx], s, idx)
            r = adaptive_present(net, s, src, (TRAIN, s, i), learn=True, persist=True)
            layer.normalize()
            state.retries += r.retries
            state.flagged += int(r.flagged)
            state.iteration += 1
            if on_checkpoint and cfg.checkpoint_every and state.iteration % cfg.checkpoint_every == 0:
                on_checkpoint(net, state)
        net.freeze(s)
        log.info("stage %d trained: %d iterations, %d retries, %d flagged", s + 1, schedule[s],
                 state.retries, state.flagged)
        state.stage += 1
        state.iteration = 0
        if on_checkpoint:
            on_checkpoint(net, state)
    return net


# --- readout -----------------------------------------------------------------


@dataclass
class Responses:
    counts: np.ndarray  # (n_images, n_outputs)
    sequences: list
    flagged: np.ndarray


def collect_responses(net: SpikingNetwork, images, purpose: int = TEST, indices=None) -> Responses:
    """Frozen presentations; image ``k`` uses the stream keyed by ``indices[k]``."""
    X = _flat(images)
    indices = np.arange(len(X)) if indices is None else np.asarray(indices)
    counts = np.zeros((len(X), net.n_outputs), dtype=np.int64)
    seqs, flagged = [], np.zeros(len(X), dtype=bool)
    for k, (x, idx) in enumerate(zip(X, indices)):
        res = forward(net, x, (purpose, int(idx)))
        out = res[-1].output
        counts[k] = out.sum(axis=0)
        seqs.append(SpikeRecord.from_raster(out, net.params.dt).sequence)
        flagged[k] = any(r.flagged for r in res)
    return Responses(counts, seqs, flagged)


def label_indices(labels, fraction: float = 0.1, min_per_class: int = 100) -> np.ndarray:
    """First ``min(n_c, max(min_per_class, ceil(fraction * n_c)))`` images of every class."""
    y = np.asarray(labels)
    keep = []
    for c in np.unique(y):
        where = np.flatnonzero(y == c)
        keep.append(where[: min(len(where), max(min_per_class, math.ceil(fraction * len(where))))])
    return np.sort(np.concatenate(keep)) if keep else np.zeros(0, dtype=np.int64)


@dataclass
class Readout:
    labels: LabelAssignment
    bigram: BigramModel | None = None


def fit_readout(net: SpikingNetwork, images, labels, with_bigram: bool = True, indices=None) -> Readout:
    """Label the output neurons from a frozen pass over labeled images."""
    r = collect_responses(net, images, LABEL, indices)
    la = assign_labels(r.counts, labels)
    return Readout(la, fit_bigram(r.sequences, labels) if with_bigram else None)


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray
    predictions: np.ndarray
    no_spike: int
    flagged: int


def decode(responses: Responses, readout: Readout, decoder: str = "vote", exclude=None) -> np.ndarray:
    if decoder not in DECODERS:
        raise ConfigurationError(f"decoder must be one of {DECODERS}, got {decoder!r}")
    la = readout.labels
    if decoder == "vote":
        return argmax_rows(vote_scores(responses.counts, la, exclude))
    if decoder == "vfa":
        return argmax_rows(vfa_scores(responses.counts, la, exclude))
    if readout.bigram is None:
        raise ConfigurationError("bigram decoder requested but the readout has no bigram model")
    return np.array([predict_bigram(seq, readout.bigram, c, la, exclude)
                     for seq, c in zip(responses.sequences, responses.counts)])


def score(predictions, labels, n_classes: int = 10) -> EvalResult:
    y = np.asarray(labels)
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(conf, (y, predictions), 1)
    acc = float((predictions == y).mean()) if len(y) else 0.0
    return EvalResult(acc, conf, np.asarray(predictions), 0, 0)


def evaluate(net: SpikingNetwork, images, labels, readout: Readout, decoder: str = "vote") -> EvalResult:
    """Accuracy and confusion (rows: true class) on a test set, network frozen."""
    r = collect_responses(net, images, TEST)
    exclude = ~net.layers[-1].alive
    res = score(decode(r, readout, decoder, exclude), labels)
    res.no_spike = int((r.counts.sum(axis=1) == 0).sum())
    res.flagged = int(r.flagged.sum())
    return res


def robustness_sweep(net: SpikingNetwork, readout: Readout, images, labels, rhos=(0.0, 0.25, 0.5, 0.75, 1.0),
                     mode: str = "neurons", trials: int = 1, seed: int = 0, decoder: str = "vote") -> list:
    """``(rho, mode, mean_acc, std)`` rows; every trial damages a fresh copy.

    Neuron labels are kept from the intact network.
    """
    rows = []
    for k, rho in enumerate(rhos):
        accs = [evaluate(ablate(net, rho, mode, seed=seed + 1000 * t + k), images, labels, readout, decoder).accuracy
                for t in range(trials)]
        rows.append((float(rho), mode, float(np.mean(accs)), float(np.std(accs))))
    return rows


# --- intensity and spiking maps ----------------------------------------------


@dataclass
class IntensityReport:
    rows: list  # (stage, mean input spikes, mean output spikes) per presentation
    flagged: list
    min_input_unflagged: list


def measure_intensity(net: SpikingNetwork, images, n: int | None = None) -> IntensityReport:
    """Mean spikes per presentation entering and leaving every stage.

    For stages after the first the input is the PRA output.
    """
    X = _flat(images)
    X = X if n is None else X[:n]
    if len(X) == 0:
        return IntensityReport([], [], [])
    ins = np.zeros((len(X), net.n_stages))
    outs = np.zeros_like(ins)
    flags = np.zeros_like(ins, dtype=bool)
    for k, x in enumerate(X):
        for s, r in enumerate(forward(net, x, (PROBE, k))):
            ins[k, s], outs[k, s], flags[k, s] = r.input.sum(), r.output.sum(), r.flagged
    rows = [(s + 1, float(ins[:, s].mean()), float(outs[:, s].mean())) for s in range(net.n_stages)]
    mins = [float(ins[~flags[:, s], s].min()) if (~flags[:, s]).any() else float("nan") for s in range(net.n_stages)]
    return IntensityReport(rows, [int(flags[:, s].sum()) for s in range(net.n_stages)], mins)


def spiking_map(net: SpikingNetwork, stage: int, image, index: int = 0) -> np.ndarray:
    """Input spike totals of one presentation at ``stage`` (1-based), shaped ``28 x 28 x C``."""
    if not 1 <= stage <= net.n_stages:
        raise ConfigurationError(f"stage must be in [1, {net.n_stages}], got {stage}")
    r = forward(net, np.ravel(image), (PROBE, index), through=stage - 1)[-1]
    totals = r.input.sum(axis=0)
    return totals.reshape(GRID, GRID, -1)


# --- similarity ---------------------------------------------------------------


def _mean_normalized(img, name):
    a = np.asarray(img, dtype=np.float64).ravel()
    if np.any(a < 0):
        raise ConfigurationError(f"{name} has negative entries")
    m = a.mean() if a.size else 0.0
    if m <= 0:
        raise ConfigurationError(f"{name} is all zero; cannot normalize to mean 1")
    return a / m


def sds(img1, img2) -> float:
    """Spatial distribution similarity of two non-negative images, in ``[0, 1]``."""
    a, b = _mean_normalized(img1, "img1"), _mean_normalized(img2, "img2")
    if a.shape != b.shape:
        raise ConfigurationError(f"image sizes differ: {a.size} vs {b.size}")
    return float(1.0 - np.abs(a - b).sum() / (a.sum() + b.sum()))


def msds(set1, set2) -> float:
    """Mean of ``sds`` over every cross pair of the two sets."""
    if len(set1) == 0 or len(set2) == 0:
        raise ConfigurationError("msds needs two non-empty sets")
    A = np.stack([_mean_normalized(x, f"set1[{i}]") for i, x in enumerate(set1)])
    B = np.stack([_mean_normalized(x, f"set2[{j}]") for j, x in enumerate(set2)])
    if A.shape[1] != B.shape[1]:
        raise ConfigurationError(f"image sizes differ: {A.shape[1]} vs {B.shape[1]}")
    dist = np.abs(A[:, None, :] - B[None, :, :]).sum(axis=2)
    total = A.sum(axis=1)[:, None] + B.sum(axis=1)[None, :]
    return float((1.0 - dist / total).mean())


def msds_matrix(maps_by_class: dict) -> tuple:
    """Class-by-class MSDS matrix and the mean of its off-diagonal entries."""
    classes = sorted(maps_by_class)
    M = np.array([[msds(maps_by_class[a], maps_by_class[b]) for b in classes] for a in classes])
    off = M[~np.eye(len(classes), dtype=bool)]
    return M, float(off.mean()) if off.size else float("nan"), classes


def stage_msds(net: SpikingNetwork, images, labels, classes=(0, 1), per_class: int = 100) -> list:
    """Off-diagonal MSDS of the input spiking maps at every stage.

    Images whose map is empty (nothing reached the stage) are skipped; a
    class left with no maps makes that stage's matrix NaN.
    """
    X, y = _flat(images), np.asarray(labels)
    picks = {c: np.flatnonzero(y == c)[:per_class] for c in classes}
    maps = {s: {c: [] for c in classes} for s in range(net.n_stages)}
    for c, idxs in picks.items():
        for idx in idxs:
            res = forward(net, X[idx], (PROBE, int(idx)))
            for s, r in enumerate(res):
                m = r.input.sum(axis=0)
                if m.sum() > 0:
                    maps[s][c].append(m)
    out = []
    for s in range(net.n_stages):
        empty = [c for c in classes if not maps[s][c]]
        if empty:
            log.warning("stage %d: no input spikes for class(es) %s; MSDS undefined", s + 1, empty)
            out.append((s + 1, np.full((len(classes), len(classes)), np.nan), float("nan")))
            continue
        M, off, _ = msds_matrix(maps[s])
        out.append((s + 1, M, off))
    return out
