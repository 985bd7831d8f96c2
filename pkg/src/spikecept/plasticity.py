"""Trace-based pair STDP on plastic excitatory projections.

A postsynaptic spike potentiates every incoming synapse by
``eta_post * x_pre``; a presynaptic spike depresses every outgoing synapse by
``eta_pre * x_post``.  Traces jump to 1 on a spike and decay exponentially.

Traces are kept event-driven: a projection stores the time of each neuron's
last spike and evaluates ``exp(-(t - t_last) / tau)`` on demand, so nothing is
touched on steps without spikes.  :func:`decay_traces` just advances the
projection clock.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

log = logging.getLogger(__name__)

EXCITATORY = 1
INHIBITORY = -1


@dataclass(frozen=True)
class PlasticityParams:
    eta_post: float = 0.01
    eta_pre: float = 0.0001
    tau_pre: float = 20.0
    tau_post: float = 20.0
    w_min: float = 0.0
    w_max: float = 1.0
    # incoming weight sum target = c_norm_per_input * fan-in
    c_norm_per_input: float = 0.1
    w_init_max: float = 0.3

    def __post_init__(self):
        if self.eta_post < 10 * self.eta_pre:
            raise ConfigurationError("eta_post must be at least 10 * eta_pre")
        if not 0 <= self.w_min < self.w_max:
            raise ConfigurationError("need 0 <= w_min < w_max")
        if self.tau_pre <= 0 or self.tau_post <= 0:
            raise ConfigurationError("trace time constants must be > 0")
        if self.c_norm_per_input < 0:
            raise ConfigurationError("c_norm_per_input must be >= 0")


@dataclass
class Projection:
    """Directed synapse group with dense ``(n_pre, n_post)`` weight storage.

    ``mask`` marks existing synapses; absent synapses hold weight 0 and are
    never updated.  ``t`` is the projection clock in ms.
    """

    weights: np.ndarray
    mask: np.ndarray
    sign: int = EXCITATORY
    plastic: bool = True
    params: PlasticityParams = field(default_factory=PlasticityParams)
    frozen: bool = False
    t: float = 0.0
    last_pre: np.ndarray = None
    last_post: np.ndarray = None
    c_norm: np.ndarray = None

    def __post_init__(self):
        if self.weights.shape != self.mask.shape:
            raise ConfigurationError("weights and mask shapes differ")
        if self.sign not in (EXCITATORY, INHIBITORY):
            raise ConfigurationError("sign must be +1 or -1")
        if self.plastic and self.sign != EXCITATORY:
            raise ConfigurationError("only excitatory projections can be plastic")
        n_pre, n_post = self.weights.shape
        if self.last_pre is None:
            self.last_pre = np.full(n_pre, -np.inf)
        if self.last_post is None:
            self.last_post = np.full(n_post, -np.inf)
        if self.c_norm is None:
            self.c_norm = self.params.c_norm_per_input * self.mask.sum(axis=0)

    @property
    def n_pre(self) -> int:
        return self.weights.shape[0]

    @property
    def n_post(self) -> int:
        return self.weights.shape[1]

    @property
    def n_synapses(self) -> int:
        return int(self.mask.sum())

    @property
    def x_pre(self) -> np.ndarray:
        return np.exp((self.last_pre - self.t) / self.params.tau_pre)

    @property
    def x_post(self) -> np.ndarray:
        return np.exp((self.last_post - self.t) / self.params.tau_post)

    @property
    def learning(self) -> bool:
        return self.plastic and not self.frozen


def random_projection(mask, rng, params=None) -> Projection:
    """Plastic projection with weights uniform in ``[0, w_init_max]`` on ``mask``."""
    params = params or PlasticityParams()
    w = rng.uniform(0.0, params.w_init_max, size=mask.shape) * mask
    return Projection(w, mask.copy(), params=params)


def decay_traces(proj: Projection, dt: float) -> None:
    """Let both trace populations decay for ``dt`` ms."""
    proj.t += dt


def on_pre_spike(proj: Projection, pre_index) -> None:
    """Depress outgoing synapses of firing inputs, then reset their traces.

    ``pre_index`` may be a single index or an array of distinct indices.
    """
    idx = np.atleast_1d(np.asarray(pre_index, dtype=np.intp))
    if proj.learning and idx.size:
        p = proj.params
        rows = proj.weights[idx] - p.eta_pre * proj.x_post * proj.mask[idx]
        proj.weights[idx] = np.clip(rows, p.w_min, p.w_max) * proj.mask[idx]
    proj.last_pre[idx] = proj.t


def on_post_spike(proj: Projection, post_index) -> None:
    """Potentiate incoming synapses of firing neurons, then reset their traces."""
    idx = np.atleast_1d(np.asarray(post_index, dtype=np.intp))
    if proj.learning and idx.size:
        p = proj.params
        cols = proj.weights[:, idx] + p.eta_post * proj.x_pre[:, None] * proj.mask[:, idx]
        proj.weights[:, idx] = np.clip(cols, p.w_min, p.w_max) * proj.mask[:, idx]
    proj.last_post[idx] = proj.t


def normalize_incoming(proj: Projection, post_index=None) -> None:
    """Rescale each neuron's incoming weights so they sum to its ``c_norm``.

    Neurons whose incoming weights are all zero are left alone.
    """
    if not proj.learning:
        return
    cols = np.arange(proj.n_post) if post_index is None else np.atleast_1d(post_index)
    sums = proj.weights[:, cols].sum(axis=0)
    zero = sums <= 0
    if zero.any():
        log.warning("normalize_incoming: %d neuron(s) with zero incoming weight left unchanged", int(zero.sum()))
    scale = np.where(zero, 1.0, proj.c_norm[cols] / np.where(zero, 1.0, sums))
    proj.weights[:, cols] = (
        np.clip(proj.weights[:, cols] * scale, proj.params.w_min, proj.params.w_max) * proj.mask[:, cols]
    )


def freeze(proj: Projection) -> None:
    proj.frozen = True


def unfreeze(proj: Projection) -> None:
    proj.frozen = False
