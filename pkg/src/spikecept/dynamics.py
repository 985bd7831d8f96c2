"""Clock-driven current-based LIF neurons.

State is integrated with forward Euler at a fixed step ``dt`` (ms).  Each
neuron carries a membrane voltage ``v``, a synaptic current ``I`` that decays
with ``tau_I`` and jumps by the weight of every arriving spike, an adaptive
threshold offset ``theta`` (effective threshold ``v_thres + theta``), and the
time until which it is refractory.

One timestep applies, in order: spike delivery (:func:`inject_spikes`),
current decay (:func:`step_current`), voltage integration and firing
(:func:`step_voltage`), threshold adaptation (:func:`step_threshold`), and
finally plasticity.  The fast kernel in :mod:`spikecept.engine` follows the
same order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericError


@dataclass(frozen=True)
class LIFParams:
    """Neuron constants. Voltages in mV, times in ms.

    ``R`` scales the synaptic current in the voltage equation; weights of
    plastic synapses live in ``[0, 1]`` so ``R`` sets how many millivolts a
    unit-weight spike is worth (``R * tau_I / tau_v`` mV in total).
    """

    v_rest: float = -65.0
    v_reset: float = -65.0
    v_thres: float = -52.0
    tau_v: float = 100.0
    tau_I: float = 1.0
    R: float = 90.0
    T_ref: float = 5.0
    theta_plus: float = 0.05
    tau_theta: float = 1e7

    def __post_init__(self):
        for name in ("tau_v", "tau_I", "tau_theta"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.T_ref < 0:
            raise ConfigurationError(f"T_ref must be >= 0, got {self.T_ref}")
        if self.v_reset > self.v_thres:
            raise ConfigurationError("v_reset must not exceed v_thres")
        if self.theta_plus < 0:
            raise ConfigurationError("theta_plus must be >= 0")


# Pooling neurons of a PRA layer: slow synaptic current and a short refractory
# period so one pooled spike can drive a short burst; no homeostasis.
PRA_LIF = LIFParams(tau_I=20.0, T_ref=1.0, theta_plus=0.0)


@dataclass
class NeuronPopulation:
    """A group of LIF units sharing one parameter set.

    ``t`` is the time of the step about to be computed; :func:`step_voltage`
    advances it by ``dt``.
    """

    size: int
    params: LIFParams = field(default_factory=LIFParams)
    v: np.ndarray = None
    I: np.ndarray = None
    theta: np.ndarray = None
    refrac_until: np.ndarray = None
    spiked: np.ndarray = None
    alive: np.ndarray = None
    t: float = 0.0

    def __post_init__(self):
        n = self.size
        if self.v is None:
            self.v = np.full(n, self.params.v_rest)
        if self.I is None:
            self.I = np.zeros(n)
        if self.theta is None:
            self.theta = np.zeros(n)
        if self.refrac_until is None:
            self.refrac_until = np.full(n, -np.inf)
        if self.spiked is None:
            self.spiked = np.zeros(n, dtype=bool)
        if self.alive is None:
            self.alive = np.ones(n, dtype=bool)
        for name in ("v", "I", "theta", "refrac_until", "spiked", "alive"):
            if len(getattr(self, name)) != n:
                raise ConfigurationError(f"{name} has length {len(getattr(self, name))}, expected {n}")

    @property
    def refractory(self) -> np.ndarray:
        return self.t < self.refrac_until


@dataclass
class SpikeRecord:
    """Spikes of one population over one presentation.

    Spikes are stored as parallel ``steps``/``neurons`` arrays sorted by step,
    then by neuron index.
    """

    n_neurons: int
    n_steps: int
    dt: float
    steps: np.ndarray
    neurons: np.ndarray

    @classmethod
    def from_raster(cls, raster: np.ndarray, dt: float) -> "SpikeRecord":
        steps, neurons = np.nonzero(raster)
        return cls(raster.shape[1], raster.shape[0], dt, steps.astype(np.int32), neurons.astype(np.int32))

    @classmethod
    def empty(cls, n_neurons: int, n_steps: int = 0, dt: float = 0.5) -> "SpikeRecord":
        z = np.zeros(0, dtype=np.int32)
        return cls(n_neurons, n_steps, dt, z, z.copy())

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.neurons, minlength=self.n_neurons)

    @property
    def total(self) -> int:
        return int(len(self.neurons))

    @property
    def per_step_spikes(self):
        """List of ``(time_ms, neuron_indices)`` for every step with spikes."""
        if not len(self.steps):
            return []
        cuts = np.flatnonzero(np.diff(self.steps)) + 1
        return [(float(s[0]) * self.dt, n) for s, n in zip(np.split(self.steps, cuts), np.split(self.neurons, cuts))]

    @property
    def sequence(self) -> np.ndarray:
        """Firing neurons in time order; simultaneous spikes by ascending index."""
        return self.neurons

    def to_raster(self) -> np.ndarray:
        raster = np.zeros((self.n_steps, self.n_neurons), dtype=bool)
        raster[self.steps, self.neurons] = True
        return raster


def _check_finite(values, what):
    if not np.isfinite(values).all():
        raise NumericError(what, int(np.flatnonzero(~np.isfinite(values))[0]))


def step_current(pop: NeuronPopulation, dt: float) -> np.ndarray:
    """Decay synaptic currents toward zero (Euler step of the current equation)."""
    if dt <= 0:
        raise ConfigurationError("dt must be > 0")
    pop.I *= 1.0 - dt / pop.params.tau_I
    _check_finite(pop.I, "current")
    return pop.I


def step_voltage(pop: NeuronPopulation, dt: float, repolarize=None) -> np.ndarray:
    """Integrate voltages, emit spikes, reset and start refractory periods.

    ``repolarize(pop, spiked)`` may adjust the post-spike state after the
    standard reset; by default nothing more happens.  Returns the boolean
    spike flags of this step.
    """
    p = pop.params
    if dt <= 0 or dt > p.tau_I:
        raise ConfigurationError(f"dt must be in (0, tau_I={p.tau_I}], got {dt}")
    refr = pop.refractory
    drive = np.where(refr, 0.0, p.R * pop.I)
    pop.v += dt / p.tau_v * (p.v_rest - pop.v + drive)
    _check_finite(pop.v, "voltage")
    spiked = ~refr & pop.alive & (pop.v >= p.v_thres + pop.theta)
    if spiked.any():
        pop.v[spiked] = p.v_reset
        pop.refrac_until[spiked] = pop.t + p.T_ref
    if repolarize is not None:
        repolarize(pop, spiked)
    pop.spiked = spiked
    pop.t += dt
    return spiked


def step_threshold(pop: NeuronPopulation, dt: float) -> np.ndarray:
    """Decay threshold offsets and add ``theta_plus`` for this step's spikes."""
    p = pop.params
    pop.theta *= 1.0 - dt / p.tau_theta
    pop.theta[pop.spiked] += p.theta_plus
    return pop.theta


def inject_spikes(proj, pre_spike_indices, target: NeuronPopulation) -> np.ndarray:
    """Add (excitatory) or subtract (inhibitory) the weights of firing inputs.

    ``proj`` needs ``weights`` of shape ``(n_pre, n_post)`` with zeros where
    there is no synapse, and ``sign`` of +1 or -1.  Refractory targets
    receive nothing.
    """
    idx = np.asarray(pre_spike_indices, dtype=np.intp)
    n_pre = proj.weights.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= n_pre):
        raise IndexError(f"presynaptic index out of range [0, {n_pre})")
    if idx.size == 0:
        return target.I
    delta = proj.sign * proj.weights[idx].sum(axis=0)
    target.I += np.where(target.refractory, 0.0, delta)
    return target.I


def rest_network(populations, T_rest: float = 0.0) -> None:
    """Return populations to quiescence between presentations.

    Voltages go to ``v_rest``, currents to zero, refractory timers and the
    clock are cleared.  Thresholds (and weights, held elsewhere) persist.
    """
    for pop in populations:
        pop.v[:] = pop.params.v_rest
        pop.I[:] = 0.0
        pop.refrac_until[:] = -np.inf
        pop.spiked[:] = False
        pop.t = 0.0
