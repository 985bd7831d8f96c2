"""Compiled simulation of competition layers and PRA layers.

A :class:`Layer` is one population fed by one input grid: plastic
feedforward weights on a sparse mask, fixed lateral inhibition between
neurons of the same competition group, homeostatic thresholds and STDP.
Its hot loop is a numba kernel that follows the same step order as the
reference operations in :mod:`spikecept.dynamics` and
:mod:`spikecept.plasticity`; :func:`reference_present` runs the same
presentation through those operations so the two can be cross-checked.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .codec import EncoderState, encode_image
from .dynamics import PRA_LIF, LIFParams, NeuronPopulation, inject_spikes, step_current, step_threshold, step_voltage
from .errors import ConfigurationError, NumericError
from .plasticity import (
    INHIBITORY,
    PlasticityParams,
    Projection,
    decay_traces,
    normalize_incoming,
    on_post_spike,
    on_pre_spike,
    random_projection,
)
from .topology import NetworkSpec, stack_modules

# rng stream purposes
INIT, TRAIN, REPLAY, LABEL, TEST, PROBE = range(6)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one (purpose, stage, index, attempt) key."""
    return np.random.default_rng([int(seed), *map(int, key)])


@njit(cache=True)
def _present(S, W, pre_ptr, pre_idx, post_ptr, post_idx, group, n_groups, alive,
             v, I, theta, refr_until, prev, xpre, xpost, t0, p, learn, adapt, raster):
    dt, v_rest, v_reset, v_thres, tau_v, tau_I = p[0], p[1], p[2], p[3], p[4], p[5]
    R, T_ref, th_plus, tau_th, eta_post, eta_pre = p[6], p[7], p[8], p[9], p[10], p[11]
    dpre, dpost = np.exp(-dt / p[12]), np.exp(-dt / p[13])
    wmin, wmax, winh = p[14], p[15], p[16]
    steps, nin = S.shape
    n = v.shape[0]
    gcount = np.zeros(n_groups)
    ci = 1.0 - dt / tau_I
    cv = dt / tau_v
    cth = 1.0 - dt / tau_th
    for s in range(steps):
        t = t0 + s * dt
        # deliver last step's lateral spikes and this step's input spikes
        if winh != 0.0:
            for g in range(n_groups):
                gcount[g] = 0.0
            for j in range(n):
                if prev[j]:
                    gcount[group[j]] += 1.0
            for j in range(n):
                if t >= refr_until[j]:
                    k = gcount[group[j]] - (1.0 if prev[j] else 0.0)
                    if k > 0.0:
                        I[j] -= winh * k
        for i in range(nin):
            if S[s, i]:
                for q in range(pre_ptr[i], pre_ptr[i + 1]):
                    j = pre_idx[q]
                    if t >= refr_until[j]:
                        I[j] += W[i, j]
        # current, voltage, threshold
        for j in range(n):
            I[j] *= ci
            sp = False
            if t < refr_until[j]:
                v[j] += cv * (v_rest - v[j])
            else:
                v[j] += cv * (v_rest - v[j] + R * I[j])
                if not np.isfinite(v[j]) or not np.isfinite(I[j]):
                    return j
                if alive[j] and v[j] >= v_thres + theta[j]:
                    sp = True
                    v[j] = v_reset
                    refr_until[j] = t + T_ref
            if adapt:
                theta[j] *= cth
                if sp:
                    theta[j] += th_plus
            prev[j] = sp
            raster[s, j] = sp
        # plasticity: depression on input spikes, then potentiation on output spikes
        for i in range(nin):
            xpre[i] *= dpre
        for j in range(n):
            xpost[j] *= dpost
        for i in range(nin):
            if S[s, i]:
                if learn:
                    for q in range(pre_ptr[i], pre_ptr[i + 1]):
                        j = pre_idx[q]
                        w = W[i, j] - eta_pre * xpost[j]
                        W[i, j] = wmin if w < wmin else (wmax if w > wmax else w)
                xpre[i] = 1.0
        for j in range(n):
            if prev[j]:
                if learn:
                    for q in range(post_ptr[j], post_ptr[j + 1]):
                        i = post_idx[q]
                        w = W[i, j] + eta_post * xpre[i]
                        W[i, j] = wmin if w < wmin else (wmax if w > wmax else w)
                xpost[j] = 1.0
    return -1


def _csr(mask):
    counts = mask.sum(axis=1)
    ptr = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr, np.nonzero(mask)[1].astype(np.int64)


class Layer:
    """One simulated population with its incoming projection.

    ``groups[j]`` is the competition group of neuron ``j``; neurons in the
    same group inhibit each other with strength ``w_inh`` (no self-inhibition).
    """

    def __init__(self, proj: Projection, groups, lif: LIFParams, w_inh: float = 0.0, name: str = ""):
        self.proj = proj
        self.groups = np.ascontiguousarray(groups, dtype=np.int64)
        if len(self.groups) != proj.n_post:
            raise ConfigurationError("one competition group per neuron required")
        self.n_groups = int(self.groups.max()) + 1 if len(self.groups) else 0
        self.lif = lif
        self.w_inh = float(w_inh)
        self.name = name
        self.theta = np.zeros(self.n_out)
        self.alive = np.ones(self.n_out, dtype=bool)
        self.refresh()
        self.rest()

    # storage views
    @property
    def weights(self) -> np.ndarray:
        return self.proj.weights

    @weights.setter
    def weights(self, value):
        self.proj.weights = value

    @property
    def mask(self) -> np.ndarray:
        return self.proj.mask

    @mask.setter
    def mask(self, value):
        self.proj.mask = value

    @property
    def n_in(self) -> int:
        return self.proj.n_pre

    @property
    def n_out(self) -> int:
        return self.proj.n_post

    @property
    def learning(self) -> bool:
        return self.proj.learning

    def refresh(self):
        """Rebuild the sparse index caches after the mask changed."""
        m = np.ascontiguousarray(self.proj.mask, dtype=bool)
        self._pre_ptr, self._pre_idx = _csr(m)
        self._post_ptr, self._post_idx = _csr(m.T)

    def rest(self):
        n = self.n_out
        self.v = np.full(n, self.lif.v_rest)
        self.I = np.zeros(n)
        self.refrac_until = np.full(n, -np.inf)
        self.prev = np.zeros(n, dtype=bool)
        self.x_pre = np.zeros(self.n_in)
        self.x_post = np.zeros(n)
        self.t = 0.0

    def _param_vector(self, dt):
        a, b = self.lif, self.proj.params
        return np.array([dt, a.v_rest, a.v_reset, a.v_thres, a.tau_v, a.tau_I, a.R, a.T_ref, a.theta_plus,
                         a.tau_theta, b.eta_post, b.eta_pre, b.tau_pre, b.tau_post, b.w_min, b.w_max, self.w_inh])

    def run(self, S, dt: float = 0.5, learn: bool = False, adapt: bool = False) -> np.ndarray:
        """Advance through the input raster ``S`` (steps, n_in); return the output raster."""
        if dt <= 0 or dt > self.lif.tau_I:
            raise ConfigurationError(f"dt must be in (0, tau_I={self.lif.tau_I}], got {dt}")
        S = np.ascontiguousarray(S, dtype=bool)
        if S.ndim != 2 or S.shape[1] != self.n_in:
            raise ConfigurationError(f"input raster must have shape (steps, {self.n_in}), got {S.shape}")
        learn = bool(learn and self.learning)
        raster = np.zeros((S.shape[0], self.n_out), dtype=bool)
        if not self.weights.flags.c_contiguous:
            self.proj.weights = np.ascontiguousarray(self.weights)
        bad = _present(S, self.proj.weights, self._pre_ptr, self._pre_idx, self._post_ptr, self._post_idx,
                       self.groups, max(self.n_groups, 1), self.alive, self.v, self.I, self.theta,
                       self.refrac_until, self.prev, self.x_pre, self.x_post, self.t, self._param_vector(dt),
                       learn, bool(adapt), raster)
        if bad >= 0:
            raise NumericError("voltage" if not np.isfinite(self.v[bad]) else "current", int(bad))
        self.t += S.shape[0] * dt
        return raster

    def normalize(self):
        normalize_incoming(self.proj)

    def set_pool_weight(self, w_p: float):
        self.proj.weights = np.ascontiguousarray(w_p * self.proj.mask, dtype=np.float64)


def reference_present(layer: Layer, S, dt: float = 0.5, learn: bool = False, adapt: bool = False):
    """Run ``S`` through a copy of ``layer`` with the step-by-step operations.

    Returns ``(raster, final_layer_copy)``.  The input layer is untouched.
    """
    out = copy.deepcopy(layer)
    pop = NeuronPopulation(out.n_out, out.lif, v=out.v, I=out.I, theta=out.theta,
                           refrac_until=out.refrac_until, alive=out.alive, t=out.t)
    pop.spiked = out.prev.copy()
    ff = out.proj
    ff.frozen = not learn
    ff.t = out.t
    with np.errstate(divide="ignore"):
        ff.last_pre = np.where(out.x_pre > 0, out.t + ff.params.tau_pre * np.log(out.x_pre), -np.inf)
        ff.last_post = np.where(out.x_post > 0, out.t + ff.params.tau_post * np.log(out.x_post), -np.inf)
    same = (out.groups[:, None] == out.groups[None, :]) & ~np.eye(out.n_out, dtype=bool)
    inh = Projection(out.w_inh * same, same, sign=INHIBITORY, plastic=False)
    S = np.asarray(S, dtype=bool)
    raster = np.zeros((len(S), out.n_out), dtype=bool)
    for s in range(len(S)):
        inject_spikes(inh, np.flatnonzero(pop.spiked), pop)
        inject_spikes(ff, np.flatnonzero(S[s]), pop)
        step_current(pop, dt)
        spiked = step_voltage(pop, dt)
        if adapt:
            step_threshold(pop, dt)
        decay_traces(ff, dt)
        on_pre_spike(ff, np.flatnonzero(S[s]))
        on_post_spike(ff, np.flatnonzero(spiked))
        raster[s] = spiked
    ff.frozen = layer.proj.frozen
    out.v, out.I, out.theta, out.refrac_until, out.t = pop.v, pop.I, pop.theta, pop.refrac_until, pop.t
    out.prev = pop.spiked.copy()
    out.x_pre, out.x_post = ff.x_pre, ff.x_post
    return raster, out


# --- networks ----------------------------------------------------------------


@dataclass(frozen=True)
class SimParams:
    """Simulation hyperparameters shared by every stage of a network."""

    lif: LIFParams = field(default_factory=LIFParams)
    pra_lif: LIFParams = PRA_LIF
    plasticity: PlasticityParams = field(default_factory=PlasticityParams)
    dt: float = 0.5
    T_present: float = 350.0
    S_min: int = 10
    lam: float = 0.25
    lam_step: float = 32.0 / 255.0
    lam_max: float = 1.0

    def __post_init__(self):
        if self.dt <= 0 or self.T_present <= 0:
            raise ConfigurationError("dt and T_present must be > 0")
        if self.S_min < 0:
            raise ConfigurationError("S_min must be >= 0")
        EncoderState(self.lam, self.lam_step, self.lam_max)

    @property
    def n_steps(self) -> int:
        return int(round(self.T_present / self.dt))


@dataclass
class StageResult:
    input: np.ndarray  # raster entering the stage's module (post-PRA for later stages)
    output: np.ndarray
    retries: int = 0
    flagged: bool = False
    upstream: np.ndarray | None = None  # raster entering the PRA layer


class SpikingNetwork:
    """Runtime state of a stacked network: layers, PRA layers, adaptive gains."""

    def __init__(self, spec: NetworkSpec, params: SimParams | None = None, seed: int = 0):
        self.spec = spec
        self.params = params or SimParams()
        self.seed = int(seed)
        self.built = stack_modules(spec)
        self.layers, self.pra_layers, self.w_p = [], [], []
        for s, (mod, pra) in enumerate(zip(self.built.modules, self.built.pras)):
            proj = random_projection(mod.mask(), stream(seed, INIT, s), self.params.plasticity)
            layer = Layer(proj, mod.groups, self.params.lif, mod.spec.inhibition_weight, name=f"stage{s + 1}")
            layer.normalize()
            self.layers.append(layer)
            if pra is None:
                self.pra_layers.append(None)
                self.w_p.append(None)
            else:
                pm = pra.mask()
                pl = Layer(Projection(pm * pra.spec.w_p_init, pm, plastic=False), np.arange(pra.n_neurons),
                           self.params.pra_lif, 0.0, name=f"pra{s + 1}")
                self.pra_layers.append(pl)
                self.w_p.append(float(pra.spec.w_p_init))
        self.encoder = EncoderState(self.params.lam, self.params.lam_step, self.params.lam_max)

    @property
    def n_stages(self) -> int:
        return len(self.layers)

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].n_out

    def pra_spec(self, stage: int):
        return self.built.pras[stage].spec

    def freeze(self, stage: int | None = None):
        for s in range(self.n_stages) if stage is None else [stage]:
            self.layers[s].proj.frozen = True

    def unfreeze(self, stage: int):
        self.layers[stage].proj.frozen = False


def adaptive_present(net: SpikingNetwork, stage: int, source, key, learn: bool = False,
                     persist: bool = False) -> StageResult:
    """Present one item to ``stage``, re-presenting with more drive while it is too quiet.

    ``source`` is the image (stage 0) or the upstream output raster.  At
    stage 0 the encoder rate grows by ``lam_step`` per retry; later stages
    raise the PRA weight ``w_p``.  With ``persist`` the raised value is
    written back to the network.  ``key`` seeds the encoding streams.
    """
    P = net.params
    layer = net.layers[stage]
    S_min = P.S_min
    retries, flagged = 0, False
    if stage == 0:
        lam = net.encoder.lam
        while True:
            S = encode_image(source, lam, P.T_present, P.dt, stream(net.seed, *key, retries))
            layer.rest()
            out = layer.run(S, P.dt, learn=learn, adapt=learn)
            if out.sum() >= S_min:
                break
            if lam >= P.lam_max:
                flagged = True
                break
            lam = min(lam + P.lam_step, P.lam_max)
            retries += 1
        if persist:
            net.encoder.lam = lam
        return StageResult(S, out, retries, flagged)

    pra, ps = net.pra_layers[stage], net.pra_spec(stage)
    w = net.w_p[stage]
    upstream = np.asarray(source, dtype=bool)
    while True:
        pra.set_pool_weight(w)
        pra.rest()
        S = pra.run(upstream, P.dt)
        layer.rest()
        out = layer.run(S, P.dt, learn=learn, adapt=learn)
        if out.sum() >= S_min and S.sum() >= S_min:
            break
        if w >= ps.w_p_max:
            flagged = True
            break
        w = min(w + ps.w_p_step, ps.w_p_max)
        retries += 1
    if persist:
        net.w_p[stage] = w
    pra.set_pool_weight(net.w_p[stage])
    return StageResult(S, out, retries, flagged, upstream)


def forward(net: SpikingNetwork, image, key, through: int | None = None) -> list:
    """Frozen pass of one image through stages ``0..through``; adaptive gains stay local."""
    through = net.n_stages - 1 if through is None else through
    results, src = [], image
    for s in range(through + 1):
        r = adaptive_present(net, s, src, key)
        results.append(r)
        src = r.output
    return results
