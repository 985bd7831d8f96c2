"""Network topology: FC/LC pathways, Sp-Inception modules, PRA layers, stacks.

Everything here is a pure description.  Neuron indexing inside a module is
pathway-major, then location (row-major), then feature map.  Input grids are
``28 x 28 x C`` flattened row-major with the channel index fastest, i.e.
input ``(row, col, ch)`` sits at ``(row * 28 + col) * C + ch``.
"""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

log = logging.getLogger(__name__)

GRID = 28
GRID_SIZE = GRID * GRID


@dataclass(frozen=True)
class PathwaySpec:
    """One FC or LC pathway, written ``(k, s) x F`` for LC and ``F`` for FC.

    FC is the special case ``k = 28``; its stride is irrelevant.
    """

    kind: str
    F: int
    k: int = GRID
    s: int = 1
    channels: int | None = None

    def __post_init__(self):
        if self.kind not in ("FC", "LC"):
            raise ConfigurationError(f"pathway kind must be 'FC' or 'LC', got {self.kind!r}")
        if self.kind == "FC" and self.k != GRID:
            object.__setattr__(self, "k", GRID)
        if self.F < 1:
            raise ConfigurationError(f"feature map count F must be >= 1, got {self.F}")
        if not 1 <= self.k <= GRID:
            raise ConfigurationError(f"kernel size k must be in [1, {GRID}], got {self.k}")
        if self.s < 1:
            raise ConfigurationError(f"stride s must be >= 1, got {self.s}")

    @property
    def positions_per_dim(self) -> int:
        if self.kind == "FC":
            return 1
        return (GRID - self.k) // self.s + 1

    @property
    def n_locations(self) -> int:
        return self.positions_per_dim ** 2

    @property
    def n_neurons(self) -> int:
        return self.n_locations * self.F

    def n_plastic(self, channels: int = 1) -> int:
        return self.n_neurons * self.k * self.k * channels

    @property
    def n_inhibitory(self) -> int:
        return self.n_locations * self.F * (self.F - 1)

    def __str__(self):
        if self.kind == "FC":
            return f"FC, F={self.F}"
        return f"LC, ({self.k},{self.s})x{self.F}"


@dataclass(frozen=True)
class ModuleSpec:
    """A Sp-Inception module (or a baseline module with a single pathway)."""

    pathways: tuple
    inhibition_weight: float = 100.0
    balanced: bool = False
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "pathways", tuple(self.pathways))
        if not self.pathways:
            raise ConfigurationError("a module needs at least one pathway")
        if not any(p.kind == "FC" for p in self.pathways) and len(self.pathways) > 1:
            raise ConfigurationError("a multi-pathway module needs at least one FC pathway")
        fs = {p.F for p in self.pathways}
        if self.balanced and len(fs) > 1:
            raise ConfigurationError(f"balanced module requires equal F on all pathways, got {sorted(fs)}")
        if not self.balanced and len(fs) > 1:
            log.warning("naive module %r: pathways have unequal F %s", self.name, sorted(fs))
        if self.inhibition_weight < 0:
            raise ConfigurationError("inhibition_weight is a magnitude and must be >= 0")

    @property
    def n_neurons(self) -> int:
        return sum(p.n_neurons for p in self.pathways)


@dataclass(frozen=True)
class PRASpec:
    """Pooling-Reshape-Activate layer feeding a ``28 x 28 x channels`` grid."""

    channels: int = 2
    w_p_init: float = 2.0
    w_p_step: float = 0.1
    w_p_max: float = 20.0

    def __post_init__(self):
        if self.channels < 1:
            raise ConfigurationError("PRA channels must be >= 1")
        if not 0 < self.w_p_init <= self.w_p_max:
            raise ConfigurationError("need 0 < w_p_init <= w_p_max")
        if self.w_p_step <= 0:
            raise ConfigurationError("w_p_step must be > 0")


@dataclass(frozen=True)
class StageSpec:
    module: ModuleSpec
    pra: PRASpec | None = None


@dataclass(frozen=True)
class NetworkSpec:
    stages: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if self.stages and self.stages[0].pra is not None:
            raise ConfigurationError("stage 1 is fed by the encoder and takes no PRA layer")
        for i, st in enumerate(self.stages[1:], start=2):
            if st.pra is None:
                raise ConfigurationError(f"stage {i} needs a PRA layer")


@dataclass(frozen=True)
class NetworkStats:
    n_neuron: int
    n_synapse: int
    stages: tuple = ()

    def cumulative(self):
        """``(n_neuron, n_synapse)`` after stacking each stage."""
        out, n, s = [], 0, 0
        for a, b in self.stages:
            n, s = n + a, s + b
            out.append((n, s))
        return out


# --- built objects -----------------------------------------------------------


@dataclass(frozen=True)
class Pathway:
    spec: PathwaySpec
    channels: int
    receptive_fields: np.ndarray  # (n_locations, k*k*channels) input indices

    @property
    def n_neurons(self) -> int:
        return self.spec.n_neurons

    @property
    def n_locations(self) -> int:
        return self.spec.n_locations

    @property
    def n_plastic(self) -> int:
        return self.spec.n_plastic(self.channels)

    def neuron_rf(self, j: int) -> np.ndarray:
        return self.receptive_fields[j // self.spec.F]


def build_pathway(spec: PathwaySpec, channels: int = 1) -> Pathway:
    """Lay out the receptive fields of a pathway over a ``28 x 28 x C`` input."""
    if spec.channels is not None and spec.channels != channels:
        raise ConfigurationError(f"pathway {spec} declares {spec.channels} input channels, module input has {channels}")
    k, s, n = spec.k, spec.s, spec.positions_per_dim
    dy, dx, ch = np.meshgrid(np.arange(k), np.arange(k), np.arange(channels), indexing="ij")
    local = (dy * GRID + dx).ravel() * channels + ch.ravel()
    origins = [(r * s * GRID + c * s) * channels for r in range(n) for c in range(n)]
    rf = np.array([o + local for o in origins], dtype=np.int64)
    return Pathway(spec, channels, rf)


@dataclass(frozen=True)
class Inhibition:
    """Fixed all-to-all inhibition inside each location of a pathway."""

    group_sizes: tuple
    weight: float

    @property
    def n_synapses(self) -> int:
        return sum(g * (g - 1) for g in self.group_sizes)


def build_inhibition(pathway: Pathway, weight: float = 100.0) -> Inhibition:
    return Inhibition((pathway.spec.F,) * pathway.n_locations, weight)


@dataclass(frozen=True, eq=False)
class SpInceptionModule:
    spec: ModuleSpec
    channels: int
    pathways: tuple
    inhibitions: tuple

    @property
    def n_inputs(self) -> int:
        return GRID_SIZE * self.channels

    @property
    def n_neurons(self) -> int:
        return sum(p.n_neurons for p in self.pathways)

    @property
    def offsets(self) -> np.ndarray:
        return np.cumsum([0] + [p.n_neurons for p in self.pathways])

    @property
    def n_plastic(self) -> int:
        return sum(p.n_plastic for p in self.pathways)

    @property
    def n_inhibitory(self) -> int:
        return sum(h.n_synapses for h in self.inhibitions)

    @cached_property
    def groups(self) -> np.ndarray:
        """Competition group (pathway, location) of every neuron."""
        out, g = [], 0
        for p in self.pathways:
            out.append(g + np.repeat(np.arange(p.n_locations), p.spec.F))
            g += p.n_locations
        return np.concatenate(out)

    @cached_property
    def pathway_of(self) -> np.ndarray:
        return np.concatenate([np.full(p.n_neurons, i) for i, p in enumerate(self.pathways)])

    def mask(self) -> np.ndarray:
        """Dense ``(n_inputs, n_neurons)`` connectivity of the plastic synapses."""
        m = np.zeros((self.n_inputs, self.n_neurons), dtype=bool)
        for p, off in zip(self.pathways, self.offsets):
            F = p.spec.F
            for loc, rf in enumerate(p.receptive_fields):
                c0 = off + loc * F
                m[rf, c0:c0 + F] = True
        return m


def assemble_module(spec: ModuleSpec, channels: int = 1) -> SpInceptionModule:
    pathways = tuple(build_pathway(p, channels) for p in spec.pathways)
    inhibitions = tuple(build_inhibition(p, spec.inhibition_weight) for p in pathways)
    return SpInceptionModule(spec, channels, pathways, inhibitions)


@dataclass(frozen=True)
class PRALayer:
    spec: PRASpec
    n_upstream: int

    @property
    def channels(self) -> int:
        return self.spec.channels

    @property
    def n_neurons(self) -> int:
        return GRID_SIZE * self.spec.channels

    @property
    def pool_factor(self) -> int:
        return self.n_upstream // self.n_neurons

    @property
    def n_synapses(self) -> int:
        return self.n_upstream

    def mask(self) -> np.ndarray:
        """Upstream unit ``u`` feeds PRA neuron ``u // pool_factor``."""
        m = np.zeros((self.n_upstream, self.n_neurons), dtype=bool)
        m[np.arange(self.n_upstream), np.arange(self.n_upstream) // self.pool_factor] = True
        return m


def build_pra(prev_output_size: int, channels: int = 2, spec: PRASpec | None = None) -> PRALayer:
    spec = spec or PRASpec(channels=channels)
    if spec.channels != channels:
        spec = PRASpec(channels, spec.w_p_init, spec.w_p_step, spec.w_p_max)
    unit = GRID_SIZE * channels
    if prev_output_size < unit or prev_output_size % unit:
        valid = [c for c in range(1, prev_output_size // GRID_SIZE + 1) if prev_output_size % (GRID_SIZE * c) == 0]
        raise ConfigurationError(
            f"upstream size {prev_output_size} is not a multiple of 784*C for C={channels}; valid C: {valid}"
        )
    return PRALayer(spec, prev_output_size)


@dataclass(frozen=True, eq=False)
class Network:
    spec: NetworkSpec
    modules: tuple
    pras: tuple

    @property
    def n_stages(self) -> int:
        return len(self.modules)


def stack_modules(spec: NetworkSpec) -> Network:
    modules, pras = [], []
    for i, st in enumerate(spec.stages):
        if st.pra is None:
            pra, channels = None, 1
        else:
            pra = build_pra(modules[-1].n_neurons, st.pra.channels, st.pra)
            channels = pra.channels
        mod = assemble_module(st.module, channels)
        if pra is not None and pra.n_neurons != mod.n_inputs:
            raise ConfigurationError(f"stage {i + 1}: PRA emits {pra.n_neurons} units, module expects {mod.n_inputs}")
        modules.append(mod)
        pras.append(pra)
    return Network(spec, tuple(modules), tuple(pras))


def count_resources(network) -> NetworkStats:
    """Neuron and synapse budget.

    Neurons are competition-layer neurons only; synapses are plastic
    feedforward + fixed inhibitory + PRA pooling.  Accepts a
    :class:`NetworkSpec`, a built :class:`Network`, or a simulation object
    with live ``layers`` (then ablated neurons and synapses are excluded).
    """
    if isinstance(network, NetworkSpec):
        network = stack_modules(network)
    if hasattr(network, "layers"):
        return _count_live(network)
    per_stage = []
    for mod, pra in zip(network.modules, network.pras):
        syn = mod.n_plastic + mod.n_inhibitory + (pra.n_synapses if pra else 0)
        per_stage.append((mod.n_neurons, syn))
    return NetworkStats(sum(a for a, _ in per_stage), sum(b for _, b in per_stage), tuple(per_stage))


def _count_live(sim) -> NetworkStats:
    per_stage = []
    for layer, pra in zip(sim.layers, sim.pra_layers):
        alive = layer.alive
        sizes = np.bincount(layer.groups[alive], minlength=layer.n_groups)
        inh = int((sizes * (sizes - 1)).sum())
        syn = int(layer.mask.sum()) + inh + (int(pra.mask.sum()) if pra is not None else 0)
        per_stage.append((int(alive.sum()), syn))
    return NetworkStats(sum(a for a, _ in per_stage), sum(b for _, b in per_stage), tuple(per_stage))


def ablate(sim, rho_delete: float, mode: str = "neurons", seed: int = 0):
    """Return a damaged copy of a simulation network.

    ``mode="neurons"`` removes each competition neuron with probability
    ``rho_delete`` together with all its synapses; ``mode="synapses"``
    removes each plastic synapse with that probability.
    """
    if not 0.0 <= rho_delete <= 1.0:
        raise ConfigurationError(f"rho_delete must be in [0, 1], got {rho_delete}")
    if mode not in ("neurons", "synapses"):
        raise ConfigurationError(f"mode must be 'neurons' or 'synapses', got {mode!r}")
    out = copy.deepcopy(sim)
    rng = np.random.default_rng(seed)
    for layer in out.layers:
        if mode == "neurons":
            dead = rng.random(layer.n_out) < rho_delete
            layer.alive &= ~dead
            layer.mask[:, dead] = False
        else:
            hit = rng.random(layer.mask.shape) < rho_delete
            layer.mask &= ~hit
        layer.weights *= layer.mask
        layer.refresh()
    return out
