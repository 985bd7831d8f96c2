"""Spiking Inception networks: LIF simulation, STDP competitive learning, PRA stacking."""
from .checkpoint import load_checkpoint, save_checkpoint
from .codec import (
    BigramModel,
    EncoderState,
    LabelAssignment,
    assign_labels,
    encode_image,
    fit_bigram,
    predict_bigram,
    predict_vfa,
    predict_vote,
)
from .config import PRESETS, load_config, parse_network_config
from .datasets import Dataset, load_mnist_idx, load_split
from .dynamics import (
    LIFParams,
    NeuronPopulation,
    SpikeRecord,
    inject_spikes,
    rest_network,
    step_current,
    step_threshold,
    step_voltage,
)
from .engine import SimParams, SpikingNetwork, adaptive_present
from .errors import CheckpointError, ConfigurationError, IDXFormatError, NumericError, SpikeceptError
from .estimator import SpikingInceptionClassifier
from .harness import (
    TrainConfig,
    evaluate,
    measure_intensity,
    msds,
    robustness_sweep,
    sds,
    spiking_map,
    train,
)
from .metrics import emit_metrics
from .plasticity import PlasticityParams, Projection, normalize_incoming, on_post_spike, on_pre_spike
from .topology import (
    ModuleSpec,
    NetworkSpec,
    PathwaySpec,
    PRASpec,
    StageSpec,
    ablate,
    assemble_module,
    build_inhibition,
    build_pathway,
    build_pra,
    count_resources,
    stack_modules,
)

__version__ = "0.1.0"

__all__ = [
    "ablate",
    "adaptive_present",
    "assemble_module",
    "assign_labels",
    "BigramModel",
    "build_inhibition",
    "build_pathway",
    "build_pra",
    "CheckpointError",
    "ConfigurationError",
    "count_resources",
    "Dataset",
    "emit_metrics",
    "encode_image",
    "EncoderState",
    "evaluate",
    "fit_bigram",
    "IDXFormatError",
    "inject_spikes",
    "LabelAssignment",
    "LIFParams",
    "load_checkpoint",
    "load_config",
    "load_mnist_idx",
    "load_split",
    "measure_intensity",
    "ModuleSpec",
    "msds",
    "NetworkSpec",
    "NeuronPopulation",
    "normalize_incoming",
    "NumericError",
    "on_post_spike",
    "on_pre_spike",
    "parse_network_config",
    "PathwaySpec",
    "PlasticityParams",
    "PRASpec",
    "predict_bigram",
    "predict_vfa",
    "predict_vote",
    "PRESETS",
    "Projection",
    "rest_network",
    "robustness_sweep",
    "save_checkpoint",
    "sds",
    "SimParams",
    "SpikeceptError",
    "SpikeRecord",
    "spiking_map",
    "SpikingInceptionClassifier",
    "SpikingNetwork",
    "stack_modules",
    "StageSpec",
    "step_current",
    "step_threshold",
    "step_voltage",
    "train",
    "TrainConfig",
]
