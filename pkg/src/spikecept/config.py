"""JSON network/training configuration: schema, parsing, presets, serialization."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, fields

import jsonschema

from .dynamics import LIFParams
from .engine import SimParams
from .errors import ConfigurationError
from .harness import TrainConfig
from .plasticity import PlasticityParams
from .topology import ModuleSpec, NetworkSpec, PathwaySpec, PRASpec, StageSpec, stack_modules


def _props(cls, kind="number"):
    return {f.name: {"type": kind} for f in fields(cls)}


_PATHWAY = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "F"],
    "properties": {
        "kind": {"enum": ["FC", "LC"]},
        "F": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1, "maximum": 28},
        "s": {"type": "integer", "minimum": 1},
        "repeat": {"type": "integer", "minimum": 1},
    },
}

_MODULE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["pathways"],
    "properties": {
        "pathways": {"type": "array", "minItems": 1, "items": _PATHWAY},
        "inhibition_weight": {"type": "number", "minimum": 0},
        "balanced": {"type": "boolean"},
        "name": {"type": "string"},
    },
}

_PRA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "channels": {"type": "integer", "minimum": 1},
        "w_p_init": {"type": "number", "exclusiveMinimum": 0},
        "w_p_step": {"type": "number", "exclusiveMinimum": 0},
        "w_p_max": {"type": "number", "exclusiveMinimum": 0},
    },
}


def _obj(props):
    return {"type": "object", "additionalProperties": False, "properties": props}


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "spikecept network configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "preset": {"type": "string"},
        "stages": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["module"],
                "properties": {"module": _MODULE, "pra": _PRA},
            },
        },
        "train": _obj({
            "iterations": {"type": "integer", "minimum": 1},
            "checkpoint_every": {"type": "integer", "minimum": 0},
            "seed": {"type": "integer", "minimum": 0},
            "stage_schedule": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            "label_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "label_min_per_class": {"type": "integer", "minimum": 1},
        }),
        "neuron": _obj(_props(LIFParams)),
        "pra_neuron": _obj(_props(LIFParams)),
        "plasticity": _obj(_props(PlasticityParams)),
        "encoder": _obj({
            "lambda": {"type": "number", "exclusiveMinimum": 0},
            "lambda_step": {"type": "number", "exclusiveMinimum": 0},
            "lambda_max": {"type": "number", "exclusiveMinimum": 0},
        }),
        "simulation": _obj({
            "dt": {"type": "number", "exclusiveMinimum": 0},
            "T_present": {"type": "number", "exclusiveMinimum": 0},
            "S_min": {"type": "integer", "minimum": 0},
        }),
    },
    "oneOf": [{"required": ["preset"], "not": {"required": ["stages"]}},
              {"required": ["stages"], "not": {"required": ["preset"]}}],
}


# --- presets -------------------------------------------------------------------


def _fc(F, repeat=1):
    return {"kind": "FC", "F": F, **({"repeat": repeat} if repeat > 1 else {})}


def _lc(k, s, F, repeat=1):
    return {"kind": "LC", "k": k, "s": s, "F": F, **({"repeat": repeat} if repeat > 1 else {})}


def _sp(F, wide=False, extra=False):
    if wide:
        paths = [_fc(F, 4), _lc(24, 4, F, 2), _lc(16, 6, F)]
    else:
        paths = [_fc(F), _lc(24, 4, F), _lc(16, 6, F)]
    if extra:
        paths.append(_lc(10, 6, F))
    return {"pathways": paths, "balanced": True}


TABLE_I = {
    "baseline-fc-I": {"pathways": [_fc(400)]},
    "baseline-fc-II": {"pathways": [_fc(800)]},
    "baseline-fc-III": {"pathways": [_fc(1600)]},
    "baseline-fc-IV": {"pathways": [_fc(6400)]},
    "baseline-lc-I": {"pathways": [_lc(16, 6, 100)]},
    "baseline-lc-II": {"pathways": [_lc(16, 6, 400)]},
    "baseline-lc-III": {"pathways": [_lc(16, 6, 800)]},
    "baseline-lc-IV": {"pathways": [_lc(16, 6, 1000)]},
    "sp-inception-I": _sp(112),
    "sp-inception-II": _sp(224),
    "sp-inception-III": _sp(300, wide=True),
    "sp-inception-IV": _sp(448),
    "sp-inception-V": _sp(400, wide=True),
    "sp-inception-VI": _sp(448, extra=True),
}

PRESETS = {name: {"stages": [{"module": {**m, "name": name}}]} for name, m in TABLE_I.items()}
PRESETS["table-II-stack"] = {"stages": [
    {"module": {**TABLE_I["sp-inception-I"], "name": "sp-inception-I"}},
    {"module": {**TABLE_I["sp-inception-II"], "name": "sp-inception-II"}, "pra": {"channels": 2}},
    {"module": {**TABLE_I["sp-inception-IV"], "name": "sp-inception-IV"}, "pra": {"channels": 2}},
    {"module": {**TABLE_I["sp-inception-VI"], "name": "sp-inception-VI"}, "pra": {"channels": 2}},
]}
# desk-scale networks
PRESETS["desk-fc-100"] = {"stages": [{"module": {"pathways": [_fc(100)], "name": "desk-fc-100"}}]}
PRESETS["desk-sp-inception-64"] = {"stages": [{"module": {**_sp(64), "name": "desk-sp-inception-64"}}]}
PRESETS["desk-two-stage"] = {
    "stages": [
        {"module": {**_sp(56), "name": "desk-sp-inception-56"}},
        {"module": {**_sp(56), "name": "desk-sp-inception-56b"}, "pra": {"channels": 1}},
    ],
    "train": {"stage_schedule": [3000, 1000]},
}


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return copy.deepcopy(PRESETS[name])


# --- parsing -------------------------------------------------------------------


def _path(err) -> str:
    out = "$"
    for part in err.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def validate(doc: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(list(e.absolute_path)), str(e.absolute_path)))
    if errors:
        lines = [f"{_path(e)}: {e.message}" for e in errors]
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(lines))


def _expand(doc: dict) -> dict:
    if "preset" in doc:
        base = preset(doc["preset"])
        merged = {**base, **{k: v for k, v in doc.items() if k != "preset"}}
        merged.setdefault("name", doc["preset"])
        if "train" in base and "train" in doc:
            merged["train"] = {**base["train"], **doc["train"]}
        return merged
    return doc


def _module(m: dict, where: str) -> ModuleSpec:
    paths = []
    for p in m["pathways"]:
        spec = PathwaySpec(p["kind"], p["F"], p.get("k", 28), p.get("s", 1))
        paths.extend([spec] * p.get("repeat", 1))
    try:
        return ModuleSpec(tuple(paths), m.get("inhibition_weight", 100.0), m.get("balanced", False), m.get("name", ""))
    except ConfigurationError as e:
        raise ConfigurationError(f"{where}: {e}") from None


def build(doc: dict) -> tuple:
    """Validated document to ``(NetworkSpec, TrainConfig)``."""
    validate(doc)
    doc = _expand(doc)
    validate(doc)
    stages = []
    for i, st in enumerate(doc["stages"]):
        mod = _module(st["module"], f"$.stages[{i}].module")
        pra = PRASpec(**st["pra"]) if "pra" in st else None
        stages.append(StageSpec(mod, pra))
    try:
        spec = NetworkSpec(tuple(stages), doc.get("name", ""))
        enc = doc.get("encoder", {})
        sim_kw = doc.get("simulation", {})
        sim = SimParams(
            lif=LIFParams(**doc.get("neuron", {})),
            pra_lif=LIFParams(**{**asdict(SimParams().pra_lif), **doc.get("pra_neuron", {})}),
            plasticity=PlasticityParams(**doc.get("plasticity", {})),
            lam=enc.get("lambda", 0.25), lam_step=enc.get("lambda_step", 32.0 / 255.0),
            lam_max=enc.get("lambda_max", 1.0), **sim_kw,
        )
        cfg = TrainConfig(sim=sim, **doc.get("train", {}))
        cfg.schedule(len(stages))
    except (TypeError, ValueError) as e:
        raise ConfigurationError(str(e)) from None
    stack_modules(spec)
    return spec, cfg


def parse_network_config(text: str) -> tuple:
    """Parse JSON text into ``(NetworkSpec, TrainConfig)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"malformed JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError("$: configuration must be a JSON object")
    return build(doc)


def load_config(path_or_name: str) -> tuple:
    """Read a config file, or a bare preset name."""
    if path_or_name in PRESETS:
        return build({"preset": path_or_name})
    with open(path_or_name, encoding="utf-8") as fh:
        return parse_network_config(fh.read())


def to_document(spec: NetworkSpec, cfg: TrainConfig) -> dict:
    """Fully explicit document that :func:`build` maps back to the same objects."""
    stages = []
    for st in spec.stages:
        m = st.module
        mod = {
            "pathways": [{"kind": p.kind, "F": p.F, "k": p.k, "s": p.s} for p in m.pathways],
            "inhibition_weight": m.inhibition_weight,
            "balanced": m.balanced,
            "name": m.name,
        }
        entry = {"module": mod}
        if st.pra is not None:
            entry["pra"] = asdict(st.pra)
        stages.append(entry)
    sim = cfg.sim
    train = {"iterations": cfg.iterations, "checkpoint_every": cfg.checkpoint_every, "seed": cfg.seed,
             "label_fraction": cfg.label_fraction, "label_min_per_class": cfg.label_min_per_class}
    if cfg.stage_schedule is not None:
        train["stage_schedule"] = list(cfg.stage_schedule)
    return {
        "name": spec.name,
        "stages": stages,
        "train": train,
        "neuron": asdict(sim.lif),
        "pra_neuron": asdict(sim.pra_lif),
        "plasticity": asdict(sim.plasticity),
        "encoder": {"lambda": sim.lam, "lambda_step": sim.lam_step, "lambda_max": sim.lam_max},
        "simulation": {"dt": sim.dt, "T_present": sim.T_present, "S_min": sim.S_min},
    }


def dumps(spec: NetworkSpec, cfg: TrainConfig) -> str:
    return json.dumps(to_document(spec, cfg), sort_keys=True, separators=(",", ":"))
