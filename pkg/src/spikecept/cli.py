"""Command-line interface: ``spikecept <verb> ...``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .checkpoint import capture, load_checkpoint, restore, save_checkpoint
from .config import TABLE_I, load_config
from .datasets import load_split
from .engine import SpikingNetwork
from .errors import SpikeceptError
from .harness import (
    DECODERS,
    TrainState,
    evaluate,
    fit_readout,
    label_indices,
    measure_intensity,
    robustness_sweep,
    stage_msds,
    train,
)
from .metrics import emit_metrics
from .topology import count_resources

log = logging.getLogger("spikecept")


def _seed(args, default):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SPIKECEPT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SpikeceptError(f"SPIKECEPT_SEED must be an integer, got {env!r}") from None
    return default


def _data(args, split):
    ds = load_split(split, args.data_dir)
    n = args.train_count if split == "train" else args.test_count
    return ds.head(n)


def _readout(net, cfg, tr):
    idx = label_indices(tr.labels, cfg.label_fraction, cfg.label_min_per_class)
    return fit_readout(net, tr.images[idx], tr.labels[idx], indices=idx)


def _emit(rows, out, schema):
    if out:
        emit_metrics(rows, out, schema)
        print(f"wrote {out}")


def cmd_counts(args):
    names = args.config or list(TABLE_I)
    rows = []
    for name in names:
        spec, _ = load_config(name)
        st = count_resources(spec)
        rows.append((Path(name).stem if name not in TABLE_I else name, st.n_neuron, st.n_synapse))
        cum = st.cumulative()
        if len(cum) > 1:
            for i, (n, s) in enumerate(cum, start=1):
                print(f"  {rows[-1][0]} after stage {i}: n_neuron={n} n_synapse={s}")
    for r in rows:
        print(f"{r[0]},{r[1]},{r[2]}")
    _emit(rows, args.out, "counts")


def _train(args, checkpoint_dir=None, curve=None):
    spec, cfg = load_config(args.config)
    cfg = replace(cfg, seed=_seed(args, cfg.seed))
    if args.iterations is not None:
        cfg = replace(cfg, iterations=args.iterations, stage_schedule=None)
    if args.checkpoint_every is not None:
        cfg = replace(cfg, checkpoint_every=args.checkpoint_every)
    tr = _data(args, "train")
    net = SpikingNetwork(spec, cfg.sim, cfg.seed)

    def on_checkpoint(net, state):
        if checkpoint_dir:
            path = Path(checkpoint_dir) / f"stage{state.stage + 1}-iter{state.iteration:06d}.ckpt"
            save_checkpoint(path, capture(net, cfg, state))
        if curve is not None and state.iteration:
            curve(net, cfg, tr, state)

    if checkpoint_dir:
        Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
    train(net, tr.images, cfg, on_checkpoint=on_checkpoint if (checkpoint_dir or curve) else None)
    return net, cfg, tr


def cmd_train(args):
    if args.resume:
        net, cfg, state, _ = restore(load_checkpoint(args.resume))
        tr = _data(args, "train")
        train(net, tr.images, cfg, state)
    else:
        net, cfg, tr = _train(args, args.checkpoint_dir)
    readout = _readout(net, cfg, tr)
    save_checkpoint(args.out, capture(net, cfg, TrainState(net.n_stages, 0), readout))
    print(f"trained {net.spec.name or args.config}: seed {net.seed}, lambda {net.encoder.lam:.4f}; wrote {args.out}")


def _load(args):
    net, cfg, state, readout = restore(load_checkpoint(args.checkpoint))
    if readout is None:
        raise SpikeceptError(f"{args.checkpoint} has no label assignment; train it with `spikecept train`")
    return net, cfg, readout


def cmd_eval(args):
    net, _, readout = _load(args)
    te = _data(args, "test")
    res = evaluate(net, te.images, te.labels, readout, args.decoder)
    print(f"accuracy {res.accuracy:.4f} ({args.decoder}, {len(te)} images, "
          f"{res.no_spike} silent, {res.flagged} flagged)")
    if args.confusion:
        for row in res.confusion:
            print(" ".join(f"{v:4d}" for v in row))


def cmd_ablate(args):
    net, _, readout = _load(args)
    te = _data(args, "test")
    rhos = [float(x) for x in args.rho.split(",")]
    rows = robustness_sweep(net, readout, te.images, te.labels, rhos, args.mode, args.trials,
                            _seed(args, 0), args.decoder)
    for r in rows:
        print(f"rho={r[0]:.3f} mode={r[1]} acc={r[2]:.4f} std={r[3]:.4f}")
    _emit(rows, args.out, "robustness")


def cmd_intensity(args):
    net = restore(load_checkpoint(args.checkpoint))[0]
    te = _data(args, "test")
    rep = measure_intensity(net, te.images, args.images)
    for (stage, i, o), f in zip(rep.rows, rep.flagged):
        print(f"stage {stage}: input {i:.2f} output {o:.2f} spikes/iteration ({f} flagged)")
    _emit(rep.rows, args.out, "intensity")


def cmd_msds(args):
    net = restore(load_checkpoint(args.checkpoint))[0]
    te = _data(args, "test")
    classes = tuple(int(c) for c in args.classes.split(","))
    per_stage = stage_msds(net, te.images, te.labels, classes, args.per_class)
    rows = []
    for stage, M, off in per_stage:
        print(f"stage {stage}: off-diagonal MSDS {off:.4f}")
        if stage == args.stage:
            rows = [(a, b, float(M[i, j])) for i, a in enumerate(classes) for j, b in enumerate(classes)]
    _emit(rows, args.out, "msds_matrix")


def cmd_curve(args):
    te = _data(args, "test")
    rows = []
    total = [0]

    def on_point(net, cfg, tr, state):
        total[0] += cfg.checkpoint_every
        acc = evaluate(net, te.images, te.labels, _readout(net, cfg, tr), args.decoder).accuracy
        rows.append((total[0], acc))
        print(f"iteration {total[0]}: accuracy {acc:.4f}", flush=True)

    _train(args, args.checkpoint_dir, curve=on_point)
    _emit(rows, args.out, "learning_curve")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (env fallback: SPIKECEPT_SEED)")
    common.add_argument("--train-count", type=int, default=3000)
    common.add_argument("--test-count", type=int, default=1000)
    common.add_argument("--data-dir", default=None, help="directory with MNIST IDX files (default: bundled digits)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="spikecept", description="Spiking Sp-Inception networks with STDP.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    c = sub.add_parser("counts", parents=[common], help="neuron/synapse budget of configurations")
    c.add_argument("config", nargs="*", help="config files or preset names (default: all Table I presets)")
    c.add_argument("--out")
    c.set_defaults(func=cmd_counts)

    t = sub.add_parser("train", parents=[common], help="train a network and label its outputs")
    t.add_argument("config")
    t.add_argument("--out", required=True)
    t.add_argument("--iterations", type=int, default=None)
    t.add_argument("--checkpoint-dir", default=None)
    t.add_argument("--checkpoint-every", type=int, default=None)
    t.add_argument("--resume", default=None, help="continue from an intermediate checkpoint")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", parents=[common], help="test-set accuracy")
    e.add_argument("checkpoint")
    e.add_argument("--decoder", choices=DECODERS, default="vote")
    e.add_argument("--confusion", action="store_true")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("ablate", parents=[common], help="accuracy under random neuron/synapse deletion")
    a.add_argument("checkpoint")
    a.add_argument("--mode", choices=("neurons", "synapses"), default="neurons")
    a.add_argument("--rho", default="0,0.25,0.5,0.75,1")
    a.add_argument("--trials", type=int, default=1)
    a.add_argument("--decoder", choices=DECODERS, default="vote")
    a.add_argument("--out")
    a.set_defaults(func=cmd_ablate)

    i = sub.add_parser("intensity", parents=[common], help="mean spikes per presentation per stage")
    i.add_argument("checkpoint")
    i.add_argument("--images", type=int, default=100)
    i.add_argument("--out")
    i.set_defaults(func=cmd_intensity)

    m = sub.add_parser("msds", parents=[common], help="MSDS of input spiking maps")
    m.add_argument("checkpoint")
    m.add_argument("--stage", type=int, default=1)
    m.add_argument("--classes", default="0,1,2,3,4,5,6,7,8,9")
    m.add_argument("--per-class", type=int, default=100)
    m.add_argument("--out")
    m.set_defaults(func=cmd_msds)

    cv = sub.add_parser("curve", parents=[common], help="train with checkpoints and evaluate each")
    cv.add_argument("config")
    cv.add_argument("--iterations", type=int, default=None)
    cv.add_argument("--checkpoint-dir", default=None)
    cv.add_argument("--checkpoint-every", type=int, default=None)
    cv.add_argument("--decoder", choices=DECODERS, default="vote")
    cv.add_argument("--out")
    cv.set_defaults(func=cmd_curve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (SpikeceptError, OSError, ValueError) as e:
        print(f"spikecept {args.verb}: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
