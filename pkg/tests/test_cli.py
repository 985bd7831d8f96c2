import json

import pytest

from spikecept.checkpoint import load_checkpoint
from spikecept.cli import main
from spikecept.metrics import read_metrics

TINY = {"stages": [{"module": {"pathways": [{"kind": "FC", "F": 10}]}}],
        "simulation": {"T_present": 60.0}, "train": {"iterations": 6, "checkpoint_every": 3}}
SMALL = ["--train-count", "120", "--test-count", "20"]


@pytest.fixture
def tiny_config(tmp_path):
    p = tmp_path / "tiny.json"
    p.write_text(json.dumps(TINY))
    return str(p)


def run(*argv):
    return main([str(a) for a in argv])


def test_counts_all_table_rows(tmp_path, capsys):
    out = tmp_path / "counts.csv"
    assert run("counts", "--out", out) == 0
    rows = read_metrics(out)
    assert len(rows) == 14
    assert rows[8] == {"config": "sp-inception-I", "n_neuron": "1568", "n_synapse": "777952"}
    assert "sp-inception-I,1568,777952" in capsys.readouterr().out


def test_counts_stack_prints_stages(capsys):
    assert run("counts", "table-II-stack") == 0
    text = capsys.readouterr().out
    assert "after stage 4: n_neuron=24416" in text


def test_unknown_config_exit_code(capsys):
    assert run("counts", "no-such-net") == 2
    assert "spikecept counts: error:" in capsys.readouterr().err


def test_missing_checkpoint(tmp_path, capsys):
    assert run("eval", tmp_path / "nothing.ckpt") == 2
    assert "error" in capsys.readouterr().err


def test_bad_argument_exits_nonzero():
    with pytest.raises(SystemExit) as e:
        run("eval")
    assert e.value.code != 0


def test_train_eval_round(tmp_path, tiny_config, capsys):
    ck = tmp_path / "a.ckpt"
    assert run("train", tiny_config, "--out", ck, *SMALL) == 0
    cp = load_checkpoint(ck)
    assert "readout.response" in cp.arrays and cp.meta["frozen"] == [True]
    for d in ("vote", "vfa", "bigram"):
        assert run("eval", ck, "--decoder", d, *SMALL) == 0
    assert "accuracy" in capsys.readouterr().out
    csv = tmp_path / "rob.csv"
    assert run("ablate", ck, "--rho", "0,1", "--mode", "synapses", "--out", csv, *SMALL) == 0
    assert [r["rho"] for r in read_metrics(csv)] == ["0.0", "1.0"]
    assert run("intensity", ck, "--images", 3, "--out", tmp_path / "i.csv", *SMALL) == 0
    assert read_metrics(tmp_path / "i.csv")[0]["stage"] == "1"
    assert run("msds", ck, "--classes", "0,1", "--per-class", 2, "--out", tmp_path / "m.csv", *SMALL) == 0
    assert len(read_metrics(tmp_path / "m.csv")) == 4


def test_seed_env_fallback(tmp_path, tiny_config, monkeypatch):
    monkeypatch.setenv("SPIKECEPT_SEED", "11")
    assert run("train", tiny_config, "--out", tmp_path / "e.ckpt", *SMALL) == 0
    assert load_checkpoint(tmp_path / "e.ckpt").meta["seed"] == 11
    assert run("train", tiny_config, "--out", tmp_path / "f.ckpt", "--seed", 12, *SMALL) == 0
    assert load_checkpoint(tmp_path / "f.ckpt").meta["seed"] == 12
    monkeypatch.setenv("SPIKECEPT_SEED", "eleven")
    assert run("train", tiny_config, "--out", tmp_path / "g.ckpt", *SMALL) == 2


def test_same_seed_identical_files_and_resume(tmp_path, tiny_config):
    a, b, c = tmp_path / "a.ckpt", tmp_path / "b.ckpt", tmp_path / "c.ckpt"
    assert run("train", tiny_config, "--out", a, "--checkpoint-dir", tmp_path / "ck", *SMALL) == 0
    assert run("train", tiny_config, "--out", b, *SMALL) == 0
    assert a.read_bytes() == b.read_bytes()
    mid = tmp_path / "ck" / "stage1-iter000003.ckpt"
    assert mid.exists()
    assert run("train", tiny_config, "--out", c, "--resume", mid, *SMALL) == 0
    assert c.read_bytes() == a.read_bytes()


def test_curve(tmp_path, tiny_config):
    out = tmp_path / "curve.csv"
    assert run("curve", tiny_config, "--out", out, *SMALL) == 0
    assert [r["iteration"] for r in read_metrics(out)] == ["3", "6"]
