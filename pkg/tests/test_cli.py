import csv
import json

import numpy as np
import pytest

from fourierft.checkpoint import load, read_raw_matrix, write_raw_matrix
from fourierft.cli import main


@pytest.fixture(autouse=True)
def serial(monkeypatch):
    monkeypatch.setenv("SPFT_THREADS", "1")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_budget_roberta(capsys):
    code, out, _ = run(capsys, "budget", "--preset", "roberta-base", "--fourier-n", 1000)
    assert code == 0
    assert "24000 params, 93.75 KiB" in out


def test_budget_vit_large_lora(capsys):
    code, out, _ = run(capsys, "budget", "--preset", "vit-large", "--lora-r", 16)
    assert code == 0 and "1572864 params" in out


def test_budget_custom_single_param(capsys):
    code, out, _ = run(capsys, "budget", "--d", 1, "--layers", 1, "--fourier-n", 1)
    assert code == 0 and "1 param," in out


def test_budget_all_presets_csv(capsys):
    code, out, _ = run(capsys, "budget", "--fourier-n", 1000, "--format", "csv")
    assert code == 0 and len(out.strip().splitlines()) == 1 + 8


def test_budget_reference(capsys):
    code, out, _ = run(capsys, "budget", "--reference")
    assert code == 0 and out.count("NOTE:") >= 2


@pytest.mark.parametrize(
    "argv",
    [
        ["budget", "--preset", "bert-tiny", "--lora-r", "4"],
        ["budget", "--preset", "roberta-base"],
        ["budget", "--d", "10", "--fourier-n", "5"],
        ["train-synthetic", "--method", "lora", "--epochs", "1"],
    ],
)
def test_usage_errors_exit_2(capsys, tmp_path, argv):
    if argv[0] == "train-synthetic":
        argv = argv + ["--out", str(tmp_path)]
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_argparse_missing_required_exits_2(capsys, tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["ablate-basis", "--out", str(tmp_path)])
    assert info.value.code == 2
    assert "--n" in capsys.readouterr().err


def test_train_one_epoch(capsys, tmp_path):
    code, out, _ = run(capsys, "train-synthetic", "--method", "fourier", "--n", 128, "--epochs", 1, "--out", tmp_path)
    assert code == 0
    log = read_csv(tmp_path / "log.csv")
    assert len(log) == 1 and log[0]["epoch"] == "1"
    assert len(read_csv(tmp_path / "dataset.csv")) == 800
    cfg = json.loads((tmp_path / "config.json").read_text())
    assert cfg["adapter_params"] == 128 and "timestamp" in cfg
    adapters, acfg = load(tmp_path / "adapter.spft")
    assert acfg.method == "fourier" and adapters[0][1].num_params == 128


def test_train_general_basis_checkpoint(capsys, tmp_path):
    code, _, _ = run(capsys, "train-synthetic", "--method", "orthogonal", "--n", 32, "--epochs", 2, "--out", tmp_path)
    assert code == 0
    adapters, acfg = load(tmp_path / "adapter.spft")
    assert acfg.method == "general-basis" and acfg.basis_kind == "orthogonal"


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_train_divergence_exit_1(capsys, tmp_path):
    code, _, err = run(capsys, "train-synthetic", "--method", "fourier", "--n", 128, "--epochs", 50,
                       "--optimizer", "sgd", "--lr", 1e6, "--train-outer", "--out", tmp_path)
    assert code == 1 and "diverged" in err


def test_ablate_complete_basis(capsys, tmp_path):
    code, _, _ = run(capsys, "ablate-basis", "--n", 4096, "--epochs", 300, "--seeds", "0", "--out", tmp_path)
    assert code == 0
    summary = {r["basis"]: float(r["mean_final_accuracy"]) for r in read_csv(tmp_path / "ablation_summary.csv")}
    assert summary == {"fourier": 1.0, "orthogonal": 1.0, "random": 1.0}
    assert len(read_csv(tmp_path / "ablation.csv")) == 3


def test_sweep_bias_rows(capsys, tmp_path):
    code, _, _ = run(capsys, "sweep-bias", "--epochs", 5, "--out", tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "bias_sweep.csv")
    assert [r["f_c"] for r in rows] == ["none", "0", "8", "16", "24"]
    assert rows[0]["bandwidth"] == ""


def test_sweep_bias_reproducible(capsys, tmp_path):
    for sub in ("a", "b"):
        assert run(capsys, "sweep-bias", "--epochs", 20, "--out", tmp_path / sub)[0] == 0
    assert (tmp_path / "a" / "bias_sweep.csv").read_bytes() == (tmp_path / "b" / "bias_sweep.csv").read_bytes()


def test_gradcheck_default(capsys):
    code, out, _ = run(capsys, "gradcheck")
    assert code == 0
    worst = float(out.strip().splitlines()[-1].split("max rel err ")[1].split()[0])
    assert worst < 1e-5


def test_gradcheck_degenerate_shape(capsys):
    code, out, _ = run(capsys, "gradcheck", "--shape", "1x1", "--n", 1, "--skip-model")
    assert code == 0 and "PASS" in out


def test_gradcheck_wrong_sign_fails(capsys):
    code, out, _ = run(capsys, "gradcheck", "--wrong-sign", "--skip-model", "--instances", 2)
    assert code == 1 and "FAIL" in out


def test_sample_entries_pgm(capsys, tmp_path):
    code, _, _ = run(capsys, "sample-entries", "--shape", "64x48", "--n", 100, "--f-c", 10, "--bandwidth", 4,
                     "--out", tmp_path)
    assert code == 0
    assert len(read_csv(tmp_path / "entries.csv")) == 100
    pgm = (tmp_path / "probmap.pgm").read_bytes()
    assert pgm.startswith(b"P5\n48 64\n255\n") and len(pgm) == len(b"P5\n48 64\n255\n") + 64 * 48


def test_sample_entries_uniform_has_no_map(capsys, tmp_path):
    assert run(capsys, "sample-entries", "--shape", "8x8", "--n", 64, "--out", tmp_path)[0] == 0
    assert not (tmp_path / "probmap.pgm").exists()
    assert len({(r["j"], r["k"]) for r in read_csv(tmp_path / "entries.csv")}) == 64


def test_merge_command(capsys, tmp_path):
    run(capsys, "train-synthetic", "--method", "fourier", "--n", 16, "--epochs", 1, "--out", tmp_path)
    base = np.arange(64 * 64, dtype=float).reshape(64, 64) / 100
    write_raw_matrix(tmp_path / "w0.bin", base)
    code, _, _ = run(capsys, "merge", "--checkpoint", tmp_path / "adapter.spft", "--base", tmp_path / "w0.bin",
                     "--out", tmp_path / "merged.bin")
    assert code == 0
    (_, ad), = load(tmp_path / "adapter.spft")[0]
    merged = read_raw_matrix(tmp_path / "merged.bin")
    assert np.allclose(merged, base + ad.delta_w(), atol=1e-4)


def test_merge_errors(capsys, tmp_path):
    (tmp_path / "bad.spft").write_bytes(b"NOPE" + bytes(40))
    code, _, err = run(capsys, "merge", "--checkpoint", tmp_path / "bad.spft", "--base", tmp_path / "x",
                       "--out", tmp_path / "y")
    assert code == 1 and "bad magic" in err
    run(capsys, "train-synthetic", "--n", 16, "--epochs", 1, "--out", tmp_path)
    write_raw_matrix(tmp_path / "w0.bin", np.zeros((64, 64)))
    code, _, _ = run(capsys, "merge", "--checkpoint", tmp_path / "adapter.spft", "--base", tmp_path / "w0.bin",
                     "--layer", "nope", "--out", tmp_path / "m.bin")
    assert code == 2
