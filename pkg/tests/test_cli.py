import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from chanembed.channel import TimeDomainResponse
from chanembed.cli import main
from chanembed.scenarios import ChannelDataset

SPEC = {"seed": 11, "scenarios": [
    {"archetype": "anechoic", "count": 12},
    {"archetype": "reverberant", "count": 12},
    {"archetype": "indoor", "count": 12},
]}


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "spec.json").write_text(json.dumps(SPEC))
    assert main(["generate", str(d / "spec.json"), "--out", str(d / "ds")]) == 0
    assert main(["features", str(d / "ds"), "--out", str(d / "f.csv")]) == 0
    return d


def test_generate_writes_manifest_and_provenance(pipeline):
    manifest = json.loads((pipeline / "ds" / "manifest.json").read_text())
    assert len(manifest["channels"]) == 36
    assert manifest["provenance"]["seed"] == 11
    assert [s["archetype"] for s in manifest["provenance"]["scenarios"]] == ["anechoic", "reverberant", "indoor"]
    resolved = json.loads((pipeline / "ds" / "resolved_config.json").read_text())
    assert resolved["command"] == "generate" and resolved["seed"] == 11


def test_regenerate_from_manifest_reproduces_bytes(pipeline, tmp_path):
    assert main(["generate", str(pipeline / "ds" / "manifest.json"), "--out", str(tmp_path / "again")]) == 0
    for name in ("manifest.json", "ch00000.csv", "ch00035.csv", "ch00035.json"):
        assert (tmp_path / "again" / name).read_bytes() == (pipeline / "ds" / name).read_bytes()


def test_packed_layout_loads_identically(pipeline, tmp_path):
    assert main(["generate", str(pipeline / "spec.json"), "--out", str(tmp_path / "p"), "--packed"]) == 0
    a, b = ChannelDataset.load(pipeline / "ds"), ChannelDataset.load(tmp_path / "p")
    assert a.labels == b.labels
    assert all(np.array_equal(h.taps, g.taps) for h, g in zip(a.channels, b.channels))


def test_feature_table_and_summary(pipeline):
    rows = list(csv.reader(open(pipeline / "f.csv")))
    assert len(rows) == 37
    summary = json.loads((pipeline / "f.summary.json").read_text())
    assert summary["skipped"] == 0 and summary["written"] == 36


def test_zero_channel_is_skipped_and_counted(pipeline, tmp_path):
    ds = ChannelDataset.load(pipeline / "ds")
    ds.channels[3] = TimeDomainResponse(np.zeros(len(ds.channels[3])), ds.channels[3].sampling_period)
    ds.save(tmp_path / "bad")
    assert main(["features", str(tmp_path / "bad"), "--out", str(tmp_path / "f.csv")]) == 0
    summary = json.loads((tmp_path / "f.summary.json").read_text())
    assert summary["skipped"] == 1 and summary["skipped_channels"] == ["ch00003"]
    assert main(["features", str(tmp_path / "bad"), "--out", str(tmp_path / "g.csv"), "--strict"]) == 3


def test_embed_large_perplexity_and_determinism(pipeline, tmp_path):
    # perplexity 440 needs more than 440 points; 36 points is a precondition violation
    big = ["--perplexity", "440", "--learning-rate", "600", "--iterations", "30"]
    assert main(["embed", str(pipeline / "f.csv"), *big, "--out", str(tmp_path / "x.csv")]) == 2
    spec = {"seed": 1, "scenarios": [{"archetype": a, "count": 150} for a in ("anechoic", "reverberant", "indoor")]}
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    assert main(["generate", str(tmp_path / "spec.json"), "--out", str(tmp_path / "ds"), "--packed"]) == 0
    assert main(["features", str(tmp_path / "ds"), "--out", str(tmp_path / "f.csv")]) == 0
    assert main(["embed", str(tmp_path / "f.csv"), *big, "--out", str(tmp_path / "big.csv")]) == 0
    meta = json.loads((tmp_path / "big.json").read_text())
    assert meta["params"]["perplexity"] == 440.0 and meta["params"]["learning_rate"] == 600.0

    args = ["--seed", "5", "embed", str(pipeline / "f.csv"), "--perplexity", "10", "--learning-rate", "600",
            "--iterations", "200"]
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert main(args + ["--plain-gd", "--out", str(tmp_path / "c.csv")]) == 0


@pytest.mark.parametrize("technique", ["pca", "kpca", "isomap"])
def test_embed_baselines(pipeline, tmp_path, technique):
    assert main(["embed", str(pipeline / "f.csv"), "--technique", technique, "--out", str(tmp_path / "e.csv")]) == 0
    assert len((tmp_path / "e.csv").read_text().splitlines()) == 37


def test_resolved_config_replays_bytes(pipeline, tmp_path):
    out = tmp_path / "e.csv"
    assert main(["--seed", "2", "embed", str(pipeline / "f.csv"), "--iterations", "150", "--out", str(out)]) == 0
    first = out.read_bytes()
    cfg = tmp_path / "e.config.json"
    saved = tmp_path / "saved.json"
    shutil.copy(cfg, saved)
    out.unlink()
    assert main(["--config", str(saved)]) == 0
    assert out.read_bytes() == first
    # flags override the file
    assert main(["--config", str(saved), "embed", "--iterations", "151"]) == 0
    assert json.loads(cfg.read_text())["iterations"] == 151


def test_evaluate_modes(pipeline, tmp_path):
    assert main(["embed", str(pipeline / "f.csv"), "--technique", "pca", "--out", str(tmp_path / "e.csv")]) == 0
    assert main(["evaluate", str(tmp_path / "e.csv"), "--out", str(tmp_path / "fit")]) == 0
    rep = json.loads((tmp_path / "fit" / "fitness.json").read_text())
    assert set(rep["per_class"]) == {"anechoic", "reverberant", "indoor"}
    assert (tmp_path / "fit" / "scatter.svg").exists()

    assert main(["evaluate", str(pipeline / "f.csv"), "--out", str(tmp_path / "cv"), "--mode", "cv",
                 "--classifiers", "knn", "lda", "--repeats", "2", "--lda-cov", "total"]) == 0
    rows = list(csv.reader(open(tmp_path / "cv" / "cv.csv")))
    assert rows[0] == ["technique", "dataset", "knn", "svm", "naive_bayes", "bagging", "lda"]
    assert rows[1][0] == "original_6d" and rows[1][3] == "" and float(rows[1][2]) > 0.5
    cv = json.loads((tmp_path / "cv" / "cv_knn.json").read_text())
    assert np.array(cv["accuracies"]).shape == (2, 10)

    assert main(["evaluate", str(pipeline / "f.csv"), "--out", str(tmp_path / "sw"), "--mode", "sweep",
                 "--learning-rates", "100", "300", "--perplexities", "5", "10", "--iterations", "100"]) == 0
    lines = (tmp_path / "sw" / "sweep.csv").read_text().splitlines()
    assert lines[0] == "learning_rate,perplexity,fitness" and len(lines) == 5
    best = json.loads((tmp_path / "sw" / "sweep_best.json").read_text())
    assert best["fitness"] == max(float(l.split(",")[2]) for l in lines[1:])
    assert (tmp_path / "sw" / "sweep.svg").exists()
    assert main(["evaluate", str(tmp_path / "e.csv"), "--out", str(tmp_path / "x"), "--mode", "sweep"]) == 2


def test_zero_modification_keeps_channel_files(pipeline, tmp_path):
    assert main(["modify", str(pipeline / "ds"), "--out", str(tmp_path / "m")]) == 0
    for name in ("ch00000.csv", "ch00017.csv"):
        assert (tmp_path / "m" / name).read_bytes() == (pipeline / "ds" / name).read_bytes()
    manifest = json.loads((tmp_path / "m" / "manifest.json").read_text())
    assert manifest["channels"][0]["label"] == "anechoic-modified"
    assert manifest["provenance"]["modification"]["gain"] == 1.0


def test_modify_reaches_target_path_loss(pipeline, tmp_path):
    assert main(["modify", str(pipeline / "ds"), "--out", str(tmp_path / "m"), "--delay-ns", "21.33",
                 "--target-pl", "-93"]) == 0
    assert main(["features", str(tmp_path / "m"), "--out", str(tmp_path / "f.csv")]) == 0
    X = np.loadtxt(tmp_path / "f.csv", delimiter=",", skiprows=1, usecols=range(1, 7))
    assert abs(X[:, 4].mean() + 93) < 1e-6


def test_plot_command(pipeline, tmp_path):
    assert main(["embed", str(pipeline / "f.csv"), "--technique", "pca", "--out", str(tmp_path / "e.csv")]) == 0
    assert main(["plot", str(tmp_path / "e.csv"), "--out", str(tmp_path / "p.svg")]) == 0
    assert (tmp_path / "p.svg").read_text().lstrip().startswith("<?xml")


def test_bad_inputs_exit_2(pipeline, tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["generate", str(tmp_path / "bad.json"), "--out", str(tmp_path / "o")]) == 2
    assert main(["--config", str(tmp_path / "bad.json")]) == 2
    assert main(["features", str(tmp_path / "missing"), "--out", str(tmp_path / "f.csv")]) == 2
    assert main(["modify", str(tmp_path / "missing"), "--out", str(tmp_path / "m")]) == 2
    assert main(["embed", str(pipeline / "f.csv"), "--technique", "umap", "--out", str(tmp_path / "e.csv")]) == 2
    assert main(["embed", str(pipeline / "f.csv")]) == 2
    (tmp_path / "spec.json").write_text(json.dumps({"archetype": "cave"}))
    assert main(["generate", str(tmp_path / "spec.json"), "--out", str(tmp_path / "o")]) == 2
    assert main([]) == 2
    assert main(["--version"]) == 0


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "chanembed", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "generate" in res.stdout
