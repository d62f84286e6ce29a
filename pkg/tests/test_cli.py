import json
import subprocess
import sys

import pytest

from genreforge.cli import main
from genreforge.evaluation import ALGORITHMS
from genreforge.features import FEATURE_NAMES, read_feature_csv


@pytest.fixture(scope="module")
def features_csv(corpus, tmp_path_factory):
    out_dir, _ = corpus
    path = tmp_path_factory.mktemp("cli") / "features.csv"
    assert main(["extract", "--manifest", str(out_dir / "manifest.csv"), "--out", str(path),
                 "--threads", "1"]) == 0
    return path


def test_extract_writes_full_dataset(features_csv):
    ds = read_feature_csv(features_csv)
    assert (ds.n_samples, ds.n_features) == (20, 138)
    assert ds.feature_names == list(FEATURE_NAMES)
    assert ds.class_names == ["classical", "metal"]


def test_extract_parallel_matches_serial(corpus, features_csv, tmp_path, monkeypatch):
    out_dir, _ = corpus
    monkeypatch.setenv("GENREFORGE_THREADS", "4")
    path = tmp_path / "par.csv"
    assert main(["extract", "--manifest", str(out_dir / "manifest.csv"), "--out", str(path)]) == 0
    assert path.read_bytes() == features_csv.read_bytes()


@pytest.mark.parametrize("mode", ["part1", "part2"])
def test_run_writes_reports(features_csv, tmp_path, mode, capsys):
    out = tmp_path / mode
    assert main(["run", "--features", str(features_csv), "--mode", mode, "--report-dir", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert len(report["rows"]) == 9
    assert {r["algorithm"] for r in report["rows"]} == set(ALGORITHMS)
    assert (out / "report.txt").read_text().startswith("  algorithm accuracy\n")
    assert len((out / "report.csv").read_text().splitlines()) == 10
    assert len((out / "k_sweep.csv").read_text().splitlines()) == 16
    series = "projection" if mode == "part1" else "scatter"
    assert len((out / f"{series}.csv").read_text().splitlines()) == 21
    assert (out / f"{series}.svg").exists()
    assert set(json.loads((out / "models.json").read_text())) == set(ALGORITHMS)
    assert "LogisticRegression" in capsys.readouterr().out


def test_run_is_byte_identical_across_invocations(features_csv, tmp_path):
    for name in ("a", "b"):
        assert main(["run", "--features", str(features_csv), "--mode", "part1", "--seed", "3",
                     "--report-dir", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_sweep_k(features_csv, tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep-k", "--features", str(features_csv), "--mode", "part2",
                 "--k-min", "1", "--k-max", "15", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "k,accuracy" and len(lines) == 16


def test_usage_errors_exit_1(features_csv, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--features", str(features_csv), "--mode", "part9", "--report-dir", str(tmp_path)])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1
    assert main(["extract", "--manifest", "m.csv", "--out", "x.csv", "--step", "0.1"]) == 1


def test_data_errors_exit_2(features_csv, tmp_path):
    assert main(["extract", "--manifest", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "f.csv")]) == 2
    assert main(["run", "--features", str(features_csv), "--mode", "part2",
                 "--select", "no_such_feature", "--report-dir", str(tmp_path)]) == 2
    assert main(["sweep-k", "--features", str(features_csv), "--mode", "part1",
                 "--k-max", "40", "--out", str(tmp_path / "s.csv")]) == 2


def test_synth_corpus_command(tmp_path):
    assert main(["synth-corpus", "--out", str(tmp_path), "--seed", "7", "--duration", "3"]) == 0
    assert len(list(tmp_path.glob("*.wav"))) == 20
    assert (tmp_path / "manifest.csv").read_text().splitlines()[0] == "path,label"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "genreforge", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "sweep-k" in proc.stdout
