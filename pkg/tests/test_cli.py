import json
import subprocess
import sys

import numpy as np
import pytest

from logcon_ica.cli import build_parser, main

FLAGS = ["--input", "--output", "--seed", "--restarts", "--eta", "--alpha", "--gamma", "--max-iters",
         "--reps", "--n", "--kind", "--threads", "--json-errors"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def subcommand_help(name):
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    return sub.choices[name].format_help()


def test_help_documents_every_flag():
    text = "".join(subcommand_help(name) for name in ("simulate", "fit", "eval", "reproduce", "demo-emplik"))
    for flag in FLAGS:
        assert flag in text


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "logcon_ica", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "reproduce" in proc.stdout


def test_unknown_flag_is_rejected(capsys):
    code, _, err = run(capsys, "demo-emplik", "--bogus")
    assert code == 2
    assert "unrecognized arguments" in err


def test_missing_command(capsys):
    assert run(capsys)[0] == 2


def test_missing_input_file(tmp_path, capsys):
    code, _, err = run(capsys, "fit", "--input", str(tmp_path / "nope.csv"), "--json-errors")
    assert code == 2
    assert json.loads(err)["error"] == "UsageError"


def test_simulate_fit_eval(tmp_path, capsys):
    data = tmp_path / "data"
    code, out, _ = run(capsys, "simulate", "--kind", "uniform", "--n", "150", "--seed", "3", "--output", str(data))
    assert code == 0
    X = np.loadtxt(data / "observations.csv", delimiter=",")
    S = np.loadtxt(data / "signals.csv", delimiter=",")
    assert X.shape == S.shape == (150, 2)

    model = tmp_path / "model.json"
    code, out, _ = run(capsys, "fit", "--input", str(data / "observations.csv"), "--output", str(model),
                       "--seed", "7", "--restarts", "3")
    assert code == 0
    saved = json.loads(model.read_text())
    assert "loglik" in saved and saved["seed"] == 7
    assert json.loads(out)["loglik"] == saved["loglik"]
    assert (tmp_path / "model_densities.svg").exists()

    code, out, _ = run(capsys, "eval", "--input", str(model), "--kind", "uniform")
    assert code == 0
    report = json.loads(out)
    assert report["amari"] < 0.2
    assert len(report["tv_errors"]) == 2

    truth = tmp_path / "truth.csv"
    np.savetxt(truth, np.linalg.inv([[0.5, -np.sqrt(3) / 2], [np.sqrt(3) / 2, 0.5]]), delimiter=",")
    code, out2, _ = run(capsys, "eval", "--input", str(model), "--truth", str(truth))
    assert code == 0
    assert json.loads(out2)["amari"] == pytest.approx(report["amari"], abs=1e-12)


def test_fit_is_deterministic(tmp_path, capsys):
    X = np.random.default_rng(0).laplace(size=(100, 2))
    np.savetxt(tmp_path / "x.csv", X, delimiter=",")
    for name in ("a.json", "b.json"):
        run(capsys, "fit", "--input", str(tmp_path / "x.csv"), "--output", str(tmp_path / name),
            "--seed", "5", "--restarts", "2", "--no-plots")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_rank_deficient_exit_code(tmp_path, capsys):
    path = tmp_path / "flat.csv"
    path.write_text("".join(f"{i},{2 * i}\n" for i in range(10)))
    code, _, err = run(capsys, "fit", "--input", str(path))
    assert code == 1
    assert "RankDeficient" in err
    code, _, err = run(capsys, "fit", "--input", str(path), "--json-errors")
    payload = json.loads(err)
    assert payload["error"] == "RankDeficient" and payload["exit_code"] == 1


def test_parse_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("1,2\n3,x\n4,5\n")
    code, _, err = run(capsys, "fit", "--input", str(path), "--json-errors")
    assert code == 1
    payload = json.loads(err)
    assert payload["error"] == "ParseError" and "row 2" in payload["message"]


def test_header_flag(tmp_path, capsys):
    path = tmp_path / "h.csv"
    rows = np.random.default_rng(1).uniform(size=(40, 2))
    path.write_text("a,b\n" + "".join(f"{x},{y}\n" for x, y in rows))
    assert run(capsys, "fit", "--input", str(path), "--no-plots", "--restarts", "1",
               "--output", str(tmp_path / "m.json"))[0] == 1
    assert run(capsys, "fit", "--input", str(path), "--header", "--no-plots", "--restarts", "1",
               "--output", str(tmp_path / "m.json"))[0] == 0


def test_demo_emplik(tmp_path, capsys):
    code, out, _ = run(capsys, "demo-emplik", "--seed", "1", "--n", "50")
    assert code == 0
    report = json.loads(out)
    assert len(report["subsets"]) == 10
    for entry in report["subsets"]:
        assert entry["log_empirical_likelihood"] == pytest.approx(report["bound"], abs=1e-8)
    assert report["min_pairwise_amari"] > 0.1
    path = tmp_path / "r.json"
    code, out2, _ = run(capsys, "demo-emplik", "--seed", "1", "--output", str(path))
    assert json.loads(path.read_text()) == report


def test_reproduce_reconstruction(tmp_path, capsys):
    code, out, _ = run(capsys, "reproduce", "fig5", "--output", str(tmp_path), "--restarts", "2")
    assert code == 0
    summary = json.loads(out)
    assert summary["kind"] == "binomial"
    for name in ("fig5_data.csv", "fig5_signal.svg", "fig5_observations.svg", "fig5_reconstructed.svg",
                 "fig5_densities.svg"):
        assert (tmp_path / name).exists()


def test_reproduce_comparison_rows(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("LOGCON_ICA_THREADS", "2")
    code, _, _ = run(capsys, "reproduce", "fig7", "--reps", "2", "--seed", "1", "--restarts", "2",
                     "--output", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "fig7.csv").read_text().splitlines()
    assert len(lines) == 1 + 5 * 2
    kinds = [line.split(",")[0] for line in lines[1:]]
    assert sorted(set(kinds)) == ["binomial", "exponential", "mixture", "t2", "uniform"]
    assert (tmp_path / "fig7_amari.svg").exists()


def test_invalid_config_is_a_data_error(tmp_path, capsys):
    X = np.random.default_rng(0).uniform(size=(30, 2))
    np.savetxt(tmp_path / "x.csv", X, delimiter=",")
    code, _, err = run(capsys, "fit", "--input", str(tmp_path / "x.csv"), "--alpha", "1.5", "--json-errors")
    assert code == 1
    assert "alpha" in json.loads(err)["message"]
