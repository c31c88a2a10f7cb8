"""CLI surface: subcommand wiring, overrides, stdout contracts, and the
one-exit-code-per-failure-class policy."""
from __future__ import annotations

import json
import os
import re

import pytest

from conftest import TINY_CONFIG
from heterospec.cli import main
from heterospec.config import load_config
from heterospec.errors import OutputMismatchError

STDERR_RE = re.compile(
    r"^heterospec: (config|calibration|bins-format|verify-mismatch|io): .+\n$")


@pytest.fixture(scope="module")
def cli_lab(tmp_path_factory):
    """gen-corpus + train-model + calibrate, driven through main()."""
    root = tmp_path_factory.mktemp("cli")
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(TINY_CONFIG), encoding="utf-8")
    out = str(root / "run")
    base = ["--config", str(cfg_path), "--out", out]
    for command in ("gen-corpus", "train-model", "calibrate"):
        assert main([command, *base]) == 0
    return base, out


def _one_error_line(captured) -> str:
    assert captured.out == ""
    assert STDERR_RE.match(captured.err), captured.err
    return captured.err


def test_gen_corpus_prints_corpus_path(tmp_path, capsys):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(TINY_CONFIG), encoding="utf-8")
    out = str(tmp_path / "run")
    assert main(["gen-corpus", "--config", str(cfg), "--out", out]) == 0
    assert capsys.readouterr().out == os.path.join(out, "corpus.txt") + "\n"


def test_seed_and_out_overrides_are_snapshotted(tmp_path, capsys):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(TINY_CONFIG), encoding="utf-8")
    out = str(tmp_path / "elsewhere")
    assert main(["gen-corpus", "--config", str(cfg), "--seed", "5",
                 "--out", out]) == 0
    capsys.readouterr()
    snap = load_config(os.path.join(out, "config.json"))
    assert snap.seed == 5
    assert snap.out_dir == out


def test_run_prints_trace_and_summary_paths(cli_lab, capsys):
    base, out = cli_lab
    assert main(["run", *base, "--mode", "baseline"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines == [os.path.join(out, "baseline-iterations.csv"),
                     os.path.join(out, "baseline-summary.csv")]
    assert all(os.path.exists(p) for p in lines)


def test_run_defaults_to_adaptive(cli_lab, capsys):
    base, out = cli_lab
    assert main(["run", *base]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == os.path.join(out, "adaptive-iterations.csv")


def test_compare_sweep_output(cli_lab, capsys):
    base, out = cli_lab
    assert main(["compare", *base, "--alpha-sweep", "1,2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == os.path.join(out, "compare.csv")
    arm_re = re.compile(r"^(baseline|adaptive) alpha=(-|\d+) calls=\d+ "
                        r"tokens=\d+ tau=\d+\.\d{4} speedup=\d+\.\d{4}$")
    assert len(lines) == 4
    assert all(arm_re.match(line) for line in lines[1:])
    assert lines[1].startswith("baseline alpha=-")
    assert lines[2].startswith("adaptive alpha=1")
    assert os.path.exists(os.path.join(out, "adaptive-a1-iterations.csv"))
    assert os.path.exists(os.path.join(out, "adaptive-a2-iterations.csv"))


def test_report_writes_tables_then_digest(cli_lab, capsys):
    base, out = cli_lab
    assert main(["run", *base, "--mode", "baseline"]) == 0
    capsys.readouterr()
    assert main(["report", *base, "--arm", "baseline"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == os.path.join(out, "baseline-tcr-histogram.csv")
    assert lines[1] == os.path.join(out, "baseline-tcr-by-accepted.csv")
    assert lines[2] == os.path.join(out, "baseline-bin-occupancy.csv")
    assert lines[3].startswith("out_dir:")


def test_report_digest_only(cli_lab, capsys):
    base, _ = cli_lab
    assert main(["report", *base, "--digest-only"]) == 0
    outtext = capsys.readouterr().out
    assert outtext.startswith("out_dir:")
    assert ".csv\n" not in outtext.split("out_dir:")[0]


def test_calibrate_rerun_is_stable(cli_lab, capsys):
    base, out = cli_lab
    bins = os.path.join(out, "bins.txt")
    before = open(bins, "rb").read()
    assert main(["calibrate", *base]) == 0
    capsys.readouterr()
    assert open(bins, "rb").read() == before


# -------------------------------------------------------------- failures


def test_exit_2_on_missing_prerequisite(tmp_path, capsys):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(TINY_CONFIG), encoding="utf-8")
    rc = main(["calibrate", "--config", str(cfg), "--out", str(tmp_path / "r")])
    assert rc == 2
    err = _one_error_line(capsys.readouterr())
    assert err.startswith("heterospec: config:")
    assert "train-model first" in err


def test_exit_2_on_bad_alpha_sweep(capsys):
    assert main(["compare", "--alpha-sweep", "2,x"]) == 2
    err = _one_error_line(capsys.readouterr())
    assert "comma-separated integers" in err
    assert main(["compare", "--alpha-sweep", ","]) == 2
    capsys.readouterr()


def test_exit_2_on_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "config.json"
    cfg.write_text('{"sneed": 1}', encoding="utf-8")
    assert main(["gen-corpus", "--config", str(cfg)]) == 2
    err = _one_error_line(capsys.readouterr())
    assert "unknown keys" in err


def test_exit_3_on_degenerate_calibration(tmp_path, capsys):
    # identical periodic docs: every calibration iteration sees the same
    # handful of entropy values, far below the diversity floor
    docs = tmp_path / "docs.txt"
    docs.write_text(("a b " * 16).strip() + "\n", encoding="utf-8")
    with open(docs, "a", encoding="utf-8") as fh:
        for _ in range(11):
            fh.write(("a b " * 16).strip() + "\n")
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({
        "corpus": {"path": str(docs)},
        "controller": {"depth": 2, "top_k": 2, "top_n": 4, "max_new_tokens": 8},
        "prompts": {"count": 2, "calibration_count": 2, "prompt_tokens": 2},
        "calibration": {"filter": "all"},
    }), encoding="utf-8")
    out = str(tmp_path / "run")
    base = ["--config", str(cfg), "--out", out]
    assert main(["gen-corpus", *base]) == 0
    assert main(["train-model", *base]) == 0
    capsys.readouterr()
    assert main(["calibrate", *base]) == 3
    err = _one_error_line(capsys.readouterr())
    assert err.startswith("heterospec: calibration:")
    assert "distinct entropy values" in err


def test_exit_4_on_corrupt_bins(tmp_path, capsys):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(TINY_CONFIG), encoding="utf-8")
    out = str(tmp_path / "run")
    base = ["--config", str(cfg), "--out", out]
    for command in ("gen-corpus", "train-model", "calibrate"):
        assert main([command, *base]) == 0
    with open(os.path.join(out, "bins.txt"), "w", encoding="utf-8") as fh:
        fh.write("not a bins file\n")
    capsys.readouterr()
    assert main(["run", *base]) == 4
    err = _one_error_line(capsys.readouterr())
    assert err.startswith("heterospec: bins-format:")
    assert "bins.txt:1:" in err


def test_exit_5_on_arm_divergence(monkeypatch, capsys):
    def boom(config, alphas=None):
        raise OutputMismatchError("prompt 0: adaptive arm diverged")

    monkeypatch.setattr("heterospec.cli.step_compare", boom)
    assert main(["compare"]) == 5
    err = _one_error_line(capsys.readouterr())
    assert err == "heterospec: verify-mismatch: prompt 0: adaptive arm diverged\n"


def test_exit_6_on_unreadable_config(tmp_path, capsys):
    missing = str(tmp_path / "absent.json")
    assert main(["gen-corpus", "--config", missing]) == 6
    err = _one_error_line(capsys.readouterr())
    assert err.startswith("heterospec: io:")


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["run", "--mode", "greedy"])
    assert exc.value.code == 2
