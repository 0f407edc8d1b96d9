"""Command-line interface: pipelines, golden outputs, exit codes."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from gemos.cli import main

FIXTURES = Path(__file__).parent / "fixtures"
TRAIN = str(FIXTURES / "train.gmf")
EVAL = str(FIXTURES / "eval.gmf")
SCORES30 = str(FIXTURES / "scores30.csv")
GOLDEN30 = FIXTURES / "golden_eval30.json"


@pytest.fixture(scope="module")
def workdir(tmp_path_factory) -> Path:
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def bank_path(workdir: Path) -> str:
    out = str(workdir / "bank.json")
    rc = main(
        ["fit", "--features", TRAIN, "--model", "gmm", "--components", "2", "--out", out]
    )
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def scores_path(workdir: Path, bank_path: str) -> str:
    out = str(workdir / "scores.csv")
    rc = main(["score", "--features", EVAL, "--bank", bank_path, "--out", out])
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def policy_path(workdir: Path, scores_path: str) -> str:
    out = str(workdir / "policy.json")
    rc = main(["threshold", "--scores", scores_path, "--out", out])
    assert rc == 0
    return out


def test_fit_reports_class_sizes(workdir: Path, capsys) -> None:
    out = str(workdir / "bank_verbose.json")
    rc = main(
        ["fit", "--features", TRAIN, "--model", "gmm", "--components", "2", "--out", out]
    )
    assert rc == 0
    printed = capsys.readouterr().out
    assert "class 0" in printed
    assert Path(out).exists()


def test_scores_csv_has_expected_shape(scores_path: str) -> None:
    lines = Path(scores_path).read_text().strip().split("\n")
    assert lines[0] == "sample_id,true_label,predicted_label,raw_score,norm_score"
    assert len(lines) == 1 + 150  # 90 knowns + 60 unknowns in the eval fixture


def test_threshold_policy_file_carries_cv_report(policy_path: str) -> None:
    d = json.loads(Path(policy_path).read_text())
    assert d["format"] == "gemos-threshold"
    assert d["policy"]["mode"] == "global_normalized"
    assert d["report"]["folds"] == 5
    assert len(d["report"]["fold_taus"]) == 5


def test_end_to_end_eval_is_accurate(workdir: Path, scores_path: str, policy_path: str) -> None:
    out = str(workdir / "report.json")
    rc = main(["eval", "--scores", scores_path, "--policy", policy_path, "--out", out])
    assert rc == 0
    report = json.loads(Path(out).read_text())
    # six eval knowns carry wrong predictions, get routed to the wrong
    # scorer, and rank below the unknowns; 84/90 caps the AUC at 0.933
    assert report["auc"] > 0.92
    assert report["macro_f1"] > 0.9
    assert report["counts"]["total"] == 150


def test_eval_matches_golden_report(workdir: Path) -> None:
    out = str(workdir / "golden_check.json")
    rc = main(
        [
            "eval",
            "--scores",
            SCORES30,
            "--tau",
            "0.25",
            "--num-classes",
            "3",
            "--out",
            out,
        ]
    )
    assert rc == 0
    got = json.loads(Path(out).read_text())
    want = json.loads(GOLDEN30.read_text())
    assert got == want


def test_eval_roc_output(workdir: Path, scores_path: str, policy_path: str) -> None:
    out = str(workdir / "r.json")
    roc = workdir / "roc.csv"
    rc = main(
        [
            "eval",
            "--scores",
            scores_path,
            "--policy",
            policy_path,
            "--roc",
            str(roc),
            "--out",
            out,
        ]
    )
    assert rc == 0
    lines = roc.read_text().strip().split("\n")
    assert lines[0] == "score,fpr,tpr"
    assert len(lines) > 10
    last = lines[-1].split(",")
    assert float(last[1]) == 1.0 and float(last[2]) == 1.0


def test_quantile_threshold_global(workdir: Path, scores_path: str) -> None:
    out = str(workdir / "quantile.json")
    rc = main(
        ["threshold", "--scores", scores_path, "--quantile", "5", "--out", out]
    )
    assert rc == 0
    d = json.loads(Path(out).read_text())
    assert d["policy"]["mode"] == "global_normalized"


def test_quantile_threshold_per_class(workdir: Path, scores_path: str) -> None:
    out = str(workdir / "quantile_pc.json")
    rc = main(
        [
            "threshold",
            "--scores",
            scores_path,
            "--quantile",
            "5",
            "--per-class",
            "--out",
            out,
        ]
    )
    assert rc == 0
    d = json.loads(Path(out).read_text())
    assert d["policy"]["mode"] == "per_class_raw"
    assert len(d["policy"]["tau"]) == 3


def test_per_class_without_quantile_fails(workdir: Path, scores_path: str, capsys) -> None:
    rc = main(
        [
            "threshold",
            "--scores",
            scores_path,
            "--per-class",
            "--out",
            str(workdir / "x.json"),
        ]
    )
    assert rc == 2
    assert "per-class" in capsys.readouterr().err


def test_refit_and_rescore_are_byte_identical(workdir: Path, bank_path: str, scores_path: str) -> None:
    bank2 = workdir / "bank2.json"
    scores2 = workdir / "scores2.csv"
    assert main(
        [
            "fit",
            "--features",
            TRAIN,
            "--model",
            "gmm",
            "--components",
            "2",
            "--out",
            str(bank2),
        ]
    ) == 0
    assert main(
        ["score", "--features", EVAL, "--bank", str(bank2), "--out", str(scores2)]
    ) == 0
    assert bank2.read_bytes() == Path(bank_path).read_bytes()
    assert scores2.read_bytes() == Path(scores_path).read_bytes()


def test_missing_input_file_exits_2(workdir: Path, capsys) -> None:
    rc = main(
        ["fit", "--features", "/nonexistent/x.gmf", "--out", str(workdir / "b.json")]
    )
    assert rc == 2
    assert "x.gmf" in capsys.readouterr().err


def test_ocsvm_is_reported_unsupported(workdir: Path, capsys) -> None:
    rc = main(
        ["fit", "--features", TRAIN, "--model", "ocsvm", "--out", str(workdir / "b.json")]
    )
    assert rc == 2
    assert "unsupported model kind" in capsys.readouterr().err


def test_eval_policy_and_tau_are_mutually_exclusive(workdir: Path, scores_path: str, policy_path: str, capsys) -> None:
    rc = main(
        [
            "eval",
            "--scores",
            scores_path,
            "--policy",
            policy_path,
            "--tau",
            "0.0",
            "--num-classes",
            "3",
            "--out",
            str(workdir / "x.json"),
        ]
    )
    assert rc == 2
    rc = main(["eval", "--scores", scores_path, "--out", str(workdir / "x.json")])
    assert rc == 2
    # --tau alone cannot size the per-class F1 table
    rc = main(
        [
            "eval",
            "--scores",
            scores_path,
            "--tau",
            "0.0",
            "--out",
            str(workdir / "x.json"),
        ]
    )
    assert rc == 2


def test_unknown_subcommand_exits_2(capsys) -> None:
    assert main(["frobnicate"]) == 2


def test_ablation_table(workdir: Path) -> None:
    prefix = str(workdir / "ablation")
    rc = main(
        [
            "ablate",
            "--train",
            TRAIN,
            "--eval",
            EVAL,
            "--folds",
            "3",
            "--out-prefix",
            prefix,
        ]
    )
    assert rc == 0
    csv_lines = Path(prefix + ".csv").read_text().strip().split("\n")
    header = csv_lines[0].split(",")
    # one column per variant, one row per metric
    assert header == [
        "metric",
        "GMM2",
        "GMM4",
        "GMM8",
        "GMM16",
        "PCA2",
        "PCA4",
        "PCA8",
        "PCA16",
        "IF",
        "LOF",
    ]
    rows = {line.split(",")[0]: line.split(",")[1:] for line in csv_lines[1:]}
    assert set(rows) == {"F1", "AUC"}
    text = Path(prefix + ".txt").read_text()
    assert "OCSVM" in text  # footnote explains the dropped variant
    # fixture clusters are widely separated: every variant should do well
    for value in rows["AUC"]:
        assert float(value) > 0.92, rows["AUC"]


def test_ablation_is_deterministic(workdir: Path) -> None:
    p1 = str(workdir / "ab1")
    p2 = str(workdir / "ab2")
    for prefix in (p1, p2):
        rc = main(
            [
                "ablate",
                "--train",
                TRAIN,
                "--eval",
                EVAL,
                "--folds",
                "3",
                "--out-prefix",
                prefix,
            ]
        )
        assert rc == 0
    assert Path(p1 + ".csv").read_bytes() == Path(p2 + ".csv").read_bytes()
    assert Path(p1 + ".txt").read_bytes() == Path(p2 + ".txt").read_bytes()


def test_console_entry_point_runs() -> None:
    proc = subprocess.run(
        [sys.executable, "-m", "gemos.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "fit" in proc.stdout and "ablate" in proc.stdout
