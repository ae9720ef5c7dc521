from __future__ import annotations

import json
import os
from importlib import resources

import pytest

from folkrec.cli import main
from folkrec.synth import FIXTURE_NAME, drift_corpus


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Run the staged pipeline once on the bundled fixture; tests inspect it."""
    root = tmp_path_factory.mktemp("pipeline")
    raw = root / "raw.tsv"
    raw.write_text(resources.files("folkrec").joinpath(f"data/{FIXTURE_NAME}").read_text())
    snap = root / "snapshot.tsv"
    assert main(["ingest", "--data", str(raw), "--out", str(snap)]) == 0

    split_dir = root / "split"
    assert main(["split", "--data", str(snap), "--out-dir", str(split_dir)]) == 0

    model = root / "model.json"
    assert (
        main(
            [
                "lda",
                "--train",
                str(split_dir / "train.tsv"),
                "--topics",
                "2",
                "--iters",
                "40",
                "--seed",
                "9",
                "--out",
                str(model),
            ]
        )
        == 0
    )
    return root, snap, split_dir, model


def test_bundled_fixture_matches_generator():
    packaged = resources.files("folkrec").joinpath(f"data/{FIXTURE_NAME}").read_text()
    assert packaged == drift_corpus().to_tsv()


def test_ingest_reports_stats(pipeline, capsys):
    root, snap, _, _ = pipeline
    assert main(["ingest", "--data", str(snap), "--out", str(root / "again.tsv")]) == 0
    stats = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert stats["posts"] == 224
    assert stats["users"] == 4
    assert stats["assignments"] == 1344


def test_split_files_exist(pipeline):
    _, _, split_dir, _ = pipeline
    meta = json.loads((split_dir / "split.json").read_text())
    assert meta["n_test_posts"] == 4
    assert meta["n_train_posts"] == 220
    assert (split_dir / "train.tsv").exists()
    assert (split_dir / "test.tsv").exists()


def test_recommend_writes_predictions(pipeline):
    root, _, split_dir, model = pipeline
    out = root / "preds.tsv"
    code = main(
        [
            "recommend",
            "--train", str(split_dir / "train.tsv"),
            "--test", str(split_dir / "test.tsv"),
            "--model", str(model),
            "--algo", "3lt-tag",
            "--k", "10",
            "--out", str(out),
        ]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# fingerprint=")
    assert lines[2] == "user\tresource\trank\ttag\tscore"
    body = [l.split("\t") for l in lines[3:]]
    assert len(body) == 4 * 10
    assert all(len(row) == 5 for row in body)


def test_recommend_rerun_is_byte_identical(pipeline):
    root, _, split_dir, model = pipeline
    a, b = root / "p1.tsv", root / "p2.tsv"
    args = [
        "recommend",
        "--train", str(split_dir / "train.tsv"),
        "--test", str(split_dir / "test.tsv"),
        "--model", str(model),
        "--algo", "3l",
        "--out",
    ]
    assert main(args + [str(a)]) == 0
    assert main(args + [str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_eval_outputs_and_rerun_identical(pipeline):
    root, _, split_dir, model = pipeline
    outs = []
    for name in ("e1", "e2"):
        out_dir = root / name
        code = main(
            [
                "eval",
                "--train", str(split_dir / "train.tsv"),
                "--test", str(split_dir / "test.tsv"),
                "--model", str(model),
                "--algos", "mp,3l,3lt-tag",
                "--curves",
                "--sig",
                "--no-figures",
                "--out-dir", str(out_dir),
            ]
        )
        assert code == 0
        outs.append(out_dir)
    for fname in ("report.json", "report.tsv", "curves.tsv"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()
    report = json.loads((outs[0] / "report.json").read_text())
    assert set(report["algorithms"]) == {"mp", "3l", "3lt-tag"}
    assert report["notes"]["paper_scale_comparable"] is False
    assert report["notes"]["not_implemented"] == {
        "fm": "n/a (external factorization framework)",
        "pitf": "n/a (external factorization framework)",
    }
    assert "f1_at_5" in report["pairwise_p"]


def test_eval_renders_figures_by_default(pipeline):
    root, _, split_dir, model = pipeline
    out_dir = root / "efig"
    code = main(
        [
            "eval",
            "--train", str(split_dir / "train.tsv"),
            "--test", str(split_dir / "test.tsv"),
            "--model", str(model),
            "--algos", "mp-u,mp-r",
            "--out-dir", str(out_dir),
        ]
    )
    assert code == 0
    assert (out_dir / "precision_recall.png").stat().st_size > 0


def test_drift_outputs(pipeline):
    root, snap, _, _ = pipeline
    model_full = root / "model_full.json"
    assert (
        main(
            [
                "lda",
                "--train", str(snap),
                "--topics", "2",
                "--iters", "40",
                "--seed", "9",
                "--out", str(model_full),
            ]
        )
        == 0
    )
    out_dir = root / "drift"
    code = main(
        [
            "drift",
            "--data", str(snap),
            "--model", str(model_full),
            "--max-lag", "60",
            "--out-dir", str(out_dir),
        ]
    )
    assert code == 0
    text = (out_dir / "drift_bookmarks.tsv").read_text()
    assert text.splitlines()[0].startswith("# fingerprint=")
    assert text.splitlines()[2] == "lag\tmean_gist_sim\tmean_verbatim_sim\tn_users"
    assert (out_dir / "drift_days.tsv").exists()
    assert (out_dir / "drift.png").stat().st_size > 0


def test_paper_mode_trains_on_union(pipeline):
    root, snap, split_dir, _ = pipeline
    model = root / "model_paper.json"
    code = main(
        [
            "lda",
            "--train", str(split_dir / "train.tsv"),
            "--test", str(split_dir / "test.tsv"),
            "--paper-mode",
            "--topics", "2",
            "--iters", "20",
            "--seed", "9",
            "--out", str(model),
        ]
    )
    assert code == 0
    payload = json.loads(model.read_text())
    # union of train+test must equal the original snapshot
    from folkrec.folksonomy import ingest

    assert payload["trained_on"] == ingest(str(snap)).fingerprint()
    # and the eval stage accepts a paper-mode model
    code = main(
        [
            "eval",
            "--train", str(split_dir / "train.tsv"),
            "--test", str(split_dir / "test.tsv"),
            "--model", str(model),
            "--algos", "3l",
            "--no-figures",
            "--out-dir", str(root / "eval_paper"),
        ]
    )
    assert code == 0


class TestErrorPaths:
    def test_missing_input_exit_3(self, tmp_path):
        assert main(["ingest", "--data", str(tmp_path / "nope.tsv"), "--out", str(tmp_path / "o.tsv")]) == 3

    def test_malformed_data_exit_5(self, tmp_path):
        bad = tmp_path / "bad.tsv"
        bad.write_text("only\ttwo\n")
        assert main(["ingest", "--data", str(bad), "--out", str(tmp_path / "o.tsv")]) == 5

    def test_unknown_algorithm_exit_2(self, pipeline):
        root, _, split_dir, model = pipeline
        code = main(
            [
                "eval",
                "--train", str(split_dir / "train.tsv"),
                "--test", str(split_dir / "test.tsv"),
                "--model", str(model),
                "--algos", "mp,wat",
                "--no-figures",
                "--out-dir", str(root / "bad"),
            ]
        )
        assert code == 2

    def test_unknown_algo_choice_usage_error(self, pipeline):
        root, _, split_dir, model = pipeline
        with pytest.raises(SystemExit) as exc:
            main(
                [
                    "recommend",
                    "--train", str(split_dir / "train.tsv"),
                    "--test", str(split_dir / "test.tsv"),
                    "--algo", "wat",
                    "--out", str(root / "x.tsv"),
                ]
            )
        assert exc.value.code == 2

    def test_fingerprint_mismatch_exit_4(self, pipeline, tmp_path):
        root, snap, split_dir, model = pipeline
        # a model trained on a different dataset must be refused
        other = tmp_path / "other.tsv"
        other.write_text("ua\tra\tx\t10\nua\trb\ty\t20\nub\trc\tz\t30\nub\trd\tw\t40\n")
        other_dir = tmp_path / "osplit"
        assert main(["split", "--data", str(other), "--out-dir", str(other_dir)]) == 0
        code = main(
            [
                "eval",
                "--train", str(other_dir / "train.tsv"),
                "--test", str(other_dir / "test.tsv"),
                "--model", str(model),
                "--algos", "3l",
                "--no-figures",
                "--out-dir", str(tmp_path / "e"),
            ]
        )
        assert code == 4

    def test_topics_mismatch_exit_2(self, pipeline):
        root, _, split_dir, model = pipeline
        code = main(
            [
                "recommend",
                "--train", str(split_dir / "train.tsv"),
                "--test", str(split_dir / "test.tsv"),
                "--model", str(model),
                "--topics", "7",
                "--algo", "3l",
                "--out", str(root / "never.tsv"),
            ]
        )
        assert code == 2

    def test_model_required_for_memory_variants_exit_2(self, pipeline):
        root, _, split_dir, _ = pipeline
        code = main(
            [
                "recommend",
                "--train", str(split_dir / "train.tsv"),
                "--test", str(split_dir / "test.tsv"),
                "--algo", "3lt-tag",
                "--out", str(root / "never2.tsv"),
            ]
        )
        assert code == 2


def test_fixture_command_round_trips(tmp_path):
    out = tmp_path / "fixture.tsv"
    assert main(["fixture", "--out", str(out)]) == 0
    assert out.read_text() == drift_corpus().to_tsv()
