import json

import pytest
from click.testing import CliRunner

from casengine.cli import main
from casengine.datasets import build_artist_dataset, build_artwork_dataset, save_dataset
from casengine.scorer import train
from casengine.vocab import build_artist_records, save_artworks


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def workspace(tmp_path, synthetic_corpus):
    """Vocabulary, tagged artworks, and trained scorer files on disk."""
    vocabulary, artworks, artists = synthetic_corpus
    vocab_file = tmp_path / "vocab.txt"
    vocabulary.save(vocab_file)
    artworks_file = tmp_path / "artworks.jsonl"
    save_artworks(artworks, vocabulary, artworks_file)

    coherence = train(build_artwork_dataset(artworks, 50, seed=11), vocabulary)
    context = train(build_artist_dataset(artists, 5, 50, seed=12), vocabulary)
    coh_file = tmp_path / "coherence.json"
    ctx_file = tmp_path / "context.json"
    coherence.save(coh_file)
    context.save(ctx_file)
    return {
        "dir": tmp_path,
        "vocab": vocab_file,
        "artworks": artworks_file,
        "coherence": coh_file,
        "context": ctx_file,
        "vocabulary": vocabulary,
    }


def test_build_vocab_command(runner, tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    lines = [
        {"doc_id": "d1", "tokens": ["apple", "banana", "apple"]},
        {"doc_id": "d2", "tokens": ["banana", "cherry"]},
        {"doc_id": "d3", "tokens": ["cherry", "cherry", "plum"]},
    ]
    corpus.write_text("\n".join(json.dumps(l) for l in lines))
    out = tmp_path / "vocab.txt"
    result = runner.invoke(main, ["build-vocab", str(corpus), "--top-k", "3", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert len(out.read_text().splitlines()) == 3


def test_tag_artworks_command(runner, tmp_path, workspace):
    artworks = tmp_path / "raw.jsonl"
    artworks.write_text(
        json.dumps({"artwork_id": "a1", "artist_id": "k1", "caption": "some caption text"})
        + "\n"
    )
    out = tmp_path / "tagged.jsonl"
    result = runner.invoke(
        main,
        ["tag-artworks", str(artworks), "--vocab", str(workspace["vocab"]), "--k", "4", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    tagged = json.loads(out.read_text().splitlines()[0])
    assert tagged["artwork_id"] == "a1"
    assert len(tagged["concepts"]) == 4


def test_build_datasets_and_train_scorer(runner, tmp_path, workspace):
    out_dir = tmp_path / "ds"
    result = runner.invoke(
        main,
        [
            "--seed", "5",
            "build-datasets", str(workspace["artworks"]),
            "--vocab", str(workspace["vocab"]),
            "--permutations", "10",
            "--sequences-per-artwork", "5",
            "--sequence-length", "5",
            "--out-dir", str(out_dir),
        ],
    )
    assert result.exit_code == 0, result.output
    assert (out_dir / "artwork_dataset.txt").exists()
    assert (out_dir / "artist_dataset.txt").exists()

    model_out = tmp_path / "model.json"
    result = runner.invoke(
        main,
        [
            "train-scorer", str(out_dir / "artwork_dataset.txt"),
            "--vocab", str(workspace["vocab"]),
            "--out", str(model_out),
        ],
    )
    assert result.exit_code == 0, result.output
    assert model_out.exists()


def test_sample_command_json_trace(runner, workspace):
    label = workspace["vocabulary"].label_of(0)
    result = runner.invoke(
        main,
        [
            "--seed", "3", "--format", "json",
            "sample",
            "--vocab", str(workspace["vocab"]),
            "--coherence", str(workspace["coherence"]),
            "--context", str(workspace["context"]),
            "--seed-concepts", label,
            "--n", "32", "--max-length", "4",
        ],
    )
    assert result.exit_code == 0, result.output
    out = json.loads(result.output)
    assert out["provenance"] == "cas"
    assert out["proposal"] in workspace["vocabulary"].labels()
    assert len(out["trace"]) == 32
    scores = [c["score"] for c in out["trace"]]
    assert scores == sorted(scores, reverse=True)


def test_sample_command_random_mode(runner, workspace):
    label = workspace["vocabulary"].label_of(0)
    result = runner.invoke(
        main,
        [
            "--format", "json",
            "sample",
            "--vocab", str(workspace["vocab"]),
            "--coherence", str(workspace["coherence"]),
            "--context", str(workspace["context"]),
            "--seed-concepts", label,
            "--mode", "random",
        ],
    )
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["provenance"] == "random"


def test_run_and_analyze_commands(runner, tmp_path, workspace):
    config = {
        "seed_labels": [workspace["vocabulary"].label_of(0)],
        "generations": 4,
        "patience": 5,
        "sampler": "cas",
        "cas": {"n_candidates": 32, "beta": 0.85, "temperature": 2.5, "max_length": 4,
                "seed": 0, "conditioning": "seed"},
        "preserve_original": False,
        "seed": 17,
    }
    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps(config))
    out_dir = tmp_path / "run"
    result = runner.invoke(
        main,
        [
            "run",
            "--config", str(config_file),
            "--vocab", str(workspace["vocab"]),
            "--coherence", str(workspace["coherence"]),
            "--context", str(workspace["context"]),
            "--out", str(out_dir),
        ],
    )
    assert result.exit_code == 0, result.output
    assert len((out_dir / "runlog.jsonl").read_text().splitlines()) == 4

    result = runner.invoke(main, ["--format", "json", "analyze-run", str(out_dir)])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["generations"] == 4
    assert report["replay"] == report["novelty"]
    assert "exploration_radius" in report


def test_sweep_beta_command(runner, tmp_path, workspace):
    seeds_file = tmp_path / "seeds.txt"
    seeds_file.write_text(workspace["vocabulary"].label_of(0) + "\n")
    out = tmp_path / "sweep.tsv"
    result = runner.invoke(
        main,
        [
            "sweep-beta",
            "--vocab", str(workspace["vocab"]),
            "--coherence", str(workspace["coherence"]),
            "--context", str(workspace["context"]),
            "--artworks", str(workspace["artworks"]),
            "--seeds-file", str(seeds_file),
            "--temperatures", "2.5",
            "--betas", "0.0,0.85",
            "--n", "32",
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert lines[0].startswith("temperature\tbeta")
    assert len(lines) == 3


def test_repetition_command(runner, tmp_path):
    runs_file = tmp_path / "runs.json"
    runs_file.write_text(json.dumps([["A", ["moon", "tide"]], ["B", ["moon", "cliff"]]]))
    result = runner.invoke(main, ["--format", "json", "repetition", str(runs_file)])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["per_run_rate"]["A"] == 0.5
    assert report["per_run_rate"]["B"] == 0.5


def test_fit_bt_command(runner, tmp_path):
    comps = tmp_path / "comps.tsv"
    comps.write_text("A\tB\tA\n" * 3 + "A\tB\tB\n")
    result = runner.invoke(main, ["--format", "json", "fit-bt", str(comps)])
    assert result.exit_code == 0, result.output
    out = json.loads(result.output)
    assert out["theta"]["A"] > out["theta"]["B"]
    assert "A vs B" in out["significance"]


def test_typed_error_exit_code(runner, tmp_path, workspace):
    """cli_entry maps engine errors to exit code 2 with a diagnostic."""
    import subprocess
    import sys

    bad = tmp_path / "bad.csv"
    bad.write_text("only,two\n")
    proc = subprocess.run(
        [sys.executable, "-m", "casengine.cli", "fit-bt", str(bad)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "error:" in proc.stderr
