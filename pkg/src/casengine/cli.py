"""Command-line surface; every subcommand is a thin adapter over one module
operation."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import analysis, datasets, scorer, vocab
from .agent import Backends, RunConfig, StubCompositor, StubImageGenerator, run
from .datasets import ConceptSequence
from .embed import DeterministicImageEmbedder, DeterministicTextEmbedder, EmbeddingCache
from .errors import EngineError
from .sampler import CasConfig, cas_sample, random_sample


def _emit(obj, fmt: str) -> None:
    if fmt == "json":
        click.echo(json.dumps(obj, indent=2, sort_keys=True, default=str))
    else:
        if isinstance(obj, dict):
            for k, v in obj.items():
                click.echo(f"{k}\t{v}")
        elif isinstance(obj, list):
            for row in obj:
                click.echo("\t".join(str(x) for x in row) if isinstance(row, (list, tuple)) else str(row))
        else:
            click.echo(str(obj))


@click.group()
@click.option("--seed", default=0, type=int, help="Root seed for all stochastic components.")
@click.option("--format", "fmt", default="text", type=click.Choice(["text", "json"]))
@click.pass_context
def main(ctx: click.Context, seed: int, fmt: str) -> None:
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["format"] = fmt


@main.command("build-vocab")
@click.argument("corpus_file", type=click.Path(exists=True))
@click.option("--top-k", default=8000, type=int)
@click.option("--stoplist", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
def build_vocab_cmd(corpus_file: str, top_k: int, stoplist: str | None, out: str) -> None:
    """Build a vocabulary from a JSONL corpus of {doc_id, tokens}."""
    docs = []
    for line in Path(corpus_file).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        docs.append((obj["doc_id"], obj["tokens"]))
    stop = set(Path(stoplist).read_text().split()) if stoplist else set()
    vocabulary = vocab.build_vocabulary(vocab.CaptionCorpus(docs), top_k, stop)
    vocabulary.save(out)
    click.echo(f"wrote {vocabulary.size} concepts to {out}")


@main.command("tag-artworks")
@click.argument("artworks_file", type=click.Path(exists=True))
@click.option("--vocab", "vocab_file", required=True, type=click.Path(exists=True))
@click.option("--k", default=10, type=int)
@click.option("--out", required=True, type=click.Path())
def tag_artworks_cmd(artworks_file: str, vocab_file: str, k: int, out: str) -> None:
    """Tag artworks (JSONL of {artwork_id, artist_id, caption}) with concepts."""
    vocabulary = vocab.Vocabulary.load(vocab_file)
    embedder = DeterministicTextEmbedder()
    concept_embeddings = {
        c.id: embedder.embed_text(c.label).values for c in vocabulary.concepts
    }
    records = []
    for line in Path(artworks_file).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        emb = embedder.embed_text(obj["caption"]).values
        ids = vocab.assign_concepts(emb, vocabulary, concept_embeddings, k)
        records.append(
            vocab.ArtworkRecord(obj["artwork_id"], obj["artist_id"], frozenset(ids))
        )
    vocab.save_artworks(records, vocabulary, out)
    click.echo(f"tagged {len(records)} artworks -> {out}")


@main.command("build-datasets")
@click.argument("artworks_file", type=click.Path(exists=True))
@click.option("--vocab", "vocab_file", required=True, type=click.Path(exists=True))
@click.option("--permutations", default=100, type=int)
@click.option("--sequences-per-artwork", default=100, type=int)
@click.option("--sequence-length", default=10, type=int)
@click.option("--out-dir", required=True, type=click.Path())
@click.pass_context
def build_datasets_cmd(
    ctx, artworks_file, vocab_file, permutations, sequences_per_artwork, sequence_length, out_dir
) -> None:
    """Emit the artwork- and artist-sequence dataset files."""
    seed = ctx.obj["seed"]
    vocabulary = vocab.Vocabulary.load(vocab_file)
    artworks = vocab.load_artworks(artworks_file, vocabulary)
    artists = vocab.build_artist_records(artworks)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    aw = datasets.build_artwork_dataset(artworks, permutations, seed)
    ar = datasets.build_artist_dataset(artists, sequence_length, sequences_per_artwork, seed)
    datasets.save_dataset(aw, vocabulary, out / "artwork_dataset.txt")
    datasets.save_dataset(ar, vocabulary, out / "artist_dataset.txt")
    click.echo(f"wrote {len(aw)} artwork and {len(ar)} artist sequences to {out}")


@main.command("train-scorer")
@click.argument("dataset_file", type=click.Path(exists=True))
@click.option("--vocab", "vocab_file", required=True, type=click.Path(exists=True))
@click.option("--alpha", default=scorer.DEFAULT_ALPHA, type=float)
@click.option("--lam", default=scorer.DEFAULT_LAMBDA, type=float)
@click.option("--out", required=True, type=click.Path())
def train_scorer_cmd(dataset_file, vocab_file, alpha, lam, out) -> None:
    """Train the reference co-occurrence scorer on a dataset file."""
    vocabulary = vocab.Vocabulary.load(vocab_file)
    ds = datasets.load_dataset(dataset_file, vocabulary)
    model = scorer.train(ds, vocabulary, alpha=alpha, lam=lam)
    model.save(out)
    click.echo(f"trained on {len(ds)} sequences -> {out}")


@main.command("sample")
@click.option("--vocab", "vocab_file", required=True, type=click.Path(exists=True))
@click.option("--coherence", "coherence_file", required=True, type=click.Path(exists=True))
@click.option("--context", "context_file", required=True, type=click.Path(exists=True))
@click.option("--seed-concepts", required=True, help="Comma-separated concept labels.")
@click.option("--beta", default=0.85, type=float)
@click.option("--n", default=256, type=int)
@click.option("--temperature", default=2.5, type=float)
@click.option("--max-length", default=10, type=int)
@click.option("--mode", default="cas", type=click.Choice(["cas", "random"]))
@click.option("--trace/--no-trace", default=True)
@click.pass_context
def sample_cmd(
    ctx, vocab_file, coherence_file, context_file, seed_concepts, beta, n, temperature,
    max_length, mode, trace,
) -> None:
    """One-shot inspiration proposal with an optional candidate trace."""
    vocabulary = vocab.Vocabulary.load(vocab_file)
    labels = [lbl.strip() for lbl in seed_concepts.split(",") if lbl.strip()]
    seed_ids = tuple(vocabulary.id_of(lbl) for lbl in labels)
    pool = set(seed_ids)
    if mode == "random":
        proposal = random_sample(vocabulary, pool, set(), ctx.obj["seed"])
    else:
        coh = scorer.CooccurrenceModel.load(coherence_file, vocabulary)
        cxt = scorer.CooccurrenceModel.load(context_file, vocabulary)
        cfg = CasConfig(
            n_candidates=n, beta=beta, temperature=temperature,
            max_length=max_length, seed=ctx.obj["seed"],
        )
        proposal = cas_sample(ConceptSequence(seed_ids), coh, cxt, cfg, pool, set())
    out = {
        "proposal": vocabulary.label_of(proposal.new_concept),
        "provenance": proposal.provenance,
    }
    if trace and proposal.candidate_trace:
        out["trace"] = [
            {
                "sequence": [vocabulary.label_of(t) for t in c.sequence.tokens],
                "nll_coherence": c.nll_coherence,
                "nll_context": c.nll_context,
                "rank_coherence": c.rank_coherence,
                "rank_context": c.rank_context,
                "score": c.score,
            }
            for c in proposal.candidate_trace
        ]
    _emit(out, ctx.obj["format"] if trace else "json")


@main.command("run")
@click.option("--config", "config_file", required=True, type=click.Path(exists=True))
@click.option("--vocab", "vocab_file", required=True, type=click.Path(exists=True))
@click.option("--coherence", "coherence_file", type=click.Path(exists=True), default=None)
@click.option("--context", "context_file", type=click.Path(exists=True), default=None)
@click.option("--generations", type=int, default=None)
@click.option("--patience", type=int, default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def run_cmd(config_file, vocab_file, coherence_file, context_file, generations, patience, out_dir) -> None:
    """Agent run from a config file with offline stub backends."""
    vocabulary = vocab.Vocabulary.load(vocab_file)
    config = RunConfig.load(config_file)
    if generations is not None:
        config.generations = generations
    if patience is not None:
        config.patience = patience
    coh = scorer.CooccurrenceModel.load(coherence_file, vocabulary) if coherence_file else None
    cxt = scorer.CooccurrenceModel.load(context_file, vocabulary) if context_file else None
    backends = Backends(
        compositor=StubCompositor(),
        image=StubImageGenerator(),
        text_embedder=DeterministicTextEmbedder(),
        image_embedder=DeterministicImageEmbedder(),
        coherence=coh,
        context=cxt,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log = run(config, backends, vocabulary, out / "runlog.jsonl", cache_dir=out, image_dir=out / "images")
    click.echo(f"completed {len(log.records)} generations -> {out / 'runlog.jsonl'}")


@main.command("sweep-beta")
@click.option("--vocab", "vocab_file", required=True, type=click.Path(exists=True))
@click.option("--coherence", "coherence_file", required=True, type=click.Path(exists=True))
@click.option("--context", "context_file", required=True, type=click.Path(exists=True))
@click.option("--artworks", "artworks_file", required=True, type=click.Path(exists=True))
@click.option("--seeds-file", required=True, type=click.Path(exists=True),
              help="One seed sequence per line, space-separated labels.")
@click.option("--temperatures", default="0.1,1.0,2.5")
@click.option("--betas", default="0.0,0.5,0.85,1.0")
@click.option("--n", default=256, type=int)
@click.option("--trials", default=1, type=int)
@click.option("--out", required=True, type=click.Path())
@click.pass_context
def sweep_beta_cmd(
    ctx, vocab_file, coherence_file, context_file, artworks_file, seeds_file,
    temperatures, betas, n, trials, out,
) -> None:
    """Grid of mean combination-validity metrics per (temperature, beta)."""
    vocabulary = vocab.Vocabulary.load(vocab_file)
    coh = scorer.CooccurrenceModel.load(coherence_file, vocabulary)
    cxt = scorer.CooccurrenceModel.load(context_file, vocabulary)
    artworks = vocab.load_artworks(artworks_file, vocabulary)
    artists = vocab.build_artist_records(artworks)
    seeds = []
    for line in Path(seeds_file).read_text().splitlines():
        if line.strip():
            seeds.append(ConceptSequence(tuple(vocabulary.id_of(l) for l in line.split())))
    cells = analysis.beta_sweep(
        seeds, coh, cxt, artworks, artists,
        [float(x) for x in temperatures.split(",")],
        [float(x) for x in betas.split(",")],
        n_candidates=n, trials=trials, seed=ctx.obj["seed"],
    )
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("temperature\tbeta\tmean_n_art\tmean_n_cog\ttrials\n")
        for c in cells:
            fh.write(f"{c.temperature}\t{c.beta}\t{c.mean_n_art}\t{c.mean_n_cog}\t{c.trials}\n")
    click.echo(f"wrote {len(cells)} cells to {out}")


@main.command("analyze-run")
@click.argument("run_dir", type=click.Path(exists=True))
@click.pass_context
def analyze_run_cmd(ctx, run_dir) -> None:
    """Novelty replay and trajectory metrics for a logged run."""
    from .agent import GenerationRecord, replay_novelty

    run_path = Path(run_dir)
    log_path = run_path / "runlog.jsonl"
    records = [
        GenerationRecord.from_json(line)
        for line in log_path.read_text().splitlines()
        if line.strip()
    ]
    cache = EmbeddingCache(run_path / "text_embeddings.jsonl", "text")
    vectors = []
    for r in records:
        if r.status != "ok":
            continue
        v = cache.get(EmbeddingCache.content_key("text", r.prompt.encode("utf-8")))
        if v is not None:
            vectors.append(v)
    out = {"generations": len(records), "novelty": [r.novelty_combined for r in records]}
    if len(vectors) >= 3:
        traj = analysis.Trajectory(np.asarray(vectors))
        metrics = analysis.trajectory_metrics(traj)
        out["exploration_radius"] = metrics.exploration_radius
        out["return_rate"] = metrics.return_rate
        out["saturation_generation"] = metrics.saturation_generation
    out["replay"] = [n["combined"] for n in replay_novelty(log_path, run_path)]
    _emit(out, ctx.obj["format"])


@main.command("repetition")
@click.argument("runs_file", type=click.Path(exists=True))
@click.option("--threshold", default=0.85, type=float)
@click.pass_context
def repetition_cmd(ctx, runs_file, threshold) -> None:
    """Cross-run repetition from a JSON file: [[run_id, [labels...]], ...]."""
    runs = json.loads(Path(runs_file).read_text())
    report = analysis.repetition_rate(
        [(r[0], r[1]) for r in runs], DeterministicTextEmbedder(), threshold
    )
    _emit(
        {
            "per_run_rate": report.per_run_rate,
            "mean_rate": report.mean_rate,
            "top_repeated": report.top_repeated,
            "skipped_concepts": report.skipped_concepts,
        },
        ctx.obj["format"],
    )


@main.command("fit-bt")
@click.argument("comparisons_file", type=click.Path(exists=True))
@click.option("--criterion", default=None)
@click.pass_context
def fit_bt_cmd(ctx, comparisons_file, criterion) -> None:
    """Bradley-Terry skill fit from delimited comparisons."""
    comparisons = analysis.load_comparisons(comparisons_file, criterion)
    estimate = analysis.fit_bradley_terry(comparisons)
    _emit(
        {
            "theta": estimate.theta,
            "standard_error": estimate.standard_error,
            "significance": {f"{a} vs {b}": s for (a, b), s in estimate.significance.items()},
        },
        ctx.obj["format"],
    )


@main.command("serve")
@click.option("--vocab", "vocab_file", required=True, type=click.Path(exists=True))
@click.option("--coherence", "coherence_file", type=click.Path(exists=True), default=None)
@click.option("--context", "context_file", type=click.Path(exists=True), default=None)
@click.option("--data-dir", required=True, type=click.Path())
@click.option("--ui-dir", type=click.Path(), default=None)
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--seed-concepts", default=None, help="Default seed labels for new sessions.")
def serve_cmd(vocab_file, coherence_file, context_file, data_dir, ui_dir, host, port, seed_concepts) -> None:
    """Serve the interactive session API (and UI bundle when provided)."""
    import uvicorn

    from .service import ServiceContext, create_app

    vocabulary = vocab.Vocabulary.load(vocab_file)
    coh = scorer.CooccurrenceModel.load(coherence_file, vocabulary) if coherence_file else None
    cxt = scorer.CooccurrenceModel.load(context_file, vocabulary) if context_file else None
    backends = Backends(
        compositor=StubCompositor(),
        image=StubImageGenerator(),
        text_embedder=DeterministicTextEmbedder(),
        image_embedder=DeterministicImageEmbedder(),
        coherence=coh,
        context=cxt,
    )
    default = None
    if seed_concepts:
        default = RunConfig(seed_labels=[s.strip() for s in seed_concepts.split(",")])
    ctx = ServiceContext(
        vocabulary=vocabulary,
        backends=backends,
        data_dir=Path(data_dir),
        default_config=default,
    )
    uvicorn.run(create_app(ctx, ui_dir=ui_dir), host=host, port=port)


def cli_entry() -> None:
    try:
        main(standalone_mode=True)
    except EngineError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    cli_entry()
