"""Command-line entry point for the evaluation pipeline and its services."""
from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import RunConfig, build_chat_provider, build_embedding_provider, load_config
from .corpus import corpus_stats, load_corpus
from .errors import (
    DuplicateRatingError,
    NoIdeasParsedError,
    PipelineError,
    ProviderError,
    ValidationError,
)
from .humaneval import (
    RatingStore,
    SessionManager,
    SessionPlan,
    create_sessions,
    import_ratings_csv,
    load_assignments,
)
from .ioutil import canonical_dumps, write_json
from .matcher import (
    benchmark_matcher,
    embedding_score_fn,
    judge_score_fn,
    load_labeled_pairs,
)
from .pipeline import PipelineRun
from . import retrieval

EXIT_VALIDATION = 2
EXIT_PROVIDER = 3
EXIT_PARTIAL = 4


@click.group()
def cli():
    """Evaluate model-generated future research ideas against author-written ones."""


config_option = click.option(
    "--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False),
    help="Run configuration file (JSON).",
)
offline_option = click.option(
    "--offline", is_flag=True, default=False,
    help="Forbid network access; requires mock chat and hash embedding providers.",
)


def _run(config_path: str, offline: bool) -> PipelineRun:
    return PipelineRun(load_config(config_path), offline=offline)


@cli.command()
@config_option
@offline_option
def ingest(config_path, offline):
    """Validate the corpus and snapshot it into the run directory."""
    n = _run(config_path, offline).ingest()
    click.echo(f"ingested {n} papers")


@cli.command()
@config_option
@offline_option
def strip(config_path, offline):
    """Remove future-work spans and build the author idea groups."""
    run = _run(config_path, offline)
    run.ingest()
    n = run.strip()
    click.echo(f"stripped {n} papers")


@cli.command()
@config_option
def stats(config_path):
    """Per-domain word-count averages, with and without future-work text."""
    config = load_config(config_path)
    corpus = load_corpus(config.corpus)
    table = corpus_stats(corpus)
    payload = {
        domain.value: {
            "papers": s.papers,
            "avg_words_without_fwk": s.avg_words_without_fwk,
            "avg_words_fwk": s.avg_words_fwk,
        }
        for domain, s in table.items()
    }
    click.echo(canonical_dumps(payload), nl=False)


@cli.command()
@config_option
@offline_option
def generate(config_path, offline):
    """Generate ideas for every stripped paper with every configured model."""
    run = _run(config_path, offline)
    run.ingest()
    run.strip()
    n = run.generate()
    click.echo(f"generated {n} idea sets")


@cli.command()
@config_option
@offline_option
def match(config_path, offline):
    """Score each generated idea against the author idea groups."""
    run = _run(config_path, offline)
    n = run.match()
    click.echo(f"matched {n} idea sets")


@cli.command()
@config_option
@offline_option
def score(config_path, offline):
    """Aggregate match scores into per-domain alignment and diversity metrics."""
    run = _run(config_path, offline)
    run.score()
    click.echo(f"metrics written to {run.paths.metrics_file}")


@cli.command()
@config_option
@offline_option
def distinctness(config_path, offline):
    """Print per-domain idea distinctness for each model and the author series."""
    run = _run(config_path, offline)
    metrics = run.score()
    out = {}
    for domain, block in metrics["domains"].items():
        out[domain] = {"human": block.get("human_distinctness")}
        for model, m in block["models"].items():
            out[domain][model] = m["distinctness"]
    click.echo(canonical_dumps(out), nl=False)


@cli.command("bench-matcher")
@config_option
@offline_option
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Labeled pair file: {\"pairs\": [{collection, idea, label[, split]}]}.")
@click.option("--decision-threshold", type=float, default=None,
              help="Score at or above which a pair counts as matched.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def bench_matcher(config_path, offline, pairs_path, decision_threshold, out_path):
    """Benchmark the configured matcher backend on labeled idea pairs."""
    config = load_config(config_path)
    config.validate(offline=offline)
    pair_set = load_labeled_pairs(pairs_path, seed=config.seed)
    if config.matcher.backend.value == "EmbeddingThreshold":
        fn = embedding_score_fn(
            build_embedding_provider(config, offline), config.matcher.embed_threshold
        )
    else:
        fn = judge_score_fn(
            build_chat_provider(config, offline),
            config.generation_config(config.judge_model),
        )
    threshold = (
        decision_threshold if decision_threshold is not None
        else config.matcher.decision_threshold
    )
    result = benchmark_matcher(fn, pair_set, threshold)
    text = canonical_dumps(result.to_dict())
    if out_path:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


@cli.command()
@config_option
@offline_option
def report(config_path, offline):
    """Write the final run report (JSON plus flat CSV)."""
    run = _run(config_path, offline)
    run.report()
    click.echo(f"report written to {run.paths.report_file}")


@cli.command()
@config_option
@offline_option
def run(config_path, offline):
    """Run every stage: ingest, strip, generate, match, score, report."""
    pipeline = _run(config_path, offline)
    pipeline.run_all()
    click.echo(f"report written to {pipeline.paths.report_file}")
    click.echo(f"report digest {pipeline.report_digest()}")


# ---------------------------------------------------------------------------
# RAG subcommands


@cli.group()
def rag():
    """Background-knowledge retrieval and augmented generation."""


@rag.command("index")
@config_option
@offline_option
@click.option("--metadata", "metadata_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON-lines metadata: one {paper_id, title, abstract} per line.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def rag_index(config_path, offline, metadata_path, out_path):
    """Embed titles from a metadata dump into a persisted vector index."""
    config = load_config(config_path)
    embedder = build_embedding_provider(config, offline)
    records = retrieval.load_metadata(metadata_path)
    index = retrieval.build_index(records, embedder)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    retrieval.save_index(index, out_path)
    click.echo(f"indexed {len(index)} titles into {out_path}")


@rag.command("retrieve")
@config_option
@offline_option
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--title", required=True, help="Query title.")
@click.option("--k", type=int, default=retrieval.DEFAULT_TOP_K, show_default=True)
@click.option("--exclude", "exclude_id", default=None, help="Paper id to leave out of results.")
def rag_retrieve(config_path, offline, index_path, title, k, exclude_id):
    """Rank indexed titles by cosine similarity to the query title."""
    config = load_config(config_path)
    embedder = build_embedding_provider(config, offline)
    index = retrieval.load_index(index_path)
    entries = retrieval.retrieve_top_k(index, title, embedder, k=k, exclude_paper_id=exclude_id)
    payload = [
        {"paper_id": e.paper_id, "title": e.title, "similarity": e.similarity}
        for e in entries
    ]
    click.echo(canonical_dumps(payload), nl=False)


@rag.command("generate")
@config_option
@offline_option
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--paper-id", "paper_ids", multiple=True,
              help="Restrict to specific papers (default: all).")
@click.option("--k", type=int, default=retrieval.DEFAULT_TOP_K, show_default=True)
def rag_generate(config_path, offline, index_path, paper_ids, k):
    """Generate ideas with retrieved background knowledge in the prompt."""
    config = load_config(config_path)
    pipeline = PipelineRun(config, offline=offline)
    pipeline.ingest()
    pipeline.strip()
    index = retrieval.load_index(index_path)
    embedder = pipeline.embedder
    chat = pipeline.chat
    stripped = pipeline._stripped()
    if paper_ids:
        wanted = set(paper_ids)
        stripped = [s for s in stripped if s.paper_id in wanted]
        missing = wanted - {s.paper_id for s in stripped}
        if missing:
            raise ValidationError(f"unknown paper ids: {', '.join(sorted(missing))}")
    bg_dir = pipeline.paths.root / "background"
    bg_dir.mkdir(parents=True, exist_ok=True)
    extract_config = config.generation_config(config.judge_model)
    warnings = []
    count = 0
    for paper in stripped:
        entries = retrieval.retrieve_top_k(
            index, paper.title, embedder, k=k, exclude_paper_id=paper.paper_id
        )
        background = retrieval.extract_contributions(
            chat, entries, paper.paper_id, extract_config
        )
        write_json(bg_dir / f"{paper.paper_id}.json", background.to_dict())
        for model in config.models:
            ideas = retrieval.generate_with_background(
                chat, paper, background, config.generation_config(model)
            )
            out_dir = pipeline.paths.root / "ideas_rag" / model
            out_dir.mkdir(parents=True, exist_ok=True)
            write_json(out_dir / f"{paper.paper_id}.json", ideas.to_dict())
            warnings.extend(
                retrieval.overlap_warnings(ideas, background, embedder)
            )
            count += 1
    if warnings:
        write_json(pipeline.paths.root / "rag_overlap_warnings.json", warnings)
        click.echo(f"warning: {len(warnings)} ideas nearly duplicate a background passage")
    click.echo(f"generated {count} augmented idea sets")


# ---------------------------------------------------------------------------
# Human evaluation subcommands


@cli.group()
def humaneval():
    """Human rating sessions: create, serve, import, report."""


def _humaneval_manager(run_dir: str) -> SessionManager:
    directory = Path(run_dir) / "humaneval"
    plan = SessionPlan.load(directory)
    store = RatingStore(directory / "ratings.jsonl")
    return SessionManager(plan, store)


@humaneval.command("create")
@config_option
@offline_option
@click.option("--assignments", "assignments_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help='JSON {"assignments": {paper_id: [annotator, ...]}}.')
def humaneval_create(config_path, offline, assignments_path):
    """Plan rating sessions over the run's generated ideas."""
    config = load_config(config_path)
    pipeline = PipelineRun(config, offline=offline)
    idea_sets = list(pipeline._idea_sets().values())
    front = {
        s.paper_id: (s.title, s.abstract) for s in pipeline._stripped()
    }
    plan = create_sessions(
        run_id=pipeline.paths.root.name,
        idea_sets=idea_sets,
        assignments=load_assignments(assignments_path),
        paper_front_matter=front,
        overlap_fraction=config.overlap_fraction,
        seed=config.seed,
    )
    directory = pipeline.paths.humaneval_dir
    directory.mkdir(parents=True, exist_ok=True)
    plan.save(directory)
    dual = sum(1 for s in plan.sessions if s.overlap)
    click.echo(
        f"created {len(plan.sessions)} sessions ({dual} overlap) in {directory}"
    )


@humaneval.command("serve")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8277, show_default=True)
@click.option("--static", "static_dir", type=click.Path(file_okay=False), default=None,
              help="Directory of built UI assets to serve at /.")
def humaneval_serve(run_dir, host, port, static_dir):
    """Serve the rating API (and the UI, when assets are provided)."""
    from .humaneval.service import serve

    manager = _humaneval_manager(run_dir)
    click.echo(f"serving {len(manager.plan.sessions)} sessions on {host}:{port}")
    serve(manager, host=host, port=port, static_dir=static_dir)


@humaneval.command("import")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
def humaneval_import(run_dir, csv_path):
    """Load ratings from a CSV file (session_id, idea_key, relevance, novelty, feasibility)."""
    manager = _humaneval_manager(run_dir)
    result = import_ratings_csv(manager, csv_path)
    click.echo(f"stored {result.stored} ratings")
    for row_no, reason in result.rejected:
        click.echo(f"rejected row {row_no}: {reason}", err=True)
    if result.rejected:
        sys.exit(EXIT_VALIDATION)


@humaneval.command("report")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False))
def humaneval_report(run_dir):
    """Aggregate stored ratings per model (model identities revealed)."""
    manager = _humaneval_manager(run_dir)
    payload = manager.report()
    write_json(Path(run_dir) / "humaneval" / "report.json", payload)
    click.echo(canonical_dumps(payload), nl=False)


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_VALIDATION)
    except click.Abort:
        sys.exit(130)
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PARTIAL)
    except (ProviderError, NoIdeasParsedError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PROVIDER)
    except (ValidationError, DuplicateRatingError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)


if __name__ == "__main__":
    main()
