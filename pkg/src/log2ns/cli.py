"""Command-line driver for the pipeline, queries, and the HTTP service."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from log2ns import ingest
from log2ns.pipeline import (
    PipelineError,
    load_artifacts,
    run_pipeline,
    stage_cluster,
    stage_compile,
    stage_ingest,
    stage_pairs,
    stage_train,
    stage_vectorize,
    stage_vocab,
    load_pipeline_config,
)
from log2ns.query import QueryExecutionError, QueryParseError, execute, parse_query, witness_check
from log2ns.store import ProjectStore, resolve_store_root


def _store(ctx) -> ProjectStore:
    return ProjectStore(resolve_store_root(ctx.obj.get("store"))).ensure()


def _echo_json(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


@click.group()
@click.option("--store", envvar="LOG2NS_STORE", default=None, help="Project store root.")
@click.pass_context
def main(ctx, store):
    """Flow-log statistics plus a formal policy model, one toolchain."""
    ctx.ensure_object(dict)
    ctx.obj["store"] = store


@main.command("ingest")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--rejects", type=click.Path(), default=None, help="Also write the rejects report here.")
@click.pass_context
def ingest_cmd(ctx, config_path, rejects):
    """Parse the configured flow log into the corpus artifact."""
    store = _store(ctx)
    doc = load_pipeline_config(config_path)
    outcome = stage_ingest(store, doc, Path(config_path).parent)
    if rejects:
        result = ingest.corpus_from_json(store.read("corpus").decode())
        Path(rejects).write_text(ingest.rejects_to_jsonl(result.rejects))
    click.echo(f"ingest: {outcome}")


@main.command("train")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.pass_context
def train_cmd(ctx, config_path):
    """Build vocabulary and pairs, then train the embedding."""
    store = _store(ctx)
    doc = load_pipeline_config(config_path)
    for name, stage in (("vocab", stage_vocab), ("pairs", stage_pairs), ("train", stage_train)):
        click.echo(f"{name}: {stage(store, doc)}")


@main.command("cluster")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.pass_context
def cluster_cmd(ctx, config_path):
    """Vectorize rows and fit the cluster model."""
    store = _store(ctx)
    doc = load_pipeline_config(config_path)
    for name, stage in (("vectorize", stage_vectorize), ("cluster", stage_cluster)):
        click.echo(f"{name}: {stage(store, doc)}")


@main.command("compile")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.pass_context
def compile_cmd(ctx, config_path):
    """Validate and persist the firewall model artifact."""
    store = _store(ctx)
    doc = load_pipeline_config(config_path)
    click.echo(f"compile: {stage_compile(store, doc, Path(config_path).parent)}")


@main.command("pipeline")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.pass_context
def pipeline_cmd(ctx, config_path):
    """Run every stage in order, skipping up-to-date ones."""
    store = _store(ctx)
    try:
        outcomes = run_pipeline(store, config_path)
    except PipelineError as exc:
        raise click.ClickException(str(exc)) from exc
    for stage, outcome in outcomes.items():
        click.echo(f"{stage}: {outcome}")


@main.command("query")
@click.argument("text")
@click.pass_context
def query_cmd(ctx, text):
    """Run one query line against the store's artifacts."""
    store = _store(ctx)
    try:
        query = parse_query(text)
    except QueryParseError as exc:
        click.echo(text, err=True)
        click.echo(" " * exc.position + "^", err=True)
        raise click.ClickException(str(exc)) from exc
    needed = {
        "logs": ("corpus",),
        "corr": ("embedding",),
        "formal": ("firewall",),
        "auto": ("corpus", "firewall"),
    }[query.mode]
    artifacts = load_artifacts(store, needed)
    try:
        result = execute(
            query,
            corpus=artifacts.get("corpus"),
            embedding=artifacts.get("embedding"),
            formal=artifacts.get("firewall"),
        )
    except QueryExecutionError as exc:
        raise click.ClickException(str(exc)) from exc
    _echo_json({"query": query.to_dict(), **result.to_dict()})


@main.command("witness-check")
@click.option("--n", required=True, type=int)
@click.option("--seed", default=0, type=int, show_default=True)
@click.pass_context
def witness_check_cmd(ctx, n, seed):
    """Check sampled logged flows are PERMIT-satisfiable in the model."""
    store = _store(ctx)
    artifacts = load_artifacts(store, ("corpus", "firewall"))
    report = witness_check(artifacts["corpus"], artifacts["firewall"], n, seed=seed)
    _echo_json(report.to_dict())
    if report.failures:
        sys.exit(1)


@main.command("serve")
@click.option("--bind", default="127.0.0.1:8787", show_default=True, metavar="HOST:PORT")
@click.option("--frontend", type=click.Path(), default=None, help="Static UI directory to mount.")
@click.pass_context
def serve_cmd(ctx, bind, frontend):
    """Serve the HTTP API (and optionally the analyst UI) over the store."""
    import uvicorn

    from log2ns.api import create_app

    store = _store(ctx)
    host, _, port = bind.partition(":")
    if frontend is None:
        candidate = Path("frontend/dist")
        frontend = str(candidate) if candidate.is_dir() else None
    app = create_app(store, frontend_dir=frontend)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8787), log_level="info")


if __name__ == "__main__":
    main()
