"""HTTP API over a built project store: clusters, queries, witness checks.

All handlers are read-only; artifacts are loaded once at startup and the
query grammar is parsed server-side so clients ship no query semantics.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from log2ns.cluster import project_2d, summarize_cluster
from log2ns.embedding.model import nearest_neighbors
from log2ns.ingest import Token
from log2ns.pipeline import load_artifacts
from log2ns.policy.model import effective_region
from log2ns.query import (
    QueryExecutionError,
    QueryParseError,
    execute,
    parse_query,
    witness_check,
)
from log2ns.store import ProjectStore, StoreError

REQUIRED_ARTIFACTS = ("corpus", "embedding", "clusters", "firewall")


class QueryBody(BaseModel):
    text: str


class WitnessBody(BaseModel):
    n: int
    seed: int = 0


def create_app(store: ProjectStore, frontend_dir: str | None = None) -> FastAPI:
    missing = [name for name in REQUIRED_ARTIFACTS if store.latest(name) is None]
    if missing:
        raise StoreError(f"store is missing artifacts: {', '.join(missing)}")
    artifacts = load_artifacts(store, REQUIRED_ARTIFACTS + ("row_vectors",))
    corpus = artifacts["corpus"]
    embedding = artifacts["embedding"]
    clusters = artifacts["clusters"]
    firewall = artifacts["firewall"]
    projection = [
        {"row": row, "x": x, "y": y, "cluster": int(clusters.assignments[row])}
        for row, x, y in project_2d(artifacts["row_vectors"])
    ]

    app = FastAPI(title="log2ns", docs_url=None, redoc_url=None)

    @app.get("/api/clusters")
    def list_clusters():
        return [
            summarize_cluster(cid, clusters, corpus).to_dict() for cid in range(clusters.k)
        ]

    @app.get("/api/clusters/{cluster_id}")
    def one_cluster(cluster_id: int):
        if not 0 <= cluster_id < clusters.k:
            raise HTTPException(status_code=404, detail=f"no cluster {cluster_id}")
        return summarize_cluster(cluster_id, clusters, corpus).to_dict()

    @app.get("/api/projection")
    def get_projection():
        return {"k": clusters.k, "points": projection}

    @app.get("/api/neighbors")
    def get_neighbors(token: str, k: int = 10):
        try:
            anchor = Token.parse(token)
            found = nearest_neighbors(embedding, anchor, k)
        except (ValueError, KeyError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return {"token": token, "neighbors": [[t.render(), sim] for t, sim in found]}

    @app.post("/api/query")
    def post_query(body: QueryBody):
        try:
            query = parse_query(body.text)
            result = execute(query, corpus=corpus, embedding=embedding, formal=firewall)
        except QueryParseError as exc:
            return JSONResponse(
                status_code=400,
                content={"error": exc.message, "position": exc.position},
            )
        except QueryExecutionError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return {"query": query.to_dict(), **result.to_dict()}

    @app.post("/api/witness-check")
    def post_witness_check(body: WitnessBody):
        if body.n < 0:
            return JSONResponse(status_code=400, content={"error": "n must be >= 0"})
        return witness_check(corpus, firewall, body.n, seed=body.seed).to_dict()

    @app.get("/api/rules")
    def list_rules():
        out = []
        for cr in firewall.rules:
            _, shadowed = effective_region(firewall, cr.rule.name)
            out.append(
                {
                    "index": cr.index,
                    "name": cr.rule.name,
                    "action": cr.rule.action.name,
                    "shadowed": shadowed,
                    "display": cr.rule.display,
                }
            )
        return out

    @app.get("/api/rules/{name}/effective-region")
    def rule_region(name: str):
        try:
            region, shadowed = effective_region(firewall, name)
        except ValueError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        return {"rule": name, "shadowed": shadowed, "boxes": [b.describe() for b in region]}

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")
    return app
