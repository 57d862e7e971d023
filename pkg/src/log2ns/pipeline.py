"""Staged pipeline: ingest -> vocab -> pairs -> train -> vectorize -> cluster -> compile.

Each stage persists one artifact and is skipped when the fingerprint of its
inputs (upstream artifact hashes plus parameters) is unchanged, so editing
only the firewall config re-runs only the compile stage.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np
from filelock import FileLock

from log2ns import cluster as clustering
from log2ns import ingest
from log2ns.embedding import (
    PairSchema,
    TrainingParams,
    build_huffman,
    default_backend,
    generate_pairs,
    model_from_bytes,
    model_to_bytes,
    pairs_to_array,
    train_skipgram_hs,
    vocabulary_from_text,
    vocabulary_to_text,
)
from log2ns.embedding.vocab import build_vocabulary
from log2ns.policy.config import canonical_config_json, parse_config
from log2ns.policy.model import compile_rules
from log2ns.store import ProjectStore, fingerprint

STAGES = ("ingest", "vocab", "pairs", "train", "vectorize", "cluster", "compile")

STAGE_ARTIFACT = {
    "ingest": "corpus",
    "vocab": "vocabulary",
    "pairs": "pairs",
    "train": "embedding",
    "vectorize": "row_vectors",
    "cluster": "clusters",
    "compile": "firewall",
}


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def load_pipeline_config(source) -> dict:
    if isinstance(source, dict):
        doc = dict(source)
    else:
        doc = json.loads(Path(source).read_text())
    doc.setdefault("log_format", "csv_with_header")
    doc.setdefault("tokenize", {})
    doc["tokenize"].setdefault(
        "fields", ["src_ip", "dst_ip", "application", "protocol", "dst_region"]
    )
    doc["tokenize"].setdefault("bytes_bucket_base", 10)
    doc.setdefault(
        "pair_schema",
        [["src_ip", "dst_ip"], ["src_ip", "application"], ["application", "dst_ip"],
         ["dst_region", "src_ip"], ["dst_region", "application"]],
    )
    doc.setdefault("embedding", {})
    for key, value in (("dimension", 32), ("epochs", 5), ("learning_rate", 0.025), ("seed", 1)):
        doc["embedding"].setdefault(key, value)
    doc.setdefault("vectorize", {"mode": "concat"})
    doc.setdefault("cluster", {})
    doc["cluster"].setdefault("k", 20)
    doc["cluster"].setdefault("seed", 7)
    doc["cluster"].setdefault("restarts", 10)
    return doc


def _scheme(doc: dict) -> ingest.TokenScheme:
    return ingest.TokenScheme(
        fields=tuple(doc["tokenize"]["fields"]),
        bytes_bucket_base=int(doc["tokenize"]["bytes_bucket_base"]),
    )


def _npy_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.save(buf, arr)
    return buf.getvalue()


def _npy_load(data: bytes) -> np.ndarray:
    return np.load(io.BytesIO(data))


def stage_ingest(store: ProjectStore, doc: dict, base_dir: Path) -> str:
    source_path = (base_dir / doc["log_source"]).resolve()
    raw = source_path.read_bytes()
    fp = fingerprint("ingest", raw, doc["log_format"])
    if store.is_current("corpus", fp):
        return "skipped"
    result = ingest.parse_flow_log(raw, doc["log_format"])
    store.put(
        "corpus",
        ingest.corpus_to_json(result).encode(),
        "ingest",
        {"source": str(source_path), "format": doc["log_format"], "rejects": len(result.rejects)},
        fp,
    )
    return "built"


def stage_vocab(store: ProjectStore, doc: dict) -> str:
    corpus_sha = store.latest("corpus")["sha256"]
    fp = fingerprint("vocab", corpus_sha, doc["tokenize"])
    if store.is_current("vocabulary", fp):
        return "skipped"
    corpus = ingest.corpus_from_json(store.read("corpus").decode()).corpus
    vocab = build_vocabulary(corpus, _scheme(doc))
    store.put("vocabulary", vocabulary_to_text(vocab).encode(), "vocab", doc["tokenize"], fp)
    return "built"


def stage_pairs(store: ProjectStore, doc: dict) -> str:
    corpus_sha = store.latest("corpus")["sha256"]
    vocab_sha = store.latest("vocabulary")["sha256"]
    fp = fingerprint("pairs", corpus_sha, vocab_sha, doc["pair_schema"])
    if store.is_current("pairs", fp):
        return "skipped"
    corpus = ingest.corpus_from_json(store.read("corpus").decode()).corpus
    vocab = vocabulary_from_text(store.read("vocabulary").decode())
    schema = PairSchema(entries=tuple((c, t) for c, t in doc["pair_schema"]))
    arr = pairs_to_array(generate_pairs(corpus, schema, vocab, _scheme(doc)))
    store.put("pairs", _npy_bytes(arr), "pairs", {"schema": doc["pair_schema"]}, fp)
    return "built"


def stage_train(store: ProjectStore, doc: dict) -> str:
    pairs_sha = store.latest("pairs")["sha256"]
    vocab_sha = store.latest("vocabulary")["sha256"]
    backend = default_backend()
    fp = fingerprint("train", pairs_sha, vocab_sha, doc["embedding"], backend)
    if store.is_current("embedding", fp):
        return "skipped"
    vocab = vocabulary_from_text(store.read("vocabulary").decode())
    arr = _npy_load(store.read("pairs"))
    params = TrainingParams(
        dimension=int(doc["embedding"]["dimension"]),
        epochs=int(doc["embedding"]["epochs"]),
        learning_rate=float(doc["embedding"]["learning_rate"]),
        seed=int(doc["embedding"]["seed"]),
    )
    model = train_skipgram_hs(arr, vocab, tree=build_huffman(vocab), params=params, backend=backend)
    model.meta["scheme_fields"] = list(doc["tokenize"]["fields"])
    model.meta["pair_schema"] = doc["pair_schema"]
    store.put(
        "embedding", model_to_bytes(model), "train",
        {**doc["embedding"], "backend": backend}, fp,
    )
    return "built"


def stage_vectorize(store: ProjectStore, doc: dict) -> str:
    corpus_sha = store.latest("corpus")["sha256"]
    embedding_sha = store.latest("embedding")["sha256"]
    fp = fingerprint("vectorize", corpus_sha, embedding_sha, doc["vectorize"])
    if store.is_current("row_vectors", fp):
        return "skipped"
    corpus = ingest.corpus_from_json(store.read("corpus").decode()).corpus
    model = model_from_bytes(store.read("embedding"))
    rvs = clustering.vectorize_rows(
        corpus,
        model,
        mode=doc["vectorize"].get("mode", "concat"),
        weights=doc["vectorize"].get("weights"),
        bytes_bucket_base=int(doc["tokenize"]["bytes_bucket_base"]),
    )
    matrix = np.stack([rv.vector for rv in rvs]).astype("<f4") if rvs else np.zeros((0, 0), "<f4")
    store.put("row_vectors", _npy_bytes(matrix), "vectorize", doc["vectorize"], fp)
    return "built"


def stage_cluster(store: ProjectStore, doc: dict) -> str:
    rowvec_sha = store.latest("row_vectors")["sha256"]
    fp = fingerprint("cluster", rowvec_sha, doc["cluster"])
    if store.is_current("clusters", fp):
        return "skipped"
    matrix = _npy_load(store.read("row_vectors")).astype(np.float64)
    params = doc["cluster"]
    seed = int(params["seed"])
    restarts = int(params["restarts"])
    if "k_range" in params:
        lo, hi = params["k_range"]
        k, _scores = clustering.select_k(matrix, range(int(lo), int(hi) + 1), seed=seed, restarts=restarts)
    else:
        k = int(params["k"])
    model = clustering.kmeans_fit(matrix, k, seed=seed, restarts=restarts)
    store.put("clusters", clustering.clusters_to_bytes(model), "cluster", params, fp)
    return "built"


def stage_compile(store: ProjectStore, doc: dict, base_dir: Path) -> str:
    config_path = (base_dir / doc["firewall_config"]).resolve()
    raw = config_path.read_bytes()
    fp = fingerprint("compile", raw)
    if store.is_current("firewall", fp):
        return "skipped"
    config = parse_config(raw)
    compile_rules(config)  # validate it compiles before persisting
    store.put(
        "firewall", canonical_config_json(config).encode(), "compile",
        {"source": str(config_path), "rules": len(config.rules)}, fp,
    )
    return "built"


def run_pipeline(store: ProjectStore, config_source, base_dir: Path | None = None) -> dict[str, str]:
    """Run all stages in order; stages with unchanged inputs are skipped.

    Pipeline runs are exclusive per store (lock file); stage errors abort
    with the stage name while earlier artifacts stay persisted.
    """
    doc = load_pipeline_config(config_source)
    if base_dir is None:
        base_dir = Path(config_source).parent if isinstance(config_source, (str, Path)) else Path(".")
    store.ensure()
    outcomes: dict[str, str] = {}
    with FileLock(str(store.lock_path)):
        for stage in STAGES:
            try:
                if stage == "ingest":
                    outcomes[stage] = stage_ingest(store, doc, base_dir)
                elif stage == "vocab":
                    outcomes[stage] = stage_vocab(store, doc)
                elif stage == "pairs":
                    outcomes[stage] = stage_pairs(store, doc)
                elif stage == "train":
                    outcomes[stage] = stage_train(store, doc)
                elif stage == "vectorize":
                    outcomes[stage] = stage_vectorize(store, doc)
                elif stage == "cluster":
                    outcomes[stage] = stage_cluster(store, doc)
                else:
                    outcomes[stage] = stage_compile(store, doc, base_dir)
            except Exception as exc:
                raise PipelineError(stage, exc) from exc
    return outcomes


def load_artifacts(store: ProjectStore, names=("corpus", "embedding", "clusters", "firewall")) -> dict:
    """Parse the latest artifacts into live objects."""
    out: dict = {}
    for name in names:
        if name == "corpus":
            out["corpus"] = ingest.corpus_from_json(store.read("corpus").decode()).corpus
        elif name == "embedding":
            out["embedding"] = model_from_bytes(store.read("embedding"))
        elif name == "clusters":
            out["clusters"] = clustering.clusters_from_bytes(store.read("clusters"))
        elif name == "firewall":
            out["firewall"] = compile_rules(parse_config(store.read("firewall")))
        elif name == "row_vectors":
            out["row_vectors"] = _npy_load(store.read("row_vectors")).astype(np.float64)
    return out
