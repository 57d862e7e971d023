"""Row vectors from entity embeddings, K-means clustering, cluster digests.

Rows become vectors either by concatenating their entity vectors in field
order or by a weighted average; K-means (k-means++ seeding, Lloyd updates,
best of a fixed number of restarts) groups them; summaries aggregate the
member rows' field values for the analyst.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from log2ns.embedding.model import EmbeddingModel
from log2ns.ingest import LogCorpus, TokenScheme, tokenize_record


@dataclass(frozen=True)
class RowVector:
    row_index: int
    vector: np.ndarray
    missing_fields: tuple[str, ...] = ()


def vectorize_rows(
    corpus: LogCorpus,
    model: EmbeddingModel,
    mode: str = "concat",
    weights: dict[str, float] | None = None,
    fields: tuple[str, ...] | None = None,
    bytes_bucket_base: int = 10,
) -> list[RowVector]:
    """One vector per corpus row.

    concat joins entity vectors in field order; weighted_avg returns
    sum(w_f * v_f) / sum(w_f). A row missing a configured field contributes
    a zero sub-vector for it and the field is flagged on the RowVector.
    """
    if fields is None:
        fields = tuple(model.meta.get("scheme_fields", ()))
    if not fields:
        raise ValueError("no fields configured for vectorization")
    if mode not in ("concat", "weighted_avg"):
        raise ValueError(f"unknown mode: {mode}")
    if mode == "weighted_avg":
        if weights is None or any(f not in weights for f in fields):
            raise ValueError("weighted_avg requires a weight for every configured field")
        total_weight = float(sum(weights[f] for f in fields))
        if total_weight <= 0:
            raise ValueError("weights must sum to a positive value")

    d = model.dimension
    scheme = TokenScheme(fields=fields, bytes_bucket_base=bytes_bucket_base)
    out: list[RowVector] = []
    for row_index, record in enumerate(corpus.records):
        parts: list[np.ndarray] = []
        missing: list[str] = []
        for f in fields:
            if record.get(f) is None:
                parts.append(np.zeros(d, dtype=np.float32))
                missing.append(f)
                continue
            token = tokenize_record(record, TokenScheme(fields=(f,), bytes_bucket_base=bytes_bucket_base))[0]
            if token not in model.vocab:
                raise ValueError(
                    f"row {row_index}: token {token.render()} not in model vocabulary "
                    "(corpus/model mismatch)"
                )
            parts.append(model.input_vectors[model.vocab.id_of(token)])
        if mode == "concat":
            vec = np.concatenate(parts)
        else:
            stacked = np.stack(parts).astype(np.float64)
            w = np.array([weights[f] for f in fields], dtype=np.float64)
            vec = (w @ stacked) / total_weight
        out.append(RowVector(row_index, np.asarray(vec, dtype=np.float64), tuple(missing)))
    return out


def _as_matrix(vectors) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(vectors, np.ndarray):
        x = np.asarray(vectors, dtype=np.float64)
        return x, np.arange(x.shape[0])
    x = np.stack([rv.vector for rv in vectors]).astype(np.float64)
    rows = np.array([rv.row_index for rv in vectors])
    return x, rows


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray          # (k, dim) float64
    row_indices: np.ndarray        # (n,)
    labels: np.ndarray             # (n,) cluster id per vector
    sse: float
    seed: int
    sse_history: tuple[float, ...] = ()

    @property
    def assignments(self) -> dict[int, int]:
        return {int(r): int(l) for r, l in zip(self.row_indices, self.labels)}

    def members(self, cluster_id: int) -> np.ndarray:
        return self.row_indices[self.labels == cluster_id]


def _sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (n, k) squared euclidean distances
    diff = x[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    centroids[0] = x[rng.integers(n)]
    d2 = np.sum((x - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        probs = d2 / d2.sum()
        centroids[i] = x[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((x - centroids[i]) ** 2, axis=1))
    return centroids


def _lloyd(x: np.ndarray, centroids: np.ndarray, max_iter: int, tol: float):
    n, k = x.shape[0], centroids.shape[0]
    history: list[float] = []
    for _ in range(max_iter):
        d2 = _sq_dists(x, centroids)
        labels = d2.argmin(axis=1)
        history.append(float(d2[np.arange(n), labels].sum()))

        new_centroids = centroids.copy()
        taken: set[int] = set()
        empty: list[int] = []
        for j in range(k):
            mask = labels == j
            if mask.any():
                new_centroids[j] = x[mask].mean(axis=0)
            else:
                empty.append(j)
        # an empty cluster grabs the point currently worst-served by its centroid
        if empty:
            own = d2[np.arange(n), labels].copy()
            for j in empty:
                for p in np.argsort(-own, kind="stable"):
                    if int(p) not in taken:
                        new_centroids[j] = x[p]
                        taken.add(int(p))
                        break
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1).max()))
        centroids = new_centroids
        if shift < tol:
            break
    d2 = _sq_dists(x, centroids)
    labels = d2.argmin(axis=1)
    sse = float(d2[np.arange(x.shape[0]), labels].sum())
    history.append(sse)
    return centroids, labels, sse, history


def kmeans_fit(
    vectors,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-6,
    restarts: int = 10,
) -> ClusterModel:
    """Best-of-restarts Lloyd's algorithm with k-means++ seeding."""
    x, rows = _as_matrix(vectors)
    if k < 1:
        raise ValueError("k must be >= 1")
    distinct = np.unique(x, axis=0).shape[0]
    if k > distinct:
        raise ValueError(f"k={k} exceeds number of distinct vectors ({distinct})")
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        init = _kmeanspp_init(x, k, rng)
        centroids, labels, sse, history = _lloyd(x, init, max_iter, tol)
        if best is None or sse < best[2]:
            best = (centroids, labels, sse, history)
    centroids, labels, sse, history = best
    return ClusterModel(
        k=k,
        centroids=centroids,
        row_indices=rows,
        labels=labels.astype(np.int32),
        sse=sse,
        seed=seed,
        sse_history=tuple(history),
    )


def mean_silhouette(x: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette over all points; singletons score 0, one cluster scores 0."""
    present = np.unique(labels)
    if present.size < 2:
        return 0.0
    n = x.shape[0]
    d = np.sqrt(np.maximum(_sq_dists(x, x), 0.0))
    scores = np.zeros(n)
    sizes = {int(c): int((labels == c).sum()) for c in present}
    for i in range(n):
        own = int(labels[i])
        if sizes[own] == 1:
            continue
        a = d[i, labels == own].sum() / (sizes[own] - 1)
        b = min(d[i, labels == c].mean() for c in present if c != own)
        top = max(a, b)
        scores[i] = 0.0 if top == 0 else (b - a) / top
    return float(scores.mean())


def select_k(vectors, k_range, seed: int = 0, restarts: int = 10):
    """Fit each k; report SSE and mean silhouette; best k maximizes silhouette."""
    ks = list(k_range)
    if not ks:
        raise ValueError("k_range is empty")
    x, _ = _as_matrix(vectors)
    scores = []
    for k in ks:
        model = kmeans_fit(vectors, k, seed=seed, restarts=restarts)
        scores.append(
            {"k": int(k), "sse": model.sse, "silhouette": mean_silhouette(x, model.labels)}
        )
    best = max(scores, key=lambda s: (s["silhouette"], -s["k"]))
    return best["k"], scores


@dataclass(frozen=True)
class ClusterSummary:
    cluster_id: int
    member_count: int
    top_src_ips: tuple[tuple[str, int], ...]
    top_dst_ips: tuple[tuple[str, int], ...]
    top_applications: tuple[tuple[str, int], ...]
    top_zone_pairs: tuple[tuple[tuple[str, str], int], ...]

    def to_dict(self) -> dict:
        return {
            "id": self.cluster_id,
            "member_count": self.member_count,
            "top_src_ips": [[v, c] for v, c in self.top_src_ips],
            "top_dst_ips": [[v, c] for v, c in self.top_dst_ips],
            "top_applications": [[v, c] for v, c in self.top_applications],
            "top_zone_pairs": [[[a, b], c] for (a, b), c in self.top_zone_pairs],
        }


def _top_counts(values, limit: int):
    counts: dict = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(ordered[:limit])


def summarize_cluster(
    cluster_id: int, model: ClusterModel, corpus: LogCorpus, top_n: int = 10
) -> ClusterSummary:
    if not 0 <= cluster_id < model.k:
        raise ValueError(f"cluster id out of range: {cluster_id}")
    rows = [corpus.records[int(r)] for r in model.members(cluster_id)]
    return ClusterSummary(
        cluster_id=cluster_id,
        member_count=len(rows),
        top_src_ips=_top_counts((r.src_ip for r in rows), top_n),
        top_dst_ips=_top_counts((r.dst_ip for r in rows), top_n),
        top_applications=_top_counts(
            (r.application for r in rows if r.application is not None), top_n
        ),
        top_zone_pairs=_top_counts(
            (
                (r.from_zone, r.to_zone)
                for r in rows
                if r.from_zone is not None and r.to_zone is not None
            ),
            top_n,
        ),
    )


def project_2d(vectors) -> list[tuple[int, float, float]]:
    """Variance-maximizing linear projection to two dimensions.

    Sign convention: each principal direction is flipped so its
    largest-magnitude coordinate is positive.
    """
    x, rows = _as_matrix(vectors)
    if x.shape[0] < 2:
        raise ValueError("projection needs at least 2 vectors")
    centered = x - x.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    comps = np.zeros((2, x.shape[1]))
    comps[: min(2, vt.shape[0])] = vt[:2]
    for i in range(2):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    scores = centered @ comps.T
    return [(int(r), float(sx), float(sy)) for r, (sx, sy) in zip(rows, scores)]


CLUSTER_MAGIC = "log2ns-clusters/1"


def clusters_to_bytes(model: ClusterModel) -> bytes:
    """JSON header line, then centroid matrix (<f4) and the row/label arrays (<i4)."""
    header = json.dumps(
        {
            "format": CLUSTER_MAGIC,
            "k": model.k,
            "dim": int(model.centroids.shape[1]),
            "n": int(model.labels.shape[0]),
            "seed": model.seed,
            "sse": model.sse,
            "sse_history": list(model.sse_history),
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode() + b"\n"
    return (
        header
        + np.ascontiguousarray(model.centroids, dtype="<f4").tobytes()
        + np.ascontiguousarray(model.row_indices, dtype="<i4").tobytes()
        + np.ascontiguousarray(model.labels, dtype="<i4").tobytes()
    )


def clusters_from_bytes(data: bytes) -> ClusterModel:
    newline = data.index(b"\n")
    meta = json.loads(data[:newline])
    if meta.get("format") != CLUSTER_MAGIC:
        raise ValueError("not a cluster model file")
    k, dim, n = meta["k"], meta["dim"], meta["n"]
    body = data[newline + 1 :]
    c_end = k * dim * 4
    centroids = np.frombuffer(body[:c_end], dtype="<f4").reshape(k, dim).astype(np.float64)
    rows = np.frombuffer(body[c_end : c_end + n * 4], dtype="<i4").copy()
    labels = np.frombuffer(body[c_end + n * 4 : c_end + 2 * n * 4], dtype="<i4").copy()
    return ClusterModel(
        k=k,
        centroids=centroids,
        row_indices=rows,
        labels=labels,
        sse=float(meta["sse"]),
        seed=int(meta["seed"]),
        sse_history=tuple(meta["sse_history"]),
    )
