import json
import shutil
from pathlib import Path

import pytest

from log2ns.pipeline import STAGES, load_pipeline_config, run_pipeline
from log2ns.store import ProjectStore, StoreError, fingerprint, sha256_hex

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

FAST_OVERRIDES = {
    "embedding": {"dimension": 8, "epochs": 2, "learning_rate": 0.025, "seed": 1},
    "cluster": {"k": 5, "seed": 7, "restarts": 3},
}


def fast_config(tmp_path: Path, n_rows=80, firewall="firewall_base.json") -> Path:
    doc = load_pipeline_config(FIXTURES / "pipeline.json")
    doc.update(FAST_OVERRIDES)
    doc["log_source"] = "flows.csv"
    doc["firewall_config"] = firewall

    from log2ns.synth import generate_logs, rows_to_csv

    rows, _ = generate_logs((FIXTURES / "firewall_base.json").read_text(), n_rows, seed=3)
    (tmp_path / "flows.csv").write_text(rows_to_csv(rows))
    shutil.copy(FIXTURES / "firewall_base.json", tmp_path / "firewall_base.json")
    shutil.copy(FIXTURES / "firewall_dns_deny.json", tmp_path / "firewall_dns_deny.json")
    config_path = tmp_path / "pipeline.json"
    config_path.write_text(json.dumps(doc))
    return config_path


def test_store_put_read_round_trip(tmp_path):
    store = ProjectStore(tmp_path / "store").ensure()
    entry = store.put("corpus", b"{}", "test", {"x": 1}, fingerprint("a"))
    assert entry["sha256"] == sha256_hex(b"{}")
    assert store.read("corpus") == b"{}"
    assert store.latest("corpus")["command"] == "test"


def test_store_detects_tamper(tmp_path):
    store = ProjectStore(tmp_path / "store").ensure()
    entry = store.put("corpus", b"data", "test", {}, fingerprint("a"))
    (store.root / entry["path"]).write_bytes(b"tampered")
    with pytest.raises(StoreError, match="does not match"):
        store.read("corpus")


def test_store_versions_append(tmp_path):
    store = ProjectStore(tmp_path / "store").ensure()
    store.put("corpus", b"v1", "test", {}, fingerprint("1"))
    store.put("corpus", b"v2", "test", {}, fingerprint("2"))
    assert len(store.entries("corpus")) == 2
    assert store.read("corpus") == b"v2"


def test_full_run_builds_seven_artifacts(tmp_path):
    config = fast_config(tmp_path)
    store = ProjectStore(tmp_path / "store")
    outcomes = run_pipeline(store, config)
    assert list(outcomes) == list(STAGES)
    assert all(v == "built" for v in outcomes.values())
    assert len(store.artifact_hashes()) == 7


def test_rerun_unchanged_skips_everything(tmp_path):
    config = fast_config(tmp_path)
    store = ProjectStore(tmp_path / "store")
    run_pipeline(store, config)
    outcomes = run_pipeline(store, config)
    assert all(v == "skipped" for v in outcomes.values())


def test_firewall_edit_reruns_only_compile(tmp_path):
    config = fast_config(tmp_path)
    store = ProjectStore(tmp_path / "store")
    run_pipeline(store, config)
    doc = json.loads(config.read_text())
    doc["firewall_config"] = "firewall_dns_deny.json"
    config.write_text(json.dumps(doc))
    outcomes = run_pipeline(store, config)
    assert outcomes["compile"] == "built"
    assert all(v == "skipped" for stage, v in outcomes.items() if stage != "compile")


def test_embedding_edit_reruns_downstream_stages(tmp_path):
    config = fast_config(tmp_path)
    store = ProjectStore(tmp_path / "store")
    run_pipeline(store, config)
    doc = json.loads(config.read_text())
    doc["embedding"]["seed"] = 99
    config.write_text(json.dumps(doc))
    outcomes = run_pipeline(store, config)
    assert outcomes["ingest"] == "skipped"
    assert outcomes["vocab"] == "skipped"
    assert outcomes["pairs"] == "skipped"
    assert outcomes["train"] == "built"
    assert outcomes["vectorize"] == "built"
    assert outcomes["cluster"] == "built"


def test_two_runs_bit_identical_artifacts(tmp_path):
    config = fast_config(tmp_path)
    a = ProjectStore(tmp_path / "store_a")
    b = ProjectStore(tmp_path / "store_b")
    run_pipeline(a, config)
    run_pipeline(b, config)
    assert a.artifact_hashes() == b.artifact_hashes()
