"""Synthetic flow-log generation from a firewall config.

Samples packets from the effective regions of permitting rules, so every
emitted row is traffic the policy provably allows and the generating rule
is recorded next to it. Small per-rule value pools make entities recur,
which gives embeddings and clusters real structure to find.
"""

from __future__ import annotations

import numpy as np

from log2ns.policy.config import Action, FirewallConfig, parse_config
from log2ns.policy.intervals import int_to_ip
from log2ns.policy.model import Box, FirewallModel, compile_rules, effective_region

_REGION_LABELS = ("US", "EU", "APAC", "LATAM")


def _sample_interval(iv, rng, bias_low=True) -> int:
    spans = iv.spans
    weights = np.array([hi - lo + 1 for lo, hi in spans], dtype=np.float64)
    lo, hi = spans[rng.choice(len(spans), p=weights / weights.sum())]
    if bias_low and hi - lo > 256:
        hi = lo + 255  # keep sampled hosts in a recognizable neighborhood
    return int(rng.integers(lo, hi + 1))


def _pool(box: Box, field: str, rng, size: int) -> list:
    values: set = set()
    fv = box.get(field)
    if isinstance(fv, frozenset):
        universe = sorted(fv)
        take = min(size, len(universe))
        picked = rng.choice(len(universe), size=take, replace=False)
        return [universe[int(i)] for i in picked]
    for _ in range(size * 4):
        values.add(_sample_interval(fv, rng))
        if len(values) >= size:
            break
    return sorted(values)


def generate_logs(config_source, n_rows: int, seed: int = 0):
    """Returns (rows, covering_rules): one dict row per flow plus, aligned,
    the name of the permit rule whose effective region produced it."""
    config = config_source if isinstance(config_source, FirewallConfig) else parse_config(config_source)
    model = compile_rules(config)
    rng = np.random.default_rng(seed)

    sources: list[tuple[str, Box, dict]] = []
    for rule in config.rules:
        if rule.action != Action.PERMIT:
            continue
        region, shadowed = effective_region(model, rule.name)
        if shadowed:
            continue
        for box in region[:3]:
            pools = {
                "from_zone": _pool(box, "from_zone", rng, 1),
                "to_zone": _pool(box, "to_zone", rng, 1),
                "src_ip": _pool(box, "src_ip", rng, 4),
                "dst_ip": _pool(box, "dst_ip", rng, 5),
                "application": _pool(box, "application", rng, 2),
                "protocol": _pool(box, "protocol", rng, 1),
                "dst_port": _pool(box, "dst_port", rng, 2),
            }
            sources.append((rule.name, box, pools))
    if not sources:
        raise ValueError("config has no reachable permit rules to synthesize from")

    rows: list[dict] = []
    covering: list[str] = []
    for _ in range(n_rows):
        rule_name, _, pools = sources[int(rng.integers(len(sources)))]
        dst = int(pools["dst_ip"][int(rng.integers(len(pools["dst_ip"])))])
        row = {
            "src_ip": int_to_ip(int(pools["src_ip"][int(rng.integers(len(pools["src_ip"])))])),
            "dst_ip": int_to_ip(dst),
            "protocol": str(pools["protocol"][0]),
            "dst_port": int(pools["dst_port"][int(rng.integers(len(pools["dst_port"])))]),
            "bytes_sent": int(rng.integers(60, 1_500_000)),
            "from_zone": str(pools["from_zone"][0]),
            "to_zone": str(pools["to_zone"][0]),
            "application": str(pools["application"][int(rng.integers(len(pools["application"])))]),
            "dst_region": _REGION_LABELS[dst % len(_REGION_LABELS)],
        }
        rows.append(row)
        covering.append(rule_name)
    return rows, covering


def rows_to_csv(rows: list[dict]) -> str:
    fields = (
        "src_ip", "dst_ip", "protocol", "dst_port", "bytes_sent",
        "from_zone", "to_zone", "application", "dst_region",
    )
    lines = [",".join(fields)]
    for r in rows:
        lines.append(",".join(str(r[f]) for f in fields))
    return "\n".join(lines) + "\n"
