"""Declarative firewall configuration: parsing, reference resolution, validation.

The on-disk form is a JSON document with top-level keys zones,
address_objects, address_groups, applications, application_groups,
service_objects, rules (ordered), and an optional domains block that
restricts the finite packet space. "any" is always the literal string.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from log2ns.policy.intervals import (
    FULL_IPV4,
    FULL_PORTS,
    IntervalSet,
    parse_ip_set,
    parse_ip_span,
    parse_port_set,
)


class ConfigError(ValueError):
    """The configuration document is malformed or has dangling references."""


class Action(enum.IntEnum):
    DENY = 0
    PERMIT = 1

    @classmethod
    def parse(cls, text: str) -> "Action":
        t = str(text).strip().lower()
        if t in ("permit", "allow"):
            return cls.PERMIT
        if t in ("deny", "drop"):
            return cls.DENY
        raise ConfigError(f"unknown action: {text!r}")


APPLICATION_DEFAULT = "application-default"


@dataclass(frozen=True)
class ServiceObject:
    name: str
    protocol: str
    ports: IntervalSet


@dataclass(frozen=True)
class SecurityRule:
    """One ordered filter; None means the literal "any" for that field."""

    name: str
    from_zones: frozenset[str] | None
    to_zones: frozenset[str] | None
    src_addrs: IntervalSet | None
    dst_addrs: IntervalSet | None
    applications: frozenset[str] | None
    services: tuple[str, ...] | None   # service object names; () encodes application-default
    action: Action
    display: dict = field(compare=False, default_factory=dict)

    @property
    def is_application_default(self) -> bool:
        return self.services == ()


@dataclass(frozen=True)
class Domains:
    """Finite value spaces the formal model quantifies over."""

    zones: tuple[str, ...]
    applications: tuple[str, ...]
    protocols: tuple[str, ...]
    addresses: IntervalSet
    ports: IntervalSet


@dataclass(frozen=True)
class FirewallConfig:
    zones: tuple[str, ...]
    address_objects: dict[str, IntervalSet]
    address_groups: dict[str, tuple[str, ...]]
    applications: dict[str, str | None]          # app -> default service name
    application_groups: dict[str, tuple[str, ...]]
    service_objects: dict[str, ServiceObject]
    rules: tuple[SecurityRule, ...]
    domains: Domains
    default_action: Action = Action.DENY
    source_text: str = field(compare=False, default="")


def _expand_group(kind: str, name: str, groups: dict, leaves: set, stack: tuple = ()) -> set:
    if name in stack:
        raise ConfigError(f"cyclic {kind} group through {name!r}")
    if name in leaves:
        return {name}
    if name not in groups:
        raise ConfigError(f"unknown {kind} name: {name!r}")
    out: set = set()
    for member in groups[name]:
        out |= _expand_group(kind, member, groups, leaves, stack + (name,))
    return out


def _rule_zone_set(raw, zones: set, rule: str, key: str) -> frozenset[str] | None:
    if raw is None or raw == "any":
        return None
    if isinstance(raw, str):
        raw = [raw]
    out = set()
    for z in raw:
        if z not in zones:
            raise ConfigError(f"rule {rule!r}: unknown zone {z!r} in {key}")
        out.add(z)
    return frozenset(out)


def _rule_addr_set(raw, objects, groups, rule: str, key: str) -> IntervalSet | None:
    if raw is None or raw == "any":
        return None
    if isinstance(raw, str):
        raw = [raw]
    spans: list[tuple[int, int]] = []
    for term in raw:
        if term in objects:
            spans.extend(objects[term].spans)
        elif term in groups:
            for leaf in _expand_group("address", term, groups, set(objects)):
                spans.extend(objects[leaf].spans)
        else:
            try:
                spans.append(parse_ip_span(term))
            except ValueError:
                raise ConfigError(f"rule {rule!r}: unknown address {term!r} in {key}") from None
    return IntervalSet.from_spans(spans)


def _rule_app_set(raw, apps, groups, rule: str) -> frozenset[str] | None:
    if raw is None or raw == "any":
        return None
    if isinstance(raw, str):
        raw = [raw]
    out: set[str] = set()
    for term in raw:
        if term in apps:
            out.add(term)
        elif term in groups:
            out |= _expand_group("application", term, groups, set(apps))
        else:
            raise ConfigError(f"rule {rule!r}: unknown application {term!r}")
    return frozenset(out)


def parse_config(source) -> FirewallConfig:
    """Parse and validate; every name referenced by a rule must resolve."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    elif hasattr(source, "read"):
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    else:
        text = json.dumps(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} at line {exc.lineno}") from None

    zones = tuple(doc.get("zones", ()))
    if len(set(zones)) != len(zones):
        raise ConfigError("duplicate zone names")

    address_objects: dict[str, IntervalSet] = {}
    for name, terms in doc.get("address_objects", {}).items():
        if isinstance(terms, str):
            terms = [terms]
        try:
            address_objects[name] = parse_ip_set(terms)
        except ValueError as exc:
            raise ConfigError(f"address object {name!r}: {exc}") from None

    address_groups = {
        name: tuple(members) if not isinstance(members, str) else (members,)
        for name, members in doc.get("address_groups", {}).items()
    }
    for name, members in address_groups.items():
        _expand_group("address", name, address_groups, set(address_objects))

    raw_apps = doc.get("applications", {})
    if isinstance(raw_apps, list):
        raw_apps = {a: None for a in raw_apps}
    applications: dict[str, str | None] = {}
    for name, spec in raw_apps.items():
        if spec is None:
            applications[name] = None
        elif isinstance(spec, dict):
            applications[name] = spec.get("default_service")
        elif isinstance(spec, str):
            applications[name] = spec
        else:
            raise ConfigError(f"application {name!r}: bad specification")

    application_groups = {
        name: tuple(members) if not isinstance(members, str) else (members,)
        for name, members in doc.get("application_groups", {}).items()
    }
    for name in application_groups:
        _expand_group("application", name, application_groups, set(applications))

    service_objects: dict[str, ServiceObject] = {}
    for name, spec in doc.get("service_objects", {}).items():
        try:
            ports = parse_port_set(spec.get("ports", "0-65535"))
        except (ValueError, AttributeError) as exc:
            raise ConfigError(f"service object {name!r}: {exc}") from None
        proto = str(spec.get("protocol", "")).strip().lower()
        if not proto:
            raise ConfigError(f"service object {name!r}: missing protocol")
        service_objects[name] = ServiceObject(name, proto, ports)

    for app, default in applications.items():
        if default is not None and default not in service_objects:
            raise ConfigError(f"application {app!r}: unknown default service {default!r}")

    zone_set = set(zones)
    rules: list[SecurityRule] = []
    seen_names: set[str] = set()
    for raw in doc.get("rules", ()):
        name = raw.get("name")
        if not name:
            raise ConfigError("rule without a name")
        if name in seen_names:
            raise ConfigError(f"duplicate rule name: {name!r}")
        seen_names.add(name)

        raw_services = raw.get("services", "any")
        if raw_services is None or raw_services == "any":
            services = None
        elif raw_services == APPLICATION_DEFAULT:
            services = ()
        else:
            if isinstance(raw_services, str):
                raw_services = [raw_services]
            for s in raw_services:
                if s not in service_objects:
                    raise ConfigError(f"rule {name!r}: unknown service {s!r}")
            services = tuple(raw_services)

        rules.append(
            SecurityRule(
                name=name,
                from_zones=_rule_zone_set(raw.get("from_zones", "any"), zone_set, name, "from_zones"),
                to_zones=_rule_zone_set(raw.get("to_zones", "any"), zone_set, name, "to_zones"),
                src_addrs=_rule_addr_set(
                    raw.get("src_addrs", "any"), address_objects, address_groups, name, "src_addrs"
                ),
                dst_addrs=_rule_addr_set(
                    raw.get("dst_addrs", "any"), address_objects, address_groups, name, "dst_addrs"
                ),
                applications=_rule_app_set(
                    raw.get("applications", "any"), applications, application_groups, name
                ),
                services=services,
                action=Action.parse(raw.get("action", "deny")),
                display={
                    "src_addrs": raw.get("src_addrs", "any"),
                    "dst_addrs": raw.get("dst_addrs", "any"),
                    "applications": raw.get("applications", "any"),
                    "services": raw.get("services", "any"),
                    "from_zones": raw.get("from_zones", "any"),
                    "to_zones": raw.get("to_zones", "any"),
                },
            )
        )

    dom = doc.get("domains", {})
    protocols = dom.get("protocols")
    if protocols is None:
        protocols = sorted({s.protocol for s in service_objects.values()} | {"tcp", "udp", "icmp"})
    else:
        missing = {s.protocol for s in service_objects.values()} - set(protocols)
        if missing:
            raise ConfigError(f"domains.protocols missing service protocols: {sorted(missing)}")
    addresses = parse_ip_set(dom["addresses"]) if "addresses" in dom else FULL_IPV4
    ports = parse_port_set(dom["ports"]) if "ports" in dom else FULL_PORTS
    domains = Domains(
        zones=zones,
        applications=tuple(sorted(applications)),
        protocols=tuple(protocols),
        addresses=addresses,
        ports=ports,
    )

    return FirewallConfig(
        zones=zones,
        address_objects=address_objects,
        address_groups=address_groups,
        applications=applications,
        application_groups=application_groups,
        service_objects=service_objects,
        rules=tuple(rules),
        domains=domains,
        source_text=text,
    )


def canonical_config_json(config: FirewallConfig) -> str:
    """Stable re-serialization of the original document (hash currency)."""
    return json.dumps(json.loads(config.source_text), sort_keys=True, separators=(",", ":")) + "\n"
