"""First-match firewall model over finite packet domains.

Each rule compiles to a union of product boxes (per-field value sets); rule
i's effective region is its guard minus every earlier guard, computed by
hyperbox difference. Satisfiability queries intersect a symbolic packet
with candidate regions and extract the lexicographically smallest witness,
which always replays to the claimed verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from log2ns.policy.config import (
    Action,
    APPLICATION_DEFAULT,
    FirewallConfig,
    SecurityRule,
)
from log2ns.policy.intervals import IntervalSet, int_to_ip, ip_to_int

# Field order fixes trace wording, witness tie-breaking, and UNSAT reasons.
PACKET_FIELDS = (
    "from_zone",
    "to_zone",
    "src_ip",
    "dst_ip",
    "application",
    "protocol",
    "dst_port",
)

_SET_FIELDS = frozenset({"from_zone", "to_zone", "application", "protocol"})
_INTERVAL_FIELDS = frozenset({"src_ip", "dst_ip", "dst_port"})

DEFAULT_RULE_NAME = "DEFAULT"


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class Packet:
    """Concrete values for every packet field; IPs as 32-bit ints."""

    from_zone: str
    to_zone: str
    src_ip: int
    dst_ip: int
    application: str
    protocol: str
    dst_port: int

    @classmethod
    def from_dict(cls, obj: dict) -> "Packet":
        return cls(
            from_zone=obj["from_zone"],
            to_zone=obj["to_zone"],
            src_ip=ip_to_int(obj["src_ip"]) if isinstance(obj["src_ip"], str) else obj["src_ip"],
            dst_ip=ip_to_int(obj["dst_ip"]) if isinstance(obj["dst_ip"], str) else obj["dst_ip"],
            application=obj["application"],
            protocol=obj["protocol"],
            dst_port=int(obj["dst_port"]),
        )

    def to_dict(self) -> dict:
        return {
            "from_zone": self.from_zone,
            "to_zone": self.to_zone,
            "src_ip": int_to_ip(self.src_ip),
            "dst_ip": int_to_ip(self.dst_ip),
            "application": self.application,
            "protocol": self.protocol,
            "dst_port": self.dst_port,
        }

    def value(self, field_name: str):
        return getattr(self, field_name)


@dataclass(frozen=True)
class Box:
    """Product of per-field value sets: frozenset for discrete fields,
    IntervalSet for numeric ones. Empty in any field means the empty set."""

    from_zone: frozenset
    to_zone: frozenset
    src_ip: IntervalSet
    dst_ip: IntervalSet
    application: frozenset
    protocol: frozenset
    dst_port: IntervalSet

    def get(self, field_name: str):
        return getattr(self, field_name)

    def replace(self, field_name: str, value) -> "Box":
        kwargs = {f: self.get(f) for f in PACKET_FIELDS}
        kwargs[field_name] = value
        return Box(**kwargs)

    def is_empty(self) -> bool:
        return any(_field_empty(self.get(f)) for f in PACKET_FIELDS)

    def intersect(self, other: "Box") -> "Box | None":
        kwargs = {}
        for f in PACKET_FIELDS:
            merged = _field_intersect(self.get(f), other.get(f))
            if _field_empty(merged):
                return None
            kwargs[f] = merged
        return Box(**kwargs)

    def subtract(self, other: "Box") -> "list[Box]":
        if self.intersect(other) is None:
            return [self]
        pieces: list[Box] = []
        current = self
        for f in PACKET_FIELDS:
            rest = _field_subtract(current.get(f), other.get(f))
            if not _field_empty(rest):
                pieces.append(current.replace(f, rest))
            current = current.replace(f, _field_intersect(current.get(f), other.get(f)))
        return pieces

    def contains(self, packet: Packet) -> bool:
        for f in PACKET_FIELDS:
            fv = self.get(f)
            if f in _SET_FIELDS:
                if packet.value(f) not in fv:
                    return False
            else:
                if not fv.contains(packet.value(f)):
                    return False
        return True

    def min_packet(self) -> Packet:
        vals = {}
        for f in PACKET_FIELDS:
            fv = self.get(f)
            vals[f] = min(fv) if f in _SET_FIELDS else fv.min_value()
        return Packet(**vals)

    def min_key(self) -> tuple:
        out = []
        for f in PACKET_FIELDS:
            fv = self.get(f)
            out.append(min(fv) if f in _SET_FIELDS else fv.min_value())
        return tuple(out)

    def describe(self) -> dict:
        out: dict = {}
        for f in PACKET_FIELDS:
            fv = self.get(f)
            if f in _SET_FIELDS:
                out[f] = sorted(fv)
            elif f == "dst_port":
                out[f] = [[lo, hi] for lo, hi in fv.spans]
            else:
                out[f] = [[int_to_ip(lo), int_to_ip(hi)] for lo, hi in fv.spans]
        return out


def _field_empty(v) -> bool:
    return (not v) if isinstance(v, frozenset) else v.is_empty()


def _field_intersect(a, b):
    return a & b if isinstance(a, frozenset) else a.intersect(b)


def _field_subtract(a, b):
    return a - b if isinstance(a, frozenset) else a.subtract(b)


@dataclass(frozen=True)
class SymbolicPacket:
    """Per-field constraints; None means unconstrained (the full domain)."""

    from_zone: frozenset | None = None
    to_zone: frozenset | None = None
    src_ip: IntervalSet | None = None
    dst_ip: IntervalSet | None = None
    application: frozenset | None = None
    protocol: frozenset | None = None
    dst_port: IntervalSet | None = None

    def get(self, field_name: str):
        return getattr(self, field_name)

    def to_dict(self) -> dict:
        out = {}
        for f in PACKET_FIELDS:
            fv = self.get(f)
            if fv is None:
                continue
            if f in _SET_FIELDS:
                out[f] = sorted(fv)
            elif f == "dst_port":
                out[f] = [[lo, hi] for lo, hi in fv.spans]
            else:
                out[f] = [[int_to_ip(lo), int_to_ip(hi)] for lo, hi in fv.spans]
        return out


@dataclass(frozen=True)
class Verdict:
    action: Action
    matched_rule: str
    trace_lines: tuple[str, ...]
    witness: Packet | None = None

    def to_dict(self) -> dict:
        return {
            "status": "SAT",
            "action": self.action.name,
            "matched_rule": self.matched_rule,
            "trace_lines": list(self.trace_lines),
            "witness": self.witness.to_dict() if self.witness else None,
        }


@dataclass(frozen=True)
class Unsat:
    reason: str
    field: str | None = None

    def to_dict(self) -> dict:
        return {"status": "UNSAT", "reason": self.reason, "field": self.field}


@dataclass(frozen=True)
class CompiledRule:
    index: int
    rule: SecurityRule
    guard: tuple[Box, ...]


@dataclass
class FirewallModel:
    config: FirewallConfig
    space: Box
    rules: tuple[CompiledRule, ...]
    _effective: list = field(default_factory=list, repr=False)
    _covered: list = field(default_factory=list, repr=False)
    _default_region: tuple | None = field(default=None, repr=False)

    def rule_named(self, name: str) -> CompiledRule:
        for cr in self.rules:
            if cr.rule.name == name:
                return cr
        raise PolicyError(f"unknown rule: {name!r}")


def compile_rules(config: FirewallConfig) -> FirewallModel:
    """Guarded implications with first-match precedence by box difference."""
    dom = config.domains
    space = Box(
        from_zone=frozenset(dom.zones),
        to_zone=frozenset(dom.zones),
        src_ip=dom.addresses,
        dst_ip=dom.addresses,
        application=frozenset(dom.applications),
        protocol=frozenset(dom.protocols),
        dst_port=dom.ports,
    )
    compiled = []
    for i, rule in enumerate(config.rules):
        compiled.append(CompiledRule(i, rule, tuple(_guard_boxes(rule, config, space))))
    return FirewallModel(config=config, space=space, rules=tuple(compiled))


def _guard_boxes(rule: SecurityRule, config: FirewallConfig, space: Box):
    base = Box(
        from_zone=space.from_zone if rule.from_zones is None else rule.from_zones & space.from_zone,
        to_zone=space.to_zone if rule.to_zones is None else rule.to_zones & space.to_zone,
        src_ip=space.src_ip if rule.src_addrs is None else rule.src_addrs.intersect(space.src_ip),
        dst_ip=space.dst_ip if rule.dst_addrs is None else rule.dst_addrs.intersect(space.dst_ip),
        application=space.application
        if rule.applications is None
        else rule.applications & space.application,
        protocol=space.protocol,
        dst_port=space.dst_port,
    )
    if base.is_empty():
        return
    if rule.services is None:
        yield base
        return
    if rule.is_application_default:
        # per-application expansion: an app with a default service pins
        # (protocol, port); apps without one match any service
        for app in sorted(base.application):
            svc_name = config.applications.get(app)
            app_box = base.replace("application", frozenset({app}))
            if svc_name is None:
                if not app_box.is_empty():
                    yield app_box
                continue
            svc = config.service_objects[svc_name]
            narrowed = app_box.replace(
                "protocol", frozenset({svc.protocol}) & space.protocol
            ).replace("dst_port", svc.ports.intersect(space.dst_port))
            if not narrowed.is_empty():
                yield narrowed
        return
    for svc_name in rule.services:
        svc = config.service_objects[svc_name]
        narrowed = base.replace("protocol", frozenset({svc.protocol}) & space.protocol).replace(
            "dst_port", svc.ports.intersect(space.dst_port)
        )
        if not narrowed.is_empty():
            yield narrowed


def _ensure_effective(model: FirewallModel, upto: int) -> None:
    """Effective region of rule i = guard_i minus guards 0..i-1."""
    while len(model._effective) <= upto:
        i = len(model._effective)
        pieces = list(model.rules[i].guard)
        for covered in model._covered:
            next_pieces: list[Box] = []
            for p in pieces:
                next_pieces.extend(p.subtract(covered))
            pieces = next_pieces
            if not pieces:
                break
        model._effective.append(tuple(pieces))
        model._covered.extend(model.rules[i].guard)


def effective_region(model: FirewallModel, rule_name: str) -> tuple[tuple[Box, ...], bool]:
    """Packets matching this rule and no earlier rule; shadowed when empty."""
    cr = model.rule_named(rule_name)
    _ensure_effective(model, cr.index)
    region = model._effective[cr.index]
    return region, len(region) == 0


def default_region(model: FirewallModel) -> tuple[Box, ...]:
    if model._default_region is None:
        _ensure_effective(model, len(model.rules) - 1) if model.rules else None
        pieces = [model.space]
        for covered in model._covered:
            next_pieces: list[Box] = []
            for p in pieces:
                next_pieces.extend(p.subtract(covered))
            pieces = next_pieces
            if not pieces:
                break
        model._default_region = tuple(pieces)
    return model._default_region


def _display_term(raw) -> str:
    if raw is None or raw == "any":
        return "any"
    if isinstance(raw, str):
        return raw
    return ",".join(str(t) for t in raw)


def _match_trace(rule: SecurityRule) -> tuple[str, ...]:
    lines = [f"Matched security rule {rule.name}"]
    lines.append("Matched source address")
    lines.append(f"Matched address {_display_term(rule.display.get('src_addrs'))}")
    lines.append("Matched destination address")
    dst = _display_term(rule.display.get("dst_addrs"))
    if dst != "any":
        lines.append(f"Matched address {dst}")
    lines.append(f"Matched service {_display_term(rule.display.get('services'))}")
    lines.append(f"Matched application {_display_term(rule.display.get('applications'))}")
    return tuple(lines)


DEFAULT_TRACE = ("No security rule matched", "Default action deny")


def _validate_packet(model: FirewallModel, packet: Packet) -> None:
    space = model.space
    for f in ("from_zone", "to_zone", "application", "protocol"):
        if packet.value(f) not in space.get(f):
            raise PolicyError(f"{f} value out of domain: {packet.value(f)!r}")
    for f in ("src_ip", "dst_ip", "dst_port"):
        if not space.get(f).contains(packet.value(f)):
            raise PolicyError(f"{f} value out of domain: {packet.value(f)!r}")


def evaluate_packet(model: FirewallModel, packet) -> Verdict:
    """First-match evaluation: the lowest-index rule whose guard holds wins."""
    if isinstance(packet, dict):
        packet = Packet.from_dict(packet)
    _validate_packet(model, packet)
    for cr in model.rules:
        if any(box.contains(packet) for box in cr.guard):
            return Verdict(
                action=cr.rule.action,
                matched_rule=cr.rule.name,
                trace_lines=_match_trace(cr.rule),
                witness=packet,
            )
    return Verdict(
        action=model.config.default_action,
        matched_rule=DEFAULT_RULE_NAME,
        trace_lines=DEFAULT_TRACE,
        witness=packet,
    )


def _constrain(boxes, constraints: SymbolicPacket):
    """Restrict candidate boxes field by field; report the first field that
    empties the whole candidate set."""
    current = list(boxes)
    for f in PACKET_FIELDS:
        fv = constraints.get(f)
        if fv is None:
            continue
        narrowed = []
        for b in current:
            merged = _field_intersect(b.get(f), fv)
            if not _field_empty(merged):
                narrowed.append(b.replace(f, merged))
        if current and not narrowed:
            return None, f
        current = narrowed
    return current, None


def solve(
    model: FirewallModel,
    constraints: SymbolicPacket,
    desired_action: Action | None = None,
):
    """SAT with a deterministic witness, or UNSAT; sound and complete over
    the model's finite domains."""
    candidates: list[Box] = []
    if desired_action is None:
        candidates.append(model.space)
    else:
        for cr in model.rules:
            if cr.rule.action == desired_action:
                _ensure_effective(model, cr.index)
                candidates.extend(model._effective[cr.index])
        if desired_action == model.config.default_action:
            candidates.extend(default_region(model))
        if not candidates:
            return Unsat(f"no rule yields action {desired_action.name}")

    boxes, conflict = _constrain(candidates, constraints)
    if conflict is not None:
        return Unsat(f"constraint on {conflict} excludes every candidate packet", conflict)
    if not boxes:
        return Unsat("empty candidate region")
    witness = min(boxes, key=Box.min_key).min_packet()
    verdict = evaluate_packet(model, witness)
    return Verdict(
        action=verdict.action,
        matched_rule=verdict.matched_rule,
        trace_lines=verdict.trace_lines,
        witness=witness,
    )
