"""Versioned JSON documents for probing instances and auctions.

One schema version covers both document kinds. Constraint descriptors are
variant-tagged objects mirroring ConstraintSystem.descriptor(), so
parse(emit(x)) is the identity. Every parse failure raises ParseError with
a stable `code` (PROB_RANGE, PART_OVERLAP, ...) and a `where` path naming
the offending field; the CLI maps these to exit code 2.

Floats are emitted with 17 significant digits, enough to round-trip
float64 exactly.
"""

from __future__ import annotations

import json
import warnings
from typing import Callable, Optional

from .auction import AuctionSpec
from .constraints import (
    ConstraintError,
    ConstraintSystem,
    ExplicitSystem,
    GraphicMatroid,
    IntersectionSystem,
    LaminarMatroid,
    PartitionMatroid,
    UniformMatroid,
    mask_of,
)
from .instance import ProbingInstance, make_instance

SCHEMA_VERSION = 1

# agent entries carrying any of these keys describe a continuous law
_CONTINUOUS_KEYS = ("density", "pdf", "cdf", "distribution", "support")


class ParseError(ValueError):
    """Document rejected. `code` is stable across schema versions."""

    def __init__(self, code: str, message: str, where: str = "$"):
        self.code = code
        self.where = where
        super().__init__(f"{code} at {where}: {message}")


def _reject_unknown(obj: dict, known: tuple, where: str, strict: bool) -> None:
    for key in obj:
        if key in known:
            continue
        if strict:
            raise ParseError("UNKNOWN_FIELD", f"unknown field {key!r}", where)
        warnings.warn(f"ignoring unknown field {key!r} at {where}", stacklevel=3)


def _get(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise ParseError("BAD_FIELD", f"missing field {key!r}", where)
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError("BAD_FIELD", f"{key!r} must be a number", where)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError("BAD_FIELD", f"{key!r} must be an integer", where)
        return value
    if not isinstance(value, kind):
        raise ParseError("BAD_FIELD", f"{key!r} must be a {kind.__name__}", where)
    return value


def _int_list(values, where: str) -> list[int]:
    if not isinstance(values, list) or any(
        isinstance(v, bool) or not isinstance(v, int) for v in values
    ):
        raise ParseError("BAD_FIELD", "expected a list of integers", where)
    return list(values)


def parse_constraint(obj, n: int, where: str, strict: bool = True) -> ConstraintSystem:
    """Variant-tagged descriptor -> ConstraintSystem over a size-n universe."""
    if not isinstance(obj, dict):
        raise ParseError("BAD_FIELD", "constraint must be an object", where)
    variant = _get(obj, "variant", str, where)
    try:
        if variant == "uniform":
            _reject_unknown(obj, ("variant", "rank"), where, strict)
            return UniformMatroid(n, _get(obj, "rank", int, where))
        if variant == "partition":
            _reject_unknown(obj, ("variant", "parts", "capacities"), where, strict)
            parts = _get(obj, "parts", list, where)
            caps = _int_list(_get(obj, "capacities", list, where), where)
            return PartitionMatroid(
                n,
                parts=tuple(tuple(_int_list(p, where)) for p in parts),
                capacities=tuple(caps),
            )
        if variant == "laminar":
            _reject_unknown(obj, ("variant", "sets", "capacities"), where, strict)
            sets = _get(obj, "sets", list, where)
            caps = _int_list(_get(obj, "capacities", list, where), where)
            return LaminarMatroid(
                n,
                sets=tuple(tuple(_int_list(s, where)) for s in sets),
                capacities=tuple(caps),
            )
        if variant == "graphic":
            _reject_unknown(obj, ("variant", "vertices", "edges"), where, strict)
            edges = []
            for j, pair in enumerate(_get(obj, "edges", list, where)):
                endpoints = _int_list(pair, f"{where}.edges[{j}]")
                if len(endpoints) != 2:
                    raise ParseError(
                        "BAD_FIELD", "edge needs two endpoints", f"{where}.edges[{j}]"
                    )
                edges.append((endpoints[0], endpoints[1]))
            return GraphicMatroid(
                n,
                vertex_count=_get(obj, "vertices", int, where),
                edges=tuple(edges),
            )
        if variant == "intersection":
            _reject_unknown(obj, ("variant", "members"), where, strict)
            members = _get(obj, "members", list, where)
            return IntersectionSystem(
                members=tuple(
                    parse_constraint(m, n, f"{where}.members[{j}]", strict)
                    for j, m in enumerate(members)
                )
            )
        if variant == "explicit":
            _reject_unknown(obj, ("variant", "family"), where, strict)
            family = tuple(
                mask_of(_int_list(s, f"{where}.family[{j}]"), n)
                for j, s in enumerate(_get(obj, "family", list, where))
            )
            return ExplicitSystem(n, family=family)
    except ConstraintError as exc:
        code = {"partition": "PART_OVERLAP", "laminar": "NOT_LAMINAR"}.get(
            variant, "BAD_CONSTRAINT"
        )
        raise ParseError(code, str(exc), where) from exc
    raise ParseError("BAD_VARIANT", f"unknown constraint variant {variant!r}", where)


def _load_document(text: str, kind: str) -> dict:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("BAD_SYNTAX", str(exc)) from exc
    if not isinstance(document, dict):
        raise ParseError("BAD_SYNTAX", "top level must be an object")
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(
            "BAD_SCHEMA", f"expected schema_version {SCHEMA_VERSION}, got {version!r}"
        )
    if kind not in document:
        raise ParseError("BAD_FIELD", f"missing field {kind!r}")
    return document


def parse_instance(text: str, strict: bool = True) -> ProbingInstance:
    """Instance document -> validated ProbingInstance."""
    document = _load_document(text, "elements")
    _reject_unknown(
        document, ("schema_version", "elements", "inner", "outer"), "$", strict
    )
    entries = _get(document, "elements", list, "$")
    if not entries:
        raise ParseError("BAD_FIELD", "elements must be non-empty", "$.elements")
    weights, probs, deadlines = [], [], []
    for j, entry in enumerate(entries):
        where = f"$.elements[{j}]"
        if not isinstance(entry, dict):
            raise ParseError("BAD_FIELD", "element must be an object", where)
        _reject_unknown(entry, ("weight", "p", "deadline"), where, strict)
        weight = _get(entry, "weight", float, where)
        if not weight >= 0:
            raise ParseError("WEIGHT_RANGE", f"weight {weight} is negative", where)
        p = _get(entry, "p", float, where)
        if not 0.0 <= p <= 1.0:
            raise ParseError("PROB_RANGE", f"p {p} outside [0,1]", where)
        deadline = None
        if "deadline" in entry:
            deadline = _get(entry, "deadline", int, where)
            if deadline < 1:
                raise ParseError("DEADLINE_RANGE", f"deadline {deadline} < 1", where)
        weights.append(weight)
        probs.append(p)
        deadlines.append(deadline)
    n = len(entries)
    inner = parse_constraint(_get(document, "inner", dict, "$"), n, "$.inner", strict)
    outer = parse_constraint(_get(document, "outer", dict, "$"), n, "$.outer", strict)
    return make_instance(weights, probs, inner, outer, deadlines=deadlines)


def parse_auction(text: str, strict: bool = True) -> AuctionSpec:
    """Auction document -> validated AuctionSpec.

    Agents carry point masses over {0..B}. Continuous laws are rejected
    with a pointer: discretize onto integer values first.
    """
    document = _load_document(text, "agents")
    _reject_unknown(document, ("schema_version", "agents", "feasibility"), "$", strict)
    entries = _get(document, "agents", list, "$")
    if not entries:
        raise ParseError("BAD_FIELD", "agents must be non-empty", "$.agents")
    rows = []
    for j, entry in enumerate(entries):
        where = f"$.agents[{j}]"
        if not isinstance(entry, dict):
            raise ParseError("BAD_FIELD", "agent must be an object", where)
        for key in _CONTINUOUS_KEYS:
            if key in entry:
                raise ParseError(
                    "CONTINUOUS_UNSUPPORTED",
                    f"{key!r} describes a continuous valuation; discretize onto "
                    "integer values 0..B and supply point `masses` instead",
                    where,
                )
        _reject_unknown(entry, ("masses",), where, strict)
        masses = _get(entry, "masses", list, where)
        if not masses or any(
            isinstance(m, bool) or not isinstance(m, (int, float)) for m in masses
        ):
            raise ParseError("BAD_FIELD", "masses must be a list of numbers", where)
        rows.append(tuple(float(m) for m in masses))
    feasibility = parse_constraint(
        _get(document, "feasibility", dict, "$"), len(rows), "$.feasibility", strict
    )
    try:
        return AuctionSpec(distributions=tuple(rows), feasibility=feasibility)
    except ConstraintError as exc:
        raise ParseError("MASS_INVALID", str(exc), "$.agents") from exc


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


class _Encoder(json.JSONEncoder):
    """json.JSONEncoder printing floats with 17 significant digits."""

    def iterencode(self, o, _one_shot=False):
        def floatstr(value, **_ignored):
            if value != value or value in (float("inf"), float("-inf")):
                raise ValueError("non-finite float in document")
            return format(value, ".17g")

        indent = self.indent
        if indent is not None and not isinstance(indent, str):
            indent = " " * indent
        make = json.encoder._make_iterencode(
            {} if self.check_circular else None,
            self.default,
            json.encoder.encode_basestring_ascii,
            indent,
            floatstr,
            self.key_separator,
            self.item_separator,
            self.sort_keys,
            self.skipkeys,
            _one_shot=False,
        )
        return make(o, 0)


def dumps(document) -> str:
    return json.dumps(document, cls=_Encoder, indent=2) + "\n"


def instance_document(instance: ProbingInstance) -> dict:
    elements = []
    for element in instance.elements:
        entry: dict = {"weight": element.weight, "p": element.p}
        if element.deadline is not None:
            entry["deadline"] = element.deadline
        elements.append(entry)
    return {
        "schema_version": SCHEMA_VERSION,
        "elements": elements,
        "inner": instance.inner.descriptor(),
        "outer": instance.outer.descriptor(),
    }


def emit_instance(instance: ProbingInstance) -> str:
    return dumps(instance_document(instance))


def auction_document(spec: AuctionSpec) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "agents": [{"masses": list(row)} for row in spec.distributions],
        "feasibility": spec.feasibility.descriptor(),
    }


def emit_auction(spec: AuctionSpec) -> str:
    return dumps(auction_document(spec))


def read_instance(path, strict: bool = True) -> ProbingInstance:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_instance(handle.read(), strict=strict)


def read_auction(path, strict: bool = True) -> AuctionSpec:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_auction(handle.read(), strict=strict)
