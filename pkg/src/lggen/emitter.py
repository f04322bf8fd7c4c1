"""Turn realized patterns into annotated examples and write training files."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional

from .core import GrammarError, Part
from .generator import UtterancePattern
from .morphology import RealizedText

REQUEST_ACTION = "request_action"
REQUEST_INFORMATION = "request_information"


class MissingIntentComponents(GrammarError):
    pass


class UnrepresentableText(GrammarError):
    pass


@dataclass(frozen=True)
class Entity:
    start: int
    end: int
    entity: str
    value: str

    def as_dict(self) -> dict:
        return {"start": self.start, "end": self.end, "entity": self.entity, "value": self.value}


@dataclass(frozen=True)
class AnnotatedExample:
    text: str
    intent: str
    entities: tuple[Entity, ...] = ()
    tags: dict = field(default_factory=dict, compare=True, hash=False)
    weight: float = 0.0

    def as_dict(self) -> dict:
        return {
            "text": self.text,
            "intent": self.intent,
            "entities": [e.as_dict() for e in self.entities],
            "tags": self.tags,
            "weight": self.weight,
        }


@dataclass
class Dataset:
    examples: list[AnnotatedExample]
    metadata: dict = field(default_factory=dict)


def resolve_intent(pattern: UtterancePattern) -> str:
    """Intent label of a pattern.

    An explicit ``intent`` annotation wins.  Otherwise the label is
    ``event_cat.req_type``, where a path without a discourse marker uses
    ``request_action`` for the request part and a path without an event uses
    ``request_information`` for the event part.
    """
    ann = pattern.utterance_annotations
    if ann.get("intent"):
        return ann["intent"]
    has_event = Part.EVENT in pattern.parts
    has_dm = pattern.dm_graph is not None

    req = ann.get("req_type")
    if req is None and pattern.tags.request_type is not None:
        req = pattern.tags.request_type.value
    if req is None and not has_dm:
        req = REQUEST_ACTION

    event = ann.get("event_cat")
    if not has_event:
        event = REQUEST_INFORMATION

    missing = [name for name, v in (("event_cat", event), ("req_type", req)) if not v]
    if missing:
        where = pattern.plain_text() or "<empty>"
        raise MissingIntentComponents(f"cannot compose intent for {where!r}: missing {', '.join(missing)}")
    return f"{event}.{req}"


def _outermost(ranges: list[tuple[int, int, str]]):
    kept, dropped = [], []
    for r in sorted(ranges, key=lambda r: (r[0], -r[1])):
        if kept and r[0] >= kept[-1][0] and r[1] <= kept[-1][1]:
            dropped.append(r)
        else:
            kept.append(r)
    return kept, dropped


def build_example(pattern: UtterancePattern, realized: RealizedText, weight: float = 0.0) -> AnnotatedExample:
    text = realized.text
    ranges = []
    for etype, first, last in pattern.spans:
        start, end = realized.char_range(first, last)
        if end > start:
            ranges.append((start, end, etype))
    kept, dropped = _outermost(ranges)
    entities = tuple(Entity(s, e, t, text[s:e]) for s, e, t in kept)
    tags = {
        "honorific": pattern.tags.honorific and pattern.tags.honorific.value,
        "sentence_type": pattern.tags.sentence_type and pattern.tags.sentence_type.value,
        "request_type": pattern.tags.request_type and pattern.tags.request_type.value,
        "dm_graph": pattern.dm_graph,
        "modules": list(pattern.modules),
        "dropped_spans": [Entity(s, e, t, text[s:e]).as_dict() for s, e, t in dropped],
    }
    return AnnotatedExample(text, resolve_intent(pattern), entities, tags, weight)


def deduplicate(examples: Iterable[AnnotatedExample]) -> list[AnnotatedExample]:
    seen = set()
    out = []
    for ex in examples:
        key = (ex.text, ex.intent)
        if key not in seen:
            seen.add(key)
            out.append(ex)
    return out


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def emit_jsonl(dataset: Dataset, sink: IO[str]) -> int:
    """Write one JSON object per example; returns the number of UTF-8 bytes written."""
    written = 0
    for ex in dataset.examples:
        line = _dumps(ex.as_dict()) + "\n"
        sink.write(line)
        written += len(line.encode("utf-8"))
    return written


def parse_jsonl(text: str) -> Dataset:
    examples = []
    for line in text.split("\n"):
        if not line:
            continue
        obj = json.loads(line)
        ents = tuple(Entity(e["start"], e["end"], e["entity"], e["value"]) for e in obj["entities"])
        examples.append(AnnotatedExample(obj["text"], obj["intent"], ents, obj["tags"], obj["weight"]))
    return Dataset(examples)


# Inline markup: [value](entity).  Backslash escapes \\ \[ \] \( \) everywhere.
_ESCAPE = re.compile(r"([\\\[\]()])")


def escape_markup(text: str) -> str:
    return _ESCAPE.sub(r"\\\1", text)


def unescape_markup(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text)


_YAML_LINE_BREAKS = frozenset("\n\r\x85\u2028\u2029")


def _yaml_printable(ch: str) -> bool:
    c = ord(ch)
    return (c == 0x9 or 0x20 <= c <= 0x7E or 0xA0 <= c <= 0xD7FF
            or 0xE000 <= c <= 0xFFFD or 0x10000 <= c <= 0x10FFFF) and c != 0xFEFF


def markup(example: AnnotatedExample) -> str:
    text = example.text
    for ch in text:
        if ch in _YAML_LINE_BREAKS:
            raise UnrepresentableText(f"line break inside utterance {text!r}")
        if not _yaml_printable(ch):
            raise UnrepresentableText(f"character U+{ord(ch):04X} cannot appear in a YAML block")
    out = []
    pos = 0
    for e in example.entities:
        out.append(escape_markup(text[pos:e.start]))
        out.append(f"[{escape_markup(e.value)}]({e.entity})")
        pos = e.end
    out.append(escape_markup(text[pos:]))
    return "".join(out)


_TOKEN = re.compile(r"\\(.)|\[((?:\\.|[^\\\]])*)\]\(([^()\s]+)\)|(.)", re.S)


def strip_markup(line: str) -> tuple[str, list[Entity]]:
    """Inverse of :func:`markup`: plain text plus entity offsets."""
    out: list[str] = []
    length = 0
    entities = []
    for m in _TOKEN.finditer(line):
        escaped, value, etype, plain = m.groups()
        if escaped is not None:
            piece = escaped
        elif value is not None:
            piece = unescape_markup(value)
            entities.append(Entity(length, length + len(piece), etype, piece))
        else:
            piece = plain
        out.append(piece)
        length += len(piece)
    return "".join(out), entities


def _yaml_scalar(value: str) -> str:
    return json.dumps(value, ensure_ascii=False)


def emit_yaml(dataset: Dataset, sink: IO[str]) -> int:
    """Write examples grouped by intent (first-appearance order) with inline markup."""
    groups: dict[str, list[AnnotatedExample]] = {}
    for ex in dataset.examples:
        groups.setdefault(ex.intent, []).append(ex)
    lines = ['version: "1.0"', "", "nlu:"]
    for intent, examples in groups.items():
        lines.append(f"- intent: {_yaml_scalar(intent)}")
        lines.append("  examples: |")
        for ex in examples:
            lines.append(f"    - {markup(ex)}")
    text = "\n".join(lines) + "\n"
    sink.write(text)
    return len(text.encode("utf-8"))


def parse_yaml_examples(text: str) -> list[tuple[str, str]]:
    """Read back (intent, marked-up line) pairs from a file written by :func:`emit_yaml`."""
    import yaml

    doc = yaml.safe_load(text)
    out = []
    for block in doc.get("nlu") or []:
        for line in block["examples"].splitlines():
            if line.startswith("- "):
                out.append((block["intent"], line[2:]))
    return out
