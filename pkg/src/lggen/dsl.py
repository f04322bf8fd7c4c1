"""Reader and writer for the ``.lgg`` graph format and ``.conj`` rule tables.

An ``.lgg`` file holds one graph::

    graph AccountCreate part=EVENT category=Account parent=EVENT_Account
    states: s0,s1,s2           # optional; otherwise inferred
    start: s0
    final: s2
    s0 -> s1 :BankName {entity=BankName}
    s0 -> s1 EPS
    s1 -> s2 STEM(개설하,C_HA) {event_cat=AccountCreate}

Labels are ``"literal"``, ``:Graph``, ``EPS``, ``STEM(surface,CLASS[,attach])``
and ``END(surface)``.  ``#`` starts a comment outside quotes.

A ``.conj`` file holds one rule per line: ``CLASS: STEM_SUFFIX + ENDING_PREFIX -> JOINED``.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .core import (
    Annotation,
    GrammarBundle,
    GrammarError,
    GrammarGraph,
    Honorific,
    LabelKind,
    ModuleTag,
    Part,
    RequestType,
    SentenceType,
    Transition,
    TransitionLabel,
)
from .morphology import ConjugationRule, ConjugationTable

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*")
_STATE = re.compile(r"[A-Za-z0-9_]+")
_ANN_KEY = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ANN_VALUE = re.compile(r"[^\s{}=,]+")
_CONJ_LINE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*): (\S+) \+ (\S+) -> (\S+)")

_HEADER_ENUMS = {
    "part": Part,
    "honorific": Honorific,
    "sentence_type": SentenceType,
    "request_type": RequestType,
}


class ParseError(GrammarError):
    def __init__(self, path: str, line: int, column: int, message: str):
        super().__init__(f"{path}:{line}:{column}: {message}")
        self.path = path
        self.line = line
        self.column = column
        self.message = message


@dataclass(frozen=True)
class SourceFile:
    path: str
    content: str
    line_index: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.line_index:
            offsets = [0]
            for i, ch in enumerate(self.content):
                if ch == "\n":
                    offsets.append(i + 1)
            object.__setattr__(self, "line_index", tuple(offsets))

    @classmethod
    def from_bytes(cls, path: str, data: bytes) -> "SourceFile":
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            head = data[: exc.start]
            line = head.count(b"\n") + 1
            col = len(head[head.rfind(b"\n") + 1:].decode("utf-8", errors="replace")) + 1
            raise ParseError(path, line, col, "invalid UTF-8") from None
        if text.startswith("\ufeff"):
            text = text[1:]
        return cls(path, text)

    @classmethod
    def from_path(cls, path) -> "SourceFile":
        p = Path(path)
        return cls.from_bytes(str(p), p.read_bytes())

    def lines(self):
        for no, line in enumerate(self.content.split("\n"), start=1):
            yield no, line[:-1] if line.endswith("\r") else line


def _strip_comment(line: str) -> str:
    in_quote = False
    escaped = False
    for i, ch in enumerate(line):
        if escaped:
            escaped = False
        elif ch == "\\" and in_quote:
            escaped = True
        elif ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            return line[:i]
    return line


class _LineScanner:
    def __init__(self, src: SourceFile, lineno: int, text: str):
        self.src = src
        self.lineno = lineno
        self.text = text
        self.pos = 0

    def error(self, message: str, pos: Optional[int] = None) -> ParseError:
        col = (self.pos if pos is None else pos) + 1
        col = max(1, min(col, len(self.text) + 1))
        return ParseError(self.src.path, self.lineno, col, message)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def match(self, pattern: re.Pattern, what: str) -> str:
        self.skip_ws()
        m = pattern.match(self.text, self.pos)
        if not m:
            raise self.error(f"expected {what}")
        self.pos = m.end()
        return m.group(0)

    def expect(self, literal: str):
        self.skip_ws()
        if not self.text.startswith(literal, self.pos):
            raise self.error(f"expected {literal!r}")
        self.pos += len(literal)

    def quoted(self) -> str:
        start = self.pos
        self.pos += 1
        out = []
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "\\":
                if self.pos + 1 >= len(self.text) or self.text[self.pos + 1] not in '"\\':
                    raise self.error("bad escape in literal")
                out.append(self.text[self.pos + 1])
                self.pos += 2
            elif ch == '"':
                self.pos += 1
                return "".join(out)
            else:
                out.append(ch)
                self.pos += 1
        raise self.error("unterminated literal", start)

    def until(self, stops: str, what: str) -> str:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in stops:
            self.pos += 1
        if self.pos >= len(self.text):
            raise self.error(f"unterminated {what}", start)
        return self.text[start:self.pos]


def _parse_label(sc: _LineScanner) -> TransitionLabel:
    sc.skip_ws()
    rest = sc.text[sc.pos:]
    start = sc.pos
    if rest.startswith('"'):
        surface = sc.quoted()
        if not surface:
            raise sc.error("empty literal", start)
        return TransitionLabel.literal(surface)
    if rest.startswith(":"):
        sc.pos += 1
        m = _IDENT.match(sc.text, sc.pos)
        if not m:
            raise sc.error("expected subgraph name after ':'")
        sc.pos = m.end()
        return TransitionLabel.call(m.group(0))
    if rest.startswith("STEM("):
        sc.pos += 5
        body = sc.until(")", "STEM(...)")
        sc.pos += 1
        pieces = body.split(",")
        if len(pieces) not in (2, 3) or not pieces[0] or not pieces[1]:
            raise sc.error("STEM expects (surface,CLASS[,attach])", start)
        if len(pieces) == 3 and pieces[2] != "attach":
            raise sc.error(f"unknown STEM attribute {pieces[2]!r}", start)
        if not _ANN_KEY.fullmatch(pieces[1]):
            raise sc.error(f"bad conjugation class {pieces[1]!r}", start)
        return TransitionLabel.stem(pieces[0], pieces[1], attach=len(pieces) == 3)
    if rest.startswith("END("):
        sc.pos += 4
        body = sc.until(")", "END(...)")
        sc.pos += 1
        if not body or "(" in body:
            raise sc.error("END expects a non-empty surface", start)
        return TransitionLabel.ending(body)
    m = re.match(r"[A-Za-z_]+", rest)
    if m and m.group(0) == "EPS" and (len(rest) == 3 or rest[3] in " \t{"):
        sc.pos += 3
        return TransitionLabel.epsilon()
    word = m.group(0) if m else rest[:1]
    raise sc.error(f"unknown label kind {word!r}")


def _parse_annotations(sc: _LineScanner) -> list[Annotation]:
    sc.pos += 1  # '{'
    out = []
    while True:
        key = sc.match(_ANN_KEY, "annotation key")
        sc.expect("=")
        sc.skip_ws()
        value = sc.match(_ANN_VALUE, "annotation value")
        out.append(Annotation.of(key, value))
        sc.skip_ws()
        if sc.text.startswith(",", sc.pos):
            sc.pos += 1
            continue
        sc.expect("}")
        return out


def _parse_transition(sc: _LineScanner) -> tuple[Transition, int, int]:
    sc.skip_ws()
    src_pos = sc.pos
    src = sc.match(_STATE, "source state")
    sc.expect("->")
    sc.skip_ws()
    dst_pos = sc.pos
    dst = sc.match(_STATE, "target state")
    label = None
    label_pos = 0
    annotations: list[Annotation] = []
    ann_pos = None
    while not sc.at_end():
        if sc.text[sc.pos] == "{":
            if ann_pos is None:
                ann_pos = sc.pos
            annotations.extend(_parse_annotations(sc))
        else:
            if label is not None:
                raise sc.error("more than one label on a transition")
            label_pos = sc.pos
            label = _parse_label(sc)
    if label is None:
        raise sc.error("transition has no label")
    if label.kind is LabelKind.EPSILON and annotations:
        raise sc.error("annotation on an epsilon transition", ann_pos if ann_pos is not None else label_pos)
    keys = [a.key for a in annotations]
    if len(set(keys)) != len(keys):
        raise sc.error("repeated annotation key", ann_pos)
    return Transition(src, dst, label, tuple(annotations)), src_pos, dst_pos


def _parse_header(sc: _LineScanner, path: str) -> tuple[str, ModuleTag]:
    sc.expect("graph")
    if sc.pos < len(sc.text) and sc.text[sc.pos] not in " \t":
        raise sc.error("malformed header")
    name = sc.match(_IDENT, "graph name")
    values: dict[str, str] = {}
    while not sc.at_end():
        kpos = sc.pos
        key = sc.match(_ANN_KEY, "header key")
        if sc.pos >= len(sc.text) or sc.text[sc.pos] != "=":
            raise sc.error("malformed header: expected key=value", kpos)
        sc.pos += 1
        m = re.compile(r"\S+").match(sc.text, sc.pos)
        if not m:
            raise sc.error("malformed header: missing value")
        sc.pos = m.end()
        if key in values:
            raise sc.error(f"malformed header: repeated key {key!r}", kpos)
        if key not in ("part", "category", "parent", *_HEADER_ENUMS):
            raise sc.error(f"malformed header: unknown key {key!r}", kpos)
        if key == "parent" and not _IDENT.fullmatch(m.group(0)):
            raise sc.error("malformed header: bad parent name", kpos)
        values[key] = m.group(0)
    if "part" not in values:
        raise sc.error("malformed header: missing part=")
    kwargs = {}
    for key, enum in _HEADER_ENUMS.items():
        if key in values:
            try:
                kwargs[key] = enum(values[key])
            except ValueError:
                raise sc.error(f"malformed header: {values[key]!r} is not a valid {key}", 0) from None
    tag = ModuleTag(category=values.get("category", ""), parent=values.get("parent"), **kwargs)
    return name, tag


def _parse_state_list(sc: _LineScanner, seen: set[str], what: str) -> list[str]:
    out = []
    while True:
        spos = sc.pos
        sc.skip_ws()
        spos = sc.pos
        s = sc.match(_STATE, "state id")
        if s in seen:
            raise sc.error(f"duplicate state declaration {s!r} in {what}", spos)
        seen.add(s)
        out.append(s)
        sc.skip_ws()
        if sc.text.startswith(",", sc.pos):
            sc.pos += 1
            continue
        if not sc.at_end():
            raise sc.error("expected ',' or end of line")
        return out


def parse_grammar_file(source: SourceFile) -> GrammarGraph:
    """Parse one ``.lgg`` file.  Raises :class:`ParseError` on malformed input."""
    path = source.path
    name = tag = None
    declared: Optional[list[str]] = None
    start: Optional[str] = None
    finals: Optional[list[str]] = None
    transitions: list[Transition] = []
    last_line = 1
    for lineno, raw in source.lines():
        text = _strip_comment(raw)
        if not text.strip():
            continue
        last_line = lineno
        sc = _LineScanner(source, lineno, text)
        sc.skip_ws()
        if name is None:
            if not text[sc.pos:].startswith("graph"):
                raise sc.error("malformed header: file must start with 'graph NAME part=...'")
            name, tag = _parse_header(sc, path)
            continue
        body = text[sc.pos:]
        if body.startswith("graph") and (len(body) == 5 or body[5] in " \t"):
            raise sc.error("only one graph per file")
        if body.startswith("states:"):
            if declared is not None:
                raise sc.error("duplicate states: line")
            sc.pos += 7
            declared = _parse_state_list(sc, set(), "states")
        elif body.startswith("start:"):
            if start is not None:
                raise sc.error("duplicate state declaration: start given twice")
            sc.pos += 6
            start = sc.match(_STATE, "start state")
            if not sc.at_end():
                raise sc.error("unexpected text after start state")
        elif body.startswith("final:"):
            if finals is not None:
                raise sc.error("duplicate state declaration: final given twice")
            sc.pos += 6
            finals = _parse_state_list(sc, set(), "final")
        else:
            t, src_pos, dst_pos = _parse_transition(sc)
            if declared is not None:
                for s, what, pos in ((t.src, "source", src_pos), (t.dst, "target", dst_pos)):
                    if s not in declared:
                        raise sc.error(f"{what} state {s!r} not declared in states:", pos)
            transitions.append(t)
    if name is None:
        raise ParseError(path, 1, 1, "malformed header: empty file")
    if start is None:
        raise ParseError(path, last_line, 1, "missing start: line")
    if not finals:
        raise ParseError(path, last_line, 1, "missing final: line")
    if declared is None:
        order: dict[str, None] = {start: None}
        for s in finals:
            order.setdefault(s)
        for t in transitions:
            order.setdefault(t.src)
            order.setdefault(t.dst)
        states = tuple(order)
    else:
        states = tuple(declared)
        for s in (start, *finals):
            if s not in declared:
                raise ParseError(path, last_line, 1, f"state {s!r} not declared in states:")
    return GrammarGraph(name, states, start, tuple(finals), tuple(transitions), tag)


def _format_label(label: TransitionLabel) -> str:
    k = label.kind
    if k is LabelKind.LITERAL:
        return '"' + label.surface.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if k is LabelKind.SUBGRAPH:
        return ":" + label.target
    if k is LabelKind.EPSILON:
        return "EPS"
    if k is LabelKind.STEM:
        return f"STEM({label.surface},{label.conj_class}{',attach' if label.attach else ''})"
    return f"END({label.surface})"


def serialize_grammar(graph: GrammarGraph) -> str:
    """Render a graph in ``.lgg`` syntax.  Output is deterministic."""
    tag = graph.tags
    header = [f"graph {graph.name}", f"part={tag.part.value}"]
    if tag.category:
        header.append(f"category={tag.category}")
    for key in ("honorific", "sentence_type", "request_type"):
        value = getattr(tag, key)
        if value is not None:
            header.append(f"{key}={value.value}")
    if tag.parent is not None:
        header.append(f"parent={tag.parent}")
    lines = [
        " ".join(header),
        "states: " + ",".join(graph.states),
        f"start: {graph.start}",
        "final: " + ",".join(graph.finals),
    ]
    for t in graph.transitions:
        line = f"{t.src} -> {t.dst} {_format_label(t.label)}"
        for a in t.annotations:
            line += f" {{{a.key}={a.value}}}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def parse_conjugation_table(source: SourceFile) -> ConjugationTable:
    rules: list[ConjugationRule] = []
    seen: dict[tuple, int] = {}
    for lineno, raw in source.lines():
        text = raw.split("#", 1)[0].rstrip()
        if not text.strip():
            continue
        indent = len(text) - len(text.lstrip())
        if "->" not in text:
            raise ParseError(source.path, lineno, indent + 1, "missing arrow '->'")
        m = _CONJ_LINE.fullmatch(text.strip())
        if not m:
            raise ParseError(source.path, lineno, indent + 1,
                             "expected 'CLASS: STEM_SUFFIX + ENDING_PREFIX -> JOINED'")
        rule = ConjugationRule(*m.groups())
        if rule.key in seen:
            raise ParseError(source.path, lineno, indent + 1,
                             f"duplicate rule key {rule.key} (first on line {seen[rule.key]})")
        seen[rule.key] = lineno
        rules.append(rule)
    return ConjugationTable(rules)


def serialize_conjugation_table(table: ConjugationTable) -> str:
    return "".join(f"{r.conj_class}: {r.stem_suffix} + {r.ending_prefix} -> {r.joined}\n" for r in table.rules)


def load_bundle(directory, main: Optional[str] = None) -> GrammarBundle:
    """Load every ``*.lgg`` and ``*.conj`` file found under ``directory``."""
    root = Path(directory)
    if not root.is_dir():
        raise NotADirectoryError(str(root))
    graphs = []
    rules: list[ConjugationRule] = []
    for path in sorted(root.rglob("*")):
        if path.suffix == ".lgg":
            graphs.append(parse_grammar_file(SourceFile.from_path(path)))
        elif path.suffix == ".conj":
            table = parse_conjugation_table(SourceFile.from_path(path))
            rules.extend(table.rules)
    keys = [r.key for r in rules]
    if len(set(keys)) != len(keys):
        raise GrammarError("duplicate conjugation rule key across .conj files")
    return GrammarBundle.from_graphs(graphs, main, ConjugationTable(rules))


def bundle_hash(bundle: GrammarBundle, *extra: object) -> str:
    """Content hash of a bundle, independent of file layout and load order."""
    h = hashlib.sha256()
    h.update(f"main={bundle.main}\n".encode())
    for name in sorted(bundle.graphs):
        h.update(serialize_grammar(bundle.graphs[name]).encode("utf-8"))
        h.update(b"\x00")
    h.update(serialize_conjugation_table(bundle.conjugation).encode("utf-8"))
    for item in extra:
        h.update(f"\x00{item}".encode())
    return h.hexdigest()
