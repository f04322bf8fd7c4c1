"""Table-driven joining of verb stems and endings."""

from __future__ import annotations

from dataclasses import dataclass

from .core import GrammarError, LabelKind, TransitionLabel

# Always-known class whose members join by plain concatenation.
REGULAR_CLASS = "REG"


class UnknownConjugationClass(GrammarError):
    pass


class DanglingStem(GrammarError):
    pass


class DanglingEnding(GrammarError):
    pass


@dataclass(frozen=True)
class ConjugationRule:
    conj_class: str
    stem_suffix: str
    ending_prefix: str
    joined: str

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.conj_class, self.stem_suffix, self.ending_prefix)


class ConjugationTable:
    """Ordered, immutable set of conjugation rules."""

    def __init__(self, rules=(), extra_classes=()):
        self._rules = tuple(rules)
        seen = set()
        for r in self._rules:
            if r.key in seen:
                raise ValueError(f"duplicate conjugation rule key {r.key}")
            if not r.joined:
                raise ValueError(f"rule {r.key} has an empty joined form")
            seen.add(r.key)
        self._classes = frozenset({REGULAR_CLASS, *extra_classes, *(r.conj_class for r in self._rules)})
        self._by_class: dict[str, list[ConjugationRule]] = {}
        for r in self._rules:
            self._by_class.setdefault(r.conj_class, []).append(r)

    @property
    def rules(self) -> tuple[ConjugationRule, ...]:
        return self._rules

    @property
    def classes(self) -> frozenset[str]:
        return self._classes

    def without_rules(self) -> "ConjugationTable":
        """Same class inventory, no rewrite rules (pure concatenation)."""
        return ConjugationTable((), self._classes)

    def rules_for(self, conj_class: str) -> list[ConjugationRule]:
        return self._by_class.get(conj_class, [])

    def __len__(self) -> int:
        return len(self._rules)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConjugationTable):
            return NotImplemented
        return self._rules == other._rules and self._classes == other._classes

    def __repr__(self) -> str:
        return f"ConjugationTable({len(self._rules)} rules)"


def conjugate(stem: str, conj_class: str, ending: str, table: ConjugationTable) -> str:
    """Join ``stem`` and ``ending`` using the most specific matching rule.

    Specificity is the length of the matched ending prefix, then of the stem
    suffix.  Without a matching rule the two pieces are concatenated.
    """
    if not stem or not ending:
        raise ValueError("stem and ending must be non-empty")
    if conj_class not in table.classes:
        raise UnknownConjugationClass(conj_class)
    best = None
    for r in table.rules_for(conj_class):
        if stem.endswith(r.stem_suffix) and ending.startswith(r.ending_prefix):
            if best is None or (len(r.ending_prefix), len(r.stem_suffix)) > (
                len(best.ending_prefix), len(best.stem_suffix)
            ):
                best = r
    if best is None:
        return stem + ending
    return stem[: len(stem) - len(best.stem_suffix)] + best.joined + ending[len(best.ending_prefix):]


@dataclass(frozen=True)
class RealizedText:
    text: str
    # One (first_token_index, start, end) per emitted unit; end is exclusive.
    token_char_spans: tuple[tuple[int, int, int], ...]
    # For each input token, the index of the unit it was emitted in.
    unit_of_token: tuple[int, ...]

    def char_range(self, first_token: int, last_token: int) -> tuple[int, int]:
        start = self.token_char_spans[self.unit_of_token[first_token]][1]
        end = self.token_char_spans[self.unit_of_token[last_token]][2]
        return start, end


def realize(tokens, table: ConjugationTable) -> RealizedText:
    """Turn a token sequence (or a pattern carrying ``.tokens``) into text.

    Units are separated by one space.  A fused stem+ending whose stem is
    marked ``attach`` is glued to the preceding unit.
    """
    tokens: tuple[TransitionLabel, ...] = tuple(getattr(tokens, "tokens", tokens))
    parts: list[str] = []
    spans: list[tuple[int, int, int]] = []
    unit_of: list[int] = [0] * len(tokens)
    pos = 0
    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        glue = False
        if tok.kind is LabelKind.STEM:
            if i + 1 >= n or tokens[i + 1].kind is not LabelKind.ENDING:
                raise DanglingStem(f"stem {tok.surface!r} at token {i} is not followed by an ending")
            surface = conjugate(tok.surface, tok.conj_class, tokens[i + 1].surface, table)
            glue = tok.attach and bool(parts)
            width = 2
        elif tok.kind is LabelKind.ENDING:
            raise DanglingEnding(f"ending {tok.surface!r} at token {i} does not follow a stem")
        elif tok.kind is LabelKind.LITERAL:
            surface = tok.surface
            width = 1
        else:
            raise ValueError(f"token {i} of kind {tok.kind.value} cannot be realized")
        if parts and not glue:
            parts.append(" ")
            pos += 1
        unit = len(spans)
        spans.append((i, pos, pos + len(surface)))
        parts.append(surface)
        pos += len(surface)
        for j in range(i, i + width):
            unit_of[j] = unit
        i += width
    return RealizedText("".join(parts), tuple(spans), tuple(unit_of))
