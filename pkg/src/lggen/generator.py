"""Path enumeration, discourse-marker weighting and top-weight selection."""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Optional

from .core import (
    GrammarBundle,
    Honorific,
    LabelKind,
    ModuleTag,
    Part,
    RequestType,
    SentenceType,
    TransitionLabel,
    UnknownModuleError,
    closure_from_tags,
)
from .morphology import ConjugationTable, realize
from .rtn import ExpansionConfig, FlatGraph, expand

HANGUL_FIRST = 0xAC00
HANGUL_LAST = 0xD7A3


class Mode(str, Enum):
    TOP_WEIGHT = "TopWeight"
    EXHAUSTIVE = "ExhaustiveAll"


@dataclass(frozen=True)
class StyleTags:
    honorific: Optional[Honorific] = None
    sentence_type: Optional[SentenceType] = None
    request_type: Optional[RequestType] = None


@dataclass(frozen=True)
class UtterancePattern:
    tokens: tuple[TransitionLabel, ...]
    utterance_annotations: Mapping[str, str]
    # (entity_type, first_token_index, last_token_index), outer spans first.
    spans: tuple[tuple[str, int, int], ...]
    dm_graph: Optional[str]
    dm_syllables: int
    tags: StyleTags
    modules: tuple[str, ...] = ()
    parts: frozenset[Part] = frozenset()
    index: int = 0

    def plain_text(self) -> str:
        return " ".join(t.surface for t in self.tokens)


@dataclass(frozen=True)
class WeightContext:
    syl_max: int

    def __post_init__(self):
        if self.syl_max < 1:
            raise ValueError("syl_max must be positive")


@dataclass(frozen=True)
class Weight:
    value: float

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class GenerationConfig:
    target_size: int = 1000
    honorific_filter: frozenset[Honorific] = frozenset()
    sentence_filter: frozenset[SentenceType] = frozenset()
    request_filter: frozenset[RequestType] = frozenset()
    module_include: tuple[str, ...] = ()
    module_exclude: tuple[str, ...] = ()
    mode: Mode = Mode.TOP_WEIGHT

    def __post_init__(self):
        if self.target_size < 1:
            raise ValueError("target_size must be >= 1")
        for name in ("honorific_filter", "sentence_filter", "request_filter"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        object.__setattr__(self, "module_include", tuple(self.module_include))
        object.__setattr__(self, "module_exclude", tuple(self.module_exclude))

    def accepts_style(self, tags: StyleTags) -> bool:
        # Intersection across dimensions, union within a dimension.
        if self.honorific_filter and tags.honorific not in self.honorific_filter:
            return False
        if self.sentence_filter and tags.sentence_type not in self.sentence_filter:
            return False
        if self.request_filter and tags.request_type not in self.request_filter:
            return False
        return True


def syllable_count(text: str) -> int:
    """Number of precomposed Hangul syllable blocks in ``text``."""
    return sum(1 for ch in text if HANGUL_FIRST <= ord(ch) <= HANGUL_LAST)


def dm_weight(syl_n: int, ctx: WeightContext) -> Weight:
    """Weight of a discourse-marker expression: log2(1 + syl_max - syl_n)."""
    if syl_n < 0 or syl_n > ctx.syl_max:
        raise ValueError(f"syl_n={syl_n} outside [0, syl_max={ctx.syl_max}]")
    return Weight(math.log2(1 + (ctx.syl_max - syl_n)))


def pattern_weight(pattern: UtterancePattern, ctx: WeightContext) -> float:
    # Ellipsis patterns have dm_syllables == 0 and so get the top weight.
    return dm_weight(pattern.dm_syllables, ctx).value


def _module_sets(modules: Mapping[str, ModuleTag], names: Iterable[str]) -> frozenset[str]:
    out: set[str] = set()
    for name in names:
        if name not in modules:
            raise UnknownModuleError(name)
        out |= closure_from_tags(modules, name)
    return frozenset(out)


def enumerate_patterns(flat: FlatGraph, config: Optional[GenerationConfig] = None) -> Iterator[UtterancePattern]:
    """Yield every start-to-final path that survives the configured filters.

    Order is depth-first over out-edges in declaration order; a path that
    reaches a final state is yielded before its extensions.
    """
    config = config or GenerationConfig()
    modules = flat.modules
    include = _module_sets(modules, config.module_include) if config.module_include else None
    exclude = _module_sets(modules, config.module_exclude)
    trans = flat.transitions
    adj = flat.adjacency()
    finals = flat.finals
    dm_names = frozenset(n for n, t in modules.items() if t.part is Part.DISCOURSE_MARKER)

    blocked = [bool(exclude) and not exclude.isdisjoint(t.stack) for t in trans]
    # Per-transition facts used on every path: (token or None, dm syllables,
    # annotations, span_open, span_close, innermost graph).  The innermost
    # graph of any transition was entered earlier on the same path, so
    # collecting it alone preserves first-entry order of all modules.
    facts = []
    for t in trans:
        token = None if t.label.kind is LabelKind.EPSILON else t.label
        syl = syllable_count(t.label.surface) if token is not None and not dm_names.isdisjoint(t.stack) else 0
        facts.append((token, syl, t.annotations, t.span_open, t.span_close, t.stack[-1] if t.stack else flat.root))

    counter = 0

    def build(path: list[int], index: int) -> Optional[UtterancePattern]:
        tokens: list[TransitionLabel] = []
        anns: dict[str, str] = {}
        open_spans: list[tuple[str, int, int]] = []  # (type, first_token, slot)
        spans: list[Optional[tuple[str, int, int]]] = []
        seen: dict[str, None] = {flat.root: None}
        dm_syl = 0
        for ti in path:
            token, syl, annotations, span_open, span_close, inner = facts[ti]
            seen[inner] = None
            if span_open is not None:
                spans.append(None)
                open_spans.append((span_open, len(tokens), len(spans) - 1))
            if token is not None:
                tokens.append(token)
                dm_syl += syl
            for a in annotations:
                anns[a.key] = a.value
            if span_close is not None:
                etype, first, slot = open_spans.pop()
                if len(tokens) > first:
                    spans[slot] = (etype, first, len(tokens) - 1)
        mods = tuple(seen)
        if include is not None and include.isdisjoint(mods):
            return None
        honorific = sentence = request = None
        dm_graph = None
        parts = set()
        for name in mods:
            tag = modules.get(name)
            if tag is None:
                continue
            parts.add(tag.part)
            if tag.part is Part.DISCOURSE_MARKER:
                dm_graph = name
                honorific = tag.honorific or honorific
                sentence = tag.sentence_type or sentence
                request = tag.request_type or request
        tags = StyleTags(honorific, sentence, request)
        if not config.accepts_style(tags):
            return None
        return UtterancePattern(
            tokens=tuple(tokens),
            utterance_annotations=anns,
            spans=tuple(s for s in spans if s is not None),
            dm_graph=dm_graph,
            dm_syllables=dm_syl,
            tags=tags,
            modules=mods,
            parts=frozenset(parts),
            index=index,
        )

    def emit(path):
        nonlocal counter
        p = build(path, counter)
        if p is not None:
            counter += 1
        return p

    path: list[int] = []
    if flat.start in finals:
        p = emit(path)
        if p is not None:
            yield p
    iters = [iter(adj[flat.start])]
    while iters:
        for ti in iters[-1]:
            if blocked[ti]:
                continue
            path.append(ti)
            d = trans[ti].dst
            if d in finals:
                p = emit(path)
                if p is not None:
                    yield p
            iters.append(iter(adj[d]))
            break
        else:
            iters.pop()
            if path:
                path.pop()


def syl_max_of(patterns: Iterable[UtterancePattern]) -> WeightContext:
    best = max((p.dm_syllables for p in patterns), default=0)
    return WeightContext(max(best, 1))


def compute_syl_max(bundle: GrammarBundle, config: Optional[GenerationConfig] = None,
                    expansion: ExpansionConfig = ExpansionConfig()) -> WeightContext:
    """Longest discourse-marker expression (in syllables) among surviving paths.

    Falls back to 1 when no discourse-marker expression survives the filters.
    """
    return syl_max_of(enumerate_patterns(expand(bundle, expansion), config))


def _text_length(p: UtterancePattern, table: Optional[ConjugationTable]) -> int:
    if table is None:
        return len(p.plain_text())
    return len(realize(p.tokens, table).text)


def selection_key(p: UtterancePattern, ctx: WeightContext, table: Optional[ConjugationTable] = None):
    return (-pattern_weight(p, ctx), _text_length(p, table), p.index)


def select_top(patterns: Iterable[UtterancePattern], ctx: WeightContext, target_size: int,
               table: Optional[ConjugationTable] = None) -> list[UtterancePattern]:
    """The ``target_size`` best patterns by (weight desc, text length asc, index asc).

    Text length is measured on the realized text when ``table`` is given and
    on the space-joined token surfaces otherwise.
    """
    if target_size < 1:
        raise ValueError("target_size must be >= 1")
    keyed = ((selection_key(p, ctx, table), p) for p in patterns)
    best = heapq.nsmallest(target_size, keyed, key=lambda kp: kp[0])
    return [p for _, p in best]


def sample_uniform(patterns: Iterable[UtterancePattern], target_size: int, seed: int) -> list[UtterancePattern]:
    """Uniform sample without replacement, returned in enumeration order."""
    pool = list(patterns)
    if target_size >= len(pool):
        return pool
    rng = random.Random(seed)
    picked = sorted(rng.sample(range(len(pool)), target_size))
    return [pool[i] for i in picked]
