"""Independent reference implementations used to check the library.

Nothing here imports the flattener, the path counter or the enumerator.  The
oracles read grammar graphs directly and interpret subgraph calls by plain
recursion.
"""

from __future__ import annotations

import math
import random
from functools import lru_cache

from lggen.core import (
    Annotation,
    GrammarBundle,
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


def reachable_states(graph: GrammarGraph) -> set[str]:
    """States reachable from start, by repeated relaxation (no queue)."""
    seen = {graph.start}
    changed = True
    while changed:
        changed = False
        for t in graph.transitions:
            if t.src in seen and t.dst not in seen:
                seen.add(t.dst)
                changed = True
    return seen


def interpret(bundle: GrammarBundle, name: str) -> list[tuple]:
    """Every path of ``name`` as a tuple of events, in canonical order.

    Events are ``("tok", label)``, ``("open", T)`` and ``("close", T)``.  A path
    ending at a final state comes before its extensions; out-edges are taken
    in declaration order.
    """
    g = bundle.graphs[name]
    out = g.outgoing()
    finals = set(g.finals)

    def walk(state):
        if state in finals:
            yield ()
        for t in out.get(state, ()):
            spans = [a.value for a in t.annotations if a.key == "entity"]
            if t.label.kind is LabelKind.SUBGRAPH:
                heads = interpret(bundle, t.label.target)
            elif t.label.kind is LabelKind.EPSILON:
                heads = [()]
            else:
                heads = [(("tok", t.label),)]
            if spans:
                heads = [(("open", spans[0]),) + h + (("close", spans[0]),) for h in heads]
            for head in heads:
                for rest in walk(t.dst):
                    yield head + rest

    return list(walk(g.start))


def count_by_recursion(bundle: GrammarBundle, name: str) -> int:
    """Path count through memoized per-graph recursion (never materializes paths)."""

    @lru_cache(maxsize=None)
    def graph_count(gname):
        g = bundle.graphs[gname]
        out = g.outgoing()
        finals = set(g.finals)

        @lru_cache(maxsize=None)
        def from_state(s):
            total = 1 if s in finals else 0
            for t in out.get(s, ()):
                mult = graph_count(t.label.target) if t.label.kind is LabelKind.SUBGRAPH else 1
                total += mult * from_state(t.dst)
            return total

        return from_state(g.start)

    return graph_count(name)


def events_to_tokens_and_spans(events) -> tuple[tuple, tuple]:
    """Token labels and (type, first, last) spans, outer first, empty spans dropped."""
    tokens = []
    stack = []
    slots = []
    for ev in events:
        if ev[0] == "tok":
            tokens.append(ev[1])
        elif ev[0] == "open":
            slots.append(None)
            stack.append((ev[1], len(tokens), len(slots) - 1))
        else:
            etype, first, slot = stack.pop()
            if len(tokens) > first:
                slots[slot] = (etype, first, len(tokens) - 1)
    return tuple(tokens), tuple(s for s in slots if s is not None)


def dm_weight_reference(syl_n: int, syl_max: int) -> float:
    return math.log(1 + syl_max - syl_n) / math.log(2)


def hangul_syllables(text: str) -> int:
    # Brute force over the full precomposed block.
    block = {chr(c) for c in range(0xAC00, 0xD7A4)}
    return sum(1 for ch in text if ch in block)


# Random bundles --------------------------------------------------------------

_WORDS = ["가", "나", "다", "라", "마", "바", "사", "아", "자", "차", "카", "타"]
_PARTS = [Part.TOPIC_ENTITY, Part.TOPIC_FEATURE, Part.EVENT, Part.DISCOURSE_MARKER]


def random_graph(rng: random.Random, name: str, callees: list[str], part: Part,
                 max_states: int = 12, parent=None, call_prob: float = 0.3,
                 min_states: int = 1) -> GrammarGraph:
    n = rng.randint(min_states, max_states)
    states = [f"q{i}" for i in range(n)]
    transitions = []
    # A spine guarantees the last state is reachable.
    for i in range(n - 1):
        transitions.append((i, i + 1))
    for _ in range(rng.randint(0, n)):
        if n >= 2:
            a = rng.randrange(n - 1)
            b = rng.randint(a + 1, n - 1)
            transitions.append((a, b))
    transitions.sort(key=lambda ab: ab[0])
    built = []
    for a, b in transitions:
        r = rng.random()
        anns = ()
        if callees and r < call_prob:
            label = TransitionLabel.call(rng.choice(callees))
            if rng.random() < 0.4:
                anns = (Annotation.of("entity", f"E{rng.randint(0, 3)}"),)
        elif r < call_prob + 0.15:
            label = TransitionLabel.epsilon()
        else:
            label = TransitionLabel.literal(rng.choice(_WORDS))
            u = rng.random()
            if u < 0.15:
                anns = (Annotation.of("entity", f"L{rng.randint(0, 2)}"),)
            elif u < 0.25:
                anns = (Annotation.of("intent", f"I{rng.randint(0, 2)}"),)
        built.append(Transition(states[a], states[b], label, anns))
    finals = [states[-1]] + [s for s in states[:-1] if rng.random() < 0.2]
    tags = ModuleTag(part, category=name, parent=parent)
    if part is Part.DISCOURSE_MARKER:
        tags = ModuleTag(
            part, category=name, parent=parent,
            honorific=rng.choice([None, *Honorific]),
            sentence_type=rng.choice([None, *SentenceType]),
            request_type=rng.choice([None, *RequestType]),
        )
    return GrammarGraph(name, tuple(states), states[0], tuple(finals), tuple(built), tags)


def random_bundle(seed: int, levels: int = 3, width: int = 3, max_states: int = 12,
                  max_paths: int = 20000) -> GrammarBundle:
    """An acyclic bundle: main calls level-1 graphs, which call level-2 ones, and so on.

    Retries with derived seeds until the main graph has at most ``max_paths``
    paths, so that materializing every path stays cheap.
    """
    attempt = 0
    while True:
        rng = random.Random(seed * 1009 + attempt)
        graphs = []
        below: list[str] = []
        for level in range(levels, 0, -1):
            names = [f"G{level}_{i}" for i in range(rng.randint(1, width))]
            for nm in names:
                graphs.append(random_graph(rng, nm, below, rng.choice(_PARTS), max_states))
            below = names
        graphs.append(random_graph(rng, "Main", below, Part.LINK, max_states, call_prob=0.6,
                                   min_states=min(4, max_states)))
        bundle = GrammarBundle.from_graphs(graphs, "Main")
        if count_by_recursion(bundle, "Main") <= max_paths:
            return bundle
        attempt += 1


# Random graphs for serialization round-trips ---------------------------------

_LITERAL_CHARS = "가나다라 계좌개설ab Z09\"\\#{}=,()[]:.-"
_PLAIN = "가나다라마바사하ab"


def random_dsl_graph(rng: random.Random, max_states: int = 10) -> GrammarGraph:
    """Any graph the format can express, including isolated states and odd literals."""
    n = rng.randint(1, max_states)
    states = [f"s{i}" if rng.random() < 0.7 else f"q_{i}x" for i in range(n)]
    transitions = []
    for _ in range(rng.randint(0, 2 * n)):
        src, dst = rng.choice(states), rng.choice(states)
        kind = rng.randrange(5)
        if kind == 0:
            label = TransitionLabel.literal("".join(rng.choice(_LITERAL_CHARS) for _ in range(rng.randint(1, 6))))
        elif kind == 1:
            label = TransitionLabel.call(rng.choice(["EVENT", "BankName", "DM_Demand_Imperative_Basic", "a.b-c"]))
        elif kind == 2:
            label = TransitionLabel.epsilon()
        elif kind == 3:
            label = TransitionLabel.stem("".join(rng.choice(_PLAIN) for _ in range(rng.randint(1, 3))),
                                         rng.choice(["C_HA", "REG", "C_U"]), attach=rng.random() < 0.3)
        else:
            label = TransitionLabel.ending(rng.choice(["어", "어 줘", "ㅂ니까?", "기", "세요!"]))
        anns = []
        if label.kind is not LabelKind.EPSILON:
            for key in rng.sample(["entity", "intent", "event_cat", "req_type", "x1"], rng.randint(0, 2)):
                anns.append(Annotation.of(key, rng.choice(["BankName", "AccountCreate.Demand", "값", "v-1"])))
        transitions.append(Transition(src, dst, label, tuple(anns)))
    finals = rng.sample(states, rng.randint(1, n))
    part = rng.choice(list(Part))
    style = {}
    if part is Part.DISCOURSE_MARKER:
        style = dict(honorific=rng.choice([None, *Honorific]),
                     sentence_type=rng.choice([None, *SentenceType]),
                     request_type=rng.choice([None, *RequestType]))
    tags = ModuleTag(part, category=rng.choice(["", "Account", "계좌"]),
                     parent=rng.choice([None, "EVENT", "DM_ACTION"]), **style)
    name = rng.choice(["Main", "AccountCreate", "DM_Wh_Method", "X1"])
    return GrammarGraph(name, tuple(states), rng.choice(states), tuple(finals), tuple(transitions), tags)
