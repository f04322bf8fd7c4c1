"""Flatten subgraph calls into one acyclic token graph and count its paths."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .core import (
    Annotation,
    GrammarBundle,
    GrammarError,
    LabelKind,
    ModuleTag,
    Scope,
    TransitionLabel,
)


class CycleError(GrammarError):
    def __init__(self, chain: Sequence[str], reason: str = "recursive subgraph call"):
        self.chain = list(chain)
        self.reason = reason
        super().__init__(f"{reason}: {' -> '.join(self.chain)}")


@dataclass(frozen=True)
class ExpansionConfig:
    depth_limit: int = 16

    def __post_init__(self):
        if self.depth_limit < 1:
            raise ValueError("depth_limit must be >= 1")


@dataclass(frozen=True, slots=True)
class FlatTransition:
    src: int
    dst: int
    label: TransitionLabel
    annotations: tuple[Annotation, ...] = ()
    origin: str = ""
    span_open: Optional[str] = None
    span_close: Optional[str] = None
    # Call chain from the root graph to the graph this transition was copied from.
    stack: tuple[str, ...] = ()


@dataclass(frozen=True)
class FlatGraph:
    num_states: int
    start: int
    finals: frozenset[int]
    # Ordered so that the out-edges of each state appear in canonical order.
    transitions: tuple[FlatTransition, ...]
    root: str = ""
    modules: Mapping[str, ModuleTag] = field(default_factory=dict)

    @property
    def states(self) -> range:
        return range(self.num_states)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_states)]
        for i, t in enumerate(self.transitions):
            adj[t.src].append(i)
        return adj


@dataclass(frozen=True)
class PathCount:
    exact: int

    def __int__(self) -> int:
        return self.exact


def _topological_order(num_states: int, edges_src, edges_dst) -> Optional[list[int]]:
    indeg = [0] * num_states
    for d in edges_dst:
        indeg[d] += 1
    out: list[list[int]] = [[] for _ in range(num_states)]
    for s, d in zip(edges_src, edges_dst):
        out[s].append(d)
    order = [s for s in range(num_states) if indeg[s] == 0]
    i = 0
    while i < len(order):
        for d in out[order[i]]:
            indeg[d] -= 1
            if indeg[d] == 0:
                order.append(d)
        i += 1
    return order if len(order) == num_states else None


def _check_graph_acyclic(bundle: GrammarBundle, name: str):
    g = bundle[name]
    index = {s: i for i, s in enumerate(g.states)}
    for t in g.transitions:
        for s in (t.src, t.dst):
            if s not in index:
                index[s] = len(index)
    src = [index[t.src] for t in g.transitions]
    dst = [index[t.dst] for t in g.transitions]
    if _topological_order(len(index), src, dst) is None:
        raise CycleError([name], "graph contains a cycle")


class _Builder:
    def __init__(self, bundle: GrammarBundle, config: ExpansionConfig):
        self.bundle = bundle
        self.limit = config.depth_limit
        self.out: list[list[FlatTransition]] = []
        self.checked: set[str] = set()

    def new_state(self) -> int:
        self.out.append([])
        return len(self.out) - 1

    def inline(self, chain: tuple[str, ...]) -> tuple[int, list[int]]:
        name = chain[-1]
        if name not in self.checked:
            _check_graph_acyclic(self.bundle, name)
            self.checked.add(name)
        g = self.bundle[name]
        ids = {s: self.new_state() for s in g.states}
        for s in (g.start, *g.finals, *(e for t in g.transitions for e in (t.src, t.dst))):
            if s not in ids:
                ids[s] = self.new_state()
        for t in g.transitions:
            src, dst = ids[t.src], ids[t.dst]
            spans = t.span_annotations()
            entity = spans[0].value if spans else None
            plain = tuple(a for a in t.annotations if a.scope is Scope.UTTERANCE)
            if t.label.kind is LabelKind.SUBGRAPH:
                callee = t.label.target
                sub = chain + (callee,)
                if callee in chain:
                    raise CycleError(list(sub))
                if len(chain) > self.limit:
                    raise CycleError(list(sub), f"call depth exceeds limit {self.limit}")
                if callee not in self.bundle.graphs:
                    raise GrammarError(f"unresolved subgraph {callee!r} called from {name!r}")
                c_start, c_finals = self.inline(sub)
                eps = TransitionLabel.epsilon()
                self.out[src].append(FlatTransition(src, c_start, eps, plain, callee, entity, None, sub))
                for f in c_finals:
                    # Returning is ordered before continuing inside the callee.
                    self.out[f].insert(0, FlatTransition(f, dst, eps, (), callee, None, entity, sub))
            else:
                self.out[src].append(FlatTransition(src, dst, t.label, plain, name, entity, entity, chain))
        return ids[g.start], [ids[f] for f in g.finals]


def expand(bundle: GrammarBundle, config: ExpansionConfig = ExpansionConfig(),
           root: Optional[str] = None) -> FlatGraph:
    """Inline every subgraph call below ``root`` (default: the main graph).

    Each call site receives a fresh copy of the callee.  A call annotated with
    ``entity=T`` is bracketed by epsilon transitions carrying span_open(T) and
    span_close(T).  Recursion, cyclic graphs and calls nested deeper than
    ``config.depth_limit`` raise :class:`CycleError`.
    """
    root = bundle.main if root is None else root
    bundle[root]
    b = _Builder(bundle, config)
    start, finals = b.inline((root,))
    transitions = tuple(t for edges in b.out for t in edges)
    return FlatGraph(len(b.out), start, frozenset(finals), transitions, root, bundle.tags())


def count_paths(flat: FlatGraph) -> PathCount:
    """Number of distinct start-to-final transition sequences (exact integer)."""
    n = flat.num_states
    trans = flat.transitions
    src = [t.src for t in trans]
    dst = [t.dst for t in trans]
    if all(s < d for s, d in zip(src, dst)):
        order = range(n)
    else:
        order = _topological_order(n, src, dst)
        if order is None:
            raise CycleError([flat.root or "<flat>"], "flat graph contains a cycle")
    out: list[list[int]] = [[] for _ in range(n)]
    for s, d in zip(src, dst):
        out[s].append(d)
    finals = flat.finals
    paths = [0] * n
    for s in reversed(order):
        total = 1 if s in finals else 0
        for d in out[s]:
            total += paths[d]
        paths[s] = total
    return PathCount(paths[flat.start] if n else 0)


def count_module(bundle: GrammarBundle, module: str,
                 config: ExpansionConfig = ExpansionConfig()) -> PathCount:
    return count_paths(expand(bundle, config, root=module))


# Textual dump of a flat graph: one JSON document per line.

FLAT_FORMAT = "lggen-flat/1"


def _label_json(label: TransitionLabel) -> list:
    return [label.kind.value, label.surface, label.conj_class, label.attach]


def dump_flat(flat: FlatGraph, bundle_digest: str = "") -> str:
    header = {
        "format": FLAT_FORMAT,
        "hash": bundle_digest,
        "root": flat.root,
        "num_states": flat.num_states,
        "start": flat.start,
        "finals": sorted(flat.finals),
        "modules": {
            name: [tag.part.value, tag.category,
                   tag.honorific and tag.honorific.value,
                   tag.sentence_type and tag.sentence_type.value,
                   tag.request_type and tag.request_type.value,
                   tag.parent]
            for name, tag in sorted(flat.modules.items())
        },
    }
    lines = [json.dumps(header, ensure_ascii=False, sort_keys=True)]
    for t in flat.transitions:
        lines.append(json.dumps(
            [t.src, t.dst, _label_json(t.label), [[a.key, a.value] for a in t.annotations],
             t.origin, t.span_open, t.span_close, list(t.stack)],
            ensure_ascii=False,
        ))
    return "\n".join(lines) + "\n"


def read_flat_header(text: str) -> dict:
    first = text.split("\n", 1)[0]
    header = json.loads(first)
    if header.get("format") != FLAT_FORMAT:
        raise ValueError("not a flat-graph dump")
    return header


def load_flat(text: str) -> FlatGraph:
    from .core import Honorific, Part, RequestType, SentenceType

    lines = text.split("\n")
    header = read_flat_header(text)
    modules = {}
    for name, (part, cat, hon, sent, req, parent) in header["modules"].items():
        modules[name] = ModuleTag(
            Part(part), cat,
            Honorific(hon) if hon else None,
            SentenceType(sent) if sent else None,
            RequestType(req) if req else None,
            parent,
        )
    transitions = []
    stacks: dict[tuple, tuple] = {}
    for line in lines[1:]:
        if not line:
            continue
        src, dst, (kind, surface, conj, attach), anns, origin, so, sc, stack = json.loads(line)
        label = TransitionLabel(LabelKind(kind), surface=surface, conj_class=conj, attach=attach,
                                target="")
        st = tuple(stack)
        st = stacks.setdefault(st, st)
        transitions.append(FlatTransition(src, dst, label, tuple(Annotation.of(k, v) for k, v in anns),
                                          origin, so, sc, st))
    return FlatGraph(header["num_states"], header["start"], frozenset(header["finals"]),
                     tuple(transitions), header["root"], modules)


def find_cycles(bundle: GrammarBundle, config: ExpansionConfig = ExpansionConfig()) -> list[CycleError]:
    """All cycle and depth problems in a bundle, without expanding it.

    Covers cycles inside single graphs, recursive call chains reachable from
    any graph, and call chains below the main graph deeper than the limit.
    """
    problems: list[CycleError] = []
    for name in sorted(bundle.graphs):
        try:
            _check_graph_acyclic(bundle, name)
        except CycleError as exc:
            problems.append(exc)

    reported: set[tuple[str, ...]] = set()
    state: dict[str, int] = {}  # 1 = on stack, 2 = done

    def visit(chain: list[str]):
        name = chain[-1]
        state[name] = 1
        for callee in bundle.graphs[name].callees():
            if callee not in bundle.graphs:
                continue
            if state.get(callee) == 1:
                loop = chain[chain.index(callee):] + [callee]
                key = tuple(sorted(set(loop)))
                if key not in reported:
                    reported.add(key)
                    problems.append(CycleError(loop))
            elif callee not in state:
                visit(chain + [callee])
        state[name] = 2

    for name in sorted(bundle.graphs):
        if name not in state:
            visit([name])

    if not problems and bundle.main in bundle.graphs:
        memo: dict[str, tuple[int, list[str]]] = {}

        def deepest(name: str) -> tuple[int, list[str]]:
            if name in memo:
                return memo[name]
            best: tuple[int, list[str]] = (0, [name])
            for callee in bundle.graphs[name].callees():
                if callee in bundle.graphs:
                    d, chain = deepest(callee)
                    if d + 1 > best[0]:
                        best = (d + 1, [name] + chain)
            memo[name] = best
            return best

        d, chain = deepest(bundle.main)
        if d > config.depth_limit:
            problems.append(CycleError(chain, f"call depth exceeds limit {config.depth_limit}"))
    return problems
