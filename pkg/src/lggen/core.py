"""In-memory model of local grammar graphs and their bundles.

A graph is a small acyclic automaton whose transitions emit literal tokens,
verb stems, endings, or call other graphs by name.  A bundle ties a named set
of graphs to a linking (main) graph and a conjugation table.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional


class GrammarError(Exception):
    """Base class for domain errors raised by the toolkit."""


class UnknownModuleError(GrammarError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown module {self.name!r}"


class DuplicateGraphError(GrammarError):
    pass


class LabelKind(str, Enum):
    LITERAL = "Literal"
    SUBGRAPH = "SubgraphCall"
    EPSILON = "Epsilon"
    STEM = "Stem"
    ENDING = "Ending"


class Part(str, Enum):
    TOPIC_ENTITY = "TOPIC_ENTITY"
    TOPIC_FEATURE = "TOPIC_FEATURE"
    EVENT = "EVENT"
    DISCOURSE_MARKER = "DISCOURSE_MARKER"
    LINK = "LINK"


class Honorific(str, Enum):
    RAISING = "Raising"
    LOWERING = "Lowering"
    POLITE = "Polite"
    BASIC = "Basic"


class SentenceType(str, Enum):
    DECLARATIVE = "Declarative"
    IMPERATIVE = "Imperative"
    INTERROGATIVE = "Interrogative"
    SUGGESTIVE = "Suggestive"


class RequestType(str, Enum):
    PERSON = "Person"
    PRODUCT = "Product"
    METHOD = "Method"
    REASON = "Reason"
    LOCATION = "Location"
    TIME = "Time"
    AGE_CONDITION = "AgeCondition"
    COST_QUANTITY = "CostQuantity"
    DISSATISFACTION = "Dissatisfaction"
    SERVICE_ERROR = "ServiceError"
    DEMAND = "Demand"


class Scope(str, Enum):
    SPAN = "Span"
    UTTERANCE = "Utterance"


# Keys whose annotation marks the produced text as an entity span.
SPAN_KEYS = frozenset({"entity"})


@dataclass(frozen=True)
class TransitionLabel:
    kind: LabelKind
    surface: str = ""
    target: str = ""
    conj_class: str = ""
    attach: bool = False

    @classmethod
    def literal(cls, surface: str) -> "TransitionLabel":
        return cls(LabelKind.LITERAL, surface=surface)

    @classmethod
    def call(cls, target: str) -> "TransitionLabel":
        return cls(LabelKind.SUBGRAPH, target=target)

    @classmethod
    def epsilon(cls) -> "TransitionLabel":
        return cls(LabelKind.EPSILON)

    @classmethod
    def stem(cls, surface: str, conj_class: str, attach: bool = False) -> "TransitionLabel":
        return cls(LabelKind.STEM, surface=surface, conj_class=conj_class, attach=attach)

    @classmethod
    def ending(cls, surface: str) -> "TransitionLabel":
        return cls(LabelKind.ENDING, surface=surface)

    @property
    def emits_token(self) -> bool:
        return self.kind in (LabelKind.LITERAL, LabelKind.STEM, LabelKind.ENDING)

    def problems(self) -> list[str]:
        out = []
        if self.kind is LabelKind.EPSILON:
            if self.surface:
                out.append("epsilon label carries a surface")
        elif self.kind is LabelKind.SUBGRAPH:
            if not self.target:
                out.append("subgraph call without a target")
        elif not self.surface:
            out.append(f"{self.kind.value} label with empty surface")
        if self.kind is LabelKind.STEM and not self.conj_class:
            out.append("stem without a conjugation class")
        return out


@dataclass(frozen=True)
class Annotation:
    key: str
    value: str
    scope: Scope = Scope.UTTERANCE

    @classmethod
    def of(cls, key: str, value: str) -> "Annotation":
        """Build an annotation with the scope implied by its key."""
        return cls(key, value, Scope.SPAN if key in SPAN_KEYS else Scope.UTTERANCE)


@dataclass(frozen=True)
class Transition:
    src: str
    dst: str
    label: TransitionLabel
    annotations: tuple[Annotation, ...] = ()

    def span_annotations(self) -> list[Annotation]:
        return [a for a in self.annotations if a.scope is Scope.SPAN]


@dataclass(frozen=True)
class ModuleTag:
    part: Part
    category: str = ""
    honorific: Optional[Honorific] = None
    sentence_type: Optional[SentenceType] = None
    request_type: Optional[RequestType] = None
    parent: Optional[str] = None

    @property
    def has_style(self) -> bool:
        return any(v is not None for v in (self.honorific, self.sentence_type, self.request_type))


@dataclass(frozen=True)
class GrammarGraph:
    name: str
    states: tuple[str, ...]
    start: str
    finals: tuple[str, ...]
    transitions: tuple[Transition, ...]
    tags: ModuleTag

    def outgoing(self) -> dict[str, list[Transition]]:
        out: dict[str, list[Transition]] = {s: [] for s in self.states}
        for t in self.transitions:
            out.setdefault(t.src, []).append(t)
        return out

    def callees(self) -> list[str]:
        seen: dict[str, None] = {}
        for t in self.transitions:
            if t.label.kind is LabelKind.SUBGRAPH:
                seen.setdefault(t.label.target)
        return list(seen)


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    graph: str
    location: str
    message: str

    def __str__(self) -> str:
        loc = f"{self.graph}:{self.location}" if self.location else self.graph
        return f"{self.kind} [{loc}] {self.message}"


@dataclass(frozen=True)
class GrammarBundle:
    graphs: Mapping[str, GrammarGraph]
    main: str
    conjugation: "ConjugationTable" = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.conjugation is None:
            from .morphology import ConjugationTable

            object.__setattr__(self, "conjugation", ConjugationTable())

    @classmethod
    def from_graphs(cls, graphs: Iterable[GrammarGraph], main: Optional[str] = None,
                    conjugation=None) -> "GrammarBundle":
        table: dict[str, GrammarGraph] = {}
        for g in graphs:
            if g.name in table:
                raise DuplicateGraphError(f"graph {g.name!r} defined more than once")
            table[g.name] = g
        if main is None:
            main = pick_main(table.values())
        return cls(table, main, conjugation)

    def __getitem__(self, name: str) -> GrammarGraph:
        try:
            return self.graphs[name]
        except KeyError:
            raise UnknownModuleError(name) from None

    def tags(self) -> dict[str, ModuleTag]:
        return {name: g.tags for name, g in self.graphs.items()}


def pick_main(graphs: Iterable[GrammarGraph]) -> str:
    """Return the unique root linking graph, or raise if there is none or several."""
    roots = sorted(g.name for g in graphs if g.tags.part is Part.LINK and g.tags.parent is None)
    if len(roots) != 1:
        found = ", ".join(roots) or "none"
        raise GrammarError(f"expected exactly one root LINK graph, found {found}")
    return roots[0]


def _reachable(graph: GrammarGraph) -> set[str]:
    out = graph.outgoing()
    seen = {graph.start}
    queue = deque([graph.start])
    while queue:
        s = queue.popleft()
        for t in out.get(s, ()):
            if t.dst not in seen:
                seen.add(t.dst)
                queue.append(t.dst)
    return seen


def _graph_diagnostics(g: GrammarGraph, bundle: GrammarBundle) -> list[Diagnostic]:
    diags = []
    name = g.name
    states = set(g.states)
    if g.start not in states:
        diags.append(Diagnostic("StartNotDeclared", name, g.start, "start state is not a declared state"))
    if not g.finals:
        diags.append(Diagnostic("NoFinalState", name, "", "graph has no final state"))
    for f in g.finals:
        if f not in states:
            diags.append(Diagnostic("FinalNotDeclared", name, f, "final state is not a declared state"))

    tags = g.tags
    if tags.part is not Part.DISCOURSE_MARKER and tags.has_style:
        diags.append(Diagnostic("StyleTagOutsideDM", name, "header",
                                "honorific/sentence/request tags require part=DISCOURSE_MARKER"))
    if tags.parent is not None and tags.parent not in bundle.graphs:
        diags.append(Diagnostic("UnknownParent", name, "header", f"parent {tags.parent!r} is not in the bundle"))

    known_classes = bundle.conjugation.classes
    for i, t in enumerate(g.transitions):
        loc = f"t{i}"
        for p in t.label.problems():
            diags.append(Diagnostic("BadLabel", name, loc, p))
        for end in (t.src, t.dst):
            if end not in states:
                diags.append(Diagnostic("UndeclaredState", name, loc, f"transition endpoint {end!r} not declared"))
        spans = t.span_annotations()
        if spans and t.label.kind not in (LabelKind.SUBGRAPH, LabelKind.LITERAL):
            diags.append(Diagnostic("SpanOnNonProducer", name, loc,
                                    f"span annotation on a {t.label.kind.value} transition"))
        if len(spans) > 1:
            diags.append(Diagnostic("MultipleSpans", name, loc, "more than one span annotation"))
        for a in t.annotations:
            expected = Scope.SPAN if a.key in SPAN_KEYS else Scope.UTTERANCE
            if a.scope is not expected:
                diags.append(Diagnostic("BadAnnotationScope", name, loc, f"key {a.key!r} must be {expected.value}"))
        lab = t.label
        if lab.kind is LabelKind.SUBGRAPH and lab.target and lab.target not in bundle.graphs:
            diags.append(Diagnostic("UnresolvedSubgraph", name, loc, f"{lab.target}"))
        if lab.kind is LabelKind.STEM and lab.conj_class and lab.conj_class not in known_classes:
            diags.append(Diagnostic("UnknownConjugationClass", name, loc, f"{lab.conj_class}"))
        if lab.surface and (lab.surface != lab.surface.strip() or "  " in lab.surface):
            diags.append(Diagnostic("SurfaceWhitespace", name, loc,
                                    "surface has leading/trailing or doubled whitespace"))

    if g.start in states:
        reach = _reachable(g)
        for f in g.finals:
            if f in states and f not in reach:
                diags.append(Diagnostic("UnreachableFinal", name, f, "final state unreachable from start"))
    return diags


def _parent_cycles(bundle: GrammarBundle) -> list[Diagnostic]:
    diags = []
    for name in sorted(bundle.graphs):
        seen = [name]
        cur = bundle.graphs[name].tags.parent
        while cur is not None and cur in bundle.graphs:
            if cur == name:
                diags.append(Diagnostic("ParentCycle", name, "header", " <- ".join(seen + [cur])))
                break
            if cur in seen:
                break  # cycle not through this graph; reported from its members
            seen.append(cur)
            cur = bundle.graphs[cur].tags.parent
    return diags


def validate_bundle(bundle: GrammarBundle) -> list[Diagnostic]:
    """Check the structural invariants of a bundle.

    Returns one diagnostic per violation, sorted so that the result does not
    depend on the order in which graphs were loaded.
    """
    diags: list[Diagnostic] = []
    if bundle.main not in bundle.graphs:
        diags.append(Diagnostic("MissingMain", bundle.main, "", "main graph not in bundle"))
    elif bundle.graphs[bundle.main].tags.part is not Part.LINK:
        diags.append(Diagnostic("MainNotLink", bundle.main, "header", "main graph must have part=LINK"))
    for name, g in bundle.graphs.items():
        if g.name != name:
            diags.append(Diagnostic("NameMismatch", name, "", f"registered under {name!r} but named {g.name!r}"))
        diags.extend(_graph_diagnostics(g, bundle))
    diags.extend(_parent_cycles(bundle))
    return sorted(diags, key=lambda d: (d.graph, d.kind, d.location, d.message))


def children_index(tags: Mapping[str, ModuleTag]) -> dict[str, list[str]]:
    kids: dict[str, list[str]] = {}
    for name in sorted(tags):
        parent = tags[name].parent
        if parent is not None:
            kids.setdefault(parent, []).append(name)
    return kids


def closure_from_tags(tags: Mapping[str, ModuleTag], module: str) -> set[str]:
    if module not in tags:
        raise UnknownModuleError(module)
    kids = children_index(tags)
    result = {module}
    queue = deque([module])
    while queue:
        for child in kids.get(queue.popleft(), ()):
            if child not in result:
                result.add(child)
                queue.append(child)
    return result


def submodule_closure(bundle: GrammarBundle, module: str) -> set[str]:
    """The module itself plus every graph whose parent chain reaches it."""
    return closure_from_tags(bundle.tags(), module)
