import random

import pytest
from hypothesis import given, settings, strategies as st

from lggen.core import (
    Annotation,
    DuplicateGraphError,
    GrammarBundle,
    GrammarError,
    GrammarGraph,
    Honorific,
    ModuleTag,
    Part,
    Scope,
    Transition,
    TransitionLabel,
    UnknownModuleError,
    submodule_closure,
    validate_bundle,
)
from lggen.morphology import ConjugationRule, ConjugationTable

from oracles import random_bundle, reachable_states

L = TransitionLabel


def graph(name, transitions, *, states=None, start="s0", finals=("s1",), part=Part.LINK, **tag):
    if states is None:
        seen = [start, *finals]
        for t in transitions:
            seen += [t.src, t.dst]
        states = tuple(dict.fromkeys(seen))
    return GrammarGraph(name, tuple(states), start, tuple(finals), tuple(transitions), ModuleTag(part, **tag))


def kinds(bundle):
    return [d.kind for d in validate_bundle(bundle)]


def test_minimal_bundle_is_clean():
    g = graph("Main", [Transition("s0", "s1", L.literal("안녕"))])
    assert validate_bundle(GrammarBundle.from_graphs([g])) == []


def test_unresolved_subgraph():
    g = graph("Main", [Transition("s0", "s1", L.call("Missing"))])
    diags = validate_bundle(GrammarBundle.from_graphs([g]))
    assert [(d.kind, d.message) for d in diags] == [("UnresolvedSubgraph", "Missing")]


def test_honorific_outside_dm():
    g = graph("Main", [Transition("s0", "s1", L.literal("x"))])
    ev = graph("Ev", [Transition("s0", "s1", L.literal("y"))], part=Part.EVENT, honorific=Honorific.BASIC)
    assert kinds(GrammarBundle.from_graphs([g, ev])) == ["StyleTagOutsideDM"]


def test_span_on_epsilon_is_rejected():
    t = Transition("s0", "s1", L.epsilon(), (Annotation.of("entity", "X"),))
    assert kinds(GrammarBundle.from_graphs([graph("Main", [t])])) == ["SpanOnNonProducer"]


def test_two_spans_on_one_transition():
    t = Transition("s0", "s1", L.literal("a"), (Annotation.of("entity", "X"), Annotation("entity", "Y", Scope.SPAN)))
    assert "MultipleSpans" in kinds(GrammarBundle.from_graphs([graph("Main", [t])]))


def test_wrong_scope():
    t = Transition("s0", "s1", L.literal("a"), (Annotation("entity", "X", Scope.UTTERANCE),))
    assert kinds(GrammarBundle.from_graphs([graph("Main", [t])])) == ["BadAnnotationScope"]


def test_unknown_parent_and_main_not_link():
    main = graph("Main", [Transition("s0", "s1", L.literal("a"))], part=Part.EVENT, parent="Nope")
    bundle = GrammarBundle({"Main": main}, "Main")
    assert kinds(bundle) == ["MainNotLink", "UnknownParent"]


def test_missing_main():
    g = graph("Other", [Transition("s0", "s1", L.literal("a"))], part=Part.EVENT)
    assert kinds(GrammarBundle({"Other": g}, "Main")) == ["MissingMain"]


def test_bad_labels_and_whitespace():
    ts = [
        Transition("s0", "s1", L.literal("")),
        Transition("s0", "s1", L.literal(" a")),
        Transition("s0", "s1", L.stem("하", "")),
    ]
    assert kinds(GrammarBundle.from_graphs([graph("Main", ts)])) == ["BadLabel", "BadLabel", "SurfaceWhitespace"]


def test_unknown_conjugation_class():
    ts = [Transition("s0", "s2", L.stem("하", "C_HA")), Transition("s2", "s1", L.ending("어"))]
    bundle = GrammarBundle.from_graphs([graph("Main", ts)])
    assert kinds(bundle) == ["UnknownConjugationClass"]
    table = ConjugationTable([ConjugationRule("C_HA", "하", "어", "해")])
    assert kinds(GrammarBundle.from_graphs([graph("Main", ts)], conjugation=table)) == []


def test_reg_class_is_builtin():
    ts = [Transition("s0", "s2", L.stem("먹", "REG")), Transition("s2", "s1", L.ending("어"))]
    assert kinds(GrammarBundle.from_graphs([graph("Main", ts)])) == []


def test_structural_state_errors():
    g = GrammarGraph("Main", ("s0",), "s9", ("s5",), (Transition("s0", "s7", L.literal("a")),), ModuleTag(Part.LINK))
    assert kinds(GrammarBundle({"Main": g}, "Main")) == ["FinalNotDeclared", "StartNotDeclared", "UndeclaredState"]
    nofinal = GrammarGraph("Main", ("s0",), "s0", (), (), ModuleTag(Part.LINK))
    assert kinds(GrammarBundle({"Main": nofinal}, "Main")) == ["NoFinalState"]


def test_unreachable_final():
    g = graph("Main", [Transition("s1", "s2", L.literal("a"))], finals=("s2",))
    assert kinds(GrammarBundle.from_graphs([g])) == ["UnreachableFinal"]


def test_parent_cycle():
    main = graph("Main", [Transition("s0", "s1", L.literal("a"))])
    a = graph("A", [Transition("s0", "s1", L.literal("a"))], part=Part.EVENT, parent="B")
    b = graph("B", [Transition("s0", "s1", L.literal("b"))], part=Part.EVENT, parent="A")
    assert kinds(GrammarBundle.from_graphs([main, a, b])) == ["ParentCycle", "ParentCycle"]


def test_duplicate_graph_and_unknown_module():
    g = graph("Main", [Transition("s0", "s1", L.literal("a"))])
    with pytest.raises(DuplicateGraphError):
        GrammarBundle.from_graphs([g, g])
    bundle = GrammarBundle.from_graphs([g])
    with pytest.raises(UnknownModuleError):
        bundle["Nope"]
    with pytest.raises(UnknownModuleError):
        submodule_closure(bundle, "Nope")


def test_main_must_be_unique():
    a = graph("A", [Transition("s0", "s1", L.literal("a"))])
    b = graph("B", [Transition("s0", "s1", L.literal("a"))])
    with pytest.raises(GrammarError):
        GrammarBundle.from_graphs([a, b])
    assert GrammarBundle.from_graphs([a, b], main="B").main == "B"


def test_sample_pack_is_clean(sample_bundle):
    assert validate_bundle(sample_bundle) == []


def test_closure_examples(sample_bundle):
    assert submodule_closure(sample_bundle, "BankName") == {"BankName", "InternetBank", "CommercialBank"}
    assert submodule_closure(sample_bundle, "InternetBank") == {"InternetBank"}
    entity = submodule_closure(sample_bundle, "ENTITY")
    assert {"BankName", "AppName", "ProductName", "DepositProduct", "LoanProduct"} <= entity


def closure_oracle(bundle, module):
    # Walk each graph's parent chain upward.
    out = set()
    for name, g in bundle.graphs.items():
        cur, hops = name, 0
        while cur is not None and hops <= len(bundle.graphs):
            if cur == module:
                out.add(name)
                break
            cur = bundle.graphs[cur].tags.parent if cur in bundle.graphs else None
            hops += 1
    return out


def test_closure_matches_parent_walk(sample_bundle):
    for name in sample_bundle.graphs:
        assert submodule_closure(sample_bundle, name) == closure_oracle(sample_bundle, name)


def test_closure_idempotent(sample_bundle):
    for name in ["ENTITY", "FEATURE", "EVENT", "DM_ACTION"]:
        once = submodule_closure(sample_bundle, name)
        again = set().union(*(submodule_closure(sample_bundle, m) for m in once))
        assert again == once


def test_unreachable_final_matches_reachability_oracle():
    rng = random.Random(7)
    for trial in range(200):
        n = rng.randint(1, 8)
        states = [f"s{i}" for i in range(n)]
        ts = [Transition(rng.choice(states), rng.choice(states), L.literal("a")) for _ in range(rng.randint(0, 10))]
        finals = tuple(rng.sample(states, rng.randint(1, n)))
        g = GrammarGraph("Main", tuple(states), "s0", finals, tuple(ts), ModuleTag(Part.LINK))
        reach = reachable_states(g)
        got = sorted(d.location for d in validate_bundle(GrammarBundle({"Main": g}, "Main"))
                     if d.kind == "UnreachableFinal")
        assert got == sorted(f for f in finals if f not in reach)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_validation_independent_of_load_order(seed, rnd):
    bundle = random_bundle(seed, max_paths=10**9)
    graphs = list(bundle.graphs.values())
    rnd.shuffle(graphs)
    shuffled = GrammarBundle.from_graphs(graphs, bundle.main)
    assert validate_bundle(shuffled) == validate_bundle(bundle)
