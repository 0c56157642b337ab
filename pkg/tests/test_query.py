"""Body evaluation, grounded rule heads, and level-indexed timepoints."""

import pytest

from timeloom import (
    STAR,
    AnnotatedEventFact,
    AtemporalFact,
    Dataset,
    EventStore,
    Interval,
    InvalidSpec,
    ObservationFact,
    eval_body,
    ground_simple_heads,
    level_timepoints,
    parse_tes,
)
from timeloom.query import AuxStore, check_validity

from conftest import THERAPY_RULES


def body_of(rule_text, which="meta"):
    tes = parse_tes(rule_text)
    rule = {"meta": tes.meta_rules, "constraint": tes.constraints,
            "exists": tes.existence}[which][0]
    return rule.body, rule.var_sorts


def test_eval_body_joins_observations():
    tes = parse_tes(THERAPY_RULES)
    rule = tes.existence[0]
    d = Dataset([ObservationFact("adm", ("p1", "amox"), 5),
                 ObservationFact("adm", ("p2", "tki"), 9)])
    got = eval_body(rule.body, rule.var_sorts, d)
    assert sorted(b["P"] for b in got) == ["p1", "p2"]
    assert {b["P"]: b["T"] for b in got} == {"p1": 5, "p2": 9}


def test_eval_body_empty_ground_body(empty_dataset):
    assert eval_body((), {}, empty_dataset) == [{}]


def test_eval_body_atemporal_join():
    body, sorts = body_of(
        "decl atemporal ab/1.\ndecl observation adm/2.\ndecl nonpersistent e/1.\n"
        "exists(e(D), T, 1) :- adm(P, D, T), ab(D).\nwindow(e(X), 2).", "exists")
    d = Dataset([ObservationFact("adm", ("p1", "amox"), 3),
                 ObservationFact("adm", ("p1", "insulin"), 4),
                 AtemporalFact("ab", ("amox",))])
    got = eval_body(body, sorts, d)
    assert [b["D"] for b in got] == ["amox"]


def test_eval_body_negated_event_atom():
    body, sorts = body_of(
        "decl persistent p/1.\ndecl persistent q/1.\ndecl meta m/1.\n"
        "meta m(X, I, L) :- p(X, I, L), not q(X, I, _).")
    events = EventStore([
        AnnotatedEventFact("p", ("a",), Interval(1, 4), 1),
        AnnotatedEventFact("p", ("b",), Interval(2, 5), 1),
        AnnotatedEventFact("q", ("b",), Interval(2, 5), 2),
    ])
    got = eval_body(body, sorts, Dataset([]), events)
    assert [b["X"] for b in got] == ["a"]


def test_eval_body_comparisons_with_star():
    body, sorts = body_of(
        "decl persistent p/0.\ndecl meta m/0.\n"
        "meta m([T1, T2], 1) :- p([T1, T2], L), T2 != *.")
    events = EventStore([
        AnnotatedEventFact("p", (), Interval(0, STAR), 1),
        AnnotatedEventFact("p", (), Interval(0, 3), 1),
    ])
    got = eval_body(body, sorts, Dataset([]), events)
    assert [b["T2"] for b in got] == [3]


def test_eval_body_allen_test():
    body, sorts = body_of(
        "decl persistent p/0.\ndecl persistent q/0.\ndecl meta m/0.\n"
        "meta m(inter(I, J), 1) :- p(I, L1), q(J, L2), overlaps(I, J).")
    events = EventStore([
        AnnotatedEventFact("p", (), Interval(1, 4), 1),
        AnnotatedEventFact("q", (), Interval(3, 8), 1),
        AnnotatedEventFact("q", (), Interval(6, 9), 1),
    ])
    got = eval_body(body, sorts, Dataset([]), events)
    assert [b["J"] for b in got] == [Interval(3, 8)]


def test_eval_body_extremum_with_ongoing_end():
    body, sorts = body_of(
        "decl persistent p/0.\ndecl meta m/0.\n"
        "meta m([T1, T2], 1) :- p([T1, T2], L), end(p, T2).")
    events = EventStore([
        AnnotatedEventFact("p", (), Interval(2, 5), 1),
        AnnotatedEventFact("p", (), Interval(1, STAR), 1),
    ])
    got = eval_body(body, sorts, Dataset([]), events)
    assert [(b["T1"], b["T2"]) for b in got] == [(1, STAR)]


def test_eval_body_extremum_start():
    body, sorts = body_of(
        "decl persistent p/1.\ndecl meta m/1.\n"
        "meta m(X, [T1, T2], 1) :- p(X, [T1, T2], L), start(p(X), T1).")
    events = EventStore([
        AnnotatedEventFact("p", ("a",), Interval(2, 5), 1),
        AnnotatedEventFact("p", ("a",), Interval(4, 9), 1),
        AnnotatedEventFact("p", ("b",), Interval(4, 6), 1),
    ])
    got = eval_body(body, sorts, Dataset([]), events)
    assert sorted((b["X"], b["T1"]) for b in got) == [("a", 2), ("b", 4)]


def test_eval_body_delta_restricts_one_binder():
    body, sorts = body_of(
        "decl persistent p/0.\ndecl persistent q/0.\ndecl meta m/0.\n"
        "meta m(I, L) :- p(I, L), q(J, L2).")
    p1 = AnnotatedEventFact("p", (), Interval(0, 1), 1)
    p2 = AnnotatedEventFact("p", (), Interval(2, 3), 1)
    q1 = AnnotatedEventFact("q", (), Interval(5, 6), 1)
    events = EventStore([p1, p2, q1])
    full = eval_body(body, sorts, Dataset([]), events)
    assert len(full) == 2
    narrowed = eval_body(body, sorts, Dataset([]), events, delta=(0, (p2,)))
    assert [b["I"] for b in narrowed] == [Interval(2, 3)]


def test_ground_simple_heads_and_windows(therapy_tes):
    d = Dataset([ObservationFact("adm", ("p1", "amox"), 5),
                 ObservationFact("lab", ("p1",), 30)])
    aux = ground_simple_heads(therapy_tes, d)
    assert aux.exists == frozenset({
        (("abth", ("p1", "amox")), 5, 1),
        (("hyperglyc", ("p1",)), 30, 1),
    })
    assert aux.ends == frozenset()
    assert aux.default_windows == frozenset({("abth", 48)})
    assert aux.window_values(("abth", ("p1", "amox"))) == [48]
    assert aux.window_for(("abth", ("p1", "amox"))) == 48
    assert aux.keys() == [("abth", ("p1", "amox")), ("hyperglyc", ("p1",))]


def test_check_validity_missing_window():
    tes = parse_tes("decl nonpersistent e/0.\ndecl observation o/0.\n"
                    "exists(e, T, 1) :- o(T).\nwindow(e, 2) :- o(9).")
    aux = ground_simple_heads(tes, Dataset([ObservationFact("o", (), 3)]))
    with pytest.raises(InvalidSpec) as err:
        check_validity(aux, tes)
    assert "MissingWindow" in str(err.value)


def test_check_validity_ambiguous_window():
    tes = parse_tes("decl nonpersistent e/1.\ndecl observation o/1.\n"
                    "exists(e(X), T, 1) :- o(X, T).\nwindow(e(A), 7).\n"
                    "window(e(X), 3) :- o(X, T).")
    aux = ground_simple_heads(tes, Dataset([ObservationFact("o", ("a",), 0)]))
    assert aux.window_values(("e", ("a",))) == [3, 7]
    with pytest.raises(InvalidSpec) as err:
        check_validity(aux, tes)
    assert "AmbiguousWindow" in str(err.value)


def test_check_validity_zero_window():
    tes = parse_tes("decl nonpersistent e/1.\ndecl observation o/1.\n"
                    "exists(e(X), T, 1) :- o(X, T).\n"
                    "window(e(X), minus(T, T)) :- o(X, T).")
    aux = ground_simple_heads(tes, Dataset([ObservationFact("o", ("a",), 3)]))
    with pytest.raises(InvalidSpec) as err:
        check_validity(aux, tes)
    assert "ZeroWindow" in str(err.value)


def test_check_validity_ignores_persistent(pers_tes, empty_dataset):
    aux = ground_simple_heads(pers_tes, empty_dataset)
    check_validity(aux, pers_tes)  # no window needed


def test_level_timepoints_cumulative(np_tes, empty_dataset):
    aux = ground_simple_heads(np_tes, empty_dataset)
    tp = level_timepoints(aux, ("e", ()))
    assert tp.max_level == 2
    assert tp.exists_at(1) == (2, 4, 9)
    assert tp.exists_at(2) == (1, 2, 4, 5, 6, 9, 10)
    assert tp.ends_at(1) == (7, 8)
    assert tp.ends_at(2) == (7, 8)


def test_aux_store_direct():
    aux = AuxStore(
        exists=frozenset({(("e", ()), 1, 1)}),
        ends=frozenset(),
        windows=frozenset({(("e", ()), 4)}),
        default_windows=frozenset({("e", 4)}))
    # identical default and keyed values collapse to one
    assert aux.window_values(("e", ())) == [4]
