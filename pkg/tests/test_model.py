"""Core value model: intervals, the ongoing marker, terms, facts, stores."""

import pickle

import pytest
from hypothesis import given
from hypothesis import strategies as st

from timeloom import (
    STAR,
    AnnotatedEventFact,
    AtemporalFact,
    Dataset,
    EventFact,
    EventStore,
    Interval,
    InvalidInterval,
    ObservationFact,
    SortError,
    UnboundVariable,
    allen_relation,
)
from timeloom.model import (
    Const,
    FnApp,
    IntervalFn,
    IntervalTerm,
    Nat,
    StarTerm,
    Var,
    eval_term,
    fact_key,
    interval_key,
)


def test_interval_validation():
    assert Interval(2, 5).end == 5
    assert Interval(3, 3).start == 3
    assert Interval(0, STAR).ongoing
    with pytest.raises(InvalidInterval):
        Interval(-1, 2)
    with pytest.raises(InvalidInterval):
        Interval(4, 2)
    with pytest.raises(InvalidInterval):
        Interval(True, 2)
    with pytest.raises(InvalidInterval):
        Interval(0, -3)


def test_star_ordering():
    assert STAR > 5
    assert STAR >= 5
    assert not STAR < 5
    assert not STAR <= 5
    assert STAR >= STAR
    assert STAR <= STAR
    assert not STAR > STAR
    assert max(3, STAR) is STAR
    assert min(3, STAR) == 3


def test_star_pickles_to_singleton():
    assert pickle.loads(pickle.dumps(STAR)) is STAR
    assert pickle.loads(pickle.dumps(Interval(1, STAR))).end is STAR


def test_interval_contains_and_intersect():
    assert Interval(1, 9).contains(Interval(2, 5))
    assert Interval(1, STAR).contains(Interval(2, 5))
    assert not Interval(2, 5).contains(Interval(1, 9))
    assert Interval(2, STAR).intersect(Interval(5, 9)) == Interval(5, 9)
    assert Interval(1, 3).intersect(Interval(5, 9)) is None
    assert Interval(1, STAR).intersect(Interval(4, STAR)) == Interval(4, STAR)
    assert Interval(1, 4).intersect(Interval(4, 9)) == Interval(4, 4)


def test_interval_key_orders_ongoing_last():
    xs = [Interval(1, STAR), Interval(1, 5), Interval(0, 2)]
    assert sorted(xs, key=interval_key) == [
        Interval(0, 2), Interval(1, 5), Interval(1, STAR)]


ALLEN_INVERSE = {
    "before": "after", "meets": "met_by", "overlaps": "overlapped_by",
    "starts": "started_by", "during": "contains", "finishes": "finished_by",
    "equals": "equals",
}
ALLEN_INVERSE.update({v: k for k, v in ALLEN_INVERSE.items()})


def test_allen_relation_examples():
    assert allen_relation(Interval(1, 2), Interval(3, 4)) == "before"
    assert allen_relation(Interval(1, 3), Interval(3, 5)) == "meets"
    assert allen_relation(Interval(1, 4), Interval(2, 6)) == "overlaps"
    assert allen_relation(Interval(1, 2), Interval(1, 5)) == "starts"
    assert allen_relation(Interval(2, 3), Interval(1, 5)) == "during"
    assert allen_relation(Interval(3, 5), Interval(1, 5)) == "finishes"
    assert allen_relation(Interval(2, 4), Interval(2, 4)) == "equals"
    assert allen_relation(Interval(1, 6), Interval(2, 4)) == "contains"
    assert allen_relation(Interval(1, STAR), Interval(2, 5)) == "contains"
    assert allen_relation(Interval(2, 5), Interval(1, STAR)) == "during"
    assert allen_relation(Interval(1, STAR), Interval(1, STAR)) == "equals"
    assert allen_relation(Interval(1, STAR), Interval(1, 5)) == "started_by"


endpoints = st.integers(min_value=0, max_value=8)


@st.composite
def intervals(draw):
    start = draw(endpoints)
    if draw(st.booleans()):
        return Interval(start, STAR)
    return Interval(start, start + draw(st.integers(min_value=0, max_value=6)))


@given(intervals(), intervals())
def test_allen_relation_total_and_invertible(a, b):
    r = allen_relation(a, b)
    assert r in ALLEN_INVERSE
    assert allen_relation(b, a) == ALLEN_INVERSE[r]


@given(intervals(), intervals())
def test_allen_relation_unique(a, b):
    # exactly one relation holds: equal intervals give equals, nothing else
    r = allen_relation(a, b)
    if a == b:
        assert r == "equals"
    else:
        assert r != "equals"


def test_eval_term_basics():
    assert eval_term(Const("amox"), {}) == "amox"
    assert eval_term(Nat(7), {}) == 7
    assert eval_term(StarTerm(), {}) is STAR
    assert eval_term(Var("T"), {"T": 4}) == 4
    with pytest.raises(UnboundVariable):
        eval_term(Var("T"), {})


def test_eval_term_arithmetic():
    assert eval_term(FnApp("plus", (Nat(2), Nat(3))), {}) == 5
    assert eval_term(FnApp("minus", (Nat(5), Nat(2))), {}) == 3
    # subtraction clamps at zero: timepoints are naturals
    assert eval_term(FnApp("minus", (Nat(2), Nat(5))), {}) == 0
    assert eval_term(FnApp("max", (Nat(3), StarTerm())), {}) is STAR
    assert eval_term(FnApp("min", (Nat(3), StarTerm())), {}) == 3
    with pytest.raises(SortError):
        eval_term(FnApp("plus", (Nat(1), StarTerm())), {})
    with pytest.raises(SortError):
        eval_term(FnApp("min", (Nat(1), Const("x"))), {})


def test_eval_term_intervals():
    assert eval_term(IntervalTerm(Nat(1), Nat(4)), {}) == Interval(1, 4)
    assert eval_term(IntervalTerm(Nat(4), Nat(1)), {}) is None
    assert eval_term(IntervalTerm(Nat(1), StarTerm()), {}) == Interval(1, STAR)
    with pytest.raises(SortError):
        eval_term(IntervalTerm(StarTerm(), Nat(3)), {})
    with pytest.raises(SortError):
        eval_term(IntervalTerm(Const("a"), Nat(3)), {})
    i = IntervalFn((IntervalTerm(Nat(1), Nat(6)), IntervalTerm(Nat(4), Nat(9))))
    assert eval_term(i, {}) == Interval(4, 6)
    empty = IntervalFn((IntervalTerm(Nat(1), Nat(2)), IntervalTerm(Nat(5), Nat(9))))
    assert eval_term(empty, {}) is None
    with pytest.raises(SortError):
        eval_term(IntervalFn((Nat(3),)), {})


def test_fact_key_total_order():
    facts = [
        AnnotatedEventFact("a", (), Interval(0, 1), 1),
        EventFact("a", (), Interval(0, 1)),
        ObservationFact("a", (), 0),
        AtemporalFact("a", ()),
    ]
    assert sorted(facts, key=fact_key) == list(reversed(facts))
    # ints order before symbols in argument positions
    assert fact_key(AtemporalFact("p", (2,))) < fact_key(AtemporalFact("p", ("b",)))
    assert fact_key(AnnotatedEventFact("a", (), Interval(0, 1), 1)) < fact_key(
        AnnotatedEventFact("a", (), Interval(0, 1), 2))


def test_dataset_dedups_and_rejects_events():
    obs = ObservationFact("adm", ("p1",), 5)
    d = Dataset([obs, obs, AtemporalFact("drug", ("amox",))])
    assert len(d) == 2
    assert obs in d
    assert d.observations("adm") == (obs,)
    assert d.atemporal("none") == ()
    with pytest.raises(TypeError):
        Dataset([EventFact("e", (), Interval(0, 1))])


def test_event_store():
    f1 = AnnotatedEventFact("e", ("a",), Interval(0, 2), 1)
    f2 = AnnotatedEventFact("e", ("b",), Interval(1, 3), 2)
    s = EventStore([f1])
    assert s.add(f2)
    assert not s.add(f1)
    assert s.add_all([f1, f2]) == []
    assert set(s.by_pred("e")) == {f1, f2}
    assert s.by_key("e", ("a",)) == (f1,)
    assert len(s) == 2 and f1 in s
