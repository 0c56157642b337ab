"""Shared fixtures: the two-level worked example, clinical-style rule sets,
and random instance generators used by the equivalence suites."""

import random

import pytest

from timeloom import Dataset, parse_tes
from timeloom.query import LevelTimepoints

TWO_LEVEL_NONPERSISTENT = """
decl nonpersistent e/0.
exists(e, 2, 1).
exists(e, 4, 1).
exists(e, 9, 1).
exists(e, 1, 2).
exists(e, 5, 2).
exists(e, 6, 2).
exists(e, 10, 2).
ends(e, 7, 1).
ends(e, 8, 1).
window(e, 2).
"""

TWO_LEVEL_PERSISTENT = """
decl persistent e/0.
exists_pers(e, 2, 1).
exists_pers(e, 4, 1).
exists_pers(e, 9, 1).
exists_pers(e, 1, 2).
exists_pers(e, 5, 2).
exists_pers(e, 6, 2).
exists_pers(e, 10, 2).
ends(e, 7, 1).
ends(e, 8, 1).
"""

THERAPY_RULES = """
decl observation adm/2.
decl observation lab/1.
decl nonpersistent abth/2.
decl persistent hyperglyc/1.
decl meta ontherapy/1.
exists(abth(P, D), T, 1) :- adm(P, D, T).
window(abth(P, D), 48).
exists_pers(hyperglyc(P), T, 1) :- lab(P, T).
meta ontherapy(P, I, L) :- abth(P, D, I, L).
"""


@pytest.fixture
def np_tes():
    return parse_tes(TWO_LEVEL_NONPERSISTENT)


@pytest.fixture
def pers_tes():
    return parse_tes(TWO_LEVEL_PERSISTENT)


@pytest.fixture
def empty_dataset():
    return Dataset([])


@pytest.fixture
def therapy_tes():
    return parse_tes(THERAPY_RULES)


def make_timepoints(exists_raw, ends_raw, key=("e", ())):
    """Build cumulative per-level timepoints from per-level raw sets."""
    levels = max(len(exists_raw), len(ends_raw))
    ex, en = [], []
    seen_e, seen_t = set(), set()
    for lvl in range(levels):
        seen_e |= set(exists_raw[lvl]) if lvl < len(exists_raw) else set()
        seen_t |= set(ends_raw[lvl]) if lvl < len(ends_raw) else set()
        ex.append(tuple(sorted(seen_e)))
        en.append(tuple(sorted(seen_t)))
    return LevelTimepoints(key, tuple(ex), tuple(en))


def random_timepoint_config(rng: random.Random, max_points=14, max_levels=3,
                            horizon=20):
    """Random cumulative timepoint configuration plus a window."""
    levels = rng.randint(1, max_levels)
    n = rng.randint(1, max_points)
    points = rng.sample(range(horizon), min(n, horizon))
    exists_raw, ends_raw = [], []
    for _ in range(levels):
        exists_raw.append({p for p in points if rng.random() < 0.45})
        ends_raw.append({p for p in points if rng.random() < 0.25})
    if not any(exists_raw):
        exists_raw[0].add(rng.choice(points))
    w = rng.choice((1, 2, 3))
    return exists_raw, ends_raw, w


# constraint-free rule set for tests that supply fact sets directly
PLAIN_TES = parse_tes(
    "decl nonpersistent e/1.\nexists(e(x), 0, 1).\nwindow(e(X), 1).")


def random_fact_set(rng: random.Random, max_facts=12, max_levels=3, horizon=12):
    """Random annotated event facts over a couple of instances; conflicts
    arise naturally from overlapping intervals on the same instance."""
    from timeloom import STAR, AnnotatedEventFact, Interval

    n = rng.randint(1, max_facts)
    facts = set()
    while len(facts) < n:
        pred = rng.choice(("e", "f"))
        args = (rng.choice(("a", "b")),)
        start = rng.randrange(horizon)
        if rng.random() < 0.15:
            end = STAR
        else:
            end = start + rng.randrange(4)
        level = rng.randint(1, max_levels)
        facts.add(AnnotatedEventFact(pred, args, Interval(start, end), level))
    return frozenset(facts)


def random_ruleful_instance(rng: random.Random, allow_constraints=True,
                            end_levels=(1, 2, 3), extra=()):
    """A (dataset, tes) pair with ground simple-event rules and sometimes a
    positive-only (monotone) constraint."""
    lines = ["decl nonpersistent e/0.", "decl persistent p/0."]
    horizon = 10
    for _ in range(rng.randint(1, 7)):
        lines.append(f"exists(e, {rng.randrange(horizon)}, {rng.randint(1, 3)}).")
    for _ in range(rng.randint(0, 3)):
        lines.append(f"ends(e, {rng.randrange(horizon)}, {rng.choice(end_levels)}).")
    lines.append(f"window(e, {rng.choice((1, 2, 3))}).")
    for _ in range(rng.randint(0, 4)):
        lines.append(f"exists_pers(p, {rng.randrange(horizon)}, {rng.randint(1, 3)}).")
    for _ in range(rng.randint(0, 2)):
        lines.append(f"ends(p, {rng.randrange(horizon)}, {rng.choice(end_levels)}).")
    if allow_constraints and rng.random() < 0.5:
        # positive-only: an e and a p interval may not start together
        lines.append("constraint :- e([T, T2]), p([T, T3]).")
    lines.extend(extra)
    return Dataset([]), parse_tes("\n".join(lines))


def random_guard_instance(rng: random.Random, max_facts=12):
    """An instance meeting the greedy guard: no domain constraints and
    termination knowledge only at the strongest level.  Returns (se, tes)."""
    from timeloom import infer_all_simple

    while True:
        dataset, tes = random_ruleful_instance(
            rng, allow_constraints=False, end_levels=(1,))
        se = infer_all_simple(dataset, tes)
        if 1 <= len(se) <= max_facts:
            return se, tes
