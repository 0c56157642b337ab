"""Meta-event inference: stratified rule evaluation over inferred events.

Each stratum is evaluated to a fixpoint before the next begins, so negated
event references and extremum tests always see a completed collection.
Within a stratum, repeated passes restrict one body literal at a time to
the newest facts.
"""

from __future__ import annotations

from .errors import LevelOverflow
from .language import TES, AnnEventAtom, EventAtom, MetaRule
from .model import AnnotatedEventFact, Dataset, EventStore, Interval, eval_term
from .query import eval_body


def _fire(rule: MetaRule, dataset: Dataset, store: EventStore,
          delta: tuple | None) -> set[AnnotatedEventFact]:
    out: set[AnnotatedEventFact] = set()
    for binding in eval_body(rule.body, rule.var_sorts, dataset, store, delta):
        interval = eval_term(rule.interval, binding)
        if interval is None:  # empty intersection or inverted endpoints
            continue
        assert isinstance(interval, Interval)
        level = eval_term(rule.level, binding)
        if not isinstance(level, int) or level < 1:
            raise LevelOverflow(f"rule for {rule.pred} computed level {level}")
        args = tuple(eval_term(a, binding) for a in rule.args)
        out.add(AnnotatedEventFact(rule.pred, args, interval, level))
    return out


def _recursive_positions(rule: MetaRule, stratum: frozenset[str]) -> list[int]:
    return [i for i, lit in enumerate(rule.body)
            if not lit.negated
            and isinstance(lit.atom, (EventAtom, AnnEventAtom))
            and lit.atom.pred in stratum]


def infer_meta(tes: TES, dataset: Dataset,
               simple: frozenset[AnnotatedEventFact]) -> frozenset[AnnotatedEventFact]:
    """All meta-event facts derivable from the dataset and simple events."""
    store = EventStore()
    store.add_all(simple)
    derived: set[AnnotatedEventFact] = set()
    for stratum in tes.strata:
        members = frozenset(stratum)
        rules = [r for r in tes.meta_rules if r.pred in members]
        if not rules:
            continue
        delta = store.add_all(frozenset().union(
            *(_fire(r, dataset, store, None) for r in rules)))
        derived.update(delta)
        recursive = [(r, _recursive_positions(r, members)) for r in rules]
        recursive = [(r, ps) for r, ps in recursive if ps]
        while delta:
            new: set[AnnotatedEventFact] = set()
            for rule, positions in recursive:
                for pos in positions:
                    pred = rule.body[pos].atom.pred
                    fresh = [f for f in delta if f.pred == pred]
                    if fresh:
                        new |= _fire(rule, dataset, store, (pos, fresh))
            delta = store.add_all(new)
            derived.update(delta)
    return frozenset(derived)


def infer_timeline_facts(tes: TES, dataset: Dataset,
                         simple: frozenset[AnnotatedEventFact]) -> frozenset[AnnotatedEventFact]:
    """Simple events plus everything the meta rules derive from them."""
    return simple | infer_meta(tes, dataset, simple)
