"""Simple-event inference: maximal intervals from existence/termination
timepoints.

Non-persistent events chain existence evidence whose gaps stay within the
event's window and close at terminations; persistent events run from an
existence point to the first termination, or forever. Levels are processed
in order of decreasing confidence; an interval already inferred at a
stronger level is not repeated at a weaker one.
"""

from __future__ import annotations

from bisect import bisect_left

from .language import TES, PredKind
from .model import STAR, AnnotatedEventFact, Dataset, Interval, interval_key
from .query import (
    AuxStore,
    LevelTimepoints,
    check_validity,
    ground_simple_heads,
    level_timepoints,
)


def _next_ge(sorted_pts: list[int], x: int) -> int | None:
    i = bisect_left(sorted_pts, x)
    return sorted_pts[i] if i < len(sorted_pts) else None


def _prune_contained(cands: set[tuple]) -> set[tuple]:
    """Drop candidates strictly contained in another candidate."""
    kept = set()
    for a, b in cands:
        if any((c, d) != (a, b) and c <= a and b <= d for c, d in cands):
            continue
        kept.add((a, b))
    return kept


def infer_nonpersistent(tp: LevelTimepoints, w: int) -> set[tuple[Interval, int]]:
    """All maximal intervals of a non-persistent instance, per level."""
    out: set[tuple[Interval, int]] = set()
    seen: set[Interval] = set()
    for level in range(1, tp.max_level + 1):
        te = list(tp.exists_at(level))
        tx = list(tp.ends_at(level))
        for a, b in _np_maximal(te, tx, w):
            iv = Interval(a, b)
            if iv not in seen:
                out.add((iv, level))
            seen.add(iv)
    return out


def _np_maximal(te: list[int], tx: list[int], w: int) -> list[tuple[int, int]]:
    """One maximal interval per evidence chain.

    Consecutive existence points join one chain when their gap stays within
    the window and no termination falls between them; each chain closes at
    the first termination within the window of its last point, or stays at
    the last point when none follows. Chains cannot contain one another:
    whatever breaks a chain (a wide gap or an intervening termination) also
    bounds its closed end below the next chain's start.
    """
    cands: list[tuple[int, int]] = []
    i, n = 0, len(te)
    while i < n:
        s = te[i]
        while i + 1 < n and te[i + 1] - te[i] <= w:
            nt = _next_ge(tx, te[i])
            if nt is not None and nt < te[i + 1]:
                break
            i += 1
        e = te[i]
        nt = _next_ge(tx, e)
        if nt is not None and nt <= e + w:
            cands.append((s, nt))
        else:
            cands.append((s, e))
        i += 1
    return cands


def infer_persistent(tp: LevelTimepoints) -> set[tuple[Interval, int]]:
    """All maximal intervals of a persistent instance, per level: each
    existence point runs to the first termination at or after it, or stays
    ongoing when none exists."""
    out: set[tuple[Interval, int]] = set()
    seen: set[Interval] = set()
    for level in range(1, tp.max_level + 1):
        tx = list(tp.ends_at(level))
        cands: set[tuple] = set()
        for t1 in tp.exists_at(level):
            nt = _next_ge(tx, t1)
            cands.add((t1, STAR if nt is None else nt))
        for a, b in _prune_contained(cands):
            iv = Interval(a, b)
            if iv not in seen:
                out.add((iv, level))
            seen.add(iv)
    return out


def infer_all_simple(dataset: Dataset, tes: TES) -> frozenset[AnnotatedEventFact]:
    """Ground the simple-event rules and infer every event instance."""
    aux = ground_simple_heads(tes, dataset)
    return infer_from_aux(aux, tes)


def infer_from_aux(aux: AuxStore, tes: TES) -> frozenset[AnnotatedEventFact]:
    check_validity(aux, tes)
    facts: set[AnnotatedEventFact] = set()
    for key in aux.keys():
        pred, args = key
        tp = level_timepoints(aux, key)
        if tes.kind(pred) is PredKind.NONPERSISTENT:
            pairs = infer_nonpersistent(tp, aux.window_for(key))
        else:
            pairs = infer_persistent(tp)
        facts.update(AnnotatedEventFact(pred, args, iv, lvl) for iv, lvl in pairs)
    return frozenset(facts)


# ---------------------------------------------------------------------------
# Definitional checker


def oracle_check_interval(persistent: bool, tp: LevelTimepoints, interval: Interval,
                          level: int, w: int | None = None) -> bool:
    """Check one candidate interval directly against the defining conditions.

    This is the item-by-item reference used to test the constructive
    inference; it is deliberately literal rather than fast.
    """
    if level < 1 or level > tp.max_level:
        return False
    if persistent:
        if not _pers_items(tp, interval, level):
            return False
        return all(not _pers_items(tp, interval, lo) for lo in range(1, level))
    if w is None or w < 1 or interval.ongoing:
        return False
    if not _np_items(tp, interval, level, w):
        return False
    return all(not _np_items(tp, interval, lo, w) for lo in range(1, level))


def _np_items(tp: LevelTimepoints, interval: Interval, level: int, w: int) -> bool:
    te, tx = set(tp.exists_at(level)), set(tp.ends_at(level))
    t1, t2 = interval.start, interval.end
    # existence chain from t1, gaps within w, confined to the interval
    pts = sorted(p for p in te if t1 <= p <= t2)
    if not pts or pts[0] != t1:
        return False
    chain_ends = [pts[0]]
    for p in pts[1:]:
        if p - chain_ends[-1] <= w:
            chain_ends.append(p)
        else:
            break
    # no termination strictly inside [t1, t2)
    if any(t1 <= x < t2 for x in tx):
        return False
    # every existence point just before t1 was terminated before t1
    for t1n in te:
        if t1 - w <= t1n < t1 and not any(t1n <= x < t1 for x in tx):
            return False
    for tn in chain_ends:
        # closed at the first termination at or after the chain end
        if tn <= t2 <= tn + w and t2 in tx:
            return True
        # open chain end with no evidence within the window after it
        if t2 == tn and not any(tn < x <= tn + w for x in te | tx):
            return True
    return False


def _pers_items(tp: LevelTimepoints, interval: Interval, level: int) -> bool:
    te, tx = set(tp.exists_at(level)), set(tp.ends_at(level))
    t1, t2 = interval.start, interval.end
    if t1 not in te:
        return False
    # every earlier existence point was terminated before t1
    for t1n in te:
        if t1n < t1 and not any(t1n <= x < t1 for x in tx):
            return False
    if interval.ongoing:
        return not any(x >= t1 for x in tx)
    if t2 not in tx:
        return False
    return not any(t1 <= x < t2 for x in tx)


def candidate_intervals(tp: LevelTimepoints, persistent: bool) -> list[Interval]:
    """Every interval a definitional check could accept: pairs of mentioned
    timepoints, plus ongoing ends for persistent instances."""
    pts = sorted({t for lvl in range(1, tp.max_level + 1)
                  for t in tp.exists_at(lvl) + tp.ends_at(lvl)})
    out = [Interval(a, b) for a in pts for b in pts if a <= b]
    if persistent:
        out += [Interval(a, STAR) for a in pts]
    return sorted(out, key=interval_key)
