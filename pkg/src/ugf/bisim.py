"""Uniform guarded bisimulations between finite structures.

Two routes compute the same relation:

* :func:`maximal_bisimulation` builds the set of candidate partial maps
  (uniform partial isomorphisms between live sets) and deletes maps
  violating (forth)/(back) until nothing changes.
* :func:`bisimulation_colors` runs colour refinement on elements of many
  structures at once; elements end with equal colours iff their singleton
  map survives the fixpoint.

Forth/back are also required for the empty map: every element occurring in
some sigma-tuple must be matched on either side.  Without this the relation
would not respect sentences such as ``exists x. (P(x) & true)``.  Elements in
no tuple are invisible to guarded formulas (equalities never guard) and are
exempt.
"""
from __future__ import annotations

import random
from collections import Counter, defaultdict
from dataclasses import dataclass
from itertools import permutations
from typing import Optional

from .structures import Structure, elem_key, k_table, live_sets
from .syntax import Vocabulary


@dataclass(frozen=True)
class PartialMap:
    """Finite bijection stored as a set of (source, target) pairs."""
    pairs: frozenset = frozenset()

    def __post_init__(self):
        src = [a for a, _ in self.pairs]
        tgt = [b for _, b in self.pairs]
        if len(set(src)) != len(src) or len(set(tgt)) != len(tgt):
            raise ValueError("partial map is not a bijection")

    @classmethod
    def of(cls, source, target) -> "PartialMap":
        source, target = tuple(source), tuple(target)
        if len(source) != len(target):
            raise ValueError("source and target lengths differ")
        return cls(frozenset(zip(source, target)))

    @property
    def source(self) -> tuple:
        return tuple(sorted((a for a, _ in self.pairs), key=elem_key))

    @property
    def target(self) -> tuple:
        m = dict(self.pairs)
        return tuple(m[a] for a in self.source)

    @property
    def domain(self) -> frozenset:
        return frozenset(a for a, _ in self.pairs)

    @property
    def image(self) -> frozenset:
        return frozenset(b for _, b in self.pairs)

    def __call__(self, a):
        for x, y in self.pairs:
            if x == a:
                return y
        raise KeyError(a)

    def inverse(self, b):
        for x, y in self.pairs:
            if y == b:
                return x
        raise KeyError(b)

    def sort_key(self):
        return (len(self.pairs), tuple(elem_key(p) for p in sorted(self.pairs, key=elem_key)))

    def __repr__(self):
        body = ", ".join(f"{a!r}->{b!r}" for a, b in sorted(self.pairs, key=elem_key))
        return "{" + body + "}"


def tuple_map(c, d) -> Optional[PartialMap]:
    """The map induced by c_i -> d_i, or None when it is not a bijection."""
    c, d = tuple(c), tuple(d)
    if len(c) != len(d):
        raise ValueError("tuples have different lengths")
    pairs = frozenset(zip(c, d))
    if len({a for a, _ in pairs}) != len(pairs) or len({b for _, b in pairs}) != len(pairs):
        return None
    return PartialMap(pairs)


@dataclass(frozen=True)
class BisimulationSet:
    A: Structure
    B: Structure
    sigma: Vocabulary
    maps: frozenset

    def __contains__(self, p):
        return p in self.maps

    def __len__(self):
        return len(self.maps)

    def __iter__(self):
        return iter(sorted(self.maps, key=PartialMap.sort_key))

    def singleton_pairs(self) -> set:
        return {next(iter(p.pairs)) for p in self.maps if len(p.pairs) == 1}

    def contains_pair(self, a_tuple, b_tuple) -> bool:
        """(a, b) in Z: the induced map exists and is a member."""
        p = tuple_map(a_tuple, b_tuple)
        return p is not None and p in self.maps


def _check_elements(S, elems):
    dom = set(S.domain)
    bad = [e for e in elems if e not in dom]
    if bad:
        raise KeyError(f"elements outside the domain: {bad}")


def is_uniform_partial_iso(A: Structure, B: Structure, p: PartialMap, sigma=None) -> bool:
    sigma = A.vocabulary.intersection(B.vocabulary) if sigma is None else Vocabulary.of(sigma)
    src = p.source
    _check_elements(A, src)
    _check_elements(B, p.target)
    if not src:
        return True
    return k_table(A, src, sigma) == k_table(B, p.target, sigma)


def _ordered_tables(S, X, sigma):
    out = defaultdict(list)
    for order in permutations(sorted(X, key=elem_key)):
        out[k_table(S, order, sigma)].append(order)
    return out


def candidate_maps(A, B, sigma) -> set:
    """All uniform partial isos from a live set of A onto a live set of B."""
    live_b = defaultdict(list)
    for Y in live_sets(B, sigma):
        live_b[len(Y)].append(Y)
    tables_b = {Y: _ordered_tables(B, Y, sigma) for ys in live_b.values() for Y in ys}
    out = set()
    for X in live_sets(A, sigma):
        src = tuple(sorted(X, key=elem_key))
        tab = k_table(A, src, sigma)
        for Y in live_b[len(X)]:
            for order in tables_b[Y].get(tab, ()):
                out.add(PartialMap.of(src, order))
    return out


class _Support:
    """Counts, for each live set X and a in X, how many surviving maps with
    domain X send a to each b (and symmetrically on the B side)."""

    def __init__(self, maps):
        self.fwd = defaultdict(Counter)
        self.bwd = defaultdict(Counter)
        for p in maps:
            self.add(p)

    def add(self, p):
        dom, img = p.domain, p.image
        for a, b in p.pairs:
            self.fwd[(dom, a)][b] += 1
            self.bwd[(img, b)][a] += 1

    def remove(self, p):
        dom, img = p.domain, p.image
        for a, b in p.pairs:
            self.fwd[(dom, a)][b] -= 1
            self.bwd[(img, b)][a] -= 1


def _violation(p, support, live_a, live_b):
    for a, b in p.pairs:
        for X in live_a.get(a, ()):
            if support.fwd[(X, a)][b] <= 0:
                return f"forth fails at {a!r} for live set {sorted(X, key=elem_key)}"
        for Y in live_b.get(b, ()):
            if support.bwd[(Y, b)][a] <= 0:
                return f"back fails at {b!r} for live set {sorted(Y, key=elem_key)}"
    return None


def _live_index(S, sigma):
    out = defaultdict(list)
    for X in live_sets(S, sigma):
        for a in X:
            out[a].append(X)
    return out


def visible_elements(S: Structure, sigma) -> set:
    """Elements occurring in some tuple of a relation in sigma."""
    return {e for s in Vocabulary.of(sigma) for t in S.interp(s.name) for e in t}


def _global_violation(A, B, maps, sigma):
    covered_a = {a for p in maps for a in p.domain}
    covered_b = {b for p in maps for b in p.image}
    missing_a = sorted(visible_elements(A, sigma) - covered_a, key=elem_key)
    missing_b = sorted(visible_elements(B, sigma) - covered_b, key=elem_key)
    if missing_a:
        return f"elements of the left structure unmatched: {missing_a}"
    if missing_b:
        return f"elements of the right structure unmatched: {missing_b}"
    return None


def maximal_bisimulation(A: Structure, B: Structure, sigma=None,
                         extra: Optional[PartialMap] = None,
                         rng: Optional[random.Random] = None) -> BisimulationSet:
    """Greatest set of candidate maps closed under (forth) and (back).

    ``extra`` (a cover map, possibly on a non-live set or empty) joins the
    candidates when it is a uniform partial isomorphism.  ``rng`` shuffles
    the deletion order; the result does not depend on it.
    """
    sigma = A.vocabulary.intersection(B.vocabulary) if sigma is None else Vocabulary.of(sigma)
    maps = candidate_maps(A, B, sigma)
    if extra is not None and is_uniform_partial_iso(A, B, extra, sigma):
        maps.add(extra)
    live_a, live_b = _live_index(A, sigma), _live_index(B, sigma)
    support = _Support(maps)
    order = sorted(maps, key=PartialMap.sort_key)
    changed = True
    while changed:
        changed = False
        if rng is not None:
            rng.shuffle(order)
        keep = []
        for p in order:
            if _violation(p, support, live_a, live_b) is not None:
                support.remove(p)
                changed = True
            else:
                keep.append(p)
        order = keep
    surviving = frozenset(order)
    if _global_violation(A, B, surviving, sigma) is not None:
        surviving = frozenset()
    return BisimulationSet(A, B, sigma, surviving)


def closure_violations(A: Structure, B: Structure, maps, sigma) -> list:
    """(map, reason) for every map breaking the bisimulation conditions with
    respect to ``maps``; a non-map entry ``(None, reason)`` reports an
    unmatched element or an empty set."""
    sigma = Vocabulary.of(sigma)
    maps = set(maps)
    out = []
    if not maps:
        return [(None, "empty set of maps")]
    for p in sorted(maps, key=PartialMap.sort_key):
        if not is_uniform_partial_iso(A, B, p, sigma):
            out.append((p, "not a uniform partial isomorphism"))
    support = _Support(maps)
    live_a, live_b = _live_index(A, sigma), _live_index(B, sigma)
    for p in sorted(maps, key=PartialMap.sort_key):
        why = _violation(p, support, live_a, live_b)
        if why:
            out.append((p, why))
    why = _global_violation(A, B, maps, sigma)
    if why:
        out.append((None, why))
    return out


def bisimilar(A: Structure, c, B: Structure, d, sigma=None) -> bool:
    c, d = tuple(c), tuple(d)
    if len(c) != len(d):
        raise ValueError("tuples have different lengths")
    p = tuple_map(c, d)
    if p is None:
        return False
    return p in maximal_bisimulation(A, B, sigma, extra=p)


# --------------------------------------------------------- colour refinement

def bisimulation_colors(structures, sigma) -> list:
    """Joint colour refinement.  Returns, per structure, a dict
    element -> colour; equal colours across structures mean the singleton
    map between the two elements survives the bisimulation fixpoint."""
    sigma = Vocabulary.of(sigma)
    # per element: list of (orderings of each live set through it, with tables)
    views = []
    for S in structures:
        per_elem = defaultdict(list)
        for X in live_sets(S, sigma):
            for a in X:
                rest = sorted(X - {a}, key=elem_key)
                entries = []
                for order in permutations(rest):
                    full = (a,) + order
                    entries.append((k_table(S, full, sigma), full))
                per_elem[a].append(entries)
        views.append(per_elem)
    ids = {}
    colors = []
    for S in structures:
        col = {}
        for a in S.domain:
            key = ("type", frozenset(s.name for s in sigma if S.holds(s.name, (a,) * s.arity)))
            col[a] = ids.setdefault(key, len(ids))
        colors.append(col)
    nclasses = len(set(ids.values()))
    while True:
        ids = {}
        new = []
        for S, col, per_elem in zip(structures, colors, views):
            ncol = {}
            for a in S.domain:
                sigs = frozenset(
                    frozenset((tab, tuple(col[e] for e in full)) for tab, full in entries)
                    for entries in per_elem[a])
                ncol[a] = ids.setdefault((col[a], sigs), len(ids))
            new.append(ncol)
        colors = new
        if len(ids) == nclasses:
            return colors
        nclasses = len(ids)


def bisimilar_by_colors(A: Structure, c, B: Structure, d, sigma, colors=None) -> bool:
    """Same relation as :func:`bisimilar`, computed from colour classes."""
    c, d = tuple(c), tuple(d)
    if len(c) != len(d):
        raise ValueError("tuples have different lengths")
    if colors is None:
        colors = bisimulation_colors([A, B], sigma)
    ca, cb = colors
    va, vb = visible_elements(A, sigma), visible_elements(B, sigma)
    if {ca[a] for a in va} != {cb[b] for b in vb}:
        return False
    p = tuple_map(c, d)
    if p is None or not is_uniform_partial_iso(A, B, p, sigma):
        return False
    return all(ca[a] == cb[b] for a, b in p.pairs)
