"""Amalgam of two structures that are bisimilar over a shared vocabulary.

Given A over sigma, B over tau and a bisimulation Z over sigma & tau, the
amalgam lives on the pairs (a, b) whose singleton map a -> b is in Z.  A
tuple of pairs belongs to a shared relation iff its left projection does
and the induced map is in Z; sigma-only (tau-only) relations additionally
admit left-good (right-good) tuples whose left (right) projection is not
live over the shared vocabulary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .bisim import (BisimulationSet, PartialMap, closure_violations,
                    is_uniform_partial_iso)
from .structures import Structure, elem_key, is_live, live_sets
from .syntax import Vocabulary


@dataclass(frozen=True)
class Goodness:
    left_good: bool
    right_good: bool

    @property
    def good(self) -> bool:
        return self.left_good and self.right_good


@dataclass(frozen=True)
class PairedTuple:
    """The tuple ((a1,b1), ..., (an,bn)) built from a and b."""
    left: tuple
    right: tuple

    def __post_init__(self):
        if len(self.left) != len(self.right):
            raise ValueError("paired tuples need equal lengths")

    @classmethod
    def from_pairs(cls, pairs) -> "PairedTuple":
        pairs = tuple(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @property
    def pairs(self) -> tuple:
        return tuple(zip(self.left, self.right))

    def expand(self, mu) -> "PairedTuple":
        return PairedTuple(tuple(self.left[i] for i in mu), tuple(self.right[i] for i in mu))

    def goodness(self) -> Goodness:
        n = len(self.left)
        lg = rg = True
        for i in range(n):
            for j in range(i + 1, n):
                if self.left[i] == self.left[j] and self.right[i] != self.right[j]:
                    lg = False
                if self.right[i] == self.right[j] and self.left[i] != self.left[j]:
                    rg = False
        return Goodness(lg, rg)


@dataclass(frozen=True)
class Amalgam:
    structure: Structure
    universe: tuple
    A: Structure
    B: Structure
    Z: BisimulationSet
    sigma: Vocabulary
    tau: Vocabulary


@dataclass
class ProjectionReport:
    name: str
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.passed

    def lines(self) -> list:
        head = f"{self.name}: {'pass' if self.passed else 'FAIL'}"
        return [head] + [f"  {side}: {p!r}: {why}" for side, p, why in self.violations]


def _partners(universe):
    left, right = {}, {}
    for a, b in universe:
        left.setdefault(a, []).append(b)
        right.setdefault(b, []).append(a)
    return left, right


def build_amalgam(A: Structure, B: Structure, Z: BisimulationSet, sigma, tau) -> Amalgam:
    sigma, tau = Vocabulary.of(sigma), Vocabulary.of(tau)
    shared = sigma.intersection(tau)
    problems = closure_violations(A, B, Z.maps, shared)
    if problems:
        raise ValueError(f"not a bisimulation over the shared vocabulary: {problems[0][1]}")
    universe = tuple(sorted(Z.singleton_pairs(), key=elem_key))
    if not universe:
        raise ValueError("amalgam universe is empty")
    left, right = _partners(universe)
    rels = {}
    for s in sigma.union(tau):
        out = set()
        if s in sigma:
            for t in A.interp(s.name):
                for bs in product(*(left.get(a, ()) for a in t)):
                    pt = PairedTuple(t, bs)
                    if _admit(pt, s, sigma, tau, shared, A, B, Z, side="left"):
                        out.add(pt.pairs)
        else:
            for t in B.interp(s.name):
                for as_ in product(*(right.get(b, ()) for b in t)):
                    pt = PairedTuple(as_, t)
                    if _admit(pt, s, sigma, tau, shared, A, B, Z, side="right"):
                        out.add(pt.pairs)
        rels[s.name] = out
    C = Structure(sigma.union(tau), universe, rels)
    return Amalgam(C, universe, A, B, Z, sigma, tau)


def _admit(pt, s, sigma, tau, shared, A, B, Z, side) -> bool:
    in_z = Z.contains_pair(pt.left, pt.right)
    if s in shared:
        return in_z
    if in_z:
        return True
    g = pt.goodness()
    if side == "left":
        return g.left_good and not is_live(A, set(pt.left), shared)
    return g.right_good and not is_live(B, set(pt.right), shared)


def _projection(C, target_side, sigma):
    maps = set()
    bad = []
    for X in live_sets(C, sigma):
        pairs = frozenset((e, e[target_side]) for e in X)
        try:
            maps.add(PartialMap(pairs))
        except ValueError:
            bad.append((sorted(X, key=elem_key), "projection is not injective"))
    return maps, bad


def projection_maps(amalgam: Amalgam, sigma=None, tau=None):
    """(Z1, Z2): maps from sigma-live (tau-live) sets of the amalgam to
    their left (right) projections.  Raises ValueError if a projection is
    not injective."""
    sigma = amalgam.sigma if sigma is None else Vocabulary.of(sigma)
    tau = amalgam.tau if tau is None else Vocabulary.of(tau)
    C = amalgam.structure
    z1, bad1 = _projection(C, 0, sigma)
    z2, bad2 = _projection(C, 1, tau)
    if bad1 or bad2:
        raise ValueError(f"non-injective projection: {(bad1 + bad2)[0][0]}")
    return (BisimulationSet(C, amalgam.A, sigma, frozenset(z1)),
            BisimulationSet(C, amalgam.B, tau, frozenset(z2)))


def check_projection_isos(amalgam: Amalgam, A=None, B=None, sigma=None, tau=None) -> ProjectionReport:
    """Every projection map is a uniform partial isomorphism."""
    A = amalgam.A if A is None else A
    B = amalgam.B if B is None else B
    sigma = amalgam.sigma if sigma is None else Vocabulary.of(sigma)
    tau = amalgam.tau if tau is None else Vocabulary.of(tau)
    C = amalgam.structure
    report = ProjectionReport("partial isomorphisms")
    for side, target, voc, idx in (("left", A, sigma, 0), ("right", B, tau, 1)):
        maps, bad = _projection(C, idx, voc)
        for X, why in bad:
            report.violations.append((side, X, why))
        for p in sorted(maps, key=PartialMap.sort_key):
            if not is_uniform_partial_iso(C, target, p, voc):
                report.violations.append((side, p, "tables differ"))
    return report


def check_projection_bisim(amalgam: Amalgam, A=None, B=None, sigma=None, tau=None) -> ProjectionReport:
    """Projection map sets satisfy (forth), (back) and element matching."""
    A = amalgam.A if A is None else A
    B = amalgam.B if B is None else B
    sigma = amalgam.sigma if sigma is None else Vocabulary.of(sigma)
    tau = amalgam.tau if tau is None else Vocabulary.of(tau)
    C = amalgam.structure
    report = ProjectionReport("bisimulation conditions")
    for side, target, voc, idx in (("left", A, sigma, 0), ("right", B, tau, 1)):
        maps, bad = _projection(C, idx, voc)
        for X, why in bad:
            report.violations.append((side, X, why))
        for p, why in closure_violations(C, target, maps, voc):
            report.violations.append((side, p, why))
    return report


def with_tuple_flipped(amalgam: Amalgam, name: str, t) -> Amalgam:
    """Copy of the amalgam with one relation tuple toggled (for mutation tests)."""
    C = amalgam.structure
    t = tuple(t)
    rels = C.relations
    rels[name] = rels[name] ^ {t}
    return Amalgam(Structure(C.vocabulary, C.domain, rels), amalgam.universe,
                   amalgam.A, amalgam.B, amalgam.Z, amalgam.sigma, amalgam.tau)


def amalgam_report(amalgam: Amalgam) -> dict:
    isos, closure = check_projection_isos(amalgam), check_projection_bisim(amalgam)
    return {
        "structure": amalgam.structure.to_json(),
        "universe_size": len(amalgam.universe),
        "projection_isos": {"passed": isos.passed, "violations": [[s, repr(p), w] for s, p, w in isos.violations]},
        "projection_bisim": {"passed": closure.passed, "violations": [[s, repr(p), w] for s, p, w in closure.violations]},
    }
