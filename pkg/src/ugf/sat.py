"""Witness-based satisfiability for normal-form sentences.

A (P, pi)-witness is a pointed structure (A, c) whose elements all have
1-types in P, whose center has type pi, in which every existential
requirement triggered by a tuple through c is met, and in which every
universal requirement holds.  Universal requirements are checked on *all*
tuples, not only those through c: copies of witnesses are glued together
when a model is assembled, so a violation anywhere in a witness would
reappear in the assembled model.

A set P of 1-types is a witness set when every seed symbol occurs in some
type of P and every pi in P has a (P, pi)-witness.  Witness search grounds
the conditions over a fixed domain and runs the CDCL solver, so a search
up to ``size_bound`` is exhaustive for that bound.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

from .ground import Grounder
from .normform import (ExistentialReq, NormalFormSentence, UniversalReq,
                       is_normal_form, to_normal_form)
from .structures import (OneType, Structure, elem_key, evaluate, guard_matches,
                         live_sets, one_type)
from .syntax import (Atom, Exists, Formula, Vocabulary, classify, parse,
                     signature, to_text)

SATISFIABLE = "Satisfiable"
NO_WITNESS = "NoWitnessUpToBound"
UNKNOWN = "Unknown"
EXIT_CODES = {SATISFIABLE: 0, NO_WITNESS: 1, UNKNOWN: 2}
# subsets of more 1-types than this are not enumerated (2^8 candidate sets)
EXHAUSTIVE_MAX_TYPES = 8


class SearchLimit(RuntimeError):
    """Raised when the solver's conflict budget runs out."""


@dataclass(frozen=True)
class OneTypeSet:
    vocabulary: Vocabulary
    types: frozenset

    def __iter__(self):
        return iter(sorted(self.types, key=OneType.sort_key))

    def __len__(self):
        return len(self.types)

    def __contains__(self, pi):
        return pi in self.types

    def bitmaps(self) -> list:
        return [t.bitmap() for t in self]

    @classmethod
    def from_bitmaps(cls, vocabulary, bits) -> "OneTypeSet":
        vocabulary = Vocabulary.of(vocabulary)
        return cls(vocabulary, frozenset(OneType.from_bitmap(vocabulary, b) for b in bits))


@dataclass(frozen=True)
class WitnessPair:
    model: Structure
    center: object


@dataclass(frozen=True)
class Defect:
    req_index: int
    tuple: tuple
    reason: str = "missing witness"


@dataclass
class WitnessReport:
    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


@dataclass
class SatVerdict:
    kind: str
    bound: int
    certificate: Optional[dict] = None
    branch: Optional[int] = None
    detail: str = ""

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.kind]


# ------------------------------------------------------------- checking

def _req_assignments(S, guard, variables, center=None):
    """Assignments to ``variables`` making ``guard`` true (through center)."""
    for asg in guard_matches(S, guard, variables, {}):
        if center is None or center in asg.values():
            yield asg


def _witness_exists(S, req: ExistentialReq, asg) -> bool:
    return evaluate(S, Exists(req.ys, req.beta, req.body), asg)


def existential_defects(S, nf: NormalFormSentence, center=None, within=None) -> list:
    """Tuples meeting an existential guard but lacking a witness.  Only
    tuples through ``center`` (if given) and inside ``within`` (if given)."""
    out = []
    for i, req in enumerate(nf.existential):
        for asg in _req_assignments(S, req.alpha, req.xs, center):
            if within is not None and not set(asg.values()) <= within:
                continue
            if not _witness_exists(S, req, asg):
                out.append(Defect(i, tuple(asg[x] for x in req.xs)))
    return out


def universal_violations(S, nf: NormalFormSentence) -> list:
    out = []
    for j, req in enumerate(nf.universal):
        for asg in _req_assignments(S, req.kappa, req.xs):
            if not evaluate(S, req.theta, asg):
                continue
            for full in guard_matches(S, req.gamma, req.ys, asg):
                if not evaluate(S, req.body, full):
                    out.append((j, tuple(asg[x] for x in req.xs),
                                tuple(full[y] for y in req.ys)))
                    break
    return out


def is_p_pi_witness(w: WitnessPair, P: OneTypeSet, pi: OneType,
                    nf: NormalFormSentence) -> WitnessReport:
    if pi not in P:
        raise ValueError("pi must belong to P")
    S, c = w.model, w.center
    bad = []
    sigma = P.vocabulary
    for a in S.domain:
        if one_type(S, a, sigma) not in P:
            bad.append(("type outside P", a))
    if one_type(S, c, sigma) != pi:
        bad.append(("center type differs", c))
    for d in existential_defects(S, nf, center=c):
        bad.append(("existential", d))
    for v in universal_violations(S, nf):
        bad.append(("universal", v))
    return WitnessReport(not bad, bad)


# --------------------------------------------------------------- search

def _type_literal(g: Grounder, e, pi: OneType):
    lits = []
    for s in pi.vocabulary:
        v = g.atom(s.name, (e,) * s.arity)
        lits.append(v if s.name in pi.positive else -v)
    return g.land(lits)


def _encode(P: OneTypeSet, pi: OneType, nf: NormalFormSentence, n: int) -> Grounder:
    sigma = P.vocabulary
    dom = tuple(range(n))
    g = Grounder(sigma, dom)
    for e in dom:
        g.require(g.lor([_type_literal(g, e, t) for t in P]))
    g.require(_type_literal(g, 0, pi))
    for req in nf.existential:
        inner = Exists(req.ys, req.beta, req.body)
        for values in product(dom, repeat=len(req.xs)):
            if 0 not in values:
                continue
            asg = dict(zip(req.xs, values))
            g.require(g.lor([g.neg(g.ground(req.alpha, asg)), g.ground(inner, asg)]))
    for req in nf.universal:
        g.assert_formula(req.formula())
    return g


def find_p_pi_witness(P: OneTypeSet, pi: OneType, nf: NormalFormSentence,
                      size_bound: int, conflict_limit=None) -> Optional[WitnessPair]:
    """Smallest (P, pi)-witness with at most ``size_bound`` elements (center 0)."""
    if size_bound < 1:
        raise ValueError("size_bound must be at least 1")
    if pi not in P:
        raise ValueError("pi must belong to P")
    for n in range(1, size_bound + 1):
        g = _encode(P, pi, nf, n)
        res = g.solve(conflict_limit)
        if res == "unknown":
            raise SearchLimit(f"witness search for {pi!r} hit the conflict limit")
        if res is None:
            continue
        w = WitnessPair(Structure(P.vocabulary, range(n), res), 0)
        report = is_p_pi_witness(w, P, pi, nf)
        assert report.ok, f"solver returned a non-witness: {report.violations[:3]}"
        return w
    return None


def seeds_covered(P: OneTypeSet, nf: NormalFormSentence) -> bool:
    return all(any(s.pred in t for t in P) for s in nf.seeds)


def is_witness_set(P: OneTypeSet, nf: NormalFormSentence, size_bound: int,
                   conflict_limit=None) -> bool:
    if not P.types or not seeds_covered(P, nf):
        return False
    return all(find_p_pi_witness(P, pi, nf, size_bound, conflict_limit) is not None
               for pi in P)


def check_witness_set(P: OneTypeSet, witnesses: dict, nf: NormalFormSentence) -> list:
    """Problems with a claimed witness set and its witnesses (empty = valid)."""
    out = []
    if not P.types:
        out.append("empty type set")
    if not seeds_covered(P, nf):
        out.append("some seed symbol occurs in no type")
    for pi in P:
        w = witnesses.get(pi)
        if w is None:
            out.append(f"no witness for {pi!r}")
            continue
        r = is_p_pi_witness(w, P, pi, nf)
        if not r:
            out.append(f"bad witness for {pi!r}: {r.violations[0]}")
    return out


def all_types(sigma: Vocabulary) -> list:
    names = sigma.names
    return [OneType(sigma, frozenset(n for n, b in zip(names, bits) if b))
            for bits in product((False, True), repeat=len(names))]


def greatest_witness_set(nf: NormalFormSentence, size_bound: int, candidates=None,
                         conflict_limit=None):
    """Largest P within ``candidates`` (default: all types) such that every
    member has a (P, pi)-witness of size <= size_bound.  Returns
    (P, witnesses); P may be empty."""
    sigma = nf.vocabulary
    current = set(candidates if candidates is not None else all_types(sigma))
    witnesses = {}
    changed = True
    while changed and current:
        changed = False
        P = OneTypeSet(sigma, frozenset(current))
        for pi in sorted(current, key=OneType.sort_key):
            old = witnesses.get(pi)
            if old is not None and all(one_type(old.model, a, sigma) in current
                                       for a in old.model.domain):
                continue
            w = find_p_pi_witness(P, pi, nf, size_bound, conflict_limit)
            if w is None:
                current.discard(pi)
                witnesses.pop(pi, None)
                changed = True
                break
            witnesses[pi] = w
    P = OneTypeSet(sigma, frozenset(current))
    return P, {pi: witnesses[pi] for pi in current}


# ---------------------------------------------------------------- decide

def _nonuniform_model(branch, f, witnesses):
    """For input outside the uniform fragment: a witness model that is a
    genuine model of the branch and (after reduct) of f."""
    g = branch.formula
    sigma = signature(f)
    for w in witnesses.values():
        if evaluate(w.model, g) and evaluate(w.model.reduct(sigma), f):
            return w
    return None


def decide_sat(f: Formula, witness_size_bound: int = 3, type_set_strategy: str = "greatest",
               conflict_limit=None, allow_nonuniform: bool = False,
               max_symbols: int = 12) -> SatVerdict:
    """Search every normal-form branch for a witness set with witnesses of
    at most ``witness_size_bound`` elements.

    Strategies: ``"greatest"`` (fixpoint elimination from all 1-types,
    exhaustive for the bound) and ``"exhaustive"`` (every subset of
    1-types; tiny vocabularies only).
    """
    report = classify(f)
    if not report.uniform and not allow_nonuniform:
        raise ValueError("input is not in the uniform fragment")
    branches = to_normal_form(f, require_uniform=not allow_nonuniform)
    unknown = False
    for idx, branch in enumerate(branches):
        nf = branch.result
        if len(nf.vocabulary) > max_symbols:
            unknown = True
            continue
        try:
            found = _search_branch(nf, witness_size_bound, type_set_strategy, conflict_limit)
        except SearchLimit:
            unknown = True
            continue
        if found is None:
            continue
        P, witnesses = found
        if not report.uniform:
            w = _nonuniform_model(branch, f, witnesses)
            if w is None:
                unknown = True
                continue
        cert = make_certificate(f, idx, P, witnesses, witness_size_bound)
        return SatVerdict(SATISFIABLE, witness_size_bound, cert, idx)
    if unknown:
        return SatVerdict(UNKNOWN, witness_size_bound, detail="resource limit or unsupported branch")
    return SatVerdict(NO_WITNESS, witness_size_bound,
                      detail=f"{len(branches)} branch(es) exhausted")


def _search_branch(nf, bound, strategy, conflict_limit):
    if strategy == "greatest":
        P, witnesses = greatest_witness_set(nf, bound, conflict_limit=conflict_limit)
        if P.types and seeds_covered(P, nf):
            return P, witnesses
        return None
    if strategy == "exhaustive":
        types = all_types(nf.vocabulary)
        if len(types) > EXHAUSTIVE_MAX_TYPES:
            raise SearchLimit("too many 1-types for exhaustive enumeration")
        for mask in range(1, 1 << len(types)):
            P = OneTypeSet(nf.vocabulary, frozenset(t for i, t in enumerate(types)
                                                    if mask >> i & 1))
            if not seeds_covered(P, nf):
                continue
            ws = {}
            for pi in P:
                w = find_p_pi_witness(P, pi, nf, bound, conflict_limit)
                if w is None:
                    break
                ws[pi] = w
            else:
                return P, ws
        return None
    raise ValueError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------- certificates

def make_certificate(f: Formula, branch: int, P: OneTypeSet, witnesses: dict,
                     bound: int) -> dict:
    names = list(P.vocabulary.names)
    return {
        "formula": to_text(f),
        "branch": branch,
        "witness_bound": bound,
        "vocabulary": {n: P.vocabulary.arity(n) for n in names},
        "types": P.bitmaps(),
        "witnesses": [
            {"type": pi.bitmap(), "center": witnesses[pi].center,
             "structure": dict(witnesses[pi].model.to_json(),
                               arities={n: P.vocabulary.arity(n) for n in names})}
            for pi in P
        ],
    }


def verify_certificate(cert: dict, f: Optional[Formula] = None) -> list:
    """Re-check a certificate from scratch; returns a list of problems."""
    if f is None:
        f = parse(cert["formula"])
    report = classify(f)
    branches = to_normal_form(f, require_uniform=report.uniform)
    idx = cert["branch"]
    if not 0 <= idx < len(branches):
        return [f"branch {idx} does not exist"]
    nf = branches[idx].result
    sigma = Vocabulary.of(cert["vocabulary"])
    if sigma != nf.vocabulary:
        return ["vocabulary does not match the branch"]
    P = OneTypeSet.from_bitmaps(sigma, cert["types"])
    witnesses = {}
    for entry in cert["witnesses"]:
        pi = OneType.from_bitmap(sigma, entry["type"])
        S = Structure.from_json(entry["structure"], sigma)
        witnesses[pi] = WitnessPair(S, entry["center"])
    problems = check_witness_set(P, witnesses, nf)
    if not problems and not report.uniform:
        if _nonuniform_model(branches[idx], f, witnesses) is None:
            problems.append("no witness is a model of the input")
    return problems


def save_certificate(cert: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cert, fh, indent=2, sort_keys=True)


# ------------------------------------------------------- model <-> witness

def extract_witness_set(m: Structure, nf: NormalFormSentence):
    """Types realised in a model of ``nf``, each with the model as witness."""
    if not evaluate(m, nf.formula()):
        raise ValueError("structure is not a model of the normal form")
    sigma = nf.vocabulary
    witnesses = {}
    for a in m.domain:
        witnesses.setdefault(one_type(m, a, sigma), WitnessPair(m, a))
    return OneTypeSet(sigma, frozenset(witnesses)), witnesses


def build_model(P: OneTypeSet, witnesses: dict, nf: NormalFormSentence, depth: int,
                stages: bool = False):
    """Stage ``depth`` of the union construction: stage 1 holds one element
    per seed; each later stage glues a fresh copy of the witness of every
    element added in the previous stage, keeping only tuples through the
    witness center (and 1-types).  With ``stages=True`` also returns the
    element sets of all stages."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    sigma = P.vocabulary
    rels = {s.name: set() for s in sigma}
    types = {}
    fresh = iter(range(1 << 30))
    frontier = []
    for s in nf.seeds:
        pi = next((t for t in P if s.pred in t), None)
        if pi is None:
            raise ValueError(f"no type in P contains seed {s.pred}")
        e = next(fresh)
        types[e] = pi
        for sym in sigma:
            if sym.name in pi:
                rels[sym.name].add((e,) * sym.arity)
        frontier.append(e)
    history = [set(types)]
    for _ in range(depth - 1):
        new_frontier = []
        for a in frontier:
            pi = types[a]
            if pi not in witnesses:
                raise ValueError(f"type {pi!r} has no witness")
            W, c = witnesses[pi].model, witnesses[pi].center
            rename = {c: a}
            for e in W.domain:
                if e != c:
                    rename[e] = next(fresh)
                    types[rename[e]] = one_type(W, e, sigma)
                    new_frontier.append(rename[e])
            for sym in sigma:
                for t in W.interp(sym.name):
                    if c in t or len(set(t)) == 1:
                        if set(t) == {c}:
                            continue  # the 1-type of a is already fixed
                        rels[sym.name].add(tuple(rename[e] for e in t))
        frontier = new_frontier
        history.append(set(types))
    S = Structure(sigma, types.keys(), rels)
    return (S, history) if stages else S


@dataclass
class ShrinkStats:
    stage_defects: list = field(default_factory=list)
    new_live_sets: list = field(default_factory=list)
    defect_sets: list = field(default_factory=list)


def _sub(A: Structure, defined) -> Structure:
    dom = set().union(*defined)
    rels = {n: {t for t in ts if any(set(t) <= d for d in defined)}
            for n, ts in A.relations.items()}
    return Structure(A.vocabulary, dom, rels)


def shrink_witness(w: WitnessPair, P: OneTypeSet, pi: OneType, nf: NormalFormSentence,
                   stats: Optional[ShrinkStats] = None) -> WitnessPair:
    """Repair defects stage by stage starting from the center alone.  Each
    defect is repaired with the elements of one witness tuple taken from
    the input model itself, so the output never exceeds the input."""
    report = is_p_pi_witness(w, P, pi, nf)
    if not report:
        raise ValueError(f"input is not a witness: {report.violations[0]}")
    A, c = w.model, w.center
    defined = [frozenset({c})]
    prev_live = set()
    B = _sub(A, defined)
    while True:
        defects = existential_defects(B, nf, center=c)
        live = set(live_sets(B, P.vocabulary))
        if stats is not None:
            stats.stage_defects.append(len(defects))
            stats.new_live_sets.append(len(live - prev_live))
            stats.defect_sets.append([frozenset(d.tuple) for d in defects])
        if not defects:
            break
        for d in defects:
            req = nf.existential[d.req_index]
            asg = dict(zip(req.xs, d.tuple))
            for full in guard_matches(A, req.beta, req.ys, asg):
                if evaluate(A, req.body, full):
                    defined.append(frozenset(full[v] for v in req.beta.args))
                    break
            else:
                raise AssertionError("input witness lacks a witness tuple")
        prev_live = live
        B = _sub(A, defined)
    out = WitnessPair(B, c)
    assert is_p_pi_witness(out, P, pi, nf), "shrinking broke the witness"
    return out


def pad_witness(w: WitnessPair, copies) -> WitnessPair:
    """Add isolated elements; ``copies`` lists existing elements whose
    1-type each new element takes (loops only)."""
    S = w.model
    rels = S.relations
    rels = {n: set(ts) for n, ts in rels.items()}
    start = max((e for e in S.domain if isinstance(e, int)), default=-1) + 1
    new = []
    for k, src in enumerate(copies):
        e = start + k
        new.append(e)
        for s in S.vocabulary:
            if S.holds(s.name, (src,) * s.arity):
                rels[s.name].add((e,) * s.arity)
    return WitnessPair(Structure(S.vocabulary, list(S.domain) + new, rels), w.center)


def requirement_check(S: Structure, nf: NormalFormSentence, within=None) -> dict:
    """Universal violations anywhere; existential defects inside ``within``."""
    return {
        "universal": universal_violations(S, nf),
        "existential": existential_defects(S, nf, within=set(within) if within is not None else None),
    }
