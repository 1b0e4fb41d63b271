"""Command-line front end: ``ugf <subcommand> ...``.

Exit codes: 0 success (or Satisfiable), 1 NoWitnessUpToBound, 2 Unknown,
3 I/O error, 4 parse error, 5 invalid input.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from . import __version__, corpus
from .amalgam import amalgam_report, build_amalgam
from .bisim import bisimilar, maximal_bisimulation
from .generators import random_formula, random_structure, random_vocabulary
from .guf1 import distinguishing_formula, tuple_variables
from .normform import NormalFormError, requirements, to_normal_form
from .sat import (EXIT_CODES, build_model, decide_sat, save_certificate,
                  verify_certificate, OneTypeSet, WitnessPair)
from .structures import (OneType, Structure, brute_force_sat, enumerate_structures,
                         evaluate, load_structure)
from .syntax import (ParseError, Vocabulary, classify, parse, to_text)

EXIT_IO, EXIT_PARSE, EXIT_INVALID = 3, 4, 5


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _read(path) -> str:
    """File contents; a missing path falls back to the bundled corpus entry of
    the same name, so ``examples/ex1a.gf`` and ``ex1a`` both work."""
    try:
        with open(path, encoding="utf-8") as fh:
            return " ".join(l for l in fh.read().splitlines()
                            if l.strip() and not l.lstrip().startswith("#"))
    except OSError as e:
        stem = os.path.basename(path)
        stem = stem[:-3] if stem.endswith(".gf") else stem
        if not os.path.exists(path) and stem in corpus.names():
            return corpus.text(stem)
        raise CliError(f"cannot read {path}: {e.strerror}", EXIT_IO)


def _formula(path, strict=True):
    text = _read(path)
    try:
        return parse(text, strict=strict)
    except ParseError as e:
        raise CliError(f"{path}: {e}", EXIT_PARSE)


def _structure(path):
    try:
        return load_structure(path)
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}", EXIT_IO)
    except (ValueError, KeyError, json.JSONDecodeError) as e:
        raise CliError(f"{path}: invalid structure: {e}", EXIT_INVALID)


def _element(token, S):
    for e in S.domain:
        if str(e) == token:
            return e
    raise CliError(f"unknown element {token!r}", EXIT_INVALID)


def _tuple_arg(arg, A, B):
    if not arg:
        return (), ()
    if "=" not in arg:
        raise CliError("--tuple expects LEFT=RIGHT, e.g. a,b=c,d", EXIT_INVALID)
    left, right = arg.split("=", 1)
    c = tuple(_element(t, A) for t in left.split(",") if t)
    d = tuple(_element(t, B) for t in right.split(",") if t)
    if len(c) != len(d):
        raise CliError("tuples have different lengths", EXIT_INVALID)
    return c, d


def _vocab_arg(arg, *structures):
    names = [n for n in (arg or "").split(",") if n]
    arities = {}
    for S in structures:
        arities.update(S.vocabulary.as_dict())
    if not names:
        names = sorted(arities)
    missing = [n for n in names if n not in arities]
    if missing:
        raise CliError(f"unknown relation(s) {missing}", EXIT_INVALID)
    return Vocabulary.of({n: arities[n] for n in names})


def _vocab_decl(arg):
    out = {}
    for item in arg.split(","):
        name, _, ar = item.partition(":")
        try:
            out[name] = int(ar)
        except ValueError:
            raise CliError(f"bad vocabulary entry {item!r} (want NAME:ARITY)", EXIT_INVALID)
    return Vocabulary.of(out)


# ------------------------------------------------------------ commands

def cmd_classify(args):
    f = _formula(args.file, strict=not args.lenient)
    r = classify(f)
    res = {"guarded": r.guarded, "one_dimensional": r.one_dimensional,
           "uniform": r.uniform,
           "offending": [[to_text(g), why] for g, why in r.offending_subformulas]}
    flag = lambda b: "T" if b else "F"
    text = [f"guarded={flag(r.guarded)} one-dimensional={flag(r.one_dimensional)} "
            f"uniform={flag(r.uniform)}"]
    text += [f"  {why}: {g}" for g, why in res["offending"]]
    return 0, res, text


def cmd_normalize(args):
    f = _formula(args.file)
    try:
        branches = to_normal_form(f, require_uniform=not args.allow_nonuniform)
    except NormalFormError as e:
        raise CliError(str(e), EXIT_INVALID)
    chosen = list(enumerate(branches))
    if args.branch is not None:
        if not 0 <= args.branch < len(branches):
            raise CliError(f"branch {args.branch} out of range (0..{len(branches) - 1})", EXIT_INVALID)
        chosen = [chosen[args.branch]]
    elif not args.all:
        chosen = chosen[:1]
    res = {"branches": len(branches), "shown": []}
    text = [f"{len(branches)} branch(es)"]
    for i, b in chosen:
        ex, un = requirements(b.result)
        entry = {"index": i,
                 "guesses": [[to_text(g), v] for g, v in b.guesses],
                 "fresh": [s.name for s in b.fresh_symbols],
                 "formula": to_text(b.formula),
                 "seeds": [s.pred for s in b.result.seeds],
                 "existential": [to_text(r.formula()) for r in ex],
                 "universal": [to_text(r.formula()) for r in un]}
        res["shown"].append(entry)
        text.append(f"branch {i}: guesses " +
                    (", ".join(f"{g} := {'T' if v else 'F'}" for g, v in entry["guesses"]) or "none"))
        text.append(f"  seeds: {', '.join(entry['seeds'])}")
        text += [f"  E{k}: {t}" for k, t in enumerate(entry["existential"])]
        text += [f"  U{k}: {t}" for k, t in enumerate(entry["universal"])]
    return 0, res, text


def cmd_check(args):
    S = _structure(args.structure)
    f = _formula(args.file)
    asg = {}
    for item in (args.assign or "").split(","):
        if item:
            var, _, el = item.partition("=")
            asg[var] = _element(el, S)
    try:
        value = evaluate(S, f, asg)
    except KeyError as e:
        raise CliError(f"evaluation failed: {e}", EXIT_INVALID)
    return 0, {"value": value}, [f"value={'true' if value else 'false'}"]


def cmd_sat(args):
    f = _formula(args.file)
    r = classify(f)
    try:
        v = decide_sat(f, args.witness_bound, args.strategy,
                       conflict_limit=args.conflict_limit, allow_nonuniform=True)
    except (NormalFormError, ValueError) as e:
        raise CliError(str(e), EXIT_INVALID)
    res = {"verdict": v.kind, "witness_bound": v.bound, "uniform": r.uniform,
           "branch": v.branch, "detail": v.detail}
    text = [f"verdict: {v.kind} (witness bound {v.bound})"]
    if not r.uniform:
        text.append("note: input is outside the uniform fragment; Satisfiable needs a "
                    "witness that is itself a model")
    if v.certificate is not None:
        res["certificate_problems"] = verify_certificate(v.certificate, f)
        text.append(f"certificate re-verified: {not res['certificate_problems']}")
        if args.certificate:
            try:
                save_certificate(v.certificate, args.certificate)
            except OSError as e:
                raise CliError(f"cannot write {args.certificate}: {e.strerror}", EXIT_IO)
        if args.depth:
            nf = to_normal_form(f, require_uniform=r.uniform)[v.branch].result
            sigma = Vocabulary.of(v.certificate["vocabulary"])
            P = OneTypeSet.from_bitmaps(sigma, v.certificate["types"])
            ws = {OneType.from_bitmap(sigma, w["type"]):
                  WitnessPair(Structure.from_json(w["structure"], sigma), w["center"])
                  for w in v.certificate["witnesses"]}
            M = build_model(P, ws, nf, args.depth)
            res["model_stage_size"] = len(M)
            text.append(f"stage-{args.depth} model has {len(M)} element(s)")
    if args.model_bound:
        m = brute_force_sat(f, args.model_bound)
        res["oracle"] = None if m is None else m.to_json()
        text.append(f"oracle: none up to size {args.model_bound}" if m is None
                    else f"oracle: model of size {len(m)}")
    return v.exit_code, res, text


def cmd_verify_cert(args):
    try:
        with open(args.certificate, encoding="utf-8") as fh:
            cert = json.load(fh)
    except OSError as e:
        raise CliError(f"cannot read {args.certificate}: {e.strerror}", EXIT_IO)
    except json.JSONDecodeError as e:
        raise CliError(f"invalid certificate: {e}", EXIT_INVALID)
    f = _formula(args.file) if args.file else None
    problems = verify_certificate(cert, f)
    text = ["certificate valid"] if not problems else ["certificate INVALID"] + problems
    return (0 if not problems else EXIT_INVALID), {"valid": not problems, "problems": problems}, text


def cmd_bisim(args):
    A, B = _structure(args.left), _structure(args.right)
    sigma = _vocab_arg(args.sigma, A, B)
    c, d = _tuple_arg(args.tuple, A, B)
    verdict = bisimilar(A, c, B, d, sigma)
    res = {"bisimilar": verdict, "sigma": sigma.as_dict()}
    text = [f"bisimilar: {verdict}"]
    if args.distinguish:
        f = distinguishing_formula(A, c, B, d, sigma, args.depth)
        res["formula"] = None if f is None else to_text(f)
        res["variables"] = list(tuple_variables(len(c)))
        text.append("distinguishing formula: " + ("none up to depth %d" % args.depth
                                                  if f is None else to_text(f)))
    return 0, res, text


def cmd_distinguish(args):
    args.distinguish = True
    return cmd_bisim(args)


def cmd_amalgam(args):
    A, B = _structure(args.left), _structure(args.right)
    sigma = _vocab_arg(args.sigma, A)
    tau = _vocab_arg(args.tau, B)
    shared = sigma.intersection(tau)
    Z = maximal_bisimulation(A, B, shared)
    try:
        am = build_amalgam(A, B, Z, sigma, tau)
    except ValueError as e:
        raise CliError(str(e), EXIT_INVALID)
    rep = amalgam_report(am)
    text = [json.dumps(rep["structure"], sort_keys=True),
            f"projections are partial isomorphisms: {'pass' if rep['projection_isos']['passed'] else 'FAIL'}",
            f"projections satisfy bisimulation conditions: {'pass' if rep['projection_bisim']['passed'] else 'FAIL'}"]
    ok = rep["projection_isos"]["passed"] and rep["projection_bisim"]["passed"]
    return (0 if ok else EXIT_INVALID), rep, text


def _gen_structure(job):
    seed, vocab, size = job
    rng = random.Random(seed)
    return random_structure(rng, vocab, size).to_json()


def cmd_gen(args):
    rng = random.Random(args.seed)
    res = {}
    text = []
    if args.structures:
        vocab = _vocab_decl(args.vocab)
        if args.all:
            items = [S.to_json() for S in enumerate_structures(vocab, args.size)]
        else:
            jobs = [(rng.randrange(1 << 30), vocab, args.size) for _ in range(args.count)]
            if args.jobs > 1:
                with ProcessPoolExecutor(args.jobs) as pool:
                    items = list(pool.map(_gen_structure, jobs))
            else:
                items = [_gen_structure(j) for j in jobs]
        res["structures"] = items
        text += [json.dumps(s, sort_keys=True) for s in items]
    if args.formulas:
        vocab = _vocab_decl(args.vocab) if args.vocab else random_vocabulary(rng)
        items = [to_text(random_formula(rng, vocab, args.depth)) for _ in range(args.count)]
        res["formulas"] = items
        text += items
    if not (args.structures or args.formulas):
        raise CliError("gen needs --structures and/or --formulas", EXIT_INVALID)
    return 0, res, text


# --------------------------------------------------------------- parser

def _global_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default=argparse.SUPPRESS)
    common.add_argument("--no-timings", action="store_true", default=argparse.SUPPRESS,
                        help="omit timings from JSON output")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
    return common


def build_parser() -> argparse.ArgumentParser:
    # global options are accepted before or after the subcommand; the
    # subcommands get their own copies so the top-level defaults below
    # do not leak into them and overwrite earlier values
    p = argparse.ArgumentParser(prog="ugf", description=__doc__.splitlines()[0],
                                parents=[_global_options()])
    p.set_defaults(format="text", no_timings=False, seed=0, jobs=1)
    common = _global_options()
    p.add_argument("--version", action="version", version=f"ugf {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **k: _add(*a, parents=[common], **k)

    s = sub.add_parser("classify", help="fragment membership of a formula")
    s.add_argument("file")
    s.add_argument("--lenient", action="store_true", help="accept unguarded blocks")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("normalize", help="normal-form branches of a sentence")
    s.add_argument("file")
    s.add_argument("--branch", type=int)
    s.add_argument("--all", action="store_true")
    s.add_argument("--allow-nonuniform", action="store_true")
    s.set_defaults(func=cmd_normalize)

    s = sub.add_parser("check", help="evaluate a formula in a structure")
    s.add_argument("structure")
    s.add_argument("file")
    s.add_argument("--assign", help="x=a,y=b")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("sat", help="bounded witness-based satisfiability")
    s.add_argument("file")
    s.add_argument("--witness-bound", type=int, default=3)
    s.add_argument("--model-bound", type=int, default=0)
    s.add_argument("--certificate")
    s.add_argument("--depth", type=int, default=0)
    s.add_argument("--strategy", choices=("greatest", "exhaustive"), default="greatest")
    s.add_argument("--conflict-limit", type=int)
    s.set_defaults(func=cmd_sat)

    s = sub.add_parser("verify-cert", help="re-check a satisfiability certificate")
    s.add_argument("certificate")
    s.add_argument("file", nargs="?")
    s.set_defaults(func=cmd_verify_cert)

    for name, func, helptext in (("bisim", cmd_bisim, "uniform guarded bisimilarity"),
                                 ("distinguish", cmd_distinguish, "distinguishing formula")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("left")
        s.add_argument("right")
        s.add_argument("--sigma")
        s.add_argument("--tuple")
        s.add_argument("--depth", type=int, default=3)
        if name == "bisim":
            s.add_argument("--distinguish", action="store_true")
        s.set_defaults(func=func)

    s = sub.add_parser("amalgam", help="amalgam of two bisimilar structures")
    s.add_argument("left")
    s.add_argument("right")
    s.add_argument("--sigma")
    s.add_argument("--tau")
    s.set_defaults(func=cmd_amalgam)

    s = sub.add_parser("gen", help="seeded random structures / formulas")
    s.add_argument("--structures", action="store_true")
    s.add_argument("--formulas", action="store_true")
    s.add_argument("--size", type=int, default=3)
    s.add_argument("--count", type=int, default=5)
    s.add_argument("--depth", type=int, default=3)
    s.add_argument("--vocab", default="P:1,R:2")
    s.add_argument("--all", action="store_true", help="all canonical structures up to --size")
    s.set_defaults(func=cmd_gen)
    return p


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def run(argv=None):
    """Parse arguments and run; returns (exit code, report dict, text lines)."""
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("witness_bound", "size", "count", "depth", "jobs"):
        if getattr(args, name, 1) is not None and getattr(args, name, 1) < 0:
            raise CliError(f"--{name.replace('_', '-')} must be non-negative", EXIT_INVALID)
    if getattr(args, "witness_bound", 1) == 0:
        raise CliError("--witness-bound must be positive", EXIT_INVALID)
    start = time.perf_counter()
    code, result, text = args.func(args)
    report = {"tool": "ugf", "version": __version__, "command": args.command,
              "config": _config(args), "result": result, "exit_code": code}
    if not args.no_timings:
        report["timings"] = {"seconds": round(time.perf_counter() - start, 6)}
    return code, report, text, args


def main(argv=None) -> int:
    try:
        code, report, text, args = run(argv)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    if args.format == "json":
        print(json.dumps(report, sort_keys=True, indent=2, default=str))
    else:
        print("\n".join(text))
    return code


if __name__ == "__main__":
    sys.exit(main())
