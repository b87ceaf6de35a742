"""Command-line front end: ``nearperm <verb> ...``.

Exit codes: 0 success, 1 invalid input or failed verification, 2 when a
computation hits an obstruction (for instance rigidity window exhaustion).
Every JSON document carries ``"schema": "nearperm/1"``.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from . import amalgam, catalog, qcyclic, z2class
from .carrier import CarrierError, Point
from .nearaction import (
    ActionError,
    NearAction,
    RigidityObstruction,
    components,
    growth_inequality_check,
    index_character,
    index_number,
    rigidity_conjugator,
    schreier_truncation,
    verify_genuine_action,
    verify_near_action,
)
from .nearmap import NearMapError

SCHEMA = "nearperm/1"


class UsageError(ValueError):
    pass


def _doc(payload: dict) -> dict:
    return {"schema": SCHEMA, **payload}


def _emit(obj, out=None, text=False):
    s = obj if text else json.dumps(obj)
    if out and out != "-":
        with open(out, "w") as fh:
            fh.write(s if text else s + "\n")
    else:
        sys.stdout.write(s if text else s + "\n")


def _load(path):
    try:
        if path in (None, "-"):
            data = json.load(sys.stdin)
        else:
            with open(path) as fh:
                data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read JSON from {path or 'stdin'}: {e}") from e
    return data


def _load_action(path) -> NearAction:
    data = _load(path)
    if not isinstance(data, dict):
        raise UsageError("expected a JSON object")
    try:
        return NearAction.from_json(data)
    except (KeyError, TypeError) as e:
        raise UsageError(f"malformed action file: missing or bad field {e}") from e


# ------------------------------------------------------------------- verbs

def cmd_catalog(args):
    if args.action == "list":
        entries = [{"name": e.name, "description": e.description,
                    "params": {k: {"default": list(v[1]) if isinstance(v[1], tuple) else v[1],
                                   "help": v[2]} for k, v in e.params.items()}}
                   for e in catalog.CATALOG.values()]
        _emit(_doc({"entries": entries}), args.out)
        return 0
    if not args.name:
        raise UsageError("catalog build needs a name")
    if args.name not in catalog.CATALOG:
        raise UsageError(f"unknown catalog entry {args.name!r}")
    entry = catalog.CATALOG[args.name]
    given = {"d": args.d, "k": args.k, "m": args.m, "s": tuple(args.s) if args.s else None,
             "l": args.l, "n_max": args.n_max, "perturbed": args.perturbed or None}
    params = {k: v for k, v in given.items() if k in entry.params and v is not None}
    a = entry.build(**params)
    _emit(a.to_json(), args.out)
    return 0


def _try(fn):
    try:
        return fn()
    except (ActionError, NearMapError, ValueError) as e:
        return {"unavailable": str(e)}


def cmd_invariants(args):
    a = _load_action(args.inp)
    rep = verify_near_action(a)
    out = {"name": a.name, "verified": rep.ok}
    if rep.ok:
        out["index_character"] = list(index_character(a))
        out["index_number"] = index_number(a)
        out["genuine"] = verify_genuine_action(a)
        out["ends"] = _try(lambda: z2class.ends(a))
        if len(a.generators) == 2:
            out["kapoudjian_parity"] = _try(lambda: z2class.kapoudjian_parity(a))
    else:
        out["relators"] = rep.to_json()["relators"]
    _emit(_doc(out), args.out)
    return 0 if rep.ok else 1


def cmd_verify(args):
    a = _load_action(args.inp)
    rep = verify_near_action(a)
    out = rep.to_json()
    if args.genuine:
        out["genuine"] = verify_genuine_action(a)
    _emit(_doc(out), args.out)
    return 0 if rep.ok and out.get("genuine", True) else 1


def cmd_schreier(args):
    a = _load_action(args.inp)
    t = schreier_truncation(a, args.radius)
    if args.format == "dot":
        _emit(t.to_dot(), args.out, text=True)
    else:
        payload = t.to_json()
        payload["components"] = len(components(t))
        _emit(_doc(payload), args.out)
    return 0


def cmd_classify(args):
    a = _load_action(args.inp)
    g = None
    try:
        cls = z2class.classify(a, near_free_length=args.near_free_length)
        if args.dot:
            g = z2class.glue_strips(z2class.corner_graph(z2class.corner_decomposition(a)))
    except z2class.AtlasError as e:
        raise UsageError(str(e)) from e
    except z2class.GraphError as e:
        _emit(_doc({"error": {"type": "GraphError", "message": str(e)}}), args.out)
        return 2
    _emit(_doc(cls.to_json()), args.out)
    if g is not None:
        _emit(g.to_dot(), args.dot, text=True)
    return 0


def cmd_amalgam(args):
    model = amalgam.build_amalgam_model(args.p, args.n, args.L)
    out = model.to_json()
    rng = random.Random(args.seed)
    if args.enlargements:
        out["enlargements"] = [amalgam.amalgam_invariant(
            model.data, amalgam.random_enlargement(model.data, model.Y, rng))
            for _ in range(args.enlargements)]
    d, Y = amalgam.disjoint_union(model.data, model.data, model.Y, model.Y)
    out["doubled_invariant"] = amalgam.amalgam_invariant(d, Y)
    real = amalgam.build_realizable_window(args.p, args.n, args.L)
    out["realizable_window_invariant"] = amalgam.amalgam_invariant(real, [])
    _emit(_doc(out), args.out)
    return 0


def cmd_qcyclic(args):
    if args.digits is not None:
        d = qcyclic.DigitStream(args.m, tuple(args.digits))
        N = len(d.s) - 1
        b = qcyclic.digits_to_blocks(d, N)
        c = qcyclic.blocks_to_construction(args.m, b)
        out = {"m": args.m, "digits": list(d.s), "blocks": b, "q": list(c.q),
               "residues": qcyclic.residual_table(c, N) if N else []}
    else:
        c = qcyclic.QCConstruction(args.m, tuple(args.q or ()))
        out = qcyclic.realizability_report(c, args.n)
        out["oracle"] = [qcyclic.direct_count_oracle(c, n) for n in range(1, args.n + 1)]
    _emit(_doc(out), args.out)
    return 0


def cmd_rigidity(args):
    alpha = _load_action(args.alpha) if args.alpha else catalog.build_simply_transitive(2)
    beta = _load_action(args.beta)
    try:
        s = rigidity_conjugator(alpha, beta, max_radius=args.max_radius)
    except RigidityObstruction as e:
        _emit(_doc({"error": {"type": "RigidityObstruction", "message": str(e), "report": e.report}}),
              args.out)
        return 2
    moved = sorted(s.exceptions.items(), key=lambda kv: kv[0].coords)
    _emit(_doc({"conjugator": [{"from": k.to_json(), "to": v.to_json()} for k, v in moved],
                "support_size": len(moved)}), args.out)
    return 0


def _point(spec, a: NearAction) -> Point:
    if spec is None:
        c = a.carrier.cells[0]
        return Point(c.id, tuple(0 if dom.contains(0) else dom.lo for dom in c.axes))
    cell, *coords = spec
    return a.carrier.check_point(Point(cell, tuple(int(x) for x in coords)))


def cmd_growth(args):
    a = _load_action(args.inp)
    base = _point(args.basepoint, a)
    lo, hi = args.r
    rep = growth_inequality_check(a, base, range(lo, hi + 1), rank=args.rank)
    _emit(_doc(rep.to_json()), args.out)
    return 0 if rep.ok else 1


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nearperm", description="Near permutations and near actions.")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, inp=True):
        if inp:
            sp.add_argument("--in", dest="inp", default="-", help="input JSON (default stdin)")
        sp.add_argument("--out", default="-", help="output path (default stdout)")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized parts")

    c = sub.add_parser("catalog", help="list or build catalog actions")
    c.add_argument("action", choices=["list", "build"])
    c.add_argument("name", nargs="?")
    c.add_argument("--d", type=int)
    c.add_argument("--k", type=int)
    c.add_argument("--m", type=int)
    c.add_argument("--s", type=int, nargs=2)
    c.add_argument("--l", type=int)
    c.add_argument("--n-max", dest="n_max", type=int)
    c.add_argument("--perturbed", action="store_true")
    common(c, inp=False)
    c.set_defaults(fn=cmd_catalog)

    c = sub.add_parser("invariants", help="index character, ends, parity")
    common(c)
    c.set_defaults(fn=cmd_invariants)

    c = sub.add_parser("verify", help="check relators up to finite support")
    c.add_argument("--genuine", action="store_true", help="also require an exact action")
    common(c)
    c.set_defaults(fn=cmd_verify)

    c = sub.add_parser("schreier", help="truncated near Schreier graph")
    c.add_argument("--radius", type=int, default=3)
    c.add_argument("--format", choices=["json", "dot"], default="json")
    common(c)
    c.set_defaults(fn=cmd_schreier)

    c = sub.add_parser("classify-z2", help="ends, winding and holonomy of a near Z^2 action")
    c.add_argument("--dot", help="write the corner graph as DOT to this path")
    c.add_argument("--near-free-length", type=int, default=6)
    common(c)
    c.set_defaults(fn=cmd_classify)

    c = sub.add_parser("amalgam", help="mod-p invariant of the amalgam model")
    c.add_argument("--p", type=int, default=2)
    c.add_argument("--n", type=int, default=2)
    c.add_argument("--L", type=int, default=8)
    c.add_argument("--enlargements", type=int, default=0)
    common(c, inp=False)
    c.set_defaults(fn=cmd_amalgam)

    c = sub.add_parser("qcyclic", help="residual tables for quasi-cyclic constructions")
    c.add_argument("--m", type=int, default=2)
    c.add_argument("--q", type=int, nargs="*")
    c.add_argument("--n", type=int, default=4)
    c.add_argument("--digits", type=int, nargs="+")
    common(c, inp=False)
    c.set_defaults(fn=cmd_qcyclic)

    c = sub.add_parser("rigidity", help="finitely supported conjugator to the free Z^2 action")
    c.add_argument("--alpha", help="alpha action (default: simply transitive Z^2)")
    c.add_argument("--beta", required=True)
    c.add_argument("--max-radius", type=int, default=64)
    common(c, inp=False)
    c.set_defaults(fn=cmd_rigidity)

    c = sub.add_parser("growth", help="ball growth inequality check")
    c.add_argument("--basepoint", nargs="+", help="cell followed by coordinates")
    c.add_argument("--r", type=int, nargs=2, default=[6, 30], metavar=("LO", "HI"))
    c.add_argument("--rank", type=int)
    common(c)
    c.set_defaults(fn=cmd_growth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1
    try:
        return args.fn(args)
    except (UsageError, ActionError, NearMapError, CarrierError, amalgam.AmalgamError,
            qcyclic.QCError, z2class.AtlasError, KeyError, TypeError, ValueError) as e:
        _emit(_doc({"error": {"type": type(e).__name__, "message": str(e)}}))
        return 1


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
