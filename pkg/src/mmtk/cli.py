"""Command-line front end.

Every command prints one JSON report on stdout.  Exit codes: 0 success,
2 invalid input, 3 search budget exhausted (the report is still printed,
flagged ``"certified": false``).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import boxdist, construct, invariants, transport
from ._accel import backend, default_budget
from .core import PointMap, dominates, mm_isomorphic, scale
from .errors import MMError, SearchBudgetExceeded, ValidationError
from .serialization import (digest, load, maps_from_doc, pair_from_doc,
                            space_from_doc, space_to_doc)

EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3
VERIFY_TOL = 1e-9


def _parser():
    p = argparse.ArgumentParser(prog="mmtk", description="Finite mm-space toolkit.")
    p.add_argument("group", choices=["dist", "inv", "check", "make", "demo", "verify"])
    p.add_argument("action", nargs="?")
    p.add_argument("--in", dest="inputs", action="append", default=[], metavar="FILE")
    p.add_argument("--report", metavar="FILE")
    p.add_argument("--p", type=float, default=float("inf"))
    p.add_argument("--t", type=float)
    p.add_argument("--kind", choices=["retract", "linear", "truncate"], default="retract")
    p.add_argument("--kappa", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--count", type=int, default=2)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--budget", type=int)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--csv", metavar="FILE")
    p.add_argument("--max-n", dest="max_n", type=int)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--threads", type=int, default=1,
                   help="accepted for compatibility; solvers run single-threaded")
    p.add_argument("--seed", type=int, default=0)
    return p


ACTIONS = {
    "dist": ("box", "gp", "prokhorov", "kyfan"),
    "inv": ("pdiam", "obsdiam", "odtotal"),
    "check": ("order", "isom"),
    "make": ("product", "transform", "scale", "interp", "midpoint", "geodesic", "branch", "net"),
    "demo": ("sphere", "gauss"),
}


def _need(args, n):
    if len(args.inputs) < n:
        raise ValidationError(f"{args.group} {args.action} needs {n} --in file(s)")
    return [load(f) for f in args.inputs[:n]]


def _need_param(args, name):
    v = getattr(args, name)
    if v is None:
        raise ValidationError(f"--{name.replace('_', '-')} is required for {args.group} {args.action}")
    return v


def _box_cert_doc(cert):
    return {"plan": cert.plan.matrix.tolist(),
            "relation": [list(p) for p in sorted(cert.relation.pairs)],
            "distortion": cert.relation.distortion, "nodes": cert.nodes}


# -- dist ---------------------------------------------------------------------

def _dist(args, docs_out):
    a = args.action
    if a in ("box", "gp"):
        da, db = _need(args, 2)
        docs_out += [da, db]
        X, Y = space_from_doc(da), space_from_doc(db)
        if a == "gp":
            X, Y = scale(X, 0.5), scale(Y, 0.5)
        cert = boxdist.box_exact(X, Y, args.budget)
        return {"value": cert.value, "certified": cert.certified,
                "certificate": _box_cert_doc(cert)}
    if a == "prokhorov":
        (doc,) = _need(args, 1)
        docs_out.append(doc)
        pair = pair_from_doc(doc)
        value, eps, plan = transport.prokhorov_certificate(pair)
        return {"value": value, "certified": True,
                "certificate": {"eps": eps, "plan": plan.matrix.tolist()}}
    (doc,) = _need(args, 1)
    docs_out.append(doc)
    amb, w, f, g = maps_from_doc(doc)
    value = transport.ky_fan(w, f, g, amb.dist)
    return {"value": value, "certified": True,
            "certificate": {"pointwise": amb.dist[f, g].tolist()}}


# -- inv ----------------------------------------------------------------------

def _inv(args, docs_out):
    (doc,) = _need(args, 1)
    docs_out.append(doc)
    X = space_from_doc(doc)
    a = args.action
    if a == "pdiam":
        alpha = _need_param(args, "alpha")
        value = invariants.partial_diam_space(X, alpha, args.budget)
        _, idx, _, _ = boxdist.threshold_clique(X, value, alpha - 1e-12, True,
                                                args.budget or default_budget())
        return {"value": value, "certified": True,
                "certificate": {"subset": sorted(int(i) for i in idx), "alpha": alpha}}
    if a == "obsdiam":
        kappa = _need_param(args, "kappa")
        res = invariants.obs_diam_exact(X, kappa, max_n=args.max_n or invariants.OD_MAX_N)
        return {"value": res.value, "certified": res.exact,
                "certificate": {"witness": np.asarray(res.witness.values).tolist(),
                                "kappa": kappa}}
    value = invariants.obs_diam_total(X, max_n=args.max_n or invariants.OD_MAX_N)
    return {"value": value, "certified": True, "certificate": {}}


# -- check --------------------------------------------------------------------

def _check(args, docs_out):
    da, db = _need(args, 2)
    docs_out += [da, db]
    X, Y = space_from_doc(da), space_from_doc(db)
    if args.action == "order":
        f = dominates(X, Y, max(args.tol, 1e-12))
        return {"value": f is not None, "certified": True,
                "certificate": {"map": None if f is None else f.assignment.tolist()}}
    iso = mm_isomorphic(X, Y, max(args.tol, 1e-12))
    return {"value": iso is not None, "certified": True,
            "certificate": {"map": None if iso is None else iso.tolist()}}


# -- make ---------------------------------------------------------------------

def _path_doc(path):
    return [{"t": t, "space": space_to_doc(X)} for t, X in path.entries]


def _make(args, docs_out):
    a = args.action
    if a in ("product", "interp", "midpoint", "geodesic", "branch"):
        da, db = _need(args, 2)
        docs_out += [da, db]
        X, Y = space_from_doc(da), space_from_doc(db)
    else:
        (da,) = _need(args, 1)
        docs_out.append(da)
        X = space_from_doc(da)
    if a == "product":
        return {"output": space_to_doc(construct.l_p_product(X, Y, args.p)), "certified": True}
    if a == "scale":
        return {"output": space_to_doc(scale(X, _need_param(args, "t"))), "certified": True}
    if a == "transform":
        t = _need_param(args, "t")
        F = {"retract": construct.retraction_transform,
             "linear": construct.TransformSpec.linear,
             "truncate": construct.TransformSpec.truncate}[args.kind](t)
        return {"output": space_to_doc(construct.transform(X, F)), "certified": True,
                "certificate": {"kind": F.kind, "params": list(F.params)}}
    if a == "interp":
        # first input X_1 dominates the second input X_0
        f = dominates(X, Y)
        if f is None:
            raise ValidationError("the second space is not dominated by the first")
        Xt = construct.interpolate_dominated(f, _need_param(args, "t"))
        return {"output": space_to_doc(Xt), "certified": True,
                "certificate": {"map": f.assignment.tolist()}}
    if a == "midpoint":
        Xh, rep = construct.midpoint(X, Y, args.budget, tol=args.tol, check=False)
        return {"output": space_to_doc(Xh), "value": rep.r, "certified": rep.certified,
                "certificate": _box_cert_doc(rep.certificate),
                "checks": {"to_left": rep.to_left, "to_right": rep.to_right,
                           "bound": 0.5 * rep.r + rep.tol, "ok": rep.ok, "note": rep.note}}
    if a in ("geodesic", "branch"):
        path = construct.geodesic_dyadic(X, Y, args.depth, args.budget)
        r = path.meta["r"]
        if a == "branch":
            path = construct.branch_family(path, args.s, r=r)
        rows = construct.path_report(path, r, args.budget)
        ok = all(row["value"] <= row["bound"] + 1e-6 for row in rows)
        return {"output": _path_doc(path), "value": r,
                "certified": all(row["certified"] for row in rows),
                "checks": {"pairs": rows, "ok": ok}}
    eps = _need_param(args, "eps")
    nets = construct.discrete_net(X, eps, args.count)
    rep = construct.net_report(X, eps, nets, args.budget)
    return {"output": [space_to_doc(N) for N in nets], "certified": True, "checks": rep}


# -- demo ---------------------------------------------------------------------

def _write_csv(path, header, rows):
    if path:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)


def _demo(args, docs_out):
    if args.action == "sphere":
        rows = []
        for n in range(1, (args.max_n or 10) + 1):
            ratio = invariants.sphere_concentration_ratio(n)
            rows.append([n, repr(ratio), repr(1.0 - ratio)])
        _write_csv(args.csv, ["n", "ratio", "lower_bound"], rows)
        return {"value": [{"n": n, "ratio": float(r), "lower_bound": float(b)}
                          for n, r, b in rows], "certified": True}
    kappas = [args.kappa] if args.kappa is not None else [k / 20 for k in range(1, 20)]
    rows = [[k, repr(invariants.gaussian_obs_diam(args.lam, k))] for k in kappas]
    _write_csv(args.csv, ["kappa", "obsdiam"], rows)
    value = float(rows[0][1]) if len(rows) == 1 else [
        {"kappa": k, "obsdiam": float(v)} for k, v in rows]
    return {"value": value, "lambda": args.lam, "certified": True}


# -- verify -------------------------------------------------------------------

def _close(a, b, tol=VERIFY_TOL):
    return abs(float(a) - float(b)) <= tol


def verify_report(rep: dict) -> dict:
    """Recompute each claim of a report from its certificate and inputs."""
    group, action = rep["command"][:2]
    ins = rep.get("inputs", [])
    cert = rep.get("certificate") or {}
    checks = {}
    if group == "dist" and action in ("box", "gp"):
        X, Y = space_from_doc(ins[0]), space_from_doc(ins[1])
        if action == "gp":
            X, Y = scale(X, 0.5), scale(Y, 0.5)
        plan = transport.Coupling(np.array(cert["plan"]), X.weight, Y.weight)
        S = boxdist.Relation.build(X, Y, [tuple(p) for p in cert["relation"]])
        checks["coupling"] = bool(plan.is_full())
        checks["objective"] = _close(boxdist.box_objective(X, Y, plan, S), rep["value"])
    elif group == "dist" and action == "prokhorov":
        pair = pair_from_doc(ins[0])
        plan = transport.Coupling(np.array(cert["plan"]), pair.mu, pair.nu)
        eps = cert["eps"]
        support = plan.matrix > 0
        checks["subtransport"] = bool(plan.is_subtransport())
        checks["support"] = bool(np.all(pair.ambient.dist[support] <= eps))
        checks["objective"] = _close(max(eps, 1.0 - plan.mass), rep["value"])
    elif group == "dist" and action == "kyfan":
        amb, w, f, g = maps_from_doc(ins[0])
        checks["objective"] = _close(transport.ky_fan(w, f, g, amb.dist), rep["value"])
    elif group == "inv" and action == "pdiam":
        X = space_from_doc(ins[0])
        A = np.array(cert["subset"], dtype=np.int64)
        checks["mass"] = bool(X.weight[A].sum() >= cert["alpha"] - 1e-9)
        checks["diameter"] = _close(X.dist[np.ix_(A, A)].max(), rep["value"])
    elif group == "inv" and action == "obsdiam":
        X = space_from_doc(ins[0])
        wv = invariants.LipschitzVector(X, np.array(cert["witness"]))
        checks["lipschitz"] = bool(wv.is_lipschitz())
        val = invariants.diam_pushforward(X, wv.values, 1.0 - cert["kappa"])
        checks["objective"] = _close(val, rep["value"])
    elif group == "inv" and action == "odtotal":
        X = space_from_doc(ins[0])
        checks["objective"] = _close(invariants.obs_diam_total(X), rep["value"])
    elif group == "check":
        X, Y = space_from_doc(ins[0]), space_from_doc(ins[1])
        m = cert.get("map")
        if m is None:
            checks["absent"] = rep["value"] is False
        elif action == "order":
            try:
                PointMap(X, Y, m).verify()
                checks["map"] = True
            except ValidationError:
                checks["map"] = False
        else:
            m = np.array(m)
            checks["map"] = bool(np.max(np.abs(Y.dist[np.ix_(m, m)] - X.dist)) <= 1e-9
                                 and np.max(np.abs(Y.weight[m] - X.weight)) <= 1e-9)
    elif group == "make":
        out = rep["output"]
        spaces = out if isinstance(out, list) else [out]
        for k, doc in enumerate(spaces):
            doc = doc.get("space", doc)
            try:
                space_from_doc(doc)
                checks[f"output_{k}"] = True
            except ValidationError:
                checks[f"output_{k}"] = False
        if action == "midpoint":
            Xh = space_from_doc(out)
            X, Y = space_from_doc(ins[0]), space_from_doc(ins[1])
            bound = rep["checks"]["bound"]
            checks["to_left"] = boxdist.box_exact(X, Xh).value <= bound
            checks["to_right"] = boxdist.box_exact(Y, Xh).value <= bound
    elif group == "demo" and action == "sphere":
        checks["ratios"] = all(
            _close(invariants.sphere_concentration_ratio(r["n"]), r["ratio"])
            for r in rep["value"])
    elif group == "demo" and action == "gauss":
        vals = rep["value"]
        if not isinstance(vals, list):
            vals = [{"kappa": rep["command_args"]["kappa"], "obsdiam": vals}]
        checks["values"] = all(
            _close(invariants.gaussian_obs_diam(rep["lambda"], v["kappa"]), v["obsdiam"])
            for v in vals)
    else:
        raise ValidationError(f"cannot verify reports of kind {group} {action}")
    return {"ok": all(checks.values()), "checks": checks}


# -- driver -------------------------------------------------------------------

def _emit(obj, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps(obj, indent=1) + "\n")


def run(argv=None, stdout=None) -> int:
    args = _parser().parse_args(argv)
    argv = list(sys.argv[1:] if argv is None else argv)
    t0 = time.perf_counter()
    base = {"command": [args.group, args.action], "argv": argv,
            "command_args": {"kappa": args.kappa, "alpha": args.alpha, "t": args.t,
                             "eps": args.eps, "p": args.p if np.isfinite(args.p) else "inf",
                             "depth": args.depth, "s": args.s, "budget": args.budget},
            "seed": args.seed, "backend": backend()}
    docs = []
    try:
        if args.group == "verify":
            path = args.report or (args.inputs[0] if args.inputs else None)
            if path is None:
                raise ValidationError("verify needs --report FILE")
            result = verify_report(load(path))
            base.update(result)
            code = EXIT_OK if result["ok"] else EXIT_INVALID
        else:
            if args.action not in ACTIONS[args.group]:
                raise ValidationError(f"{args.group} expects one of {', '.join(ACTIONS[args.group])}")
            handler = {"dist": _dist, "inv": _inv, "check": _check,
                       "make": _make, "demo": _demo}[args.group]
            base.update(handler(args, docs))
            code = EXIT_OK if base.get("certified", True) else EXIT_BUDGET
    except ValidationError as exc:
        base.update({"error": str(exc), "error_type": type(exc).__name__})
        for k in ("line", "column"):
            if getattr(exc, k, None) is not None:
                base[k] = getattr(exc, k)
        code = EXIT_INVALID
    except SearchBudgetExceeded as exc:
        base.update({"error": str(exc), "certified": False, "best": exc.best})
        code = EXIT_BUDGET
    except (MMError, ValueError) as exc:
        base.update({"error": str(exc), "error_type": type(exc).__name__})
        code = EXIT_INVALID
    base["inputs"] = docs
    base["inputs_digest"] = digest(docs)
    base["wall_time"] = time.perf_counter() - t0
    base["exit_code"] = code
    _emit(base, stdout)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
