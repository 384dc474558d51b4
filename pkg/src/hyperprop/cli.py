"""Command line interface.

Every subcommand writes a JSON report to ``--out-dir`` (plus CSV tables
with ``--format csv``) and exits 0 when all certified checks pass, 1 when a
named check fails and 2 on usage errors or malformed input.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, io, limits
from .errors import FormatError, HyperpropError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- report plumbing -----------------------------------------------------------------------

def jsonable(x):
    """Convert library values into JSON-ready ones (Fractions become 'p/q' strings)."""
    from .core import Coloring, ColoredHypergraph, Hypergraph
    from .towers import Tower

    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, Tower):
        return x.describe()
    if isinstance(x, (Hypergraph, ColoredHypergraph)):
        return io.format_hypergraph(x)
    if isinstance(x, Coloring):
        return list(x.second)
    if x is None or isinstance(x, str):
        return x
    return str(x)


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Reporter:
    def __init__(self, args, command):
        self.args = args
        self.command = command
        self.out = Path(args.out_dir)
        self.inputs = {}
        self.checks = []
        self.data = {}
        self.tables = {}
        self.suites = []
        self.seconds = {}

    def input(self, kind, path):
        obj = io.read(kind, path)
        self.inputs[str(path)] = sha256(path)
        return obj

    def check(self, name, passed, **detail):
        self.checks.append({"name": name, "passed": bool(passed), **jsonable(detail)})

    def add_suite(self, res):
        from .figures import plot_suite

        for c in res.checks:
            self.check(f"{res.name}/{c.name}", c.passed, **c.detail)
        self.suites.append({"suite": res.name, "passed": res.passed, "data": jsonable(res.data)})
        self.seconds[res.name] = round(res.seconds, 3)
        for tname, rows in res.tables.items():
            self.tables[f"{res.name}_{tname}"] = rows
        if not self.args.no_figures:
            for p in plot_suite(res, self.out):
                self.data.setdefault("figures", []).append(p.name)

    def finish(self) -> int:
        self.out.mkdir(parents=True, exist_ok=True)
        passed = all(c["passed"] for c in self.checks)
        report = {
            "tool": "hyperprop", "version": __version__, "command": self.command,
            "seed": self.args.seed, "config": self.args.config, "inputs": self.inputs,
            "limits": jsonable(vars(limits.current())), "passed": passed, "checks": self.checks,
            "data": jsonable(self.data), "suites": self.suites, "tables": sorted(self.tables),
            # wall-clock fields live only here so the rest of the report is reproducible
            "timing": {"generated": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                       "suite_seconds": self.seconds},
        }
        path = self.out / f"{self.command}.json"
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        if self.args.format == "csv":
            for name, rows in self.tables.items():
                _write_csv(self.out / f"{name}.csv", rows)
            if not self.tables:
                _write_csv(self.out / f"{self.command}.csv",
                           [{"check": c["name"], "passed": c["passed"]} for c in self.checks])
        for c in self.checks:
            print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}")
        print(f"report: {path}")
        if not passed:
            bad = [c["name"] for c in self.checks if not c["passed"]]
            print(f"failing check: {', '.join(bad)}", file=sys.stderr)
            return EXIT_FAIL
        return EXIT_OK


def _write_csv(path, rows):
    rows = [jsonable(r) for r in rows]
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow(r)


# -- configuration --------------------------------------------------------------------------

def _value(text: str):
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    if "," in text:
        return tuple(_value(x) for x in text.split(",") if x.strip())
    return text


def load_config(path):
    """Read an INI file; applies the [limits] section and returns the parser."""
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise FormatError(str(exc).splitlines()[0], line, str(path)) from None
    if cp.has_section("limits"):
        known = set(vars(limits.DEFAULT))
        kw = {}
        for k, v in cp.items("limits"):
            if k not in known:
                raise UsageError(f"unknown limit {k!r} in {path}")
            kw[k] = _value(v)
        limits.configure(**kw)
    return cp


# -- subcommands -------------------------------------------------------------------------------

def _labels(text):
    return tuple(int(x) for x in text.split(",")) if text else None


def cmd_norm(args, rep):
    from .kernels import CellPartition, StepKernel
    from .norms import boxplus_norm, cut_star_P_norm, cut_star_norm

    W = rep.input("kernel", args.kernel)
    chans = [W] if isinstance(W, StepKernel) else [W.color(a) for a in range(1, W.k + 1)]
    out = []
    for K in chans:
        if args.partition:
            v = cut_star_P_norm(K, CellPartition(_labels(args.partition)), mode=args.mode, seed=args.seed)
            out.append({"value": v, "certificate": args.mode})
        else:
            res = cut_star_norm(K, mode=args.mode, seed=args.seed, return_witness=True)
            out.append({"value": res.value, "witness": res.witness, "certificate": res.certificate,
                        "boxplus": boxplus_norm(K) if args.mode == "exact" else None})
    rep.data = {"channels": out, "value": sum(c["value"] for c in out)}
    rep.check("norm-evaluated", True)


def cmd_sandwich(args, rep):
    from .experiments import run_suite
    from .norms import sandwich_check

    if not args.kernels:
        rep.add_suite(run_suite("sandwich", seed=args.seed, count=args.count))
        return
    rows = []
    for path in args.kernels:
        W = rep.input("kernel", path)
        sc = sandwich_check(W)
        rows.append({"file": str(path), **sc})
        rep.check(f"sandwich {path}", sc["lower_ok"] and sc["upper_ok"], lower_ok=sc["lower_ok"],
                  upper_ok=sc["upper_ok"])
    rep.data = {"kernels": rows}
    rep.tables["sandwich"] = rows


def cmd_wreg(args, rep):
    from .norms import weak_regularity

    W = rep.input("kernel", args.kernel)
    res = weak_regularity(W, args.eps, max_blocks=args.max_blocks, mode=args.mode, seed=args.seed)
    rep.data = {"partition": res.partition.labels, "iterations": res.iterations, "deviation": res.deviation,
                "certificate": res.certificate, "log2_bound": res.bound, "history": res.history,
                "upper": res.upper}
    certified = res.certificate in ("exact", "upper-bound") and res.deviation <= args.eps
    rep.check("deviation<=eps", certified or res.certificate.startswith("trivial"), certificate=res.certificate)
    rep.tables["history"] = res.history


def cmd_concentrate(args, rep):
    from .kernels import blowup_k2
    from .sampling import concentration_experiment

    U = rep.input("kernel", args.kernel)
    F = rep.input("hypergraph", args.pattern) if args.pattern else blowup_k2(U.r)
    res = concentration_experiment(U, F, args.q, args.delta, args.trials, seed=args.seed)
    d = dict(res.data)
    devs = d.pop("deviations")
    rep.data = d
    rep.tables["deviations"] = [{"trial": i, "deviation": float(x)} for i, x in enumerate(devs)]
    rep.check("deviation-rate", res.passed, rate=d["empirical_rate"], bound=d["bound"])


def cmd_countlemma(args, rep):
    from .kernels import ColoredStepKernel
    from .sampling import counting_lemma_check

    U = rep.input("kernel", args.u)
    W = rep.input("kernel", args.w)
    if not (isinstance(U, ColoredStepKernel) and isinstance(W, ColoredStepKernel)):
        raise UsageError("countlemma needs colored kernels (header k >= 1)")
    res = counting_lemma_check(U, W, args.q)
    rep.data = res.data
    rep.check("tv<=bound", res.passed, tv=res.data["tv"], rhs=res.data["rhs"])


def cmd_bounds(args, rep):
    from .towers import bound_calculator

    b = bound_calculator(args.r, args.k, args.t, args.eps, args.delta, args.q0, q_g=args.q_g)
    rows = [x.as_dict() for x in b.values()]
    rep.data = {"bounds": rows}
    rep.tables["bounds"] = rows
    rep.check("bounds-computed", True)


def cmd_gse(args, rep):
    from .energy import gse_graph

    G = rep.input("hypergraph", args.hypergraph)
    J = rep.input("array", args.array)
    v, lab = gse_graph(_plain(G), J, mode=args.mode, seed=args.seed)
    rep.data = {"value": v, "labels": lab, "certificate": "exact" if args.mode == "exact" else "heuristic"}
    rep.check("gse-evaluated", True)


def _plain(G):
    from .core import Hypergraph

    if isinstance(G, Hypergraph):
        return G
    raise UsageError("this command needs an uncolored hypergraph (k = 2, only color 1 listed)")


def cmd_ggse(args, rep):
    from .core import _as_colored
    from .energy import ggse

    H = _as_colored(rep.input("hypergraph", args.hypergraph))
    Js = [rep.input("array", p) for p in args.arrays]
    v, lab = ggse(H, Js, t=args.classes, mode=args.mode, seed=args.seed)
    rep.data = {"value": v, "labels": lab}
    rep.check("ggse-evaluated", True)


def cmd_tensor(args, rep):
    from .energy import density_tensor_of, satisfies_tensor

    H = _plain(rep.input("hypergraph", args.hypergraph))
    psi = rep.input("tensor", args.tensor)
    tol = Fraction(args.tol)
    P = satisfies_tensor(H, psi, tol=tol, mode=args.mode, q=args.q, seed=args.seed)
    rep.data = {"satisfied": P is not None, "levels": None if P is None else P.levels}
    if P is not None and args.mode == "exact":
        rep.data["distance"] = density_tensor_of(H, P).distance(psi)
    rep.check("tensor-satisfied", P is not None)


def cmd_ndtest(args, rep):
    from .ndtest import NDParameter, nd_eval, tester, witness_from_name

    G = rep.input("hypergraph", args.hypergraph)
    f = NDParameter(witness_from_name(args.witness))
    val = nd_eval(f, G, mode=args.mode, seed=args.seed)
    rep.data = {"value": val.value, "certificate": val.certificate, "coloring": val.coloring}
    if args.q:
        res = tester(f, args.eps, G, args.q, args.trials, seed=args.seed, mode=args.mode)
        rep.data["tester"] = res.data
        rep.check("tester-failure-rate<eps", res.passed, **res.data)
    else:
        rep.check("nd-evaluated", True)


def cmd_transfer(args, rep):
    from .core import sample_q
    from .ndtest import NDParameter, coloring_transfer, linear_density_vector, nd_eval, witness_from_name

    G = _plain(rep.input("hypergraph", args.hypergraph))
    F, smap = sample_q(G, args.q, seed=args.seed, return_map=True)
    Fh = nd_eval(NDParameter(witness_from_name(args.witness)), F).coloring
    res = coloring_transfer(G, F, smap, Fh, args.delta, seed=args.seed)
    rep.data = res.as_dict()
    for st in res.stages:
        rep.check(f"stage {st.name}", st.ok, measured=st.measured, allowed=st.allowed)
    vG = linear_density_vector(res.coloring.refined, args.size_cap)
    vF = linear_density_vector(Fh.refined, args.size_cap)
    rows = [{"graph": repr(x), "edges": len(x), "G_hat": vG[x], "F_hat": vF[x],
             "gap": abs(vG[x] - vF[x])} for x in vG]
    rep.tables["linear_densities"] = rows
    rep.check("linear-densities-within-ledger", all(float(r["gap"]) <= r["edges"] * res.total + 1e-12
                                                    for r in rows), certified_total=res.total)
    rep.tables["stages"] = [s.as_dict() for s in res.stages]


def cmd_dist(args, rep):
    from .ndtest import PROPERTIES, edit_distance_to_property

    G = _plain(rep.input("hypergraph", args.hypergraph))
    if args.property not in PROPERTIES:
        raise UsageError(f"unknown property {args.property!r}; known: {', '.join(sorted(PROPERTIES))}")
    P = PROPERTIES[args.property]
    if args.tester:
        if args.c is None or args.q is None:
            raise UsageError("--tester needs --c and --q")
        verdict = edit_distance_to_property(G, P, mode="tester", c=Fraction(args.c), q=args.q, seed=args.seed)
        rep.data = {"verdict": verdict}
        rep.check("tester-ran", True, verdict=verdict)
        return
    res = edit_distance_to_property(G, P, radius=args.radius)
    rep.data = {"value": res.value, "lower": res.lower, "upper": res.upper, "edits": res.edits,
                "radius": res.radius}
    rep.check("distance-evaluated", True, exact=res.value is not None)


def cmd_fo(args, rep):
    from .ndtest import FOFormula, fo_property_check

    G = _plain(rep.input("hypergraph", args.hypergraph))
    preds = []
    for p in args.predicate or ():
        name, _, ar = p.partition(":")
        preds.append((name, int(ar or 1)))
    try:
        phi = FOFormula.parse(args.exists.split(",") if args.exists else [],
                              args.forall.split(",") if args.forall else [], args.matrix, preds)
    except ValueError as exc:
        raise UsageError(f"bad formula: {exc}") from None
    rel = {}
    for item in args.relation or ():
        name, _, body = item.partition("=")
        rel[name] = [tuple(int(v) - 1 for v in t.split(",")) for t in body.split(";") if t]
    val = fo_property_check(G, phi, relations=rel, mode="nd" if args.nd else "fixed-relations")
    rep.data = {"value": val}
    rep.check("formula-evaluated", True, value=val)


def cmd_gen(args, rep):
    from .core import random_hypergraph
    from .experiments import bipartite_blowup
    from .kernels import random_colored_kernel, random_step_kernel

    rng = np.random.default_rng(args.seed)
    if args.kind == "random-hypergraph":
        obj = random_hypergraph(args.r, args.n, args.p, seed=rng)
    elif args.kind == "random-kernel":
        if args.k:
            obj = random_colored_kernel(args.r, args.t, args.k, rng, denominator=args.denominator)
        else:
            obj = random_step_kernel(args.r, args.t, rng, signed=True, denominator=args.denominator)
    elif args.kind == "blowup":
        obj = bipartite_blowup(args.n)
    elif args.kind == "planted-partition":
        obj = planted_partition(args.n, args.p_in, args.p_out, rng)
    else:
        raise UsageError(f"unknown kind {args.kind!r}")
    if args.n is not None and args.r is not None and args.n < args.r:
        raise UsageError("need n >= r")
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write(obj, out)
    rep.inputs[str(out)] = sha256(out)
    rep.data = {"kind": args.kind, "output": str(out)}
    rep.check("generated", True)


def planted_partition(n, p_in, p_out, rng):
    """Two planted halves (first n//2 vertices and the rest); p_out across, p_in inside."""
    from .core import Hypergraph

    side = [0 if v < n // 2 else 1 for v in range(n)]
    E = [(u, v) for u in range(n) for v in range(u + 1, n)
         if rng.random() < (p_in if side[u] == side[v] else p_out)]
    return Hypergraph(2, n, frozenset(E))


def _suite_job(payload):
    name, seed, params, lim = payload
    from .experiments import run_suite

    limits.configure(**lim)
    return run_suite(name, seed=seed, **params)


def cmd_run(args, rep):
    from .experiments import SUITES

    if not args.config:
        raise UsageError("run needs --config")
    cp = args._cp
    suites = []
    if cp.has_section("run"):
        raw = cp.get("run", "suites", fallback="")
        suites = [s.strip() for s in raw.replace("\n", ",").split(",") if s.strip()]
        if args.seed_given is False:
            args.seed = cp.getint("run", "seed", fallback=args.seed)
        if args.jobs_given is False:
            args.jobs = cp.getint("run", "jobs", fallback=args.jobs)
    for s in suites:
        if s not in SUITES:
            raise UsageError(f"unknown suite {s!r}; known: {', '.join(sorted(SUITES))}")
    jobs = []
    for s in suites:
        params = {k: _value(v) for k, v in cp.items(f"suite:{s}")} if cp.has_section(f"suite:{s}") else {}
        jobs.append((s, args.seed, params, dict(vars(limits.current()))))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_suite_job, jobs))
    else:
        results = [_suite_job(j) for j in jobs]
    for res in results:
        rep.add_suite(res)
    rep.data["suites_run"] = suites


# -- parser ------------------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file; [limits] overrides guards and constants")
    common.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    common.add_argument("--out-dir", default="reports", help="directory for reports and figures")
    common.add_argument("--jobs", type=int, default=None, help="parallel suite workers")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--no-figures", action="store_true", help="skip matplotlib output")

    p = argparse.ArgumentParser(prog="hyperprop", description="Cut norms, sampling and nondeterministic "
                                                               "testing on hypergraphs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        sp = sub.add_parser(name, parents=[common], help=help)
        sp.set_defaults(func=fn)
        return sp

    sp = add("norm", cmd_norm, "cut-* norm of a kernel file")
    sp.add_argument("kernel")
    sp.add_argument("--mode", choices=("exact", "ascent"), default="exact")
    sp.add_argument("--partition", help="class labels, comma separated, for the cut-(*,Q) norm")

    sp = add("sandwich", cmd_sandwich, "sandwich inequalities on kernel files or a seeded corpus")
    sp.add_argument("kernels", nargs="*")
    sp.add_argument("--count", type=int, default=200)

    sp = add("wreg", cmd_wreg, "weak regularity partition of a kernel")
    sp.add_argument("kernel")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--max-blocks", type=int, default=None)
    sp.add_argument("--mode", choices=("auto", "exact", "ascent"), default="auto")

    sp = add("concentrate", cmd_concentrate, "concentration of sampled t* densities")
    sp.add_argument("kernel")
    sp.add_argument("--pattern", help="hypergraph file F (default K_r^2)")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--trials", type=int, default=200)

    sp = add("countlemma", cmd_countlemma, "exact total variation against the cut distance")
    sp.add_argument("u")
    sp.add_argument("w")
    sp.add_argument("--q", type=int, required=True)

    sp = add("bounds", cmd_bounds, "explicit sample-complexity bounds")
    for name, typ in (("r", int), ("k", int), ("t", int), ("eps", float), ("delta", float), ("q0", int)):
        sp.add_argument(f"--{name}", type=typ, required=True)
    sp.add_argument("--q-g", type=int, default=None)

    sp = add("gse", cmd_gse, "ground state energy of a hypergraph")
    sp.add_argument("hypergraph")
    sp.add_argument("array")
    sp.add_argument("--mode", choices=("exact", "local"), default="exact")

    sp = add("ggse", cmd_ggse, "generalized ground state energy")
    sp.add_argument("hypergraph")
    sp.add_argument("arrays", nargs="+", help="one array per color")
    sp.add_argument("--classes", type=int, default=None)
    sp.add_argument("--mode", choices=("exact", "local"), default="exact")

    sp = add("tensor", cmd_tensor, "does a hypergraph satisfy a density tensor")
    sp.add_argument("hypergraph")
    sp.add_argument("tensor")
    sp.add_argument("--tol", default="0")
    sp.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    sp.add_argument("--q", type=int, default=None)

    sp = add("ndtest", cmd_ndtest, "nondeterministic parameter value and tester")
    sp.add_argument("hypergraph")
    sp.add_argument("--witness", default="maxcut", help="registered witness, optionally name:params")
    sp.add_argument("--mode", choices=("exact", "search"), default="exact")
    sp.add_argument("--eps", type=float, default=0.2)
    sp.add_argument("--q", type=int, default=None)
    sp.add_argument("--trials", type=int, default=200)

    sp = add("transfer", cmd_transfer, "transfer a sample coloring back to the graph")
    sp.add_argument("hypergraph")
    sp.add_argument("--witness", default="maxcut")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--size-cap", type=int, default=3)

    sp = add("dist", cmd_dist, "edit distance to a property")
    sp.add_argument("hypergraph")
    sp.add_argument("--property", required=True)
    sp.add_argument("--radius", type=int, default=None)
    sp.add_argument("--tester", action="store_true")
    sp.add_argument("--c", default=None)
    sp.add_argument("--q", type=int, default=None)

    sp = add("fo", cmd_fo, "exists-forall formula on a graph")
    sp.add_argument("hypergraph")
    sp.add_argument("--exists", default="", help="comma separated variables")
    sp.add_argument("--forall", default="", help="comma separated variables")
    sp.add_argument("--matrix", required=True, help="s-expression, e.g. '(or (= u v) (adj u v))'")
    sp.add_argument("--predicate", action="append", help="NAME:ARITY")
    sp.add_argument("--relation", action="append", help="NAME=1,2;3,4 (1-based tuples)")
    sp.add_argument("--nd", action="store_true", help="search over all predicate tables")

    sp = add("gen", cmd_gen, "write a seeded instance file")
    sp.add_argument("kind", choices=("random-hypergraph", "random-kernel", "blowup", "planted-partition"))
    sp.add_argument("--output", "-o", required=True)
    sp.add_argument("--r", type=int, default=2)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--p", type=float, default=0.5)
    sp.add_argument("--t", type=int, default=3)
    sp.add_argument("--k", type=int, default=0, help="colors for random-kernel (0 = real kernel)")
    sp.add_argument("--denominator", type=int, default=8)
    sp.add_argument("--p-in", type=float, default=0.1)
    sp.add_argument("--p-out", type=float, default=0.9)

    add("run", cmd_run, "run the experiment suites named in --config")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.seed_given = args.seed is not None
    args.jobs_given = args.jobs is not None
    args.seed = 0 if args.seed is None else args.seed
    args.jobs = 1 if args.jobs is None else args.jobs
    limits.reset()
    rep = Reporter(args, args.command)
    try:
        args._cp = load_config(args.config) if args.config else configparser.ConfigParser()
        if args.config:
            rep.inputs[str(args.config)] = sha256(args.config)
        if args.command == "gen" and args.kind in ("random-hypergraph", "planted-partition", "blowup") \
                and args.n is None:
            raise UsageError("gen needs --n")
        args.func(args, rep)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HyperpropError as exc:
        rep.check(type(exc).__name__, False, message=str(exc))
    return rep.finish()


if __name__ == "__main__":
    sys.exit(main())
