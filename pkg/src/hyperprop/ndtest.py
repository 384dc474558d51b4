"""Nondeterministic parameters, their testers, coloring transfer, linear
densities, edit distance to a property and prefix-quantified formulas."""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import limits
from ._contract import hom_sum
from .core import (ColoredHypergraph, Coloring, Hypergraph, _as_colored, decode, encode,
                   enumerate_colorings, sample_q, slots)
from .errors import EnumerationTooLarge, InvalidColor
from .kernels import (CellPartition, ColoredStepKernel, StepKernel, common_refinement,
                      graph_to_kernel, step_average)
from .norms import cut_distance, kr2_density, l1_distance
from .sampling import Report, trial_seeds


# -- witness parameters ------------------------------------------------------------

@dataclass
class WitnessParameter:
    """A parameter of 2k-colored graphs (refined colors (alpha, beta), alpha in {1,2}).

    ``argmax`` is an optional hook G -> (value, Coloring) that returns the
    maximum over all k-colorings directly; it is what makes exact
    evaluation possible beyond tiny n.
    """

    name: str
    k: int
    eval: Callable
    sample_complexity: Callable | None = None
    argmax: Callable | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, refined: ColoredHypergraph):
        return self.eval(refined)


@dataclass
class NDParameter:
    witness: WitnessParameter

    @property
    def k(self):
        return self.witness.k


def _maxcut_exact(n: int, pairs, guard=None):
    """(cut size, side labels) of a maximum cut of the graph on n vertices."""
    pairs = [tuple(p) for p in pairs]
    if not pairs:
        return 0, (0,) * n
    adj = [[] for _ in range(n)]
    for u, v in pairs:
        adj[u].append(v)
        adj[v].append(u)
    side = [-1] * n
    bip = True
    for s in range(n):
        if side[s] >= 0:
            continue
        side[s] = 0
        dq = deque([s])
        while dq and bip:
            u = dq.popleft()
            for v in adj[u]:
                if side[v] < 0:
                    side[v] = 1 - side[u]
                    dq.append(v)
                elif side[v] == side[u]:
                    bip = False
                    break
    if bip:
        return len(pairs), tuple(side)
    g = limits.guard(guard)
    if 2 ** (n - 1) > g:
        raise EnumerationTooLarge("vertex bipartitions", 2 ** (n - 1), g)
    P = np.asarray(pairs, dtype=np.int64)
    best, arg = -1, None
    chunk = 1 << 15
    bits = np.arange(n - 1, dtype=np.int64)
    for lo in range(0, 2 ** (n - 1), chunk):
        codes = np.arange(lo, min(lo + chunk, 2 ** (n - 1)), dtype=np.int64)
        X = np.zeros((len(codes), n), dtype=np.int8)
        X[:, 1:] = (codes[:, None] >> bits) & 1  # vertex 0 fixed on side 0
        cuts = (X[:, P[:, 0]] != X[:, P[:, 1]]).sum(axis=1)
        i = int(np.argmax(cuts))
        if cuts[i] > best:
            best, arg = int(cuts[i]), tuple(int(x) for x in X[i])
    return best, arg


def maxcut_density(G: Hypergraph, guard=None) -> Fraction:
    """2 * maxcut / n^2, the ordered-pair normalization."""
    if G.r != 2:
        raise ValueError("maxcut is defined for graphs")
    c, _ = _maxcut_exact(G.n, G.edges, guard)
    return Fraction(2 * c, G.n**2)


def _maxcut_eval(refined: ColoredHypergraph):
    # marked edges carry refined color (1,2)
    marked = [s for s, c in zip(slots(refined.n, 2), refined.colors) if c == encode(1, 2, 2)]
    c, _ = _maxcut_exact(refined.n, marked)
    return Fraction(2 * c, refined.n**2)


def _maxcut_argmax(G):
    G = _as_colored(G)
    edges = [s for s, c in zip(slots(G.n, 2), G.colors) if c == 1]
    c, side = _maxcut_exact(G.n, edges)
    second = [2 if a == 1 and side[s[0]] != side[s[1]] else 1 for s, a in zip(slots(G.n, 2), G.colors)]
    return Fraction(2 * c, G.n**2), Coloring.from_pairs(G, second, 2)


def maxcut_witness() -> WitnessParameter:
    """k = 2 witness on graphs: maxcut density of the edges colored (1,2).

    Its maximum over colorings is the maxcut density of the graph, since
    marking every edge dominates any other marking.
    """
    return WitnessParameter("maxcut", 2, _maxcut_eval, argmax=_maxcut_argmax)


def _two_edge_linear(r):
    # two edges sharing exactly one vertex
    return [tuple(range(r)), (r - 1,) + tuple(range(r, 2 * r - 1))]


def bichromatic_witness(r: int = 2) -> WitnessParameter:
    """k = 2 witness: t* density of two edges meeting in one vertex, colored (1,1) and (1,2)."""
    edges = _two_edge_linear(r)

    def ev(refined: ColoredHypergraph):
        return colored_tstar(edges, (encode(1, 1, 2), encode(1, 2, 2)), refined)

    return WitnessParameter("bichromatic", 2, ev, params={"r": r})


def proximity_witness(target) -> WitnessParameter:
    """k = len(target) witness: minus the largest gap between the densities
    of edges colored (1, beta) and target[beta-1]."""
    target = tuple(Fraction(str(x)) if isinstance(x, float) else Fraction(x) for x in target)
    k = len(target)

    def ev(refined: ColoredHypergraph):
        cnt = np.bincount(np.asarray(refined.colors), minlength=2 * k + 1)
        tot = math.comb(refined.n, refined.r)
        return -max(abs(Fraction(int(cnt[encode(1, b, k)]), tot) - target[b - 1]) for b in range(1, k + 1))

    def argmax(G):
        G = _as_colored(G)
        idx = [i for i, c in enumerate(G.colors) if c == 1]
        m, tot = len(idx), len(G.colors)
        # exact: try every split of the m edges into k counts
        best = None
        for cut in itertools.combinations(range(m + k - 1), k - 1):
            parts = [j - i - 1 for i, j in zip((-1,) + cut, cut + (m + k - 1,))]
            gap = max(abs(Fraction(c, tot) - t) for c, t in zip(parts, target))
            if best is None or gap < best[0]:
                best = (gap, parts)
        want = best[1]
        second = [1] * tot
        pos = 0
        for b, w in enumerate(want):
            for i in idx[pos:pos + w]:
                second[i] = b + 1
            pos += w
        C = Coloring.from_pairs(G, second, k)
        return ev(C.refined), C

    return WitnessParameter("proximity", k, ev, params={"target": [str(t) for t in target]})


WITNESSES = {
    "maxcut": lambda arg: maxcut_witness(),
    "bichromatic": lambda arg: bichromatic_witness(int(arg) if arg else 2),
    "proximity": lambda arg: proximity_witness([Fraction(x) for x in arg.split(",")] if arg else [Fraction(1, 2)] * 2),
}


def witness_from_name(text: str) -> WitnessParameter:
    """``name`` or ``name:params`` for a registered witness."""
    name, _, arg = text.partition(":")
    if name not in WITNESSES:
        raise KeyError(f"unknown witness {name!r}; known: {', '.join(sorted(WITNESSES))}")
    return WITNESSES[name](arg)


# -- evaluation ---------------------------------------------------------------------

@dataclass
class NDValue:
    value: object
    coloring: Coloring
    certificate: str

    def __iter__(self):
        return iter((self.value, self.coloring))


def nd_eval(f: NDParameter, G, mode: str = "exact", guard=None, seed=None, restarts=4,
            use_hook: bool = True) -> NDValue:
    """max over k-colorings of the witness.

    Exact mode uses the witness argmax hook when present, otherwise it
    enumerates every coloring.  Search mode is a randomized single-slot
    local search and only certifies a lower bound.
    """
    w = f.witness if isinstance(f, NDParameter) else f
    G = _as_colored(G)
    if mode == "exact":
        if use_hook and w.argmax is not None:
            v, C = w.argmax(G)
            return NDValue(v, C, "argmax-hook")
        best = None
        for C in enumerate_colorings(G, w.k, guard):
            v = w(C.refined)
            if best is None or v > best[0]:
                best = (v, C)
        return NDValue(best[0], best[1], "exhaustive")
    if mode != "search":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    m = len(G.colors)
    best = None
    for _ in range(restarts + 1):
        sec = list(rng.integers(1, w.k + 1, size=m))
        C = Coloring.from_pairs(G, sec, w.k)
        cur = w(C.refined)
        improved = True
        while improved:
            improved = False
            for i in rng.permutation(m):
                for b in range(1, w.k + 1):
                    if b == sec[i]:
                        continue
                    old = sec[i]
                    sec[i] = b
                    C2 = Coloring.from_pairs(G, sec, w.k)
                    v = w(C2.refined)
                    if v > cur:
                        cur, C, improved = v, C2, True
                    else:
                        sec[i] = old
        if best is None or cur > best[0]:
            best = (cur, C)
    return NDValue(best[0], best[1], "search-lower-bound")


def tester(f: NDParameter, eps, G, q: int, trials: int, seed=0, mode: str = "exact", guard=None):
    """Empirical P(|f(G) - f(G(q,G))| > eps) over independent samples."""
    if q > G.n:
        raise ValueError("sample larger than the graph")
    full = nd_eval(f, G, mode=mode, guard=guard, seed=seed).value
    vals = []
    for s in trial_seeds(seed, trials):
        F = sample_q(G, q, seed=s)
        vals.append(nd_eval(f, F, mode=mode, guard=guard, seed=s).value)
    dev = np.array([abs(float(v) - float(full)) for v in vals])
    rate = float(np.mean(dev > float(eps))) if trials else 0.0
    return Report("tester", rate < float(eps) or (rate == 0 and trials == 0),
                  {"f_G": float(full), "q": q, "eps": float(eps), "trials": trials,
                   "failure_rate": rate, "mean_sample_value": float(np.mean([float(v) for v in vals])) if vals else None,
                   "max_deviation": float(dev.max()) if trials else 0.0})


# -- colored t* densities and linear graphs --------------------------------------

def colored_tstar(edges, colors, G):
    """t* density of the colored hypergraph (edges, colors) in the finite colored graph G."""
    G = _as_colored(G)
    T = np.asarray(G.tensor)
    q = 1 + max((max(e) for e in edges), default=-1)
    if not edges:
        return Fraction(1)
    tensors = [(T == c).astype(np.int64) for c in colors]
    total = hom_sum(q, [tuple(e) for e in edges], tensors)
    return Fraction(int(total), G.n**q)


def _canonical(nv, edges, colors):
    best = None
    for p in itertools.permutations(range(nv)):
        form = tuple(sorted((tuple(sorted(p[v] for v in e)), c) for e, c in zip(edges, colors)))
        if best is None or form < best:
            best = form
    return best


def linear_hypergraphs(r: int, size_cap: int, k: int, guard=None):
    """Isomorphism classes of k-colored linear r-graphs without isolated vertices on at most size_cap vertices.

    Returned as canonical forms ((edge, color), ...) sorted by (vertices, edges, form).
    """
    g = limits.guard(guard)
    seen = {}
    work = 0
    for nv in range(r, size_cap + 1):
        cand = list(itertools.combinations(range(nv), r))
        for m in range(1, len(cand) + 1):
            for E in itertools.combinations(cand, m):
                if any(len(set(a) & set(b)) > 1 for a, b in itertools.combinations(E, 2)):
                    continue
                if len(set().union(*E)) != nv:
                    continue
                for cols in itertools.product(range(1, k + 1), repeat=m):
                    work += math.factorial(nv)
                    if work > g:
                        raise EnumerationTooLarge("linear graph canonical forms", work, g)
                    form = _canonical(nv, E, cols)
                    seen.setdefault(form, (nv, m))
    return sorted(seen, key=lambda f: (seen[f], f))


def linear_density_vector(G, size_cap: int, guard=None) -> dict:
    """t* density of every colored linear r-graph on <= size_cap vertices (isolated-free)."""
    G = _as_colored(G)
    out = {}
    for form in linear_hypergraphs(G.r, size_cap, G.k, guard):
        edges = [e for e, _ in form]
        cols = [c for _, c in form]
        out[form] = colored_tstar(edges, cols, G)
    return out


def marginalize_vector(vec: dict, k: int) -> dict:
    """Sum a refined-color density vector over second coordinates.

    Keys are re-canonicalized in the discolored palette; isomorphic images merge
    by taking the value of any representative (they are equal).
    """
    out = {}
    for form, v in vec.items():
        edges = [e for e, _ in form]
        nv = 1 + max(max(e) for e in edges)
        base = _canonical(nv, edges, [decode(c, k)[0] for _, c in form])
        out.setdefault(base, {})[form] = v
    res = {}
    for base, parts in out.items():
        # the discolored density is a sum over all second-coordinate patterns of one labelled copy
        edges = [e for e, _ in base]
        nv = 1 + max(max(e) for e in edges)
        total = 0
        for betas in itertools.product(range(1, k + 1), repeat=len(base)):
            cols = [encode(a, b, k) for (_, a), b in zip(base, betas)]
            total += parts.get(_canonical(nv, edges, cols), 0)
        res[base] = total
    return res


def linear_counting_check(G1, G2, size_cap: int, distance) -> Report:
    """|t*(L,G1) - t*(L,G2)| <= e(L) * distance for every linear L on <= size_cap vertices."""
    v1 = linear_density_vector(G1, size_cap)
    v2 = linear_density_vector(G2, size_cap)
    worst, bad = 0.0, []
    for form in v1:
        gap = abs(v1[form] - v2[form])
        lim = len(form) * distance
        worst = max(worst, float(gap) - float(lim))
        if gap > lim:
            bad.append(form)
    return Report("linear-counting", not bad, {"violations": len(bad), "max_excess": worst,
                                                "classes": len(v1)})


# -- coloring lemma -------------------------------------------------------------------

@dataclass
class ColoringLemmaResult:
    kernel: ColoredStepKernel | None
    status: str
    pre: object
    post: object
    bound: object
    partition: CellPartition | None = None

    @property
    def ok(self):
        return self.status == "ok"


def _refined_split(U: ColoredStepKernel, Uh: ColoredStepKernel, k: int):
    """Per-cell proportions c[a,b] = Uh[(a,b)] / U[a], uniform where U[a] = 0."""
    t = U.k
    shape = U.values.shape[1:]
    exact = U.exact and Uh.exact
    c = np.empty((t, k) + shape, dtype=object if exact else float)
    for a in range(t):
        Ua = U.values[a]
        for b in range(k):
            Uab = Uh.values[a * k + b]
            if exact:
                c[a, b] = np.frompyfunc(lambda x, y: Fraction(1, k) if y == 0 else Fraction(x) / y, 2, 1)(Uab, Ua)
            else:
                with np.errstate(invalid="ignore", divide="ignore"):
                    c[a, b] = np.where(Ua == 0, 1.0 / k, Uab / np.where(Ua == 0, 1, Ua))
    return c


def discolor_kernel(Uh: ColoredStepKernel, k: int) -> ColoredStepKernel:
    t = Uh.k // k
    vals = Uh.values.reshape((t, k) + Uh.values.shape[1:]).sum(axis=1)
    return ColoredStepKernel(Uh.weights, vals, Uh.loop)


def coloring_lemma(U: ColoredStepKernel, Uh: ColoredStepKernel, V: ColoredStepKernel, eps, k: int,
                   P: CellPartition | None = None, mode="exact", guard=None, check=True) -> ColoringLemmaResult:
    """Color V like Uh colors U.

    On every cell, V's color-alpha mass is split into k parts in the
    proportions Uh assigns to (alpha, beta) on that cell.  P is the step
    partition of Uh over its classes (all classes by default).  The
    precondition d_{cut,*,P}(U,V) <= eps and the post-hoc bound
    d_{cut,*,P}(Uh, V^) <= k eps are both evaluated.
    """
    if Uh.k != U.k * k:
        raise InvalidColor("refined kernel does not have k times the colors")
    if U.weights != Uh.weights:
        raise ValueError("U and Uh must share classes")
    P = P or CellPartition.discrete(U.t)
    pre = cut_distance(U, V, Q=P, mode=mode, guard=guard) if check else None
    w, pu, pv = common_refinement(U.weights, V.weights)
    U2, Uh2, V2 = U.refine(w, pu), Uh.refine(w, pu), V.refine(w, pv)
    P2 = P.refine_classes(pu)
    c = _refined_split(U2, Uh2, k)
    vals = np.stack([V2.values[a] * c[a, b] for a in range(U.k) for b in range(k)])
    Vh = ColoredStepKernel(V2.weights, vals, V2.loop)
    if not check:
        return ColoringLemmaResult(Vh, "ok", None, None, None, P2)
    post = cut_distance(Uh2, Vh, Q=P2, mode=mode, guard=guard)
    if pre > eps:
        return ColoringLemmaResult(Vh, "hypothesis-unmet", pre, post, k * eps, P2)
    status = "ok" if post <= k * eps else "bound-exceeded"
    return ColoringLemmaResult(Vh, status, pre, post, k * eps, P2)


# -- coloring transfer ---------------------------------------------------------------

def twin_partition(G) -> tuple:
    """Labels grouping vertices with identical colored neighbourhoods (twins)."""
    G = _as_colored(G)
    T = np.asarray(G.tensor)
    n = G.n
    sig = [np.bincount(T[v].ravel(), minlength=G.k + 1).tobytes() for v in range(n)]
    reps, labels = [], []
    for v in range(n):
        for j, u in enumerate(reps):
            if sig[u] != sig[v]:
                continue
            perm = np.arange(n)
            perm[u], perm[v] = v, u
            X = T
            for ax in range(G.r):
                X = np.take(X, perm, axis=ax)
            if np.array_equal(X, T):
                labels.append(j)
                break
        else:
            labels.append(len(reps))
            reps.append(v)
    return tuple(labels)


def _float_kernel(W: ColoredStepKernel) -> ColoredStepKernel:
    return ColoredStepKernel(tuple(float(x) for x in W.weights), np.asarray(W.values, dtype=float),
                             None if W.loop is None else np.asarray(W.loop, dtype=float))


def _take(Z: ColoredStepKernel, idx, weights):
    idx = np.asarray(idx)
    vals = Z.values
    for ax in range(1, vals.ndim):
        vals = np.take(vals, idx, axis=ax)
    loop = Z.loop
    if loop is not None:
        for ax in range(loop.ndim):
            loop = np.take(loop, idx, axis=ax)
    return ColoredStepKernel(tuple(weights), vals, loop)


def _channel_upper(D, weights):
    """Upper bound on the summed cut-* norms of channel differences via t*(K_r^2)^(1/2^r)."""
    tot = 0.0
    for d in D:
        K = StepKernel(tuple(float(x) for x in weights), np.asarray(d, dtype=float))
        tot += max(float(kr2_density(K)), 0.0) ** (1.0 / 2 ** K.r)
    return tot


@dataclass
class Stage:
    name: str
    measured: float
    allowed: float
    certificate: str
    note: str = ""
    chained: bool = True  # enters the certified total

    @property
    def ok(self):
        return self.measured <= self.allowed + 1e-12

    def as_dict(self):
        return {"stage": self.name, "measured": self.measured, "allowed": self.allowed,
                "certificate": self.certificate, "ok": self.ok, "chained": self.chained,
                "note": self.note}


@dataclass
class TransferResult:
    coloring: Coloring
    stages: list
    total: float
    budget: float

    @property
    def ok(self):
        return all(s.ok for s in self.stages)

    @property
    def failed_stage(self):
        return next((s.name for s in self.stages if not s.ok), None)

    def as_dict(self):
        return {"ok": self.ok, "failed_stage": self.failed_stage, "certified_total": self.total,
                "budget": self.budget, "stages": [s.as_dict() for s in self.stages]}


def coloring_transfer(G, F, smap, Fh: Coloring, delta, labels=None, seed=None, guard=None) -> TransferResult:
    """Transport a k-coloring Fh of the sample F (vertex i of F is vertex smap[i] of G) to G.

    ``labels`` is the step partition of G's vertices (twin classes by
    default).  Every stage records a certified upper bound on the cut-*
    distance it introduces and its allowance:

    A  step approximation V_G of W_G (L1; delta)
    B  pull the classes back to the sample and relay its step function on
       G's class measures (cut-* of the rearrangement; delta/8k)
    C  step approximation Z of the colored sample (L1; delta)
    D0 distance between the relayed sample and V_G on the step cells (delta)
    D  coloring lemma from the relayed sample onto V_G (k * D0)
    E  mass of cells split uniformly because the sample had no such color (delta)
    F  coloring lemma back onto W_G (L1; delta)
    G  independent per-slot rounding (t*(K_r^2)^(1/2^r); delta)

    Cut distances in B, D0 and D are exact when the class count allows
    enumeration and fall back to the L1 distance otherwise.

    The chained stages B, C, D, F, G bound the cut-* distance between the
    colored sample and the colored G after rearrangement, so linear
    densities differ by at most e(L) times ``total``.  ``budget`` is the
    sum of the allowances.
    """
    k = Fh.k
    G = _as_colored(G)
    F = _as_colored(F)
    n, q, r = G.n, F.n, G.r
    delta = float(delta)
    stages = []
    WG = _float_kernel(graph_to_kernel(G))
    lab_G = twin_partition(G) if labels is None else CellPartition(labels).canonical().labels
    b = max(lab_G) + 1
    QG = CellPartition(lab_G)
    a_meas = float(l1_distance(WG, step_average(WG, QG)))
    stages.append(Stage("A:regularize-G", a_meas, delta, "L1", f"{b} classes", chained=False))
    VG = step_average(WG, QG, compress=True)
    # B: sample classes are the pull-back of G's classes
    lab_F = [lab_G[smap[i]] for i in range(q)]
    present = sorted(set(lab_F))
    absent = [x for x in range(b) if x not in present]
    pos = {x: j for j, x in enumerate(present)}
    WFh = _float_kernel(graph_to_kernel(Fh.refined))
    QF = CellPartition(tuple(pos[x] for x in lab_F))
    Zh = step_average(WFh, QF, compress=True)
    # relay: same values on G's measures, absent blocks filled from V_G split uniformly
    Zh_G = _relay(Zh, present, VG, k)
    order = present + absent
    # exact cut-* distance on the common refinement of the two layouts
    b_meas, b_cert = _certified_cut(Zh, _take(Zh_G, order, [Zh_G.weights[x] for x in order]), None, guard)
    mism = sum(abs(lab_G.count(x) / n - lab_F.count(x) / q) for x in range(b))
    stages.append(Stage("B:measure-matching", b_meas, delta / (8 * k), b_cert,
                        f"sum of class measure gaps {mism:.4f}; {len(absent)} classes unseen"))
    c_meas = float(l1_distance(WFh, step_average(WFh, QF)))
    stages.append(Stage("C:approximate-coloring", c_meas, delta, "L1"))
    Z_G = discolor_kernel(Zh_G, k)
    P = CellPartition.discrete(b)
    res = coloring_lemma(Z_G, Zh_G, VG, math.inf, k, P=P, check=False)
    pre, d_cert = _certified_cut(Z_G, VG, P, guard)
    post, d_cert2 = _certified_cut(Zh_G, res.kernel, P, guard)
    stages.append(Stage("D0:sample-vs-G", pre, delta, d_cert, chained=False))
    stages.append(Stage("D:coloring-lemma", post, k * pre, d_cert2))
    e_meas = float(_uniform_mass(Z_G, VG))
    stages.append(Stage("E:copy-and-randomize", e_meas, delta, "mass", chained=False))
    # F: back to W_G on vertex classes
    weights_n = [1.0 / n] * n
    VGh_n = _take(res.kernel, lab_G, weights_n)
    VG_n = _take(VG, lab_G, weights_n)
    back = coloring_lemma(VG_n, VGh_n, WG, 0, k, check=False)
    WGh = back.kernel
    f_meas = float(l1_distance(VGh_n, WGh))
    stages.append(Stage("F:coloring-lemma-back", f_meas, delta, "L1"))
    # G: rounding
    rng = np.random.default_rng(seed)
    second = []
    for s, a in zip(slots(n, r), G.colors):
        p = np.array([float(WGh.values[(a - 1) * k + bb][s]) for bb in range(k)])
        p = p / p.sum() if p.sum() > 0 else np.full(k, 1.0 / k)
        second.append(int(rng.choice(k, p=p)) + 1)
    Gh = Coloring.from_pairs(G, second, k)
    WR = graph_to_kernel(Gh.refined)
    g_meas = _channel_upper([WGh.values[c] - WR.values[c] for c in range(WGh.k)], WR.weights)
    stages.append(Stage("G:rounding", g_meas, delta, "t*(K_r^2)^(1/2^r)"))
    total = sum(s.measured for s in stages if s.chained)
    budget = sum(s.allowed for s in stages if s.chained)
    return TransferResult(Gh, stages, total, budget)


def _certified_cut(U, V, Q, guard):
    """Exact cut-(*,Q) distance, or the L1 distance (an upper bound) when enumeration is too large."""
    try:
        return float(cut_distance(U, V, Q=Q, mode="exact", guard=guard)), "exact cut-*" + (",P" if Q else "")
    except EnumerationTooLarge:
        return float(l1_distance(U, V)), "L1 (upper bound)"


def _relay(Zh: ColoredStepKernel, present, VG: ColoredStepKernel, k: int):
    """Sample step kernel placed on G's classes and measures."""
    b = VG.t
    pos = {x: j for j, x in enumerate(present)}
    vals = np.empty((Zh.k,) + (b,) * Zh.r, dtype=object if Zh.exact else float)
    loop = np.empty((b,) * Zh.r, dtype=vals.dtype)
    for cell in itertools.product(range(b), repeat=Zh.r):
        if all(c in pos for c in cell):
            src = tuple(pos[c] for c in cell)
            vals[(slice(None),) + cell] = Zh.values[(slice(None),) + src]
            loop[cell] = Zh.loop[src]
        else:
            for a in range(VG.k):
                for bb in range(k):
                    vals[(a * k + bb,) + cell] = VG.values[(a,) + cell] / k
            loop[cell] = VG.loop[cell]
    return ColoredStepKernel(VG.weights, vals, loop)


def _uniform_mass(U: ColoredStepKernel, V: ColoredStepKernel):
    """Mass of V on (cell, color) pairs to which U gives probability zero."""
    from .kernels import mass_tensor

    tot = 0
    for a in range(U.k):
        Z = np.asarray(U.values[a] == 0)
        if Z.any():
            tot += mass_tensor(V.values[a], V.weights)[Z].sum()
    return tot


# -- edit distance ----------------------------------------------------------------------

def _toggle(G: Hypergraph, S) -> Hypergraph:
    E = set(G.edges) ^ set(S)
    return Hypergraph(G.r, G.n, tuple(sorted(E)))


@dataclass
class EditResult:
    value: object  # exact normalized distance, or None when only bracketed
    lower: object
    upper: object
    edits: tuple | None
    radius: int


def edit_distance_to_property(G: Hypergraph, P: Callable, mode: str = "exact", c=None, radius=None,
                              q=None, seed=None, guard=None):
    """Edit distance |edits| / n^r from G to the property P (a membership oracle).

    Exact mode searches edit sets of growing size up to ``radius`` (all
    slots by default); when the cap is hit it returns the bracket
    [(radius+1)/n^r, 1].  Tester mode samples G(q, G) and answers whether
    the exact distance of the sample is below c.
    """
    if mode == "tester":
        if c is None or q is None:
            raise ValueError("tester mode needs c and q")
        F = sample_q(G, q, seed=seed)
        res = edit_distance_to_property(F, P, mode="exact", guard=guard)
        return res.value < Fraction(str(c)) if not isinstance(c, Fraction) else res.value < c
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    sl = slots(G.n, G.r)
    cap = len(sl) if radius is None else min(radius, len(sl))
    g = limits.guard(guard)
    norm = G.n**G.r
    work = 0
    for d in range(cap + 1):
        work += math.comb(len(sl), d)
        if work > g:
            raise EnumerationTooLarge("edit sets", work, g)
        for S in itertools.combinations(sl, d):
            if P(_toggle(G, S)):
                v = Fraction(d, norm)
                return EditResult(v, v, v, S, d)
    return EditResult(None, Fraction(cap + 1, norm), Fraction(len(sl), norm), None, cap)


def edit_witness(P: Callable, c) -> WitnessParameter:
    """k = 2 witness for d_1(., P) < c: slots colored (1,2) or (2,1) are edits.

    Value 1 when the edited graph is in P and fewer than c n^r slots are
    edited, else 0; its maximum over colorings is the indicator of d_1 < c.
    """
    c = Fraction(str(c)) if isinstance(c, float) else Fraction(c)

    def ev(refined: ColoredHypergraph):
        sl = slots(refined.n, refined.r)
        flips = [s for s, col in zip(sl, refined.colors) if col in (encode(1, 2, 2), encode(2, 1, 2))]
        edges = [s for s, col in zip(sl, refined.colors) if decode(col, 2)[0] == 1]
        H = _toggle(Hypergraph(refined.r, refined.n, tuple(edges)), flips)
        return int(Fraction(len(flips), refined.n**refined.r) < c and bool(P(H)))

    return WitnessParameter("edit", 2, ev, params={"c": str(c)})


def triangle_free(G: Hypergraph) -> bool:
    A = G.adjacency
    return not np.trace(np.linalg.matrix_power(A.astype(np.int64), 3))


def edgeless(G: Hypergraph) -> bool:
    return G.m == 0


PROPERTIES = {"edgeless": edgeless, "triangle-free": triangle_free}


# -- prefix-quantified formulas -----------------------------------------------------------

_OPS = {"and", "or", "not", "implies", "iff", "=", "adj", "true", "false"}


def parse_sexpr(text: str):
    """Parse a parenthesized s-expression into nested tuples of strings."""
    toks = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(toks):
            raise ValueError("unexpected end of formula")
        tok = toks[pos]
        pos += 1
        if tok == "(":
            out = []
            while pos < len(toks) and toks[pos] != ")":
                out.append(read())
            if pos >= len(toks):
                raise ValueError("missing closing parenthesis")
            pos += 1
            return tuple(out)
        if tok == ")":
            raise ValueError("unexpected closing parenthesis")
        return tok

    expr = read()
    if pos != len(toks):
        raise ValueError("trailing tokens after formula")
    return expr


@dataclass(frozen=True)
class FOFormula:
    """exists u.. forall v.. matrix, with symmetric predicate symbols of given arities.

    The matrix is an s-expression over (and ..), (or ..), (not x),
    (implies x y), (iff x y), (= x y), (adj x1 .. xr), (L x1 .. xa) for a
    declared predicate L, and the constants true / false.
    """

    exists: tuple
    forall: tuple
    matrix: object
    predicates: tuple = ()  # ((name, arity), ...)

    def __post_init__(self):
        m = self.matrix if not isinstance(self.matrix, str) or self.matrix in ("true", "false") \
            else parse_sexpr(self.matrix)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "exists", tuple(self.exists))
        object.__setattr__(self, "forall", tuple(self.forall))
        object.__setattr__(self, "predicates", tuple((str(a), int(b)) for a, b in self.predicates))
        names = set(self.exists) | set(self.forall)
        if len(names) != len(self.exists) + len(self.forall):
            raise ValueError("variables must be distinct")
        preds = dict(self.predicates)
        for p in preds:
            if p in _OPS:
                raise ValueError(f"predicate name {p!r} is reserved")
        self._check(self.matrix, names, preds)

    @classmethod
    def parse(cls, exists, forall, matrix: str, predicates=()):
        return cls(tuple(exists), tuple(forall), parse_sexpr(matrix) if matrix.strip().startswith("(")
                   else matrix.strip(), tuple(predicates))

    def _check(self, e, names, preds):
        if isinstance(e, str):
            if e not in ("true", "false"):
                raise ValueError(f"bare symbol {e!r} in the matrix")
            return
        if not e:
            raise ValueError("empty expression")
        op, args = e[0], e[1:]
        if op in ("and", "or", "not", "implies", "iff"):
            for a in args:
                self._check(a, names, preds)
            if op == "not" and len(args) != 1 or op in ("implies", "iff") and len(args) != 2:
                raise ValueError(f"wrong number of arguments to {op}")
            return
        if op in ("=", "adj") or op in preds:
            for a in args:
                if a not in names:
                    raise ValueError(f"unknown variable {a!r}")
            if op == "=" and len(args) != 2:
                raise ValueError("= takes two variables")
            if op in preds and len(args) != preds[op]:
                raise ValueError(f"{op} takes {preds[op]} arguments")
            return
        raise ValueError(f"unknown symbol {op!r}")


def _eval(e, env, adj_set, r, rel):
    if isinstance(e, str):
        return e == "true"
    op, args = e[0], e[1:]
    if op == "and":
        return all(_eval(a, env, adj_set, r, rel) for a in args)
    if op == "or":
        return any(_eval(a, env, adj_set, r, rel) for a in args)
    if op == "not":
        return not _eval(args[0], env, adj_set, r, rel)
    if op == "implies":
        return (not _eval(args[0], env, adj_set, r, rel)) or _eval(args[1], env, adj_set, r, rel)
    if op == "iff":
        return _eval(args[0], env, adj_set, r, rel) == _eval(args[1], env, adj_set, r, rel)
    vals = tuple(env[a] for a in args)
    if op == "=":
        return vals[0] == vals[1]
    if op == "adj":
        return len(vals) == r and tuple(sorted(vals)) in adj_set
    return tuple(sorted(vals)) in rel[op]


def fo_property_check(G: Hypergraph, phi: FOFormula, relations=None, mode: str = "fixed-relations",
                      guard=None) -> bool:
    """Brute-force truth of phi on G.

    ``relations`` maps predicate names to sets of sorted vertex tuples
    (symmetric predicates).  In nd mode every assignment of predicate
    tables over vertex multisets is tried.
    """
    g = limits.guard(guard)
    n = G.n
    l, k = len(phi.exists), len(phi.forall)
    if n ** (l + k) > g:
        raise EnumerationTooLarge("variable assignments", n ** (l + k), g)
    adj_set = set(G.edges)
    if mode == "nd":
        keys = [(name, list(itertools.combinations_with_replacement(range(n), a))) for name, a in phi.predicates]
        total = 2 ** sum(len(c) for _, c in keys)
        if total * n ** (l + k) > g:
            raise EnumerationTooLarge("predicate tables", total, g)
        for bits in itertools.product((0, 1), repeat=sum(len(c) for _, c in keys)):
            rel, i = {}, 0
            for name, cells in keys:
                rel[name] = {c for c, b in zip(cells, bits[i:i + len(cells)]) if b}
                i += len(cells)
            if _holds(phi, n, adj_set, G.r, rel):
                return True
        return False
    if mode != "fixed-relations":
        raise ValueError(f"unknown mode {mode!r}")
    rel = {name: {tuple(sorted(t)) for t in (relations or {}).get(name, ())} for name, _ in phi.predicates}
    return _holds(phi, n, adj_set, G.r, rel)


def _holds(phi, n, adj_set, r, rel):
    for us in itertools.product(range(n), repeat=len(phi.exists)):
        env = dict(zip(phi.exists, us))
        ok = True
        for vs in itertools.product(range(n), repeat=len(phi.forall)):
            env.update(zip(phi.forall, vs))
            if not _eval(phi.matrix, env, adj_set, r, rel):
                ok = False
                break
        if ok:
            return True
    return False
