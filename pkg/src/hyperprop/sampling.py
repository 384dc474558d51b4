"""Concentration of sampled densities, exact total variation, the counting
inequality with an explicit maximal coupling, and sampled cut norms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._contract import hom_sum
from .core import Hypergraph
from .errors import IncompatibleKernels, RangeError
from .kernels import (IOTA, ColoredStepKernel, StepKernel, exact_sample_distribution, mass_tensor,
                      tstar_kernel)
from .norms import cut_distance, cut_star_norm, probe_sup
from .towers import q_cut


def trial_seeds(seed, trials):
    """Per-trial seeds: SeedSequence(seed).spawn(trials)."""
    return np.random.SeedSequence(seed).spawn(trials)


def binomial_se(p, n):
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n else 0.0


def weighted_sample(U: StepKernel, q: int, rng):
    """Weighted r-array of G(q,U): U at the sampled classes, zero on repeated indices.

    Returns (classes, array).
    """
    rng = np.random.default_rng(rng)
    p = np.asarray(U.weights, dtype=float)
    cls = rng.choice(U.t, size=q, p=p / p.sum())
    vals = np.asarray(U.values, dtype=float)
    A = vals[np.ix_(*([cls] * U.r))].copy()
    # zero every tuple with a repeated index
    idx = np.indices((q,) * U.r)
    rep = np.zeros((q,) * U.r, dtype=bool)
    for i in range(U.r):
        for j in range(i + 1, U.r):
            rep |= idx[i] == idx[j]
    A[rep] = 0.0
    return cls, A


def tstar_array(F: Hypergraph, A: np.ndarray) -> float:
    """t*(F, A) for a weighted r-array A on q vertices (uniform weights)."""
    q = A.shape[0]
    if not F.edges:
        return 1.0
    return float(hom_sum(F.n, sorted(F.edges), A)) / q**F.n


@dataclass
class Report:
    name: str
    passed: bool
    data: dict = field(default_factory=dict)

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, **self.data}


def concentration_experiment(U: StepKernel, F: Hypergraph, q: int, delta: float, trials: int, seed=0):
    """Frequency of |t*(F,U) - t*(F,G(q,U))| >= delta against 2 exp(-delta^2 q / (2|V(F)|^2))."""
    if delta <= 0 or trials < 1:
        raise ValueError("need delta > 0 and trials >= 1")
    exact = float(tstar_kernel(F, U))
    devs = np.empty(trials)
    for i, ss in enumerate(trial_seeds(seed, trials)):
        _, A = weighted_sample(U, q, np.random.default_rng(ss))
        devs[i] = abs(exact - tstar_array(F, A))
    hits = int((devs >= delta).sum())
    rate = hits / trials
    se = binomial_se(rate, trials)
    bound = 2 * math.exp(-delta**2 * q / (2 * F.n**2))
    return Report("concentration", rate <= bound + 3 * se, {
        "tstar": exact, "q": q, "delta": delta, "trials": trials, "seed": seed,
        "empirical_rate": rate, "stderr": se, "bound": bound, "vacuous": bound >= 1,
        "max_deviation": float(devs.max()), "mean_deviation": float(devs.mean()),
        "deviations": devs,
    })


def _universe(mu):
    keys = [k for k in mu if k is not IOTA and k != IOTA]
    shapes = {(g.r, g.n, g.k) for g in keys}
    return shapes


def tv_distance(mu1: dict, mu2: dict):
    """Half the L1 distance between two laws on the same finite universe."""
    s1, s2 = _universe(mu1), _universe(mu2)
    if s1 != s2 or len(s1) > 1:
        raise IncompatibleKernels(f"different universes {s1} vs {s2}")
    keys = set(mu1) | set(mu2)
    zero = Fraction(0)
    total = sum(abs(mu1.get(x, zero) - mu2.get(x, zero)) for x in keys)
    return total / 2


def maximal_coupling(mu1: dict, mu2: dict):
    """Coupling with P(X != Y) = d_tv: diagonal min(mu1, mu2), residuals spread proportionally."""
    keys = sorted(set(mu1) | set(mu2), key=_atom_key)
    zero = Fraction(0)
    d = tv_distance(mu1, mu2)
    pi = {}
    res1, res2 = {}, {}
    for x in keys:
        a, b = mu1.get(x, zero), mu2.get(x, zero)
        m = min(a, b)
        if m:
            pi[(x, x)] = m
        if a - m:
            res1[x] = a - m
        if b - m:
            res2[x] = b - m
    if d:
        for x, a in res1.items():
            for y, b in res2.items():
                pi[(x, y)] = pi.get((x, y), zero) + a * b / d
    return pi


def _atom_key(x):
    if x is IOTA or x == IOTA:
        return (1, ())
    return (0, x.colors)


def coupling_check(pi: dict, mu1: dict, mu2: dict):
    """Marginals reproduce mu1, mu2 and the mismatch mass."""
    zero = Fraction(0)
    m1, m2, off = {}, {}, zero
    for (x, y), p in pi.items():
        m1[x] = m1.get(x, zero) + p
        m2[y] = m2.get(y, zero) + p
        if x != y:
            off += p
    ok1 = all(m1.get(x, zero) == mu1.get(x, zero) for x in set(mu1) | set(m1))
    ok2 = all(m2.get(x, zero) == mu2.get(x, zero) for x in set(mu2) | set(m2))
    return ok1 and ok2, off


def counting_lemma_check(U: ColoredStepKernel, W: ColoredStepKernel, q: int, guard=None):
    """d_tv(mu(q,W), mu(q,U)) <= k^(q^r) q^r / (2 r!) * d(U,W), both sides exact."""
    if U.k != W.k or U.r != W.r:
        raise IncompatibleKernels("kernels must share r and k")
    r, k = U.r, U.k
    muU = exact_sample_distribution(U, q, guard=guard)
    muW = exact_sample_distribution(W, q, guard=guard)
    tv = tv_distance(muW, muU)
    d = cut_distance(U, W, guard=guard)
    const = Fraction(k ** (q**r) * q**r, 2 * math.factorial(r))
    rhs = const * d
    pi = maximal_coupling(muW, muU)
    ok, off = coupling_check(pi, muW, muU)
    return Report("counting_lemma", bool(tv <= rhs) and ok and off == tv, {
        "tv": tv, "cut_distance": d, "constant": const, "rhs": rhs, "vacuous": rhs >= 1,
        "coupling_marginals_ok": ok, "coupling_mismatch": off, "coupling_support": len(pi),
    })


def sampled_kernel(U: StepKernel, counts) -> tuple:
    """Class-merged kernel of a weighted sample plus the L1 mass of its loop tuples.

    The sample has counts[c] vertices in class c; merging equal-class vertices
    gives a step kernel on the occupied classes with weights counts/q.  The
    sample itself differs from it only on tuples with a repeated vertex, whose
    L1 mass is returned as the correction term.
    """
    counts = np.asarray(counts)
    q = int(counts.sum())
    occ = np.flatnonzero(counts)
    w = tuple(Fraction(int(counts[c]), q) for c in occ)
    vals = U.values[np.ix_(*([occ] * U.r))]
    if not U.exact:
        w = tuple(float(x) for x in w)
    K = StepKernel(w, vals)
    # L1 of the repeated-index part: integral of |U| over tuples sharing a vertex
    absK = np.abs(np.asarray(vals, dtype=float))
    full = float(mass_tensor(absK, [float(x) for x in w]).sum())
    inj = _injective_mass(absK, counts[occ], U.r)
    return K, max(full - inj, 0.0)


def _injective_mass(A, n, r):
    """sum over injective r-tuples of sample vertices of A[classes] / q^r."""
    q = int(n.sum())
    from ._contract import set_partitions

    total = 0.0
    # Moebius over set partitions of the r coordinates
    for blocks in set_partitions(range(r)):
        coef = 1
        for b in blocks:
            coef *= (-1) ** (len(b) - 1) * math.factorial(len(b) - 1)
        letters = "abcdefghij"
        sub = "".join(letters[[i for i, b in enumerate(blocks) if v in b][0]] for v in range(r))
        D = np.einsum(f"{sub}->{letters[:len(blocks)]}", A) if len(blocks) < r else A
        ops = [D] + [n.astype(float)] * len(blocks)
        expr = letters[:len(blocks)] + "," + ",".join(letters[i] for i in range(len(blocks))) + "->"
        total += coef * float(np.einsum(expr, *ops))
    return total / q**r


def sampled_cutnorm_check(U_list, eps, t, q, trials, seed=0, max_blocks=None, guard=None):
    """Sampled version of the small-cut-norm transfer.

    Hypothesis: sum ||U_l||_cut* <= (eps/(k t^r))^(2^r) 2^(-r-1), checked with
    exact norms.  Each trial samples one vertex sequence, forms the weighted
    samples of all U_l, and evaluates the sup over class-aligned partitions
    with at most t blocks of the summed cut-(*,Q) norms.  The value is
    bracketed: the merged-class kernel is evaluated exactly and the loop
    tuples contribute at most their L1 mass.
    """
    k = len(U_list)
    r = U_list[0].r
    w = U_list[0].weights
    if any(tuple(U.weights) != tuple(w) for U in U_list):
        raise IncompatibleKernels("kernels must share their classes")
    if any(U.sup_norm() > 1 for U in U_list):
        raise RangeError("kernels must take values in [-1, 1]")
    lhs = sum(cut_star_norm(U, guard=guard) for U in U_list)
    thr = (Fraction(str(eps)) / (k * t**r)) ** (2**r) / 2 ** (r + 1)
    qc = q_cut(r, k, eps, t)
    data = {"hypothesis_lhs": lhs, "hypothesis_threshold": thr, "q": q, "q_cut": qc.describe(),
            "below_guaranteed_regime": bool(qc > q), "trials": trials, "seed": seed,
            "probe_family": f"class-aligned partitions with <= {max_blocks or t} blocks"}
    if lhs > thr:
        return Report("sampled_cutnorm", True, {**data, "outcome": "hypothesis unmet"})
    p = np.asarray(w, dtype=float)
    p = p / p.sum()
    upper, lower = [], []
    for ss in trial_seeds(seed, trials):
        rng = np.random.default_rng(ss)
        cls = rng.choice(len(w), size=q, p=p)
        counts = np.bincount(cls, minlength=len(w))
        chans, corr = [], 0.0
        for U in U_list:
            K, c = sampled_kernel(U, counts)
            chans.append(K.values)
            corr += c
        pr = probe_sup(chans, K.weights, max_blocks=max_blocks or t, guard=guard)
        v = float(pr.value)
        up = v if pr.certificate == "exact" else float(pr.upper)
        upper.append(up + corr)
        lower.append(max(v - corr, 0.0))
    upper, lower = np.asarray(upper), np.asarray(lower)
    fail_upper = float((upper > eps).mean())
    fail_lower = float((lower > eps).mean())
    se = binomial_se(fail_upper, trials)
    return Report("sampled_cutnorm", fail_upper <= eps + 3 * se, {
        **data, "outcome": "evaluated", "exceed_rate_upper": fail_upper, "exceed_rate_lower": fail_lower,
        "stderr": se, "guarantee": 1 - eps, "pass_rate": 1 - fail_upper,
        "max_upper": float(upper.max()), "max_lower": float(lower.max()),
    })


def eq2_check(G, q: int, guard=None):
    """Exact d_tv(mu(q, W_G), mu(q, G)) against k^(q^r) q^2 / n.

    The kernel law is taken without conditioning, so the loop mass appears
    as an extra atom; the conditioned law coincides with mu(q, G) exactly.
    """
    from .kernels import finite_sample_distribution, graph_to_kernel

    G = G.to_colored() if isinstance(G, Hypergraph) else G
    W = graph_to_kernel(G)
    muG = finite_sample_distribution(G, q, guard=guard)
    muW = exact_sample_distribution(W, q, include_iota=True, guard=guard)
    muWc = exact_sample_distribution(W, q, guard=guard)
    muG_full = dict(muG)
    muG_full[IOTA] = Fraction(0)
    tv = tv_distance(muW, muG_full)
    tvc = tv_distance(muWc, muG)
    bound = Fraction(G.k ** (q**G.r) * q * q, G.n)
    return Report("eq2", tv <= bound and tvc <= bound, {"tv": tv, "tv_conditioned": tvc, "bound": bound})


def eq1_check(G, q: int, guard=None):
    """max over F on q vertices of |t(F,G) - t(F,W_G)| against C(q,2)/(n - C(q,2))."""
    from .core import all_colored, induced_density
    from .kernels import graph_to_kernel, t_density_kernel

    G = G.to_colored() if isinstance(G, Hypergraph) else G
    W = graph_to_kernel(G)
    c = math.comb(q, 2)
    bound = Fraction(c, G.n - c) if G.n > c else None
    worst = Fraction(0)
    for F in all_colored(G.r, q, G.k):
        worst = max(worst, abs(induced_density(F, G, guard=guard) - t_density_kernel(F, W, guard=guard)))
    ok = bound is None or worst <= bound
    return Report("eq1", ok, {"max_gap": worst, "bound": bound, "vacuous": bound is None})
