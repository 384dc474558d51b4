"""Ground state energies, generalized energies over (r-1)-set partitions,
and density-tensor partition problems."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import limits
from ._contract import set_partitions
from .core import ColoredHypergraph, Hypergraph, _as_colored, slots
from .errors import EnumerationTooLarge, RangeError
from .kernels import StepKernel, mass_tensor
from .sampling import Report, binomial_se, trial_seeds


@dataclass(frozen=True, eq=False)
class RealArray:
    """Real r-array of side s."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim < 1 or len(set(a.shape)) != 1:
            raise ValueError("a real array must be cubical")
        if a.dtype.kind not in "iuf" and a.dtype != object:
            raise ValueError("non-numeric entries")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def r(self):
        return self.entries.ndim

    @property
    def s(self):
        return self.entries.shape[0]

    @property
    def exact(self):
        return self.entries.dtype != float

    def sup(self):
        return max(abs(x) for x in self.entries.flat)

    def check_bounded(self):
        if self.sup() > 1:
            raise RangeError("array entries must lie in [-1, 1]")
        return self

    def __neg__(self):
        return RealArray(-self.entries)

    def scaled(self, a):
        return RealArray(self.entries * a)

    def permuted(self, perm):
        """Relabel indices: new[i..] = old[perm[i]..]."""
        out = self.entries
        for ax in range(self.r):
            out = np.take(out, perm, axis=ax)
        return RealArray(out)


def _J(J):
    return J if isinstance(J, RealArray) else RealArray(np.asarray(J))


def _edge_array(G: Hypergraph):
    E = np.array(sorted(G.edges), dtype=np.int64).reshape(-1, G.r)
    return E


def _energy_batch(A, E, Jv, perms):
    """Sum over edges and their orderings of J[a(u_1),..,a(u_r)] for each row of A."""
    tot = 0
    for p in perms:
        idx = tuple(A[:, E[:, i]] for i in p)
        tot = tot + Jv[idx].sum(axis=1)
    return tot


def gse_energy(G: Hypergraph, J, labels):
    """Energy of one vertex assignment: (1/n^r) sum over ordered edge tuples of J at the labels."""
    J = _J(J)
    E = _edge_array(G)
    A = np.asarray(labels, dtype=np.int64)[None, :]
    perms = list(itertools.permutations(range(G.r)))
    v = _energy_batch(A, E, J.entries, perms)[0] if len(E) else 0
    return _norm(v, G.n**G.r, J.exact)


def _norm(v, d, exact):
    return Fraction(v) / d if exact else float(v) / d


def gse_graph(G: Hypergraph, J, mode: str = "exact", guard=None, seed=None, restarts=None):
    """max over vertex assignments into s classes of the normalized ordered-tuple energy.

    Returns (value, labels).  Exact mode enumerates s^n assignments
    (lexicographically first optimum); local mode runs single-vertex hill
    climbing with restarts and returns a lower bound.
    """
    J = _J(J)
    if J.r != G.r:
        raise ValueError("array arity differs from the hypergraph")
    n, s = G.n, J.s
    E = _edge_array(G)
    perms = list(itertools.permutations(range(G.r)))
    Jv = J.entries
    if mode == "exact":
        g = limits.guard(guard)
        if s**n > g:
            raise EnumerationTooLarge("vertex assignments", s**n, g)
        best, arg = None, None
        chunk = 1 << 14
        it = itertools.product(range(s), repeat=n)
        while True:
            block = list(itertools.islice(it, chunk))
            if not block:
                break
            A = np.array(block, dtype=np.int64).reshape(-1, n)
            vals = _energy_batch(A, E, Jv, perms) if len(E) else np.zeros(len(A), dtype=Jv.dtype)
            i = int(np.argmax(vals))
            if best is None or vals[i] > best:
                best, arg = vals[i], tuple(int(x) for x in A[i])
        return _norm(best, n**G.r, J.exact), arg
    if mode != "local":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    restarts = limits.current().ascent_restarts if restarts is None else restarts
    Jf = np.asarray(Jv, dtype=float)
    best, arg = -math.inf, None
    for _ in range(restarts + 1):
        lab = rng.integers(0, s, size=n)
        cur = float(_energy_batch(lab[None], E, Jf, perms)[0]) if len(E) else 0.0
        improved = True
        while improved:
            improved = False
            for v in rng.permutation(n):
                old = lab[v]
                cand = np.repeat(lab[None], s, axis=0)
                cand[:, v] = np.arange(s)
                vals = _energy_batch(cand, E, Jf, perms) if len(E) else np.zeros(s)
                j = int(np.argmax(vals))
                if vals[j] > cur + 1e-12 and j != old:
                    lab[v] = j
                    cur = float(vals[j])
                    improved = True
        if cur > best:
            best, arg = cur, tuple(int(x) for x in lab)
    return best / n**G.r, arg


def _kernel_energy(M, P, Jv):
    """sum_c M[c] sum_j prod_i P[c_i, j_i] J[j]."""
    out = M
    for _ in range(M.ndim):
        out = np.tensordot(out, P, axes=([0], [0]))
    return (out * Jv).sum()


def gse_kernel(U: StepKernel, J, mode: str = "fractional", seed=None, grid: int = 40, guard=None):
    """Gamma(U,J) over class-constant (fractional) partitions.

    The integral factors over classes, so a fractional partition of [0,1]
    enters only through its per-class mixture p_c in the s-simplex.  Vertex
    mode enumerates 0/1 rows exactly; fractional mode starts from the best
    vertex solution and improves it by coordinate search over simplex grids
    (heuristic certificate).  Returns (value, P, certificate).
    """
    J = _J(J)
    if J.r != U.r:
        raise ValueError("array arity differs from the kernel")
    t, s = U.t, J.s
    Jv = np.asarray(J.entries, dtype=float)
    M = np.asarray(mass_tensor(U.values, U.weights), dtype=float)
    g = limits.guard(guard)
    if s**t > g:
        raise EnumerationTooLarge("class assignments", s**t, g)
    best, bestP = -math.inf, None
    eye = np.eye(s)
    for lab in itertools.product(range(s), repeat=t):
        P = eye[list(lab)]
        v = _kernel_energy(M, P, Jv)
        if v > best + 1e-15:
            best, bestP = v, P
    if mode == "vertex" or s == 1:
        return float(best), bestP, "exact"
    # simplex grid for a single row
    pts = np.array([c for c in itertools.product(range(grid + 1), repeat=s - 1) if sum(c) <= grid], dtype=float)
    pts = np.hstack([pts, grid - pts.sum(axis=1, keepdims=True)]) / grid
    rng = np.random.default_rng(seed)
    starts = [bestP.copy()] + [rng.dirichlet(np.ones(s), size=t) for _ in range(4)]
    for P in starts:
        cur = _kernel_energy(M, P, Jv)
        for _ in range(50):
            moved = False
            for c in range(t):
                trial = np.repeat(P[None], len(pts), axis=0)
                trial[:, c, :] = pts
                vals = np.array([_kernel_energy(M, T, Jv) for T in trial])
                j = int(np.argmax(vals))
                if vals[j] > cur + 1e-13:
                    P, cur, moved = trial[j], vals[j], True
            if not moved:
                break
        if cur > best:
            best, bestP = cur, P
    return float(best), bestP, "heuristic"


def _compositions(n, s):
    """All ways to write n as an ordered sum of s nonnegative integers."""
    for bars in itertools.combinations(range(n + s - 1), s - 1):
        prev, out = -1, []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(n + s - 2 - prev)
        yield out


def sample_gse(U: StepKernel, J, counts, guard=None):
    """Integer-assignment GSE of the weighted sample with the given class counts.

    Vertices of one class are interchangeable, so an assignment is fixed by
    how many vertices of each class go to each part.  The energy counts
    injective r-tuples (the sample is zero on repeated vertices), evaluated
    in closed form by Moebius inversion over coordinate coincidences.
    """
    J = _J(J)
    counts = np.asarray(counts, dtype=np.int64)
    t, s, r = U.t, J.s, U.r
    q = int(counts.sum())
    per_class = [list(_compositions(int(nc), s)) for nc in counts]
    total = math.prod(len(x) for x in per_class)
    g = limits.guard(guard)
    if total > g:
        raise EnumerationTooLarge("count matrices", total, g)
    # joint cell tensor T[(c1,j1),...] = U[c] J[j]
    Uv = np.asarray(U.values, dtype=float)
    Jv = np.asarray(J.entries, dtype=float)
    T = np.multiply.outer(Uv, Jv)  # axes c1..cr, j1..jr
    order = [x for i in range(r) for x in (i, r + i)]
    T = T.transpose(order).reshape((t * s,) * r)
    comps = [np.array(c, dtype=float) for c in per_class]
    shape = [len(c) for c in comps]
    letters = "abcdefgh"
    # vals[i_1..i_t] over the grid of per-class compositions; each term couples
    # at most r classes, so it is a small table broadcast into the grid
    vals = np.zeros(shape)
    for blocks in set_partitions(range(r)):
        coef = 1
        for b in blocks:
            coef *= (-1) ** (len(b) - 1) * math.factorial(len(b) - 1)
        sub = "".join(letters[[i for i, b in enumerate(blocks) if v in b][0]] for v in range(r))
        m = len(blocks)
        D = np.einsum(f"{sub}->{letters[:m]}", T).reshape((t, s) * m)
        for cls in itertools.product(range(t), repeat=m):
            distinct = sorted(set(cls))
            idx = "".join("ijklmnop"[distinct.index(c)] for c in cls)
            expr = ",".join(f"{idx[p]}{letters[p]}" for p in range(m))
            block = D[tuple(x for c in cls for x in (c, slice(None)))]
            tab = np.einsum(f"{letters[:m]},{expr}->{''.join(sorted(set(idx)))}", block,
                            *[comps[c] for c in cls])
            vals += coef * tab.reshape([shape[c] if c in distinct else 1 for c in range(t)])
    i = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best = np.array([comps[c][i[c]] for c in range(t)])
    return float(vals[i]) / q**r, best


def gse_sampling_check(U: StepKernel, J, q: int, delta: float, trials: int, seed=0, guard=None):
    """Frequency of |Gamma(U,J) - hat Gamma(G(q,U),J)| > delta ||U||_inf vs 2 exp(-delta^2 q / (8 r^2))."""
    J = _J(J)
    r, s = U.r, J.s
    gamma, _, cert = gse_kernel(U, J, mode="fractional", seed=0)
    sup = float(U.sup_norm())
    p = np.asarray(U.weights, dtype=float)
    p = p / p.sum()
    devs = np.empty(trials)
    for i, ss in enumerate(trial_seeds(seed, trials)):
        rng = np.random.default_rng(ss)
        counts = np.bincount(rng.choice(U.t, size=q, p=p), minlength=U.t)
        devs[i] = abs(gamma - sample_gse(U, J, counts, guard=guard)[0])
    hits = int((devs > delta * sup).sum()) if sup > 0 else 0
    rate = hits / trials
    se = binomial_se(rate, trials)
    bound = 2 * math.exp(-delta**2 * q / (8 * r * r))
    theta = 2 ** (r + 10) * s**r * r / delta
    return Report("gse_sampling", rate <= bound + 3 * se, {
        "gamma": gamma, "gamma_certificate": cert, "q": q, "delta": delta, "trials": trials, "seed": seed,
        "empirical_rate": rate, "stderr": se, "bound": bound,
        "guaranteed_regime": bool(q >= theta**4 * math.log(theta)), "max_deviation": float(devs.max()),
        "deviations": devs,
    })


# -- generalized energies over (r-1)-set partitions --------------------------------

def _projection_index(n, r):
    """For every ordered edge tuple position j, the slot index of the (r-1)-set omitting j."""
    from .core import slot_index

    idx = slot_index(n, r - 1)
    return idx


def ggse_energy(H, Js, labels):
    """Energy of one partition of the (r-1)-subsets (labels in lexicographic slot order)."""
    H = _as_colored(H)
    return _ggse_eval(H, [_J(j) for j in Js], np.asarray(labels, dtype=np.int64)[None])[0]


def _ggse_terms(H: ColoredHypergraph, Js):
    """Per color: array of ordered edge tuples mapped to (r-1)-slot indices of the omitted-j subsets."""
    r, n = H.r, H.n
    idx = _projection_index(n, r)
    terms = []
    for a, J in enumerate(Js, start=1):
        E = [e for e, c in zip(slots(n, r), H.colors) if c == a]
        rows = []
        for e in E:
            for p in itertools.permutations(e):
                rows.append([idx[tuple(sorted(p[:j] + p[j + 1:]))] for j in range(r)])
        terms.append((np.array(rows, dtype=np.int64).reshape(-1, r), J))
    return terms


def _ggse_eval(H, Js, L, terms=None):
    terms = terms or _ggse_terms(H, Js)
    exact = all(J.exact for J in Js)
    tot = 0
    for rows, J in terms:
        if len(rows):
            tot = tot + J.entries[tuple(L[:, rows[:, j]] for j in range(H.r))].sum(axis=1)
    if isinstance(tot, int):
        tot = np.zeros(len(L), dtype=object if exact else float)
    d = H.n**H.r
    return [Fraction(v) / d if exact else float(v) / d for v in tot]


def ggse(H, Js, t: int | None = None, mode: str = "exact", guard=None, seed=None):
    """Generalized GSE: max over partitions of the (r-1)-subsets into t classes.

    ``Js`` has one array per color (a single array is accepted for one
    color).  Returns (value, labels over (r-1)-subsets in lexicographic order).
    """
    H = _as_colored(H)
    if isinstance(Js, (RealArray, np.ndarray)):
        Js = [Js]
    Js = [_J(j).check_bounded() for j in Js]
    if len(Js) != H.k:
        raise ValueError(f"need {H.k} arrays, got {len(Js)}")
    t = Js[0].s if t is None else t
    r, n = H.r, H.n
    m = math.comb(n, r - 1)
    terms = _ggse_terms(H, Js)
    if mode == "exact":
        g = limits.guard(guard)
        if t**m > g:
            raise EnumerationTooLarge("(r-1)-set partitions", t**m, g)
        best, arg = None, None
        it = itertools.product(range(t), repeat=m)
        while True:
            block = list(itertools.islice(it, 1 << 13))
            if not block:
                break
            L = np.array(block, dtype=np.int64).reshape(-1, m)
            vals = _ggse_eval(H, Js, L, terms)
            i = max(range(len(vals)), key=lambda x: vals[x])
            if best is None or vals[i] > best:
                best, arg = vals[i], tuple(int(x) for x in L[i])
        return best, arg
    rng = np.random.default_rng(seed)
    best, arg = -math.inf, None
    for _ in range(limits.current().ascent_restarts + 1):
        lab = rng.integers(0, t, size=m)
        cur = _ggse_eval(H, Js, lab[None], terms)[0]
        improved = True
        while improved:
            improved = False
            for v in rng.permutation(m):
                cand = np.repeat(lab[None], t, axis=0)
                cand[:, v] = np.arange(t)
                vals = _ggse_eval(H, Js, cand, terms)
                j = int(np.argmax([float(x) for x in vals]))
                if vals[j] > cur and j != lab[v]:
                    lab[v], cur, improved = j, vals[j], True
        if cur > best:
            best, arg = cur, tuple(int(x) for x in lab)
    return best, arg


# -- density tensors ------------------------------------------------------------

def proper_subsets(r: int):
    """Nonempty proper subsets of range(r), ordered by size then lexicographically."""
    return [A for s in range(1, r) for A in itertools.combinations(range(r), s)]


@dataclass(frozen=True)
class PartitionFamily:
    """For each level s = 1..r-1, a class label (0..k-1) per s-subset in lexicographic order."""

    n: int
    r: int
    k: int
    levels: tuple  # levels[s-1] is a tuple of labels

    def __post_init__(self):
        if len(self.levels) != self.r - 1:
            raise ValueError(f"need {self.r - 1} levels")
        lv = []
        for s, lab in enumerate(self.levels, start=1):
            lab = tuple(int(x) for x in lab)
            if len(lab) != math.comb(self.n, s):
                raise ValueError(f"level {s} needs {math.comb(self.n, s)} labels")
            if lab and (min(lab) < 0 or max(lab) >= self.k):
                raise ValueError(f"labels must lie in 0..{self.k - 1}")
            lv.append(lab)
        object.__setattr__(self, "levels", tuple(lv))

    def label(self, S) -> int:
        from .core import slot_index

        S = tuple(sorted(S))
        return self.levels[len(S) - 1][slot_index(self.n, len(S))[S]]

    @classmethod
    def random(cls, n, r, k, rng):
        rng = np.random.default_rng(rng)
        return cls(n, r, k, tuple(tuple(int(x) for x in rng.integers(0, k, size=math.comb(n, s)))
                                  for s in range(1, r)))


@dataclass(frozen=True)
class DensityTensor:
    """rho[s-1][i] = |P_i(s)|/n^s and mu[phi] for phi in [k]^(proper subsets)."""

    r: int
    k: int
    rho: tuple
    mu: dict

    def entries(self):
        out = {}
        for s, row in enumerate(self.rho, start=1):
            for i, v in enumerate(row):
                out[("rho", s, i)] = v
        for phi, v in self.mu.items():
            out[("mu",) + tuple(phi)] = v
        return out

    def distance(self, other: "DensityTensor"):
        a, b = self.entries(), other.entries()
        keys = set(a) | set(b)
        return max((abs(a.get(x, 0) - b.get(x, 0)) for x in keys), default=0)


def _mu_counts(H: Hypergraph, P: PartitionFamily):
    """Ordered edge tuples grouped by the class vector of their proper projections."""
    from .core import slot_index

    subs = proper_subsets(H.r)
    idx = {s: slot_index(H.n, s) for s in range(1, H.r)}
    counts = {}
    for e in H.edges:
        for p in itertools.permutations(e):
            phi = tuple(P.levels[len(A) - 1][idx[len(A)][tuple(sorted(p[i] for i in A))]] for A in subs)
            counts[phi] = counts.get(phi, 0) + 1
    return counts


def density_tensor_of(H: Hypergraph, P: PartitionFamily) -> DensityTensor:
    if P.n != H.n or P.r != H.r:
        raise ValueError("partition family does not match the hypergraph")
    n, r, k = H.n, H.r, P.k
    rho = tuple(tuple(Fraction(lab.count(i), n**s) for i in range(k)) for s, lab in enumerate(P.levels, start=1))
    counts = _mu_counts(H, P)
    d = n**r
    mu = {phi: Fraction(counts.get(phi, 0), d)
          for phi in itertools.product(range(k), repeat=len(proper_subsets(r)))}
    return DensityTensor(r, k, rho, mu)


def satisfies_tensor(H: Hypergraph, psi: DensityTensor, tol=0, mode: str = "exact", guard=None,
                     q=None, seed=None):
    """Search for a partition family whose density tensor is within tol of psi (sup norm).

    Exact mode is a depth-first search that labels all proper vertex
    subsets in order of their largest vertex (then size, then lexicographic).
    Besides the class-size fractions it prunes on projected edge counts: for
    each depth h, the labels of an edge's projections of size <= h are known
    as soon as the last of them is set, and the counts per projected pattern
    must stay within the totals implied by psi.  ``guard`` bounds the number
    of search nodes.  Sampled mode runs the same search on G(q, H).
    """
    if mode == "sampled":
        from .core import sample_q

        F = sample_q(H, q or H.n, seed=seed)
        return satisfies_tensor(F, psi, tol=tol, mode="exact", guard=guard)
    from .core import slot_index

    n, r, k = H.n, H.r, psi.k
    g = limits.current().search_nodes if guard is None else guard
    tol = Fraction(str(tol)) if isinstance(tol, float) else Fraction(tol)
    if r == 1:
        P = PartitionFamily(n, r, k, ())
        return P if density_tensor_of(H, P).distance(psi) <= tol else None
    d = n**r
    subs = proper_subsets(r)
    if any(v != 0 and (len(phi) != len(subs) or max(phi) >= k) for phi, v in psi.mu.items()):
        return None
    idx = {s: slot_index(n, s) for s in range(1, r)}
    items = sorted((S[-1], len(S), S) for s in range(1, r) for S in itertools.combinations(range(n), s))
    items = [(len(S), idx[len(S)][S]) for _, _, S in items]
    pos = {it: j for j, it in enumerate(items)}

    # projected targets: depth h keeps the coordinates of subsets of size <= h
    depths = list(range(1, r))
    cut = {h: sum(1 for A in subs if len(A) <= h) for h in depths}
    hi, lo, support = {}, {}, {}
    for h in depths:
        agg = {}
        ext = k ** (len(subs) - cut[h])
        for phi in itertools.product(range(k), repeat=len(subs)):
            key = phi[:cut[h]]
            agg[key] = agg.get(key, 0) + psi.mu.get(phi, 0)
        hi[h] = {key: math.floor((v + tol * ext) * d) for key, v in agg.items()}
        lo[h] = {key: math.ceil((v - tol * ext) * d) for key, v in agg.items()}
        support[h] = [key for key, v in lo[h].items() if v > 0]
    finals = {h: [[] for _ in items] for h in depths}
    for e in sorted(H.edges):
        rows = [[(len(A), idx[len(A)][tuple(sorted(p[i] for i in A))]) for A in subs]
                for p in itertools.permutations(e)]
        for h in depths:
            last = max(pos[(s, idx[s][A])] for s in range(1, h + 1) for A in itertools.combinations(e, s))
            finals[h][last].append([row[:cut[h]] for row in rows])
    total_tuples = math.factorial(r) * len(H.edges)
    levels = [[0] * math.comb(n, s) for s in range(1, r)]
    rho_hi = [[math.floor((psi.rho[s - 1][c] + tol) * n**s) for c in range(k)] for s in range(1, r)]
    rho_lo = [[math.ceil((psi.rho[s - 1][c] - tol) * n**s) for c in range(k)] for s in range(1, r)]
    left = [math.comb(n, s) for s in range(1, r)]
    cnt = [[0] * k for _ in range(1, r)]
    counts = {h: {} for h in depths}
    done = {h: 0 for h in depths}
    nodes = [0]

    def feasible():
        for s in range(r - 1):
            for c in range(k):
                if cnt[s][c] > rho_hi[s][c] or cnt[s][c] + left[s] < rho_lo[s][c]:
                    return False
        for h in depths:
            # every remaining ordered tuple feeds exactly one pattern, so the deficits must fit
            ch = counts[h]
            if sum(max(lo[h][key] - ch.get(key, 0), 0) for key in support[h]) > total_tuples - done[h]:
                return False
        return True

    def rec(j):
        nodes[0] += 1
        if nodes[0] > g:
            raise EnumerationTooLarge("tensor search nodes", nodes[0], g)
        if not feasible():
            return None
        if j == len(items):
            return PartitionFamily(n, r, k, tuple(tuple(l) for l in levels))
        s, slot = items[j]
        left[s - 1] -= 1
        found = None
        for c in range(k):
            levels[s - 1][slot] = c
            cnt[s - 1][c] += 1
            added, ok = [], True
            for h in depths:
                ch = counts[h]
                for rows in finals[h][j]:
                    for row in rows:
                        key = tuple(levels[a - 1][b] for a, b in row)
                        ch[key] = ch.get(key, 0) + 1
                        added.append((h, key))
                        ok = ok and ch[key] <= hi[h].get(key, 0)
                done[h] += sum(len(rows) for rows in finals[h][j])
            if ok:
                found = rec(j + 1)
            for h, key in added:
                counts[h][key] -= 1
            for h in depths:
                done[h] -= sum(len(rows) for rows in finals[h][j])
            cnt[s - 1][c] -= 1
            if found is not None:
                break
        left[s - 1] += 1
        return found

    return rec(0)
