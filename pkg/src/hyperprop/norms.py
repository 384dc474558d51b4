"""Cut-type norms of step kernels, the K_r^2 sandwich, and weak regularity.

For a step kernel every norm here is a supremum of a multilinear function of
per-class memberships, so the optimum sits at 0/1 (or +-1) class vectors and
exact mode enumerates those.  The mass tensor M[c] = prod w[c_i] W[c] is
scaled to integers first so the enumeration runs in int64 (or Python ints
when that could overflow) and the result is returned as a Fraction.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import limits
from ._contract import restricted_growth
from .errors import EnumerationTooLarge, IncompatibleKernels, NonTermination, RangeError
from .kernels import (CellPartition, ColoredStepKernel, StepKernel, align, blowup_k2, mass_tensor,
                      step_average, tstar_kernel)


# -- scaled mass tensors ---------------------------------------------------------

def _scaled_mass(values, weights):
    """Return (integer-or-float mass tensor, scale, exact)."""
    values = np.asarray(values)
    M = mass_tensor(values, weights)
    if M.dtype != object:
        return M, 1.0, False
    L = 1
    for x in M.flat:
        L = math.lcm(L, Fraction(x).denominator)
    Mi = np.empty(M.shape, dtype=object)
    Mi.flat[:] = [int(Fraction(x) * L) for x in M.flat]
    if sum(abs(int(x)) for x in Mi.flat) < 2**62:
        Mi = Mi.astype(np.int64)
    return Mi, L, True


def _finish(v, scale, exact):
    return Fraction(int(v), scale) if exact else float(v) / scale


def subset_matrix(t: int, signs: bool = False) -> np.ndarray:
    """All 2^t class vectors as rows: 0/1 indicators or +-1 signs."""
    X = np.array(list(itertools.product((0, 1), repeat=t)), dtype=np.int64).reshape(-1, t)
    return 2 * X - 1 if signs else X


def _check_guard(what, size, guard):
    g = limits.guard(guard)
    if size > g:
        raise EnumerationTooLarge(what, size, g)


def _contract_all_but_last(M, X):
    """Contract axes 0..r-2 of M with X (rows = test vectors) -> shape (2^t,)*(r-1) + (t,)."""
    out = M
    r = M.ndim
    for _ in range(r - 1):
        # contract the leading class axis and move the new subset axis to the front
        out = np.tensordot(X, out, axes=([1], [r - 1]))
    return out


def _as_kernel(W):
    if isinstance(W, StepKernel):
        return W
    raise TypeError("expected a StepKernel")


@dataclass
class NormResult:
    value: object
    witness: tuple = ()
    certificate: str = "exact"
    partition: tuple | None = None

    def __float__(self):
        return float(self.value)


def _sets_from_index(idx, t, X):
    return tuple(tuple(int(c) for c in np.flatnonzero(X[i])) for i in idx)


def cut_star_norm(W: StepKernel, mode: str = "exact", guard=None, seed=None, return_witness=False):
    """sup over class subsets S_1..S_r of |integral of W over S_1 x ... x S_r|."""
    W = _as_kernel(W)
    if mode == "ascent":
        res = _cut_ascent(W, seed=seed)
        return res if return_witness else res.value
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    r, t = W.r, W.t
    _check_guard("cut-norm subsets", 2 ** ((r - 1) * t) * t, guard)
    M, scale, exact = _scaled_mass(W.values, W.weights)
    X = subset_matrix(t).astype(M.dtype) if M.dtype != object else subset_matrix(t).astype(object)
    R = _contract_all_but_last(M, X)  # (2^t,)*(r-1) x t
    pos = np.where(R > 0, R, 0).sum(axis=-1)
    neg = -np.where(R < 0, R, 0).sum(axis=-1)
    best = np.maximum(pos, neg)
    flat = int(np.argmax(best.reshape(-1))) if best.size else 0
    val = best.reshape(-1)[flat] if best.size else 0
    value = _finish(val, scale, exact)
    if not return_witness:
        return value
    lead = np.unravel_index(flat, best.shape) if r > 1 else ()
    sets = list(_sets_from_index(lead, t, subset_matrix(t)))
    row = R[lead] if r > 1 else R
    last = row > 0 if pos.reshape(-1)[flat] >= neg.reshape(-1)[flat] else row < 0
    # axes were contracted last-first, so the leading subset axis belongs to axis r-2
    sets = sets[::-1] + [tuple(int(c) for c in np.flatnonzero(last))]
    return NormResult(value, tuple(sets))


def _objective_sets(M, sets):
    out = M
    for S in sets:
        v = np.zeros(M.shape[0], dtype=M.dtype)
        v[list(S)] = 1
        out = np.tensordot(v, out, axes=([0], [0]))
    return out


def _cut_ascent(W: StepKernel, seed=None, restarts=None):
    """Coordinate best response from random starts; a lower bound."""
    restarts = limits.current().ascent_restarts if restarts is None else restarts
    M, scale, exact = _scaled_mass(W.values, W.weights)
    M = M.astype(float) if M.dtype != object else M
    rng = np.random.default_rng(seed)
    r, t = W.r, W.t
    best_val, best_sets = -1, None
    starts = [np.ones((r, t), dtype=bool)] + [rng.random((r, t)) < 0.5 for _ in range(restarts)]
    for S in starts:
        S = S.copy()
        cur = None
        for _ in range(100):
            improved = False
            for i in range(r):
                vec = np.moveaxis(M, i, 0)
                for j in [jj for jj in range(r) if jj != i]:
                    vec = np.tensordot(vec, S[j].astype(M.dtype), axes=([1], [0]))
                pos, neg = vec > 0, vec < 0
                vp, vn = vec[pos].sum(), -vec[neg].sum()
                S[i] = pos if vp >= vn else neg
                val = max(vp, vn)
                if cur is None or val > cur:
                    improved = cur is not None and val > cur or improved
                    cur = val
            if not improved:
                break
        if cur > best_val:
            best_val, best_sets = cur, tuple(tuple(int(c) for c in np.flatnonzero(s)) for s in S)
    value = _finish(best_val, scale, exact) if exact else float(best_val)
    return NormResult(value, best_sets, "ascent-lower-bound")


def boxplus_norm(W: StepKernel, mode: str = "exact", guard=None, seed=None):
    """sup over +-1 class vectors f_1..f_r of |integral of W f_1 ... f_r|."""
    W = _as_kernel(W)
    r, t = W.r, W.t
    M, scale, exact = _scaled_mass(W.values, W.weights)
    if mode == "ascent":
        Mf = M.astype(float) if M.dtype != object else M
        rng = np.random.default_rng(seed)
        best = 0
        for _ in range(limits.current().ascent_restarts + 1):
            F = rng.choice([-1, 1], size=(r, t))
            cur = None
            for _ in range(100):
                for i in range(r):
                    vec = np.moveaxis(Mf, i, 0)
                    for j in [jj for jj in range(r) if jj != i]:
                        vec = np.tensordot(vec, F[j].astype(Mf.dtype), axes=([1], [0]))
                    F[i] = np.where(vec >= 0, 1, -1)
                    val = np.abs(vec).sum()
                if cur is not None and val <= cur:
                    break
                cur = val
            best = max(best, cur)
        return _finish(best, scale, exact) if exact else float(best)
    _check_guard("box-plus sign vectors", 2 ** ((r - 1) * t) * t, guard)
    X = subset_matrix(t, signs=True)
    X = X.astype(object) if M.dtype == object else X.astype(M.dtype)
    R = _contract_all_but_last(M, X)
    best = np.abs(R).sum(axis=-1).max() if R.size else 0
    return _finish(best, scale, exact)


def _block_indicator_stack(t, Q: CellPartition):
    """Rows indexed by (subset, block): indicator of S intersected with block."""
    X = subset_matrix(t)
    B = Q.indicator().T  # (tQ, t)
    Y = (X[:, None, :] * B[None, :, :]).reshape(-1, t)
    return Y


def cut_star_P_norm(W: StepKernel, Q: CellPartition, mode: str = "exact", guard=None, seed=None,
                    return_witness=False):
    """sup over S_i of the sum over Q-cells of |integral over the cell-restricted box|."""
    W = _as_kernel(W)
    if Q.t != W.t:
        raise ValueError("partition and kernel class counts differ")
    if mode == "ascent":
        res = _probe_ascent([W.values], W.weights, Q, seed=seed)
        return res if return_witness else res.value
    r, t, b = W.r, W.t, Q.size
    _check_guard("cut-(*,Q) subsets", (2**t * b) ** r, guard)
    M, scale, exact = _scaled_mass(W.values, W.weights)
    val, sets = _exact_blocks(M, Q)
    value = _finish(val, scale, exact)
    return NormResult(value, sets, "exact", Q.labels) if return_witness else value


def _exact_blocks(M, Q: CellPartition):
    r, t, b = M.ndim, M.shape[0], Q.size
    Y = _block_indicator_stack(t, Q)
    Y = Y.astype(object) if M.dtype == object else Y.astype(M.dtype)
    out = M
    for _ in range(r):
        out = np.tensordot(Y, out, axes=([1], [r - 1]))
    out = np.abs(out.reshape((2**t, b) * r))
    # sum out the block axes (odd positions)
    summed = out.sum(axis=tuple(range(1, 2 * r, 2)))
    flat = int(np.argmax(summed.reshape(-1)))
    idx = np.unravel_index(flat, summed.shape)
    X = subset_matrix(t)
    sets = tuple(tuple(int(c) for c in np.flatnonzero(X[i])) for i in idx[::-1])
    return summed.reshape(-1)[flat], sets


def _probe_objective(Ms, sets_per_channel, labels, b):
    total = 0.0
    for M, sets in zip(Ms, sets_per_channel):
        t = M.shape[0]
        E = np.zeros((t, b))
        E[np.arange(t), labels] = 1
        out = M
        for S in sets:
            Y = E * S[:, None]
            out = np.tensordot(out, Y, axes=([0], [0]))
        total += np.abs(out).sum()
    return total


def _probe_ascent(channels, weights, Q=None, max_blocks=None, seed=None, restarts=None):
    """Alternating sign best response for sets, plus label moves when Q is free.

    Returns a lower bound on sup over partitions (or the fixed Q) of the
    summed cut-(*,Q) norms of the channels.
    """
    restarts = limits.current().ascent_restarts if restarts is None else restarts
    rng = np.random.default_rng(seed)
    Ms = [np.asarray(mass_tensor(c, weights), dtype=float) for c in channels]
    r, t = Ms[0].ndim, Ms[0].shape[0]
    fixed = Q is not None
    b = Q.size if fixed else (max_blocks or limits.current().probe_blocks)
    b = max(1, min(b, t))
    best = (-1.0, None, None)
    for trial in range(restarts + 1):
        if fixed:
            labels = np.asarray(Q.labels)
        elif trial == 0:
            labels = np.zeros(t, dtype=np.int64)
        else:
            labels = rng.integers(0, b, size=t)
        sets = [[(rng.random(t) < 0.5) if trial else np.ones(t, bool) for _ in range(r)] for _ in Ms]
        cur = _probe_objective(Ms, [[s.astype(float) for s in ss] for ss in sets], labels, b)
        for _ in range(60):
            prev = cur
            E = np.zeros((t, b))
            E[np.arange(t), labels] = 1
            label_score = np.zeros((t, b))
            for ci, M in enumerate(Ms):
                for i in range(r):
                    vec = np.moveaxis(M, i, 0)
                    others = [j for j in range(r) if j != i]
                    for j in others:
                        vec = np.tensordot(vec, E * sets[ci][j][:, None], axes=([1], [0]))
                    # vec: (t, b, ..., b); signs of the current block sums
                    full = np.tensordot(E * sets[ci][i][:, None], vec, axes=([0], [0]))
                    sign = np.where(full >= 0, 1.0, -1.0)
                    score = np.tensordot(vec, sign, axes=(list(range(1, r)), list(range(1, r)))) \
                        if r > 1 else vec[:, None] * sign[None, :]
                    # score[c, j]: gain of class c on axis i when it carries label j
                    own = score[np.arange(t), labels]
                    sets[ci][i] = own > 0
                    label_score += np.where(sets[ci][i][:, None], score, 0.0)
            cur = _probe_objective(Ms, [[s.astype(float) for s in ss] for ss in sets], labels, b)
            if not fixed:
                trial_labels = np.argmax(label_score, axis=1)
                alt = _probe_objective(Ms, [[s.astype(float) for s in ss] for ss in sets], trial_labels, b)
                if alt > cur + 1e-15:
                    labels, cur = trial_labels, alt
            if cur <= prev + 1e-15:
                break
        if cur > best[0]:
            wit = tuple(tuple(tuple(int(c) for c in np.flatnonzero(s)) for s in ss) for ss in sets)
            best = (cur, wit, tuple(int(x) for x in labels))
    val, wit, labels = best
    return NormResult(float(val), wit, "ascent-lower-bound", labels)


def kr2_density(W: StepKernel):
    """t*(K_r^2, W): the density of the 2-fold blow-up of one r-edge."""
    return tstar_kernel(blowup_k2(W.r), W)


def sandwich_bounds(W: StepKernel):
    """(2^-r t*(K_r^2,W), t*(K_r^2,W)^(1/2^r)); the second entry is a float."""
    if W.sup_norm() > 1:
        raise RangeError("sandwich bounds need |W| <= 1")
    d = kr2_density(W)
    lower = d / 2**W.r
    upper = float(d) ** (1.0 / 2**W.r) if d > 0 else 0.0
    return lower, upper


def sandwich_check(W: StepKernel, mode="exact", guard=None):
    """Evaluate both sandwich inequalities; exact when W is rational.

    The upper inequality is compared as cut^(2^r) <= t* so no root is taken.
    """
    lower, upper = sandwich_bounds(W)
    cut = cut_star_norm(W, mode=mode, guard=guard)
    d = kr2_density(W)
    if isinstance(cut, Fraction) and isinstance(d, Fraction):
        upper_ok = cut ** (2**W.r) <= d
        lower_ok = lower <= cut
    else:
        upper_ok = float(cut) <= upper + 1e-9
        lower_ok = float(lower) <= float(cut) + 1e-9
    return {"lower": lower, "upper": upper, "cut": cut, "kr2": d,
            "lower_ok": bool(lower_ok), "upper_ok": bool(upper_ok)}


# -- distances on colored kernels -----------------------------------------------

def _diff_channels(U, V):
    if U.r != V.r:
        raise IncompatibleKernels(f"arity {U.r} vs {V.r}")
    if isinstance(U, ColoredStepKernel) != isinstance(V, ColoredStepKernel):
        raise IncompatibleKernels("cannot compare colored and uncolored kernels")
    if isinstance(U, StepKernel):
        U, V = align(U, V)
        return [U.values - V.values], U.weights
    if U.k != V.k:
        raise IncompatibleKernels(f"color count {U.k} vs {V.k}")
    U, V = align(U, V)
    D = [U.values[a] - V.values[a] for a in range(U.k)]
    if U.loop is not None or V.loop is not None:
        lu = U.loop if U.loop is not None else np.zeros_like(U.values[0])
        lv = V.loop if V.loop is not None else np.zeros_like(V.values[0])
        D.append(lu - lv)
    return D, U.weights


def cut_distance(U, V, Q: CellPartition | None = None, mode: str = "exact", guard=None, seed=None):
    """Sum over colors (and the loop channel) of the cut-* or cut-(*,Q) norm of U - V.

    With Q given, its labels refer to the classes of U; they are carried to
    the common refinement automatically.
    """
    D, w = _diff_channels(U, V)
    if Q is not None and Q.t != len(w):
        wU = U.weights
        _, pa, _ = _common(wU, V.weights)
        Q = Q.refine_classes(pa)
    total = 0
    for d in D:
        K = StepKernel(w, d)
        if Q is None:
            total = total + cut_star_norm(K, mode=mode, guard=guard, seed=seed)
        else:
            total = total + cut_star_P_norm(K, Q, mode=mode, guard=guard, seed=seed)
    return total


def _common(wa, wb):
    from .kernels import common_refinement

    return common_refinement(wa, wb)


def l1_distance(U, V):
    """Sum over channels of the L1 norm of U - V."""
    D, w = _diff_channels(U, V)
    total = 0
    for d in D:
        total = total + np.abs(mass_tensor(d, w)).sum()
    return total


# -- probes: sup over coarse class-aligned partitions ------------------------------

@dataclass
class ProbeResult:
    value: object
    certificate: str
    partition: tuple | None
    channel: int | None
    witness: tuple
    upper: object = None
    family: str = ""


def probe_sup(channels, weights, max_blocks=None, mode="auto", guard=None, seed=None):
    """sup over class-aligned Q' with at most ``max_blocks`` blocks of the
    summed cut-(*,Q') norms of the given channel arrays.

    Exact mode enumerates every such Q' (restricted growth strings) and
    every class subset.  Ascent mode returns a lower bound together with the
    certified upper bound min(L1 norm, b^r * box norm) per channel.
    """
    b = max_blocks or limits.current().probe_blocks
    t = len(weights)
    r = np.asarray(channels[0]).ndim
    n_part = sum(1 for _ in restricted_growth(t, b)) if t <= 12 else float("inf")
    cost = n_part * (2**t * b) ** r * len(channels)
    g = limits.guard(guard)
    if mode == "auto":
        mode = "exact" if cost <= g else "ascent"
    if mode == "exact":
        if cost > g:
            raise EnumerationTooLarge("probe partitions x subsets", cost, g)
        scaled = [_scaled_mass(c, weights) for c in channels]
        exact = all(s[2] for s in scaled)
        if exact:
            L = 1
            for _, s, _ in scaled:
                L = math.lcm(L, s)
            Ms = [M * (L // s) for M, s, _ in scaled]
        else:
            L = 1.0
            Ms = [np.asarray(mass_tensor(c, weights), dtype=float) for c in channels]
        best = (-1, None, None, None)
        for labels in restricted_growth(t, b):
            Q = CellPartition(labels)
            tot = 0
            per = []
            for M in Ms:
                v, sets = _exact_blocks(M, Q)
                tot += v
                per.append((v, sets))
            if tot > best[0]:
                ci = int(np.argmax([float(v) for v, _ in per]))
                best = (tot, labels, ci, per[ci][1])
        val = _finish(best[0], L, exact)
        return ProbeResult(val, "exact", best[1], best[2], best[3], val,
                           f"all class-aligned partitions with <= {b} blocks")
    res = _probe_ascent(list(channels), weights, max_blocks=b, seed=seed)
    up = 0.0
    for c in channels:
        K = StepKernel(tuple(float(x) for x in weights), np.asarray(c, dtype=float))
        l1 = float(np.abs(mass_tensor(K.values, K.weights)).sum())
        box = float(max(kr2_density(K), 0.0)) ** (1.0 / 2**r) * b**r
        up += min(l1, box)
    labels = res.partition
    chan_vals = []
    for ci, c in enumerate(channels):
        M = np.asarray(mass_tensor(c, weights), dtype=float)
        sets = [np.isin(np.arange(t), s).astype(float) for s in res.witness[ci]]
        chan_vals.append(_probe_objective([M], [sets], np.asarray(labels), max(labels) + 1))
    ci = int(np.argmax(chan_vals))
    return ProbeResult(res.value, "ascent-lower-bound", labels, ci, res.witness[ci], up,
                       f"ascent over partitions with <= {b} blocks; upper from L1/box norms")


# -- weak regularity -------------------------------------------------------------

@dataclass
class RegularityResult:
    partition: CellPartition
    kernel: object
    iterations: int
    deviation: object
    certificate: str
    bound: object
    history: list = field(default_factory=list)
    upper: object = None


def t_reg_log2(r, k, eps, t):
    """log2 of (2t)^((rk+1)^(4k^2/eps^2)), as a float (may be inf)."""
    try:
        return (r * k + 1) ** (4 * k * k / (eps * eps)) * math.log2(2 * t)
    except OverflowError:
        return math.inf


def weak_regularity(W, eps, start: CellPartition | None = None, max_blocks=None, mode="auto",
                    guard=None, seed=None):
    """Energy-increment refinement until no probe partition sees deviation > eps.

    Returns a ``RegularityResult`` whose ``partition`` is a partition of W's
    classes and ``kernel`` = step_average(W, partition).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    colored = isinstance(W, ColoredStepKernel)
    k = W.k if colored else 1
    Q = start or CellPartition.trivial(W.t)
    cap = math.ceil(4 * k * k / eps**2)
    history = []
    sup = W.sup_norm() if not colored else 1
    for it in range(cap + 1):
        V = step_average(W, Q)
        if colored:
            chans = [a - b for a, b in zip(W.channels(), V.channels())]
        else:
            chans = [W.values - V.values]
        if eps >= 2 * k * sup and it == 0 and start is None:
            return RegularityResult(Q, V, 0, 0, "trivial: eps >= 2k sup|W|", t_reg_log2(W.r, k, eps, W.t),
                                    history, 0)
        pr = probe_sup(chans, W.weights, max_blocks=max_blocks, mode=mode, guard=guard,
                       seed=None if seed is None else seed + it)
        history.append({"classes": Q.size, "deviation": float(pr.value), "upper": float(pr.upper)})
        certified = pr.certificate == "exact" or pr.upper <= eps
        if pr.value <= eps and certified:
            cert = pr.certificate if pr.certificate == "exact" else "upper-bound"
            return RegularityResult(Q, V, it, pr.value, cert, t_reg_log2(W.r, k, eps, W.t), history, pr.upper)
        if pr.value <= eps:
            # ascent found nothing but the upper bound is loose: fall back to refining
            # along the current best witness anyway; discrete partitions end the loop
            pass
        newQ = _refine(Q, pr)
        if newQ.size == Q.size:
            if Q.size == W.t:
                return RegularityResult(Q, V, it, pr.value, pr.certificate, t_reg_log2(W.r, k, eps, W.t),
                                        history, pr.upper)
            newQ = CellPartition.discrete(W.t)
        Q = newQ
    raise NonTermination(f"weak regularity exceeded {cap} refinements at eps={eps}")


def _refine(Q: CellPartition, pr: ProbeResult) -> CellPartition:
    out = Q
    if pr.partition is not None:
        out = out.meet(CellPartition(pr.partition).canonical())
    for S in pr.witness or ():
        mask = np.zeros(Q.t, dtype=np.int64)
        mask[list(S)] = 1
        if 0 < mask.sum() < Q.t:
            out = out.meet(CellPartition(tuple(int(x) for x in mask)).canonical())
    return out.canonical()
