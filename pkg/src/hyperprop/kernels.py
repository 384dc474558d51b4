"""Naive step-function kernels on [0,1]^r.

A kernel has t classes (consecutive intervals of [0,1]) with weights summing
to 1 and a symmetric value array of shape (t,)*r.  Rational weights plus
integer or object (Fraction) values keep every derived quantity exact;
float inputs give float results.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import limits
from ._contract import hom_sum
from .core import ColoredHypergraph, Hypergraph, _as_colored, all_colored, slot_array, slots
from .errors import EnumerationTooLarge, IncompatibleKernels, InvalidSample, RangeError

IOTA = "iota"


def _is_exact_array(a) -> bool:
    return a.dtype == object or a.dtype.kind in "iub"


def _to_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(str(x))


def exact_array(a) -> np.ndarray:
    """Object array of Fractions."""
    a = np.asarray(a, dtype=object)
    out = np.empty(a.shape, dtype=object)
    out.flat[:] = [_to_fraction(x) for x in a.flat]
    return out


def _weights(w):
    w = tuple(w)
    if all(isinstance(x, (int, Fraction, np.integer)) for x in w):
        return tuple(Fraction(x) for x in w), True
    return tuple(float(x) for x in w), False


def _is_symmetric(values, offset=0) -> bool:
    r = values.ndim - offset
    base = list(range(offset))
    for p in itertools.permutations(range(r)):
        axes = base + [offset + i for i in p]
        other = np.transpose(values, axes)
        if values.dtype == object or other.dtype == object:
            if not np.all(values == other):
                return False
        elif not np.allclose(values, other, atol=1e-12, rtol=0):
            return False
    return True


def symmetrize_from_sorted(r, t, fill):
    """Build a symmetric (t,)*r array from a function of sorted index tuples."""
    out = np.empty((t,) * r, dtype=object)
    for idx in itertools.combinations_with_replacement(range(t), r):
        v = fill(idx)
        for p in set(itertools.permutations(idx)):
            out[p] = v
    return out


@dataclass(frozen=True, eq=False)
class StepKernel:
    """Real-valued naive r-kernel constant on products of classes."""

    weights: tuple
    values: np.ndarray

    def __post_init__(self):
        w, exact_w = _weights(self.weights)
        vals = np.asarray(self.values)
        if vals.ndim < 1 or any(d != len(w) for d in vals.shape):
            raise ValueError(f"values shape {vals.shape} does not match {len(w)} classes")
        if any(x <= 0 for x in w):
            raise ValueError("class weights must be positive")
        if exact_w:
            if sum(w) != 1:
                raise ValueError(f"weights sum to {sum(w)}, not 1")
        elif abs(sum(w) - 1) > 1e-9:
            raise ValueError(f"weights sum to {sum(w)}, not 1")
        if not exact_w or not _is_exact_array(vals):
            vals = vals.astype(float)
            w = tuple(float(x) for x in w)
        elif vals.dtype != object:
            vals = vals.astype(np.int64)
        if not _is_symmetric(vals):
            raise ValueError("kernel values are not symmetric")
        vals.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "values", vals)

    @property
    def r(self) -> int:
        return self.values.ndim

    @property
    def t(self) -> int:
        return len(self.weights)

    @property
    def exact(self) -> bool:
        return self.values.dtype != float

    def sup_norm(self):
        v = np.abs(self.values)
        return max(v.flat) if v.size else 0

    def mass(self) -> np.ndarray:
        """M[c] = prod_i w[c_i] * W[c]."""
        return mass_tensor(self.values, self.weights)

    @classmethod
    def constant(cls, c, r, t=1):
        w = [Fraction(1, t)] * t
        vals = np.full((t,) * r, c, dtype=object if isinstance(c, (int, Fraction)) else float)
        return cls(tuple(w), vals)

    @classmethod
    def uniform(cls, values):
        values = np.asarray(values)
        t = values.shape[0]
        return cls(tuple([Fraction(1, t)] * t), values)

    def with_values(self, values) -> "StepKernel":
        return StepKernel(self.weights, values)

    def __neg__(self):
        return self.with_values(-self.values)

    def scaled(self, a):
        return self.with_values(self.values * a)

    def __sub__(self, other):
        U, V = align(self, other)
        return U.with_values(U.values - V.values)

    def __add__(self, other):
        U, V = align(self, other)
        return U.with_values(U.values + V.values)

    def refine(self, weights, parent) -> "StepKernel":
        return StepKernel(tuple(weights), _take_all(self.values, parent, 0))

    def __repr__(self):
        return f"StepKernel(r={self.r}, t={self.t}, exact={self.exact})"


def mass_tensor(values, weights) -> np.ndarray:
    values = np.asarray(values)
    exact = values.dtype != float
    w = np.asarray(weights, dtype=object if exact else float)
    M = values.astype(object) if exact else values.astype(float)
    r = values.ndim
    for ax in range(r):
        shape = [1] * r
        shape[ax] = len(w)
        M = M * w.reshape(shape)
    return M


def _take_all(values, parent, offset):
    out = values
    parent = np.asarray(parent, dtype=np.int64)
    for ax in range(offset, values.ndim):
        out = np.take(out, parent, axis=ax)
    return out


@dataclass(frozen=True, eq=False)
class ColoredStepKernel:
    """k-colored naive kernel: per cell a distribution over colors 1..k plus the loop color."""

    weights: tuple
    values: np.ndarray  # shape (k, t, ..., t)
    loop: np.ndarray | None = None

    def __post_init__(self):
        w, exact_w = _weights(self.weights)
        vals = np.asarray(self.values)
        if vals.ndim < 2 or any(d != len(w) for d in vals.shape[1:]):
            raise ValueError(f"values shape {vals.shape} does not match {len(w)} classes")
        loop = None if self.loop is None else np.asarray(self.loop)
        if loop is not None and loop.shape != vals.shape[1:]:
            raise ValueError("loop channel has the wrong shape")
        if any(x <= 0 for x in w):
            raise ValueError("class weights must be positive")
        exact = exact_w and _is_exact_array(vals) and (loop is None or _is_exact_array(loop))
        if exact_w and sum(w) != 1 or not exact_w and abs(sum(w) - 1) > 1e-9:
            raise ValueError("weights must sum to 1")
        if not exact:
            vals = vals.astype(float)
            loop = None if loop is None else loop.astype(float)
            w = tuple(float(x) for x in w)
        total = vals.sum(axis=0) + (0 if loop is None else loop)
        if exact:
            if not np.all(total == 1):
                raise ValueError("per-cell color distributions must sum to 1")
        elif not np.allclose(total, 1.0, atol=1e-9):
            raise ValueError("per-cell color distributions must sum to 1")
        if not _is_symmetric(vals, offset=1) or (loop is not None and not _is_symmetric(loop)):
            raise ValueError("colored kernel is not symmetric")
        vals.setflags(write=False)
        if loop is not None:
            loop.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "loop", loop)

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def r(self) -> int:
        return self.values.ndim - 1

    @property
    def t(self) -> int:
        return len(self.weights)

    @property
    def exact(self) -> bool:
        return self.values.dtype != float

    def channels(self) -> np.ndarray:
        """Color channels followed by the loop channel when present."""
        if self.loop is None:
            return self.values
        return np.concatenate([self.values, self.loop[None]], axis=0)

    def color(self, alpha: int) -> StepKernel:
        return StepKernel(self.weights, self.values[alpha - 1])

    def refine(self, weights, parent) -> "ColoredStepKernel":
        loop = None if self.loop is None else _take_all(self.loop, parent, 0)
        return ColoredStepKernel(tuple(weights), _take_all(self.values, parent, 1), loop)

    def __repr__(self):
        return f"ColoredStepKernel(r={self.r}, t={self.t}, k={self.k}, loop={self.loop is not None})"


def from_real(U: StepKernel) -> ColoredStepKernel:
    """Two-colored kernel with color-1 probability U (values in [0,1])."""
    v = U.values
    if (np.asarray(v < 0)).any() or (np.asarray(v > 1)).any():
        raise RangeError("values must lie in [0,1]")
    return ColoredStepKernel(U.weights, np.stack([v, 1 - v]))


@dataclass(frozen=True)
class CellPartition:
    """Partition of the class index set [t] given by a label per class."""

    labels: tuple

    def __post_init__(self):
        lab = tuple(int(x) for x in self.labels)
        if lab and set(lab) != set(range(max(lab) + 1)):
            raise ValueError("labels must be surjective onto 0..t_Q-1")
        object.__setattr__(self, "labels", lab)

    @classmethod
    def trivial(cls, t):
        return cls((0,) * t)

    @classmethod
    def discrete(cls, t):
        return cls(tuple(range(t)))

    @property
    def t(self) -> int:
        return len(self.labels)

    @property
    def size(self) -> int:
        return max(self.labels) + 1 if self.labels else 0

    def canonical(self) -> "CellPartition":
        seen = {}
        return CellPartition(tuple(seen.setdefault(x, len(seen)) for x in self.labels))

    def blocks(self) -> list[list[int]]:
        out = [[] for _ in range(self.size)]
        for i, x in enumerate(self.labels):
            out[x].append(i)
        return out

    def indicator(self) -> np.ndarray:
        E = np.zeros((self.t, self.size), dtype=np.int64)
        E[np.arange(self.t), self.labels] = 1
        return E

    def meet(self, other: "CellPartition") -> "CellPartition":
        seen = {}
        return CellPartition(tuple(seen.setdefault(p, len(seen)) for p in zip(self.labels, other.labels)))

    def refines(self, other: "CellPartition") -> bool:
        m = {}
        return all(m.setdefault(a, b) == b for a, b in zip(self.labels, other.labels))

    def refine_classes(self, parent) -> "CellPartition":
        return CellPartition(tuple(self.labels[p] for p in parent))


def common_refinement(wa, wb):
    """Merge two interval partitions of [0,1].

    Returns (weights, parent_a, parent_b) for the pieces of the common
    refinement, in left-to-right order.
    """
    exact = all(isinstance(x, Fraction) for x in tuple(wa) + tuple(wb))
    ca = list(itertools.accumulate(wa))
    cb = list(itertools.accumulate(wb))
    tol = 0 if exact else 1e-12
    cuts = sorted(set(ca[:-1]) | set(cb[:-1]))
    if not exact:
        merged = []
        for c in cuts:
            if not merged or c - merged[-1] > tol:
                merged.append(c)
        cuts = merged
    edges = [Fraction(0) if exact else 0.0] + cuts + [Fraction(1) if exact else 1.0]
    weights, pa, pb = [], [], []
    ia = ib = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= tol:
            continue
        while ca[ia] < hi - tol:
            ia += 1
        while cb[ib] < hi - tol:
            ib += 1
        weights.append(hi - lo)
        pa.append(ia)
        pb.append(ib)
    if not exact:
        s = sum(weights)
        weights = [x / s for x in weights]
    return tuple(weights), pa, pb


def align(U, V):
    """Re-express U and V on a common class refinement."""
    if U.r != V.r:
        raise IncompatibleKernels(f"arity {U.r} vs {V.r}")
    if isinstance(U, ColoredStepKernel) and U.k != V.k:
        raise IncompatibleKernels(f"color count {U.k} vs {V.k}")
    if tuple(U.weights) == tuple(V.weights):
        return U, V
    w, pa, pb = common_refinement(U.weights, V.weights)
    return U.refine(w, pa), V.refine(w, pb)


def graph_to_kernel(G) -> ColoredStepKernel:
    """Naive kernel of a finite colored graph: n classes of weight 1/n."""
    G = _as_colored(G)
    n, k = G.n, G.k
    T = np.asarray(G.tensor)
    vals = np.stack([(T == a).astype(np.int64) for a in range(1, k + 1)])
    loop = (T == 0).astype(np.int64)
    return ColoredStepKernel(tuple([Fraction(1, n)] * n), vals, loop)


def step_average(W, Q: CellPartition, compress: bool = False):
    """Weight-average W over the cells of Q (per channel).

    The result keeps W's classes unless ``compress`` is set, in which case
    it lives on the Q blocks with their total weights.
    """
    colored = isinstance(W, ColoredStepKernel)
    if Q.t != W.t:
        raise ValueError(f"partition of {Q.t} classes for a kernel with {W.t}")
    chans = W.channels() if colored else W.values[None]
    exact = W.exact
    E = Q.indicator().astype(object if exact else float)
    w = np.asarray(W.weights, dtype=object if exact else float)
    bm = w @ E  # block masses
    r = W.r
    out = []
    for ch in chans:
        M = mass_tensor(ch, W.weights)
        for _ in range(r):
            M = np.tensordot(M, E, axes=([0], [0]))
        A = M / mass_tensor(np.ones((Q.size,) * r, dtype=object if exact else float), bm)
        out.append(A)
    out = np.stack(out)
    if compress:
        weights = tuple(bm.tolist())
    else:
        weights = W.weights
        out = _take_all(out, Q.labels, 1)
    if not colored:
        return StepKernel(weights, out[0])
    if W.loop is None:
        return ColoredStepKernel(weights, out)
    return ColoredStepKernel(weights, out[:-1], out[-1])


def _slot_tensors(F: ColoredHypergraph, W: ColoredStepKernel):
    sub = [tuple(s) for s in slots(F.n, F.r)]
    ts = [W.values[c - 1] for c in F.colors]
    return sub, ts


def t_density_kernel(F, W: ColoredStepKernel, guard=None):
    """t(F,W): probability that W's q-sample (loops not excluded) equals F."""
    F = _as_colored(F)
    if F.r != W.r or F.k != W.k:
        raise IncompatibleKernels("pattern and kernel must share r and k")
    g = limits.guard(guard)
    if F.r > 1 and W.t ** min(F.n, 2 * F.r) > g:
        raise EnumerationTooLarge("class assignments", W.t**F.n, g)
    if F.n < F.r:
        return Fraction(1) if W.exact else 1.0
    sub, ts = _slot_tensors(F, W)
    val = hom_sum(F.n, sub, ts, W.weights)
    return Fraction(val) if W.exact else float(val)


def tstar_kernel(H, U: StepKernel, guard=None):
    """t*(H,U) = integral of prod over edges of U."""
    if isinstance(H, ColoredHypergraph):
        H = H.to_hypergraph()
    if not H.edges:
        return Fraction(1) if U.exact else 1.0
    val = hom_sum(H.n, sorted(H.edges), U.values, U.weights)
    return Fraction(val) if U.exact else float(val)


def blowup_k2(r: int) -> Hypergraph:
    """K_r^2: vertices (i, b) for i < r, b in {0,1}, one edge per choice of b's."""
    edges = [tuple(2 * i + b for i, b in enumerate(bits)) for bits in itertools.product((0, 1), repeat=r)]
    return Hypergraph(r, 2 * r, frozenset(edges))


def sample_from_kernel(W: ColoredStepKernel, q: int, seed=None, max_rejections: int = 100_000,
                       return_classes: bool = False):
    """Draw G(q, W) conditioned on no slot receiving the loop color."""
    if q < W.r:
        raise InvalidSample(f"q={q} < r={W.r}")
    rng = np.random.default_rng(seed)
    S = slot_array(q, W.r)
    p_w = np.asarray(W.weights, dtype=float)
    p_w = p_w / p_w.sum()
    chans = np.asarray(W.channels(), dtype=float)
    for _ in range(max_rejections):
        cls = rng.choice(W.t, size=q, p=p_w)
        cells = tuple(cls[S].T)
        probs = chans[(slice(None),) + cells].T  # (slots, k[+1])
        cum = np.cumsum(probs, axis=1)
        u = rng.random(len(S))[:, None] * cum[:, -1:]
        col = (u >= cum).sum(axis=1)
        col = np.minimum(col, chans.shape[0] - 1)
        if W.loop is not None and np.any(col == W.k):
            continue
        G = ColoredHypergraph(W.r, q, W.k, tuple(int(c) + 1 for c in col))
        return (G, cls) if return_classes else G
    raise InvalidSample("loop mass too large: rejection sampling gave up")


def exact_sample_distribution(W: ColoredStepKernel, q: int, include_iota: bool = False, guard=None):
    """Exact law of G(q, W) as {ColoredHypergraph: probability}.

    Every labelled colored graph on q vertices is an atom (zero masses
    included).  By default the law is conditioned on avoiding the loop
    color; with ``include_iota`` the unconditioned loop mass is returned
    under the key ``IOTA`` instead.
    """
    if q < W.r:
        raise InvalidSample(f"q={q} < r={W.r}")
    m = math.comb(q, W.r)
    g = limits.guard(guard)
    cost = W.t**q * W.k**m
    if cost > g:
        raise EnumerationTooLarge("class assignments x atoms", cost, g)
    exact = W.exact
    S = [tuple(s) for s in slots(q, W.r)]
    vals = W.values
    w = W.weights
    total = np.zeros((W.k,) * m, dtype=object if exact else float)
    for cls in itertools.product(range(W.t), repeat=q):
        weight = 1
        for c in cls:
            weight = weight * w[c]
        outer = np.asarray(weight, dtype=object if exact else float)
        for s in S:
            cell = tuple(cls[v] for v in s)
            outer = np.multiply.outer(outer, vals[(slice(None),) + cell])
        total = total + outer
    mass = total.sum()
    if not include_iota:
        if mass == 0:
            raise InvalidSample("the kernel never avoids the loop color")
        total = total / mass
    out = {}
    for idx in itertools.product(range(W.k), repeat=m):
        G = ColoredHypergraph(W.r, q, W.k, tuple(i + 1 for i in idx))
        v = total[idx]
        out[G] = Fraction(v) if exact else float(v)
    if include_iota:
        out[IOTA] = (1 - Fraction(mass)) if exact else 1.0 - float(mass)
    return out


def finite_sample_distribution(G, q: int, guard=None):
    """Exact law of the induced sample G(q, G) over labelled q-vertex graphs."""
    from .core import induced_density

    G = _as_colored(G)
    return {F: induced_density(F, G, guard=guard) for F in all_colored(G.r, q, G.k)}


def random_step_kernel(r: int, t: int, rng, signed: bool = True, denominator: int = 8,
                       weights: str = "random") -> StepKernel:
    """Seeded random symmetric kernel with rational entries of the given denominator."""
    rng = np.random.default_rng(rng)
    lo = -denominator if signed else 0
    table = {}

    def fill(idx):
        if idx not in table:
            table[idx] = Fraction(int(rng.integers(lo, denominator + 1)), denominator)
        return table[idx]

    vals = symmetrize_from_sorted(r, t, fill)
    if weights == "uniform":
        w = [Fraction(1, t)] * t
    else:
        a = rng.integers(1, 6, size=t)
        w = [Fraction(int(x), int(a.sum())) for x in a]
    return StepKernel(tuple(w), vals)


def random_colored_kernel(r: int, t: int, k: int, rng, denominator: int = 6,
                          weights: str = "random") -> ColoredStepKernel:
    """Random per-cell color distributions with rational masses."""
    rng = np.random.default_rng(rng)
    vals = np.empty((k,) + (t,) * r, dtype=object)
    for idx in itertools.combinations_with_replacement(range(t), r):
        cuts = np.sort(rng.integers(0, denominator + 1, size=k - 1))
        parts = np.diff(np.concatenate([[0], cuts, [denominator]]))
        for p in set(itertools.permutations(idx)):
            for a in range(k):
                vals[(a,) + p] = Fraction(int(parts[a]), denominator)
    if weights == "uniform":
        w = [Fraction(1, t)] * t
    else:
        a = rng.integers(1, 6, size=t)
        w = [Fraction(int(x), int(a.sum())) for x in a]
    return ColoredStepKernel(tuple(w), vals)


def make_step_kernel(r: int, l: int, *args, **kwargs):
    """Only naive (r,1) step functions are supported; finer orders are rejected."""
    if l < r - 1:
        raise NotImplementedError("(r,l)-step functions with l < r-1 are not supported")
    return StepKernel(*args, **kwargs)
