"""Finite r-uniform hypergraphs, edge colorings and induced sampling.

Vertices are 0-based internally; the text format is 1-based.  An edge slot is
an r-subset of the vertex set and slots are listed in lexicographic order of
their sorted vertex tuples (``itertools.combinations``).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator, Sequence

import numpy as np

from . import limits
from ._contract import hom_sum, injective_hom_sum
from .errors import EnumerationTooLarge, InvalidColor, InvalidSample


@lru_cache(maxsize=128)
def slots(n: int, r: int) -> tuple:
    return tuple(itertools.combinations(range(n), r))


@lru_cache(maxsize=128)
def slot_array(n: int, r: int) -> np.ndarray:
    a = np.array(slots(n, r), dtype=np.int64).reshape(-1, r)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=128)
def slot_index(n: int, r: int) -> dict:
    return {s: i for i, s in enumerate(slots(n, r))}


def falling(n: int, q: int) -> int:
    return math.perm(n, q) if q <= n else 0


def encode(alpha: int, beta: int, k: int) -> int:
    """Integer code of the refined color (alpha, beta) in [t] x [k]."""
    return (alpha - 1) * k + beta


def decode(c: int, k: int) -> tuple[int, int]:
    return (c - 1) // k + 1, (c - 1) % k + 1


@dataclass(frozen=True)
class Hypergraph:
    """Simple r-uniform hypergraph on vertices 0..n-1."""

    r: int
    n: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if self.r < 1 or self.n < 0:
            raise ValueError(f"bad shape r={self.r} n={self.n}")
        raw = list(self.edges)
        norm = set()
        for e in raw:
            t = tuple(sorted(int(v) for v in e))
            if len(t) != self.r or len(set(t)) != self.r:
                raise ValueError(f"edge {tuple(e)} is not an {self.r}-set")
            if t[0] < 0 or t[-1] >= self.n:
                raise ValueError(f"edge {tuple(e)} out of range for n={self.n}")
            norm.add(t)
        if len(norm) != len(raw):
            raise ValueError("duplicate edges")
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def complete(cls, r, n):
        return cls(r, n, frozenset(slots(n, r)))

    @classmethod
    def empty(cls, r, n):
        return cls(r, n, frozenset())

    @property
    def m(self) -> int:
        return len(self.edges)

    def density(self) -> Fraction:
        return Fraction(self.m, math.comb(self.n, self.r))

    def to_colored(self) -> "ColoredHypergraph":
        """Color 1 marks edges and color 2 non-edges."""
        return ColoredHypergraph.from_hypergraph(self)

    def relabel(self, perm) -> "Hypergraph":
        perm = list(perm)
        return Hypergraph(self.r, self.n, frozenset(tuple(perm[v] for v in e) for e in self.edges))

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Dense 0/1 tensor of shape (n,)*r, zero on repeated indices."""
        return (self.to_colored().tensor == 1).astype(np.int64)


@dataclass(frozen=True)
class ColoredHypergraph:
    """Total map from r-subsets of [n] to colors 1..k, stored in slot order."""

    r: int
    n: int
    k: int
    colors: tuple

    def __post_init__(self):
        if self.r < 1 or self.n < 0 or self.k < 1:
            raise ValueError(f"bad shape r={self.r} n={self.n} k={self.k}")
        cols = tuple(int(c) for c in self.colors)
        if len(cols) != math.comb(self.n, self.r):
            raise ValueError(f"expected {math.comb(self.n, self.r)} slot colors, got {len(cols)}")
        if cols and (min(cols) < 1 or max(cols) > self.k):
            raise InvalidColor(f"colors must lie in 1..{self.k}")
        object.__setattr__(self, "colors", cols)

    @classmethod
    def from_hypergraph(cls, H: Hypergraph) -> "ColoredHypergraph":
        cols = tuple(1 if s in H.edges else 2 for s in slots(H.n, H.r))
        return cls(H.r, H.n, 2, cols)

    @classmethod
    def from_map(cls, r, n, k, mapping, default=None):
        default = k if default is None else default
        idx = slot_index(n, r)
        cols = [default] * len(idx)
        for e, c in mapping.items():
            cols[idx[tuple(sorted(e))]] = c
        return cls(r, n, k, tuple(cols))

    @classmethod
    def monochromatic(cls, r, n, k=1, color=1):
        return cls(r, n, k, (color,) * math.comb(n, r))

    def color(self, e) -> int:
        return self.colors[slot_index(self.n, self.r)[tuple(sorted(e))]]

    @cached_property
    def color_array(self) -> np.ndarray:
        return np.asarray(self.colors, dtype=np.int64)

    @cached_property
    def tensor(self) -> np.ndarray:
        """Color tensor of shape (n,)*r with 0 (the loop color) on repeated indices."""
        n, r = self.n, self.r
        out = np.zeros((n,) * r, dtype=np.int16)
        if not self.colors:
            return out
        S = slot_array(n, r)
        c = self.color_array
        for p in itertools.permutations(range(r)):
            out[tuple(S[:, list(p)].T)] = c
        out.setflags(write=False)
        return out

    def indicator(self, alpha: int) -> np.ndarray:
        return (self.tensor == alpha).astype(np.int64)

    def counts(self) -> np.ndarray:
        """Number of slots of each color 1..k."""
        return np.bincount(self.color_array, minlength=self.k + 1)[1:]

    def color_class(self, alpha: int) -> Hypergraph:
        S = slots(self.n, self.r)
        return Hypergraph(self.r, self.n, frozenset(S[i] for i, c in enumerate(self.colors) if c == alpha))

    def to_hypergraph(self) -> Hypergraph:
        return self.color_class(1)

    def relabel(self, perm) -> "ColoredHypergraph":
        """Vertex v goes to perm[v]."""
        perm = list(perm)
        mapping = {tuple(perm[v] for v in s): c for s, c in zip(slots(self.n, self.r), self.colors)}
        return ColoredHypergraph.from_map(self.r, self.n, self.k, mapping)


@dataclass(frozen=True)
class Coloring:
    """A k-coloring: refined colors (alpha, beta) encoded as (alpha-1)*k+beta."""

    base: ColoredHypergraph
    refined: ColoredHypergraph
    k: int

    def __post_init__(self):
        b, f = self.base, self.refined
        if (b.r, b.n) != (f.r, f.n) or f.k != b.k * self.k:
            raise InvalidColor("refined graph does not match the base shape")
        if discolor(f, self.k).colors != b.colors:
            raise InvalidColor("refined coloring does not discolor to the base")

    def pair(self, e) -> tuple[int, int]:
        return decode(self.refined.color(e), self.k)

    @classmethod
    def from_pairs(cls, base: ColoredHypergraph, second, k: int) -> "Coloring":
        """Build from the second coordinates (slot order, values 1..k)."""
        cols = tuple(encode(a, int(b), k) for a, b in zip(base.colors, second))
        return cls(base, ColoredHypergraph(base.r, base.n, base.k * k, cols), k)

    @property
    def second(self) -> tuple:
        return tuple(decode(c, self.k)[1] for c in self.refined.colors)


def discolor(C, k: int | None = None) -> ColoredHypergraph:
    """Forget the second color coordinate.

    Accepts a ``Coloring`` or a refined graph plus ``k``.
    """
    if isinstance(C, Coloring):
        G, k = C.refined, C.k
    else:
        G = C
        if k is None:
            raise InvalidColor("k is required for a bare refined graph")
    if G.k % k:
        raise InvalidColor(f"{G.k} refined colors are not a multiple of k={k}")
    t = G.k // k
    return ColoredHypergraph(G.r, G.n, t, tuple(decode(c, k)[0] for c in G.colors))


def _as_colored(G) -> ColoredHypergraph:
    if isinstance(G, Hypergraph):
        return G.to_colored()
    if isinstance(G, ColoredHypergraph):
        return G
    raise TypeError(f"expected a hypergraph, got {type(G).__name__}")


def enumerate_colorings(G, k: int, guard=None) -> Iterator[Coloring]:
    """Yield every k-coloring of G in lexicographic order of second coordinates."""
    G = _as_colored(G)
    if k < 1:
        raise ValueError("k must be positive")
    m = len(G.colors)
    total = k**m
    g = limits.guard(guard)
    if total > g:
        raise EnumerationTooLarge("colorings", total, g)
    for second in itertools.product(range(1, k + 1), repeat=m):
        yield Coloring.from_pairs(G, second, k)


def induced_subgraph(G, S: Sequence[int]):
    """Restriction to the vertices S, relabelled 0..|S|-1 in the given order."""
    colored = _as_colored(G)
    if isinstance(S, (set, frozenset)):
        S = sorted(S)
    S = [int(v) for v in S]
    if len(S) < colored.r:
        raise InvalidSample(f"sample of {len(S)} vertices is smaller than r={colored.r}")
    if len(set(S)) != len(S) or min(S) < 0 or max(S) >= colored.n:
        raise InvalidSample("sample vertices must be distinct and in range")
    q = len(S)
    idx = np.asarray(S, dtype=np.int64)
    sub = slot_array(q, colored.r)
    cols = colored.tensor[tuple(idx[sub].T)] if len(sub) else np.zeros(0, dtype=np.int64)
    out = ColoredHypergraph(colored.r, q, colored.k, tuple(int(c) for c in cols))
    return out.to_hypergraph() if isinstance(G, Hypergraph) else out


def sample_q(G, q: int, seed=None, return_map: bool = False):
    """Induced subgraph on a uniformly random ordered q-subset."""
    colored = _as_colored(G)
    if q > colored.n or q < colored.r:
        raise InvalidSample(f"need r <= q <= n, got q={q} (r={colored.r}, n={colored.n})")
    rng = np.random.default_rng(seed)
    S = rng.choice(colored.n, size=q, replace=False)
    H = induced_subgraph(G, S)
    return (H, tuple(int(v) for v in S)) if return_map else H


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    samples: int

    def __float__(self):
        return float(self.value)


def _perm_chunks(n, q, size=1 << 15):
    it = itertools.permutations(range(n), q)
    while True:
        block = list(itertools.islice(it, size))
        if not block:
            return
        yield np.array(block, dtype=np.int64).reshape(-1, q)


def induced_density(F, G, samples: int | None = None, seed=None, guard=None):
    """t(F,G) = P(F equals the induced sample on |V(F)| ordered vertices).

    Exact (Fraction) when the (n)_q injective tuples fit in the guard,
    otherwise a Monte-Carlo ``Estimate`` if ``samples`` is given.
    """
    F, G = _as_colored(F), _as_colored(G)
    if F.r != G.r or F.k != G.k:
        raise ValueError("F and G must share r and k")
    q, n = F.n, G.n
    if q > n:
        raise InvalidSample(f"pattern has {q} vertices but G only {n}")
    if q < G.r:
        return Fraction(1)
    sub = slot_array(q, G.r)
    target = F.color_array
    total = falling(n, q)
    g = limits.guard(guard)
    if total <= g and samples is None:
        hits = 0
        for T in _perm_chunks(n, q):
            got = G.tensor[tuple(T[:, sub].T)]
            hits += int(np.all(got.T == target, axis=1).sum())
        return Fraction(hits, total)
    if samples is None:
        raise EnumerationTooLarge("injective tuples", total, g)
    rng = np.random.default_rng(seed)
    T = np.stack([rng.choice(n, size=q, replace=False) for _ in range(samples)])
    got = G.tensor[tuple(T[:, sub].T)]
    p = float(np.all(got.T == target, axis=1).mean())
    return Estimate(p, math.sqrt(max(p * (1 - p), 0.0) / samples), samples)


def _hom_pattern(H):
    if isinstance(H, ColoredHypergraph):
        H = H.to_hypergraph()
    return H.n, sorted(H.edges)


def tstar_density(H, G, color: int = 1, guard=None) -> Fraction:
    """Homomorphism density of H in the naive kernel of G (maps [q] -> [n]).

    Only ``color`` counts as an edge; repeated-vertex tuples carry the loop
    color and therefore contribute 0.
    """
    G = _as_colored(G)
    q, edges = _hom_pattern(H)
    n = G.n
    g = limits.guard(guard)
    if n**q > g and q > 2 * G.r + 2:
        raise EnumerationTooLarge("vertex maps", n**q, g)
    if not edges:
        return Fraction(1)
    A = G.indicator(color)
    if n**q >= 2**62:
        A = A.astype(object)
    return Fraction(int(hom_sum(q, edges, A)), n**q)


def tinj_density(H, G, color: int = 1) -> Fraction:
    """Injective homomorphism density: injective maps / (n)_q."""
    G = _as_colored(G)
    q, edges = _hom_pattern(H)
    if q > G.n:
        return Fraction(0)
    if not edges:
        return Fraction(1)
    A = G.indicator(color).astype(object)
    return Fraction(int(injective_hom_sum(q, edges, A, t=G.n)), falling(G.n, q))


def all_colored(r: int, q: int, k: int) -> Iterator[ColoredHypergraph]:
    """Every k-colored r-graph on q labelled vertices."""
    m = math.comb(q, r)
    for cols in itertools.product(range(1, k + 1), repeat=m):
        yield ColoredHypergraph(r, q, k, cols)


def random_hypergraph(r: int, n: int, p: float, seed=None) -> Hypergraph:
    rng = np.random.default_rng(seed)
    S = slots(n, r)
    keep = rng.random(len(S)) < p
    return Hypergraph(r, n, frozenset(s for s, b in zip(S, keep) if b))
