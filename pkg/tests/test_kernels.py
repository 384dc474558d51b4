import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from hyperprop.core import ColoredHypergraph, Hypergraph, all_colored, random_hypergraph, slots
from hyperprop.errors import IncompatibleKernels, InvalidSample
from hyperprop.kernels import (CellPartition, ColoredStepKernel, StepKernel, common_refinement,
                               exact_sample_distribution, graph_to_kernel, random_colored_kernel,
                               random_step_kernel, sample_from_kernel, step_average, t_density_kernel,
                               tstar_kernel)
from hyperprop.core import tstar_density

F = Fraction


def test_graph_kernel_of_complete_graph():
    W = graph_to_kernel(Hypergraph.complete(2, 4))
    assert W.t == 4 and W.k == 2
    assert np.array_equal(W.values[0].astype(int), 1 - np.eye(4, dtype=int))
    assert np.array_equal(W.loop.astype(int), np.eye(4, dtype=int))


def test_graph_kernel_of_edgeless_graph():
    W = graph_to_kernel(Hypergraph.empty(3, 4))
    T = np.asarray(W.values[1]).astype(int)
    # color 2 ("non-edge") off the diagonal, loop exactly where a coordinate repeats
    for cell in itertools.product(range(4), repeat=3):
        rep = len(set(cell)) < 3
        assert T[cell] == (0 if rep else 1)
        assert int(W.loop[cell]) == int(rep)


def test_constant_kernel_product_of_independents():
    p = (F(1, 5), F(3, 10), F(1, 2))
    W = ColoredStepKernel((F(1),), np.array([[[x]] for x in p], dtype=object))
    for Fg in all_colored(2, 3, 3):
        assert t_density_kernel(Fg, W) == math.prod(p[c - 1] for c in Fg.colors)


@pytest.mark.parametrize("seed", range(3))
def test_t_density_sums_to_one(seed):
    W = random_colored_kernel(2, 3, 2, np.random.default_rng(seed))
    assert sum(t_density_kernel(Fg, W) for Fg in all_colored(2, 3, 2)) == 1


def _t_oracle(Fg, G):
    # direct n^q summation: a map hits F when every slot lands injectively on a slot of G's color
    col = dict(zip(slots(G.n, G.r), G.colors))
    hits = 0
    for f in itertools.product(range(G.n), repeat=Fg.n):
        ok = True
        for s, c in zip(slots(Fg.n, Fg.r), Fg.colors):
            img = tuple(sorted(f[v] for v in s))
            if len(set(img)) < Fg.r or col[img] != c:
                ok = False
                break
        hits += ok
    return F(hits, G.n**Fg.n)


@pytest.mark.parametrize("r,n", [(2, 5), (2, 6), (3, 5)])
def test_graph_kernel_density_matches_direct_sum(r, n):
    rng = np.random.default_rng(r * 10 + n)
    G = random_hypergraph(r, n, 0.5, seed=rng).to_colored()
    W = graph_to_kernel(G)
    for Fg in all_colored(r, r + 1, 2):
        assert t_density_kernel(Fg, W) == _t_oracle(Fg, G)


def test_t_density_rejects_mismatch():
    W = random_colored_kernel(2, 2, 2, np.random.default_rng(0))
    with pytest.raises(IncompatibleKernels):
        t_density_kernel(ColoredHypergraph.monochromatic(3, 3, k=2), W)


def test_deterministic_kernel_sample_is_blowup_restriction():
    # classes 0/1, edge exactly between different classes
    vals = np.array([[[0, 1], [1, 0]], [[1, 0], [0, 1]]], dtype=object)
    W = ColoredStepKernel((F(1, 2), F(1, 2)), vals)
    G, cls = sample_from_kernel(W, 6, seed=4, return_classes=True)
    for s, c in zip(slots(6, 2), G.colors):
        assert c == (1 if cls[s[0]] != cls[s[1]] else 2)


def test_sample_from_kernel_deterministic_per_seed():
    W = random_colored_kernel(3, 3, 2, np.random.default_rng(1))
    assert sample_from_kernel(W, 6, seed=9) == sample_from_kernel(W, 6, seed=9)


def test_sample_from_kernel_frequencies():
    W = random_colored_kernel(2, 2, 2, np.random.default_rng(0))
    dist = exact_sample_distribution(W, 2)
    rng = np.random.default_rng(12)
    N = 100_000
    hits = {}
    for _ in range(N):
        G = sample_from_kernel(W, 2, seed=rng)
        hits[G] = hits.get(G, 0) + 1
    for atom, p in dist.items():
        p = float(p)
        se = math.sqrt(p * (1 - p) / N)
        assert abs(hits.get(atom, 0) / N - p) <= 4 * se


def test_sample_from_kernel_small_q():
    W = random_colored_kernel(3, 2, 2, np.random.default_rng(0))
    with pytest.raises(InvalidSample):
        sample_from_kernel(W, 2, seed=0)


@pytest.mark.parametrize("seed", range(3))
def test_exact_distribution_at_q_equal_r(seed):
    W = random_colored_kernel(2, 3, 2, np.random.default_rng(seed))
    dist = exact_sample_distribution(W, 2)
    assert len(dist) == 2 and sum(dist.values()) == 1
    edge = ColoredHypergraph(2, 2, 2, (1,))
    dens = sum(wa * wb * W.values[0][a, b] for a, wa in enumerate(W.weights) for b, wb in enumerate(W.weights))
    assert dist[edge] == dens


def test_exact_distribution_matches_t_density():
    W = random_colored_kernel(2, 2, 2, np.random.default_rng(5))
    dist = exact_sample_distribution(W, 3)
    assert sum(dist.values()) == 1
    for atom, p in dist.items():
        assert p == t_density_kernel(atom, W)


def test_exact_distribution_conditions_on_loops():
    G = random_hypergraph(2, 4, 0.5, seed=2)
    W = graph_to_kernel(G)
    dist = exact_sample_distribution(W, 2)
    assert sum(dist.values()) == 1
    assert dist[ColoredHypergraph(2, 2, 2, (1,))] == G.density()


def test_step_average_discrete_and_trivial(rng):
    W = random_colored_kernel(2, 3, 2, rng)
    same = step_average(W, CellPartition.discrete(3))
    assert np.array_equal(same.values, W.values)
    flat = step_average(W, CellPartition.trivial(3), compress=True)
    assert flat.t == 1
    for a in range(2):
        mean = sum(W.weights[i] * W.weights[j] * W.values[a][i, j] for i in range(3) for j in range(3))
        assert flat.values[a][0, 0] == mean


def test_step_average_idempotent(rng):
    for r in (2, 3):
        U = random_step_kernel(r, 4, rng)
        Q = CellPartition((0, 1, 0, 1))
        once = step_average(U, Q)
        assert np.array_equal(step_average(once, Q).values, once.values)


def test_step_average_preserves_mass(rng):
    U = random_step_kernel(3, 4, rng)
    V = step_average(U, CellPartition((0, 0, 1, 2)))
    assert U.mass().sum() == V.mass().sum()


def test_tstar_kernel_matches_graph_density():
    G = random_hypergraph(2, 5, 0.5, seed=8)
    A = np.asarray(G.adjacency, dtype=object)
    U = StepKernel(tuple([F(1, 5)] * 5), A)
    C4 = Hypergraph(2, 4, frozenset({(0, 1), (1, 2), (2, 3), (0, 3)}))
    assert tstar_kernel(C4, U) == tstar_density(C4, G)


def test_common_refinement_keeps_mass():
    w, pa, pb = common_refinement((F(1, 3), F(2, 3)), (F(1, 2), F(1, 2)))
    assert sum(w) == 1
    assert [sum(x for x, p in zip(w, pa) if p == i) for i in range(2)] == [F(1, 3), F(2, 3)]
    assert [sum(x for x, p in zip(w, pb) if p == i) for i in range(2)] == [F(1, 2), F(1, 2)]


def test_kernel_validation():
    with pytest.raises(ValueError):
        StepKernel((F(1, 2), F(1, 2)), np.array([[0, 1], [0, 0]], dtype=object))
    with pytest.raises(ValueError):
        StepKernel((F(1, 2), F(1, 3)), np.zeros((2, 2), dtype=object))
    with pytest.raises(ValueError):
        ColoredStepKernel((F(1),), np.array([[[F(1, 2)]], [[F(1, 3)]]], dtype=object))
    with pytest.raises(ValueError):
        CellPartition((0, 2))
