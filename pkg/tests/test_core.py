import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from hyperprop.core import (ColoredHypergraph, Coloring, Hypergraph, all_colored, discolor, decode, encode,
                            enumerate_colorings, induced_density, induced_subgraph, random_hypergraph,
                            sample_q, slots, tinj_density, tstar_density)
from hyperprop.errors import InvalidColor, InvalidSample

from conftest import fano, graph


def test_slots_lexicographic():
    assert slots(4, 2) == ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def test_encode_decode_round_trip():
    for k in (1, 2, 3):
        for a in range(1, 4):
            for b in range(1, k + 1):
                assert decode(encode(a, b, k), k) == (a, b)


def test_induced_full_set_is_identity(rng):
    G = random_hypergraph(3, 6, 0.5, seed=rng).to_colored()
    assert induced_subgraph(G, range(6)) == G


def test_induced_complete_stays_complete():
    K5 = Hypergraph.complete(2, 5)
    assert induced_subgraph(K5, [0, 1, 2]) == Hypergraph.complete(2, 3)


def _edge_count(H):
    return H.m


def test_induced_fano_edge_counts():
    F = fano()
    for S in itertools.combinations(range(7), 4):
        direct = sum(set(e) <= set(S) for e in F.edges)
        assert _edge_count(induced_subgraph(F, S)) == direct


def test_sample_q_full_is_relabeling(rng):
    G = random_hypergraph(2, 7, 0.4, seed=rng)
    H, smap = sample_q(G, 7, seed=3, return_map=True)
    assert sorted(smap) == list(range(7))
    # vertex i of H is vertex smap[i] of G
    assert {tuple(sorted((smap[u], smap[v]))) for u, v in H.edges} == set(G.edges)


def test_sample_q_edgeless():
    H = sample_q(Hypergraph.empty(3, 8), 5, seed=1)
    assert _edge_count(H) == 0


def test_sample_q_rejects_bad_q():
    G = Hypergraph.complete(3, 5)
    with pytest.raises(InvalidSample):
        sample_q(G, 2, seed=0)
    with pytest.raises(InvalidSample):
        sample_q(G, 6, seed=0)


def test_sample_edge_density_unbiased():
    G = random_hypergraph(2, 12, 0.35, seed=5)
    p = G.m / math.comb(12, 2)
    rng = np.random.default_rng(11)
    vals = np.array([_edge_count(sample_q(G, 5, seed=rng)) / 10 for _ in range(10_000)])
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - p) <= 3 * se


def test_enumerate_colorings_counts_and_round_trip():
    G = graph(3, [(0, 1), (1, 2), (0, 2)]).to_colored()
    one = list(enumerate_colorings(G, 1))
    assert len(one) == 1 and discolor(one[0]) == G
    # 3 slots, each colored 1 or 2
    all2 = list(enumerate_colorings(G, 2))
    assert len(all2) == 8
    assert len({C.refined for C in all2}) == 8
    assert all(discolor(C) == G for C in all2)


def test_discolor_random_refinement(rng):
    K4 = ColoredHypergraph.from_map(2, 4, 2, {(0, 1): 1, (0, 2): 1, (1, 3): 1}, default=2)
    second = tuple(int(x) for x in rng.integers(1, 4, size=6))
    C = Coloring.from_pairs(K4, second, 3)
    assert discolor(C) == K4
    for e in slots(4, 2):
        assert C.pair(e)[0] == K4.color(e)


def test_discolor_single_color_is_monochromatic():
    G = ColoredHypergraph.monochromatic(2, 4)
    C = Coloring.from_pairs(G, (1, 2, 1, 2, 1, 2), 2)
    assert discolor(C) == G


def test_from_pairs_rejects_bad_color():
    G = ColoredHypergraph.monochromatic(2, 3)
    with pytest.raises(InvalidColor):
        Coloring.from_pairs(G, (1, 3, 1), 2)


def test_induced_density_basics(rng):
    G = random_hypergraph(3, 7, 0.5, seed=rng)
    single = Hypergraph(3, 3, frozenset({(0, 1, 2)}))
    assert induced_density(single, G) == Fraction(G.m, math.comb(7, 3))


def test_induced_density_sums_to_one(rng):
    for r, n in ((2, 5), (3, 6)):
        G = random_hypergraph(r, n, 0.5, seed=rng).to_colored()
        total = sum(induced_density(F, G) for F in all_colored(r, r + 1, 2))
        assert total == 1


def _tstar_oracle(H, G, q):
    adj = set(G.edges)
    hits = 0
    for f in itertools.product(range(G.n), repeat=q):
        hits += all(tuple(sorted(f[v] for v in e)) in adj and len({f[v] for v in e}) == len(e) for e in H.edges)
    return Fraction(hits, G.n**q)


def _tinj_oracle(H, G, q):
    adj = set(G.edges)
    tot = hits = 0
    for f in itertools.permutations(range(G.n), q):
        tot += 1
        hits += all(tuple(sorted(f[v] for v in e)) in adj for e in H.edges)
    return Fraction(hits, tot)


def test_tstar_single_edge_complete():
    n, r = 6, 3
    edge = Hypergraph(3, 3, frozenset({(0, 1, 2)}))
    assert tstar_density(edge, Hypergraph.complete(r, n)) == Fraction(n * (n - 1) * (n - 2), n**3)


def test_tstar_edgeless_pattern_is_one(rng):
    assert tstar_density(Hypergraph.empty(2, 3), random_hypergraph(2, 5, 0.5, seed=rng)) == 1


@pytest.mark.parametrize("seed", range(4))
def test_tstar_and_tinj_against_direct_sums(seed):
    rng = np.random.default_rng(seed)
    G = random_hypergraph(2, 6, 0.5, seed=rng)
    for q in (2, 3, 4):
        H = random_hypergraph(2, q, 0.6, seed=rng)
        assert tstar_density(H, G) == _tstar_oracle(H, G, q)
        assert tinj_density(H, G) == _tinj_oracle(H, G, q)


def test_hypergraph_validation():
    with pytest.raises(ValueError):
        Hypergraph(2, 3, frozenset({(0, 0)}))
    with pytest.raises(ValueError):
        Hypergraph(2, 3, frozenset({(0, 3)}))
