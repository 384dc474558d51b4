import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from hyperprop.core import ColoredHypergraph, Hypergraph, random_hypergraph
from hyperprop.energy import (DensityTensor, PartitionFamily, RealArray, density_tensor_of, ggse, ggse_energy,
                              gse_energy, gse_graph, gse_kernel, gse_sampling_check, proper_subsets,
                              sample_gse, satisfies_tensor)
from hyperprop.kernels import StepKernel, random_step_kernel

F = Fraction


def _rational_J(rng, r, s):
    a = np.empty((s,) * r, dtype=object)
    for idx in itertools.product(range(s), repeat=r):
        a[idx] = F(int(rng.integers(-4, 5)), 4)
    return RealArray(a)


def brute_gse(G, J):
    A = np.asarray(J.entries, dtype=object)
    best = None
    for lab in itertools.product(range(J.s), repeat=G.n):
        v = sum(A[tuple(lab[x] for x in p)] for e in G.edges for p in itertools.permutations(e))
        best = v if best is None else max(best, v)
    return F(best) / G.n**G.r


def test_single_class_formula(rng):
    for r in (2, 3):
        G = random_hypergraph(r, 6, 0.5, seed=rng)
        J = RealArray(np.full((1,) * r, F(3, 4), dtype=object))
        v, _ = gse_graph(G, J)
        assert v == F(3, 4) * math.factorial(r) * G.m / 6**r


def test_maxcut_on_k4():
    J = RealArray(np.array([[0, 1], [1, 0]], dtype=object))
    v, lab = gse_graph(Hypergraph.complete(2, 4), J)
    assert v == F(1, 2)
    assert sorted(lab).count(0) == 2


def test_zero_array(rng):
    G = random_hypergraph(2, 5, 0.6, seed=rng)
    assert gse_graph(G, RealArray(np.zeros((3, 3), dtype=object)))[0] == 0


@pytest.mark.parametrize("seed", range(8))
def test_gse_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    r = 2 if seed % 2 else 3
    n = int(rng.integers(r, 7))
    s = int(rng.integers(1, 4)) if n <= 5 else 2
    G = random_hypergraph(r, n, 0.5, seed=rng)
    J = _rational_J(rng, r, s)
    v, lab = gse_graph(G, J)
    assert v == brute_gse(G, J)
    assert gse_energy(G, J, lab) == v


def test_local_mode_is_a_lower_bound(rng):
    G = random_hypergraph(2, 9, 0.5, seed=rng)
    J = _rational_J(rng, 2, 3)
    ex, _ = gse_graph(G, J)
    loc, lab = gse_graph(G, J, mode="local", seed=1)
    assert loc <= float(ex) + 1e-12
    assert math.isclose(float(gse_energy(G, J, lab)), loc, abs_tol=1e-12)


def test_gse_kernel_constant_and_ordering(rng):
    U = StepKernel.constant(F(1, 2), 2, t=2)
    J1 = RealArray(np.full((1, 1), F(3, 5), dtype=object))
    assert math.isclose(gse_kernel(U, J1)[0], 0.3)
    for _ in range(5):
        U = random_step_kernel(2, 3, rng)
        J = _rational_J(rng, 2, 2)
        assert gse_kernel(U, J, mode="fractional")[0] >= gse_kernel(U, J, mode="vertex")[0] - 1e-12


def test_gse_kernel_rank_one_diagonal():
    f = np.array([F(1), F(1, 2), F(1, 4)], dtype=object)
    w = (F(1, 2), F(1, 4), F(1, 4))
    U = StepKernel(w, np.multiply.outer(f, f))
    J = RealArray(np.diag([F(1, 3), F(1), F(1, 2)]).astype(object))
    # all mass on the class with the largest diagonal entry: max_j J_jj (int f)^2
    mean = sum(a * b for a, b in zip(f, w))
    assert math.isclose(gse_kernel(U, J)[0], float(mean**2), rel_tol=1e-9)


def _brute_sample_gse(U, J, counts):
    cls = [c for c, m in enumerate(counts) for _ in range(m)]
    q, r = len(cls), U.r
    Uv, Jv = np.asarray(U.values, float), np.asarray(J.entries, float)
    best = -math.inf
    for lab in itertools.product(range(J.s), repeat=q):
        v = sum(Uv[tuple(cls[x] for x in p)] * Jv[tuple(lab[x] for x in p)]
                for p in itertools.permutations(range(q), r))
        best = max(best, v / q**r)
    return best


@pytest.mark.parametrize("seed", range(4))
def test_sample_gse_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    for r in (2, 3):
        U = random_step_kernel(r, 3, rng)
        J = RealArray(rng.normal(size=(2,) * r))
        counts = rng.integers(0, 3, size=3)
        counts[0] += r
        assert math.isclose(sample_gse(U, J, counts)[0], _brute_sample_gse(U, J, counts), abs_tol=1e-9)


def test_sampling_check_degenerate(rng):
    Z = StepKernel.constant(F(0), 2, t=2)
    J = _rational_J(rng, 2, 2)
    rep = gse_sampling_check(Z, J, 30, 0.25, 10, seed=0)
    assert rep.passed and rep.data["max_deviation"] == 0
    U = random_step_kernel(2, 2, rng)
    rep = gse_sampling_check(U, RealArray(np.zeros((2, 2))), 30, 0.25, 10, seed=0)
    assert rep.data["max_deviation"] == 0


def test_ggse_reduces_to_gse_for_graphs(rng):
    for _ in range(6):
        n = int(rng.integers(3, 8))
        G = random_hypergraph(2, n, 0.5, seed=rng)
        J = _rational_J(rng, 2, 2)
        zero = RealArray(np.zeros((2, 2), dtype=object))
        v, lab = ggse(G.to_colored(), [J, zero])
        assert v == gse_graph(G, J)[0]


def test_ggse_single_class(rng):
    H = ColoredHypergraph.from_hypergraph(random_hypergraph(3, 5, 0.5, seed=rng))
    Js = [RealArray(np.full((1, 1, 1), c, dtype=object)) for c in (F(1, 2), F(-1, 4))]
    v, _ = ggse(H, Js)
    counts = [sum(1 for c in H.colors if c == a) for a in (1, 2)]
    assert v == (F(1, 2) * counts[0] - F(1, 4) * counts[1]) * 6 / 5**3


def test_ggse_three_graph_brute_force(rng):
    H = ColoredHypergraph.monochromatic(3, 5)
    J = _rational_J(rng, 3, 2)
    v, lab = ggse(H, [J], t=2)
    # every one of the 2^10 labelings of the 2-subsets
    best = max(ggse_energy(H, [J], L) for L in itertools.product(range(2), repeat=10))
    assert v == best
    assert ggse_energy(H, [J], lab) == v


def _mu_oracle(H, P):
    subs = proper_subsets(H.r)
    out = {}
    for e in H.edges:
        for p in itertools.permutations(e):
            phi = tuple(P.label([p[i] for i in A]) for A in subs)
            out[phi] = out.get(phi, 0) + 1
    return {k: F(v, H.n**H.r) for k, v in out.items()}


def test_density_tensor_one_class(rng):
    H = random_hypergraph(3, 5, 0.5, seed=rng)
    P = PartitionFamily(5, 3, 1, ((0,) * 5, (0,) * 10))
    psi = density_tensor_of(H, P)
    assert psi.rho[0] == (F(5, 5),)
    assert psi.rho[1] == (F(10, 25),)
    assert psi.mu[(0,) * 6] == F(6 * H.m, 125)


def test_density_tensor_edgeless(rng):
    P = PartitionFamily.random(5, 3, 2, rng)
    psi = density_tensor_of(Hypergraph.empty(3, 5), P)
    assert all(v == 0 for v in psi.mu.values())


def test_density_tensor_k4_split():
    P = PartitionFamily(4, 2, 2, ((0, 0, 1, 1),))
    psi = density_tensor_of(Hypergraph.complete(2, 4), P)
    # ordered pairs: 2 inside each half, 8 across (4 each way)
    assert psi.mu == {(0, 0): F(2, 16), (1, 1): F(2, 16), (0, 1): F(4, 16), (1, 0): F(4, 16)}
    assert psi.rho == ((F(2, 4), F(2, 4)),)


@pytest.mark.parametrize("seed", range(5))
def test_density_tensor_against_oracle_and_round_trip(seed):
    rng = np.random.default_rng(seed)
    r = 2 + seed % 2
    n = int(rng.integers(r, 7))
    H = random_hypergraph(r, n, 0.5, seed=rng)
    P = PartitionFamily.random(n, r, 2, rng)
    psi = density_tensor_of(H, P)
    oracle = _mu_oracle(H, P)
    assert all(psi.mu[k] == oracle.get(k, 0) for k in psi.mu)
    found = satisfies_tensor(H, psi, tol=0)
    assert found is not None and density_tensor_of(H, found).distance(psi) == 0


def test_infeasible_tensor():
    H = Hypergraph.complete(2, 4)
    mu = {(a, b): F(0) for a in range(2) for b in range(2)}
    mu[(1, 1)] = F(1)
    psi = DensityTensor(2, 2, ((F(1), F(0)),), mu)
    assert satisfies_tensor(H, psi, tol=0) is None


def test_tolerance_one_accepts_anything(rng):
    H = random_hypergraph(3, 5, 0.5, seed=rng)
    mu = {phi: F(0) for phi in itertools.product(range(2), repeat=6)}
    psi = DensityTensor(3, 2, ((F(1, 2), F(1, 2)), (F(1, 2), F(1, 2))), mu)
    assert satisfies_tensor(H, psi, tol=1) is not None


def test_partition_family_validation():
    with pytest.raises(ValueError):
        PartitionFamily(4, 3, 2, ((0, 1, 0, 1),))
    with pytest.raises(ValueError):
        PartitionFamily(3, 2, 2, ((0, 1, 2),))
