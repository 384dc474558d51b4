import math
from fractions import Fraction

import numpy as np
import pytest

from hyperprop.core import ColoredHypergraph, random_hypergraph
from hyperprop.errors import IncompatibleKernels
from hyperprop.kernels import (ColoredStepKernel, StepKernel, blowup_k2, exact_sample_distribution,
                               random_colored_kernel, random_step_kernel, tstar_kernel)
from hyperprop.sampling import (binomial_se, concentration_experiment, counting_lemma_check, coupling_check,
                                eq1_check, eq2_check, maximal_coupling, sampled_cutnorm_check, trial_seeds,
                                tstar_array, tv_distance, weighted_sample)

F = Fraction


def _bernoulli(p):
    return ColoredStepKernel((F(1),), np.array([[[p]], [[1 - p]]], dtype=object))


def test_tv_basics():
    mu = exact_sample_distribution(_bernoulli(F(3, 10)), 3)
    assert tv_distance(mu, mu) == 0
    e, ne = ColoredHypergraph(2, 2, 2, (1,)), ColoredHypergraph(2, 2, 2, (2,))
    assert tv_distance({e: F(1), ne: F(0)}, {e: F(0), ne: F(1)}) == 1
    nu = exact_sample_distribution(_bernoulli(F(1, 2)), 2)
    assert tv_distance(exact_sample_distribution(_bernoulli(F(3, 10)), 2), nu) == F(1, 5)


def test_tv_rejects_different_universes():
    with pytest.raises(IncompatibleKernels):
        tv_distance(exact_sample_distribution(_bernoulli(F(1, 2)), 2),
                    exact_sample_distribution(_bernoulli(F(1, 2)), 3))


def test_maximal_coupling_attains_tv(rng):
    U, W = (random_colored_kernel(2, 2, 2, rng) for _ in range(2))
    mu, nu = exact_sample_distribution(U, 3), exact_sample_distribution(W, 3)
    pi = maximal_coupling(mu, nu)
    ok, off = coupling_check(pi, mu, nu)
    assert ok and off == tv_distance(mu, nu)


def test_counting_lemma_identical_kernels(rng):
    U = random_colored_kernel(2, 2, 2, rng)
    rep = counting_lemma_check(U, U, 3)
    assert rep.passed and rep.data["tv"] == 0 and rep.data["rhs"] == 0


@pytest.mark.parametrize("seed", range(3))
def test_counting_lemma_random_pairs(seed):
    rng = np.random.default_rng(seed)
    U, W = (random_colored_kernel(2, 2, 2, rng) for _ in range(2))
    rep = counting_lemma_check(U, W, 3)
    assert rep.passed
    # the constant k^(q^r) q^r / (2 r!) = 2^9 * 9 / 4 makes random pairs vacuous
    assert rep.data["constant"] == F(2**9 * 9, 4)
    assert rep.data["vacuous"] == (rep.data["rhs"] >= 1)


def test_counting_lemma_rejects_mismatch(rng):
    with pytest.raises(IncompatibleKernels):
        counting_lemma_check(random_colored_kernel(2, 2, 2, rng), random_colored_kernel(2, 2, 3, rng), 2)


def test_weighted_sample_zero_on_repeats(rng):
    U = random_step_kernel(3, 3, rng)
    cls, A = weighted_sample(U, 6, rng)
    assert A.shape == (6, 6, 6)
    for i in range(6):
        assert A[i, i, :].any() == False and A[:, i, i].any() == False and A[i, :, i].any() == False
    assert A[0, 1, 2] == float(U.values[cls[0], cls[1], cls[2]])


def test_tstar_array_matches_kernel_density():
    G = random_hypergraph(2, 6, 0.5, seed=1)
    A = np.asarray(G.adjacency, dtype=float)
    U = StepKernel(tuple([F(1, 6)] * 6), np.asarray(G.adjacency, dtype=object))
    C4 = blowup_k2(2)
    assert math.isclose(tstar_array(C4, A), float(tstar_kernel(C4, U)), rel_tol=1e-12)


def test_concentration_large_delta_never_deviates(rng):
    U = random_step_kernel(2, 3, rng)
    rep = concentration_experiment(U, blowup_k2(2), 30, 2.0, 50, seed=1)
    assert rep.data["empirical_rate"] == 0 and rep.data["bound"] >= 0 and rep.passed


def test_concentration_shrinks_with_q():
    G = random_hypergraph(2, 8, 0.5, seed=3)
    U = StepKernel(tuple([F(1, 8)] * 8), np.asarray(G.adjacency, dtype=object))
    small = concentration_experiment(U, blowup_k2(2), 10, 0.1, 200, seed=2)
    large = concentration_experiment(U, blowup_k2(2), 200, 0.1, 200, seed=2)
    assert large.data["mean_deviation"] < small.data["mean_deviation"]
    assert large.data["mean_deviation"] < 0.05


def test_concentration_seeded():
    U = random_step_kernel(2, 3, np.random.default_rng(4))
    a = concentration_experiment(U, blowup_k2(2), 40, 0.1, 30, seed=9)
    b = concentration_experiment(U, blowup_k2(2), 40, 0.1, 30, seed=9)
    assert np.array_equal(a.data["deviations"], b.data["deviations"])


def test_trial_seeds_independent_of_count():
    a = [np.random.default_rng(s).random() for s in trial_seeds(5, 3)]
    b = [np.random.default_rng(s).random() for s in trial_seeds(5, 10)][:3]
    assert a == b


def test_binomial_se():
    assert binomial_se(0.5, 100) == pytest.approx(0.05)
    assert binomial_se(0.0, 10) == 0


def test_sampled_cutnorm_zero_kernel():
    Z = StepKernel.constant(F(0), 2, t=2)
    rep = sampled_cutnorm_check([Z], 0.5, 2, 12, 20, seed=0)
    assert rep.passed and rep.data["max_upper"] == 0


def test_sampled_cutnorm_small_norm_pass_rate():
    v = F(1, 10**5)
    U = StepKernel((F(1, 2), F(1, 2)), np.array([[v, -v], [-v, v]], dtype=object))
    rep = sampled_cutnorm_check([U], 0.5, 2, 20, 500, seed=3)
    assert rep.data["outcome"] == "evaluated"
    assert rep.data["pass_rate"] >= 1 - 0.5 - 3 * rep.data["stderr"]
    assert rep.data["below_guaranteed_regime"]


def test_sampled_cutnorm_hypothesis_unmet(rng):
    U = StepKernel.constant(F(1, 2), 2, t=2)
    rep = sampled_cutnorm_check([U], 0.5, 2, 20, 10)
    assert rep.data["outcome"] == "hypothesis unmet"


@pytest.mark.parametrize("r,n,q", [(2, 5, 2), (2, 6, 3), (2, 8, 3), (3, 6, 3)])
def test_finite_sampling_gaps(r, n, q):
    G = random_hypergraph(r, n, 0.5, seed=r + n + q)
    e1, e2 = eq1_check(G, q), eq2_check(G, q)
    assert e1.passed and e2.passed
    # conditioned on avoiding loops, sampling W_G is sampling without replacement
    assert e2.data["tv_conditioned"] == 0
    # the unconditioned loop mass is the chance that some slot repeats a vertex
    assert e2.data["tv"] == 1 - F(math.perm(n, q), n**q)
