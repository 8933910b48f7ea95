import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixlab import states
from mixlab.chain import ChainError, StochasticMatrix, combination, spectrum_reversible, stationary
from mixlab.chains import build_P, build_Q, build_RT, build_T, build_Z
from mixlab.projection import (
    LumpabilityError,
    apply_S,
    coset_orbit_map,
    hamming_orbit_map,
    lift_eigenfunction,
    nu_pi,
    permutation_matrix,
    project_chain,
    project_distribution,
    randomize_operator_S,
    value_orbit_map,
    verify_lemma2,
    zeta_pi,
)


@pytest.mark.parametrize("n", range(2, 6))
def test_P_lumps_to_Q(n):
    assert project_chain(build_P(n).matrix, value_orbit_map(n)).equals(build_Q(n).matrix)


@pytest.mark.parametrize("n", range(2, 6))
def test_Q_lumps_to_Z(n):
    om = hamming_orbit_map(states.support(n))
    assert project_chain(build_Q(n).matrix, om).equals(build_Z(n).matrix)


def test_P_lumps_straight_to_Z():
    om = hamming_orbit_map(states.pauli(3))
    assert project_chain(build_P(3).matrix, om).equals(build_Z(3).matrix)


def test_perturbed_matrix_is_not_lumpable():
    q = build_Q(3).matrix
    d = q.fractions()
    # move mass inside row 1 from weight-1 target 1 to weight-2 target 3; row 2 untouched
    eps = F(1, 100)
    d[1, 1] -= eps
    d[1, 3] += eps
    bent = StochasticMatrix.from_fractions(d.tolist())
    with pytest.raises(LumpabilityError, match="representatives"):
        project_chain(bent, hamming_orbit_map(states.support(3)))


def test_mass_into_dropped_state_rejected():
    z = hamming_orbit_map(states.support(2))
    leaky = StochasticMatrix.from_fractions(
        [[1, 0, 0, 0], [F(1, 2), F(1, 2), 0, 0], [F(1, 2), 0, F(1, 2), 0], [0, 0, 0, 1]]
    )
    with pytest.raises(LumpabilityError, match="dropped"):
        project_chain(leaky, z)


def test_projected_distribution_and_stationary_state():
    n = 4
    q = build_Q(n)
    om = hamming_orbit_map(states.support(n))
    pi_q = stationary(q.matrix, q.excluded)
    pi_z = stationary(build_Z(n).matrix)
    assert project_distribution(pi_q, om).equals(pi_z)
    assert np.allclose(pi_z.to_float(), zeta_pi(n)[1:])
    assert np.allclose(pi_q.to_float(), nu_pi(n))


@pytest.mark.parametrize("n", range(1, 6))
def test_S_equals_group_average(n):
    perms = list(itertools.permutations(range(n)))
    terms = [(F(1, len(perms)), permutation_matrix(s, n)) for s in perms]
    assert combination(terms).equals(randomize_operator_S(n))


def test_permutation_matrix_moves_supports():
    a = permutation_matrix((1, 2, 0), 3)
    codec = states.support(3)
    for q in codec.states():
        target = states.act_on_string((1, 2, 0), q)
        assert a.entry(codec.encode(target), codec.encode(q)) == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**31 - 1))
def test_S_is_idempotent_and_matches_closed_form(n, seed):
    nu = np.random.default_rng(seed).dirichlet(np.ones(2**n))
    s = randomize_operator_S(n).to_float()
    once = s.T @ nu
    assert np.allclose(once, apply_S(nu, n), atol=1e-14)
    assert np.allclose(s.T @ once, once, atol=1e-14)


@pytest.mark.parametrize("n", range(3, 9))
def test_lemma2(n):
    r = verify_lemma2(n, samples=100, seed=n)
    assert r["passed"], r
    assert r["max_discrepancy"] < 1e-12


def test_lemma2_range():
    with pytest.raises(ChainError):
        verify_lemma2(13)


def test_lifted_eigenfunctions_keep_eigenvalues():
    n = 5
    q = build_Q(n)
    z = build_Z(n).matrix
    om = hamming_orbit_map(states.support(n))
    pi_z = stationary(z).to_float()
    dec = spectrum_reversible(z, pi_z)
    qd = q.matrix.dense()
    for k in range(n):
        h = dec.eigenfunctions[:, k]
        f, lam = lift_eigenfunction(h, om, z)
        assert lam == pytest.approx(dec.eigenvalues[k], abs=1e-10)
        assert np.allclose(qd @ f, lam * f, atol=1e-10)


def test_lift_rejects_non_eigenfunction():
    z = build_Z(4).matrix
    with pytest.raises(ChainError):
        lift_eigenfunction(np.array([1.0, 0, 0, 0]), hamming_orbit_map(states.support(4)), z)


@pytest.mark.parametrize("n", range(2, 6))
def test_coset_projection_of_transposition_walk(n):
    rt = build_RT(n).matrix
    t = build_T(n).matrix
    for h in range(n + 1):
        cmap = coset_orbit_map(n, h)
        assert cmap.n_orbits == math.comb(n, h)
        assert cmap.stabilizer_order == math.factorial(h) * math.factorial(n - h)
        assert project_chain(rt, cmap).equals(t.restrict(cmap.orbit_states))


def test_coset_representative_is_in_its_coset():
    cmap = coset_orbit_map(4, 2)
    codec = states.permutation(4)
    for a in range(cmap.n_orbits):
        rep = cmap.representative(a)
        assert cmap.labels[codec.encode(rep)] == a
