import math
from collections import Counter
from fractions import Fraction as F

import numpy as np
import pytest

from mixlab import states
from mixlab.analysis import (
    ScalingFit,
    binomial_decomposition_check,
    binomial_lower_tail,
    chain_mixing,
    default_delta,
    generalized_T_profile,
    generalized_mixing_time_T,
    lemma4_rhs,
    lemma4_simplified,
    lemma4_threshold,
    orbit_representatives,
    restricted_mixing_time_Q,
    spectral_gap_sweep,
    verify_lemma1,
    verify_lemma3,
)
from mixlab.chain import ChainError, mixing_time, spectral_gap
from mixlab.chains import build_P, build_Q, stationary_closed_form
from mixlab.projection import nu_pi


def test_orbit_representatives():
    reps = orbit_representatives(4)
    w = states.support(4).weights()
    assert [int(w[r]) for r in reps] == [1, 2, 3, 4]
    assert orbit_representatives(4, include_zero=True)[0] == 0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_representatives_give_the_same_mixing_time_as_a_full_scan(n):
    fam = build_Q(n)
    pi = stationary_closed_form("Q", n)
    m = fam.matrix.as_float()
    for eps in (0.25, 0.01):
        full = mixing_time(m, eps, fam.excluded, pi=pi)
        reps = mixing_time(m, eps, fam.excluded, pi=pi, initial=orbit_representatives(n))
        assert full.t == reps.t
        assert np.allclose(full.trace, reps.trace, atol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_lemma1_small(n):
    r = verify_lemma1(n)
    assert r["passed"]
    assert r["max_trace_difference"] <= 1e-12
    assert all(row["t_mix_P"] == row["t_mix_Q"] for row in r["results"])


def test_lemma1_range():
    with pytest.raises(ChainError):
        verify_lemma1(6)


def test_generalized_profile_full_scan_agrees():
    a = generalized_T_profile(4, 0.05)
    b = generalized_T_profile(4, 0.05, all_states=True)
    assert a.trace == pytest.approx(b.trace, abs=1e-14)
    assert generalized_mixing_time_T(4, 0.05) == b.time_for(0.05)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_lemma3(n):
    r = verify_lemma3(n)
    assert r["passed"]
    assert all(o["projection_equal"] for o in r["orbits"])
    assert max(o["t_mix"] for o in r["orbits"]) <= r["t_mix_RT"]


def test_lemma4_bound_forms():
    eps = 0.25
    delta = default_delta(eps)
    assert math.exp(-2 * delta**2) == pytest.approx(eps / 4)
    assert lemma4_threshold(eps, eps / 2, delta) == pytest.approx(eps / 4)
    rhs = lemma4_rhs(eps, eps / 2, delta, 10)
    # squaring the bound dominates the short form for every t_mixT
    for t in (1, 10, 100):
        assert lemma4_rhs(eps, eps / 2, delta, t) ** 2 >= lemma4_simplified(eps, t)
    assert rhs > 0


def test_lemma4_precondition():
    with pytest.raises(ChainError, match="precondition"):
        lemma4_rhs(0.25, 0.2, default_delta(0.25), 5)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_restricted_mixing_below_certificate(n):
    r = restricted_mixing_time_Q(n, 0.25, 0.125)
    assert r.certified_bound is not None
    assert r.empirical_max < r.certified_bound
    assert r.point_masses_admitted == 0 or r.family["point"] == r.point_masses_admitted


def test_binomial_tail_matches_exact_sum():
    for t in (5, 20, 80):
        for delta in (0.3, 1.0):
            k = math.floor(0.2 * t - delta * math.sqrt(t))
            exact = sum(math.comb(t, i) * 0.2**i * 0.8 ** (t - i) for i in range(0, k + 1))
            assert binomial_lower_tail(t, delta) == pytest.approx(exact, rel=1e-12, abs=1e-300)
            # Hoeffding
            assert binomial_lower_tail(t, delta) <= math.exp(-2 * delta**2) + 1e-15


@pytest.mark.parametrize("n", [3, 4, 5])
def test_binomial_decomposition(n):
    rng = np.random.default_rng(n)
    for _ in range(3):
        nu = np.zeros(2**n)
        nu[1:] = rng.dirichlet(np.ones(2**n - 1))
        assert binomial_decomposition_check(n, nu, 40) <= 1e-12
    assert np.isclose(nu_pi(n).sum(), 1)


def test_scaling_fit_recovers_a_line():
    n = np.arange(4, 12)
    t = 2.0 * n * np.log(n) + 3.0
    fit = ScalingFit.fit(n, np.round(t))
    assert fit.a == pytest.approx(2.0, rel=0.05)
    assert fit.r2 > 0.999
    with pytest.raises(ChainError):
        ScalingFit.fit([3, 4], [1, 2])


def test_sweep_limits():
    with pytest.raises(ChainError):
        chain_mixing("Q", 15, 0.25)
    with pytest.raises(ChainError):
        chain_mixing("P", 6, 0.25)


def test_sweep_outputs():
    s = spectral_gap_sweep("Q", range(3, 9), 0.25)
    lines = s.to_csv().splitlines()
    assert lines[0] == "n,eps,t_mix,gap,fit_a,fit_b,r2"
    assert len(lines) == 7
    assert s.fit.a > 0
    ts = [t for _, t, _ in s.rows]
    assert ts == sorted(ts)


def test_RT_sweep_increases():
    s = spectral_gap_sweep("RT", range(3, 7), 0.25)
    ts = [t for _, t, _ in s.rows]
    assert ts == sorted(ts) and ts[0] < ts[-1]
    assert s.gap_band_ratio() == pytest.approx(1.0)


def test_P_rows_collapse_for_two_sites():
    # with two sites no nonzero pair is inert, so every active row is the stationary law
    p = build_P(2).matrix.fractions()
    pi = stationary_closed_form("P", 2).weights
    assert all(list(p[i]) == list(pi) for i in range(1, 16))
    assert spectral_gap(build_P(2).matrix, stationary_closed_form("P", 2)) == pytest.approx(1.0)


def test_P_is_not_block_constant_beyond_two_sites():
    p = build_P(3).matrix
    c = states.pauli(3)
    src = c.encode((1, 2, 0))
    # same support block, different number of retained symbols
    assert p.entry(src, c.encode((1, 1, 0))) == F(2, 45)
    assert p.entry(src, c.encode((3, 3, 0))) == F(1, 45)


@pytest.mark.parametrize("n", [3, 4])
def test_Q_spectrum_is_contained_in_P_spectrum(n):
    ep = Counter(np.round(np.linalg.eigvals(build_P(n).matrix.dense()[1:, 1:]).real, 8))
    eq = Counter(np.round(np.linalg.eigvals(build_Q(n).matrix.dense()[1:, 1:]).real, 8))
    assert all(ep[v] >= k for v, k in eq.items())


@pytest.mark.parametrize("n", range(2, 6))
def test_P_and_Q_share_the_spectral_gap(n):
    gp = spectral_gap(build_P(n).matrix, stationary_closed_form("P", n))
    gq = spectral_gap(build_Q(n).matrix, stationary_closed_form("Q", n))
    assert gp == pytest.approx(gq, abs=1e-12)


def test_unit_ball_is_the_whole_simplex():
    q = build_Q(4)
    r = restricted_mixing_time_Q(4, 0.25, 1.0)
    full = mixing_time(q.matrix, 0.25, q.excluded, pi=stationary_closed_form("Q", 4))
    assert r.empirical_max == full.t
    assert r.certified_bound is None and r.notes
