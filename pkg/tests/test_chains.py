import math
from fractions import Fraction as F
from pathlib import Path

import numpy as np
import pytest

from mixlab import export, states
from mixlab.chain import (
    NotErgodicError,
    check_detailed_balance,
    check_ergodic,
    max_residue,
    spectral_gap,
    stationary,
)
from mixlab.chains import (
    LimitError,
    build,
    build_M,
    build_Mprime,
    build_Mtilde,
    build_P,
    build_Q,
    build_Qprime,
    build_RT,
    build_T,
    build_Tp,
    build_Z,
    stationary_closed_form,
    transposition_walk_nonlazy,
)
from mixlab.analysis import commutator_residue

DATA = Path(__file__).parent / "data"


def test_Q2_matches_table():
    assert export.dumps(build_Q(2)) == (DATA / "Q_2.triplets").read_text()


def test_Z3_is_tridiagonal():
    z = build_Z(3).matrix
    expected = [
        [F(3, 5), F(2, 5), 0],
        [F(2, 15), F(7, 15), F(2, 5)],
        [0, F(2, 5), F(3, 5)],
    ]
    assert [[z.entry(i, j) for j in range(3)] for i in range(3)] == expected


def test_Z_entries_from_pair_counting():
    for n in (2, 5, 9):
        z = build_Z(n).matrix
        d = F(5 * math.comb(n, 2))
        for h in range(1, n + 1):
            up = F(3 * h * (n - h)) / d if h < n else 0
            down = F(h * (h - 1)) / d if h > 1 else 0
            if h < n:
                assert z.entry(h - 1, h) == up
            if h > 1:
                assert z.entry(h - 1, h - 2) == down
            assert z.entry(h - 1, h - 1) == 1 - up - down


def test_P_rows_for_n2():
    p = build_P(2).matrix
    assert p.entry(0, 0) == 1
    assert all(p.entry(5, j) == F(1, 15) for j in range(1, 16))


def test_materialisation_limits():
    with pytest.raises(LimitError, match="n <= 6"):
        build_P(7)
    with pytest.raises(LimitError):
        build_RT(8)
    with pytest.raises(LimitError):
        build("Q", 17)


@pytest.mark.parametrize("n", range(2, 9))
def test_decomposition_identities(n):
    q, tp, m = build_Q(n).matrix, build_Tp(n).matrix, build_M(n).matrix
    assert max_residue([(1, q), (F(-1, 5), tp), (F(-4, 5), m)]) == 0
    t, mt = build_T(n).matrix, build_Mtilde(n).matrix
    assert max_residue([(1, q), (F(-1, 5), t), (F(-4, 5), mt)]) == 0
    qp, mp = build_Qprime(n).matrix, build_Mprime(n)
    assert max_residue([(1, qp), (F(-1, 5), t), (F(-4, 5), mp)]) == 0


@pytest.mark.parametrize("n", range(2, 9))
def test_T_and_Mtilde_commute(n):
    assert commutator_residue(n) == 0


@pytest.mark.parametrize("n", range(3, 11))
def test_M_smallest_eigenvalue_bound(n):
    m = build_M(n)
    keep = np.arange(1, m.matrix.size)
    sub = m.matrix.dense()[np.ix_(keep, keep)]
    lam = np.linalg.eigvals(sub).real.min()
    assert lam >= -2 / 3 - 1 / (3 * (n - 1)) - 1e-9


def test_Mtilde_is_ergodic_on_nonzero_supports():
    mt = build_Mtilde(3)
    active = check_ergodic(mt.matrix, mt.excluded)
    assert len(active) == 7


@pytest.mark.parametrize("n", range(2, 9))
def test_M_ergodic_on_nonzero_supports(n):
    m = build_M(n)
    assert len(check_ergodic(m.matrix, m.excluded)) == 2**n - 1


def test_transposition_walk_parity():
    # without laziness every step flips the sign of the permutation
    walk = transposition_walk_nonlazy(3)
    with pytest.raises(NotErgodicError, match="period 2"):
        check_ergodic(walk)
    codec = states.permutation(3)
    d = walk.dense()
    for i, a in enumerate(codec.states()):
        for j, b in enumerate(codec.states()):
            if d[i, j]:
                assert states.parity(a) != states.parity(b)


def test_Tp_on_supports_has_fixed_points():
    tp = build_Tp(3).matrix
    assert tp.entry(1, 1) == F(1, 3)


@pytest.mark.parametrize("n", range(2, 6))
def test_closed_form_stationary_P(n):
    fam = build_P(n)
    assert stationary(fam.matrix, fam.excluded).equals(stationary_closed_form("P", n))


@pytest.mark.parametrize("n", range(2, 13))
def test_closed_form_stationary_Q(n):
    fam = build_Q(n)
    assert stationary(fam.matrix, fam.excluded).equals(stationary_closed_form("Q", n))


def test_closed_form_stationary_Z():
    for n in range(2, 101):
        fam = build_Z(n)
        pi = stationary(fam.matrix, fam.excluded)
        assert pi.exact
        assert pi.equals(stationary_closed_form("Z", n)), n


@pytest.mark.parametrize("kind,n", [("Q", 5), ("Z", 40), ("RT", 4), ("Mtilde", 4)])
def test_reversible_chains(kind, n):
    fam = build(kind, n)
    pi = stationary(fam.matrix, fam.excluded).to_float()
    check_detailed_balance(fam.matrix, pi)


@pytest.mark.parametrize("n", range(2, 8))
def test_RT_gap(n):
    rt = build_RT(n).matrix
    pi = np.full(rt.size, 1 / rt.size)
    assert spectral_gap(rt, pi) == pytest.approx(2 / n, abs=1e-10)


def test_chain_rows_are_stochastic():
    for kind in ("P", "Q", "Tp", "T", "M", "Mtilde", "Qprime", "Z", "RT"):
        fam = build(kind, 3)
        sums = np.asarray(fam.matrix.to_float().sum(axis=1)).ravel()
        assert np.allclose(sums, 1, atol=1e-15), kind
