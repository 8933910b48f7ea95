"""Constructors for the Pauli-weight chains and their relatives.

All builders return exact matrices (integer numerators over a common
denominator). Two-site rules are written as small kernels on the values of a
pair of coordinates and applied to every unordered pair with weight
``1 / C(n, 2)``; because every rule here is symmetric under exchanging the
pair, this equals averaging over ordered pairs ``i != j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations

import numpy as np

from . import states
from .chain import ChainError, Distribution, StochasticMatrix, combination
from .states import StateCodec

KINDS = ("P", "Z", "Q", "Tp", "T", "M", "Mtilde", "Qprime", "RT")

# materialisation limits on n
LIMITS = {
    "P": 6,
    "Q": 16,
    "Tp": 16,
    "T": 16,
    "M": 16,
    "Mtilde": 16,
    "Qprime": 16,
    "Z": 10**6,
    "RT": 7,
}

_NONZERO_PAIRS = [(a, b) for a in range(4) for b in range(4) if (a, b) != (0, 0)]

# pair kernels: source (q_i, q_j) -> {target (q_i', q_j'): integer weight}, plus the common divisor
P_KERNEL = ({(0, 0): {(0, 0): 15}, **{ab: {cd: 1 for cd in _NONZERO_PAIRS} for ab in _NONZERO_PAIRS}}, 15)

_Q_ACTIVE = {(0, 1): 1, (1, 0): 1, (1, 1): 3}
Q_KERNEL = ({(0, 0): {(0, 0): 5}, (0, 1): _Q_ACTIVE, (1, 0): _Q_ACTIVE, (1, 1): _Q_ACTIVE}, 5)

M_KERNEL = (
    {
        (0, 0): {(0, 0): 4},
        (0, 1): {(0, 1): 1, (1, 1): 3},
        (1, 0): {(1, 0): 1, (1, 1): 3},
        (1, 1): {(0, 1): 1, (1, 0): 1, (1, 1): 2},
    },
    4,
)

SWAP_KERNEL = ({(a, b): {(b, a): 1} for a in range(2) for b in range(2)}, 1)


class LimitError(ChainError):
    """Requested chain is outside the supported size range."""


@dataclass(frozen=True)
class ChainFamily:
    kind: str
    n: int
    matrix: StochasticMatrix
    codec: StateCodec
    excluded: tuple = ()

    @property
    def size(self) -> int:
        return self.matrix.size


def _check_n(kind: str, n: int, low: int = 2) -> None:
    if n < low:
        raise ChainError(f"{kind} chain needs n >= {low}, got {n}")
    if n > LIMITS[kind]:
        raise LimitError(f"{kind} chain is materialised only for n <= {LIMITS[kind]}, got n={n}")


def pair_kernel_matrix(codec: StateCodec, kernel: tuple) -> StochasticMatrix:
    """Average a two-site kernel over all unordered coordinate pairs."""
    table, divisor = kernel
    n = codec.n
    base = 4 if codec.kind == "pauli" else 2
    digits = codec.digits()
    idx = np.arange(codec.size, dtype=np.int64)
    powers = base ** np.arange(n, dtype=np.int64)
    rows, cols, vals = [], [], []
    for i, j in combinations(range(n), 2):
        di, dj = digits[:, i], digits[:, j]
        for (a, b), targets in table.items():
            src = idx[(di == a) & (dj == b)]
            if src.size == 0:
                continue
            for (c, d), w in targets.items():
                rows.append(src)
                cols.append(src + (c - a) * powers[i] + (d - b) * powers[j])
                vals.append(np.full(src.size, w, dtype=np.int64))
    den = divisor * math.comb(n, 2)
    return StochasticMatrix.from_triplets(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), codec.size, den
    )


def build_P(n: int) -> ChainFamily:
    """Pauli-weight chain on {0,1,2,3}^n; the all-zero string is absorbing."""
    _check_n("P", n)
    codec = states.pauli(n)
    return ChainFamily("P", n, pair_kernel_matrix(codec, P_KERNEL), codec, (0,))


def build_Q(n: int) -> ChainFamily:
    _check_n("Q", n)
    codec = states.support(n)
    return ChainFamily("Q", n, pair_kernel_matrix(codec, Q_KERNEL), codec, (0,))


def build_M(n: int) -> ChainFamily:
    _check_n("M", n)
    codec = states.support(n)
    return ChainFamily("M", n, pair_kernel_matrix(codec, M_KERNEL), codec, (0,))


def build_Tp(n: int) -> ChainFamily:
    """Uniform random transposition of coordinates, no holding step."""
    _check_n("Tp", n)
    codec = states.support(n)
    return ChainFamily("Tp", n, pair_kernel_matrix(codec, SWAP_KERNEL), codec)


def build_T(n: int) -> ChainFamily:
    """Lazy transposition chain ``(1/n) I + ((n-1)/n) Tp``."""
    _check_n("T", n)
    tp = build_Tp(n).matrix
    eye = StochasticMatrix.identity(tp.size)
    m = combination([(Fraction(1, n), eye), (Fraction(n - 1, n), tp)])
    return ChainFamily("T", n, m, states.support(n))


def build_Mtilde(n: int) -> ChainFamily:
    """``M + (Tp - I) / (4n)``, so that ``Q = T/5 + 4 Mtilde/5``."""
    _check_n("Mtilde", n)
    m = build_M(n).matrix
    tp = build_Tp(n).matrix
    eye = StochasticMatrix.identity(m.size)
    try:
        mt = combination([(1, m), (Fraction(1, 4 * n), tp), (Fraction(-1, 4 * n), eye)])
    except ChainError as exc:
        raise AssertionError(f"Mtilde({n}) is not stochastic: {exc}") from exc
    return ChainFamily("Mtilde", n, mt, states.support(n), (0,))


def build_Qprime(n: int) -> ChainFamily:
    """Support chain of the identity-augmented circuit ``(1/n) I + ((n-1)/n) P``."""
    _check_n("Qprime", n)
    q = build_Q(n).matrix
    eye = StochasticMatrix.identity(q.size)
    m = combination([(Fraction(1, n), eye), (Fraction(n - 1, n), q)])
    return ChainFamily("Qprime", n, m, states.support(n), (0,))


def build_Mprime(n: int) -> StochasticMatrix:
    m = build_M(n).matrix
    eye = StochasticMatrix.identity(m.size)
    return combination([(Fraction(1, n), eye), (Fraction(n - 1, n), m)])


def build_Z(n: int) -> ChainFamily:
    """Birth-death chain of the Hamming weight on {1..n}."""
    _check_n("Z", n)
    den = 5 * math.comb(n, 2)
    h = np.arange(1, n + 1, dtype=np.int64)
    up = 3 * h * (n - h)
    down = h * (h - 1)
    stay = den - up - down
    idx = h - 1
    rows = np.concatenate([idx, idx[:-1], idx[1:]])
    cols = np.concatenate([idx, idx[1:], idx[:-1]])
    vals = np.concatenate([stay, up[:-1], down[1:]])
    m = StochasticMatrix.from_triplets(rows, cols, vals, n, den)
    return ChainFamily("Z", n, m, states.hamming(n))


def lehmer_ranks(perms: np.ndarray) -> np.ndarray:
    """Vectorised Lehmer rank of each row of a (k, n) array of 0-based permutations."""
    n = perms.shape[1]
    rank = np.zeros(perms.shape[0], dtype=np.int64)
    for k in range(n - 1):
        smaller = (perms[:, k + 1:] < perms[:, k:k + 1]).sum(axis=1)
        rank += smaller * math.factorial(n - 1 - k)
    return rank


def _transposition_walk(n: int, lazy: bool) -> StochasticMatrix:
    perms = np.array(list(permutations(range(n))), dtype=np.int64)
    size = perms.shape[0]
    src = np.arange(size, dtype=np.int64)
    rows, cols, vals = [], [], []
    if lazy:
        # tau(I) = 1/n, tau(transposition) = 2/n^2
        den, w_id, w_tr = n * n, n, 2
        rows.append(src)
        cols.append(src)
        vals.append(np.full(size, w_id, dtype=np.int64))
    else:
        den, w_tr = math.comb(n, 2), 1
    for i, j in combinations(range(n), 2):
        # rho = (i j) o sigma: swap the values i and j in the image array
        rho = perms.copy()
        rho[perms == i] = j
        rho[perms == j] = i
        rows.append(src)
        cols.append(lehmer_ranks(rho))
        vals.append(np.full(size, w_tr, dtype=np.int64))
    return StochasticMatrix.from_triplets(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), size, den
    )


def build_RT(n: int) -> ChainFamily:
    """Random transposition walk on S_n: ``T(sigma, rho) = tau(rho sigma^-1)``."""
    _check_n("RT", n)
    return ChainFamily("RT", n, _transposition_walk(n, lazy=True), states.permutation(n))


def transposition_walk_nonlazy(n: int) -> StochasticMatrix:
    """Uniform transposition walk on S_n without holding; periodic (parity flips every step)."""
    _check_n("RT", n)
    return _transposition_walk(n, lazy=False)


BUILDERS = {
    "P": build_P,
    "Z": build_Z,
    "Q": build_Q,
    "Tp": build_Tp,
    "T": build_T,
    "M": build_M,
    "Mtilde": build_Mtilde,
    "Qprime": build_Qprime,
    "RT": build_RT,
}


def build(kind: str, n: int) -> ChainFamily:
    if kind not in BUILDERS:
        raise ChainError(f"unknown chain kind {kind!r}; expected one of {', '.join(KINDS)}")
    return BUILDERS[kind](n)


def stationary_closed_form(kind: str, n: int) -> Distribution:
    """Closed-form stationary distribution of P, Z or Q, exact."""
    if n < 2:
        raise ChainError(f"n must be >= 2, got {n}")
    norm = 4**n - 1
    if kind == "P":
        _check_n("P", n)
        w = [Fraction(0)] + [Fraction(1, norm)] * (4**n - 1)
    elif kind == "Z":
        w = [Fraction(math.comb(n, h) * 3**h, norm) for h in range(1, n + 1)]
    elif kind == "Q":
        _check_n("Q", n)
        weights = states.support(n).weights()
        w = [Fraction(3 ** int(h), norm) if h else Fraction(0) for h in weights]
    else:
        raise ChainError(f"no closed-form stationary state for kind {kind!r}")
    return Distribution(np.array(w, dtype=object))
