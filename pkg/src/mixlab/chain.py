"""Finite stochastic matrices, distributions, stationarity, spectra and mixing times.

A :class:`StochasticMatrix` runs in one of two modes.

Exact mode
    ``entries`` is a CSR matrix of int64 numerators over a single positive
    ``denominator``; every row sums to ``denominator`` exactly.
Float mode
    ``entries`` is a CSR float64 matrix and ``denominator`` is ``None``;
    rows sum to one within ``1e-12``.

Distributions follow the same split: an object array of
:class:`fractions.Fraction` (exact) or a float64 array. Row vectors act on the
left, ``d -> d @ M``.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import breadth_first_order, connected_components

ROW_SUM_TOL = 1e-12
DETAILED_BALANCE_TOL = 1e-10
ORTHONORMAL_TOL = 1e-8
_INT_LIMIT = 2**62


class ChainError(ValueError):
    """Invalid matrix, distribution or mixing request."""


class NotErgodicError(ChainError):
    """The chain restricted to the active states is reducible or periodic."""


class DetailedBalanceError(ChainError):
    """Detailed balance fails for the supplied stationary distribution."""


def _lcm(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * int(v) // math.gcd(out, int(v))
    return out


class StochasticMatrix:
    """Row-stochastic sparse matrix, exact (integer numerators) or float."""

    def __init__(self, entries, denominator: int | None = None, *, check: bool = True):
        entries = sp.csr_matrix(entries)
        if entries.shape[0] != entries.shape[1]:
            raise ChainError(f"matrix must be square, got shape {entries.shape}")
        if denominator is None:
            entries = entries.astype(np.float64)
        else:
            if int(denominator) <= 0:
                raise ChainError(f"denominator must be positive, got {denominator}")
            denominator = int(denominator)
            if entries.dtype.kind == "f":
                if not np.all(entries.data == np.round(entries.data)):
                    raise ChainError("exact mode requires integer numerators")
            entries = entries.astype(np.int64)
        entries.sum_duplicates()
        entries.eliminate_zeros()
        entries.sort_indices()
        self.entries = entries
        self.denominator = denominator
        if check:
            self._check()

    def _check(self) -> None:
        if self.entries.nnz and self.entries.data.min() < 0:
            k = int(np.argmin(self.entries.data))
            row = int(np.searchsorted(self.entries.indptr, k, side="right") - 1)
            raise ChainError(f"negative entry in row {row}")
        sums = np.asarray(self.entries.sum(axis=1)).ravel()
        if self.exact:
            bad = np.nonzero(sums != self.denominator)[0]
        else:
            bad = np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)[0]
        if bad.size:
            r = int(bad[0])
            total = Fraction(int(sums[r]), self.denominator) if self.exact else sums[r]
            raise ChainError(f"row {r} sums to {total}, not 1")

    # construction helpers

    @classmethod
    def from_triplets(cls, rows, cols, values, size: int, denominator: int | None = None):
        m = sp.coo_matrix((np.asarray(values), (np.asarray(rows), np.asarray(cols))), shape=(size, size))
        return cls(m.tocsr(), denominator)

    @classmethod
    def from_fractions(cls, rows: Sequence[Sequence]):
        """Build an exact matrix from a dense nested list of rationals."""
        fr = [[Fraction(x) for x in row] for row in rows]
        den = _lcm(x.denominator for row in fr for x in row)
        num = np.array([[int(x * den) for x in row] for row in fr], dtype=np.int64)
        return cls(num, den)

    @classmethod
    def identity(cls, size: int, exact: bool = True):
        eye = sp.identity(size, format="csr", dtype=np.int64 if exact else np.float64)
        return cls(eye, 1 if exact else None)

    # basic views

    @property
    def exact(self) -> bool:
        return self.denominator is not None

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def nnz(self) -> int:
        return self.entries.nnz

    def to_float(self) -> sp.csr_matrix:
        if self.exact:
            return (self.entries.astype(np.float64) / self.denominator).tocsr()
        return self.entries

    def as_float(self) -> "StochasticMatrix":
        return self if not self.exact else StochasticMatrix(self.to_float(), check=False)

    def dense(self) -> np.ndarray:
        return self.to_float().toarray()

    def entry(self, i: int, j: int):
        v = self.entries[i, j]
        return Fraction(int(v), self.denominator) if self.exact else float(v)

    def row(self, i: int) -> dict:
        lo, hi = self.entries.indptr[i], self.entries.indptr[i + 1]
        cols = self.entries.indices[lo:hi]
        vals = self.entries.data[lo:hi]
        if self.exact:
            return {int(c): Fraction(int(v), self.denominator) for c, v in zip(cols, vals)}
        return {int(c): float(v) for c, v in zip(cols, vals)}

    def fractions(self) -> np.ndarray:
        """Dense object array of Fractions (exact mode, small matrices only)."""
        self._require_exact("fractions()")
        dense = self.entries.toarray()
        out = np.empty(dense.shape, dtype=object)
        for idx, v in np.ndenumerate(dense):
            out[idx] = Fraction(int(v), self.denominator)
        return out

    def _require_exact(self, what: str) -> None:
        if not self.exact:
            raise ChainError(f"{what} requires an exact matrix")

    def scaled_to(self, denominator: int) -> sp.csr_matrix:
        """Numerators over a multiple of this matrix's denominator."""
        self._require_exact("scaled_to()")
        factor, rem = divmod(denominator, self.denominator)
        if rem:
            raise ChainError(f"{denominator} is not a multiple of {self.denominator}")
        if self.nnz and int(self.entries.data.max()) * factor >= _INT_LIMIT:
            raise OverflowError("rescaled numerators exceed int64")
        return (self.entries * factor).tocsr()

    def equals(self, other: "StochasticMatrix") -> bool:
        """Entrywise exact equality (exact mode) or allclose within 1e-12."""
        if self.size != other.size:
            return False
        if self.exact and other.exact:
            den = _lcm([self.denominator, other.denominator])
            diff = self.scaled_to(den) - other.scaled_to(den)
            diff.eliminate_zeros()
            return diff.nnz == 0
        diff = abs(self.to_float() - other.to_float())
        return diff.nnz == 0 or diff.max() <= ROW_SUM_TOL

    def matmul(self, other: "StochasticMatrix") -> "StochasticMatrix":
        if self.size != other.size:
            raise ChainError(f"dimension mismatch {self.size} vs {other.size}")
        if self.exact and other.exact:
            a, b = self.entries, other.entries
            if a.nnz and b.nnz and int(a.data.max()) * int(b.data.max()) * max(1, a.shape[0]) >= _INT_LIMIT:
                raise OverflowError("exact product exceeds int64")
            return StochasticMatrix(a @ b, self.denominator * other.denominator)
        return StochasticMatrix(self.to_float() @ other.to_float())

    def restrict(self, keep: Sequence[int]) -> "StochasticMatrix":
        """Sub-chain on ``keep``; fails if any kept row leaks mass outside."""
        keep = np.asarray(keep, dtype=np.int64)
        sub = self.entries[keep][:, keep]
        sums = np.asarray(sub.sum(axis=1)).ravel()
        target = self.denominator if self.exact else 1.0
        leak = np.nonzero(np.abs(sums - target) > (0 if self.exact else ROW_SUM_TOL))[0]
        if leak.size:
            raise ChainError(f"state {int(keep[leak[0]])} leaks probability out of the kept set")
        return StochasticMatrix(sub, self.denominator, check=False)

    def __repr__(self) -> str:
        mode = f"exact/{self.denominator}" if self.exact else "float"
        return f"StochasticMatrix(size={self.size}, nnz={self.nnz}, {mode})"


def combine(terms: Sequence[tuple]) -> tuple[sp.csr_matrix, int]:
    """Exact linear combination ``sum(c * M)`` as (numerators, denominator).

    Coefficients may be ints or Fractions. The result need not be stochastic,
    which is what residue checks want.
    """
    coefs = [Fraction(c) for c, _ in terms]
    mats = [m for _, m in terms]
    for m in mats:
        m._require_exact("combine()")
    den = _lcm(c.denominator * m.denominator for c, m in zip(coefs, mats))
    total = None
    for c, m in zip(coefs, mats):
        factor = c.numerator * (den // (c.denominator * m.denominator))
        if m.nnz and abs(factor) * int(m.entries.data.max()) >= _INT_LIMIT:
            raise OverflowError("combination exceeds int64")
        part = m.entries * factor
        total = part if total is None else total + part
    total = total.tocsr()
    total.eliminate_zeros()
    return total, den


def combination(terms: Sequence[tuple]) -> StochasticMatrix:
    """Convex/affine combination that must itself be stochastic."""
    num, den = combine(terms)
    g = math.gcd(den, *(int(x) for x in np.unique(num.data))) if num.nnz else 1
    num = num.copy()
    num.data //= g
    return StochasticMatrix(num, den // g)


def max_residue(terms: Sequence[tuple]) -> Fraction:
    """Largest absolute entry of an exact combination (zero iff it vanishes)."""
    num, den = combine(terms)
    if num.nnz == 0:
        return Fraction(0)
    return Fraction(int(np.abs(num.data).max()), den)


# distributions


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector; ``weights`` is float64 or an object array of Fractions."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights)
        if w.ndim != 1:
            raise ChainError("distribution weights must be one-dimensional")
        if w.dtype == object:
            w = np.array([Fraction(x) for x in w], dtype=object)
            if any(x < 0 for x in w):
                raise ChainError("negative probability")
            if sum(w, Fraction(0)) != 1:
                raise ChainError(f"weights sum to {sum(w, Fraction(0))}, not 1")
        else:
            w = w.astype(np.float64)
            if (w < -ROW_SUM_TOL).any():
                raise ChainError("negative probability")
            if abs(w.sum() - 1.0) > 1e-9:
                raise ChainError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)

    @property
    def exact(self) -> bool:
        return self.weights.dtype == object

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def to_float(self) -> np.ndarray:
        if self.exact:
            return np.array([float(x) for x in self.weights])
        return self.weights

    def __getitem__(self, i):
        return self.weights[i]

    def __len__(self):
        return self.size

    def equals(self, other: "Distribution", tol: float = 0.0) -> bool:
        if self.size != other.size:
            return False
        if self.exact and other.exact and tol == 0.0:
            return all(a == b for a, b in zip(self.weights, other.weights))
        return bool(np.max(np.abs(self.to_float() - other.to_float())) <= tol)

    @classmethod
    def point_mass(cls, size: int, index: int, exact: bool = True) -> "Distribution":
        if exact:
            w = np.array([Fraction(0)] * size, dtype=object)
            w[index] = Fraction(1)
        else:
            w = np.zeros(size)
            w[index] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, size: int, support: Sequence[int] | None = None, exact: bool = True) -> "Distribution":
        support = range(size) if support is None else list(support)
        k = len(support)
        if exact:
            w = np.array([Fraction(0)] * size, dtype=object)
            for i in support:
                w[i] = Fraction(1, k)
        else:
            w = np.zeros(size)
            w[list(support)] = 1.0 / k
        return cls(w)

    @classmethod
    def from_fractions(cls, values: Sequence) -> "Distribution":
        return cls(np.array([Fraction(v) for v in values], dtype=object))


def _as_weights(d) -> np.ndarray:
    return d.weights if isinstance(d, Distribution) else np.asarray(d)


def tv_distance(a, b):
    """Half the L1 distance; a Fraction when both inputs are exact."""
    wa, wb = _as_weights(a), _as_weights(b)
    if wa.shape != wb.shape:
        raise ChainError(f"dimension mismatch {wa.shape[0]} vs {wb.shape[0]}")
    if wa.dtype == object and wb.dtype == object:
        return sum((abs(x - y) for x, y in zip(wa, wb)), Fraction(0)) / 2
    wa = np.array([float(x) for x in wa]) if wa.dtype == object else wa
    wb = np.array([float(x) for x in wb]) if wb.dtype == object else wb
    return 0.5 * float(np.abs(wa - wb).sum())


def _exact_vecmat(a: np.ndarray, m: StochasticMatrix) -> np.ndarray:
    coo = m.entries.tocoo()
    out = np.array([Fraction(0)] * m.size, dtype=object)
    contrib = a[coo.row] * np.array([Fraction(int(v), m.denominator) for v in coo.data], dtype=object)
    np.add.at(out, coo.col, contrib)
    return out


def step(d, m: StochasticMatrix) -> Distribution:
    """One step of the chain: the row vector ``d @ m``."""
    w = _as_weights(d)
    if w.shape[0] != m.size:
        raise ChainError(f"dimension mismatch {w.shape[0]} vs {m.size}")
    if w.dtype == object and m.exact:
        return Distribution(_exact_vecmat(w, m))
    wf = np.array([float(x) for x in w]) if w.dtype == object else w
    return Distribution(m.to_float().T @ wf)


def evolve(d, m: StochasticMatrix, t: int) -> Distribution:
    out = d if isinstance(d, Distribution) else Distribution(d)
    for _ in range(t):
        out = step(out, m)
    return out


# ergodicity and stationarity


def _active(size: int, excluded: Iterable[int]) -> np.ndarray:
    excl = set(int(x) for x in excluded)
    bad = [x for x in excl if not 0 <= x < size]
    if bad:
        raise ChainError(f"excluded states out of range: {bad}")
    return np.array([i for i in range(size) if i not in excl], dtype=np.int64)


def check_ergodic(m: StochasticMatrix, excluded: Iterable[int] = ()) -> np.ndarray:
    """Verify irreducibility and aperiodicity off ``excluded``; return active states."""
    keep = _active(m.size, excluded)
    if keep.size == 0:
        raise ChainError("no active states")
    sub = m.restrict(keep).entries
    graph = (sub != 0).astype(np.int8)
    ncomp, _ = connected_components(graph, directed=True, connection="strong")
    if ncomp > 1:
        reach = breadth_first_order(graph, 0, directed=True, return_predecessors=False)
        unreached = np.setdiff1d(np.arange(keep.size), reach)
        if unreached.size:
            x, y = int(keep[0]), int(keep[unreached[0]])
        else:
            back = breadth_first_order(graph.T.tocsr(), 0, directed=True, return_predecessors=False)
            y = int(keep[np.setdiff1d(np.arange(keep.size), back)[0]])
            x, y = y, int(keep[0])
        raise NotErgodicError(f"reducible: state {y} is not reachable from state {x}")
    # period = gcd of level differences along edges of a BFS layering
    order, _ = breadth_first_order(graph, 0, directed=True, return_predecessors=True)
    level = np.full(keep.size, -1, dtype=np.int64)
    level[0] = 0
    indptr, indices = graph.indptr, graph.indices
    for u in order:
        for v in indices[indptr[u]:indptr[u + 1]]:
            if level[v] < 0:
                level[v] = level[u] + 1
    coo = graph.tocoo()
    diffs = np.abs(level[coo.row] + 1 - level[coo.col])
    period = int(np.gcd.reduce(diffs)) if diffs.size else 0
    if period != 1:
        raise NotErgodicError(
            f"periodic with period {period}: state {int(keep[0])} returns to itself only "
            f"after multiples of {period} steps"
        )
    return keep


def _tree_candidate(sub: sp.csr_matrix, exact: bool):
    """Stationary candidate assuming detailed balance, propagated along a BFS tree."""
    n = sub.shape[0]
    subt = sub.T.tocsr()
    weights = [None] * n
    weights[0] = Fraction(1) if exact else 1.0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for k in range(sub.indptr[u], sub.indptr[u + 1]):
            v = sub.indices[k]
            if weights[v] is not None:
                continue
            back = None
            # M(v, u) lives in row u of the transpose
            lo, hi = subt.indptr[u], subt.indptr[u + 1]
            pos = np.searchsorted(subt.indices[lo:hi], v)
            if pos < hi - lo and subt.indices[lo + pos] == v:
                back = subt.data[lo + pos]
            if not back:
                return None
            fwd = sub.data[k]
            weights[v] = weights[u] * (Fraction(int(fwd), int(back)) if exact else fwd / back)
            queue.append(v)
    if exact:
        total = sum(weights, Fraction(0))
        return np.array([w / total for w in weights], dtype=object)
    w = np.array(weights, dtype=np.float64)
    return w / w.sum()


def _exact_residue_zero(pi: np.ndarray, sub: StochasticMatrix) -> bool:
    den = _lcm(x.denominator for x in pi)
    a = np.array([int(x * den) for x in pi], dtype=object)
    coo = sub.entries.tocoo()
    out = np.zeros(sub.size, dtype=object)
    np.add.at(out, coo.col, a[coo.row] * coo.data.astype(object))
    return bool(np.all(out == a * sub.denominator))


def _gth_exact(sub: StochasticMatrix) -> np.ndarray:
    """Grassmann-Taksar-Heyman elimination in rationals."""
    t = [list(r) for r in sub.fractions()]
    n = len(t)
    for k in range(n - 1, 0, -1):
        s = sum(t[k][:k], Fraction(0))
        for j in range(k):
            t[k][j] /= s
        for i in range(k):
            if t[i][k]:
                tik = t[i][k]
                row_k = t[k]
                row_i = t[i]
                for j in range(k):
                    row_i[j] += tik * row_k[j]
    pi = [Fraction(1)] + [Fraction(0)] * (n - 1)
    for k in range(1, n):
        pi[k] = sum((pi[i] * t[i][k] for i in range(k)), Fraction(0))
    total = sum(pi, Fraction(0))
    return np.array([p / total for p in pi], dtype=object)


def _float_solve(sub: sp.csr_matrix) -> np.ndarray:
    n = sub.shape[0]
    a = (sub.T - sp.identity(n, format="csr")).tolil()
    a[0, :] = np.ones(n)
    rhs = np.zeros(n)
    rhs[0] = 1.0
    pi = spla.spsolve(a.tocsc(), rhs)
    return np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum()


EXACT_GTH_LIMIT = 400


def stationary(m: StochasticMatrix, excluded: Iterable[int] = ()) -> Distribution:
    """Unique stationary distribution supported off ``excluded``.

    Exact matrices give an exact answer: a detailed-balance candidate is
    propagated along a spanning tree and certified by checking ``pi M = pi``
    with zero residue; non-reversible chains fall back to rational GTH
    elimination (at most ``EXACT_GTH_LIMIT`` states).
    """
    keep = check_ergodic(m, excluded)
    sub = m.restrict(keep)
    pi_sub = _tree_candidate(sub.entries, sub.exact)
    if sub.exact:
        if pi_sub is None or not _exact_residue_zero(pi_sub, sub):
            if sub.size > EXACT_GTH_LIMIT:
                raise ChainError(
                    f"non-reversible exact chain with {sub.size} states exceeds the exact solver limit "
                    f"{EXACT_GTH_LIMIT}; convert with as_float()"
                )
            pi_sub = _gth_exact(sub)
        full = np.array([Fraction(0)] * m.size, dtype=object)
    else:
        ok = pi_sub is not None and np.abs(sub.entries.T @ pi_sub - pi_sub).max() <= ROW_SUM_TOL
        if not ok:
            pi_sub = _float_solve(sub.entries)
        full = np.zeros(m.size)
    full[keep] = pi_sub
    return Distribution(full)


# spectra


@dataclass
class SpectralDecomposition:
    """Real spectrum of a reversible chain on the support of ``pi``.

    ``eigenfunctions[:, j]`` is ``f_j`` restricted to ``states`` and the
    columns are orthonormal in the ``pi``-weighted inner product.
    """

    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    states: np.ndarray
    pi: np.ndarray

    @property
    def gap(self) -> float:
        if self.eigenvalues.size < 2:
            return 1.0
        return float(1.0 - self.eigenvalues[1])

    def power(self, t: int) -> np.ndarray:
        """``M^t`` on the support, rebuilt from the expansion."""
        f = self.eigenfunctions
        return (f * self.eigenvalues**t) @ f.T * self.pi[None, :]


def _edge_lookup(entries: sp.csr_matrix):
    coo = entries.tocoo()
    n = entries.shape[0]
    keys = coo.row.astype(np.int64) * n + coo.col
    order = np.argsort(keys)
    return coo.row[order], coo.col[order], coo.data[order], keys[order], n


def check_detailed_balance(m: StochasticMatrix, pi) -> None:
    """Raise :class:`DetailedBalanceError` naming the worst pair if ``pi_x M(x,y) != pi_y M(y,x)``."""
    w = _as_weights(pi)
    rows, cols, data, keys, n = _edge_lookup(m.entries)
    tkeys = cols.astype(np.int64) * n + rows
    pos = np.searchsorted(keys, tkeys)
    pos = np.minimum(pos, keys.size - 1)
    present = keys[pos] == tkeys
    if m.exact and w.dtype == object:
        back = np.where(present, data[pos], 0).astype(object)
        lhs = w[rows] * data.astype(object)
        rhs = w[cols] * back
        diff = np.array([abs(x - y) for x, y in zip(lhs, rhs)], dtype=object)
        worst = int(np.argmax(diff)) if diff.size else 0
        if diff.size and diff[worst] != 0:
            raise DetailedBalanceError(
                f"detailed balance fails at ({int(rows[worst])}, {int(cols[worst])}): "
                f"{lhs[worst] / m.denominator} != {rhs[worst] / m.denominator}"
            )
        return
    wf = np.array([float(x) for x in w]) if w.dtype == object else w
    dataf = data / m.denominator if m.exact else data
    back = np.where(present, dataf[pos], 0.0)
    diff = np.abs(wf[rows] * dataf - wf[cols] * back)
    if diff.size and diff.max() > DETAILED_BALANCE_TOL:
        k = int(np.argmax(diff))
        raise DetailedBalanceError(
            f"detailed balance fails at ({int(rows[k])}, {int(cols[k])}) by {diff[k]:.3e}"
        )


def _symmetrized(m: StochasticMatrix, pi) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
    w = _as_weights(pi)
    wf = np.array([float(x) for x in w]) if w.dtype == object else np.asarray(w, dtype=float)
    states = np.nonzero(wf > 0)[0]
    sub = m.to_float()[states][:, states]
    root = np.sqrt(wf[states])
    a = sp.diags(root) @ sub @ sp.diags(1.0 / root)
    a = ((a + a.T) * 0.5).tocsr()
    return a, states, wf[states]


def spectrum_reversible(m: StochasticMatrix, pi) -> SpectralDecomposition:
    """Full spectrum via the symmetrisation ``D^{1/2} M D^{-1/2}`` on supp(pi)."""
    check_detailed_balance(m, pi)
    a, states, p = _symmetrized(m, pi)
    vals, vecs = np.linalg.eigh(a.toarray())
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    f = vecs / np.sqrt(p)[:, None]
    gram = (f * p[:, None]).T @ f
    if np.abs(gram - np.eye(len(vals))).max() > ORTHONORMAL_TOL:
        raise ChainError("eigenfunctions are not pi-orthonormal within tolerance")
    return SpectralDecomposition(np.clip(vals, -1.0, 1.0), f, states, p)


DENSE_EIG_LIMIT = 2048


def spectral_gap(m: StochasticMatrix, pi) -> float:
    """``1 - lambda_2``; sparse Lanczos above ``DENSE_EIG_LIMIT`` states."""
    a, states, _ = _symmetrized(m, pi)
    if states.size <= DENSE_EIG_LIMIT:
        check_detailed_balance(m, pi)
        vals = np.sort(np.linalg.eigvalsh(a.toarray()))[::-1]
    else:
        check_detailed_balance(m, pi)
        vals = np.sort(spla.eigsh(a, k=3, which="LA", tol=1e-12, return_eigenvectors=False))[::-1]
    return float(1.0 - vals[1]) if vals.size > 1 else 1.0


# mixing times


@dataclass
class MixingReport:
    """Mixing time record; ``trace[t]`` is the worst-case TV distance after t steps."""

    eps: float
    t: int
    worst_state: int
    trace: list = field(default_factory=list)
    gap: float | None = None
    n: int | None = None
    kind: str | None = None

    CSV_HEADER = ("n", "eps", "t", "gap", "worst_state")

    def csv_row(self) -> tuple:
        return (self.n, self.eps, self.t, self.gap, self.worst_state)

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "MixingReport":
        return cls(**json.loads(text))

    def time_for(self, eps: float) -> int:
        """Mixing time at a looser threshold, read off the stored trace."""
        return first_below(self.trace, eps)


def first_below(trace: Sequence[float], eps: float, strict: bool = True) -> int:
    for t, d in enumerate(trace):
        if (d < eps) if strict else (d <= eps):
            return t
    raise ChainError(f"trace never drops below {eps}")


MONOTONE_TOL = 1e-12


def worst_tv_trace(
    m: StochasticMatrix,
    pi: np.ndarray,
    initial: Sequence[int],
    stop,
    max_steps: int = 100_000,
) -> tuple[list[float], list[int]]:
    """Worst-case TV from point masses on ``initial`` until ``stop(trace)`` holds."""
    mf = m.to_float()
    if m.size <= DENSE_EIG_LIMIT:
        mf = mf.toarray()
    initial = np.asarray(initial, dtype=np.int64)
    x = np.zeros((initial.size, m.size))
    x[np.arange(initial.size), initial] = 1.0
    trace, argmax = [], []
    while True:
        dists = 0.5 * np.abs(x - pi[None, :]).sum(axis=1)
        k = int(np.argmax(dists))
        if trace and dists[k] > trace[-1] + MONOTONE_TOL:
            raise ChainError(f"worst-case distance increased at t={len(trace)}: {trace[-1]} -> {dists[k]}")
        trace.append(float(dists[k]))
        argmax.append(int(initial[k]))
        if stop(trace):
            return trace, argmax
        if len(trace) > max_steps:
            raise ChainError(f"no mixing within {max_steps} steps")
        x = x @ mf if isinstance(mf, np.ndarray) else (mf.T @ x.T).T


def mixing_time_by_squaring(
    m: StochasticMatrix, eps: float, pi: Distribution, excluded: Iterable[int] = (), max_steps: int = 10**7
) -> int:
    """Same t as ``mixing_time`` but from matrix powers, without the trace.

    Worst-case distance over all starts is non-increasing in t, so the answer
    is found by squaring and then binary lifting: about 2 log2(t) dense products.
    """
    if not 0.0 < eps < 1.0:
        raise ChainError(f"eps must lie in (0, 1), got {eps}")
    active = _active(m.size, list(excluded))
    p = pi.to_float()

    def worst(power):
        return float(0.5 * np.abs(power[active] - p[None, :]).sum(axis=1).max())

    if worst(np.eye(m.size)) < eps:
        return 0
    powers = [m.to_float().toarray()]
    while worst(powers[-1]) >= eps:
        if 2 ** len(powers) > max_steps:
            raise ChainError(f"no mixing within {max_steps} steps")
        powers.append(powers[-1] @ powers[-1])
    if len(powers) == 1:
        return 1
    # invariant: cur = M^t with worst(cur) >= eps
    t, cur = 2 ** (len(powers) - 2), powers[-2]
    for k in range(len(powers) - 3, -1, -1):
        cand = cur @ powers[k]
        if worst(cand) >= eps:
            t, cur = t + 2**k, cand
    return t + 1


def mixing_time(
    m: StochasticMatrix,
    eps: float,
    excluded: Iterable[int] = (),
    *,
    initial: Sequence[int] | None = None,
    pi: Distribution | None = None,
    with_gap: bool = False,
    max_steps: int = 100_000,
) -> MixingReport:
    """Least t with ``max_x TV(delta_x M^t, pi) < eps`` over active states x.

    ``initial`` restricts the maximum to a subset of starting states; callers
    pass one representative per symmetry class when the chain is known to be
    invariant under a group acting transitively on each class.
    """
    if not 0.0 < eps < 1.0:
        raise ChainError(f"eps must lie in (0, 1), got {eps}")
    excluded = list(excluded)
    if pi is None:
        pi = stationary(m, excluded)
    else:
        check_ergodic(m, excluded)
    p = pi.to_float()
    active = _active(m.size, excluded)
    initial = active if initial is None else np.asarray(initial, dtype=np.int64)
    trace, argmax = worst_tv_trace(m, p, initial, lambda tr: tr[-1] < eps, max_steps)
    t = len(trace) - 1
    worst = argmax[t - 1] if t > 0 else argmax[0]
    gap = spectral_gap(m, pi) if with_gap else None
    return MixingReport(eps=float(eps), t=t, worst_state=worst, trace=trace, gap=gap)
