"""Lumping of chains over group orbits.

An :class:`OrbitMap` labels each source state with the index of its orbit.
A label of ``-1`` marks a state that is dropped from the projected space (used
to leave the absorbing all-zero state out of the Hamming-weight chain, whose
state space is {1..n}).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations

import numpy as np
import scipy.sparse as sp

from . import states
from .chain import ChainError, Distribution, StochasticMatrix, _lcm, tv_distance
from .states import StateCodec


class LumpabilityError(ChainError):
    """Orbit row sums depend on the representative."""


@dataclass(frozen=True, eq=False)
class OrbitMap:
    source: StateCodec
    labels: np.ndarray
    n_orbits: int
    target: StateCodec | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (self.source.size,):
            raise ChainError(f"need one label per source state ({self.source.size}), got {labels.shape}")
        kept = labels[labels >= 0]
        if kept.size and (kept.max() >= self.n_orbits or np.unique(kept).size != self.n_orbits):
            raise ChainError("labels must cover 0..n_orbits-1 exactly")
        object.__setattr__(self, "labels", labels)

    @property
    def sizes(self) -> np.ndarray:
        """|G_a| for every orbit a."""
        return np.bincount(self.labels[self.labels >= 0], minlength=self.n_orbits)

    @property
    def kept(self) -> np.ndarray:
        return np.nonzero(self.labels >= 0)[0]

    def members(self, a: int) -> np.ndarray:
        return np.nonzero(self.labels == a)[0]

    def indicator(self) -> sp.csr_matrix:
        kept = self.kept
        return sp.csr_matrix(
            (np.ones(kept.size, dtype=np.int64), (kept, self.labels[kept])),
            shape=(self.source.size, self.n_orbits),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["state_index", "orbit_index"])
        for i, a in enumerate(self.labels):
            w.writerow([i, int(a)])
        return buf.getvalue()


def value_orbit_map(n: int) -> OrbitMap:
    """Orbits of independent relabelling of the values 1,2,3 per site: Pauli string -> support."""
    src = states.pauli(n)
    digits = src.digits()
    labels = ((digits != 0) * (2 ** np.arange(n))[None, :]).sum(axis=1)
    return OrbitMap(src, labels, 2**n, states.support(n))


def hamming_orbit_map(source: StateCodec, drop_zero: bool = True) -> OrbitMap:
    """Hamming-weight orbits of a Pauli or support space.

    With ``drop_zero`` the weight-0 state is left out and orbit ``H - 1``
    holds weight ``H``, matching the {1..n} indexing of the zero chain.
    """
    w = source.weights().astype(np.int64)
    n = source.n
    if drop_zero:
        return OrbitMap(source, np.where(w > 0, w - 1, -1), n, states.hamming(n))
    return OrbitMap(source, w, n + 1)


@dataclass(frozen=True, eq=False)
class CosetOrbitMap(OrbitMap):
    """S_n -> G_H, sigma -> sigma(x0) with x0 = (1,..,1,0,..,0) (H leading ones).

    Fibres are the left cosets ``g N_H`` of the stabiliser
    ``N_H = S_H x S_{n-H}``; orbit ``a`` is the a-th weight-H support string
    in index order.
    """

    H: int = 0
    base_state: tuple = ()
    orbit_states: np.ndarray = field(default=None)

    def representative(self, a: int) -> tuple[int, ...]:
        """Coset representative g_x with the smallest Lehmer code."""
        return states.lehmer_unrank(int(self.members(a)[0]), self.source.n)

    def in_stabilizer(self, sigma) -> bool:
        return states.act_on_string(sigma, self.base_state) == self.base_state

    @property
    def stabilizer_order(self) -> int:
        return math.factorial(self.H) * math.factorial(self.source.n - self.H)


def coset_orbit_map(n: int, H: int) -> CosetOrbitMap:
    if not 0 <= H <= n:
        raise ChainError(f"H must lie in [0, {n}], got {H}")
    perm_codec = states.permutation(n)
    supp = states.support(n)
    base = tuple([1] * H + [0] * (n - H))
    orbit = np.nonzero(supp.weights() == H)[0]
    position = {int(q): a for a, q in enumerate(orbit)}
    labels = [position[supp.encode(states.act_on_string(s, base))] for s in permutations(range(n))]
    return CosetOrbitMap(
        perm_codec, np.array(labels), orbit.size, None, H=H, base_state=base, orbit_states=orbit
    )


def orbit_row_sums(m: StochasticMatrix, om: OrbitMap) -> np.ndarray:
    """Dense (kept states x orbits) array of ``sum_{y in G_b} M(x, y)``."""
    kept = om.kept
    return (m.entries[kept] @ om.indicator()).toarray()


def project_chain(m: StochasticMatrix, om: OrbitMap) -> StochasticMatrix:
    """Lumped chain ``N(G_a, G_b) = sum_{y in G_b} M(x, y)`` for any x in G_a.

    Representative independence is checked for every state before returning.
    """
    if m.size != om.source.size:
        raise ChainError(f"matrix has {m.size} states, orbit map expects {om.source.size}")
    kept = om.kept
    sums = orbit_row_sums(m, om)
    target = m.denominator if m.exact else 1.0
    leak = np.abs(sums.sum(axis=1) - target) > (0 if m.exact else 1e-12)
    if leak.any():
        x = int(kept[np.argmax(leak)])
        raise LumpabilityError(f"state {x} sends probability to dropped states")
    labels = om.labels[kept]
    first = np.full(om.n_orbits, -1, dtype=np.int64)
    for k in range(kept.size - 1, -1, -1):
        first[labels[k]] = k
    ref = sums[first[labels]]
    if m.exact:
        bad = np.any(ref != sums, axis=1)
    else:
        bad = np.abs(ref - sums).max(axis=1) > 1e-12
    if bad.any():
        k = int(np.argmax(bad))
        x, y = int(kept[first[labels[k]]]), int(kept[k])
        b = int(np.argmax(ref[k] != sums[k]) if m.exact else np.argmax(np.abs(ref[k] - sums[k])))
        raise LumpabilityError(
            f"not lumpable: representatives {x} and {y} of orbit {int(labels[k])} "
            f"send different mass to orbit {b}"
        )
    return StochasticMatrix(sums[first], m.denominator)


def project_distribution(d, om: OrbitMap) -> Distribution:
    """Orbit marginals ``nu(a) = sum_{x in G_a} mu(x)``."""
    w = d.weights if isinstance(d, Distribution) else np.asarray(d)
    if w.shape[0] != om.source.size:
        raise ChainError(f"dimension mismatch {w.shape[0]} vs {om.source.size}")
    dropped = om.labels < 0
    if w.dtype == object:
        if any(w[i] != 0 for i in np.nonzero(dropped)[0]):
            raise ChainError("distribution has mass on dropped states")
        out = np.array([Fraction(0)] * om.n_orbits, dtype=object)
        np.add.at(out, om.labels[~dropped], w[~dropped])
        return Distribution(out)
    if np.abs(w[dropped]).sum() > 1e-12:
        raise ChainError("distribution has mass on dropped states")
    return Distribution(np.bincount(om.labels[~dropped], weights=w[~dropped], minlength=om.n_orbits))


def project_function(f: np.ndarray, om: OrbitMap) -> np.ndarray:
    """Orbit sums of a function on the source space (zero for functions odd under the action)."""
    f = np.asarray(f, dtype=float)
    kept = om.kept
    return np.bincount(om.labels[kept], weights=f[kept], minlength=om.n_orbits)


def lift_eigenfunction(h, om: OrbitMap, projected: StochasticMatrix, eigenvalue=None, tol: float = 1e-8):
    """Lift an eigenfunction of the lumped chain: ``f(x) = h(a)`` for x in G_a.

    Returns ``(f, eigenvalue)``; dropped states get ``f = 0``. Exact when both
    ``h`` (Fractions) and ``projected`` are exact.
    """
    h = np.asarray(h)
    if h.shape[0] != projected.size or projected.size != om.n_orbits:
        raise ChainError("eigenfunction, projected chain and orbit map disagree in size")
    if h.dtype == object and projected.exact:
        nh = projected.fractions() @ h
        if eigenvalue is None:
            k = next(i for i, v in enumerate(h) if v != 0)
            eigenvalue = nh[k] / h[k]
        eigenvalue = Fraction(eigenvalue)
        if any(a != eigenvalue * b for a, b in zip(nh, h)):
            raise ChainError("h is not an eigenfunction of the projected chain")
        f = np.array([Fraction(0)] * om.source.size, dtype=object)
    else:
        hf = np.asarray(h, dtype=float)
        nh = projected.to_float() @ hf
        if eigenvalue is None:
            eigenvalue = float(nh @ hf / (hf @ hf))
        if np.abs(nh - eigenvalue * hf).max() > tol:
            raise ChainError("h is not an eigenfunction of the projected chain")
        f = np.zeros(om.source.size)
        h = hf
    kept = om.kept
    f[kept] = h[om.labels[kept]]
    return f, eigenvalue


def apply_S(d, n: int) -> np.ndarray:
    """``nu S`` in closed form: average over each Hamming orbit of {0,1}^n."""
    w = d.weights if isinstance(d, Distribution) else np.asarray(d, dtype=float)
    weights = states.support(n).weights()
    zeta = np.bincount(weights, weights=np.asarray(w, dtype=float), minlength=n + 1)
    sizes = np.array([math.comb(n, h) for h in range(n + 1)])
    return (zeta / sizes)[weights]


def randomize_operator_S(n: int) -> StochasticMatrix:
    """Uniform random index permutation as a Markov matrix on {0,1}^n.

    Built from orbit averaging, ``S(q, q') = 1/|G_H|`` when ``H(q) = H(q')``;
    never as an n!-term sum.
    """
    if n < 1:
        raise ChainError(f"n must be >= 1, got {n}")
    weights = states.support(n).weights()
    den = _lcm(math.comb(n, h) for h in range(n + 1))
    rows, cols, vals = [], [], []
    for h in range(n + 1):
        orbit = np.nonzero(weights == h)[0]
        r, c = np.meshgrid(orbit, orbit, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(np.full(r.size, den // math.comb(n, h), dtype=np.int64))
    return StochasticMatrix.from_triplets(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), 2**n, den
    )


def permutation_matrix(sigma, n: int) -> StochasticMatrix:
    """``A_sigma`` with ``[nu A_sigma](q) = nu(sigma(q))``."""
    codec = states.support(n)
    rows = [codec.encode(states.act_on_string(sigma, q)) for q in codec.states()]
    return StochasticMatrix.from_triplets(rows, np.arange(codec.size), np.ones(codec.size, dtype=np.int64), codec.size, 1)


def zeta_pi(n: int) -> np.ndarray:
    """Stationary Hamming-weight law on 0..n (entry 0 is zero), float."""
    return np.array([0.0] + [math.comb(n, h) * 3.0**h / (4.0**n - 1) for h in range(1, n + 1)])


def nu_pi(n: int) -> np.ndarray:
    weights = states.support(n).weights()
    out = 3.0**weights / (4.0**n - 1)
    out[0] = 0.0
    return out


def verify_lemma2(n: int, samples: int = 100, seed: int = 0) -> dict:
    """Compare ``||nu S - nu_pi||`` with ``||zeta_nu - zeta_pi||`` on random nu.

    The left side multiplies by the explicit S matrix; the right side only
    uses Hamming-weight marginals.
    """
    if not 1 <= n <= 12:
        raise ChainError(f"lemma 2 check supports 1 <= n <= 12, got {n}")
    rng = np.random.default_rng(seed)
    s = randomize_operator_S(n).to_float()
    om = hamming_orbit_map(states.support(n), drop_zero=False)
    target_q, target_z = nu_pi(n), zeta_pi(n)
    size = 2**n
    worst = 0.0
    for k in range(samples):
        # alternate dense and sparse draws so some nu are far from orbit-constant
        alpha = 1.0 if k % 2 == 0 else 0.05
        nu = np.zeros(size)
        nu[1:] = rng.dirichlet(np.full(size - 1, alpha))
        lhs = tv_distance(s.T @ nu, target_q)
        rhs = tv_distance(project_distribution(nu, om).weights, target_z)
        worst = max(worst, abs(lhs - rhs))
    return {
        "lemma": 2,
        "n": n,
        "samples": samples,
        "seed": seed,
        "max_discrepancy": worst,
        "passed": worst < 1e-12,
    }
