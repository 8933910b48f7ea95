"""Numerical checks of the mixing-time lemmas and the scaling sweeps.

Several routines maximise a distance over initial states using one
representative per Hamming orbit. This is exact for chains on {0,1}^n that
commute with every index permutation (Q, T, M and their variants): the
permutation carries one starting point to another while fixing the target
(nu_pi, or the orbit-uniform nu S), so all members of an orbit share one
distance trace. Tests compare against the full scan at small n.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import binom

from . import states
from .chain import (
    ChainError,
    Distribution,
    MONOTONE_TOL,
    first_below,
    max_residue,
    mixing_time,
    mixing_time_by_squaring,
    spectral_gap,
)
from .chains import build_Mtilde, build_P, build_Q, build_RT, build_T, build_Z, stationary_closed_form
from .projection import apply_S, coset_orbit_map, nu_pi, project_chain, zeta_pi

LEMMA1_EPS = (0.25, 0.1, 0.01)
SWITCH_P = 0.2  # probability that a Q step is a T step


def orbit_representatives(n: int, include_zero: bool = False) -> np.ndarray:
    """Smallest support-string index of each Hamming weight."""
    weights = states.support(n).weights()
    start = 0 if include_zero else 1
    return np.array([int(np.argmax(weights == h)) for h in range(start, n + 1)], dtype=np.int64)


# P versus Q mixing


def verify_lemma1(n: int, eps_list=LEMMA1_EPS) -> dict:
    """Mixing times and full worst-case TV traces of P and Q, computed independently."""
    if not 2 <= n <= 5:
        raise ChainError(f"lemma 1 check needs 2 <= n <= 5, got {n}")
    eps_min = min(eps_list)
    p, q = build_P(n), build_Q(n)
    rep_p = mixing_time(p.matrix, eps_min, p.excluded, pi=stationary_closed_form("P", n))
    rep_q = mixing_time(q.matrix, eps_min, q.excluded, pi=stationary_closed_form("Q", n))
    # t = 0 is excluded: the identity is not block-constant, so the traces only coincide from t = 1
    length = min(len(rep_p.trace), len(rep_q.trace))
    trace_diff = float(np.max(np.abs(np.subtract(rep_p.trace[1:length], rep_q.trace[1:length]))))
    rows = []
    for eps in eps_list:
        tp, tq = first_below(rep_p.trace, eps), first_below(rep_q.trace, eps)
        rows.append({"eps": eps, "t_mix_P": tp, "t_mix_Q": tq, "equal": tp == tq})
    passed = all(r["equal"] for r in rows) and len(rep_p.trace) == len(rep_q.trace) and trace_diff <= 1e-12
    return {
        "lemma": 1,
        "n": n,
        "results": rows,
        "trace_P": rep_p.trace,
        "trace_Q": rep_q.trace,
        "max_trace_difference": trace_diff,
        "passed": passed,
    }


# generalized mixing of T


@dataclass
class GeneralizedProfile:
    """Worst-case ``||delta_x T^t - delta_x S||`` over the chosen starts."""

    n: int
    starts: list
    trace: list
    per_start: list = field(default_factory=list)  # final-step distances per start

    def time_for(self, eps: float) -> int:
        return first_below(self.trace, eps, strict=False)


def generalized_T_profile(n: int, eps: float, all_states: bool = False, max_steps: int = 100_000) -> GeneralizedProfile:
    """Propagate point masses under T until every distance to ``delta_x S`` is <= eps.

    The map ``nu -> ||nu T^t - nu S||`` is convex in nu (a norm of a linear
    map), so its maximum over the simplex sits at a point mass.
    """
    if not 2 <= n <= 12:
        raise ChainError(f"generalized T mixing supports 2 <= n <= 12, got {n}")
    t_mat = build_T(n).matrix.to_float()
    weights = states.support(n).weights()
    starts = np.arange(2**n) if all_states else orbit_representatives(n, include_zero=True)
    sizes = np.array([math.comb(n, h) for h in range(n + 1)])
    target = np.zeros((starts.size, 2**n))
    for k, x in enumerate(starts):
        orbit = weights == weights[x]
        target[k, orbit] = 1.0 / sizes[weights[x]]
    x_cur = np.zeros_like(target)
    x_cur[np.arange(starts.size), starts] = 1.0
    dense = t_mat.toarray() if t_mat.shape[0] <= 2048 else None
    trace = []
    while True:
        d = 0.5 * np.abs(x_cur - target).sum(axis=1)
        worst = float(d.max())
        if trace and worst > trace[-1] + MONOTONE_TOL:
            raise ChainError(f"generalized distance increased at t={len(trace)}")
        trace.append(worst)
        if worst <= eps:
            return GeneralizedProfile(n, [int(s) for s in starts], trace, d.tolist())
        if len(trace) > max_steps:
            raise ChainError(f"T did not reach {eps} within {max_steps} steps")
        x_cur = x_cur @ dense if dense is not None else (t_mat.T @ x_cur.T).T


def generalized_mixing_time_T(n: int, eps: float, all_states: bool = False) -> int:
    """``max_nu min{t : ||nu T^t - nu S|| <= eps}``, evaluated at point masses."""
    return generalized_T_profile(n, eps, all_states).time_for(eps)


def verify_lemma3(n: int, eps: float = 0.25, samples: int = 5, seed: int = 0) -> dict:
    """Coset projection identity, convergence of nu T^t to nu S, and mixing-time ordering."""
    if not 2 <= n <= 5:
        raise ChainError(f"lemma 3 check needs 2 <= n <= 5, got {n}")
    rt = build_RT(n).matrix
    t_mat = build_T(n).matrix
    rt_time = mixing_time(rt, eps).t
    per_h = []
    for h in range(n + 1):
        cmap = coset_orbit_map(n, h)
        t_h = t_mat.restrict(cmap.orbit_states)
        equal = project_chain(rt, cmap).equals(t_h)
        t_mix_h = 0 if t_h.size == 1 else mixing_time(t_h, eps).t
        per_h.append({"H": h, "orbit_size": int(t_h.size), "projection_equal": equal, "t_mix": t_mix_h})
    # sampled initial distributions converge to their randomised versions
    rng = np.random.default_rng(seed)
    tf = t_mat.to_float()
    worst_final = 0.0
    monotone = True
    for _ in range(samples):
        nu = rng.dirichlet(np.full(2**n, 0.3))
        target = apply_S(nu, n)
        prev = 1.0
        cur = nu
        for _ in range(400):
            d = 0.5 * np.abs(cur - target).sum()
            monotone &= d <= prev + MONOTONE_TOL
            prev = d
            cur = tf.T @ cur
        worst_final = max(worst_final, prev)
    ordering = max(r["t_mix"] for r in per_h) <= rt_time
    passed = all(r["projection_equal"] for r in per_h) and ordering and worst_final < 1e-8 and monotone
    return {
        "lemma": 3,
        "n": n,
        "eps": eps,
        "t_mix_RT": rt_time,
        "orbits": per_h,
        "max_final_distance": worst_final,
        "monotone": bool(monotone),
        "ordering_holds": ordering,
        "passed": bool(passed),
    }


# restricted mixing of Q


def default_delta(eps: float) -> float:
    """delta with delta^2 = ln(4/eps)/2, so that exp(-2 delta^2) = eps/4."""
    return math.sqrt(0.5 * math.log(4.0 / eps))


def lemma4_threshold(eps: float, gamma: float, delta: float) -> float:
    return eps - gamma - math.exp(-2.0 * delta * delta)


def lemma4_rhs(eps: float, gamma: float, delta: float, t_mix_T: float) -> float:
    """Upper bound on ``sqrt(t_mixQ(eps, gamma))``:
    ``(1/(2p)) [delta + sqrt(delta^2 + 4 p t_mixT(eps - gamma - e^{-2 delta^2}))]`` with p = 1/5.
    """
    if gamma < 0 or delta <= 0:
        raise ChainError("need gamma >= 0 and delta > 0")
    if not lemma4_threshold(eps, gamma, delta) > 0:
        raise ChainError(
            f"precondition eps > exp(-2 delta^2) + gamma fails: "
            f"{eps} <= {math.exp(-2 * delta * delta) + gamma}"
        )
    p = SWITCH_P
    return (delta + math.sqrt(delta * delta + 4 * p * t_mix_T)) / (2 * p)


def lemma4_simplified(eps: float, t_mix_T_quarter: float) -> float:
    """``(25/4) [ln(4/eps)/2 + (4/5) t_mixT(eps/4)]``, the short form quoted for gamma = eps/2."""
    return 6.25 * (0.5 * math.log(4.0 / eps) + 0.8 * t_mix_T_quarter)


@dataclass
class RestrictedMixing:
    n: int
    eps: float
    gamma: float
    delta: float
    empirical_max: int
    certified_bound: float | None
    t_mix_T: int | None
    family: dict
    worst_member: str
    point_masses_admitted: int
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.certified_bound is None or self.empirical_max < self.certified_bound

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def _single_site_mixture(n: int, zeta: np.ndarray, pick) -> np.ndarray:
    """Put all of orbit H's mass ``zeta[H]`` on the single string ``pick(H)``."""
    codec = states.support(n)
    nu = np.zeros(2**n)
    for h in range(1, n + 1):
        nu[codec.encode(pick(h))] += zeta[h]
    return nu


def ball_family(n: int, gamma: float, q_float, t_zero: int) -> tuple[list, list, int]:
    """Search family inside B(gamma) = {nu : ||nu S - nu_pi|| <= gamma}.

    * point masses that pass the membership test (one per orbit, by symmetry)
    * orbit-concentrated mixtures: Hamming marginal pushed toward one weight
      as far as gamma allows, with each orbit's mass on a single string
    * the Q-chain law after ``t_zero`` steps from every weight representative
    """
    zp = zeta_pi(n)
    target = nu_pi(n)
    members, labels = [], []

    def admit(nu, label):
        if 0.5 * np.abs(apply_S(nu, n) - target).sum() <= gamma + 1e-15:
            members.append(nu)
            labels.append(label)
            return True
        return False

    point_count = 0
    for h, x in zip(range(1, n + 1), orbit_representatives(n)):
        nu = np.zeros(2**n)
        nu[x] = 1.0
        point_count += admit(nu, f"point H={h}")
    leading = lambda h: tuple([1] * h + [0] * (n - h))
    trailing = lambda h: tuple([0] * (n - h) + [1] * h)
    for h_star in range(0, n + 1):
        if h_star == 0:
            zeta = zp.copy()
        else:
            s = min(1.0, gamma / (1.0 - zp[h_star])) if zp[h_star] < 1 else 1.0
            zeta = (1 - s) * zp
            zeta[h_star] += s
        for name, pick in (("leading", leading), ("trailing", trailing)):
            admit(_single_site_mixture(n, zeta, pick), f"mixture skew H={h_star} {name}")
    if t_zero > 0:
        for h, x in zip(range(1, n + 1), orbit_representatives(n)):
            nu = np.zeros(2**n)
            nu[x] = 1.0
            for _ in range(t_zero):
                nu = q_float.T @ nu
            admit(nu, f"Q after {t_zero} steps from H={h}")
    return members, labels, point_count


def restricted_mixing_time_Q(n: int, eps: float, gamma: float, delta: float | None = None) -> RestrictedMixing:
    """Empirical ``t_mixQ(eps, gamma)`` over a search family, plus the lemma-4 certificate.

    The supremum over the ball cannot be taken exactly; the empirical value is
    a lower estimate, the certified bound an upper one.
    """
    if not 2 <= n <= 10:
        raise ChainError(f"restricted mixing supports 2 <= n <= 10, got {n}")
    if not 0 < eps < 1:
        raise ChainError(f"eps must lie in (0, 1), got {eps}")
    delta = default_delta(eps) if delta is None else delta
    q_float = build_Q(n).matrix.to_float()
    notes = []
    if gamma >= 1:
        t_zero = 0
        notes.append("gamma >= 1: the ball is the whole simplex")
    else:
        z = build_Z(n)
        t_zero = mixing_time(z.matrix, gamma).t
    members, labels, point_count = ball_family(n, gamma, q_float, t_zero)
    if point_count == 0:
        notes.append("no point mass lies in the ball; family is mixtures and Q states only")
    target = nu_pi(n)
    x_cur = np.array(members)
    done = np.full(len(members), -1)
    t = 0
    dense = q_float.toarray() if q_float.shape[0] <= 2048 else None
    while True:
        d = 0.5 * np.abs(x_cur - target[None, :]).sum(axis=1)
        newly = (done < 0) & (d <= eps)
        done[newly] = t
        if (done >= 0).all():
            break
        if t > 100_000:
            raise ChainError("Q did not mix within 100000 steps")
        x_cur = x_cur @ dense if dense is not None else (q_float.T @ x_cur.T).T
        t += 1
    k = int(np.argmax(done))
    bound, t_t = None, None
    if lemma4_threshold(eps, gamma, delta) > 0:
        t_t = generalized_mixing_time_T(n, lemma4_threshold(eps, gamma, delta))
        bound = lemma4_rhs(eps, gamma, delta, t_t) ** 2
    else:
        notes.append("precondition eps > exp(-2 delta^2) + gamma fails; no certificate")
    family = {}
    for lab in labels:
        key = lab.split(" H=")[0].split(" after")[0]
        family[key] = family.get(key, 0) + 1
    return RestrictedMixing(
        n=n, eps=eps, gamma=gamma, delta=delta,
        empirical_max=int(done.max()), certified_bound=bound, t_mix_T=t_t,
        family=family, worst_member=labels[k], point_masses_admitted=point_count, notes=notes,
    )


def verify_lemma4(n: int, eps: float) -> dict:
    r = restricted_mixing_time_Q(n, eps, eps / 2)
    return {"lemma": 4, **r.to_dict()}


# decomposition pieces


def commutator_residue(n: int):
    """Largest entry of ``T Mtilde - Mtilde T`` (exact)."""
    t = build_T(n).matrix
    mt = build_Mtilde(n).matrix
    return max_residue([(1, t.matmul(mt)), (-1, mt.matmul(t))])


def binomial_lower_tail(t: int, delta: float, p: float = SWITCH_P) -> float:
    """``sum_{i <= p t - delta sqrt(t)} C(t,i) p^i (1-p)^(t-i)``."""
    k = math.floor(p * t - delta * math.sqrt(t))
    return float(binom.cdf(k, t, p)) if k >= 0 else 0.0


def binomial_decomposition_check(n: int, nu: np.ndarray, t_max: int) -> float:
    """Largest violation of ``d(t) <= sum_i B(t,i) ||nu T^i - nu_pi||`` for t <= t_max.

    Negative or zero means the inequality holds everywhere.
    """
    q = build_Q(n).matrix.to_float()
    tm = build_T(n).matrix.to_float()
    target = nu_pi(n)
    t_dists = []
    cur = nu.copy()
    for _ in range(t_max + 1):
        t_dists.append(0.5 * np.abs(cur - target).sum())
        cur = tm.T @ cur
    worst = -np.inf
    cur = nu.copy()
    for t in range(t_max + 1):
        d = 0.5 * np.abs(cur - target).sum()
        rhs = sum(binom.pmf(i, t, SWITCH_P) * t_dists[i] for i in range(t + 1))
        worst = max(worst, d - rhs)
        cur = q.T @ cur
    return float(worst)


# sweeps


@dataclass
class ScalingFit:
    """Least-squares fit ``t = a * x + b`` with x = n ln n (or n ln(n/eps))."""

    n_values: list
    t_values: list
    a: float
    b: float
    r2: float
    model: str = "n_log_n"

    @classmethod
    def fit(cls, n_values, t_values, eps: float | None = None, model: str = "n_log_n") -> "ScalingFit":
        if len(n_values) < 5:
            raise ChainError("a scaling fit needs at least 5 values of n")
        n = np.asarray(n_values, dtype=float)
        x = n * np.log(n) if model == "n_log_n" else n * np.log(n / eps)
        y = np.asarray(t_values, dtype=float)
        a, b = np.polyfit(x, y, 1)
        resid = y - (a * x + b)
        ss_tot = float(((y - y.mean()) ** 2).sum())
        r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
        return cls([int(v) for v in n_values], [int(v) for v in t_values], float(a), float(b), r2, model)


SWEEP_LIMITS = {"Q": (2, 14), "P": (2, 5), "Z": (2, 10**6), "RT": (2, 7)}
SWEEP_HEADER = ("n", "eps", "t_mix", "gap", "fit_a", "fit_b", "r2")


def chain_mixing(kind: str, n: int, eps: float, with_gap: bool = True) -> tuple[int, float | None]:
    """Mixing time (and spectral gap) of one chain, using orbit representatives where exact."""
    lo, hi = SWEEP_LIMITS.get(kind, (0, -1))
    if not lo <= n <= hi:
        raise ChainError(f"sweep of {kind} supports {lo} <= n <= {hi}, got n={n}")
    if kind == "Q":
        fam = build_Q(n)
        pi = stationary_closed_form("Q", n)
        m = fam.matrix.as_float()
        rep = mixing_time(m, eps, fam.excluded, initial=orbit_representatives(n), pi=pi)
    elif kind == "P":
        fam = build_P(n)
        pi = stationary_closed_form("P", n)
        m = fam.matrix.as_float()
        rep = mixing_time(m, eps, fam.excluded, pi=pi)
    elif kind == "Z":
        fam = build_Z(n)
        pi = stationary_closed_form("Z", n)
        m = fam.matrix.as_float()
        t = mixing_time_by_squaring(m, eps, pi)
        return t, spectral_gap(m, pi) if with_gap else None
    else:
        # a walk on a group: every start sees the same distance trace
        fam = build_RT(n)
        m = fam.matrix.as_float()
        pi = Distribution(np.full(m.size, 1.0 / m.size))
        rep = mixing_time(m, eps, initial=[0], pi=pi)
    gap = spectral_gap(m, pi) if with_gap else None
    return rep.t, gap


@dataclass
class Sweep:
    kind: str
    eps: float
    rows: list  # (n, t_mix, gap)
    fit: ScalingFit | None

    def gap_band_ratio(self) -> float | None:
        scaled = [n * g for n, _, g in self.rows if g is not None]
        return max(scaled) / min(scaled) if scaled else None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        fa = fb = r2 = ""
        if self.fit is not None:
            fa, fb, r2 = self.fit.a, self.fit.b, self.fit.r2
        for n, t, g in self.rows:
            w.writerow([n, self.eps, t, "" if g is None else g, fa, fb, r2])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "eps": self.eps,
                "rows": [{"n": n, "t_mix": t, "gap": g} for n, t, g in self.rows],
                "fit": None if self.fit is None else asdict(self.fit),
                "n_times_gap_ratio": self.gap_band_ratio(),
            },
            indent=2,
        )


def spectral_gap_sweep(kind: str, n_values, eps: float, with_gap: bool = True) -> Sweep:
    rows = []
    for n in n_values:
        t, g = chain_mixing(kind, n, eps, with_gap)
        rows.append((n, t, g))
    fit = ScalingFit.fit([r[0] for r in rows], [r[1] for r in rows]) if len(rows) >= 5 else None
    return Sweep(kind, eps, rows, fit)
