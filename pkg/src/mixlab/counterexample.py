"""Exact enumeration showing that "all sites hit" is not a strong stationary time.

A coordinate is *hit* at a step when the chosen pair contains it and the pair
value before the step is not (0, 0). Pairs are enumerated as unordered pairs
with weight ``1/C(n,2)``, which is the same law as the ordered-pair rule since
each two-site update is symmetric.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import states
from .chain import ChainError, Distribution

NONZERO_PAIRS = [(a, b) for a in range(4) for b in range(4) if (a, b) != (0, 0)]
DEFAULT_INITIAL = (0, 0, 1)
WITNESSES = ((1, 0, 0), (0, 0, 1))


class EmptyEventError(ChainError):
    """The conditioning event has probability zero."""


@dataclass(frozen=True)
class HitPath:
    initial: tuple
    pairs: tuple
    outcomes: tuple  # None for an inert step
    hits: tuple  # per step, tuple of bools over sites (cumulative)
    final: tuple
    probability: Fraction

    @property
    def all_hit(self) -> bool:
        return all(self.hits[-1]) if self.hits else False

    def describe(self) -> str:
        steps = []
        for (i, j), out in zip(self.pairs, self.outcomes):
            tag = "inert" if out is None else f"->{out[0]}{out[1]}"
            steps.append(f"({i + 1},{j + 1}){tag}")
        start = "".join(map(str, self.initial))
        end = "".join(map(str, self.final))
        return f"{start} " + " ".join(steps) + f" => {end}  p={self.probability}"


def hit_value_distribution() -> Distribution:
    """Law of one coordinate right after an active resample, by counting the 15 outcomes."""
    counts = [0, 0, 0, 0]
    for a, _ in NONZERO_PAIRS:
        counts[a] += 1
    return Distribution.from_fractions([Fraction(c, len(NONZERO_PAIRS)) for c in counts])


def enumerate_paths(y, steps: int):
    """All weighted evolutions of ``steps`` updates from ``y``; leaf probabilities sum to 1."""
    n = len(y)
    states.pauli(n).validate(tuple(y))
    if n < 2:
        raise ChainError("need n >= 2")
    pair_w = Fraction(1, math.comb(n, 2))
    paths = [(tuple(y), (), (), (), (False,) * n, Fraction(1))]
    for _ in range(steps):
        nxt = []
        for state, pairs, outs, hits, hit, prob in paths:
            for i, j in combinations(range(n), 2):
                if state[i] == 0 and state[j] == 0:
                    nxt.append((state, pairs + ((i, j),), outs + (None,), hits + (hit,), hit, prob * pair_w))
                    continue
                new_hit = tuple(h or k in (i, j) for k, h in enumerate(hit))
                for a, b in NONZERO_PAIRS:
                    s = list(state)
                    s[i], s[j] = a, b
                    nxt.append(
                        (tuple(s), pairs + ((i, j),), outs + ((a, b),), hits + (new_hit,), new_hit,
                         prob * pair_w / len(NONZERO_PAIRS))
                    )
        paths = nxt
    return [HitPath(tuple(y), p, o, h, s, pr) for s, p, o, h, _, pr in paths]


def two_step_distribution(y, steps: int = 2) -> Distribution:
    """Unconditioned law after ``steps`` updates, from the enumeration tree."""
    codec = states.pauli(len(y))
    w = np.array([Fraction(0)] * codec.size, dtype=object)
    for path in enumerate_paths(y, steps):
        w[codec.encode(path.final)] += path.probability
    return Distribution(w)


def conditional_hit_distribution(y=DEFAULT_INITIAL, steps: int = 2):
    """Law of the final state given every site was hit within ``steps`` updates.

    Returns ``(distribution over Pauli strings, event probability, contributing paths)``.
    """
    y = tuple(y)
    codec = states.pauli(len(y))
    good = [p for p in enumerate_paths(y, steps) if p.all_hit]
    total = sum((p.probability for p in good), Fraction(0))
    if total == 0:
        raise EmptyEventError(f"no evolution from {codec.format(y)} hits every site within {steps} steps")
    w = np.array([Fraction(0)] * codec.size, dtype=object)
    for p in good:
        w[codec.encode(p.final)] += p.probability / total
    return Distribution(w), total, good


def refute_sst_claim(y=DEFAULT_INITIAL, steps: int = 2) -> dict:
    """Report on the conditional law: non-uniformity witnessed by an exact ratio."""
    y = tuple(y)
    n = len(y)
    codec = states.pauli(n)
    dist, total, paths = conditional_hit_distribution(y, steps)
    support = {codec.format(codec.decode(i)): w for i, w in enumerate(dist.weights) if w != 0}
    a, b = WITNESSES if n == 3 else ((1,) + (0,) * (n - 1), y)
    pa, pb = dist.weights[codec.encode(a)], dist.weights[codec.encode(b)]
    ratio = pa / pb if pb else None
    nonzero = [w for w in dist.weights[1:]]
    uniform = all(w == nonzero[0] for w in nonzero)
    # support-level view: mass per support string inside each Hamming orbit
    supp = states.support(n)
    q_mass = [Fraction(0)] * supp.size
    for i, w in enumerate(dist.weights):
        q_mass[supp.encode(tuple(int(c != 0) for c in codec.decode(i)))] += w
    weights = supp.weights()
    q_nonuniform = []
    for h in range(1, n + 1):
        members = [q for q in range(supp.size) if weights[q] == h]
        if len({q_mass[q] for q in members}) > 1:
            q_nonuniform.append(h)
    first_pairs = sorted({p.pairs[0] for p in paths})
    return {
        "initial": codec.format(y),
        "steps": steps,
        "conditioning_probability": _frac(total),
        "witnesses": [
            {"state": codec.format(a), "probability": _frac(pa)},
            {"state": codec.format(b), "probability": _frac(pb)},
        ],
        "ratio": _frac(ratio) if ratio is not None else None,
        "uniform": uniform,
        "support_nonuniform_weights": q_nonuniform,
        "contributing_paths": len(paths),
        "first_step_pairs": [f"{i + 1},{j + 1}" for i, j in first_pairs],
        "conditional": {k: _frac(v) for k, v in sorted(support.items())},
        "paths": [p.describe() for p in paths],
    }


def _frac(x: Fraction) -> dict:
    return {"numerator": x.numerator, "denominator": x.denominator}


def format_report(report: dict) -> str:
    w0, w1 = report["witnesses"]
    r = report["ratio"]
    lines = [
        f"initial state {report['initial']}, {report['steps']} steps, conditioned on all sites hit",
        f"event probability {report['conditioning_probability']['numerator']}/"
        f"{report['conditioning_probability']['denominator']}",
        f"P({w0['state']}) = {w0['probability']['numerator']}/{w0['probability']['denominator']}",
        f"P({w1['state']}) = {w1['probability']['numerator']}/{w1['probability']['denominator']}",
        f"ratio {r['numerator']}/{r['denominator']}" if r else "ratio undefined",
        f"uniform over nonzero states: {report['uniform']}",
        f"contributing paths: {report['contributing_paths']} (first-step pairs {report['first_step_pairs']})",
        "conditional distribution:",
    ]
    for state, f in report["conditional"].items():
        lines.append(f"  {state}  {f['numerator']}/{f['denominator']}")
    lines.append("paths:")
    lines.extend(f"  {p}" for p in report["paths"])
    return "\n".join(lines)


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2)
