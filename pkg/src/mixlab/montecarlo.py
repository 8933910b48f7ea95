"""Trajectory simulation of the Pauli-weight chain and the shuffle-by-hand strategy.

Trajectories are simulated in fixed blocks of ``block_size``. Block ``k`` owns
the random stream ``SeedSequence(seed, spawn_key=(k,))``, so results depend
only on ``(config, seed)`` and not on how blocks are scheduled across workers.
Bounded integer draws use numpy's ``Generator.integers``, which rejects
rather than reducing modulo, so there is no modulo bias.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import states
from .chain import ChainError, Distribution, tv_distance
from .projection import zeta_pi


@dataclass(frozen=True)
class TrajectoryConfig:
    n: int
    steps: int
    trajectories: int
    seed: int = 0
    variant: str = "P"  # "P" or "Pprime" (extra identity step with probability 1/n)
    initial: tuple | None = None  # default: weight-one string (0,..,0,1)
    block_size: int = 4096

    def __post_init__(self):
        if self.n < 2:
            raise ChainError(f"n must be >= 2, got {self.n}")
        if self.trajectories < 1:
            raise ChainError("need at least one trajectory")
        if self.steps < 0:
            raise ChainError("steps must be non-negative")
        if self.variant not in ("P", "Pprime"):
            raise ChainError(f"unknown variant {self.variant!r}")
        if self.initial is not None:
            states.pauli(self.n).validate(tuple(self.initial))

    @property
    def start(self) -> tuple:
        if self.initial is not None:
            return tuple(self.initial)
        return (0,) * (self.n - 1) + (1,)


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def sample_P_step(state, rng: np.random.Generator, identity_weight: float = 0.0) -> tuple:
    """One update: uniform pair; inert on (0,0); else uniform over the 15 nonzero pair values."""
    n = len(state)
    states.pauli(n).validate(tuple(state))
    if identity_weight and rng.random() < identity_weight:
        return tuple(state)
    i = int(rng.integers(n))
    j = int(rng.integers(n - 1))
    j += j >= i
    if state[i] == 0 and state[j] == 0:
        return tuple(state)
    o = int(rng.integers(1, 16))
    out = list(state)
    out[i], out[j] = o // 4, o % 4
    return tuple(out)


def step_batch(batch: np.ndarray, rng: np.random.Generator, idle_n: int = 0) -> None:
    """Advance every row of a (k, n) uint8 array by one update, in place.

    ``idle_n > 0`` adds a holding step with probability ``1/idle_n``.
    """
    k, n = batch.shape
    rows = np.arange(k)
    i = rng.integers(n, size=k)
    j = rng.integers(n - 1, size=k)
    j += j >= i
    o = rng.integers(1, 16, size=k)
    active = (batch[rows, i] != 0) | (batch[rows, j] != 0)
    if idle_n:
        active &= rng.integers(idle_n, size=k) != 0
    r = rows[active]
    batch[r, i[active]] = o[active] // 4
    batch[r, j[active]] = o[active] % 4


def _run_block(cfg: TrajectoryConfig, block: int, times: tuple) -> np.ndarray:
    lo = block * cfg.block_size
    size = min(cfg.block_size, cfg.trajectories - lo)
    rng = block_rng(cfg.seed, block)
    batch = np.tile(np.array(cfg.start, dtype=np.uint8), (size, 1))
    idle = cfg.n if cfg.variant == "Pprime" else 0
    hist = np.zeros((len(times), cfg.n + 1), dtype=np.int64)
    wanted = {t: k for k, t in enumerate(times)}
    for t in range(max(times) + 1):
        if t in wanted:
            hist[wanted[t]] = np.bincount(np.count_nonzero(batch, axis=1), minlength=cfg.n + 1)
        if t < max(times):
            step_batch(batch, rng, idle)
    return hist


def weight_histograms(cfg: TrajectoryConfig, times=None, workers: int = 1) -> dict:
    """Hamming-weight counts (index 0..n) at each requested time."""
    times = tuple(sorted(set([cfg.steps] if times is None else times)))
    blocks = range(math.ceil(cfg.trajectories / cfg.block_size))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda b: _run_block(cfg, b, times), blocks))
    else:
        parts = [_run_block(cfg, b, times) for b in blocks]
    total = np.sum(parts, axis=0)
    return {t: total[k] for k, t in enumerate(times)}


@dataclass
class ZMarginal:
    """Empirical Hamming-weight law with a TV lower-bound estimate against zeta_pi.

    Projection onto weights never increases TV, so ``tv`` estimates a lower
    bound on the distance of the full chain; it is biased upward by sampling
    noise of order ``radius``.
    """

    config: TrajectoryConfig
    t: int
    counts: np.ndarray  # index 0..n
    tv: float
    radius: float
    frequencies: np.ndarray = field(init=False)

    def __post_init__(self):
        self.frequencies = self.counts / self.counts.sum()

    @property
    def distribution(self) -> Distribution:
        """Law on the zero-chain space {1..n}."""
        return Distribution(self.frequencies[1:])

    def standard_errors(self, p: np.ndarray | None = None) -> np.ndarray:
        p = self.frequencies if p is None else p
        return np.sqrt(p * (1 - p) / self.counts.sum())

    def csv_rows(self):
        for h, c in enumerate(self.counts):
            yield (self.config.n, self.t, h, int(c), float(self.frequencies[h]))


def empirical_Z_marginal(cfg: TrajectoryConfig, times=None, z: float = 3.0, workers: int = 1):
    """Weight histograms at ``cfg.steps`` (or each of ``times``) with TV vs zeta_pi."""
    hists = weight_histograms(cfg, times, workers)
    target = zeta_pi(cfg.n)
    out = {}
    for t, counts in hists.items():
        freq = counts / counts.sum()
        se = np.sqrt(freq * (1 - freq) / counts.sum())
        out[t] = ZMarginal(cfg, t, counts, tv_distance(freq, target), 0.5 * z * float(se.sum()))
    return out[cfg.steps] if times is None else out


HISTOGRAM_HEADER = ("n", "t", "H", "count", "frequency")


def histogram_csv(marginals) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTOGRAM_HEADER)
    for m in marginals:
        w.writerows(m.csv_rows())
    return buf.getvalue()


def config_json(cfg: TrajectoryConfig) -> str:
    return json.dumps(asdict(cfg), indent=2)


def hit_value_frequencies(samples: int, seed: int = 0) -> tuple[np.ndarray, int]:
    """Value of coordinate 1 right after an active update of the pair (1, 2), n = 2.

    Starting from (0, 1) every update is active; returns counts of values 0..3.
    """
    rng = block_rng(seed, 0)
    batch = np.tile(np.array([0, 1], dtype=np.uint8), (samples, 1))
    step_batch(batch, rng)
    return np.bincount(batch[:, 0], minlength=4), samples


def fisher_yates(n: int, rng: np.random.Generator) -> list[int]:
    """Uniform permutation of range(n) using n - 1 swaps."""
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def hand_mix(state, rng: np.random.Generator) -> tuple:
    """Shuffle site indices, then relabel the values 1,2,3 independently per site.

    The result is uniform over the strings with the same Hamming weight.
    """
    n = len(state)
    states.pauli(n).validate(tuple(state))
    perm = fisher_yates(n, rng)
    shuffled = [state[perm[k]] for k in range(n)]
    out = []
    for v in shuffled:
        if v == 0:
            out.append(0)
        else:
            relabel = fisher_yates(3, rng)
            out.append(relabel[v - 1] + 1)
    return tuple(out)
