"""Dense integer encodings of the state spaces used throughout the package.

Four spaces are supported:

* ``pauli``       strings over {0,1,2,3} of length n, 4**n states
* ``support``     binary strings of length n, 2**n states
* ``hamming``     Hamming weights 1..n (the zero-chain state space), n states
* ``permutation`` permutations of n objects, n! states

Strings are encoded little-endian: coordinate 1 (``state[0]``) is the least
significant digit. Permutations are stored as tuples of 0-based images and
ranked by their Lehmer code, which is lexicographic order of the image tuple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence

import numpy as np

KINDS = ("pauli", "support", "hamming", "permutation")

_BASE = {"pauli": 4, "support": 2}


class StateError(ValueError):
    """Raised for malformed states or mismatched codecs."""


def hamming_weight(state: Sequence[int]) -> int:
    """Number of nonzero coordinates of a Pauli or support string."""
    return sum(1 for c in state if c != 0)


def lehmer_rank(images: Sequence[int]) -> int:
    n = len(images)
    rank = 0
    remaining = sorted(images)
    for k, v in enumerate(images):
        pos = remaining.index(v)
        rank += pos * math.factorial(n - 1 - k)
        remaining.pop(pos)
    return rank


def lehmer_unrank(rank: int, n: int) -> tuple[int, ...]:
    remaining = list(range(n))
    images = []
    for k in range(n):
        f = math.factorial(n - 1 - k)
        pos, rank = divmod(rank, f)
        images.append(remaining.pop(pos))
    return tuple(images)


def compose(alpha: Sequence[int], sigma: Sequence[int]) -> tuple[int, ...]:
    """Return ``alpha o sigma``, i.e. ``i -> alpha[sigma[i]]``."""
    return tuple(alpha[s] for s in sigma)


def inverse(sigma: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(sigma)
    for i, s in enumerate(sigma):
        inv[s] = i
    return tuple(inv)


def act_on_string(sigma: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
    """Natural left action on strings: ``sigma(q)[i] = q[sigma^{-1}(i)]``."""
    out = [0] * len(q)
    for i, s in enumerate(sigma):
        out[s] = q[i]
    return tuple(out)


def transposition(n: int, i: int, j: int) -> tuple[int, ...]:
    images = list(range(n))
    images[i], images[j] = images[j], images[i]
    return tuple(images)


def parity(sigma: Sequence[int]) -> int:
    """0 for even permutations, 1 for odd ones."""
    seen = [False] * len(sigma)
    p = 0
    for start in range(len(sigma)):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = sigma[k]
            length += 1
        p += length - 1
    return p % 2


@dataclass(frozen=True)
class StateCodec:
    """Bijection between the states of one space and ``range(size)``."""

    kind: str
    n: int
    size: int = field(init=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StateError(f"unknown state space kind {self.kind!r}")
        if self.n < 1:
            raise StateError(f"n must be >= 1, got {self.n}")
        if self.kind in _BASE:
            size = _BASE[self.kind] ** self.n
        elif self.kind == "hamming":
            size = self.n
        else:
            size = math.factorial(self.n)
        object.__setattr__(self, "size", size)

    def validate(self, state) -> None:
        if self.kind == "hamming":
            if isinstance(state, bool) or not isinstance(state, (int, np.integer)):
                raise StateError(f"Hamming weight must be an integer, got {state!r}")
            if not 1 <= state <= self.n:
                raise StateError(f"Hamming weight {state} outside [1, {self.n}]")
            return
        if len(state) != self.n:
            raise StateError(f"{self.kind} state {tuple(state)} has length {len(state)}, expected n={self.n}")
        if self.kind in _BASE:
            base = _BASE[self.kind]
            bad = [c for c in state if not (isinstance(c, (int, np.integer)) and 0 <= c < base)]
            if bad:
                raise StateError(f"{self.kind} state {tuple(state)} has symbols outside 0..{base - 1}: {bad}")
        elif sorted(state) != list(range(self.n)):
            raise StateError(f"{tuple(state)} is not a permutation of 0..{self.n - 1}")

    def encode(self, state) -> int:
        self.validate(state)
        if self.kind == "hamming":
            return int(state) - 1
        if self.kind == "permutation":
            return lehmer_rank(state)
        base = _BASE[self.kind]
        index = 0
        for c in reversed(state):
            index = index * base + int(c)
        return index

    def decode(self, index: int):
        if not 0 <= index < self.size:
            raise StateError(f"index {index} outside [0, {self.size})")
        if self.kind == "hamming":
            return index + 1
        if self.kind == "permutation":
            return lehmer_unrank(index, self.n)
        base = _BASE[self.kind]
        digits = []
        for _ in range(self.n):
            index, d = divmod(index, base)
            digits.append(d)
        return tuple(digits)

    def states(self):
        """All states in index order."""
        if self.kind == "permutation":
            return list(permutations(range(self.n)))
        return [self.decode(i) for i in range(self.size)]

    def digits(self) -> np.ndarray:
        """(size, n) array of coordinates for string spaces, vectorised decode."""
        if self.kind not in _BASE:
            raise StateError(f"digits() only applies to string spaces, not {self.kind}")
        base = _BASE[self.kind]
        idx = np.arange(self.size, dtype=np.int64)
        powers = base ** np.arange(self.n, dtype=np.int64)
        return (idx[:, None] // powers[None, :]) % base

    def weights(self) -> np.ndarray:
        """Hamming weight of every state, in index order."""
        if self.kind == "hamming":
            return np.arange(1, self.n + 1)
        return np.count_nonzero(self.digits(), axis=1)

    def format(self, state) -> str:
        """Canonical text form: ``"0312"`` for strings, ``"2 1 3"`` for permutations."""
        self.validate(state)
        if self.kind == "hamming":
            return str(state)
        if self.kind == "permutation":
            return " ".join(str(s + 1) for s in state)
        return "".join(str(c) for c in state)

    def parse(self, text: str):
        text = text.strip()
        if self.kind == "hamming":
            state = int(text)
        elif self.kind == "permutation":
            state = tuple(int(tok) - 1 for tok in text.split())
        else:
            if not text.isdigit():
                raise StateError(f"cannot parse {text!r} as a {self.kind} string")
            state = tuple(int(ch) for ch in text)
        self.validate(state)
        return state

    def check_same(self, other: "StateCodec") -> None:
        if self != other:
            raise StateError(f"codec mismatch: {self.kind}(n={self.n}) vs {other.kind}(n={other.n})")


def pauli(n: int) -> StateCodec:
    return StateCodec("pauli", n)


def support(n: int) -> StateCodec:
    return StateCodec("support", n)


def hamming(n: int) -> StateCodec:
    return StateCodec("hamming", n)


def permutation(n: int) -> StateCodec:
    return StateCodec("permutation", n)
