"""Sparse-triplet text format for exact chains.

::

    kind=Q n=2 dimension=4
    row,col,numerator,denominator
    0,0,1,1
    1,1,1,5
    ...

Each entry is written as a reduced fraction; rows appear in index order and
columns ascending within a row, so two implementations can be diffed
byte-for-byte.
"""

from __future__ import annotations

import math

import numpy as np

from .chain import ChainError, StochasticMatrix
from .chains import ChainFamily


def dumps(family: ChainFamily) -> str:
    m = family.matrix
    if not m.exact:
        raise ChainError("triplet export needs an exact matrix")
    lines = [f"kind={family.kind} n={family.n} dimension={m.size}", "row,col,numerator,denominator"]
    e = m.entries
    for r in range(m.size):
        for k in range(e.indptr[r], e.indptr[r + 1]):
            num = int(e.data[k])
            g = math.gcd(num, m.denominator)
            lines.append(f"{r},{int(e.indices[k])},{num // g},{m.denominator // g}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> tuple[dict, StochasticMatrix]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = dict(tok.split("=", 1) for tok in lines[0].split())
    size = int(header["dimension"])
    entries = [tuple(int(v) for v in ln.split(",")) for ln in lines[2:]]
    den = 1
    for *_, d in entries:
        den = den * d // math.gcd(den, d)
    rows = np.array([e[0] for e in entries], dtype=np.int64)
    cols = np.array([e[1] for e in entries], dtype=np.int64)
    vals = np.array([e[2] * (den // e[3]) for e in entries], dtype=np.int64)
    meta = {"kind": header["kind"], "n": int(header["n"]), "dimension": size}
    return meta, StochasticMatrix.from_triplets(rows, cols, vals, size, den)
