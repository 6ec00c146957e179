"""Tensor-product quadrature over parameter boxes and deterministic reduction."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

CHUNK = 2048
WORKERS_ENV = "HSMINKOWSKI_WORKERS"


def trapezoid_periodic(m: int, lo: float, hi: float):
    """Equispaced rule for a periodic axis (exact for trig polynomials of degree < m)."""
    h = (hi - lo) / m
    nodes = lo + h * (np.arange(m) + 0.5)
    return nodes, np.full(m, h)


def gauss_legendre(m: int, lo: float, hi: float):
    x, w = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), w * half


def axis_rule(axis, m: int):
    if axis.periodic:
        return trapezoid_periodic(m, axis.lo, axis.hi)
    return gauss_legendre(m, axis.lo, axis.hi)


def tensor_grid(axes: Sequence, counts: Sequence[int]):
    """Nodes ``(N, n)`` and weights ``(N,)`` in C order over the axes."""
    if len(counts) != len(axes):
        raise ValueError(f"need {len(axes)} node counts, got {len(counts)}")
    rules = [axis_rule(a, int(m)) for a, m in zip(axes, counts)]
    mesh = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wmesh = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=-1)
    weights = np.prod(np.stack([w.ravel() for w in wmesh], axis=-1), axis=-1)
    return nodes, weights


def pairwise_sum(values) -> float:
    """Fixed binary-tree sum over the leading axis, independent of any scheduling."""
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        return 0.0
    while a.shape[0] > 1:
        if a.shape[0] % 2:
            a = np.concatenate([a, np.zeros((1,) + a.shape[1:])])
        a = a[0::2] + a[1::2]
    return a[0]


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def map_chunks(fn: Callable, nodes: np.ndarray, workers: int | None = None, chunk: int = CHUNK):
    """Apply ``fn`` to fixed-size node chunks and return results in node order.

    Chunk boundaries depend only on ``chunk``, never on ``workers``, so the
    per-node floating-point work is identical for every worker count.
    """
    workers = worker_count() if workers is None else max(1, int(workers))
    pieces = [nodes[i:i + chunk] for i in range(0, len(nodes), chunk)]
    if workers == 1 or len(pieces) == 1:
        return [fn(p) for p in pieces]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, pieces))
