"""Minimal-l2 anti-aliasing frequency sets.

For every residue class xi = Z^T h mod n the set keeps one representative
h_xi of smallest Euclidean norm.  Candidates are visited in order of
increasing squared norm, ties by lexicographic order of the vector, and the
first vector seen in a class wins.  Entries are stored in flattened-residue
order, so entry chi of the table is the frequency whose residue flattens to
chi; this is exactly the output ordering of the r-dimensional FFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .lattice import LatticeSpec, flat_residue, in_dual


class RadiusExhausted(RuntimeError):
    pass


def ball_points(d: int, radius_sq: int) -> np.ndarray:
    """All integer vectors with ||h||_2^2 <= radius_sq in lexicographic order, shape (m, d)."""
    prefix = np.zeros((1, 0), dtype=np.int64)
    norms = np.zeros(1, dtype=np.int64)
    for _ in range(d):
        room = radius_sq - norms
        # number of admissible values |v| <= sqrt(room) for each prefix
        lim = _isqrt(room)
        counts = 2 * lim + 1
        rep = np.repeat(np.arange(prefix.shape[0]), counts)
        offs = np.arange(rep.size) - np.repeat(np.cumsum(counts) - counts, counts)
        v = offs - lim[rep]
        prefix = np.concatenate([prefix[rep], v[:, None]], axis=1)
        norms = norms[rep] + v * v
    return prefix


def _isqrt(x: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(x.astype(np.float64))).astype(np.int64)
    r -= (r * r > x)
    r += ((r + 1) * (r + 1) <= x)
    return r


def _initial_radius_sq(d: int, n: int) -> int:
    # volume of the d-ball reaching 2 n lattice vectors
    unit = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    r = (2 * n / unit) ** (1 / d)
    return max(1, math.ceil(r * r))


def default_radius_cap(spec: LatticeSpec) -> float:
    return 4 * spec.n_total ** (1 / spec.dim) + 16


@dataclass(frozen=True, eq=False)
class AntiAliasSet:
    """Frequency table h^(chi), chi = 0..n-1, in flattened-residue order."""

    spec: LatticeSpec
    table: np.ndarray
    norms: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.table.shape[0]

    @cached_property
    def max_norm_sq(self) -> int:
        return int(self.norms.max())

    def to_list(self) -> list[list[int]]:
        return self.table.tolist()

    @classmethod
    def from_list(cls, spec: LatticeSpec, rows) -> "AntiAliasSet":
        table = np.asarray(rows, dtype=np.int64).reshape(-1, spec.dim)
        if table.shape[0] != spec.n_total:
            raise ValueError(f"anti-aliasing table has {table.shape[0]} rows, lattice has {spec.n_total} points")
        chi = flat_residue(spec, table)
        if not np.array_equal(chi, np.arange(spec.n_total)):
            raise ValueError("anti-aliasing table is not in flattened-residue order")
        return cls(spec, table, (table * table).sum(axis=1))


def build(spec: LatticeSpec, radius_cap: float | None = None) -> AntiAliasSet:
    """Minimal-norm anti-aliasing set of full cardinality n_total."""
    n = spec.n_total
    cap = default_radius_cap(spec) if radius_cap is None else radius_cap
    cap_sq = math.floor(cap * cap)
    rsq = min(_initial_radius_sq(spec.dim, n), cap_sq)
    while True:
        h = ball_points(spec.dim, rsq)
        norms = (h * h).sum(axis=1)
        # ball_points is lexicographic already; a stable sort on the norm
        # gives (norm, lexicographic) visiting order
        order = np.argsort(norms, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        chi = flat_residue(spec, h)
        first = np.full(n, order.size, dtype=np.int64)
        np.minimum.at(first, chi, rank)
        if first.max() < order.size:
            winners = order[first]
            return AntiAliasSet(spec, h[winners], norms[winners])
        if rsq >= cap_sq:
            found = int((first < order.size).sum())
            raise RadiusExhausted(
                f"only {found} of {n} residue classes reached within radius {math.sqrt(rsq):.1f}"
            )
        rsq = min(2 * rsq, cap_sq)


def verify_minimal(aaset: AntiAliasSet, search_bound: int) -> bool:
    """Brute-force check that every entry has minimal norm in its class.

    Scans the cube ||h||_inf <= search_bound, so it is only meant for tests and
    small lattices.  Also checks the residue ordering of the table.
    """
    spec = aaset.spec
    if len(aaset) != spec.n_total:
        return False
    if not np.array_equal(flat_residue(spec, aaset.table), np.arange(spec.n_total)):
        return False
    axis = np.arange(-search_bound, search_bound + 1, dtype=np.int64)
    cube = np.stack(np.meshgrid(*([axis] * spec.dim), indexing="ij"), axis=-1).reshape(-1, spec.dim)
    norms = (cube * cube).sum(axis=1)
    chi = flat_residue(spec, cube)
    best = np.full(spec.n_total, np.iinfo(np.int64).max)
    np.minimum.at(best, chi, norms)
    return bool(np.all(aaset.norms <= best))


def is_anti_aliasing(aaset: AntiAliasSet) -> bool:
    """Definition check: no two entries differ by a dual-lattice vector (O(n^2))."""
    t = aaset.table
    for a in range(len(t)):
        for b in range(a + 1, len(t)):
            if in_dual(aaset.spec, t[a] - t[b]):
                return False
    return True
