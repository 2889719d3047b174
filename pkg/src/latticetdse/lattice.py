"""Canonical rank-r integration lattices.

A lattice is given by integer generating vectors z_1, ..., z_r (the columns
of Z) and moduli n_1, ..., n_r.  Its points are

    p_k = (z_1 k_1 / n_1 + ... + z_r k_r / n_r) mod 1,   k_i in Z_{n_i},

and they are stored exactly as integer numerators over L = lcm(n_1, ..., n_r).
Rank-1 lattices are simply the r = 1 case.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterator, Sequence

import numpy as np

INT64_MAX = np.iinfo(np.int64).max


class LatticeError(ValueError):
    """Base class for invalid lattice descriptions."""


class NonDivisibleModuli(LatticeError):
    pass


class NonCoprimeComponent(LatticeError):
    def __init__(self, column: int, coordinate: int, value: int, modulus: int):
        self.column = column
        self.coordinate = coordinate
        super().__init__(
            f"generator column {column}, coordinate {coordinate}: "
            f"gcd({value}, {modulus}) = {math.gcd(value, modulus)} != 1"
        )


class RankDeficientGenerators(LatticeError):
    pass


class OverflowRisk(LatticeError):
    pass


def integer_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank of an integer matrix by fraction-free (Bareiss) elimination."""
    a = [list(map(int, row)) for row in rows]
    if not a:
        return 0
    m, ncols = len(a), len(a[0])
    rank, prev = 0, 1
    for col in range(ncols):
        pivot = next((i for i in range(rank, m) if a[i][col] != 0), None)
        if pivot is None:
            continue
        a[rank], a[pivot] = a[pivot], a[rank]
        for i in range(rank + 1, m):
            for j in range(col + 1, ncols):
                a[i][j] = (a[i][j] * a[rank][col] - a[i][col] * a[rank][j]) // prev
            a[i][col] = 0
        prev = a[rank][col]
        rank += 1
        if rank == m:
            break
    return rank


@dataclass(frozen=True)
class LatticeSpec:
    """Generating vectors (columns of Z) and moduli of a rank-r lattice.

    ``gen[i]`` is the i-th generating vector z_i of length ``dim``; ``moduli[i]``
    is n_i.  Construction only normalizes types; call :func:`validate_canonical`
    (or use :meth:`rank1`) to check the canonical-form conditions.
    """

    gen: tuple[tuple[int, ...], ...]
    moduli: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "gen", tuple(tuple(int(c) for c in col) for col in self.gen))
        object.__setattr__(self, "moduli", tuple(int(n) for n in self.moduli))
        if len(self.gen) != len(self.moduli) or not self.gen:
            raise LatticeError("need one modulus per generating vector")
        if len({len(col) for col in self.gen}) != 1:
            raise LatticeError("generating vectors must share one dimension")
        if any(n < 1 for n in self.moduli):
            raise LatticeError("moduli must be >= 1")

    @classmethod
    def rank1(cls, z: Sequence[int], n: int) -> "LatticeSpec":
        return validate_canonical(cls((tuple(z),), (n,)))

    @property
    def dim(self) -> int:
        return len(self.gen[0])

    @property
    def rank(self) -> int:
        return len(self.moduli)

    @property
    def n_total(self) -> int:
        return math.prod(self.moduli)

    @property
    def denominator(self) -> int:
        """Common denominator L = lcm of the moduli (equals n_1 in canonical form)."""
        return reduce(math.lcm, self.moduli, 1)

    @cached_property
    def gen_mod(self) -> np.ndarray:
        """Generators reduced to nonnegative residues, shape (r, d), int64."""
        return np.array(
            [[c % n for c in col] for col, n in zip(self.gen, self.moduli)], dtype=np.int64
        )

    def to_dict(self) -> dict:
        return {"d": self.dim, "r": self.rank, "Z": [list(c) for c in self.gen], "n": list(self.moduli)}

    @classmethod
    def from_dict(cls, doc: dict) -> "LatticeSpec":
        spec = cls(tuple(tuple(c) for c in doc["Z"]), tuple(doc["n"]))
        if "d" in doc and doc["d"] != spec.dim:
            raise LatticeError(f"declared d={doc['d']} but generators have length {spec.dim}")
        if "r" in doc and doc["r"] != spec.rank:
            raise LatticeError(f"declared r={doc['r']} but {spec.rank} generators given")
        return spec

    def digest(self) -> str:
        """Stable short hash of the lattice, used to tag persisted fields."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def validate_canonical(spec: LatticeSpec) -> LatticeSpec:
    """Return ``spec`` unchanged if it is in canonical form, else raise.

    Nonzero generator entries must be coprime to their modulus.  For rank
    r > 1 zero entries are accepted, so regular grids (Z = I) validate.
    """
    for i in range(spec.rank - 1):
        if spec.moduli[i] % spec.moduli[i + 1]:
            raise NonDivisibleModuli(
                f"n_{i + 2} = {spec.moduli[i + 1]} does not divide n_{i + 1} = {spec.moduli[i]}"
            )
    for i, (col, n) in enumerate(zip(spec.gen, spec.moduli)):
        for j, c in enumerate(col):
            # zero entries only make sense for rank > 1 (e.g. product grids, Z = I)
            if c == 0 and spec.rank > 1:
                continue
            if math.gcd(c, n) != 1:
                raise NonCoprimeComponent(i, j, c, n)
    if integer_rank(spec.gen) < spec.rank:
        raise RankDeficientGenerators(f"the {spec.rank} generating vectors are rationally dependent")
    return spec


@dataclass(frozen=True)
class LatticePoint:
    numerators: tuple[int, ...]
    denominator: int
    index: tuple[int, ...]
    flat_index: int

    @property
    def coords(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(a, self.denominator) for a in self.numerators)


def multi_indices(moduli: Sequence[int]) -> np.ndarray:
    """All k in Z_{n_1} + ... + Z_{n_r} in lexicographic order, shape (prod n, r)."""
    grids = np.indices(tuple(moduli), dtype=np.int64)
    return grids.reshape(len(moduli), -1).T


def point_numerators(spec: LatticeSpec) -> np.ndarray:
    """Integer numerators of all lattice points over ``spec.denominator``.

    Row kappa holds the point with flat index kappa; shape (n_total, d).
    """
    L = spec.denominator
    if L * max(max(spec.moduli), 1) > INT64_MAX:
        raise OverflowRisk(f"denominator {L} too large for int64 arithmetic")
    k = multi_indices(spec.moduli)
    num = np.zeros((spec.n_total, spec.dim), dtype=np.int64)
    for i, n in enumerate(spec.moduli):
        # (z_i k_i mod n_i) * (L / n_i) stays below L
        num += (np.outer(k[:, i], spec.gen_mod[i]) % n) * (L // n)
    num %= L
    return num


def enumerate_points(spec: LatticeSpec) -> Iterator[LatticePoint]:
    if max(abs(c) for col in spec.gen for c in col) * spec.denominator > INT64_MAX:
        raise OverflowRisk("generator entries times denominator exceed int64")
    num = point_numerators(spec)
    k = multi_indices(spec.moduli)
    L = spec.denominator
    for kappa in range(spec.n_total):
        yield LatticePoint(tuple(int(a) for a in num[kappa]), L, tuple(int(a) for a in k[kappa]), kappa)


def points(spec: LatticeSpec) -> np.ndarray:
    """Lattice points as floats in [0, 1)^d, lexicographic order."""
    return point_numerators(spec) / spec.denominator


def residue(spec: LatticeSpec, h) -> np.ndarray:
    """Multi-index xi_i = (z_i . h) mod n_i for one vector or a stack of vectors.

    ``h`` of shape (d,) gives shape (r,); shape (m, d) gives (m, r).
    """
    h = np.asarray(h, dtype=np.int64)
    if h.shape[-1] != spec.dim:
        raise ValueError(f"expected vectors of length {spec.dim}, got {h.shape[-1]}")
    n = np.array(spec.moduli, dtype=np.int64)
    # reduce h first so every product stays below n_i^2
    xi = np.zeros(h.shape[:-1] + (spec.rank,), dtype=np.int64)
    for i, ni in enumerate(spec.moduli):
        hr = h % ni
        xi[..., i] = (hr * spec.gen_mod[i]).sum(axis=-1) % ni if ni < 2**31 else _exact_dot_mod(hr, spec.gen_mod[i], ni)
    return xi % n


def _exact_dot_mod(h: np.ndarray, z: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(h.shape[:-1], dtype=np.int64)
    for j in range(h.shape[-1]):
        prod = np.array([int(a) * int(z[j]) % n for a in h[..., j].ravel()], dtype=np.int64)
        out = (out + prod.reshape(out.shape)) % n
    return out


def flat_residue(spec: LatticeSpec, h) -> np.ndarray:
    """Residue multi-index flattened lexicographically, chi = sum_i xi_i prod_{j>i} n_j."""
    xi = residue(spec, h)
    return np.ravel_multi_index(tuple(np.moveaxis(xi, -1, 0)), spec.moduli)


def in_dual(spec: LatticeSpec, h) -> bool:
    """True iff z_i . h == 0 (mod n_i) for every generator."""
    h = [int(a) for a in h]
    if len(h) != spec.dim:
        raise ValueError(f"expected a vector of length {spec.dim}")
    return all(sum(a * c for a, c in zip(h, col)) % n == 0 for col, n in zip(spec.gen, spec.moduli))


def phase_numerators(spec: LatticeSpec, h: np.ndarray, num: np.ndarray | None = None) -> np.ndarray:
    """Exact (h . p) * L mod L for a stack of frequencies h (m, d) at all points.

    Returns shape (m, n_total).  Only meant for oracles and small problems.
    """
    if num is None:
        num = point_numerators(spec)
    L = spec.denominator
    h = np.asarray(h, dtype=np.int64) % L
    out = np.zeros((h.shape[0], num.shape[0]), dtype=np.int64)
    for j in range(spec.dim):
        out = (out + np.outer(h[:, j], num[:, j]) % L) % L
    return out
