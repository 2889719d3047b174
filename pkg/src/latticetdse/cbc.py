"""Component-by-component construction of rank-1 lattices with 2^m points.

The criterion is the squared worst-case integration error in the unweighted
Korobov space with smoothness alpha = 1,

    P(z) = -1 + 1/n sum_k prod_j (1 + 2 pi^2 B2({k z_j / n})),

with B2(x) = x^2 - x + 1/6.  The search over all odd candidates for one
component is done in O(n log n) by exploiting the group structure of the odd
residues modulo powers of two (every odd u mod 2^j is +-5^a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lattice import LatticeSpec

__all__ = ["CbcCriterion", "NonCoprime", "bernoulli2", "wce_squared", "candidate_values", "cbc_construct"]


# candidates whose criterion differs by less than this (relative) count as tied
TIE_RTOL = 1e-13


class NonCoprime(ValueError):
    pass


@dataclass(frozen=True)
class CbcCriterion:
    n: int
    d_max: int
    alpha: float = 1.0

    def __post_init__(self):
        if self.alpha != 1:
            raise ValueError("only alpha = 1 is supported")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of 2 (>= 2), got {self.n}")
        if self.d_max < 1:
            raise ValueError("d_max must be positive")


def bernoulli2(x):
    return x * x - x + 1.0 / 6.0


def _omega(n: int) -> np.ndarray:
    """omega[j] = 1 + 2 pi^2 B2(j / n) for j = 0..n-1."""
    x = np.arange(n, dtype=np.float64) / n
    w = 1.0 + 2.0 * np.pi**2 * bernoulli2(x)
    # B2(x) = B2(1 - x); enforce it bitwise so mirrored candidates tie exactly
    w[n - np.arange(1, n // 2)] = w[1 : n // 2]
    return w


def wce_squared(z: Sequence[int], n: int, alpha: float = 1) -> float:
    """Squared worst-case error of the rank-1 rule (z, n), direct O(n d) sum."""
    if alpha != 1:
        raise ValueError("only alpha = 1 is supported")
    z = [int(c) for c in z]
    for j, c in enumerate(z):
        if math.gcd(c, n) != 1:
            raise NonCoprime(f"component {j} ({c}) not coprime to n={n}")
    return _direct(z, n, _omega(n))


def _direct(z: Sequence[int], n: int, omega: np.ndarray) -> float:
    # Lattices related by a symmetry of the criterion (coordinate swaps,
    # z -> u z for a unit u, sign flips) have the same multiset of terms with
    # permuted factors.  Sorting the factors and summing with fsum makes such
    # ties compare equal bit for bit.
    k = np.arange(n, dtype=np.int64)
    factors = np.stack([omega[(k * (int(c) % n)) % n] for c in z], axis=1)
    factors.sort(axis=1)
    prod = factors[:, 0].copy()
    for j in range(1, factors.shape[1]):
        prod *= factors[:, j]
    return math.fsum(prod) / n - 1.0


def _odd_group_index(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Map every odd residue u mod N = 2^j (j >= 3) to (s, a) with u = (-1)^s 5^a.

    Returns arrays ``sign`` and ``expo`` indexed by u (entries for even u unused).
    """
    order = N // 4
    sign = np.zeros(N, dtype=np.int64)
    expo = np.zeros(N, dtype=np.int64)
    g = 1
    for a in range(order):
        sign[g], expo[g] = 0, a
        sign[N - g], expo[N - g] = 1, a
        g = g * 5 % N
    return sign, expo


def candidate_values(prod: np.ndarray, n: int, direct_below: int = 64) -> np.ndarray:
    """Criterion sums S(c) = sum_k prod[k] omega(k c mod n) for every odd c.

    ``prod`` holds the running per-point products of the components chosen so
    far.  Returns an array of length n/2 whose entry i belongs to c = 2 i + 1.
    """
    omega = _omega(n)
    m = n.bit_length() - 1
    cand = np.arange(1, n, 2, dtype=np.int64)
    total = np.full(cand.shape, prod[0] * omega[0])
    # k = 2^v u with u odd; k c mod n = 2^v (u c mod N), N = 2^(m - v)
    for v in range(m):
        N = n >> v
        u = np.arange(1, N, 2, dtype=np.int64)
        p_u = prod[u << v]
        w = omega[np.arange(N, dtype=np.int64) << v]  # omega(2^v r), r < N
        if N <= direct_below:
            c_red = np.arange(1, N, 2, dtype=np.int64)
            table = w[np.outer(c_red, u) % N] @ p_u
        else:
            sign, expo = _odd_group_index(N)
            shape = (2, N // 4)
            P = np.zeros(shape)
            P[sign[u], expo[u]] = p_u
            W = np.zeros(shape)
            W[sign[u], expo[u]] = w[u]
            # sum_g P(g) W(g + h) over the group Z_2 x Z_{N/4}
            corr = np.fft.ifft2(np.conj(np.fft.fft2(P)) * np.fft.fft2(W)).real
            c_red = np.arange(1, N, 2, dtype=np.int64)
            table = corr[sign[c_red], expo[c_red]]
        total += table[(cand % N) // 2]
    return total


def cbc_construct(criterion: CbcCriterion, return_values: bool = False):
    """Greedy component-by-component generating vector with z_1 = 1.

    Each further component is the odd integer in [1, n) minimizing the
    criterion of the prefix; ties go to the smallest candidate.  With
    ``return_values`` the criterion value after each component is returned too.
    """
    n = criterion.n
    omega = _omega(n)
    k = np.arange(n, dtype=np.int64)
    z = [1]
    prod = omega.copy()
    values = [_direct(z, n, omega)]
    for _ in range(1, criterion.d_max):
        sums = candidate_values(prod, n)
        crit = sums / n - 1.0
        # guard against FFT round-off deciding near-ties: rescore the close ones directly
        best = crit.min()
        close = np.flatnonzero(crit <= best + 1e-9 * max(abs(best), 1.0))
        if close.size > 1:
            quick = np.array([(prod * omega[(k * (2 * i + 1)) % n]).mean() - 1.0 for i in close])
            close = close[quick <= quick.min() + 1e-11 * max(abs(quick.min()), 1.0)]
            exact = np.array([_direct(z + [2 * i + 1], n, omega) for i in close])
            tol = TIE_RTOL * max(abs(exact.min()), 1.0)
            choice = int(close[np.flatnonzero(exact <= exact.min() + tol)[0]])
        else:
            choice = int(close[0])
        c = 2 * choice + 1
        z.append(c)
        prod = prod * omega[(k * c) % n]
        values.append(_direct(z, n, omega))
    if return_values:
        return z, values
    return z


def cbc_lattice(n: int, d: int) -> LatticeSpec:
    return LatticeSpec.rank1(cbc_construct(CbcCriterion(n=n, d_max=d)), n)
