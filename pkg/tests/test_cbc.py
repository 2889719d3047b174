import itertools
import math

import numpy as np
import pytest

from latticetdse.cbc import CbcCriterion, NonCoprime, _omega, candidate_values, cbc_construct, wce_squared
from latticetdse.lattice import LatticeSpec, in_dual


def class_sum(c: int, n: int) -> float:
    """sum over h = c (mod n) of 1 / max(h^2, 1), by partial fractions."""
    c %= n
    if c == 0:
        return 1.0 + 2 * (math.pi**2 / 6) / n**2
    return (math.pi / n) ** 2 / math.sin(math.pi * c / n) ** 2


def dual_sum_by_classes(z, n) -> float:
    """sum_{0 != h in dual} prod_j 1/max(h_j^2, 1), grouping h by residues mod n.

    Enumerates residue vectors c in Z_n^(d-1); the last residue is forced by
    z . c = 0 (mod n) because z_d is invertible.  Exact up to round-off.
    """
    d = len(z)
    S = np.array([class_sum(c, n) for c in range(n)])
    zd_inv = pow(int(z[-1]), -1, n)
    total = 0.0
    for cs in itertools.product(range(n), repeat=d - 1):
        last = (-sum(a * b for a, b in zip(cs, z[:-1])) * zd_inv) % n
        total += math.prod(S[c] for c in cs) * S[last]
    return total - 1.0


def truncated_dual_sum(z, n, H) -> float:
    """Plain brute force over ||h||_inf <= H with in_dual as the filter."""
    spec = LatticeSpec.rank1(z, n)
    total = 0.0
    for h in itertools.product(range(-H, H + 1), repeat=len(z)):
        if any(h) and in_dual(spec, h):
            total += math.prod(1.0 / max(a * a, 1) for a in h)
    return total


def exhaustive_best(prefix, n):
    vals = {c: wce_squared(list(prefix) + [c], n) for c in range(1, n, 2)}
    return min(vals.values()), vals


class TestWceSquared:
    def test_n2_closed_form(self):
        assert wce_squared([1], 2) == pytest.approx(math.pi**2 / 12, rel=1e-14)

    @pytest.mark.parametrize("n", [2, 4, 8, 64, 1024])
    def test_one_dimensional(self, n):
        # the omitted multiples kn with k > K = H // n sum to less than 2 / (n^2 K)
        H = 10**6
        h = np.arange(n, H + 1, n, dtype=np.float64)
        brute = 2 * np.sum(1.0 / h**2)
        assert wce_squared([1], n) == pytest.approx(math.pi**2 / (3 * n**2), rel=1e-13)
        assert 0 <= wce_squared([1], n) - brute <= 2.0 / (n * n * (H // n))

    def test_single_point(self):
        for d in (1, 2, 3):
            assert wce_squared([1, 3, 5][:d], 1) == pytest.approx((1 + 2 * math.pi**2 / 6) ** d - 1, rel=1e-14)

    def test_noncoprime(self):
        with pytest.raises(NonCoprime):
            wce_squared([1, 4], 8)

    @pytest.mark.parametrize("z, n", [((1, 3), 8), ((1, 5), 16), ((1, 7, 3), 16), ((1, 19, 11), 64),
                                      ((1, 33), 128), ((1, 77, 45), 256)])
    def test_matches_dual_sum(self, z, n):
        assert wce_squared(z, n) == pytest.approx(dual_sum_by_classes(z, n), abs=1e-8)

    def test_truncated_brute_force_brackets(self):
        z, n, H = (1, 3), 8, 300
        brute = truncated_dual_sum(z, n, H)
        exact = wce_squared(z, n)
        # every omitted term has some |h_j| > H; their total is below 4 (1 + pi^2/3) / H
        assert 0 <= exact - brute <= 4 * (1 + math.pi**2 / 3) / H


class TestFastSearch:
    @pytest.mark.parametrize("n", [2, 4, 8, 16, 128, 1024, 4096])
    def test_candidate_values_match_direct(self, n):
        omega = _omega(n)
        k = np.arange(n)
        prod = omega * omega[(k * 3) % n] if n > 2 else omega.copy()
        fast = candidate_values(prod, n)
        direct = np.array([(prod * omega[(k * c) % n]).sum() for c in range(1, n, 2)])
        np.testing.assert_allclose(fast, direct, rtol=1e-12)


class TestConstruct:
    def test_first_component(self):
        assert cbc_construct(CbcCriterion(n=64, d_max=1)) == [1]

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            CbcCriterion(n=55, d_max=2)

    @pytest.mark.parametrize("n, d", [(16, 2), (64, 3), (256, 4), (1024, 3)])
    def test_each_component_optimal(self, n, d):
        z, values = cbc_construct(CbcCriterion(n=n, d_max=d), return_values=True)
        for s in range(1, d):
            best, vals = exhaustive_best(z[:s], n)
            assert vals[z[s]] <= best * (1 + 1e-13)
            # smallest among the tied minimizers
            assert z[s] == min(c for c, v in vals.items() if v <= best * (1 + 1e-13))
            assert values[s] == pytest.approx(vals[z[s]], rel=1e-13)

    def test_odd_and_deterministic(self):
        crit = CbcCriterion(n=2**12, d_max=5)
        z = cbc_construct(crit)
        assert all(c % 2 == 1 and 0 < c < 2**12 for c in z)
        assert cbc_construct(crit) == z


@pytest.mark.parametrize("a, b, n", [((1, 19), (1, 27), 64), ((1, 19), (1, 45), 64),
                                     ((1, 5, 13), (1, 13, 5), 128), ((1, 5, 13), (3, 15, 39), 128)])
def test_symmetric_lattices_tie_exactly(a, b, n):
    # inverse units, sign flips, coordinate swaps and unit multiples leave the criterion unchanged
    assert wce_squared(a, n) == wce_squared(b, n)
