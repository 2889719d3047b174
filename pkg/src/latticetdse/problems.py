"""Benchmark initial conditions and potentials on [0, 1)^d.

g1 is a Gaussian centred at (3/4, 1/2, ..., 1/2), g2 a product of hats with
the same centres; both are scaled to unit L2 norm.  v1 is the smooth
product-of-cosines potential and v2 the harmonic well centred at the middle of
the cube.  Arguments use the scaling 2 pi x - c_j with c_1 = 3 pi / 2 and
c_j = pi otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

INITIAL_KINDS = ("g1", "g2")
POTENTIAL_KINDS = ("v1", "v2", "zero", "const")


class NonNormalizable(ArithmeticError):
    pass


def _centres(d: int) -> np.ndarray:
    c = np.full(d, np.pi)
    c[0] = 1.5 * np.pi
    return c


def _gaussian_factor(t, eps):
    # one coordinate of g1 before normalization, t = 2 pi x - c
    return (2.0 / (np.pi * eps)) ** 0.25 * np.exp(-t * t / eps)


def _hat_factor(t, eps):
    s = np.pi * math.sqrt(eps)
    return math.sqrt(3.0 / s) * np.maximum(1.0 - 2.0 / s * np.abs(t), 0.0)


_FACTORS = {"g1": _gaussian_factor, "g2": _hat_factor}


@lru_cache(maxsize=None)
def _factor_norm_sq(kind: str, centre: float, eps: float) -> float:
    """int_0^1 |phi(2 pi x - centre)|^2 dx by adaptive quadrature."""
    phi = _FACTORS[kind]
    if kind == "g2":
        # integrate piecewise around the kinks
        s = np.pi * math.sqrt(eps) / 2
        pts = [p for p in ((centre - s) / (2 * np.pi), centre / (2 * np.pi), (centre + s) / (2 * np.pi)) if 0 < p < 1]
    else:
        pts = [centre / (2 * np.pi)]
    val, err = integrate.quad(lambda x: phi(2 * np.pi * x - centre, eps) ** 2, 0.0, 1.0,
                              points=pts, epsabs=0.0, epsrel=1e-13, limit=200)
    if not np.isfinite(val) or val <= 0:
        raise NonNormalizable(f"{kind}: factor integral {val}")
    return val


def normalize(kind: str, d: int, eps: float) -> float:
    """Normalizing constant c with ||g / c||_{L2([0,1)^d)} = 1.

    The squared norm of the product is the product of per-coordinate
    integrals; only two distinct factors occur (first coordinate and the rest).
    """
    if kind not in _FACTORS:
        raise ValueError(f"{kind!r} is not an initial condition")
    c = _centres(d)
    total = _factor_norm_sq(kind, float(c[0]), float(eps))
    if d > 1:
        total *= _factor_norm_sq(kind, float(c[1]), float(eps)) ** (d - 1)
    return math.sqrt(total)


@dataclass(frozen=True)
class BenchmarkFunction:
    """One of the named test functions, callable on points of shape (..., d)."""

    kind: str
    dim: int
    eps: float = 1.0
    value: float = 0.0  # level of the constant potential

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS + POTENTIAL_KINDS:
            raise ValueError(f"unknown benchmark function {self.kind!r}")
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    @property
    def norm_const(self) -> float:
        return normalize(self.kind, self.dim, self.eps) if self.kind in INITIAL_KINDS else 1.0

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got {x.shape[-1]}")
        if self.kind == "v1":
            return np.prod(1.0 - np.cos(2 * np.pi * x), axis=-1)
        if self.kind == "v2":
            return 0.5 * np.sum((2 * np.pi * x - np.pi) ** 2, axis=-1)
        if self.kind == "zero":
            return np.zeros(x.shape[:-1])
        if self.kind == "const":
            return np.full(x.shape[:-1], float(self.value))
        t = 2 * np.pi * x - _centres(self.dim)
        return np.prod(_FACTORS[self.kind](t, self.eps), axis=-1) / self.norm_const


def g1_direct(x, eps: float) -> np.ndarray:
    """g1 written as one exponential of the summed squares (used to cross-check)."""
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[-1]
    s = (2 * np.pi * x[..., 0] - 1.5 * np.pi) ** 2 + np.sum((2 * np.pi * x[..., 1:] - np.pi) ** 2, axis=-1)
    return (2 / (np.pi * eps)) ** (d / 4) * np.exp(-s / eps) / normalize("g1", d, eps)


def make(kind: str, d: int, eps: float = 1.0, value: float = 0.0) -> BenchmarkFunction:
    return BenchmarkFunction(kind, d, eps, value)
