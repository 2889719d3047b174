"""FFT mapping between lattice samples and anti-aliasing coefficients.

For a point p_k and a frequency h with residue xi = Z^T h mod n,

    h . p_k = sum_i xi_i k_i / n_i   (mod 1),

so the lattice rule coefficients are an r-dimensional DFT of the sample
tensor of shape (n_1, ..., n_r).  Samples are ordered by the flat point index
kappa and coefficients by the flat residue chi; with these orderings the
residue permutation is the identity and analyze/synthesize are plain FFTs.
Rank-1 lattices take a single 1-D FFT of length n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft

from .antialias import AntiAliasSet
from .lattice import LatticeSpec, flat_residue, phase_numerators, point_numerators


class SpecMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SampleField:
    """Function values u(p^(kappa)) in flat point order."""

    values: np.ndarray
    spec: LatticeSpec

    def __post_init__(self):
        if self.values.shape != (self.spec.n_total,):
            raise SpecMismatch(f"expected {self.spec.n_total} samples, got shape {self.values.shape}")


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Coefficients u_a(h^(chi)) in flat residue order."""

    coeffs: np.ndarray
    aaset: AntiAliasSet

    def __post_init__(self):
        if self.coeffs.shape != (self.aaset.spec.n_total,):
            raise SpecMismatch(f"expected {self.aaset.spec.n_total} coefficients, got shape {self.coeffs.shape}")

    @property
    def spec(self) -> LatticeSpec:
        return self.aaset.spec

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def forward(values: np.ndarray, moduli: tuple[int, ...]) -> np.ndarray:
    """Raw array version of :func:`analyze`: (1/n) sum_k u_k exp(-2 pi i xi.k/n)."""
    if len(moduli) == 1:
        return scipy.fft.fft(values, norm="forward")
    return scipy.fft.fftn(values.reshape(moduli), norm="forward").ravel()


def backward(coeffs: np.ndarray, moduli: tuple[int, ...]) -> np.ndarray:
    """Raw array version of :func:`synthesize`."""
    if len(moduli) == 1:
        return scipy.fft.ifft(coeffs, norm="forward")
    return scipy.fft.ifftn(coeffs.reshape(moduli), norm="forward").ravel()


def analyze(samples: SampleField, aaset: AntiAliasSet) -> CoefficientField:
    """Lattice-rule Fourier coefficients on the anti-aliasing set.

    The unitary DFT of the samples divided by sqrt(n), i.e. the 1/n scaled
    forward transform, so that sum |coeffs|^2 is the discrete L2 norm squared.
    """
    if samples.spec != aaset.spec:
        raise SpecMismatch("samples and anti-aliasing set belong to different lattices")
    values = np.asarray(samples.values, dtype=np.complex128)
    return CoefficientField(forward(values, aaset.spec.moduli), aaset)


def synthesize(field: CoefficientField) -> SampleField:
    """Values of the trigonometric polynomial at the lattice points."""
    return SampleField(backward(field.coeffs, field.spec.moduli), field.spec)


def sample(func, spec: LatticeSpec) -> SampleField:
    """Evaluate a vectorized ``func(x)`` (x of shape (n, d)) on the lattice."""
    x = point_numerators(spec) / spec.denominator
    return SampleField(np.asarray(func(x), dtype=np.complex128), spec)


def evaluate(field: CoefficientField, x) -> np.ndarray | complex:
    """Sum_chi coeffs_chi exp(2 pi i h^(chi) . x) at one point or a stack of points."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    h = field.aaset.table.astype(np.float64)
    out = np.empty(x.shape[0], dtype=np.complex128)
    # chunk to bound the (points x n) phase matrix
    step = max(1, 2**22 // max(len(h), 1))
    for s in range(0, x.shape[0], step):
        t = x[s : s + step] @ h.T
        t -= np.round(t)
        out[s : s + step] = np.exp(2j * np.pi * t) @ field.coeffs
    return out[0] if single else out


def naive_analyze(samples: SampleField, aaset: AntiAliasSet) -> np.ndarray:
    """O(n^2) reference: (1/n) sum_kappa u_kappa exp(-2 pi i h^(chi) . p^(kappa)).

    Phases come from exact integer arithmetic reduced modulo the denominator.
    """
    spec = aaset.spec
    ph = phase_numerators(spec, aaset.table) / spec.denominator
    return np.exp(-2j * np.pi * ph) @ np.asarray(samples.values, dtype=np.complex128) / spec.n_total


def trig_samples(spec: LatticeSpec, coeffs: dict) -> SampleField:
    """Exact-phase samples of sum_h c_h exp(2 pi i h . p) on the lattice."""
    hs = np.array(list(coeffs.keys()), dtype=np.int64).reshape(-1, spec.dim)
    c = np.array(list(coeffs.values()), dtype=np.complex128)
    ph = phase_numerators(spec, hs) / spec.denominator
    return SampleField(c @ np.exp(2j * np.pi * ph), spec)


def aliasing_check(true_coeffs: dict, spec: LatticeSpec, aaset: AntiAliasSet) -> float:
    """Largest deviation from the aliasing identity u_a(h) = sum_{l in dual} u(h + l).

    ``true_coeffs`` maps integer frequency tuples to complex coefficients of a
    trigonometric polynomial.  Frequencies share a dual coset with h^(chi)
    exactly when their residues agree.
    """
    computed = analyze(trig_samples(spec, true_coeffs), aaset).coeffs
    expected = np.zeros(spec.n_total, dtype=np.complex128)
    hs = np.array(list(true_coeffs.keys()), dtype=np.int64).reshape(-1, spec.dim)
    np.add.at(expected, flat_residue(spec, hs), np.array(list(true_coeffs.values()), dtype=np.complex128))
    return float(np.abs(computed - expected).max())


def save_field(path, array: np.ndarray, spec: LatticeSpec, ordering: str) -> None:
    """Write little-endian complex doubles plus a JSON sidecar ``<path>.json``."""
    path = Path(path)
    np.asarray(array, dtype="<c16").tofile(path)
    header = {"length": int(array.size), "ordering": ordering, "dtype": "<c16", "lattice": spec.digest()}
    path.with_name(path.name + ".json").write_text(json.dumps(header, indent=2))


def load_field(path, spec: LatticeSpec | None = None) -> tuple[np.ndarray, dict]:
    path = Path(path)
    header = json.loads(path.with_name(path.name + ".json").read_text())
    if spec is not None and header["lattice"] != spec.digest():
        raise SpecMismatch(f"{path} was written for lattice {header['lattice']}, not {spec.digest()}")
    data = np.fromfile(path, dtype="<c16")
    if data.size != header["length"]:
        raise ValueError(f"{path}: header says {header['length']} values, file holds {data.size}")
    return data.astype(np.complex128), header
