"""Strang splitting for  i eps du/dt = -(eps^2 / 2) lap u + v u  on the torus.

In coefficient space the semi-discrete system is

    i eps u' = (eps^2 / 2) D u + W u,   D = diag(4 pi^2 ||h^(chi)||^2),

with W = F V F^-1 the potential acting through the lattice samples.  One step
applies a half potential phase in sample space, a full kinetic phase in
coefficient space, and another half potential phase.  Every factor is unitary,
so the coefficient l2 norm is conserved up to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .antialias import AntiAliasSet
from .lattice import point_numerators
from .spectral import CoefficientField, SpecMismatch, analyze, backward, forward, sample


@dataclass(frozen=True)
class ProblemSpec:
    eps: float
    potential: Callable
    initial: Callable
    T: float
    dt: float

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.dt <= 0 or self.T < 0:
            raise ValueError("need dt > 0 and T >= 0")
        m = round(self.T / self.dt)
        if abs(m * self.dt - self.T) > 1e-12:
            raise ValueError(f"T = {self.T} is not a whole number of steps dt = {self.dt}")

    @property
    def steps(self) -> int:
        return round(self.T / self.dt)


class StrangPropagator:
    """Precomputed phases of one Strang step of size ``dt`` (any sign)."""

    def __init__(self, aaset: AntiAliasSet, potential: Callable, eps: float, dt: float):
        self.aaset = aaset
        self.eps = float(eps)
        self.dt = float(dt)
        spec = aaset.spec
        self.moduli = spec.moduli
        x = point_numerators(spec) / spec.denominator
        self.v = np.asarray(potential(x), dtype=np.float64)
        # integer ||h||^2 keeps the kinetic phase argument reproducible
        self.kin_phase = np.exp(-1j * (self.eps * self.dt * 2 * np.pi**2) * aaset.norms.astype(np.float64))
        self.pot_half_phase = np.exp(-1j * self.dt / (2 * self.eps) * self.v)

    def step_array(self, c: np.ndarray) -> np.ndarray:
        u = backward(c, self.moduli) * self.pot_half_phase
        c = forward(u, self.moduli) * self.kin_phase
        u = backward(c, self.moduli) * self.pot_half_phase
        return forward(u, self.moduli)

    def steps_array(self, c: np.ndarray, m: int) -> np.ndarray:
        """m steps; consecutive half potential phases are fused into one full phase."""
        if m == 0:
            return c.copy()
        full = self.pot_half_phase * self.pot_half_phase
        u = backward(c, self.moduli) * self.pot_half_phase
        for k in range(m):
            c = forward(u, self.moduli) * self.kin_phase
            u = backward(c, self.moduli) * (full if k < m - 1 else self.pot_half_phase)
        return forward(u, self.moduli)


def strang_step(state: CoefficientField, prop: StrangPropagator) -> CoefficientField:
    if state.aaset is not prop.aaset and state.spec != prop.aaset.spec:
        raise SpecMismatch("state and propagator belong to different lattices")
    return CoefficientField(prop.step_array(state.coeffs), state.aaset)


def discretize_initial(problem: ProblemSpec | Callable, aaset: AntiAliasSet) -> CoefficientField:
    g = problem.initial if isinstance(problem, ProblemSpec) else problem
    return analyze(sample(g, aaset.spec), aaset)


def l2_norm(state: CoefficientField) -> float:
    return float(np.sqrt(np.sum(np.abs(state.coeffs) ** 2)))


def energy_parts(c: np.ndarray, aaset: AntiAliasSet, v: np.ndarray, eps: float) -> tuple[float, float]:
    """Kinetic and potential parts of <H u, u>, H = -(eps/2) lap + v / eps."""
    w = np.abs(c) ** 2
    kinetic = 0.5 * eps * 4 * np.pi**2 * float(np.dot(aaset.norms.astype(np.float64), w))
    u = backward(c, aaset.spec.moduli)
    pot = np.vdot(u, v * u) / (eps * aaset.spec.n_total)
    if abs(pot.imag) > 1e-10 * max(1.0, abs(pot.real)):
        raise ArithmeticError(f"potential energy has imaginary part {pot.imag}")
    return kinetic, float(pot.real)


def energy(state: CoefficientField, prop: StrangPropagator) -> float:
    """<H u_a, u_a> using the propagator's lattice potential values and eps."""
    return sum(energy_parts(state.coeffs, state.aaset, prop.v, prop.eps))


@dataclass
class Record:
    step: int
    time: float
    norm: float
    energy: float
    state: CoefficientField | None = None


def propagate(problem: ProblemSpec, aaset: AntiAliasSet, record_every: int = 0,
              keep_states: bool = False, initial_state: CoefficientField | None = None) -> Iterator[Record]:
    """Run m = T / dt Strang steps, yielding observables at t = 0, every
    ``record_every`` steps and at t = T.  ``record_every = 0`` records only
    the endpoints.  The final record's state is always included.
    """
    prop = StrangPropagator(aaset, problem.potential, problem.eps, problem.dt)
    state = initial_state if initial_state is not None else discretize_initial(problem, aaset)
    c = state.coeffs
    m = problem.steps
    stride = record_every if record_every > 0 else max(m, 1)
    marks = sorted(set(range(0, m + 1, stride)) | {0, m})
    done = 0
    for mark in marks:
        c = prop.steps_array(c, mark - done)
        done = mark
        field = CoefficientField(c, aaset)
        keep = keep_states or mark == m
        yield Record(mark, mark * problem.dt, l2_norm(field), energy(field, prop), field if keep else None)


def solve(problem: ProblemSpec, aaset: AntiAliasSet) -> CoefficientField:
    """Final state at t = T."""
    prop = StrangPropagator(aaset, problem.potential, problem.eps, problem.dt)
    c0 = discretize_initial(problem, aaset).coeffs
    return CoefficientField(prop.steps_array(c0, problem.steps), aaset)


def free_evolution(state: CoefficientField, eps: float, t: float, v_const: float = 0.0) -> CoefficientField:
    """Exact solution for a constant potential: kinetic phases and one global phase."""
    phase = np.exp(-1j * eps * t * 2 * np.pi**2 * state.aaset.norms.astype(np.float64) - 1j * v_const * t / eps)
    return CoefficientField(state.coeffs * phase, state.aaset)


def relative_variation(values) -> float:
    """(max - min) / mean of a series; 0 for an empty series."""
    a = np.asarray(list(values), dtype=np.float64)
    if a.size == 0:
        return 0.0
    mean = a.mean()
    return float((a.max() - a.min()) / abs(mean)) if mean != 0 else math.inf
