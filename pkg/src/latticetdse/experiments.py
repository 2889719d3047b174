"""Batch experiments: time-step convergence, conservation, initial error.

A run is described by one JSON document, e.g.::

    {"experiment": "convergence",
     "lattice": {"cbc": {"d": 2, "log2n": 14}},
     "d": 2, "eps": 1.0, "initial": "g1", "potential": "v2", "T": 1.0,
     "dt_list": [0.125, 0.0625, 0.03125], "M": 4096}

Lattice sources are ``{"catalog": {"d": .., "log2n": ..}}``,
``{"cbc": {"d": .., "log2n": ..}}`` or ``{"file": "lattice.json"}`` (relative
to the config file).  Results are plain dicts; :func:`write_outputs` turns
them into a CSV table and a JSON summary.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, catalog
from .antialias import AntiAliasSet, build
from .cbc import cbc_lattice
from .io import load_lattice
from .lattice import LatticeSpec, flat_residue
from .problems import INITIAL_KINDS, POTENTIAL_KINDS, make
from .spectral import analyze, sample
from .tdse import ProblemSpec, StrangPropagator, discretize_initial, propagate, relative_variation

EXPERIMENTS = ("convergence", "conservation", "initial_error")

# slope fits ignore errors this close to round-off
FIT_FLOOR = 100 * np.finfo(np.float64).eps
TAIL_ROUNDOFF = 1e-12


class ConfigError(ValueError):
    pass


class ReferenceTooCoarse(ValueError):
    pass


class InvariantViolation(ArithmeticError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    lattice: dict
    d: int
    eps: float = 1.0
    initial: str = "g1"
    potential: str = "v2"
    potential_value: float = 0.0
    T: float = 1.0
    dt_list: list[float] = field(default_factory=list)
    dt: float | None = None
    M: int = 4096
    record_every: int = 1
    log2n_list: list[int] = field(default_factory=list)
    ref_log2n: int | None = None
    norm_tolerance: float = 1e-8
    workers: int = 1
    base_dir: Path = field(default=Path("."), repr=False)

    @classmethod
    def from_dict(cls, doc: dict, base_dir=".") -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__) - {"base_dir"}
        unknown = set(doc) - known - {"out"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(**{k: v for k, v in doc.items() if k in known}, base_dir=Path(base_dir))
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.check()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(doc, base_dir=path.parent)

    def check(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
        if self.initial not in INITIAL_KINDS:
            raise ConfigError(f"initial must be one of {INITIAL_KINDS}")
        if self.potential not in POTENTIAL_KINDS:
            raise ConfigError(f"potential must be one of {POTENTIAL_KINDS}")
        if self.d < 1 or self.eps <= 0 or self.T < 0:
            raise ConfigError("need d >= 1, eps > 0, T >= 0")
        if self.experiment == "convergence":
            dts = self.dt_list
            if not dts or any(b >= a for a, b in zip(dts, dts[1:])):
                raise ConfigError("dt_list must be non-empty and strictly decreasing")
            steps = [self._steps(dt) for dt in dts]
            if self._steps(self.T / self.M) != self.M or self.M < 4 * max(steps):
                raise ConfigError(f"reference M={self.M} must exceed the largest m={max(steps)} by a factor >= 4")
        elif self.experiment == "conservation":
            if self.dt is None:
                raise ConfigError("conservation needs dt")
            self._steps(self.dt)
        else:
            if not self.log2n_list or self.ref_log2n is None:
                raise ConfigError("initial_error needs log2n_list and ref_log2n")
        if self.experiment != "initial_error" and not self.lattice:
            raise ConfigError("missing lattice source")

    def _steps(self, dt: float) -> int:
        if dt <= 0:
            raise ConfigError("time steps must be positive")
        m = round(self.T / dt)
        if abs(m * dt - self.T) > 1e-12:
            raise ConfigError(f"T={self.T} is not a multiple of dt={dt}")
        return m

    def echo(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "base_dir"}

    def initial_fn(self):
        return make(self.initial, self.d, self.eps)

    def potential_fn(self):
        return make(self.potential, self.d, value=self.potential_value)


def resolve_lattice(source: dict, d: int, base_dir=".") -> tuple[LatticeSpec, AntiAliasSet]:
    if not isinstance(source, dict) or len(source) != 1:
        raise ConfigError("lattice source must be one of {'catalog': ..}, {'cbc': ..}, {'file': ..}")
    (kind, arg), = source.items()
    aaset = None
    if kind == "catalog":
        try:
            spec = catalog.lookup(arg["d"], arg["log2n"])
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
    elif kind == "cbc":
        spec = cbc_lattice(2 ** arg["log2n"], arg["d"])
    elif kind == "file":
        spec, aaset = load_lattice(Path(base_dir) / arg)
    else:
        raise ConfigError(f"unknown lattice source {kind!r}")
    if spec.dim != d:
        raise ConfigError(f"lattice dimension {spec.dim} does not match d={d}")
    return spec, aaset if aaset is not None else build(spec)


def fit_slope(dts, errors) -> tuple[float | None, bool]:
    """Least-squares slope of log(error) against log(dt).

    Points below the round-off floor are dropped; if fewer than two remain the
    run counts as exact and the slope is None.
    """
    dts = np.asarray(dts, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    keep = errors > FIT_FLOOR
    if keep.sum() < 2:
        return None, True
    slope = np.polyfit(np.log(dts[keep]), np.log(errors[keep]), 1)[0]
    return float(slope), False


def run_convergence(cfg: ExperimentConfig, spec: LatticeSpec | None = None,
                    aaset: AntiAliasSet | None = None) -> dict:
    if aaset is None:
        spec, aaset = resolve_lattice(cfg.lattice, cfg.d, cfg.base_dir)
    g, v = cfg.initial_fn(), cfg.potential_fn()
    c0 = discretize_initial(g, aaset).coeffs

    def final(dt: float) -> np.ndarray:
        return StrangPropagator(aaset, v, cfg.eps, dt).steps_array(c0, round(cfg.T / dt))

    ref = final(cfg.T / cfg.M)
    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        finals = list(pool.map(final, cfg.dt_list))
    errors = [float(np.linalg.norm(c - ref)) for c in finals]
    slope, exact = fit_slope(cfg.dt_list, errors)
    return {
        "experiment": "convergence",
        "columns": ["dt", "m", "l2_error"],
        "rows": [[dt, round(cfg.T / dt), e] for dt, e in zip(cfg.dt_list, errors)],
        "summary": {"slope": slope, "exact": exact, "reference_M": cfg.M},
        "lattice": aaset.spec,
    }


def run_conservation(cfg: ExperimentConfig, spec: LatticeSpec | None = None,
                     aaset: AntiAliasSet | None = None) -> dict:
    if aaset is None:
        spec, aaset = resolve_lattice(cfg.lattice, cfg.d, cfg.base_dir)
    problem = ProblemSpec(cfg.eps, cfg.potential_fn(), cfg.initial_fn(), cfg.T, cfg.dt)
    records = list(propagate(problem, aaset, record_every=cfg.record_every)) if problem.steps else []
    rows = []
    if records:
        n0, e0 = records[0].norm, records[0].energy
        rows = [[r.step, r.time, r.norm, r.energy, r.norm - n0, r.energy - e0] for r in records]
        drift = max(abs(r.norm - n0) for r in records) / n0
        if drift > cfg.norm_tolerance:
            raise InvariantViolation(f"norm drifted by {drift:.3e} (tolerance {cfg.norm_tolerance:.1e})")
    return {
        "experiment": "conservation",
        "columns": ["step", "time", "norm", "energy", "norm_delta", "energy_delta"],
        "rows": rows,
        "summary": {
            "delta_norm": relative_variation(r[2] for r in rows),
            "delta_energy": relative_variation(r[3] for r in rows),
        },
        "lattice": aaset.spec,
    }


def initial_error(g, aaset: AntiAliasSet, ref_aaset: AntiAliasSet, g_norm_sq: float = 1.0) -> float:
    """e_total = ||g - g_a||_L2 for the truncated lattice approximation g_a.

    True coefficients on the anti-aliasing set are taken from the lattice rule
    on the much finer reference lattice; the tail outside the set follows from
    Parseval with the known norm ``g_norm_sq``.
    """
    spec, ref_spec = aaset.spec, ref_aaset.spec
    coarse = analyze(sample(g, spec), aaset).coeffs
    ref = analyze(sample(g, ref_spec), ref_aaset).coeffs
    on_set = flat_residue(ref_spec, aaset.table)
    inside = float(np.sum(np.abs(ref[on_set] - coarse) ** 2))
    # Parseval complement split into the reference coefficients off the set,
    # which sum without cancellation, and the reference's own truncation
    # residual, dropped when it is indistinguishable from round-off.
    off = np.ones(len(ref), dtype=bool)
    off[on_set] = False
    tail = float(np.sum(np.abs(ref[off]) ** 2))
    residual = g_norm_sq - float(np.sum(np.abs(ref) ** 2))
    if residual > TAIL_ROUNDOFF * g_norm_sq:
        tail += residual
    return math.sqrt(inside + tail)


def run_initial_error(cfg: ExperimentConfig) -> dict:
    levels = sorted(cfg.log2n_list)
    if cfg.ref_log2n - levels[-1] < 4:
        raise ReferenceTooCoarse(
            f"reference 2^{cfg.ref_log2n} must exceed the finest n=2^{levels[-1]} by a factor >= 16"
        )
    g = cfg.initial_fn()
    ref_aaset = build(cbc_lattice(2**cfg.ref_log2n, cfg.d))
    rows = []
    for m in levels:
        aaset = build(cbc_lattice(2**m, cfg.d))
        rows.append([2**m, cfg.d, initial_error(g, aaset, ref_aaset)])
    return {
        "experiment": "initial_error",
        "columns": ["n", "d", "e_total"],
        "rows": rows,
        "summary": {"reference_n": 2**cfg.ref_log2n},
        "lattice": ref_aaset.spec,
    }


RUNNERS = {"convergence": run_convergence, "conservation": run_conservation, "initial_error": run_initial_error}


def run(cfg: ExperimentConfig) -> dict:
    return RUNNERS[cfg.experiment](cfg)


def write_outputs(result: dict, cfg: ExperimentConfig, out_dir) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = result["experiment"]
    csv_path = out_dir / f"{name}.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(result["columns"])
        for row in result["rows"]:
            writer.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    summary = {
        "experiment": name,
        "summary": result["summary"],
        "lattice": result["lattice"].to_dict(),
        "lattice_hash": result["lattice"].digest(),
        "config": cfg.echo(),
        "version": __version__,
    }
    json_path = out_dir / f"{name}_summary.json"
    json_path.write_text(json.dumps(summary, indent=2, default=str))
    return csv_path, json_path
