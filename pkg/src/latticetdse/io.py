"""JSON persistence of lattices together with their anti-aliasing sets."""

from __future__ import annotations

import json
from pathlib import Path

from .antialias import AntiAliasSet
from .lattice import LatticeSpec, validate_canonical


def dump_lattice(path, spec: LatticeSpec, aaset: AntiAliasSet | None = None) -> None:
    doc = spec.to_dict()
    if aaset is not None:
        doc["aaset"] = aaset.to_list()
    Path(path).write_text(json.dumps(doc))


def load_lattice(path) -> tuple[LatticeSpec, AntiAliasSet | None]:
    doc = json.loads(Path(path).read_text())
    spec = validate_canonical(LatticeSpec.from_dict(doc))
    aaset = AntiAliasSet.from_list(spec, doc["aaset"]) if "aaset" in doc else None
    return spec, aaset
