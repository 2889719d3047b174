"""Bundled generating vectors of the published experiments, keyed by (d, log2 n)."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .lattice import LatticeSpec


@lru_cache(maxsize=1)
def _table() -> dict[tuple[int, int], list[int]]:
    doc = json.loads(resources.files("latticetdse").joinpath("data/table1.json").read_text())
    out = {(e["d"], e["log2n"]): e["z"] for e in doc["entries"]}
    fam = doc["prefix_family"]
    for d in range(fam["d_min"], len(fam["z"]) + 1):
        out[(d, fam["log2n"])] = fam["z"][:d]
    return out


def keys() -> list[tuple[int, int]]:
    return sorted(_table())


def lookup(d: int, log2n: int) -> LatticeSpec:
    try:
        z = _table()[(d, log2n)]
    except KeyError:
        raise KeyError(f"no catalog lattice for d={d}, n=2^{log2n}; available: {keys()}") from None
    return LatticeSpec.rank1(z, 2**log2n)
