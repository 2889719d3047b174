"""Command line entry point ``tdse``.

    tdse run --config cfg.json [--out DIR]
    tdse cbc --n 2^14 --d 2 --out lattice.json
    tdse aaset --lattice lattice.json --out lattice_with_set.json
    tdse catalog list

Exit codes: 0 success, 2 configuration error, 3 numerical invariant violated.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import catalog
from .antialias import RadiusExhausted, build
from .cbc import CbcCriterion, cbc_construct
from .experiments import ConfigError, ExperimentConfig, InvariantViolation, ReferenceTooCoarse, run, write_outputs
from .io import dump_lattice, load_lattice
from .lattice import LatticeError, LatticeSpec

log = logging.getLogger("latticetdse")

EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def parse_count(text: str) -> int:
    """Accept '1024' or '2^10'."""
    try:
        if "^" in text:
            base, exp = text.split("^")
            return int(base) ** int(exp)
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a point count: {text!r}") from None


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    out = Path(args.out) if args.out else cfg.base_dir / "results"
    result = run(cfg)
    csv_path, json_path = write_outputs(result, cfg, out)
    print(json.dumps(result["summary"]))
    log.info("wrote %s and %s", csv_path, json_path)
    return 0


def _cmd_cbc(args) -> int:
    z = cbc_construct(CbcCriterion(n=args.n, d_max=args.d))
    spec = LatticeSpec.rank1(z, args.n)
    dump_lattice(args.out, spec)
    print(json.dumps(spec.to_dict()))
    return 0


def _cmd_aaset(args) -> int:
    spec, _ = load_lattice(args.lattice)
    aaset = build(spec)
    dump_lattice(args.out, spec, aaset)
    log.info("anti-aliasing set of %d vectors, max |h|^2 = %d", len(aaset), aaset.max_norm_sq)
    return 0


def _cmd_catalog(args) -> int:
    for d, m in catalog.keys():
        print(f"d={d:<3d} n=2^{m:<3d} z={list(catalog.lookup(d, m).gen[0])}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment described by a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (default: results/ next to the config)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("cbc", help="construct a rank-1 generating vector")
    p.add_argument("--n", type=parse_count, required=True, help="number of points, a power of 2")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_cbc)

    p = sub.add_parser("aaset", help="attach the minimal anti-aliasing set to a lattice file")
    p.add_argument("--lattice", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_aaset)

    p = sub.add_parser("catalog", help="bundled generating vectors")
    p.add_argument("action", choices=["list"])
    p.set_defaults(func=_cmd_catalog)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, LatticeError, ReferenceTooCoarse, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantViolation, RadiusExhausted, ArithmeticError) as exc:
        print(f"numerical invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
