"""Command-line driver: ``nvtflow --preset binary_c1c5_310K --steps 50``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, build_config, load_config
from .linalg import SolverError
from .mobility import MobilityKind
from .presets import preset_document, preset_names
from .runner import EnergyViolation, simulate
from .thermo import ThermoDomainError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ENERGY = 0, 2, 3, 4

log = logging.getLogger("nvtflow")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nvtflow", description="NVT diffuse-interface two-phase flow simulator")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", metavar="PATH", help="YAML run configuration")
    src.add_argument("--preset", choices=preset_names())
    p.add_argument("--scheme", choices=["coupled", "componentwise"])
    p.add_argument("--steps", type=int, metavar="N")
    p.add_argument("--output-dir", metavar="PATH")
    p.add_argument("--snapshot-every", type=int, metavar="N")
    p.add_argument("--energy-every", type=int, metavar="N")
    p.add_argument("--strict-energy", action="store_true",
                   help="abort with status 4 if the modified energy increases")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _load(args):
    if args.preset:
        doc = preset_document(args.preset)
    else:
        cfg = load_config(args.config)
        return _override(cfg, args)
    return _override(build_config(doc), args)


def _override(cfg, args):
    if args.scheme:
        if args.scheme == "componentwise" and cfg.mobility.kind is not MobilityKind.DIAGONAL:
            raise ConfigError("scheme", "componentwise scheme requires mobility.kind = diagonal")
        cfg.scheme = args.scheme
    if args.steps is not None:
        if args.steps < 0:
            raise ConfigError("time.steps", "must be >= 0")
        cfg.steps = args.steps
    if args.output_dir:
        from pathlib import Path
        cfg.output.dir = Path(args.output_dir)
    if args.snapshot_every is not None:
        if args.snapshot_every < 0:
            raise ConfigError("output.snapshot_every", "must be >= 0")
        cfg.output.snapshot_every = args.snapshot_every
    if args.energy_every is not None:
        if args.energy_every < 1:
            raise ConfigError("output.energy_every", "must be >= 1")
        cfg.output.energy_every = args.energy_every
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    step = [0]

    def progress(state, rec):
        step[0] = state.step
        log.info("step %d  total_modified %.10e", state.step, rec.total_modified_J)

    try:
        res = simulate(cfg, strict_energy=args.strict_energy, callback=progress)
    except EnergyViolation as exc:
        log.error("%s", exc)
        return EXIT_ENERGY
    except (SolverError, ThermoDomainError, ValueError) as exc:
        log.error("step %d failed: %s", step[0] + 1, exc)
        return EXIT_SOLVER
    log.info("finished %d steps; output in %s", res.state.step, cfg.output.dir)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
