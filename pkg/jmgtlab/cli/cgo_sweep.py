"""``jmgtlab cgo-sweep``: remainder norms of one probe family over a frequency sweep."""

import logging

from jmgtlab.cli.context import open_run
from jmgtlab.errors import HypothesisViolationError
from jmgtlab.services.cgo import (
    assemble_probe,
    decay_slope,
    eikonal_residual,
    sigma_expansion_audit,
    sigma_sweep,
)
from jmgtlab.services.experiment import build_amplitude_spec, build_geometry, build_grid

logger = logging.getLogger(__name__)

COMMAND = "cgo-sweep"

# Slowest decay of ||R|| in sigma still counted as asymptotic
MAX_SLOPE = -0.5


def register(subparsers, parent) -> None:
    parser = subparsers.add_parser(
        COMMAND, parents=[parent], help="remainder decay of the geometric-optics probes"
    )
    parser.set_defaults(handler=run)


def run(args) -> int:
    ctx = open_run(args, COMMAND)
    config = ctx.config
    coeff = config.coefficients
    section = config.probe
    grid = build_grid(config)
    geom = build_geometry(config, grid, coeff)
    spec = build_amplitude_spec(config, geom, coeff)

    # 1. Expansion audit at the smallest frequency; the coefficients do not depend on it
    probe = assemble_probe(
        section.sigmas[0], spec, geom, coeff, grid, sign=section.sign, scale=section.scale
    )
    audit = sigma_expansion_audit(probe, coeff, grid)
    ctx.writer.write_json(
        "audit",
        audit.to_dict() | {"eikonal": eikonal_residual(probe.phase, coeff, grid), "q": geom.q},
    )

    # 2. Sweep
    frame = sigma_sweep(
        section.sigmas, spec, geom, coeff, grid, ctx.runner, sign=section.sign, scale=section.scale
    )
    slope = decay_slope(frame["sigma"], frame["norm_R"])
    slope_t = decay_slope(frame["sigma"], frame["norm_Rt"])
    slope_grad = decay_slope(frame["sigma"], frame["norm_gradR"])
    ctx.writer.write_table(
        "remainder_decay",
        frame,
        footer={"sigma": "slope", "norm_R": slope, "norm_Rt": slope_t, "norm_gradR": slope_grad},
    )
    logger.info("remainder decay slope %.3f over %d frequencies", slope, len(frame))
    ctx.finish()

    if slope > MAX_SLOPE:
        logger.warning("asymptotic regime not reached: slope %.3f > %.1f", slope, MAX_SLOPE)
        raise HypothesisViolationError(
            f"asymptotic regime not reached: remainder decay slope {slope:.3f} > {MAX_SLOPE}"
        )
    return 0
