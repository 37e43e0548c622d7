"""``jmgtlab reconstruct``: recover p from measurements through the light-ray transform."""

import logging

import numpy as np

from jmgtlab.cli.context import open_run
from jmgtlab.services.experiment import build_grid
from jmgtlab.services.pipeline import reconstruct

logger = logging.getLogger(__name__)

COMMAND = "reconstruct"


def register(subparsers, parent) -> None:
    parser = subparsers.add_parser(
        COMMAND, parents=[parent], help="reconstruct the nonlinearity coefficient"
    )
    parser.set_defaults(handler=run)


def run(args) -> int:
    ctx = open_run(args, COMMAND)
    grid = build_grid(ctx.config)
    result = reconstruct(ctx.config, runner=ctx.runner)

    ctx.writer.write_table("ray_data", result["ray_data"])
    if result["lcurve"] is not None:
        ctx.writer.write_table("lcurve", result["lcurve"])

    p_rec = result["p"]
    ctx.writer.save_field("p_reconstructed", p_rec.filled(np.nan), role="p", dt=grid.dt)
    ctx.writer.save_field(
        "coverage", (~np.ma.getmaskarray(p_rec)).astype(float), role="coverage", dt=grid.dt
    )
    ctx.writer.write_json("report", result["report"])

    ctx.finish()
    return 0
