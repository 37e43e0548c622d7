"""``jmgtlab linearize``: second-order linearization, cross difference against direct solve."""

import logging

import pandas as pd

from jmgtlab.cli.context import open_run
from jmgtlab.models.linearization import EpsilonDesign
from jmgtlab.services import data_factory
from jmgtlab.services.experiment import build_grid, build_nonlinearity
from jmgtlab.services.linearize import cross_difference, linearize_pair
from jmgtlab.services.mgt_core import l2_q

logger = logging.getLogger(__name__)

COMMAND = "linearize"


def register(subparsers, parent) -> None:
    parser = subparsers.add_parser(
        COMMAND, parents=[parent], help="second-order linearization in the data"
    )
    parser.set_defaults(handler=run)


def run(args) -> int:
    ctx = open_run(args, COMMAND)
    config = ctx.config
    coeff = config.coefficients
    grid = build_grid(config)
    p = build_nonlinearity(config, grid)
    section, data = config.linearize, config.data

    # Two boundary pulses with neighbouring angular modes
    data1 = data_factory.boundary_pulse(
        grid, data.amplitude, data.t_on, data.t_off, data.angular_mode
    )
    data2 = data_factory.boundary_pulse(
        grid, data.amplitude, data.t_on, data.t_off, data.angular_mode + 1
    )

    # 1. Reference pair
    design = EpsilonDesign(data1, data2, section.eps1, section.eps2, data.delta)
    pair = linearize_pair(design, p, coeff, grid, method=section.method, runner=ctx.runner)
    ctx.writer.save_field("w", pair.w.u, role="w", dt=grid.dt)
    ctx.writer.save_field("W", pair.reduction.W, role="W", dt=grid.dt)
    ctx.writer.write_json("reduction", pair.reduction.to_dict())

    # 2. Cross differences against the direct solve
    if section.method == "direct":
        reference = pair.w
    else:
        reference = linearize_pair(design, p, coeff, grid, method="direct").w
    scale = l2_q(reference.u, grid) or 1.0
    rows = []
    for eps in section.eps_sweep:
        w_eps = cross_difference(
            EpsilonDesign(data1, data2, eps, eps, data.delta), p, coeff, grid, runner=ctx.runner
        )
        discrepancy = l2_q(w_eps.u - reference.u, grid) / scale
        logger.info("eps=%.3e: relative discrepancy %.3e", eps, discrepancy)
        rows.append({"eps": eps, "discrepancy": discrepancy})
    ctx.writer.write_table("linearization", pd.DataFrame(rows, columns=["eps", "discrepancy"]))

    ctx.finish()
    return 0
