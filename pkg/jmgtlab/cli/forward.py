"""``jmgtlab forward``: one forward solve with energy, Neumann trace and compatibility output."""

import logging

import numpy as np
import pandas as pd

from jmgtlab.cli.context import open_run
from jmgtlab.models.fields import DataFamily
from jmgtlab.services.experiment import build_data, build_grid, build_nonlinearity
from jmgtlab.services.jmgt_nonlinear import solve_nonlinear
from jmgtlab.services.mgt_core import (
    MGTSolver,
    check_compatibility,
    dtn_trace,
    energy,
    l2_q,
)
from jmgtlab.services.stencils import integrate_boundary

logger = logging.getLogger(__name__)

COMMAND = "forward"


def register(subparsers, parent) -> None:
    parser = subparsers.add_parser(COMMAND, parents=[parent], help="solve the forward problem")
    parser.set_defaults(handler=run)


def run(args) -> int:
    ctx = open_run(args, COMMAND)
    config = ctx.config
    coeff = config.coefficients
    grid = build_grid(config)
    data, exact = build_data(config, grid, coeff)
    p = build_nonlinearity(config, grid)

    # 1. Solve
    solver = MGTSolver(coeff, grid)
    if p.is_zero:
        u = solver.solve(data)
    else:
        p.check_bound(grid, coeff.big_m)
        u, report = solve_nonlinear(data, p, coeff, grid, delta=config.data.delta, solver=solver)
        ctx.writer.write_json("picard", report.to_dict())

    # 2. Fields and diagnostics
    ctx.writer.save_field("u", u.u, role="u", dt=grid.dt)
    energies = energy(u, grid=grid)
    ctx.writer.write_table("energy", pd.DataFrame({"t": grid.times, "energy": energies}))
    trace = dtn_trace(u, grid).values
    dtn_norm = np.sqrt(integrate_boundary(np.abs(trace) ** 2, grid))
    ctx.writer.write_table("dtn", pd.DataFrame({"t": grid.times, "dtn_norm": dtn_norm}))
    order = min(3, grid.nt - 1)
    ctx.writer.write_json("compatibility", check_compatibility(data, coeff, grid, order).to_dict())
    if exact is not None:
        logger.info("error against the exact solution: %.3e", l2_q(u.u - exact.u, grid))

    # 3. Convergence study for manufactured data
    if config.data.family == DataFamily.MANUFACTURED and config.data.refinements:
        ctx.writer.write_table("convergence", convergence_table(config, ctx.runner))

    ctx.finish()
    return 0


def convergence_table(config, runner) -> pd.DataFrame:
    """Error against the manufactured solution on successively halved grids."""
    coeff = config.coefficients
    levels = list(range(config.data.refinements + 1))

    def one(level):
        grid = build_grid(config, level)
        data, exact = build_data(config, grid, coeff)
        u = MGTSolver(coeff, grid).solve(data)
        return {
            "level": level,
            "h": max(grid.hx, grid.hy),
            "dt": grid.dt,
            "error": l2_q(u.u - exact.u, grid),
        }

    rows = runner.map(one, levels, names=[f"level={level}" for level in levels])
    frame = pd.DataFrame(rows)
    errors = frame["error"].to_numpy()
    observed = np.full(errors.shape, np.nan)
    observed[1:] = np.log2(errors[:-1] / errors[1:])
    return frame.assign(observed_order=observed)
