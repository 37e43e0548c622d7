"""Shared setup and teardown of a command run."""

import logging
from dataclasses import dataclass
from pathlib import Path

from jmgtlab import __version__
from jmgtlab.config import settings
from jmgtlab.models.experiment import ExperimentConfig, RunManifest
from jmgtlab.models.measurement import MeasurementMode
from jmgtlab.services.experiment import config_hash, load_config, validate_experiment
from jmgtlab.services.runner import TaskRunner
from jmgtlab.services.writers import OutputWriter

logger = logging.getLogger(__name__)


@dataclass
class RunContext:
    command: str
    config: ExperimentConfig
    writer: OutputWriter
    runner: TaskRunner

    def finish(self) -> None:
        manifest = RunManifest(
            command=self.command,
            config_hash=config_hash(self.config),
            version=__version__,
            seed=self.config.run.seed,
            tasks=self.runner.records,
        )
        self.writer.write_manifest(manifest)


def apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    """Command-line flags take precedence over the file."""
    run = config.run
    if getattr(args, "seed", None) is not None:
        run = run.model_copy(update={"seed": args.seed})
    if getattr(args, "threads", None) is not None:
        run = run.model_copy(update={"threads": args.threads})
    update = {"run": run}
    if getattr(args, "mode", None) is not None:
        update["recon"] = config.recon.model_copy(update={"mode": MeasurementMode(args.mode)})
    return config.model_copy(update=update)


def open_run(args, command: str) -> RunContext:
    """Load, override and validate the config, then open the output directory."""
    config = apply_overrides(load_config(args.config), args)
    validate_experiment(config, command)
    out_dir = args.out or config.run.output_dir or Path(settings.output_dir) / command
    logger.info("running %s into %s", command, out_dir)
    return RunContext(
        command=command,
        config=config,
        writer=OutputWriter(out_dir),
        runner=TaskRunner(config.threads),
    )
