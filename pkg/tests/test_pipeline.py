"""Reconstruction of p from simulated measurements with the shipped configs."""

from pathlib import Path

import pytest

from jmgtlab.services.experiment import load_config
from jmgtlab.services.pipeline import TARGET_ERROR, reconstruct

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.slow
class TestEndToEnd:
    @pytest.mark.parametrize(
        ("name", "mode"),
        [("reconstruct_lambda_T.toml", "lambda_T"), ("reconstruct_B_T.toml", "B_T")],
    )
    def test_recovers_bump(self, name, mode):
        config = load_config(CONFIGS / name)
        assert config.recon.simulate
        assert config.probe.sigmas == [20.0, 40.0]

        report = reconstruct(config)["report"]
        assert report["mode"] == mode
        assert report["relative_error"] <= TARGET_ERROR
        assert report["meets_target"]
