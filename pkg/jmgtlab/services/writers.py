"""Output files of a run: fields, tables, JSON reports and the manifest."""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from jmgtlab.models.experiment import RunManifest

logger = logging.getLogger(__name__)


class OutputWriter:
    """Writes into one output directory and remembers every file it wrote."""

    FLOAT_FORMAT = "%.12e"

    def __init__(self, out_dir: Path | str):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def _path(self, name: str) -> Path:
        path = self.out_dir / name
        self.files.append(name)
        return path

    def save_field(
        self, name: str, values: np.ndarray, role: str = "u", dt: float | None = None
    ) -> None:
        """``<name>.npy`` with a ``<name>.json`` sidecar (shape, dtype, dt, role)."""
        values = np.asarray(values)
        np.save(self._path(f"{name}.npy"), values)
        self.write_json(
            name,
            {"shape": list(values.shape), "dtype": str(values.dtype), "dt": dt, "role": role},
        )

    def write_table(self, name: str, frame: pd.DataFrame, footer: dict | None = None) -> None:
        """
        CSV with a header row and '.' decimals; ``footer`` maps column names to
        the values of one trailing summary row (a label goes in the first column).
        """
        path = self._path(f"{name}.csv")
        frame.to_csv(path, index=False, float_format=self.FLOAT_FORMAT)
        if footer:
            cells = [
                _format_cell(footer.get(column, ""), self.FLOAT_FORMAT) for column in frame.columns
            ]
            with path.open("a", encoding="utf-8") as handle:
                handle.write(",".join(cells) + "\n")

    def write_json(self, name: str, obj: dict) -> None:
        text = json.dumps(obj, sort_keys=True, indent=2, default=_json_default)
        self._path(f"{name}.json").write_text(text + "\n", encoding="utf-8")

    def write_manifest(self, manifest: RunManifest) -> None:
        manifest.files = sorted(set(self.files) | {"manifest.json"})
        (self.out_dir / "manifest.json").write_text(
            json.dumps(manifest.model_dump(mode="json"), sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        logger.info("wrote %d files to %s", len(manifest.files), self.out_dir)


def _format_cell(value, float_format: str) -> str:
    if isinstance(value, (float, np.floating)):
        return float_format % value
    return str(value)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return {"real": value.real, "imag": value.imag}
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")
