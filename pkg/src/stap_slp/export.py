"""CSV and JSON artifacts.

Every CSV starts with one ``# schema=<name>/<version>`` line followed by a
plain header row; :func:`read_frame` skips the comment and checks the schema.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import polars as pl

from .comm import ser_frame
from .exceptions import InfeasibleScenarioError, ModelError, StapSlpError
from .experiments import RunOutcome, trace_table

logger = logging.getLogger(__name__)

SCHEMAS = {
    "trace": 1,
    "sweep": 1,
    "ambiguity": 1,
    "ser": 1,
}


def schema_line(name: str) -> str:
    return f"# schema={name}/{SCHEMAS[name]}"


def write_frame(df: pl.DataFrame, path: Path, schema: str) -> Path:
    """Write ``df`` as CSV behind its schema comment line."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(schema_line(schema) + "\n")
        df.write_csv(fh, float_precision=10)
    logger.debug("wrote %s rows=%d schema=%s", path, df.height, schema)
    return path


def read_frame(path: Path, schema: str | None = None) -> pl.DataFrame:
    """Read a CSV written by :func:`write_frame`, checking the schema when given."""
    with path.open(encoding="utf-8") as fh:
        first = fh.readline().strip()
    if schema is not None and first != schema_line(schema):
        raise ModelError(f"unexpected schema in {path}", expected=schema_line(schema), got=first)
    return pl.read_csv(path, comment_prefix="#")


def complex_to_json(values: np.ndarray) -> list[list[float]]:
    return np.stack([np.real(values), np.imag(values)], axis=-1).tolist()


def complex_from_json(pairs: list[list[float]]) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def write_json(doc: dict[str, Any], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n", "utf-8")
    return path


def error_doc(error: StapSlpError) -> dict[str, Any]:
    """Machine-readable failure reason (status, error type, message and details)."""
    doc: dict[str, Any] = {
        "status": "failed",
        "error": type(error).__name__,
        "message": str(error),
    }
    for attr in ("field", "step", "margin"):
        value = getattr(error, attr, None)
        if value is not None:
            doc[attr] = value
    if isinstance(error, InfeasibleScenarioError):
        doc["status"] = "infeasible"
    return doc


def write_run(outcome: RunOutcome, out_dir: Path) -> list[Path]:
    """Write the run artifacts; ``comm.json`` and ``ser.csv`` only when they apply."""
    result = {
        "status": "ok",
        "config": outcome.config.to_dict(),
        "primary": outcome.primary.label,
        "lines": {label: r.to_dict() for label, r in outcome.lines.items()},
        "errors": {label: error_doc(e) for label, e in outcome.errors.items()},
    }
    written = [
        write_json(result, out_dir / "result.json"),
        write_frame(trace_table(outcome), out_dir / "trace.csv", "trace"),
        write_json(outcome.scene.to_dict(), out_dir / "scene.json"),
    ]
    if outcome.comm is not None:
        written.append(write_json(outcome.comm.to_dict(), out_dir / "comm.json"))
    if outcome.ser:
        written.append(
            write_frame(ser_frame(outcome.ser, outcome.primary.label), out_dir / "ser.csv", "ser")
        )
    logger.info("run artifacts written to %s", out_dir)
    return written


def load_design(path: Path, line: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Waveform and filter of one line of a ``result.json`` (the primary line by default)."""
    doc = json.loads(path.read_text("utf-8"))
    label = line or doc.get("primary")
    lines = doc.get("lines", {})
    if label not in lines:
        raise ModelError(f"line {label!r} not in {path}", expected=sorted(lines), got=label)
    entry = lines[label]
    return complex_from_json(entry["waveform"]), complex_from_json(entry["filter"])
