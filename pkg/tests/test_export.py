"""Tests for CSV/JSON artifacts."""

import json
from pathlib import Path

import numpy as np
import polars as pl
import pytest

from stap_slp.config import ScenarioConfig
from stap_slp.exceptions import InfeasibleScenarioError, ModelError, SolverError
from stap_slp.experiments import RunOutcome, run
from stap_slp.export import (
    complex_from_json,
    complex_to_json,
    error_doc,
    load_design,
    read_frame,
    schema_line,
    write_frame,
    write_run,
)


@pytest.fixture(scope="module")
def outcome(tiny_config: ScenarioConfig) -> RunOutcome:
    return run(tiny_config).unwrap()


class TestFrames:
    """Schema-tagged CSV files."""

    def test_schema_line(self) -> None:
        """Test the comment line format."""
        assert schema_line("trace") == "# schema=trace/1"

    def test_write_and_read(self, tmp_path: Path) -> None:
        """Test that the schema line precedes a plain header."""
        frame = pl.DataFrame({"line": ["cm/ci"], "iteration": [0], "sinr_db": [1.5]})
        path = write_frame(frame, tmp_path / "nested" / "trace.csv", "trace")
        lines = path.read_text().splitlines()
        assert lines[0] == "# schema=trace/1"
        assert lines[1] == "line,iteration,sinr_db"
        assert read_frame(path, "trace").equals(frame)

    def test_schema_mismatch(self, tmp_path: Path) -> None:
        """Test that reading under the wrong schema raises ModelError."""
        path = write_frame(pl.DataFrame({"a": [1]}), tmp_path / "x.csv", "ser")
        with pytest.raises(ModelError) as info:
            read_frame(path, "sweep")
        assert info.value.got == "# schema=ser/1"

    def test_complex_pairs(self) -> None:
        """Test the [re, im] pair encoding."""
        values = np.array([1 + 2j, -0.5j])
        assert complex_to_json(values) == [[1.0, 2.0], [-0.0, -0.5]]
        np.testing.assert_array_equal(complex_from_json(complex_to_json(values)), values)


class TestErrorDoc:
    """Failure documents."""

    def test_infeasible(self) -> None:
        """Test the status and margin of an infeasible scenario."""
        doc = error_doc(InfeasibleScenarioError("QoS unreachable", margin=-0.25))
        assert doc == {
            "status": "infeasible",
            "error": "InfeasibleScenarioError",
            "message": "QoS unreachable",
            "margin": -0.25,
        }

    def test_solver(self) -> None:
        """Test that other errors are plain failures carrying their step."""
        doc = error_doc(SolverError("not PD", step="cholesky"))
        assert doc["status"] == "failed"
        assert doc["step"] == "cholesky"


class TestRunArtifacts:
    """write_run and load_design."""

    def test_files(self, outcome: RunOutcome, tmp_path: Path) -> None:
        """Test the artifact set of a run without SER trials."""
        written = write_run(outcome, tmp_path)
        assert sorted(p.name for p in written) == [
            "comm.json",
            "result.json",
            "scene.json",
            "trace.csv",
        ]
        doc = json.loads((tmp_path / "result.json").read_text())
        assert doc["status"] == "ok"
        assert doc["primary"] == "cm/ci"
        assert doc["config"]["name"] == "tiny"
        trace = read_frame(tmp_path / "trace.csv", "trace")
        assert trace.height == len(outcome.primary.sinr_trace)

    def test_load_design(self, outcome: RunOutcome, tmp_path: Path) -> None:
        """Test that the stored waveform and filter come back unchanged."""
        write_run(outcome, tmp_path)
        x, w = load_design(tmp_path / "result.json")
        np.testing.assert_array_equal(x, outcome.primary.waveform)
        np.testing.assert_array_equal(w, outcome.primary.filter)
        x2, _ = load_design(tmp_path / "result.json", "cm/ci")
        np.testing.assert_array_equal(x2, x)

    def test_unknown_line(self, outcome: RunOutcome, tmp_path: Path) -> None:
        """Test that asking for a missing line raises ModelError."""
        write_run(outcome, tmp_path)
        with pytest.raises(ModelError, match="cm/zf"):
            load_design(tmp_path / "result.json", "cm/zf")
