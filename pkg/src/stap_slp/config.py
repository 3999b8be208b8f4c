"""Scenario configuration: TOML documents, shipped presets and dB conversions.

A document has the sections ``array``, ``target``, ``clutter``, ``comm``,
``variant``, ``solver`` (with an optional ``solver.inner`` table), ``seeds``
and ``outputs``. A top-level ``preset = "<name>"`` key starts from a shipped
preset and overrides it table by table. Fields ending in ``_db`` are in
decibels and convert with ``10**(dB/10)``.
"""

from __future__ import annotations

import dataclasses
import math
import os
import tomllib
from collections.abc import Mapping
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .clutter import AzimuthMode, DopplerModel
from .decorators import resultify
from .designer import CommMode, SolverConfig
from .exceptions import StapSlpError, ValidationError
from .geometry import ArrayConfig, TargetModel, db_to_linear
from .result import Err, Ok, Result
from .socp import InnerSettings
from .waveforms import ConstraintVariant, VariantKind, build_reference_lfm

OUTPUT_DIR_ENV = "STAP_SLP_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = Path("out")
_SECTIONS = ("array", "target", "clutter", "comm", "variant", "solver", "seeds", "outputs")


@dataclass(frozen=True, slots=True)
class TargetSection:
    azimuth_deg: float = 0.0
    normalized_doppler: float = 0.3
    power_db: float = 0.0
    receiver_noise_db: float = 0.0

    def model(self) -> TargetModel:
        return TargetModel(
            azimuth_rad=math.radians(self.azimuth_deg),
            normalized_doppler=self.normalized_doppler,
            power=db_to_linear(self.power_db),
        )

    @property
    def receiver_noise(self) -> float:
        return db_to_linear(self.receiver_noise_db)


@dataclass(frozen=True, slots=True)
class ClutterSection:
    """``half_width_cells`` L gives the CUT plus 2L adjacent range cells."""

    half_width_cells: int = 2
    patches_per_cell: int = 60
    patch_power_db: float = 0.0
    doppler_model: DopplerModel = DopplerModel.RIDGE
    azimuth_mode: AzimuthMode = AzimuthMode.GRID
    ridge_slope: float = 1.0
    rank_threshold: float = 1e-10

    def __post_init__(self) -> None:
        doppler = _enum(DopplerModel, self.doppler_model, "clutter.doppler_model")
        azimuth = _enum(AzimuthMode, self.azimuth_mode, "clutter.azimuth_mode")
        object.__setattr__(self, "doppler_model", doppler)
        object.__setattr__(self, "azimuth_mode", azimuth)
        if not 0 < self.rank_threshold < 1:
            raise ValidationError("must lie in (0, 1)", field="clutter.rank_threshold")


@dataclass(frozen=True, slots=True)
class CommSection:
    """``qos_db`` is one value for every user or one value per user."""

    n_users: int = 3
    psk_order: int = 4
    qos_db: float | tuple[float, ...] = 5.0
    noise_power_db: float = -20.0
    ser_trials: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.qos_db, list):
            object.__setattr__(self, "qos_db", tuple(float(q) for q in self.qos_db))
        if self.n_users < 0:
            raise ValidationError("must be nonnegative", field="comm.n_users", value=self.n_users)
        if isinstance(self.qos_db, tuple) and len(self.qos_db) != self.n_users:
            raise ValidationError(
                f"expected {self.n_users} per-user values", field="comm.qos_db", value=self.qos_db
            )
        if self.ser_trials < 0:
            raise ValidationError("must be nonnegative", field="comm.ser_trials")

    def qos(self) -> np.ndarray:
        values = np.broadcast_to(np.asarray(self.qos_db, dtype=float), (self.n_users,))
        return 10.0 ** (values / 10.0)

    @property
    def noise_power(self) -> float:
        return db_to_linear(self.noise_power_db)


@dataclass(frozen=True, slots=True)
class VariantSection:
    """``similarity_xi`` is a multiple of the per-entry modulus ``√(P/MNNₜ)``."""

    kind: VariantKind
    total_power: float
    papr_eps: float = 1.0
    similarity_xi: float = 1.5

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", _enum(VariantKind, self.kind, "variant.kind"))
        if not self.total_power > 0:
            raise ValidationError("must be positive", field="variant.total_power")

    def build(self, cfg: ArrayConfig) -> ConstraintVariant:
        match self.kind:
            case VariantKind.CM:
                return ConstraintVariant.cm(self.total_power)
            case VariantKind.PAPR:
                return ConstraintVariant.papr(self.total_power, self.papr_eps)
            case VariantKind.CMS:
                r = math.sqrt(self.total_power / cfg.waveform_len)
                return ConstraintVariant.cms(
                    self.total_power,
                    self.similarity_xi * r,
                    build_reference_lfm(cfg, self.total_power),
                )


@dataclass(frozen=True, slots=True)
class SeedSection:
    scene: int = 0
    channel: int = 1
    symbol: int = 2
    ser: int = 3


@dataclass(frozen=True, slots=True)
class OutputSection:
    """What ``run`` writes besides ``result.json`` and ``trace.csv``."""

    directory: Path | None = None
    baselines: tuple[CommMode, ...] = ()
    chain: bool = True
    ambiguity: bool = False
    ambiguity_points: int = 101
    heatmap: bool = False

    def __post_init__(self) -> None:
        if self.directory is not None and not isinstance(self.directory, Path):
            object.__setattr__(self, "directory", Path(self.directory))
        object.__setattr__(
            self,
            "baselines",
            tuple(_enum(CommMode, b, "outputs.baselines") for b in self.baselines),
        )
        if self.ambiguity_points < 2:
            raise ValidationError("must be >= 2", field="outputs.ambiguity_points")


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    name: str
    array: ArrayConfig
    variant: VariantSection
    target: TargetSection = field(default_factory=TargetSection)
    clutter: ClutterSection = field(default_factory=ClutterSection)
    comm: CommSection = field(default_factory=CommSection)
    solver: SolverConfig = field(default_factory=SolverConfig)
    seeds: SeedSection = field(default_factory=SeedSection)
    outputs: OutputSection = field(default_factory=OutputSection)

    def with_seeds(self, **seeds: int | None) -> ScenarioConfig:
        given = {k: v for k, v in seeds.items() if v is not None}
        return dataclasses.replace(self, seeds=dataclasses.replace(self.seeds, **given))

    def output_dir(self, override: Path | None = None) -> Path:
        """CLI flag, then ``outputs.directory``, then ``$STAP_SLP_OUTPUT_DIR``, then ``./out``."""
        if override is not None:
            return override
        if self.outputs.directory is not None:
            return self.outputs.directory
        return default_output_dir()

    def to_dict(self) -> dict[str, Any]:
        doc = dataclasses.asdict(self)
        doc["outputs"]["directory"] = (
            None if self.outputs.directory is None else str(self.outputs.directory)
        )
        return _plain(doc)


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, str(DEFAULT_OUTPUT_DIR)))


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, float) and math.isinf(value):
        return None
    return value


def _enum[E](cls: type[E], value: Any, where: str) -> E:
    try:
        return cls(value)  # type: ignore[call-arg]
    except ValueError as e:
        choices = ", ".join(str(m) for m in cls)  # type: ignore[attr-defined]
        raise ValidationError(
            f"unknown value, expected one of {choices}", field=where, value=value
        ) from e


def _build[T](cls: type[T], table: Mapping[str, Any], section: str) -> T:
    if not isinstance(table, Mapping):
        raise ValidationError("expected a table", field=section, value=table)
    known = {f.name: f for f in dataclasses.fields(cls)}  # type: ignore[arg-type]
    for key in table:
        if key not in known:
            raise ValidationError("unknown field", field=f"{section}.{key}")
    for name, f in known.items():
        required = f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING
        if required and name not in table:
            raise ValidationError("missing required field", field=f"{section}.{name}")
    try:
        return cls(**table)
    except TypeError as e:
        raise ValidationError(f"bad value: {e}", field=section) from e


def _solver(table: Mapping[str, Any]) -> SolverConfig:
    table = dict(table)
    inner = _build(InnerSettings, table.pop("inner", {}), "solver.inner")
    return _build(SolverConfig, {**table, "inner": inner}, "solver")


def _merge(base: dict[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = _merge(dict(out[key]), value)
        else:
            out[key] = value
    return out


def _preset_doc(name: str) -> dict[str, Any]:
    if name not in preset_names():
        raise ValidationError(
            f"unknown preset, available: {', '.join(preset_names())}", field="preset", value=name
        )
    text = resources.files("stap_slp.presets").joinpath(f"{name}.toml").read_text("utf-8")
    return tomllib.loads(text)


def parse_config(doc: Mapping[str, Any], name: str = "custom") -> ScenarioConfig:
    """Build a validated :class:`ScenarioConfig` from a parsed document; raises on error."""
    doc = dict(doc)
    if "preset" in doc:
        base = doc.pop("preset")
        doc = _merge(_preset_doc(base), doc)
        doc.pop("preset", None)
    name = str(doc.pop("name", name))
    for key in doc:
        if key not in _SECTIONS:
            raise ValidationError("unknown section", field=key)
    for section in ("array", "variant"):
        if section not in doc:
            raise ValidationError("missing required section", field=section)
    return ScenarioConfig(
        name=name,
        array=_build(ArrayConfig, doc["array"], "array"),
        variant=_build(VariantSection, doc["variant"], "variant"),
        target=_build(TargetSection, doc.get("target", {}), "target"),
        clutter=_build(ClutterSection, doc.get("clutter", {}), "clutter"),
        comm=_build(CommSection, doc.get("comm", {}), "comm"),
        solver=_solver(doc.get("solver", {})),
        seeds=_build(SeedSection, doc.get("seeds", {}), "seeds"),
        outputs=_build(OutputSection, doc.get("outputs", {}), "outputs"),
    )


def preset_names() -> tuple[str, ...]:
    root = resources.files("stap_slp.presets")
    return tuple(
        sorted(p.name.removesuffix(".toml") for p in root.iterdir() if p.name.endswith(".toml"))
    )


@resultify(step="config")
def load_preset(name: str) -> ScenarioConfig:
    return parse_config(_preset_doc(name), name)


def _read_toml(path: Path) -> Result[dict[str, Any], StapSlpError]:
    try:
        return Ok(tomllib.loads(path.read_text("utf-8")))
    except FileNotFoundError as e:
        return Err(
            ValidationError("config file not found", field="path", value=str(path), cause=e)
        )
    except tomllib.TOMLDecodeError as e:
        return Err(ValidationError(f"invalid TOML: {e}", field="path", value=str(path), cause=e))


def load_config(path: Path | str) -> Result[ScenarioConfig, StapSlpError]:
    """Read a TOML file, or a preset when ``path`` names one of :func:`preset_names`."""
    path = Path(path)
    if not path.exists() and str(path) in preset_names():
        return load_preset(str(path))
    parse = resultify(step="config")(parse_config)
    return _read_toml(path).and_then(lambda doc: parse(doc, path.stem))
