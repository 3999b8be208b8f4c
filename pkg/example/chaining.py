"""Result chaining across configuration, scenario and design steps."""

from dataclasses import replace

from stap_slp import (
    Err,
    InfeasibleScenarioError,
    Result,
    StapSlpError,
    build_scenario,
    design,
    load_config,
    resultify,
)
from stap_slp.config import ScenarioConfig
from stap_slp.designer import DesignResult


def design_for(config: ScenarioConfig) -> Result[DesignResult, StapSlpError]:
    variant = config.variant.build(config.array)
    return resultify(step="scenario")(build_scenario)(config).and_then(
        lambda scenario: design(variant, scenario, config.solver)
    )


def with_qos(config: ScenarioConfig, qos_db: float) -> ScenarioConfig:
    return replace(config, comm=replace(config.comm, qos_db=qos_db))


# ── Success pipeline ─────────────────────────────────────────────────────────

print("── desk preset, 5 dB QoS ──")
result = load_config("desk").and_then(design_for).map(lambda r: round(r.sinr_db, 3))
print(f"  sinr_db = {result}")
print()

# ── Short-circuit on a bad configuration ─────────────────────────────────────

print("── missing file short-circuits ──")
result = load_config("no-such-file.toml").and_then(design_for)
print(f"  {result}")
print()

# ── Recovery from an infeasible QoS target ───────────────────────────────────


def relax(error: StapSlpError) -> Result[DesignResult, StapSlpError]:
    if isinstance(error, InfeasibleScenarioError):
        print(f"  infeasible (margin {error.margin:.3e}); falling back to 0 dB QoS")
        return load_config("desk").map(lambda c: with_qos(c, 0.0)).and_then(design_for)
    return Err(error)


print("── 60 dB QoS, recover from the error ──")
result = load_config("desk").map(lambda c: with_qos(c, 60.0)).and_then(design_for)
if result.is_err():
    result = relax(result.unwrap_err())
print(f"  sinr_db = {result.map(lambda r: round(r.sinr_db, 3))}")
