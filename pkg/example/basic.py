"""Design one constant-modulus waveform on the desk preset and print its SINR trace."""

from stap_slp import Err, Ok, build_scenario, design, load_preset
from stap_slp.designer import DesignResult

# ── Scenario ────────────────────────────────────────────────────────────────

config = load_preset("desk").unwrap()
scenario = build_scenario(config)
variant = config.variant.build(config.array)
n = config.array.waveform_len
print(f"waveform length {n}, {scenario.operators.n_factors} clutter factors")

# ── Design ──────────────────────────────────────────────────────────────────

result = design(variant, scenario, config.solver)


def report(r: DesignResult) -> None:
    print(f"  {r.label}: {r.sinr_db:.3f} dB after {r.iterations} iterations ({r.status})")
    print(f"  smallest CI margin {r.feasibility.min_ci_margin:.2e}")


match result:
    case Ok(r):
        report(r)
        print(r.trace_frame())
    case Err(e):
        print(f"  design failed: {e!r}")
