"""SINR against the QoS threshold for CI, ZF and the radar-only bound."""

from pathlib import Path

import polars as pl

from stap_slp import CommMode, VariantKind, load_preset, sweep
from stap_slp.export import write_frame

config = load_preset("desk").unwrap()
frame = sweep(
    config,
    "qos_db",
    [0.0, 4.0, 8.0, 12.0],
    kinds=(VariantKind.CM,),
    modes=(CommMode.CI, CommMode.ZF, CommMode.NONE),
)

table = frame.pivot(on="line", index="value", values="sinr_db").sort("value")
print(table)
print(frame.filter(pl.col("status") == "infeasible").select("value", "line", "error"))
write_frame(frame, Path("out") / "sweep_qos_db.csv", "sweep")
