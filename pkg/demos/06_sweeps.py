# %% [markdown]
# # Sweeps
#
# `run_sweep` evaluates several schemes over a list of source uplinks and
# returns a CSV document with one row per (U_s, scheme). The same thing is
# available as `p2pwsdt sweep` on the command line.

# %%
import numpy as np

from p2pwsdt.cli import SweepSpec, parse_sweep_csv, run_sweep

spec = SweepSpec(
    source_uplinks=tuple(np.logspace(0, 2, 5)),
    schemes=("lowerbound", "depth2", "routing", "dynamic-retain", "dynamic-leave"),
    case="IV",
    n=50,
    weights="linear",
)
text = run_sweep(spec, workers=4)
print(text)

# %%
# parsing the CSV recovers the rows exactly
rows = parse_sweep_csv(text)
best = min((r for r in rows if r.scheme == "dynamic-retain"), key=lambda r: r.ratio)
print(best)
