"""Run the bundled linear-regression presets and read back their curves.

Outputs land under $NOISYCOPIES_OUT (default ./runs).  Each run writes one
CSV per regime and seed, a summary of curve distances, and a manifest that
can be fed back to the runner to reproduce the files byte for byte.
"""
import os
import tempfile

import numpy as np

from noisycopies import oracle
from noisycopies.experiments import PRESETS, load_config, read_curve, run_custom, run_preset

out = os.environ.get("NOISYCOPIES_OUT") or tempfile.mkdtemp(prefix="noisycopies-")
print("presets:", ", ".join(sorted(PRESETS)))

res = run_preset("fig2c", os.path.join(out, "fig2c"), seeds=[0, 1, 2])
ridge = res.curve("ridge-mb-equiv")
for s in res.seeds:
    on = oracle.compare_curves(res.curve("da-online", s), ridge).tail_gap
    off = oracle.compare_curves(res.curve("da-offline", s), ridge).tail_gap
    print(f"seed {s}: on-line gap {on:.2e}  off-line gap {off:.2e}")
print("final MSE, naive vs ridge:", res.curve("naive")[-1].round(4), ridge[-1].round(4))

# the manifest replays the run
again = run_custom(load_config(os.path.join(res.out_dir, "manifest.json")), os.path.join(out, "replay"))
same = all(np.array_equal(read_curve(a), read_curve(b)) for a, b in zip(res.paths[:-1], again.paths[:-1]))
print("manifest replay identical:", same)
print("files in", res.out_dir)
