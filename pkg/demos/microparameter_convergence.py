# # Convergence across the microscopic length scale
#
# The material length parameter turns the problem from a fourth-order one
# (order-one parameter) into a singularly perturbed one (tiny parameter).
# The smooth benchmark converges quadratically once the parameter is small;
# its boundary-layer variant is limited to roughly half an order.  Sweeps
# stay small here; the full published grids run via the CLI presets.

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sgvem import ModelParams, emit_report, meshes_for_sweep, run_sweep

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

meshes = meshes_for_sweep(cells=(32, 64, 128, 256))
records = []
for iota in (1.0, 1e-2, 1e-5):
    params = ModelParams(lam=1.0, mu=1.0, iota=iota)
    records += run_sweep("exam1a", params, meshes)
print(emit_report(records, "md"))

# ## The boundary-layer variant saturates near half an order

layer = run_sweep("exam1b", ModelParams(lam=1.0, mu=1.0, iota=1e-3), meshes)
print(emit_report(layer, "md"))

# ## Error curves

fig, ax = plt.subplots(figsize=(5, 4))
for iota in (1.0, 1e-2, 1e-5):
    rows = [r for r in records if r.iota == iota]
    ax.loglog([r.h for r in rows], [r.e_pi for r in rows], "o-", label=f"length {iota:g}")
ax.loglog([r.h for r in layer], [r.e_pi for r in layer], "s--", label="boundary layer 1e-3")
hs = np.array([r.h for r in layer])
ax.loglog(hs, 0.5 * hs**2 / hs[0] ** 2 * 0.35, "k:", label="order 2")
ax.set_xlabel("mesh size h")
ax.set_ylabel("relative energy error")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "microparameter_convergence.png"), dpi=130)
print(f"wrote {os.path.join(OUT, 'microparameter_convergence.png')}")
