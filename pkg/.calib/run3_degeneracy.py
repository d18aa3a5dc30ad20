import json, time
import numpy as np
from driventoric.lattice import build_lattice
from driventoric.model import DriveParams
from driventoric.diagnostics import sector_ground_energies

t0 = time.time()
J = 0.2
params = DriveParams(J=J, Delta=J, omega=2*2.0 - 4*J)
splittings = {}
for L in (8, 12, 16, 20):
    out = sector_ground_energies(build_lattice(L, L), params, n_steps=256)
    splittings[L] = out.splitting
    parities = {r["sector"]: r["parity"] for r in out.rows}
    print(L, out.splitting, parities, flush=True)
ls = np.array(sorted(splittings))
ys = np.log(np.array([splittings[l] for l in ls]))
slope, intercept = np.polyfit(ls, ys, 1)
pred = slope*ls + intercept
r2 = 1 - np.sum((ys-pred)**2)/np.sum((ys-np.mean(ys))**2)
print(json.dumps({"splittings": {int(k): v for k, v in splittings.items()},
                  "slope": slope, "r2": r2, "minutes": (time.time()-t0)/60}))
