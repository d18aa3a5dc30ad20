import json, math, time
from driventoric.lattice import build_lattice
from driventoric.model import DriveParams
from driventoric.exchange import FusionSector, exchange_phase

t0 = time.time()
lat = build_lattice(10, 10)
mu_psi = 2.0
J = mu_psi/16
omega = 7*mu_psi/4
phases = []
for k in range(8):
    tk = k/8 * (2*math.pi/omega)
    params = DriveParams(J=J, Delta=J, omega=omega, t0=tk)
    res = exchange_phase(FusionSector("fermion"), params, lat, arm_length=2, n_steps=128)
    phases.append(res.exchange_phase)
    print(k, res.exchange_phase, flush=True)
spread = (max(phases)-min(phases))/(3*math.pi/8)
print(json.dumps({"phases": phases, "relative_spread": spread,
                  "minutes": (time.time()-t0)/60}))
