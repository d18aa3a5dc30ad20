import json, math, time
from driventoric.lattice import build_lattice
from driventoric.model import DriveParams
from driventoric.exchange import FusionSector, exchange_phase

t0 = time.time()
lat = build_lattice(16, 16)
J = 0.2
params = DriveParams(J=J, Delta=J, omega=2*2.0 - 4*J)
out = {}
for sector in ("vacuum", "fermion"):
    res = exchange_phase(FusionSector(sector), params, lat, arm_length=2, n_steps=128)
    out[sector] = res.exchange_phase
    print(sector, res.exchange_phase, flush=True)
diff = math.remainder(out["fermion"] - out["vacuum"], 2*math.pi)
print(json.dumps({
    "vacuum": out["vacuum"], "fermion": out["fermion"], "difference": diff,
    "vac_rel": abs(out["vacuum"] + math.pi/8)/(math.pi/8),
    "ferm_rel": abs(out["fermion"] - 3*math.pi/8)/(3*math.pi/8),
    "diff_rel": abs(diff - math.pi/2)/(math.pi/2),
    "minutes": (time.time()-t0)/60}))
