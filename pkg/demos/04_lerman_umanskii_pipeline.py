"""The full 4-d worked example, honestly.

This runs the complete pipeline for the Lerman-Umanskii system: local
manifold graphs in straightening charts, validated transport by the flow
for |T| = 9 to an affine chart at the candidate intersection point
p0 = (2^-1/4, 0, 2^-1/4, 0), implicit reparameterization, and the splitting
certificate.

Two things are demonstrated:

1. The machinery produces very tight rigorous enclosures after the long
   transport (the mixed-derivative block is enclosed to ~1e-6 absolute
   after time 9 across a 4-d cubic flow).
2. The verdict is honestly FAILED: the perturbation eps*(x2, 0, x4, 0)
   conserves the integral K = x2 x3 - x1 x4 exactly (grad K . g = 0), so
   the manifolds cannot split in the K direction and the mixed-derivative
   block is singular.  The margin inequality is therefore unsatisfiable --
   the published example data could not have come from this perturbation.
   An independent Melnikov-integral oracle (tests/test_lerman.py) pins the
   computed derivative block to four digits.

Expect a few minutes of runtime.  Reduce taylor_order for a quicker, looser
run.
"""

import json
import time

import numpy as np

from splitcert import FlowSettings, LUConfig, midpoint_mixed_second, run_theorem_proof
from splitcert.lerman import locate_homoclinic, _approx_w

cfg = LUConfig(flow=FlowSettings(taylor_order=18, initial_step=0.25))

print("shooting for the homoclinic preimages (nonrigorous)...")
vu = locate_homoclinic(cfg, "unstable")
vs = locate_homoclinic(cfg, "stable")
print("  unstable patch parameters:", vu, " (|v| = %.4e < r = %.1e)" % (np.linalg.norm(vu), cfg.local_radius))
print("  stable patch parameters:  ", vs)
print("  section residuals:", _approx_w(cfg, "unstable")(0.0, vu)[:2],
      _approx_w(cfg, "stable")(0.0, vs)[:2])

print("\nmidpoint mixed-derivative block d2y/deps dx(0, 0):")
mids = midpoint_mixed_second(cfg)
print(np.array2string(mids, precision=6))
print("(note the ~zero first column -- the flow direction -- and ~zero second")
print(" row -- the conserved-K direction; see the package README)")

print("\nrunning the rigorous pipeline (validated transport, both manifolds,")
print("three oracle queries)... this takes a few minutes")
t0 = time.time()
cert = run_theorem_proof(cfg)
print("done in %.0f s" % (time.time() - t0))

print("\nverdict:", cert.verdict)
if cert.A22 is not None:
    print("rigorous A22 enclosure:")
    for i in range(2):
        print("  ", [f"[{cert.A22.lo[i,j]:+.3e}, {cert.A22.hi[i,j]:+.3e}]" for j in range(2)])
    print("m(A22) lower bound:      ", cert.m_A22)
    print("||Delta2|| upper bound:  ", cert.norm_Delta2)
    print("||dy/deps(E,p)|| bound:  ", cert.eps_deriv_bound_2)
    print("margin:", cert.margin2, " (must be > 0 to certify; it cannot be here)")

out = "lu_certificate.json"
cert.write_json(out)
print("\nfull certificate written to", out)
