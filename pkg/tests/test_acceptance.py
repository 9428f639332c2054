"""Acceptance criteria, one test per criterion, at stated tolerances.

Each test prints a PASS/FAIL line (run with ``pytest -s`` to see them live).
Criterion 7 is implemented faithfully against the published example data;
it is expected RED: the printed perturbation conserves the second integral
exactly, which makes the published mixed-derivative block irreproducible
and the margin inequality unsatisfiable (see the worked-example section of
the README).  The pipeline itself runs end to end and the test reports the
honestly computed enclosures.
"""

import json
import math
import time

import numpy as np
import pytest

from splitcert.intervals import Interval, IntervalBox
from splitcert.jets import Jet2Enclosure
from splitcert.matrices import IntervalMatrix, ivec_norm_ub, sigma_min_lb, spectral_norm_ub
from splitcert.degree import MelnikovCertificate, verify_boundary_exclusion, verify_practical
from splitcert.distance import DistanceOracle
from splitcert.flow import FlowSettings, flow_jet
from splitcert.implicit import GOracle, implicit_enclose, implicit_first, implicit_mixed_second
from splitcert.newton import FunctionOracle, newton_verify
from splitcert.polys import PolyMap, VectorFieldDef


def report(criterion: int, ok: bool, detail: str):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")


# published enclosures, transcribed verbatim
A22 = IntervalMatrix.from_rows([
    [Interval(5.878219435, 5.878219454), Interval(-13.12140618, -13.12140616)],
    [Interval(4.972558758, 4.97255877), Interval(-2.358981737, -2.358981727)],
])
DELTA2 = IntervalMatrix.from_rows([
    [Interval(-1.299703331, 1.286153144), Interval(-0.9977804236, 0.9891960037)],
    [Interval(-0.7568318161, 0.7534173913), Interval(-0.5842185843, 0.5818916067)],
])
YEPS = IntervalBox([-1.030549066e-05, -9.608989689e-06],
                   [1.030549066e-05, 9.608989695e-06])
A22_MIDS = np.array([[(5.878219435 + 5.878219454) / 2, (-13.12140618 - 13.12140616) / 2],
                     [(4.972558758 + 4.97255877) / 2, (-2.358981737 - 2.358981727) / 2]])


def test_criterion_1_norm_goldens():
    t0 = time.time()
    lb = sigma_min_lb(A22)
    ok1 = 3.4230 <= lb <= 3.42309
    ub = spectral_norm_ub(DELTA2)
    ok2 = ub <= 2.000249209 * (1 + 1e-6) and ub >= 1.89
    nv = ivec_norm_ub(YEPS)
    ok3 = abs(nv - 1.409027398e-5) <= 1e-12
    ok = ok1 and ok2 and ok3
    report(1, ok, f"sigma_min={lb!r}, norm_ub={ub!r}, vec_norm={nv!r} ({time.time()-t0:.3f}s)")
    assert ok1 and ok2 and ok3


def test_criterion_2_margin_golden():
    t0 = time.time()
    cert = MelnikovCertificate(
        k1=0, k2=2, p=np.zeros(2), R=1e-5, eps_max=1e-7,
        A22=A22, Delta2=DELTA2, eps_deriv_bound_2=ivec_norm_ub(YEPS),
    )
    out = verify_practical(cert)
    ok = out.verified and 1.3810e-7 <= out.margin2 <= 1.3812e-7
    report(2, ok, f"margin={out.margin2!r} in [1.3810e-7, 1.3812e-7] ({time.time()-t0:.3f}s)")
    assert ok


def test_criterion_3_interval_newton_sqrt2():
    t0 = time.time()
    f = FunctionOracle(
        eval=lambda _x, y: IntervalBox.from_intervals([y[0].sqr() - 2.0]),
        deriv=lambda _x, y: IntervalMatrix.from_rows([[y[0] * 2.0]]),
    )
    cert = newton_verify(f, IntervalBox([0.0], [0.0]), IntervalBox([1.3], [1.5]))
    ok = (cert.verified and cert.refined[0].width <= 1e-12
          and cert.refined[0].contains(1.4142135623730951))
    report(3, ok, f"width={cert.refined[0].width!r} ({time.time()-t0:.3f}s)")
    assert ok


def test_criterion_4_flow_jet_rotation():
    t0 = time.time()
    field = VectorFieldDef(2, PolyMap(3, [[(1.0, (0, 0, 1))], [(-1.0, (0, 1, 0))]]))
    j = flow_jet(field, Jet2Enclosure.identity(IntervalBox([1.0, 0.0], [1.0, 0.0])),
                 Interval(0.0, 0.0), math.pi / 2,
                 FlowSettings(taylor_order=14, initial_step=0.25))
    th = math.pi / 2
    rot = np.array([[math.cos(th), math.sin(th)], [-math.sin(th), math.cos(th)]])
    val_ok = j.value[0].contains(0.0) and j.value[1].contains(-1.0) \
        and float(np.max(j.value.width())) <= 1e-8
    d1_ok = j.dstate().contains_matrix(rot) and j.dstate().max_width() <= 1e-8
    d2_ok = bool(np.all(j.d2lo <= 0.0) and np.all(0.0 <= j.d2hi))
    ok = val_ok and d1_ok and d2_ok
    report(4, ok, f"value_w={float(np.max(j.value.width())):.2e}, "
                  f"d1_w={j.dstate().max_width():.2e} ({time.time()-t0:.2f}s)")
    assert val_ok and d1_ok and d2_ok


def test_criterion_5_conservation():
    from splitcert.lerman import LUConfig, integrals_HK, lu_field

    t0 = time.time()
    cfg = LUConfig()
    field = lu_field(cfg)
    settings = FlowSettings(taylor_order=14, initial_step=0.25)
    rng = np.random.RandomState(20240817)
    ok = True
    worst = 0.0
    for _ in range(10):
        x0 = rng.uniform(-1.0, 1.0, 4)
        x0 *= rng.uniform(0.05, 0.5) / np.linalg.norm(x0)
        h0, k0 = integrals_HK(cfg, IntervalBox.point(x0))
        j = flow_jet(field, Jet2Enclosure.identity(IntervalBox.point(x0)),
                     Interval(0.0, 0.0), 1.0, settings)
        h1, k1 = integrals_HK(cfg, j.value)
        ok = ok and h1.intersect(h0) is not None and k1.intersect(k0) is not None
        ok = ok and h1.width <= 1e-6 and k1.width <= 1e-6
        worst = max(worst, h1.width, k1.width)
    dt = time.time() - t0
    ok = ok and dt < 30.0
    report(5, ok, f"worst enclosure width {worst:.2e}, runtime {dt:.1f}s < 30s")
    assert ok


def test_criterion_6_implicit_derivatives():
    t0 = time.time()
    # g = k^3 + k - (1+eps) x, analytic derivatives of the closed-form root
    pm = PolyMap(3, [[(1.0, (0, 0, 3)), (1.0, (0, 0, 1)), (-1.0, (0, 1, 0)), (-1.0, (1, 1, 0))]])
    g = GOracle(1, 1, lambda X, K: pm.jet(X.concat(K)))
    X = IntervalBox([0.0, 0.0], [0.1, 0.3])
    enc = implicit_enclose(g, X, IntervalBox([-0.1], [0.45]), k0=[0.15])
    firsts = implicit_first(g, X, enc.image)
    mixed = implicit_mixed_second(g, X, enc.image, firsts)

    def cubic_root(t):
        k = t
        for _ in range(80):
            k -= (k**3 + k - t) / (3 * k * k + 1)
        return k

    rng = np.random.RandomState(7)
    ok = True
    for _ in range(20):
        eps = rng.uniform(0.0, 0.1)
        x = rng.uniform(0.0, 0.3)
        k = cubic_root((1 + eps) * x)
        q = 3 * k * k + 1
        dk_de = x / q
        dk_dx = (1 + eps) / q
        mix = (q - 6 * k * x * (1 + eps) / q) / (q * q)
        ok = ok and firsts[0][0, 0].contains(dk_de)
        ok = ok and firsts[1][0, 0].contains(dk_dx)
        ok = ok and mixed[0, 0].contains(mix)
    dt = time.time() - t0
    ok = ok and dt < 1.0
    report(6, ok, f"containment at 20 samples, runtime {dt:.2f}s < 1s")
    assert ok


@pytest.mark.acceptance_long
def test_criterion_7_end_to_end_theorem(tmp_path):
    """Faithful end-to-end reproduction attempt at the published constants.

    EXPECTED RED: the printed perturbation conserves the integral K exactly,
    so the true mixed-derivative block is singular and ~22x smaller than the
    published one; neither the primary check nor the declared fallback can
    pass (README, worked-example section, has the full analysis).  The
    pipeline output written by this test documents the honestly computed
    enclosures.
    """
    from splitcert.cli import main_lu_verify
    from splitcert.lerman import LUConfig, midpoint_mixed_second

    t0 = time.time()
    cfg_doc = {
        "epsMax": 1e-7, "R": 1e-5, "T": 9.0,
        "localRadius": 1.5e-4, "lipschitz": 1e-8, "secondDerivBound": 3.518e-5,
        "flow": {"taylorOrder": 18, "initialStep": 0.25},
    }
    cfg_path = tmp_path / "lu.json"
    cfg_path.write_text(json.dumps(cfg_doc))
    out_path = tmp_path / "certificate.json"
    rc = main_lu_verify(["--config", str(cfg_path), "--out", str(out_path)])
    doc = json.loads(out_path.read_text())
    runtime = time.time() - t0

    a22 = doc["blocks"]["A22"]
    contains_mids = a22 is not None and all(
        a22[i][j][0] <= A22_MIDS[i, j] <= a22[i][j][1] for i in range(2) for j in range(2)
    )
    primary = rc == 0 and doc["verdict"] == "verified" and contains_mids

    fallback_ok = False
    if not primary:
        # declared fallback, part (b): nonrigorous midpoint pipeline values of
        # the mixed second derivative vs the published midpoints, rel err 1e-2
        mids = midpoint_mixed_second(LUConfig())
        rel = np.max(np.abs(mids - A22_MIDS) / np.abs(A22_MIDS))
        report(7, False, f"primary failed (verdict={doc['verdict']}); fallback (b) midpoint "
                         f"rel err {rel:.3f} > 1e-2; computed mids {mids.tolist()}; "
                         f"runtime {runtime:.0f}s")
        # part (a) (verified run at reduced T) is moot once (b) fails, since
        # the fallback requires both
        fallback_ok = rel <= 1e-2
    else:
        report(7, True, f"verified, margin {doc['margins']}, runtime {runtime:.0f}s")
    assert runtime <= 1800.0
    assert primary or fallback_ok, (
        "criterion 7 unattainable as stated: the printed perturbation "
        "conserves K exactly, making the published A22 irreproducible "
        "(see the README worked-example analysis); rigorous enclosure computed: "
        f"{a22}"
    )


def test_criterion_8_property_suites():
    t0 = time.time()
    from splitcert import kernels as ku

    # interval containment, 1e5 randomized cases, zero violations
    rng = np.random.RandomState(99)
    n = 100_000
    alo = rng.uniform(-10, 10, n)
    ahi = alo + rng.uniform(0, 5, n)
    blo = rng.uniform(-10, 10, n)
    bhi = blo + rng.uniform(0, 5, n)
    x = rng.uniform(alo, ahi)
    y = rng.uniform(blo, bhi)
    violations = 0
    for op, ref in [(ku.vadd, x + y), (ku.vsub, x - y), (ku.vmul, x * y)]:
        lo, hi = op(alo, ahi, blo, bhi)
        violations += int(np.sum((lo > ref) | (ref > hi)))
    lo, hi = ku.vsqr(alo, ahi)
    violations += int(np.sum((lo > x * x) | (x * x > hi)))
    mask = (blo > 0.1) | (bhi < -0.1)
    lo, hi = ku.vdiv(alo[mask], ahi[mask], blo[mask], bhi[mask])
    violations += int(np.sum((lo > x[mask] / y[mask]) | (x[mask] / y[mask] > hi)))
    ok_containment = violations == 0

    # verify_practical monotonicity: widening never flips failed -> verified
    rng = np.random.RandomState(41)
    flips = 0
    for _ in range(1000):
        m_a = float(rng.uniform(0.1, 3.0))
        nd = float(rng.uniform(0.0, 3.0))
        b = float(rng.uniform(0.0, 0.5))
        r = float(rng.uniform(0.01, 1.0))

        def cert(extra_a, extra_d, extra_b):
            return verify_practical(MelnikovCertificate(
                k1=0, k2=1, p=np.zeros(1), R=r, eps_max=1.0,
                A22=IntervalMatrix.from_rows([[Interval(m_a - extra_a, m_a + extra_a)]]),
                Delta2=IntervalMatrix.from_rows([[Interval(-nd - extra_d, nd + extra_d)]]),
                eps_deriv_bound_2=b + extra_b,
            ))

        base = cert(0.0, 0.0, 0.0)
        wide = cert(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1))
        if base.verdict == "failed" and wide.verdict == "verified":
            flips += 1
    ok_monotone = flips == 0

    # boundary exclusion for y = (x1, eps x2) at depth 0
    pm = PolyMap(3, [[(1.0, (0, 1, 0))], [(1.0, (1, 0, 1))]])
    oracle = DistanceOracle(
        jet=lambda e, xb: pm.jet(IntervalBox(np.concatenate([[e.lo], xb.lo]),
                                             np.concatenate([[e.hi], xb.hi]))),
        k1=1, k2=1)
    bcert = verify_boundary_exclusion(oracle, IntervalBox([-1.0, -1.0], [1.0, 1.0]),
                                      eps_max=1.0, boundary_depth=0)
    ok_boundary = bcert.verified

    dt = time.time() - t0
    ok = ok_containment and ok_monotone and ok_boundary and dt < 60.0
    report(8, ok, f"containment violations={violations}, monotonicity flips={flips}, "
                  f"boundary depth0 verified={bcert.verified}, runtime {dt:.1f}s < 60s")
    assert ok_containment and ok_monotone and ok_boundary
    assert dt < 60.0
