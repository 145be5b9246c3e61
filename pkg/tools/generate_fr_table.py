"""Generate the embedded F/R table (src/s3double/data/fr_table.txt).

Starts from the raw intertwiner-derived F/R data in s3double.category, then
applies a vertex-phase gauge transformation

    F'[a,b,c,d,e,f] = u(a,b,e) u(e,c,d) / (u(b,c,f) u(a,f,d)) * F[...]
    R'[a,b,c]       = u(a,b,c) / u(b,a,c) * R[...]

with one phase u(a,b,c) per admissible fusion triple, chosen by least squares
so that the table lands in the gauge in which the reference values for
F^{GGG}_G, the B-vertex signs, and the interferometry amplitudes take their
standard published form.  Phases are snapped to exact multiples of pi/12
before freezing the table, and pentagon/hexagon/unitarity plus all target
values are re-verified on the final data.

Run:  python3 tools/generate_fr_table.py
"""

from __future__ import annotations

import itertools
import sys

import numpy as np
from scipy.optimize import least_squares

sys.path.insert(0, "src")

from s3double import algebra, category
from s3double.algebra import ANYONS, QUANTUM_DIMS

OMEGA = np.exp(2j * np.pi / 3)
RT2 = 1 / np.sqrt(2)
RT3 = np.sqrt(3)


def gauge_triples():
    N = algebra.derive_fusion_rules()
    return [k for k, v in N.items() if v]


def build_targets():
    """List of (kind, labels, value) the fitted gauge must satisfy."""
    t = []

    # Reference F entries.
    fggg = {
        ("A", "A"): 0.5, ("A", "B"): 0.5, ("A", "G"): RT2,
        ("B", "A"): 0.5, ("B", "B"): 0.5, ("B", "G"): -RT2,
        ("G", "A"): RT2, ("G", "B"): -RT2, ("G", "G"): 0.0,
    }
    for (e, f), v in fggg.items():
        t.append(("F", ("G", "G", "G", "G", e, f), v))
    t.append(("F", ("G", "D", "D", "G", "D", "G"), RT2))
    t.append(("F", ("G", "D", "D", "G", "E", "G"), -RT2))
    t.append(("F", ("B", "D", "D", "G", "E", "G"), 1))
    t.append(("F", ("B", "G", "G", "G", "G", "G"), -1))
    t.append(("F", ("B", "B", "G", "G", "A", "G"), 1))
    t.append(("F", ("A", "B", "G", "G", "B", "G"), 1))
    # note: I_{B;D,A} = M_{DB} [F^{DBB}_D]_{EA} with M_{DB} = -1 forces
    # [F^{DBB}_D]_{EA} = +1, so that entry is pinned via the I target below
    for x, y, v in [
        ("F", "C", -1), ("H", "F", 1), ("C", "H", 1),
        ("C", "F", -1), ("F", "H", 1), ("H", "C", -1),
    ]:
        t.append(("F", ("B", x, y, "G", x, "G"), v))

    # Interferometry amplitudes.
    t.append(("I", ("A", "D", "A"), 1))
    t.append(("I", ("B", "D", "A"), -1))
    t.append(("I", ("G", "D", "G"), OMEGA ** 2))
    ih = {
        ("A", "A"): 1, ("B", "A"): 1, ("G", "A"): 1,
        ("D", "H"): OMEGA ** 2, ("E", "H"): -OMEGA ** 2,
        ("C", "A"): -0.5, ("F", "A"): -0.5, ("H", "A"): -0.5,
        ("C", "B"): -0.5j * RT3, ("H", "B"): -0.5j * RT3,
        ("F", "B"): 0.5j * RT3,
    }
    N = algebra.derive_fusion_rules()
    for x in ANYONS:
        ws = {w for w in algebra.fusion_outcomes(x, x) if N["H", w, "H"]}
        # include every admissible w so absent entries are pinned to zero
        for w in sorted(ws):
            t.append(("I", (x, "H", w), ih.get((x, w), 0)))
    return t


def run_fit(rawF, rawR, seed):
    triples = gauge_triples()
    # Vacuum-touching triples stay at phase 1 so vacuum F entries remain 1.
    free = [k for k in triples if k[0] != "A" and k[1] != "A"]
    index = {k: i for i, k in enumerate(free)}
    targets = build_targets()

    def phases(theta):
        u = {k: 1.0 + 0j for k in triples}
        for k, i in index.items():
            u[k] = np.exp(1j * theta[i])
        return u

    def apply_gauge(theta):
        u = phases(theta)
        F = {
            (a, b, c, d, e, f): v
            * u[a, b, e] * u[e, c, d] / (u[b, c, f] * u[a, f, d])
            for (a, b, c, d, e, f), v in rawF.items()
        }
        R = {
            (a, b, c): v * u[a, b, c] / u[b, a, c]
            for (a, b, c), v in rawR.items()
        }
        return F, R

    def residuals(theta):
        F, R = apply_gauge(theta)
        data = category.CategoryData(
            tuple(ANYONS), algebra.derive_fusion_rules(), dict(QUANTUM_DIMS), R, F
        )
        res = []
        for kind, labels, value in targets:
            if kind == "F":
                cur = F[labels]
            else:
                cur = category.interferometry_amplitude(*labels, data=data)
            res.extend([(cur - value).real, (cur - value).imag])
        return np.array(res)

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(12):
        theta0 = rng.uniform(-np.pi, np.pi, len(free))
        sol = least_squares(
            residuals, theta0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15
        )
        if best is None or sol.cost < best.cost:
            best = sol
        if best.cost < 1e-24:
            break
    print(f"fit cost = {best.cost:.3e}")
    if best.cost > 1e-20:
        return None

    # Snap phases to exact multiples of pi/12 when that keeps the fit exact.
    theta = best.x.copy()
    snapped = np.round(theta / (np.pi / 12)) * (np.pi / 12)
    if np.max(np.abs(residuals(snapped))) < 1e-12:
        theta = snapped
        print("phases snapped to multiples of pi/12")
    else:
        print("snap rejected; keeping fitted phases")
    print(f"max target residual = {np.max(np.abs(residuals(theta))):.3e}")
    return apply_gauge(theta)


def main():
    rawF, rawR = category.raw_symbols()
    fitted = run_fit(rawF, rawR, seed=7)
    if fitted is None:
        # Mirror orientation: conjugating F and R preserves pentagon/hexagon.
        print("retrying with conjugated raw data")
        rawF = {k: v.conjugate() for k, v in rawF.items()}
        rawR = {k: v.conjugate() for k, v in rawR.items()}
        fitted = run_fit(rawF, rawR, seed=7)
    if fitted is None:
        raise SystemExit("gauge fit failed in both orientations")
    F, R = fitted

    data = category.CategoryData(
        tuple(ANYONS), algebra.derive_fusion_rules(), dict(QUANTUM_DIMS), R, F
    )
    report = category.verify_consistency(data)
    print(
        f"pentagon {report.pentagon:.2e}  hexagon {report.hexagon:.2e}  "
        f"unitarity {report.unitarity:.2e}  vacuum {report.vacuum:.2e}"
    )
    assert report.passes(1e-10), "consistency check failed on fitted data"

    def clean(z):
        z = complex(z)
        re = 0.0 if abs(z.real) < 1e-14 else z.real
        im = 0.0 if abs(z.imag) < 1e-14 else z.imag
        return re, im

    lines = [
        "# F and R symbols for the S3 double in the reference phase gauge.",
        "# F a b c d e f re im   --  [F^{abc}_d]_{ef}",
        "# R a b c re im         --  R^{ab}_c",
    ]
    for key in sorted(R):
        re, im = clean(R[key])
        lines.append(f"R {' '.join(key)} {re!r} {im!r}")
    for key in sorted(F):
        re, im = clean(F[key])
        lines.append(f"F {' '.join(key)} {re!r} {im!r}")
    out = "src/s3double/data/fr_table.txt"
    with open(out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {len(R)} R and {len(F)} F records to {out}")


if __name__ == "__main__":
    main()
