"""Modular category data for the S3 double.

Holds fusion multiplicities, quantum dimensions, R-symbols and F-symbols for
the eight anyons A..H, verifies their consistency (pentagon/hexagon/
unitarity), and evaluates the interferometry amplitudes used by the remote
measurement protocols.

Conventions
-----------
F-symbols follow the standard left-comb re-association

    (a b)_e c -> d   =   sum_f  [F^{abc}_d]_{ef}   a (b c)_f -> d

with all entries touching the vacuum A equal to 1.  R^{ab}_c is the phase
picked up when the (a, b -> c) splitting vertex is braided into (b, a -> c).
The pentagon identity reads

    [F^{fcd}_e]_{gl} [F^{abl}_e]_{fk}
        = sum_h [F^{abc}_g]_{fh} [F^{ahd}_e]_{gk} [F^{bcd}_k]_{hl}

and the two hexagon identities read (the second with R conjugated)

    R^{ca}_e [F^{acb}_d]_{eg} R^{cb}_g
        = sum_f [F^{cab}_d]_{ef} R^{cf}_d [F^{abc}_d]_{fg}.

The numerical table ships in ``data/fr_table.txt``.  Entries are certified
against an independent representation-theoretic construction: intertwiners of
the double's module tensor products give the same data up to a phase gauge,
so all gauge-invariant combinations (|F| magnitudes, monodromies, twists)
must agree — see :func:`derive_gauge_invariants`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from . import algebra
from .algebra import ANYONS, ELEMENTS, MU, SIGMA, E, QUANTUM_DIMS, double_matrix

# Internal-pair subspaces of the four-anyon logical qutrit (total charge G).
U_PAIRS = (("A", "G"), ("G", "G"), ("G", "A"))
U_PERP1_PAIRS = (("F", "C"), ("H", "F"), ("C", "H"))
U_PERP2_PAIRS = (("C", "F"), ("F", "H"), ("H", "C"))


class CategoryError(ValueError):
    pass


@dataclass(frozen=True)
class CategoryData:
    """Complete (N, d, R, F) data over a set of anyon labels."""

    anyons: tuple
    N: dict  # (a, b, c) -> 0/1
    dims: dict  # a -> int
    R: dict  # (a, b, c) -> complex phase
    F: dict  # (a, b, c, d, e, f) -> complex

    def outcomes(self, a: str, b: str) -> tuple:
        return tuple(c for c in self.anyons if self.N.get((a, b, c), 0))

    def f_entry(self, a, b, c, d, e, f) -> complex:
        return self.F.get((a, b, c, d, e, f), 0j)

    def f_matrix(self, a, b, c, d):
        """(matrix, row labels e, column labels f) for fixed outer labels."""
        es = tuple(e for e in self.outcomes(a, b) if self.N.get((e, c, d), 0))
        fs = tuple(f for f in self.outcomes(b, c) if self.N.get((a, f, d), 0))
        mat = np.array(
            [[self.f_entry(a, b, c, d, e, f) for f in fs] for e in es], dtype=complex
        )
        return mat, es, fs

    def r_symbol(self, a, b, c) -> complex:
        return self.R[a, b, c]


def _parse_records(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "F" and len(parts) == 9:
            labels, re_s, im_s = parts[1:7], parts[7], parts[8]
        elif kind == "R" and len(parts) == 6:
            labels, re_s, im_s = parts[1:4], parts[4], parts[5]
        else:
            raise CategoryError(f"malformed record at line {lineno}: {line!r}")
        yield kind, tuple(labels), complex(float(re_s), float(im_s))


def load_category(text: str) -> CategoryData:
    """Parse an F/R table and combine it with the derived fusion rules."""
    Ntab = algebra.derive_fusion_rules()
    if any(n > 1 for n in Ntab.values()):
        raise CategoryError("fusion multiplicities above 1 are not supported")
    R, F = {}, {}
    for kind, labels, value in _parse_records(text):
        if kind == "R":
            R[labels] = value
        else:
            F[labels] = value
    return CategoryData(tuple(ANYONS), dict(Ntab), dict(QUANTUM_DIMS), R, F)


@lru_cache(maxsize=1)
def default_category() -> CategoryData:
    text = resources.files("s3double").joinpath("data/fr_table.txt").read_text()
    return load_category(text)


def restrict(data: CategoryData, anyons) -> CategoryData:
    """Sub-table over a fusion-closed subset of labels (e.g. the vacuum)."""
    keep = tuple(anyons)
    sub = set(keep)
    return CategoryData(
        keep,
        {k: v for k, v in data.N.items() if sub.issuperset(k)},
        {a: data.dims[a] for a in keep},
        {k: v for k, v in data.R.items() if sub.issuperset(k)},
        {k: v for k, v in data.F.items() if sub.issuperset(k)},
    )


# ---------------------------------------------------------------------------
# Consistency verification


@dataclass(frozen=True)
class ConsistencyReport:
    pentagon: float
    hexagon: float
    unitarity: float
    vacuum: float

    @property
    def max_residual(self) -> float:
        return max(self.pentagon, self.hexagon, self.unitarity, self.vacuum)

    def passes(self, tol: float = 1e-9) -> bool:
        return self.max_residual < tol


def _check_complete(data: CategoryData):
    for a, b in itertools.product(data.anyons, repeat=2):
        for c in data.outcomes(a, b):
            if (a, b, c) not in data.R:
                raise CategoryError(f"missing R entry {(a, b, c)}")
    for a, b, c, d in itertools.product(data.anyons, repeat=4):
        mat, es, fs = data.f_matrix(a, b, c, d)
        for i, e in enumerate(es):
            for j, f in enumerate(fs):
                if (a, b, c, d, e, f) not in data.F:
                    raise CategoryError(f"missing F entry {(a, b, c, d, e, f)}")


def verify_consistency(data: CategoryData) -> ConsistencyReport:
    """Max pentagon/hexagon/unitarity/vacuum residuals over all admissible
    label tuples."""
    _check_complete(data)
    labels = data.anyons
    N = lambda a, b, c: data.N.get((a, b, c), 0)
    Fel = data.f_entry

    unit = vac = 0.0
    for a, b, c, d in itertools.product(labels, repeat=4):
        mat, es, fs = data.f_matrix(a, b, c, d)
        if not es and not fs:
            continue
        if len(es) != len(fs):
            raise CategoryError(f"non-square F block {(a, b, c, d)}")
        if len(es):
            unit = max(
                unit,
                float(
                    np.max(np.abs(mat @ mat.conj().T - np.eye(len(es))))
                ),
            )
        if "A" in (a, b, c):
            vac = max(vac, float(np.max(np.abs(mat - np.eye(len(es))))))

    pent = 0.0
    for a, b, c, d, e in itertools.product(labels, repeat=5):
        for f in data.outcomes(a, b):
            for g in labels:
                if not (N(f, c, g) and N(g, d, e)):
                    continue
                for l in data.outcomes(c, d):
                    if not N(f, l, e):
                        continue
                    for k in labels:
                        if not (N(b, l, k) and N(a, k, e)):
                            continue
                        lhs = Fel(f, c, d, e, g, l) * Fel(a, b, l, e, f, k)
                        rhs = sum(
                            Fel(a, b, c, g, f, h)
                            * Fel(a, h, d, e, g, k)
                            * Fel(b, c, d, k, h, l)
                            for h in labels
                        )
                        pent = max(pent, abs(lhs - rhs))

    hexa = 0.0
    Rc = {k: v.conjugate() for k, v in data.R.items()}
    for a, b, c, d in itertools.product(labels, repeat=4):
        for e in data.outcomes(a, c):
            if not N(e, b, d):
                continue
            for g in data.outcomes(c, b):
                if not N(a, g, d):
                    continue
                lhs = (
                    data.R.get((c, a, e), 0)
                    * Fel(a, c, b, d, e, g)
                    * data.R.get((c, b, g), 0)
                )
                rhs = sum(
                    Fel(c, a, b, d, e, f)
                    * data.R.get((c, f, d), 0)
                    * Fel(a, b, c, d, f, g)
                    for f in labels
                )
                hexa = max(hexa, abs(lhs - rhs))
                # second hexagon: inverse braiding, R labels transposed
                lhs = (
                    Rc.get((a, c, e), 0)
                    * Fel(a, c, b, d, e, g)
                    * Rc.get((b, c, g), 0)
                )
                rhs = sum(
                    Fel(c, a, b, d, e, f)
                    * Rc.get((f, c, d), 0)
                    * Fel(a, b, c, d, f, g)
                    for f in labels
                )
                hexa = max(hexa, abs(lhs - rhs))

    return ConsistencyReport(pent, hexa, unit, vac)


# ---------------------------------------------------------------------------
# Fusion and interferometry amplitudes


def fusion_probability(a: str, b: str, c: str, data: CategoryData = None) -> float:
    """Probability of outcome c when fusing a x b with mixed local state."""
    data = data or default_category()
    return data.N.get((a, b, c), 0) * data.dims[c] / (data.dims[a] * data.dims[b])


def interferometry_amplitude(x: str, z: str, w: str, data: CategoryData = None) -> complex:
    """Amplitude I_{x;z,w}: a z-pair created from vacuum, one braided around
    x, the pair fused to w."""
    data = data or default_category()
    total = 0j
    for wp in data.outcomes(z, x):
        # full z-loop around x: double R-move = monodromy phase in channel wp
        mono = data.r_symbol(z, x, wp) * data.r_symbol(x, z, wp)
        total += (
            np.sqrt(data.dims[wp] / (data.dims[z] * data.dims[x]))
            * mono
            * data.f_entry(z, x, x, z, wp, w)
        )
    return total


def u_measurement_amplitude(
    x: str, y: str, z: str, w: str, data: CategoryData = None
) -> complex:
    """Amplitude for the intermediate computational-subspace measurement on an
    internal pair (x, y): the probe-pair outcome w is fused into the tree's
    total-charge line."""
    data = data or default_category()
    valid = set(U_PAIRS) | set(U_PERP1_PAIRS) | set(U_PERP2_PAIRS)
    if (x, y) not in valid:
        raise CategoryError(f"({x},{y}) is not an internal pair of the qutrit space")
    return interferometry_amplitude(x, z, w, data) * data.f_entry(
        w, x, y, "G", x, "G"
    )


def local_error_phase(
    z: str, a: str, b: str, c: str, w: str, data: CategoryData = None
) -> complex:
    """Phase acquired when a stray local pair (a) with internal labels (b, c)
    braids through the probe loop of charge z with outcome w."""
    data = data or default_category()
    d = data.dims
    total = 0j
    for bp in data.anyons:
        for cp in data.outcomes(a, z):
            if not data.N.get((bp, cp, z), 0):
                continue
            mono = data.r_symbol(a, z, cp) * data.r_symbol(z, a, cp)
            total += (
                np.sqrt(d[bp] * d[c] / d[a])
                * (d[cp] / (d[z] * d[a]))
                * mono
                * data.f_entry(a, a, c, w, b, bp)
                * data.f_entry(c, bp, cp, z, a, z)
                * data.f_entry(bp, w, z, cp, a, z)
            )
    return total


# ---------------------------------------------------------------------------
# Representation-theoretic oracle: intertwiner construction of raw F/R data


def _group_matrix(a: str, g) -> np.ndarray:
    return sum(double_matrix(a, h, g) for h in ELEMENTS)


@lru_cache(maxsize=None)
def intertwiner(a: str, b: str, c: str):
    """Isometric intertwiner V_a (x) V_b -> V_c in a deterministic phase
    convention, or None if the fusion channel is absent."""
    da, db, dc = QUANTUM_DIMS[a], QUANTUM_DIMS[b], QUANTUM_DIMS[c]
    blocks = []
    gens = [("d", h) for h in ELEMENTS] + [("g", MU), ("g", SIGMA)]
    for kind, x in gens:
        if kind == "d":
            m_ab = algebra.tensor_matrix(a, b, x, E)
            m_c = double_matrix(c, x, E)
        else:
            m_ab = np.kron(_group_matrix(a, x), _group_matrix(b, x))
            m_c = _group_matrix(c, x)
        blocks.append(
            np.kron(m_c, np.eye(da * db)) - np.kron(np.eye(dc), m_ab.T)
        )
    _, s, vh = np.linalg.svd(np.vstack(blocks))
    null_dim = int(np.sum(s < 1e-9))
    expected = algebra.derive_fusion_rules()[a, b, c]
    if null_dim != expected:
        raise CategoryError(
            f"intertwiner count {null_dim} != multiplicity {expected} for {(a, b, c)}"
        )
    if null_dim == 0:
        return None
    T = vh[-1].conj().reshape(dc, da * db)
    scale = np.trace(T @ T.conj().T).real / dc
    T = T / np.sqrt(scale)
    flat = T.reshape(-1)
    lead = flat[int(np.argmax(np.abs(flat) > 0.3))]
    return T * (abs(lead) / lead)


def _splitting(a, b, c):
    return intertwiner(a, b, c).conj().T


@lru_cache(maxsize=1)
def raw_symbols():
    """(F, R) tables computed directly from intertwiners.

    Same category as the embedded table but in the construction's own phase
    gauge; gauge-invariant combinations coincide.
    """
    Ntab = algebra.derive_fusion_rules()
    dims = QUANTUM_DIMS
    F, R = {}, {}
    outcomes = algebra.fusion_outcomes

    def swap(da, db):
        S = np.zeros((db * da, da * db))
        for i in range(da):
            for j in range(db):
                S[j * da + i, i * db + j] = 1
        return S

    for a, b in itertools.product(ANYONS, repeat=2):
        da, db = dims[a], dims[b]
        braid = np.zeros((da * db, da * db), dtype=complex)
        for h in ELEMENTS:
            braid += np.kron(_group_matrix(a, h), double_matrix(b, h, E))
        braid = swap(da, db) @ braid
        for c in outcomes(a, b):
            R[a, b, c] = complex(
                np.trace(_splitting(b, a, c).conj().T @ braid @ _splitting(a, b, c))
                / dims[c]
            )
        for c, d in itertools.product(ANYONS, repeat=2):
            es = [e for e in outcomes(a, b) if Ntab[e, c, d]]
            fs = [f for f in outcomes(b, c) if Ntab[a, f, d]]
            for e in es:
                left = np.kron(_splitting(a, b, e), np.eye(dims[c])) @ _splitting(
                    e, c, d
                )
                for f in fs:
                    right = np.kron(np.eye(da), _splitting(b, c, f)) @ _splitting(
                        a, f, d
                    )
                    F[a, b, c, d, e, f] = complex(
                        np.trace(right.conj().T @ left) / dims[d]
                    )
    return F, R


@dataclass(frozen=True)
class OracleReport:
    dim_residual: float
    magnitude_residual: float
    monodromy_residual: float
    twist_residual: float
    worst_entry: tuple

    @property
    def max_residual(self) -> float:
        return max(
            self.dim_residual,
            self.magnitude_residual,
            self.monodromy_residual,
            self.twist_residual,
        )

    def passes(self, tol: float = 1e-9) -> bool:
        return self.max_residual < tol


def derive_gauge_invariants(data: CategoryData = None) -> OracleReport:
    """Cross-check the embedded table against the intertwiner construction.

    Compares everything that is independent of the phase gauge: quantum
    dimensions (from intertwiner counts), |F| entry magnitudes, monodromies
    R^{ab}_c R^{ba}_c, and twists theta_a = sum_c (d_c/d_a) R^{aa}_c.
    """
    data = data or default_category()
    raw_F, raw_R = raw_symbols()

    dim_res = 0.0
    for a in ANYONS:
        count = sum(
            QUANTUM_DIMS[c]
            for c in algebra.fusion_outcomes(a, a)
        )
        dim_res = max(dim_res, abs(count - QUANTUM_DIMS[a] ** 2))

    mag_res, worst = 0.0, None
    for key, val in raw_F.items():
        diff = abs(abs(val) - abs(data.F.get(key, 0j)))
        if diff > mag_res:
            mag_res, worst = diff, key
    for key in data.F:
        if key not in raw_F:
            mag_res, worst = max(mag_res, abs(data.F[key])), key

    mono_res = twist_res = 0.0
    for (a, b, c), val in raw_R.items():
        mono = val * raw_R[b, a, c]
        mono_res = max(mono_res, abs(mono - data.R[a, b, c] * data.R[b, a, c]))
    for a in ANYONS:
        raw_twist = sum(
            QUANTUM_DIMS[c] / QUANTUM_DIMS[a] * raw_R[a, a, c]
            for c in algebra.fusion_outcomes(a, a)
        )
        tab_twist = sum(
            QUANTUM_DIMS[c] / QUANTUM_DIMS[a] * data.R[a, a, c]
            for c in algebra.fusion_outcomes(a, a)
        )
        twist_res = max(twist_res, abs(raw_twist - tab_twist))

    return OracleReport(dim_res, mag_res, mono_res, twist_res, worst)
