"""Qudit CSS codes and the fault-tolerant logical controlled charge
conjugation between a qubit Shor code and a qutrit CSS code.

A block-structured [[n^2, 1, n]] qubit Shor code controls a length-n qutrit
CSS code: each n-qubit block is uniformly 0 or 1 on every codeword, so a
transversal controlled-conjugation layer per block conjugates the qutrit
code zero or one times, and an odd number of blocks makes the net logical
action exactly one conjugation per logical qubit value (2^q mod 3 is 1 for
even q and 2 for odd q).  Qutrit error correction between the layers keeps
single physical faults from propagating.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import circuits as cir

OMEGA3 = np.exp(2j * np.pi / 3)


class CodeError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Linear algebra over F_p


def _as_matrix(rows, n):
    m = np.array(rows, dtype=np.int64)
    if m.size == 0:
        return np.zeros((0, n), dtype=np.int64)
    return m.reshape(-1, n)


def rref(matrix, p):
    """Reduced row-echelon form over F_p; returns (rows, pivot columns)."""
    m = np.array(matrix, dtype=np.int64) % p
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        hits = [i for i in range(r, rows) if m[i, c] % p]
        if not hits:
            continue
        m[[r, hits[0]]] = m[[hits[0], r]]
        m[r] = (m[r] * pow(int(m[r, c]), p - 2, p)) % p
        for i in range(rows):
            if i != r and m[i, c]:
                m[i] = (m[i] - m[i, c] * m[r]) % p
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m[:r], pivots


def rank(matrix, p) -> int:
    return rref(matrix, p)[0].shape[0]


def in_rowspan(matrix, vector, p) -> bool:
    base = rank(matrix, p)
    stacked = np.vstack([_as_matrix(matrix, len(vector)), np.array(vector) % p])
    return rank(stacked, p) == base


def span_vectors(matrix, p):
    """All p^rank vectors in the row span (small ranks only)."""
    basis, _ = rref(matrix, p)
    m = basis.shape[0]
    if p**m > 4096:
        raise CodeError("row span too large to enumerate")
    out = []
    for coeff in itertools.product(range(p), repeat=m):
        out.append(tuple((np.array(coeff) @ basis) % p) if m else tuple([0] * matrix.shape[1]))
    return sorted(set(out))


def kernel_basis(matrix, p):
    """Basis of {v : matrix v = 0 (mod p)}."""
    m = _as_matrix(matrix, matrix.shape[1] if matrix.ndim == 2 else 0)
    n = m.shape[1]
    red, pivots = rref(m, p)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(n, dtype=np.int64)
        v[f] = 1
        for row, c in zip(red, pivots):
            v[c] = (-row[f]) % p
        basis.append(v)
    return np.array(basis, dtype=np.int64).reshape(len(basis), n)


def schur_product(u, v, p=3):
    """Component-wise product over F_p."""
    return tuple((np.array(u) * np.array(v)) % p)


def pow2_mod3(q: int) -> int:
    """2^q mod 3: 1 for even q, 2 for odd q."""
    return pow(2, q, 3)


# ---------------------------------------------------------------------------
# CSS codes


@dataclass(frozen=True, eq=False)
class QuditCSSCode:
    """CSS code over F_p from X- and Z-type parity-check matrices."""

    p: int
    n: int
    H_X: np.ndarray
    H_Z: np.ndarray

    def __post_init__(self):
        if self.p not in (2, 3):
            raise CodeError("only qubit (p=2) and qutrit (p=3) codes supported")
        object.__setattr__(self, "H_X", _as_matrix(self.H_X, self.n) % self.p)
        object.__setattr__(self, "H_Z", _as_matrix(self.H_Z, self.n) % self.p)
        if self.H_X.shape[1] != self.n or self.H_Z.shape[1] != self.n:
            raise CodeError("parity-check width does not match the length")
        if self.H_X.shape[0] and self.H_Z.shape[0]:
            if np.any((self.H_X @ self.H_Z.T) % self.p):
                raise CodeError("H_X and H_Z rows are not orthogonal")
        if self.k < 1:
            raise CodeError("code encodes no logical qudit")

    @property
    def k(self) -> int:
        return self.n - rank(self.H_X, self.p) - rank(self.H_Z, self.p)

    def logical_x_reps(self):
        """Minimum-weight coset representatives of ker(H_Z)/rowspan(H_X),
        one per logical qudit (length <= 9 only)."""
        if self.n > 9:
            raise CodeError("logical representatives enumerated for n <= 9 only")
        ker = kernel_basis(self.H_Z, self.p)
        candidates = sorted(
            span_vectors(ker, self.p),
            key=lambda v: (sum(1 for d in v if d), v),
        )
        reps, accepted = [], self.H_X
        for v in candidates:
            if not any(v):
                continue
            if in_rowspan(accepted, v, self.p):
                continue
            reps.append(np.array(v, dtype=np.int64))
            accepted = np.vstack([accepted, v])
            if len(reps) == self.k:
                return reps
        raise CodeError("failed to construct logical representatives")

    def distance(self):
        """Minimum weight over both logical-operator cosets (n <= 9 only;
        returns None for longer codes)."""
        if self.n > 9:
            return None
        best = self.n
        for ker, other in ((self.H_Z, self.H_X), (self.H_X, self.H_Z)):
            for v in span_vectors(kernel_basis(ker, self.p), self.p):
                w = sum(1 for d in v if d)
                if 0 < w < best and not in_rowspan(other, v, self.p):
                    best = w
        return best


def parse_parity_matrix(text: str, p: int) -> np.ndarray:
    """One row per line, space-separated F_p digits."""
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        digits = [int(t) for t in line.split()]
        if any(d < 0 or d >= p for d in digits):
            raise CodeError(f"digit out of range for F_{p}")
        rows.append(digits)
    if rows and len({len(r) for r in rows}) != 1:
        raise CodeError("ragged parity matrix")
    return np.array(rows, dtype=np.int64)


def format_parity_matrix(matrix) -> str:
    return "\n".join(" ".join(str(int(d)) for d in row) for row in matrix) + "\n"


def shor_code(n: int) -> QuditCSSCode:
    """[[n^2, 1, n]] qubit Shor code: X checks join adjacent n-blocks,
    Z checks join adjacent qubits within each block."""
    if n < 2:
        raise CodeError("block size must be at least 2")
    nn = n * n
    hx = np.zeros((n - 1, nn), dtype=np.int64)
    for i in range(n - 1):
        hx[i, i * n : (i + 2) * n] = 1
    hz = np.zeros((n * (n - 1), nn), dtype=np.int64)
    r = 0
    for b in range(n):
        for j in range(n - 1):
            hz[r, b * n + j] = 1
            hz[r, b * n + j + 1] = 1
            r += 1
    return QuditCSSCode(2, nn, hx, hz)


def qutrit_repetition_code() -> QuditCSSCode:
    """[[3, 1, 1]] qutrit phase-repetition code (Z checks only)."""
    return QuditCSSCode(3, 3, np.zeros((0, 3), dtype=np.int64), [[1, 2, 0], [0, 1, 2]])


def qutrit_shor_code() -> QuditCSSCode:
    """[[9, 1, 3]] qutrit analogue of the Shor code: Z checks are the
    difference pairs (1,-1,0), (0,1,-1) per 3-block; X checks are two rows
    of six 1's joining adjacent blocks."""
    hz = np.zeros((6, 9), dtype=np.int64)
    r = 0
    for b in range(3):
        for j in range(2):
            hz[r, 3 * b + j] = 1
            hz[r, 3 * b + j + 1] = 2
            r += 1
    hx = np.zeros((2, 9), dtype=np.int64)
    hx[0, 0:6] = 1
    hx[1, 3:9] = 1
    return QuditCSSCode(3, 9, hx, hz)


# ---------------------------------------------------------------------------
# Dense codewords (length <= 9)


def _check_dense(code):
    if code.p**code.n > 3**12:
        raise CodeError("code too long for dense codewords")


def codewords(code: QuditCSSCode, logical) -> np.ndarray:
    """Normalized equal superposition over the coset logical.x + rowspan(H_X)
    (qudit 0 is the most significant digit)."""
    _check_dense(code)
    if isinstance(logical, (int, np.integer)):
        logical = (int(logical),)
    logical = tuple(int(v) % code.p for v in logical)
    if len(logical) != code.k:
        raise CodeError(f"logical value must have {code.k} digits")
    reps = code.logical_x_reps()
    x = np.zeros(code.n, dtype=np.int64)
    for v, rep in zip(logical, reps):
        x = (x + v * rep) % code.p
    weights = code.p ** np.arange(code.n - 1, -1, -1)
    vec = np.zeros(code.p**code.n, dtype=complex)
    for y in span_vectors(code.H_X, code.p):
        vec[int(((x + np.array(y)) % code.p) @ weights)] += 1.0
    return vec / np.linalg.norm(vec)


@functools.lru_cache(maxsize=None)
def _digit_table(p, n):
    idx = np.arange(p**n)
    digits = np.zeros((p**n, n), dtype=np.int64)
    for j in range(n - 1, -1, -1):
        digits[:, j] = idx % p
        idx = idx // p
    return digits


@functools.lru_cache(maxsize=None)
def _qutrit_tables(n):
    digits = _digit_table(3, n)
    weights = 3 ** np.arange(n - 1, -1, -1)
    conj_perm = ((-digits) % 3) @ weights
    return digits, weights, conj_perm


def _pauli_vec_op(n, site, a, b):
    """Dense action of Xh^a Zh^b on qutrit `site` of an n-qutrit register:
    returns (perm, phase) with (O psi)[perm] = phase * psi."""
    digits, weights, _ = _qutrit_tables(n)
    shifted = digits.copy()
    shifted[:, site] = (shifted[:, site] + a) % 3
    perm = shifted @ weights
    phase = OMEGA3 ** (b * digits[:, site])
    return perm, phase


def _apply_vec_op(vec, perm, phase):
    out = np.zeros_like(vec)
    out[perm] = phase * vec
    return out


def _code_key(code):
    key = (code.p, code.n, code.H_X.tobytes(), code.H_Z.tobytes())
    _CODE_REGISTRY.setdefault(key, code)
    return key


@functools.lru_cache(maxsize=None)
def _stabilizer_ops_cached(key):
    code = _CODE_REGISTRY[key]
    _check_dense(code)
    digits = _digit_table(code.p, code.n)
    omega = np.exp(2j * np.pi / code.p)
    weights = code.p ** np.arange(code.n - 1, -1, -1)
    ops = []
    for h in code.H_Z:
        ops.append(("Z", omega ** (digits @ h % code.p)))
    for r in code.H_X:
        ops.append(("X", ((digits + r) % code.p) @ weights))
    return ops


def stabilizer_expectations(code: QuditCSSCode, vec):
    """<psi|S|psi> for every Z-type then X-type stabilizer row."""
    values = []
    for kind, arr in _stabilizer_ops_cached(_code_key(code)):
        if kind == "Z":
            values.append(complex(np.vdot(vec, arr * vec)))
        else:
            values.append(complex(np.vdot(vec, _apply_vec_op(vec, arr, 1.0))))
    return values


def _syndrome(code, vec):
    """Definite stabilizer syndrome of a state hit by a Pauli error."""
    syn = []
    for val in stabilizer_expectations(code, vec):
        if abs(abs(val) - 1) > 1e-9:
            raise CodeError("state has no definite syndrome")
        syn.append(int(np.round(np.angle(val) / (2 * np.pi / code.p))) % code.p)
    return tuple(syn)


def _equivalent_errors(code, e1, e2):
    """Weight<=1 errors are interchangeable when their difference is a
    stabilizer (X parts differ by a row of H_X, Z parts by a row of H_Z)."""
    diff_x = np.zeros(code.n, dtype=np.int64)
    diff_z = np.zeros(code.n, dtype=np.int64)
    s1, a1, b1 = e1
    s2, a2, b2 = e2
    diff_x[s1] += a1
    diff_x[s2] -= a2
    diff_z[s1] += b1
    diff_z[s2] -= b2
    return in_rowspan(code.H_X, diff_x % code.p, code.p) and in_rowspan(
        code.H_Z, diff_z % code.p, code.p
    )


@functools.lru_cache(maxsize=None)
def _correction_table_cached(key):
    code = _CODE_REGISTRY[key]
    base = codewords(code, 0)
    table = {_syndrome(code, base): (0, 0, 0)}
    for site in range(code.n):
        for a in range(3):
            for b in range(3):
                if (a, b) == (0, 0):
                    continue
                perm, phase = _pauli_vec_op(code.n, site, a, b)
                syn = _syndrome(code, _apply_vec_op(base, perm, phase))
                if syn in table:
                    if not _equivalent_errors(code, table[syn], (site, a, b)):
                        raise CodeError("inequivalent errors share a syndrome")
                    continue
                table[syn] = (site, a, b)
    return table


_CODE_REGISTRY = {}


def correction_table(code: QuditCSSCode):
    """syndrome tuple -> (site, a, b) of a weight<=1 error; defined when
    errors sharing a syndrome differ only by a stabilizer."""
    return _correction_table_cached(_code_key(code))


# ---------------------------------------------------------------------------
# Block-basis concatenated states


@dataclass
class ConcatState:
    """Joint state of an [[n^2,1,n]] Shor qubit code (compressed to one
    binary symbol per uniform n-block) and a dense n-qutrit register."""

    n: int
    qutrit_code: QuditCSSCode
    branches: dict  # block bit-string tuple -> (amplitude, pool index)
    pool: list = field(default_factory=list)  # unit-norm qutrit vectors
    memo: dict = field(default_factory=dict)  # (pool index, op token) -> pool index

    def copy(self):
        return ConcatState(
            self.n, self.qutrit_code, dict(self.branches), list(self.pool), dict(self.memo)
        )


def concat_state(n: int, alpha: int, beta: int, qutrit_code=None) -> ConcatState:
    """|alpha>_L |beta>_L in the block basis: the Shor codewords are exactly
    the uniform-block strings whose block pattern has parity alpha."""
    qutrit_code = qutrit_code or default_qutrit_code(n)
    if qutrit_code.n != n:
        raise CodeError("qutrit code length must equal the block count")
    amp = 1.0 / np.sqrt(2 ** (n - 1))
    vec = codewords(qutrit_code, beta % 3)
    branches = {
        bits: (amp, 0)
        for bits in itertools.product((0, 1), repeat=n)
        if sum(bits) % 2 == alpha % 2
    }
    return ConcatState(n, qutrit_code, branches, [vec])


def combine(s1: ConcatState, s2: ConcatState, c1, c2) -> ConcatState:
    """c1*s1 + c2*s2 for states with disjoint block patterns."""
    if set(s1.branches) & set(s2.branches):
        raise CodeError("block patterns overlap")
    pool = list(s1.pool)
    offset = len(pool)
    pool.extend(s2.pool)
    branches = {b: (c1 * a, i) for b, (a, i) in s1.branches.items()}
    branches.update({b: (c2 * a, i + offset) for b, (a, i) in s2.branches.items()})
    return ConcatState(s1.n, s1.qutrit_code, branches, pool)


def concat_inner(s1: ConcatState, s2: ConcatState) -> complex:
    total = 0.0
    for bits, (a1, i1) in s1.branches.items():
        if bits in s2.branches:
            a2, i2 = s2.branches[bits]
            total += np.conj(a1) * a2 * np.vdot(s1.pool[i1], s2.pool[i2])
    return complex(total)


def _transform_pool(state, selector, token, op):
    """Apply `op` (vector -> vector) to the branches chosen by `selector`,
    sharing transformed vectors across branches and across layers."""
    for bits, (amp, vid) in state.branches.items():
        if not selector(bits):
            continue
        if (vid, token) not in state.memo:
            state.pool.append(op(state.pool[vid]))
            state.memo[(vid, token)] = len(state.pool) - 1
        state.branches[bits] = (amp, state.memo[(vid, token)])


def apply_cc_block(state: ConcatState, block: int):
    """Transversal controlled-conjugation layer for one qubit block: every
    branch whose block symbol is 1 conjugates all n qutrits."""
    _, _, conj_perm = _qutrit_tables(state.n)
    _transform_pool(
        state,
        lambda bits: bits[block] == 1,
        "conj",
        lambda v: _apply_vec_op(v, conj_perm, 1.0),
    )


def apply_qutrit_pauli(state: ConcatState, site: int, a: int, b: int):
    """Physical Xh^a Zh^b error on one qutrit (acts on every branch)."""
    perm, phase = _pauli_vec_op(state.n, site, a, b)
    _transform_pool(
        state, lambda bits: True, f"pauli{site},{a},{b}", lambda v: _apply_vec_op(v, perm, phase)
    )


def error_correct(state: ConcatState):
    """Qutrit recovery: read the stabilizer syndrome of each distinct
    register vector and undo the unique weight<=1 error it identifies."""
    table = correction_table(state.qutrit_code)
    report = []
    corrections = {}
    for vid in sorted({vid for _, vid in state.branches.values()}):
        syn = _syndrome(state.qutrit_code, state.pool[vid])
        if syn not in table:
            report.append({"syndrome": syn, "correction": None})
            continue
        site, a, b = table[syn]
        report.append({"syndrome": syn, "correction": (site, a, b)})
        if (a, b) != (0, 0):
            corrections[vid] = (site, a, b)
    for vid, (site, a, b) in list(corrections.items()):
        # exact inverse of Xh^a Zh^b: shift back, then unwind the phase
        digits, weights, _ = _qutrit_tables(state.n)
        shifted = digits.copy()
        shifted[:, site] = (shifted[:, site] - a) % 3
        perm = shifted @ weights
        phase = OMEGA3 ** (-b * digits[:, site] % 3)
        _transform_pool(
            state,
            lambda bits, v=vid: state.branches[bits][1] == v,
            f"fix{site},{a},{b}",
            lambda vec: _apply_vec_op(vec, perm, phase),
        )
    return report


# ---------------------------------------------------------------------------
# Logical controlled conjugation


@dataclass(frozen=True, eq=False)
class GateSchedule:
    n: int
    qubit_code: QuditCSSCode
    qutrit_code: QuditCSSCode
    steps: tuple  # ("CC", block) | ("R",)


def default_qutrit_code(n: int) -> QuditCSSCode:
    if n == 3:
        return qutrit_repetition_code()
    if n == 9:
        return qutrit_shor_code()
    raise CodeError(f"no reference qutrit code of length {n}")


def logical_CC(n: int, qubit_code=None, qutrit_code=None) -> GateSchedule:
    """Schedule of n transversal controlled-conjugation layers (one per
    qubit block) interleaved with qutrit error correction."""
    if n % 2 == 0:
        raise CodeError(
            "even block count is rejected: 2^q mod 3 alternates with the "
            "parity of q, so only an odd number of blocks reproduces the "
            "logical conjugation"
        )
    qubit_code = qubit_code or shor_code(n)
    qutrit_code = qutrit_code or default_qutrit_code(n)
    if qubit_code.p != 2 or qubit_code.n != n * n or qubit_code.k != 1:
        raise CodeError("qubit side must be an [[n^2, 1, n]] code")
    if qutrit_code.p != 3 or qutrit_code.n != n or qutrit_code.k != 1:
        raise CodeError("qutrit side must be an [[n, 1, d]] code")
    steps = []
    for block in range(n):
        if block:
            steps.append(("R",))
        steps.append(("CC", block))
    return GateSchedule(n, qubit_code, qutrit_code, tuple(steps))


def apply_schedule(schedule: GateSchedule, state: ConcatState, errors=(), correct=True):
    """Run the schedule; `errors` lists (after_block, site, a, b) physical
    qutrit faults injected right after the given transversal layer."""
    state = state.copy()
    report = {"recoveries": [], "uncorrectable": 0}
    for step in schedule.steps:
        if step[0] == "CC":
            apply_cc_block(state, step[1])
            for after, site, a, b in errors:
                if after == step[1]:
                    apply_qutrit_pauli(state, site, a, b)
        elif correct:
            rec = error_correct(state)
            report["recoveries"].append(rec)
            report["uncorrectable"] += sum(1 for r in rec if r["correction"] is None)
    return state, report


def verify_logical_action(schedule: GateSchedule, errors=(), correct=True):
    """Largest deviation of |<expected|achieved>| from 1 over all logical
    basis pairs plus one two-branch superposition (phase coherence)."""
    worst = 0.0
    report = None
    for alpha in (0, 1):
        for beta in (0, 1, 2):
            inp = concat_state(schedule.n, alpha, beta, schedule.qutrit_code)
            out, report = apply_schedule(schedule, inp, errors, correct)
            want = concat_state(
                schedule.n, alpha, (1 + alpha) * beta % 3, schedule.qutrit_code
            )
            worst = max(worst, abs(1 - abs(concat_inner(want, out))))
    c = 1 / np.sqrt(2)
    inp = combine(
        concat_state(schedule.n, 0, 1, schedule.qutrit_code),
        concat_state(schedule.n, 1, 1, schedule.qutrit_code),
        c,
        c,
    )
    out, _ = apply_schedule(schedule, inp, errors, correct)
    want = combine(
        concat_state(schedule.n, 0, 1, schedule.qutrit_code),
        concat_state(schedule.n, 1, 2, schedule.qutrit_code),
        c,
        c,
    )
    worst = max(worst, abs(1 - abs(concat_inner(want, out))))
    return worst, report


_PAULI_NAMES = {"Xh": (1, 0), "Zh": (0, 1), "XhZh": (1, 1)}


def fault_tolerance_demo(
    n: int,
    error_site=None,
    error_kind=None,
    after_block: int = 1,
    qutrit_code=None,
    extra_errors=(),
):
    """Inject one physical qutrit Pauli between two transversal layers and
    report whether recovery restores the exact logical action."""
    schedule = logical_CC(n, qutrit_code=qutrit_code)
    d = schedule.qutrit_code.distance()
    if d is None or d < 3:
        raise CodeError(
            f"qutrit code distance {d} < 3: a single physical error is not "
            "guaranteed correctable, so the demonstration is rejected"
        )
    errors = tuple(extra_errors)
    if error_site is not None:
        if isinstance(error_kind, str):
            a, b = _PAULI_NAMES[error_kind]
        else:
            a, b = error_kind
        errors = ((after_block, int(error_site), a, b),) + errors
    deviation, report = verify_logical_action(schedule, errors)
    return {
        "n": n,
        "errors": errors,
        "deviation": deviation,
        "uncorrectable": report["uncorrectable"],
        "ok": deviation < 1e-9 and report["uncorrectable"] == 0,
    }


# ---------------------------------------------------------------------------
# Obstruction to the naive transversal construction


def schur_obstruction_check(code: QuditCSSCode, a=None):
    """Test whether component-wise multiplication by `a` preserves the
    codeword-support space ker(H_Z); with a=None, scan all vectors and
    report whether only scalar multiples of the identity survive."""
    if code.n > 9:
        raise CodeError("obstruction scan enumerated for n <= 9 only")
    basis = kernel_basis(code.H_Z, code.p)

    def in_space(vec):
        # the support space is exactly ker(H_Z)
        return not np.any(code.H_Z @ np.array(vec) % code.p) if code.H_Z.size else True

    def preserved(vec):
        return all(in_space(schur_product(vec, h, code.p)) for h in basis)

    def witness(vec):
        for h in basis:
            w = schur_product(vec, h, code.p)
            if not in_space(w):
                return {"a": tuple(int(d) for d in vec), "h": tuple(int(d) for d in h), "wedge": w}
        return None

    if a is not None:
        a = tuple(int(d) % code.p for d in a)
        return {"a": a, "preserved": preserved(a), "witness": witness(a)}
    preserving, first_witness = [], None
    for vec in itertools.product(range(code.p), repeat=code.n):
        if preserved(vec):
            preserving.append(vec)
        elif first_witness is None:
            first_witness = witness(vec)
    scalars = {tuple([c] * code.n) for c in range(code.p)}
    return {
        "preserving": tuple(preserving),
        "only_scalar_multiples": set(preserving) <= scalars,
        "witness": first_witness,
    }


def naive_transversal_check(qubit_code: QuditCSSCode, qutrit_code: QuditCSSCode):
    """Apply plain transversal controlled conjugation between two equal
    length codes and measure the leakage out of the joint code space."""
    if qubit_code.n != qutrit_code.n:
        raise CodeError("codes must share the same length")
    n = qubit_code.n
    if 2**n * 3**n > 2**8 * 3**8:
        raise CodeError("joint space too large")
    logical = [
        np.kron(codewords(qubit_code, al), codewords(qutrit_code, be))
        for al in range(2)
        for be in range(3)
    ]
    bits = _digit_table(2, n)
    digits, weights, _ = _qutrit_tables(n)
    dim3 = 3**n
    worst = 0.0
    for al in range(2):
        for be in range(3):
            vec = np.kron(codewords(qubit_code, al), codewords(qutrit_code, be))
            out = np.zeros_like(vec)
            for s in range(2**n):
                block = vec[s * dim3 : (s + 1) * dim3]
                if not block.any():
                    continue
                signs = np.where(bits[s] == 1, -1, 1)
                perm = ((digits * signs) % 3) @ weights
                out[s * dim3 : (s + 1) * dim3] = _apply_vec_op(block, perm, 1.0)
            proj = sum(v * np.vdot(v, out) for v in logical)
            worst = max(worst, float(np.linalg.norm(out - proj)))
    return {"leakage": worst}


# ---------------------------------------------------------------------------
# Serialization to the circuit text format


def schedule_to_circuit(schedule: GateSchedule) -> cir.AdaptiveCircuit:
    """Transversal gate layers of the schedule as an explicit circuit
    (n^2 qubit wires followed by n qutrit wires; recovery steps are
    measurement-and-feedback procedures and are not gate-serialized)."""
    n = schedule.n
    if n * n + n > 16:
        raise CodeError("circuit serialization limited to the n=3 instance")
    dims = (2,) * (n * n) + (3,) * n
    ops = []
    for step in schedule.steps:
        if step[0] != "CC":
            continue
        block = step[1]
        for j in range(n):
            ops.append(
                cir.Op("gate", gate="CC", wires=(block * n + j, n * n + j))
            )
    return cir.AdaptiveCircuit(dims, tuple(ops))
