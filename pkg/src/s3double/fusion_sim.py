"""Anyonic state simulator over fusion trees for the S3 double.

States are superpositions of fusion trees with a fixed binary shape over a
fixed leaf sequence.  Shapes are nested tuples of leaf positions (e.g.
``((0, 1), (2, 3))``); a basis tree assigns an anyon label to every internal
node (the root label is fixed per state).  F-moves re-associate one vertex,
braids exchange adjacent sibling leaves, and the remote-measurement and
merge/split protocols operate on the four-D logical qutrit space (total
charge G, internal pair labels (x, y)) and its two-qutrit extension.

Global phases are tracked explicitly: normalization only divides by the
positive norm, so protocol sign bookkeeping stays observable in tests.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import category
from .category import U_PAIRS, U_PERP1_PAIRS, U_PERP2_PAIRS, default_category

QUTRIT_SHAPE = ((0, 1), (2, 3))
ALL_PAIRS = U_PAIRS + U_PERP1_PAIRS + U_PERP2_PAIRS
PRUNE_TOL = 1e-14


class FusionError(ValueError):
    pass


def _subtrees(shape):
    """Internal nodes of a nested-tuple shape in postorder (root last)."""
    out = []

    def walk(node):
        if isinstance(node, tuple):
            walk(node[0])
            walk(node[1])
            out.append(node)

    walk(shape)
    return tuple(out)


@dataclass(frozen=True)
class FusionState:
    """Superposition over internal labelings of one tree shape."""

    leaves: tuple  # anyon letters
    shape: tuple
    root: str
    amps: dict  # labeling tuple (aligned with _subtrees(shape)) -> complex

    @property
    def nodes(self):
        return _subtrees(self.shape)

    def node_index(self, node):
        return self.nodes.index(node)

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(a) ** 2 for a in self.amps.values())))

    def normalized(self) -> "FusionState":
        n = self.norm()
        if n == 0:
            raise FusionError("cannot normalize the zero state")
        return replace(self, amps={k: v / n for k, v in self.amps.items()})

    def pruned(self) -> "FusionState":
        return replace(
            self, amps={k: v for k, v in self.amps.items() if abs(v) > PRUNE_TOL}
        )

    def label_of(self, labeling, node):
        if isinstance(node, int):
            return self.leaves[node]
        return labeling[self.node_index(node)]

    def validate(self, data=None):
        data = data or default_category()
        for labeling in self.amps:
            if labeling[-1] != self.root:
                raise FusionError("root label mismatch")
            for node in self.nodes:
                a = self.label_of(labeling, node[0])
                b = self.label_of(labeling, node[1])
                c = self.label_of(labeling, node)
                if not data.N.get((a, b, c), 0):
                    raise FusionError(f"inadmissible vertex {a} x {b} -> {c}")
        return self


def qutrit_state(amps, data=None) -> FusionState:
    """Four-D fusion tree with total charge G from {(x, y): amplitude}."""
    for x, y in amps:
        if (x, y) not in ALL_PAIRS:
            raise FusionError(f"({x},{y}) not an internal pair of the qutrit space")
    state = FusionState(
        ("D",) * 4,
        QUTRIT_SHAPE,
        "G",
        {(x, y, "G"): complex(v) for (x, y), v in amps.items()},
    )
    return state.validate(data).normalized()


def qutrit_amplitudes(state: FusionState) -> dict:
    if state.shape != QUTRIT_SHAPE or state.leaves != ("D",) * 4 or state.root != "G":
        raise FusionError("state is not a four-D logical qutrit")
    return {(k[0], k[1]): v for k, v in state.amps.items()}


# ---------------------------------------------------------------------------
# F-moves and braids


def f_move(state: FusionState, node, data=None) -> FusionState:
    """Re-associate one vertex: ((a b) c) <-> (a (b c)).

    The direction is read off the current shape of `node`; norm is preserved
    (F matrices are unitary).
    """
    data = data or default_category()
    if node not in state.nodes:
        raise FusionError(f"no internal node {node!r}")
    left, right = node
    if isinstance(left, tuple):
        new_node = (left[0], (left[1], right))
        forward = True  # coefficients F[a,b,c,d,e,f], e known
    elif isinstance(right, tuple):
        new_node = ((left, right[0]), right[1])
        forward = False  # inverse move, f known
    else:
        raise FusionError("vertex joins two leaves; nothing to re-associate")

    def swap_node(tree):
        if tree == node:
            return new_node
        if isinstance(tree, int):
            return tree
        return (swap_node(tree[0]), swap_node(tree[1]))

    def unswap_node(tree):
        if tree == new_node:
            return node
        if isinstance(tree, int):
            return tree
        return (unswap_node(tree[0]), unswap_node(tree[1]))

    new_shape = swap_node(state.shape)
    new_nodes = _subtrees(new_shape)
    # the only internal node whose label changes is the inner child of the
    # re-associated vertex; everything else (including the vertex itself)
    # carries its old label over
    if forward:
        a_t, (b_t, c_t) = new_node
        old_inner, new_inner = (a_t, b_t), (b_t, c_t)
    else:
        (a_t, b_t), c_t = new_node
        old_inner, new_inner = (b_t, c_t), (a_t, b_t)
    out = {}
    for labeling, amp in state.amps.items():
        a = state.label_of(labeling, a_t)
        b = state.label_of(labeling, b_t)
        c = state.label_of(labeling, c_t)
        d = state.label_of(labeling, node)
        known = state.label_of(labeling, old_inner)
        if forward:
            branch = [
                (f, data.f_entry(a, b, c, d, known, f))
                for f in data.outcomes(b, c)
                if data.N.get((a, f, d), 0)
            ]
        else:
            branch = [
                (e, np.conj(data.f_entry(a, b, c, d, e, known)))
                for e in data.outcomes(a, b)
                if data.N.get((e, c, d), 0)
            ]
        carried = {
            n: state.label_of(labeling, unswap_node(n))
            for n in new_nodes
            if n != new_inner
        }
        for lab, coeff in branch:
            if abs(coeff) < PRUNE_TOL:
                continue
            new_lab = tuple(
                lab if n == new_inner else carried[n] for n in new_nodes
            )
            out[new_lab] = out.get(new_lab, 0) + coeff * amp
    result = FusionState(state.leaves, new_shape, state.root, out).pruned()
    if abs(result.norm() - state.norm()) > 1e-12:
        raise FusionError("F-move failed to preserve the norm")
    return result


def left_comb_shape(n_leaves: int):
    shape = 0
    for i in range(1, n_leaves):
        shape = (shape, i)
    return shape


def to_left_comb(state: FusionState, data=None):
    """Convert to the canonical left-comb shape.

    Returns (state, moves) where `moves` is the recorded f_move target list
    that reproduces the conversion.
    """
    data = data or default_category()
    moves = []
    current = state
    while True:
        target = next(
            (
                node
                for node in current.nodes
                if isinstance(node[1], tuple)
            ),
            None,
        )
        if target is None:
            return current, tuple(moves)
        moves.append(target)
        current = f_move(current, target, data)


def braid(state: FusionState, i: int, over: bool = True, data=None) -> FusionState:
    """Exchange sibling leaves i and i+1 (over- or under-crossing)."""
    data = data or default_category()
    node = (i, i + 1)
    if node not in state.nodes:
        raise FusionError(f"leaves {i},{i + 1} are not siblings; apply f_move first")
    idx = state.node_index(node)
    a, b = state.leaves[i], state.leaves[i + 1]
    new_leaves = list(state.leaves)
    new_leaves[i], new_leaves[i + 1] = b, a
    out = {}
    for labeling, amp in state.amps.items():
        c = labeling[idx]
        phase = data.r_symbol(a, b, c) if over else np.conj(data.r_symbol(b, a, c))
        out[labeling] = amp * phase
    return FusionState(tuple(new_leaves), state.shape, state.root, out)


# ---------------------------------------------------------------------------
# Remote measurements on the logical qutrit


@dataclass(frozen=True)
class ProtocolOutcome:
    tag: str
    transcript: tuple
    state: FusionState
    rounds: int
    timed_out: bool = False

    def record(self) -> str:
        lines = [f"tag {self.tag}", f"rounds {self.rounds}",
                 f"timed_out {self.timed_out}",
                 "transcript " + " ".join(map(str, self.transcript))]
        for key in sorted(self.state.amps):
            v = self.state.amps[key]
            lines.append(f"{'/'.join(key)} {v.real!r} {v.imag!r}")
        return "\n".join(lines)


def _sample(rng, labels, weights):
    w = np.array(weights, dtype=float)
    w = w / w.sum()
    return labels[rng.choice(len(labels), p=w)]


def measure_MA(state: FusionState, rng, max_rounds: int = 64, data=None) -> ProtocolOutcome:
    """Interferometric measurement {Pi_A, Pi_A'} on the computational qutrit.

    A D-pair probes the left internal label x; the pair's fusion outcome w
    projects x = w.  On w = G the probe is fused back into the tree (outcome
    D returns directly, outcome E flips the sign of |GG> relative to |GA> via
    a B-pair correction) and rounds continue until the E-count is even.
    """
    data = data or default_category()
    amps = qutrit_amplitudes(state)
    if any((x, y) not in U_PAIRS for x, y in amps):
        raise FusionError("measure_MA requires support on the computational subspace")
    i_aa = category.interferometry_amplitude("A", "D", "A", data)
    i_gg = category.interferometry_amplitude("G", "D", "G", data)
    p_a = sum(abs(v) ** 2 for (x, y), v in amps.items() if x == "A") * abs(i_aa) ** 2
    p_g = sum(abs(v) ** 2 for (x, y), v in amps.items() if x == "G") * abs(i_gg) ** 2
    transcript = []
    w = _sample(rng, ["A", "G"], [p_a, p_g])
    transcript.append(("interfere", w))
    if w == "A":
        post = {k: v * i_aa for k, v in amps.items() if k[0] == "A"}
        return ProtocolOutcome(
            "A", tuple(transcript), qutrit_state(post, data), 1
        )
    amps = {k: v * i_gg for k, v in amps.items() if k[0] == "G"}
    # fuse the w = G probe with the leftmost D and correct E outcomes
    e_parity = 0
    rounds = 1
    f_d = np.conj(data.f_entry("G", "D", "D", "G", "D", "G"))
    f_e = np.conj(data.f_entry("G", "D", "D", "G", "E", "G"))
    while rounds < max_rounds:
        fuse = _sample(rng, ["D", "E"], [abs(f_d) ** 2, abs(f_e) ** 2])
        transcript.append(("fuse", fuse))
        if fuse == "E":
            sign = data.f_entry("B", "D", "D", "G", "E", "G")
            amps = {
                (x, y): v * sign * data.f_entry("B", "G", y, "G", "G", "G")
                for (x, y), v in amps.items()
            }
            e_parity ^= 1
        if e_parity == 0:
            return ProtocolOutcome(
                "Aprime", tuple(transcript), qutrit_state(amps, data), rounds
            )
        # another interferometry round: support is x = G, outcome certain
        amps = {k: v * i_gg for k, v in amps.items()}
        transcript.append(("interfere", "G"))
        rounds += 1
    return ProtocolOutcome(
        "Aprime", tuple(transcript), qutrit_state(amps, data), rounds, timed_out=True
    )


def measure_MU(state: FusionState, rng, max_rounds: int = 64, data=None) -> ProtocolOutcome:
    """Iterated intermediate measurement realizing {Pi_U, Pi_Uperp}.

    Each round an H-pair probes the internal pair (x, y); outcome w = A
    multiplies U-perp amplitudes by -1/2, outcome w = B kills U and gives the
    two U-perp sectors opposite imaginary amplitudes.  All-A transcripts
    converge to Pi_U; after a first B the rounds continue until a second B
    restores intra-U-perp coherence.
    """
    data = data or default_category()
    amps = qutrit_amplitudes(state)
    transcript = []
    b_count = 0
    for rounds in range(1, max_rounds + 1):
        branches = {}
        for w in ("A", "B"):
            branches[w] = {
                k: v * category.u_measurement_amplitude(k[0], k[1], "H", w, data)
                for k, v in amps.items()
            }
        weights = [
            sum(abs(v) ** 2 for v in branches[w].values()) for w in ("A", "B")
        ]
        w = _sample(rng, ["A", "B"], weights)
        transcript.append(w)
        amps = {k: v for k, v in branches[w].items() if abs(v) > PRUNE_TOL}
        if w == "B":
            b_count += 1
            if b_count == 2:
                return ProtocolOutcome(
                    "Uperp", tuple(transcript), qutrit_state(amps, data), rounds
                )
        if b_count == 0 and rounds == max_rounds:
            return ProtocolOutcome(
                "U", tuple(transcript), qutrit_state(amps, data), rounds
            )
    return ProtocolOutcome(
        "Uperp",
        tuple(transcript),
        qutrit_state(amps, data),
        max_rounds,
        timed_out=True,
    )


# ---------------------------------------------------------------------------
# Merge and split of logical qutrits


TWO_QUTRIT_SHAPE = (((0, 1), (2, 3)), ((4, 5), (6, 7)))


def two_qutrit_state(amps, data=None) -> FusionState:
    """Merged tree: two four-D qutrit subtrees with G roots fused to G."""
    state = FusionState(
        ("D",) * 8,
        TWO_QUTRIT_SHAPE,
        "G",
        {
            (x1, y1, "G", x2, y2, "G", "G"): complex(v)
            for (x1, y1, x2, y2), v in amps.items()
        },
    )
    return state.validate(data).normalized()


def two_qutrit_amplitudes(state: FusionState) -> dict:
    if state.shape != TWO_QUTRIT_SHAPE or state.root != "G":
        raise FusionError("state is not a merged two-qutrit tree")
    return {(k[0], k[1], k[3], k[4]): v for k, v in state.amps.items()}


def merge_qutrits(
    stateL: FusionState, stateR: FusionState, rng, data=None
) -> ProtocolOutcome:
    """Fuse the G roots of two logical qutrits into a single G root.

    Subroutine 1 fuses the roots (outcomes A: 1/4, B: 1/4, G: 1/2).  On A/B,
    subroutine 2 splits the Abelian outcome back into two G, probes the left
    one with a D-pair (X in {A, G}), and fuses the residual pair(s) down to a
    single G; the internal labels of both qutrits are untouched throughout.
    """
    data = data or default_category()
    ampsL = qutrit_amplitudes(stateL)
    ampsR = qutrit_amplitudes(stateR)
    transcript = []
    phase = 1.0 + 0j
    outcome = _sample(
        rng,
        ["A", "B", "G"],
        [
            category.fusion_probability("G", "G", c, data) for c in ("A", "B", "G")
        ],
    )
    transcript.append(("root-fusion", outcome))
    if outcome != "G":
        # split A/B into two G, then D-pair interferometry on the left G:
        # the root-pair state is sum_X conj(F^{GGG}_G[X, outcome]) |X>
        coeff = {
            X: np.conj(data.f_entry("G", "G", "G", "G", X, outcome))
            for X in ("A", "B", "G")
        }
        i_aa = category.interferometry_amplitude("A", "D", "A", data)
        i_ba = category.interferometry_amplitude("B", "D", "A", data)
        i_gg = category.interferometry_amplitude("G", "D", "G", data)
        w_a = abs(coeff["A"] * i_aa) ** 2 + abs(coeff["B"] * i_ba) ** 2
        w_g = abs(coeff["G"] * i_gg) ** 2
        X = _sample(rng, ["A", "G"], [w_a, w_g])
        transcript.append(("interferometer", X))
        if X == "A":
            # residual (coeff_A |A> + coeff_B (-1)|B>)/norm; fusing the lower
            # G pair returns deterministically to a single G root when the
            # residual equals the F-column of G
            res = np.array([coeff["A"] * i_aa, coeff["B"] * i_ba])
            res = res / np.linalg.norm(res)
            col = np.array(
                [
                    np.conj(data.f_entry("G", "G", "G", "G", e, "G"))
                    for e in ("A", "B")
                ]
            )
            col = col / np.linalg.norm(col)
            overlap = np.vdot(col, res)
            if abs(abs(overlap) - 1) > 1e-12:
                raise FusionError("residual G-pair fusion is not deterministic")
            phase *= overlap
            transcript.append(("pair-fusion", "G"))
        else:
            phase *= coeff["G"] * i_gg / abs(coeff["G"] * i_gg)
            # fuse the left two G: Abelian outcome A or B, then Abelian x G -> G
            ab = _sample(rng, ["A", "B"], [0.5, 0.5])
            transcript.append(("left-fusion", ab))
            transcript.append(("abelian-fusion", "G"))
    merged = {
        (x1, y1, x2, y2): phase * ampsL[x1, y1] * ampsR[x2, y2]
        for (x1, y1) in ampsL
        for (x2, y2) in ampsR
    }
    return ProtocolOutcome(
        "merged", tuple(transcript), two_qutrit_state(merged, data), 1
    )


def split_qutrit(
    state: FusionState, rng, max_rounds: int = 64, data=None
) -> ProtocolOutcome:
    """Split the G root of a merged two-qutrit tree back into two G roots.

    Each round applies a shortest-G-ribbon + measurement attempt that
    succeeds (fusion outcome G) with probability 1/2; the exposed internal
    label is A or B with equal amplitude, and the B branch is recorded but
    harmless.  Returns the pair of single-qutrit states in the transcript
    order (left, right) encoded as a product state.
    """
    data = data or default_category()
    amps = two_qutrit_amplitudes(state)
    p_succ = category.fusion_probability("G", "G", "G", data)
    transcript = []
    for rounds in range(1, max_rounds + 1):
        outcome = _sample(rng, ["G", "AB"], [p_succ, 1 - p_succ])
        transcript.append(("split-attempt", outcome))
        if outcome == "G":
            internal = _sample(rng, ["A", "B"], [0.5, 0.5])
            transcript.append(("internal", internal))
            # the split leaves the internal labels untouched; re-expressing
            # the pair of G roots keeps the joint amplitudes exact
            result = two_qutrit_state(amps, data)
            return ProtocolOutcome(
                f"split-{internal}", tuple(transcript), result, rounds
            )
    return ProtocolOutcome(
        "timeout", tuple(transcript), state, max_rounds, timed_out=True
    )


def factor_halves(state: FusionState):
    """Factor a product two-qutrit state into its single-qutrit halves."""
    amps = two_qutrit_amplitudes(state)
    mat = np.zeros((len(ALL_PAIRS), len(ALL_PAIRS)), dtype=complex)
    index = {p: i for i, p in enumerate(ALL_PAIRS)}
    for (x1, y1, x2, y2), v in amps.items():
        mat[index[x1, y1], index[x2, y2]] = v
    u, s, vh = np.linalg.svd(mat)
    if len(s) > 1 and s[1] > 1e-9:
        raise FusionError("state is entangled across the two qutrits")
    left = {p: u[i, 0] * np.sqrt(s[0]) for p, i in index.items() if abs(u[i, 0]) > PRUNE_TOL}
    right = {p: vh[0, i] * np.sqrt(s[0]) for p, i in index.items() if abs(vh[0, i]) > PRUNE_TOL}
    return qutrit_state(left), qutrit_state(right)
