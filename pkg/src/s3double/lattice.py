"""Exact sparse simulator of the S3 quantum double on a directed open square
lattice.

Geometry: vertices (x, y) with x in 0..W, y in 0..H (y grows downward);
horizontal edges point rightward, vertical edges point downward.  A plaquette
is labelled by its northwest vertex, and a site s = (v, p) pairs a plaquette
with its northwest vertex; sites are indexed (x, y) with 0 <= x < W,
0 <= y < H.

States are sparse maps from edge configurations (one group element per edge,
packed base-6 into an int64 key) to complex amplitudes.  In addition, a state
carries a set of "uniform" vertices: the physical state is the normalized
image of the stored terms under the product of vertex projectors A_v over
that set.  Stored terms are kept in a canonical gauge (the spanning-tree
edge into each uniform vertex is fixed to the identity), which makes the
orbit basis orthonormal and keeps protocol states tiny: the ground state is
a single term.  Operators that do not commute with A_v at some uniform
vertex require de-uniformizing that vertex first (term count x6 per vertex).

Operator conventions: L^g_+|m> = |gm>, L^g_-|m> = |m gbar>, T^h_+ = delta_{h,m},
T^h_- = delta_{hbar,m}.  A^g_v acts with L^g_+ on edges starting at v and
L^g_- on edges ending at v.  B^h_p projects the counterclockwise flux
g1 g2 g3bar g4bar (left, bottom, right, top edges of p) onto h.  Ribbon
operators F^{h,g} act on triangle sequences: direct triangles read a group
element with T, dual triangles multiply with L conjugated by the prefix of
elements read so far; the anyon ribbons F^{R,C;u,v} and the single-site
charge projectors K^{R,C}_s are the standard centralizer-character
combinations of these.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .algebra import (
    ANYON_TABLE,
    ANYONS,
    GroupElement,
    INV_TABLE,
    MUL_TABLE,
    ORDER,
)

PRUNE_TOL = 1e-14
MAX_VERTICES = 10


class ResourceError(RuntimeError):
    """Lattice too large for exact simulation."""

    def __init__(self, message: str, estimated_terms: int):
        super().__init__(f"{message} (estimated term count {estimated_terms})")
        self.estimated_terms = estimated_terms


class AnnihilationError(RuntimeError):
    """Every Kraus branch of a mixed ribbon application has zero norm."""


# ---------------------------------------------------------------------------
# Geometry


@dataclass(frozen=True)
class Lattice:
    """Directed open square lattice of W x H plaquettes."""

    W: int
    H: int

    def __post_init__(self):
        if self.W < 1 or self.H < 1:
            raise ValueError("lattice must have at least one plaquette")

    @property
    def vertices(self):
        return [(x, y) for y in range(self.H + 1) for x in range(self.W + 1)]

    @property
    def n_vertices(self) -> int:
        return (self.W + 1) * (self.H + 1)

    @property
    def sites(self):
        return [(x, y) for y in range(self.H) for x in range(self.W)]

    def h_edge(self, x: int, y: int) -> int:
        """Index of the edge (x, y) -> (x+1, y)."""
        if not (0 <= x < self.W and 0 <= y <= self.H):
            raise ValueError(f"no horizontal edge at {(x, y)}")
        return y * self.W + x

    def v_edge(self, x: int, y: int) -> int:
        """Index of the edge (x, y) -> (x, y+1)."""
        if not (0 <= x <= self.W and 0 <= y < self.H):
            raise ValueError(f"no vertical edge at {(x, y)}")
        return self.W * (self.H + 1) + y * (self.W + 1) + x

    @property
    def n_edges(self) -> int:
        return self.W * (self.H + 1) + self.H * (self.W + 1)

    def edge_endpoints(self, edge: int):
        nh = self.W * (self.H + 1)
        if edge < nh:
            y, x = divmod(edge, self.W)
            return (x, y), (x + 1, y)
        y, x = divmod(edge - nh, self.W + 1)
        return (x, y), (x, y + 1)

    def star(self, v):
        """(edge, starts_here) pairs incident to vertex v."""
        x, y = v
        out = []
        if x < self.W:
            out.append((self.h_edge(x, y), True))
        if x > 0:
            out.append((self.h_edge(x - 1, y), False))
        if y < self.H:
            out.append((self.v_edge(x, y), True))
        if y > 0:
            out.append((self.v_edge(x, y - 1), False))
        return out

    def plaquette_edges(self, p):
        """(left, bottom, right, top) edge indices of plaquette p."""
        x, y = p
        return (
            self.v_edge(x, y),
            self.h_edge(x, y + 1),
            self.v_edge(x + 1, y),
            self.h_edge(x, y),
        )

    # spanning tree rooted at (0, 0): row 0 leftward, then columns upward
    def tree_parent_edge(self, v) -> int:
        x, y = v
        if v == (0, 0):
            raise ValueError("root has no parent edge")
        if y > 0:
            return self.v_edge(x, y - 1)  # ends at v
        return self.h_edge(x - 1, 0)  # ends at v

    def tree_order(self):
        """All non-root vertices, parents before children."""
        return [v for v in sorted(self.vertices, key=lambda v: (v[1], v[0])) if v != (0, 0)]

    def powers(self) -> np.ndarray:
        return 6 ** np.arange(self.n_edges, dtype=np.int64)


# ---------------------------------------------------------------------------
# Sparse state


@dataclass
class LatticeState:
    lattice: Lattice
    keys: np.ndarray  # int64, packed base-6 edge configuration
    amps: np.ndarray  # complex128
    uniform: frozenset = field(default_factory=frozenset)  # vertices

    def copy(self) -> "LatticeState":
        return LatticeState(self.lattice, self.keys.copy(), self.amps.copy(), self.uniform)

    @property
    def n_terms(self) -> int:
        return len(self.keys)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def normalized(self) -> "LatticeState":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero state")
        return replace(self, amps=self.amps / n)

    def digits(self, edge: int) -> np.ndarray:
        return (self.keys // (6 ** edge)) % 6

    def dump(self) -> str:
        """Structured text snapshot (edge order, configurations, amplitudes)."""
        lat = self.lattice
        lines = [f"lattice {lat.W}x{lat.H} edges {lat.n_edges}"]
        lines.append("uniform " + " ".join(f"{x},{y}" for x, y in sorted(self.uniform)))
        order = np.argsort(self.keys)
        for i in order:
            digs = np.base_repr(int(self.keys[i]), base=6).zfill(lat.n_edges)[::-1]
            a = self.amps[i]
            lines.append(f"{digs} {a.real!r} {a.imag!r}")
        return "\n".join(lines)


def _merged(lattice, keys, amps, uniform) -> LatticeState:
    uniq, inverse = np.unique(keys, return_inverse=True)
    out = np.zeros(len(uniq), dtype=complex)
    np.add.at(out, inverse, amps)
    keep = np.abs(out) > PRUNE_TOL
    return LatticeState(lattice, uniq[keep], out[keep], uniform)


def _set_digit(keys, edge, old, new):
    return keys + (new - old) * (6 ** edge)


def _left_mult(keys, edge, g_arr):
    """L^g_+ with a per-term group element array (or scalar index)."""
    old = (keys // (6 ** edge)) % 6
    return _set_digit(keys, edge, old, MUL_TABLE[g_arr, old])


def _right_mult_inv(keys, edge, g_arr):
    """L^g_- with a per-term group element array (or scalar index)."""
    old = (keys // (6 ** edge)) % 6
    return _set_digit(keys, edge, old, MUL_TABLE[old, INV_TABLE[g_arr]])


@lru_cache(maxsize=None)
def _star_cache(lattice):
    return {v: tuple(lattice.star(v)) for v in lattice.vertices}


@lru_cache(maxsize=None)
def _tree_cache(lattice):
    return tuple(
        (v, lattice.tree_parent_edge(v), tuple(lattice.star(v)))
        for v in lattice.tree_order()
    )


def _gauge_at_vertex(lattice, keys, v, g_arr, star=None):
    """A^g_v with per-term group indices g_arr."""
    for edge, starts in star if star is not None else _star_cache(lattice)[v]:
        if starts:
            keys = _left_mult(keys, edge, g_arr)
        else:
            keys = _right_mult_inv(keys, edge, g_arr)
    return keys


def canonicalize_keys(lattice, keys, uniform):
    """Gauge-fix each uniform vertex's tree edge to the identity."""
    keys = keys.copy()
    for v, t, star in _tree_cache(lattice):
        if v not in uniform:
            continue
        m = (keys // (6 ** t)) % 6  # tree edge ends at v; A^m_v sets it to e
        if m.any():
            keys = _gauge_at_vertex(lattice, keys, v, m, star)
    return keys


# ---------------------------------------------------------------------------
# Elementary operators


def apply_vertex(state: LatticeState, v, g: GroupElement) -> LatticeState:
    """A^g_v.  Requires v not uniform (it acts trivially there otherwise)."""
    if v in state.uniform:
        return state.copy()
    g_arr = np.full(state.n_terms, g.index, dtype=np.int64)
    keys = _gauge_at_vertex(state.lattice, state.keys, v, g_arr)
    keys = canonicalize_keys(state.lattice, keys, state.uniform)
    return _merged(state.lattice, keys, state.amps, state.uniform)


def apply_plaquette(state: LatticeState, p, h: GroupElement) -> LatticeState:
    """Projector B^h_p.

    The flux is based at the plaquette's northwest vertex; for non-central h
    the projector does not commute with gauge averaging there, so that vertex
    is expanded first if needed.
    """
    if h.index != 0 and p in state.uniform:
        state = deuniformize(state, p)
    le, be, re, te = state.lattice.plaquette_edges(p)
    f = MUL_TABLE[
        MUL_TABLE[MUL_TABLE[state.digits(le), state.digits(be)], INV_TABLE[state.digits(re)]],
        INV_TABLE[state.digits(te)],
    ]
    mask = f == h.index
    return LatticeState(state.lattice, state.keys[mask], state.amps[mask], state.uniform)


def uniformize(state: LatticeState, v) -> LatticeState:
    """Apply the projector A_v and absorb v into the uniform set.

    Norm is preserved only if the state is already A_v-invariant.
    """
    if v in state.uniform:
        return state.copy()
    if v == (0, 0):
        # the spanning-tree root carries no tree edge, so its gauge orbit
        # cannot be canonicalized; the orbit basis stays well-defined only
        # while the root is explicit
        raise ValueError("the tree root vertex cannot join the uniform set")
    uniform = state.uniform | {v}
    keys = canonicalize_keys(state.lattice, state.keys, uniform)
    return _merged(state.lattice, keys, state.amps / np.sqrt(ORDER), uniform)


def deuniformize(state: LatticeState, v) -> LatticeState:
    """Exactly rewrite the state with v removed from the uniform set."""
    if v not in state.uniform:
        return state.copy()
    uniform = state.uniform - {v}
    all_keys = [
        _gauge_at_vertex(
            state.lattice, state.keys, v, np.full(state.n_terms, g, dtype=np.int64)
        )
        for g in range(ORDER)
    ]
    keys = canonicalize_keys(state.lattice, np.concatenate(all_keys), uniform)
    amps = np.tile(state.amps / np.sqrt(ORDER), ORDER)
    return _merged(state.lattice, keys, amps, uniform)


def expanded(state: LatticeState) -> LatticeState:
    """Fully expand all uniform vertices (term count x 6 per vertex)."""
    out = state
    for v in sorted(state.uniform):
        out = deuniformize(out, v)
    return out


def inner(a: LatticeState, b: LatticeState) -> complex:
    """<a|b> for states sharing the same uniform set (orbit basis is
    orthonormal)."""
    if a.uniform != b.uniform:
        raise ValueError("states must share the same uniform set")
    common, ia, ib = np.intersect1d(a.keys, b.keys, return_indices=True)
    return complex(np.sum(np.conj(a.amps[ia]) * b.amps[ib]))


def vertex_projector(state: LatticeState, v) -> LatticeState:
    """A_v without uniform-set bookkeeping (image may be unnormalized)."""
    if v in state.uniform:
        return state.copy()
    pieces_k, pieces_a = [], []
    for g in range(ORDER):
        g_arr = np.full(state.n_terms, g, dtype=np.int64)
        keys = _gauge_at_vertex(state.lattice, state.keys, v, g_arr)
        pieces_k.append(canonicalize_keys(state.lattice, keys, state.uniform))
        pieces_a.append(state.amps / ORDER)
    return _merged(
        state.lattice, np.concatenate(pieces_k), np.concatenate(pieces_a), state.uniform
    )


def stabilizer_expectations(state: LatticeState):
    """{('A', v): <A_v>} and {('B', p): <B_p>} for a normalized state."""
    out = {}
    for v in state.lattice.vertices:
        if v in state.uniform:
            out["A", v] = 1.0 + 0.0j
        else:
            out["A", v] = inner(state, vertex_projector(state, v))
    from .algebra import E as _E

    for p in state.lattice.sites:
        out["B", p] = inner(state, apply_plaquette(state, p, _E))
    return out


# ---------------------------------------------------------------------------
# Ground state


def ground_state(lattice: Lattice, uniform: bool = True) -> LatticeState:
    """Normalized product of all A_v projectors on the all-identity state."""
    if lattice.n_vertices > MAX_VERTICES:
        raise ResourceError(
            f"{lattice.W}x{lattice.H} lattice exceeds the desk-scale bound",
            ORDER ** (lattice.n_vertices - 1),
        )
    state = LatticeState(
        lattice,
        np.zeros(1, dtype=np.int64),
        np.ones(1, dtype=complex),
        frozenset(),
    )
    for v in lattice.vertices:
        if v != (0, 0):
            state = uniformize(state, v)
    # the all-identity configuration is invariant under the residual global
    # right multiplication, so A_(0,0) already acts trivially
    state = state.normalized()
    if not uniform:
        state = expanded(state).normalized()
    return state


# ---------------------------------------------------------------------------
# Ribbons


@dataclass(frozen=True)
class Triangle:
    kind: str  # "direct" | "dual"
    edge: int
    positive: bool  # sign of the T (direct) or L (dual) operator


@dataclass(frozen=True)
class Ribbon:
    """Triangle sequence from site s0 to site s1."""

    triangles: tuple
    s0: tuple
    s1: tuple
    vertices: tuple  # vertices at which F^{h,g} fails to commute with A_v

    def __add__(self, other: "Ribbon") -> "Ribbon":
        if self.s1 != other.s0:
            raise ValueError("ribbons do not share an intermediate site")
        return Ribbon(
            self.triangles + other.triangles,
            self.s0,
            other.s1,
            (self.vertices[0], other.vertices[1]),
        )


def shortest_h(lattice: Lattice, site) -> Ribbon:
    """rho_h from site (x, y) to site (x+1, y)."""
    x, y = site
    return Ribbon(
        (
            Triangle("direct", lattice.h_edge(x, y), True),
            Triangle("dual", lattice.v_edge(x + 1, y), True),
        ),
        (x, y),
        (x + 1, y),
        ((x, y), (x + 1, y)),
    )


def shortest_v(lattice: Lattice, site) -> Ribbon:
    """rho_v from site (x, y) to site (x, y-1)."""
    x, y = site
    return Ribbon(
        (
            Triangle("dual", lattice.h_edge(x, y), True),
            Triangle("direct", lattice.v_edge(x, y - 1), False),
        ),
        (x, y),
        (x, y - 1),
        ((x, y), (x, y - 1)),
    )


def staircase_ribbon(lattice: Lattice, site, moves: str) -> Ribbon:
    """Concatenate shortest ribbons along a path of 'R' (right) / 'U' (up)."""
    rib = None
    cur = tuple(site)
    for m in moves:
        piece = shortest_h(lattice, cur) if m == "R" else shortest_v(lattice, cur)
        rib = piece if rib is None else rib + piece
        cur = piece.s1
    return rib


def apply_ribbon(
    state: LatticeState, ribbon: Ribbon, h: GroupElement, g: GroupElement
) -> LatticeState:
    """F^{h,g}_rho: monomial action by triangle recursion."""
    for v in ribbon.vertices:
        state = deuniformize(state, v)
    keys = state.keys.copy()
    amps = state.amps
    prefix = np.zeros(len(keys), dtype=np.int64)  # product of elements read
    for tri in ribbon.triangles:
        if tri.kind == "direct":
            d = (keys // (6 ** tri.edge)) % 6
            read = d if tri.positive else INV_TABLE[d]
            prefix = MUL_TABLE[prefix, read]
        else:
            conj = MUL_TABLE[MUL_TABLE[INV_TABLE[prefix], h.index], prefix]
            if tri.positive:
                keys = _left_mult(keys, tri.edge, conj)
            else:
                keys = _right_mult_inv(keys, tri.edge, conj)
    mask = prefix == g.index
    keys = canonicalize_keys(state.lattice, keys[mask], state.uniform)
    return _merged(state.lattice, keys, amps[mask], state.uniform)


def anyon_ribbon_branch(
    state: LatticeState, ribbon: Ribbon, anyon: str, u, v
) -> LatticeState:
    """F^{R,C;u,v}_rho (unnormalized image)."""
    irrep = ANYON_TABLE[anyon]
    c, j = u
    cp, jp = v
    tau_c, tau_cp = irrep.C.tau[c], irrep.C.tau[cp]
    scale = irrep.R.dim / len(irrep.C.centralizer)
    pieces_k, pieces_a = [], []
    base = state
    for vtx in ribbon.vertices:
        base = deuniformize(base, vtx)
    for n in irrep.C.centralizer:
        coeff = scale * irrep.R.matrix(n)[j, jp]
        if abs(coeff) < 1e-15:
            continue
        part = apply_ribbon(base, ribbon, c, tau_c * n * tau_cp.inverse())
        pieces_k.append(part.keys)
        pieces_a.append(part.amps * coeff)
    if not pieces_k:
        return LatticeState(
            state.lattice,
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=complex),
            base.uniform,
        )
    return _merged(
        state.lattice, np.concatenate(pieces_k), np.concatenate(pieces_a), base.uniform
    )


def apply_anyon_ribbon(
    state: LatticeState,
    ribbon: Ribbon,
    anyon: str,
    u=None,
    v=None,
    mixed: bool = False,
    rng=None,
) -> LatticeState:
    """Anyon-pair ribbon.  mixed=True samples a Kraus branch (u, v) with
    probability proportional to the branch's squared norm (trajectory
    unraveling of the maximally-mixed-internal-state channel)."""
    irrep = ANYON_TABLE[anyon]
    if not mixed:
        if u is None or v is None:
            raise ValueError("explicit (u, v) required when mixed=False")
        out = anyon_ribbon_branch(state, ribbon, anyon, u, v)
        if out.norm() == 0:
            raise AnnihilationError("selected (u, v) branch has zero norm")
        return out.normalized()
    if rng is None:
        raise ValueError("mixed application requires an rng")
    base = state
    for vtx in ribbon.vertices:
        base = deuniformize(base, vtx)
    branches, weights = [], []
    for uu in irrep.basis:
        for vv in irrep.basis:
            b = anyon_ribbon_branch(base, ribbon, anyon, uu, vv)
            w = b.norm() ** 2
            if w > PRUNE_TOL:
                branches.append(b)
                weights.append(w)
    if not branches:
        raise AnnihilationError(f"all (u, v) branches of {anyon} have zero norm")
    weights = np.array(weights) / sum(weights)
    pick = rng.choice(len(branches), p=weights)
    return branches[pick].normalized()


# ---------------------------------------------------------------------------
# Charge measurement


@dataclass(frozen=True)
class AnyonConfiguration:
    charges: dict  # site -> anyon letter

    def nontrivial(self) -> dict:
        return {s: a for s, a in self.charges.items() if a != "A"}

    def __getitem__(self, site) -> str:
        return self.charges[site]


_CLASS_LETTER = {"C1": "A", "C2": "D", "C3": "F"}  # trivial-centralizer-irrep anyons


def apply_K(state: LatticeState, site, anyon: str) -> LatticeState:
    """Charge projector K^{R,C}_s (site vertex must not be uniform)."""
    irrep = ANYON_TABLE[anyon]
    v = site
    if v in state.uniform:
        state = deuniformize(state, v)
    scale = irrep.R.dim / len(irrep.C.centralizer)
    pieces_k, pieces_a = [], []
    for c in irrep.C.members:
        flux_part = apply_plaquette(state, site, c)
        if flux_part.n_terms == 0:
            continue
        tau_c = irrep.C.tau[c]
        for n in irrep.C.centralizer:
            coeff = scale * np.conj(irrep.R.character(n))
            g = tau_c * n * tau_c.inverse()
            g_arr = np.full(flux_part.n_terms, g.index, dtype=np.int64)
            pieces_k.append(
                _gauge_at_vertex(state.lattice, flux_part.keys, v, g_arr)
            )
            pieces_a.append(flux_part.amps * coeff)
    if not pieces_k:
        return LatticeState(
            state.lattice,
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=complex),
            state.uniform,
        )
    keys = canonicalize_keys(
        state.lattice, np.concatenate(pieces_k), state.uniform
    )
    return _merged(state.lattice, keys, np.concatenate(pieces_a), state.uniform)


def _measure_site(state: LatticeState, site, rng):
    """Sample the anyon at one site; returns (letter, post-state)."""
    v = site
    if v in state.uniform:
        # A_v-invariant sector: only trivial-centralizer-irrep outcomes, and
        # K reduces to a pure flux-class projector — no expansion needed
        le, be, re, te = state.lattice.plaquette_edges(site)
        f = MUL_TABLE[
            MUL_TABLE[
                MUL_TABLE[state.digits(le), state.digits(be)],
                INV_TABLE[state.digits(re)],
            ],
            INV_TABLE[state.digits(te)],
        ]
        probs, masks, letters = [], [], []
        for letter in _CLASS_LETTER.values():
            members = [g.index for g in ANYON_TABLE[letter].C.members]
            mask = np.isin(f, members)
            p = float(np.sum(np.abs(state.amps[mask]) ** 2))
            probs.append(p)
            masks.append(mask)
            letters.append(letter)
        probs = np.array(probs)
        probs = probs / probs.sum()
        pick = rng.choice(len(letters), p=probs)
        post = LatticeState(
            state.lattice,
            state.keys[masks[pick]],
            state.amps[masks[pick]],
            state.uniform,
        ).normalized()
        return letters[pick], post
    # K projectors resolve the identity on the normalized state, so outcomes
    # can be sampled with an early exit instead of projecting onto all eight
    u = rng.random() * state.norm() ** 2
    acc = 0.0
    letter, post = None, None
    for a in ANYONS:
        proj = apply_K(state, site, a)
        w = proj.norm() ** 2
        if w <= PRUNE_TOL:
            continue
        letter, post = a, proj
        acc += w
        if acc >= u:
            break
    if letter is None:
        raise ValueError("charge measurement found no support")
    post = post.normalized()
    if letter == "A" and site != (0, 0):
        # lossless: the A-sector is A_v B_p-invariant (the tree-root vertex
        # stays explicit; the projected state is invariant there regardless)
        post = uniformize(post, site)
    return letter, post


def measure_site(state: LatticeState, site, rng):
    """Sample the anyon charge at one site; returns (letter, post-state)."""
    return _measure_site(state, site, rng)


def measure_MK(state: LatticeState, rng):
    """Full anyon-configuration measurement over all sites (they commute)."""
    charges = {}
    for site in state.lattice.sites:
        letter, state = _measure_site(state, site, rng)
        charges[site] = letter
    return AnyonConfiguration(charges), state


# ---------------------------------------------------------------------------
# Dense helpers (small-lattice oracle)


def dense_vector(state: LatticeState) -> np.ndarray:
    """Full state vector; requires <= 7 edges."""
    lat = state.lattice
    if lat.n_edges > 7:
        raise ResourceError("dense vector too large", ORDER ** lat.n_edges)
    full = expanded(state)
    vec = np.zeros(ORDER ** lat.n_edges, dtype=complex)
    vec[full.keys] = full.amps
    return vec


def from_dense(lattice: Lattice, vec: np.ndarray) -> LatticeState:
    keys = np.nonzero(np.abs(vec) > PRUNE_TOL)[0].astype(np.int64)
    return LatticeState(lattice, keys, vec[keys].astype(complex), frozenset())


def ground_space_rank(lattice: Lattice, rng, probes: int = 4, tol: float = 1e-8):
    """Rank of the full ground-space projector P = prod_v A_v prod_p B^e_p,
    revealed by applying P to a random block and counting singular values.

    Requires <= 7 edges.  Returns (rank, singular_values).
    """
    from .algebra import E as _E

    if lattice.n_edges > 7:
        raise ResourceError("dense oracle too large", ORDER ** lattice.n_edges)
    dim = ORDER ** lattice.n_edges
    block = np.zeros((dim, probes), dtype=complex)
    for i in range(probes):
        vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        st = from_dense(lattice, vec)
        for p in lattice.sites:
            st = apply_plaquette(st, p, _E)
        for v in lattice.vertices:
            st = vertex_projector(st, v)
        block[:, i] = dense_vector(st)
    s = np.linalg.svd(block, compute_uv=False)
    rank = int(np.sum(s > tol * max(s[0], 1e-300)))
    return rank, s


def _all_configs_state(lattice: Lattice) -> LatticeState:
    n = ORDER ** lattice.n_edges
    return LatticeState(
        lattice,
        np.arange(n, dtype=np.int64),
        np.ones(n, dtype=complex),
        frozenset(),
    )


def ribbon_operator_matrix(
    lattice: Lattice, ribbon: Ribbon, support, builder
) -> np.ndarray:
    """Dense matrix of builder(state) restricted to the given support edges.

    builder must act trivially outside the support.  Returns a matrix of
    shape (6^k, 6^k) for k = len(support).
    """
    support = list(support)
    k = len(support)
    dim = ORDER ** k
    mat = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        key = 0
        rest = col
        for e in support:
            key += (rest % 6) * (6 ** e)
            rest //= 6
        st = LatticeState(
            lattice,
            np.array([key], dtype=np.int64),
            np.ones(1, dtype=complex),
            frozenset(),
        )
        out = builder(st)
        for key_o, amp in zip(out.keys, out.amps):
            row = 0
            for i, e in enumerate(support):
                row += int((key_o // (6 ** e)) % 6) * (ORDER ** i)
            mat[row, col] = amp
    return mat


# ---------------------------------------------------------------------------
# Orthonormality of shortest ribbon operators


@dataclass(frozen=True)
class OrthonormalityReport:
    max_residual: float
    operators_per_ribbon: int
    pairs_checked: int

    def passes(self, tol: float = 1e-9) -> bool:
        return self.max_residual < tol and self.operators_per_ribbon == ORDER ** 2


def _anyon_uv_list():
    out = []
    for a in ANYONS:
        irr = ANYON_TABLE[a]
        for u in irr.basis:
            for v in irr.basis:
                out.append((a, u, v))
    return out


def _ribbon_matrices(lattice, ribbon, support):
    labels = _anyon_uv_list()
    return {
        (a, u, v): ribbon_operator_matrix(
            lattice,
            ribbon,
            support,
            lambda st, a=a, u=u, v=v: anyon_ribbon_branch(st, ribbon, a, u, v),
        )
        for a, u, v in labels
    }


def verify_orthonormality(lattice: Lattice = None) -> OrthonormalityReport:
    """Check the trace orthogonality of shortest-ribbon operators:

        Tr(F1^dagger F2) / Tr(1) = delta_{rho1,rho2} delta_{labels}
                                   * |R| / (|Z(C)| |G|)

    over same-ribbon pairs and the two possible overlap patterns of a
    horizontal and a vertical shortest ribbon: pattern I shares the
    horizontal ribbon's direct edge with the vertical ribbon's dual edge;
    pattern II shares the horizontal ribbon's dual edge with the vertical
    ribbon's direct edge.
    """
    if lattice is None:
        lattice = Lattice(2, 2)
    if lattice.W < 2 or lattice.H < 2:
        raise ValueError("orthonormality check needs at least a 2x2 lattice")
    rh1 = shortest_h(lattice, (0, 1))
    rv1 = shortest_v(lattice, (0, 1))  # pattern I partner: shares h_edge(0, 1)
    rh2 = shortest_h(lattice, (0, 0))
    rv2 = shortest_v(lattice, (1, 1))  # pattern II partner: shares v_edge(1, 0)
    cases = [(rh1, rh1), (rv1, rv1), (rh1, rv1), (rh2, rv2)]
    labels = _anyon_uv_list()
    assert len(labels) == ORDER ** 2
    worst = 0.0
    pairs = 0
    for r1, r2 in cases:
        support = sorted({t.edge for t in r1.triangles} | {t.edge for t in r2.triangles})
        dim = ORDER ** len(support)
        mats1 = _ribbon_matrices(lattice, r1, support)
        mats2 = mats1 if r1 is r2 else _ribbon_matrices(lattice, r2, support)
        for l1 in labels:
            m1 = mats1[l1].conj().T
            for l2 in labels:
                tr = np.trace(m1 @ mats2[l2]) / dim
                if l1[0] == "A" and l2[0] == "A":
                    # both operators are 1/|G| times the identity
                    expect = 1 / ORDER ** 2
                elif r1 is r2 and l1 == l2:
                    irr = ANYON_TABLE[l1[0]]
                    expect = irr.R.dim / (len(irr.C.centralizer) * ORDER)
                else:
                    expect = 0.0
                worst = max(worst, abs(tr - expect))
                pairs += 1
    return OrthonormalityReport(worst, len(labels), pairs)
