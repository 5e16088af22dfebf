"""Z^d-periodic graph models built from integer edge templates.

A periodic graph is stored as a finite cell of vertices together with a
multiset of edge templates ``(src, dst, offset)``: an edge from cell vertex
``src`` to the copy of cell vertex ``dst`` in the cell translated by the
integer vector ``offset``.  All spectral formulas downstream work in
fractional momentum ``theta`` in ``[0,1)^d`` and integer offsets, so the
real-space basis vectors are display metadata only.

Undirectedness is encoded as template symmetry: ``(src, dst, o)`` present
iff ``(dst, src, -o)`` is present with the same multiplicity.  This makes
every Floquet fiber Hermitian by construction.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

Offset = tuple[int, ...]
Template = tuple[int, int, Offset]


class GraphValidationError(ValueError):
    """A periodic-graph construction or precondition check failed."""


# ---------------------------------------------------------------------------
# finite factor graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteGraph:
    """A simple undirected finite graph with an on-site potential.

    Used as the finite factor in product and decoration constructions.
    """

    labels: tuple[str, ...]
    edges: frozenset[tuple[int, int]]  # pairs (i, j) with i < j
    potential: tuple[float, ...]

    def __post_init__(self):
        n = len(self.labels)
        if n < 1:
            raise GraphValidationError("finite graph needs at least one vertex")
        if len(self.potential) != n:
            raise GraphValidationError("potential must cover every vertex")
        for i, j in self.edges:
            if not (0 <= i < j < n):
                raise GraphValidationError(f"bad edge ({i},{j}); self-loops and "
                                           "out-of-range endpoints are not allowed")

    @property
    def size(self) -> int:
        return len(self.labels)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.size, self.size))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def hamiltonian(self) -> np.ndarray:
        """Adjacency plus diagonal potential."""
        return self.adjacency() + np.diag(self.potential)

    def is_bipartite(self) -> bool:
        adj = [[] for _ in range(self.size)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        color = [-1] * self.size
        for start in range(self.size):
            if color[start] >= 0:
                continue
            color[start] = 0
            queue = [start]
            while queue:
                v = queue.pop()
                for w in adj[v]:
                    if color[w] < 0:
                        color[w] = 1 - color[v]
                        queue.append(w)
                    elif color[w] == color[v]:
                        return False
        return True

    def cartesian(self, other: "FiniteGraph") -> "FiniteGraph":
        """Cartesian product of two finite graphs (layers plus bridges)."""
        labels = tuple(f"{a}|{b}" for a in self.labels for b in other.labels)
        m = other.size
        edges = set()
        for i, j in self.edges:
            for b in range(m):
                edges.add((i * m + b, j * m + b))
        for a in range(self.size):
            for i, j in other.edges:
                edges.add((a * m + i, a * m + j))
        pot = tuple(qa + qb for qa in self.potential for qb in other.potential)
        return FiniteGraph(labels, frozenset(edges), pot)


def path_graph(k: int, potential=None) -> FiniteGraph:
    if k < 1:
        raise GraphValidationError("path length must be >= 1")
    pot = tuple(potential) if potential is not None else (0.0,) * k
    edges = frozenset((i, i + 1) for i in range(k - 1))
    return FiniteGraph(tuple(f"p{i}" for i in range(k)), edges, pot)


def cycle_graph(k: int, potential=None) -> FiniteGraph:
    if k < 3:
        raise GraphValidationError("cycle length must be >= 3")
    pot = tuple(potential) if potential is not None else (0.0,) * k
    edges = set((i, i + 1) for i in range(k - 1))
    edges.add((0, k - 1))
    return FiniteGraph(tuple(f"c{i}" for i in range(k)), frozenset(edges), pot)


def single_vertex(q: float = 0.0) -> FiniteGraph:
    return FiniteGraph(("v",), frozenset(), (float(q),))


# ---------------------------------------------------------------------------
# periodic graphs
# ---------------------------------------------------------------------------


def _canon_offset(o) -> Offset:
    return tuple(int(x) for x in o)


def _neg(o: Offset) -> Offset:
    return tuple(-x for x in o)


@dataclass(frozen=True)
class PeriodicGraph:
    """A Z^d-periodic graph: cell vertices, potential and edge templates.

    ``templates`` maps ``(src, dst, offset)`` to an integer multiplicity.
    The symmetry invariant (reverse template present with equal
    multiplicity) and the no-self-loop rule are enforced at construction.
    Instances are immutable; every operation returns a new graph.
    """

    dim: int
    cell_labels: tuple[str, ...]
    potential: tuple[float, ...]
    templates: dict[Template, int]
    embedding: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise GraphValidationError("dimension must be >= 1")
        if len(self.cell_labels) < 1:
            raise GraphValidationError("cell must contain at least one vertex")
        if len(self.potential) != len(self.cell_labels):
            raise GraphValidationError("potential must cover every cell vertex")
        nu = len(self.cell_labels)
        for (n, l, o), mult in self.templates.items():
            if len(o) != self.dim:
                raise GraphValidationError(f"offset {o} has wrong dimension")
            if not (0 <= n < nu and 0 <= l < nu):
                raise GraphValidationError(f"template ({n},{l},{o}) out of range")
            if mult < 1:
                raise GraphValidationError("template multiplicity must be >= 1")
            if n == l and all(x == 0 for x in o):
                raise GraphValidationError(f"self-loop template ({n},{n},0)")
            rev = self.templates.get((l, n, _neg(o)))
            if rev != mult:
                raise GraphValidationError(
                    f"template ({n},{l},{o}) lacks matching reverse "
                    f"({l},{n},{_neg(o)}); undirected symmetry violated")

    # -- basic structure ----------------------------------------------------

    @property
    def nu(self) -> int:
        """Number of cell vertices."""
        return len(self.cell_labels)

    def degree_profile(self) -> list[int]:
        """Degree of each cell vertex, counting template multiplicity."""
        deg = [0] * self.nu
        for (n, _l, _o), mult in self.templates.items():
            deg[n] += mult
        return deg

    @property
    def max_offset(self) -> int:
        """q = max |o_i| over all templates (0 for edgeless graphs)."""
        return max((abs(x) for (_n, _l, o) in self.templates for x in o),
                   default=0)

    def nu1_offsets(self) -> list[Offset]:
        """Representative offsets n^(p), one per +/- template pair (nu=1 only)."""
        if self.nu != 1:
            raise GraphValidationError("nu1_offsets requires a single-vertex cell")
        reps = []
        seen = set()
        for (_n, _l, o) in sorted(self.templates):
            if o in seen or _neg(o) in seen:
                continue
            seen.add(o)
            # canonical sign: first nonzero component positive
            first = next(x for x in o if x != 0)
            reps.append(o if first > 0 else _neg(o))
        return sorted(reps)

    @property
    def half_degree(self) -> int | None:
        """D with degree = 2D, defined for nu = 1."""
        if self.nu != 1:
            return None
        return sum(self.templates.values()) // 2

    # -- constructors ---------------------------------------------------------

    @classmethod
    def from_edges(cls, dim, labels, potential, edges, embedding=None):
        """Build from one-directional edge specs; reverses are added here.

        ``edges`` is an iterable of ``(src, dst, offset)`` or
        ``(src, dst, offset, mult)``.
        """
        templates: dict[Template, int] = {}
        for spec in edges:
            if len(spec) == 3:
                n, l, o = spec
                mult = 1
            else:
                n, l, o, mult = spec
            o = _canon_offset(o)
            templates[(n, l, o)] = templates.get((n, l, o), 0) + mult
            templates[(l, n, _neg(o))] = templates.get((l, n, _neg(o)), 0) + mult
        return cls(dim, tuple(labels), tuple(float(q) for q in potential),
                   templates, embedding)

    def relabeled(self, labels) -> "PeriodicGraph":
        return PeriodicGraph(self.dim, tuple(labels), self.potential,
                             dict(self.templates), self.embedding)


# ---------------------------------------------------------------------------
# products and decoration
# ---------------------------------------------------------------------------


def cartesian_product(g: PeriodicGraph, f: FiniteGraph) -> PeriodicGraph:
    """Cartesian product of a nu=1 periodic graph with a finite graph.

    The cell becomes V(f); the fiber satisfies
    ``H(theta) = E_g(theta) * Id + H_f`` entrywise.
    """
    if g.nu != 1:
        raise GraphValidationError("cartesian product requires nu = 1 factor")
    qg = g.potential[0]
    pot = [qg + qf for qf in f.potential]
    templates: dict[Template, int] = {}
    for (_n, _l, o), mult in g.templates.items():
        for v in range(f.size):
            templates[(v, v, o)] = templates.get((v, v, o), 0) + mult
    zero = (0,) * g.dim
    for i, j in f.edges:
        templates[(i, j, zero)] = templates.get((i, j, zero), 0) + 1
        templates[(j, i, zero)] = templates.get((j, i, zero), 0) + 1
    return PeriodicGraph(g.dim, f.labels, tuple(pot), templates)


def tensor_product(g: PeriodicGraph, f: FiniteGraph) -> PeriodicGraph:
    """Tensor product of a nu=1 periodic graph with a finite graph.

    The adjacency part of the fiber factorizes as
    ``A(theta) = E_g(theta) * A_f``, so for zero potential the band
    structure is ``{mu_j * E_g(theta)}`` over the eigenvalues mu_j of A_f.
    Any potential on f enters additively on the diagonal.

    Raises when the product is disconnected (neither factor has an odd
    cycle), since both factors bipartite splits the product in two.
    """
    if g.nu != 1:
        raise GraphValidationError("tensor product requires nu = 1 factor")
    diag = validate(g)
    if diag.connectivity != "connected":
        raise GraphValidationError("tensor product needs a connected periodic factor")
    if diag.bipartite and f.is_bipartite():
        raise GraphValidationError(
            "tensor product is disconnected: connectivity requires an odd "
            "cycle in at least one factor, and both factors are bipartite")
    mu = np.linalg.eigvalsh(f.adjacency())
    if np.any(np.abs(mu) < 1e-12):
        warnings.warn("finite factor has a zero adjacency eigenvalue; the "
                      "tensor product acquires a flat band at 0")
    qg = g.potential[0]
    pot = [qg + qf for qf in f.potential]
    templates: dict[Template, int] = {}
    for (_n, _l, o), mult in g.templates.items():
        for i, j in f.edges:
            templates[(i, j, o)] = templates.get((i, j, o), 0) + mult
            templates[(j, i, o)] = templates.get((j, i, o), 0) + mult
    return PeriodicGraph(g.dim, f.labels, tuple(pot), templates)


def strong_product(g: PeriodicGraph, f) -> PeriodicGraph:
    """Strong product: union of Cartesian and tensor edge sets.

    ``f`` may be a FiniteGraph, or a nu=1 PeriodicGraph (dimensions then
    concatenate; this covers Z box-times Z = king's graph).
    """
    if g.nu != 1:
        raise GraphValidationError("strong product requires nu = 1 factor")
    if isinstance(f, PeriodicGraph):
        if f.nu != 1:
            raise GraphValidationError("periodic strong product requires nu = 1")
        dim = g.dim + f.dim
        zg, zf = (0,) * g.dim, (0,) * f.dim
        offs_g = [o for (_n, _l, o), m in g.templates.items() for _ in range(m)]
        offs_f = [o for (_n, _l, o), m in f.templates.items() for _ in range(m)]
        templates: dict[Template, int] = {}

        def add(o):
            templates[(0, 0, o)] = templates.get((0, 0, o), 0) + 1

        for og in offs_g:
            add(og + zf)
        for of in offs_f:
            add(zg + of)
        for og in offs_g:
            for of in offs_f:
                add(og + of)
        return PeriodicGraph(dim, ("0",), (g.potential[0] + f.potential[0],),
                             templates)
    cart = cartesian_product(g, f)
    tens_templates: dict[Template, int] = {}
    for (_n, _l, o), mult in g.templates.items():
        for i, j in f.edges:
            tens_templates[(i, j, o)] = tens_templates.get((i, j, o), 0) + mult
            tens_templates[(j, i, o)] = tens_templates.get((j, i, o), 0) + mult
    merged = dict(cart.templates)
    for key, mult in tens_templates.items():
        merged[key] = merged.get(key, 0) + mult
    return PeriodicGraph(g.dim, cart.cell_labels, cart.potential, merged)


def decorate(g: PeriodicGraph, f: FiniteGraph, anchor: int) -> PeriodicGraph:
    """Glue a pendant copy of f (at its anchor vertex) to every cell vertex.

    The glued vertex keeps its g-potential plus f's anchor potential; the
    pendant vertices carry f's potential.  nu grows by nu_g * (|f| - 1).
    """
    if not (0 <= anchor < f.size):
        raise GraphValidationError("anchor must be a vertex of the finite graph")
    nug = g.nu
    extras = [j for j in range(f.size) if j != anchor]
    labels = list(g.cell_labels)
    pot = [g.potential[i] + f.potential[anchor] for i in range(nug)]
    for i in range(nug):
        for j in extras:
            labels.append(f"{g.cell_labels[i]}+{f.labels[j]}")
            pot.append(f.potential[j])

    def mapped(i: int, j: int) -> int:
        if j == anchor:
            return i
        return nug + i * len(extras) + extras.index(j)

    templates = dict(g.templates)
    zero = (0,) * g.dim
    for i in range(nug):
        for u, v in f.edges:
            mu, mv = mapped(i, u), mapped(i, v)
            templates[(mu, mv, zero)] = templates.get((mu, mv, zero), 0) + 1
            templates[(mv, mu, zero)] = templates.get((mv, mu, zero), 0) + 1
    return PeriodicGraph(g.dim, tuple(labels), tuple(pot), templates)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class GraphDiagnostics:
    """Structured validation record; collects failures instead of raising."""

    symmetric: bool
    self_loops: list
    connectivity: str          # "connected" | "disconnected"
    degree_profile: list[int]
    regular: bool
    bipartite: bool | None
    half_degree: int | None
    max_offset: int
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures


def _lattice_covolume(vectors, d: int) -> int:
    """|det| of the integer lattice spanned by the vectors; 0 if rank < d.

    Integer Gaussian elimination with gcd pivoting (Hermite-style); the
    lattice equals Z^d exactly when the covolume is 1.
    """
    basis = [list(int(x) for x in v) for v in vectors]
    det = 1
    row = 0
    for col in range(d):
        pivot = None
        while True:
            nz = [i for i in range(row, len(basis)) if basis[i][col] != 0]
            if not nz:
                break
            i0 = min(nz, key=lambda i: abs(basis[i][col]))
            basis[row], basis[i0] = basis[i0], basis[row]
            p = basis[row][col]
            reduced = True
            for i in range(row + 1, len(basis)):
                q = basis[i][col] // p
                if q:
                    basis[i] = [a - q * b
                                for a, b in zip(basis[i], basis[row])]
                if basis[i][col] != 0:
                    reduced = False
            if reduced:
                pivot = p
                break
        if pivot is None:
            return 0
        det *= abs(pivot)
        row += 1
    return det


def _infinite_connectivity(g: PeriodicGraph) -> str:
    """Exact connectivity of the infinite graph.

    Connected iff (a) the quotient multigraph on cell vertices is
    connected and (b) the closed-walk offsets generate all of Z^d: place
    each cell vertex at an integer position via a spanning tree, then every
    template yields the offset vector of a closed walk, and the graph is
    connected exactly when those vectors span a covolume-1 lattice.
    """
    # (a) quotient connectivity via BFS over templates
    adj: dict[int, list] = {n: [] for n in range(g.nu)}
    for (n, l, _o) in g.templates:
        adj[n].append(l)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) < g.nu:
        return "disconnected"
    # (b) spanning-tree placement and cycle offsets
    x = {0: (0,) * g.dim}
    stack = [0]
    tree_adj: dict[int, list] = {n: [] for n in range(g.nu)}
    for (n, l, o) in g.templates:
        tree_adj[n].append((l, o))
    while stack:
        v = stack.pop()
        for (w, o) in tree_adj[v]:
            if w not in x:
                x[w] = tuple(a + b for a, b in zip(x[v], o))
                stack.append(w)
    cycles = []
    for (n, l, o) in g.templates:
        v = tuple(a + b - c for a, b, c in zip(x[n], o, x[l]))
        if any(v):
            cycles.append(v)
    if not cycles:
        return "disconnected"
    return "connected" if _lattice_covolume(cycles, g.dim) == 1 else \
        "disconnected"


def _periodic_bipartite(g: PeriodicGraph) -> bool:
    """GF(2) solvability of the periodic 2-coloring system.

    Variables: a color bit per cell vertex and a parity bit per lattice
    direction; each template (n,l,o) demands c_n + c_l + o.p = 1 (mod 2).
    Exact for connected graphs (any bipartition is then translation-regular).
    """
    nu, d = g.nu, g.dim
    rows = []
    for (n, l, o) in g.templates:
        row = np.zeros(nu + d + 1, dtype=np.int64)
        row[n] ^= 1
        row[l] ^= 1
        for i, oi in enumerate(o):
            row[nu + i] ^= abs(oi) % 2
        row[-1] = 1
        rows.append(row % 2)
    if not rows:
        return True
    m = np.unique(np.array(rows, dtype=np.int64), axis=0)
    # Gaussian elimination over GF(2); inconsistent iff a row reduces to 0...0|1
    nrow, ncol = m.shape
    r = 0
    for c in range(ncol - 1):
        pivot = None
        for i in range(r, nrow):
            if m[i, c]:
                pivot = i
                break
        if pivot is None:
            continue
        m[[r, pivot]] = m[[pivot, r]]
        for i in range(nrow):
            if i != r and m[i, c]:
                m[i] ^= m[r]
        r += 1
        if r == nrow:
            break
    return not any(row[-1] and not row[:-1].any() for row in m)


def _patch_bipartite(g: PeriodicGraph, radius: int = 4) -> bool:
    """BFS 2-coloring of a finite patch; fallback for disconnected graphs."""
    cells = list(itertools.product(range(-radius, radius + 1), repeat=g.dim))
    cellset = set(cells)
    color: dict = {}
    adj: dict = {}
    for c in cells:
        for (n, l, o), _m in g.templates.items():
            t = tuple(ci + oi for ci, oi in zip(c, o))
            if t in cellset:
                adj.setdefault((c, n), []).append((t, l))
    for start in ((c, n) for c in cells for n in range(g.nu)):
        if start in color:
            continue
        color[start] = 0
        stack = [start]
        while stack:
            v = stack.pop()
            for w in adj.get(v, ()):
                if w not in color:
                    color[w] = 1 - color[v]
                    stack.append(w)
                elif color[w] == color[v]:
                    return False
    return True


def validate(g: PeriodicGraph) -> GraphDiagnostics:
    """Structural diagnostics: symmetry, connectivity, degrees, bipartiteness.

    Connectivity is decided exactly from the quotient multigraph and the
    lattice generated by closed-walk offsets (see
    :func:`_infinite_connectivity`); the verdict is always "connected" or
    "disconnected".  Never raises.
    """
    failures: list[str] = []
    # symmetry and self-loops were enforced at construction; re-derive here so
    # hand-rolled template dicts can be checked too
    symmetric = True
    self_loops = []
    for (n, l, o), mult in g.templates.items():
        if g.templates.get((l, n, _neg(o))) != mult:
            symmetric = False
            failures.append(f"missing reverse for template ({n},{l},{o})")
        if n == l and all(x == 0 for x in o):
            self_loops.append((n, l, o))
            failures.append(f"self-loop template ({n},{l},{o})")

    connectivity = _infinite_connectivity(g)
    if connectivity == "disconnected":
        failures.append("infinite graph is disconnected")

    deg = g.degree_profile()
    if connectivity == "connected":
        bipartite = _periodic_bipartite(g)
    else:
        bipartite = _patch_bipartite(g)
    return GraphDiagnostics(
        symmetric=symmetric,
        self_loops=self_loops,
        connectivity=connectivity,
        degree_profile=deg,
        regular=len(set(deg)) == 1,
        bipartite=bipartite,
        half_degree=g.half_degree,
        max_offset=g.max_offset,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# preset catalog
# ---------------------------------------------------------------------------


def _zd(d: int) -> PeriodicGraph:
    if d < 1:
        raise GraphValidationError("zd needs dimension >= 1")
    edges = []
    for i in range(d):
        o = [0] * d
        o[i] = 1
        edges.append((0, 0, tuple(o)))
    return PeriodicGraph.from_edges(d, ("0",), (0.0,), edges)


def _triangular() -> PeriodicGraph:
    edges = [(0, 0, (1, 0)), (0, 0, (0, 1)), (0, 0, (1, 1))]
    emb = {"basis": [[1.0, 0.0], [0.5, np.sqrt(3) / 2]], "positions": {"0": [0.0, 0.0]}}
    return PeriodicGraph.from_edges(2, ("0",), (0.0,), edges, embedding=emb)


def _kings() -> PeriodicGraph:
    edges = [(0, 0, (1, 0)), (0, 0, (0, 1)), (0, 0, (1, 1)), (0, 0, (1, -1))]
    return PeriodicGraph.from_edges(2, ("0",), (0.0,), edges)


def _honeycomb() -> PeriodicGraph:
    edges = [(0, 1, (0, 0)), (0, 1, (-1, 0)), (0, 1, (0, -1))]
    emb = {"basis": [[1.0, 0.0], [0.5, np.sqrt(3) / 2]],
           "positions": {"A": [0.0, 0.0], "B": [0.5, np.sqrt(3) / 6]}}
    return PeriodicGraph.from_edges(2, ("A", "B"), (0.0, 0.0), edges, embedding=emb)


def _z_range_k(k: int) -> PeriodicGraph:
    if k < 1:
        raise GraphValidationError("z_range_k needs k >= 1")
    edges = [(0, 0, (j,)) for j in range(1, k + 1)]
    return PeriodicGraph.from_edges(1, ("0",), (0.0,), edges)


def _z_periodic_potential(Q) -> PeriodicGraph:
    Q = [float(q) for q in np.atleast_1d(Q)]
    nu = len(Q)
    if nu < 1:
        raise GraphValidationError("z_periodic_potential needs nu >= 1")
    labels = tuple(str(i) for i in range(nu))
    if nu == 1:
        edges = [(0, 0, (1,))]
    else:
        edges = [(i, i + 1, (0,)) for i in range(nu - 1)]
        edges.append((nu - 1, 0, (1,)))
    return PeriodicGraph.from_edges(1, labels, tuple(Q), edges)


def _z2_block_potential(Q) -> PeriodicGraph:
    """Z^2 with a 2x2-periodic potential, realized as a nu=4 cell."""
    Q = [float(q) for q in np.atleast_1d(Q)]
    if len(Q) != 4:
        raise GraphValidationError("z2_block_potential needs exactly 4 values")
    # cell vertices: (0,0) (0,1) (1,0) (1,1), index = 2*i + j
    idx = lambda i, j: 2 * i + j
    labels = tuple(f"{i}{j}" for i in (0, 1) for j in (0, 1))
    edges = []
    for i, j in itertools.product((0, 1), repeat=2):
        # step in x
        if i == 0:
            edges.append((idx(0, j), idx(1, j), (0, 0)))
        else:
            edges.append((idx(1, j), idx(0, j), (1, 0)))
        # step in y
        if j == 0:
            edges.append((idx(i, 0), idx(i, 1), (0, 0)))
        else:
            edges.append((idx(i, 1), idx(i, 0), (0, 1)))
    return PeriodicGraph.from_edges(2, labels, tuple(Q), edges)


def _ladder() -> PeriodicGraph:
    return cartesian_product(_zd(1), path_graph(2))


def _z_box_p2() -> PeriodicGraph:
    return strong_product(_zd(1), path_graph(2))


def _decorated_z_triangle() -> PeriodicGraph:
    return decorate(_zd(1), cycle_graph(3), anchor=0)


def _z_tensor_c3p4() -> PeriodicGraph:
    return tensor_product(_zd(1), cycle_graph(3).cartesian(path_graph(4)))


def _z_even_odd() -> PeriodicGraph:
    return PeriodicGraph.from_edges(1, ("0",), (0.0,), [(0, 0, (2,))])


PRESETS = {
    "zd": {
        "build": lambda params: _zd(int(params.get("d", params.get("dim", 1)))),
        "doc": "Z^d adjacency; nu=1, D=d, q=1",
    },
    "triangular": {
        "build": lambda params: _triangular(),
        "doc": "triangular lattice; nu=1, d=2, D=3 (6-regular), q=1",
    },
    "kings": {
        "build": lambda params: _kings(),
        "doc": "king's graph; nu=1, d=2, D=4 (8-regular), q=1",
    },
    "honeycomb": {
        "build": lambda params: _honeycomb(),
        "doc": "honeycomb lattice; nu=2, d=2, 3-regular, q=1",
    },
    "z-range-k": {
        "build": lambda params: _z_range_k(int(params.get("k", 2))),
        "doc": "Z with edges up to distance k; nu=1, d=1, D=k, q=k",
    },
    "z-periodic-potential": {
        "build": lambda params: _z_periodic_potential(params.get("Q", [0.0, 0.0])),
        "doc": "Z with nu-periodic potential; nu=len(Q), d=1, q=1",
    },
    "z2-block-potential": {
        "build": lambda params: _z2_block_potential(params.get("Q", [0.0] * 4)),
        "doc": "Z^2 with 2x2-periodic potential (open-problem probe); nu=4, d=2",
    },
    "ladder": {
        "build": lambda params: _ladder(),
        "doc": "Z box P_2; nu=2, d=1, 3-regular",
    },
    "z-box-p2": {
        "build": lambda params: _z_box_p2(),
        "doc": "Z strong-product P_2 (boxes); nu=2, d=1, flat band at -1",
    },
    "decorated-z-triangle": {
        "build": lambda params: _decorated_z_triangle(),
        "doc": "Z decorated with triangles; nu=3, d=1, flat band at -1",
    },
    "z-tensor-c3p4": {
        "build": lambda params: _z_tensor_c3p4(),
        "doc": "Z tensor (C_3 box P_4); nu=12, d=1, coincidence counterexample",
    },
    "z-even-odd": {
        "build": lambda params: _z_even_odd(),
        "doc": "Z with distance-2 edges only; nu=1, d=1, disconnected demo",
    },
}


def _norm_name(name: str) -> str:
    return name.strip().lower().replace("_", "-")


def build_preset(name: str, params: dict | None = None) -> PeriodicGraph:
    """Construct a catalog model by name.  Raises on unknown names/params."""
    key = _norm_name(name)
    if key not in PRESETS:
        raise GraphValidationError(
            f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}")
    return PRESETS[key]["build"](params or {})


def preset_catalog() -> dict[str, str]:
    return {name: entry["doc"] for name, entry in sorted(PRESETS.items())}


# ---------------------------------------------------------------------------
# graph-spec files
# ---------------------------------------------------------------------------


def load_graph_spec(path) -> PeriodicGraph:
    """Load a graph-spec JSON file.

    Schema: ``{dim, vertices: [{label, Q}], edges: [{src, dst, offset}],
    embedding?}``.  Missing reverse templates are auto-completed with a
    warning; src/dst may be labels or cell indices.
    """
    with open(path) as fh:
        data = json.load(fh)
    dim = int(data["dim"])
    labels = [str(v["label"]) for v in data["vertices"]]
    potential = [float(v.get("Q", 0.0)) for v in data["vertices"]]
    lookup = {lab: i for i, lab in enumerate(labels)}

    def resolve(x):
        if isinstance(x, str):
            return lookup[x]
        return int(x)

    templates: dict[Template, int] = {}
    for e in data["edges"]:
        n, l = resolve(e["src"]), resolve(e["dst"])
        o = _canon_offset(e["offset"])
        mult = int(e.get("mult", 1))
        templates[(n, l, o)] = templates.get((n, l, o), 0) + mult
    completed = 0
    for (n, l, o), mult in list(templates.items()):
        rev = (l, n, _neg(o))
        have = templates.get(rev, 0)
        if have < mult:
            templates[rev] = mult
            completed += 1
    if completed:
        warnings.warn(f"auto-completed {completed} reverse edge template(s) "
                      "to restore undirected symmetry")
    return PeriodicGraph(dim, tuple(labels), tuple(potential), templates,
                         embedding=data.get("embedding"))


def save_graph_spec(g: PeriodicGraph, path) -> None:
    edges = []
    for (n, l, o), mult in sorted(g.templates.items()):
        if (l, n, _neg(o)) < (n, l, o):
            continue  # emit one direction only
        entry = {"src": g.cell_labels[n], "dst": g.cell_labels[l], "offset": list(o)}
        if mult != 1:
            entry["mult"] = mult
        edges.append(entry)
    data = {
        "dim": g.dim,
        "vertices": [{"label": lab, "Q": q}
                     for lab, q in zip(g.cell_labels, g.potential)],
        "edges": edges,
    }
    if g.embedding is not None:
        data["embedding"] = g.embedding
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
