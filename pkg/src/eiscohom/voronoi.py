"""The GL_3(O)-cell database of the Voronoi decomposition for Q(sqrt(-3)).

Thirteen minimal vectors (columns of the matrix A) support representatives
of every cell class in dimensions 2..8.  The database is hard-coded and
self-checked: f-vectors recomputed from exact rank tests, facet incidences
reclassified through explicit GL_3(O) equivalences.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from itertools import combinations, permutations

from .eisenstein import (
    UNITS, ZERO, ONE, conj, eadd, emul, esub, is_unit, is_zero, mat_adj,
    mat_det, mat_from_cols, mat_mul, mat_scale_div, mat_vec, norm,
    unit_canonical_with_unit, vec_ray_canonical,
)

# columns of A; entries are (a, b) = a + b*w, w^2 = w - 1
A_COLUMNS = (
    ((1, 0), (-1, -1), (1, 0)),    # 1
    ((1, 0), (-1, -1), (0, 1)),    # 2
    ((1, 0), (0, -1), (0, 0)),     # 3
    ((1, 0), (-1, 0), (0, 0)),     # 4
    ((1, 0), (0, -1), (0, 1)),     # 5
    ((1, 0), (-1, 0), (1, 0)),     # 6
    ((0, 0), (1, 0), (-1, 0)),     # 7
    ((0, 0), (1, 0), (0, 0)),      # 8
    ((0, 0), (0, 0), (1, 0)),      # 9
    ((1, 0), (0, -1), (-1, 1)),    # 10  (third entry w^2)
    ((1, 0), (-1, 0), (0, 1)),     # 11
    ((1, 0), (0, 0), (0, 0)),      # 12
    ((0, 0), (1, 0), (0, -1)),     # 13
)

# representative cells: name -> (dimension, vertex indices into A, 1-based)
CELL_INDEX = {
    "a1": (8, (1, 2, 3, 4, 5, 6, 7, 8, 9)),
    "a2": (8, (2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13)),
    "b1": (7, (1, 2, 3, 4, 5, 6, 7, 8)),
    "b2": (7, (4, 6, 7, 8, 9, 11, 12, 13)),
    "c1": (6, (1, 2, 3, 4, 5, 6, 7)),
    "c2": (6, (4, 6, 8, 9, 11, 12, 13)),
    "c3": (6, (4, 6, 7, 8, 9, 11, 13)),
    "d1": (5, (1, 2, 3, 4, 5, 6)),
    "d2": (5, (1, 2, 3, 4, 5, 7)),
    "d3": (5, (4, 6, 8, 9, 11, 12)),
    "d4": (5, (4, 8, 9, 11, 12, 13)),
    "e1": (4, (1, 2, 3, 4, 5)),
    "e2": (4, (1, 2, 3, 4, 7)),
    "e3": (4, (4, 6, 8, 9, 11)),
    "f1": (3, (1, 2, 3, 4)),
    "f2": (3, (1, 2, 4, 5)),
    "g1": (2, (1, 2, 3)),
}

TYPES_BY_DIM = {
    8: ("a1", "a2"),
    7: ("b1", "b2"),
    6: ("c1", "c2", "c3"),
    5: ("d1", "d2", "d3", "d4"),
    4: ("e1", "e2", "e3"),
    3: ("f1", "f2"),
    2: ("g1",),
}


def matrix_A():
    """The thirteen minimal vectors, as printed."""
    return A_COLUMNS


@dataclass(frozen=True)
class VoronoiCell:
    """A cell given by explicit vertex vectors (a representative or a
    GL_3(O)-translate of one)."""

    name: str
    dim: int
    vertices: tuple  # tuple of column vectors

    @staticmethod
    def rep(name):
        dim, idx = CELL_INDEX[name]
        return VoronoiCell(name, dim, tuple(A_COLUMNS[i - 1] for i in idx))

    @property
    def indices(self):
        dim, idx = CELL_INDEX[self.name]
        return idx

    def translate(self, gamma):
        return VoronoiCell(self.name, self.dim,
                           tuple(mat_vec(gamma, v) for v in self.vertices))

    def ray_set(self):
        return frozenset(vec_ray_canonical(v) for v in self.vertices)


def cell_reps(dim):
    if dim not in TYPES_BY_DIM:
        raise ValueError(f"no representative cells in dimension {dim}")
    return [VoronoiCell.rep(t) for t in TYPES_BY_DIM[dim]]


def all_cell_reps():
    return {t: VoronoiCell.rep(t) for ts in TYPES_BY_DIM.values() for t in ts}


# ---------------------------------------------------------------------------
# q-map and exact rank helpers


def q_map(v):
    """Rank-one Hermitian form v v*; 3x3 matrix of O_F entries."""
    if all(is_zero(x) for x in v):
        raise ValueError("q of the zero vector")
    return tuple(tuple(emul(v[i], conj(v[j])) for j in range(3)) for i in range(3))


def q_vec9(v):
    """q(v) flattened to 9 integer coordinates (diag, then off-diag pairs)."""
    h = q_map(v)
    out = []
    for i in range(3):
        a, b = h[i][i]
        assert b == 0
        out.append(a)
    for (i, j) in ((0, 1), (0, 2), (1, 2)):
        a, b = h[i][j]
        out.extend((a, b))
    return tuple(out)


def herm_det(h):
    d = mat_det(h)
    assert d[1] == 0, "determinant of a Hermitian form must be rational"
    return d[0]


def herm_sum(forms):
    out = [[ZERO] * 3 for _ in range(3)]
    for h in forms:
        for i in range(3):
            for j in range(3):
                out[i][j] = eadd(out[i][j], h[i][j])
    return tuple(tuple(row) for row in out)


def is_at_infinity(vertices):
    """True iff the cone spanned by the q(v) misses the open positive cone,
    i.e. the sum of the rank-one forms is singular."""
    vertices = list(vertices)
    if not vertices:
        raise ValueError("empty vertex set")
    return herm_det(herm_sum(q_map(v) for v in vertices)) == 0


def _int_rank(vectors):
    """Rank of integer row vectors, fraction-free elimination."""
    rows = [list(v) for v in vectors]
    ncols = len(rows[0]) if rows else 0
    rank = 0
    col = 0
    while col < ncols and rank < len(rows):
        piv = None
        for r in range(rank, len(rows)):
            if rows[r][col] != 0:
                piv = r
                break
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pr = rows[rank]
        for r in range(rank + 1, len(rows)):
            if rows[r][col] != 0:
                a, b = pr[col], rows[r][col]
                rows[r] = [a * x - b * y for x, y in zip(rows[r], pr)]
        rank += 1
        col += 1
    return rank


def q_rank(vertex_vectors):
    return _int_rank([q_vec9(v) for v in vertex_vectors])


def cell_cone_dim(cell):
    return q_rank(cell.vertices)


def _nullspace_vector(rows):
    """One nonzero rational kernel vector of the row span (as integers)."""
    m = [list(map(Fraction, r)) for r in rows]
    ncols = len(m[0])
    pivots = []
    rank = 0
    for col in range(ncols):
        piv = None
        for r in range(rank, len(m)):
            if m[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        pr = m[rank]
        inv = pr[col]
        m[rank] = [x / inv for x in pr]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[rank])]
        pivots.append(col)
        rank += 1
    free = [c for c in range(ncols) if c not in pivots]
    if not free:
        return None
    j = free[0]
    v = [Fraction(0)] * ncols
    v[j] = Fraction(1)
    for r, col in reversed(list(enumerate(pivots))):
        v[col] = -m[r][j]
    den = 1
    for x in v:
        den = den * x.denominator // __import__("math").gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = __import__("math").gcd(g, x)
    return tuple(x // g for x in ints)


# ---------------------------------------------------------------------------
# face lattice of the top cells (exact)


@lru_cache(maxsize=None)
def _facet_sets(name):
    """Facets of the cone over cell `name`, as frozensets of vertex positions."""
    cell = VoronoiCell.rep(name)
    qs = [q_vec9(v) for v in cell.vertices]
    n = len(qs)
    ambient = _int_rank(qs)
    facets = set()
    for sub in combinations(range(n), ambient - 1):
        rows = [qs[i] for i in sub]
        if _int_rank(rows) != ambient - 1:
            continue
        normal = _nullspace_vector(rows)
        if normal is None:
            continue
        pos = neg = False
        onset = []
        for i in range(n):
            s = sum(a * b for a, b in zip(normal, qs[i]))
            if s > 0:
                pos = True
            elif s < 0:
                neg = True
            else:
                onset.append(i)
        if pos and neg:
            continue
        facets.add(frozenset(onset))
    return frozenset(facets)


@lru_cache(maxsize=None)
def face_lattice(name):
    """f-vector of the polytope conv{q(v)} for a cell, by exact rank tests."""
    cell = VoronoiCell.rep(name)
    qs = [q_vec9(v) for v in cell.vertices]
    n = len(qs)
    facets = set(_facet_sets(name))
    faces = set(facets)
    faces.add(frozenset(range(n)))
    frontier = set(facets)
    while frontier:
        new = set()
        for f in frontier:
            for g in facets:
                h = f & g
                if h not in faces:
                    new.add(h)
        faces |= new
        frontier = new
    rank_memo = {}

    def rk(s):
        if s not in rank_memo:
            rank_memo[s] = _int_rank([qs[i] for i in s]) if s else 0
        return rank_memo[s]

    ambient = rk(frozenset(range(n)))
    fvec = [0] * (ambient + 1)  # slots for dims -1 .. ambient-1
    for f in faces:
        fvec[rk(f)] += 1
    return tuple(fvec)


# ---------------------------------------------------------------------------
# GL_3(O)-equivalence of cells


def _det3(v0, v1, v2):
    return mat_det(mat_from_cols(v0, v1, v2))


@lru_cache(maxsize=None)
def _anchor(name):
    """First independent vertex triple of the rep, with adjugate data."""
    cell = VoronoiCell.rep(name)
    return _anchor_of_vertices(cell.vertices)


def _anchor_of_vertices(vertices):
    for tri in combinations(range(len(vertices)), 3):
        d = _det3(*(vertices[i] for i in tri))
        if not is_zero(d):
            m = mat_from_cols(*(vertices[i] for i in tri))
            return tri, m, mat_adj(m), d, norm(d)
    raise ValueError("degenerate vertex set")


def cell_equiv(c1, c2, all_solutions=False):
    """gamma in GL_3(O) with gamma . c1 = c2 as vertex rays, or None.

    With all_solutions=True, returns every solution normalized modulo the
    six global units (first match order is deterministic).
    """
    if c1.dim != c2.dim:
        raise ValueError("cells of different dimension")
    if len(c1.vertices) != len(c2.vertices):
        return [] if all_solutions else None
    tri, _, adj, det, detn = _anchor_of_vertices(c1.vertices)
    rays1 = c1.ray_set()
    rays2 = c2.ray_set()
    verts2 = list(c2.vertices)
    sols = []
    seen = set()
    for triple in permutations(range(len(verts2)), 3):
        w = [verts2[i] for i in triple]
        dw = _det3(*w)
        if norm(dw) != detn:
            continue
        for u2 in UNITS:
            for u3 in UNITS:
                cols = (w[0], (emul(u2, w[1][0]), emul(u2, w[1][1]), emul(u2, w[1][2])),
                        (emul(u3, w[2][0]), emul(u3, w[2][1]), emul(u3, w[2][2])))
                num = mat_mul(mat_from_cols(*cols), adj)
                g = mat_scale_div(num, det)
                if g is None:
                    continue
                if not is_unit(mat_det(g)):
                    continue
                image = frozenset(vec_ray_canonical(mat_vec(g, v)) for v in c1.vertices)
                if image != rays2:
                    continue
                gn = _normalize_global_unit(g)
                if not all_solutions:
                    return gn
                if gn not in seen:
                    seen.add(gn)
                    sols.append(gn)
    return sols if all_solutions else None


def _normalize_global_unit(g):
    for row in g:
        for x in row:
            if not is_zero(x):
                _, u = unit_canonical_with_unit(x)
                if u == ONE:
                    return g
                return tuple(tuple(emul(u, y) for y in r) for r in g)
    raise ValueError("zero matrix")


def ray_permutation(gamma, src_vertices, dst_vertices):
    """Permutation p with ray(gamma src[i]) = ray(dst[p[i]]), or None."""
    dst = {}
    for j, w in enumerate(dst_vertices):
        dst[vec_ray_canonical(w)] = j
    perm = []
    for v in src_vertices:
        r = vec_ray_canonical(mat_vec(gamma, v))
        if r not in dst:
            return None
        perm.append(dst[r])
    if len(set(perm)) != len(perm):
        return None
    return tuple(perm)


def perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j = i
        clen = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True)
class Stabilizer:
    """Setwise stabilizer of a cell modulo the six global units, with the
    orientation character given by vertex-permutation parity."""

    cell_name: str
    elements: tuple        # matrices, unit-normalized
    perms: tuple           # induced permutations of the printed vertex order
    signs: tuple           # orientation character values

    def __len__(self):
        return len(self.elements)

    def order_with_units(self):
        return 6 * len(self.elements)

    def sign_of(self, idx):
        return self.signs[idx]

    def generators(self):
        """Greedy small generating set, as (matrix, sign) pairs."""
        from .eisenstein import MAT_ID
        sign_of = dict(zip(self.elements, self.signs))
        chosen = []
        closure = {_normalize_global_unit(MAT_ID)}
        for m in self.elements:
            if m in closure:
                continue
            chosen.append((m, sign_of[m]))
            while True:
                new = set()
                for x in closure | {m}:
                    for g, _ in chosen:
                        y = _normalize_global_unit(mat_mul(x, g))
                        if y not in closure:
                            new.add(y)
                if not new:
                    break
                closure |= new
            if len(closure) == len(self.elements):
                break
        return chosen


@lru_cache(maxsize=None)
def stabilizer(name):
    cell = VoronoiCell.rep(name)
    sols = cell_equiv(cell, cell, all_solutions=True)
    elements, perms, signs = [], [], []
    for g in sols:
        p = ray_permutation(g, cell.vertices, cell.vertices)
        assert p is not None
        elements.append(g)
        perms.append(p)
        signs.append(perm_sign(p))
    order = sorted(range(len(elements)), key=lambda i: (perms[i], elements[i]))
    return Stabilizer(name,
                      tuple(elements[i] for i in order),
                      tuple(perms[i] for i in order),
                      tuple(signs[i] for i in order))


def is_orientable(name):
    """False iff some stabilizer element reverses orientation."""
    return all(s == 1 for s in stabilizer(name).signs)


# ---------------------------------------------------------------------------
# facets with classification


AT_INFINITY = "infty"


def _type_signature(vertices):
    """GL_3(O)-invariant: sorted det-norms over all vertex triples."""
    return tuple(sorted(norm(_det3(*tri)) for tri in combinations(vertices, 3)))


@lru_cache(maxsize=None)
def _rep_signatures(dim):
    return {t: _type_signature(VoronoiCell.rep(t).vertices)
            for t in TYPES_BY_DIM.get(dim, ())}


def _classify(vertices, dim):
    """Type name of the cell with the given vertices, or None.

    The triple-det-norm signature cuts the search: a unique signature match
    identifies the class outright (the representative list is complete), an
    ambiguous one falls back to the explicit equivalence search.
    """
    sig = _type_signature(vertices)
    candidates = [t for t, s in _rep_signatures(dim).items() if s == sig]
    if len(candidates) == 1:
        return candidates[0]
    probe = VoronoiCell("?", dim, tuple(vertices))
    for t in candidates or TYPES_BY_DIM.get(dim, ()):
        if cell_equiv(probe, VoronoiCell.rep(t)) is not None:
            return t
    return None


@lru_cache(maxsize=None)
def facets(name):
    """Facets of a representative cell: list of (vertex tuple, type tag).

    Simplex cells are handled by vertex deletion; the non-simplex a2 through
    its computed face lattice.  Facets at infinity carry the tag 'infty'.
    """
    cell = VoronoiCell.rep(name)
    out = []
    if name == "a2":
        qs = cell.vertices
        for fs in sorted(_facet_sets(name), key=sorted):
            verts = tuple(qs[i] for i in sorted(fs))
            tag = AT_INFINITY if is_at_infinity(verts) else _classify(verts, cell.dim - 1)
            if tag is None:
                raise RuntimeError(f"unclassifiable facet of {name}: {sorted(fs)}")
            out.append((verts, tag))
        return tuple(out)
    for i in range(len(cell.vertices)):
        verts = tuple(v for j, v in enumerate(cell.vertices) if j != i)
        if is_at_infinity(verts):
            out.append((verts, AT_INFINITY))
            continue
        tag = _classify(verts, cell.dim - 1)
        if tag is None:
            raise RuntimeError(f"unclassifiable facet of {name}: delete {i}")
        out.append((verts, tag))
    return tuple(out)


def facet_counts(name):
    from collections import Counter
    return dict(Counter(tag for _, tag in facets(name)))


# ---------------------------------------------------------------------------
# shipped database self-check


def load_cell_table():
    text = resources.files("eiscohom.data").joinpath("voronoi_cells.txt").read_text()
    cells = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, dim, idx = line.split(";")
        cells[name.strip()] = (int(dim), tuple(int(x) for x in idx.split(",")))
    return cells


def load_incidence_table():
    text = resources.files("eiscohom.data").joinpath("voronoi_incidence.txt").read_text()
    table = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, rest = line.split(";")
        counts = {}
        for part in rest.split(","):
            tag, num = part.split(":")
            counts[tag.strip()] = int(num)
        table[name.strip()] = counts
    return table


def self_check():
    """Verify the shipped text database against the hard-coded one."""
    assert load_cell_table() == CELL_INDEX
    for name, counts in load_incidence_table().items():
        assert facet_counts(name) == counts, name
    return True
