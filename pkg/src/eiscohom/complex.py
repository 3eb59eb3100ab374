"""The Voronoi chain complex of Gamma_0(n) in degrees 2..4.

Cell orbits are orbits of the representative-cell stabilizers acting on the
coset space P^2(O/n); orbits whose representative is fixed by an
orientation-reversing stabilizer element die over C.  Boundary matrices are
assembled from the static facet data of the cell database, with all signs
reduced to vertex-permutation parities (every cell in degrees 2..4 is a
simplex).  dim H^5(Gamma_0(n); C) = dim H_3 of this complex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from . import voronoi
from .eisenstein import (
    EisIdeal, Level, is_unit, level_for, mat_det, mat_adj, mat_mul, mat_vec,
    unit_inv, emul,
)
from .linalg import (
    SparseMat, kernel_basis, rank, solve_exact, PRIME_POOL,
    _back_substitute, _echelon_exact, _to_int_rows, _primitive,
)

DEGREE_TYPES = {2: ("g1",), 3: ("f1", "f2"), 4: ("e1", "e2", "e3")}
ALL_TYPES = ("g1", "f1", "f2", "e1", "e2", "e3")


def _mat_inv_gl3(m):
    d = mat_det(m)
    assert is_unit(d)
    di = unit_inv(d)
    adj = mat_adj(m)
    return tuple(tuple(emul(di, x) for x in row) for row in adj)


@lru_cache(maxsize=None)
def _facet_data(t):
    """Static facet table for a representative cell type.

    Per deletion position i (0-based): None when the facet is at infinity,
    else (target type, h, h_inv, static sign) where h carries the facet onto
    the target representative and the sign folds the boundary alternation
    with the vertex-matching parity.
    """
    cell = voronoi.VoronoiCell.rep(t)
    out = []
    for i in range(len(cell.vertices)):
        verts = tuple(v for j, v in enumerate(cell.vertices) if j != i)
        if voronoi.is_at_infinity(verts):
            out.append(None)
            continue
        t2 = voronoi._classify(verts, cell.dim - 1)
        if t2 is None:
            raise RuntimeError(f"unclassifiable facet {t}:{i}")
        rep2 = voronoi.VoronoiCell.rep(t2)
        probe = voronoi.VoronoiCell("?", cell.dim - 1, verts)
        h = voronoi.cell_equiv(probe, rep2)
        assert h is not None
        perm = voronoi.ray_permutation(h, verts, rep2.vertices)
        assert perm is not None
        sign = (-1) ** (i + 1) * voronoi.perm_sign(perm)
        out.append((t2, h, _mat_inv_gl3(h), sign))
    return tuple(out)


@dataclass
class CellOrbits:
    """Orbits of one cell type under Gamma_0(n), via the stabilizer action
    on coset labels."""

    type_name: str
    level: Level
    orbit_of: list          # point index -> orbit id
    reps: list              # orbit id -> representative point index
    sign_to_rep: list       # point index -> character of the transporter word
    parent: list            # BFS tree (point -> parent point, -1 at reps)
    parent_gen: list        # point -> generator index used from parent
    killed: list            # orbit id -> bool
    col_of: list            # orbit id -> matrix index (None when killed)
    ncols: int
    gens: list              # generator matrices (mod global units)

    def transporter(self, point):
        """s in the stabilizer with rep_row * s = point_row (exact matrix)."""
        from .eisenstein import MAT_ID
        word = []
        p = point
        while self.parent[p] != -1:
            word.append(self.parent_gen[p])
            p = self.parent[p]
        m = MAT_ID
        for gi in reversed(word):
            m = mat_mul(m, self.gens[gi])
        return m


def _build_orbits(level, t, order=None):
    stab = voronoi.stabilizer(t)
    gens = stab.generators()
    gen_mats = [level.reduce_mat(g) for g, _ in gens]
    gen_signs = [s for _, s in gens]
    pts = level.enumerate_points()
    n = len(pts)
    index = {r: i for i, r in enumerate(pts)}
    orbit_of = [-1] * n
    sign_to_rep = [1] * n
    parent = [-1] * n
    parent_gen = [-1] * n
    reps = []
    scan = range(n) if order is None else order
    for start in scan:
        if orbit_of[start] != -1:
            continue
        oid = len(reps)
        reps.append(start)
        orbit_of[start] = oid
        frontier = [start]
        while frontier:
            nxt = []
            for u in frontier:
                row = pts[u]
                for gi, gm in enumerate(gen_mats):
                    vrow = level.canonical_row(level.row_action(row, gm))
                    v = index[vrow]
                    if orbit_of[v] == -1:
                        orbit_of[v] = oid
                        sign_to_rep[v] = sign_to_rep[u] * gen_signs[gi]
                        parent[v] = u
                        parent_gen[v] = gi
                        nxt.append(v)
            frontier = nxt
    # killed orbits: an orientation-reversing stabilizer element fixes the rep
    elem_mats = [level.reduce_mat(m) for m in stab.elements]
    killed = []
    for rep in reps:
        row = pts[rep]
        dead = False
        for m, s in zip(elem_mats, stab.signs):
            if s == -1 and level.canonical_row(level.row_action(row, m)) == row:
                dead = True
                break
        killed.append(dead)
    col_of = []
    ncols = 0
    for oid in range(len(reps)):
        if killed[oid]:
            col_of.append(None)
        else:
            col_of.append(ncols)
            ncols += 1
    gens_exact = [g for g, _ in gens]
    return CellOrbits(t, level, orbit_of, reps, sign_to_rep, parent, parent_gen,
                      killed, col_of, ncols, gens_exact)


@dataclass
class VoronoiComplexLevel:
    """Degrees 2..4 of the Voronoi complex at one level."""

    ideal: EisIdeal
    level: Level
    orbits: dict              # type name -> CellOrbits
    basis: dict               # degree -> list of (type, orbit id)
    d3: SparseMat             # V3 -> V2
    d4: SparseMat             # V4 -> V3
    _ranks: dict = field(default_factory=dict)
    _cycles: list = None
    _functionals: list = None
    _completions: dict = field(default_factory=dict)

    @property
    def label(self):
        return self.ideal.label

    def dims(self):
        return {k: len(v) for k, v in self.basis.items()}

    def rank_d3(self):
        if 3 not in self._ranks:
            self._ranks[3] = rank(self.d3)
        return self._ranks[3]

    def rank_d4(self):
        if 4 not in self._ranks:
            self._ranks[4] = rank(self.d4)
        return self._ranks[4]

    def homology_dim(self):
        n3 = len(self.basis[3])
        return (n3 - self.rank_d3()) - self.rank_d4()

    # -- explicit cycles and the projection functionals --------------------

    def cycle_basis(self):
        """Integral 3-cycles spanning ker d3 modulo im d4."""
        if self._cycles is None:
            self._cycles = _cycle_basis(self.d3, self.d4, self.homology_dim())
        return self._cycles

    def functionals(self):
        """Rational functionals phi with phi(im d4) = 0, phi_i(C_j) = delta_ij;
        they read off homology coordinates of exact 3-cycles."""
        if self._functionals is None:
            cycles = self.cycle_basis()
            h = len(cycles)
            n3 = len(self.basis[3])
            d4t = self.d4.transpose()
            rows = {i: dict(r) for i, r in d4t.data.items()}
            nd4 = self.d4.cols
            for k, cyc in enumerate(cycles):
                rows[nd4 + k] = {j: v for j, v in enumerate(cyc) if v}
            stacked = SparseMat(nd4 + h, n3, rows)
            rhs = []
            for k in range(h):
                rhs.append({nd4 + k: 1})
            sols = solve_exact(stacked, rhs)
            self._functionals = sols
        return self._functionals

    def homology_coordinates(self, vec):
        """Coordinates of an exact 3-cycle in the cycle basis mod im d4."""
        if any(x != 0 for x in self.d3.mul_vec(vec)):
            raise ArithmeticError("vector is not a 3-cycle")
        out = []
        for phi in self.functionals():
            s = Fraction(0)
            for j, x in enumerate(vec):
                if x:
                    s += phi[j] * x
            out.append(s)
        return out

    def completion(self, point_index):
        """Cached GL_3(O) lift of a coset representative."""
        if point_index not in self._completions:
            self._completions[point_index] = self.level.completion(point_index)
        return self._completions[point_index]


def _orbit_sign_lookup(orb, level, row):
    """(orbit id, matrix index or None, character of transporter) for a row."""
    crow = level.canonical_row(row)
    p = level.point_index(crow)
    oid = orb.orbit_of[p]
    return oid, orb.col_of[oid], orb.sign_to_rep[p], p


def build_complex(ideal, order=None):
    """Assemble the complex at a level; `order` optionally permutes the scan
    order of coset points (representative choice), for invariance tests."""
    if isinstance(ideal, (tuple, list)):
        ideal = EisIdeal.from_label(tuple(ideal))
    level = level_for(ideal.label)
    pts = level.enumerate_points()
    orbits = {t: _build_orbits(level, t, order) for t in ALL_TYPES}
    basis = {}
    for deg, types in DEGREE_TYPES.items():
        b = []
        for t in types:
            orb = orbits[t]
            for oid in range(len(orb.reps)):
                if not orb.killed[oid]:
                    b.append((t, oid))
        basis[deg] = b
    d3 = _boundary_matrix(level, orbits, basis, 3)
    d4 = _boundary_matrix(level, orbits, basis, 4)
    prod = d3.matmul(d4)
    if not prod.is_zero():
        raise ArithmeticError(f"d3 . d4 != 0 at level {ideal}")
    return VoronoiComplexLevel(ideal, level, orbits, basis, d3, d4)


def _boundary_matrix(level, orbits, basis, deg):
    pts = level.enumerate_points()
    row_base = {}
    off = 0
    for t in DEGREE_TYPES[deg - 1]:
        row_base[t] = off
        off += orbits[t].ncols
    nrows = off
    cols = basis[deg]
    col_pos = {key: i for i, key in enumerate(cols)}
    entries = {}
    hinv_mod = {}
    for ci, (t, oid) in enumerate(cols):
        orb = orbits[t]
        rep_row = pts[orb.reps[oid]]
        for fd in _facet_data(t):
            if fd is None:
                continue
            t2, h, hinv, static_sign = fd
            key = (t, t2, id(h))
            hm = hinv_mod.get(key)
            if hm is None:
                hm = level.reduce_mat(hinv)
                hinv_mod[key] = hm
            q_row = level.row_action(rep_row, hm)
            orb2 = orbits[t2]
            oid2, col2, sgn, _ = _orbit_sign_lookup(orb2, level, q_row)
            if col2 is None:
                continue
            r = row_base[t2] + col2
            acc = entries.setdefault(ci, {})
            nv = acc.get(r, 0) + static_sign * sgn
            if nv == 0:
                acc.pop(r, None)
            else:
                acc[r] = nv
    data = {}
    for ci, colmap in entries.items():
        for r, v in colmap.items():
            data.setdefault(r, {})[ci] = v
    return SparseMat(nrows, len(cols), data)


def _cycle_basis(d3, d4, h):
    """h exact kernel vectors of d3 independent modulo the column span of d4."""
    if h == 0:
        return []
    rows = _to_int_rows(d3)
    pivots, _ = _echelon_exact(rows, d3.cols)
    pivot_cols = {c for _, c in pivots}
    free = [j for j in range(d3.cols) if j not in pivot_cols]
    # choose free columns whose kernel classes are independent mod im d4 (mod p)
    p = PRIME_POOL[3]
    piv_mod = [({j: v % p for j, v in r.items() if v % p} , c) for r, c in pivots]
    piv_mod = [(r, c) for r, c in piv_mod if r]
    image_ech = _ModEchelon(p, d3.cols)
    for j in range(d4.cols):
        col = [0] * d4.rows
        for i, row in d4.data.items():
            v = row.get(j)
            if v:
                col[i] = v % p
        image_ech.insert({i: v for i, v in enumerate(col) if v})
    chosen = []
    for j in free:
        vals = {j: 1}
        sol = _mod_back_substitute(piv_mod, vals, p)
        if image_ech.insert(sol):
            chosen.append(j)
            if len(chosen) == h:
                break
    if len(chosen) < h:
        raise ArithmeticError("mod-p selection of homology classes failed")
    out = []
    for j in chosen:
        sol = _back_substitute(pivots, d3.cols, {j: Fraction(1)})
        vec = [Fraction(0)] * d3.cols
        for c, x in sol.items():
            vec[c] = x
        out.append(_primitive(vec))
    for v in out:
        if any(x != 0 for x in d3.mul_vec(v)):
            raise ArithmeticError("cycle basis vector fails d3 v = 0")
    return out


def _mod_back_substitute(pivots, values, p):
    out = dict(values)
    for prow, col in reversed(pivots):
        s = 0
        for j, v in prow.items():
            if j == col:
                continue
            x = out.get(j)
            if x:
                s += v * x
        out[col] = (-s * pow(prow[col], -1, p)) % p
    return {j: v for j, v in out.items() if v}


class _ModEchelon:
    """Incremental row echelon mod p for independence testing."""

    def __init__(self, p, ncols):
        self.p = p
        self.rows = {}  # pivot col -> row dict

    def insert(self, row):
        row = dict(row)
        p = self.p
        while row:
            c = min(row)
            piv = self.rows.get(c)
            if piv is None:
                inv = pow(row[c], -1, p)
                self.rows[c] = {j: (v * inv) % p for j, v in row.items()}
                return True
            f = row[c]
            row = {j: v for j, v in
                   ((j, (row.get(j, 0) - f * piv.get(j, 0)) % p)
                    for j in set(row) | set(piv)) if v}
        return False


# ---------------------------------------------------------------------------
# public helpers


@lru_cache(maxsize=16)
def complex_at(label):
    return build_complex(EisIdeal.from_label(tuple(label)))


def homology_dim(ideal):
    label = tuple(ideal.label) if isinstance(ideal, EisIdeal) else tuple(ideal)
    return complex_at(label).homology_dim()


def cycle_basis(ideal):
    label = tuple(ideal.label) if isinstance(ideal, EisIdeal) else tuple(ideal)
    cx = complex_at(label)
    if cx.homology_dim() == 0:
        raise ValueError(f"no cohomology at level {label}")
    return cx.cycle_basis()
