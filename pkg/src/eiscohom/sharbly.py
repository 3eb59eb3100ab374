"""The sharbly complex and the cycle reduction engine.

Chains are dicts from canonical symbols (tuples of spanning-point vectors,
sorted, with permutation signs absorbed into the coefficients) to rational
coefficients.  Reduction rewrites nonreduced 1-sharblies through the fixed
replacement formulas, with reducing points assigned per Gamma_0(n)-class of
faces so that shared and equivalent faces receive matching points and the
chain stays a cycle mod Gamma.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations

from . import voronoi
from .eisenstein import (
    MAT_ID, UNITS, content3, ediv_exact, eadd, emul, eneg, esub, is_unit,
    is_zero, mat_adj, mat_det, mat_from_cols, mat_mul, mat_vec,
    mat_scale_div, norm, unit_canonical_with_unit, unit_inv, vadd,
    vec_ray_canonical, vscale,
)


class ReductionError(ArithmeticError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


def spanning_point(x):
    """Ray-minimal unit-canonical representative: divide out the content,
    then normalize the leading unit."""
    if all(is_zero(c) for c in x):
        raise ValueError("zero vector has no spanning point")
    g = content3(x)
    if not is_unit(g):
        x = tuple(ediv_exact(c, g) for c in x)
    return vec_ray_canonical(x)


def _perm_parity_sorted(seq):
    """Sign of the permutation sorting seq (entries distinct)."""
    order = sorted(range(len(seq)), key=lambda i: seq[i])
    return voronoi.perm_sign(tuple(order)), tuple(seq[i] for i in order)


def canonical_symbol(vectors):
    """Canonical form of a sharbly symbol: (key, sign) or (None, 0) if the
    symbol vanishes (degenerate, or repeated ray)."""
    pts = tuple(spanning_point(v) for v in vectors)
    if len(set(pts)) != len(pts):
        return None, 0
    if _rank3(pts) < 3:
        return None, 0
    sign, key = _perm_parity_sorted(pts)
    return key, sign


def _rank3(pts):
    best = 0
    for tri in combinations(pts, 3):
        if not is_zero(mat_det(mat_from_cols(*tri))):
            return 3
        best = max(best, 2)  # refine only if needed
    # distinguish rank <= 2 precisely (enough for degeneracy tests)
    return best if len(pts) >= 2 else 1


_DET_MEMO = {}


def det_norm(tri):
    key = tuple(sorted(tri))
    v = _DET_MEMO.get(key)
    if v is None:
        v = norm(mat_det(mat_from_cols(*key)))
        _DET_MEMO[key] = v
    return v


def size_zero_sharbly(pts):
    """|Norm det| of the three spanning points."""
    return det_norm(pts)


def size_symbol(key):
    """Size of a canonical symbol: 0-sharblies directly, longer tuples as the
    max over their 0-sharbly subfaces."""
    if len(key) == 3:
        return det_norm(key)
    return max(det_norm(tri) for tri in combinations(key, 3))


def chain_size(chain):
    if not chain:
        return 0
    return max(size_symbol(k) for k in chain)


def chain_add(chain, key, coeff):
    if coeff == 0 or key is None:
        return
    nv = chain.get(key, 0) + coeff
    if nv == 0:
        chain.pop(key, None)
    else:
        chain[key] = nv


def add_symbol(chain, vectors, coeff):
    key, s = canonical_symbol(vectors)
    if key is not None:
        chain_add(chain, key, coeff * s)


def boundary(chain):
    """Alternating-sign boundary, canonicalized; degenerate faces drop."""
    out = {}
    for key, coeff in chain.items():
        n = len(key)
        for i in range(n):
            face = key[:i] + key[i + 1:]
            sign = (-1) ** (i + 1)
            add_symbol(out, face, coeff * sign)
    return out


def translate_chain(chain, gamma):
    out = {}
    for key, coeff in chain.items():
        add_symbol(out, tuple(mat_vec(gamma, v) for v in key), coeff)
    return out


# ---------------------------------------------------------------------------
# reducedness (exact, search-based; size-based tests drive the inner loop)


def _ordered_triples_with_norm(vertices, m):
    out = []
    for tri in permutations(range(len(vertices)), 3):
        if det_norm(tuple(vertices[i] for i in tri)) == m:
            out.append(tri)
    return out


def is_reduced(u):
    """True iff the spanning points embed, up to one GL_3(O) map, into the
    vertex set of a Voronoi cell (equivalently, of a1 or a2)."""
    key, _ = canonical_symbol(u)
    if key is None:
        raise ValueError("degenerate sharbly")
    pts = key
    anchor = None
    for tri in combinations(range(len(pts)), 3):
        d = mat_det(mat_from_cols(*(pts[i] for i in tri)))
        if not is_zero(d):
            anchor = tri
            break
    m = mat_from_cols(*(pts[i] for i in anchor))
    adj = mat_adj(m)
    det = mat_det(m)
    dn = norm(det)
    for top in ("a1", "a2"):
        rep = voronoi.VoronoiCell.rep(top)
        rays = rep.ray_set()
        verts = rep.vertices
        for tri in _ordered_triples_with_norm(verts, dn):
            w = [verts[i] for i in tri]
            for u2 in UNITS:
                for u3 in UNITS:
                    cols = (w[0], vscale(u2, w[1]), vscale(u3, w[2]))
                    num = mat_mul(mat_from_cols(*cols), adj)
                    g = mat_scale_div(num, det)
                    if g is None or not is_unit(mat_det(g)):
                        continue
                    images = set()
                    ok = True
                    for ptt in pts:
                        r = vec_ray_canonical(mat_vec(g, ptt))
                        if r not in rays or r in images:
                            ok = False
                            break
                        images.add(r)
                    if ok:
                        return True
    return False


# ---------------------------------------------------------------------------
# Gamma_0(n)-canonical form of 0-sharblies


def _hnf_rows(rows):
    """Row HNF over O of a nonsingular 3x3 matrix: upper triangular with
    unit-canonical pivots and class-canonical entries above them."""
    from .eisenstein import edivmod
    work = [list(r) for r in rows]
    pivots = []
    for col in range(3):
        live = [r for r in work if not is_zero(r[col])]
        assert live, "singular matrix in HNF"
        while len(live) > 1:
            live.sort(key=lambda r: norm(r[col]))
            a, b = live[0], live[1]
            q, _ = edivmod(b[col], a[col])
            for j in range(3):
                b[j] = esub(b[j], emul(q, a[j]))
            live = [r for r in live if not is_zero(r[col])]
        piv = live[0]
        _, u = unit_canonical_with_unit(piv[col])
        if u != (1, 0):
            for j in range(3):
                piv[j] = emul(u, piv[j])
        work.remove(piv)
        pivots.append(piv)
    # reduce above-pivot entries to the rounded-division residue,
    # column order fixed for canonicity
    for i in range(3):
        for k in range(i + 1, 3):
            q, _ = edivmod(pivots[i][k], pivots[k][k])
            if not is_zero(q):
                for j in range(3):
                    pivots[i][j] = esub(pivots[i][j], emul(q, pivots[k][j]))
    return tuple(tuple(r) for r in pivots)


def _solve_upper(b, m3):
    """Coefficients c with c . B = m3 for upper-triangular B (rows)."""
    c0 = ediv_exact(m3[0], b[0][0])
    c1 = ediv_exact(esub(m3[1], emul(c0, b[0][1])), b[1][1])
    c2 = ediv_exact(esub(esub(m3[2], emul(c0, b[0][2])), emul(c1, b[1][2])), b[2][2])
    return (c0, c1, c2)


def _recanon_scaled(h, scale):
    """HNF of the column-scaled lattice from the HNF of the base lattice:
    rescale, renormalize pivots, re-reduce above-pivot entries."""
    from .eisenstein import edivmod
    rows = [[emul(h[i][j], scale[j]) for j in range(3)] for i in range(3)]
    for i in range(3):
        _, u = unit_canonical_with_unit(rows[i][i])
        if u != (1, 0):
            rows[i] = [emul(u, x) for x in rows[i]]
    for i in range(3):
        for k in range(i + 1, 3):
            q, _ = edivmod(rows[i][k], rows[k][k])
            if not is_zero(q):
                for j in range(3):
                    rows[i][j] = esub(rows[i][j], emul(q, rows[k][j]))
    return tuple(tuple(r) for r in rows)


def _enc_mat(m):
    return tuple(x for row in m for pair in row for x in pair)


def canonical_face_form(face, level):
    """Gamma_0(n)-canonical form of a 0-sharbly.

    Returns (canonical key, relative sign, transporter) where transporter
    carries the canonical points onto the face's rays and the sign relates
    the two symbols in the coinvariant module.  Faces in one Gamma_0(n)
    orbit share the canonical key.
    """
    pts, _ = canonical_symbol(face)
    if pts is None:
        raise ValueError("degenerate face has no canonical form")
    # stage 1: minimal HNF encoding over column order and units; the lattice
    # of a scaled variant re-canonicalizes from the base HNF cheaply
    stage1 = []
    best_enc = None
    for perm in permutations(range(3)):
        base = tuple(pts[i] for i in perm)
        m0 = mat_from_cols(*base)
        h0 = _hnf_rows(m0)
        for u2 in UNITS:
            for u3 in UNITS:
                scale = ((1, 0), u2, u3)
                b = _recanon_scaled(h0, scale)
                enc = _enc_mat(b)
                if best_enc is None or enc <= best_enc:
                    if enc != best_enc:
                        stage1 = []
                        best_enc = enc
                    stage1.append((base, scale, b))
    # stage 2: among minimal lattices, minimal canonical bottom-row class
    best = None
    for base, scale, b in stage1:
        cols = (vscale(scale[0], base[0]), vscale(scale[1], base[1]),
                vscale(scale[2], base[2]))
        m = mat_from_cols(*cols)
        c = _solve_upper(b, m[2])
        chat = level.canonical_row(c)
        if best is None or chat < best[0]:
            best = (chat, m, b)
    chat, m, b = best
    lift = level.lift_unimodular(chat)
    from .eisenstein import complete_unimodular_row
    u = complete_unimodular_row(lift)
    cmat = mat_mul(u, b)
    # transporter gamma~ with gamma~ . M = C must lie in Gamma_0(n)
    det = mat_det(m)
    num = mat_mul(cmat, mat_adj(m))
    gt = mat_scale_div(num, det)
    assert gt is not None and is_unit(mat_det(gt)), "canonical form left GL_3(O)"
    assert level.reduce(gt[2][0]) == (0, 0) and level.reduce(gt[2][1]) == (0, 0), \
        "canonical form transporter escaped Gamma_0(n)"
    gamma = tuple(tuple(emul(unit_inv(mat_det(gt)), x) for x in row)
                  for row in mat_adj(gt))
    from .eisenstein import mat_cols
    ckey, csign = canonical_symbol(mat_cols(cmat))
    assert ckey is not None
    # sign matching gamma . ckey onto the face key
    ray_pos = {p: i for i, p in enumerate(pts)}
    perm = []
    for v in ckey:
        r = spanning_point(mat_vec(gamma, v))
        perm.append(ray_pos[r])
    relsign = voronoi.perm_sign(tuple(perm)) * csign
    return ckey, relsign, gamma


def is_cycle_mod_gamma(chain, level, cache=None):
    """Check that the boundary cancels in Gamma_0(n)-classes."""
    cache = cache if cache is not None else {}
    residual = boundary(chain)
    classes = {}
    for key, coeff in residual.items():
        got = cache.get(key)
        if got is None:
            got = canonical_face_form(key, level)
            cache[key] = got
        ckey, relsign, _ = got
        classes[ckey] = classes.get(ckey, 0) + coeff * relsign
    return all(v == 0 for v in classes.values())


# ---------------------------------------------------------------------------
# reducing points


class NoReducingPoint(ReductionError):
    pass


# Z-basis of O^3: e_i and w*e_i interleaved
_ZBASIS = (
    (((1, 0)), ((0, 0)), ((0, 0))), (((0, 1)), ((0, 0)), ((0, 0))),
    (((0, 0)), ((1, 0)), ((0, 0))), (((0, 0)), ((0, 1)), ((0, 0))),
    (((0, 0)), ((0, 0)), ((1, 0))), (((0, 0)), ((0, 0)), ((0, 1))),
)


def _form_value(b, v):
    """v* b v for Hermitian b (exact integer)."""
    from .eisenstein import conj
    val = (0, 0)
    for i in range(3):
        bi = b[i]
        ci = conj(v[i])
        for j in range(3):
            val = eadd(val, emul(emul(ci, bi[j]), v[j]))
    assert val[1] == 0
    return val[0]


def _gram6(b):
    """Twice the real Gram matrix of the form on O^3 = Z^6."""
    from .eisenstein import conj
    g = [[0] * 6 for _ in range(6)]
    cache = {}
    for k in range(6):
        for l in range(k, 6):
            bk, bl = _ZBASIS[k], _ZBASIS[l]
            s = (0, 0)
            for i in range(3):
                if is_zero(bk[i]):
                    continue
                ci = conj(bk[i])
                for j in range(3):
                    if not is_zero(bl[j]):
                        s = eadd(s, emul(emul(ci, b[i][j]), bl[j]))
            # twice the real part of a + b*w is 2a + b
            g[k][l] = g[l][k] = 2 * s[0] + s[1]
    return g


def short_vectors(b, factor=Fraction(2), trials=()):
    """Vectors of a positive-definite Hermitian form with value at most
    factor * minimum, by exact Fincke-Pohst on the Z^6 Gram matrix with a
    dynamically shrinking bound.  Returns a dict spanning-point -> value."""
    import math as _math

    g = _gram6(b)
    n = 6
    # LDL^T: D on the diagonal, multipliers below, so that
    # value(x) = sum_i d[i] * (x_i + sum_{j>i} q[j][i] x_j)^2
    q = [[Fraction(g[i][j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        assert q[i][i] > 0, "form is not positive definite"
        for k in range(i + 1, n):
            f = q[k][i] / q[i][i]
            for l in range(i, n):
                q[k][l] -= f * q[i][l]
            q[k][i] = f
    d = [q[i][i] for i in range(n)]
    basics = [((1, 0), (0, 0), (0, 0)), ((0, 0), (1, 0), (0, 0)),
              ((0, 0), (0, 0), (1, 0))]
    best = min(_form_value(b, v) for v in list(trials) + basics) * 2
    found = []
    xs = [0] * n

    def rec(i, used):
        nonlocal best
        limit = best * factor
        if used > limit:
            return
        if i < 0:
            if any(xs):
                found.append((used, tuple(xs)))
                if used < best:
                    best = used
            return
        c = sum(q[j][i] * xs[j] for j in range(i + 1, n))
        rem = limit - used
        lim = _math.sqrt(float(rem / d[i])) if rem > 0 else 0.0
        center = -float(c)
        lo = _math.floor(center - lim) - 1
        hi = _math.ceil(center + lim) + 1
        # scan outward from the center so the bound shrinks early
        order = sorted(range(lo, hi + 1), key=lambda x: abs(x - center))
        for x in order:
            t = d[i] * (x + c) ** 2
            if used + t <= best * factor:
                xs[i] = x
                rec(i - 1, used + t)
        xs[i] = 0

    rec(n - 1, Fraction(0))
    out = {}
    for v, x in found:
        if v <= best * factor:
            vec = tuple((x[2 * i], x[2 * i + 1]) for i in range(3))
            sp = spanning_point(vec)
            half = v / 2  # true form value (the Gram was doubled)
            if sp not in out or half < out[sp]:
                out[sp] = half
    return out


def _barycenter_adjugate(pts):
    from .eisenstein import conj
    b = [[(0, 0)] * 3 for _ in range(3)]
    for v in pts:
        for i in range(3):
            for j in range(3):
                b[i][j] = eadd(b[i][j], emul(v[i], conj(v[j])))
    return mat_adj(tuple(tuple(r) for r in b))


_PARENT_SV_MEMO = {}


def _parent_short_vectors(parent):
    got = _PARENT_SV_MEMO.get(parent)
    if got is None:
        got = tuple(short_vectors(_barycenter_adjugate(parent)))
        _PARENT_SV_MEMO[parent] = got
    return got


def _trial_family(pts):
    out = list(pts)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            out.append(vadd(pts[i], pts[j]))
            out.append(vsub(pts[i], pts[j]))
    return out


def containing_cone_points(pts, factor=Fraction(2)):
    """Spanning points of the Voronoi cones at the face's barycenter
    direction: short vectors of the adjugate form (value within `factor`
    of the minimum; the exact minimizers span the containing cone)."""
    return short_vectors(_barycenter_adjugate(pts), factor,
                         trials=_trial_family(pts))


_CAND_MEMO = {}


def candidate_points(pts):
    """Candidate reducing points with geometric centrality values: the
    short vectors at the barycenter direction, plus the unit-closed pair
    and triple combinations of the spanning points."""
    got = _CAND_MEMO.get(pts)
    if got is not None:
        return got
    adj = _barycenter_adjugate(pts)
    cands = dict(short_vectors(adj))
    y1, y2, y3 = pts
    extra = set()
    for (p, q) in ((y1, y2), (y1, y3), (y2, y3)):
        for u in UNITS:
            w = vadd(p, vscale(u, q))
            if not all(is_zero(c) for c in w):
                extra.add(spanning_point(w))
    for u in UNITS:
        for v in UNITS:
            w = vadd(y1, vadd(vscale(u, y2), vscale(v, y3)))
            if not all(is_zero(c) for c in w):
                extra.add(spanning_point(w))
    for w in extra:
        if w not in cands:
            cands[w] = _form_value(adj, w)
    _CAND_MEMO[pts] = cands
    return cands


def choose_reducing_point(face, occurrences=None):
    """Deterministic reducing point for a nonreduced face: minimize the
    worst substituted sub-size, break ties toward the barycenter direction
    (geometric centrality), then lexicographically.

    `occurrences` optionally carries the transporters and parent symbols of
    every appearance of the face's class in the chain being reduced; the
    choice then also minimizes the determinants the transported point will
    form inside those parents (one choice per class keeps the chain a
    cycle, so chain-aware scoring is sound).
    """
    pts, _ = canonical_symbol(face)
    if pts is None:
        raise ValueError("degenerate face")
    sz = size_zero_sharbly(pts)
    if sz <= 1:
        raise ValueError("face is already reduced")
    pairs = ((0, 1), (0, 2), (1, 2))
    cands = dict(candidate_points(pts))
    if occurrences:
        # pull in the central directions of every parent, seen from the
        # canonical frame of the face
        from .eisenstein import mat_inv_unimodular
        adj = _barycenter_adjugate(pts)
        for gamma, parent in occurrences:
            ginv = mat_inv_unimodular(gamma)
            for w in _parent_short_vectors(parent):
                wc = spanning_point(mat_vec(ginv, w))
                if wc not in cands:
                    cands[wc] = _form_value(adj, wc)
    best = None
    for w, central in sorted(cands.items()):
        struct = max(det_norm((w, pts[a], pts[b])) for a, b in pairs)
        if struct >= sz:
            continue
        mixed = 0
        if occurrences:
            for gamma, parent in occurrences:
                wt = spanning_point(mat_vec(gamma, w))
                for a in range(4):
                    for b in range(a + 1, 4):
                        d = det_norm((wt, parent[a], parent[b]))
                        if d > mixed:
                            mixed = d
            if mixed >= sz:
                continue  # every new face must land strictly below the class
        cand = (max(struct, mixed), mixed, struct, central, w)
        if best is None or cand < best:
            best = cand
    if best is None:
        if occurrences is not None:
            return None
        raise NoReducingPoint(f"no candidate improves size {sz} for {pts}")
    return best[4]


# ---------------------------------------------------------------------------
# the reduction loop


def _group_occurrences(occs, ckey, rule):
    """Partition class occurrences into zero-sum groups: pairs preferring
    the same reducing point first, then any cancelling pairs, then
    cancelling triples; whatever remains forms one residual group."""
    prefs = []
    for o in occs:
        try:
            prefs.append(rule(ckey, [(o[0], o[1])]))
        except TypeError:
            prefs.append(rule(ckey))
        except NoReducingPoint:
            prefs.append(None)
    n = len(occs)
    free = list(range(n))
    groups = []

    def take_pairs(require_pref):
        nonlocal free
        i = 0
        while i < len(free):
            a = free[i]
            match = None
            for jpos in range(i + 1, len(free)):
                b = free[jpos]
                if occs[a][3] + occs[b][3] != 0:
                    continue
                if require_pref and prefs[a] != prefs[b]:
                    continue
                match = jpos
                break
            if match is not None:
                b = free[match]
                groups.append([occs[a], occs[b]])
                del free[match]
                del free[i]
            else:
                i += 1

    take_pairs(True)
    take_pairs(False)
    # cancelling triples among what is left
    i = 0
    while i < len(free):
        done = False
        for jpos in range(i + 1, len(free)):
            for kpos in range(jpos + 1, len(free)):
                a, b, c = free[i], free[jpos], free[kpos]
                if occs[a][3] + occs[b][3] + occs[c][3] == 0:
                    groups.append([occs[a], occs[b], occs[c]])
                    del free[kpos]
                    del free[jpos]
                    del free[i]
                    done = True
                    break
            if done:
                break
        if not done:
            i += 1
    if free:
        groups.append([occs[i] for i in free])
    return groups


# replacement formulas; slots 0..3 are the tuple positions, 4+k is w_{k+1}
_X1, _X2, _X3, _X4, _W1, _W2, _W3, _W4 = range(8)
RED_FORMULAS = {
    1: ((+1, (_X1, _X2, _X3, _W1)), (-1, (_X1, _X2, _X4, _W1)),
        (+1, (_X1, _X3, _X4, _W1))),
    2: ((-1, (_X1, _X2, _X4, _W1)), (-1, (_X1, _X3, _W1, _W2)),
        (+1, (_X1, _X2, _X3, _W1)), (+1, (_X1, _X4, _W1, _W2)),
        (-1, (_X3, _X4, _W1, _W2))),
    3: ((+1, (_X1, _X2, _X3, _W1)), (-1, (_X1, _X3, _W1, _W2)),
        (+1, (_X1, _W1, _W2, _W3)), (+1, (_X1, _X2, _W1, _W3)),
        (-1, (_X3, _X4, _W1, _W2)), (-1, (_X4, _W1, _W2, _W3)),
        (+1, (_X2, _X4, _W1, _W3)), (-1, (_X1, _X4, _W2, _W3))),
    4: ((-1, (_X1, _X4, _W2, _W3)), (+1, (_X1, _W2, _W3, _W4)),
        (+1, (_X1, _X3, _W2, _W4)), (+1, (_X2, _X4, _W1, _W3)),
        (-1, (_X2, _W1, _W3, _W4)), (-1, (_X2, _X3, _W1, _W4)),
        (-1, (_X1, _X2, _W3, _W4)), (-1, (_X3, _X4, _W1, _W2)),
        (-1, (_X4, _W1, _W2, _W3)), (-1, (_W1, _W2, _W3, _W4)),
        (+1, (_X3, _W1, _W2, _W4))),
}


@dataclass
class ReductionTrace:
    """Per-pass log; sizes must strictly decrease or the run aborts."""

    passes: list = field(default_factory=list)

    def log(self, size, support, cases):
        self.passes.append({"size": size, "support": support, "cases": dict(cases)})

    def export_text(self):
        lines = ["pass size support red1 red2 red3 red4"]
        for i, p in enumerate(self.passes, 1):
            c = p["cases"]
            lines.append("%d %d %d %d %d %d %d" % (
                i, p["size"], p["support"],
                c.get(1, 0), c.get(2, 0), c.get(3, 0), c.get(4, 0)))
        return "\n".join(lines) + "\n"


def _face_of(key, i):
    return key[:i] + key[i + 1:]


def reduce_cycle(chain, level, budget=200, trace=None, point_rule=None,
                 caches=None, inner_cap=20000):
    """Drive a 1-sharbly cycle mod Gamma_0(n) down to size 1.

    One Gamma_0(n)-class of nonreduced faces is rewritten per inner pass
    (largest size first), with the class's reducing point chosen once, on
    its canonical form with the chain's occurrence geometry in view, and
    transported to every occurrence: equivalent and shared faces receive
    matching points, so the chain stays a cycle.  An iteration ends when
    the chain size strictly drops; it must do so within `budget` iterations
    and may never grow, else the run aborts with its trace.  Pass `caches`
    (a dict) to share canonical-form work across runs at one level.
    """
    trace = trace if trace is not None else ReductionTrace()
    cur = dict(chain)
    cform_cache = caches if caches is not None else {}
    rule = point_rule or choose_reducing_point
    fkey_memo = {}

    def face_key(key, i):
        got = fkey_memo.get((key, i))
        if got is None:
            got = canonical_symbol(_face_of(key, i))[0]
            fkey_memo[(key, i)] = got
        return got

    size = chain_size(cur)
    iterations = 0
    inner = 0
    cases_acc = {}
    while size > 1:
        if iterations >= budget:
            raise ReductionError(f"iteration budget {budget} exhausted", trace)
        inner += 1
        if inner > inner_cap:
            raise ReductionError(f"inner pass cap {inner_cap} exhausted", trace)
        # collect the nonreduced face classes of maximal size, with their
        # occurrences and signed weights
        face_info = {}
        class_occs = {}
        max_size = 0
        for key in sorted(cur):
            coeff = cur[key]
            for i in range(4):
                fkey = face_key(key, i)
                if fkey is None:
                    continue
                info = face_info.get(fkey)
                if info is None and fkey not in face_info:
                    sz = det_norm(fkey)
                    if sz <= 1:
                        face_info[fkey] = None
                        continue
                    got = cform_cache.get(fkey)
                    if got is None:
                        got = canonical_face_form(fkey, level)
                        cform_cache[fkey] = got
                    info = (sz, got[0], got[1], got[2])
                    face_info[fkey] = info
                    max_size = max(max_size, sz)
                if info is None:
                    continue
                sz, ckey, relsign, gamma = info
                class_occs.setdefault((sz, ckey), []).append(
                    (gamma, key, i, coeff * relsign * (-1) ** (i + 1)))
        if not class_occs:
            break  # nothing nonreduced anywhere
        # best-first: among the maximal-size classes, process the first one
        # whose zero-sum groups all admit strictly improving points
        processed = False
        top = [ck for (sz, ck) in class_occs if sz == max_size]
        for ckey in sorted(top):
            occs = class_occs[(max_size, ckey)]
            if sum(o[3] for o in occs) != 0:
                raise ReductionError(
                    "face class fails to cancel mod Gamma_0(n): "
                    "input is not a cycle", trace)
            assign = {}
            feasible = True
            for group in _group_occurrences(occs, ckey, rule):
                try:
                    wc = rule(ckey, [(g, k) for g, k, _, _ in group])
                except TypeError:
                    wc = rule(ckey)
                except NoReducingPoint:
                    wc = None
                if wc is None:
                    feasible = False
                    break
                for gamma, key, i, _ in group:
                    assign[(key, i)] = spanning_point(mat_vec(gamma, wc))
            if not feasible:
                continue
            new_chain = {}
            for key, coeff in sorted(cur.items()):
                hit = [i for i in range(4) if (key, i) in assign]
                if not hit:
                    chain_add(new_chain, key, coeff)
                    continue
                ws = {i: assign[(key, i)] for i in hit}
                k = len(hit)
                cases_acc[k] = cases_acc.get(k, 0) + 1
                order = hit + [i for i in range(4) if i not in hit]
                sigma_sign = voronoi.perm_sign(tuple(order))
                slots = [key[order[0]], key[order[1]], key[order[2]],
                         key[order[3]], None, None, None, None]
                for pos, i in enumerate(order[:k]):
                    slots[4 + pos] = ws[i]
                base = coeff * sigma_sign
                for fsign, term in RED_FORMULAS[k]:
                    vecs = tuple(slots[s] for s in term)
                    add_symbol(new_chain, vecs, base * fsign)
            processed = True
            break
        if not processed:
            raise ReductionError(
                f"no maximal-size face class admits a strictly improving "
                f"reducing point at size {max_size}", trace)
        new_size = chain_size(new_chain)
        if new_size > size:
            trace.log(new_size, len(new_chain), cases_acc)
            raise ReductionError(
                f"size failed to decrease: {size} -> {new_size}", trace)
        if new_size < size:
            trace.log(size, len(cur), cases_acc)
            cases_acc = {}
            iterations += 1
            size = new_size
        cur = new_chain
    return cur, trace


# ---------------------------------------------------------------------------
# Voronoi <-> sharbly translation


def voronoi_to_sharbly(cx, vec):
    """Chain of a V_3 vector: each orbit contributes its representative cell
    as a 1-sharbly through the cached coset lift."""
    chain = {}
    basis = cx.basis[3]
    for j, coeff in enumerate(vec):
        if coeff == 0:
            continue
        t, oid = basis[j]
        orb = cx.orbits[t]
        rep_pt = orb.reps[oid]
        gamma = cx.completion(rep_pt)
        verts = voronoi.VoronoiCell.rep(t).vertices
        add_symbol(chain, tuple(mat_vec(gamma, v) for v in verts), Fraction(coeff))
    return chain


def _identify_cell(key):
    """Match a size-1 1-sharbly to (type, gamma) with gamma . rep = key rays."""
    for t in ("f1", "f2"):
        rep = voronoi.VoronoiCell.rep(t)
        probe = voronoi.VoronoiCell("?", 3, key)
        g = voronoi.cell_equiv(rep, probe)
        if g is not None:
            return t, g
    return None, None


def sharbly_to_voronoi(cx, chain, ident_cache=None):
    """Express a size-1 chain as a V_3 coordinate vector (exact)."""
    level = cx.level
    n3 = len(cx.basis[3])
    offsets = {}
    off = 0
    for t in ("f1", "f2"):
        offsets[t] = off
        off += cx.orbits[t].ncols
    y = [Fraction(0)] * n3
    cache = ident_cache if ident_cache is not None else {}
    for key, coeff in chain.items():
        if size_symbol(key) > 1:
            raise ValueError("chain is not of size 1")
        got = cache.get(key)
        if got is None:
            t, g = _identify_cell(key)
            if t is None:
                raise ArithmeticError(
                    f"support sharbly matches no Voronoi 3-cell: {key}")
            got = (t, g)
            cache[key] = got
        t, g = got
        orb = cx.orbits[t]
        p = level.coset_label(g[2])
        oid = orb.orbit_of[p]
        if orb.killed[oid]:
            continue
        col = orb.col_of[oid]
        rep_pt = orb.reps[oid]
        s_q = orb.transporter(p)
        gamma_p = cx.completion(rep_pt)
        # m = g s_q^{-1} gamma_p^{-1} must lie in Gamma_0(n)
        from .eisenstein import mat_inv_unimodular
        m = mat_mul(mat_mul(g, mat_inv_unimodular(s_q)), mat_inv_unimodular(gamma_p))
        assert level.reduce(m[2][0]) == (0, 0) and level.reduce(m[2][1]) == (0, 0), \
            "transporter left Gamma_0(n)"
        verts = voronoi.VoronoiCell.rep(t).vertices
        _, s_g = canonical_symbol(tuple(mat_vec(g, v) for v in verts))
        rho = voronoi.ray_permutation(s_q, verts, verts)
        contrib = coeff * s_g * voronoi.perm_sign(rho)
        y[offsets[t] + col] += contrib
    return y
