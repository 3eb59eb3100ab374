"""Exact arithmetic in Z[w], w = (1+sqrt(-3))/2, and the level machinery built on it.

Elements are plain int pairs (a, b) meaning a + b*w with w^2 = w - 1.
The six units are the powers of w.  Ideals are carried as HNF-labels
[N, c, d]: the Z-basis of the ideal is {N/d, d*w + c}.

The congruence structure lives in Level: residues mod n, the projective
plane P^2(O/n) indexing Gamma_0(n) cosets, and unimodular-row lifting /
completion into GL_3(O).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple


class EisInt(NamedTuple):
    a: int
    b: int


ZERO = (0, 0)
ONE = (1, 0)
OMEGA = (0, 1)

# powers w^0 .. w^5; w^3 = -1
UNITS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))
UNIT_SET = frozenset(UNITS)


def eadd(x, y):
    return (x[0] + y[0], x[1] + y[1])


def esub(x, y):
    return (x[0] - y[0], x[1] - y[1])


def eneg(x):
    return (-x[0], -x[1])


def emul(x, y):
    a, b = x
    c, d = y
    bd = b * d
    return (a * c - bd, a * d + b * c + bd)


def conj(x):
    # conjugate of a + b*w is (a+b) - b*w
    return (x[0] + x[1], -x[1])


def norm(x):
    a, b = x
    return a * a + a * b + b * b


def is_unit(x):
    return norm(x) == 1


def is_zero(x):
    return x[0] == 0 and x[1] == 0


def unit_inv(u):
    # inverse of a unit: conjugate works since norm is 1
    return conj(u)


def unit_canonical(x):
    """Canonical associate: lexicographically maximal (a, b) among
    the associates with a > 0 (zero maps to zero)."""
    if x[0] == 0 and x[1] == 0:
        return ZERO
    best = None
    for u in UNITS:
        y = emul(x, u)
        if y[0] > 0 and (best is None or y > best):
            best = y
    if best is None:  # a == 0 for all associates cannot happen for x != 0
        raise AssertionError(f"no positive associate for {x}")
    return best


def unit_canonical_with_unit(x):
    """Return (canonical associate, u) with canonical = x * u."""
    if x[0] == 0 and x[1] == 0:
        return ZERO, ONE
    best = None
    bu = None
    for u in UNITS:
        y = emul(x, u)
        if y[0] > 0 and (best is None or y > best):
            best, bu = y, u
    return best, bu


def _round_div(n, d):
    # nearest integer to n/d, deterministic half-up in sign of d>0
    if d < 0:
        n, d = -n, -d
    return (2 * n + d) // (2 * d)


def edivmod(x, y):
    """Euclidean division: x = q*y + r with norm(r) <= (3/4) norm(y)."""
    if is_zero(y):
        raise ZeroDivisionError("division by zero in O_F")
    num = emul(x, conj(y))
    dn = norm(y)
    q = (_round_div(num[0], dn), _round_div(num[1], dn))
    r = esub(x, emul(q, y))
    return q, r


def ediv_exact(x, y):
    q, r = edivmod(x, y)
    if not is_zero(r):
        raise ValueError(f"{x} is not divisible by {y}")
    return q


def divides(y, x):
    if is_zero(y):
        return is_zero(x)
    q, r = edivmod(x, y)
    return is_zero(r)


def egcd(x, y):
    """gcd, unit-canonical.  Errors if both arguments are zero."""
    if is_zero(x) and is_zero(y):
        raise ValueError("gcd(0, 0) undefined")
    while not is_zero(y):
        _, r = edivmod(x, y)
        x, y = y, r
    return unit_canonical(x)


def exgcd(x, y):
    """Extended gcd: returns (g, s, t) with s*x + t*y = g, g unit-canonical."""
    s0, s1 = ONE, ZERO
    t0, t1 = ZERO, ONE
    a, b = x, y
    while not is_zero(b):
        q, r = edivmod(a, b)
        a, b = b, r
        s0, s1 = s1, esub(s0, emul(q, s1))
        t0, t1 = t1, esub(t0, emul(q, t1))
    if is_zero(a):
        raise ValueError("gcd(0, 0) undefined")
    g, u = unit_canonical_with_unit(a)
    return g, emul(s0, u), emul(t0, u)


def content3(v):
    """gcd of the three coordinates of a vector (unit-canonical)."""
    g = None
    for x in v:
        if not is_zero(x):
            g = x if g is None else egcd(g, x)
            if is_unit(g):
                return unit_canonical(g)
    if g is None:
        raise ValueError("zero vector has no content")
    return unit_canonical(g)


# ---------------------------------------------------------------------------
# vectors (length-3 columns) and 3x3 matrices, rows of entry pairs


def vadd(u, v):
    return (eadd(u[0], v[0]), eadd(u[1], v[1]), eadd(u[2], v[2]))


def vsub(u, v):
    return (esub(u[0], v[0]), esub(u[1], v[1]), esub(u[2], v[2]))


def vscale(s, v):
    return (emul(s, v[0]), emul(s, v[1]), emul(s, v[2]))


def mat_from_cols(c0, c1, c2):
    return ((c0[0], c1[0], c2[0]), (c0[1], c1[1], c2[1]), (c0[2], c1[2], c2[2]))


def mat_cols(m):
    return (
        (m[0][0], m[1][0], m[2][0]),
        (m[0][1], m[1][1], m[2][1]),
        (m[0][2], m[1][2], m[2][2]),
    )


def mat_mul(m, n):
    out = []
    for i in range(3):
        mi = m[i]
        row = []
        for j in range(3):
            s = emul(mi[0], n[0][j])
            s = eadd(s, emul(mi[1], n[1][j]))
            s = eadd(s, emul(mi[2], n[2][j]))
            row.append(s)
        out.append(tuple(row))
    return tuple(out)


def mat_vec(m, v):
    out = []
    for i in range(3):
        mi = m[i]
        s = emul(mi[0], v[0])
        s = eadd(s, emul(mi[1], v[1]))
        s = eadd(s, emul(mi[2], v[2]))
        out.append(s)
    return tuple(out)


def row_mat(r, m):
    out = []
    for j in range(3):
        s = emul(r[0], m[0][j])
        s = eadd(s, emul(r[1], m[1][j]))
        s = eadd(s, emul(r[2], m[2][j]))
        out.append(s)
    return tuple(out)


def mat_det(m):
    (a, b, c), (d, e, f), (g, h, i) = m
    t = emul(a, esub(emul(e, i), emul(f, h)))
    t = esub(t, emul(b, esub(emul(d, i), emul(f, g))))
    return eadd(t, emul(c, esub(emul(d, h), emul(e, g))))


def mat_adj(m):
    (a, b, c), (d, e, f), (g, h, i) = m
    return (
        (esub(emul(e, i), emul(f, h)), esub(emul(c, h), emul(b, i)), esub(emul(b, f), emul(c, e))),
        (esub(emul(f, g), emul(d, i)), esub(emul(a, i), emul(c, g)), esub(emul(c, d), emul(a, f))),
        (esub(emul(d, h), emul(e, g)), esub(emul(b, g), emul(a, h)), esub(emul(a, e), emul(b, d))),
    )


def mat_inv_unimodular(m):
    """Inverse of a GL_3(O) matrix (determinant a unit)."""
    d = mat_det(m)
    if not is_unit(d):
        raise ValueError("matrix is not in GL_3(O)")
    di = unit_inv(d)
    adj = mat_adj(m)
    return tuple(tuple(emul(di, x) for x in row) for row in adj)


def mat_is_gl3(m):
    return is_unit(mat_det(m))


MAT_ID = (((1, 0), (0, 0), (0, 0)), ((0, 0), (1, 0), (0, 0)), ((0, 0), (0, 0), (1, 0)))


def mat_scale_div(m, d):
    """Divide every entry exactly by d, or return None."""
    out = []
    for row in m:
        r = []
        for x in row:
            q, rem = edivmod(x, d)
            if rem != (0, 0):
                return None
            r.append(q)
        out.append(tuple(r))
    return tuple(out)


def vec_ray_canonical(v):
    """Scale by the unit making the first nonzero coordinate unit-canonical."""
    for x in v:
        if x != (0, 0):
            _, u = unit_canonical_with_unit(x)
            if u == ONE:
                return v
            return vscale(u, v)
    raise ValueError("zero vector has no ray")


# ---------------------------------------------------------------------------
# rational prime helpers (desk scale: trial division)


def _rational_factor(n):
    """Factor a positive integer by trial division; fine for norms <= 10^6."""
    out = []
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if m > 1:
        out.append((m, 1))
    return out


def _sqrt_exact(n):
    r = math.isqrt(n)
    return r if r * r == n else None


def element_of_norm(n):
    """Some x in O_F with norm(x) = n, or None."""
    if n == 0:
        return ZERO
    bmax = math.isqrt(4 * n // 3)
    for b in range(bmax + 1):
        disc = 4 * n - 3 * b * b
        r = _sqrt_exact(disc)
        if r is None:
            continue
        for pm in (r, -r):
            if (pm - b) % 2 == 0:
                return ((pm - b) // 2, b)
    return None


# ---------------------------------------------------------------------------
# ideals and HNF-labels


def _label_of_element(g):
    """HNF-label [N, c, d] of the principal ideal (g)."""
    if is_zero(g):
        raise ValueError("zero ideal has no label")
    x, y = g
    # rows of the Z-basis matrix wrt (1, w): g*1 = (x, y), g*w = (-y, x+y)
    n = norm(g)
    d = math.gcd(y, x + y)
    a = n // d
    # find a basis element with w-coefficient d: u*(x,y) + v*(-y, x+y)
    gg, u, v = _int_xgcd(y, x + y)
    assert gg == d
    c = (u * x - v * y) % a
    # normalize c to a multiple of d in [0, a)
    assert c % d == 0
    return (n, c, d)


def _int_xgcd(a, b):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def label_is_valid(label):
    n, c, d = label
    if n <= 0 or d <= 0 or n % d != 0:
        return False
    a = n // d
    if a * d != n or a % d != 0 or c % d != 0 or not (0 <= c < a):
        return False
    # the Z-module {a, d*w + c} must actually be an ideal
    g = egcd((a, 0), (c, d))
    return norm(g) == n


@dataclass(frozen=True)
class EisIdeal:
    """Principal ideal of O_F carried with its HNF-label."""

    label: tuple
    generator: tuple

    @staticmethod
    def from_generator(g):
        g = unit_canonical(g)
        return EisIdeal(_label_of_element(g), g)

    @staticmethod
    def from_label(label):
        label = tuple(int(x) for x in label)
        if not label_is_valid(label):
            raise ValueError(f"malformed HNF-label {list(label)}")
        n, c, d = label
        a = n // d
        g = egcd((a, 0), (c, d))
        return EisIdeal(label, g)

    @property
    def norm(self):
        return self.label[0]

    def conjugate(self):
        return EisIdeal.from_generator(conj(self.generator))

    def __str__(self):
        return format_label(self.label)

    def divides(self, other):
        return divides(self.generator, other.generator)

    def __mul__(self, other):
        return EisIdeal.from_generator(emul(self.generator, other.generator))


def format_label(label):
    return "[%d,%d,%d]" % tuple(label)


def parse_label(s):
    s = s.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise ValueError(f"bad label {s!r}")
    parts = s[1:-1].split(",")
    if len(parts) != 3:
        raise ValueError(f"bad label {s!r}")
    return tuple(int(p) for p in parts)


def ideal_from_label(label):
    return EisIdeal.from_label(label)


def label_from_ideal(g):
    return _label_of_element(g)


@dataclass(frozen=True)
class PrimeIdeal:
    """Prime ideal with residue-field data cached alongside."""

    ideal: EisIdeal
    p: int          # rational prime below
    f: int          # residue degree
    ramified: bool

    @property
    def q(self):
        return self.p ** self.f

    @property
    def generator(self):
        return self.ideal.generator

    @property
    def label(self):
        return self.ideal.label

    @property
    def split(self):
        return self.f == 1 and not self.ramified

    def __str__(self):
        return format_label(self.label)


@lru_cache(maxsize=None)
def primes_above(p):
    """Prime ideals of O_F above the rational prime p, sorted by label."""
    if p == 3:
        return (PrimeIdeal(EisIdeal.from_generator((1, 1)), 3, 1, True),)
    if p % 3 == 2:
        return (PrimeIdeal(EisIdeal.from_generator((p, 0)), p, 2, False),)
    pi = element_of_norm(p)
    assert pi is not None, f"{p} = 1 mod 3 must split"
    one = PrimeIdeal(EisIdeal.from_generator(pi), p, 1, False)
    other = PrimeIdeal(EisIdeal.from_generator(conj(pi)), p, 1, False)
    return tuple(sorted((one, other), key=lambda pr: pr.label))


def prime_from_label(label):
    n, c, d = label
    fac = _rational_factor(n)
    if len(fac) != 1:
        raise ValueError(f"{format_label(label)} is not a prime power norm")
    p, e = fac[0]
    for pr in primes_above(p):
        if pr.label == tuple(label):
            return pr
    raise ValueError(f"{format_label(label)} is not prime")


def valuation(x, pr):
    """Exponent of the prime pr in x (x nonzero)."""
    if is_zero(x):
        raise ValueError("valuation of zero")
    v = 0
    g = pr.generator
    while True:
        q, r = edivmod(x, g)
        if not is_zero(r):
            return v
        x = q
        v += 1


def factor(ideal):
    """Prime factorization, ordered by (norm, label).  [1,0,1] -> []."""
    g = ideal.generator
    n = ideal.norm
    out = []
    for p, _ in _rational_factor(n):
        for pr in primes_above(p):
            e = valuation(g, pr)
            if e > 0:
                out.append((pr, e))
    out.sort(key=lambda t: (t[0].q ** 1, t[0].label))
    assert math.prod(t[0].q ** t[1] for t in out) == n
    return out


def residue_reps(pr):
    """Representatives of O/p: rationals for split/ramified, a+bw grid inert."""
    if pr.ramified:
        return [(0, 0), (1, 0), (-1, 0)]
    if pr.f == 1:
        return [(i, 0) for i in range(pr.p)]
    return [(i, j) for j in range(pr.p) for i in range(pr.p)]


@lru_cache(maxsize=None)
def omega_root_mod(p):
    """Root r of x^2 - x + 1 mod p (exists iff p = 3 or p = 1 mod 3)."""
    if p == 3:
        return 2
    for r in range(2, p):
        if (r * r - r + 1) % p == 0:
            return r
    raise ValueError(f"x^2 - x + 1 has no root mod {p}")


class ResidueField:
    """Arithmetic in O/p for exhaustive point counting.

    Elements are ints: for f = 1 the residue 0..p-1; for f = 2 the code
    a + b*p with (a, b) the coordinates mod p.
    """

    def __init__(self, pr):
        self.pr = pr
        self.p = pr.p
        self.q = pr.q
        if pr.f == 1:
            pi = pr.generator
            if pr.ramified:
                self.r = omega_root_mod(3)
            else:
                a, b = pi
                self.r = (-a * pow(b, -1, pr.p)) % pr.p

    def reduce(self, x):
        a, b = x
        p = self.p
        if self.pr.f == 1:
            return (a + b * self.r) % p
        return (a % p) + (b % p) * p

    def elements(self):
        return range(self.q)

    def add(self, x, y):
        p = self.p
        if self.pr.f == 1:
            return (x + y) % p
        return (x % p + y % p) % p + (x // p + y // p) % p * p

    def mul(self, x, y):
        p = self.p
        if self.pr.f == 1:
            return (x * y) % p
        a, b = x % p, x // p
        c, d = y % p, y // p
        bd = b * d
        return (a * c - bd) % p + ((a * d + b * c + bd) % p) * p

    def neg(self, x):
        p = self.p
        if self.pr.f == 1:
            return (-x) % p
        return (-x % p) % p + ((-(x // p)) % p) * p


# ---------------------------------------------------------------------------
# Level: residues mod n, projective points, coset labels


def _smalls():
    """Small elements ordered by (norm, a, b); used for deterministic searches."""
    out = [(0, 0)]
    coords = [(a, b) for a in range(-6, 7) for b in range(-6, 7) if (a, b) != (0, 0)]
    coords.sort(key=lambda x: (norm(x), x))
    return out + coords


_SMALLS = _smalls()


class Level:
    """Residue arithmetic mod n and the coset space Gamma_0(n)\\GL_3(O).

    Points of P^2(O/n) are stored as canonical residue rows; the canonical
    form scales, componentwise through CRT, by the inverse of the first
    locally invertible coordinate.
    """

    def __init__(self, ideal):
        if isinstance(ideal, (tuple, list)):
            ideal = EisIdeal.from_label(tuple(ideal))
        self.ideal = ideal
        self.N, self.c, self.d = ideal.label
        self.a = self.N // self.d
        self.gen = ideal.generator
        self.factors = factor(ideal)
        self._init_components()
        self._points = None
        self._index = None

    # -- residue box mod n ------------------------------------------------

    def reduce(self, x):
        """Canonical representative of x mod n in the box [0,a) x [0,d)."""
        u, v = x
        d = self.d
        t = v // d
        v -= t * d
        u = (u - t * self.c) % self.a
        return (u, v)

    def reduce_vec(self, v):
        return (self.reduce(v[0]), self.reduce(v[1]), self.reduce(v[2]))

    def reduce_mat(self, m):
        return tuple(tuple(self.reduce(x) for x in row) for row in m)

    def congruent(self, x, y):
        return self.reduce(x) == self.reduce(y)

    # -- CRT components ----------------------------------------------------

    def _init_components(self):
        comps = []
        for pr, e in self.factors:
            pe_gen = pr.generator
            for _ in range(e - 1):
                pe_gen = emul(pe_gen, pr.generator)
            pe = EisIdeal.from_generator(pe_gen)
            comps.append(_Component(pr, e, pe))
        # idempotents: E_i = 1 mod p_i^{e_i}, 0 mod the rest
        for i, comp in enumerate(comps):
            rest = ONE
            for j, other in enumerate(comps):
                if j != i:
                    rest = emul(rest, other.pe.generator)
            if len(comps) == 1:
                comp.idem = self.reduce(ONE)
            else:
                g, s, t = exgcd(rest, comp.pe.generator)
                assert is_unit(g)
                gi = unit_inv(g)
                comp.idem = self.reduce(emul(emul(s, gi), rest))
        self.components = comps

    def invert(self, x):
        """Inverse of x mod n, or None if x is not a unit of O/n."""
        if self.N == 1:
            return (0, 0)
        g, s, _ = exgcd(x, self.gen)
        if not is_unit(g):
            return None
        return self.reduce(emul(s, unit_inv(g)))

    # -- canonical projective rows -----------------------------------------

    def is_unimodular(self, row):
        """True iff the row generates the unit ideal together with n."""
        g = self.gen
        for x in row:
            if is_unit(g):
                return True
            if not is_zero(x):
                g = egcd(g, x)
        return is_unit(g)

    def canonical_row(self, row):
        """Canonical representative of the scalar class of a unimodular row."""
        row = self.reduce_vec(row)
        if self.N == 1:
            return row
        scalar = ZERO
        for comp in self.components:
            inv = None
            for x in row:
                inv = comp.inv_of(x)
                if inv is not None:
                    break
            if inv is None:
                raise ValueError("row is not unimodular mod n")
            scalar = eadd(scalar, emul(inv, comp.idem))
        scalar = self.reduce(scalar)
        if scalar == ONE:
            return row
        s, t = scalar
        red = self.reduce
        out = []
        for a, b in row:
            bt = b * t
            out.append(red((a * s - bt, a * t + b * s + bt)))
        return tuple(out)

    def enumerate_points(self):
        """Deterministic enumeration of P^2(O/n) as canonical rows."""
        if self._points is not None:
            return self._points
        if self.N == 1:
            pts = [((0, 0), (0, 0), (0, 0))]
        else:
            local_lists = [comp.local_rows() for comp in self.components]
            pts = []
            idx = [0] * len(local_lists)
            # cartesian product, last component fastest
            total = 1
            for ll in local_lists:
                total *= len(ll)
            for k in range(total):
                t = k
                choice = []
                for ll in reversed(local_lists):
                    choice.append(ll[t % len(ll)])
                    t //= len(ll)
                choice.reverse()
                row = []
                for coord in range(3):
                    x = ZERO
                    for comp, loc in zip(self.components, choice):
                        x = eadd(x, emul(loc[coord], comp.idem))
                    row.append(self.reduce(x))
                pts.append(tuple(row))
        self._points = pts
        self._index = {r: i for i, r in enumerate(pts)}
        return pts

    def num_points(self):
        return len(self.enumerate_points())

    def point_index(self, canonical_row):
        if self._index is None:
            self.enumerate_points()
        return self._index[canonical_row]

    def coset_label(self, row):
        """Index of the coset of a GL_3(O) matrix with the given bottom row."""
        if not self.is_unimodular(row):
            raise ValueError("row is not unimodular mod n")
        return self.point_index(self.canonical_row(row))

    def coset_label_of_matrix(self, m):
        return self.coset_label(m[2])

    def row_action(self, row, mat):
        """row * mat reduced mod n (right coset action on bottom rows)."""
        (a0, b0), (a1, b1), (a2, b2) = row
        m0, m1, m2 = mat
        red = self.reduce
        out = []
        for j in range(3):
            c0, d0 = m0[j]
            c1, d1 = m1[j]
            c2, d2 = m2[j]
            t0 = b0 * d0
            t1 = b1 * d1
            t2 = b2 * d2
            x = a0 * c0 - t0 + a1 * c1 - t1 + a2 * c2 - t2
            y = a0 * d0 + b0 * c0 + t0 + a1 * d1 + b1 * c1 + t1 \
                + a2 * d2 + b2 * c2 + t2
            out.append(red((x, y)))
        return tuple(out)

    # -- lifting and completion ---------------------------------------------

    def lift_unimodular(self, row):
        """Lift a unimodular residue row to an O_F row of unit content,
        congruent to it mod n."""
        row = list(self.reduce_vec(row))
        nu = self.gen
        for coord in (2, 1, 0):
            for t in _SMALLS[:120]:
                cand = row.copy()
                cand[coord] = eadd(cand[coord], emul(t, nu))
                if all(is_zero(x) for x in cand):
                    continue
                if is_unit(content3(cand)):
                    return tuple(cand)
        raise AssertionError("no unit-content lift found (search bound too small)")

    def completion(self, point_index):
        """A GL_3(O) matrix whose bottom row represents the given coset."""
        row = self.enumerate_points()[point_index]
        lifted = self.lift_unimodular(row)
        m = complete_unimodular_row(lifted)
        assert self.coset_label_of_matrix(m) == point_index
        return m


class _Component:
    """One prime-power factor p^e of the level, with local helpers."""

    def __init__(self, pr, e, pe):
        self.pr = pr
        self.e = e
        self.pe = pe
        self.idem = None
        n, c, d = pe.label
        self._a = n // d
        self._c = c
        self._d = d
        pn, pc, pd = pr.label
        self._pa = pn // pd
        self._pc = pc
        self._pd = pd
        self._inv_table = None

    def _build_inv_table(self):
        table = {}
        for r in self.residues():
            if self.is_unit(r):
                table[r] = self.invert(r)
        self._inv_table = table

    def inv_of(self, x):
        """Inverse of x mod p^e via the precomputed table; None for non-units."""
        if self._inv_table is None:
            self._build_inv_table()
        return self._inv_table.get(self.reduce(x))

    def reduce(self, x):
        u, v = x
        t = v // self._d
        v -= t * self._d
        u = (u - t * self._c) % self._a
        return (u, v)

    def reduce_mod_p(self, x):
        u, v = x
        t = v // self._pd
        v -= t * self._pd
        u = (u - t * self._pc) % self._pa
        return (u, v)

    def is_unit(self, x):
        return self.reduce_mod_p(x) != (0, 0)

    def first_unit_coord(self, row):
        for j in range(3):
            if self.is_unit(row[j]):
                return j
        return None

    def invert(self, x):
        g, s, _ = exgcd(x, self.pe.generator)
        assert is_unit(g), "inversion of a non-unit residue"
        return self.reduce(emul(s, unit_inv(g)))

    def residues(self, ideal_label=None):
        """All residues of O/p^e in box order."""
        n, c, d = self.pe.label if ideal_label is None else ideal_label
        a = n // d
        return [(u, v) for u in range(a) for v in range(d)]

    def maximal_ideal_residues(self):
        """Residues of p/p^e: pi * (residues of O/p^{e-1}), reduced."""
        if self.e == 1:
            return [(0, 0)]
        sub = EisIdeal.from_generator(self._pow_gen(self.e - 1))
        pi = self.pr.generator
        out = []
        seen = set()
        for t in self.residues(sub.label):
            x = self.reduce(emul(pi, t))
            if x not in seen:
                seen.add(x)
                out.append(x)
        return out

    def _pow_gen(self, k):
        g = ONE
        for _ in range(k):
            g = emul(g, self.pr.generator)
        return g

    def local_rows(self):
        """Canonical local rows of P^2(O/p^e): first invertible coord is 1."""
        units_all = self.residues()
        mx = self.maximal_ideal_residues()
        rows = []
        one = self.reduce(ONE)
        for y in units_all:
            for z in units_all:
                rows.append((one, y, z))
        for x in mx:
            for z in units_all:
                rows.append((x, one, z))
        for x in mx:
            for y in mx:
                rows.append((x, y, one))
        return rows


def complete_unimodular_row(row):
    """Complete a unit-content O_F row to a GL_3(O) matrix (bottom row = row)."""
    x, y, z = row
    if is_zero(x) and is_zero(y):
        assert is_unit(z), "content is not a unit"
        return (((1, 0), ZERO, ZERO), (ZERO, (1, 0), ZERO), (ZERO, ZERO, z))
    g, al, be = exgcd(x, y)
    d1 = ediv_exact(x, g)
    d2 = ediv_exact(y, g)
    if is_zero(z):
        assert is_unit(g), "content is not a unit"
        s, t = unit_inv(g), ZERO
    else:
        u0, s, t = exgcd(g, z)
        assert is_unit(u0), "content is not a unit"
    r1 = (be, eneg(al), ZERO)
    r2 = (emul(t, d1), emul(t, d2), eneg(s))
    m = (r1, r2, (x, y, z))
    assert is_unit(mat_det(m))
    return m


@lru_cache(maxsize=64)
def level_for(label):
    return Level(EisIdeal.from_label(label))


# ---------------------------------------------------------------------------
# spec-facing wrappers


def proj_points(ideal):
    """Indexed enumeration of P^2(O/n) (canonical residue rows)."""
    lv = ideal if isinstance(ideal, Level) else level_for(tuple(ideal.label))
    return lv.enumerate_points()


def coset_label(row, ideal):
    lv = ideal if isinstance(ideal, Level) else level_for(tuple(ideal.label))
    return lv.coset_label(row)


def all_labels_of_norm(n):
    """All valid HNF-labels with norm exactly n."""
    out = []
    d = 1
    while d * d <= n:
        if n % (d * d) == 0:
            a = n // d
            for k in range(a // d):
                label = (n, k * d, d)
                if label_is_valid(label):
                    out.append(label)
        d += 1
    return sorted(out)


def levels_up_to(max_norm, dedup_conjugates=True):
    """HNF-labels of all ideals with norm <= max_norm, optionally one per
    conjugate pair (lexicographically smaller kept)."""
    out = []
    for n in range(1, max_norm + 1):
        labels = all_labels_of_norm(n)
        if not dedup_conjugates:
            out.extend(labels)
            continue
        seen = set()
        for lab in labels:
            if lab in seen:
                continue
            ideal = EisIdeal.from_label(lab)
            cl = ideal.conjugate().label
            seen.add(cl)
            out.append(min(lab, cl))
    return out


def conjugate_label(label):
    return EisIdeal.from_label(tuple(label)).conjugate().label
