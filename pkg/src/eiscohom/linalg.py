"""Exact sparse linear algebra over Q and word-sized prime fields.

Ranks are computed modulo two independent 61-bit primes and cross-checked;
kernel bases and linear solves are exact over Q (integer rows with content
stripping, Fraction back-substitution).  Characteristic polynomials use the
division-free Berkowitz scheme; factorization splits off the factors of
degree at most two and reports the rest unsplit.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction


# ---------------------------------------------------------------------------
# sparse matrices


class SparseMat:
    """Row-sparse exact matrix; values are ints or Fractions, no stored zeros."""

    def __init__(self, rows, cols, data=None):
        self.rows = rows
        self.cols = cols
        self.data = data if data is not None else {}

    @staticmethod
    def from_triplets(rows, cols, triplets):
        data = {}
        for i, j, v in triplets:
            if not (0 <= i < rows and 0 <= j < cols):
                raise ValueError("triplet index out of range")
            if v == 0:
                continue
            row = data.setdefault(i, {})
            nv = row.get(j, 0) + v
            if nv == 0:
                row.pop(j, None)
            else:
                row[j] = nv
        for i in [i for i, r in data.items() if not r]:
            del data[i]
        return SparseMat(rows, cols, data)

    def set(self, i, j, v):
        if v == 0:
            row = self.data.get(i)
            if row is not None:
                row.pop(j, None)
                if not row:
                    del self.data[i]
        else:
            self.data.setdefault(i, {})[j] = v

    def get(self, i, j):
        return self.data.get(i, {}).get(j, 0)

    def nnz(self):
        return sum(len(r) for r in self.data.values())

    def triplets(self):
        for i in sorted(self.data):
            row = self.data[i]
            for j in sorted(row):
                yield i, j, row[j]

    def transpose(self):
        out = {}
        for i, row in self.data.items():
            for j, v in row.items():
                out.setdefault(j, {})[i] = v
        return SparseMat(self.cols, self.rows, out)

    def mul_vec(self, v):
        """Matrix * column vector (v indexable of length cols)."""
        out = [0] * self.rows
        for i, row in self.data.items():
            s = 0
            for j, a in row.items():
                x = v[j]
                if x:
                    s += a * x
            out[i] = s
        return out

    def matmul(self, other):
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        out = {}
        for i, row in self.data.items():
            acc = {}
            for k, a in row.items():
                orow = other.data.get(k)
                if not orow:
                    continue
                for j, b in orow.items():
                    nv = acc.get(j, 0) + a * b
                    if nv == 0:
                        acc.pop(j, None)
                    else:
                        acc[j] = nv
            if acc:
                out[i] = acc
        return SparseMat(self.rows, other.cols, out)

    def is_zero(self):
        return not self.data

    def to_text(self):
        lines = ["%d %d %d" % (self.rows, self.cols, self.nnz())]
        for i, j, v in self.triplets():
            lines.append("%d %d %s" % (i, j, v))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        r, c, nnz = (int(x) for x in lines[0].split())
        trips = []
        for ln in lines[1:]:
            i, j, v = ln.split()
            trips.append((int(i), int(j), Fraction(v) if "/" in v else int(v)))
        m = SparseMat.from_triplets(r, c, trips)
        assert m.nnz() == nnz
        return m


# ---------------------------------------------------------------------------
# prime pool (deterministic)


def _is_prime(n):
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _prime_pool(count=8, seed=20240801):
    rng = random.Random(seed)
    pool = []
    while len(pool) < count:
        n = rng.randrange(2 ** 60, 2 ** 61) | 1
        while not _is_prime(n):
            n += 2
        if n not in pool:
            pool.append(n)
    return pool


PRIME_POOL = _prime_pool()


# ---------------------------------------------------------------------------
# rank mod p with Markowitz-flavoured pivoting


def _rank_mod(m, p):
    import heapq

    rows = {}
    for i, row in m.data.items():
        nr = {}
        for j, v in row.items():
            x = (v.numerator * pow(v.denominator, -1, p)) % p if isinstance(v, Fraction) else v % p
            if x:
                nr[j] = x
        if nr:
            rows[i] = nr
    col_rows = {}
    for i, row in rows.items():
        for j in row:
            col_rows.setdefault(j, set()).add(i)
    heap = [(len(s), j) for j, s in col_rows.items()]
    heapq.heapify(heap)
    rank = 0
    while col_rows:
        # pivot: sparsest column (lazy heap), then sparsest row in it
        while True:
            cnt, col = heapq.heappop(heap)
            s = col_rows.get(col)
            if s is not None and len(s) == cnt:
                break
        rset = col_rows.pop(col)
        piv = min(rset, key=lambda i: (len(rows[i]), i))
        prow = rows.pop(piv)
        inv = pow(prow[col], -1, p)
        prow = {j: (v * inv) % p for j, v in prow.items()}
        touched = set()
        for j in prow:
            s = col_rows.get(j)
            if s is not None:
                s.discard(piv)
                touched.add(j)
        targets = [i for i in rset if i != piv]
        for i in targets:
            row = rows[i]
            f = row[col]
            for j, v in prow.items():
                if j == col:
                    del row[j]
                    continue
                nv = (row.get(j, 0) - f * v) % p
                old = j in row
                if nv:
                    if not old:
                        col_rows.setdefault(j, set()).add(i)
                        touched.add(j)
                    row[j] = nv
                else:
                    if old:
                        del row[j]
                        s = col_rows.get(j)
                        if s is not None:
                            s.discard(i)
                            touched.add(j)
            if not row:
                del rows[i]
        for j in touched:
            s = col_rows.get(j)
            if s is not None:
                if s:
                    heapq.heappush(heap, (len(s), j))
                else:
                    del col_rows[j]
        rank += 1
    return rank


def rank(m, primes=None):
    """Rank over Q via two independent large primes; third on disagreement."""
    if primes is None:
        primes = PRIME_POOL[:2]
    r1 = _rank_mod(m, primes[0])
    r2 = _rank_mod(m, primes[1])
    if r1 == r2:
        return max(r1, r2)
    r3 = _rank_mod(m, PRIME_POOL[2])
    if r3 == max(r1, r2):
        return r3
    raise ArithmeticError(f"persistent rank disagreement: {r1}, {r2}, {r3}")


# ---------------------------------------------------------------------------
# exact echelon machinery


def _strip_content(row):
    g = 0
    for v in row.values():
        g = math.gcd(g, v if isinstance(v, int) else 0)
        if g == 1:
            return row
    if g > 1:
        for j in row:
            row[j] //= g
    return row


def _to_int_rows(m):
    """Clear denominators row by row; keeps exactness, values become ints."""
    rows = {}
    for i, row in m.data.items():
        den = 1
        for v in row.values():
            if isinstance(v, Fraction):
                den = den * v.denominator // math.gcd(den, v.denominator)
        nr = {}
        for j, v in row.items():
            nr[j] = int(v * den) if isinstance(v, Fraction) else v * den
        rows[i] = _strip_content(nr)
    return rows


def _echelon_exact(rows, ncols):
    """Fraction-free forward elimination with content stripping.

    Returns (pivots, leftovers) where pivots is a list of (row_dict, pivot
    col) in elimination order; leftover rows have no entries left in the
    main part (consistency of any augmented part is the caller's concern).
    """
    import heapq

    col_rows = {}
    for i, row in rows.items():
        for j in row:
            if j < ncols:
                col_rows.setdefault(j, set()).add(i)
    heap = [(len(s), j) for j, s in col_rows.items()]
    heapq.heapify(heap)
    pivots = []
    while col_rows:
        while True:
            cnt, col = heapq.heappop(heap)
            s = col_rows.get(col)
            if s is not None and len(s) == cnt:
                break
        rset = col_rows.pop(col)
        piv = min(rset, key=lambda i: (len(rows[i]), i))
        prow = rows.pop(piv)
        touched = set()
        for j in prow:
            if j < ncols:
                s = col_rows.get(j)
                if s is not None:
                    s.discard(piv)
                    touched.add(j)
        a = prow[col]
        targets = [i for i in rset if i != piv]
        for i in targets:
            row = rows[i]
            b = row[col]
            g = math.gcd(a, b)
            fa, fb = a // g, b // g
            for j in list(row):
                if j not in prow:
                    row[j] = fa * row[j]
            for j, v in prow.items():
                nv = fa * row.get(j, 0) - fb * v
                old = j in row
                if nv:
                    if not old and j < ncols:
                        col_rows.setdefault(j, set()).add(i)
                        touched.add(j)
                    row[j] = nv
                else:
                    if old:
                        del row[j]
                        if j < ncols:
                            s = col_rows.get(j)
                            if s is not None:
                                s.discard(i)
                                touched.add(j)
            _strip_content(row)
        for j in touched:
            s = col_rows.get(j)
            if s is not None:
                if s:
                    heapq.heappush(heap, (len(s), j))
                else:
                    del col_rows[j]
        pivots.append((prow, col))
    return pivots, rows


def _back_substitute(pivots, ncols, values):
    """Solve for the pivot coordinates given preset free coordinates.

    `values` maps column -> Fraction for free columns (and may carry an
    augmented right-hand side under column indices >= ncols).
    """
    out = dict(values)
    for prow, col in reversed(pivots):
        s = Fraction(0)
        for j, v in prow.items():
            if j == col:
                continue
            x = out.get(j)
            if x:
                s += v * x
        out[col] = -s / prow[col]
    return out


def kernel_basis(m):
    """Exact basis of the right kernel over Q; integral content-free vectors,
    deterministic under the fixed pivot ordering."""
    rows = _to_int_rows(m)
    pivots, _ = _echelon_exact(rows, m.cols)
    pivot_cols = {col for _, col in pivots}
    free = [j for j in range(m.cols) if j not in pivot_cols]
    basis = []
    for j in free:
        vals = {j: Fraction(1)}
        sol = _back_substitute(pivots, m.cols, vals)
        vec = [Fraction(0)] * m.cols
        for col, x in sol.items():
            vec[col] = x
        basis.append(_primitive(vec))
    return basis


def _primitive(vec):
    den = 1
    for x in vec:
        if isinstance(x, Fraction):
            den = den * x.denominator // math.gcd(den, x.denominator)
    ints = [int(x * den) for x in vec]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    if g > 1:
        ints = [x // g for x in ints]
    return ints


def solve_exact(a, rhs_columns):
    """Solve a x = b exactly for each b in rhs_columns.

    Returns a list of solution vectors (entries Fraction, free coordinates
    zero) or raises ArithmeticError if some system is inconsistent.
    """
    ncols = a.cols
    naug = len(rhs_columns)
    rows = {}
    for i, row in a.data.items():
        rows[i] = dict(row)
    for k, b in enumerate(rhs_columns):
        for i, v in (b.items() if isinstance(b, dict) else enumerate(b)):
            if v:
                rows.setdefault(i, {})[ncols + k] = v
    rows = _to_int_rows(SparseMat(a.rows, ncols + naug, rows))
    pivots, leftovers = _echelon_exact(rows, ncols)
    for i, row in leftovers.items():
        if any(j >= ncols for j in row) and not any(j < ncols for j in row):
            raise ArithmeticError("inconsistent linear system")
    sols = []
    for k in range(naug):
        vals = {ncols + k: Fraction(-1)}
        sol = _back_substitute(pivots, ncols, vals)
        vec = [Fraction(0)] * ncols
        for col, x in sol.items():
            if col < ncols:
                vec[col] = x
        sols.append(vec)
    return sols


# ---------------------------------------------------------------------------
# characteristic polynomials


@dataclass(frozen=True)
class CharPoly:
    """Monic characteristic polynomial, coefficients ascending in t."""

    coeffs: tuple  # (c0, c1, ..., 1) Fractions

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, x):
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_matrix(self, m):
        """p(M) for a dense square matrix (list of lists)."""
        n = len(m)
        ident = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        acc = [[Fraction(0)] * n for _ in range(n)]
        for c in reversed(self.coeffs):
            acc = _dense_mul(acc, m)
            for i in range(n):
                acc[i][i] += c
        return acc


def _dense_mul(a, b):
    n = len(a)
    out = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        ai = a[i]
        for k in range(n):
            f = ai[k]
            if f:
                bk = b[k]
                oi = out[i]
                for j in range(n):
                    oi[j] += f * bk[j]
    return out


def charpoly(m):
    """Characteristic polynomial det(tI - M) by the Berkowitz method."""
    if isinstance(m, SparseMat):
        if m.rows != m.cols:
            raise ValueError("characteristic polynomial of a non-square matrix")
        n = m.rows
        dense = [[Fraction(m.get(i, j)) for j in range(n)] for i in range(n)]
    else:
        dense = [[Fraction(x) for x in row] for row in m]
        n = len(dense)
        if any(len(r) != n for r in dense):
            raise ValueError("characteristic polynomial of a non-square matrix")
    if n == 0:
        return CharPoly((Fraction(1),))
    # Berkowitz iteration over leading principal minors
    poly = [Fraction(1), -dense[0][0]]  # descending coefficients
    for k in range(1, n):
        a = dense[k][k]
        row = [dense[k][j] for j in range(k)]
        col = [dense[j][k] for j in range(k)]
        sub = [r[:k] for r in dense[:k]]
        # first column of the Toeplitz matrix: 1, -a, -(R C), -(R M C), ...
        firsts = [Fraction(1), -a]
        vec = col
        for _ in range(k - 1):
            firsts.append(-_dot(row, vec))
            vec = [_dot(sr, vec) for sr in sub]
        firsts.append(-_dot(row, vec))
        # toeplitz multiply: new[m] = sum_{i+j=m} firsts[i] poly[j]
        new = [Fraction(0)] * (k + 2)
        for i, f in enumerate(firsts):
            if f == 0:
                continue
            for j, c in enumerate(poly):
                if i + j <= k + 1:
                    new[i + j] += f * c
        poly = new
    poly.reverse()  # ascending
    return CharPoly(tuple(poly))


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def factor_deg_le2(p):
    """Split a CharPoly into irreducible factors of degree <= 2 over Q.

    Returns (factors, remainder): factors is a list of (ascending monic
    coefficient tuple, multiplicity); remainder is the monic product of all
    irreducible factors of degree > 2 (None when the split is complete).
    """
    import sympy

    t = sympy.Symbol("t")
    expr = sum(sympy.Rational(c.numerator, c.denominator) * t ** i
               for i, c in enumerate(p.coeffs))
    _, factors = sympy.Poly(expr, t).factor_list()
    keep = []
    rem = sympy.Integer(1)
    for poly, mult in factors:
        if poly.degree() <= 2:
            cs = poly.all_coeffs()[::-1]  # ascending
            lead = cs[-1]
            monic = tuple(Fraction(int(sympy.numer(c / lead)), int(sympy.denom(c / lead)))
                          for c in cs)
            keep.append((monic, int(mult)))
        else:
            rem *= poly.as_expr() ** mult
    keep.sort()
    if rem == 1:
        remainder = None
    else:
        rp = sympy.Poly(rem, t)
        cs = rp.all_coeffs()[::-1]
        lead = cs[-1]
        remainder = tuple(Fraction(int(sympy.numer(c / lead)), int(sympy.denom(c / lead)))
                          for c in cs)
    return keep, remainder
