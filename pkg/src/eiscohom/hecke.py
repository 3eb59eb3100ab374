"""Hecke operators on H^5: coset representatives, the action on sharbly
cycles, operator matrices on the homology basis, and eigensystem extraction
over Q and quadratic fields.

The two operators at a prime come from diag(1,1,pi) and diag(1,pi,pi); the
coset sum has N^2 + N + 1 terms.  Matrices are computed by pushing each
basis cycle through the Hecke sum, reducing to size 1, and reading off
homology coordinates with the exact projection functionals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import voronoi
from .complex import VoronoiComplexLevel, complex_at
from .eisenstein import (
    EisIdeal, PrimeIdeal, ZERO, ONE, format_label, residue_reps,
)
from .linalg import charpoly, factor_deg_le2
from .sharbly import (
    reduce_cycle, sharbly_to_voronoi, translate_chain, voronoi_to_sharbly,
    is_cycle_mod_gamma, chain_add,
)


# ---------------------------------------------------------------------------
# quadratic field values


@dataclass(frozen=True)
class QuadField:
    """Q(theta) with theta^2 = t*theta - m; disc = t^2 - 4m (nonsquare)."""

    t: Fraction
    m: Fraction

    @property
    def disc(self):
        return self.t * self.t - 4 * self.m

    def is_real(self):
        return self.disc > 0

    def squarefree_disc(self):
        d = self.disc
        num, den = d.numerator, d.denominator
        n = num * den  # same square class
        s = 1
        k = 2
        while k * k <= abs(n):
            while n % (k * k) == 0:
                n //= k * k
            k += 1
        return n

    def __str__(self):
        return f"Q(sqrt({self.squarefree_disc()}))"


class QuadElt:
    """r + s*theta in a fixed QuadField; mixes freely with rationals."""

    __slots__ = ("field", "r", "s")

    def __init__(self, field, r, s=0):
        self.field = field
        self.r = Fraction(r)
        self.s = Fraction(s)

    def _coerce(self, other):
        if isinstance(other, QuadElt):
            if other.field != self.field:
                raise ValueError("mixed quadratic fields")
            return other
        return QuadElt(self.field, other, 0)

    def __add__(self, other):
        o = self._coerce(other)
        return QuadElt(self.field, self.r + o.r, self.s + o.s)

    __radd__ = __add__

    def __neg__(self):
        return QuadElt(self.field, -self.r, -self.s)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        ss = self.s * o.s
        return QuadElt(self.field,
                       self.r * o.r - ss * self.field.m,
                       self.r * o.s + self.s * o.r + ss * self.field.t)

    __rmul__ = __mul__

    def conj(self):
        return QuadElt(self.field, self.r + self.s * self.field.t, -self.s)

    def norm(self):
        n = self * self.conj()
        assert n.s == 0
        return n.r

    def is_rational(self):
        return self.s == 0

    def __eq__(self, other):
        if isinstance(other, QuadElt):
            return self.field == other.field and self.r == other.r and self.s == other.s
        if self.s != 0:
            return False
        return self.r == other

    def __hash__(self):
        return hash((self.field, self.r, self.s))

    def __repr__(self):
        return f"({self.r}+{self.s}theta)"


def conj_value(x):
    return x.conj() if isinstance(x, QuadElt) else x


# ---------------------------------------------------------------------------
# coset representatives


@dataclass(frozen=True)
class HeckeOp:
    prime: PrimeIdeal
    k: int

    def __str__(self):
        return f"T({format_label(self.prime.label)},{self.k})"


def coset_reps(pr, k):
    """Left-coset matrices for T(p,k): the diagonal singleton, the N^2
    upper-triangular family, and the N single-off-diagonal family."""
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    pi = pr.generator
    reps = residue_reps(pr)
    one, zero = ONE, ZERO
    out = []
    if k == 1:
        out.append(((pi, zero, zero), (zero, one, zero), (zero, zero, one)))
        for al in reps:
            for be in reps:
                out.append(((one, zero, al), (zero, one, be), (zero, zero, pi)))
        for al in reps:
            out.append(((one, al, zero), (zero, pi, zero), (zero, zero, one)))
    else:
        out.append(((pi, zero, zero), (zero, pi, zero), (zero, zero, one)))
        for al in reps:
            for be in reps:
                out.append(((one, al, be), (zero, pi, zero), (zero, zero, pi)))
        for al in reps:
            out.append(((pi, zero, zero), (zero, one, al), (zero, zero, pi)))
    return out


def apply_hecke(op, chain, level, check_cycle=None):
    """Coset sum of translates, canonicalized; optionally verify the result
    is still a cycle mod Gamma_0(n) (auto-skip for large supports)."""
    if op.prime.ideal.divides(level.ideal):
        raise ValueError("Hecke prime divides the level")
    out = {}
    for g in coset_reps(op.prime, op.k):
        for key, coeff in chain.items():
            from .eisenstein import mat_vec
            from .sharbly import add_symbol
            add_symbol(out, tuple(mat_vec(g, v) for v in key), coeff)
    if check_cycle is None:
        check_cycle = len(out) <= 400
    if check_cycle and not is_cycle_mod_gamma(out, level):
        raise ArithmeticError(f"{op} image is not a cycle mod Gamma_0(n)")
    return out


# ---------------------------------------------------------------------------
# operator matrices


@dataclass
class HeckeMatrix:
    level: tuple
    prime: PrimeIdeal
    k: int
    mat: list  # dense rows of Fractions, size h x h

    def __matmul__(self, other):
        n = len(self.mat)
        out = [[sum(self.mat[i][t] * other.mat[t][j] for t in range(n))
                for j in range(n)] for i in range(n)]
        return out

    def commutes_with(self, other):
        return self @ other == other @ self


class HeckeSession:
    """Per-level pipeline state: cycle basis as sharbly chains, shared
    reduction caches, memoized operator matrices."""

    def __init__(self, cx_or_label, budget=200):
        if isinstance(cx_or_label, VoronoiComplexLevel):
            self.cx = cx_or_label
        else:
            self.cx = complex_at(tuple(cx_or_label))
        if self.cx.homology_dim() == 0:
            raise ValueError(f"no cohomology at level {self.cx.label}")
        self.level = self.cx.level
        self.budget = budget
        self.caches = {}             # canonical face forms
        self.ident_cache = {}
        self.basis_chains = [voronoi_to_sharbly(self.cx, c)
                             for c in self.cx.cycle_basis()]
        self.matrices = {}
        self.traces = {}

    def hecke_matrix(self, pr, k, check_cycle=None):
        key = (pr.label, k)
        if key in self.matrices:
            return self.matrices[key]
        op = HeckeOp(pr, k)
        h = len(self.basis_chains)
        cols = []
        for j, chain in enumerate(self.basis_chains):
            image = apply_hecke(op, chain, self.level, check_cycle=check_cycle)
            reduced, trace = reduce_cycle(image, self.level, budget=self.budget,
                                          caches=self.caches)
            self.traces[(key, j)] = trace
            y = sharbly_to_voronoi(self.cx, reduced, self.ident_cache)
            cols.append(self.cx.homology_coordinates(y))
        mat = [[cols[j][i] for j in range(h)] for i in range(h)]
        hm = HeckeMatrix(self.cx.label, pr, k, mat)
        self.matrices[key] = hm
        return hm

    def both_operators(self, pr):
        return self.hecke_matrix(pr, 1), self.hecke_matrix(pr, 2)


def hecke_matrix(ideal, pr, k, budget=200):
    label = tuple(ideal.label) if isinstance(ideal, EisIdeal) else tuple(ideal)
    return HeckeSession(label, budget=budget).hecke_matrix(pr, k)


# ---------------------------------------------------------------------------
# small dense exact linear algebra for eigensystem extraction


def _dense_solve(basis, target):
    """Coordinates of target in the span of basis vectors, or None."""
    if not basis:
        return None
    n = len(basis[0])
    d = len(basis)
    rows = [[Fraction(basis[j][i]) for j in range(d)] + [Fraction(target[i])]
            for i in range(n)]
    piv_cols = []
    r = 0
    for c in range(d):
        piv = None
        for i in range(r, n):
            if rows[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c]
        rows[r] = [x / inv for x in rows[r]]
        for i in range(n):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        piv_cols.append(c)
        r += 1
    sol = [Fraction(0)] * d
    for i in range(r, n):
        if rows[i][d] != 0:
            return None
    for i, c in enumerate(piv_cols):
        sol[c] = rows[i][d]
    return sol


def _mat_apply(mat, vec):
    return [sum(mat[i][j] * vec[j] for j in range(len(vec)))
            for i in range(len(mat))]


def _restrict(mat, basis):
    """Matrix of the operator on an invariant subspace (rows = images)."""
    cols = []
    for b in basis:
        img = _mat_apply(mat, b)
        coords = _dense_solve(basis, img)
        if coords is None:
            raise ArithmeticError("subspace is not invariant")
        cols.append(coords)
    d = len(basis)
    return [[cols[j][i] for j in range(d)] for i in range(d)]


def _dense_kernel(mat):
    n = len(mat)
    rows = [list(map(Fraction, r)) for r in mat]
    piv = {}
    r = 0
    for c in range(n):
        p = None
        for i in range(r, n):
            if rows[i][c] != 0:
                p = i
                break
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        inv = rows[r][c]
        rows[r] = [x / inv for x in rows[r]]
        for i in range(n):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        piv[c] = r
        r += 1
    basis = []
    for c in range(n):
        if c in piv:
            continue
        v = [Fraction(0)] * n
        v[c] = Fraction(1)
        for pc, pr_ in piv.items():
            v[pc] = -rows[pr_][c]
        basis.append(v)
    return basis


def _poly_of_matrix(coeffs, mat):
    """Evaluate an ascending-coefficient polynomial at a dense matrix."""
    n = len(mat)
    out = [[Fraction(0)] * n for _ in range(n)]
    for c in reversed(coeffs):
        nxt = [[sum(out[i][t] * mat[t][j] for t in range(n)) for j in range(n)]
               for i in range(n)]
        for i in range(n):
            nxt[i][i] += c
        out = nxt
    return out


# ---------------------------------------------------------------------------
# eigensystem extraction


@dataclass
class EigenClass:
    """A simultaneous eigensystem: the eigenvalue field, one chosen root per
    Galois orbit, the (a1, a2) values per prime, and the multiplicity of the
    common eigenspace."""

    level: tuple
    field: object            # "Q", a QuadField, or None (unsplit, unknown)
    eigenvalues: dict        # (prime label, k) -> Fraction | QuadElt | None
    multiplicity: int
    dim: int                 # total dimension accounted for (mult * field deg)

    def a(self, pr, k):
        return self.eigenvalues.get((tuple(pr.label), k))

    def field_degree(self):
        return 1 if self.field == "Q" else (2 if isinstance(self.field, QuadField) else None)

    def is_rational(self):
        return self.field == "Q"

    def conjugation_ok(self):
        """a(p,2) = conj(a(p,1)) at every stored prime (quadratic classes)."""
        if not isinstance(self.field, QuadField):
            return True
        primes = {lab for (lab, k) in self.eigenvalues}
        for lab in primes:
            a1 = self.eigenvalues.get((lab, 1))
            a2 = self.eigenvalues.get((lab, 2))
            if a1 is None or a2 is None:
                continue
            if conj_value(_as_field(a1, self.field)) != _as_field(a2, self.field):
                return False
        return True


def _as_field(x, fld):
    return x if isinstance(x, QuadElt) else QuadElt(fld, x, 0)


def eigensystems(hmats):
    """Common eigenspace decomposition of a family of commuting operator
    matrices over Q and quadratic fields (factors of degree > 2 are not
    split; such subspaces surface with field None)."""
    if not hmats:
        raise ValueError("no matrices")
    h = len(hmats[0].mat)
    level = hmats[0].level
    for tm in hmats:
        if tm.level != level or len(tm.mat) != h:
            raise ValueError("matrices do not share a level/basis")
    pieces = [[_unit_vec(h, i) for i in range(h)]] if h else []
    pieces = [p for p in pieces if p]
    unsplit = []
    changed = True
    while changed:
        changed = False
        for tm in hmats:
            nxt = []
            for basis in pieces:
                parts, unk = _split_by(tm.mat, basis)
                if len(parts) + len(unk) > 1:
                    changed = True
                nxt.extend(parts)
                unsplit.extend(unk)
            pieces = nxt
    out = []
    for basis in pieces:
        out.append(_read_eigenclass(level, hmats, basis))
    for basis in unsplit:
        out.append(EigenClass(level, None, {}, 1, len(basis)))
    out.sort(key=_class_sort_key)
    return out


def _unit_vec(n, i):
    v = [Fraction(0)] * n
    v[i] = Fraction(1)
    return v


def _lift(basis, coords_vecs):
    out = []
    for cv in coords_vecs:
        vec = [Fraction(0)] * len(basis[0])
        for c, b in zip(cv, basis):
            if c:
                for i, x in enumerate(b):
                    vec[i] += c * x
        out.append(vec)
    return out


def _split_by(mat, basis):
    sub = _restrict(mat, basis)
    cp = charpoly(sub)
    facs, rem = factor_deg_le2(cp)
    if not facs and rem is not None:
        return [], [basis]
    parts = []
    unknown = []
    total = 0
    for coeffs, mult in facs:
        block = _poly_of_matrix(coeffs, sub)
        if mult > 1:
            block = _mat_power_of(block, mult)
        ker = _dense_kernel(block)
        if ker:
            parts.append(_lift(basis, ker))
            total += len(ker)
    if rem is not None:
        block = _poly_of_matrix(rem, sub)
        ker = _dense_kernel(block)
        if ker:
            unknown.append(_lift(basis, ker))
            total += len(ker)
    if total != len(basis):
        raise ArithmeticError("generalized eigenspaces do not fill the space")
    if len(parts) == 1 and not unknown:
        return [basis], []  # nothing actually split; keep original basis
    return parts, unknown


def _mat_power_of(mat, k):
    out = mat
    for _ in range(k - 1):
        n = len(mat)
        out = [[sum(out[i][t] * mat[t][j] for t in range(n)) for j in range(n)]
               for i in range(n)]
    return out


def _read_eigenclass(level, hmats, basis):
    """Eigenvalues on a refinement-stable subspace: every operator acts
    either as a rational scalar or through one shared quadratic generator."""
    d = len(basis)
    gen = None
    fld = None
    restricted = {}
    for tm in hmats:
        restricted[(tuple(tm.prime.label), tm.k)] = _restrict(tm.mat, basis)
    eigs = {}
    for key, sub in restricted.items():
        cp = charpoly(sub)
        facs, rem = factor_deg_le2(cp)
        if rem is not None or len(facs) != 1:
            return EigenClass(level, None, {}, 1, d)
        coeffs, mult = facs[0]
        if len(coeffs) == 2:  # t + c -> rational scalar -c
            lam = -coeffs[0]
            if any(sub[i][j] != (lam if i == j else 0)
                   for i in range(d) for j in range(d)):
                return EigenClass(level, None, {}, 1, d)
            eigs[key] = lam
        else:  # irreducible quadratic t^2 + b t + c
            c, b, _ = coeffs
            if gen is None:
                fld = QuadField(-b, c)
                gen = sub
                eigs[key] = QuadElt(fld, 0, 1)
            else:
                rs = _in_algebra(sub, gen)
                if rs is None:
                    return EigenClass(level, None, {}, 1, d)
                eigs[key] = QuadElt(fld, rs[0], rs[1])
    if gen is None:
        return EigenClass(level, "Q", eigs, d, d)
    assert d % 2 == 0
    return EigenClass(level, fld, eigs, d // 2, d)


def _in_algebra(sub, gen):
    """Solve sub = r*I + s*gen exactly; None if sub is outside Q[gen]."""
    d = len(sub)
    r = s = None
    eqs = []
    for i in range(d):
        for j in range(d):
            eqs.append((Fraction(int(i == j)), gen[i][j], sub[i][j]))
    # solve the overdetermined 2-unknown system
    for idx in range(len(eqs)):
        a1, b1, c1 = eqs[idx]
        for jdx in range(idx + 1, len(eqs)):
            a2, b2, c2 = eqs[jdx]
            det = a1 * b2 - a2 * b1
            if det != 0:
                r = (c1 * b2 - c2 * b1) / det
                s = (a1 * c2 - a2 * c1) / det
                break
        if r is not None:
            break
    if r is None:
        return None
    for a, b, c in eqs:
        if a * r + b * s != c:
            return None
    return r, s


def _class_sort_key(e):
    def val_key(v):
        if v is None:
            return (2,)
        if isinstance(v, QuadElt):
            return (1, v.field.t, v.field.m, v.r, v.s)
        return (0, Fraction(v))

    return (0 if e.field == "Q" else (1 if isinstance(e.field, QuadField) else 2),
            sorted((k, val_key(v)) for k, v in e.eigenvalues.items()))


# ---------------------------------------------------------------------------
# Hecke polynomials and rendering


@dataclass
class HeckePolynomial:
    """1 - a1 t + a2 N t^2 - N^3 t^3, the inverse local L-factor."""

    a1: object
    a2: object
    n: int

    def coefficients(self):
        """Ascending in t: (1, -a1, a2*N, -N^3)."""
        return (Fraction(1), _neg(self.a1), _mul(self.a2, self.n),
                Fraction(-self.n ** 3))

    def render(self, symbol="a"):
        return render_poly(self.coefficients(), symbol=symbol)


def _neg(x):
    return -x


def _mul(x, n):
    return x * n if isinstance(x, QuadElt) else Fraction(x) * n


def hecke_polynomial(eig, pr):
    a1 = eig.a(pr, 1)
    a2 = eig.a(pr, 2)
    if a1 is None or a2 is None:
        raise ValueError(f"no eigenvalues stored at {format_label(pr.label)}")
    return HeckePolynomial(a1, a2, pr.q)


def _fmt_rational(c):
    assert c.denominator == 1, "integral coefficients expected in rendering"
    return str(c.numerator)


def _term_coeff_str(c, symbol):
    """Render one coefficient: monomials bare, binomials in parentheses.
    Returns (text, needs_plus_sign_prefix_handled) with explicit sign."""
    if isinstance(c, QuadElt) and c.s != 0:
        spart = "" if abs(c.s) == 1 else _fmt_rational(abs(c.s))
        ssign = "-" if c.s < 0 else "+"
        if c.r == 0:
            return ssign, f"{spart}{symbol}"
        rsign = "-" if c.r < 0 else "+"
        inner = f"{'-' if c.s < 0 else ''}{spart}{symbol}{rsign}{_fmt_rational(abs(c.r))}"
        return "+", f"({inner})"
    v = c.r if isinstance(c, QuadElt) else Fraction(c)
    sign = "-" if v < 0 else "+"
    return sign, _fmt_rational(abs(v))


def render_poly(asc_coeffs, symbol="a"):
    """Paper-style string, highest power of t first: -64t^3-12t^2+3t+1."""
    deg = len(asc_coeffs) - 1
    parts = []
    for k in range(deg, -1, -1):
        c = asc_coeffs[k]
        if (isinstance(c, QuadElt) and c.r == 0 and c.s == 0) or \
           (not isinstance(c, QuadElt) and c == 0):
            continue
        sign, text = _term_coeff_str(c, symbol)
        if k > 0 and text == "1":
            text = ""
        tpow = "" if k == 0 else ("t" if k == 1 else f"t^{k}")
        parts.append((sign, f"{text}{tpow}"))
    if not parts:
        return "0"
    first_sign, first_text = parts[0]
    out = (first_sign if first_sign == "-" else "") + first_text
    for sign, text in parts[1:]:
        out += sign + text
    return out
