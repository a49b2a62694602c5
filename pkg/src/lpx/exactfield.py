"""Exact arithmetic over the Gaussian rationals Q(i).

``Scalar`` is an immutable element of Q(i); ``Matrix`` is a small dense
immutable matrix of scalars.  Elimination is fraction-free: each row is
cleared of denominators and reduced over the (Gaussian) integers by the
kernels in ``lpx._backend``.
"""

import random
import re
from fractions import Fraction
from math import gcd, lcm

from . import _backend
from .errors import (BlockSplitFailed, DimensionMismatch, IrrationalSpectrum,
                     NonCommuting, NotNilpotent, ParseError)

__all__ = [
    "Scalar", "Matrix", "ZERO", "ONE", "I", "as_scalar", "parse_scalar",
    "rref", "rank", "nullspace", "solve", "inverse", "pseudoinverse",
    "charpoly", "eigenvalues", "gaussian_sqrt",
    "simultaneous_block_diagonalize", "common_lower_triangularize",
]


def _mk(a, b, d):
    g = gcd(a, b, d)
    s = object.__new__(Scalar)
    if g != 1:
        a //= g
        b //= g
        d //= g
    s._a = a
    s._b = b
    s._d = d
    return s


_NUM = r"\d+(?:/\d+)?"
_RE_FULL = re.compile(rf"^([+-]?{_NUM})(?:([+-])({_NUM})?\*?i)?$")
_RE_IMAG = re.compile(rf"^([+-]?)({_NUM})?\*?i$")


class Scalar:
    """Element (a + b i)/d of Q(i) with d > 0 and gcd(a, b, d) = 1."""

    __slots__ = ("_a", "_b", "_d")

    def __new__(cls, re=0, im=0):
        if isinstance(re, Scalar):
            if im == 0:
                return re
            return re + Scalar(im) * I
        if isinstance(re, str):
            s = parse_scalar(re)
            return s if im == 0 else s + Scalar(im) * I
        if type(re) is int and type(im) is int:
            return _mk(re, im, 1)
        if isinstance(re, complex):
            re, im = re.real, re.imag + im
        fr = Fraction(re)
        fi = Fraction(im)
        d = lcm(fr.denominator, fi.denominator)
        return _mk(fr.numerator * (d // fr.denominator),
                   fi.numerator * (d // fi.denominator), d)

    # -- accessors
    @property
    def re(self):
        return Fraction(self._a, self._d)

    @property
    def im(self):
        return Fraction(self._b, self._d)

    @property
    def parts(self):
        """The canonical integer triple (a, b, d)."""
        return self._a, self._b, self._d

    def is_real(self):
        return self._b == 0

    def is_integer(self):
        return self._d == 1

    def conjugate(self):
        return _mk(self._a, -self._b, self._d) if self._b else self

    def key(self):
        """Sort key: (real part, imaginary part)."""
        return (Fraction(self._a, self._d), Fraction(self._b, self._d))

    # -- arithmetic
    def __add__(self, o):
        if type(o) is not Scalar:
            if type(o) is int:
                return _mk(self._a + o * self._d, self._b, self._d)
            o = as_scalar(o)
        if self._d == o._d:
            return _mk(self._a + o._a, self._b + o._b, self._d)
        return _mk(self._a * o._d + o._a * self._d,
                   self._b * o._d + o._b * self._d, self._d * o._d)

    __radd__ = __add__

    def __neg__(self):
        return _mk(-self._a, -self._b, self._d)

    def __pos__(self):
        return self

    def __sub__(self, o):
        if type(o) is not Scalar:
            o = as_scalar(o)
        return self + (-o)

    def __rsub__(self, o):
        return as_scalar(o) - self

    def __mul__(self, o):
        if type(o) is not Scalar:
            if type(o) is int:
                return _mk(self._a * o, self._b * o, self._d)
            o = as_scalar(o)
        a, b, c, e = self._a, self._b, o._a, o._b
        if b == 0 and e == 0:
            return _mk(a * c, 0, self._d * o._d)
        return _mk(a * c - b * e, a * e + b * c, self._d * o._d)

    __rmul__ = __mul__

    def inverse(self):
        a, b, d = self._a, self._b, self._d
        if a == 0 and b == 0:
            raise ZeroDivisionError("inverse of zero scalar")
        n2 = a * a + b * b
        return _mk(a * d, -b * d, n2)

    def __truediv__(self, o):
        if type(o) is not Scalar:
            o = as_scalar(o)
        return self * o.inverse()

    def __rtruediv__(self, o):
        return as_scalar(o) * self.inverse()

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        r = ONE
        base = self
        while k:
            if k & 1:
                r = r * base
            base = base * base
            k >>= 1
        return r

    # -- comparison and hashing
    def __eq__(self, o):
        if type(o) is Scalar:
            return self._a == o._a and self._b == o._b and self._d == o._d
        if isinstance(o, (int, Fraction)):
            return self._b == 0 and Fraction(self._a, self._d) == o
        if isinstance(o, complex):
            return complex(self) == o
        return NotImplemented

    def __hash__(self):
        if self._b == 0:
            return hash(Fraction(self._a, self._d))
        return hash((self._a, self._b, self._d))

    def __bool__(self):
        return self._a != 0 or self._b != 0

    def __complex__(self):
        return complex(self._a / self._d, self._b / self._d)

    def __float__(self):
        if self._b:
            raise TypeError("non-real scalar")
        return self._a / self._d

    def __reduce__(self):
        return (Scalar, (str(self),))

    # -- text
    def __str__(self):
        r = _frac_str(self._a, self._d)
        if self._b == 0:
            return r
        sign = "-" if self._b < 0 else "+"
        return f"{r}{sign}{_frac_str(abs(self._b), self._d)}*i"

    def __repr__(self):
        return f"Scalar('{self}')"


def _frac_str(p, q):
    g = gcd(p, q)
    p //= g
    q //= g
    return str(p) if q == 1 else f"{p}/{q}"


def _num(t):
    if t is None:
        return Fraction(1)
    p, _, q = t.partition("/")
    if q and int(q) == 0:
        raise ParseError("zero denominator")
    return Fraction(int(p), int(q or 1))


def parse_scalar(text):
    """Parse ``p/q``, ``p/q+r/s*i`` and the shorthand forms ``0``, ``1``, ``i``."""
    if isinstance(text, Scalar):
        return text
    if not isinstance(text, str):
        raise ParseError(f"scalar must be a string, got {type(text).__name__}")
    t = text.replace(" ", "")
    m = _RE_FULL.match(t)
    if m:
        re_part = _num(m.group(1).lstrip("+-")) * (-1 if m.group(1)[0] == "-" else 1)
        im_part = Fraction(0)
        if m.group(2):
            im_part = _num(m.group(3)) * (-1 if m.group(2) == "-" else 1)
        return Scalar(re_part, im_part)
    m = _RE_IMAG.match(t)
    if m:
        return Scalar(0, _num(m.group(2)) * (-1 if m.group(1) == "-" else 1))
    raise ParseError(f"malformed scalar {text!r}")


def as_scalar(x):
    if type(x) is Scalar:
        return x
    if type(x) is int:
        return _mk(x, 0, 1)
    if isinstance(x, str):
        return parse_scalar(x)
    if isinstance(x, float):
        if x != x or x in (float("inf"), float("-inf")):
            raise ValueError("non-finite float")
    return Scalar(x)


ZERO = _mk(0, 0, 1)
ONE = _mk(1, 0, 1)
I = _mk(0, 1, 1)


def gaussian_sqrt(z):
    """Return w in Q(i) with w*w = z, or None when z is not a square there."""
    z = as_scalar(z)
    if not z:
        return ZERO
    a, b = z.re, z.im
    # |z| must be rational
    n2 = a * a + b * b
    m = _fsqrt(n2)
    if m is None:
        return None
    x2 = (m + a) / 2
    y2 = (m - a) / 2
    x = _fsqrt(x2)
    y = _fsqrt(y2)
    if x is None or y is None:
        return None
    if b < 0:
        y = -y
    w = Scalar(x, y)
    return w if w * w == z else None


def _isqrt_exact(n):
    if n < 0:
        return None
    r = int(n ** 0.5) if n < 1 << 50 else _isqrt(n)
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r if r * r == n else None


def _isqrt(n):
    from math import isqrt
    return isqrt(n)


def _fsqrt(q):
    q = Fraction(q)
    if q < 0:
        return None
    p = _isqrt_exact(q.numerator)
    d = _isqrt_exact(q.denominator)
    if p is None or d is None:
        return None
    return Fraction(p, d)


class Matrix:
    """Immutable dense matrix of scalars."""

    __slots__ = ("rows", "nrows", "ncols", "_hash")

    def __init__(self, rows, ncols=None):
        rows = tuple(tuple(as_scalar(x) for x in r) for r in rows)
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != ncols:
                raise DimensionMismatch("ragged matrix rows")
        self.rows = rows
        self.nrows = len(rows)
        self.ncols = ncols
        self._hash = None

    @classmethod
    def _raw(cls, rows, ncols):
        m = object.__new__(cls)
        m.rows = rows
        m.nrows = len(rows)
        m.ncols = ncols
        m._hash = None
        return m

    @classmethod
    def identity(cls, n):
        return cls._raw(tuple(tuple(ONE if i == j else ZERO for j in range(n))
                              for i in range(n)), n)

    @classmethod
    def zeros(cls, r, c=None):
        c = r if c is None else c
        row = (ZERO,) * c
        return cls._raw((row,) * r, c)

    @classmethod
    def from_columns(cls, cols, nrows=None):
        cols = [tuple(as_scalar(x) for x in c) for c in cols]
        if nrows is None:
            nrows = len(cols[0]) if cols else 0
        return cls._raw(tuple(tuple(c[i] for c in cols) for i in range(nrows)), len(cols))

    @classmethod
    def diag(cls, entries):
        entries = [as_scalar(e) for e in entries]
        n = len(entries)
        return cls._raw(tuple(tuple(entries[i] if i == j else ZERO for j in range(n))
                              for i in range(n)), n)

    @classmethod
    def from_strings(cls, rows):
        return cls([[parse_scalar(x) for x in r] for r in rows])

    def to_strings(self):
        return [[str(x) for x in r] for r in self.rows]

    # -- basic access
    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def row(self, i):
        return self.rows[i]

    def col(self, j):
        return tuple(r[j] for r in self.rows)

    def columns(self):
        return [self.col(j) for j in range(self.ncols)]

    @property
    def T(self):
        if self.nrows == 0:
            return Matrix._raw(((),) * self.ncols, 0)
        return Matrix._raw(tuple(zip(*self.rows)), self.nrows)

    def conj_T(self):
        if self.nrows == 0:
            return Matrix._raw(((),) * self.ncols, 0)
        return Matrix._raw(tuple(tuple(x.conjugate() for x in c) for c in zip(*self.rows)),
                           self.nrows)

    def is_square(self):
        return self.nrows == self.ncols

    def is_zero(self):
        return not any(x for r in self.rows for x in r)

    def is_symmetric(self):
        return self.is_square() and all(self.rows[i][j] == self.rows[j][i]
                                        for i in range(self.nrows) for j in range(i))

    def is_lower_triangular(self, strict=False):
        off = 0 if strict else 1
        return all(not self.rows[i][j] for i in range(self.nrows)
                   for j in range(i + off, self.ncols))

    def trace(self):
        t = ZERO
        for i in range(min(self.nrows, self.ncols)):
            t = t + self.rows[i][i]
        return t

    def submatrix(self, rows, cols):
        return Matrix._raw(tuple(tuple(self.rows[i][j] for j in cols) for i in rows), len(cols))

    def hstack(self, other):
        if self.nrows != other.nrows:
            raise DimensionMismatch("hstack row mismatch")
        return Matrix._raw(tuple(a + b for a, b in zip(self.rows, other.rows)),
                           self.ncols + other.ncols)

    def vstack(self, other):
        if self.ncols != other.ncols:
            raise DimensionMismatch("vstack column mismatch")
        return Matrix._raw(self.rows + other.rows, self.ncols)

    # -- arithmetic
    def __eq__(self, o):
        if not isinstance(o, Matrix):
            return NotImplemented
        return self.shape == o.shape and self.rows == o.rows

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.shape, self.rows))
        return self._hash

    def __add__(self, o):
        if self.shape != o.shape:
            raise DimensionMismatch("matrix sum shape mismatch")
        return Matrix._raw(tuple(tuple(x + y for x, y in zip(a, b))
                                 for a, b in zip(self.rows, o.rows)), self.ncols)

    def __sub__(self, o):
        if self.shape != o.shape:
            raise DimensionMismatch("matrix difference shape mismatch")
        return Matrix._raw(tuple(tuple(x - y for x, y in zip(a, b))
                                 for a, b in zip(self.rows, o.rows)), self.ncols)

    def __neg__(self):
        return Matrix._raw(tuple(tuple(-x for x in r) for r in self.rows), self.ncols)

    def scale(self, c):
        c = as_scalar(c)
        return Matrix._raw(tuple(tuple(x * c for x in r) for r in self.rows), self.ncols)

    def __matmul__(self, o):
        if not isinstance(o, Matrix):
            return NotImplemented
        if self.ncols != o.nrows:
            raise DimensionMismatch(f"cannot multiply {self.shape} by {o.shape}")
        cols = list(zip(*o.rows)) if o.nrows else [()] * o.ncols
        out = []
        for r in self.rows:
            nz = [(k, x) for k, x in enumerate(r) if x]
            row = []
            for c in cols:
                acc = ZERO
                for k, x in nz:
                    y = c[k]
                    if y:
                        acc = acc + x * y
                row.append(acc)
            out.append(tuple(row))
        return Matrix._raw(tuple(out), o.ncols)

    def __mul__(self, o):
        if isinstance(o, Matrix):
            return self @ o
        return self.scale(o)

    __rmul__ = scale

    def __pow__(self, k):
        if not self.is_square():
            raise DimensionMismatch("power of non-square matrix")
        r = Matrix.identity(self.nrows)
        base = self
        while k:
            if k & 1:
                r = r @ base
            base = base @ base
            k >>= 1
        return r

    def apply(self, v):
        """Matrix-vector product with a sequence of scalars."""
        return tuple(_dot(r, v) for r in self.rows)

    def __repr__(self):
        return f"Matrix({self.to_strings()})"

    # -- linear algebra wrappers
    def rref(self):
        return rref(self)

    def rank(self):
        return rank(self)

    def nullspace(self):
        return nullspace(self)

    def inverse(self):
        return inverse(self)

    def det(self):
        return det(self)


def _dot(u, v):
    acc = ZERO
    for x, y in zip(u, v):
        if x and y:
            acc = acc + x * y
    return acc


def as_matrix(A):
    return A if isinstance(A, Matrix) else Matrix(A)


# ---------------------------------------------------------------- elimination

def _integer_rows(rows):
    """Clear denominators row by row.  Returns (re, im) int lists; im is None if real."""
    re_rows = []
    im_rows = []
    cplx = False
    for r in rows:
        L = 1
        for x in r:
            if x._d != 1:
                L = lcm(L, x._d)
        if L == 1:
            re_rows.append([x._a for x in r])
            im_rows.append([x._b for x in r])
        else:
            re_rows.append([x._a * (L // x._d) for x in r])
            im_rows.append([x._b * (L // x._d) for x in r])
        if not cplx and any(im_rows[-1]):
            cplx = True
    return re_rows, (im_rows if cplx else None)


def _eliminate(rows, ncols):
    """Return (rref rows as tuples of Scalar, pivots)."""
    if not rows or not ncols:
        return [], []
    re_rows, im_rows = _integer_rows(rows)
    if im_rows is None:
        pivots, den = _backend.gauss_jordan_int(re_rows, ncols)
        out = []
        for i in range(len(pivots)):
            r = re_rows[i]
            if den > 0:
                out.append(tuple(_mk(x, 0, den) if x else ZERO for x in r))
            else:
                out.append(tuple(_mk(-x, 0, -den) if x else ZERO for x in r))
        return out, pivots
    pivots, dr, di = _backend.gauss_jordan_gauss(re_rows, im_rows, ncols)
    # divide by dr + i di: multiply by conjugate over the norm
    n2 = dr * dr + di * di
    out = []
    for i in range(len(pivots)):
        rr, ri = re_rows[i], im_rows[i]
        out.append(tuple(_mk(x * dr + y * di, y * dr - x * di, n2) if (x or y) else ZERO
                         for x, y in zip(rr, ri)))
    return out, pivots


def rref(A):
    """Reduced row-echelon form: returns (R, rank, pivot columns)."""
    A = as_matrix(A)
    red, pivots = _eliminate(A.rows, A.ncols)
    zero_row = (ZERO,) * A.ncols
    rows = tuple(red) + (zero_row,) * (A.nrows - len(red))
    return Matrix._raw(rows, A.ncols), len(pivots), tuple(pivots)


def rank(A):
    A = as_matrix(A)
    return len(_eliminate(A.rows, A.ncols)[1])


def _nullspace_from(red, pivots, ncols):
    pivset = set(pivots)
    basis = []
    for f in range(ncols):
        if f in pivset:
            continue
        v = [ZERO] * ncols
        v[f] = ONE
        for i, p in enumerate(pivots):
            x = red[i][f]
            if x:
                v[p] = -x
        basis.append(tuple(v))
    return basis


def nullspace(A):
    """Basis (list of tuples) of {x : A x = 0}, one vector per free column."""
    A = as_matrix(A)
    red, pivots = _eliminate(A.rows, A.ncols)
    return _nullspace_from(red, pivots, A.ncols)


def solve(A, b):
    """Particular solution of A x = b with free variables set to zero, or None."""
    A = as_matrix(A)
    b = [as_scalar(x) for x in b]
    if len(b) != A.nrows:
        raise DimensionMismatch("right-hand side length mismatch")
    aug = [r + (y,) for r, y in zip(A.rows, b)]
    red, pivots = _eliminate(aug, A.ncols + 1)
    if pivots and pivots[-1] == A.ncols:
        return None
    x = [ZERO] * A.ncols
    for i, p in enumerate(pivots):
        x[p] = red[i][A.ncols]
    return tuple(x)


def inverse(A):
    A = as_matrix(A)
    if not A.is_square():
        raise DimensionMismatch("inverse of non-square matrix")
    n = A.nrows
    eye = Matrix.identity(n)
    aug = [r + e for r, e in zip(A.rows, eye.rows)]
    red, pivots = _eliminate(aug, 2 * n)
    if len(pivots) < n or pivots[n - 1] != n - 1:
        raise ZeroDivisionError("singular matrix")
    return Matrix._raw(tuple(r[n:] for r in red), n)


def det(A):
    A = as_matrix(A)
    if not A.is_square():
        raise DimensionMismatch("determinant of non-square matrix")
    n = A.nrows
    rows = [list(r) for r in A.rows]
    d = ONE
    for c in range(n):
        p = next((i for i in range(c, n) if rows[i][c]), None)
        if p is None:
            return ZERO
        if p != c:
            rows[p], rows[c] = rows[c], rows[p]
            d = -d
        piv = rows[c][c]
        d = d * piv
        inv = piv.inverse()
        for i in range(c + 1, n):
            f = rows[i][c]
            if f:
                f = f * inv
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[c])]
    return d


def pseudoinverse(A):
    """Generalized inverse from a rank factorization A = F G.

    A+ = G^T (G G^T)^-1 (F^T F)^-1 F^T.  Over Q(i) the Gram matrices can be
    singular for isotropic complex vectors; the conjugate transpose is used
    in that case.  Both choices satisfy A A+ A = A and A+ A A+ = A+.
    """
    A = as_matrix(A)
    red, pivots = _eliminate(A.rows, A.ncols)
    r = len(pivots)
    if r == 0:
        return Matrix.zeros(A.ncols, A.nrows)
    G = Matrix._raw(tuple(red), A.ncols)
    F = A.submatrix(range(A.nrows), pivots)
    for tr in (lambda M: M.T, lambda M: M.conj_T()):
        Gt, Ft = tr(G), tr(F)
        try:
            left = inverse(G @ Gt)
            right = inverse(Ft @ F)
        except ZeroDivisionError:
            continue
        return Gt @ left @ right @ Ft
    raise ArithmeticError("rank factorization failed")  # unreachable: conj Gram is definite


# ------------------------------------------------------------------ spectra

def charpoly(A):
    """Coefficients [c_0, ..., c_n] of det(x I - A), c_n = 1 (Faddeev-LeVerrier)."""
    A = as_matrix(A)
    n = A.nrows
    coeffs = [ZERO] * (n + 1)
    coeffs[n] = ONE
    M = Matrix.zeros(n)
    eye = Matrix.identity(n)
    for k in range(1, n + 1):
        M = A @ M + eye.scale(coeffs[n - k + 1])
        coeffs[n - k] = -(A @ M).trace() / k
    return coeffs


def eigenvalues(A):
    """Eigenvalues with algebraic multiplicity as a sorted list of (value, mult).

    Raises IrrationalSpectrum if the characteristic polynomial does not split
    over Q(i).
    """
    A = as_matrix(A)
    n = A.nrows
    if n == 0:
        return []
    t = A.trace() / n
    if (A - Matrix.identity(n).scale(t)) ** n == Matrix.zeros(n):
        return [(t, n)]
    return _roots(charpoly(A))


def _roots(coeffs):
    import sympy

    x = sympy.Symbol("x")
    sc = [sympy.Rational(c.re.numerator, c.re.denominator)
          + sympy.I * sympy.Rational(c.im.numerator, c.im.denominator)
          for c in reversed(coeffs)]
    poly = sympy.Poly(sc, x, domain=sympy.QQ_I)
    _, factors = poly.factor_list()
    out = {}
    for f, mult in factors:
        if f.degree() != 1:
            raise IrrationalSpectrum(
                f"characteristic polynomial has an irreducible factor of degree {f.degree()}")
        a, b = f.all_coeffs()
        root = sympy.nsimplify(-b / a)
        re_, im_ = sympy.re(root), sympy.im(root)
        val = Scalar(Fraction(int(re_.p), int(re_.q)), Fraction(int(im_.p), int(im_.q)))
        out[val] = out.get(val, 0) + mult
    return sorted(out.items(), key=lambda kv: kv[0].key())


def _check_commuting(Ms):
    for i in range(len(Ms)):
        for j in range(i + 1, len(Ms)):
            if Ms[i] @ Ms[j] != Ms[j] @ Ms[i]:
                raise NonCommuting(f"matrices {i} and {j} do not commute")


def _single_eigenvalue(A):
    n = A.nrows
    t = A.trace() / n
    N = A - Matrix.identity(n).scale(t)
    P = N
    for _ in range(n - 1):
        if P.is_zero():
            return t
        P = P @ N
    return t if P.is_zero() else None


def simultaneous_block_diagonalize(Ws, seed=0):
    """Split commuting matrices into joint generalized eigenspaces.

    Returns ``(M, sizes)`` with ``M^-1 A M`` block diagonal for every input
    and a single eigenvalue per block and matrix.
    """
    Ws = [as_matrix(W) for W in Ws]
    if not Ws:
        raise DimensionMismatch("no matrices given")
    n = Ws[0].nrows
    for W in Ws:
        if W.shape != (n, n):
            raise DimensionMismatch("inputs must be square and of equal size")
    _check_commuting(Ws)
    if n == 0:
        return Matrix.identity(0), []
    if all(_single_eigenvalue(W) is not None for W in Ws):
        return Matrix.identity(n), [n]
    rng = random.Random(seed)
    for _ in range(8):
        r = [rng.randint(1, 9) for _ in Ws]
        A = Matrix.zeros(n)
        for c, W in zip(r, Ws):
            A = A + W.scale(c)
        eig = eigenvalues(A)
        cols = []
        sizes = []
        for val, mult in eig:
            N = (A - Matrix.identity(n).scale(val)) ** mult
            basis = nullspace(N)
            cols.extend(basis)
            sizes.append(len(basis))
        if sum(sizes) != n:
            continue
        M = Matrix.from_columns(cols, n)
        Minv = inverse(M)
        blocks = _blocks_of([Minv @ W @ M for W in Ws], sizes)
        if blocks is None:
            continue
        return _order_blocks(M, sizes, blocks)
    raise BlockSplitFailed("no generic combination separated the joint eigenspaces")


def _blocks_of(Bs, sizes):
    """Extract diagonal blocks, or None if some block mixes eigenvalues."""
    out = []
    start = 0
    for s in sizes:
        idx = range(start, start + s)
        blk = [B.submatrix(idx, idx) for B in Bs]
        eigs = []
        for b in blk:
            t = _single_eigenvalue(b)
            if t is None:
                return None
            eigs.append(t)
        out.append((start, s, eigs, blk))
        start += s
    for B in Bs:
        pos = 0
        for s in sizes:
            for i in range(pos, pos + s):
                for j in range(B.ncols):
                    if (j < pos or j >= pos + s) and B.rows[i][j]:
                        return None
            pos += s
    return out


def _order_blocks(M, sizes, blocks):
    def key(b):
        start, s, eigs, blk = b
        vec = tuple(x.key() for m in blk for r in m.rows for x in r)
        return (-s, tuple(e.key() for e in eigs), vec)

    blocks = sorted(blocks, key=key)
    cols = M.columns()
    new_cols = []
    for start, s, _, _ in blocks:
        new_cols.extend(cols[start:start + s])
    return Matrix.from_columns(new_cols, M.nrows), [b[1] for b in blocks]


def _is_nilpotent(N):
    P = N
    for _ in range(N.nrows):
        if P.is_zero():
            return True
        P = P @ N
    return P.is_zero()


def common_lower_triangularize(Ns):
    """Basis change making commuting nilpotent matrices strictly lower triangular.

    The basis is read off the flag V1 = joint kernel, V(k+1) = {x : N x in Vk};
    vectors of the deepest level come first so each N maps basis vector j
    into the span of later vectors.
    """
    Ns = [as_matrix(N) for N in Ns]
    if not Ns:
        raise DimensionMismatch("no matrices given")
    n = Ns[0].nrows
    for N in Ns:
        if N.shape != (n, n):
            raise DimensionMismatch("inputs must be square and of equal size")
    for k, N in enumerate(Ns):
        if not _is_nilpotent(N):
            raise NotNilpotent(f"matrix {k} is not nilpotent")
    _check_commuting(Ns)
    levels = []
    span = []
    while len(span) < n:
        if not span:
            rows = [r for N in Ns for r in N.rows]
        else:
            ann = nullspace(Matrix._raw(tuple(span), n))
            rows = [tuple(_dot(y, c) for c in zip(*N.rows)) for N in Ns for y in ann]
        K = nullspace(Matrix._raw(tuple(rows), n)) if rows else [
            tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n)]
        new = []
        cur = len(span)
        for v in K:
            if rank(Matrix._raw(tuple(span + new + [v]), n)) > cur + len(new):
                new.append(v)
        if not new:
            raise NotNilpotent("joint kernel flag stalled")
        levels.append(new)
        span.extend(new)
    order = [v for lev in reversed(levels) for v in lev]
    return Matrix.from_columns(order, n)
