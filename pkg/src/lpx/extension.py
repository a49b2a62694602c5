"""Extension tensors W_lambda^{mu nu} and the bracket they define.

Storage is ``W[lam][mu][nu]`` with 0-based indices.  Solvable tensors of
order n are printed with labels 1..n; semidirect tensors carry an extra
slot 0 whose slice W^(0) is the identity and are printed with labels 0..n.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DimensionMismatch, NotSolvable, ParseError
from .exactfield import (ONE, ZERO, Matrix, Scalar, as_matrix, as_scalar,
                         inverse, parse_scalar)

__all__ = [
    "ExtensionTensor", "BasisChange", "AxiomResult", "ValidationReport",
    "validate", "transform", "leibniz", "abelian", "direct_sum",
    "append_semisimple", "bracket_eval", "crmhd", "rmhd", "three_field_mhd",
    "so3_bracket", "canonical_bracket_2d",
]


def _freeze(W):
    return tuple(tuple(tuple(as_scalar(x) for x in r) for r in slab) for slab in W)


class ExtensionTensor:
    """Immutable 3-tensor of an n-tuple extension."""

    __slots__ = ("n", "semidirect", "W", "size", "_hash")

    def __init__(self, n, semidirect, W):
        n = int(n)
        semidirect = bool(semidirect)
        size = n + 1 if semidirect else n
        if n < 0:
            raise DimensionMismatch("order must be non-negative")
        W = _freeze(W)
        if len(W) != size or any(len(s) != size or any(len(r) != size for r in s) for s in W):
            raise DimensionMismatch(f"W must be {size}x{size}x{size}")
        self.n = n
        self.semidirect = semidirect
        self.W = W
        self.size = size
        self._hash = None

    @classmethod
    def zero(cls, n, semidirect=False):
        s = n + 1 if semidirect else n
        return cls(n, semidirect, [[[ZERO] * s for _ in range(s)] for _ in range(s)])

    @classmethod
    def from_upper(cls, n, semidirect, mats):
        """Build from the slices W^(nu), each indexed [lam][mu]."""
        mats = [as_matrix(m) for m in mats]
        s = len(mats)
        return cls(n, semidirect, [[[mats[nu][lam, mu] for nu in range(s)]
                                    for mu in range(s)] for lam in range(s)])

    @classmethod
    def from_lower(cls, n, semidirect, mats):
        """Build from the slices W_(lam), each indexed [mu][nu]."""
        return cls(n, semidirect, [as_matrix(m).rows for m in mats])

    def upper(self, nu):
        """W^(nu) as a matrix with row lam and column mu."""
        s = self.size
        return Matrix._raw(tuple(tuple(self.W[lam][mu][nu] for mu in range(s))
                                 for lam in range(s)), s)

    def lower(self, lam):
        """W_(lam) as a matrix with row mu and column nu."""
        return Matrix._raw(self.W[lam], self.size)

    def uppers(self):
        return [self.upper(nu) for nu in range(self.size)]

    def label(self, idx):
        """Label (1-based, 0 for the semidirect slot) of storage index ``idx``."""
        return idx if self.semidirect else idx + 1

    def index(self, label):
        return label if self.semidirect else label - 1

    @property
    def offset(self):
        return 0 if self.semidirect else 1

    def is_zero(self):
        return not any(x for s in self.W for r in s for x in r)

    def entries(self):
        """Nonzero entries as (lam, mu, nu, value)."""
        return [(l, m, n, x) for l, s in enumerate(self.W) for m, r in enumerate(s)
                for n, x in enumerate(r) if x]

    def with_flags(self, n, semidirect):
        return ExtensionTensor(n, semidirect, self.W)

    def __eq__(self, o):
        if not isinstance(o, ExtensionTensor):
            return NotImplemented
        return (self.n, self.semidirect, self.W) == (o.n, o.semidirect, o.W)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, self.semidirect, self.W))
        return self._hash

    def __repr__(self):
        return f"ExtensionTensor(n={self.n}, semidirect={self.semidirect}, W={self.to_json()['W']})"

    # -- serialization
    def to_json(self):
        return {"n": self.n, "semidirect": self.semidirect,
                "W": [[[str(x) for x in r] for r in s] for s in self.W]}

    def dumps(self):
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict):
            raise ParseError("tensor JSON must be an object")
        try:
            n = obj["n"]
            semidirect = obj.get("semidirect", False)
            W = obj["W"]
        except KeyError as exc:
            raise ParseError(f"missing key {exc}") from None
        if not isinstance(n, int) or isinstance(n, bool):
            raise ParseError("'n' must be an integer")
        if not isinstance(semidirect, bool):
            raise ParseError("'semidirect' must be a boolean")
        if n < 0 or (n == 0 and not semidirect):
            raise ParseError("order n must be at least 1")
        if not isinstance(W, list):
            raise ParseError("'W' must be a nested list")

        def conv(x):
            if isinstance(x, bool):
                raise ParseError("boolean is not a scalar")
            if isinstance(x, int):
                return Scalar(x)
            return parse_scalar(x)

        try:
            vals = [[[conv(x) for x in r] for r in s] for s in W]
        except TypeError:
            raise ParseError("'W' must be a 3-level nested list") from None
        try:
            return cls(n, semidirect, vals)
        except DimensionMismatch as exc:
            raise ParseError(str(exc)) from None

    @classmethod
    def loads(cls, text):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from None
        return cls.from_json(obj)


class BasisChange:
    """Invertible change of basis; columns of ``M`` are the new basis vectors."""

    __slots__ = ("M", "Minv")

    def __init__(self, M, Minv=None):
        M = as_matrix(M)
        if not M.is_square():
            raise DimensionMismatch("basis change must be square")
        if Minv is None:
            Minv = inverse(M)
        else:
            Minv = as_matrix(Minv)
            if M @ Minv != Matrix.identity(M.nrows):
                raise ValueError("Minv is not the inverse of M")
        self.M = M
        self.Minv = Minv

    @classmethod
    def identity(cls, n):
        e = Matrix.identity(n)
        return cls(e, e)

    @property
    def size(self):
        return self.M.nrows

    def is_identity(self):
        return self.M == Matrix.identity(self.M.nrows)

    def then(self, other):
        """Basis change equal to applying ``self`` and then ``other``."""
        return BasisChange(self.M @ other.M, other.Minv @ self.Minv)

    def inv(self):
        return BasisChange(self.Minv, self.M)

    def __eq__(self, o):
        return isinstance(o, BasisChange) and self.M == o.M

    def __hash__(self):
        return hash(self.M)

    def __repr__(self):
        return f"BasisChange({self.M.to_strings()})"


# ------------------------------------------------------------------ validation

@dataclass
class AxiomResult:
    name: str
    ok: bool
    first_violation: tuple = None
    checked: int = 0

    def to_json(self):
        return {"axiom": self.name, "ok": self.ok,
                "first_violation": list(self.first_violation) if self.first_violation else None,
                "checked": self.checked}


@dataclass
class ValidationReport:
    results: list = field(default_factory=list)

    @property
    def ok(self):
        return all(r.ok for r in self.results)

    def __getitem__(self, name):
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_json(self):
        return {"ok": self.ok, "axioms": [r.to_json() for r in self.results]}


def _products(W):
    """A[lam, a, b, c] = sum_s W[lam][s][a] W[s][b][c], sparse dict."""
    size = len(W)
    rows = [[(m, nu, x) for m, r in enumerate(W[s]) for nu, x in enumerate(r) if x]
            for s in range(size)]
    A = {}
    for lam in range(size):
        for s in range(size):
            for a in range(size):
                x = W[lam][s][a]
                if not x:
                    continue
                for b, c, y in rows[s]:
                    k = (lam, a, b, c)
                    A[k] = A.get(k, ZERO) + x * y
    return {k: v for k, v in A.items() if v}


def validate(W):
    """Check upper symmetry, commutation, the tensorial Jacobi identity and W^(0)=I."""
    T = W.W
    s = W.size
    res = []
    viol = None
    for lam in range(s):
        for mu in range(s):
            for nu in range(mu + 1, s):
                if T[lam][mu][nu] != T[lam][nu][mu]:
                    viol = (lam, mu, nu)
                    break
            if viol:
                break
        if viol:
            break
    res.append(AxiomResult("symmetry", viol is None, viol, s * s * (s - 1) // 2))

    A = _products(T)
    zero = ZERO

    def get(k):
        return A.get(k, zero)

    viol = None
    for nu in range(s):
        for sg in range(nu + 1, s):
            for lam in range(s):
                for ka in range(s):
                    if get((lam, nu, ka, sg)) != get((lam, sg, ka, nu)):
                        viol = (nu, sg, lam, ka)
                        break
                if viol:
                    break
            if viol:
                break
        if viol:
            break
    res.append(AxiomResult("commutation", viol is None, viol, s ** 4))

    viol = None
    for lam in range(s):
        for tau in range(s):
            for mu in range(s):
                for nu in range(s):
                    if get((lam, tau, mu, nu)) != get((lam, nu, tau, mu)):
                        viol = (lam, tau, mu, nu)
                        break
                if viol:
                    break
            if viol:
                break
        if viol:
            break
    res.append(AxiomResult("jacobi", viol is None, viol, s ** 4))

    if W.semidirect:
        viol = None
        for lam in range(s):
            for mu in range(s):
                if T[lam][mu][0] != (ONE if lam == mu else ZERO):
                    viol = (lam, mu)
                    break
            if viol:
                break
        res.append(AxiomResult("semidirect_identity", viol is None, viol, s * s))
    return ValidationReport(res)


# ------------------------------------------------------------- transformations

def transform(W, B):
    """Change basis: Wbar^(g) = Minv (sum_nu M[nu][g] W^(nu)) M."""
    if not isinstance(B, BasisChange):
        B = BasisChange(B)
    s = W.size
    if B.size != s:
        raise DimensionMismatch(f"basis change of size {B.size} for tensor of size {s}")
    if B.is_identity():
        return W
    ups = W.uppers()
    M, Minv = B.M, B.Minv
    new = []
    for g in range(s):
        acc = None
        for nu in range(s):
            c = M[nu, g]
            if c:
                term = ups[nu].scale(c)
                acc = term if acc is None else acc + term
        if acc is None:
            new.append(Matrix.zeros(s))
        else:
            new.append(Minv @ acc @ M)
    out = ExtensionTensor.from_upper(W.n, W.semidirect, new)
    if W.semidirect and new[0] != Matrix.identity(s):
        out = out.with_flags(s, False)
    return out


# ---------------------------------------------------------------- constructors

def abelian(n, semidirect=False):
    return ExtensionTensor.zero(n, semidirect)


def leibniz(n, semidirect=False):
    """W_lam^{mu nu} = 1 when lam = mu + nu in labels."""
    if n < 1:
        raise ValueError("Leibniz order must be at least 1")
    s = n + 1 if semidirect else n
    off = 0 if semidirect else 1
    W = [[[ONE if lam + off == (mu + off) + (nu + off) else ZERO for nu in range(s)]
          for mu in range(s)] for lam in range(s)]
    return ExtensionTensor(n, semidirect, W)


def direct_sum(A, B):
    """Block 3-tensor with A's indices first."""
    if B.size == 0:
        return A
    if A.size == 0:
        return B
    s = A.size + B.size
    W = [[[ZERO] * s for _ in range(s)] for _ in range(s)]
    for off, T in ((0, A), (A.size, B)):
        for lam, mu, nu, x in T.entries():
            W[lam + off][mu + off][nu + off] = x
    if not A.semidirect and not B.semidirect:
        return ExtensionTensor(A.n + B.n, False, W)
    return ExtensionTensor(s, False, W)


def _is_nilpotent(M):
    P = M
    for _ in range(M.nrows):
        if P.is_zero():
            return True
        P = P @ M
    return P.is_zero()


def append_semisimple(Wsolv):
    """Prepend a slot 0 with W^(0) = I to a solvable tensor."""
    for nu in range(Wsolv.size):
        if not _is_nilpotent(Wsolv.upper(nu)):
            raise NotSolvable(f"slice W^({Wsolv.label(nu)}) is not nilpotent")
    s = Wsolv.size + 1
    W = [[[ZERO] * s for _ in range(s)] for _ in range(s)]
    for lam in range(s):
        W[lam][0][lam] = ONE
        W[lam][lam][0] = ONE
    for lam, mu, nu, x in Wsolv.entries():
        W[lam + 1][mu + 1][nu + 1] = x
    return ExtensionTensor(Wsolv.size, True, W)


def rmhd():
    """Low-beta reduced MHD: (vorticity, flux)."""
    return append_semisimple(abelian(1))


def crmhd(beta_e=Fraction(1, 2)):
    """Compressible reduced MHD: (vorticity, parallel velocity, pressure, flux)."""
    b = as_scalar(beta_e)
    e = Matrix.identity(4)
    w1 = Matrix([[0, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [0, 0, -b, 0]])
    w2 = Matrix([[0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 0], [0, -b, 0, 0]])
    w3 = Matrix([[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 0]])
    return ExtensionTensor.from_upper(3, True, [e, w1, w2, w3])


def three_field_mhd():
    """Three-field model (vorticity, flux, density) in its original basis."""
    w1 = Matrix.identity(3)
    w2 = Matrix([[0, 0, 0], [1, 0, 1], [0, 0, 0]])
    w3 = Matrix([[0, 0, 0], [0, 1, 0], [1, 0, 1]])
    return ExtensionTensor.from_upper(3, False, [w1, w2, w3])


# --------------------------------------------------------------------- bracket

def _number(c):
    if c.is_real():
        r = c.re
        return r.numerator if r.denominator == 1 else r
    return complex(c)


def bracket_eval(W, a, b, inner, zero=0):
    """result_lam = sum_{mu,nu} W_lam^{mu nu} inner(a_mu, b_nu)."""
    a = list(a)
    b = list(b)
    if len(a) != W.size or len(b) != W.size:
        raise DimensionMismatch(f"tuples must have {W.size} components")
    out = []
    cache = {}
    for lam in range(W.size):
        acc = None
        for mu in range(W.size):
            for nu in range(W.size):
                c = W.W[lam][mu][nu]
                if not c:
                    continue
                if (mu, nu) not in cache:
                    cache[(mu, nu)] = inner(a[mu], b[nu])
                term = cache[(mu, nu)] * _number(c)
                acc = term if acc is None else acc + term
        out.append(zero if acc is None else acc)
    return out


def so3_bracket(a, b):
    """Cross product of 3-vectors (the so(3) bracket)."""
    return type(a)(_cross(a, b)) if isinstance(a, tuple) else _np_cross(a, b)


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _np_cross(a, b):
    import numpy as np

    return np.array(_cross(a, b), dtype=getattr(a, "dtype", object))


def canonical_bracket_2d(f, g):
    """Canonical bracket [f, g] = f_x g_y - f_y g_x of sympy expressions in x, y."""
    import sympy

    x, y = sympy.symbols("x y")
    return sympy.expand(sympy.diff(f, x) * sympy.diff(g, y) - sympy.diff(f, y) * sympy.diff(g, x))
