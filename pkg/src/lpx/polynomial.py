"""Sparse multivariate polynomials with Q(i) coefficients."""

from .exactfield import ONE, ZERO, as_scalar


class Poly:
    """Immutable polynomial; ``terms`` maps exponent tuples to nonzero scalars."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        self.nvars = nvars
        t = {}
        if terms:
            for e, c in terms.items():
                c = as_scalar(c)
                if c:
                    t[tuple(e)] = c
        self.terms = t

    @classmethod
    def _raw(cls, nvars, terms):
        p = object.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        return p

    @classmethod
    def const(cls, nvars, c):
        c = as_scalar(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def var(cls, nvars, i):
        e = [0] * nvars
        e[i] = 1
        return cls._raw(nvars, {tuple(e): ONE})

    @classmethod
    def linear(cls, coeffs):
        n = len(coeffs)
        out = {}
        for i, c in enumerate(coeffs):
            c = as_scalar(c)
            if c:
                e = [0] * n
                e[i] = 1
                out[tuple(e)] = c
        return cls._raw(n, out)

    @classmethod
    def monomial(cls, exps, c=ONE):
        c = as_scalar(c)
        return cls._raw(len(exps), {tuple(exps): c} if c else {})

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, o):
        if isinstance(o, Poly):
            return self.terms == o.terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, o):
        out = dict(self.terms)
        for e, c in o.terms.items():
            v = out.get(e)
            if v is None:
                out[e] = c
            else:
                v = v + c
                if v:
                    out[e] = v
                else:
                    del out[e]
        return Poly._raw(self.nvars, out)

    def __neg__(self):
        return Poly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, o):
        return self + (-o)

    def scale(self, c):
        c = as_scalar(c)
        if not c:
            return Poly._raw(self.nvars, {})
        return Poly._raw(self.nvars, {e: x * c for e, x in self.terms.items()})

    def __mul__(self, o):
        if not isinstance(o, Poly):
            return self.scale(o)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in o.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = out.get(e)
                out[e] = c1 * c2 if v is None else v + c1 * c2
        return Poly._raw(self.nvars, {e: c for e, c in out.items() if c})

    __rmul__ = scale

    def __pow__(self, k):
        r = Poly.const(self.nvars, ONE)
        base = self
        while k:
            if k & 1:
                r = r * base
            base = base * base
            k >>= 1
        return r

    def diff(self, i):
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                e2 = list(e)
                e2[i] = k - 1
                out[tuple(e2)] = c * k
        return Poly._raw(self.nvars, out)

    def substitute(self, forms):
        """Replace variable i by the polynomial ``forms[i]``."""
        nv = forms[0].nvars if forms else 0
        out = Poly._raw(nv, {})
        cache = {}
        for e, c in self.terms.items():
            term = Poly.const(nv, c)
            for i, k in enumerate(e):
                if k:
                    key = (i, k)
                    if key not in cache:
                        cache[key] = forms[i] ** k
                    term = term * cache[key]
            out = out + term
        return out

    def degree(self):
        return max((sum(e) for e in self.terms), default=-1)

    def __repr__(self):
        if not self.terms:
            return "Poly(0)"
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(f"x{i}^{k}" if k > 1 else f"x{i}" for i, k in enumerate(e) if k)
            parts.append(f"({c})*{mono}" if mono else f"({c})")
        return "Poly(" + " + ".join(parts) + ")"


def zero(nvars):
    return Poly._raw(nvars, {})


__all__ = ["Poly", "zero", "ZERO"]
