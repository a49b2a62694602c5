"""Coextensions and Casimir invariants of extension brackets.

A Casimir family is stored symbolically: a list of terms, each a
polynomial coefficient times a derivative of one arbitrary function of a
linear form in the field variables.  Families with several function
arguments (from several joint null directions) carry a single term with
an empty monomial.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from math import factorial

from .errors import (
    CoextConditionFailed, IndexOutOfRange, LpxError, NotApplicable,
    NotSemidirect, NotSemisimple, SolvabilityFailed,
)
from .exactfield import (
    ONE, ZERO, Matrix, as_scalar, det, inverse, nullspace, pseudoinverse, rank, rref,
)
from .extension import BasisChange, ExtensionTensor
from .polynomial import Poly

__all__ = [
    "Coextension", "CasimirExpression", "coextension", "casimir_families",
    "leibniz_casimirs", "verify_casimir", "quadratic_casimirs_findim",
    "format_linear_form",
]


# --------------------------------------------------------------- coextension

@dataclass(frozen=True)
class Coextension:
    """coW[nu][tau][sigma] with all indices running over labels 1..n-1."""

    coW: tuple
    wn: Matrix
    wn_pinv: Matrix
    projector: Matrix
    singular: bool

    def matrix(self, nu_label):
        """coW^(nu) as a Matrix, rows tau and columns sigma."""
        if not 1 <= nu_label <= len(self.coW):
            raise IndexOutOfRange(f"coextension index {nu_label} outside 1..{len(self.coW)}")
        return self.coW[nu_label - 1]

    def to_json(self):
        return {"singular": self.singular,
                "coW": [m.to_strings() for m in self.coW],
                "wn": self.wn.to_strings(),
                "wn_pinv": self.wn_pinv.to_strings(),
                "projector": self.projector.to_strings()}


def _check_lower(W):
    for nu in range(W.size):
        if not W.upper(nu).is_lower_triangular():
            raise NotApplicable(f"slice W^({W.label(nu)}) is not lower triangular")
    if W.semidirect:
        if W.upper(0) != Matrix.identity(W.size):
            raise NotSemidirect("W^(0) is not the identity")
        start = 1
    else:
        start = 0
    for nu in range(start, W.size):
        if not W.upper(nu).is_lower_triangular(strict=True):
            raise NotApplicable(f"slice W^({W.label(nu)}) is not nilpotent lower triangular")


def coextension(W):
    """Coextension of a lower-triangular tensor (solvable or normalized semidirect)."""
    _check_lower(W)
    n = W.n
    m = n - 1
    if m <= 0:
        e = Matrix.zeros(0)
        return Coextension((), e, e, e, False)
    ix = W.index
    top = ix(n)
    # Wt[s][mu][nu] = W~_s^{mu nu}, labels 1..m mapped to 0..m-1
    Wt = [[[W.W[ix(s)][ix(a)][ix(b)] for b in range(1, n)] for a in range(1, n)]
          for s in range(1, n)]
    wn = Matrix([[W.W[top][ix(a)][ix(b)] for b in range(1, n)] for a in range(1, n)])
    singular = rank(wn) < m
    if singular:
        wni = pseudoinverse(wn)
    else:
        wni = inverse(wn)
    P = wn @ wni
    if singular:
        for sg in range(m):
            Ws = Matrix(Wt[sg])
            if P @ Ws != Ws @ P:
                raise SolvabilityFailed(
                    f"projector does not commute with W~_({sg + 1}); the extension should split")
    co = [[[ZERO] * m for _ in range(m)] for _ in range(m)]
    if not singular:
        for t in range(m):
            for sg in range(m):
                for mu in range(m):
                    acc = ZERO
                    for v in range(m):
                        a = wni[t, v]
                        if a:
                            acc = acc + a * Wt[sg][v][mu]
                    co[mu][t][sg] = acc
    else:
        # wnw[l][mu] = Wni_{l rho} Wn^{rho mu}
        wnw = wni @ wn
        for v in range(m):
            for l in range(m):
                for sg in range(m):
                    acc = ZERO
                    for r in range(m):
                        a = wni[sg, r]
                        if a:
                            acc = acc + a * Wt[l][r][v]
                        b = wni[l, r]
                        if b:
                            acc = acc + b * Wt[sg][r][v]
                    for mu in range(m):
                        c = wnw[l, mu]
                        if not c:
                            continue
                        for k in range(m):
                            d = wni[sg, k]
                            if d:
                                acc = acc - c * d * Wt[mu][k][v]
                    co[v][l][sg] = acc
    mats = tuple(Matrix(co[v]) for v in range(m))
    for M in mats:
        if not M.is_symmetric():
            raise CoextConditionFailed("coextension is not symmetric")
    for t in range(m):
        for sg in range(m):
            for l in range(m):
                for v in range(m):
                    lhs = ZERO
                    rhs = ZERO
                    for mu in range(m):
                        lhs = lhs + co[mu][t][sg] * co[v][mu][l]
                        rhs = rhs + co[mu][t][l] * co[v][mu][sg]
                    if lhs != rhs:
                        raise CoextConditionFailed(
                            f"coextension law fails at tau={t + 1}, sigma={sg + 1}, "
                            f"lambda={l + 1}, nu={v + 1}")
    return Coextension(mats, wn, wni, P, singular)


# ------------------------------------------------------------------ families

def format_linear_form(coeffs, offset):
    parts = []
    for i, c in enumerate(coeffs):
        c = as_scalar(c)
        if not c:
            continue
        name = f"v{i + offset}"
        neg = c.is_real and c.re < 0
        mag = -c if neg else c
        if mag == ONE:
            body = name
        elif mag.is_real:
            body = f"{mag}*{name}"
        else:
            body = f"({mag})*{name}"
        parts.append(("-" if neg else "+", body))
    if not parts:
        return "0"
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sgn, body in parts[1:]:
        out += f" {sgn} {body}"
    return out


def _fname(base, d):
    if d <= 3:
        return base + "'" * d
    return f"{base}^({d})"


@dataclass(frozen=True)
class CasimirExpression:
    """Sum of coeff * monomial * f^(deriv)(args); variables are storage indices."""

    family: int
    terms: tuple
    args: tuple
    nvars: int
    offset: int = 1

    @classmethod
    def build(cls, family, terms, args, nvars, offset):
        acc = {}
        for c, mono, d in terms:
            c = as_scalar(c)
            key = (d, tuple(mono))
            acc[key] = acc.get(key, ZERO) + c
        items = [(c, mono, d) for (d, mono), c in acc.items() if c]
        items.sort(key=lambda t: (t[2], tuple(-e for e in t[1])))
        args = tuple(tuple(as_scalar(x) for x in a) for a in args)
        return cls(family, tuple(items), args, nvars, offset)

    @property
    def is_pure(self):
        return (len(self.terms) == 1 and not any(self.terms[0][1])
                and self.terms[0][2] == 0 and self.terms[0][0] == ONE)

    @property
    def multi_argument(self):
        return len(self.args) > 1

    def monomial_dict(self, mono):
        return {str(i + self.offset): e for i, e in enumerate(mono) if e}

    def to_json(self):
        return {"family": self.family,
                "function_args": [format_linear_form(a, self.offset) for a in self.args],
                "terms": [{"coeff": str(c), "monomial": self.monomial_dict(mono), "deriv": d}
                          for c, mono, d in self.terms]}

    def __str__(self):
        argtxt = ", ".join(format_linear_form(a, self.offset) for a in self.args)
        base = "h" if self.multi_argument else "f"
        out = ""
        for k, (c, mono, d) in enumerate(self.terms):
            neg = c.is_real and c.re < 0
            mag = -c if neg else c
            factors = []
            for i, e in enumerate(mono):
                if e == 1:
                    factors.append(f"v{i + self.offset}")
                elif e:
                    factors.append(f"(v{i + self.offset})^{e}")
            if mag != ONE:
                factors.insert(0, str(mag) if mag.is_real else f"({mag})")
            factors.append(f"{_fname(base, d)}({argtxt})")
            body = " ".join(factors)
            if k == 0:
                out = ("-" if neg else "") + body
            else:
                out += (" - " if neg else " + ") + body
        return out or "0"

    def embed(self, nvars):
        """Pad with trailing variables that the expression does not use."""
        pad = nvars - self.nvars
        terms = [(c, tuple(m) + (0,) * pad, d) for c, m, d in self.terms]
        args = [tuple(a) + (ZERO,) * pad for a in self.args]
        return CasimirExpression.build(self.family, terms, args, nvars, self.offset)

    def substitute(self, cols, nvars, offset):
        """Express in new variables where old variable a equals sum_l cols[a][l] v^l."""
        forms = [Poly.linear(col) for col in cols]
        terms = []
        for c, mono, d in self.terms:
            p = Poly.monomial(mono, c).substitute(forms)
            for e, x in p.terms.items():
                terms.append((x, e, d))
        args = []
        for a in self.args:
            new = [ZERO] * nvars
            for i, x in enumerate(a):
                if x:
                    for l in range(nvars):
                        y = cols[i][l]
                        if y:
                            new[l] = new[l] + x * y
            args.append(new)
        return CasimirExpression.build(self.family, terms, args, nvars, offset)


def _pure(family, form, nvars, offset):
    return CasimirExpression.build(family, [(ONE, (0,) * nvars, 0)], [form], nvars, offset)


def _seeded_family(W, co, label, seed):
    """Family grown from linear seed ``seed`` (dict label -> coeff)."""
    n = W.n
    s = W.size
    ix = W.index
    top = [ZERO] * s
    top[ix(n)] = ONE
    terms = []

    def emit(agc, i):
        f = Fraction(1, factorial(i + 1))
        for key, val in agc.items():
            e = [0] * s
            for lab in key:
                e[ix(lab)] += 1
            terms.append((val * f, tuple(e), i))

    agc = {(k,): as_scalar(v) for k, v in seed.items() if v}
    emit(agc, 0)
    if 0 in seed:
        wni = co.wn_pinv
        agc = {(t + 1, u + 1): wni[t, u] for t in range(n - 1) for u in range(n - 1) if wni[t, u]}
    else:
        agc = _step(co, agc)
    i = 1
    while agc and i <= n + 1:
        emit(agc, i)
        agc = _step(co, agc)
        i += 1
    if agc:
        raise LpxError("Casimir recursion did not terminate")
    return CasimirExpression.build(label, terms, [top], s, W.offset)


def _step(co, agc):
    m = len(co.coW)
    out = {}
    for key, val in agc.items():
        mu = key[0]
        M = co.coW[mu - 1]
        for t in range(m):
            for u in range(m):
                c = M[t, u]
                if c:
                    k2 = (t + 1, u + 1) + key[1:]
                    out[k2] = out.get(k2, ZERO) + c * val
    return {k: v for k, v in out.items() if v}


def _null_forms(W):
    s = W.size
    start = 1 if W.semidirect else 0
    rows = []
    for nu in range(start, s):
        rows.extend(W.upper(nu).rows)
    if not rows:
        return [tuple(ONE if i == j else ZERO for j in range(s)) for i in range(start, s)]
    basis = nullspace(Matrix(rows, s))
    if not basis:
        return []
    R, r, _ = rref(Matrix(basis, s))
    return [R.rows[i] for i in range(r)]


def _null_family(W):
    forms = _null_forms(W)
    if not forms:
        return None
    return CasimirExpression.build(W.n, [(ONE, (0,) * W.size, 0)], forms, W.size, W.offset)


def _families_lower(W):
    """Families of a lower-triangular tensor in its own coordinates."""
    n, s = W.n, W.size
    if n == 0:
        return [_pure(0, (ONE,), 1, 0)] if W.semidirect else []
    co = coextension(W)
    fams = []
    if not co.singular:
        seeds = ([0] if W.semidirect else []) + list(range(1, n))
        for nu in seeds:
            fams.append(_seeded_family(W, co, nu, {nu: ONE}))
    else:
        P = co.projector
        chosen = []
        for r in range(n - 1):
            row = P.rows[r]
            if any(row) and rank(Matrix(chosen + [row], n - 1)) > len(chosen):
                chosen.append(row)
                seed = {k + 1: x for k, x in enumerate(row) if x}
                fams.append(_seeded_family(W, co, r + 1, seed))
        sub = ExtensionTensor(n - 1, W.semidirect,
                              [[[W.W[l][a][b] for b in range(s - 1)] for a in range(s - 1)]
                               for l in range(s - 1)])
        known = {f.terms for f in fams}
        for f in _families_lower(sub):
            if f.is_pure or f.multi_argument:
                continue
            g = f.embed(s)
            if g.terms in known:
                continue
            if verify_casimir(W, g):
                fams.append(g)
                known.add(g.terms)
    null = _null_family(W)
    if null is not None:
        fams.append(null)
    return fams


def _is_lower_normal(W):
    try:
        _check_lower(W)
    except (NotApplicable, NotSemidirect):
        return False
    return True


def _retarget(blk, B, T, semi, err):
    """Move a block onto its catalog form when the pipeline's form fails."""
    from .extension import append_semisimple, transform
    from .normalize import _canonical_for, classify_block, find_isomorphism

    res = classify_block(blk)
    d = T.n
    canon = _canonical_for(res.case_id, d) if res.case_id != "unknown" else None
    if canon is None:
        raise err
    if semi:
        S = ExtensionTensor(d, False, [[[T.W[l][a][b] for b in range(1, d + 1)]
                                        for a in range(1, d + 1)] for l in range(1, d + 1)])
    else:
        S = T
    phi = find_isomorphism(S, canon)
    if phi is None:
        raise err
    if semi:
        M = Matrix([[ONE] + [ZERO] * d] + [[ZERO] + list(phi.M.rows[i]) for i in range(d)])
        target = append_semisimple(canon)
    else:
        M = phi.M
        target = canon
    B = B.then(BasisChange(M))
    if transform(blk, B).W != target.W:
        raise err
    return target, B


def _families_blocks(W, seed):
    from .normalize import normal_form, split_blocks

    s = W.size
    parts = split_blocks(W, seed=seed)
    fams = []
    null_forms = []
    start = 0
    for blk, Bs in parts:
        T, B, semi = normal_form(blk)
        k = blk.size
        try:
            fl = _families_lower(T)
        except (SolvabilityFailed, CoextConditionFailed) as err:
            T, B = _retarget(blk, B, T, semi, err)
            fl = _families_lower(T)
        # columns of the full change for this block: vbar = M^T v
        Mfull = Bs.M
        cols = []
        for a in range(k):
            col = [ZERO] * s
            for j in range(k):
                x = B.M[j, a]
                if x:
                    for l in range(s):
                        y = Mfull[l, start + j]
                        if y:
                            col[l] = col[l] + y * x
            cols.append(col)
        for f in fl:
            g = f.substitute(cols, s, W.offset)
            if not semi and (f.is_pure or f.multi_argument):
                null_forms.extend(g.args)
            else:
                fams.append(g)
        start += k
    if null_forms:
        R, r, _ = rref(Matrix(null_forms, s))
        forms = [R.rows[i] for i in range(r)]
        fams.append(CasimirExpression.build(W.n, [(ONE, (0,) * s, 0)], forms, s, W.offset))
    return fams


def casimir_families(W, seed=0, check=True):
    """Casimir families of ``W`` expressed in its own variables."""
    if W.size == 0:
        return []
    if _is_lower_normal(W):
        try:
            fams = _families_lower(W)
        except (SolvabilityFailed, CoextConditionFailed):
            fams = _families_blocks(W, seed)
    else:
        fams = _families_blocks(W, seed)
    if check:
        for f in fams:
            if not verify_casimir(W, f):
                raise LpxError(f"generated family {f} fails the Casimir condition")
    return fams


def leibniz_casimirs(n, nu, semidirect=None):
    """Closed-form Casimir family nu of the order-n Leibniz extension."""
    if n < 1 or not 0 <= nu <= n:
        raise IndexOutOfRange(f"family {nu} outside 0..{n}")
    if semidirect is None:
        semidirect = nu == 0
    if nu == 0 and not semidirect:
        raise IndexOutOfRange("family 0 exists only for semidirect extensions")
    off = 0 if semidirect else 1
    s = n + 1 if semidirect else n
    top = [ZERO] * s
    top[n - off] = ONE
    if nu == n:
        return _pure(n, top, s, off)
    terms = []
    e = [0] * s
    e[nu - off] = 1
    terms.append((ONE, tuple(e), 0))
    for k in range(2, n - nu + 1):
        target = nu + (k - 1) * n
        for combo in combinations_with_replacement(range(1, n), k):
            if sum(combo) != target:
                continue
            e = [0] * s
            for t in combo:
                e[t - off] += 1
            den = 1
            for x in e:
                den *= factorial(x)
            terms.append((Fraction(1, den), tuple(e), k - 1))
    return CasimirExpression.build(nu, terms, [top], s, off)


# -------------------------------------------------------------- verification

def _falling(k, d):
    out = 1
    for j in range(d):
        out *= k - j
    return out


def _instances(C, kmax):
    s = C.nvars
    forms = [Poly.linear(a) for a in C.args]
    if len(forms) == 1:
        eta = forms[0]
        pw = [Poly.const(s, ONE)]
        for _ in range(kmax):
            pw.append(pw[-1] * eta)
        for k in range(kmax + 1):
            P = Poly(s)
            for c, mono, d in C.terms:
                if d > k:
                    continue
                P = P + Poly.monomial(mono, c) * pw[k - d].scale(_falling(k, d))
            yield P
        return
    r = len(forms)
    base = Poly(s)
    for c, mono, d in C.terms:
        if d:
            raise NotApplicable("derivatives of multi-argument functions are not supported")
        base = base + Poly.monomial(mono, c)
    pows = [[Poly.const(s, ONE)] for _ in range(r)]
    for a in range(r):
        for _ in range(kmax):
            pows[a].append(pows[a][-1] * forms[a])

    def rec(a, left, acc):
        if a == r:
            yield base * acc
            return
        for k in range(left + 1):
            yield from rec(a + 1, left - k, acc * pows[a][k])

    yield from rec(0, kmax, Poly.const(s, ONE))


def _condition_holds(W, P):
    s = W.size
    grad = [P.diff(i) for i in range(s)]
    H = [[grad[m].diff(j) for j in range(s)] for m in range(s)]
    WW = W.W
    for nu in range(s):
        for lam in range(s):
            for sg in range(lam + 1, s):
                L = Poly(s)
                R = Poly(s)
                for mu in range(s):
                    a = WW[lam][mu][nu]
                    if a and H[mu][sg]:
                        L = L + H[mu][sg].scale(a)
                    b = WW[sg][mu][nu]
                    if b and H[mu][lam]:
                        R = R + H[mu][lam].scale(b)
                if L != R:
                    return False
    return True


def verify_casimir(W, C, kmax=None):
    """Exact check of the Casimir condition for f(s) = s^k, k = 0..kmax."""
    if C.nvars != W.size:
        return False
    if kmax is None:
        kmax = max(W.n, 2)
    for P in _instances(C, kmax):
        if not _condition_holds(W, P):
            return False
    return True


# ------------------------------------------------------- finite dimensional

def quadratic_casimirs_findim(W, alg):
    """Basis of symmetric C with W_lam^{mu nu} C_{mu sig} = W_sig^{mu nu} C_{mu lam}."""
    g = alg.killing_form()
    if det(g) == 0:
        raise NotSemisimple("Cartan-Killing form is singular")
    s = W.size
    pairs = [(a, b) for a in range(s) for b in range(a, s)]
    pidx = {p: i for i, p in enumerate(pairs)}

    def var(a, b):
        return pidx[(min(a, b), max(a, b))]

    rows = []
    for nu in range(s):
        for lam in range(s):
            for sg in range(lam + 1, s):
                row = [ZERO] * len(pairs)
                for mu in range(s):
                    a = W.W[lam][mu][nu]
                    if a:
                        row[var(mu, sg)] = row[var(mu, sg)] + a
                    b = W.W[sg][mu][nu]
                    if b:
                        row[var(mu, lam)] = row[var(mu, lam)] - b
                if any(row):
                    rows.append(row)
    if rows:
        basis = nullspace(Matrix(rows, len(pairs)))
    else:
        basis = [tuple(ONE if i == j else ZERO for j in range(len(pairs)))
                 for i in range(len(pairs))]
    out = []
    for vec in basis:
        C = [[ZERO] * s for _ in range(s)]
        for (a, b), x in zip(pairs, vec):
            C[a][b] = x
            C[b][a] = x
        out.append(Matrix(C))
    return out

