"""Normal forms and classification of extension tensors.

The pipeline for one degenerate block is: lower-triangularize, normalize
the semisimple slot, strip coboundaries level by level, diagonalize the
final cocycle when only it survives.  Identification itself rests on a
basis-free fingerprint of the nilpotent part, so a case is reported even
when the pipeline does not land exactly on the catalog tensor.
"""

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .errors import (InvalidTensor, NotApplicable, NotSemidirect, UnknownCase)
from .exactfield import (ONE, ZERO, Matrix, Scalar, gaussian_sqrt, inverse,
                         nullspace, rank, rref, simultaneous_block_diagonalize,
                         common_lower_triangularize, solve)
from .extension import (BasisChange, ExtensionTensor, append_semisimple,
                        transform, validate)

__all__ = [
    "split_blocks", "lower_triangularize", "normalize_w0", "remove_coboundaries",
    "diagonalize_cocycle", "normal_form", "fingerprint", "Fingerprint",
    "CatalogEntry", "catalog", "classify", "BlockResult", "Classification",
    "nilpotent_part", "maximality_check", "find_isomorphism",
]


# ------------------------------------------------------------------ splitting

def _restrict(W, idx):
    idx = list(idx)
    return [[[W.W[l][m][n] for n in idx] for m in idx] for l in idx]


def split_blocks(W, seed=0):
    """Split into degenerate blocks.

    Returns a list of ``(block_tensor, B)`` where ``B`` is the combined
    basis change; ``transform(W, B)`` is block diagonal with the blocks in
    the returned order.
    """
    M, sizes = simultaneous_block_diagonalize(W.uppers(), seed=seed)
    if len(sizes) <= 1:
        return [(W, BasisChange.identity(W.size))] if W.size else []
    B = BasisChange(M)
    T = transform(W, B)
    out = []
    start = 0
    for s in sizes:
        blk = ExtensionTensor(s, False, _restrict(T, range(start, start + s)))
        out.append((blk, B))
        start += s
    return out


# ---------------------------------------------------------- lower triangular

def _all_lower(W):
    return all(W.upper(nu).is_lower_triangular() for nu in range(W.size))


def _block_eigs(W):
    s = W.size
    return [W.upper(nu).trace() / s if s else ZERO for nu in range(s)]


def lower_triangularize(W):
    """Make every slice lower triangular; returns (T, B, eps).

    eps lists the eigenvalue of each slice of T; only the first can be
    nonzero and it is rescaled to 1.
    """
    s = W.size
    if s == 0:
        return W, BasisChange.identity(0), []
    B = BasisChange.identity(s)
    T = W
    if not _all_lower(W):
        eigs = _block_eigs(W)
        Ns = [W.upper(nu) - Matrix.identity(s).scale(e) for nu, e in enumerate(eigs)]
        B = BasisChange(common_lower_triangularize(Ns))
        T = transform(W, B)
    e1 = T.W[0][0][0]
    if e1 and e1 != ONE:
        c = e1.inverse()
        S = BasisChange(Matrix.identity(s).scale(c), Matrix.identity(s).scale(e1))
        T = transform(T, S)
        B = B.then(S)
    eps = [T.W[l][l][nu] for nu in range(s) for l in (0,)]
    return T, B, eps


def normalize_w0(W):
    """Bring W^(0) to the identity for a lower-triangular block with eps1 = 1."""
    s = W.size
    if s == 0 or W.W[0][0][0] != ONE:
        raise NotSemidirect("first eigenvalue flag is not 1")
    B = BasisChange.identity(s)
    T = W
    for lam in range(1, s):
        l = -T.W[lam][0][0]
        if not l:
            continue
        rows = [[ONE if i == j else ZERO for j in range(s)] for i in range(s)]
        rows[lam][0] = l
        inv = [[ONE if i == j else ZERO for j in range(s)] for i in range(s)]
        inv[lam][0] = -l
        step = BasisChange(Matrix(rows), Matrix(inv))
        T = transform(T, step)
        B = B.then(step)
    if T.upper(0) != Matrix.identity(s):
        raise NotSemidirect("W^(0) could not be brought to the identity")
    out = ExtensionTensor(s - 1, True, T.W)
    return out, B


# ----------------------------------------------------------------- cocycles

def _cob_setup(W, m):
    """Index sets (storage) for the split at label m."""
    off = W.offset
    first = 1 if W.semidirect else 0
    coch = [i for i in range(first, W.size) if W.label(i) <= m]
    ideal = [i for i in range(W.size) if W.label(i) > m]
    return coch, ideal


def _wcob(W, coch, ideal, k):
    """Linear part of the coboundary for cochain constants k[(sigma, tau)]."""
    T = W.W
    lows = [i for i in range(W.size) if i not in ideal]
    out = {}
    for b in ideal:
        for a in coch:
            for g in coch:
                if g < a:
                    continue
                acc = ZERO
                for lam in lows:
                    c = k.get((b, lam))
                    if c:
                        acc = acc + c * T[lam][a][g]
                for sg in ideal:
                    c = k.get((sg, g))
                    if c:
                        acc = acc - c * T[b][a][sg]
                    c = k.get((sg, a))
                    if c:
                        acc = acc - c * T[b][sg][g]
                out[(b, a, g)] = acc
    return out


def remove_coboundaries(W, m):
    """Remove the coboundary part of the cocycle of the ideal spanned by labels > m.

    The ideal must be abelian for the affine formula to be exact; otherwise
    the tensor is returned unchanged.  Among all cochains the particular
    solution with free constants set to zero is used.
    """
    s = W.size
    coch, ideal = _cob_setup(W, m)
    ident = BasisChange.identity(s)
    if not coch or not ideal:
        return W, ident
    T = W.W
    for a in ideal:
        for b in ideal:
            for lam in range(s):
                if T[lam][a][b]:
                    return W, ident
    unknowns = [(sg, tau) for sg in ideal for tau in coch]
    entries = [(b, a, g) for b in ideal for a in coch for g in coch if g >= a]
    cols = []
    for u in unknowns:
        img = _wcob(W, coch, ideal, {u: ONE})
        cols.append([img[e] for e in entries])
    w = [T[b][a][g] for (b, a, g) in entries]
    if not any(any(c) for c in cols) or not any(w):
        return W, ident
    # rows of R span the image; reduce w on its pivot coordinates
    R, r, piv = rref(Matrix(cols))
    target = [ZERO] * len(entries)
    for i in range(r):
        c = w[piv[i]]
        if c:
            for j in range(len(entries)):
                if R[i, j]:
                    target[j] = target[j] + c * R[i, j]
    if not any(target):
        return W, ident
    L = Matrix.from_columns(cols, len(entries))
    kvec = solve(L, target)
    rows = [[ONE if i == j else ZERO for j in range(s)] for i in range(s)]
    inv = [[ONE if i == j else ZERO for j in range(s)] for i in range(s)]
    for (sg, tau), c in zip(unknowns, kvec):
        rows[sg][tau] = c
        inv[sg][tau] = -c
    B = BasisChange(Matrix(rows), Matrix(inv))
    out = transform(W, B)
    return out, B


def _quotient(W, k_label):
    keep = [i for i in range(W.size) if W.label(i) <= k_label]
    n = k_label
    return ExtensionTensor(n, W.semidirect, _restrict(W, keep))


def _embed_change(B_small, size):
    s = B_small.size
    rows = [[ONE if i == j else ZERO for j in range(size)] for i in range(size)]
    inv = [[ONE if i == j else ZERO for j in range(size)] for i in range(size)]
    for i in range(s):
        for j in range(s):
            rows[i][j] = B_small.M[i, j]
            inv[i][j] = B_small.Minv[i, j]
    return BasisChange(Matrix(rows), Matrix(inv))


def strip_coboundaries(W):
    """Apply coboundary removal level by level on the quotients."""
    B = BasisChange.identity(W.size)
    T = W
    for k in range(3, W.n + 1):
        Q = _quotient(T, k)
        _, Bk = remove_coboundaries(Q, k - 1)
        if Bk.is_identity():
            continue
        Bf = _embed_change(Bk, T.size)
        T = transform(T, Bf)
        if W.semidirect:
            T = ExtensionTensor(W.n, True, T.W)
        B = B.then(Bf)
    return T, B


def _final_slice_shape(W):
    """Storage indices of the solvable part if only the last slice is nonzero."""
    first = 1 if W.semidirect else 0
    sol = list(range(first, W.size))
    if not sol:
        return None
    last = sol[-1]
    for lam in sol[:-1]:
        for a in sol:
            for b in sol:
                if W.W[lam][a][b]:
                    return None
    for a in sol:
        if W.W[last][a][last]:
            return None
    return sol


def _congruence_diag(A):
    """P with P^T A P diagonal (nonzero entries first)."""
    n = A.nrows
    P = Matrix.identity(n)
    D = A
    for i in range(n):
        if not D[i, i]:
            j = next((j for j in range(i + 1, n) if D[j, j]), None)
            if j is not None:
                E = _swap(n, i, j)
            else:
                j = next((j for j in range(i + 1, n) if D[i, j]), None)
                if j is None:
                    continue
                E = _elem(n, j, i, ONE)
            P = P @ E
            D = E.T @ D @ E
        d = D[i, i]
        if not d:
            continue
        for j in range(i + 1, n):
            if D[i, j]:
                E = _elem(n, i, j, -D[i, j] / d)
                P = P @ E
                D = E.T @ D @ E
    # nonzero diagonal entries first, stable
    order = [i for i in range(n) if D[i, i]] + [i for i in range(n) if not D[i, i]]
    Pm = Matrix.from_columns([P.col(i) for i in order], n)
    return Pm, [D[i, i] for i in order]


def _swap(n, i, j):
    rows = [[ONE if (a == b and a not in (i, j)) or (a, b) in ((i, j), (j, i)) else ZERO
             for b in range(n)] for a in range(n)]
    return Matrix(rows)


def _elem(n, i, j, c):
    # column operation: col j += c * col i
    rows = [[ONE if a == b else ZERO for b in range(n)] for a in range(n)]
    rows[i][j] = c
    return Matrix(rows)


def _hyperbolic_basis(d):
    """S and c with S^T diag(d) S = c J, or None when d is not split enough.

    Entries whose ratio is a square in Q(i) pair into hyperbolic planes;
    at most one entry may remain, and it fixes c.
    """
    r = len(d)
    classes = []
    for i, x in enumerate(d):
        for cl in classes:
            if gaussian_sqrt(x / d[cl[0]]) is not None:
                cl.append(i)
                break
        else:
            classes.append([i])
    pairs, left = [], []
    for cl in classes:
        for k in range(0, len(cl) - 1, 2):
            pairs.append((cl[k], cl[k + 1]))
        if len(cl) % 2:
            left.append(cl[-1])
    if len(left) != r % 2:
        return None
    c = d[left[0]] if left else d[0]
    cols = [None] * r
    for k, (i, j) in enumerate(pairs):
        # d_j = -d_i t^2, so e_i +- e_j / t are isotropic
        t = gaussian_sqrt(-d[j] / d[i])
        u = [ZERO] * r
        w = [ZERO] * r
        u[i], u[j] = ONE, t.inverse()
        f = c / (2 * d[i])
        w[i], w[j] = f, -f * t.inverse()
        cols[k], cols[r - 1 - k] = u, w
    if left:
        e = [ZERO] * r
        e[left[0]] = ONE
        cols[r // 2] = e
    return Matrix.from_columns(cols, r), c


def diagonalize_cocycle(W):
    """Congruence-normalize the final cocycle slice when it is the only one."""
    sol = _final_slice_shape(W)
    if sol is None:
        raise NotApplicable("lower cocycle slices do not vanish")
    last = sol[-1]
    inner = sol[:-1]
    m = len(inner)
    A = Matrix([[W.W[last][a][b] for b in inner] for a in inner])
    s = W.size
    if A.is_zero():
        return W, BasisChange.identity(s)
    P, d = _congruence_diag(A)
    r = sum(1 for x in d if x)
    hb = _hyperbolic_basis(d[:r])
    if hb is not None:
        S, c = hb
        Sp = Matrix([[S[i, j] if i < r and j < r else (ONE if i == j else ZERO)
                      for j in range(m)] for i in range(m)])
        P = P @ Sp
    else:
        c = ONE
    full = [[ZERO] * s for _ in range(s)]
    for i in range(s):
        if i not in inner and i != last:
            full[i][i] = ONE
    for a, ia in enumerate(inner):
        for b, ib in enumerate(inner):
            full[ia][ib] = P[a, b]
    full[last][last] = c
    Mt = Matrix(full)
    if Mt == Matrix.identity(s):
        return W, BasisChange.identity(s)
    B = BasisChange(Mt)
    T = transform(W, B)
    if W.semidirect:
        T = ExtensionTensor(W.n, True, T.W)
    return T, B


def normal_form(block):
    """Run the pipeline on a single degenerate block: (T, B, semidirect)."""
    T, B, eps = lower_triangularize(block)
    semi = bool(eps and eps[0] == ONE)
    if semi:
        T, B2 = normalize_w0(T)
        B = B.then(B2)
    elif block.semidirect or T.n != T.size:
        T = ExtensionTensor(T.size, False, T.W)
    T, B3 = strip_coboundaries(T)
    B = B.then(B3)
    try:
        T, B4 = diagonalize_cocycle(T)
        B = B.then(B4)
    except NotApplicable:
        pass
    if T.W == block.W:
        B = BasisChange.identity(block.size)
    return T, B, semi


# --------------------------------------------------------------- fingerprint

@dataclass(frozen=True)
class Fingerprint:
    n: int
    eps: tuple
    slice_ranks: tuple
    lcs_dims: tuple
    wn_rank: int
    coext_vanishes: bool
    ann_dim: int
    der_dim: int

    def core(self):
        """Fields that identify the nilpotent part (eps excluded)."""
        return (self.n, self.slice_ranks, self.lcs_dims, self.wn_rank,
                self.coext_vanishes, self.ann_dim, self.der_dim)

    def to_json(self):
        return {"n": self.n, "eps": list(self.eps), "slice_ranks": list(self.slice_ranks),
                "lcs_dims": list(self.lcs_dims), "wn_rank": self.wn_rank,
                "coext_vanishes": self.coext_vanishes, "ann_dim": self.ann_dim,
                "der_dim": self.der_dim}


class _Algebra:
    """Commutative algebra on a subspace given by structure constants."""

    def __init__(self, mult):
        # mult[i][j] = coordinates of x_i x_j
        self.d = len(mult)
        self.mult = mult

    def prod(self, u, v):
        d = self.d
        out = [ZERO] * d
        for i in range(d):
            if not u[i]:
                continue
            for j in range(d):
                if not v[j]:
                    continue
                c = u[i] * v[j]
                for k, x in enumerate(self.mult[i][j]):
                    if x:
                        out[k] = out[k] + c * x
        return out


def nilpotent_part(W):
    """Structure constants of the nilradical of a single degenerate block."""
    s = W.size
    eigs = _block_eigs(W)
    if any(eigs):
        # kernel of a -> sum a_nu eps_nu
        basis = nullspace(Matrix([eigs]))
    else:
        basis = [tuple(ONE if i == j else ZERO for j in range(s)) for i in range(s)]
    d = len(basis)
    if d == 0:
        return _Algebra([])
    Bm = Matrix.from_columns(basis, s)

    def full_prod(u, v):
        out = [ZERO] * s
        for m in range(s):
            if not u[m]:
                continue
            for n in range(s):
                if not v[n]:
                    continue
                c = u[m] * v[n]
                for l in range(s):
                    x = W.W[l][m][n]
                    if x:
                        out[l] = out[l] + c * x
        return out

    # coordinates in the basis: pick pivot rows of Bm
    _, _, piv = rref(Bm.T)
    sub = Matrix([Bm.row(p) for p in piv])
    subinv = inverse(sub)
    mult = []
    for i in range(d):
        row = []
        for j in range(d):
            p = full_prod(basis[i], basis[j])
            row.append(list(subinv.apply([p[q] for q in piv])))
        mult.append(row)
    return _Algebra(mult)


def _span_rank(vecs, d):
    if not vecs:
        return 0, []
    R, r, _ = rref(Matrix(vecs, d))
    return r, [R.row(i) for i in range(r)]


def _powers(A):
    d = A.d
    basis_N = [tuple(ONE if i == j else ZERO for j in range(d)) for i in range(d)]
    levels = [basis_N]
    dims = [d]
    cur = basis_N
    while cur:
        prods = [A.prod(u, v) for u in cur for v in basis_N]
        r, rows = _span_rank([p for p in prods if any(p)], d)
        dims.append(r)
        cur = rows
        if r == 0:
            break
        levels.append(rows)
        if len(dims) > d + 2:
            break
    return levels, dims


def _rand_vec(rng, d):
    return [Scalar(rng.randint(-40, 40)) for _ in range(d)]


def _left_mult_matrix(A, a):
    d = A.d
    cols = [A.prod(a, [ONE if i == j else ZERO for i in range(d)]) for j in range(d)]
    return Matrix.from_columns(cols, d)


def _derivation_dim(A):
    d = A.d
    if d == 0:
        return 0
    # unknown D[p][q] (D e_q = sum_p D[p][q] e_p), index p*d+q
    rows = []
    mult = A.mult
    for i in range(d):
        for j in range(i, d):
            for k in range(d):
                row = [ZERO] * (d * d)
                # D(e_i e_j)_k = sum_p m_ij^p D[k][p]
                for p, x in enumerate(mult[i][j]):
                    if x:
                        row[k * d + p] = row[k * d + p] + x
                # - (D e_i) e_j - e_i (D e_j), k-th coordinate
                for p in range(d):
                    x = mult[p][j][k]
                    if x:
                        row[p * d + i] = row[p * d + i] - x
                    x = mult[i][p][k]
                    if x:
                        row[p * d + j] = row[p * d + j] - x
                if any(row):
                    rows.append(row)
    if not rows:
        return d * d
    return d * d - rank(Matrix(rows, d * d))


def fingerprint(W, seed=12345):
    """Basis-free invariants of a single degenerate block."""
    T, _, eps = lower_triangularize(W)
    A = nilpotent_part(W)
    d = A.d
    rng = random.Random(seed)
    levels, dims = _powers(A)
    lcs = tuple(dims)
    slice_ranks = []
    for lev in levels:
        best = 0
        for _ in range(2):
            coeffs = [rng.randint(-40, 40) for _ in lev]
            a = [ZERO] * d
            for c, v in zip(coeffs, lev):
                for i in range(d):
                    if v[i]:
                        a[i] = a[i] + c * v[i]
            best = max(best, rank(_left_mult_matrix(A, a)))
        if best == 0:
            break
        slice_ranks.append(best)
    wn = 0
    for _ in range(2):
        xi = _rand_vec(rng, d)
        Bm = Matrix([[sum((x * y for x, y in zip(xi, A.mult[i][j]) if x and y), ZERO)
                      for j in range(d)] for i in range(d)]) if d else Matrix([])
        wn = max(wn, rank(Bm) if d else 0)
    ann = len(nullspace(Matrix([[A.mult[i][j][k] for i in range(d)]
                                for j in range(d) for k in range(d)], d))) if d else 0
    n2 = dims[1] if len(dims) > 1 else 0
    eps_flags = tuple(1 if e else 0 for e in eps)
    return Fingerprint(n=d, eps=eps_flags, slice_ranks=tuple(slice_ranks), lcs_dims=lcs,
                       wn_rank=wn, coext_vanishes=n2 <= 1, ann_dim=ann,
                       der_dim=_derivation_dim(A))


# ------------------------------------------------------------------- catalog

def _solvable_from_lower(n, slices):
    """Tensor from W_(2..n) given as small matrices (trailing zeros omitted)."""
    W = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
    for lam, mat in slices.items():
        for a, row in enumerate(mat):
            for b, x in enumerate(row):
                W[lam - 1][a][b] = Scalar(x)
    return ExtensionTensor(n, False, W)


_OFF2 = [[0, 1], [1, 0]]
_ANTI3 = [[0, 0, 1], [0, 1, 0], [1, 0, 0]]

_CATALOG_SPEC = [
    ("n3-1", 3, {}),
    ("n3-2", 3, {3: _OFF2}),
    ("n3-3", 3, {2: [[1]]}),
    ("n3-4", 3, {2: [[1]], 3: _OFF2}),
    ("n4-1a", 4, {}),
    ("n4-1b", 4, {4: _ANTI3}),
    ("n4-2a", 4, {3: _OFF2}),
    ("n4-3a", 4, {2: [[1]]}),
    ("n4-3b", 4, {2: [[1]], 4: [[0, 0, 0], [0, 0, 0], [0, 0, 1]]}),
    ("n4-3c", 4, {2: [[1]], 4: [[0, 0, 1], [0, 0, 0], [1, 0, 0]]}),
    ("n4-3d", 4, {2: [[1]], 4: [[0, 1, 0], [1, 0, 0], [0, 0, 1]]}),
    ("n4-4a", 4, {2: [[1]], 3: _OFF2}),
    ("n4-4b", 4, {2: [[1]], 3: _OFF2, 4: _ANTI3}),
]


@dataclass(frozen=True)
class CatalogEntry:
    case_id: str
    tensor: ExtensionTensor
    fingerprint: Fingerprint
    casimir_table_ref: str


_CATALOG = None


def catalog():
    """The n = 3 and n = 4 normal forms, with pairwise-distinct fingerprints."""
    global _CATALOG
    if _CATALOG is None:
        entries = []
        for cid, n, slices in _CATALOG_SPEC:
            T = _solvable_from_lower(n, slices)
            ref = "Casimir table n=3" if n == 3 else "Casimir table n=4"
            entries.append(CatalogEntry(cid, T, fingerprint(T), ref))
        for n in (3, 4):
            keys = [e.fingerprint.core() for e in entries if e.tensor.n == n]
            assert len(set(keys)) == len(keys), f"fingerprint collision at n={n}"
        _CATALOG = tuple(entries)
    return _CATALOG


def catalog_entry(case_id):
    for e in catalog():
        if e.case_id == case_id:
            return e
    raise KeyError(case_id)


# --------------------------------------------------------------- isomorphism

def _rk(vecs, d):
    return _span_rank(vecs, d)[0]


def _product_vec(W, x, y, zero=ZERO):
    s = W.size
    out = []
    for lam in range(s):
        acc = zero
        for mu, row in enumerate(W.W[lam]):
            if not x[mu]:
                continue
            for nu, c in enumerate(row):
                if c and y[nu]:
                    acc = acc + c * x[mu] * y[nu]
        out.append(acc)
    return out


def _square_span(W):
    s = W.size
    vecs = []
    for mu in range(s):
        for nu in range(mu, s):
            v = [W.W[l][mu][nu] for l in range(s)]
            if any(v):
                vecs.append(v)
    return vecs


def _words(C):
    """Generators of the nilpotent algebra C and each basis vector as words."""
    s = C.size
    sq = _square_span(C)
    gens = []
    for i in range(s):
        e = [ONE if j == i else ZERO for j in range(s)]
        if _rk(sq + [e] + [[ONE if j == g else ZERO for j in range(s)] for g in gens], s) \
                > _rk(sq + [[ONE if j == g else ZERO for j in range(s)] for g in gens], s):
            gens.append(i)
    words = [((k,), [ONE if j == g else ZERO for j in range(s)]) for k, g in enumerate(gens)]
    frontier = list(words)
    for _ in range(s):
        nxt = []
        for w, v in frontier:
            for k, g in enumerate(gens):
                if k < w[-1]:
                    continue
                pv = _product_vec(C, v, words[k][1])
                if any(pv):
                    nxt.append((w + (k,), pv))
        if not nxt:
            break
        words.extend(nxt)
        frontier = nxt
    A = Matrix.from_columns([v for _, v in words], s)
    reps = []
    for lam in range(s):
        b = [ONE if j == lam else ZERO for j in range(s)]
        x = solve(A, b)
        if x is None:
            return None
        reps.append([(words[i][0], c) for i, c in enumerate(x) if c])
    return gens, reps


def _to_sympy(x):
    import sympy
    x = Scalar(x) if not isinstance(x, Scalar) else x
    return sympy.Rational(x.re.numerator, x.re.denominator) + \
        sympy.I * sympy.Rational(x.im.numerator, x.im.denominator)


def _from_sympy(e):
    import sympy
    e = sympy.nsimplify(sympy.expand(e))
    re, im = e.as_real_imag()
    if not (re.is_Rational and im.is_Rational):
        return None
    return Scalar(Fraction(int(re.p), int(re.q)), Fraction(int(im.p), int(im.q)))


def _realize(S, C, images, unknowns, sol, s):
    import sympy

    trials = [1, 2, -1, 3, 0, 5, -2, 7]
    free = sorted({f for a in unknowns for f in sympy.sympify(sol.get(a, a)).free_symbols},
                  key=str)
    for shift in range(6):
        sub = {f: trials[(i + shift) % len(trials)] + i for i, f in enumerate(free)}
        cols = []
        for v in images:
            col = []
            for a in v:
                x = _from_sympy(sympy.sympify(a).subs(sol).subs(sub))
                if x is None:
                    return None
                col.append(x)
            cols.append(col)
        M = Matrix.from_columns(cols, s)
        if rank(M) < s:
            continue
        B = BasisChange(M)
        if transform(S, B).W == C.W:
            return B
    return None


def find_isomorphism(S, C, full=False):
    """Basis change B with transform(S, B) == C for solvable tensors, or None.

    The map is fixed by the images of the generators of C; their
    coordinates solve the homomorphism equations exactly.
    """
    import sympy

    if S.size != C.size:
        return None
    s = S.size
    if s == 0:
        return BasisChange.identity(0)
    wr = _words(C)
    if wr is None:
        return None
    gens, reps = wr
    sqS = _square_span(S)
    if s - _rk(sqS, s) != len(gens):
        return None
    comp = []
    for i in range(s):
        e = [ONE if j == i else ZERO for j in range(s)]
        trial = sqS + [[ONE if j == c else ZERO for j in range(s)] for c in comp] + [e]
        if _rk(trial, s) == _rk(trial[:-1], s) + 1:
            comp.append(i)
    coords = list(range(s)) if full else comp
    syms = [[sympy.Symbol(f"a{k}_{q}") for q in coords] for k in range(len(gens))]
    zero = sympy.Integer(0)
    gvec = []
    for k in range(len(gens)):
        v = [zero] * s
        for q, a in zip(coords, syms[k]):
            v[q] = a
        gvec.append(v)
    Wsym = ExtensionTensor.__new__(ExtensionTensor)
    Wsym.size = s
    Wsym.W = [[[_to_sympy(x) for x in r] for r in sl] for sl in S.W]

    def prod(x, y):
        return [sympy.expand(c) for c in _product_vec(Wsym, x, y, zero)]

    cache = {}

    def word(w):
        if w not in cache:
            if len(w) == 1:
                cache[w] = gvec[w[0]]
            else:
                cache[w] = prod(word(w[:-1]), gvec[w[-1]])
        return cache[w]

    images = []
    for rep in reps:
        v = [zero] * s
        for w, c in rep:
            cw = _to_sympy(c)
            v = [a + cw * b for a, b in zip(v, word(w))]
        images.append([sympy.expand(a) for a in v])
    eqs = []
    for mu in range(s):
        for nu in range(mu, s):
            lhs = prod(images[mu], images[nu])
            for lam in range(s):
                rhs = zero
                for l2 in range(s):
                    c = C.W[l2][mu][nu]
                    if c:
                        rhs = rhs + _to_sympy(c) * images[l2][lam]
                e = sympy.expand(lhs[lam] - rhs)
                if e != 0:
                    eqs.append(e)
    unknowns = [a for row in syms for a in row]
    npiv = len(comp)
    attempts = [{}]
    for piv in product(range(npiv), repeat=len(gens)):
        attempts.append({syms[k][coords.index(comp[q])]: sympy.Integer(1)
                         for k, q in enumerate(piv)})
    for fix in attempts:
        rest = [a for a in unknowns if a not in fix]
        sys_ = [e.subs(fix) for e in eqs]
        sys_ = [e for e in sys_ if e != 0]
        if any(e.is_number for e in sys_):
            continue
        try:
            sols = sympy.solve(sys_, rest, dict=True) if sys_ else [{}]
        except (NotImplementedError, ValueError):
            continue
        for sol in sols:
            sol.update(fix)
            B = _realize(S, C, images, unknowns, sol, s)
            if B is not None:
                return B
    if not full:
        return find_isomorphism(S, C, full=True)
    return None


# ----------------------------------------------------------------- classify

@dataclass
class BlockResult:
    case_id: str
    semidirect: bool
    fingerprint: Fingerprint
    witness: BasisChange = None
    normal_form: ExtensionTensor = None
    block: ExtensionTensor = None

    def to_json(self):
        return {"case_id": self.case_id, "semidirect": self.semidirect,
                "size": self.block.size if self.block is not None else None,
                "fingerprint": self.fingerprint.to_json(),
                "witness": self.witness.M.to_strings() if self.witness else None}


@dataclass
class Classification:
    blocks: list = field(default_factory=list)
    split: BasisChange = None

    @property
    def case_id(self):
        if len(self.blocks) != 1:
            raise ValueError("tensor splits into several blocks")
        return self.blocks[0].case_id

    @property
    def witness(self):
        return self.blocks[0].witness if len(self.blocks) == 1 else None

    def to_json(self):
        return {"blocks": [b.to_json() for b in self.blocks]}


def _small_case(fp):
    d = fp.n
    if d <= 1 or fp.lcs_dims[1] == 0:
        return "abelian"
    if list(fp.lcs_dims) == list(range(d, -1, -1)):
        return "leibniz"
    return None


def _canonical_for(case_id, n):
    if case_id.startswith("n"):
        return catalog_entry(case_id).tensor
    if case_id == "abelian":
        return ExtensionTensor.zero(n)
    if case_id == "leibniz":
        from .extension import leibniz
        return leibniz(n)
    return None


def classify_block(block):
    fp = fingerprint(block)
    T, B, semi = normal_form(block)
    d = fp.n
    case_id = None
    if d in (3, 4):
        for e in catalog():
            if e.tensor.n == d and e.fingerprint.core() == fp.core():
                case_id = e.case_id
                break
        if case_id is None:
            raise UnknownCase(f"fingerprint {fp.to_json()} matches no catalog entry")
    else:
        case_id = _small_case(fp)
        if case_id is None:
            if d <= 4:
                raise UnknownCase(f"fingerprint {fp.to_json()} matches no catalog entry")
            case_id = "unknown"
    witness = None
    canon = _canonical_for(case_id, d) if case_id != "unknown" else None
    if canon is not None:
        if semi:
            canon = append_semisimple(canon)
        if T == canon and transform(block, B).W == canon.W:
            witness = B
    return BlockResult(case_id, semi, fp, witness, T, block)


def classify(W, seed=0):
    """Split, normalize and identify every block of a valid tensor."""
    rep = validate(W)
    if not rep.ok:
        bad = next(r for r in rep.results if not r.ok)
        raise InvalidTensor(f"tensor fails {bad.name} at {bad.first_violation}")
    parts = split_blocks(W, seed=seed)
    split = parts[0][1] if parts else BasisChange.identity(0)
    return Classification([classify_block(b) for b, _ in parts], split)


# ---------------------------------------------------------------- maximality

def maximality_check(n):
    """Extend leibniz(n-1) by a general symmetric final slice.

    Returns ``(dim_solutions, dim_coboundaries, leibniz_spans)``: the
    dimension of the commuting cocycles, of the coboundary subspace, and
    whether the Leibniz cocycle spans the quotient.
    """
    from .extension import leibniz

    if n < 2:
        raise ValueError("n must be at least 2")
    base = leibniz(n - 1)
    m = n - 1
    pairs = [(a, b) for a in range(m) for b in range(a, m)]
    pidx = {p: i for i, p in enumerate(pairs)}

    def var(a, b):
        return pidx[(min(a, b), max(a, b))]

    # commutation rows: sum_mu x[mu,nu] W_mu^{ka sg} = sum_mu x[mu,sg] W_mu^{ka nu}
    rows = []
    Wb = base.W
    for nu in range(m):
        for sg in range(m):
            for ka in range(m):
                row = [ZERO] * len(pairs)
                for mu in range(m):
                    x = Wb[mu][ka][sg]
                    if x:
                        row[var(mu, nu)] = row[var(mu, nu)] + x
                    x = Wb[mu][ka][nu]
                    if x:
                        row[var(mu, sg)] = row[var(mu, sg)] - x
                if any(row):
                    rows.append(row)
    sols = nullspace(Matrix(rows, len(pairs))) if rows else [
        tuple(ONE if i == j else ZERO for j in range(len(pairs))) for i in range(len(pairs))]
    cobs = [tuple(Wb[lam][a][b] for (a, b) in pairs) for lam in range(m)]
    cobs = [c for c in cobs if any(c)]
    dim_s = len(sols)
    dim_b = rank(Matrix(cobs, len(pairs))) if cobs else 0
    leib = tuple(ONE if a + b + 2 == n else ZERO for (a, b) in pairs)
    in_s = rank(Matrix(list(sols) + [leib], len(pairs))) == dim_s
    spans = in_s and (rank(Matrix(cobs + [leib], len(pairs))) == dim_b + 1) and dim_s - dim_b == 1
    return dim_s, dim_b, spans
