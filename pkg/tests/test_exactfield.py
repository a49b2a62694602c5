from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpx.errors import IrrationalSpectrum, NonCommuting, NotNilpotent, ParseError
from lpx.exactfield import (
    I, ONE, ZERO, Matrix, Scalar, common_lower_triangularize, det, eigenvalues,
    gaussian_sqrt, inverse, nullspace, parse_scalar, pseudoinverse, rank, rref, solve,
    simultaneous_block_diagonalize,
)
from lpx.extension import three_field_mhd

small = st.integers(-6, 6)
rationals = st.builds(Fraction, st.integers(-20, 20), st.integers(1, 7))
scalars = st.builds(Scalar, rationals, rationals)
gauss_ints = st.builds(Scalar, small, small)


def matrices(rows, cols, elems=gauss_ints):
    return st.lists(st.lists(elems, min_size=cols, max_size=cols),
                    min_size=rows, max_size=rows).map(Matrix)


square = st.integers(1, 4).flatmap(lambda n: matrices(n, n))
any_shape = st.tuples(st.integers(1, 4), st.integers(1, 4)).flatmap(lambda rc: matrices(*rc))


# -- scalars

def test_scalar_text_forms():
    assert str(Scalar(Fraction(-2, 4))) == "-1/2"
    assert str(Scalar(Fraction(1, 3), Fraction(-2, 6))) == "1/3-1/3*i"
    assert parse_scalar("0") == ZERO
    assert parse_scalar("1") == ONE
    assert parse_scalar("i") == I
    assert parse_scalar("3/4+5/6*i") == Scalar(Fraction(3, 4), Fraction(5, 6))
    assert parse_scalar("-2/3") == Scalar(Fraction(-2, 3))


@pytest.mark.parametrize("bad", ["", "1/0", "abc", "1.5", "1//2", "2+*"])
def test_scalar_parse_errors(bad):
    with pytest.raises(ParseError):
        parse_scalar(bad)


@given(scalars, scalars)
def test_scalar_exact_arithmetic(a, b):
    assert (a + b) - b == a
    if b:
        assert (a * b) / b == a
    assert parse_scalar(str(a)) == a


@given(scalars)
def test_scalar_canonical(a):
    d = a.re.denominator, a.im.denominator
    assert all(x > 0 for x in d)
    assert hash(a) == hash(parse_scalar(str(a)))


@given(gauss_ints)
def test_gaussian_sqrt_of_square(z):
    w = gaussian_sqrt(z * z)
    assert w is not None and w * w == z * z


def test_gaussian_sqrt_nonsquare():
    assert gaussian_sqrt(Scalar(2)) is None
    assert gaussian_sqrt(Scalar(-1)) in (I, -I)


# -- elimination

def test_rref_examples():
    R, r, piv = rref(Matrix.identity(3))
    assert R == Matrix.identity(3) and r == 3
    R, r, piv = rref(Matrix([[0, 1], [0, 0]]))
    assert R == Matrix([[0, 1], [0, 0]]) and r == 1 and list(piv) == [1]
    R, r, _ = rref(Matrix([[ONE, I], [I, -ONE]]))
    assert R == Matrix([[ONE, I], [ZERO, ZERO]]) and r == 1


@given(any_shape)
def test_rank_bounds_and_permutation(A):
    r = rank(A)
    assert r <= min(A.shape)
    rev = Matrix(list(reversed(A.rows)))
    assert rank(rev) == r
    assert rank(A.T) == r


@given(any_shape)
def test_nullspace_is_kernel(A):
    ns = nullspace(A)
    assert len(ns) == A.ncols - rank(A)
    for v in ns:
        assert all(x == ZERO for x in A.apply(v))


@settings(max_examples=60)
@given(square)
def test_inverse_and_det(A):
    if det(A) == 0:
        with pytest.raises(ZeroDivisionError):
            inverse(A)
    else:
        assert A @ inverse(A) == Matrix.identity(A.nrows)


@given(square, st.lists(gauss_ints, min_size=4, max_size=4))
def test_solve(A, b):
    b = b[:A.nrows]
    x = solve(A, b)
    if x is not None:
        assert list(A.apply(x)) == list(b)
    else:
        assert rank(A.hstack(Matrix([[y] for y in b]))) > rank(A)


def test_det_values():
    assert det(Matrix([[1, 2], [3, 4]])) == Scalar(-2)
    assert det(Matrix([[ONE, I], [I, ONE]])) == Scalar(2)


# -- pseudoinverse

def test_pseudoinverse_examples():
    J = Matrix([[0, 0, 1], [0, 0, 0], [1, 0, 0]])
    assert pseudoinverse(J) == J
    assert pseudoinverse(Matrix([[0, -1], [-1, 0]])) == Matrix([[0, -1], [-1, 0]])
    assert pseudoinverse(Matrix([[0]])) == Matrix([[0]])


@settings(max_examples=80)
@given(square)
def test_pseudoinverse_penrose(A):
    P = pseudoinverse(A)
    assert A @ P @ A == A
    assert P @ A @ P == P
    if det(A) != 0:
        assert P == inverse(A)


@settings(max_examples=80)
@given(square)
def test_pseudoinverse_symmetric(A):
    S = A + A.T
    P = pseudoinverse(S)
    assert P == P.T
    proj = S @ P
    assert proj @ proj == proj


def test_pseudoinverse_isotropic():
    # rows are isotropic over Q(i): the plain Gram matrix is singular
    A = Matrix([[ONE, I], [ZERO, ZERO]])
    P = pseudoinverse(A)
    assert A @ P @ A == A and P @ A @ P == P


# -- spectra and decompositions

def test_eigenvalues():
    assert eigenvalues(Matrix.diag([1, 2, 2])) == [(Scalar(1), 1), (Scalar(2), 2)]
    vals = dict(eigenvalues(Matrix([[0, -1], [1, 0]])))
    assert vals == {I: 1, -I: 1}
    with pytest.raises(IrrationalSpectrum):
        eigenvalues(Matrix([[0, 2], [1, 0]]))


def _check_blocks(Ws, M, sizes):
    Minv = inverse(M)
    for W in Ws:
        B = Minv @ W @ M
        pos = 0
        for s in sizes:
            for i in range(pos, pos + s):
                for j in range(B.ncols):
                    if not pos <= j < pos + s:
                        assert B[i, j] == ZERO
            pos += s
    return True


def test_block_diagonalize_examples():
    M, sizes = simultaneous_block_diagonalize([Matrix.identity(4)])
    assert sizes == [4] and M == Matrix.identity(4)
    M, sizes = simultaneous_block_diagonalize([Matrix.diag([1, 2])])
    assert sizes == [1, 1]
    Ws = three_field_mhd().uppers()
    M, sizes = simultaneous_block_diagonalize(Ws)
    assert sizes == [2, 1]
    assert _check_blocks(Ws, M, sizes)


def test_block_diagonalize_noncommuting():
    with pytest.raises(NonCommuting):
        simultaneous_block_diagonalize([Matrix([[0, 1], [0, 0]]), Matrix([[0, 0], [1, 0]])])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-2, 2), min_size=3, max_size=3),
       st.lists(st.integers(-3, 3), min_size=9, max_size=9))
def test_block_diagonalize_roundtrip(eigs, entries):
    S = Matrix([entries[0:3], entries[3:6], entries[6:9]])
    if det(S) == 0:
        return
    D = Matrix.diag(eigs)
    A = S @ D @ inverse(S)
    B = S @ Matrix.diag([e * e for e in eigs]) @ inverse(S)
    M, sizes = simultaneous_block_diagonalize([A, B], seed=3)
    assert sum(sizes) == 3
    assert _check_blocks([A, B], M, sizes)
    # deterministic
    assert simultaneous_block_diagonalize([A, B], seed=3) == (M, sizes)


def test_common_lower_triangularize():
    N = Matrix([[0, 1], [0, 0]])
    M = common_lower_triangularize([N])
    assert inverse(M) @ N @ M == Matrix([[0, 0], [1, 0]])
    assert common_lower_triangularize([Matrix.zeros(3)]) == Matrix.identity(3)
    with pytest.raises(NotNilpotent):
        common_lower_triangularize([Matrix.identity(2)])


def test_common_lower_triangularize_crmhd():
    from lpx.extension import crmhd

    W = crmhd()
    Ns = [W.upper(k).submatrix(range(1, 4), range(1, 4)) for k in (1, 2)]
    M = common_lower_triangularize(Ns)
    for N in Ns:
        assert (inverse(M) @ N @ M).is_lower_triangular(strict=True)
