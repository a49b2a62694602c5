import copy
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import lpx
from lpx import _kernels_py as py

ck = pytest.importorskip("lpx._ckernels")

int_mats = st.tuples(st.integers(1, 5), st.integers(1, 5)).flatmap(
    lambda rc: st.lists(st.lists(st.integers(-9, 9), min_size=rc[1], max_size=rc[1]),
                        min_size=rc[0], max_size=rc[0]))


@settings(max_examples=200)
@given(int_mats)
def test_gauss_jordan_int_agrees(A):
    n = len(A[0])
    a, b = copy.deepcopy(A), copy.deepcopy(A)
    assert py.gauss_jordan_int(a, n) == ck.gauss_jordan_int(b, n)
    assert a == b


def test_gauss_jordan_int_big_entries():
    # values far beyond 64 bits must stay exact
    A = [[10 ** 30 + 1, 3], [7, 10 ** 25]]
    a, b = copy.deepcopy(A), copy.deepcopy(A)
    assert py.gauss_jordan_int(a, 2) == ck.gauss_jordan_int(b, 2)
    assert a == b


@settings(max_examples=200)
@given(int_mats, st.integers(0, 10 ** 6))
def test_gauss_jordan_gauss_agrees(A, seed):
    rng = np.random.default_rng(seed)
    Ai = rng.integers(-5, 6, size=(len(A), len(A[0]))).tolist()
    n = len(A[0])
    r1, i1 = copy.deepcopy(A), copy.deepcopy(Ai)
    r2, i2 = copy.deepcopy(A), copy.deepcopy(Ai)
    assert py.gauss_jordan_gauss(r1, i1, n) == ck.gauss_jordan_gauss(r2, i2, n)
    assert (r1, i1) == (r2, i2)


@pytest.mark.parametrize("s,d", [(1, 3), (2, 3), (4, 3)])
def test_rk4_agrees(s, d):
    rng = np.random.default_rng(s)
    W = rng.integers(-1, 2, size=(s, s, s)).astype(float)
    c = np.zeros((3, 3, 3))
    for (i, j, k), v in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1}.items():
        c[i, j, k], c[j, i, k] = v, -v
    Q = rng.normal(size=(s * d, s * d))
    Q = Q + Q.T
    b = rng.normal(size=s * d)
    x0 = rng.normal(size=s * d) * 0.3
    t1, bad1 = py.rk4_quadratic(W, c, Q, b, x0, 1e-3, 300)
    t2, bad2 = ck.rk4_quadratic(W, c, Q, b, x0, 1e-3, 300)
    assert bad1 == bad2 == -1
    assert np.allclose(np.asarray(t1), np.asarray(t2), rtol=1e-12, atol=1e-12)


def test_rk4_blowup_agrees():
    W = np.ones((1, 1, 1))
    c = np.zeros((2, 2, 2))
    c[0, 1, 1], c[1, 0, 1] = 1, -1
    Q = 50 * np.eye(2)
    x0 = np.ones(2)
    t1, bad1 = py.rk4_quadratic(W, c, Q, np.zeros(2), x0, 0.5, 2000)
    t2, bad2 = ck.rk4_quadratic(W, c, Q, np.zeros(2), x0, 0.5, 2000)
    assert bad1 == bad2 > 0


def test_backend_selected():
    assert lpx.BACKEND == ("python" if os.environ.get("LPX_PURE_PYTHON") == "1" else "cython")


def test_pure_python_forced():
    env = dict(os.environ, LPX_PURE_PYTHON="1")
    r = subprocess.run([sys.executable, "-c", "import lpx; print(lpx.BACKEND)"],
                       capture_output=True, text=True, env=env)
    assert r.stdout.strip() == "python"


def test_results_identical_across_backends():
    code = ("from lpx.normalize import classify; from lpx.extension import crmhd;"
            "from lpx.casimir import casimir_families;"
            "print(classify(crmhd()).case_id, sorted(map(str, casimir_families(crmhd()))))")
    outs = []
    for flag in ("0", "1"):
        env = dict(os.environ, LPX_PURE_PYTHON=flag)
        outs.append(subprocess.run([sys.executable, "-c", code], capture_output=True,
                                   text=True, env=env).stdout)
    assert outs[0] == outs[1] and outs[0].startswith("n3-2")
