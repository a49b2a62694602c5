import random

import numpy as np
import pytest

from lpx.exactfield import Matrix, det
from lpx.extension import BasisChange


def random_basis(rng, size, lo=-2, hi=2):
    """Random invertible integer basis change."""
    while True:
        M = Matrix([[rng.randint(lo, hi) for _ in range(size)] for _ in range(size)])
        if det(M) != 0:
            return BasisChange(M)


def numeric_bracket_ok(W, trials=3, seed=0, tol=1e-9):
    """Independent check of antisymmetry and Jacobi for the so(3) n-tuple bracket.

    Uses random complex vectors and plain numpy; does not touch lpx.validate.
    """
    Wa = np.array([[[complex(x) for x in r] for r in s] for s in W.W])
    rng = np.random.default_rng(seed)

    def br(a, b):
        # a, b: (size, 3)
        cr = np.cross(a[:, None, :], b[None, :, :])
        return np.einsum("lmn,mnk->lk", Wa, cr)

    s = W.size
    for _ in range(trials):
        a, b, c = (rng.normal(size=(s, 3)) + 1j * rng.normal(size=(s, 3)) for _ in range(3))
        if np.max(np.abs(br(a, b) + br(b, a))) > tol:
            return False
        jac = br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b))
        if np.max(np.abs(jac)) > tol:
            return False
    return True


@pytest.fixture
def rng():
    return random.Random(20240601)
