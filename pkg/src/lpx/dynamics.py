"""Lie-Poisson time integration for extensions of a finite-dimensional algebra.

The state holds one vector per tensor slot.  Hamiltonians are quadratic
plus linear, which covers the rigid body and the heavy top and lets the
integrator run in the compiled kernel.
"""

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._backend import rk4_quadratic
from .errors import BadParameter, DimensionMismatch, NonFinite
from .exactfield import Matrix, inverse

__all__ = [
    "LieAlgebraSpec", "SimState", "HamiltonianSpec", "RunResult",
    "coadjoint_rhs", "rk4_run", "quadratic_monitor", "tensor_array",
]


def _levi_civita():
    c = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for (i, j, k), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1,
                         (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}.items():
        c[i][j][k] = s
    return c


class LieAlgebraSpec:
    """Structure constants c[i][j][k] = c_ij^k of a finite-dimensional algebra."""

    def __init__(self, c, name="custom"):
        c = [[[Fraction(x) for x in row] for row in slab] for slab in c]
        d = len(c)
        if any(len(s) != d or any(len(r) != d for r in s) for s in c):
            raise DimensionMismatch("structure constants must be d x d x d")
        for i in range(d):
            for j in range(d):
                for k in range(d):
                    if c[i][j][k] != -c[j][i][k]:
                        raise BadParameter("structure constants are not antisymmetric")
        # Jacobi: c_ij^m c_mk^l + cyclic = 0
        for i in range(d):
            for j in range(d):
                for k in range(d):
                    for l in range(d):
                        s = sum(c[i][j][m] * c[m][k][l] + c[j][k][m] * c[m][i][l]
                                + c[k][i][m] * c[m][j][l] for m in range(d))
                        if s:
                            raise BadParameter("structure constants violate the Jacobi identity")
        self.dim = d
        self.c_exact = c
        self.c = np.array([[[float(x) for x in r] for r in s] for s in c])
        self.name = name

    @classmethod
    def so3(cls):
        return cls(_levi_civita(), name="so3")

    def killing_form(self):
        """g_ij = c_is^t c_jt^s as an exact matrix."""
        d, c = self.dim, self.c_exact
        return Matrix([[sum(c[i][s][t] * c[j][t][s] for s in range(d) for t in range(d))
                        for j in range(d)] for i in range(d)])

    @property
    def g(self):
        return self.killing_form()


@dataclass
class SimState:
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.v = np.array(self.v, dtype=float)
        if self.v.ndim != 2:
            raise DimensionMismatch("state must have shape (slots, dim)")


@dataclass
class HamiltonianSpec:
    """H(x) = x.Q.x / 2 + b.x on the flattened state."""

    variant: str
    Q: np.ndarray
    b: np.ndarray
    params: dict = field(default_factory=dict)

    @classmethod
    def rigid_body(cls, inertia=(1.0, 2.0, 3.0)):
        I = np.asarray(inertia, dtype=float)
        if I.shape != (3,) or np.any(I <= 0):
            raise BadParameter("rigid body needs three positive moments of inertia")
        return cls("rigid_body", np.diag(1.0 / I), np.zeros(3), {"inertia": I.tolist()})

    @classmethod
    def heavy_top(cls, inertia=(1.0, 2.0, 3.0), mgl=1.0, chi=(0.0, 0.0, 1.0)):
        I = np.asarray(inertia, dtype=float)
        if I.shape != (3,) or np.any(I <= 0):
            raise BadParameter("heavy top needs three positive moments of inertia")
        Q = np.zeros((6, 6))
        Q[:3, :3] = np.diag(1.0 / I)
        b = np.zeros(6)
        b[3:] = float(mgl) * np.asarray(chi, dtype=float)
        return cls("heavy_top", Q, b, {"inertia": I.tolist(), "mgl": float(mgl),
                                       "chi": list(map(float, chi))})

    @classmethod
    def quadratic(cls, Q, b=None):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DimensionMismatch("quadratic Hamiltonian needs a square matrix")
        Q = 0.5 * (Q + Q.T)
        b = np.zeros(Q.shape[0]) if b is None else np.asarray(b, dtype=float)
        return cls("quadratic", Q, b)

    def energy(self, x):
        x = np.ravel(x)
        return 0.5 * x @ self.Q @ x + self.b @ x

    def gradient(self, x):
        return self.Q @ np.ravel(x) + self.b


def tensor_array(W):
    return np.array([[[complex(x).real for x in r] for r in s] for s in W.W])


def _check(W, alg, H, x):
    n = W.size * alg.dim
    if H.Q.shape != (n, n) or H.b.shape != (n,) or np.size(x) != n:
        raise DimensionMismatch(
            f"tensor of size {W.size} over a {alg.dim}-dimensional algebra needs {n} components")


def coadjoint_rhs(W, alg, H, s):
    """dv^nu_i/dt = W_lam^{mu nu} c_ij^k (dH/dv^mu)_j v^lam_k."""
    x = s.v.ravel() if isinstance(s, SimState) else np.ravel(s)
    _check(W, alg, H, x)
    Wa = tensor_array(W)
    g = H.gradient(x).reshape(W.size, alg.dim)
    v = x.reshape(W.size, alg.dim)
    return np.einsum("lmn,ijk,mj,lk->ni", Wa, alg.c, g, v)


def quadratic_monitor(C, alg):
    """C = 1/2 g^{ij} C_{mu nu} v^mu_i v^nu_j for a symmetric coefficient matrix."""
    gi = inverse(alg.killing_form())
    G = np.array([[float(complex(x).real) for x in r] for r in gi.rows])
    if isinstance(C, Matrix):
        C = C.rows
    Cm = np.array([[float(complex(x).real) for x in r] for r in C])
    K = np.kron(Cm, G)

    def mon(x):
        x = np.ravel(x)
        return 0.5 * x @ K @ x
    return mon


@dataclass
class RunResult:
    times: np.ndarray
    trajectory: np.ndarray
    monitors: np.ndarray
    names: list
    labels: list

    def drift(self):
        """Max relative deviation of each monitor from its initial value."""
        m0 = self.monitors[0]
        scale = np.where(np.abs(m0) > 0, np.abs(m0), 1.0)
        return np.max(np.abs(self.monitors - m0), axis=0) / scale

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + self.labels + self.names)
        for t, row, mon in zip(self.times, self.trajectory, self.monitors):
            w.writerow([format(t, ".17g")] + [format(x, ".17g") for x in row]
                       + [format(x, ".17g") for x in mon])
        return buf.getvalue()


def rk4_run(W, alg, H, s0, dt, steps, monitors=(), every=1):
    """Fixed-step RK4; monitors are callables on the flattened state."""
    if not dt > 0:
        raise BadParameter("dt must be positive")
    if steps < 0 or every < 1:
        raise BadParameter("steps must be non-negative and every at least 1")
    x0 = s0.v.ravel()
    _check(W, alg, H, x0)
    traj, bad = rk4_quadratic(tensor_array(W), alg.c, H.Q, H.b, x0, float(dt), int(steps))
    if bad >= 0:
        raise NonFinite(f"state became non-finite at step {bad}", step=int(bad))
    traj = np.asarray(traj)[::every]
    times = s0.t + dt * np.arange(0, steps + 1, every)
    mons = [H.energy] + list(monitors)
    vals = np.array([[m(x) for m in mons] for x in traj])
    names = ["H"] + [f"C{k}" for k in range(1, len(mons))]
    labels = [f"v{W.label(a)}_{i + 1}" for a in range(W.size) for i in range(alg.dim)]
    return RunResult(times, traj, vals, names, labels)
