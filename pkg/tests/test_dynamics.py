import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpx.casimir import quadratic_casimirs_findim
from lpx.dynamics import (
    HamiltonianSpec, LieAlgebraSpec, SimState, coadjoint_rhs, quadratic_monitor, rk4_run,
)
from lpx.errors import BadParameter, DimensionMismatch, NonFinite
from lpx.exactfield import Matrix
from lpx.extension import abelian, append_semisimple, crmhd, rmhd

SO3 = LieAlgebraSpec.so3()
RIGID = append_semisimple(abelian(0))
TOP = rmhd()


def euler_rhs(l, I):
    I1, I2, I3 = I
    return np.array([(1 / I2 - 1 / I3) * l[1] * l[2],
                     (1 / I3 - 1 / I1) * l[2] * l[0],
                     (1 / I1 - 1 / I2) * l[0] * l[1]])


def test_so3_structure():
    assert SO3.dim == 3
    assert SO3.killing_form() == Matrix.diag([-2, -2, -2])
    assert SO3.c[0, 1, 2] == 1 and SO3.c[1, 0, 2] == -1


def test_spec_rejects_bad_constants():
    c = np.zeros((2, 2, 2)).tolist()
    c[0][1][0] = 1
    with pytest.raises(BadParameter):
        LieAlgebraSpec(c)
    # [e1,e2] = e1, [e2,e3] = e2: antisymmetric, Jacobi sum is -e1
    c = np.zeros((3, 3, 3))
    c[0, 1, 0], c[1, 0, 0] = 1, -1
    c[1, 2, 1], c[2, 1, 1] = 1, -1
    with pytest.raises(BadParameter):
        LieAlgebraSpec(c.tolist())
    with pytest.raises(DimensionMismatch):
        LieAlgebraSpec([[[0, 0]], [[0, 0]]])


def test_rigid_body_example():
    H = HamiltonianSpec.rigid_body((1, 2, 3))
    d = coadjoint_rhs(RIGID, SO3, H, SimState([[0, 1, 1]]))
    assert d[0, 0] == pytest.approx(1 / 6)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3),
       st.lists(st.floats(0.5, 4), min_size=3, max_size=3))
def test_rigid_body_is_euler(l, I):
    H = HamiltonianSpec.rigid_body(I)
    d = coadjoint_rhs(RIGID, SO3, H, SimState([l]))
    assert np.allclose(d[0], euler_rhs(np.array(l), I), atol=1e-12)


def test_heavy_top_zero_gravity_advection():
    I = (1.0, 2.0, 3.0)
    H = HamiltonianSpec.heavy_top(I, mgl=0.0)
    rng = np.random.default_rng(0)
    l, v = rng.normal(size=3), rng.normal(size=3)
    d = coadjoint_rhs(TOP, SO3, H, SimState([l, v]))
    assert np.allclose(d[1], np.cross(l / np.array(I), v))
    assert np.allclose(d[0], euler_rhs(l, I))


def test_zero_hamiltonian():
    H = HamiltonianSpec.quadratic(np.zeros((6, 6)))
    s = SimState(np.random.default_rng(1).normal(size=(2, 3)))
    assert np.all(coadjoint_rhs(TOP, SO3, H, s) == 0)
    res = rk4_run(TOP, SO3, H, s, 0.1, 20)
    assert np.all(res.trajectory == s.v.ravel())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    H = HamiltonianSpec.heavy_top(rng.uniform(0.5, 3, 3), rng.uniform(-2, 2), rng.normal(size=3))
    x = rng.normal(size=6)
    h = 1e-5
    fd = np.array([(H.energy(x + h * e) - H.energy(x - h * e)) / (2 * h) for e in np.eye(6)])
    assert np.allclose(fd, H.gradient(x), atol=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_rhs_bilinear(seed):
    rng = np.random.default_rng(seed)
    Q = rng.normal(size=(12, 12))
    H = HamiltonianSpec.quadratic(Q)
    x = rng.normal(size=(4, 3))
    W = crmhd()
    d1 = coadjoint_rhs(W, SO3, H, SimState(x))
    d2 = coadjoint_rhs(W, SO3, H, SimState(2 * x))
    assert np.allclose(d2, 4 * d1)


def test_dimension_mismatch():
    H = HamiltonianSpec.rigid_body()
    with pytest.raises(DimensionMismatch):
        coadjoint_rhs(TOP, SO3, H, SimState([[1, 0, 0], [0, 1, 0]]))
    with pytest.raises(DimensionMismatch):
        SimState([1, 2, 3])


def test_bad_parameters():
    with pytest.raises(BadParameter):
        HamiltonianSpec.rigid_body((1, 0, 2))
    H = HamiltonianSpec.rigid_body()
    with pytest.raises(BadParameter):
        rk4_run(RIGID, SO3, H, SimState([[1, 0, 0]]), 0.0, 10)


def unit_state(seed, slots):
    x = np.random.default_rng(seed).normal(size=(slots, 3))
    return SimState(x / np.linalg.norm(x))


def test_rigid_body_norm_drift():
    H = HamiltonianSpec.rigid_body((1, 2, 3))
    res = rk4_run(RIGID, SO3, H, unit_state(3, 1), 1e-3, 10 ** 4,
                  monitors=[lambda x: float(x @ x)])
    assert res.drift().max() < 1e-8


def test_heavy_top_casimirs_conserved():
    H = HamiltonianSpec.heavy_top((1, 2, 3), mgl=1.0)
    Cs = quadratic_casimirs_findim(TOP, SO3)
    assert len(Cs) == 2
    mons = [quadratic_monitor(C, SO3) for C in Cs]
    mons += [lambda x: float(x[:3] @ x[3:]), lambda x: float(x[3:] @ x[3:])]
    res = rk4_run(TOP, SO3, H, unit_state(5, 2), 1e-3, 10 ** 4, monitors=mons)
    assert res.drift().max() < 1e-8
    # the returned Casimirs are combinations of l.v and |v|^2
    pts = np.random.default_rng(1).normal(size=(6, 6))
    A = np.array([[p[:3] @ p[3:], p[3:] @ p[3:]] for p in pts])
    for m in mons[:2]:
        y = np.array([m(p) for p in pts])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        assert np.allclose(A @ coef, y)


def test_intermediate_axis_instability():
    I = np.array([1.0, 2.0, 3.0])
    H = HamiltonianSpec.rigid_body(I)

    def jac(l0):
        h = 1e-6
        cols = []
        for e in np.eye(3):
            fp = coadjoint_rhs(RIGID, SO3, H, SimState([l0 + h * e]))[0]
            fm = coadjoint_rhs(RIGID, SO3, H, SimState([l0 - h * e]))[0]
            cols.append((fp - fm) / (2 * h))
        return np.array(cols).T

    ev = np.linalg.eigvals(jac(np.array([0.0, 1.0, 0.0])))
    assert ev.real.max() > 0.1
    for axis in (0, 2):
        ev = np.linalg.eigvals(jac(np.eye(3)[axis]))
        assert np.abs(ev.real).max() < 1e-6


def test_blowup_reports_step():
    # two-dimensional non-abelian algebra: the flow runs off to infinity
    c = np.zeros((2, 2, 2))
    c[0, 1, 1], c[1, 0, 1] = 1, -1
    alg = LieAlgebraSpec(c.tolist())
    H = HamiltonianSpec.quadratic(np.eye(2) * 50)
    with pytest.raises(NonFinite) as ei:
        rk4_run(RIGID, alg, H, SimState([[1.0, 1.0]]), 0.5, 2000)
    assert ei.value.step > 0


def test_csv_layout():
    H = HamiltonianSpec.heavy_top()
    mons = [quadratic_monitor(C, SO3) for C in quadratic_casimirs_findim(TOP, SO3)]
    res = rk4_run(TOP, SO3, H, unit_state(0, 2), 1e-2, 10, monitors=mons, every=5)
    lines = res.to_csv().splitlines()
    assert lines[0] == "t,v0_1,v0_2,v0_3,v1_1,v1_2,v1_3,H,C1,C2"
    assert len(lines) == 1 + 3
    assert float(lines[-1].split(",")[0]) == pytest.approx(0.1)


def test_deterministic():
    H = HamiltonianSpec.heavy_top()
    a = rk4_run(TOP, SO3, H, unit_state(2, 2), 1e-3, 500).trajectory
    b = rk4_run(TOP, SO3, H, unit_state(2, 2), 1e-3, 500).trajectory
    assert np.array_equal(a, b)
