import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpx.errors import AllResonant, BadParameter
from lpx.stability import (
    EquilibriumProfile, FieldGrid, Profile, catseye_field, crmhd_current, crmhd_equilibrium,
    crmhd_minors, euler_rayleigh, island_profile, islands_with_flow, observed_order,
    pde_residual, rle, rmhd_da_conditions,
)


def grid(n=32, m=None, Ly=math.pi):
    return FieldGrid(n, m or n, Ly)


def test_grid_geometry():
    g = FieldGrid(8, 5, 2.0)
    assert g.dx == pytest.approx(2 * math.pi / 8)
    assert g.dy == pytest.approx(1.0)
    assert g.y[0] == -2.0 and g.y[-1] == pytest.approx(2.0)
    assert g.x[-1] < 2 * math.pi


def test_laplacian_exact_on_quadratics():
    g = grid(20)
    X, Y = g.mesh()
    # one-sided rows are exact on cubics in y as well
    L = g.like(Y ** 2 + 0.5 * Y ** 3).laplacian().values
    assert np.allclose(L, 2 + 3 * Y, atol=1e-9)
    L = g.like(np.cos(X)).laplacian().values
    assert np.allclose(L, -np.cos(X) * (2 - 2 * np.cos(g.dx)) / g.dx ** 2)


def test_catseye_examples():
    g = grid(16)
    u = catseye_field(2.0, g)
    X, Y = g.mesh()
    i = np.argmin(np.abs(g.x))
    j = np.argmin(np.abs(g.y))
    assert g.x[i] == 0.0
    u00 = math.log(2 * math.cosh(g.y[j]) + math.sqrt(3) * math.cos(0.0))
    assert u.values[i, j] == pytest.approx(u00, rel=1e-15)
    g_odd = FieldGrid(16, 17)
    assert catseye_field(2.0, g_odd).values[0, 8] == pytest.approx(math.log(2 + math.sqrt(3)))
    u1 = catseye_field(1.0, g).values
    assert np.allclose(u1, u1[:1, :])
    assert np.allclose(u1[0], np.log(np.cosh(g.y)))
    with pytest.raises(BadParameter):
        catseye_field(0.5, g)


def test_residual_trivial_cases():
    g = grid(16)
    assert pde_residual(g.like(np.zeros((16, 16))), lambda u: 0 * u) == (0.0, 0.0)
    _, Y = g.mesh()
    mx, rms = pde_residual(g.like(Y ** 2), lambda u: 2.0 + 0 * u)
    assert mx < 1e-10 and rms < 1e-10
    with pytest.raises(BadParameter):
        pde_residual(FieldGrid(8, 32).like(np.zeros((8, 32))), lambda u: u)


def test_catseye_second_order():
    errs = []
    for n in (32, 64, 128):
        u = catseye_field(1.5, grid(n))
        errs.append(pde_residual(u, lambda v: np.exp(-2 * v))[0])
    orders = observed_order(errs)
    assert all(abs(p - 2) < 0.2 for p in orders)


@settings(max_examples=15, deadline=None)
@given(st.floats(1.0, 3.0))
def test_catseye_solves_liouville(a):
    r64, r128 = (pde_residual(catseye_field(a, grid(n)), lambda v: np.exp(-2 * v))[0]
                 for n in (64, 128))
    assert r128 < r64 / 3


# ---------------------------------------------------------------- profiles

def test_profile_derivatives():
    p = Profile.poly(1, 2, 3) + Profile.cosh(2.0, 0.5)
    u = np.array([0.0, 1.0])
    assert np.allclose(p.d(u), 1 + 2 * u + 3 * u ** 2 + 2 * np.cosh(0.5 * u))
    assert np.allclose(p.d(u, 1), 2 + 6 * u + np.sinh(0.5 * u))
    assert np.allclose(p.d(u, 3), 0.25 * np.sinh(0.5 * u))
    assert Profile.from_json(3).d(np.array(5.0)) == 3.0
    q = Profile.from_json([["exp", 2, -1], ["poly", [0, 1]]])
    assert q.d(np.array(0.0), 1) == pytest.approx(-2 + 1)
    assert Profile.from_json(q.to_json()).terms == q.terms


def test_profile_rejects_bad_input():
    with pytest.raises(BadParameter):
        Profile([("tan", 1, 1)])
    with pytest.raises(BadParameter):
        Profile.poly(1, float("inf"))
    with pytest.raises(BadParameter):
        Profile.exp(1.0, 800.0)
    with pytest.raises(BadParameter):
        EquilibriumProfile(beta_e=0)


def test_profile_fd_crosscheck(monkeypatch):
    # corrupt the analytic derivative: construction must notice
    orig = Profile.d

    def bad(self, u, k=0):
        out = orig(self, u, k)
        return out * 1.01 if k == 1 else out
    monkeypatch.setattr(Profile, "d", bad)
    with pytest.raises(BadParameter):
        Profile.exp(1.0, 1.0)


# ------------------------------------------------------------------- CRMHD

def psi_grid(n=32):
    g = grid(n)
    X, Y = g.mesh()
    return g.like(0.3 * np.sin(X) * np.cos(Y) + 0.1 * Y)


def test_equilibrium_phi_flat():
    psi = psi_grid()
    prof = EquilibriumProfile(beta_e=0.7)
    f = crmhd_equilibrium(prof, psi)
    X, _ = psi.mesh()
    assert np.all(f["v"].values == 0)
    assert np.allclose(f["p"].values, 2 * 0.7 * X)
    assert not f["resonant"].any()


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(0.1, 3), st.floats(-2, 2), st.floats(-2, 2))
def test_equilibrium_solves_linear_system(dphi, be, a2, a3):
    if abs(dphi ** 2 / be - 1) < 1e-3:
        return
    psi = psi_grid(16)
    prof = EquilibriumProfile(phi=Profile.poly(0, dphi), a2=Profile.const(a2),
                              a3=Profile.const(a3), beta_e=be)
    f = crmhd_equilibrium(prof, psi)
    X, _ = psi.mesh()
    v, p = f["v"].values, f["p"].values
    # the two linear relations that were solved pointwise
    tol = 1e-9 * (1 + np.abs(v).max() + np.abs(p).max())
    assert np.allclose(v - p * dphi / be, -a2, atol=tol)
    assert np.allclose(p - v * dphi, -be * (a3 - 2 * X), atol=tol)


def test_all_resonant():
    prof = EquilibriumProfile(phi=Profile.poly(0, 1), beta_e=1.0)
    with pytest.raises(AllResonant):
        crmhd_equilibrium(prof, psi_grid())


def test_partial_resonance_masked():
    # phi' = psi crosses sqrt(beta) on part of the grid
    g = grid(16)
    _, Y = g.mesh()
    psi = g.like(Y)
    prof = EquilibriumProfile(phi=Profile.poly(0, 0, 0.5), beta_e=float(g.y[3] ** 2))
    f = crmhd_equilibrium(prof, psi)
    assert f["resonant"][:, 3].all() and f["resonant"][:, -4].all()
    assert f["resonant"].sum() == 2 * 16
    rep = crmhd_minors(f, prof)
    assert np.isnan(rep.fields["P2"].values[f["resonant"]]).all()
    assert not rep.masks["P3_fail"][f["resonant"]].any()


def test_minors_phi_flat():
    prof = EquilibriumProfile(beta_e=2.0)
    rep = crmhd_minors(crmhd_equilibrium(prof, psi_grid()), prof)
    assert np.all(rep.fields["P1"].values == 1)
    assert np.all(rep.fields["P2"].values == 0.5)
    assert rep.summary["phi_beta_pass"] == 1.0


def test_minors_phi_beta_flagged():
    prof = EquilibriumProfile(phi=Profile.poly(0, 1), beta_e=0.5)
    rep = crmhd_minors(crmhd_equilibrium(prof, psi_grid()), prof)
    assert rep.masks["phi_beta_fail"].all()
    assert not rep.masks["phi_bound_fail"].any()
    assert rep.summary["verdict"] == "not provably stable"


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.1, 2.0))
def test_p2_closed_form(dphi, be):
    if abs(dphi ** 2 / be - 1) < 1e-3:
        return
    prof = EquilibriumProfile(phi=Profile.poly(0.2, dphi), beta_e=be)
    rep = crmhd_minors(crmhd_equilibrium(prof, psi_grid(16)), prof)
    P2 = rep.fields["P2"].values
    assert np.allclose(P2, (1 / be) * (1 - dphi ** 2 / be), rtol=0, atol=1e-12)
    flag = dphi ** 2 > min(1.0, be)
    assert rep.masks["phi_beta_fail"].all() == flag
    assert (not rep.masks["phi_beta_fail"].any()) == (not flag)


def alfvenic_setup(n, c=2.0, be=1.0):
    # a2' = -be c a3' removes x; a1 is tuned so that the cat's eye solves the J relation
    u = catseye_field(1.5, grid(n))
    k = 1 - 1 / c ** 2
    prof = EquilibriumProfile(
        phi=Profile.poly(0, 1 / c),
        a1=Profile([("poly", [0, 0, 0.5 * (be * c) ** 2]), ("exp", -k / 2, -2.0)]),
        a2=Profile.poly(0, -be * c),
        a3=Profile.poly(0, 1),
        beta_e=be)
    return u, prof


def test_alfvenic_x_independent():
    u, prof = alfvenic_setup(32)
    f = crmhd_equilibrium(prof, u)
    ps = u.values
    lhs = f["v"].values * prof.a2.d(ps, 1) + f["p"].values * prof.a3.d(ps, 1)
    assert np.allclose(lhs, -prof.a2.d(ps) * prof.a2.d(ps, 1), atol=1e-12)


def test_alfvenic_current_second_order():
    errs = []
    for n in (32, 64, 128):
        u, prof = alfvenic_setup(n)
        f = crmhd_equilibrium(prof, u)
        J = crmhd_current(f, prof).values
        err = np.abs(J - u.laplacian().values)[:, 1:-1]
        errs.append(err.max())
    assert errs[-1] < 2e-2
    assert all(abs(p - 2) < 0.2 for p in observed_order(errs))


def test_alfvenic_p3_identity():
    c, be = 2.0, 1.0
    u, prof = alfvenic_setup(32, c, be)
    rep = crmhd_minors(crmhd_equilibrium(prof, u), prof)
    ps = u.values
    jp = (prof.a1.d(ps, 2) - prof.a2.d(ps, 1) ** 2 - prof.a2.d(ps) * prof.a2.d(ps, 2)) / (1 - 1 / c ** 2)
    assert np.allclose(rep.fields["P3"].values,
                       rep.fields["P2"].values * (1 - 1 / c ** 2) * jp, atol=1e-10)
    assert rep.summary["alfvenic_pass"] == 1.0 - rep.masks["alfvenic_fail"].mean()
    assert (rep.masks["alfvenic_fail"] == (jp < 0)).all()


def test_report_json_roundtrip():
    prof = EquilibriumProfile(phi=Profile.poly(0, 1), beta_e=0.5)
    rep = crmhd_minors(crmhd_equilibrium(prof, psi_grid(16)), prof)
    obj = json.loads(rep.dumps())
    m = obj["masks"]["phi_beta_fail"]
    assert m["shape"] == [16, 16] and m["start"] is True and m["runs"] == [256]


def test_rle():
    assert rle(np.array([[1, 1], [0, 1]])) == {"shape": [2, 2], "start": True, "runs": [2, 1, 1]}
    assert rle(np.zeros(0, bool))["runs"] == []


@given(st.lists(st.booleans(), min_size=1, max_size=60))
def test_rle_decodes(bits):
    r = rle(np.array(bits))
    out, cur = [], r["start"]
    for n in r["runs"]:
        out += [cur] * n
        cur = not cur
    assert out == bits


def test_binary_sidecar():
    g = FieldGrid(4, 5, 1.0)
    F = g.like(np.arange(20.0).reshape(4, 5))
    data, meta = F.to_binary()
    assert meta["nx"] == 4 and meta["ny"] == 5 and meta["y0"] == -1.0
    back = np.frombuffer(data, dtype="<f8").reshape(meta["nx"], meta["ny"])
    assert np.array_equal(back, F.values)
    lines = F.to_csv().splitlines()
    assert lines[0] == "x,y,value" and len(lines) == 21
    with pytest.raises(BadParameter):
        FieldGrid(3, 8)


# ----------------------------------------------------------------- islands

def test_islands_static_limit():
    f = islands_with_flow(1.0, 0.0, grid(32))
    assert np.all(f["D_Psi"].values == 0)
    assert np.all(f["Psi_prime"].values == 0)
    assert np.allclose(f["M_prime"].values, 1.0)
    rep = rmhd_da_conditions(f["profile"], f["u"])
    assert rep.summary["cond1_pass"] == 1.0
    assert rep.summary["max_abs_D_Psi"] == 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3.0), st.one_of(st.just(0.0), st.floats(1e-6, 5.0), st.floats(-5.0, -1e-6)))
def test_islands_tanh_bound(k, nu):
    f = islands_with_flow(k, nu, grid(16))
    D = f["D_Psi"].values
    assert np.all(np.abs(D) <= 1.0)
    assert np.allclose(D, f["Psi_prime"].values / f["M_prime"].values)


def test_islands_profile_consistent():
    k, nu = 1.3, 0.7
    g = grid(32)
    f = islands_with_flow(k, nu, g)
    prof = island_profile(k, nu)
    uv = f["u"].values
    assert np.allclose(prof.M.d(uv, 1), f["M_prime"].values)
    assert np.allclose(prof.Psi.d(uv, 1), f["Psi_prime"].values)
    # Upsilon' = k^2 exp(-2u) so that lap u = Upsilon'/k^2 is the cat's-eye equation
    assert np.allclose(prof.Upsilon.d(uv, 1) / k ** 2, np.exp(-2 * uv))
    rep = rmhd_da_conditions(prof, f["u"])
    assert rep.summary["max_abs_D_Psi"] < 1
    assert rep.summary["cond1_pass"] == 1.0
    assert 0.0 <= rep.summary["cond2_pass"] <= 1.0


def test_islands_bad_parameters():
    with pytest.raises(BadParameter):
        islands_with_flow(0.0, 1.0, grid(16))
    with pytest.raises(BadParameter):
        islands_with_flow(1.0, float("nan"), grid(16))
    # k / nu overflows
    with pytest.raises(BadParameter):
        islands_with_flow(1.0, 1e-310, grid(16))


# ------------------------------------------------------------------- Euler

def test_euler_examples():
    u = catseye_field(1.5, grid(16))
    mask, frac = euler_rayleigh(lambda s: np.ones_like(s), lambda s: np.ones_like(s), u)
    assert mask.all() and frac == 1.0
    mask, frac = euler_rayleigh(lambda s: np.ones_like(s), lambda s: -np.ones_like(s), u)
    assert not mask.any() and frac == 0.0
    mask, frac = euler_rayleigh(lambda s: s, lambda s: np.ones_like(s), u)
    assert frac == pytest.approx(float((u.values >= 0).mean()))
