"""Grid evaluation of equilibria and formal-stability criteria.

Fields live on x in [0, 2pi) (periodic) times y in [-Ly, Ly].  Laplacians
use the centered five-point stencil, with one-sided second-order
differences on the y boundary rows.
"""

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AllResonant, BadParameter, DimensionMismatch

__all__ = [
    "FieldGrid", "Profile", "EquilibriumProfile", "StabilityReport",
    "catseye_field", "pde_residual", "crmhd_equilibrium", "crmhd_current",
    "crmhd_minors", "islands_with_flow", "rmhd_da_conditions", "euler_rayleigh",
    "rle", "observed_order",
]

RESONANCE_TOL = 1e-12


# ---------------------------------------------------------------------- grid

@dataclass
class FieldGrid:
    """Values indexed [i, j] at (x_i, y_j)."""

    nx: int
    ny: int
    Ly: float = math.pi
    values: np.ndarray = None

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise BadParameter("grid needs at least 4 points in each direction")
        if not self.Ly > 0:
            raise BadParameter("Ly must be positive")
        if self.values is None:
            self.values = np.zeros((self.nx, self.ny))
        else:
            self.values = np.asarray(self.values, dtype=float)
            if self.values.shape != (self.nx, self.ny):
                raise DimensionMismatch(f"values must have shape ({self.nx}, {self.ny})")

    @property
    def dx(self):
        return 2 * math.pi / self.nx

    @property
    def dy(self):
        return 2 * self.Ly / (self.ny - 1)

    @property
    def x(self):
        return np.arange(self.nx) * self.dx

    @property
    def y(self):
        return -self.Ly + np.arange(self.ny) * self.dy

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def like(self, values):
        return FieldGrid(self.nx, self.ny, self.Ly, values)

    def laplacian(self):
        u = self.values
        dx2, dy2 = self.dx ** 2, self.dy ** 2
        uxx = (np.roll(u, -1, 0) - 2 * u + np.roll(u, 1, 0)) / dx2
        uyy = np.empty_like(u)
        uyy[:, 1:-1] = (u[:, 2:] - 2 * u[:, 1:-1] + u[:, :-2]) / dy2
        uyy[:, 0] = (2 * u[:, 0] - 5 * u[:, 1] + 4 * u[:, 2] - u[:, 3]) / dy2
        uyy[:, -1] = (2 * u[:, -1] - 5 * u[:, -2] + 4 * u[:, -3] - u[:, -4]) / dy2
        return self.like(uxx + uyy)

    def grad_sq(self):
        u = self.values
        ux = (np.roll(u, -1, 0) - np.roll(u, 1, 0)) / (2 * self.dx)
        uy = np.gradient(u, self.dy, axis=1, edge_order=2)
        return self.like(ux ** 2 + uy ** 2)

    def to_csv(self):
        X, Y = self.mesh()
        buf = io.StringIO()
        buf.write("x,y,value\n")
        for i in range(self.nx):
            for j in range(self.ny):
                buf.write(f"{X[i, j]:.17g},{Y[i, j]:.17g},{self.values[i, j]:.17g}\n")
        return buf.getvalue()

    def to_binary(self):
        """Row-major float64 bytes plus the JSON sidecar."""
        meta = {"nx": self.nx, "ny": self.ny, "x0": 0.0, "dx": self.dx,
                "y0": -self.Ly, "dy": self.dy}
        return np.ascontiguousarray(self.values, dtype="<f8").tobytes(), meta


# ------------------------------------------------------------------ profiles

_KINDS = ("poly", "exp", "cosh", "sinh")


class Profile:
    """Sum of analytic terms in one variable.

    Terms are ``("poly", [c0, c1, ...])`` or ``(kind, A, b)`` meaning
    ``A * kind(b * u)`` for kind in exp, cosh, sinh.
    """

    def __init__(self, terms=()):
        norm = []
        for t in terms:
            kind = t[0]
            if kind not in _KINDS:
                raise BadParameter(f"unknown profile kind {kind!r}")
            if kind == "poly":
                norm.append(("poly", tuple(float(c) for c in t[1])))
            else:
                norm.append((kind, float(t[1]), float(t[2])))
        if not all(np.all(np.isfinite(t[1:] if t[0] != "poly" else t[1])) for t in norm):
            raise BadParameter("profile coefficients must be finite")
        self.terms = tuple(norm)
        self._check()

    @classmethod
    def poly(cls, *coeffs):
        return cls([("poly", coeffs)])

    @classmethod
    def const(cls, c):
        return cls.poly(c)

    @classmethod
    def exp(cls, A=1.0, b=1.0):
        return cls([("exp", A, b)])

    @classmethod
    def cosh(cls, A=1.0, b=1.0):
        return cls([("cosh", A, b)])

    @classmethod
    def sinh(cls, A=1.0, b=1.0):
        return cls([("sinh", A, b)])

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, (int, float)):
            return cls.const(obj)
        return cls([tuple(t) for t in obj])

    def to_json(self):
        return [list(t) if t[0] != "poly" else ["poly", list(t[1])] for t in self.terms]

    def __add__(self, other):
        return Profile(self.terms + other.terms)

    def d(self, u, k=0):
        """k-th derivative at u (array or scalar)."""
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        for t in self.terms:
            if t[0] == "poly":
                c = np.array(t[1])
                for _ in range(k):
                    c = c[1:] * np.arange(1, len(c)) if len(c) > 1 else np.zeros(1)
                out = out + np.polynomial.polynomial.polyval(u, c)
            else:
                kind, A, b = t
                s = A * b ** k
                if kind == "exp":
                    out = out + s * np.exp(b * u)
                elif (kind == "cosh") == (k % 2 == 0):
                    out = out + s * np.cosh(b * u)
                else:
                    out = out + s * np.sinh(b * u)
        return out

    def __call__(self, u):
        return self.d(u, 0)

    def _check(self):
        pts = np.array([-0.7, 0.1, 0.9])
        h = 1e-4
        with np.errstate(all="ignore"):
            self._check_fd(pts, h)

    def _check_fd(self, pts, h):
        for k in range(3):
            fd = (self.d(pts + h, k) - self.d(pts - h, k)) / (2 * h)
            ex = self.d(pts, k + 1)
            # allow for cancellation in the difference quotient itself
            noise = 1e3 * np.finfo(float).eps * np.abs(self.d(pts, k)) / h
            scale = np.maximum(1.0, np.abs(ex))
            if not np.all(np.abs(fd - ex) <= 1e-6 * scale + noise):
                raise BadParameter("profile derivatives are inconsistent")


@dataclass
class EquilibriumProfile:
    """Profile functions; unused ones may be left at zero."""

    phi: Profile = field(default_factory=lambda: Profile.const(0))
    a1: Profile = field(default_factory=lambda: Profile.const(0))
    a2: Profile = field(default_factory=lambda: Profile.const(0))
    a3: Profile = field(default_factory=lambda: Profile.const(0))
    beta_e: float = 1.0
    Psi: Profile = field(default_factory=lambda: Profile.const(0))
    M: Profile = field(default_factory=lambda: Profile.poly(0, 1))
    Upsilon: Profile = field(default_factory=lambda: Profile.const(0))

    def __post_init__(self):
        if not self.beta_e > 0:
            raise BadParameter("beta_e must be positive")

    @classmethod
    def from_json(cls, obj):
        kw = {k: Profile.from_json(v) for k, v in obj.items() if k != "beta_e"}
        if "beta_e" in obj:
            kw["beta_e"] = float(obj["beta_e"])
        return cls(**kw)


def rle(mask):
    """Run-length encoding of a boolean array in row-major order."""
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return {"shape": list(np.shape(mask)), "start": False, "runs": []}
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    return {"shape": list(np.shape(mask)), "start": bool(flat[0]),
            "runs": np.diff(bounds).astype(int).tolist()}


@dataclass
class StabilityReport:
    fields: dict
    masks: dict
    summary: dict

    def to_json(self):
        return {"summary": self.summary,
                "masks": {k: rle(v) for k, v in self.masks.items()}}

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


def _fraction(mask, valid=None):
    if valid is None:
        valid = np.ones_like(mask, dtype=bool)
    n = int(valid.sum())
    return float((mask & valid).sum()) / n if n else 0.0


# ----------------------------------------------------------------- cat's eye

def catseye_field(a, grid):
    """u = ln(a cosh y + sqrt(a^2 - 1) cos x) sampled on ``grid``."""
    if not a >= 1:
        raise BadParameter("cat's eye parameter must satisfy a >= 1")
    X, Y = grid.mesh()
    b = math.sqrt(a * a - 1.0)
    return grid.like(np.log(a * np.cosh(Y) + b * np.cos(X)))


def pde_residual(u, rhs):
    """(max, rms) of lap(u) - rhs(u) over rows away from the y boundary."""
    if u.nx < 16 or u.ny < 16:
        raise BadParameter("residual needs at least a 16 x 16 grid")
    r = u.laplacian().values - np.asarray(rhs(u.values), dtype=float)
    r = r[:, 1:-1]
    return float(np.max(np.abs(r))), float(np.sqrt(np.mean(r ** 2)))


def observed_order(errors):
    """log2 ratios between successive errors under grid halving."""
    return [math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)]


# --------------------------------------------------------------------- CRMHD

def crmhd_equilibrium(profile, psi):
    """Solve for (v_e, p_e) pointwise; acoustic-resonant points are masked."""
    be = profile.beta_e
    X, _ = psi.mesh()
    ps = psi.values
    dphi = profile.phi.d(ps, 1)
    a2 = profile.a2.d(ps)
    a3 = profile.a3.d(ps)
    den = dphi ** 2 / be - 1.0
    scale = np.maximum(1.0, dphi ** 2 / be)
    resonant = np.abs(den) < RESONANCE_TOL * scale
    if resonant.all():
        raise AllResonant("every grid point sits on the acoustic resonance |phi'|^2 = beta_e")
    safe = np.where(resonant, 1.0, den)
    v = (a2 + (a3 - 2 * X) * dphi) / safe
    p = (a2 * dphi + be * (a3 - 2 * X)) / safe
    v[resonant] = np.nan
    p[resonant] = np.nan
    phi_e = psi.like(profile.phi.d(ps))
    omega = phi_e.laplacian()
    return {"v": psi.like(v), "p": psi.like(p), "omega": omega, "psi": psi,
            "resonant": resonant}


def crmhd_current(fields, profile):
    """Current from the equilibrium relation (right-hand side of the J relation)."""
    ps = fields["psi"].values
    v, p, w = fields["v"].values, fields["p"].values, fields["omega"].values
    ph = profile.phi
    return fields["psi"].like(
        profile.a1.d(ps, 1) + v * profile.a2.d(ps, 1) + p * profile.a3.d(ps, 1)
        + w * ph.d(ps, 1) - p * v * ph.d(ps, 2) / profile.beta_e)


def crmhd_minors(fields, profile):
    """Principal minors of the (dv, dp, dpsi) block of the second variation."""
    be = profile.beta_e
    psi = fields["psi"]
    ps = psi.values
    v, p, w = fields["v"].values, fields["p"].values, fields["omega"].values
    ph = profile.phi
    d1, d2, d3 = ph.d(ps, 1), ph.d(ps, 2), ph.d(ps, 3)
    lap_d1 = psi.like(d1).laplacian().values
    xi = (profile.a1.d(ps, 2) + v * profile.a2.d(ps, 2) + p * profile.a3.d(ps, 2)
          + w * d2 - p * v * d3 / be + d1 * lap_d1)
    A = profile.a2.d(ps, 1) - p * d2 / be
    B = profile.a3.d(ps, 1) - v * d2 / be
    P1 = np.ones_like(ps)
    P2 = (1.0 / be) * (1.0 - d1 ** 2 / be)
    P3 = P2 * (xi - A ** 2) - (B + A * d1 / be) ** 2
    res = fields["resonant"]
    valid = ~res
    for arr in (P2, P3):
        arr[res] = np.nan
    masks = {
        "resonant": res,
        "phi_bound_fail": (np.abs(d1) > 1.0) & valid,
        "phi_beta_fail": (d1 ** 2 > min(1.0, be)) & valid,
        "P3_fail": ~(P3 >= 0) & valid,
    }
    summary = {
        "points": int(ps.size),
        "resonant_fraction": _fraction(res),
        "phi_bound_pass": 1.0 - _fraction(masks["phi_bound_fail"], valid),
        "phi_beta_pass": 1.0 - _fraction(masks["phi_beta_fail"], valid),
        "P3_pass": 1.0 - _fraction(masks["P3_fail"], valid),
    }
    alf = _alfvenic_speed(ph)
    if alf is not None and abs(alf * alf - 1.0) > 1e-12:
        c2 = alf * alf
        a2v, a2p, a2pp = profile.a2.d(ps), profile.a2.d(ps, 1), profile.a2.d(ps, 2)
        jp = (profile.a1.d(ps, 2) - a2p ** 2 - a2v * a2pp) / (1.0 - 1.0 / c2)
        masks["alfvenic_fail"] = (jp < 0) & valid
        summary["alfvenic_pass"] = 1.0 - _fraction(masks["alfvenic_fail"], valid)
    all_ok = valid & ~masks["phi_beta_fail"] & ~masks["P3_fail"]
    summary["provably_stable_fraction"] = _fraction(all_ok, valid)
    summary["verdict"] = ("provably stable" if summary["provably_stable_fraction"] == 1.0
                          else "not provably stable")
    return StabilityReport({"P1": psi.like(P1), "P2": psi.like(P2), "P3": psi.like(P3)},
                           masks, summary)


def _alfvenic_speed(phi):
    """c when phi(psi) = psi / c exactly (linear profile), else None."""
    if len(phi.terms) != 1 or phi.terms[0][0] != "poly":
        return None
    c = phi.terms[0][1]
    if len(c) < 2 or any(x != 0 for x in c[2:]) or c[1] == 0:
        return None
    return 1.0 / c[1]


# --------------------------------------------------------------------- RMHD

def islands_with_flow(k, nu, grid, a=1.5):
    """Cat's-eye flux variable with M' = k cosh(nu u) and Psi' = k sinh(nu u)."""
    if not k > 0:
        raise BadParameter("k must be positive")
    if not math.isfinite(nu):
        raise BadParameter("nu must be finite")
    u = catseye_field(a, grid)
    uv = u.values
    Mp = k * np.cosh(nu * uv)
    Pp = k * np.sinh(nu * uv)
    return {"u": u, "M_prime": grid.like(Mp), "Psi_prime": grid.like(Pp),
            "D_Psi": grid.like(np.tanh(nu * uv)), "profile": island_profile(k, nu)}


def island_profile(k, nu):
    if nu == 0:
        Psi = Profile.const(0)
        M = Profile.poly(0, k)
    else:
        Psi = Profile.cosh(k / nu, nu)
        M = Profile.sinh(k / nu, nu)
    return EquilibriumProfile(Psi=Psi, M=M, Upsilon=Profile.exp(-0.5 * k * k, -2.0))


def rmhd_da_conditions(profile, u, tol=1e-12):
    """Pointwise |D Psi| <= 1 and the second sufficient condition."""
    uv = u.values
    Mp, Mpp = profile.M.d(uv, 1), profile.M.d(uv, 2)
    Pp, Ppp = profile.Psi.d(uv, 1), profile.Psi.d(uv, 2)
    Up, Upp = profile.Upsilon.d(uv, 1), profile.Upsilon.d(uv, 2)
    masked = np.abs(Mp) < tol
    Ms = np.where(masked, 1.0, Mp)
    DPsi = Pp / Ms
    D2Psi = (Ppp * Ms - Pp * Mpp) / Ms ** 3
    D2Ups = (Upp * Ms - Up * Mpp) / Ms ** 3
    lap_DPsi = u.like(DPsi).laplacian().values
    lap_Psi = u.like(profile.Psi.d(uv)).laplacian().values
    cond2 = DPsi * lap_DPsi + lap_Psi * D2Psi + D2Ups
    valid = ~masked
    fail1 = (np.abs(DPsi) > 1.0) & valid
    fail2 = ~(cond2 >= 0) & valid
    summary = {
        "points": int(uv.size),
        "masked_fraction": _fraction(masked),
        "cond1_pass": 1.0 - _fraction(fail1, valid),
        "cond2_pass": 1.0 - _fraction(fail2, valid),
        "max_abs_D_Psi": float(np.max(np.abs(DPsi[valid]))) if valid.any() else 0.0,
    }
    ok = valid & ~fail1 & ~fail2
    summary["verdict"] = ("provably stable" if ok.sum() == valid.sum()
                          else "not provably stable")
    return StabilityReport({"D_Psi": u.like(DPsi), "cond2": u.like(cond2)},
                           {"masked": masked, "cond1_fail": fail1, "cond2_fail": fail2},
                           summary)


def euler_rayleigh(dPsi, dV, u):
    """Mask of points with Psi'(u) V'(u) >= 0 and the pass fraction."""
    uv = u.values
    mask = np.asarray(dPsi(uv)) * np.asarray(dV(uv)) >= 0
    mask = np.broadcast_to(mask, uv.shape)
    return mask, float(mask.mean())
