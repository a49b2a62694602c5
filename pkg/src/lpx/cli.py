"""Command-line front end.

stdout carries data only; diagnostics go to stderr as a single line.

Exit codes:
  0  success
  1  tensor fails an axiom (validate) or is invalid
  2  unreadable input, parse error, bad parameter, dimension mismatch
  3  other algebraic failure (not semidirect, not semisimple, ...)
  4  unknown classification case
  5  coextension solvability or coextension law fails
  6  simulation produced non-finite values
  7  every grid point is acoustic-resonant
"""

import json
import sys

import click
import numpy as np

from . import BACKEND
from . import casimir as cas
from . import dynamics as dyn
from . import extension as ext
from . import normalize as nrm
from . import stability as stb
from .errors import BadParameter, InvalidTensor, LpxError, ParseError


def _read_text(path):
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None


def _read_json(path):
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc}") from None


def _load_tensor(path):
    return ext.ExtensionTensor.from_json(_read_json(path))


def _emit(text, out):
    if not text.endswith("\n"):
        text += "\n"
    if out in (None, "-"):
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True)


def _floats(text, n=None, name="value"):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise BadParameter(f"{name} must be a comma-separated list of numbers") from None
    if n is not None and len(vals) != n:
        raise BadParameter(f"{name} needs {n} components")
    return vals


def common(f):
    f = click.option("--out", default=None, help="Output path (default stdout).")(f)
    f = click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json",
                     show_default=True)(f)
    f = click.option("--seed", default=0, show_default=True, type=int,
                     help="Seed for every randomized step.")(f)
    return f


# config keys follow the long flag names; a few flags bind to other parameter names
_CONFIG_ALIASES = {"format": "fmt", "order": "n", "I": "inertia", "coextension": "show_co"}


def _config_map(obj):
    out = {}
    for k, v in obj.items():
        k = k.lstrip("-").replace("-", "_")
        out[_CONFIG_ALIASES.get(k, k)] = _config_map(v) if isinstance(v, dict) else v
    return out


@click.group()
@click.option("--config", "config", default=None,
              help="JSON file of default option values, keyed by subcommand.")
@click.pass_context
def cli(ctx, config):
    """Exact algebra of Lie-Poisson bracket extensions."""
    if config:
        cfg = _read_json(config)
        if not isinstance(cfg, dict):
            raise ParseError("config must be a JSON object")
        ctx.default_map = _config_map(cfg)


@cli.command()
@click.argument("path")
@common
def validate(path, seed, fmt, out):
    """Check symmetry, commutation and Jacobi for a tensor file."""
    rep = ext.validate(_load_tensor(path))
    if fmt == "json":
        _emit(_dump(rep.to_json()), out)
    else:
        lines = []
        for r in rep.results:
            tail = "" if r.ok else f"  first violation at {list(r.first_violation)}"
            lines.append(f"{r.name}: {'ok' if r.ok else 'FAIL'}{tail}")
        _emit("\n".join(lines), out)
    if not rep.ok:
        bad = next(r for r in rep.results if not r.ok)
        raise InvalidTensor(f"{bad.name} violated at {list(bad.first_violation)}")


@cli.command()
@click.argument("path")
@common
def classify(path, seed, fmt, out):
    """Split into blocks and identify each against the catalog."""
    res = nrm.classify(_load_tensor(path), seed=seed)
    if fmt == "json":
        _emit(_dump(res.to_json()), out)
    else:
        lines = []
        for b in res.blocks:
            kind = "semidirect" if b.semidirect else "solvable"
            size = b.block.size if b.block is not None else "?"
            lines.append(f"{b.case_id} ({kind}, size {size})")
        _emit("\n".join(lines), out)


@cli.command()
@click.argument("path")
@click.option("--coextension", "show_co", is_flag=True,
              help="Also print the coextension of a lower-triangular tensor.")
@common
def casimirs(path, show_co, seed, fmt, out):
    """Casimir families of a tensor."""
    W = _load_tensor(path)
    fams = cas.casimir_families(W, seed=seed)
    co = cas.coextension(W) if show_co else None
    if fmt == "json":
        obj = {"families": [f.to_json() for f in fams]}
        if co is not None:
            obj["coextension"] = co.to_json()
        _emit(_dump(obj), out)
    else:
        lines = [f"C{f.family}: {f}" for f in fams]
        if co is not None:
            for nu in range(1, len(co.coW) + 1):
                lines.append(f"coW({nu}) = {co.matrix(nu).to_strings()}")
        _emit("\n".join(lines), out)


@cli.command()
@click.option("--order", "n", required=True, type=int, help="Order n of the extension.")
@click.option("--semidirect", is_flag=True)
@common
def leibniz(n, semidirect, seed, fmt, out):
    """Emit the Leibniz extension tensor of order n."""
    if n < 1:
        raise BadParameter("order must be at least 1")
    W = ext.leibniz(n, semidirect=semidirect)
    if fmt == "json":
        _emit(_dump(W.to_json()), out)
    else:
        _emit(repr(W), out)


@cli.command()
@common
def catalog(seed, fmt, out):
    """List the built-in n = 3 and n = 4 normal forms."""
    ents = nrm.catalog()
    if fmt == "json":
        _emit(_dump([{"case_id": e.case_id, "tensor": e.tensor.to_json(),
                      "fingerprint": e.fingerprint.to_json()} for e in ents]), out)
    else:
        _emit("\n".join(f"{e.case_id}  n={e.tensor.n}" for e in ents), out)


_SYSTEMS = ("rigid-body", "heavy-top")


@cli.command()
@click.option("--system", type=click.Choice(_SYSTEMS), default="rigid-body", show_default=True)
@click.option("--I", "inertia", default="1,2,3", show_default=True, help="Moments of inertia.")
@click.option("--mgl", default=1.0, show_default=True, type=float)
@click.option("--chi", default="0,0,1", show_default=True)
@click.option("--init", "init", default=None,
              help="Initial state, comma-separated; default is a seeded unit vector.")
@click.option("--dt", default=1e-3, show_default=True, type=float)
@click.option("--steps", default=10000, show_default=True, type=int)
@click.option("--every", default=1, show_default=True, type=int)
@common
def simulate(system, inertia, mgl, chi, init, dt, steps, every, seed, fmt, out):
    """RK4 integration with energy and quadratic Casimir monitors."""
    I = _floats(inertia, 3, "--I")
    alg = dyn.LieAlgebraSpec.so3()
    if system == "rigid-body":
        W = ext.append_semisimple(ext.abelian(0))
        H = dyn.HamiltonianSpec.rigid_body(I)
    else:
        W = ext.rmhd()
        H = dyn.HamiltonianSpec.heavy_top(I, mgl, _floats(chi, 3, "--chi"))
    dim = W.size * alg.dim
    if init is None:
        x0 = np.random.default_rng(seed).normal(size=dim)
    else:
        x0 = np.array(_floats(init, dim, "--init"))
    norm = np.linalg.norm(x0)
    if not norm > 0:
        raise BadParameter("initial state must be nonzero")
    if init is None:
        x0 = x0 / norm
    mons = [dyn.quadratic_monitor(C, alg) for C in cas.quadratic_casimirs_findim(W, alg)]
    res = dyn.rk4_run(W, alg, H, dyn.SimState(x0.reshape(W.size, alg.dim)), dt, steps,
                      monitors=mons, every=every)
    drift = res.drift()
    if fmt == "json":
        _emit(_dump({"system": system, "backend": BACKEND,
                     "columns": ["t"] + res.labels + res.names,
                     "drift": dict(zip(res.names, map(float, drift))),
                     "final": res.trajectory[-1].tolist()}), out)
    else:
        _emit(res.to_csv(), out)
    click.echo("drift " + " ".join(f"{n}={d:.3e}" for n, d in zip(res.names, drift)), err=True)


@cli.group()
def stability():
    """Grid equilibria and stability criteria."""


def _grid(nx, ny, Ly):
    return stb.FieldGrid(nx, ny, Ly)


def grid_options(f):
    f = click.option("--Ly", "Ly", default=float(np.pi), show_default=True, type=float)(f)
    f = click.option("--ny", default=64, show_default=True, type=int)(f)
    f = click.option("--nx", default=64, show_default=True, type=int)(f)
    f = click.option("--a", "a", default=1.5, show_default=True, type=float,
                     help="Cat's-eye parameter.")(f)
    return f


def _emit_field(F, fmt, out):
    if fmt == "text":
        _emit(F.to_csv(), out)
        return
    if out in (None, "-"):
        raise BadParameter("binary field output needs --out")
    data, meta = F.to_binary()
    with open(out, "wb") as fh:
        fh.write(data)
    with open(out + ".json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(meta, sort_keys=True) + "\n")


def _emit_report(rep, fmt, out):
    if fmt == "json":
        _emit(_dump(rep.to_json()), out)
    else:
        _emit("\n".join(f"{k}: {v}" for k, v in sorted(rep.summary.items())), out)


@stability.command()
@grid_options
@common
def catseye(a, nx, ny, Ly, seed, fmt, out):
    """Sample the cat's-eye field (text: x,y,value CSV; json: binary plus sidecar)."""
    _emit_field(stb.catseye_field(a, _grid(nx, ny, Ly)), fmt, out)


@stability.command()
@grid_options
@click.option("--levels", default=3, show_default=True, type=int)
@common
def residual(a, nx, ny, Ly, levels, seed, fmt, out):
    """Convergence of the cat's-eye residual under grid doubling."""
    if levels < 1:
        raise BadParameter("levels must be positive")
    rows = []
    for k in range(levels):
        g = _grid(nx * 2 ** k, ny * 2 ** k, Ly)
        mx, l2 = stb.pde_residual(stb.catseye_field(a, g), lambda u: np.exp(-2 * u))
        rows.append({"nx": g.nx, "ny": g.ny, "max": mx, "l2": l2})
    order = stb.observed_order([r["max"] for r in rows])
    if fmt == "json":
        _emit(_dump({"levels": rows, "order": order}), out)
    else:
        _emit("\n".join(f"{r['nx']}x{r['ny']} max={r['max']:.6e} l2={r['l2']:.6e}"
                        for r in rows) + "\norder " + " ".join(f"{o:.4f}" for o in order), out)


@stability.command()
@click.argument("profile")
@grid_options
@common
def crmhd(profile, a, nx, ny, Ly, seed, fmt, out):
    """Minors and conditions for a profile JSON on the cat's-eye flux field."""
    prof = stb.EquilibriumProfile.from_json(_read_json(profile))
    psi = stb.catseye_field(a, _grid(nx, ny, Ly))
    rep = stb.crmhd_minors(stb.crmhd_equilibrium(prof, psi), prof)
    _emit_report(rep, fmt, out)


@stability.command()
@click.option("--k", "k", default=1.0, show_default=True, type=float)
@click.option("--nu", default=0.5, show_default=True, type=float)
@grid_options
@common
def islands(k, nu, a, nx, ny, Ly, seed, fmt, out):
    """Islands with flow and the dynamical-accessibility conditions."""
    isl = stb.islands_with_flow(k, nu, _grid(nx, ny, Ly), a=a)
    rep = stb.rmhd_da_conditions(isl["profile"], isl["u"])
    _emit_report(rep, fmt, out)


@stability.command()
@click.option("--dpsi", default="[[\"poly\", [0, 1]]]", show_default=True,
              help="Profile JSON for Psi'(u).")
@click.option("--dv", default="[[\"poly\", [0, 1]]]", show_default=True,
              help="Profile JSON for V'(u).")
@grid_options
@common
def euler(dpsi, dv, a, nx, ny, Ly, seed, fmt, out):
    """Sign condition Psi'(u) V'(u) >= 0 on the cat's-eye field."""
    try:
        fp, fv = (stb.Profile.from_json(json.loads(s)) for s in (dpsi, dv))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid profile JSON: {exc}") from None
    u = stb.catseye_field(a, _grid(nx, ny, Ly))
    mask, frac = stb.euler_rayleigh(fp, fv, u)
    if fmt == "json":
        _emit(_dump({"pass_fraction": frac, "fail_mask": stb.rle(~mask)}), out)
    else:
        _emit(f"pass_fraction: {frac}", out)


def main(argv=None):
    try:
        rv = cli.main(args=argv, prog_name="lpx", standalone_mode=False)
    except LpxError as exc:
        click.echo(f"lpx: {type(exc).__name__}: {exc}", err=True)
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        click.echo("lpx: aborted", err=True)
        sys.exit(130)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    sys.exit(rv if isinstance(rv, int) else 0)


if __name__ == "__main__":
    main()
