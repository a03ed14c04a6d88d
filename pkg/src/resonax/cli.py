"""Command-line frontend.

Subcommands
-----------
eigen   CSV of the leading spectral data (eigenvalue, shape constants).
single  JSON record of the single-particle resonance.
dimer   JSON record of the hybridized dimer resonances.
sweep   Figure-style CSV sweep over a delta list (omega_s, omega_m, omega_d).
field   CSV of the scattered field on a rectangular grid.

Configuration is a flat key=value text file ('#' comments allowed) or a JSON
object with the same keys; see the README for the schema.  All numeric
output is formatted with %.17g so identical configs produce byte-identical
files.  Exit codes: 0 success, 2 config error, 3 solver non-convergence,
4 numerical-domain error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (ConfigError, ConvergenceError, GeometryError,
                     KernelError, NoPhysicalRootError, PoleError,
                     ResonaxError)
from .geometry import DomainSpec, build_mesh, load_raster
from .kernels import MODE_CONSISTENT, MODE_PAPER
from .spectral import indicator_eigenpair, mesh_hash, newtonian_eigenpairs, \
    shape_constants
from .single import (BackgroundDispersion, MaterialParams,
                     SingleParticleData, scattered_field, solve_single_2d,
                     solve_single_3d)
from .dimer import DimerConfig, solve_dimer_2d, solve_dimer_3d

_MODES = {"paper": MODE_PAPER, "consistent": MODE_CONSISTENT}


def _fmt(x):
    """Deterministic %.17g rendering of a real number."""
    return f"{float(x):.17g}"


# -- configuration ----------------------------------------------------------

def read_config_file(path):
    """Read a flat key=value file or a JSON object into a string dict."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    stripped = text.lstrip()
    if path.endswith(".json") or stripped.startswith("{"):
        try:
            raw = json.loads(text)
        except ValueError as exc:
            raise ConfigError(f"invalid JSON config {path}: {exc}")
        if not isinstance(raw, dict):
            raise ConfigError("JSON config must be an object")
        return {str(k): raw[k] for k in raw}
    out = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected key = value")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _floats(value):
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(tok) for tok in str(value).replace(",", " ").split()]


def _ints(value):
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return [int(tok) for tok in str(value).replace(",", " ").split()]


def _complex(value):
    if isinstance(value, (int, float, complex)):
        return complex(value)
    return complex(str(value).replace(" ", ""))


@dataclass
class RunConfig:
    material: MaterialParams
    dispersion: BackgroundDispersion
    domain: DomainSpec
    mode: str
    resolution: int
    delta: float
    center2: tuple
    variant: str
    tol: float
    max_iter: int
    delta_list: list
    field_omega: complex
    grid_min: list
    grid_max: list
    grid_n: list
    incident_direction: list
    incident: str
    field_form: str


def parse_config(raw):
    """Validate a raw key dict into a RunConfig, aggregating all problems."""
    errors = []
    raw = dict(raw)

    def take(key, conv, default=None, required=False):
        if key not in raw:
            if required:
                errors.append(f"missing required key {key!r}")
            return default
        try:
            return conv(raw.pop(key))
        except (ValueError, TypeError) as exc:
            errors.append(f"bad value for {key!r}: {exc}")
            return default

    alpha = take("alpha", float, 1.0)
    beta = take("beta", float, 1.0)
    gamma = take("gamma", float, 1e-3)
    eta = take("eta", float, 1.0)
    eps0 = take("eps0", float, 1.0)
    mu0 = take("mu0", float, 1.0)
    material = None
    try:
        material = MaterialParams(alpha, beta, gamma, eta, eps0, mu0)
    except ResonaxError as exc:
        errors.append(str(exc))

    disp_mode = take("dispersion", str, "paper")
    k0 = take("k0", _complex)
    dispersion = None
    try:
        dispersion = BackgroundDispersion(disp_mode, k0)
    except ResonaxError as exc:
        errors.append(str(exc))

    dim = take("dimension", int, required=True)
    shape = take("shape", str, required=True)
    radii = take("radii", _floats, [1.0])
    center = take("center", _floats)
    raster_file = take("raster_file", str)
    domain = None
    if dim is not None and shape is not None:
        try:
            if shape == "raster":
                if raster_file is None:
                    errors.append("raster shape needs raster_file")
                else:
                    domain = load_raster(raster_file,
                                         center=center or (0.0,) * dim)
            else:
                domain = DomainSpec(dim, shape, tuple(radii), center)
        except (GeometryError, OSError) as exc:
            errors.append(str(exc))

    mode = take("mode", str, "paper")
    if mode not in _MODES:
        errors.append(f"mode must be paper or consistent, got {mode!r}")
    variant = take("variant", str, "indicator")
    if variant not in ("eigen", "indicator"):
        errors.append(f"variant must be eigen or indicator, got {variant!r}")
    resolution = take("resolution", int, 16)
    if resolution is not None and resolution < 2 and shape != "raster":
        errors.append("resolution must be >= 2")
    delta = take("delta", float, 0.05)
    if delta is not None and not delta > 0:
        errors.append("delta must be positive")
    center2 = take("center2", _floats)
    tol = take("tol", float, 1e-12)
    max_iter = take("max_iter", int, 100)
    delta_list = take("delta_list", _floats, [])
    if delta_list and any(d <= 0 for d in delta_list):
        errors.append("delta_list entries must be positive")
    field_omega = take("field_omega", _complex)
    grid_min = take("grid_min", _floats)
    grid_max = take("grid_max", _floats)
    grid_n = take("grid_n", _ints)
    incident_dir = take("incident_direction", _floats)
    incident = take("incident", str, "plane")
    if incident not in ("plane", "linear"):
        errors.append(f"incident must be plane or linear, got {incident!r}")
    field_form = take("field_form", str, "printed")
    if field_form not in ("printed", "resonant"):
        errors.append("field_form must be printed or resonant")

    if raw:
        errors.append(f"unknown config keys: {sorted(raw)}")
    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
    return RunConfig(material, dispersion, domain, mode, resolution, delta,
                     tuple(center2) if center2 else None, variant, tol,
                     max_iter, delta_list, field_omega, grid_min, grid_max,
                     grid_n, incident_dir, incident, field_form)


def _max_workers(n_jobs):
    env = os.environ.get("RESONANCE_NUM_THREADS")
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ConfigError(f"RESONANCE_NUM_THREADS must be an integer, "
                              f"got {env!r}")
    else:
        cap = 1
    return max(1, min(cap, n_jobs))


# -- record helpers ----------------------------------------------------------

def _meta(cfg, mesh):
    return {"mode": cfg.mode, "resolution": cfg.resolution,
            "nodes": len(mesh), "h": float(mesh.h), "mesh": mesh_hash(mesh)}


def _cnum(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _emit(text, out_path, quiet):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
        if not quiet:
            print(f"wrote {out_path}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _json_text(record):
    return json.dumps(record, indent=2, sort_keys=False,
                      default=lambda o: repr(o)) + "\n"


# -- subcommands -------------------------------------------------------------

def cmd_eigen(cfg, modes):
    mesh = build_mesh(cfg.domain, cfg.resolution)
    lines = ["# resonax eigen v1",
             f"# shape={cfg.domain.shape} dimension={cfg.domain.dimension} "
             f"resolution={cfg.resolution} nodes={len(mesh)} "
             f"h={_fmt(mesh.h)} mesh={mesh_hash(mesh)}",
             "mode,lambda,nu0,B_re,B_im,F_re,F_im,P_re,P_im,"
             "G_re,G_im,S_re,S_im"]
    if mesh.dimension == 3:
        pair = newtonian_eigenpairs(mesh, 1)[0]
        nu0 = float("nan")
    else:
        pair = indicator_eigenpair(mesh)
        nu0 = -mesh.volume() / (2.0 * np.pi)
    consts = shape_constants(mesh, pair.vector)
    for mode in modes:
        lam = pair.value
        if mesh.dimension == 3 and mode == MODE_PAPER:
            lam = -lam   # printed sign convention for the 3D potential
        cells = [mode, _fmt(lam), _fmt(nu0)]
        for c in (consts.B, consts.F, consts.P, consts.G, consts.S):
            cells += [_fmt(c.real), _fmt(c.imag)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _solve_single(cfg, mesh, mode, delta, data=None):
    if mesh.dimension == 3:
        return solve_single_3d(cfg.material, mesh, delta, cfg.dispersion,
                               mode=mode, tol=cfg.tol,
                               max_iter=cfg.max_iter, data=data)
    return solve_single_2d(cfg.material, mesh, delta, cfg.dispersion,
                           mode=mode, variant=cfg.variant, tol=cfg.tol,
                           max_iter=cfg.max_iter, data=data)


def cmd_single(cfg, modes):
    mesh = build_mesh(cfg.domain, cfg.resolution)
    records = []
    for mode in modes:
        rec = dict(_meta(cfg, mesh), mode=mode, variant=cfg.variant,
                   delta=cfg.delta)
        try:
            res = _solve_single(cfg, mesh, mode, cfg.delta)
        except NoPhysicalRootError as exc:
            rec.update(status="no-physical-root", detail=str(exc))
            records.append(rec)
            continue
        rec.update(status="ok",
                   omega_re=res.omega.real, omega_im=res.omega.imag,
                   k_re=res.k.real, k_im=res.k.imag,
                   k0_re=res.k0.real, k0_im=res.k0.imag,
                   residual=res.residual, iterations=res.iterations,
                   order_tag=res.order_tag, flags=list(res.flags))
        records.append(rec)
    return _json_text(records if len(records) > 1 else records[0])


def cmd_dimer(cfg, modes):
    if cfg.center2 is None:
        raise ConfigError("dimer runs need center2")
    dconf = DimerConfig(cfg.domain, cfg.domain.center, cfg.center2, cfg.delta)
    meshes = dconf.build_meshes(cfg.resolution)
    records = []
    for mode in modes:
        rec = dict(_meta(cfg, meshes[0]), mode=mode, delta=cfg.delta,
                   separation=dconf.separation(),
                   separation_diameters=dconf.separation_in_diameters())
        try:
            if cfg.domain.dimension == 3:
                res = solve_dimer_3d(cfg.material, dconf, cfg.dispersion,
                                     mode=mode, tol=cfg.tol,
                                     max_iter=cfg.max_iter, meshes=meshes)
            else:
                res = solve_dimer_2d(cfg.material, dconf, cfg.dispersion,
                                     mode=mode, tol=cfg.tol,
                                     max_iter=cfg.max_iter, meshes=meshes)
        except NoPhysicalRootError as exc:
            rec.update(status="no-physical-root", detail=str(exc))
            records.append(rec)
            continue
        w_m, w_d = res.omega_m, res.omega_d
        res_m, res_d = res.residuals
        if w_m.real > w_d.real:     # enforce output ordering, keep the flag
            w_m, w_d = w_d, w_m
            res_m, res_d = res_d, res_m
        rec.update(status="ok", omega_m=_cnum(w_m), omega_d=_cnum(w_d),
                   K=_cnum(res.couplings.K), M=_cnum(res.couplings.M),
                   residual_m=res_m, residual_d=res_d,
                   order_tag=res.order_tag, flags=list(res.flags))
        if res.couplings.eta_hat is not None:
            rec["eta_hat"] = _cnum(res.couplings.eta_hat)
        records.append(rec)
    return _json_text(records if len(records) > 1 else records[0])


def _sweep_row(cfg, mesh, mode, delta, sdata):
    try:
        ws = _solve_single(cfg, mesh, mode, delta, data=sdata).omega
        dc = DimerConfig(cfg.domain, cfg.domain.center, cfg.center2, delta)
        meshes = dc.build_meshes(cfg.resolution)
        if cfg.domain.dimension == 3:
            res = solve_dimer_3d(cfg.material, dc, cfg.dispersion, mode=mode,
                                 tol=cfg.tol, max_iter=cfg.max_iter,
                                 meshes=meshes)
        else:
            res = solve_dimer_2d(cfg.material, dc, cfg.dispersion, mode=mode,
                                 tol=cfg.tol, max_iter=cfg.max_iter,
                                 meshes=meshes)
        w_m, w_d = res.omega_m, res.omega_d
        if w_m.real > w_d.real:
            w_m, w_d = w_d, w_m
        # relative coincidence measure: the hybridized pair collapses onto
        # the single-particle resonance as delta -> 0
        spread = max(abs(w_m - ws), abs(w_d - ws)) / abs(ws)
        cells = [_fmt(delta)]
        for z in (ws, w_m, w_d):
            cells += [_fmt(z.real), _fmt(z.imag)]
        cells += [_fmt(spread), "", mode]
        return ",".join(cells)
    except ResonaxError as exc:
        err = f"{type(exc).__name__}: {exc}".replace(",", ";")
        err = err.replace("\n", " ")
        return ",".join([_fmt(delta)] + [""] * 7 + [err, mode])


def cmd_sweep(cfg, modes):
    if len(cfg.delta_list) < 3:
        raise ConfigError("sweep needs delta_list with >= 3 values")
    if cfg.center2 is None:
        raise ConfigError("sweep runs need center2")
    mesh = build_mesh(cfg.domain, cfg.resolution)
    # the dimer meshes live in the rescaled frame, where centers are
    # z_i/delta: rebuild per delta
    lines = ["# resonax sweep v1",
             f"# shape={cfg.domain.shape} dimension={cfg.domain.dimension} "
             f"resolution={cfg.resolution} nodes={len(mesh)} "
             f"h={_fmt(mesh.h)} mesh={mesh_hash(mesh)}",
             "# spread = max(|omega_m - omega_s|, |omega_d - omega_s|) "
             "/ |omega_s|",
             "delta,omega_s_re,omega_s_im,omega_m_re,omega_m_im,"
             "omega_d_re,omega_d_im,spread,error,mode"]
    sdata = SingleParticleData.build(mesh)
    jobs = [(mode, delta) for mode in modes for delta in cfg.delta_list]

    def run(job):
        mode, delta = job
        return _sweep_row(cfg, mesh, mode, delta, sdata)

    workers = _max_workers(len(jobs))
    if workers == 1:
        rows = [run(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, jobs))
    lines.extend(rows)
    return "\n".join(lines) + "\n"


def cmd_field(cfg, modes):
    for key, val in (("field_omega", cfg.field_omega),
                     ("grid_min", cfg.grid_min), ("grid_max", cfg.grid_max),
                     ("grid_n", cfg.grid_n)):
        if val is None:
            raise ConfigError(f"field runs need {key}")
    d = cfg.domain.dimension
    if not (len(cfg.grid_min) == len(cfg.grid_max) == len(cfg.grid_n) == d):
        raise ConfigError("grid_min/grid_max/grid_n must have one entry "
                          "per dimension")
    axes = [np.linspace(cfg.grid_min[i], cfg.grid_max[i], cfg.grid_n[i])
            for i in range(d)]
    pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")],
                   axis=1)
    # the particle is delta*D + center; points inside it are invalid
    rel = (pts - np.asarray(cfg.domain.center)) / cfg.delta
    if cfg.domain.shape == "raster":
        ax = np.asarray(cfg.domain.semi_axes())
        inside = np.all(np.abs(rel) < ax, axis=1)
    else:
        inside = cfg.domain.contains(rel)
    if np.any(inside):
        raise ConfigError(f"{int(np.sum(inside))} grid points fall inside "
                          "the particle; the field grid must exclude the "
                          "interior")
    near = np.linalg.norm(rel, axis=1) < 2.0 * max(cfg.domain.semi_axes())

    mesh = build_mesh(cfg.domain, cfg.resolution)
    data = SingleParticleData.build(mesh)
    direction = np.asarray(cfg.incident_direction or
                           [1.0] + [0.0] * (d - 1), dtype=float)
    if direction.shape != (d,) or not np.linalg.norm(direction) > 0:
        raise ConfigError("incident_direction must be a nonzero vector")
    direction = direction / np.linalg.norm(direction)

    coords = "x,y" if d == 2 else "x,y,z"
    lines = ["# resonax field v1",
             f"# shape={cfg.domain.shape} dimension={d} delta={_fmt(cfg.delta)} "
             f"resolution={cfg.resolution} nodes={len(mesh)} "
             f"form={cfg.field_form} mesh={mesh_hash(mesh)}",
             f"{coords},u_re,u_im,flag,mode"]
    for mode in modes:
        res = _solve_single(cfg, mesh, mode, cfg.delta)
        k0 = res.k0

        if cfg.incident == "plane":
            def u_in(y):
                return np.exp(1j * k0 * float(direction @ y))
        else:
            # linear (odd) profile d.(y - center): orthogonal to the
            # monopole mode on a centrally symmetric particle
            c0 = np.asarray(cfg.domain.center)

            def u_in(y):
                return complex(direction @ (np.asarray(y) - c0))

        for pt, nf in zip(pts, near):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                val = scattered_field(
                    pt, cfg.field_omega, res.k, mesh, data.pair,
                    data.constants, u_in, cfg.material, cfg.delta, k0,
                    mode=mode,
                    resonant_denominator=(cfg.field_form == "resonant"),
                    resonance_omega=res.omega)
            flag = "near-particle" if nf else ""
            if abs(cfg.field_omega - res.omega) < 1e-6 * abs(res.omega):
                flag = (flag + ";" if flag else "") + "near-pole"
            cells = [_fmt(c) for c in pt] + [_fmt(val.real), _fmt(val.imag),
                                             flag, mode]
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# -- entry point -------------------------------------------------------------

_COMMANDS = {"eigen": cmd_eigen, "single": cmd_single, "dimer": cmd_dimer,
             "sweep": cmd_sweep, "field": cmd_field}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="resonax",
        description="Subwavelength resonances of dispersive dielectric "
                    "nano-resonators.")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="key=value or JSON "
                        "configuration file")
    parser.add_argument("--mode", choices=sorted(_MODES),
                        help="override the configured kernel convention")
    parser.add_argument("--both-modes", action="store_true",
                        help="emit records for both conventions")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--resolution", type=int,
                        help="override the configured mesh resolution")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress warnings and status messages")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(read_config_file(args.config))
        if args.mode:
            cfg.mode = _MODES[args.mode]
        if args.resolution:
            cfg.resolution = args.resolution
        modes = [MODE_PAPER, MODE_CONSISTENT] if args.both_modes \
            else [cfg.mode]
        with warnings.catch_warnings():
            if args.quiet:
                warnings.simplefilter("ignore")
            text = _COMMANDS[args.command](cfg, modes)
        _emit(text, args.out, args.quiet)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        dump = {"error": "non-convergence", "detail": str(exc),
                "best_re": None if exc.best is None else exc.best.real,
                "best_im": None if exc.best is None else exc.best.imag,
                "residual": exc.residual, "iterations": exc.iterations}
        print(json.dumps(dump), file=sys.stderr)
        return 3
    except (PoleError, KernelError, GeometryError, NoPhysicalRootError,
            ResonaxError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
