"""Command-line interface: run scenarios, scan stability domains, export operators.

Every experiment from the test catalog is runnable as a one-line named
scenario with overridable knobs; see README for the config-file schema.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import diagnostics as diag
from .collisions import assemble_frozen_operator
from .driver import Scenario, make_scenario, run, scenario_names
from .errors import BadStageCount, VpfpError
from .mesh import VelocityGrid
from .rkc import get_coeffs, stability_function

_OVERRIDE_FIELDS = {
    "t_end": "t_end", "dt": "dt", "tol": "tol", "nu": "nu", "nx": "n_x",
    "nv": "n_v", "vmax": "v_max", "integrator": "integrator",
    "splitting": "splitting", "order": "order", "cadence": "cadence",
}

_CONFIG_FIELDS = {
    "scenario": str, "name": str, "init": str, "splitting": str, "integrator": str,
    "dims": int, "order": int, "nx": int, "nv": int, "stages": int,
    "length": float, "vmax": float, "nu": float, "dt": float, "tol": float,
    "dt0": float, "t_end": float, "cadence": float, "eta": float,
}
_CONFIG_TO_SCENARIO = {
    "name": "name", "init": "init", "splitting": "splitting",
    "integrator": "integrator", "dims": "dims", "order": "order", "nx": "n_x",
    "nv": "n_v", "stages": "stages", "length": "length", "vmax": "v_max",
    "nu": "nu", "dt": "dt", "tol": "tol", "dt0": "dt0", "t_end": "t_end",
    "cadence": "cadence", "eta": "eta",
}


def parse_config(path: str) -> dict:
    """Flat key = value configuration; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in _CONFIG_FIELDS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _CONFIG_FIELDS[key](val)
    return out


def _scenario_from_args(args) -> Scenario:
    overrides = {}
    for flag, fieldname in _OVERRIDE_FIELDS.items():
        val = getattr(args, flag.replace("-", "_"), None)
        if val is not None:
            overrides[fieldname] = val
    if args.config:
        cfg = parse_config(args.config)
        base = cfg.pop("scenario", None)
        cfg_overrides = {_CONFIG_TO_SCENARIO[k]: v for k, v in cfg.items()}
        cfg_overrides.update(overrides)
        if base is not None:
            return make_scenario(base, **cfg_overrides)
        sc = Scenario(**{**{"name": "config"}, **cfg_overrides})
        sc.validate()
        return sc
    if not args.scenario:
        raise ValueError("give --scenario or --config")
    return make_scenario(args.scenario, **overrides)


def cmd_run(args) -> int:
    sc = _scenario_from_args(args)
    os.makedirs(args.out, exist_ok=True)
    t0 = time.perf_counter()
    result = run(sc)
    wall = time.perf_counter() - t0
    diag.write_series(os.path.join(args.out, "series.csv"), result.series, plotspec=True)
    diag.write_snapshot(os.path.join(args.out, "final_snapshot.txt"),
                        result.state, result.fieldstate)
    print(f"scenario={sc.name} t_end={sc.t_end:g} steps={result.accepted} "
          f"rejected={result.rejected} nrhs={result.n_rhs} wall={wall:.3f}s")
    if args.strict:
        mass = result.series.column("mass")
        mom = result.series.column("momentum_x")
        scale_p = abs(mass[0]) * sc.v_max
        ok = (np.max(np.abs(mass - mass[0])) <= 1e-8 * abs(mass[0])
              and np.max(np.abs(mom - mom[0])) <= 1e-8 * scale_p)
        if sc.splitting in ("homogeneous", "sl-rk2-rkc"):
            etot = result.series.column("e_tot")
            ok = ok and np.max(np.abs(etot - etot[0])) <= 1e-8 * max(abs(etot[0]), 1e-300)
        if not ok:
            print("strict: invariant monitors exceeded thresholds", file=sys.stderr)
            return 2
    return 0


def cmd_stability(args) -> int:
    coeffs = get_coeffs(args.method, args.s, args.eta)
    boundary = coeffs.boundary
    re = np.linspace(-boundary - 5.0, 1.0, args.samples)
    half_width = max(4.0, 0.6 * args.s)
    im = np.linspace(-half_width, half_width, args.samples // 2 * 2 + 1)
    z = re[:, None] + 1j * im[None, :]
    absr = np.abs(stability_function(args.method, args.s, args.eta, z))
    try:
        with open(args.out, "w") as fh:
            fh.write("re_z,im_z,abs_r\n")
            for i in range(re.size):
                for j in range(im.size):
                    fh.write(f"{re[i]:.12g},{im[j]:.12g},{absr[i, j]:.12g}\n")
        trace_path = args.out + ".trace.csv"
        with open(trace_path, "w") as fh:
            fh.write("re_z,r\n")
            rr = stability_function(args.method, args.s, args.eta, re)
            for i in range(re.size):
                fh.write(f"{re[i]:.12g},{np.real(rr[i]):.12g}\n")
    except OSError as exc:
        raise VpfpError(str(exc)) from exc
    print(f"method={args.method} s={args.s} eta={args.eta:g} "
          f"boundary={boundary:.6g} c_eta={coeffs.c_eta:.6g} -> {args.out}")
    return 0


def cmd_coeffs(args) -> int:
    c = get_coeffs(args.method, args.s, args.eta)
    print(f"method={c.method} s={c.s} eta={diag.FMT % c.eta}")
    print(f"w0={diag.FMT % c.w0} w1={diag.FMT % c.w1}"
          + (f" w2={diag.FMT % c.w2}" if c.w2 is not None else ""))
    print(f"boundary={diag.FMT % c.boundary} c_eta={diag.FMT % c.c_eta}")
    for ell in range(1, c.s + 1):
        row = f"l={ell} mu={diag.FMT % c.mu[ell]}"
        if ell >= 2:
            row += f" nu={diag.FMT % c.nu[ell]} kappa={diag.FMT % c.kappa[ell]}"
        if c.a is not None:
            row += f" a={diag.FMT % c.a[ell]} b={diag.FMT % c.b[ell]}"
        print(row)
    return 0


def cmd_eigenexport(args) -> int:
    grid = VelocityGrid(args.vmax, args.nv, 1)
    a = assemble_frozen_operator(1.0, args.u, args.temperature, args.nu, grid)
    diag.write_matrix(args.out, a)
    print(f"wrote {a.shape[0]}x{a.shape[1]} frozen operator to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vpfp",
                                description="Vlasov-Poisson/Ampere-Fokker-Planck simulator")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run a scenario and write diagnostics")
    pr.add_argument("--scenario", choices=scenario_names(), help="built-in scenario name")
    pr.add_argument("--config", help="flat key=value scenario file")
    pr.add_argument("--t-end", dest="t_end", type=float)
    pr.add_argument("--dt", type=float)
    pr.add_argument("--tol", type=float)
    pr.add_argument("--nu", type=float)
    pr.add_argument("--nx", type=int)
    pr.add_argument("--nv", type=int)
    pr.add_argument("--vmax", type=float)
    pr.add_argument("--integrator", choices=("rkc1", "rkc2", "rk2"))
    pr.add_argument("--splitting",
                    choices=("homogeneous", "sl-rkc", "sl-rk2-rkc", "strang-2dv"))
    pr.add_argument("--order", type=int, choices=(2, 4))
    pr.add_argument("--out", default="out")
    pr.add_argument("--cadence", type=float)
    pr.add_argument("--threads", type=int, default=1,
                    help="kernel parallelism; 1 (default) is bitwise deterministic")
    pr.add_argument("--strict", action="store_true",
                    help="nonzero exit unless invariant monitors stay below thresholds")
    pr.set_defaults(func=cmd_run)

    ps = sub.add_parser("stability", help="scan |R(z)| over the complex plane")
    ps.add_argument("method", choices=("rkc1", "rkc2"))
    ps.add_argument("s", type=int)
    ps.add_argument("eta", type=float)
    ps.add_argument("out")
    ps.add_argument("--samples", type=int, default=241)
    ps.set_defaults(func=cmd_stability)

    pc = sub.add_parser("coeffs", help="dump integrator coefficients at full precision")
    pc.add_argument("method", choices=("rkc1", "rkc2"))
    pc.add_argument("s", type=int)
    pc.add_argument("eta", type=float, nargs="?", default=None)
    pc.set_defaults(func=cmd_coeffs)

    pe = sub.add_parser("eigenexport", help="export the frozen collision operator matrix")
    pe.add_argument("--nv", type=int, required=True)
    pe.add_argument("--vmax", type=float, required=True)
    pe.add_argument("--nu", type=float, required=True)
    pe.add_argument("--temperature", "-T", type=float, required=True)
    pe.add_argument("--u", type=float, default=0.0)
    pe.add_argument("--out", required=True)
    pe.set_defaults(func=cmd_eigenexport)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "s", None) is not None and args.command in ("stability", "coeffs"):
            if args.s < 2:
                raise BadStageCount(f"need s >= 2, got {args.s}")
        return args.func(args)
    except (VpfpError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
