"""Command-line entry points.

Subcommands: solve, sweep, classify, dispersion, check, reduce1d.
Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 check failure.  The environment variable ``SHALLOW_THREADS`` caps the
thread pools of the underlying numerics libraries.
"""

import argparse
import csv
import json
import os
import sys


def _cap_threads():
    n = os.environ.get("SHALLOW_THREADS")
    if not n:
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(var, n)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="shallowtw",
        description="Traveling-wave solver for the damped shallow-water system",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("solve", "solve one parameter point from a config file"),
        ("sweep", "run a parameter continuation sweep from a config file"),
        ("reduce1d", "solve via the reduced one-dimensional path"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a run configuration file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override a config entry (repeatable)",
        )
        if name == "reduce1d":
            p.add_argument("--case", type=int, default=None, help="region case 1/2/3")

    p = sub.add_parser("classify", help="ellipticity classification of the linearization")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--json", dest="json_path", default=None)
    p.add_argument("--csv", dest="csv_path", default=None)

    p = sub.add_parser("dispersion", help="sample the dispersion relation")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--xi-max", type=float, default=10.0)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--csv", dest="csv_path", default=None)

    p = sub.add_parser("check", help="re-verify a dumped run directory")
    p.add_argument("rundir")
    return parser


def main(argv=None):
    _cap_threads()
    args = _build_parser().parse_args(argv)
    handler = {
        "solve": cmd_solve,
        "sweep": cmd_sweep,
        "reduce1d": cmd_reduce1d,
        "classify": cmd_classify,
        "dispersion": cmd_dispersion,
        "check": cmd_check,
    }[args.command]
    return handler(args)


def _load_run_inputs(args):
    from .config import (
        ConfigError,
        build_forcing,
        build_grid,
        build_newton_config,
        build_params,
        parse_config,
    )

    cfg = parse_config(args.config, args.overrides)
    grid = build_grid(cfg)
    params = build_params(cfg)
    newton_cfg = build_newton_config(cfg)
    forcing = build_forcing(cfg, grid, params)
    out = cfg.get("output", {})
    outdir = out.get("directory", "run_output")
    formats = out.get("formats", ("bin", "json", "csv"))
    boundary_tol = out.get("boundary_tol", 1e-8)
    return cfg, grid, params, newton_cfg, forcing, outdir, formats, boundary_tol


def _write_outputs(outdir, report, params, forcing, newton_cfg, formats, boundary_tol):
    from .fields_io import dump_state, write_report_json, write_surface_csv

    extra = {
        "solver": {
            "abs_tol": newton_cfg.abs_tol,
            "achieved_residual": report.residual_history[-1],
            "boundary_tol": boundary_tol,
        }
    }
    dump_state(outdir, report.final_state, params, forcing_data=forcing, extra=extra)
    write_report_json(outdir, report)
    if "csv" in formats:
        write_surface_csv(outdir, report.final_state)


def cmd_solve(args, force_1d=False, case=None):
    from .config import ConfigError
    from .errors import SolverError
    from .solve import newton_solve, solve_1d
    from .symbols import region_of

    try:
        (
            cfg,
            grid,
            params,
            newton_cfg,
            forcing,
            outdir,
            formats,
            boundary_tol,
        ) = _load_run_inputs(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    use_1d = force_1d or (
        grid.dim == 1
        and params.gamma != 1.0
        and cfg.get("solver", {}).get("case_1d") is not None
    )
    if use_1d:
        cases = region_of(params)
        pick = case if case is not None else cfg.get("solver", {}).get("case_1d")
        if pick is None:
            pick = min(cases) if cases else None
        if grid.dim != 1 or pick not in cases:
            print(
                f"config error: 1D case {pick} not admissible "
                f"(admissible: {sorted(cases)})",
                file=sys.stderr,
            )
            return 2

    try:
        if use_1d:
            report = solve_1d(params, forcing, pick, config=newton_cfg)
        else:
            report = newton_solve(params, forcing, config=newton_cfg)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        if exc.report is not None:
            _write_outputs(
                outdir, exc.report, params, forcing, newton_cfg, formats, boundary_tol
            )
        return 3

    _write_outputs(outdir, report, params, forcing, newton_cfg, formats, boundary_tol)
    print(f"{outdir}: {report.summary()}")
    return 0


def cmd_reduce1d(args):
    return cmd_solve(args, force_1d=True, case=args.case)


def cmd_sweep(args):
    from .config import ConfigError, build_sweep_targets
    from .errors import SolverError
    from .sweep import SweepPlan, linear_path, sweep

    try:
        (
            cfg,
            grid,
            params,
            newton_cfg,
            forcing,
            outdir,
            formats,
            boundary_tol,
        ) = _load_run_inputs(args)
        targets = build_sweep_targets(cfg, params)
        if targets is None:
            raise ConfigError("sweep requires a [sweep] section")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    path = linear_path(params, targets["target"], targets["steps"])
    ramp = ()
    if targets["ramp_steps"]:
        k = targets["ramp_steps"]
        ramp = tuple((j + 1) / k for j in range(k))
    plan = SweepPlan(
        path=path,
        forcing_data=forcing,
        amplitude_ramp=ramp,
        adaptive=targets["adaptive"],
    )
    try:
        result = sweep(plan, config=newton_cfg)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3

    os.makedirs(outdir, exist_ok=True)
    summary_path = os.path.join(outdir, "summary.csv")
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        norm_keys = sorted(result.limit_norms[0]) if result.limit_norms else []
        writer.writerow(
            ["index", "gamma", "mu", "sigma", "iterations", "converged"]
            + norm_keys
            + ["dv", "deta"]
        )
        for k, (p, rep) in enumerate(zip(result.params_path, result.reports)):
            steps = result.step_norms[k - 1] if k > 0 else {"dv": 0.0, "deta": 0.0}
            writer.writerow(
                [k, p.gamma, p.mu, p.sigma, rep.iterations, rep.converged]
                + [result.limit_norms[k][key] for key in norm_keys]
                + [steps["dv"], steps["deta"]]
            )
    for k, (p, rep) in enumerate(zip(result.params_path, result.reports)):
        _write_outputs(
            os.path.join(outdir, f"point_{k:03d}"),
            rep,
            p,
            forcing,
            newton_cfg,
            formats,
            boundary_tol,
        )
    print(f"{outdir}: {len(result.reports)} points, summary at {summary_path}")
    return 0


def cmd_classify(args):
    import numpy as np

    from .state import Params
    from .symbols import adn_classify, principal_symbol

    params = Params(gamma=args.gamma, mu=args.mu, sigma=args.sigma)
    report = adn_classify(params, args.dim)
    verdict = "yes" if report.elliptic else "no"
    print(
        f"elliptic: {verdict}, R={report.R_order}, r={report.r_order}, "
        f"principal: {report.principal_part}"
    )
    record = {
        "gamma": args.gamma,
        "mu": args.mu,
        "sigma": args.sigma,
        "dim": args.dim,
        "R": report.R_order,
        "r": report.r_order,
        "principal": report.principal_part,
        "elliptic": report.elliptic,
    }
    if args.json_path:
        with open(args.json_path, "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.csv_path:
        with open(args.csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if args.dim == 1:
                writer.writerow(["xi", "principal_abs"])
                for xi in (-1.0, 1.0):
                    val = principal_symbol(np.array([xi]), params, 1)
                    writer.writerow([xi, float(np.abs(val)[0])])
            else:
                writer.writerow(["theta", "principal_abs"])
                for theta in np.linspace(0, np.pi, 64):
                    xi = np.zeros((args.dim, 1))
                    xi[0, 0] = np.cos(theta)
                    xi[1, 0] = np.sin(theta)
                    val = principal_symbol(xi, params, args.dim)
                    writer.writerow([float(theta), float(np.abs(val)[0])])
    return 0


def cmd_dispersion(args):
    import numpy as np

    from .symbols import dispersion

    rows = []
    for r in np.linspace(0.0, args.xi_max, args.n):
        sample = dispersion(np.array([r]), args.sigma)
        rows.append((r, sample.omega, sample.phase_speed, sample.group_speed))
    if args.csv_path:
        with open(args.csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["xi", "omega", "phase_speed", "group_speed"])
            writer.writerows(rows)
    else:
        print("xi,omega,phase_speed,group_speed")
        for row in rows:
            print(",".join(f"{v:.12g}" for v in row))
    return 0


def run_checks(rundir):
    """Re-verify a dumped run; returns an ordered list of (name, ok, detail)."""
    from .fields_io import load_forcing, load_manifest, load_state
    from .model import (
        boundary_decay_ratio,
        dissipation_identity_residual,
        forcing_poly,
        mass_residual_mean,
        residual,
    )
    from .spectral import l2_norm

    state, params, manifest = load_state(rundir)
    forcing_data = load_forcing(rundir, manifest)
    solver_meta = manifest.get("solver", {})
    abs_tol = solver_meta.get("abs_tol", 1e-10)
    recorded = solver_meta.get("achieved_residual", abs_tol)
    boundary_tol = solver_meta.get("boundary_tol", 1e-8)

    forcing = forcing_poly(state.eta, forcing_data, params)
    res = residual(state, params, forcing)
    rnorm = res.norm_y(0)
    checks = []
    bound = max(2.0 * recorded, abs_tol)
    checks.append(("residual_norm", rnorm <= bound, f"{rnorm:.3e} <= {bound:.3e}"))

    diss = dissipation_identity_residual(state, params, forcing)
    vsq = l2_norm(state.v) ** 2
    dbound = 1e-6 * max(vsq, abs_tol)
    checks.append(
        ("power_dissipation", abs(diss) <= dbound, f"{abs(diss):.3e} <= {dbound:.3e}")
    )

    mmean = abs(mass_residual_mean(res))
    checks.append(("mass_mean", mmean <= 1e-12, f"{mmean:.3e} <= 1e-12"))

    decay = max(boundary_decay_ratio(state.eta), boundary_decay_ratio(state.v))
    checks.append(
        ("boundary_decay", decay <= boundary_tol, f"{decay:.3e} <= {boundary_tol:.1e}")
    )
    return checks


def cmd_check(args):
    checks = run_checks(args.rundir)
    ok = True
    for name, passed, detail in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    return 0 if ok else 4


if __name__ == "__main__":
    sys.exit(main())
