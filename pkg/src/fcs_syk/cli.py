"""Command line front end: ``fcs-syk <subcommand> [--config file] ...``.

Exit codes: 0 success, 2 config error, 3 convergence failure, 4 acceptance
failure.
"""
import argparse
from concurrent.futures import ProcessPoolExecutor
import itertools
import logging
import os
import sys

from . import acceptance, eft
from .action import fcs_point, fcs_sweep, solve_baseline
from .analysis import (GreensCache, classify_from_data, load_config, read_csv,
                       result_rows, rows_to_results, write_csv)
from .contour import TwistSpec
from .errors import ConfigError, ConvergenceError, ParameterError
from .saddle import classify_phase, solve_saddle

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_ACCEPTANCE = 0, 2, 3, 4

log = logging.getLogger("fcs_syk")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--seed", type=int, default=0,
                        help="reserved; the pipeline is deterministic")
    common.add_argument("--no-cache", action="store_true", help="do not read or write the cache")
    common.add_argument("-v", "--verbose", action="store_true")
    ap = argparse.ArgumentParser(prog="fcs-syk", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    sub.add_parser("saddle", parents=[common], help="bulk P, S and phase over the zeta x V grid")
    sub.add_parser("solve", parents=[common], help="F/N at the single point (phi, A_size)")
    sub.add_parser("sweep", parents=[common], help="F/N over phis x A_sizes, one CSV per (zeta, V)")
    sub.add_parser("eft", parents=[common], help="kernel consistency report and EFT predictions")
    f = sub.add_parser("fit", parents=[common], help="scaling fits and phase label from a CSV")
    f.add_argument("csv", nargs="+")
    sub.add_parser("check", parents=[common], help="run the acceptance suite")
    return ap


def _setup(args):
    cfg = load_config(args.config)
    if args.out:
        cfg.data["out"] = args.out
    if args.no_cache:
        cfg.data["cache"] = False
    return cfg


def _grid_points(cfg):
    return list(itertools.product(cfg.values("zeta"), cfg.values("V")))


def cmd_saddle(cfg, args):
    print("zeta V P S phase order")
    for zeta, V in _grid_points(cfg):
        p = cfg.model_params(zeta, V)
        s = solve_saddle(p)
        ph = classify_phase(p)
        print(f"{zeta:g} {V:g} {s.P:.12g} {s.S:.12g} {ph.kind} {ph.transition_order}")
    return EXIT_OK


def _store(cfg, params, grid, opts):
    if not cfg["cache"]:
        return None
    return GreensCache(os.path.join(cfg["out"], "cache"), params, grid, opts)


def _tag(zeta, V):
    return f"zeta{zeta:g}_V{V:g}"


def cmd_solve(cfg, args):
    os.makedirs(cfg["out"], exist_ok=True)
    grid, opts = cfg.grid(), cfg.solve_options()
    for zeta, V in _grid_points(cfg):
        p = cfg.model_params(zeta, V)
        store = _store(cfg, p, grid, opts)
        base = solve_baseline(p, grid, opts, store)
        r = fcs_point(p, TwistSpec(cfg["phi"], cfg["A_size"]), grid, opts, base)
        r.meta.pop("sig", None)
        r.meta.pop("G", None)
        print(f"zeta={zeta:g} V={V:g} phi={r.phi:.6g} |A|={r.A_size} "
              f"F/N={r.f_per_N.real:.10g}{r.f_per_N.imag:+.3e}i iters={r.meta['iterations']}")
        path = os.path.join(cfg["out"], f"solve_{_tag(zeta, V)}.csv")
        write_csv(path, result_rows([r], p, grid), cfg.data)
    return EXIT_OK


def _sweep_one(job):
    p, phis, A, grid, opts, base, store = job
    return fcs_sweep(p, phis, [A], grid, opts, base, store=store)


def cmd_sweep(cfg, args):
    os.makedirs(cfg["out"], exist_ok=True)
    grid, opts = cfg.grid(), cfg.solve_options()
    failed = 0
    for zeta, V in _grid_points(cfg):
        p = cfg.model_params(zeta, V)
        store = _store(cfg, p, grid, opts)
        base = solve_baseline(p, grid, opts, store)
        jobs = [(p, cfg["phis"], A, grid, opts, base, store) for A in cfg["A_sizes"]]
        log.info("sweep zeta=%g V=%g: %d subsystem sizes x %d phis", zeta, V,
                 len(jobs), len(cfg["phis"]))
        if args.threads > 1:
            with ProcessPoolExecutor(args.threads) as ex:
                parts = list(ex.map(_sweep_one, jobs))
        else:
            parts = [_sweep_one(j) for j in jobs]
        results = [r for part in parts for r in part]
        bad = [r for r in results if not r.meta.get("converged", True)]
        failed += len(bad)
        path = os.path.join(cfg["out"], f"sweep_{_tag(zeta, V)}.csv")
        write_csv(path, result_rows(results, p, grid), cfg.data)
        print(f"{path}: {len(results)} points, {len(bad)} not converged")
    return EXIT_CONVERGENCE if failed else EXIT_OK


def cmd_eft(cfg, args):
    ok, detail = eft.kernel_report()
    print("kernel checks: " + ("ok" if ok else "FAILED"))
    for k, v in detail.items():
        print(f"  {k}: {float(v):.3e}")
    for zeta, V in _grid_points(cfg):
        p = cfg.model_params(zeta, V)
        s = solve_saddle(p)
        if s.S > 0 and zeta > 0:
            xy = eft.xy_coefficients(s, p)
            print(f"zeta={zeta:g} V={V:g}: kappa_t={xy.kappa_t:.6g} kappa_x={xy.kappa_x:.6g} "
                  f"log slope at phi={cfg['phi']:.4g}: {eft.log_slope(cfg['phi'], s, p):.6g}")
        elif zeta > p.J:
            print(f"zeta={zeta:g} V={V:g}: area phase, decay rate {eft.decay_rate(p):.6g}")
    return EXIT_OK if ok else EXIT_ACCEPTANCE


def cmd_fit(cfg, args):
    groups = {}
    for path in args.csv:
        rows, _ = read_csv(path)
        for r in rows:
            groups.setdefault((r["zeta"], r["V"], r["L"]), []).append(r)
    slopes = {}
    for key, rows in groups.items():
        res = rows_to_results(rows)
        try:
            slopes[key] = classify_from_data(res, key[2]).log_fit.slope
        except ValueError:
            pass
    for key, rows in sorted(groups.items()):
        try:
            ph = classify_from_data(rows_to_results(rows), key[2],
                                    scan_slopes=list(slopes.values()))
        except ValueError as e:
            print(f"zeta={key[0]:g} V={key[1]:g}: {e}")
            continue
        print(f"zeta={key[0]:g} V={key[1]:g}: {ph.label} theta={ph.theta:.4g} "
              f"flags={ph.flags}")
        fits = [ph.log_fit] + list(ph.phi_fits.values())
        for ft in fits:
            print(f"  {ft.model}: slope={ft.slope:.6g} intercept={ft.intercept:.6g} "
                  f"r2={ft.r_squared:.6f} n={ft.n}")
    return EXIT_OK


def cmd_check(cfg, args):
    results = acceptance.run_all(echo=print)
    n_ok = sum(c.passed for c in results)
    print(f"{n_ok}/{len(results)} criteria passed")
    return EXIT_OK if n_ok == len(results) else EXIT_ACCEPTANCE


COMMANDS = {"saddle": cmd_saddle, "solve": cmd_solve, "sweep": cmd_sweep, "eft": cmd_eft,
            "fit": cmd_fit, "check": cmd_check}


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _setup(args)
        return COMMANDS[args.cmd](cfg, args)
    except (ConfigError, ParameterError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
