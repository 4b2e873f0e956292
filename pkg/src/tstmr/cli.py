"""Experiment harness: desk-scale iteration-count studies and direct
solves of Matrix Market systems from the command line.

Subcommands: wellposed, illposed, deblur, fovtable, solve.  Results are
written as CSV (plus JSON residual histories when record_history is on).
Logging verbosity follows the TSTMR_LOG environment variable
(quiet | info | debug).
"""

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig
from .illposed import (AugmentedSystem, GaussianRelative, UniformAbsolute,
                       add_noise, assemble_k_dense, assemble_mhat_dense,
                       build_nonregularized_split, build_regularized_split,
                       cgw_on_augmented, check_gamma_condition,
                       fov_bound_interval, fov_numeric_imag_halfwidth,
                       fov_numeric_real_extremes, gcv_select_mu, mshss_alpha_star,
                       mshss_solve, MshssParams)
from .linalg import lanczos_extreme, split_hs, spmv
from .mmio import read_matrix_market, read_vector, write_vector
from .problems import (GrayImage, convdiff2d, foxgood, gravity,
                       image_blur_operator, phillips, psnr, read_pgm,
                       synthetic_image, write_pgm)
from .solvers import (CONVERGED, STAGNATION, SolveOptions, StoppingRule,
                      cgls_solve, discrepancy_stop, gmres_solve, hss_solve,
                      pcg_solve, tstmr_solve, two_step_1d_mr_solve)
from .splittings import SubSolver, eta_star, hss_pair, ilu0, wellposed_pair

log = logging.getLogger("tstmr")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILURES = 2

CSV_COLUMNS = ["problem", "n", "method", "params", "iter", "relres",
               "relerr", "psnr", "wall_seconds", "termination", "repeats"]

COMMON_KEYS = {
    "seed", "repeat", "output", "record_history",
    "solver.name", "solver.tol", "solver.maxit",
}

WELLPOSED_KEYS = COMMON_KEYS | {
    "problem.case", "problem.l",
    "solver.splitting", "solver.alpha", "solver.eta", "solver.restart",
    "solver.precond",
    "subsolver.mode", "subsolver.inner_tol", "subsolver.inner_maxit",
    "subsolver.droptol", "subsolver.skew_shift", "subsolver.eps_shift",
}

ILLPOSED_KEYS = COMMON_KEYS | {
    "problem.name", "problem.n",
    "solver.alpha",
    "illposed.mu", "illposed.gamma", "illposed.noise_model",
    "illposed.noise_level", "illposed.inner", "illposed.inner_tol",
    "illposed.max_itcg",
    "stopping.kind", "stopping.noise_level", "stopping.safety",
}

DEBLUR_KEYS = COMMON_KEYS | {
    "problem.image", "problem.size", "problem.bandw",
    "illposed.gamma", "illposed.inner_tol", "illposed.max_itcg",
    "illposed.noise_model", "illposed.noise_level",
    "stopping.kind", "stopping.noise_level", "stopping.safety",
}

FOVTABLE_KEYS = {
    "seed", "output",
    "problem.name", "problem.n",
    "illposed.mu", "illposed.noise_model", "illposed.noise_level",
    "fov.gammas", "fov.numeric",
}

GENERATORS = {"foxgood": foxgood, "gravity": gravity, "phillips": phillips}


def _setup_logging():
    level = {"quiet": logging.WARNING, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("TSTMR_LOG", "quiet"),
                                         logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _write_csv(path, rows):
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in CSV_COLUMNS])


def _write_histories(path, histories):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(histories, fh, indent=1)


def _aggregate(runs, problem, n, method, params):
    """Mean over repeats, with the wall time summed over all of them."""
    terms = {r["termination"] for r in runs}
    return {
        "problem": problem,
        "n": n,
        "method": method,
        "params": params,
        "iter": float(np.mean([r["iter"] for r in runs])),
        "relres": float(np.mean([r["relres"] for r in runs])),
        "relerr": (float(np.mean([r["relerr"] for r in runs]))
                   if runs[0].get("relerr") is not None else None),
        "psnr": (float(np.mean([r["psnr"] for r in runs]))
                 if runs[0].get("psnr") is not None else None),
        "wall_seconds": float(sum(r["wall"] for r in runs)),
        "termination": terms.pop() if len(terms) == 1 else "mixed",
        "repeats": len(runs),
    }


def _noise_model(cfg, default_model="uniform-absolute", default_level=0.01):
    model = cfg.get_choice("illposed.noise_model",
                           {"uniform-absolute", "gaussian-relative"},
                           default=default_model)
    level = cfg.get_float("illposed.noise_level", default_level)
    if model == "uniform-absolute":
        return UniformAbsolute(level), level
    return GaussianRelative(level), level


def _parse_gamma(raw, mu, source):
    """gamma is a float or the offset form mu2+X."""
    if raw.startswith("mu2+"):
        try:
            return mu ** 2 + float(raw[4:])
        except ValueError:
            raise ConfigError(f"{source}: bad gamma offset {raw!r}") from None
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{source}: bad gamma {raw!r}") from None


def run_wellposed(cfg, seed, repeat):
    case = cfg.get_choice("problem.case", {"I", "II"}, default="I")
    l = cfg.get_int("problem.l", 16)
    name = cfg.get_choice("solver.name", {"tstmr", "mr1d", "hss", "gmres"},
                          default="tstmr")
    tol = cfg.get_float("solver.tol", 1e-10)
    maxit = cfg.get_int("solver.maxit", 10000)
    scheme = cfg.get_choice("solver.splitting",
                            {"eta", "hss", "approach1", "approach2"},
                            default="eta")
    realization = cfg.get_choice("subsolver.mode",
                                 {"dense", "banded", "inner"},
                                 default="banded")
    inner_tol = cfg.get_float("subsolver.inner_tol", 1e-12)
    inner_maxit = cfg.get_int("subsolver.inner_maxit", None)
    droptol = cfg.get_float("subsolver.droptol", 0.0)
    skew_shift = cfg.get_float("subsolver.skew_shift", 4.0)
    eps_shift = cfg.get_float("subsolver.eps_shift", 1e-5)
    alpha = cfg.get_float("solver.alpha", None)
    record = cfg.get_bool("record_history", False)

    runs, histories = [], []
    for rep in range(repeat):
        prob = convdiff2d(l, case, seed=seed + rep)
        A = prob.matrix
        params = f"case={case} l={l} scheme={scheme} mode={realization}"
        t0 = time.perf_counter()
        opts = SolveOptions(tol=tol, maxit=maxit, record_history=record,
                            seed=seed + rep)
        if name == "gmres":
            restart = cfg.get_int("solver.restart", 20)
            pre_kind = cfg.get_choice("solver.precond", {"none", "ilu0"},
                                      default="ilu0")
            pre = SubSolver.from_factor(ilu0(A)) if pre_kind == "ilu0" else None
            report = gmres_solve(A, prob.rhs_clean, restart=restart,
                                 precond=pre, opts=opts, truth=prob.truth)
            params = f"case={case} l={l} restart={restart} precond={pre_kind}"
        else:
            if scheme == "eta":
                eta_raw = cfg.get("solver.eta", "auto")
                if eta_raw == "auto":
                    H, _ = split_hs(A)
                    lo, hi = lanczos_extreme(H, min(A.nrows, 200),
                                             seed=seed + rep)
                    eta = eta_star(lo, hi)
                else:
                    eta = float(eta_raw)
                pair = wellposed_pair(A, "eta", eta=eta,
                                      realization=realization,
                                      inner_tol=inner_tol,
                                      inner_maxit=inner_maxit,
                                      droptol=droptol)
                params += f" eta={eta:.6g}"
            elif scheme == "hss":
                if alpha is None:
                    raise ConfigError("solver.alpha is required for the hss "
                                      "splitting")
                pair = wellposed_pair(A, "hss", alpha=alpha,
                                      realization=realization,
                                      inner_tol=inner_tol,
                                      inner_maxit=inner_maxit,
                                      droptol=droptol)
                params += f" alpha={alpha:g}"
            else:
                pair = wellposed_pair(A, scheme, droptol=droptol,
                                      skew_shift=skew_shift,
                                      eps_shift=eps_shift)
            if name == "tstmr":
                report = tstmr_solve(A, prob.rhs_clean, split=pair, opts=opts,
                                     truth=prob.truth)
            elif name == "mr1d":
                report = two_step_1d_mr_solve(A, prob.rhs_clean, split=pair,
                                              opts=opts, truth=prob.truth)
            else:
                if alpha is None:
                    raise ConfigError("solver.alpha is required for hss")
                report = hss_solve(A, prob.rhs_clean, alpha=alpha, opts=opts,
                                   split=pair, truth=prob.truth)
        wall = time.perf_counter() - t0
        runs.append({"iter": report.iterations, "relres": report.relres,
                     "relerr": report.rel_errors[-1] if report.rel_errors
                     else None,
                     "termination": report.termination, "wall": wall})
        if record:
            histories.append({"problem": f"convdiff-{case}", "rep": rep,
                              **report.to_dict()})
    row = _aggregate(runs, f"convdiff-{case}", (l - 1) ** 2, name,
                     runs and params or "")
    return [row], histories


def run_illposed(cfg, seed, repeat):
    pname = cfg.get_choice("problem.name", set(GENERATORS), default="foxgood")
    n = cfg.get_int("problem.n", 200)
    name = cfg.get_choice("solver.name", {"tstmr", "mshss", "cgw"},
                          default="tstmr")
    tol = cfg.get_float("solver.tol", 1e-6)
    maxit = cfg.get_int("solver.maxit", 100)
    inner = cfg.get_choice("illposed.inner", {"cg", "gmres"}, default="gmres")
    inner_tol = cfg.get_float("illposed.inner_tol", 1e-6)
    max_itcg = cfg.get_int("illposed.max_itcg", 20)
    record = cfg.get_bool("record_history", False)
    noise, _ = _noise_model(cfg)

    runs, histories = [], []
    params = ""
    for rep in range(repeat):
        prob = GENERATORS[pname](n)
        A = prob.matrix if isinstance(prob.matrix, np.ndarray) \
            else prob.matrix.to_dense()
        g = add_noise(prob.rhs_clean, noise, seed=seed + rep)
        mu_raw = cfg.get("illposed.mu", "gcv")
        mu = gcv_select_mu(A, g) if mu_raw == "gcv" else float(mu_raw)
        gamma = _parse_gamma(cfg.get("illposed.gamma", "mu2+0.01"), mu,
                             cfg.source)
        sys_aug = AugmentedSystem(A, mu, gamma)
        b = np.concatenate([g, np.zeros(sys_aug.n)])
        params = (f"{pname} mu={mu:.4g} gamma={gamma:.4g} inner={inner} "
                  f"inner_tol={inner_tol:g}")
        opts = SolveOptions(tol=tol, maxit=maxit, record_history=record,
                            seed=seed + rep)
        inner_maxit = max_itcg if inner == "cg" else sys_aug.size
        t0 = time.perf_counter()
        if name == "tstmr":
            split = build_regularized_split(sys_aug, inner=inner,
                                            inner_tol=inner_tol,
                                            inner_maxit=inner_maxit)
            report = tstmr_solve(sys_aug.k_op(), b, split=split, opts=opts)
        elif name == "mshss":
            sv = np.linalg.svd(A, compute_uv=False)
            alpha = cfg.get_float("solver.alpha", None)
            if alpha is None:
                alpha = mshss_alpha_star(gamma, sv[0], sv[-1])
            report = mshss_solve(sys_aug, b,
                                 params=MshssParams(alpha, gamma, sv[0], sv[-1]),
                                 opts=opts, inner=inner, inner_tol=inner_tol,
                                 inner_maxit=inner_maxit)
            params += f" alpha={alpha:.4g}"
        else:
            report = cgw_on_augmented(sys_aug, b, opts=opts)
        wall = time.perf_counter() - t0
        f = report.solution[sys_aug.m:]
        relerr = (np.linalg.norm(f - prob.truth) / np.linalg.norm(prob.truth)
                  if prob.truth is not None else None)
        runs.append({"iter": report.iterations, "relres": report.relres,
                     "relerr": relerr, "termination": report.termination,
                     "wall": wall})
        if record:
            histories.append({"problem": pname, "rep": rep,
                              **report.to_dict()})
    row = _aggregate(runs, pname, n, name, params)
    return [row], histories


def run_deblur(cfg, seed, repeat):
    image_src = cfg.get("problem.image", "synthetic")
    size = cfg.get_int("problem.size", 64)
    bandw = cfg.get_int("problem.bandw", 5)
    name = cfg.get_choice("solver.name", {"tstmr", "cgls"}, default="tstmr")
    gamma = cfg.get_float("illposed.gamma", 0.001)
    inner_tol = cfg.get_float("illposed.inner_tol", 1e-2)
    max_itcg = cfg.get_int("illposed.max_itcg", 10)
    maxit = cfg.get_int("solver.maxit", 100)
    record = cfg.get_bool("record_history", False)
    noise, level = _noise_model(cfg, default_model="gaussian-relative")
    safety = cfg.get_float("stopping.safety", 1.01)
    stop_level = cfg.get_float("stopping.noise_level", level)
    rule = StoppingRule("discrepancy", noise_level=stop_level, safety=safety)

    if image_src == "synthetic":
        truth_img = synthetic_image(size)
    else:
        truth_img = read_pgm(image_src)
    h, w = truth_img.height, truth_img.width
    Aop = image_blur_operator(h, w, bandw)
    x_true = truth_img.to_vector()
    g_clean = Aop.apply(x_true)

    runs, histories = [], []
    extras = {}
    for rep in range(repeat):
        g = add_noise(g_clean, noise, seed=seed + rep)
        gnorm = float(np.linalg.norm(g))
        params = f"bandw={bandw} gamma={gamma:g} max_itcg={max_itcg} level={level:g}"
        opts = SolveOptions(tol=1e-14, maxit=maxit, record_history=record,
                            seed=seed + rep)
        t0 = time.perf_counter()
        if name == "tstmr":
            sys0, split = build_nonregularized_split(
                Aop, gamma=gamma, inner="cg", inner_tol=inner_tol,
                max_itcg=max_itcg)
            b = np.concatenate([g, np.zeros(sys0.n)])

            def stop(x):
                f = x[sys0.m:]
                relres = np.linalg.norm(g - Aop.apply(f)) / gnorm
                return discrepancy_stop(relres, rule)

            report = tstmr_solve(sys0.k_op(), b, split=split, opts=opts,
                                 stop=stop)
            f = report.solution[sys0.m:]
        else:
            report = cgls_solve(Aop, g, opts=opts, stop_rule=rule)
            f = report.solution
        wall = time.perf_counter() - t0
        restored = GrayImage.from_vector(f, h, w)
        relres = float(np.linalg.norm(g - Aop.apply(f)) / gnorm)
        relerr = float(np.linalg.norm(f - x_true) / np.linalg.norm(x_true))
        runs.append({"iter": report.iterations, "relres": relres,
                     "relerr": relerr, "psnr": psnr(restored, truth_img),
                     "termination": report.termination, "wall": wall})
        if record:
            histories.append({"problem": "deblur", "rep": rep,
                              **report.to_dict()})
        if rep == 0:
            extras["restored"] = restored
            extras["blurred"] = GrayImage.from_vector(g, h, w)
    row = _aggregate(runs, f"deblur-{image_src}", h * w, name, params)
    return [row], histories, extras


def run_fovtable(cfg, seed):
    pname = cfg.get_choice("problem.name", set(GENERATORS), default="foxgood")
    n = cfg.get_int("problem.n", 200)
    noise, _ = _noise_model(cfg)
    numeric = cfg.get_bool("fov.numeric", n <= 300)
    prob = GENERATORS[pname](n)
    A = prob.matrix if isinstance(prob.matrix, np.ndarray) \
        else prob.matrix.to_dense()
    g = add_noise(prob.rhs_clean, noise, seed=seed)
    mu_raw = cfg.get("illposed.mu", "gcv")
    mu = gcv_select_mu(A, g) if mu_raw == "gcv" else float(mu_raw)
    rows = []
    for raw in cfg.get("fov.gammas", "mu2+0.01,mu2+0.001").split(","):
        gamma = _parse_gamma(raw.strip(), mu, cfg.source)
        sys_aug = AugmentedSystem(A, mu, gamma)
        iv = fov_bound_interval(sys_aug, 0.0)
        row = {
            "problem": pname, "n": n, "mu": mu, "gamma": gamma,
            "condition_ok": check_gamma_condition(sys_aug, 0.0),
            "real_lo": iv.real_lo, "real_hi": iv.real_hi,
            "imag_half_width": iv.imag_half_width,
        }
        if numeric:
            K = assemble_k_dense(sys_aug)
            Mh = assemble_mhat_dense(sys_aug)
            lo, hi = fov_numeric_real_extremes(K, Mh)
            row.update(numeric_lo=lo, numeric_hi=hi,
                       numeric_imag=fov_numeric_imag_halfwidth(K, Mh))
        rows.append(row)
    return rows


def _write_fov_csv(path, rows):
    cols = ["problem", "n", "mu", "gamma", "condition_ok", "real_lo",
            "real_hi", "imag_half_width", "numeric_lo", "numeric_hi",
            "numeric_imag"]
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in cols])


def cmd_experiment(args, command):
    allowed = {"wellposed": WELLPOSED_KEYS, "illposed": ILLPOSED_KEYS,
               "deblur": DEBLUR_KEYS, "fovtable": FOVTABLE_KEYS}[command]
    cfg = (ExperimentConfig.load(args.config, allowed) if args.config
           else ExperimentConfig({}, source="<defaults>"))
    seed = args.seed if args.seed is not None else cfg.get_int("seed", 0)
    repeat = args.repeat if args.repeat is not None else cfg.get_int("repeat", 3)
    out_dir = Path(args.out if args.out else cfg.get("output", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)

    if command == "fovtable":
        rows = run_fovtable(cfg, seed)
        _write_fov_csv(out_dir / "fovtable.csv", rows)
        log.info("wrote %s", out_dir / "fovtable.csv")
        return EXIT_OK

    extras = {}
    if command == "wellposed":
        rows, histories = run_wellposed(cfg, seed, repeat)
    elif command == "illposed":
        rows, histories = run_illposed(cfg, seed, repeat)
    else:
        rows, histories, extras = run_deblur(cfg, seed, repeat)
    _write_csv(out_dir / "results.csv", rows)
    if histories:
        _write_histories(out_dir / "history.json", histories)
    if "restored" in extras:
        write_pgm(out_dir / "restored.pgm", extras["restored"])
        write_pgm(out_dir / "blurred.pgm", extras["blurred"])
    log.info("wrote %s", out_dir / "results.csv")
    failed = [r for r in rows if r["termination"] in (STAGNATION, "mixed")]
    return EXIT_FAILURES if failed else EXIT_OK


def cmd_solve(args):
    try:
        A = read_matrix_market(args.matrix)
    except OSError as exc:
        print(f"error: cannot read matrix {args.matrix}: {exc}",
              file=sys.stderr)
        return EXIT_CONFIG
    if args.rhs:
        try:
            b = read_vector(args.rhs)
        except OSError as exc:
            print(f"error: cannot read rhs {args.rhs}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        b = spmv(A, np.ones(A.ncols))
    opts = SolveOptions(tol=args.tol, maxit=args.maxit)
    t0 = time.perf_counter()
    if args.method in ("tstmr", "mr1d", "hss"):
        if args.splitting == "eta":
            H, _ = split_hs(A)
            lo, hi = lanczos_extreme(H, min(A.nrows, 200), seed=args.seed)
            pair = wellposed_pair(A, "eta", eta=eta_star(lo, hi),
                                  realization="dense")
        else:
            pair = hss_pair(A, args.alpha, realization="dense")
        solver = {"tstmr": tstmr_solve, "mr1d": two_step_1d_mr_solve}.get(
            args.method)
        if solver is not None:
            report = solver(A, b, split=pair, opts=opts)
        else:
            report = hss_solve(A, b, alpha=args.alpha, opts=opts, split=pair)
    elif args.method == "gmres":
        report = gmres_solve(A, b, restart=args.restart, opts=opts)
    elif args.method == "pcg":
        report = pcg_solve(A, b, opts=opts)
    else:
        report = cgls_solve(A, b, opts=opts)
    wall = time.perf_counter() - t0
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_vector(out_dir / "solution.txt", report.solution)
    row = {"problem": Path(args.matrix).name, "n": A.ncols,
           "method": args.method, "params": f"splitting={args.splitting}",
           "iter": report.iterations, "relres": report.relres,
           "relerr": None, "psnr": None, "wall_seconds": wall,
           "termination": report.termination, "repeats": 1}
    _write_csv(out_dir / "results.csv", [row])
    print(f"{args.method}: {report.termination} after {report.iterations} "
          f"iterations, relres {report.relres:.3e}")
    return EXIT_OK if report.termination == CONVERGED else EXIT_FAILURES


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tstmr",
        description="Two-step minimum-residual solver experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
            ("wellposed", "convection-diffusion iteration-count runs"),
            ("illposed", "regularized augmented-system runs"),
            ("deblur", "motion-deblurring with discrepancy stopping"),
            ("fovtable", "field-of-values interval bounds")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--repeat", type=int, default=None)

    p = sub.add_parser("solve", help="solve a Matrix Market system")
    p.add_argument("matrix", help="coordinate Matrix Market file")
    p.add_argument("--rhs", help="plain-text right-hand side (default A@ones)")
    p.add_argument("--method", default="tstmr",
                   choices=["tstmr", "mr1d", "hss", "gmres", "pcg", "cgls"])
    p.add_argument("--splitting", default="eta", choices=["eta", "hss"])
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--restart", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--maxit", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        return cmd_experiment(args, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
