"""Command-line front end: simulate / fit / evaluate pipelines.

Exit codes: 0 ok, 2 usage or validation error, 3 I/O failure, 4 numerical
failure. Experiment directories hold one subdirectory per repetition
(rep000, rep001, ...) plus a manifest; --jobs parallelizes across
repetitions only, capped by the MSCCA_THREADS environment variable.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from types import SimpleNamespace

import numpy as np

from . import plots
from .data import (read_blocks_sidecar, read_csv_matrix, standardize,
                   write_blocks_sidecar, write_csv_matrix, BlockLayout, Dataset)
from .deflation import fit_sequential
from .errors import DimensionMismatch, MsccaError
from .evaluate import projection_residual, test_deflated_correlation
from .initialization import InitConfig
from .simulate import ScenarioSpec, generate
from .solver import SolverConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


def _jobs(args, n_tasks):
    jobs = max(1, args.jobs)
    cap = os.environ.get("MSCCA_THREADS")
    if cap:
        jobs = min(jobs, max(1, int(cap)))
    return min(jobs, n_tasks)


def _require_file(path, what):
    if not os.path.exists(path):
        raise UsageError(f"{what} not found: {path}")


def _rep_name(r):
    return f"rep{r:03d}"


def _json_dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------- simulate

def _simulate_one(spec_kwargs, out_dir, rep):
    spec = ScenarioSpec(**spec_kwargs)
    train, test, truth = generate(spec, stream=rep)
    rep_dir = os.path.join(out_dir, _rep_name(rep))
    os.makedirs(rep_dir, exist_ok=True)
    write_csv_matrix(os.path.join(rep_dir, "train.csv"), train.X)
    write_csv_matrix(os.path.join(rep_dir, "test.csv"), test.X)
    write_blocks_sidecar(os.path.join(rep_dir, "blocks.json"), train.layout)
    _json_dump({
        "rho": truth.rho.tolist(),
        "xi": [truth.xi[:, k].tolist() for k in range(truth.xi.shape[1])],
        "support": truth.support,
        "stream": rep,
    }, os.path.join(rep_dir, "truth.json"))
    return rep_dir


def cmd_simulate(args):
    spec_kwargs = dict(scenario=args.scenario, cov_family=args.cov, n=args.n,
                       s=args.s, D=args.num_blocks, p_d=args.p_d,
                       K_true=args.k_true, seed=args.seed,
                       support=args.support, n_test=args.n_test,
                       scale=not args.no_scale)
    ScenarioSpec(**spec_kwargs)  # validate before creating any files
    os.makedirs(args.out, exist_ok=True)
    reps = range(args.reps)
    jobs = _jobs(args, args.reps)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_simulate_one, [spec_kwargs] * args.reps,
                          [args.out] * args.reps, reps))
    else:
        for r in reps:
            _simulate_one(spec_kwargs, args.out, r)
    _json_dump({
        "command": "simulate",
        "spec": spec_kwargs,
        "reps": args.reps,
        "rep_dirs": [_rep_name(r) for r in reps],
        "test_transformed_with_train_stats": True,
    }, os.path.join(args.out, "manifest.json"))
    print(f"wrote {args.reps} repetition(s) under {args.out}")
    return EXIT_OK


# --------------------------------------------------------------------- fit

def _solver_config(args, file_cfg):
    cfg = dict(file_cfg.get("solver", {}))
    for key, flag in [("eta", args.eta), ("L0", args.L0), ("L_inf", args.L_inf),
                      ("decay", args.decay), ("max_iters", args.max_iters),
                      ("tol", args.tol), ("selection", args.selection),
                      ("tau", args.tau), ("c2", args.c2), ("folds", args.folds)]:
        if flag is not None:
            cfg[key] = flag
    return SolverConfig(**cfg)


def _init_config(file_cfg):
    return InitConfig(**file_cfg.get("init", {}))


def _fit_one(train_path, blocks_path, config, init_cfg, K, out_path,
             scale=True, beta0=None, trajectories=False, scores=False):
    layout = read_blocks_sidecar(blocks_path)
    X = read_csv_matrix(train_path)
    ds = standardize(X, layout, scale=scale)
    estimates = fit_sequential(ds, K, config, init=init_cfg, beta0=beta0)
    directions = []
    for est in estimates:
        loadings = [est.beta[sl].tolist() for sl in layout.slices()]
        directions.append({
            "r_hat": est.r_hat,
            "selected_iter": est.selected_iter,
            "loadings": loadings,
        })
    _json_dump({
        "blocks": list(layout.block_sizes),
        "config": json.loads(config.to_json()),
        "init": {"K_budget": init_cfg.K_budget, "m": init_cfg.m,
                 "per_block_keep": init_cfg.per_block_keep},
        "standardization": {
            "means": ds.col_means.tolist(),
            "scales": ds.col_scales.tolist(),
        },
        "directions": directions,
    }, out_path)
    stem = os.path.splitext(out_path)[0]
    if trajectories:
        for k, est in enumerate(estimates):
            est.trajectory.to_csv(f"{stem}_trajectory_{k + 1}.csv")
    if scores:
        # aggregated per-block score matrix, n x (D*K)
        write_csv_matrix(stem + "_scores.csv",
                         np.hstack([est.Z for est in estimates]))
    return out_path


def cmd_fit(args):
    file_cfg = {}
    if args.config:
        _require_file(args.config, "config file")
        with open(args.config) as fh:
            file_cfg = json.load(fh)
    config = _solver_config(args, file_cfg)
    init_cfg = _init_config(file_cfg)
    beta0 = None
    if args.init == "custom-vector":
        if not args.init_vector:
            raise UsageError("--init custom-vector requires --init-vector FILE")
        _require_file(args.init_vector, "init vector file")
        beta0 = np.loadtxt(args.init_vector, delimiter=",").ravel()

    if args.exp:
        _require_file(os.path.join(args.exp, "manifest.json"), "experiment manifest")
        with open(os.path.join(args.exp, "manifest.json")) as fh:
            manifest = json.load(fh)
        rep_dirs = [os.path.join(args.exp, d) for d in manifest["rep_dirs"]]
        tasks = []
        for rd in rep_dirs:
            _require_file(os.path.join(rd, "train.csv"), "train data")
            _require_file(os.path.join(rd, "blocks.json"), "blocks sidecar")
            tasks.append((os.path.join(rd, "train.csv"),
                          os.path.join(rd, "blocks.json"),
                          config, init_cfg, args.K,
                          os.path.join(rd, "directions.json"),
                          not args.no_scale, beta0, args.trajectories,
                          args.scores))
        jobs = _jobs(args, len(tasks))
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                list(pool.map(_fit_one, *zip(*tasks)))
        else:
            for t in tasks:
                _fit_one(*t)
        print(f"fitted {len(tasks)} repetition(s) under {args.exp}")
        return EXIT_OK

    if not args.train:
        raise UsageError("either --train or --exp is required")
    _require_file(args.train, "train data")
    blocks = args.blocks or os.path.join(os.path.dirname(args.train) or ".",
                                         "blocks.json")
    _require_file(blocks, "blocks sidecar")
    out = args.out or os.path.join(os.path.dirname(args.train) or ".",
                                   "directions.json")
    _fit_one(args.train, blocks, config, init_cfg, args.K, out,
             scale=not args.no_scale, beta0=beta0,
             trajectories=args.trajectories, scores=args.scores)
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------- evaluate

def _load_directions(path):
    with open(path) as fh:
        obj = json.load(fh)
    layout = BlockLayout(obj["blocks"])
    ests = []
    for d in obj["directions"]:
        beta = np.concatenate([np.asarray(b, float) for b in d["loadings"]])
        ests.append(SimpleNamespace(beta=beta, r_hat=d.get("r_hat"),
                                    selected_iter=d.get("selected_iter")))
    return layout, ests, obj


def _load_truth(path):
    with open(path) as fh:
        obj = json.load(fh)
    xi = np.column_stack([np.asarray(c, float) for c in obj["xi"]])
    return SimpleNamespace(xi=xi, rho=np.asarray(obj["rho"], float))


def _evaluate_pair(directions_path, test_path, truth_path, joint,
                   standardize_test):
    layout, ests, obj = _load_directions(directions_path)
    X = read_csv_matrix(test_path)
    if X.shape[1] != layout.p:
        raise DimensionMismatch(
            f"test data has {X.shape[1]} columns, directions expect {layout.p}")
    if standardize_test:
        stats = obj.get("standardization")
        if not stats:
            raise UsageError("directions file carries no standardization "
                             "statistics; cannot standardize test data")
        X = (X - np.asarray(stats["means"])) / np.asarray(stats["scales"])
    test = Dataset(X, layout, standardized=True)
    corr = test_deflated_correlation(test, ests)
    resid = None
    if truth_path:
        truth = _load_truth(truth_path)
        resid = projection_residual(test, truth, ests, joint=joint)
    return corr, resid


def _write_metrics(path, labels, corr_rows, resid_rows):
    corr = np.asarray(corr_rows, float)
    K = corr.shape[1]
    header = ["rep"] + [f"corr_{k + 1}" for k in range(K)]
    resid = None
    if resid_rows is not None:
        resid = np.asarray(resid_rows, float)
        header += [f"resid_{l + 1}" for l in range(resid.shape[1])]
    lines = [",".join(header)]

    def fmt(vals):
        return ",".join("%.10g" % v for v in vals)

    for i, lab in enumerate(labels):
        row = list(corr[i]) + (list(resid[i]) if resid is not None else [])
        lines.append(f"{lab}," + fmt(row))
    blocks = [corr] + ([resid] if resid is not None else [])
    data = np.hstack(blocks)
    mean = data.mean(axis=0)
    sd = data.std(axis=0, ddof=1) if data.shape[0] > 1 else np.zeros(data.shape[1])
    se = sd / math.sqrt(data.shape[0])
    lines.append("mean," + fmt(mean))
    lines.append("sd," + fmt(sd))
    lines.append("se," + fmt(se))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def cmd_evaluate(args):
    pairs = []
    labels = []
    if args.exp:
        _require_file(os.path.join(args.exp, "manifest.json"), "experiment manifest")
        with open(os.path.join(args.exp, "manifest.json")) as fh:
            manifest = json.load(fh)
        for rd in manifest["rep_dirs"]:
            base = os.path.join(args.exp, rd)
            dpath = os.path.join(base, "directions.json")
            tpath = os.path.join(base, "test.csv")
            _require_file(dpath, "directions file")
            _require_file(tpath, "test data")
            upath = os.path.join(base, "truth.json")
            pairs.append((dpath, tpath, upath if os.path.exists(upath) else None))
            labels.append(rd)
        out = args.out or os.path.join(args.exp, "metrics.csv")
    else:
        if not (args.directions and args.test):
            raise UsageError("either --exp or both --directions and --test "
                             "are required")
        _require_file(args.directions, "directions file")
        _require_file(args.test, "test data")
        if args.truth:
            _require_file(args.truth, "truth file")
        pairs.append((args.directions, args.test, args.truth))
        labels.append("0")
        out = args.out or "metrics.csv"

    have_truth = all(p[2] for p in pairs)
    tasks = [(dpath, tpath, upath if have_truth else None,
              args.residual_mode == "joint", args.standardize_test)
             for dpath, tpath, upath in pairs]
    jobs = _jobs(args, len(tasks))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate_pair, *zip(*tasks)))
    else:
        results = [_evaluate_pair(*t) for t in tasks]
    corr_rows = [corr for corr, _ in results]
    resid_rows = [resid for _, resid in results] if have_truth else []

    K = min(len(c) for c in corr_rows)
    corr_rows = [c[:K] for c in corr_rows]
    if have_truth:
        L = min(len(r) for r in resid_rows)
        resid_rows = [r[:L] for r in resid_rows]
    _write_metrics(out, labels, corr_rows, resid_rows if have_truth else None)
    print(f"wrote {out}")
    if args.plots:
        base = os.path.splitext(out)[0]
        plots.plot_correlation_summary(corr_rows, base + "_correlations.png")
        print(f"wrote {base}_correlations.png")
        if have_truth:
            plots.plot_residual_summary(resid_rows, base + "_residuals.png")
            print(f"wrote {base}_residuals.png")
    return EXIT_OK


# -------------------------------------------------------------------- main

def build_parser():
    top = argparse.ArgumentParser(prog="mscca",
                                  description="multi-block sparse CCA toolkit")
    sub = top.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate synthetic experiment data")
    sim.add_argument("--scenario", choices=["A", "B"], required=True)
    sim.add_argument("--cov", choices=["identity", "spiked", "toeplitz"],
                     default="identity")
    sim.add_argument("--n", type=int, default=1000)
    sim.add_argument("--s", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--reps", type=int, default=1)
    sim.add_argument("--out", required=True)
    sim.add_argument("--num-blocks", type=int, default=4)
    sim.add_argument("--p-d", type=int, default=500)
    sim.add_argument("--k-true", type=int, default=3)
    sim.add_argument("--n-test", type=int, default=2000)
    sim.add_argument("--support", choices=["disjoint", "shared", "independent"],
                     default="disjoint")
    sim.add_argument("--no-scale", action="store_true",
                     help="demean only, skip unit-variance scaling")
    sim.add_argument("--jobs", type=int, default=1)
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="fit directions to a training CSV")
    fit.add_argument("--train", help="training CSV (one row per sample)")
    fit.add_argument("--blocks", help="blocks sidecar JSON "
                     "(default: blocks.json next to the training file)")
    fit.add_argument("--exp", help="experiment directory (all repetitions)")
    fit.add_argument("--config", help="JSON file with solver/init settings")
    fit.add_argument("--K", type=int, default=2, help="number of directions")
    fit.add_argument("--selection", choices=["cv", "penalized", "last"])
    fit.add_argument("--folds", type=int)
    fit.add_argument("--eta", type=float)
    fit.add_argument("--L0", type=float)
    fit.add_argument("--L-inf", dest="L_inf", type=float)
    fit.add_argument("--decay", type=float)
    fit.add_argument("--max-iters", dest="max_iters", type=int)
    fit.add_argument("--tol", type=float)
    fit.add_argument("--tau", type=float)
    fit.add_argument("--c2", type=float)
    fit.add_argument("--init", choices=["screening", "custom-vector"],
                     default="screening")
    fit.add_argument("--init-vector", help="CSV vector file for --init custom-vector")
    fit.add_argument("--no-scale", action="store_true")
    fit.add_argument("--trajectories", action="store_true",
                     help="write one (t, f_t, l1_t, L_t) CSV per direction")
    fit.add_argument("--scores", action="store_true",
                     help="write the aggregated per-block score matrix CSV")
    fit.add_argument("--out", help="directions JSON output path")
    fit.add_argument("--jobs", type=int, default=1)
    fit.set_defaults(func=cmd_fit)

    ev = sub.add_parser("evaluate", help="score fitted directions on test data")
    ev.add_argument("--directions", help="directions JSON from fit")
    ev.add_argument("--test", help="test CSV")
    ev.add_argument("--truth", help="truth JSON (enables projection residuals)")
    ev.add_argument("--exp", help="experiment directory (all repetitions)")
    ev.add_argument("--out", help="metrics CSV output path")
    ev.add_argument("--residual-mode", choices=["joint", "single"],
                    default="joint")
    ev.add_argument("--standardize-test", action="store_true",
                    help="apply the training standardization stored in the "
                         "directions file to raw test data")
    ev.add_argument("--plots", action=argparse.BooleanOptionalAction,
                    default=True, help="render summary figures next to the CSV")
    ev.add_argument("--jobs", type=int, default=1)
    ev.set_defaults(func=cmd_evaluate)
    return top


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, DimensionMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MsccaError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
