"""Command-line interface.

Every subcommand writes its outputs atomically. On failure the process
exits with status 1 and prints one line to stderr::

    error: <ErrorKind>: <message>

Unknown subcommands and malformed arguments exit with status 2 and usage
text. Floats are printed with 9 significant digits.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from .exceptions import BadConfig, DimensionMismatch, NotSymmetric, NSGCError
from .filters import fit_filter
from .graph import augmented_adjacency, basis_matrix, load_graphs, sym_similar
from .harness.datasets import SyntheticTaskSpec, generate_dataset
from .harness.experiments import (GRID_HEADER, SEED_HEADER, cell_filename, format_report,
                                  grid_from_dict, grid_rows, ordering_checks,
                                  run_ablation_grid, seed_rows)
from .io import csv_text, staged_directory, write_csv_atomic
from .linalg import eig_sym, spectrum_stats
from .nsgn.checkpoint import save_checkpoint
from .nsgn.training import TrainConfig, targets_of, train
from .spectral import convergence_trajectory, graph_basis_stack, power_eps, transform

SPECTRUM_FAMILIES = ("raw_aug", "sym_norm", "rw_norm", "laplacian", "power_eps")
BASIS_CLI_FAMILIES = ("power_eps", "raw_aug", "sym_norm", "rw_norm")


def _one_graph(path):
    graphs = load_graphs(path)
    if len(graphs) != 1:
        raise BadConfig(f"{path} holds {len(graphs)} graphs; expected exactly one")
    return graphs[0]


def _symmetric_matrix(g, family, eps):
    """Symmetric matrix whose spectrum is reported for ``family``."""
    if family == "power_eps":
        return transform(eig_sym(augmented_adjacency(g)), power_eps(eps))
    if family == "rw_norm":
        return sym_similar(g)
    return basis_matrix(g, family)


# -- subcommands -----------------------------------------------------------

def cmd_basis(args):
    g = _one_graph(args.graph)
    stack = graph_basis_stack(g, args.family, args.k, args.eps if args.family == "power_eps"
                              else None, source=args.source)
    rows = []
    for i, mat in enumerate(stack.mats):
        for r in range(stack.n):
            for c in range(stack.n):
                rows.append([i, r, c, float(mat[r, c])])
    write_csv_atomic(args.out, ["i", "row", "col", "value"], rows)


def cmd_spectrum(args):
    g = _one_graph(args.graph)
    d = eig_sym(_symmetric_matrix(g, args.family, args.eps))
    stats = spectrum_stats(d)
    rows = [["eigenvalue", i, float(v)] for i, v in enumerate(d.eigvals)]
    rows += [["spectral_gap_ratio", "", stats["spectral_gap_ratio"]],
             ["condition_number", "", stats["condition_number"]],
             ["num_zero", "", stats["num_zero"]]]
    write_csv_atomic(args.out, ["quantity", "index", "value"], rows)


def _signal(spec, n, rng):
    if spec == "random":
        return rng.standard_normal(n)
    if spec.startswith("onehot:"):
        try:
            idx = int(spec.split(":", 1)[1])
        except ValueError:
            raise BadConfig(f"bad signal {spec!r}; expected onehot:IDX") from None
        if not 0 <= idx < n:
            raise DimensionMismatch(f"onehot index {idx} out of range for {n} nodes")
        h = np.zeros(n)
        h[idx] = 1.0
        return h
    raise BadConfig(f"bad signal {spec!r}; expected random or onehot:IDX")


def cmd_converge(args):
    g = _one_graph(args.graph)
    if args.family == "rw_norm":
        raise NotSymmetric("rw_norm is not symmetric; cosine trajectories need a symmetric basis")
    if args.kmax < 0:
        raise BadConfig("kmax must be non-negative")
    d = eig_sym(_symmetric_matrix(g, args.family, args.eps))
    rng = np.random.default_rng(args.seed)
    h = _signal(args.signal, g.num_nodes, rng)
    h2 = rng.standard_normal(g.num_nodes)
    traj = convergence_trajectory(d, h, h2, k_max=args.kmax)
    rows = [[r["k"], r["cos_p1"], r["cos_pn"], r["cos_pair"], r["flags"]] for r in traj.rows]
    write_csv_atomic(args.out, ["k", "cos_p1", "cos_pn", "cos_pair", "flags"], rows)


def _read_desired(path):
    """A JSON array, or text with one number per line (an optional header is skipped)."""
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        values = []
        for line in text.splitlines():
            cell = line.split(",")[-1].strip()
            if not cell:
                continue
            try:
                values.append(float(cell))
            except ValueError:
                if values:
                    raise BadConfig(f"non-numeric desired value {cell!r}") from None
        return np.array(values)
    if isinstance(data, dict):
        data = data.get("values")
    if not isinstance(data, list):
        raise BadConfig("desired file must hold a list of numbers")
    return np.asarray(data, dtype=float)


def cmd_fit_filter(args):
    g = _one_graph(args.graph)
    d = eig_sym(basis_matrix(g, args.source))
    fit = fit_filter(d, _read_desired(args.desired), args.eps, args.k)
    rows = [["theta", i, float(v)] for i, v in enumerate(fit.theta)]
    rows += [["residual", "", fit.residual], ["rank", "", fit.rank],
             ["rank_deficient", "", int(fit.rank_deficient)]]
    write_csv_atomic(args.out, ["quantity", "index", "value"], rows)


def _load_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise BadConfig(f"{path}: invalid JSON ({exc})") from None


def _train_data(conf, base_dir):
    """Splits from ``data`` (paths to graph files) or ``task`` (a synthetic task spec)."""
    if "data" in conf and "task" in conf:
        raise BadConfig("give either data or task, not both")
    if "data" in conf:
        splits = {}
        for split, path in conf["data"].items():
            if split not in ("train", "valid", "test"):
                raise BadConfig(f"unknown split {split!r}")
            splits[split] = load_graphs(os.path.join(base_dir, path))
        return splits
    if "task" in conf:
        return generate_dataset(SyntheticTaskSpec.from_dict(conf["task"])).splits()
    raise BadConfig("training config needs data or task")


def cmd_train(args):
    conf = _load_json(args.config)
    unknown = set(conf) - {"train", "data", "task"}
    if unknown:
        raise BadConfig(f"unknown config keys: {sorted(unknown)}")
    cfg = TrainConfig.from_dict(conf.get("train", {}))
    splits = _train_data(conf, os.path.dirname(os.path.abspath(args.config)))
    result = train(splits, cfg)
    rows = [[h["epoch"], h["split"], float(h["loss"])] for h in result.history]
    if splits.get("test"):
        test = result.evaluate(result.prepare(splits["test"]), targets_of(splits["test"], cfg.task))
        rows.append([result.history[-1]["epoch"], "test", test["loss"]])
    with staged_directory(args.out) as stage:
        save_checkpoint(result, os.path.join(stage, "checkpoint.json"))
        with open(os.path.join(stage, "metrics.csv"), "w") as fh:
            fh.write(csv_text(["epoch", "split", "loss"], rows))


def cmd_ablate(args):
    grid = grid_from_dict(_load_json(args.grid))
    results = run_ablation_grid(grid)
    checks = ordering_checks(results)
    with staged_directory(args.out) as stage:
        with open(os.path.join(stage, "grid.csv"), "w") as fh:
            fh.write(csv_text(GRID_HEADER, grid_rows(results)))
        for r in results:
            if r.report is None:
                continue
            base = os.path.join(stage, cell_filename(r))
            with open(base + "_seeds.csv", "w") as fh:
                fh.write(csv_text(SEED_HEADER, seed_rows(r.report)))
            hist = [[seed, h["epoch"], h["split"], float(h["loss"])]
                    for seed, rows in r.report.histories.items() for h in rows]
            with open(base + "_metrics.csv", "w") as fh:
                fh.write(csv_text(["seed", "epoch", "split", "loss"], hist))
        with open(os.path.join(stage, "report.txt"), "w") as fh:
            fh.write(format_report(results, checks))
        with open(os.path.join(stage, "grid.json"), "w") as fh:
            json.dump({"cells": [r.config.to_dict() for r in results], "checks": checks},
                      fh, indent=2)
            fh.write("\n")


# -- parser ----------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="nsgc", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("basis", help="write a basis stack as CSV (i,row,col,value)")
    p.add_argument("--graph", required=True)
    p.add_argument("--family", required=True, choices=BASIS_CLI_FAMILIES)
    p.add_argument("--eps", type=float, default=1 / 3)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--source", default="raw_aug", choices=("raw_aug", "sym_norm", "laplacian"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("spectrum", help="eigenvalues, gap ratio, condition number, zero count")
    p.add_argument("--graph", required=True)
    p.add_argument("--family", required=True, choices=SPECTRUM_FAMILIES)
    p.add_argument("--eps", type=float, default=1 / 3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("converge", help="cosine trajectory of S^k h")
    p.add_argument("--graph", required=True)
    p.add_argument("--family", required=True, choices=SPECTRUM_FAMILIES)
    p.add_argument("--eps", type=float, default=1 / 3)
    p.add_argument("--signal", default="random")
    p.add_argument("--kmax", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("fit-filter", help="least-squares coefficients for a desired response")
    p.add_argument("--graph", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--desired", required=True)
    p.add_argument("--source", default="raw_aug", choices=("raw_aug", "sym_norm", "laplacian"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_filter)

    p = sub.add_parser("train", help="train a model; writes checkpoint.json and metrics.csv")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ablate", help="run an ablation grid; writes grid.csv and per-cell files")
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except NSGCError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, TypeError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
