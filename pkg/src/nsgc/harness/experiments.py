"""Experiment and ablation-grid orchestration.

A cell is one (basis family, eps, k, channel mode) setting trained with
every seed in its seed list. Prepared tensors are cached per process and
shared by all seeds and channel modes that need the same basis.
"""

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..exceptions import BadConfig
from ..nsgn.training import TrainConfig, prepare_splits, targets_of, train
from .datasets import SyntheticTaskSpec, generate_dataset

log = logging.getLogger(__name__)

DEFAULT_SEEDS = (0, 1, 2, 3, 4)
TABLE4_FAMILIES = ("raw_aug", "sym_norm", "rw_norm", "power_eps")
CHANNEL_MODES = ("shared", "independent")


@dataclass
class ExperimentConfig:
    family: str = "power_eps"
    eps: float = 1.0 / 3.0
    k: int = 6
    channel_mode: str = "independent"
    hidden: int = 32
    n_layers: int = 2
    seeds: tuple = DEFAULT_SEEDS
    epochs: int = 20
    batch_size: int = 32
    lr: float = 3e-3
    lr_schedule: str = "cosine"
    weight_decay: float = 0.0
    basis_scaling: bool = True
    dtype: str = "float64"
    task: SyntheticTaskSpec = field(default_factory=SyntheticTaskSpec)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise BadConfig(f"unknown experiment options: {sorted(unknown)}")
        task = data.pop("task", None)
        if isinstance(task, dict):
            task = SyntheticTaskSpec.from_dict(task)
        cfg = cls(**data, task=task or SyntheticTaskSpec())
        cfg.seeds = tuple(int(s) for s in cfg.seeds)
        return cfg.validate()

    def to_dict(self):
        out = asdict(self)
        out["seeds"] = list(self.seeds)
        out["task"] = self.task.to_dict()
        return out

    def validate(self):
        if not self.seeds:
            raise BadConfig("seed list is empty")
        self.task.validate()
        self.train_config(self.seeds[0])
        return self

    def train_config(self, seed):
        return TrainConfig(
            family=self.family, eps=self.eps, k=self.k, channel_mode=self.channel_mode,
            hidden=self.hidden, n_layers=self.n_layers, epochs=self.epochs,
            batch_size=self.batch_size, lr=self.lr, lr_schedule=self.lr_schedule,
            weight_decay=self.weight_decay, basis_scaling=self.basis_scaling,
            dtype=self.dtype, seed=int(seed)).validate()

    @property
    def label(self):
        fam = f"power_eps({self.eps:.4g})" if self.family == "power_eps" else self.family
        return f"{fam} k={self.k} {self.channel_mode}"


# -- caches ----------------------------------------------------------------

_DATASETS = {}
_PREPARED = {}


def _task_key(spec):
    return json.dumps(spec.to_dict(), sort_keys=True)


def dataset_for(spec):
    key = _task_key(spec)
    if key not in _DATASETS:
        _DATASETS[key] = generate_dataset(spec)
    return _DATASETS[key]


def prepared_for(config):
    """Prepared splits for ``config``; channel mode and seed do not affect them."""
    tcfg = config.train_config(config.seeds[0])
    eps = config.eps if config.family == "power_eps" else None
    key = (_task_key(config.task), config.family, eps, config.k, config.dtype,
           config.basis_scaling)
    if key not in _PREPARED:
        _PREPARED[key] = prepare_splits(dataset_for(config.task).splits(), tcfg)
    return _PREPARED[key]


def clear_caches():
    _DATASETS.clear()
    _PREPARED.clear()


# -- single experiment -----------------------------------------------------

@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list
    histories: dict

    def values(self, name="test_mae"):
        return np.array([r[name] for r in self.rows], dtype=float)

    @property
    def mean(self):
        return float(np.mean(self.values()))

    @property
    def std(self):
        return float(np.std(self.values()))

    @property
    def median(self):
        return float(np.median(self.values()))


def run_experiment(config):
    """Train one model per seed and report train/valid/test MAE per seed."""
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    config.validate()
    ds = dataset_for(config.task)
    prepared = prepared_for(config)
    targets = {s: targets_of(g, "regression") for s, g in ds.splits().items() if g}
    rows, histories = [], {}
    for seed in config.seeds:
        t0 = time.perf_counter()
        result = train(ds.splits(), config.train_config(seed), prepared)
        row = {"seed": int(seed)}
        for split in ("train", "valid", "test"):
            if split in targets:
                row[f"{split}_mae"] = result.evaluate(prepared[split], targets[split])["mae"]
        row["best_epoch"] = result.best_epoch
        row["diverged"] = result.diverged
        row["seconds"] = time.perf_counter() - t0
        rows.append(row)
        histories[int(seed)] = result.history
        log.info("%s seed %d: test MAE %.4f (%.1fs)", config.label, seed,
                 row.get("test_mae", float("nan")), row["seconds"])
    return ExperimentReport(config, rows, histories)


# -- grids -----------------------------------------------------------------

@dataclass
class CellResult:
    index: int
    config: ExperimentConfig
    status: str
    report: ExperimentReport = None
    seconds: float = 0.0


def _run_cell(args):
    index, config = args
    t0 = time.perf_counter()
    try:
        report = run_experiment(config)
        status = "ok"
        if any(r["diverged"] for r in report.rows):
            status = "diverged"
    except Exception as exc:  # a failed cell is reported, not dropped
        log.exception("cell %d failed", index)
        return CellResult(index, config, f"failed: {type(exc).__name__}: {exc}",
                          seconds=time.perf_counter() - t0)
    return CellResult(index, config, status, report, time.perf_counter() - t0)


def thread_limit():
    raw = os.environ.get("NSGC_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise BadConfig(f"NSGC_THREADS must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise BadConfig(f"NSGC_THREADS must be a positive integer, got {raw!r}")
    return value


def run_ablation_grid(configs, threads=None):
    """Run every cell and return :class:`CellResult` objects in cell order.

    Every config is validated before anything runs, so an invalid cell
    (such as raw_aug with k > 5) rejects the whole grid. Cells run in up to
    ``threads`` worker processes (default: ``NSGC_THREADS``, else 1).
    """
    cells = [c if isinstance(c, ExperimentConfig) else ExperimentConfig.from_dict(c)
             for c in configs]
    if not cells:
        raise BadConfig("ablation grid has no cells")
    for c in cells:
        c.validate()
    keys = [(c.family, c.eps if c.family == "power_eps" else None, c.k, c.channel_mode,
             _task_key(c.task)) for c in cells]
    if len(set(keys)) != len(keys):
        raise BadConfig("ablation grid repeats a (family, eps, k, channel_mode) cell")
    threads = thread_limit() if threads is None else threads
    jobs = list(enumerate(cells))
    if threads <= 1 or len(cells) == 1:
        return [_run_cell(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(threads, len(cells))) as pool:
        return list(pool.map(_run_cell, jobs))


def family_mode_grid(base=None, k=6, raw_aug_k=5):
    """The 8 cells of the basis x channel-mode table; raw_aug uses ``raw_aug_k``."""
    base = base or ExperimentConfig()
    return [replace(base, family=fam, channel_mode=mode,
                    k=raw_aug_k if fam == "raw_aug" else k)
            for fam in TABLE4_FAMILIES for mode in CHANNEL_MODES]


def k_sweep(base, ks, families=("sym_norm", "rw_norm", "power_eps")):
    return [replace(base, family=fam, k=int(k)) for fam in families for k in ks]


def grid_from_dict(data):
    """Cells from a grid file.

    Accepted keys: ``defaults`` (fields shared by all cells), ``cells``
    (list of per-cell overrides), ``family_modes`` (bool, add every family in both channel modes)
    and ``k_sweep`` (``{"ks": [...], "families": [...]}``).
    """
    unknown = set(data) - {"defaults", "cells", "family_modes", "k_sweep"}
    if unknown:
        raise BadConfig(f"unknown grid keys: {sorted(unknown)}")
    defaults = dict(data.get("defaults", {}))
    base = ExperimentConfig.from_dict(defaults)
    cells = []
    if data.get("family_modes"):
        cells += family_mode_grid(base)
    sweep = data.get("k_sweep")
    if sweep:
        fams = tuple(sweep.get("families", ("sym_norm", "rw_norm", "power_eps")))
        cells += k_sweep(base, sweep["ks"], fams)
    for override in data.get("cells", []):
        merged = {**defaults, **override}
        cells.append(ExperimentConfig.from_dict(merged))
    seen, unique = set(), []
    for c in cells:
        key = (c.family, c.eps if c.family == "power_eps" else None, c.k, c.channel_mode)
        if key not in seen:
            seen.add(key)
            unique.append(c)
    return unique


# -- reporting -------------------------------------------------------------

GRID_HEADER = ["cell", "family", "eps", "k", "channel_mode", "status", "n_seeds",
               "mean_test_mae", "std_test_mae", "median_test_mae", "seconds"]
SEED_HEADER = ["seed", "train_mae", "valid_mae", "test_mae", "best_epoch", "diverged", "seconds"]


def grid_rows(results):
    rows = []
    for r in results:
        c = r.config
        eps = c.eps if c.family == "power_eps" else None
        if r.report is not None:
            stats = [len(r.report.rows), r.report.mean, r.report.std, r.report.median]
        else:
            stats = [0, None, None, None]
        rows.append([r.index, c.family, eps, c.k, c.channel_mode, r.status, *stats, r.seconds])
    return rows


def seed_rows(report):
    return [[row.get(h) for h in SEED_HEADER] for row in report.rows]


def cell_filename(result):
    c = result.config
    fam = f"power_eps{c.eps:.4g}" if c.family == "power_eps" else c.family
    return f"cell{result.index:02d}_{fam}_k{c.k}_{c.channel_mode}"


def find_cell(results, family, channel_mode, k=None, eps=None):
    for r in results:
        c = r.config
        if c.family != family or c.channel_mode != channel_mode:
            continue
        if k is not None and c.k != k:
            continue
        if eps is not None and c.family == "power_eps" and not np.isclose(c.eps, eps):
            continue
        return r
    return None


def _median(result):
    if result is None or result.report is None:
        return None
    return result.report.median


def ordering_checks(results, eps=1.0 / 3.0):
    """Directional checks on median test MAE.

    ``a:<family>`` independent <= shared at the same k; ``b`` power_eps(k=6)
    <= sym_norm(k=6); ``c`` power_eps k=9 <= k=3 (independent channels).
    A check whose cells are missing or failed reports ``passed=None``.
    """
    checks = []
    families = []
    for r in results:
        if r.config.family not in families:
            families.append(r.config.family)
    for fam in families:
        for r in results:
            c = r.config
            if c.family != fam or c.channel_mode != "independent":
                continue
            other = find_cell(results, fam, "shared", c.k, c.eps)
            if other is None:
                continue
            lhs, rhs = _median(r), _median(other)
            checks.append(_check(f"a:{fam}:k={c.k}", f"{c.label} <= {other.config.label}",
                                 lhs, rhs))
    pe6 = find_cell(results, "power_eps", "independent", 6, eps)
    sn6 = find_cell(results, "sym_norm", "independent", 6)
    if pe6 is not None and sn6 is not None:
        checks.append(_check("b", "power_eps k=6 <= sym_norm k=6", _median(pe6), _median(sn6)))
    pe9 = find_cell(results, "power_eps", "independent", 9, eps)
    pe3 = find_cell(results, "power_eps", "independent", 3, eps)
    if pe9 is not None and pe3 is not None:
        checks.append(_check("c", "power_eps k=9 <= k=3", _median(pe9), _median(pe3)))
    return checks


def _check(name, text, lhs, rhs):
    passed = None if lhs is None or rhs is None else bool(lhs <= rhs)
    return {"name": name, "claim": text, "lhs": lhs, "rhs": rhs, "passed": passed}


def format_report(results, checks):
    """Plain-text report with the combined table, per-seed tables and check outcomes."""
    lines = ["cell  setting                                   status    median     mean       std"]
    for r in results:
        if r.report is None:
            lines.append(f"{r.index:>4}  {r.config.label:<40}  {r.status}")
            continue
        rep = r.report
        lines.append(f"{r.index:>4}  {r.config.label:<40}  {r.status:<8}  "
                     f"{rep.median:.9g}  {rep.mean:.9g}  {rep.std:.9g}")
    lines.append("")
    for r in results:
        if r.report is None:
            continue
        lines.append(f"[{r.index}] {r.config.label}")
        lines.append("  seed  train_mae    valid_mae    test_mae     best_epoch")
        for row in r.report.rows:
            lines.append(f"  {row['seed']:>4}  {row['train_mae']:<11.9g}  "
                         f"{row.get('valid_mae', float('nan')):<11.9g}  "
                         f"{row.get('test_mae', float('nan')):<11.9g}  {row['best_epoch']}")
    lines.append("")
    for chk in checks:
        state = {True: "PASS", False: "FAIL", None: "N/A "}[chk["passed"]]
        lines.append(f"{state} {chk['name']}: {chk['claim']} "
                     f"({_g(chk['lhs'])} vs {_g(chk['rhs'])})")
    return "\n".join(lines) + "\n"


def _g(v):
    return "n/a" if v is None else f"{v:.9g}"
