import numpy as np
import pytest

from nsgc.exceptions import BadConfig
from nsgc.harness.datasets import SyntheticTaskSpec
from nsgc.harness.experiments import (ExperimentConfig, CellResult, format_report,
                                      grid_from_dict, grid_rows, ordering_checks,
                                      run_ablation_grid, run_experiment, family_mode_grid,
                                      thread_limit)
from nsgc.nsgn.training import RAW_AUG_MESSAGE

TINY = SyntheticTaskSpec(n_graphs=20, size_range=(5, 7), seed=2)


def tiny(**kw):
    base = dict(hidden=4, k=2, epochs=2, batch_size=8, seeds=(0, 1), task=TINY)
    base.update(kw)
    return ExperimentConfig(**base)


def test_epochs_zero_is_untrained():
    rep = run_experiment(tiny(epochs=0))
    assert [r["seed"] for r in rep.rows] == [0, 1]
    assert all(r["best_epoch"] == 0 for r in rep.rows)


def test_five_seed_report():
    rep = run_experiment(tiny(seeds=(0, 1, 2, 3, 4), epochs=1))
    assert len(rep.rows) == 5
    vals = rep.values()
    assert rep.mean == pytest.approx(vals.mean())
    assert rep.median == pytest.approx(np.median(vals))


def test_seed_determinism():
    a = run_experiment(tiny(seeds=(3,)))
    b = run_experiment(tiny(seeds=(3,)))
    assert a.rows[0]["test_mae"] == b.rows[0]["test_mae"]


def test_two_cell_grid():
    res = run_ablation_grid([tiny(channel_mode="shared"), tiny(channel_mode="independent")],
                            threads=1)
    rows = grid_rows(res)
    assert len(rows) == 2 and [r[0] for r in rows] == [0, 1]
    assert all(r.status == "ok" for r in res)


def test_family_mode_grid_shape():
    cells = family_mode_grid(tiny())
    assert len(cells) == 8
    assert {(c.family, c.channel_mode) for c in cells} == {
        (f, m) for f in ("raw_aug", "sym_norm", "rw_norm", "power_eps")
        for m in ("shared", "independent")}
    assert all(c.k == 5 for c in cells if c.family == "raw_aug")


def test_raw_aug_cap_rejects_grid():
    with pytest.raises(BadConfig) as info:
        run_ablation_grid([tiny(), tiny(family="raw_aug", k=6)])
    assert str(info.value) == RAW_AUG_MESSAGE.format(k=6)


def test_duplicate_cells_rejected():
    with pytest.raises(BadConfig):
        run_ablation_grid([tiny(), tiny()])


def test_failed_cell_keeps_its_row(monkeypatch):
    import nsgc.harness.experiments as ex

    def boom(config):
        raise RuntimeError("boom")
    monkeypatch.setattr(ex, "run_experiment", boom)
    res = run_ablation_grid([tiny()], threads=1)
    assert res[0].status.startswith("failed: RuntimeError")
    assert grid_rows(res)[0][5].startswith("failed")
    assert "failed" in format_report(res, ordering_checks(res))


def test_grid_file_parsing():
    cells = grid_from_dict({"defaults": {"hidden": 4, "task": TINY.to_dict()},
                            "family_modes": True, "k_sweep": {"ks": [3, 9], "families": ["power_eps"]},
                            "cells": [{"family": "sym_norm", "k": 3}]})
    assert len(cells) == 8 + 2 + 1
    with pytest.raises(BadConfig):
        grid_from_dict({"cell": []})


def test_ordering_checks_logic():
    class Rep:
        def __init__(self, m):
            self.median = m
    def cell(i, fam, mode, k, m):
        return CellResult(i, ExperimentConfig(family=fam, channel_mode=mode, k=k), "ok", Rep(m))
    res = [cell(0, "power_eps", "independent", 6, 0.1), cell(1, "power_eps", "shared", 6, 0.2),
           cell(2, "sym_norm", "independent", 6, 0.3), cell(3, "sym_norm", "shared", 6, 0.25),
           cell(4, "power_eps", "independent", 3, 0.2), cell(5, "power_eps", "independent", 9, 0.15)]
    got = {c["name"]: c["passed"] for c in ordering_checks(res)}
    assert got == {"a:power_eps:k=6": True, "a:sym_norm:k=6": False, "b": True, "c": True}


def test_thread_limit(monkeypatch):
    monkeypatch.delenv("NSGC_THREADS", raising=False)
    assert thread_limit() == 1
    monkeypatch.setenv("NSGC_THREADS", "3")
    assert thread_limit() == 3
    monkeypatch.setenv("NSGC_THREADS", "zero")
    with pytest.raises(BadConfig):
        thread_limit()


def test_parallel_matches_serial():
    cells = [tiny(channel_mode="shared", seeds=(0,)), tiny(channel_mode="independent", seeds=(0,))]
    serial = run_ablation_grid(cells, threads=1)
    parallel = run_ablation_grid(cells, threads=2)
    assert [r.report.rows[0]["test_mae"] for r in serial] == \
           [r.report.rows[0]["test_mae"] for r in parallel]
