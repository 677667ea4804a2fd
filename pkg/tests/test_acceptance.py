"""Acceptance criteria 1-11, each at its stated tolerance and time budget.

Each test records one PASS/FAIL line, printed together at the end of the
pytest run. Criterion 10 trains 50 models and takes roughly 20 minutes on
one core; set NSGC_SKIP_ABLATION=1 to skip it during development.
"""

import os
import time
from dataclasses import replace

import numpy as np
import pytest

from nsgc.exceptions import BadConfig
from nsgc.filters import fit_filter
from nsgc.graph import augmented_adjacency, permute_graph, permute_matrix
from nsgc.harness.datasets import SyntheticTaskSpec, generate_dataset
from nsgc.harness.experiments import (ExperimentConfig, format_report, ordering_checks,
                                      run_ablation_grid, family_mode_grid)
from nsgc.linalg import eig_sym, reconstruct, spectrum_stats
from nsgc.nsgn.gradcheck import generic_params, gradient_check
from nsgc.nsgn.model import ModelConfig, forward, init_params
from nsgc.nsgn.training import RAW_AUG_MESSAGE, TrainConfig, targets_of, train
from nsgc.spectral import (constant_map, convergence_rate, convergence_trajectory,
                           cosine_between_filtered, cosine_to_eigenvector, direct_cosine,
                           eigenspace_containment_check, graph_basis_stack,
                           injectivity_check, non_spatial_basis, power_eps, residual, transform)

from conftest import random_graph, random_orthogonal, random_symmetric, record_criterion

HERE = os.path.dirname(os.path.abspath(__file__))


def test_c01_eigendecomposition():
    rng = np.random.default_rng(101)
    sizes = rng.integers(2, 65, size=100)
    sizes[:2] = (2, 64)
    worst_orth = worst_rec = 0.0
    t0 = time.perf_counter()
    for n in sizes:
        s = random_symmetric(rng, int(n))
        d = eig_sym(s)
        worst_orth = max(worst_orth, np.abs(d.eigvecs.T @ d.eigvecs - np.eye(n)).max())
        worst_rec = max(worst_rec, np.linalg.norm(reconstruct(d) - s) / np.linalg.norm(s))
    elapsed = time.perf_counter() - t0
    ok = worst_orth <= 1e-10 and worst_rec <= 1e-8 and elapsed <= 10
    record_criterion(1, ok, f"eig_sym on 100 matrices: orthonormality {worst_orth:.2e}, "
                            f"reconstruction {worst_rec:.2e} x ||S||_F, {elapsed:.2f}s")
    assert ok


def test_c02_spectral_transform_claims():
    rng = np.random.default_rng(202)
    maps = (power_eps(1 / 3), residual(0.3), constant_map())
    t0 = time.perf_counter()
    worst_eq = 0.0
    for i in range(50):
        g = random_graph(rng, int(rng.integers(3, 17)), p=0.4)
        s = augmented_adjacency(g)
        m = rng.permutation(g.num_nodes)
        phi = maps[i % 3]
        base = transform(eig_sym(s), phi)
        moved = transform(eig_sym(permute_matrix(s, m)), phi)
        worst_eq = max(worst_eq, np.abs(moved - permute_matrix(base, m)).max())
    worst_cont = 0.0
    for _ in range(20):
        s = random_symmetric(rng, int(rng.integers(2, 17)))
        d = eig_sym(s)
        for phi in maps:
            worst_cont = max(worst_cont,
                             eigenspace_containment_check(d, transform(d, phi), phi)["max_residual"])
    inj = injectivity_check([1.0, -1.0], power_eps(1 / 3))
    flagged = (not inj["injective"]) and any(
        {c[0], c[1]} == {1.0, -1.0} for c in inj["collisions"])
    elapsed = time.perf_counter() - t0
    ok = worst_eq <= 1e-7 and worst_cont <= 1e-9 and flagged and elapsed <= 5
    record_criterion(2, ok, f"equivariance {worst_eq:.2e} over 50 permutations, containment "
                            f"{worst_cont:.2e}, (1,-1) collision flagged={flagged}, {elapsed:.2f}s")
    assert ok


def test_c03_closed_form_cosines():
    rng = np.random.default_rng(303)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(200):
        n = int(rng.integers(2, 13))
        s = random_symmetric(rng, n)
        d = eig_sym(s)
        h, h2 = rng.standard_normal(n), rng.standard_normal(n)
        k = int(rng.integers(0, 9))
        sk = np.linalg.matrix_power(s, k)
        i = int(rng.integers(0, n))
        worst = max(worst,
                    abs(cosine_to_eigenvector(d, h, i, k) - direct_cosine(sk @ h, d.eigvecs[:, i])),
                    abs(cosine_between_filtered(d, h, h2, k) - direct_cosine(sk @ h, sk @ h2)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed <= 2
    record_criterion(3, ok, f"closed-form cosines vs direct on 200 instances: {worst:.2e}, "
                            f"{elapsed:.2f}s")
    assert ok


def _separated_spectrum(rng):
    """Random S with |l1/l2| >= 1.2 and every other |l_i| <= 0.9 |l2|."""
    n = int(rng.integers(3, 13))
    r = rng.uniform(0.3, 1 / 1.2)
    mags = np.concatenate([[1.0, r], rng.uniform(0.0, 0.9 * r, n - 2)])
    lam = mags * rng.uniform(0.5, 20.0) * rng.choice([-1.0, 1.0], n)
    q = random_orthogonal(rng, n)
    s = (q * lam) @ q.T
    return 0.5 * (s + s.T)


def test_c04_monotone_convergence():
    rng = np.random.default_rng(404)
    t0 = time.perf_counter()
    worst_drop = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 13))
        d = eig_sym(random_symmetric(rng, n))
        h, h2 = rng.standard_normal(n), rng.standard_normal(n)
        traj = convergence_trajectory(d, h, h2, k_max=50)
        # |cos| to p_1 never decreases, |cos| to p_n never increases
        worst_drop = max(worst_drop, float(-np.diff(traj.column("cos_p1")).min()),
                         float(np.diff(traj.column("cos_pn")).max()))
    worst_rate = 0.0
    done = 0
    while done < 100:
        d = eig_sym(_separated_spectrum(rng))
        h = rng.standard_normal(d.n)
        if abs(d.coefficients(h)[1]) < 0.1 * np.linalg.norm(h):
            continue  # generic h: visible weight on p_2, otherwise p_3 sets the pace
        slope, expected = convergence_rate(d, h, k_max=50)
        done += 1
        worst_rate = max(worst_rate, abs(slope - expected) / abs(expected))
    elapsed = time.perf_counter() - t0
    ok = worst_drop <= 1e-12 and worst_rate <= 0.10 and elapsed <= 5
    record_criterion(4, ok, f"largest monotonicity violation {max(worst_drop, 0.0):.2e} over k=0..50 "
                            f"(100 instances); rate error {worst_rate:.2%}, {elapsed:.2f}s")
    assert ok


def test_c05_condition_number_smoothing():
    rng = np.random.default_rng(505)
    worst = 0.0
    for _ in range(50):
        s = random_symmetric(rng, int(rng.integers(2, 17)))
        d = eig_sym(s)
        cond = spectrum_stats(d)["condition_number"]
        for eps in (1 / 8, 1 / 6, 1 / 3, 1 / 2):
            cond_eps = spectrum_stats(eig_sym(non_spatial_basis(d, eps)))["condition_number"]
            worst = max(worst, abs(cond_eps - cond ** eps) / cond ** eps)
    ok = worst <= 1e-6
    record_criterion(5, ok, f"cond(S^eps) vs cond(S)^eps on 50 matrices x 4 eps: "
                            f"relative error {worst:.2e}")
    assert ok


def test_c06_vandermonde_exact_fit():
    rng = np.random.default_rng(606)
    worst = 0.0
    done = 0
    while done < 20:
        n = int(rng.integers(2, 9))
        d = eig_sym(random_symmetric(rng, n))
        eps = 1 / 3
        vals = np.sort(np.abs(d.eigvals) ** eps)
        if np.diff(vals).min() < 1e-2:
            continue  # the criterion asks for distinct |lambda|^eps
        fit = fit_filter(d, rng.standard_normal(n), eps, n - 1)
        worst = max(worst, fit.residual)
        done += 1
    ok = worst <= 1e-6
    record_criterion(6, ok, f"Vandermonde fit with k+1=n on 20 spectra: residual {worst:.2e}")
    assert ok


def test_c07_gradient_check():
    rng = np.random.default_rng(707)
    cfg = ModelConfig(hidden=4, k=3, n_layers=2)
    g = random_graph(rng, 6, p=0.5)
    params = generic_params(init_params(cfg, 7), seed=7)
    t0 = time.perf_counter()
    out = gradient_check(params, cfg, g, graph_basis_stack(g, "power_eps", 3, 1 / 3),
                         n_samples=100, step=1e-5, seed=7)
    elapsed = time.perf_counter() - t0
    ok = out["max_rel_error"] <= 1e-4 and elapsed <= 30
    record_criterion(7, ok, f"gradient check, 100 parameters, 6 nodes d=4 k=3 L=2: "
                            f"max relative error {out['max_rel_error']:.2e}, {elapsed:.2f}s")
    assert ok


def test_c08_model_permutation_invariance():
    rng = np.random.default_rng(808)
    cfg = ModelConfig(node_dim=3, hidden=16, k=6, n_layers=2)
    params = init_params(cfg, 8)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 17))
        g = random_graph(rng, n, p=0.4, node_dim=3)
        gp = permute_graph(g, rng.permutation(n))
        a = forward(params, cfg, g, graph_basis_stack(g, "power_eps", 6, 1 / 3))[0]
        b = forward(params, cfg, gp, graph_basis_stack(gp, "power_eps", 6, 1 / 3))[0]
        worst = max(worst, float(np.abs(a - b).max()))
    ok = worst <= 1e-8
    record_criterion(8, ok, f"model output change under 20 relabelings: {worst:.2e}")
    assert ok


def test_c09_overfit_oracle():
    ds = generate_dataset(SyntheticTaskSpec(n_graphs=10, seed=0))
    graphs = ds.train + ds.valid + ds.test
    cfg = TrainConfig(epochs=500, lr=3e-3, lr_schedule="cosine", select_best=False, seed=0)
    t0 = time.perf_counter()
    result = train({"train": graphs}, cfg)
    elapsed = time.perf_counter() - t0
    mae = result.evaluate(result.prepare(graphs), targets_of(graphs, "regression"))["mae"]
    ok = mae <= 0.05 and elapsed <= 60
    record_criterion(9, ok, f"10-graph triangle-count regression, 500 epochs: train MAE "
                            f"{mae:.4f}, {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
@pytest.mark.skipif(os.environ.get("NSGC_SKIP_ABLATION") == "1",
                    reason="NSGC_SKIP_ABLATION=1")
def test_c10_ablation_ordering():
    base = ExperimentConfig(hidden=32, n_layers=2, seeds=(0, 1, 2, 3, 4), epochs=20,
                            batch_size=32, lr=3e-3, lr_schedule="cosine",
                            task=SyntheticTaskSpec(n_graphs=2000, size_range=(8, 16),
                                                   target="triangle_count", seed=0))
    cells = family_mode_grid(base, k=6, raw_aug_k=5)
    cells += [replace(base, family="power_eps", k=k) for k in (3, 9)]
    t0 = time.perf_counter()
    results = run_ablation_grid(cells)
    elapsed = time.perf_counter() - t0
    checks = ordering_checks(results)
    report = format_report(results, checks)
    with open(os.path.join(HERE, "..", "ablation_report.txt"), "w") as fh:
        fh.write(report)
        fh.write(f"total {elapsed:.0f}s\n")
    print(report)
    failed = [c["name"] for c in checks if not c["passed"]]
    ok = not failed and elapsed <= 1800 and len(checks) == 6
    record_criterion(10, ok, f"ablation orderings (a) x4, (b), (c) on medians of 5 seeds: "
                             f"{len(checks) - len(failed)}/{len(checks)} hold"
                             f"{' (failed: ' + ', '.join(failed) + ')' if failed else ''}, "
                             f"{elapsed / 60:.1f} min; per-seed tables in ablation_report.txt")
    assert ok, report


def test_c11_raw_aug_guard():
    expected = ("raw_aug basis rejected for k=6: raw A+I powers suffer from numerical "
                "instability when k>5")
    with pytest.raises(BadConfig) as grid_err:
        run_ablation_grid([ExperimentConfig(family="raw_aug", k=6)])
    with pytest.raises(BadConfig) as cfg_err:
        ExperimentConfig.from_dict({"family": "raw_aug", "k": 9})
    ok = (str(grid_err.value) == expected == RAW_AUG_MESSAGE.format(k=6)
          and "k=9" in str(cfg_err.value))
    ExperimentConfig(family="raw_aug", k=5).validate()
    record_criterion(11, ok, f"raw_aug k>5 rejected: {grid_err.value}")
    assert ok
