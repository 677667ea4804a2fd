"""Finite-difference check of the manual backward pass."""

import numpy as np

from .model import backward, forward


def generic_params(params, seed=0, scale=0.1):
    """Copy of ``params`` with biases drawn from ``N(0, scale^2)``.

    Freshly initialized biases are exactly zero, which can park a whole
    ReLU layer at its kink, where central differences are not defined.
    """
    rng = np.random.default_rng(seed)
    out = {}
    for name, p in params.items():
        leaf = name.rsplit(".", 1)[1]
        out[name] = p + scale * rng.standard_normal(p.shape) if leaf.startswith("b") else p.copy()
    return type(params)(out)


def gradient_check(params, cfg, g, stack, n_samples=100, step=1e-5, seed=0, floor=1e-7):
    """Compare analytic and central-difference gradients of ``w . forward(g)``.

    ``n_samples`` scalar parameters are drawn uniformly over all parameter
    entries. The relative error of one entry is
    ``|a - f| / max(|a|, |f|, floor)``. Returns a dict with the worst error
    and the per-sample records.
    """
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(cfg.out_dim)
    _, cache = forward(params, cfg, g, stack)
    grads = backward(params, cfg, cache, w)
    names = list(params)
    sizes = np.array([params[n].size for n in names])
    picks = rng.choice(int(sizes.sum()), size=n_samples, replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    records = []
    for flat in picks:
        pi = int(np.searchsorted(offsets, flat, side="right") - 1)
        name = names[pi]
        idx = np.unravel_index(int(flat - offsets[pi]), params[name].shape)
        old = params[name][idx]
        params[name][idx] = old + step
        up = float(w @ forward(params, cfg, g, stack)[0])
        params[name][idx] = old - step
        down = float(w @ forward(params, cfg, g, stack)[0])
        params[name][idx] = old
        numeric = (up - down) / (2.0 * step)
        analytic = float(grads[name][idx])
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
        records.append({"name": name, "index": idx, "analytic": analytic,
                        "numeric": numeric, "rel_error": rel})
    worst = max(r["rel_error"] for r in records) if records else 0.0
    return {"max_rel_error": worst, "records": records}
