"""Polynomial graph filters over a basis stack, plus GCN and GDC reference operators."""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .exceptions import DimensionMismatch, DivergentSeries
from .linalg import eig_sym, zero_tol


def _basis_values(eigvals, eps, k):
    """``V[i, j] = |lambda_i| ** (eps * j)``; ``eps=None`` gives signed ``lambda_i ** j``."""
    lam = np.asarray(eigvals, dtype=float)
    j = np.arange(k + 1)
    if eps is None:
        return lam[:, None] ** j[None, :]
    mag = np.abs(lam)
    out = np.zeros((len(lam), k + 1))
    out[:, 0] = 1.0
    nz = mag > zero_tol(mag)
    out[nz, 1:] = np.exp(eps * np.log(mag[nz])[:, None] * j[None, 1:])
    return out


def filter_response(theta, eigvals, eps):
    """Spectral response ``sum_i theta_i |lambda|^(eps*i)`` at every eigenvalue."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    return _basis_values(eigvals, eps, len(theta) - 1) @ theta


@dataclass
class FilterFit:
    theta: np.ndarray
    residual: float
    rank: int
    rank_deficient: bool


def fit_filter(d, desired, eps, k):
    """Least-squares coefficients reproducing ``desired`` on the spectrum of ``d``.

    ``desired`` is a sequence aligned with ``d.eigvals`` or a callable of
    the eigenvalues. The solve is SVD based and returns the minimum-norm
    solution when the value matrix is rank deficient.
    """
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if callable(desired):
        desired = desired(d.eigvals)
    desired = np.asarray(desired, dtype=float).reshape(-1)
    if desired.shape[0] != d.n:
        raise DimensionMismatch(f"{desired.shape[0]} desired values for {d.n} eigenvalues")
    v = _basis_values(d.eigvals, eps, k)
    theta, _, rank, _ = np.linalg.lstsq(v, desired, rcond=None)
    resid = float(np.linalg.norm(v @ theta - desired))
    return FilterFit(theta, resid, int(rank), int(rank) < min(v.shape))


def _check_stack_input(stack, h):
    h = np.asarray(h, dtype=float)
    if h.ndim == 1:
        h = h[:, None]
    if h.shape[0] != stack.n:
        raise DimensionMismatch(f"signal has {h.shape[0]} rows, basis has size {stack.n}")
    return h


def apply_shared_filter(stack, theta, h):
    """``sum_i theta_i mats[i] @ h``: one coefficient vector for every column."""
    h = _check_stack_input(stack, h)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != stack.k + 1:
        raise DimensionMismatch(f"{theta.shape[0]} coefficients for {stack.k + 1} bases")
    return np.tensordot(theta, stack.mats, axes=1) @ h


def apply_channel_filter(stack, theta, h):
    """Column ``j`` of the output is ``sum_i theta[i, j] mats[i] @ h[:, j]``."""
    h = _check_stack_input(stack, h)
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 1:
        theta = theta[:, None]
    if theta.shape != (stack.k + 1, h.shape[1]):
        raise DimensionMismatch(
            f"coefficients of shape {theta.shape}, expected {(stack.k + 1, h.shape[1])}")
    return np.einsum("ij,iab,bj->aj", theta, stack.mats, h)


def gcn_layer(a_hat, h, w, nonlinearity="relu"):
    out = np.asarray(a_hat) @ np.asarray(h) @ np.asarray(w)
    if nonlinearity == "relu":
        return np.maximum(out, 0.0)
    if nonlinearity == "identity":
        return out
    raise ValueError(f"unknown nonlinearity {nonlinearity!r}")


@dataclass
class Diffusion:
    matrix: np.ndarray
    coefficients: np.ndarray
    tail_bound: float


def ppr_weights(alpha, K):
    return alpha * (1.0 - alpha) ** np.arange(K + 1)


def heat_weights(t, K):
    ks = np.arange(K + 1)
    return np.exp(-t + ks * math.log(t) - np.array([math.lgamma(k + 1) for k in ks])) \
        if t > 0 else (ks == 0).astype(float)


def _spectral_radius(t):
    if np.allclose(t, t.T, atol=1e-12):
        return float(np.max(np.abs(eig_sym(t).eigvals)))
    warnings.warn("transition matrix is not symmetric; spectral radius check skipped",
                  stacklevel=3)
    return None


def diffusion_matrix(t, weights, K=50):
    """Truncated diffusion ``sum_{k<=K} theta_k T^k``.

    ``weights`` is ``("ppr", alpha)``, ``("heat", t)`` or an explicit
    coefficient sequence (then ``K`` is its length minus one). The returned
    ``tail_bound`` is the coefficient mass beyond ``K``; it is ``nan`` for
    explicit coefficients.
    """
    t = np.asarray(t, dtype=float)
    rho = _spectral_radius(t)
    if isinstance(weights, tuple) and weights[0] == "ppr":
        alpha = float(weights[1])
        if rho is not None and (1.0 - alpha) * rho >= 1.0:
            raise DivergentSeries(f"PPR series diverges: (1-alpha)*rho = {(1 - alpha) * rho:g}")
        theta = ppr_weights(alpha, K)
        tail = (1.0 - alpha) ** (K + 1)
    elif isinstance(weights, tuple) and weights[0] == "heat":
        tt = float(weights[1])
        theta = heat_weights(tt, K)
        tail = float(gammainc(K + 1, tt)) if tt > 0 else 0.0
    else:
        theta = np.asarray(weights, dtype=float).reshape(-1)
        K = len(theta) - 1
        tail = float("nan")
        if rho is not None and rho > 1.0 and K > 0:
            terms = np.abs(theta) * rho ** np.arange(K + 1)
            if terms[-1] >= terms[-2] and terms[-1] > 0:
                raise DivergentSeries(
                    f"coefficient terms grow with spectral radius {rho:g} > 1")
    out = np.zeros_like(t)
    power = np.eye(t.shape[0])
    for k, coef in enumerate(theta):
        if k:
            power = power @ t
        out += coef * power
    return Diffusion(out, theta, tail)
