"""Spectral transforms ``P phi(Lambda) P^T``, non-spatial bases and cosine analysis.

Eigen-indices in this module are 0-based: index 0 is the eigenvalue of
largest magnitude, ``n - 1`` the smallest.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateSignal, DomainError
from .graph import augmented_adjacency, basis_matrix
from .linalg import EigenDecomposition, eig_sym, eig_sym_batch, reconstruct, zero_tol

EPS_K_GUARD = 3.0
DEGENERATE_RTOL = 1e-14


@dataclass(frozen=True)
class SpectralMap:
    """Entry-wise function applied to eigenvalues.

    ``kind`` is one of ``power_eps``, ``residual``, ``ppr_step``,
    ``custom``. Build instances with the module-level constructors.
    """

    kind: str
    param: float = None
    steps: int = None
    fn: object = field(default=None, compare=False, repr=False)
    description: str = ""

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.kind == "power_eps":
            mag = np.abs(lam)
            out = np.zeros_like(mag)
            nz = mag > zero_tol(mag)
            out[nz] = np.exp(self.param * np.log(mag[nz]))
            return out
        if self.kind == "residual":
            return (1.0 - self.param) * lam + self.param
        if self.kind == "ppr_step":
            a = self.param
            phi = np.ones_like(lam)
            for _ in range(self.steps):
                phi = (1.0 - a) * lam * phi + a
            return phi
        if self.kind == "custom":
            return np.asarray(self.fn(lam), dtype=float) * np.ones_like(lam)
        raise ValueError(f"unknown spectral map kind {self.kind!r}")


def _check_open_unit(value, name):
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")


def power_eps(eps):
    """``|lambda| ** eps`` with ``0 ** eps := 0``.

    Eigenvalues within :func:`~nsgc.linalg.zero_tol` of zero count as zero;
    otherwise rounding noise of order 1e-16 would become 1e-2 at eps = 1/8.
    """
    _check_open_unit(eps, "eps")
    return SpectralMap("power_eps", float(eps), description=f"|x|^{eps:g}")


def residual(alpha):
    _check_open_unit(alpha, "alpha")
    return SpectralMap("residual", float(alpha),
                       description=f"(1-{alpha:g})x+{alpha:g}")


def ppr_step(alpha, steps=10):
    """``steps`` iterations of ``phi <- (1 - alpha) * x * phi + alpha``, from ``phi = 1``."""
    _check_open_unit(alpha, "alpha")
    return SpectralMap("ppr_step", float(alpha), steps=int(steps),
                       description=f"ppr(alpha={alpha:g}, steps={steps})")


def custom(fn, description="custom"):
    return SpectralMap("custom", fn=fn, description=description)


def identity_map():
    return custom(lambda x: x, "identity")


def constant_map(value=1.0):
    return custom(lambda x: np.full_like(x, value), f"constant {value:g}")


def transform(d, phi):
    """``P phi(Lambda) P^T`` for a decomposition ``d``."""
    with np.errstate(all="ignore"):
        vals = phi(d.eigvals)
    if not np.all(np.isfinite(vals)):
        bad = d.eigvals[~np.isfinite(vals)]
        raise DomainError(f"{phi.description or phi.kind} undefined at eigenvalues {bad}")
    out = (d.eigvecs * vals) @ d.eigvecs.T
    return 0.5 * (out + out.T)


def non_spatial_basis(d, eps):
    return transform(d, power_eps(eps))


@dataclass(frozen=True, eq=False)
class BasisStack:
    """``mats[i]`` is the ``i``-th basis matrix, ``mats[0]`` the identity.

    Built by :func:`basis_stack` (``mats[i] = S^(eps*i)``) or by
    :func:`power_stack` (``mats[i] = T^i``, ``eps`` is then ``None``).
    """

    mats: np.ndarray
    eps: float = None
    source_decomp: EigenDecomposition = None
    family: str = "power_eps"

    @property
    def k(self):
        return self.mats.shape[0] - 1

    @property
    def n(self):
        return self.mats.shape[1]

    def tensor(self):
        """Stack as an ``(n, n, k + 1)`` array: one basis vector per entry."""
        return np.moveaxis(self.mats, 0, -1)


def basis_stack(s, eps, k, decomp=None):
    """``[S^(eps*0), ..., S^(eps*k)]`` from a single eigendecomposition."""
    _check_open_unit(eps, "eps")
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if eps * k > EPS_K_GUARD:
        warnings.warn(f"eps*k = {eps * k:g} exceeds {EPS_K_GUARD:g}; "
                      "high basis powers may be ill-conditioned", stacklevel=2)
    d = decomp if decomp is not None else eig_sym(s)
    mag = np.abs(d.eigvals)
    nz = mag > zero_tol(mag)
    logm = np.log(mag[nz])
    mats = np.empty((k + 1, d.n, d.n))
    mats[0] = np.eye(d.n)
    for i in range(1, k + 1):
        vals = np.zeros(d.n)
        vals[nz] = np.exp(eps * i * logm)
        m = (d.eigvecs * vals) @ d.eigvecs.T
        mats[i] = 0.5 * (m + m.T)
    return BasisStack(mats, float(eps), d)


def power_stack(t, k, family="power"):
    """Plain matrix powers ``[I, T, T^2, ..., T^k]``; ``T`` need not be symmetric."""
    t = np.asarray(t, dtype=float)
    mats = np.empty((k + 1,) + t.shape)
    mats[0] = np.eye(t.shape[0])
    for i in range(1, k + 1):
        mats[i] = mats[i - 1] @ t
    return BasisStack(mats, None, None, family)


def graph_basis_stack(g, family, k, eps=None, source="raw_aug"):
    """Basis stack for a graph.

    ``family`` is ``power_eps`` (powers of ``S^eps`` with ``S`` the
    ``source`` matrix, default ``A + I``) or one of ``raw_aug``,
    ``sym_norm``, ``rw_norm`` (plain matrix powers).
    """
    if family == "power_eps":
        return basis_stack(_source_matrix(g, source), eps, k)
    if family in ("raw_aug", "sym_norm", "rw_norm"):
        return power_stack(basis_matrix(g, family), k, family)
    raise ValueError(f"unknown basis family {family!r}")


def _source_matrix(g, source):
    return augmented_adjacency(g) if source == "raw_aug" else basis_matrix(g, source)


def graph_basis_stacks(graphs, family, k, eps=None, source="raw_aug"):
    """:func:`graph_basis_stack` for many graphs, decomposing same-size graphs together."""
    if family != "power_eps":
        return [graph_basis_stack(g, family, k, eps, source) for g in graphs]
    out = [None] * len(graphs)
    by_n = {}
    for i, g in enumerate(graphs):
        by_n.setdefault(g.num_nodes, []).append(i)
    for idx in by_n.values():
        decomps = eig_sym_batch(np.array([_source_matrix(graphs[i], source) for i in idx]))
        for i, d in zip(idx, decomps):
            out[i] = basis_stack(None, eps, k, decomp=d)
    return out


# -- cosine analysis -------------------------------------------------------

def _scaled_powers(eigvals, k):
    """``(lambda / |lambda_max|) ** k``; the common factor cancels in every cosine."""
    lam = np.asarray(eigvals, dtype=float)
    top = float(np.max(np.abs(lam))) if len(lam) else 0.0
    if top == 0.0:
        return np.where(lam == 0.0, 1.0 if k == 0 else 0.0, 0.0)
    return (lam / top) ** k


def cosine_to_eigenvector(d, h, i, power=1):
    """Cosine between ``S^power h`` and eigenvector ``i`` via eigen-coordinates."""
    alpha = d.coefficients(h)
    w = alpha * _scaled_powers(d.eigvals, power)
    denom = float(np.sqrt(np.sum(w * w)))
    if denom <= DEGENERATE_RTOL * np.linalg.norm(h):
        raise DegenerateSignal("filtered signal is zero")
    return float(np.clip(w[i] / denom, -1.0, 1.0))


def cosine_between_filtered(d, h, h2, power=1):
    """Cosine between ``S^power h`` and ``S^power h2`` via eigen-coordinates."""
    r = _scaled_powers(d.eigvals, power)
    a = d.coefficients(h) * r
    b = d.coefficients(h2) * r
    na, nb = float(np.sqrt(a @ a)), float(np.sqrt(b @ b))
    if (na <= DEGENERATE_RTOL * np.linalg.norm(h)
            or nb <= DEGENERATE_RTOL * np.linalg.norm(h2)):
        raise DegenerateSignal("filtered signal is zero")
    return float(np.clip((a @ b) / (na * nb), -1.0, 1.0))


def direct_cosine(x, y):
    """Plain cosine of two vectors; reference for the closed forms."""
    return float(x @ y / (np.linalg.norm(x) * np.linalg.norm(y)))


@dataclass
class Trajectory:
    rows: list
    leading_index: int
    tied_leading: bool

    def column(self, name):
        return np.array([r[name] for r in self.rows], dtype=float)


def convergence_trajectory(d, h, h2=None, k_max=50):
    """``|cos|`` of ``S^k h`` against the first and last eigenvectors, and
    against ``S^k h2`` when given, for ``k = 0 .. k_max``.

    Annihilated signals are flagged ``degenerate`` with NaN values. If ``h``
    has no weight on the first eigenvector, ``leading_index`` is the first
    eigen-index with nonzero weight (the direction the signal turns to).
    """
    h = np.asarray(h, dtype=float)
    if not np.linalg.norm(h) > 0:
        raise DegenerateSignal("input signal is zero")
    alpha = d.coefficients(h)
    hn = np.linalg.norm(h)
    weighted = np.flatnonzero(np.abs(alpha) > 1e-12 * hn)
    leading = int(weighted[0]) if len(weighted) else 0
    lam = np.abs(d.eigvals)
    tied = d.n > 1 and np.isclose(lam[0], lam[1], rtol=1e-12, atol=0.0)
    rows = []
    for k in range(k_max + 1):
        flags = []
        if leading != 0:
            flags.append(f"leading={leading}")
        if tied:
            flags.append("tied_leading")
        row = {"k": k}
        try:
            row["cos_p1"] = abs(cosine_to_eigenvector(d, h, 0, k))
            row["cos_pn"] = abs(cosine_to_eigenvector(d, h, d.n - 1, k))
        except DegenerateSignal:
            row["cos_p1"] = row["cos_pn"] = float("nan")
            flags.append("degenerate")
        if h2 is not None:
            try:
                row["cos_pair"] = abs(cosine_between_filtered(d, h, h2, k))
            except DegenerateSignal:
                row["cos_pair"] = float("nan")
                if "degenerate" not in flags:
                    flags.append("degenerate")
        else:
            row["cos_pair"] = float("nan")
        row["flags"] = ";".join(flags)
        rows.append(row)
    return Trajectory(rows, leading, bool(tied))


def misalignment(d, h, k):
    """``1 - cos^2(S^k h, p_1)`` computed without cancellation."""
    w = d.coefficients(h) * _scaled_powers(d.eigvals, k)
    w2 = w * w
    total = w2.sum()
    return float(w2[1:].sum() / total) if total > 0 else float("nan")


def tail_ratio(d, h, k):
    """``sum_{i>=2} alpha_i^2 (lambda_i / lambda_1)^(2k) / alpha_1^2``, i.e. ``tan^2`` of the
    angle between ``S^k h`` and ``p_1``; ``inf`` when ``h`` has no weight on ``p_1``."""
    w = d.coefficients(h) * _scaled_powers(d.eigvals, k)
    w2 = w * w
    return float(w2[1:].sum() / w2[0]) if w2[0] > 0 else float("inf")


def convergence_rate(d, h, k_max=50, quantity="tail_ratio", floor=None):
    """Fitted slope against ``k`` of ``log q_k``.

    The default ``quantity="tail_ratio"`` uses ``q_k = tan^2`` of the angle
    between ``S^k h`` and ``p_1``, a weighted sum of
    ``(lambda_i / lambda_1)^(2k)`` whose log-slope tends to
    ``expected = 2 log|lambda_2 / lambda_1|``. ``quantity="misalignment"``
    uses ``q_k = 1 - cos^2`` (default floor 1e-12); its extra ``cos^2``
    denominator bends the curve while ``cos`` is still far from 1, so it
    is biased when ``h`` starts nearly orthogonal to ``p_1``. The fit uses
    the later half of the ``k`` values kept by the floor.

    Returns ``(slope, expected)``; ``slope`` is ``None`` when the leading
    eigenvalue is tied, ``h`` has no weight on ``p_1``, or fewer than four
    points survive the floor.
    """
    if quantity == "misalignment":
        fn, floor = misalignment, 1e-12 if floor is None else floor
    elif quantity == "tail_ratio":
        fn, floor = tail_ratio, 1e-250 if floor is None else floor
    else:
        raise ValueError(f"unknown quantity {quantity!r}")
    lam = np.abs(d.eigvals)
    if d.n < 2 or lam[0] == 0:
        return None, float("nan")
    expected = 2.0 * np.log(lam[1] / lam[0]) if lam[1] > 0 else -np.inf
    if np.isclose(lam[0], lam[1], rtol=1e-12, atol=0.0):
        return None, expected
    if abs(d.coefficients(h)[0]) <= 1e-12 * np.linalg.norm(h):
        return None, expected
    ks, vals = [], []
    for k in range(k_max + 1):
        q = fn(d, h, k)
        if np.isfinite(q) and q > floor:
            ks.append(k)
            vals.append(np.log(q))
    if len(ks) < 4:
        return None, expected
    half = len(ks) // 2
    slope = np.polyfit(ks[half:], vals[half:], 1)[0]
    return float(slope), float(expected)


# -- eigenspace checks -----------------------------------------------------

def eigenspace_containment_check(d, s_ring, phi, tol=1e-9):
    """Largest ``||(s_ring - phi(lambda_i) I) p_i||`` over all eigenpairs of ``d``."""
    vals = phi(d.eigvals)
    res = s_ring @ d.eigvecs - d.eigvecs * vals
    norms = np.linalg.norm(res, axis=0)
    worst = float(norms.max()) if len(norms) else 0.0
    return {"max_residual": worst, "residuals": norms, "passed": worst <= tol}


def injectivity_check(spectrum, phi, tol=1e-10):
    """Report pairs of distinct eigenvalues that ``phi`` maps to the same value."""
    lam = np.unique(np.round(np.asarray(spectrum, dtype=float), 12))
    vals = phi(lam)
    collisions = []
    for i in range(len(lam)):
        for j in range(i + 1, len(lam)):
            if abs(lam[i] - lam[j]) > tol and abs(vals[i] - vals[j]) <= tol:
                collisions.append((float(lam[i]), float(lam[j]), float(vals[i])))
    return {"injective": not collisions, "collisions": collisions}


__all__ = [
    "SpectralMap", "power_eps", "residual", "ppr_step", "custom", "identity_map",
    "constant_map", "transform", "non_spatial_basis", "BasisStack", "basis_stack",
    "power_stack", "graph_basis_stack", "graph_basis_stacks", "cosine_to_eigenvector",
    "cosine_between_filtered", "direct_cosine", "Trajectory",
    "convergence_trajectory", "misalignment", "tail_ratio", "convergence_rate",
    "eigenspace_containment_check", "injectivity_check", "reconstruct",
]
