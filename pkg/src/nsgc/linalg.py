"""Dense symmetric eigendecomposition by cyclic Jacobi rotations.

Rotations are scheduled in round-robin (tournament) order so that each
round touches ``n // 2`` disjoint index pairs; a round is then a single
vectorised row/column update instead of ``n // 2`` scalar ones.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import NoConvergence
from .graph import check_symmetric

OFF_TOL = 1e-12
MAX_SWEEPS = 100


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Orthonormal eigenvectors (columns of ``eigvecs``) and eigenvalues.

    Eigenvalues are ordered by descending ``|lambda|``, ties broken by
    descending signed value.
    """

    eigvecs: np.ndarray
    eigvals: np.ndarray
    sweeps: int = 0

    @property
    def n(self):
        return len(self.eigvals)

    def coefficients(self, h):
        """Coordinates of ``h`` in the eigenbasis."""
        return self.eigvecs.T @ np.asarray(h, dtype=float)


def _round_robin(n):
    """Pair schedule: ``n - 1`` rounds (``n`` even) covering every pair once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p, q = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=int), np.array(q, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


_SCHEDULES = {}


def _schedule(n):
    if n not in _SCHEDULES:
        _SCHEDULES[n] = _round_robin(n)
    return _SCHEDULES[n]


def _offdiag_norms(a):
    return np.linalg.norm(a * (1.0 - np.eye(a.shape[1])), axis=(1, 2))


def eig_sym(s, tol=OFF_TOL, max_sweeps=MAX_SWEEPS):
    """Eigendecomposition of a symmetric matrix.

    Sweeps stop once the off-diagonal Frobenius norm drops to
    ``tol * ||s||_F``. Raises :class:`NoConvergence` after ``max_sweeps``.
    """
    s = check_symmetric(s)
    return eig_sym_batch(s[None], tol, max_sweeps)[0]


def eig_sym_batch(mats, tol=OFF_TOL, max_sweeps=MAX_SWEEPS):
    """:func:`eig_sym` applied to a ``(B, n, n)`` stack of symmetric matrices.

    Every matrix follows the same rotation schedule; a converged matrix only
    receives exact identity rotations, so each result equals the one
    :func:`eig_sym` returns for that matrix alone.
    """
    mats = np.asarray(mats, dtype=float)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ValueError(f"expected a (B, n, n) stack, got shape {mats.shape}")
    for s in mats:
        check_symmetric(s)
    b, n, _ = mats.shape
    a = 0.5 * (mats + np.swapaxes(mats, 1, 2))
    v = np.broadcast_to(np.eye(n), (b, n, n)).copy()
    target = tol * np.linalg.norm(a, axis=(1, 2))
    sweeps = np.zeros(b, dtype=int)
    rows = np.arange(b)[:, None]
    while True:
        off = _offdiag_norms(a)
        live = off > target
        if not live.any():
            break
        if (sweeps[live] >= max_sweeps).any():
            raise NoConvergence(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {off[live].max():.3e})")
        for p, q in _schedule(n):
            apq = a[:, p, q]
            rot = (apq != 0.0) & live[:, None]
            if not rot.any():
                continue
            app, aqq = a[:, p, p], a[:, q, q]
            safe = np.where(rot, apq, 1.0)
            theta = (aqq - app) / (2.0 * safe)
            with np.errstate(over="ignore"):
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            huge = np.abs(theta) > 1e150
            t[huge] = 0.5 / theta[huge]
            t[theta == 0.0] = 1.0
            t[~rot] = 0.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            sn = t * c
            c3, s3 = c[:, None, :], sn[:, None, :]
            ap, aq = a[:, :, p], a[:, :, q]
            a[:, :, p] = c3 * ap - s3 * aq
            a[:, :, q] = s3 * ap + c3 * aq
            c3, s3 = c[:, :, None], sn[:, :, None]
            ap, aq = a[:, p, :], a[:, q, :]
            a[:, p, :] = c3 * ap - s3 * aq
            a[:, q, :] = s3 * ap + c3 * aq
            a[rows, p, q] = np.where(rot, 0.0, a[rows, p, q])
            a[rows, q, p] = np.where(rot, 0.0, a[rows, q, p])
            c3, s3 = c[:, None, :], sn[:, None, :]
            vp, vq = v[:, :, p], v[:, :, q]
            v[:, :, p] = c3 * vp - s3 * vq
            v[:, :, q] = s3 * vp + c3 * vq
        sweeps += live
    out = []
    for i in range(b):
        lam = np.diagonal(a[i]).copy()
        order = np.lexsort((np.arange(n), -lam, -np.abs(lam)))
        out.append(EigenDecomposition(v[i][:, order], lam[order], int(sweeps[i])))
    return out


def reconstruct(d):
    return (d.eigvecs * d.eigvals) @ d.eigvecs.T


def zero_tol(eigvals):
    lead = float(np.max(np.abs(eigvals))) if len(eigvals) else 0.0
    return 1e-9 * max(1.0, lead)


def spectrum_stats(d):
    """Gap ratio ``|l2/l1|``, condition number over nonzero eigenvalues, zero count.

    Eigenvalues within :func:`zero_tol` of zero count as zero. The gap ratio
    is reported as 1 when ``l1`` is zero or there is only one eigenvalue.
    """
    lam = np.abs(np.asarray(d.eigvals, dtype=float))
    tol = zero_tol(lam)
    nonzero = lam[lam > tol]
    num_zero = int(len(lam) - len(nonzero))
    if len(lam) < 2 or lam[0] <= tol:
        gap = 1.0
    else:
        gap = float(lam[1] / lam[0])
    cond = float(nonzero.max() / nonzero.min()) if len(nonzero) else float("inf")
    return {"spectral_gap_ratio": gap, "condition_number": cond, "num_zero": num_zero}
