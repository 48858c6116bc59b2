"""Cyclic Jacobi kernels: two-sided for symmetric eigenproblems, one-sided for SVD.

Both use the round-robin (tournament) ordering, so every round is a set of
disjoint rotations that can be applied at once with array slicing. The
result is deterministic for a given input.
"""

import numpy as np

from .errors import NumericalFailure

EPS = np.finfo(np.float64).eps
MAX_SWEEPS = 100


def round_robin(n):
    """Rounds of disjoint index pairs covering every pair exactly once."""
    players = list(range(n))
    if n % 2:
        players.append(-1)
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < 0 or b < 0:
                continue
            ps.append(min(a, b))
            qs.append(max(a, b))
        if ps:
            rounds.append((np.array(ps), np.array(qs)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _rotation(app, aqq, apq):
    tau = (aqq - app) / (2.0 * apq)
    t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, t * c


def jacobi_eigh(a, max_sweeps=MAX_SWEEPS):
    """Eigenvalues (unsorted diagonal) and eigenvector columns of symmetric ``a``."""
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    if n < 2:
        return np.diag(a).copy(), v
    rounds = round_robin(n)
    scale = np.linalg.norm(a)
    floor = EPS * EPS * scale
    for _ in range(max_sweeps):
        rotated = False
        for ps, qs in rounds:
            apq = a[ps, qs]
            app = a[ps, ps]
            aqq = a[qs, qs]
            active = np.abs(apq) > np.maximum(EPS * np.sqrt(np.abs(app * aqq)), floor)
            if not active.any():
                continue
            rotated = True
            ps, qs = ps[active], qs[active]
            c, s = _rotation(app[active], aqq[active], apq[active])
            cols_p, cols_q = a[:, ps].copy(), a[:, qs]
            a[:, ps] = c * cols_p - s * cols_q
            a[:, qs] = s * cols_p + c * cols_q
            rows_p, rows_q = a[ps, :].copy(), a[qs, :]
            a[ps, :] = c[:, None] * rows_p - s[:, None] * rows_q
            a[qs, :] = s[:, None] * rows_p + c[:, None] * rows_q
            a[ps, qs] = 0.0
            a[qs, ps] = 0.0
            vp, vq = v[:, ps].copy(), v[:, qs]
            v[:, ps] = c * vp - s * vq
            v[:, qs] = s * vp + c * vq
        if not rotated:
            return np.diag(a).copy(), v
    raise NumericalFailure(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")


def one_sided_jacobi(g, max_sweeps=MAX_SWEEPS):
    """Orthogonalize the columns of ``g``.

    Returns ``(h, v)`` with ``g @ v == h`` and mutually orthogonal columns
    of ``h``; their norms are the singular values.
    """
    h = np.array(g, dtype=np.float64, copy=True)
    n = h.shape[1]
    v = np.eye(n)
    if n < 2:
        return h, v
    rounds = round_robin(n)
    for _ in range(max_sweeps):
        rotated = False
        for ps, qs in rounds:
            hp, hq = h[:, ps], h[:, qs]
            alpha = np.einsum("ij,ij->j", hp, hp)
            beta = np.einsum("ij,ij->j", hq, hq)
            gamma = np.einsum("ij,ij->j", hp, hq)
            active = (np.abs(gamma) > EPS * np.sqrt(alpha * beta)) & (gamma != 0)
            if not active.any():
                continue
            rotated = True
            ps, qs = ps[active], qs[active]
            c, s = _rotation(alpha[active], beta[active], gamma[active])
            hp, hq = h[:, ps], h[:, qs]
            h[:, ps] = c * hp - s * hq
            h[:, qs] = s * hp + c * hq
            vp, vq = v[:, ps], v[:, qs]
            v[:, ps] = c * vp - s * vq
            v[:, qs] = s * vp + c * vq
        if not rotated:
            return h, v
    raise NumericalFailure(f"one-sided Jacobi SVD did not converge in {max_sweeps} sweeps")
