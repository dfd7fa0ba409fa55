"""Distances between channels.

The primary error measure is the largest singular value of the *map*
difference (superoperator), not of the Choi-matrix difference.  The Frobenius
norm of the Choi difference sandwiches it: ``s_max <= ||dC||_2 <= d * s_max``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ChoiMatrix, _as_choi, _match, choi_to_superop

SANDWICH_SLACK = 1e-9


def map_singular_values(c: ChoiMatrix) -> np.ndarray:
    return np.linalg.svd(choi_to_superop(c).mat, compute_uv=False)


def choi_singular_values(c: ChoiMatrix) -> np.ndarray:
    return np.linalg.svd(_as_choi(c).mat, compute_uv=False)


def _superop_diff(a, b) -> np.ndarray:
    a, b = _as_choi(a), _as_choi(b)
    _match(a, b)
    return choi_to_superop(a).mat - choi_to_superop(b).mat


def sigma_max_diff(a: ChoiMatrix, b: ChoiMatrix) -> float:
    """Largest singular value of the superoperator ``Phi_a - Phi_b``."""
    return float(np.linalg.svd(_superop_diff(a, b), compute_uv=False)[0])


def schatten2_diff(a: ChoiMatrix, b: ChoiMatrix) -> float:
    a, b = _as_choi(a), _as_choi(b)
    _match(a, b)
    return float(np.linalg.norm(a.mat - b.mat))


@dataclass(frozen=True)
class MetricReport:
    sigma_max: float
    schatten2: float
    d: int
    upper_ok: bool  # sigma_max <= schatten2
    lower_ok: bool  # schatten2 <= d * sigma_max

    @property
    def lower_bound(self) -> float:
        """``schatten2 / d``, the cheap lower estimate of ``sigma_max``."""
        return self.schatten2 / self.d


def metric_report(a: ChoiMatrix, b: ChoiMatrix, slack: float = SANDWICH_SLACK) -> MetricReport:
    s, f = sigma_max_diff(a, b), schatten2_diff(a, b)
    d = _as_choi(a).d
    return MetricReport(s, f, d, s <= f + slack, f <= d * s + slack)


@dataclass(frozen=True, eq=False)
class PureStateDiscrepancy:
    """Best value of ``||Phi_a(P) - Phi_b(P)||_2`` found over pure states ``P``.

    This is a lower bound on the true maximum (local search).
    """

    value: float
    state: np.ndarray
    restart_values: tuple


def _random_state(rng, d):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def max_pure_state_discrepancy(
    a: ChoiMatrix,
    b: ChoiMatrix,
    restarts: int = 32,
    seed: int = 0,
    max_iter: int = 2000,
    gtol: float = 1e-12,
) -> PureStateDiscrepancy:
    """Multi-start projected gradient ascent of ``f(psi) = ||D vec(psi psi^+)||^2`` on the unit sphere.

    Start points come from one seeded stream, so adding restarts never lowers
    the result.
    """
    diff = _superop_diff(a, b)
    d = _as_choi(a).d
    gram = diff.conj().T @ diff

    def value(psi):
        return float(np.linalg.norm(diff @ np.kron(psi.conj(), psi)) ** 2)

    def grad(psi):
        y = (gram @ np.kron(psi.conj(), psi)).reshape(d, d, order="F")
        y = (y + y.conj().T) / 2
        g = 4 * (y @ psi)
        return g - np.real(np.vdot(psi, g)) * psi

    rng = np.random.default_rng(seed)
    best_val, best_psi, history = -1.0, None, []
    for _ in range(max(1, restarts)):
        psi = _random_state(rng, d)
        f = value(psi)
        step = 1.0
        for _ in range(max_iter):
            g = grad(psi)
            if np.linalg.norm(g) < gtol:
                break
            # try a few step lengths around the last good one, keep the best
            cands = []
            for s in (step / 2, step, 2 * step):
                c = psi + s * g
                c /= np.linalg.norm(c)
                cands.append((value(c), s, c))
            fc, s, cand = max(cands, key=lambda x: x[0])
            while fc <= f and s > 1e-14:
                s /= 4
                cand = psi + s * g
                cand /= np.linalg.norm(cand)
                fc = value(cand)
            if fc <= f:
                break
            gain = fc - f
            psi, f, step = cand, fc, min(s, 1e3)
            if gain <= 1e-15 * max(1.0, f):
                break
        history.append(float(np.sqrt(max(f, 0.0))))
        if f > best_val:
            best_val, best_psi = f, psi
    return PureStateDiscrepancy(float(np.sqrt(max(best_val, 0.0))), best_psi, tuple(history))
