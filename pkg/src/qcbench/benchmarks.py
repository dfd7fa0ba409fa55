"""Classically computable benchmarks on (reduced) Choi matrices.

Each benchmark targets one error class:

* double-stochasticity violation  -> non-unitary, CP-divisible errors
* rank property / residue         -> non-unitary, CP-indivisible errors
* divisibility defect              -> CP-indivisibility of a whole trajectory
* conserved-observable deviation   -> unitary (systematic) errors
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .core import (
    DEFAULT_TOL,
    ChannelTrajectory,
    ChoiMatrix,
    SuperOperator,
    _as_choi,
    adjoint_superop,
    check_hermitian,
    choi_to_superop,
    compose,
    trace_in,
    trace_out,
)
from .errors import RequestError, ShapeError, ValidationError

RANK_TOL = 1e-7
SPAN_TOL = 1e-7
DS_WARN_TOL = 1e-6
DIVISIBILITY_TOL = 1e-8

# --------------------------------------------------------------------------
# double stochasticity


@dataclass(frozen=True)
class DsReport:
    """Double-stochasticity violation and the interval it implies for the error."""

    violation_identity: float  # ||1 - Phi(1)||_2
    violation_trace: float  # ||1 - trace_out||_2
    epsilon_lower: float
    epsilon_upper: float
    d: int


def ds_violation(c: ChoiMatrix) -> DsReport:
    c = _as_choi(c)
    check_hermitian(c.mat, name="Choi matrix")
    eye = np.eye(c.d)
    vi = float(np.linalg.norm(eye - trace_in(c)))
    vt = float(np.linalg.norm(eye - trace_out(c)))
    return DsReport(vi, vt, float(vi / np.sqrt(c.d)), vi, c.d)


def thermal_fixed_point_check(
    gen: SuperOperator, t_large: float, tol: float = DEFAULT_TOL
) -> tuple[bool, float]:
    """Evolve the maximally mixed state for ``t_large`` under ``gen``.

    Returns ``(violated, ||Phi_t(1/d) - 1/d||_2)``.  A bath at finite
    temperature drives ``1/d`` to a non-trivial thermal state, so ``violated``
    is True whenever the reported distance exceeds ``tol``.
    """
    d = gen.d
    mixed = np.eye(d) / d
    out = SuperOperator(expm(np.asarray(gen.mat) * t_large)).apply(mixed)
    v = float(np.linalg.norm(out - mixed))
    return v > tol, v


# --------------------------------------------------------------------------
# rank property


@dataclass(frozen=True)
class RankReport:
    """Outcome of the rank-property test.

    ``k`` is the number of retained eigenvalues, ``span_dim`` the dimension of
    ``span{a_i a_j^+ : i, j < k}`` for the reshaped eigenvectors ``a_i``.  The
    test passes when ``span_dim <= min(d^2 - k + 1, k^2 - k + 1)``.

    ``variant_span_dim`` is the dimension of ``span{a_i^+ a_j - delta_ij 1/d}``
    plus one (for the identity), the alternative reading of the bound.
    After :func:`rank_residue`, ``mu`` eigenvalues were dropped and
    ``residue`` is the sum of their squares; ``k`` then refers to what is left.
    """

    d: int
    eigenvalues: tuple
    k: int
    span_dim: int
    bound_d: int
    bound_k: int
    satisfied: bool
    variant_span_dim: int
    variant_satisfied: bool
    mu: int = 0
    residue: float = 0.0
    removed: tuple = ()

    @property
    def bound(self) -> int:
        return min(self.bound_d, self.bound_k)


def rank_bounds(d: int, k: int) -> tuple[int, int]:
    return d * d - k + 1, k * k - k + 1


def rank_bound_curve(d: int) -> list[tuple[int, int, int]]:
    """Rows ``(k, d^2 - k + 1, k^2 - k + 1)`` for ``k = 1 .. d^2``."""
    return [(k, *rank_bounds(d, k)) for k in range(1, d * d + 1)]


def choi_eigensystem(c: ChoiMatrix, tol: float = DEFAULT_TOL):
    """Descending eigenvalues and reshaped eigenvectors ``a_hat[j, i] = alpha[i*d + j]``.

    With this reshape ``sum_i lam_i a_i a_i^+ = trace_in(c) = Phi(1)``.
    """
    c = _as_choi(c)
    check_hermitian(c.mat, tol, name="Choi matrix")
    lam, vec = np.linalg.eigh((c.mat + c.mat.conj().T) / 2)
    if lam[0] < -tol * max(1.0, abs(lam[-1])):
        raise ValidationError(f"Choi matrix is not positive semidefinite: min eigenvalue {lam[0]:.3e}")
    order = np.argsort(lam)[::-1]
    lam = np.clip(lam[order], 0.0, None)
    d = c.d
    hats = vec[:, order].T.reshape(-1, d, d).transpose(0, 2, 1)
    return lam, hats


def _numerical_rank(rows: np.ndarray, tol: float, scale: float = 0.0) -> int:
    """Singular values above ``tol * max(s_max, scale)``.

    ``scale`` keeps a set of rows that is zero up to rounding from being
    measured against its own noise.
    """
    if rows.size == 0:
        return 0
    s = np.linalg.svd(rows, compute_uv=False)
    ref = max(s[0], scale)
    if ref == 0:
        return 0
    return int(np.count_nonzero(s > tol * ref))


def product_span_dim(hats: np.ndarray, span_tol: float = SPAN_TOL) -> int:
    """Dimension of ``span{a_i a_j^+}`` over the given reshaped eigenvectors."""
    k, d = hats.shape[0], hats.shape[1]
    prods = np.einsum("iab,jcb->ijac", hats, hats.conj()).reshape(k * k, d * d)
    return _numerical_rank(prods, span_tol)


def variant_span_dim(hats: np.ndarray, span_tol: float = SPAN_TOL) -> int:
    """``1 + dim span{a_i^+ a_j - delta_ij 1/d}``."""
    k, d = hats.shape[0], hats.shape[1]
    prods = np.einsum("iba,jbc->ijac", hats.conj(), hats)
    scale = float(np.max(np.linalg.norm(prods, axis=(2, 3))))
    prods[np.arange(k), np.arange(k)] -= np.eye(d) / d
    return 1 + _numerical_rank(prods.reshape(k * k, d * d), span_tol, scale)


def _report(d, lam, hats, k, span_tol, mu=0, removed=()):
    span = product_span_dim(hats[:k], span_tol)
    var = variant_span_dim(hats[:k], span_tol)
    bd, bk = rank_bounds(d, k)
    return RankReport(
        d=d,
        eigenvalues=tuple(float(x) for x in lam),
        k=k,
        span_dim=span,
        bound_d=bd,
        bound_k=bk,
        satisfied=span <= min(bd, bk),
        variant_span_dim=var,
        variant_satisfied=var <= min(bd, bk),
        mu=mu,
        residue=float(sum(x * x for x in removed)),
        removed=tuple(float(x) for x in removed),
    )


def _prepare(c, rank_tol, tol, ds_tol):
    c = _as_choi(c)
    lam, hats = choi_eigensystem(c, tol)
    ds = ds_violation(c)
    if max(ds.violation_identity, ds.violation_trace) > ds_tol:
        warnings.warn(
            "rank property assumes a doubly stochastic channel; "
            f"||1 - Phi(1)|| = {ds.violation_identity:.2e}, ||1 - trace_out|| = {ds.violation_trace:.2e}",
            stacklevel=3,
        )
    k = int(np.count_nonzero(lam > rank_tol * lam[0])) if lam[0] > 0 else 0
    return c, lam, hats, max(k, 1)


def rank_property(
    c: ChoiMatrix,
    rank_tol: float = RANK_TOL,
    span_tol: float = SPAN_TOL,
    tol: float = DEFAULT_TOL,
    ds_tol: float = DS_WARN_TOL,
) -> RankReport:
    c, lam, hats, k = _prepare(c, rank_tol, tol, ds_tol)
    return _report(c.d, lam, hats, k, span_tol)


def rank_residue(
    c: ChoiMatrix,
    rank_tol: float = RANK_TOL,
    span_tol: float = SPAN_TOL,
    tol: float = DEFAULT_TOL,
    ds_tol: float = DS_WARN_TOL,
) -> RankReport:
    """Drop the smallest retained eigenvalues until the rank property holds.

    Terminates at ``k = 1`` at the latest, where the property always holds.
    """
    c, lam, hats, k = _prepare(c, rank_tol, tol, ds_tol)
    removed = []
    rep = _report(c.d, lam, hats, k, span_tol)
    while not rep.satisfied and k > 1:
        k -= 1
        removed.append(lam[k])
        rep = _report(c.d, lam, hats, k, span_tol, mu=len(removed), removed=removed)
    return rep


# --------------------------------------------------------------------------
# divisibility


@dataclass(frozen=True)
class DivisibilityReport:
    pairs: tuple  # ((t, t'), ...)
    defects: tuple
    max_defect: float


def usable_pairs(traj: ChannelTrajectory, atol: float = 1e-12) -> list[tuple[float, float]]:
    """All ordered ``(t, t')`` on the grid whose sum is also on the grid."""
    ts = traj.times
    return [(a, b) for a in ts for b in ts if traj.index_of(a + b, atol) is not None]


def divisibility_defect(
    traj: ChannelTrajectory, pairs: Sequence[tuple[float, float]] | None = None, atol: float = 1e-12
) -> DivisibilityReport:
    """``||C(t + t') - C(t) o C(t')||_2`` for each requested pair (default: all usable)."""
    if pairs is None:
        pairs = usable_pairs(traj, atol)
    pairs = [(float(a), float(b)) for a, b in pairs]
    idx = []
    for a, b in pairs:
        ia, ib, iab = traj.index_of(a, atol), traj.index_of(b, atol), traj.index_of(a + b, atol)
        if ia is None or ib is None or iab is None:
            raise RequestError(
                f"pair ({a}, {b}) is not supported by the time grid; usable pairs: {usable_pairs(traj, atol)}"
            )
        idx.append((ia, ib, iab))
    if not idx:
        raise RequestError("time grid admits no (t, t') pair with t + t' on the grid")
    ch = traj.chois
    defects = tuple(float(np.linalg.norm(ch[iab].mat - compose(ch[ia], ch[ib]).mat)) for ia, ib, iab in idx)
    return DivisibilityReport(tuple(pairs), defects, max(defects))


# --------------------------------------------------------------------------
# conserved observables


def _hermitian(x, name="observable") -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {x.shape}")
    check_hermitian(x, DEFAULT_TOL, strict=True, name=name)
    return (x + x.conj().T) / 2


def heisenberg_defect(c: ChoiMatrix, x) -> np.ndarray:
    """``G = X - Phi^+(X)``: the change of ``<X>`` as a Hermitian operator on inputs."""
    c = _as_choi(c)
    x = _hermitian(x)
    if x.shape[0] != c.d:
        raise ShapeError(f"observable dim {x.shape[0]} does not match channel dim {c.d}")
    g = x - adjoint_superop(choi_to_superop(c)).apply(x)
    return (g + g.conj().T) / 2


@dataclass(frozen=True, eq=False)
class SymmetryReport:
    """Largest change of a conserved sum ``sum_i <X_i>`` over product inputs.

    ``branch`` says whether the maximum of ``|.|`` is reached by increasing
    ("max") or decreasing ("min") the sum; ``states`` are the per-site
    eigenvectors of ``G_i`` realising it.
    """

    intervals: tuple  # ((lam_min(G_i), lam_max(G_i)), ...)
    deviation: float
    branch: str
    states: tuple
    upper_bound: bool = False


def _deviation(gs) -> SymmetryReport:
    intervals, lo_states, hi_states = [], [], []
    for g in gs:
        w, v = np.linalg.eigh(g)
        intervals.append((float(w[0]), float(w[-1])))
        lo_states.append(v[:, 0])
        hi_states.append(v[:, -1])
    hi = sum(b for _, b in intervals)
    lo = sum(a for a, _ in intervals)
    if hi >= -lo:
        return SymmetryReport(tuple(intervals), max(hi, 0.0), "max", tuple(hi_states))
    return SymmetryReport(tuple(intervals), max(-lo, 0.0), "min", tuple(lo_states))


def symmetry_deviation(site_channels: Sequence[ChoiMatrix], observables: Sequence) -> SymmetryReport:
    """Exact ``max_{rho_1..rho_N} |sum_i Tr[rho_i X_i - Phi_i(rho_i) X_i]|`` for single-qubit channels.

    The objective separates over sites, so the optimum takes each ``rho_i`` as
    an extremal eigenvector of ``G_i`` with a common sign choice.
    """
    if len(site_channels) != len(observables):
        raise ShapeError("one observable per site channel required")
    chans = [_as_choi(c) for c in site_channels]
    if any(c.d != 2 for c in chans):
        raise ShapeError("symmetry_deviation expects single-qubit channels; use observable_deviation")
    return _deviation([heisenberg_defect(c, x) for c, x in zip(chans, observables)])


def observable_deviation(reduced_channels: Mapping, terms: Sequence) -> SymmetryReport:
    """Generalisation to ``m``-body terms given as ``(subset, X)``.

    Exact for pairwise disjoint subsets; otherwise the separable value is an
    upper bound and the report is flagged with ``upper_bound=True``.
    """
    chans = {tuple(k): v for k, v in reduced_channels.items()}
    gs, seen, overlap = [], set(), False
    for subset, x in terms:
        key = tuple(subset)
        if key not in chans:
            raise RequestError(f"no reduced channel for subset {key}")
        if seen & set(key):
            overlap = True
        seen |= set(key)
        gs.append(heisenberg_defect(chans[key], x))
    rep = _deviation(gs)
    if overlap:
        rep = SymmetryReport(rep.intervals, rep.deviation, rep.branch, rep.states, upper_bound=True)
    return rep


# --------------------------------------------------------------------------
# full suite

LABEL_DIVISIBLE = "CP-divisible non-unitary"
LABEL_INDIVISIBLE = "CP-indivisible non-unitary"
LABEL_UNITARY = "unitary"
LABEL_NONE = "no error detected"


@dataclass(frozen=True)
class Thresholds:
    """Attribution thresholds (defaults: ten times the numerical tolerances)."""

    ds: float = 10 * DEFAULT_TOL
    divisibility: float = 10 * DIVISIBILITY_TOL
    symmetry: float = 10 * DEFAULT_TOL


def attribute(
    ds: DsReport,
    rank: RankReport,
    divisibility: DivisibilityReport | None = None,
    symmetry: SymmetryReport | None = None,
    thresholds: Thresholds = Thresholds(),
) -> tuple[str, ...]:
    """Error classes implied by the sub-reports.

    ===========  =========================  ======================  =====================
    DS violated  rank fails / defect > thr  symmetry dev. > thr     labels
    ===========  =========================  ======================  =====================
    yes          any                        any                     CP-divisible
    no           yes                        any                     CP-indivisible
    no           no                         yes                     unitary
    no           no                         no / not run            no error detected
    ===========  =========================  ======================  =====================
    """
    ds_bad = max(ds.violation_identity, ds.violation_trace) > thresholds.ds
    indiv = (not rank.satisfied) or (divisibility is not None and divisibility.max_defect > thresholds.divisibility)
    sym_bad = symmetry is not None and symmetry.deviation > thresholds.symmetry
    if ds_bad:
        return (LABEL_DIVISIBLE,)
    if indiv:
        return (LABEL_INDIVISIBLE,)
    if sym_bad:
        return (LABEL_UNITARY,)
    return (LABEL_NONE,)


def _rank_dict(r: RankReport) -> dict:
    out = asdict(r)
    out["eigenvalues"] = list(out["eigenvalues"])
    out["removed"] = list(out["removed"])
    return out


@dataclass(frozen=True, eq=False)
class BenchReport:
    input: dict
    ds: DsReport
    rank: RankReport
    residue: RankReport
    divisibility: DivisibilityReport | None
    symmetry: SymmetryReport | None
    labels: tuple
    tolerances: dict = field(default_factory=dict)

    @property
    def attribution(self) -> str:
        return "; ".join(self.labels)

    def to_dict(self) -> dict:
        from . import __version__

        sym = None
        if self.symmetry is not None:
            sym = {
                "intervals": [list(iv) for iv in self.symmetry.intervals],
                "deviation": self.symmetry.deviation,
                "branch": self.symmetry.branch,
                "upper_bound": self.symmetry.upper_bound,
            }
        div = None
        if self.divisibility is not None:
            div = {
                "pairs": [list(p) for p in self.divisibility.pairs],
                "defects": list(self.divisibility.defects),
                "max_defect": self.divisibility.max_defect,
            }
        rank = _rank_dict(self.rank)
        residue = _rank_dict(self.residue)
        return {
            "format_version": 1,
            "tool_version": __version__,
            "input": dict(self.input),
            "ds": asdict(self.ds),
            "rank": rank,
            "residue": residue,
            "divisibility": div,
            "symmetry": sym,
            "attribution": self.attribution,
            "labels": list(self.labels),
            "tolerances": dict(self.tolerances),
        }


def full_suite(
    data,
    observables: Sequence | None = None,
    rank_tol: float = RANK_TOL,
    span_tol: float = SPAN_TOL,
    thresholds: Thresholds = Thresholds(),
    tol: float = DEFAULT_TOL,
) -> BenchReport:
    """Run every applicable benchmark and attribute the error class.

    ``data`` is a Choi matrix or a trajectory; for a trajectory the static
    benchmarks use its final sample.  ``observables`` is a list of
    ``(channel, X)`` pairs; a ``None`` channel means the input channel.
    """
    divisibility = None
    if isinstance(data, ChannelTrajectory):
        final = data.chois[-1]
        divisibility = divisibility_defect(data)
        desc = {"kind": "trajectory", "d": data.d, "samples": len(data), "t_final": data.times[-1]}
    else:
        final = _as_choi(data)
        desc = {"kind": "choi", "d": final.d}
    ds = ds_violation(final)
    with warnings.catch_warnings():
        # the DS precondition is reported through ``ds`` already
        warnings.simplefilter("ignore")
        rank = rank_property(final, rank_tol, span_tol, tol)
        residue = rank_residue(final, rank_tol, span_tol, tol)
    symmetry = None
    if observables:
        chans = [final if ch is None else _as_choi(ch) for ch, _ in observables]
        xs = [x for _, x in observables]
        if all(c.d == 2 for c in chans):
            symmetry = symmetry_deviation(chans, xs)
        else:
            symmetry = _deviation([heisenberg_defect(c, x) for c, x in zip(chans, xs)])
    labels = attribute(ds, rank, divisibility, symmetry, thresholds)
    tolerances = {
        "hermitian_psd": tol,
        "rank_tol": rank_tol,
        "span_tol": span_tol,
        "ds_threshold": thresholds.ds,
        "divisibility_threshold": thresholds.divisibility,
        "symmetry_threshold": thresholds.symmetry,
    }
    return BenchReport(desc, ds, rank, residue, divisibility, symmetry, labels, tolerances)
