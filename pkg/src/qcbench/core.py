"""Dense channel algebra: Choi matrices, superoperators and reductions.

Conventions
-----------
A channel on a ``d``-dimensional system is stored as a ``d**2 x d**2`` Choi
matrix with entries

    choi[i*d + j, k*d + l] = <j| Phi(|i><k|) |l>

so the composite index is input-major ("in-out").  With this normalization the
Choi matrix of a trace-preserving map has trace ``d`` and the identity channel
has a single nonzero eigenvalue equal to ``d``.

Superoperators act on column-stacked operators, ``vec(X)[a + b*d] = X[a, b]``.
Multi-qubit matrices use big-endian ordering: qubit 0 is the most significant
tensor factor.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import unitary_group

from .errors import ShapeError, SizeError, ValidationError

#: Largest Hilbert-space dimension accepted for dense matrices (12 qubits).
MAX_DIM = 2**12
#: Largest number of qubits for which a full-system superoperator is built.
MAX_SUPEROP_QUBITS = 6
#: Default Hermiticity / PSD tolerance.
DEFAULT_TOL = 1e-9
#: Tolerance on ``u^dagger u = 1``.
UNITARY_TOL = 1e-10

CONVENTION = "in-out"


def _as_square(m, name="matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ShapeError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _sqrt_dim(n: int, what: str) -> int:
    d = int(round(np.sqrt(n)))
    if d * d != n:
        raise ShapeError(f"{what} dimension {n} is not a perfect square")
    return d


def hermiticity_defect(m: np.ndarray) -> float:
    """Largest absolute entry of ``m - m^dagger``."""
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def check_hermitian(m, tol: float = DEFAULT_TOL, strict: bool = False, name: str = "matrix") -> None:
    """Warn (or raise under ``strict``) when ``m`` is not Hermitian within ``tol``."""
    defect = hermiticity_defect(m)
    if defect > tol:
        msg = f"{name} is not Hermitian: max |m - m^dagger| = {defect:.3e} > {tol:.1e}"
        if strict:
            raise ValidationError(msg)
        warnings.warn(msg, stacklevel=3)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Choi matrix of a channel on a ``d``-dimensional system (in-out convention)."""

    mat: np.ndarray
    d: int = field(init=False)
    convention = CONVENTION

    def __post_init__(self):
        m = _as_square(self.mat, "Choi matrix")
        object.__setattr__(self, "d", _sqrt_dim(m.shape[0], "Choi matrix"))
        object.__setattr__(self, "mat", _frozen(m))

    @property
    def tensor(self) -> np.ndarray:
        """View with axes ``(i, j, k, l)`` = (in, out, in', out')."""
        d = self.d
        return self.mat.reshape(d, d, d, d)

    def __add__(self, other: "ChoiMatrix") -> "ChoiMatrix":
        _match(self, other)
        return ChoiMatrix(self.mat + other.mat)

    def __sub__(self, other: "ChoiMatrix") -> "ChoiMatrix":
        _match(self, other)
        return ChoiMatrix(self.mat - other.mat)

    def __mul__(self, scalar) -> "ChoiMatrix":
        return ChoiMatrix(self.mat * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SuperOperator:
    """Transfer matrix of a map acting on column-stacked ``d x d`` operators."""

    mat: np.ndarray
    d: int = field(init=False)

    def __post_init__(self):
        m = _as_square(self.mat, "superoperator")
        object.__setattr__(self, "d", _sqrt_dim(m.shape[0], "superoperator"))
        object.__setattr__(self, "mat", _frozen(m))

    def apply(self, x) -> np.ndarray:
        x = _as_square(x, "operator")
        if x.shape[0] != self.d:
            raise ShapeError(f"operator dim {x.shape[0]} does not match channel dim {self.d}")
        return (self.mat @ x.reshape(-1, order="F")).reshape(self.d, self.d, order="F")


def _match(a, b) -> None:
    if a.d != b.d:
        raise ShapeError(f"channel dimensions differ: {a.d} vs {b.d}")


@dataclass(frozen=True)
class SubsetSelector:
    """Strictly increasing list of qubit positions in an ``n_qubits`` register."""

    n_qubits: int
    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be >= 1")
        if not idx:
            raise ValidationError("subset must be non-empty")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValidationError(f"subset {idx} must be strictly increasing without duplicates")
        if idx[0] < 0 or idx[-1] >= self.n_qubits:
            raise ValidationError(f"subset {idx} out of range for {self.n_qubits} qubits")
        object.__setattr__(self, "indices", idx)

    @property
    def complement(self) -> tuple:
        return tuple(q for q in range(self.n_qubits) if q not in self.indices)


@dataclass(frozen=True, eq=False)
class ChannelTrajectory:
    """Time-stamped sequence of Choi matrices with strictly increasing times."""

    times: tuple
    chois: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        chois = tuple(self.chois)
        if len(times) != len(chois) or not times:
            raise ShapeError("trajectory needs one Choi matrix per time, and at least one sample")
        if times[0] < 0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError(f"trajectory times must be >= 0 and strictly increasing: {times}")
        ds = {c.d for c in chois}
        if len(ds) != 1:
            raise ShapeError(f"trajectory mixes channel dimensions {sorted(ds)}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "chois", chois)

    @property
    def d(self) -> int:
        return self.chois[0].d

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.times, self.chois))

    def index_of(self, t: float, atol: float = 1e-12) -> int | None:
        hits = np.flatnonzero(np.isclose(self.times, t, rtol=0.0, atol=atol))
        return int(hits[0]) if hits.size else None


def tensor_product(a, b, max_dim: int = MAX_DIM) -> np.ndarray:
    """Kronecker product ``a (x) b`` with ``a`` as the more significant factor."""
    a = _as_square(a)
    b = _as_square(b)
    dim = a.shape[0] * b.shape[0]
    if dim > max_dim:
        raise SizeError(f"tensor product dimension {dim} exceeds maximum {max_dim}")
    return np.kron(a, b)


def kron_all(ops: Iterable, max_dim: int = MAX_DIM) -> np.ndarray:
    return reduce(lambda x, y: tensor_product(x, y, max_dim=max_dim), ops)


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every tensor factor not listed in ``keep``.

    The kept factors stay in their original order.
    """
    m = _as_square(m)
    dims = [int(x) for x in dims]
    if any(x < 1 for x in dims) or int(np.prod(dims)) != m.shape[0]:
        raise ShapeError(f"factor dims {dims} do not multiply to {m.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise ShapeError(f"keep={keep} must be a non-empty subset of factor positions 0..{len(dims) - 1}")
    n = len(dims)
    drop = [i for i in range(n) if i not in keep]
    t = m.reshape(dims + dims)
    # move traced factors to the end, then contract their row/column axes pairwise
    perm = keep + drop + [n + i for i in keep] + [n + i for i in drop]
    t = t.transpose(perm)
    dk = int(np.prod([dims[i] for i in keep]))
    dd = int(np.prod([dims[i] for i in drop])) if drop else 1
    t = t.reshape(dk, dd, dk, dd)
    return np.trace(t, axis1=1, axis2=3)


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = _as_square(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def check_unitary(u, tol: float = UNITARY_TOL) -> np.ndarray:
    u = _as_square(u, "unitary")
    defect = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if defect > tol:
        raise ValidationError(f"matrix is not unitary: max |u^dagger u - 1| = {defect:.3e} > {tol:.1e}")
    return u


def haar_unitary(dim: int, rng=None) -> np.ndarray:
    """Haar-random unitary (thin wrapper over scipy's sampler)."""
    return unitary_group.rvs(dim, random_state=np.random.default_rng(rng))


def identity_choi(d: int) -> ChoiMatrix:
    return choi_of_unitary(np.eye(d))


def depolarizing_choi(d: int) -> ChoiMatrix:
    """Completely depolarizing channel ``rho -> Tr(rho) 1/d``."""
    return ChoiMatrix(np.eye(d * d) / d)


def choi_of_unitary(u) -> ChoiMatrix:
    """Choi matrix of ``rho -> u rho u^dagger``: entries ``u[j,i] * conj(u[l,k])``."""
    u = check_unitary(u)
    v = u.T.reshape(-1)  # v[i*d + j] = u[j, i]
    return ChoiMatrix(np.outer(v, v.conj()))


def reduced_choi(u, n_qubits: int, subset) -> ChoiMatrix:
    """Channel induced on ``subset`` by ``u`` with a maximally mixed complement.

    ``Phi_S(rho) = Tr_{not S}[ u (rho (x) 1/2**(N-|S|)) u^dagger ]``.  Rather than
    evaluating this on each matrix unit, ``u`` is regrouped as a ``d**2 x D**2``
    matrix ``V[(i,j),(a,b)] = <j b| u |i a>`` (``D`` the complement dimension)
    and the Choi matrix is ``V V^dagger / D``, which is PSD by construction.
    """
    if not isinstance(subset, SubsetSelector):
        subset = SubsetSelector(n_qubits, tuple(subset))
    elif subset.n_qubits != n_qubits:
        raise ShapeError(f"subset is for {subset.n_qubits} qubits, unitary for {n_qubits}")
    if 2**n_qubits > MAX_DIM:
        raise SizeError(f"{n_qubits} qubits exceeds the dense limit of {MAX_DIM}")
    u = _as_square(u, "unitary")
    if u.shape[0] != 2**n_qubits:
        raise ShapeError(f"unitary dim {u.shape[0]} does not match {n_qubits} qubits")
    u = check_unitary(u)

    keep, rest = list(subset.indices), list(subset.complement)
    n = n_qubits
    d, env = 2 ** len(keep), 2 ** len(rest)
    t = u.reshape((2,) * (2 * n))
    t = t.transpose(keep + rest + [n + q for q in keep] + [n + q for q in rest])
    t = t.reshape(d, env, d, env)  # t[j, b, i, a] = <j b| u |i a>
    v = t.transpose(2, 0, 3, 1).reshape(d * d, env * env)
    return ChoiMatrix(v @ v.conj().T / env)


def _as_choi(c) -> ChoiMatrix:
    return c if isinstance(c, ChoiMatrix) else ChoiMatrix(c)


def _check_superop_size(d: int) -> None:
    if d > 2**MAX_SUPEROP_QUBITS:
        raise SizeError(f"superoperator on dimension {d} exceeds the {MAX_SUPEROP_QUBITS}-qubit limit")


def apply_choi(c: ChoiMatrix, rho) -> np.ndarray:
    """``Phi(rho)[j, l] = sum_{i,k} choi[(i,j),(k,l)] rho[i,k]``."""
    c = _as_choi(c)
    rho = _as_square(rho, "operator")
    if rho.shape[0] != c.d:
        raise ShapeError(f"operator dim {rho.shape[0]} does not match channel dim {c.d}")
    return np.einsum("ijkl,ik->jl", c.tensor, rho)


def choi_to_superop(c: ChoiMatrix) -> SuperOperator:
    c = _as_choi(c)
    d = c.d
    _check_superop_size(d)
    # S[j + l*d, i + k*d] = choi[i*d + j, k*d + l]; swapping axes 0 and 3 is an involution
    return SuperOperator(c.tensor.transpose(3, 1, 2, 0).reshape(d * d, d * d))


def superop_to_choi(s: SuperOperator) -> ChoiMatrix:
    if not isinstance(s, SuperOperator):
        s = SuperOperator(s)
    d = s.d
    return ChoiMatrix(s.mat.reshape(d, d, d, d).transpose(3, 1, 2, 0).reshape(d * d, d * d))


def compose(after: ChoiMatrix, before: ChoiMatrix) -> ChoiMatrix:
    """Choi matrix of ``after o before`` (``before`` acts first)."""
    after, before = _as_choi(after), _as_choi(before)
    _match(after, before)
    return superop_to_choi(SuperOperator(choi_to_superop(after).mat @ choi_to_superop(before).mat))


def adjoint_superop(s: SuperOperator) -> SuperOperator:
    """Heisenberg-picture dual with respect to the Hilbert-Schmidt inner product."""
    if not isinstance(s, SuperOperator):
        s = SuperOperator(s)
    return SuperOperator(s.mat.conj().T)


def trace_in(c: ChoiMatrix) -> np.ndarray:
    """Partial trace over the input index; equals ``Phi(1)``."""
    return np.einsum("ijil->jl", _as_choi(c).tensor)


def trace_out(c: ChoiMatrix) -> np.ndarray:
    """Partial trace over the output index; equals 1 for trace-preserving maps."""
    return np.einsum("ijkj->ik", _as_choi(c).tensor)


def is_cp(c: ChoiMatrix, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Return ``(min_eig >= -tol, min_eig)`` for a Hermitian Choi matrix."""
    c = _as_choi(c)
    check_hermitian(c.mat, tol, strict=True, name="Choi matrix")
    herm = (c.mat + c.mat.conj().T) / 2
    lam = float(np.linalg.eigvalsh(herm)[0])
    return lam >= -tol, lam
