"""Target gates and the three error classes.

* Hamiltonian-generated unitaries (and systematic perturbations of them),
* time-independent Lindblad channels (CP-divisible errors),
* shot-to-shot averages over Gaussian-fluctuating Hamiltonians (CP-indivisible
  errors),

plus closed-form single-qubit channels used as references.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .core import (
    MAX_DIM,
    MAX_SUPEROP_QUBITS,
    ChannelTrajectory,
    ChoiMatrix,
    SubsetSelector,
    SuperOperator,
    check_hermitian,
    choi_of_unitary,
    reduced_choi,
    superop_to_choi,
)
from .errors import NumericError, ShapeError, SizeError, ValidationError

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
# sigma_minus |1> = |0>
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.copy()

NAMED_OPERATORS = {
    "x": PAULI["x"],
    "y": PAULI["y"],
    "z": PAULI["z"],
    "sigma_minus": SIGMA_MINUS,
    "sigma_plus": SIGMA_PLUS,
}

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class PauliTerm:
    """``coefficient * prod_q sigma_{axis_q}`` on the listed qubits."""

    coefficient: float
    factors: tuple

    def __post_init__(self):
        factors = tuple((int(q), str(a).lower()) for q, a in self.factors)
        if not np.isfinite(self.coefficient):
            raise ValidationError(f"non-finite coefficient {self.coefficient}")
        qubits = [q for q, _ in factors]
        if len(set(qubits)) != len(qubits):
            raise ValidationError(f"repeated qubit in Pauli term {factors}")
        bad = [a for _, a in factors if a not in ("x", "y", "z")]
        if bad:
            raise ValidationError(f"unknown Pauli axis {bad[0]!r}")
        object.__setattr__(self, "coefficient", float(self.coefficient))
        object.__setattr__(self, "factors", factors)


@dataclass(frozen=True)
class HamiltonianSpec:
    n_qubits: int
    terms: tuple

    def __post_init__(self):
        terms = tuple(t if isinstance(t, PauliTerm) else PauliTerm(*t) for t in self.terms)
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be >= 1")
        for t in terms:
            for q, _ in t.factors:
                if not 0 <= q < self.n_qubits:
                    raise ValidationError(f"qubit {q} out of range for {self.n_qubits} qubits")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def with_coefficients(self, coefficients: Sequence[float]) -> "HamiltonianSpec":
        if len(coefficients) != len(self.terms):
            raise ShapeError("one coefficient per term required")
        return HamiltonianSpec(
            self.n_qubits, tuple(PauliTerm(c, t.factors) for c, t in zip(coefficients, self.terms))
        )


@dataclass(frozen=True, eq=False)
class LindbladSpec:
    """Time-independent generator: Hamiltonian plus ``(operator, rate)`` jumps."""

    hamiltonian: HamiltonianSpec
    jumps: tuple = ()

    def __post_init__(self):
        dim = self.hamiltonian.dim
        jumps = []
        for op, rate in self.jumps:
            op = np.asarray(op, dtype=complex)
            if op.shape != (dim, dim):
                raise ShapeError(f"jump operator shape {op.shape} does not match dim {dim}")
            if not rate >= 0:
                raise ValidationError(f"jump rates must be non-negative, got {rate}")
            jumps.append((op, float(rate)))
        object.__setattr__(self, "jumps", tuple(jumps))


@dataclass(frozen=True)
class FluctuationSpec:
    """Gaussian shot-to-shot noise on selected Hamiltonian coefficients.

    ``fluctuations`` lists ``(term_index, std)`` pairs; each sample draws every
    listed coefficient independently as ``c + std * N(0, 1)``.
    """

    base: HamiltonianSpec
    fluctuations: tuple
    samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        fl = tuple((int(i), float(s)) for i, s in self.fluctuations)
        for i, s in fl:
            if not 0 <= i < len(self.base.terms):
                raise ValidationError(f"term index {i} out of range")
            if not s >= 0:
                raise ValidationError(f"standard deviation must be >= 0, got {s}")
        if self.samples < 1:
            raise ValidationError("sample count must be >= 1")
        object.__setattr__(self, "fluctuations", fl)


def embed(op, qubit: int, n_qubits: int) -> np.ndarray:
    """Place a single-qubit operator on ``qubit`` of an ``n_qubits`` register."""
    return pauli_product({qubit: np.asarray(op, dtype=complex)}, n_qubits)


def pauli_product(ops: dict, n_qubits: int) -> np.ndarray:
    if 2**n_qubits > MAX_DIM:
        raise SizeError(f"{n_qubits} qubits exceeds the dense limit of {MAX_DIM}")
    out = np.ones((1, 1), dtype=complex)
    for q in range(n_qubits):
        out = np.kron(out, ops.get(q, PAULI["i"]))
    return out


def term_matrix(term: PauliTerm, n_qubits: int) -> np.ndarray:
    """Unit-coefficient Pauli string for ``term``."""
    return pauli_product({q: PAULI[a] for q, a in term.factors}, n_qubits)


def build_hamiltonian(spec: HamiltonianSpec) -> np.ndarray:
    h = np.zeros((spec.dim, spec.dim), dtype=complex)
    for t in spec.terms:
        h += t.coefficient * term_matrix(t, spec.n_qubits)
    return h


def xxz_chain(n_qubits: int, coupling: float, fields, bonds=None) -> HamiltonianSpec:
    """``J sum_<ij> X_i X_j + sum_i h_i Z_i``; nearest-neighbour open chain by default."""
    fields = np.broadcast_to(np.asarray(fields, dtype=float), (n_qubits,))
    if bonds is None:
        bonds = [(i, i + 1) for i in range(n_qubits - 1)]
    terms = [PauliTerm(coupling, ((i, "x"), (j, "x"))) for i, j in bonds]
    terms += [PauliTerm(h, ((i, "z"),)) for i, h in enumerate(fields)]
    return HamiltonianSpec(n_qubits, tuple(terms))


def evolve_unitary(h, t: float) -> np.ndarray:
    """``exp(-i h t)`` through the Hermitian eigendecomposition of ``h``."""
    h = np.asarray(h, dtype=complex)
    check_hermitian(h, HERMITIAN_TOL, strict=True, name="Hamiltonian")
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def _check_superop_qubits(n: int) -> None:
    if n > MAX_SUPEROP_QUBITS:
        raise SizeError(f"superoperators are limited to {MAX_SUPEROP_QUBITS} qubits, got {n}")


def lindblad_generator(spec: LindbladSpec) -> SuperOperator:
    """Column-stacked superoperator of ``-i[H, rho] + sum_j g_j (L rho L^+ - {L^+ L, rho}/2)``."""
    _check_superop_qubits(spec.hamiltonian.n_qubits)
    dim = spec.hamiltonian.dim
    eye = np.eye(dim)
    h = build_hamiltonian(spec.hamiltonian)
    # vec(A X B) = (B^T kron A) vec(X)
    gen = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for op, rate in spec.jumps:
        ld = op.conj().T @ op
        gen += rate * (np.kron(op.conj(), op) - 0.5 * np.kron(eye, ld) - 0.5 * np.kron(ld.T, eye))
    return SuperOperator(gen)


def lindblad_channel(gen: SuperOperator, t: float) -> ChoiMatrix:
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}")
    s = expm(np.asarray(gen.mat) * t)
    if not np.all(np.isfinite(s)):
        raise NumericError(f"matrix exponential produced non-finite entries at t={t}")
    return superop_to_choi(SuperOperator(s))


def bloch_redfield_choi(gamma1: float, gamma2: float, t: float) -> ChoiMatrix:
    """Single-qubit decay ``|1> -> |0>`` at rate ``gamma1`` with coherence decay ``gamma2``."""
    if gamma1 < 0 or gamma2 < 0 or t < 0:
        raise ValidationError("rates and time must be non-negative")
    if gamma2 < gamma1 / 2:
        warnings.warn(f"gamma2={gamma2} < gamma1/2={gamma1 / 2}: channel is not completely positive", stacklevel=2)
    p = np.exp(-gamma1 * t)
    c = np.exp(-gamma2 * t)
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = 1.0
    m[2, 2] = 1.0 - p
    m[3, 3] = p
    m[0, 3] = m[3, 0] = c
    return ChoiMatrix(m)


def gaussian_dephasing_choi(omega0: float, sigma: float, t: float) -> ChoiMatrix:
    """Ensemble-averaged precession with Gaussian frequency noise: coherence ``exp(-i w0 t - sigma^2 t^2)``."""
    if sigma < 0 or t < 0:
        raise ValidationError("sigma and time must be non-negative")
    c = np.exp(-1j * omega0 * t - sigma**2 * t**2)
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[3, 3] = 1.0
    m[0, 3] = c
    m[3, 0] = np.conj(c)
    return ChoiMatrix(m)


_CHUNK = 256


def _unitary_factors(us: np.ndarray, n_qubits: int, subset: SubsetSelector | None):
    """Stack of ``F_m`` with ``choi(u_m) = F_m F_m^+ / env`` for a batch of unitaries."""
    b = us.shape[0]
    if subset is None:
        d = us.shape[1]
        return us.transpose(0, 2, 1).reshape(b, d * d, 1), 1
    keep, rest = list(subset.indices), list(subset.complement)
    n = n_qubits
    d, env = 2 ** len(keep), 2 ** len(rest)
    t = us.reshape((b,) + (2,) * (2 * n))
    t = t.transpose([0] + [1 + q for q in keep + rest] + [1 + n + q for q in keep + rest])
    t = t.reshape(b, d, env, d, env)
    return t.transpose(0, 3, 1, 4, 2).reshape(b, d * d, env * env), env


def fluctuating_channel(spec: FluctuationSpec, t: float, subset=None) -> ChoiMatrix:
    """Average of unitary Choi matrices over Gaussian-sampled Hamiltonians.

    Samples are drawn from ``numpy.random.default_rng(spec.seed)`` as one
    ``(samples, n_fluctuating)`` standard-normal array, so the result depends
    only on ``spec``. With every std equal to zero the base unitary's Choi
    matrix is returned unchanged.
    """
    base = spec.base
    n = base.n_qubits
    if subset is not None and not isinstance(subset, SubsetSelector):
        subset = SubsetSelector(n, tuple(subset))
    h0 = build_hamiltonian(base)

    def single(h):
        u = evolve_unitary(h, t)
        return choi_of_unitary(u) if subset is None else reduced_choi(u, n, subset)

    active = [(i, s) for i, s in spec.fluctuations if s > 0]
    if not active:
        return single(h0)
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal((spec.samples, len(spec.fluctuations)))
    sig = np.array([s for _, s in spec.fluctuations])
    mats = np.stack([term_matrix(base.terms[i], n) for i, _ in spec.fluctuations])
    dc = z * sig  # coefficient offsets, one row per sample

    d = base.dim if subset is None else 2 ** len(subset.indices)
    acc = np.zeros((d * d, d * d), dtype=complex)
    env = 1
    for start in range(0, spec.samples, _CHUNK):
        block = dc[start : start + _CHUNK]
        hs = h0[None] + np.einsum("mp,pab->mab", block, mats)
        w, v = np.linalg.eigh(hs)
        us = (v * np.exp(-1j * w * t)[:, None, :]) @ v.conj().transpose(0, 2, 1)
        f, env = _unitary_factors(us, n, subset)
        f = f.transpose(1, 0, 2).reshape(d * d, -1)
        acc += f @ f.conj().T
    return ChoiMatrix(acc / (env * spec.samples))


def systematic_perturbation(h0: HamiltonianSpec, delta: HamiltonianSpec, t: float) -> np.ndarray:
    """``exp(-i (H0 + dH) t)``: the gate actually applied under a systematic error."""
    if h0.n_qubits != delta.n_qubits:
        raise ShapeError(f"qubit counts differ: {h0.n_qubits} vs {delta.n_qubits}")
    return evolve_unitary(build_hamiltonian(h0) + build_hamiltonian(delta), t)


def trajectory(builder, times: Sequence[float], subset=None) -> ChannelTrajectory:
    """Sample a channel family on a time grid starting at 0.

    ``builder`` is a :class:`HamiltonianSpec` (unitary evolution), a
    :class:`LindbladSpec`, a :class:`FluctuationSpec`, or any callable
    ``t -> ChoiMatrix``.  ``subset`` reduces the unitary and fluctuation cases
    to a subset of qubits.
    """
    times = [float(t) for t in times]
    if not times or times[0] != 0.0:
        raise ValidationError("time grid must start at 0")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValidationError("time grid must be strictly increasing")

    make: Callable[[float], ChoiMatrix]
    if isinstance(builder, LindbladSpec):
        if subset is not None:
            raise ValidationError("subset reduction is not defined for Lindblad builders")
        gen = lindblad_generator(builder)
        make = lambda t: lindblad_channel(gen, t)  # noqa: E731
    elif isinstance(builder, FluctuationSpec):
        make = lambda t: fluctuating_channel(builder, t, subset=subset)  # noqa: E731
    elif isinstance(builder, HamiltonianSpec):
        h = build_hamiltonian(builder)
        if subset is None:
            make = lambda t: choi_of_unitary(evolve_unitary(h, t))  # noqa: E731
        else:
            make = lambda t: reduced_choi(evolve_unitary(h, t), builder.n_qubits, subset)  # noqa: E731
    elif callable(builder):
        make = builder
    else:
        raise TypeError(f"unsupported trajectory builder {type(builder).__name__}")
    return ChannelTrajectory(tuple(times), tuple(make(t) for t in times))
