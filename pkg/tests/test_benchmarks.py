import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import product_grid_deviation, random_channel
from qcbench.benchmarks import (
    LABEL_DIVISIBLE,
    LABEL_INDIVISIBLE,
    LABEL_NONE,
    LABEL_UNITARY,
    Thresholds,
    attribute,
    choi_eigensystem,
    divisibility_defect,
    ds_violation,
    full_suite,
    observable_deviation,
    product_span_dim,
    rank_bound_curve,
    rank_property,
    rank_residue,
    symmetry_deviation,
    thermal_fixed_point_check,
    usable_pairs,
)
from qcbench.channelfile import validate_schema
from qcbench.core import (
    ChannelTrajectory,
    ChoiMatrix,
    choi_of_unitary,
    depolarizing_choi,
    haar_unitary,
    identity_choi,
    reduced_choi,
    trace_in,
)
from qcbench.errors import RequestError, ShapeError, ValidationError
from qcbench.gatelab import (
    PAULI,
    SIGMA_MINUS,
    SIGMA_PLUS,
    FluctuationSpec,
    HamiltonianSpec,
    LindbladSpec,
    PauliTerm,
    bloch_redfield_choi,
    build_hamiltonian,
    evolve_unitary,
    gaussian_dephasing_choi,
    lindblad_generator,
    trajectory,
    xxz_chain,
)

X, Y, Z = PAULI["x"], PAULI["y"], PAULI["z"]
LN2 = np.log(2)


def no_field():
    return HamiltonianSpec(1, ())


def partial_dephasing(c):
    m = np.diag([1.0, 0, 0, 1]).astype(complex)
    m[0, 3] = m[3, 0] = c
    return ChoiMatrix(m)


def x_rotation(eps):
    return evolve_unitary(X / 2, eps)


# --------------------------------------------------------------------------
# double stochasticity


def test_ds_identity_and_dephasing_are_zero():
    for c in [identity_choi(2), gaussian_dephasing_choi(0.3, 1.0, 0.8), depolarizing_choi(4)]:
        rep = ds_violation(c)
        assert rep.violation_identity == pytest.approx(0, abs=1e-14)
        assert rep.violation_trace == pytest.approx(0, abs=1e-14)
        assert rep.epsilon_lower == rep.epsilon_upper / np.sqrt(rep.d)


def test_ds_bloch_redfield():
    rep = ds_violation(bloch_redfield_choi(1.0, 1.0, LN2))
    assert rep.violation_identity == pytest.approx(np.sqrt(2) * 0.5, abs=1e-14)
    assert rep.violation_trace == pytest.approx(0, abs=1e-14)
    assert (rep.epsilon_lower, rep.epsilon_upper) == pytest.approx((0.5, np.sqrt(0.5)), abs=1e-14)


def test_thermal_fixed_point_examples():
    dephasing = lindblad_generator(LindbladSpec(no_field(), ((Z, 0.7),)))
    violated, v = thermal_fixed_point_check(dephasing, 50.0)
    assert not violated and v == pytest.approx(0, abs=1e-14)

    decay = lindblad_generator(LindbladSpec(no_field(), ((SIGMA_MINUS, 1.0),)))
    violated, v = thermal_fixed_point_check(decay, 60.0)
    assert violated and v == pytest.approx(np.sqrt(0.5), abs=1e-12)

    nbar, gamma = 1.0, 1.0
    thermal = lindblad_generator(LindbladSpec(no_field(), ((SIGMA_MINUS, gamma * (nbar + 1)), (SIGMA_PLUS, gamma * nbar))))
    violated, v = thermal_fixed_point_check(thermal, 60.0)
    p0 = (nbar + 1) / (2 * nbar + 1)
    assert violated and 0 < v < np.sqrt(0.5)
    assert v == pytest.approx(np.sqrt(2) * (p0 - 0.5), abs=1e-12)


# --------------------------------------------------------------------------
# rank property


@pytest.mark.parametrize("d", [2, 4, 16])
def test_rank_bound_curve(d):
    rows = rank_bound_curve(d)
    assert [r[0] for r in rows] == list(range(1, d * d + 1))
    assert all(r[1] == d * d - r[0] + 1 and r[2] == r[0] ** 2 - r[0] + 1 for r in rows)


def test_eigensystem_reshape_reproduces_trace_in(rng):
    c, _ = random_channel(rng, 3)
    lam, hats = choi_eigensystem(c)
    recon = sum(x * a @ a.conj().T for x, a in zip(lam, hats))
    np.testing.assert_allclose(recon, trace_in(c), atol=1e-12)
    np.testing.assert_allclose(np.sort(lam), np.clip(np.linalg.eigvalsh(c.mat), 0, None), atol=1e-12)


def test_eigensystem_rejects_non_psd():
    with pytest.raises(ValidationError):
        choi_eigensystem(ChoiMatrix(np.eye(4)[[0, 2, 1, 3]]))


def test_rank_one_is_satisfied(rng):
    u = haar_unitary(4, rng)
    rep = rank_property(choi_of_unitary(u))
    assert (rep.k, rep.span_dim, rep.bound_d, rep.bound_k, rep.satisfied) == (1, 1, 16, 1, True)
    assert rep.variant_span_dim == 1


def test_depolarizing_violates_rank_property():
    rep = rank_property(depolarizing_choi(2))
    assert (rep.k, rep.span_dim, rep.bound_d, rep.bound_k, rep.satisfied) == (4, 4, 1, 13, False)


def test_partial_dephasing_satisfies_rank_property():
    rep = rank_property(partial_dephasing(0.4))
    assert (rep.k, rep.span_dim, rep.bound_d, rep.bound_k, rep.satisfied) == (2, 2, 3, 3, True)
    res = rank_residue(partial_dephasing(0.4))
    assert (res.mu, res.residue) == (0, 0.0)


def test_rank_property_warns_without_double_stochasticity():
    with pytest.warns(UserWarning, match="doubly stochastic"):
        rank_property(bloch_redfield_choi(1.0, 1.0, LN2))


def test_residue_of_unitary_plus_depolarizing_mixture(rng):
    u = haar_unitary(2, rng)
    mix = ChoiMatrix(0.95 * choi_of_unitary(u).mat + 0.05 * depolarizing_choi(2).mat)
    rep = rank_residue(mix)
    lam = np.sort(np.linalg.eigvalsh(mix.mat))
    assert rep.mu == 3 and rep.k == 1 and rep.satisfied
    assert rep.residue == pytest.approx(float(np.sum(lam[: rep.mu] ** 2)), abs=1e-14)
    assert rep.residue == pytest.approx(3 * 0.025**2, abs=1e-14)


def test_residue_terminates_on_random_mixtures(rng):
    for _ in range(20):
        w = rng.dirichlet(np.ones(int(rng.integers(1, 6))))
        c = ChoiMatrix(sum(x * choi_of_unitary(haar_unitary(2, rng)).mat for x in w))
        before = rank_property(c, rank_tol=1e-9)
        rep = rank_residue(c, rank_tol=1e-9)
        assert rep.satisfied
        assert rep.mu <= before.k - 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_span_dim_monotone_property(seed, d):
    rng = np.random.default_rng(seed)
    c, _ = random_channel(rng, d, n_kraus=d * d)
    _, hats = choi_eigensystem(c)
    dims = [product_span_dim(hats[:k]) for k in range(1, len(hats) + 1)]
    assert all(b >= a for a, b in zip(dims, dims[1:]))


# --------------------------------------------------------------------------
# divisibility


def test_divisibility_lindblad_and_unitary_are_zero():
    grid = np.linspace(0, 1, 5)
    spec = LindbladSpec(xxz_chain(2, 0.8, [0.2, 0.5]), ((np.kron(SIGMA_MINUS, np.eye(2)), 0.3),))
    assert divisibility_defect(trajectory(spec, grid)).max_defect <= 1e-8
    assert divisibility_defect(trajectory(xxz_chain(2, 1.0, 0.3), grid)).max_defect <= 1e-10
    br = trajectory(lambda t: bloch_redfield_choi(1.0, 0.7, t), grid)
    rep = divisibility_defect(br)
    assert rep.max_defect <= 1e-8
    assert len(rep.pairs) == len(usable_pairs(br)) == 15


def test_divisibility_gaussian_dephasing():
    traj = trajectory(lambda t: gaussian_dephasing_choi(0.0, 1.0, t), [0.0, 1.0, 2.0])
    rep = divisibility_defect(traj, pairs=[(1.0, 1.0)])
    assert rep.max_defect == pytest.approx(np.sqrt(2) * (np.exp(-2) - np.exp(-4)), abs=1e-12)
    assert rep.max_defect == pytest.approx(0.16549, abs=1e-4)


def test_divisibility_missing_pair_lists_usable():
    traj = trajectory(lambda t: gaussian_dephasing_choi(0.0, 1.0, t), [0.0, 1.0, 2.0])
    with pytest.raises(RequestError, match="usable pairs"):
        divisibility_defect(traj, pairs=[(1.0, 2.0)])


# --------------------------------------------------------------------------
# conserved observables


def test_symmetry_conserved_and_depolarizing():
    rot = [choi_of_unitary(evolve_unitary(Z, t)) for t in (0.3, 1.1, 2.0)]
    assert symmetry_deviation(rot, [Z] * 3).deviation <= 1e-12
    rep = symmetry_deviation([depolarizing_choi(2)] * 3, [Z] * 3)
    assert rep.deviation == pytest.approx(3.0, abs=1e-12)


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.5])
def test_symmetry_single_x_rotation(eps):
    rep = symmetry_deviation([choi_of_unitary(x_rotation(eps))], [Z])
    # G = (1 - cos e) Z - sin e Y has eigenvalues +-2 sin(e/2)
    assert rep.deviation == pytest.approx(2 * np.sin(eps / 2), abs=1e-12)
    oracle = product_grid_deviation([[x_rotation(eps)]], [Z], n_points=20_000)
    assert rep.deviation == pytest.approx(oracle, abs=1e-3)
    psi = rep.states[0]
    expect = np.real(psi.conj() @ (Z - x_rotation(eps).conj().T @ Z @ x_rotation(eps)) @ psi)
    assert abs(expect) == pytest.approx(rep.deviation, abs=1e-12)


def random_site(rng, max_angle, max_flip):
    """Small random rotation followed by a weak phase flip, with a random unit-norm Pauli observable."""
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    u = evolve_unitary((axis[0] * X + axis[1] * Y + axis[2] * Z) / 2, rng.uniform(0, max_angle))
    p = rng.uniform(0, max_flip)
    kraus = [np.sqrt(1 - p) * u, np.sqrt(p) * Z @ u]
    choi = ChoiMatrix(sum(np.outer(k.T.reshape(-1), k.T.reshape(-1).conj()) for k in kraus))
    o = rng.standard_normal(3)
    o /= np.linalg.norm(o)
    return kraus, choi, o[0] * X + o[1] * Y + o[2] * Z


@pytest.mark.parametrize("n,points", [(1, 20_000), (2, 2000), (3, 150)])
def test_symmetry_random_instances_against_grid(rng, n, points):
    for _ in range(3):
        sites = [random_site(rng, 0.05, 0.005) for _ in range(n)]
        value = symmetry_deviation([s[1] for s in sites], [s[2] for s in sites]).deviation
        oracle = product_grid_deviation([s[0] for s in sites], [s[2] for s in sites], n_points=points)
        assert oracle <= value + 1e-12
        assert value == pytest.approx(oracle, abs=1e-3)


def test_symmetry_validation():
    with pytest.raises(ShapeError):
        symmetry_deviation([identity_choi(4)], [np.eye(4)])
    with pytest.raises(ValidationError):
        symmetry_deviation([identity_choi(2)], [np.array([[0, 1], [0, 0]])])


def _dimer_reduced(eps=0.0, t=1.3):
    spec = xxz_chain(4, 0.9, [0.4, -0.2, 0.3, 0.1], bonds=[(0, 1), (2, 3)])
    h = build_hamiltonian(spec) + eps * np.kron(X, np.eye(8))
    u = evolve_unitary(h, t)
    chans = {s: reduced_choi(u, 4, s) for s in [(0, 1), (2, 3), (0, 1, 2, 3)]}
    h01 = 0.9 * np.kron(X, X) + 0.4 * np.kron(Z, np.eye(2)) - 0.2 * np.kron(np.eye(2), Z)
    h23 = 0.9 * np.kron(X, X) + 0.3 * np.kron(Z, np.eye(2)) + 0.1 * np.kron(np.eye(2), Z)
    return chans, h01, h23, build_hamiltonian(spec)


def test_observable_deviation_conserved_hamiltonian():
    chans, h01, h23, h = _dimer_reduced()
    assert observable_deviation(chans, [((0, 1), h01), ((2, 3), h23)]).deviation <= 1e-9
    assert observable_deviation(chans, [((0, 1, 2, 3), h)]).deviation <= 1e-9
    ident = {(0,): identity_choi(2)}
    assert observable_deviation(ident, [((0,), Z)]).deviation == 0.0


def test_observable_deviation_grows_with_perturbation():
    values = []
    for eps in (0.01, 0.05, 0.1):
        chans, h01, h23, _ = _dimer_reduced(eps)
        values.append(observable_deviation(chans, [((0, 1), h01), ((2, 3), h23)]).deviation)
    assert 0 < values[0] < values[1] < values[2]


def test_observable_deviation_flags_overlap_and_missing():
    chans, h01, _, _ = _dimer_reduced()
    rep = observable_deviation(chans, [((0, 1), h01), ((0, 1, 2, 3), np.eye(16))])
    assert rep.upper_bound
    with pytest.raises(RequestError):
        observable_deviation(chans, [((1, 2), h01)])


# --------------------------------------------------------------------------
# suite and attribution


def test_attribution_truth_table():
    ds_ok = ds_violation(identity_choi(2))
    ds_bad = ds_violation(bloch_redfield_choi(1.0, 1.0, 1.0))
    with pytest.warns(UserWarning):
        rank_any = rank_property(bloch_redfield_choi(1.0, 1.0, 1.0))
    rank_ok = rank_property(identity_choi(2))
    rank_bad = rank_property(depolarizing_choi(2))
    sym_bad = symmetry_deviation([choi_of_unitary(x_rotation(0.2))], [Z])
    sym_ok = symmetry_deviation([identity_choi(2)], [Z])
    assert attribute(ds_bad, rank_any, symmetry=sym_bad) == (LABEL_DIVISIBLE,)
    assert attribute(ds_ok, rank_bad, symmetry=sym_bad) == (LABEL_INDIVISIBLE,)
    assert attribute(ds_ok, rank_ok, symmetry=sym_bad) == (LABEL_UNITARY,)
    assert attribute(ds_ok, rank_ok, symmetry=sym_ok) == (LABEL_NONE,)
    assert attribute(ds_ok, rank_ok) == (LABEL_NONE,)
    strict = Thresholds(symmetry=1.0)
    assert attribute(ds_ok, rank_ok, symmetry=sym_bad, thresholds=strict) == (LABEL_NONE,)


def test_full_suite_examples():
    assert full_suite(identity_choi(2)).attribution == LABEL_NONE
    assert full_suite(bloch_redfield_choi(1.0, 1.0, LN2)).attribution == LABEL_DIVISIBLE
    rep = full_suite(choi_of_unitary(x_rotation(0.1)), observables=[(None, Z)])
    assert rep.attribution == LABEL_UNITARY
    assert rep.symmetry.deviation == pytest.approx(2 * np.sin(0.05))


def test_full_suite_fluctuation_trajectory():
    fl = FluctuationSpec(HamiltonianSpec(1, (PauliTerm(0.0, ((0, "z"),)),)), ((0, 1 / np.sqrt(2)),), samples=2000)
    traj = trajectory(fl, [0.0, 0.5, 1.0])
    rep = full_suite(traj)
    assert rep.attribution == LABEL_INDIVISIBLE
    assert rep.divisibility.max_defect > 0.1
    assert rep.ds.violation_identity < 1e-12
    doc = rep.to_dict()
    validate_schema(doc, "bench_report.v1.json")
    assert doc["input"]["kind"] == "trajectory"


def test_full_suite_is_deterministic():
    traj = ChannelTrajectory((0.0, 1.0), (identity_choi(2), partial_dephasing(0.5)))
    a, b = full_suite(traj).to_dict(), full_suite(traj).to_dict()
    assert a == b
