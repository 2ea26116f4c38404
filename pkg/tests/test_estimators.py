import math

import numpy as np
import pytest
from scipy.stats import norm, poisson

from cvswap import estimators as est, fock
from cvswap.estimators import CutoffPlan, EstimatorResult
from cvswap.fock import CutoffSpec, MixedEnsemble

from conftest import random_ensemble, random_pure


# ---------------------------------------------------------------------------
# result types


def test_estimator_result_validation():
    EstimatorResult(0.5 + 0j, 0.01, 100, 3, 7)
    with pytest.raises(ValueError):
        EstimatorResult(0.5 + 0j, -0.1, 100, 0, 7)
    with pytest.raises(ValueError):
        EstimatorResult(0.5 + 0j, 0.1, 100, 101, 7)


def test_cutoff_plan_validation():
    with pytest.raises(ValueError):
        CutoffPlan(-1, 0.1, "chernoff", 0.5)


def test_estimator_result_json_roundtrip():
    res = EstimatorResult(0.25 - 0.125j, 0.5, 10, 1, 42)
    doc = res.to_dict()
    assert doc == {
        "mean_re": 0.25,
        "mean_im": -0.125,
        "stderr": 0.5,
        "shots": 10,
        "discarded": 1,
        "seed": 42,
    }
    assert EstimatorResult.from_dict(doc) == res
    single = EstimatorResult(1.0 + 0j, math.nan, 1, 0, 3)
    back = EstimatorResult.from_dict(single.to_dict())
    assert math.isnan(back.stderr) and back.mean == single.mean


def test_cutoff_plan_json_roundtrip():
    plan = est.cutoff_for_squeezed(1.0, 0.01)
    assert CutoffPlan.from_dict(plan.to_dict()) == plan
    plain = est.cutoff_for_coherent_chernoff(2.0, 0.05)
    assert CutoffPlan.from_dict(plain.to_dict()) == plain


# ---------------------------------------------------------------------------
# the shot estimator


def test_vacuum_pair_estimates_one():
    vac = fock.basis_state((0,), CutoffSpec((2,)))
    for m in (0, 1, 5):
        res = est.cv_swap_estimate(vac, vac, m, 300, 1)
        assert res.mean == 1.0 + 0j and res.stderr == 0.0 and res.discarded == 0


def test_zero_shots_rejected():
    vac = fock.basis_state((0,), CutoffSpec((2,)))
    with pytest.raises(ValueError):
        est.cv_swap_estimate(vac, vac, 1, 0, 1)


def test_squeezed_pair_sampled_mean():
    cut = CutoffSpec((30,))
    plus = fock.prepare("squeezed", cut, z=1.0)
    minus = fock.prepare("squeezed", cut, z=-1.0)
    res = est.cv_swap_estimate(plus, minus, 30, 100_000, 13)
    want = est.analytic_squeezed_overlap(1.0)
    assert abs(res.mean.real - want) <= 5 * res.stderr
    assert abs(res.mean.imag) == 0.0


def test_swap2m_matches_closed_form_at_finite_m():
    cut = CutoffSpec((40,))
    joint = fock.tensor(
        fock.prepare("squeezed", cut, z=1.0),
        fock.prepare("squeezed", cut, z=-1.0),
    )
    for m in range(0, 12):
        got = est.swap2m_expectation(joint, m)
        want = est.analytic_swap2m_squeezed(1.0, m)
        # limited by the preparation truncation of the squeezed inputs
        assert got == pytest.approx(want, abs=1e-5)


def test_swap2m_vacuum():
    joint = fock.basis_state((0, 0), CutoffSpec((3, 3)))
    assert est.swap2m_expectation(joint, 0) == pytest.approx(1.0, abs=1e-14)


def test_swap2m_equals_overlap_at_full_m(rng):
    cut = CutoffSpec((10,))
    for _ in range(15):
        a, b = random_pure(rng, 10), random_pure(rng, 10)
        want = abs(fock.inner_product(a, b)) ** 2
        got = est.swap2m_expectation(fock.tensor(a, b), 10)
        assert got == pytest.approx(want, abs=1e-10)


def test_unbiasedness_by_enumeration(rng):
    # full enumeration of the sampled pattern distribution times the shot
    # weights reproduces swap2m_expectation
    a, b = random_pure(rng, 7), random_pure(rng, 7)
    for m in (1, 3, 7):
        groups = est._group_factors([a, b], [(0, 1)], [m])
        block = est._sampling_block(groups[0])
        enumerated = sum(
            cw * float(np.dot(dist, block.weights.real))
            for cw, dist in zip(block.component_weights, block.distributions)
        )
        assert enumerated == pytest.approx(est.swap2m_expectation(fock.tensor(a, b), m), abs=1e-12)


def test_mixed_state_estimation(rng):
    rho = random_ensemble(rng, 5, 2)
    sigma = random_ensemble(rng, 5, 3)
    from conftest import density_matrix

    want = float(np.trace(density_matrix(rho) @ density_matrix(sigma)).real)
    got = est.parity_overlap_expectation([rho, sigma], [(0, 1)], 5)
    assert got == pytest.approx(want, abs=1e-10)
    res = est.cv_swap_estimate(rho, sigma, 5, 60_000, 3)
    assert abs(res.mean.real - want) <= 5 * res.stderr


def test_parity_single_pair_is_cv_path(rng):
    a, b = random_pure(rng, 6), random_pure(rng, 6)
    r1 = est.cv_swap_estimate(a, b, 6, 4000, 9)
    r2 = est.parity_overlap_estimate([a, b], [(0, 1)], 6, 4000, 9)
    assert r1 == r2


def test_parity_with_unequal_cutoffs(rng):
    # pads are asymmetric: the sampled enumeration, the operator route,
    # and the padded-distribution route must still agree
    a = random_pure(rng, 7)
    b = random_pure(rng, 3)
    joint = fock.tensor(a, fock.pad(b, (7,)))
    for m in (1, 3, 5):
        overlap_route = est.swap2m_expectation(joint, m)
        operator_route = est.parity_overlap_expectation([a, b], [(0, 1)], m)
        groups = est._group_factors([a, b], [(0, 1)], [m])
        block = est._sampling_block(groups[0])
        enumerated = sum(
            cw * float(np.dot(dist, block.weights.real))
            for cw, dist in zip(block.component_weights, block.distributions)
        )
        assert operator_route == pytest.approx(overlap_route, abs=1e-12)
        assert enumerated == pytest.approx(overlap_route, abs=1e-12)


def test_parity_dual_routes_on_entangled_joint(rng):
    # the masked-pair-swap expectation and the post-beamsplitter
    # distribution agree on entangled two-mode inputs, pure or mixed
    cut = CutoffSpec((6, 6))
    amps = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
    amps /= np.linalg.norm(amps)
    joint = fock.FockState(cut, amps)
    ens = MixedEnsemble(((0.5, joint), (0.5, fock.basis_state((1, 1), cut))))
    for state in (joint, ens):
        for m in (1, 3, 6, 12):
            a = est.parity_overlap_expectation([state], [(0, 1)], m)
            b = est.swap2m_expectation(state, m)
            assert a == pytest.approx(b, abs=1e-12)


def test_parity_rejects_overlapping_pairs(rng):
    a = random_pure(rng, 3, modes=2)
    b = random_pure(rng, 3, modes=2)
    with pytest.raises(ValueError):
        est.parity_overlap_estimate([a, b], [(0, 2), (0, 3)], None, 10, 0)


def test_estimator_determinism(rng):
    a, b = random_pure(rng, 6), random_pure(rng, 6)
    r1 = est.cv_swap_estimate(a, b, 4, 2000, 77)
    r2 = est.cv_swap_estimate(a, b, 4, 2000, 77)
    assert r1 == r2


def test_discarded_shots_counted(rng):
    # single photons meet a threshold of zero photons half the time
    cut = CutoffSpec((1,))
    one = fock.basis_state((1,), cut)
    res = est.cv_swap_estimate(one, one, 0, 20_000, 5)
    assert res.discarded > 0
    assert res.discarded <= res.shots
    assert abs(res.mean) <= 1.0 + 3.0 * res.stderr


def test_shot_weights_bounded(rng):
    a, b = random_pure(rng, 5), random_pure(rng, 5)
    groups = est._group_factors([a, b], [(0, 1)], [2])
    block = est._sampling_block(groups[0])
    assert np.all(np.abs(block.weights) <= 1.0 + 1e-15)


# ---------------------------------------------------------------------------
# bounds


def test_error_bound_global_squeezed_pair():
    cut = CutoffSpec((60,))
    joint = fock.tensor(
        fock.prepare("squeezed", cut, z=1.0),
        fock.prepare("squeezed", cut, z=-1.0),
    )
    for m in (2, 5, 9):
        got = est.error_bound_global(joint, m)
        assert got == pytest.approx(math.tanh(1.0) ** (2 * (m + 1)), abs=1e-7)


def test_error_bound_vacuum_zero():
    vac2 = fock.basis_state((0, 0), CutoffSpec((3, 3)))
    assert est.error_bound_global(vac2, 0) == 0.0
    vac1 = fock.basis_state((0,), CutoffSpec((3,)))
    assert est.error_bound_local(vac1, vac1, 0) == 0.0


def test_error_bound_local_coherent():
    energy = 1.5
    cut = CutoffSpec((30,))
    coh = fock.prepare("coherent", cut, alpha=math.sqrt(energy))
    for m in (1, 3):
        cdf = sum(math.exp(-energy) * energy ** k / math.factorial(k) for k in range(m + 1))
        assert est.error_bound_local(coh, coh, m) == pytest.approx(1 - cdf ** 2, abs=1e-10)


def test_bound_sandwich(rng):
    for _ in range(20):
        a, b = random_pure(rng, 8), random_pure(rng, 8)
        joint = fock.tensor(a, b)
        overlap = abs(fock.inner_product(a, b)) ** 2
        for m in (1, 3, 6):
            approx = est.swap2m_expectation(joint, m)
            g = est.error_bound_global(joint, m)
            l = est.error_bound_local(a, b, m)
            assert abs(overlap - approx) <= g + 1e-12
            assert g <= l + 1e-12


def test_eq17_parity_structure():
    limit = est.analytic_squeezed_overlap(0.9)
    for m in range(3, 12):
        value = est.analytic_swap2m_squeezed(0.9, m)
        if m % 2 == 0:
            assert value > limit
        else:
            assert value < limit
    assert est.analytic_swap2m_squeezed(0.0, 4) == 1.0
    assert est.analytic_squeezed_overlap(1.0) == pytest.approx(1 / math.cosh(2.0), abs=1e-15)


# ---------------------------------------------------------------------------
# planners


def test_squeezed_planner_minimal():
    plan = est.cutoff_for_squeezed(1.0, 0.01)
    assert math.tanh(1.0) ** (2 * (plan.M + 1)) <= 0.01
    assert plan.M == 0 or math.tanh(1.0) ** (2 * plan.M) > 0.01
    assert plan.method == "squeezed_closed_form"
    assert plan.bound <= plan.target_eps


def test_squeezed_planner_bound_monotone():
    values = [math.tanh(1.3) ** (2 * (m + 1)) for m in range(20)]
    assert all(b < a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("r", [1.5, 2.0, 2.5, 3.0])
@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_squeezed_planner_reference_dominates(r, eps):
    plan = est.cutoff_for_squeezed(r, eps)
    assert plan.reference_m >= plan.M


def test_chernoff_planner_example():
    plan = est.cutoff_for_coherent_chernoff(1.0, 0.1)
    assert plan.M == math.ceil(1.3 + math.log(10.0)) == 4
    assert plan.bound <= 0.1
    assert plan.method == "chernoff"


def test_chernoff_bound_decreasing_in_m():
    energy = 3.0
    values = [est._chernoff_log_bound(energy, m) for m in range(4, 30)]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_chernoff_candidate_never_increments():
    # spot grid here; the full claim is exercised in the acceptance suite
    for energy in (1, 7, 40, 100):
        for eps in (1e-1, 1e-3, 1e-6):
            plan = est.cutoff_for_coherent_chernoff(energy, eps)
            assert plan.M == math.ceil(1.3 * energy + math.log(1.0 / eps))
            assert plan.bound <= eps


def test_normal_planner_refuses_small_energy():
    with pytest.raises(ValueError):
        est.cutoff_for_coherent_normal(10.0, 0.01)


def test_normal_planner_bound():
    plan = est.cutoff_for_coherent_normal(100.0, 0.01)
    assert plan.method == "normal_quantile"
    assert 1.0 - est.normal_cdf((plan.M - 100.0) / 10.0) ** 2 <= 0.01
    assert plan.bound <= 0.01


def test_normal_planner_clamps_near_one():
    plan = est.cutoff_for_coherent_normal(25.0, 1.0 - 1e-12)
    assert plan.M >= 0


@pytest.mark.parametrize("eps", [1e-4, 1e-5, 1e-6])
def test_normal_planner_asymptotic_envelope(eps):
    for energy in (25.0, 100.0, 400.0):
        formula = energy + math.sqrt(energy) * est.normal_quantile(math.sqrt(1 - eps))
        envelope = energy + math.sqrt(math.pi * energy / 8.0) * math.log(2.0 / eps)
        assert formula <= envelope


def test_exact_tail_planner():
    plan = est.cutoff_for_coherent_exact(10.0, 1e-3)
    assert plan.method == "exact_tail"
    assert plan.bound <= 1e-3
    assert 1.0 - poisson.cdf(2 * plan.M, 20.0) <= 1e-3
    if plan.M > 0:
        assert 1.0 - poisson.cdf(2 * (plan.M - 1), 20.0) > 1e-3


def test_weak_tail_bound_is_weaker():
    # the dismissed bound 1 - e^{-E/M} dominates the exact Poisson tail of
    # the pair total for M > E, so planning with it would be wasteful
    for energy in (2.0, 5.0, 10.0):
        for m in range(int(energy) + 1, int(energy) + 12):
            weak = 1.0 - math.exp(-energy / m)
            exact = 1.0 - poisson.cdf(2 * m, 2 * energy)
            assert exact <= weak


# ---------------------------------------------------------------------------
# probit


def test_probit_against_scipy():
    grid = np.concatenate([
        np.linspace(1e-12, 1 - 1e-12, 4001),
        10.0 ** np.arange(-15.0, -1.0, 0.5),
        1.0 - 10.0 ** np.arange(-15.0, -1.0, 0.5),
    ])
    for p in grid:
        assert abs(est.normal_quantile(p) - norm.ppf(p)) < 1e-9


def test_probit_edges():
    assert est.normal_quantile(0.5) == 0.0
    assert math.isinf(est.normal_quantile(0.0))
    with pytest.raises(ValueError):
        est.normal_quantile(1.5)
