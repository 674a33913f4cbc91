"""Closed-form certification of convergence behavior on quadratic families."""

import numpy as np
import pytest

from learn2mix.errors import InvalidSize, StepDiverged
from learn2mix.theory import (
    QuadraticInstance,
    check_corollary1,
    check_prop2_step,
    contraction_factor,
    corollary_sweep,
    prop2_sweep,
    random_instance,
    report_to_dict,
    run_prop1,
)


def canonical():
    return QuadraticInstance(
        curvatures=np.array([1.0, 2.0, 4.0]),
        offsets=np.array([0.2, 0.3, 0.5]),
        theta_star=np.zeros(5),
        alpha_tilde=np.full(3, 1.0 / 3.0),
    )


# ---------------------------------------------------------------------------
# instance properties


def test_instance_constants_and_formulas():
    inst = canonical()
    assert inst.k == 3 and inst.dim == 5
    assert inst.mu_star == 1.0 and inst.l_star == 4.0
    np.testing.assert_allclose(inst.alpha_star, [0.2, 0.3, 0.5])
    theta = np.full(5, 1.0)  # squared distance 5
    np.testing.assert_allclose(
        inst.class_losses(theta), inst.offsets + 0.5 * inst.curvatures * 5.0
    )
    alpha = np.array([0.5, 0.25, 0.25])
    mean_curv = 0.5 * 1 + 0.25 * 2 + 0.25 * 4
    np.testing.assert_allclose(inst.grad(theta, alpha), mean_curv * theta)


def test_instance_validation():
    with pytest.raises(InvalidSize):
        QuadraticInstance(np.array([1.0]), np.array([1.0, 2.0]), np.zeros(2),
                          np.array([1.0]))
    with pytest.raises(InvalidSize):
        QuadraticInstance(np.array([0.0, 1.0]), np.array([1.0, 1.0]), np.zeros(2),
                          np.array([0.5, 0.5]))
    with pytest.raises(InvalidSize):
        QuadraticInstance(np.array([1.0, 1.0]), np.array([1.0, 0.0]), np.zeros(2),
                          np.array([0.5, 0.5]))
    with pytest.raises(InvalidSize):
        QuadraticInstance(np.array([1.0, 1.0]), np.array([1.0, 1.0]), np.zeros(2),
                          np.array([0.6, 0.6]))
    with pytest.raises(InvalidSize):
        QuadraticInstance(np.array([1.0, np.inf]), np.array([1.0, 1.0]), np.zeros(2),
                          np.array([0.5, 0.5]))


def test_contraction_factor_canonical():
    assert contraction_factor(canonical(), 0.4) == pytest.approx(0.6)
    # eta = 2/(mu+L) balances both ends
    inst = canonical()
    eta_opt = 2.0 / (inst.mu_star + inst.l_star)
    assert contraction_factor(inst, eta_opt) == pytest.approx(
        (inst.l_star - inst.mu_star) / (inst.l_star + inst.mu_star)
    )


# ---------------------------------------------------------------------------
# coupled dynamics


def test_run_prop1_canonical_converges():
    report = run_prop1(canonical(), eta=0.4, gamma=0.1, steps=500)
    assert report.rho == pytest.approx(0.6)
    assert report.envelope_violations == 0
    assert report.alpha_contraction_violations == 0
    assert report.final_theta_distance < 1e-8
    assert report.final_alpha_distance < 1e-6


def test_run_prop1_respects_theta0():
    inst = canonical()
    report = run_prop1(inst, eta=0.4, gamma=0.1, steps=50,
                       theta0=inst.theta_star + 3.0)
    d0 = float(np.linalg.norm(np.full(5, 3.0)))
    assert report.final_theta_distance <= (0.6**50) * d0 * 1.001


def test_run_prop1_parameter_validation():
    inst = canonical()
    with pytest.raises(InvalidSize):
        run_prop1(inst, eta=0.0, gamma=0.1, steps=10)
    with pytest.raises(InvalidSize):
        run_prop1(inst, eta=0.5, gamma=0.1, steps=10)  # 2/L* = 0.5 excluded
    with pytest.raises(InvalidSize):
        run_prop1(inst, eta=0.4, gamma=0.0, steps=10)
    with pytest.raises(InvalidSize):
        run_prop1(inst, eta=0.4, gamma=1.0, steps=10)
    with pytest.raises(InvalidSize):
        run_prop1(inst, eta=0.4, gamma=0.1, steps=0)
    with pytest.raises(InvalidSize):
        run_prop1(inst, eta=0.4, gamma=0.1, steps=10, theta0=np.zeros(2))


def test_run_prop1_divergence_guard():
    with pytest.raises(StepDiverged):
        run_prop1(canonical(), eta=0.4, gamma=0.1, steps=5,
                  theta0=np.full(5, 1e13))


def test_isotropic_curvatures_contract_at_exact_rate():
    # equal curvatures: theta contracts by |1 - eta*c| exactly, whatever
    # alpha. theta_star = 0 keeps the arithmetic purely relative, so the
    # boundary-exact rate sits inside the envelope's relative tolerance.
    inst = QuadraticInstance(
        np.array([2.0, 2.0, 2.0]), np.array([0.1, 0.5, 1.0]), np.zeros(4),
        np.array([0.7, 0.2, 0.1]),
    )
    for gamma in (0.05, 0.5, 0.9):
        report = run_prop1(inst, eta=0.3, gamma=gamma, steps=40)
        d0 = float(np.linalg.norm(np.ones(4)))
        want = (abs(1 - 0.3 * 2.0) ** 40) * d0
        assert report.final_theta_distance == pytest.approx(want, rel=1e-9)
        assert report.envelope_violations == 0


def test_alpha_converges_to_normalized_offsets_any_gamma():
    inst = canonical()
    for gamma in (0.05, 0.3, 0.8):
        report = run_prop1(inst, eta=0.4, gamma=gamma, steps=800)
        assert report.final_alpha_distance < 1e-6


# ---------------------------------------------------------------------------
# gradient-norm sandwich


def test_check_corollary1_hand_case():
    inst = canonical()
    theta = inst.theta_star + np.array([3.0, 4.0, 0.0, 0.0, 0.0])  # distance 5
    alpha = np.array([1.0, 0.0, 0.0])  # mean curvature 1.0 -> grad norm 5
    lo, up, (ml, mu) = check_corollary1(inst, theta, alpha)
    assert lo and up
    assert ml == pytest.approx(5.0 - 0.5 * 1.0 * 5.0)
    assert mu == pytest.approx(4.0 * 5.0 - 5.0)


def test_corollary_sweep_no_violations():
    violations, (ml, mu) = corollary_sweep(2000, seed=0)
    assert violations == 0
    assert ml >= 0.0 and mu >= 0.0


# ---------------------------------------------------------------------------
# adaptive-vs-fixed step comparison


def test_check_prop2_gamma_zero_identical_steps():
    inst = canonical()
    theta = inst.theta_star + 2.0
    rec = check_prop2_step(inst, theta, eta=0.3, gamma=0.0,
                           prev_losses=inst.class_losses(theta))
    assert rec.distance_adaptive == rec.distance_fixed
    assert rec.adaptive_not_worse


def test_check_prop2_adaptive_helps_when_hard_class_is_steep():
    # offsets tied to curvatures (hardest class steepest): shifting mixing
    # weight toward high-loss classes raises the effective curvature toward
    # the well-conditioned end, so for eta <= 1/L* the adaptive step lands
    # at least as close
    rng = np.random.default_rng(0)
    for _ in range(50):
        inst = random_instance(rng, aligned=True)
        eta = float(rng.uniform(0.05, 0.99)) / inst.l_star
        theta_prev = inst.theta_star + rng.normal(size=inst.dim)
        prev_losses = inst.class_losses(theta_prev)
        theta = theta_prev - eta * inst.grad(theta_prev, inst.alpha_tilde)
        rec = check_prop2_step(inst, theta, eta, 0.2, prev_losses)
        assert rec.adaptive_not_worse


def test_prop2_sweep_aligned_holds_everywhere():
    summary = prop2_sweep(150, seed=3, gamma=0.1, aligned=True)
    assert summary["hold_fraction"] == 1.0
    assert summary["n_instances"] == 150
    assert len(summary["records"]) == 150


def test_prop2_sweep_general_reports_fraction():
    summary = prop2_sweep(150, seed=4, gamma=0.1, aligned=False)
    assert 0.0 <= summary["hold_fraction"] <= 1.0
    assert 0.0 <= summary["beta_computable_fraction"] <= 1.0


# ---------------------------------------------------------------------------
# serialization


def test_report_to_dict_fields():
    report = run_prop1(canonical(), eta=0.4, gamma=0.1, steps=20)
    d = report_to_dict(report)
    assert d["steps"] == 20 and d["rho"] == pytest.approx(0.6)
    assert d["envelope_violations"] == 0
    assert d["prop2_records"] == []
