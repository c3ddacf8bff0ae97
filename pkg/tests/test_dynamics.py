import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import certified, load, random_certified, random_spd
from oracles import explicit_product, same_span
from swistab import dynamics, matcore
from swistab.dynamics import Dichotomy
from swistab.errors import (
    HorizonZero,
    InconsistentWithDichotomy,
    InvalidCertificate,
    NotConverged,
    WrongDimension,
)
from swistab.lyapunov import SwitchedSystem, verify_weak_lyapunov
from swistab.matcore import DEFAULT_TOL
from swistab.signals import make_bernoulli, make_constant_run, make_markov, make_periodic

PSD = DEFAULT_TOL.psd_tol


def test_diagonal_powers():
    sys, cert = certified("diagonal")
    rec = dynamics.iterate(sys, cert, make_periodic((1,), K=2), 30, x0=[0.0, 1.0])
    np.testing.assert_allclose(rec.state_norms, 0.5 ** np.arange(1, 31), rtol=1e-14)
    np.testing.assert_allclose(rec.product_norms, 1.0)


def test_unit_product_pair_keeps_norm_one():
    sys, cert = certified("unit_product")
    rec = dynamics.iterate(sys, cert, make_periodic((1, 2)), 400)
    oracle = [np.linalg.norm(explicit_product(sys.matrices, [1, 2] * (i // 2) + [1] * (i % 2)), 2)
              for i in range(1, 401)]
    np.testing.assert_allclose(rec.product_norms, oracle, atol=1e-12)
    np.testing.assert_allclose(rec.product_norms, 1.0, atol=1e-8)
    np.testing.assert_allclose(rec.final_product, explicit_product(sys.matrices, [1, 2] * 200), atol=1e-12)


def test_random_signal_decays_on_stable_pair():
    sys, cert = certified("mixed_stable")
    rec = dynamics.iterate(sys, cert, make_bernoulli([0.5, 0.5], seed=1), 2000)
    assert rec.product_norms[-1] < 1e-6
    assert rec.max_increase() <= 10 * PSD


def test_long_runs_decay_on_golden_pair():
    sys, cert = certified("shear_pair")
    rec = dynamics.iterate(sys, cert, make_constant_run(1, seed=4), 3000)
    assert rec.product_norms[-1] < 1e-6


def test_iterate_errors():
    sys, cert = certified("unit_product")
    with pytest.raises(HorizonZero):
        dynamics.iterate(sys, cert, make_periodic((1, 2)), 0)
    bad = SwitchedSystem([2 * np.eye(2)])
    with pytest.raises(InvalidCertificate):
        dynamics.iterate(bad, verify_weak_lyapunov(bad), make_periodic((1,)), 5)


def test_step_diffs():
    sys, cert = certified("diagonal")
    rec = dynamics.iterate(sys, cert, make_periodic((1,), K=2), 5)
    # S_1^i - S_1^(i-1) = diag(0, 0.5^i - 0.5^(i-1))
    np.testing.assert_allclose(rec.step_diffs, 0.5 ** np.arange(1, 6), rtol=1e-14)


def test_omega_diagonal_limit():
    sys, cert = certified("three_letter")
    est = dynamics.omega_estimate(sys, cert, make_periodic((2,), K=3), 200)
    np.testing.assert_allclose(est.Q, np.diag([0.0, 0.0, 1.0]), atol=1e-9)
    assert same_span(est.stable.basis, np.eye(3)[:, :2])
    assert est.r_ext == pytest.approx(1.0, abs=1e-12)
    assert est.r_int == pytest.approx(0.0, abs=1e-9)
    assert est.m_converged


def test_omega_rotation_falls_back_to_gram():
    sys, cert = certified("three_letter")
    est = dynamics.omega_estimate(sys, cert, make_periodic((1,), K=3), 400)
    assert not est.m_converged and est.residual > 1
    np.testing.assert_allclose(est.Q, np.diag([0.0, 1.0, 1.0]), atol=1e-9)


def test_omega_is_zero_for_stable_pair():
    sys, cert = certified("mixed_stable")
    for sig in (make_bernoulli([0.5, 0.5], seed=3), make_periodic((1, 2)), make_constant_run(2, seed=1)):
        est = dynamics.omega_estimate(sys, cert, sig, 4000)
        np.testing.assert_allclose(est.Q, 0.0, atol=1e-9)
        assert est.stable.dim == 2


def test_omega_unit_product_pair():
    sys, cert = certified("unit_product")
    est = dynamics.omega_estimate(sys, cert, make_periodic((1, 2)), 2000)
    W = np.linalg.matrix_power(sys[2] @ sys[1], 500)
    assert est.r_ext == pytest.approx(np.linalg.norm(W, 2), abs=1e-9)
    assert est.r_ext == pytest.approx(1.0, abs=1e-9)


def test_omega_not_converged():
    sys, cert = certified("three_letter")
    with pytest.raises(NotConverged) as exc:
        dynamics.omega_estimate(sys, cert, make_periodic((1,), K=3), 12)
    assert exc.value.residual > 0


def test_split_stable_case():
    sys, cert = certified("mixed_stable")
    sp = dynamics.split2(sys, cert, make_periodic((1, 2)), 2000)
    assert sp.r_ext == pytest.approx(0.0, abs=1e-9) and sp.r_int == pytest.approx(0.0, abs=1e-9)
    assert sp.co_part.dim == sp.norm_part.dim == 2


def test_split_unit_product_pair():
    sys, cert = certified("unit_product")
    sp = dynamics.split2(sys, cert, make_periodic((1, 2)), 2000)
    assert sp.r_ext == pytest.approx(1.0, abs=1e-9) and sp.r_int < 1
    w, V = np.linalg.eigh(sys[2] @ sys[1])
    assert same_span(sp.norm_part.basis, V[:, [np.argmax(w)]])
    assert sp.tail_error < DEFAULT_TOL.conv_tol


def test_split_synthetic_limit():
    sp = dynamics.split_from_limit(np.eye(2), np.diag([1.0, 0.5]))
    assert (sp.r_ext, sp.r_int) == (1.0, 0.5)
    assert same_span(sp.norm_part.basis, np.array([[1.0], [0.0]]))
    assert same_span(sp.co_part.basis, np.array([[0.0], [1.0]]))


def test_split_needs_plane():
    sys, cert = certified("three_letter")
    with pytest.raises(WrongDimension):
        dynamics.split2(sys, cert, make_periodic((2,), K=3), 100)


def test_dichotomy_examples():
    sys, cert = certified("mixed_stable")
    rep = dynamics.dichotomy_check(sys, cert, (1,))
    assert rep.outcome is Dichotomy.EXPONENTIAL_DECAY
    assert rep.rate == pytest.approx(0.5, abs=1e-3)
    norms = [np.linalg.norm(np.linalg.matrix_power(sys[1], i), 2) for i in range(1, 60)]
    assert all(n <= rep.constant * rep.rate ** i * (1 + 1e-9) for i, n in enumerate(norms, 1))

    sys, cert = certified("unit_product")
    assert dynamics.dichotomy_check(sys, cert, (1, 2)).outcome is Dichotomy.NORM_ONE

    sys, cert = certified("diagonal")
    assert dynamics.dichotomy_check(sys, cert, (1, 2)).outcome is Dichotomy.EXPONENTIAL_DECAY


def test_dichotomy_inconsistent():
    sys = SwitchedSystem([(1 - 1e-10) * np.eye(2)])
    with pytest.raises(InconsistentWithDichotomy):
        dynamics.dichotomy_check(sys, verify_weak_lyapunov(sys), (1,))


def test_montecarlo_examples():
    sys, cert = certified("unit_product")
    rep = dynamics.monte_carlo_stability(sys, cert, make_bernoulli([0.5, 0.5]), 200, 5000, seed=11)
    assert rep.fraction == 1.0
    assert len(rep.trial_seeds) == 200 and len(set(rep.trial_seeds)) == 200
    assert dynamics.monte_carlo_stability(sys, cert, make_periodic((1, 2)), 10, 2000).fraction == 0.0

    sys, cert = certified("mixed_stable")
    for measure in (make_bernoulli([0.3, 0.7]), make_markov([[0.9, 0.1], [0.5, 0.5]], [1, 0]),
                    make_periodic((1, 2)), make_bernoulli([1.0, 0.0])):
        assert dynamics.monte_carlo_stability(sys, cert, measure, 50, 3000).fraction == 1.0


def test_montecarlo_deterministic(monkeypatch):
    sys, cert = certified("unit_product")
    measure = make_markov([[0.6, 0.4], [0.4, 0.6]], [0.5, 0.5])
    monkeypatch.setenv("SWISTAB_THREADS", "1")
    a = dynamics.monte_carlo_stability(sys, cert, measure, 300, 300, seed=5)
    monkeypatch.setenv("SWISTAB_THREADS", "8")
    b = dynamics.monte_carlo_stability(sys, cert, measure, 300, 300, seed=5)
    np.testing.assert_array_equal(a.final_norms, b.final_norms)
    np.testing.assert_array_equal(a.decay_steps, b.decay_steps)
    assert a.trial_seeds == b.trial_seeds
    c = dynamics.monte_carlo_stability(sys, cert, measure, 300, 300, seed=6)
    assert not np.array_equal(a.final_norms, c.final_norms)


def test_montecarlo_errors():
    sys, cert = certified("unit_product")
    with pytest.raises(HorizonZero):
        dynamics.monte_carlo_stability(sys, cert, make_bernoulli([0.5, 0.5]), 0, 10)
    with pytest.raises(WrongDimension):
        dynamics.monte_carlo_stability(sys, cert, make_bernoulli([0.2, 0.3, 0.5]), 5, 10)


# -- properties ---------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]), st.sampled_from([2, 3]))
def test_norms_non_increasing(seed, d, K):
    rng = np.random.default_rng(seed)
    P = random_spd(rng, d, cond=20)
    sys = random_certified(rng, d, K, P)
    cert = verify_weak_lyapunov(sys, P)
    sig = make_bernoulli(np.full(K, 1.0 / K), seed=seed)
    rec = dynamics.iterate(sys, cert, sig, 200)
    assert rec.max_increase() <= 10 * PSD
    assert np.all(rec.product_norms >= 0)


@pytest.mark.parametrize("name, word", [("unit_product", (1, 2)), ("shear_pair", (1, 2)), ("three_letter", (2,)), ("diagonal", (1,))])
def test_sphere_property(name, word):
    sys, cert = certified(name)
    rec = dynamics.iterate(sys, cert, make_periodic(word, K=sys.K), 8000)
    # probes at two far-apart multiples of the period
    assert abs(rec.product_norms[3999] - rec.product_norms[7999]) < DEFAULT_TOL.conv_tol


@pytest.mark.parametrize("name, sig", [
    ("unit_product", make_periodic((1, 2))),
    ("three_letter", make_periodic((2,), K=3)),
    ("three_letter", make_periodic((1,), K=3)),
    ("diagonal", make_periodic((1,), K=2)),
    ("mixed_stable", make_bernoulli([0.5, 0.5], seed=2)),
])
def test_q_consistency(name, sig):
    sys, cert = certified(name)
    n = 2000
    est = dynamics.omega_estimate(sys, cert, sig, n)
    rng = np.random.default_rng(0)
    for x0 in rng.standard_normal((100, sys.d)):
        tail = dynamics.iterate(sys, cert, sig, est.probes[-1], x0=x0).state_norms[-1]
        assert abs(tail - np.linalg.norm(est.Q @ x0)) < 1e-6


@pytest.mark.parametrize("name, sig", [
    ("three_letter", make_periodic((2,), K=3)),
    ("unit_product", make_periodic((1, 2))),
    ("diagonal", make_periodic((2,), K=2)),
])
def test_stable_subspace_decays(name, sig):
    sys, cert = certified(name)
    est = dynamics.omega_estimate(sys, cert, sig, 2000)
    for x in est.stable.basis.T:
        assert dynamics.iterate(sys, cert, sig, 2000, x0=x).state_norms[-1] < 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_subsequence_principle(seed):
    sys, cert = certified("unit_product")
    rec = dynamics.iterate(sys, cert, make_bernoulli([0.5, 0.5], seed=seed), 600)
    thresh = 1e-6
    probes = rec.product_norms[[9, 49, 99, 299]]
    if np.any(probes < thresh):
        assert rec.product_norms[-1] < thresh * (1 + 10 * PSD)


def test_gram_limit_matches_direct_square_root():
    sys, cert = certified("unit_product")
    est = dynamics.omega_estimate(sys, cert, make_periodic((1, 2)), 2000)
    M = est.M
    assert np.linalg.norm(est.Q @ est.Q - M.T @ M) < 1e-9
    assert matcore.p_opnorm(np.eye(2), M) == pytest.approx(est.r_ext, abs=1e-9)
