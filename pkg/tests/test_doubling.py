import numpy as np
import pytest

from lqdisc import (
    ContinuousLqModel,
    DivergenceError,
    DoublingState,
    SCHEMES,
    ValidationError,
    discretize_ode,
    discretize_step_doubling,
    precompute,
)
from lqdisc.linalg import is_psd
from tests.conftest import make_benchmark_model, random_stable_model

FIELDS = ("a", "b", "q", "m", "r_ww")


def test_geometric_series_pattern():
    # contrived scalar drift: one explicit-Euler sub-step doubles the state
    model = ContinuousLqModel(
        a_c=[[8.0]], b_c=[[1.0]], g_c=[[0.0]], c_c=[[1.0]], d_c=[[0.0]],
        q_c=[[1.0]], t_s=1.0, inputs=[[0.0]], targets=[[0.0]],
        x0_mean=[0.0], x0_cov=[[0.0]],
    )
    coeffs = precompute(model, "explicit_euler", 8)
    assert coeffs.lam[0, 0] == 2.0
    state = DoublingState.initial(coeffs)
    for _ in range(3):
        state.advance()
    assert state.i == 3
    assert state.trans_pow[0, 0] == 256.0          # 2^8
    assert state.input_sum[0, 0] == 255.0          # 1 + 2 + ... + 2^7


def test_zero_doublings_bit_identical_to_single_step(benchmark_model):
    for name in sorted(SCHEMES):
        one = discretize_ode(benchmark_model, scheme=name, n_steps=1)
        sqr = discretize_step_doubling(benchmark_model, scheme=name, doublings=0)
        for field in FIELDS:
            assert np.array_equal(getattr(one, field), getattr(sqr, field)), (
                name, field)


@pytest.mark.parametrize("name", sorted(SCHEMES))
def test_matches_ode_method_across_doublings(name, benchmark_model):
    for j in range(0, 7):
        ode = discretize_ode(benchmark_model, scheme=name, n_steps=2 ** j)
        sqr = discretize_step_doubling(benchmark_model, scheme=name, doublings=j)
        for field in FIELDS:
            ref = getattr(ode, field)
            scale = max(1.0, np.max(np.abs(ref)))
            diff = np.max(np.abs(getattr(sqr, field) - ref))
            assert diff <= 1e-11 * scale, (name, j, field, diff)


def test_matches_ode_method_on_random_models():
    rng = np.random.default_rng(99)
    for _ in range(5):
        model = random_stable_model(rng, n_x=int(rng.integers(1, 5)), n_u=2)
        for j in (0, 3, 6):
            ode = discretize_ode(model, scheme="esdirk34", n_steps=2 ** j)
            sqr = discretize_step_doubling(model, scheme="esdirk34", doublings=j)
            for field in FIELDS:
                scale = max(1.0, np.max(np.abs(getattr(ode, field))))
                assert np.max(np.abs(getattr(sqr, field) - getattr(ode, field))) \
                    <= 1e-11 * scale


def test_iteration_count_is_exactly_j(benchmark_model):
    coeffs = precompute(benchmark_model, "classic_rk4", 2 ** 5)
    state = DoublingState.initial(coeffs)
    for _ in range(5):
        state.advance()
    assert state.i == 5


def test_accumulators_match_direct_power_sums(benchmark_model):
    # after j doublings the sum accumulators equal explicit geometric sums
    coeffs = precompute(benchmark_model, "implicit_trapezoidal", 2 ** 4)
    state = DoublingState.initial(coeffs)
    for _ in range(4):
        state.advance()
    n = 2 ** 4
    n_xu = coeffs.omega.shape[0]

    lin_direct = np.zeros((n_xu, n_xu))
    omega_pow = np.eye(n_xu)
    for _ in range(n):
        lin_direct += omega_pow.T
        omega_pow = omega_pow @ coeffs.omega
    assert np.max(np.abs(state.lin_sum - lin_direct)) < 1e-11

    quad_direct = np.zeros((n_xu, n_xu))
    omega_pow = np.eye(n_xu)
    for _ in range(n):
        quad_direct += omega_pow.T @ coeffs.q_bar @ omega_pow
        omega_pow = omega_pow @ coeffs.omega
    assert np.max(np.abs(state.quad_sum - quad_direct)) < 1e-11

    cov_direct = np.zeros((2, 2))
    lam_pow = np.eye(2)
    for _ in range(n):
        cov_direct += lam_pow @ coeffs.r_bar @ lam_pow.T
        lam_pow = coeffs.lam @ lam_pow
    assert np.max(np.abs(state.cov_sum - cov_direct)) < 1e-13


def test_psd_throughout(benchmark_model):
    coeffs = precompute(benchmark_model, "classic_rk4", 2 ** 6)
    state = DoublingState.initial(coeffs)
    for _ in range(6):
        state.advance()
        assert is_psd(state.quad_sum)
        assert is_psd(state.cov_sum)
        assert np.array_equal(state.quad_sum, state.quad_sum.T)


def test_divergence_is_clean():
    model = ContinuousLqModel(
        a_c=[[-64000.0]], b_c=[[1.0]], g_c=[[1.0]], c_c=[[1.0]], d_c=[[0.0]],
        q_c=[[1.0]], t_s=1.0, inputs=[[0.0]], targets=[[0.0]],
        x0_mean=[0.0], x0_cov=[[0.0]],
    )
    with pytest.raises(DivergenceError):
        discretize_step_doubling(model, scheme="explicit_euler", doublings=6)


def test_negative_doublings_rejected(benchmark_model):
    with pytest.raises(ValidationError):
        discretize_step_doubling(benchmark_model, doublings=-1)
