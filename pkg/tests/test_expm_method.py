import numpy as np

from lqdisc import (
    ContinuousLqModel,
    build_expm_blocks,
    discretize_expm,
    discretize_ode,
)
from lqdisc.linalg import expm, is_psd
from tests.conftest import random_stable_model


def test_scalar_integrator_closed_form(scalar_integrator):
    disc = discretize_expm(scalar_integrator)
    assert abs(disc.a[0, 0] - 1.0) < 1e-14
    assert abs(disc.b[0, 0] - 1.0) < 1e-14
    assert np.max(np.abs(disc.q - [[1.0, 0.5], [0.5, 1.0 / 3.0]])) < 1e-13
    assert np.max(np.abs(disc.m - [[-1.0], [-0.5]])) < 1e-13


def test_zero_diffusion_gives_zero_covariance(scalar_integrator):
    disc = discretize_expm(scalar_integrator)
    assert np.array_equal(disc.r_ww, np.zeros((1, 1)))


def test_benchmark_transition(benchmark_model):
    disc = discretize_expm(benchmark_model)
    want = np.array([[-0.73575876, 0.5518191], [-1.4715176, 1.10363824]])
    assert np.max(np.abs(disc.a - want)) < 5e-8


def test_block_structure(benchmark_model):
    blocks = build_expm_blocks(benchmark_model)
    # the second exponential has exact identity in its leading block
    assert np.max(np.abs(blocks.phi2_11 - np.eye(4))) < 1e-12
    # raw (pre-symmetrization) weight is already nearly symmetric; the
    # stiff drift (norm ~80) amplifies rounding, hence the 1e-8 margin
    q_raw = blocks.phi1_22.T @ blocks.phi1_12
    denom = np.max(np.abs(q_raw))
    assert np.max(np.abs(q_raw - q_raw.T)) <= 1e-8 * denom


def test_agreement_with_ode_method():
    rng = np.random.default_rng(77)
    for _ in range(20):
        model = random_stable_model(
            rng, n_x=int(rng.integers(1, 6)), n_u=int(rng.integers(1, 3)))
        a = discretize_expm(model)
        b = discretize_ode(model, scheme="classic_rk4", n_steps=256)
        for field in ("a", "b", "q", "m", "r_ww"):
            scale = max(1.0, np.max(np.abs(getattr(a, field))))
            diff = np.max(np.abs(getattr(a, field) - getattr(b, field)))
            assert diff < 1e-9 * scale, (field, diff)


def test_noise_covariance_against_quadrature():
    rng = np.random.default_rng(78)
    for _ in range(5):
        model = random_stable_model(rng, n_x=3, n_u=1)
        disc = discretize_expm(model)
        # independent reference: trapezoidal quadrature of the propagated
        # diffusion outer product on a fine grid
        n = 2 ** 14
        dt = model.t_s / n
        gg = model.g_c @ model.g_c.T
        vals = np.empty((n + 1, 3, 3))
        step = expm(model.a_c * dt)
        cur = np.eye(3)
        for i in range(n + 1):
            vals[i] = cur @ gg @ cur.T
            cur = step @ cur
        ref = dt * (vals.sum(axis=0) - 0.5 * (vals[0] + vals[-1]))
        assert np.max(np.abs(disc.r_ww - ref)) <= 1e-8 * max(1.0, np.max(np.abs(ref)))


def test_weights_psd(benchmark_model):
    disc = discretize_expm(benchmark_model)
    assert is_psd(disc.q)
    assert is_psd(disc.r_ww)
    assert np.array_equal(disc.q, disc.q.T)
    assert np.array_equal(disc.r_ww, disc.r_ww.T)


def test_pure_noise_scalar():
    model = ContinuousLqModel(
        a_c=[[0.0]], b_c=[[0.0]], g_c=[[1.0]], c_c=[[1.0]], d_c=[[0.0]],
        q_c=[[1.0]], t_s=1.0, inputs=[[0.0]], targets=[[0.0]],
        x0_mean=[0.0], x0_cov=[[0.0]],
    )
    disc = discretize_expm(model)
    assert abs(disc.r_ww[0, 0] - 1.0) < 1e-14
