"""Stochastic cost machinery: noise refinement, exact moments, Monte Carlo.

The total cost of a noisy run is a quadratic form in the Gaussian vector
``[x0; W]`` where ``W`` stacks the fine-grained noise increments of every
sampling interval (``n_sub`` sub-steps per interval).  The deterministic
pieces of that form come from the exact discretization; the noise pieces
come from an Euler-Maruyama refinement of each interval with step
``dt = t_s / n_sub``.  Materializing the form gives exact mean/variance
(a generalized chi-square); a streaming variant produces the same moments
without ever holding the big matrix; Monte Carlo evaluates three
independent regroupings of the same sampled cost and cross-checks them.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceLimitError, ValidationError
from .expm_method import discretize_expm
from .linalg import symmetrize
from .model import ContinuousLqModel, DiscreteLqModel, require_valid
from .butcher import precompute
from .ode_method import weighted_conjugation
from .sampling import normal_block

__all__ = [
    "EmIntervalOps",
    "EmReformulation",
    "McSummary",
    "em_reformulate",
    "cost_moments",
    "cost_moments_streaming",
    "propagate_covariance",
    "expected_cost",
    "monte_carlo",
]

DEFAULT_DIM_CAP = 4096
_BLOCK = 2048          # Monte Carlo replicates per work unit (fixed)
STREAMS = ("continuous", "discrete", "em_form")


# ---------------------------------------------------------------------------
# within-interval noise refinement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmIntervalOps:
    """Euler-Maruyama refinement of one sampling interval.

    ``coarse_*`` map the interval: ``x_next = coarse_a x + coarse_b u +
    noise_map w`` with ``w`` the stacked sub-step increments (covariance
    ``dt I``).  ``cross``/``noise_quad``/``noise_lin`` are the noise
    blocks of the refined stage cost; ``quad_approx``/``lin_approx`` are
    the refinement's own (first-order) versions of the deterministic cost
    weights, used by the continuous-quadrature Monte Carlo stream.
    """

    n_sub: int
    dt: float
    coarse_a: np.ndarray
    coarse_b: np.ndarray
    noise_map: np.ndarray        # (n_x, n_sub * n_w)
    cross: np.ndarray            # (n_xu, n_sub * n_w)
    noise_quad: np.ndarray       # (n_sub * n_w, n_sub * n_w)
    noise_lin: np.ndarray        # (n_sub * n_w, n_z)
    quad_approx: np.ndarray      # (n_xu, n_xu)
    lin_approx: np.ndarray       # (n_xu, n_z)
    trace_integral: float        # integral of tr(weight * within-interval noise cov)

    @property
    def block_dim(self) -> int:
        return self.noise_map.shape[1]


def em_interval_ops(model: ContinuousLqModel, n_sub: int) -> EmIntervalOps:
    """Build the noise refinement maps for one sampling interval."""
    if n_sub < 1:
        raise ValidationError(f"n_sub must be >= 1, got {n_sub}")
    n_x, n_u, n_z, n_w = model.n_x, model.n_u, model.n_z, model.n_w
    dt = model.t_s / n_sub
    euler = np.eye(n_x) + dt * model.a_c

    # powers[i] = euler^i, held_input[i] = sum_{j<i} euler^j dt b_c
    powers = np.empty((n_sub + 1, n_x, n_x))
    held = np.empty((n_sub + 1, n_x, n_u))
    powers[0] = np.eye(n_x)
    held[0] = np.zeros((n_x, n_u))
    for i in range(n_sub):
        powers[i + 1] = euler @ powers[i]
        held[i + 1] = euler @ held[i] + dt * model.b_c

    # gam[i] = output-flow map at node i+1 (right-endpoint nodes)
    gam = np.empty((n_sub, n_z, n_x + n_u))
    gam[:, :, :n_x] = model.c_c @ powers[1:]
    gam[:, :, n_x:] = model.c_c @ held[1:] + model.d_c

    weighted_gam = model.q_c @ gam
    quad_approx = dt * np.einsum("izr,izc->rc", gam, weighted_gam)
    lin_approx = -dt * gam.sum(axis=0).T @ model.q_c

    noise_w = model.c_c.T @ model.q_c @ model.c_c      # weight on the noise state
    f = powers[:n_sub] @ model.g_c                      # f[i] = euler^i g_c
    wf = noise_w @ f

    m_blk = n_sub * n_w
    noise_quad = np.zeros((m_blk, m_blk))
    # (noise_quad)[p, q] = dt * sum_{t >= max(p, q)} f[t-p]' noise_w f[t-q]
    for lag in range(n_sub):
        terms = np.einsum("kxa,kxb->kab", f[lag:], wf[: n_sub - lag])
        partial = np.cumsum(terms, axis=0)
        for q in range(lag, n_sub):
            block = dt * partial[n_sub - 1 - q]
            p = q - lag
            noise_quad[p * n_w:(p + 1) * n_w, q * n_w:(q + 1) * n_w] = block
            if lag:
                noise_quad[q * n_w:(q + 1) * n_w, p * n_w:(p + 1) * n_w] = block.T
    noise_quad = symmetrize(noise_quad)

    # cross[:, q-block] = dt * sum_k gam[k+q]' q_c c_c f[k]
    cross = np.empty((n_x + n_u, m_blk))
    out_f = np.einsum("zx,kxw->kzw", model.q_c @ model.c_c, f)
    for q in range(n_sub):
        cross[:, q * n_w:(q + 1) * n_w] = dt * np.einsum(
            "kzr,kzw->rw", gam[q:], out_f[: n_sub - q]
        )

    # noise_lin[q-block] = -dt * (sum_{m <= n_sub-1-q} f[m])' c_c' q_c
    f_cum = np.cumsum(f, axis=0)
    noise_lin = np.empty((m_blk, n_z))
    back_weight = model.c_c.T @ model.q_c
    for q in range(n_sub):
        noise_lin[q * n_w:(q + 1) * n_w] = -dt * f_cum[n_sub - 1 - q].T @ back_weight

    # integral of tr(noise_w * cov of the within-interval noise state)
    per_node = np.einsum("kxw,xy,kyw->k", f, noise_w, f)
    trace_integral = dt * dt * float(
        ((n_sub - np.arange(n_sub)) * per_node).sum()
    )

    noise_map = f[::-1].transpose(1, 0, 2).reshape(n_x, m_blk)
    return EmIntervalOps(
        n_sub=n_sub,
        dt=dt,
        coarse_a=powers[n_sub],
        coarse_b=held[n_sub],
        noise_map=noise_map,
        cross=cross,
        noise_quad=noise_quad,
        noise_lin=noise_lin,
        quad_approx=symmetrize(quad_approx),
        lin_approx=lin_approx,
        trace_integral=trace_integral,
    )


# ---------------------------------------------------------------------------
# materialized quadratic form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmReformulation:
    """Total cost as a quadratic form in the Gaussian vector [x0; W].

    ``0.5 chi' q_big chi + q_vec' chi + rho`` with ``chi ~ N(m_bar,
    p_bar)`` and ``p_bar = blockdiag(x0_cov, dt * I)``.
    """

    n_sub: int
    dt: float
    q_big: np.ndarray
    q_vec: np.ndarray
    rho: float
    m_bar: np.ndarray
    x0_cov: np.ndarray
    ops: EmIntervalOps = field(repr=False)
    disc: DiscreteLqModel = field(repr=False)

    @property
    def dim(self) -> int:
        return self.q_big.shape[0]

    @property
    def n_x(self) -> int:
        return self.x0_cov.shape[0]

    @property
    def p_bar(self) -> np.ndarray:
        """Materialized covariance of [x0; W] (block diagonal)."""
        n_x = self.n_x
        out = np.zeros((self.dim, self.dim))
        out[:n_x, :n_x] = self.x0_cov
        idx = np.arange(n_x, self.dim)
        out[idx, idx] = self.dt
        return out


def em_reformulate(
    model: ContinuousLqModel,
    n_sub: int,
    dim_cap: int = DEFAULT_DIM_CAP,
    disc: DiscreteLqModel | None = None,
) -> EmReformulation:
    """Materialize the total-cost quadratic form at refinement ``n_sub``.

    The deterministic spine (transition, input map, cost weights) is the
    exact discretization; only the within-interval noise terms use the
    Euler-Maruyama refinement.  Requests whose total dimension
    ``n_x + horizon * n_sub * n_w`` exceeds ``dim_cap`` raise
    :class:`~lqdisc.errors.ResourceLimitError` — use
    :func:`cost_moments_streaming` for those.
    """
    require_valid(model)
    horizon = model.horizon
    n_x, n_u = model.n_x, model.n_u
    dim = n_x + horizon * n_sub * model.n_w
    if dim > dim_cap:
        raise ResourceLimitError(
            f"quadratic form dimension {dim} exceeds the cap {dim_cap}; "
            "use the streaming moments path"
        )
    if disc is None:
        disc = discretize_expm(model)
    ops = em_interval_ops(model, n_sub)
    m_blk = ops.block_dim

    q_big = np.zeros((dim, dim))
    q_vec = np.zeros(dim)
    rho = 0.0

    # chi-dependence of [x_k; u_k]: x columns + one noise block per past interval
    carrier = np.zeros((n_x + n_u, dim))
    carrier[:n_x, :n_x] = np.eye(n_x)
    shift = np.zeros(n_x + n_u)

    for k in range(horizon):
        blk = slice(n_x + k * m_blk, n_x + (k + 1) * m_blk)
        active = slice(0, n_x + k * m_blk)
        shift[n_x:] = model.inputs[k]
        l_act = carrier[:, active]

        q_big[active, active.start:active.stop] += l_act.T @ (disc.q @ l_act)
        q_big[active, blk] += l_act.T @ ops.cross
        q_big[blk, active] += ops.cross.T @ l_act
        q_big[blk, blk] += ops.noise_quad

        stage_lin = disc.q @ shift + disc.q_k[k]
        q_vec[active] += l_act.T @ stage_lin
        q_vec[blk] += ops.cross.T @ shift + ops.noise_lin @ model.targets[k]
        rho += (
            0.5 * float(shift @ disc.q @ shift)
            + float(disc.q_k[k] @ shift)
            + float(disc.rho_k[k])
        )

        # advance the dependence to step k+1
        carrier[:n_x] = disc.a @ carrier[:n_x]
        carrier[:n_x, blk] = ops.noise_map
        shift[:n_x] = disc.a @ shift[:n_x] + disc.b @ model.inputs[k]

    m_bar = np.zeros(dim)
    m_bar[:n_x] = model.x0_mean
    return EmReformulation(
        n_sub=n_sub,
        dt=ops.dt,
        q_big=symmetrize(q_big),
        q_vec=q_vec,
        rho=rho,
        m_bar=m_bar,
        x0_cov=np.asarray(model.x0_cov, dtype=float),
        ops=ops,
        disc=disc,
    )


def _apply_pbar(ref: EmReformulation, m: np.ndarray) -> np.ndarray:
    """p_bar @ m for a vector or matrix, using the block structure."""
    n_x = ref.n_x
    out = np.empty_like(m)
    out[:n_x] = ref.x0_cov @ m[:n_x]
    out[n_x:] = ref.dt * m[n_x:]
    return out


def cost_moments(ref: EmReformulation) -> tuple[float, float]:
    """Exact mean and variance of the quadratic-form cost.

    For ``phi = 0.5 chi' Q chi + q' chi + rho`` with Gaussian ``chi``:
    ``E = 0.5 m'Qm + q'm + rho + 0.5 tr(QP)`` and
    ``V = (Qm + q)' P (Qm + q) + 0.5 tr(QPQP)``.
    """
    n_x = ref.n_x
    q_big, q_vec, m_bar = ref.q_big, ref.q_vec, ref.m_bar
    qm = q_big[:, :n_x] @ m_bar[:n_x]
    trace_qp = float(
        np.einsum("ij,ji->", q_big[:n_x, :n_x], ref.x0_cov)
    ) + ref.dt * float(np.trace(q_big[n_x:, n_x:]))
    mean = (
        0.5 * float(m_bar[:n_x] @ qm[:n_x])
        + float(q_vec @ m_bar)
        + ref.rho
        + 0.5 * trace_qp
    )
    lin = qm + q_vec
    qp = np.hstack([q_big[:, :n_x] @ ref.x0_cov, ref.dt * q_big[:, n_x:]])
    var = float(lin @ _apply_pbar(ref, lin)) + 0.5 * float(
        np.einsum("ij,ji->", qp, qp)
    )
    return mean, var


# ---------------------------------------------------------------------------
# streaming moments
# ---------------------------------------------------------------------------

def cost_moments_streaming(
    model: ContinuousLqModel,
    n_sub: int,
    disc: DiscreteLqModel | None = None,
) -> tuple[float, float]:
    """Mean and variance of the same quadratic form, never materialized.

    Walks the horizon once, propagating the state mean/covariance and two
    cross-covariance accumulators that carry every past stage's influence
    on future stages.  Matches :func:`cost_moments` to rounding on
    instances small enough to materialize, with per-step memory only.
    """
    require_valid(model)
    if disc is None:
        disc = discretize_expm(model)
    ops = em_interval_ops(model, n_sub)
    n_x, n_u = model.n_x, model.n_u
    dt = ops.dt
    a, b = disc.a, disc.b
    quad, cross, noise_quad = disc.q, ops.cross, ops.noise_quad
    q_xx = quad[:n_x, :n_x]
    cross_x = cross[:n_x]

    trace_noise = dt * float(np.trace(noise_quad))
    trace_noise_sq = dt * dt * float(np.einsum("ij,ij->", noise_quad, noise_quad))

    mean = 0.0
    var = 0.0
    state_mean = np.asarray(model.x0_mean, dtype=float).copy()
    state_cov = np.asarray(model.x0_cov, dtype=float).copy()
    noise_cov_step = dt * (ops.noise_map @ ops.noise_map.T)
    hist_quad = np.zeros((n_x, n_x))     # transported sum of past R_j kernels
    hist_lin = np.zeros(n_x)             # transported sum of past gamma_j

    for k in range(model.horizon):
        mu = np.concatenate([state_mean, model.inputs[k]])
        b_xi = disc.q_k[k]
        b_w = ops.noise_lin @ model.targets[k]

        mean += (
            0.5 * float(mu @ quad @ mu)
            + float(b_xi @ mu)
            + float(disc.rho_k[k])
            + 0.5 * (float(np.einsum("ij,ji->", q_xx, state_cov)) + trace_noise)
        )

        g_xi = quad @ mu + b_xi
        g_w = cross.T @ mu + b_w

        t1 = quad[:, :n_x] @ state_cov          # (n_xu, n_x) slice of A Sigma
        own = (
            0.5 * (
                float(np.einsum("ij,ji->", t1[:n_x], t1[:n_x]))
                + 2.0 * dt * float(np.einsum("am,ab,bm->", cross_x, state_cov, cross_x))
                + trace_noise_sq
            )
            + float(g_xi[:n_x] @ state_cov @ g_xi[:n_x])
            + dt * float(g_w @ g_w)
        )

        # cross-covariance with every earlier stage, via the accumulators
        var += own + 2.0 * (
            0.5 * float(np.einsum("ij,ji->", q_xx, hist_quad))
            + float(g_xi[:n_x] @ hist_lin)
        )

        # fold this stage into the accumulators (covariance with x_{k+1})
        k_xi = state_cov @ a.T                   # x-rows of Cov(v_k, x_{k+1})
        k_w = dt * ops.noise_map.T
        mid = quad[:n_x, :n_x] @ k_xi + cross_x @ k_w
        kernel = (
            k_xi.T @ mid
            + k_w.T @ (cross_x.T @ k_xi + noise_quad @ k_w)
        )
        gamma = k_xi.T @ g_xi[:n_x] + k_w.T @ g_w
        hist_quad = a @ hist_quad @ a.T + kernel
        hist_lin = a @ hist_lin + gamma

        state_mean = a @ state_mean + b @ model.inputs[k]
        state_cov = symmetrize(a @ state_cov @ a.T + noise_cov_step)

    return mean, var


# ---------------------------------------------------------------------------
# covariance propagation and expected cost
# ---------------------------------------------------------------------------

def propagate_covariance(disc: DiscreteLqModel, p0, n_steps: int) -> np.ndarray:
    """State covariances P_0 .. P_n under the discrete noise recursion."""
    p0 = np.asarray(p0, dtype=float)
    n_x = disc.n_x
    if p0.shape != (n_x, n_x):
        raise ValidationError(f"p0 must have shape ({n_x}, {n_x}), got {p0.shape}")
    out = np.empty((n_steps + 1, n_x, n_x))
    out[0] = symmetrize(p0)
    for k in range(n_steps):
        out[k + 1] = symmetrize(disc.a @ out[k] @ disc.a.T + disc.r_ww)
    return out


def noise_rate_integral_ode(
    model: ContinuousLqModel, scheme: str = "classic_rk4", n_steps: int = 256
) -> float:
    """Integral of tr(noise_weight * noise covariance) over one interval.

    Quadrature rides the same per-step coefficients as the fixed-step
    discretizer: the scalar accumulator uses the scheme's own stage
    weights against the running covariance accumulator.
    """
    require_valid(model)
    coeffs = precompute(model, scheme, n_steps)
    tab = coeffs.scheme
    noise_w = model.c_c.T @ model.q_c @ model.c_c
    # per-stage trace kernels: sum_j (sum_i b_i a_ij) lam_j' W lam_j
    beta = tab.b @ tab.a
    stage_kernel = sum(
        beta[j] * (coeffs.lam_stages[j].T @ noise_w @ coeffs.lam_stages[j])
        for j in range(tab.stages)
    )
    h = coeffs.h
    trans = np.eye(model.n_x)
    cov = np.zeros((model.n_x, model.n_x))
    total = 0.0
    for _ in range(n_steps):
        inc = trans @ coeffs.r_bar @ trans.T
        total += h * float(np.einsum("ij,ji->", noise_w, cov))
        total += h * float(np.einsum("ij,ji->", stage_kernel, inc))
        cov = symmetrize(cov + weighted_conjugation(coeffs, inc))
        trans = coeffs.lam @ trans
    return total


def expected_cost(
    model: ContinuousLqModel,
    disc: DiscreteLqModel,
    p0=None,
    trace_route: str = "ode",
    quad_steps: int = 256,
    n_sub: int = 256,
) -> float:
    """Expected total cost: mean-path stage costs plus covariance traces.

    Each stage contributes its cost at the mean trajectory, a trace
    correction for the state covariance, and the within-interval noise
    trace integral (route ``"ode"``: scheme-weight quadrature; route
    ``"em"``: the Euler-Maruyama refinement sum).
    """
    require_valid(model)
    if p0 is None:
        p0 = model.x0_cov
    if trace_route == "ode":
        noise_trace = noise_rate_integral_ode(model, n_steps=quad_steps)
    elif trace_route == "em":
        noise_trace = em_interval_ops(model, n_sub).trace_integral
    else:
        raise ValidationError(f"unknown trace route {trace_route!r}")

    horizon = model.horizon
    n_x = model.n_x
    covs = propagate_covariance(disc, p0, horizon)
    q_xx = disc.q[:n_x, :n_x]
    total = 0.0
    x = np.asarray(model.x0_mean, dtype=float).copy()
    for k in range(horizon):
        total += disc.stage_cost(x, model.inputs[k], k)
        total += 0.5 * (
            float(np.einsum("ij,ji->", q_xx, covs[k])) + noise_trace
        )
        x = disc.a @ x + disc.b @ model.inputs[k]
    return total


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McSummary:
    """Monte Carlo summary for the three cost streams."""

    n_sims: int
    seed: int
    n_sub: int
    sample_mean: dict
    sample_var: dict
    analytic_mean: float
    analytic_var: float
    correlations: dict
    histogram: dict

    def to_dict(self) -> dict:
        return {
            "n_sims": self.n_sims,
            "seed": self.seed,
            "n_sub": self.n_sub,
            "sample_mean": dict(self.sample_mean),
            "sample_var": dict(self.sample_var),
            "analytic_mean": self.analytic_mean,
            "analytic_var": self.analytic_var,
            "correlations": dict(self.correlations),
            "histogram": {
                "edges": list(self.histogram["edges"]),
                "counts": {k: list(v) for k, v in self.histogram["counts"].items()},
            },
        }


def _symmetric_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(symmetrize(m))
    return vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def _simulate_block(args) -> dict:
    (model, disc, ref, seed, start, stop, edges) = args
    ops = ref.ops
    n_x = model.n_x
    n_w = model.g_c.shape[1]
    m_blk = ops.block_dim
    n_sub = ops.n_sub
    dt = ops.dt
    horizon = model.horizon
    reps = np.arange(start, stop)
    draws = normal_block(seed, reps, n_x + horizon * m_blk)
    x = model.x0_mean + draws[:, :n_x] @ _symmetric_sqrt(model.x0_cov).T
    noise = np.sqrt(dt) * draws[:, n_x:]

    chi = np.concatenate([x, noise], axis=1)
    em_vals = (
        0.5 * np.einsum("ri,ri->r", chi @ ref.q_big, chi)
        + chi @ ref.q_vec
        + ref.rho
    )

    # fine-grid propagators for the pathwise quadrature
    euler_t = (np.eye(n_x) + dt * model.a_c).T
    g_t = model.g_c.T
    c_t = model.c_c.T
    q_c = model.q_c

    cont_vals = np.zeros(len(reps))
    disc_vals = np.zeros(len(reps))
    for k in range(horizon):
        w_k = noise[:, k * m_blk:(k + 1) * m_blk]
        xu = np.concatenate(
            [x, np.broadcast_to(model.inputs[k], (len(reps), model.n_u))], axis=1
        )
        stage_det = (
            0.5 * np.einsum("ri,ri->r", xu @ disc.q, xu)
            + xu @ disc.q_k[k]
            + disc.rho_k[k]
        )
        noise_terms = (
            np.einsum("ri,ri->r", xu @ ops.cross, w_k)
            + w_k @ (ops.noise_lin @ model.targets[k])
            + 0.5 * np.einsum("ri,ri->r", w_k @ ops.noise_quad, w_k)
        )
        disc_vals += stage_det + noise_terms

        # pathwise route: Euler sub-stepping of the drift state and the
        # noise deviation; only deviation-dependent terms are integrated,
        # so a noise-free path reproduces the deterministic stage cost
        # exactly.
        drift = x.copy()
        dev = np.zeros_like(x)
        du = model.d_c @ model.inputs[k]
        acc = np.zeros(len(reps))
        increments = w_k.reshape(len(reps), n_sub, n_w)
        for i in range(n_sub):
            drift = drift @ euler_t + dt * (model.inputs[k] @ model.b_c.T)
            dev = dev @ euler_t + increments[:, i, :] @ g_t
            z_det = drift @ c_t + (du - model.targets[k])
            dz = dev @ c_t
            acc += 0.5 * np.einsum("ri,ri->r", dz @ q_c, dz)
            acc += np.einsum("ri,ri->r", z_det @ q_c, dz)
        cont_vals += stage_det + dt * acc

        x = x @ disc.a.T + model.inputs[k] @ disc.b.T + w_k @ ops.noise_map.T

    values = {"continuous": cont_vals, "discrete": disc_vals, "em_form": em_vals}
    partial = {"count": np.array(float(len(reps)))}
    for name, vals in values.items():
        clipped = np.clip(vals, edges[0], edges[-1])
        partial[f"sum_{name}"] = vals.sum()
        partial[f"sumsq_{name}"] = (vals * vals).sum()
        partial[f"hist_{name}"] = np.histogram(clipped, bins=edges)[0].astype(float)
    for a, bn in (("continuous", "discrete"), ("continuous", "em_form"),
                  ("discrete", "em_form")):
        partial[f"cross_{a}_{bn}"] = (values[a] * values[bn]).sum()
    return partial


def _tree_reduce(parts: list) -> dict:
    """Pairwise reduction with a topology fixed by the block count."""
    while len(parts) > 1:
        merged = []
        for i in range(0, len(parts) - 1, 2):
            merged.append({
                key: parts[i][key] + parts[i + 1][key] for key in parts[i]
            })
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


def monte_carlo(
    model: ContinuousLqModel,
    disc: DiscreteLqModel,
    ref: EmReformulation,
    n_sims: int,
    seed: int,
    workers: int | None = None,
    n_bins: int = 60,
) -> McSummary:
    """Simulate the three cost streams and summarize them.

    Streams: ``continuous`` (pathwise fine-grid quadrature along the
    sampled trajectory, with the drift-only part of each stage taken
    from the exact discrete stage cost), ``discrete`` (discrete stage
    costs plus assembled per-stage noise terms), ``em_form`` (the
    materialized quadratic form at the same sample).  All three evaluate
    the same random variable by different routes, so they agree up to
    rounding and collapse to the deterministic cost when the model is
    noise free.  Replicate ``r`` depends only on ``(seed, r)``; partial
    results are combined over fixed-size blocks by a fixed pairwise
    tree, so the summary is identical for any worker count.
    """
    require_valid(model)
    if n_sims < 1:
        raise ValidationError(f"n_sims must be >= 1, got {n_sims}")
    if workers is None:
        workers = int(os.environ.get("LQDISC_WORKERS", "1"))
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")

    analytic_mean, analytic_var = cost_moments(ref)
    spread = np.sqrt(max(analytic_var, 1e-12))
    edges = np.linspace(
        analytic_mean - 6.0 * spread, analytic_mean + 6.0 * spread, n_bins + 1
    )

    starts = list(range(0, n_sims, _BLOCK))
    jobs = [
        (model, disc, ref, seed, s, min(s + _BLOCK, n_sims), edges)
        for s in starts
    ]
    if workers == 1:
        parts = [_simulate_block(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_block, jobs))
    total = _tree_reduce(parts)

    n = float(n_sims)
    sample_mean = {s: float(total[f"sum_{s}"] / n) for s in STREAMS}
    if n_sims > 1:
        sample_var = {
            s: float((total[f"sumsq_{s}"] - n * sample_mean[s] ** 2) / (n - 1.0))
            for s in STREAMS
        }
    else:
        sample_var = {s: 0.0 for s in STREAMS}
    correlations = {}
    for a, bn in (("continuous", "discrete"), ("continuous", "em_form"),
                  ("discrete", "em_form")):
        if n_sims > 1:
            cov = (
                total[f"cross_{a}_{bn}"] - n * sample_mean[a] * sample_mean[bn]
            ) / (n - 1.0)
            denom = np.sqrt(sample_var[a] * sample_var[bn])
            corr = float(cov / denom) if denom > 0 else 0.0
            correlations[f"{a}|{bn}"] = min(1.0, max(-1.0, corr))
        else:
            correlations[f"{a}|{bn}"] = 0.0

    return McSummary(
        n_sims=n_sims,
        seed=seed,
        n_sub=ref.n_sub,
        sample_mean=sample_mean,
        sample_var=sample_var,
        analytic_mean=analytic_mean,
        analytic_var=analytic_var,
        correlations=correlations,
        histogram={
            "edges": [float(e) for e in edges],
            "counts": {
                s: [int(c) for c in total[f"hist_{s}"]] for s in STREAMS
            },
        },
    )
