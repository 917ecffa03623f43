"""Fixed-step discretization by Runge-Kutta matrix recursions.

One precomputation per (model, scheme, step count), then ``n_steps``
cheap matrix updates advance the transition, input, cost, and noise
accumulators across a single sampling interval simultaneously.
"""

from __future__ import annotations

import numpy as np

from .butcher import PrecomputedCoefficients, precompute
from .errors import DivergenceError
from .linalg import symmetrize
from .model import ContinuousLqModel, DiscreteLqModel, require_valid

__all__ = ["discretize_ode"]


def weighted_conjugation(coeffs: PrecomputedCoefficients, m: np.ndarray) -> np.ndarray:
    """Sum of b[i] * lam_stages[i] @ m @ lam_stages[i].T over stages.

    Shared by the fixed-step and step-doubling methods so that their
    noise-covariance results agree bitwise in the degenerate single-step
    case.
    """
    b = coeffs.scheme.b
    out = np.zeros_like(m)
    for i, lam_i in enumerate(coeffs.lam_stages):
        out += b[i] * (lam_i @ m @ lam_i.T)
    return out


def _affine_cost_sequences(model: ContinuousLqModel, m: np.ndarray):
    """Per-step affine cost terms: q_k = m @ target_k, rho_k = rate * t_s."""
    q_seq = model.targets @ m.T
    rho_seq = 0.5 * np.einsum(
        "kz,zy,ky->k", model.targets, model.q_c, model.targets
    ) * model.t_s
    return q_seq, rho_seq


def discretize_ode(
    model: ContinuousLqModel, scheme: str = "classic_rk4", n_steps: int = 256
) -> DiscreteLqModel:
    """Discretize one sampling interval with a fixed-step scheme.

    Parameters
    ----------
    model : ContinuousLqModel
    scheme : str
        One of the names in :data:`lqdisc.butcher.SCHEMES`.
    n_steps : int
        Number of equal sub-steps across the sampling interval.

    Raises
    ------
    DivergenceError
        If an accumulator stops being finite; the message names the step.
    """
    require_valid(model)
    coeffs = precompute(model, scheme, n_steps)
    n_x, n_u = model.n_x, model.n_u

    trans = np.eye(n_x)                       # state transition so far
    inp = np.zeros((n_x, n_u))                # accumulated input map
    ext = np.eye(n_x + n_u)                   # extended-state transition
    quad = np.zeros((n_x + n_u, n_x + n_u))   # quadratic cost accumulator
    lin = np.zeros((n_x + n_u, model.n_z))    # affine cost accumulator
    cov = np.zeros((n_x, n_x))                # noise covariance accumulator

    # overflow to inf is the divergence signal checked below, not an error
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            quad = symmetrize(quad + ext.T @ coeffs.q_bar @ ext)
            lin = lin + ext.T @ coeffs.m_bar
            cov = symmetrize(
                cov + weighted_conjugation(coeffs, trans @ coeffs.r_bar @ trans.T)
            )
            inp = inp + coeffs.theta @ (trans @ coeffs.b_bar)
            trans = coeffs.lam @ trans
            ext = coeffs.omega @ ext
            if not (np.isfinite(trans).all() and np.isfinite(quad).all()):
                raise DivergenceError(
                    f"scheme {scheme!r} diverged at step {k + 1} of {n_steps} "
                    f"(step size {coeffs.h:.6g})"
                )

    q_seq, rho_seq = _affine_cost_sequences(model, lin)
    return DiscreteLqModel(
        a=trans,
        b=inp,
        c=model.c_c,
        d=model.d_c,
        q=quad,
        m=lin,
        r_ww=cov,
        t_s=model.t_s,
        q_k=q_seq,
        rho_k=rho_seq,
    )
