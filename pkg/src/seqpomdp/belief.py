"""Posterior family indexed by gamma, no-purchase probabilities and Bayes updates.

After rejections of products ``a_1..a_t`` the posterior over profiles is
``g(x, gamma) ∝ phi0(x) * prod_l f_l(x) ** gamma_l`` with
``gamma = sum_r zeta[a_r]``.  Everything here is exact summation over ``S``.

The ``*_batch`` helpers take an ``(N, K)`` array of gamma vectors and are what
the dynamic-programming modules use internally.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .errors import SeqPomdpError
from .model import Model

FD_STEP = 1e-4
FD_TOL = 1e-6
_CHUNK = 1 << 15


def _as_gammas(model: Model, gammas) -> np.ndarray:
    g = np.asarray(gammas, dtype=float)
    if g.ndim == 1:
        g = g[None, :]
    if g.shape[-1] != model.n_basis:
        raise ValueError(f"gamma must have {model.n_basis} components, got {g.shape[-1]}")
    return g


def posterior_batch(model: Model, gammas) -> np.ndarray:
    """Posterior vectors, shape ``(N, |S|)``, computed with a max-shift in log space."""
    g = _as_gammas(model, gammas)
    logw = model.log_prior + g @ model.log_basis
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    w /= w.sum(axis=1, keepdims=True)
    return w


def h_batch(model: Model, gammas) -> np.ndarray:
    """No-purchase probabilities ``H_u(gamma)`` for every product, shape ``(N, |U|)``."""
    g = _as_gammas(model, gammas)
    if g.shape[0] <= _CHUNK:
        return posterior_batch(model, g) @ model.q.T
    out = np.empty((g.shape[0], model.n_products))
    for start in range(0, g.shape[0], _CHUNK):
        stop = start + _CHUNK
        out[start:stop] = posterior_batch(model, g[start:stop]) @ model.q.T
    return out


def posterior_from_gamma(model: Model, gamma) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("gamma components must be nonnegative")
    return posterior_batch(model, gamma)[0]


def bayes_update(model: Model, phi, u) -> np.ndarray:
    """Posterior after product ``u`` was shown and not purchased."""
    u = model.product_index(u)
    w = model.q[u] * np.asarray(phi, dtype=float)
    total = w.sum()
    if not total > 0:
        raise SeqPomdpError(f"Bayes update for product {u} has zero normalizer")
    return w / total


def h_from_belief(model: Model, phi, u) -> float:
    u = model.product_index(u)
    return float(np.dot(model.q[u], phi))


def h_gamma(model: Model, gamma, u) -> float:
    u = model.product_index(u)
    return float(h_batch(model, gamma)[0, u])


class Gradient(NamedTuple):
    grad: np.ndarray
    l1: float


def grad_h(model: Model, gamma, u) -> Gradient:
    """Gradient of ``H_u`` at ``gamma`` as posterior covariances.

    Component ``i`` is ``Cov(q_u(X), ln f_i(X))`` under ``g(., gamma)``.  The
    1-norm is returned alongside; it never exceeds ``compute_M(model)``.
    """
    u = model.product_index(u)
    post = posterior_batch(model, gamma)[0]
    qu = model.q[u]
    lf = model.log_basis
    e_q = post @ qu
    e_lf = lf @ post
    e_qlf = lf @ (post * qu)
    grad = e_qlf - e_q * e_lf
    return Gradient(grad, float(np.abs(grad).sum()))


def grad_h_fd(model: Model, gamma, u, step: float = FD_STEP) -> np.ndarray:
    """Central finite differences of :func:`h_gamma`; independent check of :func:`grad_h`."""
    u = model.product_index(u)
    gamma = np.asarray(gamma, dtype=float)
    k = gamma.size
    pts = np.concatenate([gamma + step * np.eye(k), gamma - step * np.eye(k)])
    h = h_batch(model, pts)[:, u]
    return (h[:k] - h[k:]) / (2 * step)


def gamma_from_history(model: Model, rejected: Sequence) -> np.ndarray:
    """Accumulated exponent vector after the given rejections."""
    gamma = np.zeros(model.n_basis)
    for u in rejected:
        gamma += model.zeta[model.product_index(u)]
    return gamma
