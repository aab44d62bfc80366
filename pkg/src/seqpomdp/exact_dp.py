"""Exact finite-horizon oracles.

Two independent routes to the optimal t-period value:

* :func:`exact_value` runs the backward recursion
  ``J_t(g) = max_u R_u (1 - H_u(g)) + beta H_u(g) J_{t-1}(g + zeta_u)``
  over the exactly reachable gamma states, keyed by integer rejection counts.
* :func:`enumerate_sequences` scores every product sequence of length ``t``
  with the closed-form expected discounted reward and takes the best one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .belief import h_batch
from .errors import GuardExceeded
from .model import Model

HORIZON_CAP = 64
STATE_CAP = 1_000_000
ENUM_CAP = 10**7
_ENUM_BLOCK = 1 << 16
_BATCH_ELEMS = 1 << 21


def product_classes(model: Model) -> tuple[np.ndarray, np.ndarray]:
    """Distinct exponent rows and the class index of every product.

    Products with bit-identical rows of ``zeta`` share a class, so their
    rejection counts can be merged without any floating-point keying.
    """
    rows: list[tuple[float, ...]] = []
    class_of = []
    for row in model.zeta:
        key = tuple(row.tolist())
        if key not in rows:
            rows.append(key)
        class_of.append(rows.index(key))
    return np.array(rows, dtype=float).reshape(len(rows), model.n_basis), np.array(class_of)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def rejection_state_count(t: int, m: int) -> int:
    """Number of rejection-count vectors over ``m`` products after ``t`` rejections."""
    if t < 0 or m < 1:
        raise ValueError("need t >= 0 and m >= 1")
    return math.comb(t + m - 1, m - 1)


def reachable_state_count(model: Model, t: int) -> int:
    """Distinct exact gamma keys visited by a horizon-``t`` recursion."""
    n_classes = product_classes(model)[0].shape[0]
    return math.comb(t + n_classes, n_classes)


@dataclass
class ExactValueCache:
    """Memo of ``J_s`` at ``base + counts @ class_zeta`` for every reached key.

    Keys are ``(s, counts)`` where ``counts`` are per-class rejection counts
    with ``sum(counts) == horizon - s``.
    """

    base: np.ndarray
    horizon: int
    class_zeta: np.ndarray
    class_of: np.ndarray
    values: dict = field(default_factory=dict)
    actions: dict = field(default_factory=dict)

    def gamma(self, counts) -> np.ndarray:
        return self.base + np.asarray(counts, dtype=float) @ self.class_zeta


def _check_guard(model: Model, t: int, horizon_cap: int, state_cap: int) -> None:
    if t < 0:
        raise ValueError(f"horizon must be >= 0, got {t}")
    n_states = reachable_state_count(model, t)
    if t > horizon_cap and n_states > state_cap:
        raise GuardExceeded(
            f"horizon {t} > cap {horizon_cap} with {n_states} reachable gamma states > {state_cap}"
        )


def _recursion(model: Model, gammas: np.ndarray, t: int, cache: ExactValueCache | None = None):
    zc, class_of = product_classes(model)
    n_classes = zc.shape[0]
    n_pts = gammas.shape[0]
    levels = [list(_compositions(d, n_classes)) for d in range(t + 1)]
    bump = np.eye(n_classes, dtype=int)[class_of]

    prev = np.zeros((len(levels[t]), n_pts))
    if cache is not None:
        for c in levels[t]:
            cache.values[(0, c)] = 0.0
    acts = np.zeros(n_pts, dtype=int)
    for s in range(1, t + 1):
        d = t - s
        lvl = levels[d]
        nxt_index = {c: i for i, c in enumerate(levels[d + 1])}
        counts = np.array(lvl, dtype=int)
        pts = gammas[None, :, :] + (counts @ zc)[:, None, :]
        H = h_batch(model, pts.reshape(-1, model.n_basis)).reshape(len(lvl), n_pts, -1)
        nxt = np.array([[nxt_index[tuple(c + b)] for b in bump] for c in counts])
        cont = np.moveaxis(prev[nxt], 1, 2)
        Q = model.rewards * (1.0 - H) + model.beta * H * cont
        vals = Q.max(axis=-1)
        acts_lvl = Q.argmax(axis=-1)
        if cache is not None:
            for i, c in enumerate(lvl):
                cache.values[(s, c)] = float(vals[i, 0])
                cache.actions[(s, c)] = int(acts_lvl[i, 0])
        prev = vals
        acts = acts_lvl[0]
    return prev[0], acts


def exact_values(
    model: Model,
    gammas,
    t: int,
    *,
    horizon_cap: int = HORIZON_CAP,
    state_cap: int = STATE_CAP,
) -> tuple[np.ndarray, np.ndarray]:
    """``J_t`` and its optimizing product at each row of an ``(N, K)`` gamma array.

    At ``t == 0`` the returned products are all 0 (no decision is made).
    """
    g = np.atleast_2d(np.asarray(gammas, dtype=float))
    _check_guard(model, t, horizon_cap, state_cap)
    if t == 0:
        return np.zeros(g.shape[0]), np.zeros(g.shape[0], dtype=int)
    widest = max(rejection_state_count(d, product_classes(model)[0].shape[0]) for d in range(t + 1))
    step = max(1, _BATCH_ELEMS // (widest * model.n_products))
    values = np.empty(g.shape[0])
    actions = np.empty(g.shape[0], dtype=int)
    for start in range(0, g.shape[0], step):
        sl = slice(start, start + step)
        values[sl], actions[sl] = _recursion(model, g[sl], t)
    return values, actions


def exact_value(model: Model, gamma, t: int, **guards) -> tuple[float, int | None]:
    """Optimal ``t``-period value from ``gamma`` and the first product to offer.

    The product is ``None`` when ``t == 0``.  Ties go to the smallest index.
    """
    values, actions = exact_values(model, np.asarray(gamma, dtype=float)[None, :], t, **guards)
    return float(values[0]), (int(actions[0]) if t > 0 else None)


def exact_value_table(
    model: Model,
    gamma,
    t: int,
    *,
    horizon_cap: int = HORIZON_CAP,
    state_cap: int = STATE_CAP,
) -> ExactValueCache:
    """Run the recursion from a single ``gamma`` and keep every memo entry."""
    base = np.asarray(gamma, dtype=float)
    _check_guard(model, t, horizon_cap, state_cap)
    zc, class_of = product_classes(model)
    cache = ExactValueCache(base=base, horizon=t, class_zeta=zc, class_of=class_of)
    if t == 0:
        cache.values[(0, (0,) * zc.shape[0])] = 0.0
        return cache
    _recursion(model, base[None, :], t, cache)
    return cache


def enumerate_sequences(
    model: Model, t: int, *, enum_cap: int = ENUM_CAP
) -> tuple[float, tuple[int, ...]]:
    """Brute-force the best length-``t`` product sequence starting from the prior.

    Each sequence ``a_1..a_t`` is scored as
    ``sum_r beta**(r-1) R_{a_r} (prod_{j<r} H_{a_j}(g_j)) (1 - H_{a_r}(g_r))``
    with ``g_1 = 0`` and ``g_{r+1} = g_r + zeta_{a_r}``.  Among equal scores the
    lexicographically smallest sequence wins.
    """
    n_u = model.n_products
    if t < 0:
        raise ValueError(f"horizon must be >= 0, got {t}")
    if n_u**t > enum_cap:
        raise GuardExceeded(f"{n_u}**{t} = {n_u**t} sequences exceeds the enumeration cap {enum_cap}")
    if t == 0:
        return 0.0, ()

    R, beta, Z, K = model.rewards, model.beta, model.zeta, model.n_basis
    best_value = -math.inf
    best_seq: tuple[int, ...] = ()

    def block(prefix, gamma, surv, val):
        nonlocal best_value, best_seq
        remaining = t - len(prefix)
        G = gamma[None, :]
        S = np.array([surv])
        V = np.array([val])
        for r in range(remaining):
            H = h_batch(model, G)
            V = (V[:, None] + S[:, None] * R * (1.0 - H)).ravel()
            if r + 1 < remaining:
                S = (S[:, None] * beta * H).ravel()
                G = (G[:, None, :] + Z[None, :, :]).reshape(-1, K)
        i = int(np.argmax(V))
        if V[i] > best_value:
            digits = []
            for _ in range(remaining):
                i, d = divmod(i, n_u)
                digits.append(d)
            best_value = float(V.max())
            best_seq = tuple(prefix) + tuple(reversed(digits))

    def expand(prefix, gamma, surv, val):
        if n_u ** (t - len(prefix)) <= _ENUM_BLOCK:
            block(prefix, gamma, surv, val)
            return
        H = h_batch(model, gamma)[0]
        for u in range(n_u):
            expand(
                prefix + (u,),
                gamma + Z[u],
                surv * beta * H[u],
                val + surv * R[u] * (1.0 - H[u]),
            )

    expand((), np.zeros(K), 1.0, 0.0)
    return best_value, best_seq


def single_product_closed_form(q: float, R: float, beta: float, t: int | None = None) -> float:
    """Value of repeatedly offering one product with constant no-purchase probability ``q``.

    ``t=None`` gives the infinite-horizon value ``R(1-q)/(1-beta q)``.
    """
    if t is None:
        return R * (1.0 - q) / (1.0 - beta * q)
    return R * (1.0 - q) * (1.0 - (beta * q) ** t) / (1.0 - beta * q)
