"""Grid-based approximate value iteration on gamma space, with certified bounds.

Stage ``t`` (``t`` periods to go) is represented on the box
``{gamma : ||gamma||_inf <= zeta* (2n - t)}`` by a piecewise-constant table:
cell ``[i_1 h, (i_1+1) h) x ... x [i_K h, (i_K+1) h)`` takes the value stored
at its anchor ``(i_1 h, ..., i_K h)``.  The backup at an anchor ``g`` is

    max_u  R_u (1 - H_u(g)) + beta * H_u(g) * J_prev(snap(g + zeta_u))

and the maximizing product is recorded as the stage policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .belief import h_batch
from .errors import DomainError, GuardExceeded
from .model import Model, compute_C1, compute_C2, compute_M, compute_zeta_min, compute_zeta_star, model_hash

SNAP_EPS = 1e-12
EXTENT_TOL = 1e-9
GRID_CAP = 4_000_000


def horizon_for_epsilon(model: Model, epsilon: float) -> int:
    """Smallest horizon ``n`` with ``beta**n R_max <= epsilon``, clamped to at least 1."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    r_max = model.r_max
    if r_max <= 0:
        return 1
    n = math.ceil((math.log(r_max) + math.log(1.0 / epsilon)) / math.log(1.0 / model.beta))
    return max(n, 1)


def spacing_for_epsilon(model: Model, epsilon: float) -> float:
    """Grid spacing that makes the greedy-policy loss at most ``epsilon``; capped at 1."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    M = compute_M(model)
    r_max = model.r_max
    if M <= 0 or r_max <= 0:
        return 1.0
    b = model.beta
    h = epsilon * (1 - b) ** 3 / (2 * b * (1 + b) * r_max * M)
    return min(h, 1.0)


def snap_indices(gammas, h: float) -> np.ndarray:
    """Cell indices ``floor(gamma / h + 1e-12)``.

    The small offset makes exact multiples of ``h`` that came out a hair low
    in floating point land on their own anchor; anything within about
    ``1e-12 * h`` below a cell boundary therefore snaps up.
    """
    return np.floor(np.asarray(gammas, dtype=float) / h + SNAP_EPS).astype(np.int64)


def snap(gamma, h: float) -> tuple[tuple[int, ...], np.ndarray]:
    """Cell index and anchor of ``gamma`` on the spacing-``h`` grid."""
    idx = snap_indices(gamma, h)
    return tuple(int(i) for i in np.atleast_1d(idx)), np.atleast_1d(idx) * h


def stage_extent(zeta_star: float, horizon: int, t: int) -> float:
    return zeta_star * (2 * horizon - t)


def axis_count(extent: float, h: float) -> int:
    """Anchors per dimension needed to cover ``[0, extent]``."""
    return int(math.floor(extent / h + SNAP_EPS)) + 1


@dataclass
class _Grid:
    t: int
    h: float
    extent: float
    n_axis: int
    dim: int

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.n_axis**self.dim

    def anchor_indices(self) -> np.ndarray:
        """All anchor index vectors in row-major order, shape ``(size, K)``."""
        grids = np.indices(self.shape).reshape(self.dim, -1)
        return grids.T

    def anchors(self) -> np.ndarray:
        return self.anchor_indices() * self.h

    def locate(self, gammas) -> np.ndarray:
        """Flat row-major positions for gamma points, raising if any is out of the domain."""
        g = np.atleast_2d(np.asarray(gammas, dtype=float))
        if g.shape[1] != self.dim:
            raise ValueError(f"gamma must have {self.dim} components, got {g.shape[1]}")
        if np.any(g < -EXTENT_TOL) or np.any(g > self.extent + EXTENT_TOL):
            bad = g[np.any((g < -EXTENT_TOL) | (g > self.extent + EXTENT_TOL), axis=1)][0]
            raise DomainError(
                f"gamma {bad.tolist()} outside stage-{self.t} domain [0, {self.extent:g}]^{self.dim}"
            )
        idx = np.clip(snap_indices(g, self.h), 0, self.n_axis - 1)
        return np.ravel_multi_index(idx.T, self.shape)


@dataclass
class StageValueTable(_Grid):
    """Approximate value ``J~_t`` stored at anchors, row-major, shape ``(n_axis,)*K``."""

    values: np.ndarray = field(default=None, repr=False)

    def evaluate(self, gamma) -> float:
        return float(self.values.ravel()[self.locate(gamma)[0]])

    def evaluate_many(self, gammas) -> np.ndarray:
        return self.values.ravel()[self.locate(gammas)]


@dataclass
class StagePolicy(_Grid):
    """Greedy product choice ``mu_t`` at every anchor of the stage-``t`` grid."""

    actions: np.ndarray = field(default=None, repr=False)

    def action(self, gamma) -> int:
        return int(self.actions.ravel()[self.locate(gamma)[0]])

    def action_many(self, gammas) -> np.ndarray:
        return self.actions.ravel()[self.locate(gammas)]


def evaluate_table(table: StageValueTable, gamma) -> float:
    return table.evaluate(gamma)


class GridEstimate(NamedTuple):
    anchors: int
    per_axis: int
    asymptotic: float


def grid_point_estimate(model: Model, epsilon: float, h: float, horizon: int | None = None) -> GridEstimate:
    """Anchors in the largest (stage 0) grid, plus the order-of-magnitude formula.

    The asymptotic figure is ``(zeta* M (1/eps) ln(1/eps))**K`` with constants
    dropped, so only its growth is meaningful.
    """
    n = horizon if horizon is not None else horizon_for_epsilon(model, epsilon)
    zs = compute_zeta_star(model)
    per_axis = axis_count(stage_extent(zs, n, 0), h)
    K = model.n_basis
    asym = (zs * compute_M(model) * (1.0 / epsilon) * math.log(1.0 / epsilon)) ** K
    return GridEstimate(per_axis**K, per_axis, asym)


@dataclass(frozen=True)
class BoundsReport:
    M: float
    C1: float
    C2: float
    zeta_star: float
    zeta_min: float
    epsilon: float
    horizon: int
    h: float
    theorem1_bound: float
    theorem2_bound: float
    corollary2_bound: float
    grid_point_estimate: int
    asymptotic_grid_estimate: float
    notes: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "M": self.M,
            "C1": self.C1,
            "C2": self.C2,
            "zeta_star": self.zeta_star,
            "zeta_min": self.zeta_min,
            "epsilon": self.epsilon,
            "horizon": self.horizon,
            "h": self.h,
            "theorem1_bound": self.theorem1_bound,
            "theorem2_bound": self.theorem2_bound,
            "corollary2_bound": self.corollary2_bound,
            "grid_point_estimate": self.grid_point_estimate,
            "asymptotic_grid_estimate": self.asymptotic_grid_estimate,
        }


def value_error_bound(model: Model, h: float) -> float:
    """Sup-norm gap between exact and grid value tables on their stage domains."""
    b = model.beta
    return (1 + b) * model.r_max * compute_M(model) * h / (1 - b) ** 2


def policy_error_bound(model: Model, h: float) -> float:
    """Sup-norm gap between the optimal value and the greedy policy's value."""
    b = model.beta
    return 2 * b * (1 + b) * model.r_max * compute_M(model) * h / (1 - b) ** 3


def bounds_report(model: Model, epsilon: float, h: float | None = None, horizon: int | None = None) -> BoundsReport:
    """Collect every constant and closed-form bound for ``(epsilon, h)``.

    ``h=0`` is allowed here (bounds collapse to 0) even though no grid can use it.
    """
    notes = []
    n_raw = None
    if model.r_max > 0:
        n_raw = math.ceil((math.log(model.r_max) + math.log(1.0 / epsilon)) / math.log(1.0 / model.beta))
    n = horizon_for_epsilon(model, epsilon)
    if n_raw is None or n_raw < 1:
        notes.append(f"horizon formula gave {n_raw}; clamped to 1")
    if horizon is not None and horizon != n:
        notes.append(f"horizon overridden: {horizon} instead of {n}")
        n = horizon
    if h is None:
        h = spacing_for_epsilon(model, epsilon)
    if compute_M(model) == 0:
        notes.append("M = 0: H_u is constant in gamma, grid error vanishes")
    t1 = value_error_bound(model, h)
    t2 = policy_error_bound(model, h)
    est = grid_point_estimate(model, epsilon, h, n) if h > 0 else GridEstimate(0, 0, math.nan)
    return BoundsReport(
        M=compute_M(model),
        C1=compute_C1(model),
        C2=compute_C2(model),
        zeta_star=compute_zeta_star(model),
        zeta_min=compute_zeta_min(model),
        epsilon=float(epsilon),
        horizon=n,
        h=float(h),
        theorem1_bound=t1,
        theorem2_bound=t2,
        corollary2_bound=epsilon + t2,
        grid_point_estimate=est.anchors,
        asymptotic_grid_estimate=est.asymptotic,
        notes=tuple(notes),
    )


@dataclass
class Solution:
    """Output of :func:`solve`: ``tables[t]`` for ``t = 0..stages`` and ``policies[t]`` for ``t >= 1``."""

    model_hash: str
    epsilon: float
    h: float
    horizon: int
    tables: list[StageValueTable]
    policies: dict[int, StagePolicy]
    bounds: BoundsReport

    @property
    def stages(self) -> int:
        return len(self.tables) - 1

    def table(self, t: int) -> StageValueTable:
        return self.tables[t]

    def policy(self, t: int) -> StagePolicy:
        try:
            return self.policies[t]
        except KeyError:
            raise DomainError(f"no policy for stage {t} (solved stages 1..{self.stages})") from None


def _backup(model: Model, H: np.ndarray, points: np.ndarray, prev: StageValueTable):
    """Bellman backup given ``H`` at ``points``; continuation looked up in ``prev``."""
    cont = np.empty_like(H)
    flat_prev = prev.values.ravel()
    for u in range(model.n_products):
        cont[:, u] = flat_prev[prev.locate(points + model.zeta[u])]
    Q = model.rewards * (1.0 - H) + model.beta * H * cont
    return Q.max(axis=1), Q.argmax(axis=1)


def approx_backup(model: Model, prev: StageValueTable, gammas):
    """Grid operator at arbitrary points: everything is evaluated at the snapped anchor."""
    g = np.atleast_2d(np.asarray(gammas, dtype=float))
    anchors = snap_indices(g, prev.h) * prev.h
    return _backup(model, h_batch(model, anchors), anchors, prev)


def exact_backup(model: Model, prev: StageValueTable, gammas):
    """Exact operator applied to the piecewise-constant function ``prev``."""
    g = np.atleast_2d(np.asarray(gammas, dtype=float))
    return _backup(model, h_batch(model, g), g, prev)


def policy_backup(model: Model, prev: StageValueTable, gammas, actions) -> np.ndarray:
    """Fixed-policy operator: product ``actions[i]`` is used at ``gammas[i]``."""
    g = np.atleast_2d(np.asarray(gammas, dtype=float))
    a = np.asarray(actions, dtype=int)
    H = h_batch(model, g)[np.arange(g.shape[0]), a]
    cont = prev.evaluate_many(g + model.zeta[a])
    return model.rewards[a] * (1.0 - H) + model.beta * H * cont


def required_h(extent: float, dim: int, cap: int) -> float:
    """Smallest spacing keeping ``axis_count(extent, h)**dim`` within ``cap``."""
    per_axis = max(int(math.floor(cap ** (1.0 / dim))), 2)
    return extent / (per_axis - 1) if extent > 0 else 1.0


def solve(
    model: Model,
    epsilon: float,
    h: float | None = None,
    *,
    horizon: int | None = None,
    stages: int | None = None,
    grid_cap: int = GRID_CAP,
) -> Solution:
    """Run grid value iteration for stages ``1..stages`` (default: the full horizon).

    ``horizon`` overrides ``n(epsilon)``; grid extents are always sized for the
    full horizon, so a truncated run yields exactly the leading tables of the
    full one.
    """
    n = horizon if horizon is not None else horizon_for_epsilon(model, epsilon)
    if n < 1:
        raise ValueError(f"horizon must be >= 1, got {n}")
    if h is None:
        h = spacing_for_epsilon(model, epsilon)
    if not 0 < h:
        raise ValueError(f"grid spacing must be > 0, got {h}")
    T = n if stages is None else stages
    if not 0 <= T <= n:
        raise ValueError(f"stages must lie in [0, {n}], got {T}")

    K = model.n_basis
    zs = compute_zeta_star(model)
    biggest = axis_count(stage_extent(zs, n, 0), h) ** K
    if biggest > grid_cap:
        suggestion = required_h(stage_extent(zs, n, 0), K, grid_cap)
        raise GuardExceeded(
            f"stage-0 grid needs {biggest} anchors (~{biggest * 8 / 2**20:.1f} MiB per table) "
            f"> cap {grid_cap}; use h >= {suggestion:.6g}"
        )

    def grid(t):
        ext = stage_extent(zs, n, t)
        return dict(t=t, h=h, extent=ext, n_axis=axis_count(ext, h), dim=K)

    g0 = grid(0)
    tables = [StageValueTable(**g0, values=np.zeros((g0["n_axis"],) * K))]
    policies: dict[int, StagePolicy] = {}

    H_full = None
    if T >= 1:
        g1 = StageValueTable(**grid(1))
        # anchors of later stages are a leading sub-box of stage 1's
        H_full = h_batch(model, g1.anchors()).reshape(g1.shape + (model.n_products,))

    for t in range(1, T + 1):
        spec = grid(t)
        cur = StageValueTable(**spec)
        m = cur.n_axis
        H = H_full[(slice(0, m),) * K].reshape(-1, model.n_products)
        vals, acts = _backup(model, H, cur.anchors(), tables[t - 1])
        cur.values = vals.reshape(cur.shape)
        tables.append(cur)
        policies[t] = StagePolicy(**spec, actions=acts.reshape(cur.shape))

    return Solution(
        model_hash=model_hash(model),
        epsilon=float(epsilon),
        h=float(h),
        horizon=n,
        tables=tables,
        policies=policies,
        bounds=bounds_report(model, epsilon, h, horizon=horizon),
    )
