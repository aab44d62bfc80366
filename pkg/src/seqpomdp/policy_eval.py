"""Exact value of the extracted greedy policy and a Monte Carlo customer simulator.

Stage ``t`` means ``t`` periods remain.  A customer who has rejected ``l``
products is therefore served by the stage ``horizon - l`` policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .belief import gamma_from_history, h_batch
from .errors import HorizonExhausted
from .grid_dp import Solution
from .model import Model


@dataclass(frozen=True)
class PathStep:
    stage: int
    gamma: np.ndarray
    product: int
    no_purchase: float
    value: float


def policy_path(model: Model, solution: Solution, t: int, gamma0=None) -> list[PathStep]:
    """Walk the rejection path of the greedy policy from ``gamma0`` for ``t`` stages.

    Offers only continue after a rejection, so from a fixed start the policy
    visits a single chain of gamma values.  ``step.value`` is ``J^_s`` at that
    step, filled in backwards once the chain is known.
    """
    gamma = np.zeros(model.n_basis) if gamma0 is None else np.asarray(gamma0, dtype=float)
    chain = []
    for s in range(t, 0, -1):
        u = solution.policy(s).action(gamma)
        H = float(h_batch(model, gamma)[0, u])
        chain.append((s, gamma, u, H))
        gamma = gamma + model.zeta[u]
    steps: list[PathStep] = []
    value = 0.0
    for s, g, u, H in reversed(chain):
        value = model.rewards[u] * (1.0 - H) + model.beta * H * value
        steps.append(PathStep(s, g, u, H, float(value)))
    steps.reverse()
    return steps


def policy_value_exact(model: Model, solution: Solution, t: int, gamma0=None) -> float:
    """Expected discounted reward of the greedy policy over ``t`` periods."""
    if t == 0:
        return 0.0
    return policy_path(model, solution, t, gamma0)[0].value


def next_product(model: Model, solution: Solution, history: Sequence = ()) -> int:
    """Product to offer next after the given rejections."""
    remaining = solution.horizon - len(history)
    if remaining < 1:
        raise HorizonExhausted(
            f"history of length {len(history)} exhausts the horizon {solution.horizon}"
        )
    gamma = gamma_from_history(model, history)
    return solution.policy(remaining).action(gamma)


@dataclass
class EpisodeRecord:
    profile: int
    steps: list[tuple[int, int]]
    reward: float
    cause: str


@dataclass
class SimulationResult:
    episodes: int
    seed: int
    horizon: int
    mean: float
    stderr: float
    attrition: bool = False
    records: list[EpisodeRecord] = field(default_factory=list)


def _episode(model, seed, index, products, p_buy, cum_prior, attrition, keep):
    rng = np.random.default_rng([seed, index])
    draws = rng.random(2 * len(products) + 1)
    x = int(np.searchsorted(cum_prior, draws[0], side="right"))
    x = min(x, model.n_states - 1)
    beta = model.beta
    steps = []
    for r, u in enumerate(products):
        bought = draws[1 + 2 * r] < p_buy[u, x]
        if keep:
            steps.append((u, int(bought)))
        if bought:
            scale = 1.0 if attrition else beta**r
            return float(model.rewards[u] * scale), EpisodeRecord(x, steps, 0.0, "purchase") if keep else None
        if attrition and draws[2 + 2 * r] >= beta:
            return 0.0, EpisodeRecord(x, steps, 0.0, "attrition") if keep else None
    return 0.0, EpisodeRecord(x, steps, 0.0, "horizon") if keep else None


def simulate(
    model: Model,
    solution: Solution,
    episodes: int,
    seed: int,
    *,
    horizon: int | None = None,
    attrition: bool = False,
    keep_records: int = 5,
) -> SimulationResult:
    """Monte Carlo estimate of the greedy policy's expected discounted reward.

    Each episode draws a profile from the prior and offers products until a
    purchase or the horizon.  Episode ``i`` uses its own generator seeded with
    ``(seed, i)``, so results do not depend on evaluation order.

    With ``attrition=True`` rewards are undiscounted and the customer instead
    leaves with probability ``1 - beta`` after each rejection; the expected
    value is the same.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    n = solution.horizon if horizon is None else horizon
    # the offer sequence is fixed until the first purchase
    products = [step.product for step in policy_path(model, solution, n)]
    p_buy = 1.0 - model.q
    cum_prior = np.cumsum(model.prior)
    rewards = np.empty(episodes)
    records = []
    for i in range(episodes):
        keep = i < keep_records
        rewards[i], rec = _episode(model, seed, i, products, p_buy, cum_prior, attrition, keep)
        if keep:
            rec.reward = float(rewards[i])
            records.append(rec)
    mean = float(rewards.mean())
    stderr = float(rewards.std(ddof=1) / math.sqrt(episodes)) if episodes > 1 else math.nan
    return SimulationResult(episodes, int(seed), n, mean, stderr, attrition, records)
