"""Problem instances, validation, noisy-OR construction and structural constants.

A problem instance consists of a finite profile set ``S`` with prior ``phi0``,
``K`` basis functions ``f_l : S -> (0, 1]`` and a nonnegative exponent matrix
``Z`` (one row per product).  The no-purchase probability of product ``u`` for
profile ``x`` is ``q_u(x) = prod_l f_l(x) ** Z[u, l]``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import GuardExceeded, ModelValidationError

PRIOR_TOL = 1e-12
RANK_TOL = 1e-9
NOISY_OR_FEATURE_CAP = 20


@dataclass(frozen=True)
class ModelSpec:
    """Raw, unvalidated problem description.

    ``basis`` is K x |S| with ``basis[l][x] = f_l(x)``; ``zeta`` is |U| x K.
    """

    prior: Sequence[float]
    basis: Sequence[Sequence[float]]
    zeta: Sequence[Sequence[float]]
    rewards: Sequence[float]
    beta: float
    states: Sequence[str] | None = None
    products: Sequence[str] | None = None


@dataclass(frozen=True)
class NoisyOrSpec:
    """Noisy-OR instance over ``n_features`` binary demographic variables.

    ``prior_mode`` is either ``"uniform"`` or an explicit sequence of ``2**n``
    probabilities indexed by state (feature ``i`` is bit ``i`` of the index).
    """

    n_features: int
    baselines: Sequence[float]
    zeta: Sequence[Sequence[float]]
    rewards: Sequence[float]
    beta: float
    prior_mode: str | Sequence[float] = "uniform"
    products: Sequence[str] | None = None


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Model:
    """A validated instance.  Build it with :func:`validate`, not directly."""

    prior: np.ndarray
    basis: np.ndarray
    zeta: np.ndarray
    rewards: np.ndarray
    beta: float
    states: tuple[str, ...]
    products: tuple[str, ...]
    warnings: tuple[str, ...] = ()
    log_prior: np.ndarray = field(init=False, repr=False)
    log_basis: np.ndarray = field(init=False, repr=False)
    log_q: np.ndarray = field(init=False, repr=False)
    q: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        log_basis = np.log(self.basis)
        log_q = self.zeta @ log_basis
        object.__setattr__(self, "log_prior", _frozen(np.log(self.prior)))
        object.__setattr__(self, "log_basis", _frozen(log_basis))
        object.__setattr__(self, "log_q", _frozen(log_q))
        object.__setattr__(self, "q", _frozen(np.exp(log_q)))

    @property
    def n_states(self) -> int:
        return self.prior.shape[0]

    @property
    def n_basis(self) -> int:
        return self.basis.shape[0]

    @property
    def n_products(self) -> int:
        return self.zeta.shape[0]

    @property
    def r_max(self) -> float:
        return float(self.rewards.max())

    def product_index(self, u) -> int:
        """Accept either an integer index or a product name."""
        if isinstance(u, str):
            try:
                return self.products.index(u)
            except ValueError:
                raise IndexError(f"unknown product {u!r}") from None
        u = int(u)
        if not 0 <= u < self.n_products:
            raise IndexError(f"product index {u} out of range [0, {self.n_products})")
        return u

    def to_spec(self) -> ModelSpec:
        return ModelSpec(
            prior=self.prior.tolist(),
            basis=self.basis.tolist(),
            zeta=self.zeta.tolist(),
            rewards=self.rewards.tolist(),
            beta=self.beta,
            states=list(self.states),
            products=list(self.products),
        )


def check(spec: ModelSpec) -> tuple[list[str], list[str]]:
    """Return ``(violations, warnings)`` for a raw spec without raising."""
    violations: list[str] = []
    warnings: list[str] = []
    try:
        prior = np.asarray(spec.prior, dtype=float)
        basis = np.asarray(spec.basis, dtype=float)
        zeta = np.asarray(spec.zeta, dtype=float)
        rewards = np.asarray(spec.rewards, dtype=float)
        beta = float(spec.beta)
    except (TypeError, ValueError) as exc:
        return [f"non-numeric or ragged field: {exc}"], warnings

    if prior.ndim != 1 or prior.size == 0:
        violations.append("prior must be a non-empty vector")
        return violations, warnings
    n_states = prior.size
    if basis.ndim != 2 or basis.shape[1] != n_states or basis.shape[0] == 0:
        violations.append(f"basis must be K x {n_states} with K >= 1, got shape {basis.shape}")
    if zeta.ndim != 2 or zeta.shape[0] == 0:
        violations.append(f"zeta must be a non-empty |U| x K matrix, got shape {zeta.shape}")
    elif basis.ndim == 2 and zeta.shape[1] != basis.shape[0]:
        violations.append(f"zeta has {zeta.shape[1]} columns but basis has {basis.shape[0]} rows")
    if rewards.ndim != 1 or (zeta.ndim == 2 and rewards.size != zeta.shape[0]):
        violations.append(f"rewards must have one entry per product, got shape {rewards.shape}")
    if spec.states is not None and len(spec.states) != n_states:
        violations.append(f"{len(spec.states)} state labels for {n_states} prior entries")
    if spec.products is not None and zeta.ndim == 2 and len(spec.products) != zeta.shape[0]:
        violations.append(f"{len(spec.products)} product labels for {zeta.shape[0]} zeta rows")
    if violations:
        return violations, warnings

    for x in np.flatnonzero(~(prior > 0)):
        violations.append(f"prior[{x}] = {prior[x]!r} must be > 0")
    total = float(prior.sum())
    if not abs(total - 1.0) <= PRIOR_TOL:
        violations.append(f"prior sums to {total:.12g}, expected 1")
    for l, x in zip(*np.nonzero(~((basis > 0) & (basis <= 1)))):
        violations.append(f"basis entry [{l}][{x}] = {basis[l, x]!r} must be in (0,1]")
    for u, l in zip(*np.nonzero(~(zeta >= 0))):
        violations.append(f"zeta[{u}][{l}] = {zeta[u, l]!r} must be >= 0")
    for u in np.flatnonzero(~(rewards >= 0)):
        violations.append(f"rewards[{u}] = {rewards[u]!r} must be >= 0")
    if not 0.0 < beta < 1.0:
        violations.append(f"beta = {beta!r} must be in (0,1)")
    if not np.all(np.isfinite(zeta)) or not np.all(np.isfinite(rewards)):
        violations.append("zeta and rewards must be finite")
    if violations:
        return violations, warnings

    for u in np.flatnonzero(np.all(zeta == 0, axis=1)):
        warnings.append(f"product {u} has an all-zero exponent row: it is never purchased")
    log_basis = np.log(basis)
    sv = np.linalg.svd(log_basis, compute_uv=False)
    rank = int(np.sum(sv > RANK_TOL * max(sv.max(), 1.0))) if sv.size else 0
    if rank < basis.shape[0]:
        warnings.append(
            f"log-basis rows have rank {rank} < K = {basis.shape[0]}; "
            "gamma vectors may not identify posteriors uniquely"
        )
    return violations, warnings


def validate(spec: ModelSpec) -> Model:
    """Check every invariant and return a :class:`Model`.

    Raises :class:`ModelValidationError` listing all violations.  Soft problems
    (zero exponent rows, rank-deficient log-basis) end up in ``Model.warnings``.
    """
    violations, warnings = check(spec)
    if violations:
        raise ModelValidationError(violations)
    n_states = len(spec.prior)
    n_products = len(spec.zeta)
    states = tuple(spec.states) if spec.states is not None else tuple(str(i) for i in range(n_states))
    products = (
        tuple(spec.products) if spec.products is not None else tuple(f"u{i}" for i in range(n_products))
    )
    return Model(
        prior=_frozen(spec.prior),
        basis=_frozen(spec.basis),
        zeta=_frozen(spec.zeta),
        rewards=_frozen(spec.rewards),
        beta=float(spec.beta),
        states=states,
        products=products,
        warnings=tuple(warnings),
    )


def response_prob(model: Model, u, x: int) -> float:
    """No-purchase probability ``q_u(x)`` evaluated in log space."""
    u = model.product_index(u)
    if not 0 <= x < model.n_states:
        raise IndexError(f"state index {x} out of range [0, {model.n_states})")
    return float(np.exp(np.dot(model.zeta[u], model.log_basis[:, x])))


def noisy_or_states(n_features: int) -> np.ndarray:
    """All bit patterns as a ``(2**n, n)`` 0/1 array; row ``s`` has bit ``i`` of ``s`` in column ``i``."""
    idx = np.arange(2**n_features)
    return (idx[:, None] >> np.arange(n_features)[None, :]) & 1


def build_noisy_or(spec: NoisyOrSpec, *, feature_cap: int = NOISY_OR_FEATURE_CAP) -> Model:
    """Expand a noisy-OR description into an explicit model over ``{0,1}^n``.

    Basis function ``i`` is ``f_i(x) = (1 - d_i) ** x_i`` so the exponents carry
    over unchanged and ``K = n``.
    """
    n = int(spec.n_features)
    if n < 1:
        raise ModelValidationError([f"n_features = {n} must be >= 1"])
    if n > feature_cap:
        raise GuardExceeded(f"n_features = {n} exceeds the cap of {feature_cap} (2**n states)")
    d = np.asarray(spec.baselines, dtype=float)
    problems = []
    if d.shape != (n,):
        problems.append(f"baselines must have {n} entries, got shape {d.shape}")
    else:
        for i in np.flatnonzero(~((d > 0) & (d < 1))):
            problems.append(f"baselines[{i}] = {d[i]!r} must be in (0,1)")
    if problems:
        raise ModelValidationError(problems)

    bits = noisy_or_states(n)
    basis = np.where(bits.T == 1, (1.0 - d)[:, None], 1.0)
    if isinstance(spec.prior_mode, str):
        if spec.prior_mode != "uniform":
            raise ModelValidationError([f"unknown prior_mode {spec.prior_mode!r}"])
        prior = np.full(2**n, 1.0 / 2**n)
    else:
        prior = np.asarray(spec.prior_mode, dtype=float)
        if prior.shape != (2**n,):
            raise ModelValidationError([f"explicit prior must have {2**n} entries, got shape {prior.shape}"])
    labels = ["".join(str(b) for b in row) for row in bits]
    return validate(
        ModelSpec(
            prior=prior,
            basis=basis,
            zeta=spec.zeta,
            rewards=spec.rewards,
            beta=spec.beta,
            states=labels,
            products=spec.products,
        )
    )


def compute_C1(model: Model) -> float:
    """``K * max_u (max_x q_u - min_x q_u)``: spread of the response functions."""
    spread = model.q.max(axis=1) - model.q.min(axis=1)
    return float(model.n_basis * spread.max())


def compute_C2(model: Model) -> float:
    """Largest range of a log basis function over the profile set."""
    spread = model.log_basis.max(axis=1) - model.log_basis.min(axis=1)
    return float(spread.max())


def compute_M(model: Model) -> float:
    """Lipschitz constant of every ``H_u`` in the sup norm on gamma."""
    return compute_C1(model) * compute_C2(model)


def compute_zeta_star(model: Model) -> float:
    return float(model.zeta.max())


def compute_zeta_min(model: Model) -> float:
    return float(model.zeta.min())


class ScalabilityCaps(NamedTuple):
    """Problem-size-free upper bounds on C1, C2 and zeta*; ``None`` when a hypothesis fails."""

    c1_cap: float | None
    c2_cap: float | None
    zeta_star_cap: float | None
    alpha: float
    delta: float
    nu: float


def scalability_caps(model: Model) -> ScalabilityCaps:
    alpha = float(model.basis.max())
    delta = float(model.basis.min())
    nu = float(model.q.min())
    zeta_min = compute_zeta_min(model)

    c1_cap = None
    if alpha < 1.0 and zeta_min > 0.0:
        # max_w w * theta**w with theta = alpha**zeta_min, i.e. (1/e) log_theta(1/e)
        c1_cap = 1.0 / (math.e * zeta_min * math.log(1.0 / alpha))
    c2_cap = math.log(1.0 / delta) if delta > 0.0 else None
    zeta_star_cap = None
    if nu > 0.0 and alpha < 1.0:
        zeta_star_cap = math.log(1.0 / nu) / math.log(1.0 / alpha)
    return ScalabilityCaps(c1_cap, c2_cap, zeta_star_cap, alpha, delta, nu)


def model_hash(model: Model) -> str:
    """Stable content hash over the numeric fields (labels excluded)."""
    payload = {
        "prior": model.prior.tolist(),
        "basis": model.basis.tolist(),
        "zeta": model.zeta.tolist(),
        "rewards": model.rewards.tolist(),
        "beta": model.beta,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def random_model(
    rng: np.random.Generator,
    n_states: int,
    n_basis: int,
    n_products: int,
    *,
    basis_low: float = 0.2,
    zeta_high: float = 2.0,
    reward_high: float = 3.0,
    beta: float | None = None,
) -> Model:
    """Draw a valid random instance; used by property tests and demos."""
    prior = rng.dirichlet(np.ones(n_states))
    prior = np.maximum(prior, 1e-6)
    prior /= prior.sum()
    basis = rng.uniform(basis_low, 1.0, size=(n_basis, n_states))
    zeta = rng.uniform(0.0, zeta_high, size=(n_products, n_basis))
    rewards = rng.uniform(0.0, reward_high, size=n_products)
    if beta is None:
        beta = float(rng.uniform(0.5, 0.95))
    return validate(ModelSpec(prior=prior, basis=basis, zeta=zeta, rewards=rewards, beta=beta))
