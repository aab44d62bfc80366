"""Reading and writing model files (YAML or JSON; JSON is parsed as YAML).

Two layouts are accepted, selected by ``kind``::

    kind: general            # default when omitted
    states: [lo, mid, hi]    # labels, one per profile
    prior: [0.2, 0.5, 0.3]
    basis: [[...], ...]      # K rows of |S| values in (0, 1]
    zeta: [[...], ...]       # |U| rows of K values >= 0
    rewards: [1.0, 2.0]
    beta: 0.9
    products: [a, b]         # optional labels

    kind: noisy_or
    n_features: 2
    baselines: [0.4, 0.6]    # d_i in (0, 1)
    zeta: [[...], ...]       # |U| rows of n values
    rewards: [...]
    beta: 0.8
    prior_mode: uniform      # or a list of 2**n probabilities
    products: [a, b, c]      # optional

Unknown keys are rejected.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .errors import ModelFormatError
from .model import Model, ModelSpec, NoisyOrSpec, build_noisy_or, validate

GENERAL_FIELDS = {"states", "prior", "basis", "zeta", "rewards", "beta"}
NOISY_OR_FIELDS = {"n_features", "baselines", "zeta", "rewards", "beta", "prior_mode"}
OPTIONAL_FIELDS = {"kind", "products"}


def parse_model_dict(data) -> ModelSpec | NoisyOrSpec:
    if not isinstance(data, dict):
        raise ModelFormatError("model file must contain a mapping at top level")
    kind = data.get("kind", "general")
    if kind == "general":
        required = GENERAL_FIELDS
    elif kind == "noisy_or":
        required = NOISY_OR_FIELDS
    else:
        raise ModelFormatError(f"unknown model kind {kind!r} (expected 'general' or 'noisy_or')")

    unknown = set(data) - required - OPTIONAL_FIELDS
    if unknown:
        raise ModelFormatError(f"unknown field(s) for kind {kind!r}: {', '.join(sorted(unknown))}")
    missing = required - set(data)
    if missing:
        raise ModelFormatError(f"missing field(s) for kind {kind!r}: {', '.join(sorted(missing))}")

    if kind == "general":
        states = data["states"]
        if not isinstance(states, list):
            raise ModelFormatError("'states' must be a list of labels")
        return ModelSpec(
            prior=data["prior"],
            basis=data["basis"],
            zeta=data["zeta"],
            rewards=data["rewards"],
            beta=data["beta"],
            states=[str(s) for s in states],
            products=_labels(data.get("products")),
        )
    return NoisyOrSpec(
        n_features=data["n_features"],
        baselines=data["baselines"],
        zeta=data["zeta"],
        rewards=data["rewards"],
        beta=data["beta"],
        prior_mode=data["prior_mode"],
        products=_labels(data.get("products")),
    )


def _labels(value):
    if value is None:
        return None
    if not isinstance(value, list):
        raise ModelFormatError("'products' must be a list of labels")
    return [str(v) for v in value]


def read_model_spec(path) -> ModelSpec | NoisyOrSpec:
    """Parse a model file without validating the numbers."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFormatError(f"cannot read {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelFormatError(f"malformed model file {path}: {exc}") from exc
    return parse_model_dict(data)


def spec_to_model(spec: ModelSpec | NoisyOrSpec) -> Model:
    if isinstance(spec, NoisyOrSpec):
        if isinstance(spec.n_features, bool) or not isinstance(spec.n_features, int):
            raise ModelFormatError(f"n_features must be an integer, got {spec.n_features!r}")
        return build_noisy_or(spec)
    return validate(spec)


def load_model(path) -> Model:
    """Read and validate; raises ModelFormatError or ModelValidationError."""
    return spec_to_model(read_model_spec(path))


def dump_model(model: Model, path) -> None:
    """Write a validated model in the general layout."""
    data = {
        "kind": "general",
        "states": list(model.states),
        "prior": model.prior.tolist(),
        "basis": model.basis.tolist(),
        "zeta": model.zeta.tolist(),
        "rewards": model.rewards.tolist(),
        "beta": model.beta,
        "products": list(model.products),
    }
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False))
