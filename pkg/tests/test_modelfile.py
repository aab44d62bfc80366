import json

import numpy as np
import pytest

from seqpomdp.errors import ModelFormatError, ModelValidationError
from seqpomdp.model import model_hash
from seqpomdp.modelfile import dump_model, load_model

M2_YAML = """\
kind: general
states: [low, high]
prior: [0.5, 0.5]
basis:
  - [0.5, 0.8]
zeta:
  - [1]
  - [2]
rewards: [1, 2]
beta: 0.9
products: [a, b]
"""


def test_general_yaml(tmp_path, m2):
    path = tmp_path / "m2.yaml"
    path.write_text(M2_YAML)
    model = load_model(path)
    assert model.states == ("low", "high")
    assert model.products == ("a", "b")
    assert model_hash(model) == model_hash(m2)


def test_json_is_accepted(tmp_path, m2):
    path = tmp_path / "m2.json"
    path.write_text(
        json.dumps({"states": ["0", "1"], "prior": [0.5, 0.5], "basis": [[0.5, 0.8]], "zeta": [[1], [2]], "rewards": [1, 2], "beta": 0.9})
    )
    assert model_hash(load_model(path)) == model_hash(m2)


def test_noisy_or_file(tmp_path):
    path = tmp_path / "nor.yaml"
    path.write_text(
        "kind: noisy_or\nn_features: 2\nbaselines: [0.5, 0.5]\nzeta: [[1, 1]]\nrewards: [1]\nbeta: 0.9\nprior_mode: uniform\n"
    )
    model = load_model(path)
    assert model.states == ("00", "10", "01", "11")
    np.testing.assert_allclose(model.q[0], [1.0, 0.5, 0.5, 0.25])


def test_unknown_field_rejected(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(M2_YAML + "colour: blue\n")
    with pytest.raises(ModelFormatError, match="colour"):
        load_model(path)


def test_missing_field(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(M2_YAML.replace("beta: 0.9\n", ""))
    with pytest.raises(ModelFormatError, match="beta"):
        load_model(path)


def test_malformed_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("prior: [0.5, 0.5\n")
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_unreadable(tmp_path):
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "missing.yaml")


def test_invalid_numbers_surface_as_validation(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(M2_YAML.replace("prior: [0.5, 0.5]", "prior: [0.5, 0.6]"))
    with pytest.raises(ModelValidationError):
        load_model(path)


def test_round_trip(tmp_path, noisy_or_2):
    path = tmp_path / "out.yaml"
    dump_model(noisy_or_2, path)
    again = load_model(path)
    assert model_hash(again) == model_hash(noisy_or_2)
    assert again.states == noisy_or_2.states
