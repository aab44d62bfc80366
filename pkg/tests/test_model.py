import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqpomdp.errors import GuardExceeded, ModelValidationError
from seqpomdp.model import (
    ModelSpec,
    NoisyOrSpec,
    build_noisy_or,
    check,
    compute_C1,
    compute_C2,
    compute_M,
    compute_zeta_min,
    compute_zeta_star,
    model_hash,
    random_model,
    response_prob,
    scalability_caps,
    validate,
)

from conftest import make_m2


def _spec(**overrides):
    base = dict(prior=[0.5, 0.5], basis=[[0.5, 0.8]], zeta=[[1.0], [2.0]], rewards=[1.0, 2.0], beta=0.9)
    base.update(overrides)
    return ModelSpec(**base)


class TestValidate:
    def test_valid_model(self):
        model = validate(_spec())
        assert model.n_states == 2 and model.n_basis == 1 and model.n_products == 2
        assert model.r_max == 2.0
        assert model.warnings == ()

    def test_prior_not_normalized(self):
        with pytest.raises(ModelValidationError) as info:
            validate(_spec(prior=[0.5, 0.6]))
        assert any("prior sums to 1.1" in v for v in info.value.violations)

    def test_basis_zero_entry(self):
        with pytest.raises(ModelValidationError) as info:
            validate(_spec(basis=[[0.5, 0.0]]))
        assert any("basis entry [0][1]" in v and "must be in (0,1]" in v for v in info.value.violations)

    def test_collects_every_violation(self):
        violations, _ = check(_spec(prior=[0.5, 0.6], basis=[[1.5, 0.8]], zeta=[[-1.0], [2.0]], beta=1.0))
        joined = "\n".join(violations)
        assert "prior sums" in joined
        assert "basis entry [0][0]" in joined
        assert "zeta[0][0]" in joined
        assert "beta" in joined

    @pytest.mark.parametrize("beta", [0.0, 1.0, -0.2, 1.5])
    def test_beta_outside_unit_interval(self, beta):
        with pytest.raises(ModelValidationError):
            validate(_spec(beta=beta))

    def test_zero_prior_rejected(self):
        with pytest.raises(ModelValidationError):
            validate(_spec(prior=[1.0, 0.0]))

    def test_shape_mismatch(self):
        with pytest.raises(ModelValidationError):
            validate(_spec(zeta=[[1.0, 1.0]], rewards=[1.0]))

    def test_zero_exponent_row_warns(self):
        model = validate(_spec(zeta=[[0.0], [2.0]]))
        assert any("never purchased" in w for w in model.warnings)

    def test_rank_deficient_basis_warns(self):
        model = validate(_spec(basis=[[0.5, 0.8], [0.25, 0.64]], zeta=[[1.0, 0.0], [0.0, 1.0]]))
        assert any("rank 1" in w for w in model.warnings)

    def test_arrays_are_read_only(self):
        model = validate(_spec())
        with pytest.raises(ValueError):
            model.prior[0] = 0.9


class TestResponseProb:
    def test_m2_values(self, m2):
        assert response_prob(m2, "a", 0) == pytest.approx(0.5, abs=1e-15)
        assert response_prob(m2, "b", 1) == pytest.approx(0.64, abs=1e-15)

    def test_zero_exponents_give_one(self):
        model = validate(_spec(zeta=[[0.0], [2.0]]))
        assert response_prob(model, 0, 0) == 1.0
        assert response_prob(model, 0, 1) == 1.0

    def test_out_of_range(self, m2):
        with pytest.raises(IndexError):
            response_prob(m2, 2, 0)
        with pytest.raises(IndexError):
            response_prob(m2, 0, 5)
        with pytest.raises(IndexError):
            response_prob(m2, "zz", 0)


def _noisy_or_q_bitwise(d, zeta_u, state_index, n):
    q = 1.0
    for i in range(n):
        bit = (state_index >> i) & 1
        q *= (1.0 - d[i]) ** (bit * zeta_u[i])
    return q


class TestNoisyOr:
    def test_single_feature(self):
        model = build_noisy_or(NoisyOrSpec(n_features=1, baselines=[0.5], zeta=[[1.0]], rewards=[1.0], beta=0.9))
        assert model.n_states == 2
        np.testing.assert_allclose(model.basis, [[1.0, 0.5]])
        assert response_prob(model, 0, 0) == 1.0
        assert response_prob(model, 0, 1) == pytest.approx(0.5, abs=1e-15)
        assert compute_M(model) == pytest.approx(0.5 * math.log(2), abs=1e-12)

    def test_two_features_both_on(self):
        model = build_noisy_or(
            NoisyOrSpec(n_features=2, baselines=[0.5, 0.5], zeta=[[1.0, 1.0]], rewards=[1.0], beta=0.9)
        )
        assert model.states[3] == "11"
        assert response_prob(model, 0, 3) == pytest.approx(0.25, abs=1e-15)

    def test_zero_exponents(self):
        model = build_noisy_or(
            NoisyOrSpec(n_features=3, baselines=[0.2, 0.5, 0.7], zeta=[[0.0, 0.0, 0.0]], rewards=[1.0], beta=0.9)
        )
        np.testing.assert_array_equal(model.q, np.ones((1, 8)))

    def test_feature_cap(self):
        spec = NoisyOrSpec(n_features=4, baselines=[0.5] * 4, zeta=[[1.0] * 4], rewards=[1.0], beta=0.9)
        with pytest.raises(GuardExceeded):
            build_noisy_or(spec, feature_cap=3)

    @pytest.mark.parametrize("d", [0.0, 1.0, -0.1])
    def test_baseline_bounds(self, d):
        with pytest.raises(ModelValidationError):
            build_noisy_or(NoisyOrSpec(n_features=1, baselines=[d], zeta=[[1.0]], rewards=[1.0], beta=0.9))

    def test_explicit_prior(self):
        prior = [0.1, 0.2, 0.3, 0.4]
        model = build_noisy_or(
            NoisyOrSpec(n_features=2, baselines=[0.3, 0.4], zeta=[[1.0, 2.0]], rewards=[1.0], beta=0.9, prior_mode=prior)
        )
        np.testing.assert_array_equal(model.prior, prior)

    @settings(max_examples=40, deadline=None)
    @given(
        n=st.integers(1, 5),
        n_products=st.integers(1, 4),
        seed=st.integers(0, 2**31),
    )
    def test_matches_bitwise_product(self, n, n_products, seed):
        rng = np.random.default_rng(seed)
        d = rng.uniform(0.05, 0.95, size=n)
        zeta = rng.uniform(0.0, 3.0, size=(n_products, n))
        model = build_noisy_or(NoisyOrSpec(n_features=n, baselines=d, zeta=zeta, rewards=np.ones(n_products), beta=0.9))
        assert validate(model.to_spec()).n_states == 2**n
        for u in range(n_products):
            for s in range(2**n):
                assert response_prob(model, u, s) == pytest.approx(_noisy_or_q_bitwise(d, zeta[u], s, n), rel=1e-12)


class TestConstants:
    def test_m2(self, m2):
        assert compute_C1(m2) == pytest.approx(0.39, abs=1e-15)
        assert compute_C2(m2) == pytest.approx(math.log(0.8 / 0.5), abs=1e-15)
        assert compute_C2(m2) == pytest.approx(0.470004, abs=1e-6)
        assert compute_M(m2) == pytest.approx(0.183301, abs=1e-6)
        assert compute_zeta_star(m2) == 2.0
        assert compute_zeta_min(m2) == 1.0

    def test_constant_response(self):
        model = validate(_spec(basis=[[0.7, 0.7]]))
        assert compute_C1(model) == 0.0
        assert compute_C2(model) == 0.0
        assert compute_M(model) == 0.0

    def test_single_product_equal_exponents(self):
        model = validate(_spec(zeta=[[1.5]], rewards=[1.0]))
        assert compute_zeta_star(model) == compute_zeta_min(model) == 1.5

    def test_all_zero_exponents(self):
        model = validate(_spec(zeta=[[0.0], [0.0]]))
        assert compute_zeta_star(model) == 0.0


class TestScalabilityCaps:
    def test_m2(self, m2):
        caps = scalability_caps(m2)
        # 1 / (e ln 1.25)
        assert caps.c1_cap == pytest.approx(1.648622, abs=1e-6)
        assert caps.c2_cap == pytest.approx(math.log(2), abs=1e-15)
        assert caps.zeta_star_cap == pytest.approx(math.log(4) / math.log(1.25), abs=1e-12)
        assert caps.zeta_star_cap == pytest.approx(6.2126, abs=1e-4)
        assert compute_zeta_star(m2) <= caps.zeta_star_cap

    def test_inapplicable_when_alpha_is_one(self):
        model = build_noisy_or(NoisyOrSpec(n_features=1, baselines=[0.5], zeta=[[1.0]], rewards=[1.0], beta=0.9))
        caps = scalability_caps(model)
        assert caps.c1_cap is None and caps.zeta_star_cap is None
        assert caps.c2_cap == pytest.approx(math.log(2))

    def test_inapplicable_when_zeta_min_zero(self):
        model = validate(_spec(zeta=[[0.0], [2.0]]))
        assert scalability_caps(model).c1_cap is None

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2**31), S=st.integers(2, 8), K=st.integers(1, 4), U=st.integers(1, 5))
    def test_caps_hold_on_random_models(self, seed, S, K, U):
        rng = np.random.default_rng(seed)
        model = random_model(rng, S, K, U, basis_low=0.1)
        caps = scalability_caps(model)
        assert compute_C1(model) >= 0 and compute_C2(model) >= 0
        assert compute_M(model) == compute_C1(model) * compute_C2(model)
        if caps.c1_cap is not None:
            assert compute_C1(model) <= caps.c1_cap + 1e-12
        assert compute_C2(model) <= caps.c2_cap + 1e-12
        if caps.zeta_star_cap is not None:
            assert compute_zeta_star(model) <= caps.zeta_star_cap * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31), S=st.integers(1, 10), K=st.integers(1, 4), U=st.integers(1, 5))
def test_log_response_reconstruction(seed, S, K, U):
    model = random_model(np.random.default_rng(seed), S, K, U)
    for u in range(U):
        for x in range(S):
            q = response_prob(model, u, x)
            assert 0 < q <= 1
            assert math.log(q) == pytest.approx(float(np.dot(model.zeta[u], np.log(model.basis[:, x]))), abs=1e-12)


def test_model_hash_is_content_based():
    a, b = make_m2(), make_m2()
    assert model_hash(a) == model_hash(b)
    c = validate(_spec(beta=0.8))
    assert model_hash(a) != model_hash(c)
