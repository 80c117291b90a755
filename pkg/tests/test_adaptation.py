"""Online moment estimators, truncation schedule, and the step controller."""

import numpy as np
import pytest

from fsmcmc.adaptation import AdaptState, apply_truncation, tune_beta, update_moments
from fsmcmc.gaussian import DiagonalScaling, equivalence_diagnostic
from fsmcmc.kernels import KernelConfig, evaluate_state, make_kernel
from fsmcmc.models import GaussianLikelihoodModel
from fsmcmc.gaussian import DenseBasis, SpectralCovariance


class TestMomentUpdates:
    def test_first_update_degenerate_variance(self):
        adapt = AdaptState.initial(3)
        z = np.array([0.5, -1.0, 2.0])
        adapt = update_moments(adapt, z)
        assert np.array_equal(adapt.m_hat, z)
        assert np.all(adapt.d_hat == adapt.d_min)
        assert adapt.j == 1

    def test_constant_stream(self):
        adapt = AdaptState.initial(2)
        z = np.array([1.5, -0.5])
        for _ in range(1000):
            adapt = update_moments(adapt, z)
        assert np.allclose(adapt.m_hat, z, atol=1e-9)
        assert np.all(adapt.d_hat == adapt.d_min)

    def test_iid_stream_law_of_large_numbers(self):
        rng = np.random.default_rng(0)
        mu, tau = 0.8, 1.7
        adapt = AdaptState.initial(1)
        n = 100_000
        for _ in range(n):
            adapt = update_moments(adapt, np.array([rng.normal(mu, tau)]))
        assert abs(adapt.m_hat[0] - mu) < 4 * tau / np.sqrt(n)
        assert abs(adapt.d_hat[0] - tau**2) / tau**2 < 0.10

    def test_frozen_state_unchanged(self):
        adapt = AdaptState.initial(2)
        adapt = update_moments(adapt, np.ones(2))
        frozen = AdaptState(**{**adapt.__dict__, "frozen": True})
        after = update_moments(frozen, np.full(2, 9.0))
        assert np.array_equal(after.m_hat, frozen.m_hat)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            update_moments(AdaptState.initial(3), np.zeros(2))


class TestTruncation:
    def run_updates(self, adapt, n, rng):
        for _ in range(n):
            adapt = update_moments(adapt, rng.standard_normal(adapt.dim))
            adapt = apply_truncation(adapt)
        return adapt

    def test_schedule_advances_every_thousand(self):
        rng = np.random.default_rng(1)
        adapt = AdaptState.initial(64, n0=5)
        adapt = self.run_updates(adapt, 999, rng)
        assert adapt.n_trunc == 5
        adapt = update_moments(adapt, rng.standard_normal(64))
        adapt = apply_truncation(adapt)
        assert adapt.n_trunc == 10

    def test_tails_pinned(self):
        rng = np.random.default_rng(2)
        adapt = AdaptState.initial(12, n0=4)
        adapt = self.run_updates(adapt, 50, rng)
        assert np.all(adapt.m_hat[4:] == 0.0)
        assert np.all(adapt.d_hat[4:] == 1.0)
        assert np.any(adapt.m_hat[:4] != 0.0)

    def test_truncation_capped_at_dim(self):
        rng = np.random.default_rng(3)
        adapt = AdaptState.initial(6, n0=5)
        adapt = self.run_updates(adapt, 2000, rng)
        assert adapt.n_trunc == 6

    def test_untruncated_flag_keeps_everything(self):
        rng = np.random.default_rng(4)
        adapt = AdaptState.initial(12, n0=4, untruncated=True)
        adapt = self.run_updates(adapt, 50, rng)
        assert np.any(adapt.m_hat[4:] != 0.0)

    def test_equivalence_diagnostic_head_only(self):
        rng = np.random.default_rng(5)
        adapt = AdaptState.initial(20, n0=6)
        adapt = self.run_updates(adapt, 200, rng)
        full = equivalence_diagnostic(DiagonalScaling(adapt.d_hat))
        head = float(np.sum((adapt.d_hat[:6] - 1.0) ** 2))
        assert np.isclose(full, head)
        assert np.isfinite(full)

    def test_monotone_window(self):
        rng = np.random.default_rng(6)
        adapt = AdaptState.initial(64, n0=5)
        last = adapt.n_trunc
        for _ in range(3000):
            adapt = update_moments(adapt, rng.standard_normal(64))
            adapt = apply_truncation(adapt)
            assert adapt.n_trunc >= last
            last = adapt.n_trunc


class TestController:
    def test_on_target_acceptance_fixed_point(self):
        # zero innovation when the indicator matches the target exactly
        always = AdaptState.initial(1, beta=0.4, target_accept=1.0)
        assert tune_beta(always, True).beta == always.beta
        never = AdaptState.initial(1, beta=0.4, target_accept=0.0)
        assert tune_beta(never, False).beta == never.beta

    def test_acceptance_moves_beta_monotonically(self):
        adapt = AdaptState.initial(1, beta=0.4, target_accept=0.5)
        adapt = update_moments(adapt, np.zeros(1))
        assert tune_beta(adapt, True).beta > adapt.beta > tune_beta(adapt, False).beta

    def test_frozen_beta_bit_identical(self):
        adapt = AdaptState.initial(1, beta=0.37)
        frozen = AdaptState(**{**adapt.__dict__, "frozen": True})
        for accepted in (True, False, True):
            after = tune_beta(frozen, accepted)
            assert after.beta == frozen.beta

    def test_beta_stays_in_bounds(self):
        adapt = AdaptState.initial(1, beta=0.9, target_accept=0.2)
        for _ in range(5000):
            adapt = update_moments(adapt, np.zeros(1))
            adapt = tune_beta(adapt, True)
        assert adapt.beta <= 1.0

    def test_delta_scale_controller(self):
        adapt = AdaptState.initial(1, beta=1.0, scale_kind="delta")
        up = tune_beta(adapt, True)
        assert up.beta > 1.0  # delta is unbounded above

    def test_diminishing_adaptation(self):
        # moment estimates move O(1/j); the controller moves at its own gain
        # j^-0.7 exactly (logistic slope <= 1/4, innovation magnitude <= 1)
        rng = np.random.default_rng(8)
        adapt = AdaptState.initial(8, beta=0.5, target_accept=0.3)
        moment_scaled = []
        for j in range(1, 20_001):
            prev_m, prev_d, prev_beta = adapt.m_hat, adapt.d_hat, adapt.beta
            adapt = update_moments(adapt, rng.standard_normal(8))
            adapt = apply_truncation(adapt)
            adapt = tune_beta(adapt, bool(rng.uniform() < 0.3))
            assert abs(adapt.beta - prev_beta) <= j ** (-0.7)
            moment_scaled.append(j * max(np.max(np.abs(adapt.m_hat - prev_m)),
                                         np.max(np.abs(adapt.d_hat - prev_d))))
        fitted = 1.5 * max(moment_scaled[:1000])
        assert max(moment_scaled[1000:]) <= fitted

    def test_controller_converges_on_gaussian_target(self):
        # plain contraction kernel on a 1-d conjugate target: realised
        # acceptance settles near the requested rate
        prior = SpectralCovariance(DenseBasis(np.eye(1)), np.array([1.0]))
        model = GaussianLikelihoodModel(prior, y=np.array([2.0]), noise=0.3)
        cfg = KernelConfig(kind="pcn", beta=0.5)
        kernel = make_kernel(cfg, model)
        adapt = AdaptState.initial(1, beta=0.5, target_accept=0.2)
        rng = np.random.default_rng(7)
        state = evaluate_state(np.zeros(1), model, False)
        accepted_tail = 0
        n, tail_start = 50_000, 25_000
        for i in range(n):
            cfg.beta = adapt.beta
            out = kernel.step(state, rng)
            state = out.new_state
            adapt = update_moments(adapt, state.z)
            adapt = tune_beta(adapt, out.accepted)
            if i >= tail_start:
                accepted_tail += out.accepted
        rate = accepted_tail / (n - tail_start)
        assert abs(rate - 0.2) < 0.05
