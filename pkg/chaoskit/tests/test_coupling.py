import numpy as np
import pytest

from chaoskit.core.exceptions import DomainError
from chaoskit.models.ensemble import MeasureFlow
from chaoskit.schemas.experiment import CouplingSettings, ExperimentConfig
from chaoskit.schemas.model import ModelDocument
from chaoskit.schemas.simulation import SimConfig
from chaoskit.services.coupling_service import (
    merge_threshold, reflect, simulate_reflection_coupling, smoothing_weights,
)
from chaoskit.services.experiment_service import coupling_experiment

ORIGIN = MeasureFlow.frozen([0.0])


class TestReflection:
    """Reflection matrix and smoothing weights"""

    def test_reflection_is_involutive_and_orthogonal(self, rng):
        u = rng.standard_normal((50, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        v = rng.standard_normal((50, 3))
        np.testing.assert_allclose(reflect(u, reflect(u, v)), v, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(reflect(u, v), axis=1), np.linalg.norm(v, axis=1), rtol=1e-12)

    def test_one_dimensional_reflection_negates(self):
        assert reflect(np.array([[1.0]]), np.array([[0.3]])).tolist() == [[-0.3]]

    def test_smoothing_weights(self):
        pi_r, pi_s = smoothing_weights(np.array([0.0, 0.25, 0.75, 1.0, 2.0]), 1.0)
        np.testing.assert_allclose(pi_r, [0.0, 0.0, 0.5, 1.0, 1.0])
        np.testing.assert_allclose(pi_r ** 2 + pi_s ** 2, 1.0)

    def test_merge_threshold_scales_with_step(self):
        assert merge_threshold(1.0, 1e-2, 1, factor=10.0) == pytest.approx(1.0)
        assert merge_threshold(2.0, 1e-2, 2, factor=1.0) == pytest.approx(0.2)


class TestCouplingTrace:
    """Coupled decoupled SDEs"""

    SIM = SimConfig(dt=0.01, T=1.0, seed=5, replicas=300, output_every=10)

    def test_equal_starts_merge_immediately(self, ou_model):
        trace = simulate_reflection_coupling(ou_model, ORIGIN, 0.5, 0.5, self.SIM)
        assert np.all(trace.tau == 0.0)
        assert np.array_equal(trace.x_tilde, trace.x_hat)
        mean, stderr = trace.mean_f()
        assert np.all(mean == 0.0)
        assert np.all(trace.fraction_merged() == 1.0)

    def test_merged_pairs_stay_together(self, ou_model):
        trace = simulate_reflection_coupling(ou_model, ORIGIN, 1.0, -1.0, self.SIM)
        assert trace.merged.any()
        for replica in np.flatnonzero(trace.merged):
            after = trace.times >= trace.tau[replica] - 1e-12
            assert np.all(trace.z_norm[after, replica] == 0.0)
        assert np.all(np.diff(trace.fraction_merged()) >= 0)
        assert trace.survivors()[0] == self.SIM.replicas

    def test_smoothed_variant_never_merges(self, ou_model):
        trace = simulate_reflection_coupling(ou_model, ORIGIN, 1.0, -1.0, self.SIM, epsilon=0.2)
        assert not trace.merged.any()
        assert trace.smoothed

    def test_first_leg_matches_uncoupled_noise_scale(self, brownian_model):
        """The first leg is plain Brownian motion: variance t at the horizon"""
        sim = SimConfig(dt=0.01, T=1.0, seed=8, replicas=4000, output_every=100)
        trace = simulate_reflection_coupling(brownian_model, ORIGIN, 0.0, 3.0, sim, merge_factor=0.1)
        final = trace.x_tilde[-1, :, 0]
        assert abs(final.mean()) < 4.0 * np.sqrt(1.0 / 4000)
        assert final.var() == pytest.approx(1.0, rel=0.1)

    def test_deterministic_across_threads(self, interacting_model):
        flow = MeasureFlow.frozen(np.linspace(-1.0, 1.0, 8))
        one = simulate_reflection_coupling(interacting_model, flow, 1.0, -1.0, self.SIM, threads=1)
        many = simulate_reflection_coupling(interacting_model, flow, 1.0, -1.0, self.SIM, threads=3)
        assert np.array_equal(one.f_z, many.f_z)
        assert np.array_equal(one.tau, many.tau)

    def test_negative_epsilon(self, ou_model):
        with pytest.raises(DomainError):
            simulate_reflection_coupling(ou_model, ORIGIN, 1.0, -1.0, self.SIM, epsilon=-0.1)


def ou_coupling_config(**overrides) -> ExperimentConfig:
    document = ModelDocument(family="linear", params={"a": 1.0})
    settings = dict(
        kind="couple", model=document, T=5.0, dt=1e-3, output_every=100, M=10000, N=[1], N_ref=1, seed=3,
        coupling=CouplingSettings(ks=False),
    )
    settings.update(overrides)
    return ExperimentConfig(**settings)


@pytest.mark.slow
class TestCouplingContraction:
    """Exponential contraction of E f(|Z_t|) for the OU model"""

    def test_rate_and_envelope(self, ou_model):
        outcome = coupling_experiment(ou_model, ou_coupling_config(), threads=4)
        assert outcome.report["lambda0"] == pytest.approx(1.0, rel=1e-6)
        assert outcome.report["envelope_ok"]
        assert outcome.report["rate"] >= 0.9
        assert outcome.passed

    def test_marginals_preserved(self, ou_model):
        cfg = ou_coupling_config(
            T=2.0, dt=1e-2, output_every=10, M=2000,
            coupling=CouplingSettings(ks=True, merge_factor=0.1),
        )
        outcome = coupling_experiment(ou_model, cfg, threads=4)
        assert len(outcome.report["ks"]) == 6
        assert all(item["ok"] for item in outcome.report["ks"])
