"""Depth-3 builders: reference curves, the exact network, generic assembly."""

import numpy as np
import pytest

from depthsep import DenseNetwork, build_instance, eval_f_batch, sample_a4d
from depthsep.depth3 import (
    Approx1DSpec,
    and_gadget,
    build_exact_relu,
    build_generic,
    parity_wave,
    reference_g1,
    reference_g2,
    relu_1d_approximator,
)
from depthsep.harness import measure_sup_error
from depthsep.threshold import threshold_1d_approximator


class TestReferenceCurves:
    def test_clamp_values(self):
        assert reference_g1(4.0) == 0.0
        assert reference_g1(5.5) == 0.5
        assert reference_g1(7.0) == 1.0

    def test_wave_values(self):
        assert reference_g2(0.3) == pytest.approx(0.3)
        assert reference_g2(1.3) == pytest.approx(0.7)
        for k in (-4, -2, 0, 2, 6):
            assert reference_g2(float(k)) == 0.0

    def test_wave_is_1_lipschitz(self):
        z = np.linspace(-9, 9, 20_001)
        g = reference_g2(z)
        assert np.abs(np.diff(g)).max() <= np.diff(z)[0] + 1e-12

    def test_parity_wave_hits_parity_at_integers(self):
        for d in (1, 2, 3, 4, 6):
            z = np.arange(d + 1.0)
            np.testing.assert_allclose(parity_wave(d, z), z % 2, atol=1e-12)

    def test_parity_wave_worked_values(self):
        assert parity_wave(3, 0.0) == 0.0
        assert parity_wave(3, 1.0) == 1.0
        assert parity_wave(3, 2.0) == 0.0
        assert parity_wave(3, 3.0) == 1.0

    def test_and_gadget(self):
        assert and_gadget(0.8, 0.8) == pytest.approx(1.0)  # 1.4 - 0.4
        assert and_gadget(0.8, 0.1) == pytest.approx(0.0)
        assert and_gadget(0.2, 0.15) == pytest.approx(0.0)
        # agrees with AND of rounded bits on the support-scale region
        for u in (0.0, 0.2, 0.25, 0.75, 0.9, 1.0):
            for v in (0.0, 0.1, 0.25, 0.75, 0.8, 1.0):
                assert and_gadget(u, v) == pytest.approx(round(u) * round(v))


class TestExactNetwork:
    def test_widths_and_depth(self):
        for d in (1, 2, 5):
            net = build_exact_relu(d)
            assert net.depth == 3
            assert net.widths == (2 * d, d + 1)
            assert net.input_dim == 4 * d

    def test_first_layer_weight_scale(self):
        for d in (1, 4):
            net = build_exact_relu(d)
            W1 = net.hidden[0][0]
            assert np.abs(W1).max() == pytest.approx(12 * np.sqrt(d))

    def test_exact_on_centers(self):
        for d in (1, 2, 3, 4):
            spec = build_instance(d, seed=50 + d)
            net = build_exact_relu(d)
            centers = spec.centers()
            err = np.abs(net.evaluate_batch(centers) - eval_f_batch(d, centers)).max()
            assert err <= 1e-9

    def test_exact_on_samples(self):
        for d in (1, 2):
            spec = build_instance(d, seed=60 + d)
            net = build_exact_relu(d)
            batch = sample_a4d(spec, 20_000, seed=3)
            err = np.abs(net.evaluate_batch(batch.points) - batch.labels).max()
            assert err <= 1e-9

    def test_oracle_detects_weight_corruption(self):
        """Sensitivity guard: a small weight perturbation must blow the
        1e-9 agreement, so the exactness checks cannot pass vacuously."""
        d = 2
        spec = build_instance(d, seed=64)
        net = build_exact_relu(d)
        W1 = net.hidden[0][0].copy()
        W1[0, 2 * d] += 1e-3
        corrupted = DenseNetwork(
            net.input_dim,
            ((W1, net.hidden[0][1].copy()), net.hidden[1]),
            net.out_w.copy(),
            net.out_b,
            net.activation,
        )
        centers = spec.centers()
        err = np.abs(corrupted.evaluate_batch(centers) - eval_f_batch(d, centers)).max()
        assert err > 1e-9

    def test_constant_within_components(self):
        spec = build_instance(2, seed=62)
        net = build_exact_relu(2)
        batch = sample_a4d(spec, 16_000, seed=4)
        outs = net.evaluate_batch(batch.points)
        for i in range(16):
            vals = outs[batch.component_index == i]
            assert vals.size > 100
            assert vals.var() <= 1e-18


class TestReluApproximator:
    def test_linear_target_single_knot(self):
        spec = Approx1DSpec(lambda z: np.asarray(z), 0.0, 1.0, 1.0, 1.0)
        net = relu_1d_approximator(spec)
        assert net.widths == (1,)
        xs = np.linspace(0, 1, 101)
        err = np.abs(net.evaluate_batch(xs[:, None]) - xs).max()
        assert err <= 1e-12  # linear targets are represented exactly

    def test_clamp_certified(self):
        spec = Approx1DSpec(reference_g1, -8.0, 8.0, 1.0, 0.05)
        net = relu_1d_approximator(spec)
        xs = np.linspace(-8, 8, 10_000)
        err = np.abs(net.evaluate_batch(xs[:, None]) - reference_g1(xs)).max()
        assert err <= 0.05

    def test_wave_certified(self):
        spec = Approx1DSpec(reference_g2, -3.0, 3.0, 1.0, 0.25)
        net = relu_1d_approximator(spec)
        xs = np.linspace(-3, 3, 10_000)
        err = np.abs(net.evaluate_batch(xs[:, None]) - reference_g2(xs)).max()
        assert err <= 0.25

    def test_clamp_nonaligned_spacing(self):
        # knot spacing 0.07 leaves the ramp corners off-grid, so the
        # interpolant carries real (but certified) error
        spec = Approx1DSpec(reference_g1, 0.0, 8.0, 1.0, 0.07)
        net = relu_1d_approximator(spec)
        xs = np.linspace(0, 8, 40_001)
        errs = np.abs(net.evaluate_batch(xs[:, None]) - reference_g1(xs))
        assert 0 < errs.max() <= 0.07

    def test_smooth_target(self):
        spec = Approx1DSpec(np.sin, -3.0, 3.0, 1.0, 0.05)
        net = relu_1d_approximator(spec)
        xs = np.linspace(-3, 3, 20_000)
        errs = np.abs(net.evaluate_batch(xs[:, None]) - np.sin(xs))
        assert 0 < errs.max() <= 0.05

    def test_scalar_bounds(self):
        spec = Approx1DSpec(reference_g1, -8.0, 8.0, 1.0, 0.05)
        net = relu_1d_approximator(spec)
        assert net.widths[0] <= 2 * 8 * 1 / 0.05 + 2
        assert np.abs(net.out_w).max() <= 2.0 + 1e-12  # slope increments
        assert np.abs(net.hidden[0][1]).max() <= 8.0 + 1e-12  # knots

    def test_rejects_bad_accuracy(self):
        with pytest.raises(ValueError):
            Approx1DSpec(reference_g1, -1.0, 1.0, 1.0, 0.0)


class TestGenericBuilder:
    def test_large_eps_constant_half(self, spec_d1):
        report = build_generic(1, 0.6)
        assert report.constant
        batch = sample_a4d(spec_d1, 2000, seed=5)
        outs = report.net.evaluate_batch(batch.points)
        assert np.all(outs == 0.5)
        assert np.abs(outs - batch.labels).max() <= 0.5

    def test_relu_certificate_d1(self, spec_d1):
        report = build_generic(1, 0.1)
        err = measure_sup_error(report.net, spec_d1, 50_000, seed=6)
        assert err <= 0.1

    def test_width_accounting(self):
        for d, eps in [(1, 0.5), (2, 0.1), (2, 0.05)]:
            report = build_generic(d, eps)
            assert report.widths[0] <= 40 * d * d / eps
            assert report.widths[1] <= 40 * d / eps
            assert report.max_weights[1] <= 40 * d / eps**2

    def test_monotone_width_growth(self):
        w_coarse = build_generic(2, 0.2).widths[0]
        w_fine = build_generic(2, 0.1).widths[0]
        assert w_coarse <= w_fine <= 2 * w_coarse + 4

    def test_threshold_approximator_variant(self, spec_d1):
        report = build_generic(1, 0.2, threshold_1d_approximator)
        assert report.net.activation.tag == "threshold"
        assert report.net.depth == 3
        err = measure_sup_error(report.net, spec_d1, 20_000, seed=7)
        assert err <= 0.2

    def test_certificate_record(self):
        report = build_generic(1, 0.25)
        doc = report.certificate(measured_sup_error=0.01)
        assert doc["d"] == 1
        assert doc["eps"] == 0.25
        assert doc["measured_sup_error"] == 0.01
        assert len(doc["widths"]) == 2

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            build_generic(0, 0.1)
        with pytest.raises(ValueError):
            build_generic(1, -0.5)
