import numpy as np
import pytest

from smoothsvm import (GeneratorPair, InvalidGenerator, Unsupported, from_generator,
                       generator_from_loss, make_loss)
from smoothsvm.losses import std_normal_cdf, std_normal_pdf, std_normal_quantile

GRID = np.linspace(-6, 6, 241)


def normal_pair():
    return GeneratorPair(phi_cap=std_normal_cdf, phi_low=std_normal_pdf,
                         phi_cap_deriv=std_normal_pdf)


def exponential_pair():
    return GeneratorPair(
        phi_cap=lambda v: np.exp(np.asarray(v, dtype=float)),
        phi_low=lambda v: (1.0 - np.asarray(v, dtype=float)) * np.exp(np.asarray(v, dtype=float)),
        phi_cap_deriv=lambda v: np.exp(np.asarray(v, dtype=float)),
    )


class TestFromGenerator:
    def test_normal_pair_matches_gauss_hinge(self):
        custom = from_generator(normal_pair(), theta=1.0, sigma=1.0)
        reference = make_loss("smooth-hinge-g", theta=1, sigma=1)
        alphas = np.linspace(-6, 6, 121)
        assert np.allclose(custom.eval(alphas), reference.eval(alphas), atol=1e-12, rtol=0)
        assert np.allclose(custom.grad(alphas), reference.grad(alphas), atol=1e-12, rtol=0)
        assert np.allclose(custom.curvature(alphas), reference.curvature(alphas), atol=1e-12, rtol=0)

    def test_exponential_pair(self):
        custom = from_generator(exponential_pair(), theta=0.0, sigma=1.0)
        reference = make_loss("exponential", theta=0, sigma=1)
        alphas = np.linspace(-3, 5, 81)
        assert np.allclose(custom.eval(alphas), reference.eval(alphas), atol=1e-10, rtol=0)

    def test_monotonicity_violation(self):
        bad = GeneratorPair(phi_cap=lambda v: -np.asarray(v, dtype=float),
                            phi_low=lambda v: 0.5 * np.asarray(v, dtype=float) ** 2,
                            phi_cap_deriv=lambda v: np.full_like(np.asarray(v, dtype=float), -1.0))
        with pytest.raises(InvalidGenerator):
            from_generator(bad, theta=1.0, sigma=1.0)

    def test_identity_violation(self):
        # cap of the normal pair with a low term that breaks cap'*v + low' = 0
        bad = GeneratorPair(phi_cap=std_normal_cdf,
                            phi_low=lambda v: np.asarray(v, dtype=float) ** 2,
                            phi_cap_deriv=std_normal_pdf)
        with pytest.raises(InvalidGenerator):
            from_generator(bad, theta=1.0, sigma=1.0)

    def test_conjugate_via_bracket(self):
        custom = from_generator(normal_pair(), theta=1.0, sigma=1.0,
                                inverse_bracket=(-12.0, 12.0))
        reference = make_loss("smooth-hinge-g", theta=1, sigma=1)
        for beta in (-0.9, -0.5, -0.1):
            assert custom.conjugate(beta) == pytest.approx(reference.conjugate(beta), abs=1e-10)

    def test_conjugate_via_inverse(self):
        custom = from_generator(normal_pair(), theta=1.0, sigma=2.0,
                                cap_inverse=std_normal_quantile)
        reference = make_loss("smooth-hinge-g", theta=1, sigma=2)
        for beta in (-0.7, -0.25):
            assert custom.conjugate(beta) == pytest.approx(reference.conjugate(beta), abs=1e-10)

    def test_conjugate_without_inverse_fails_cleanly(self):
        custom = from_generator(normal_pair(), theta=1.0, sigma=1.0)
        with pytest.raises(Unsupported):
            custom.conjugate(-0.5)

    def test_custom_curvature_bounds(self):
        custom = from_generator(normal_pair(), theta=1.0, sigma=1.0)
        cert = custom.curvature_bounds()
        assert cert.gamma_lower == pytest.approx(0.0, abs=1e-12)
        assert cert.mu_upper == pytest.approx(float(std_normal_pdf(0.0)), abs=1e-9)


class TestGeneratorFromLoss:
    def test_recovers_logistic_rate(self):
        loss = make_loss("logistic", theta=0, sigma=1)
        gen = generator_from_loss(loss.eval, loss.grad, theta=0.0, sigma=1.0)
        v = np.linspace(-6, 6, 121)
        expected = np.exp(v) / (1.0 + np.exp(v))
        assert np.allclose(gen.phi_cap(v), expected, atol=1e-10, rtol=0)

    def test_least_squares_cap_is_linear(self):
        for sigma in (1.0, 2.5):
            loss = make_loss("least-squares", theta=1, sigma=sigma)
            gen = generator_from_loss(loss.eval, loss.grad, theta=1.0, sigma=sigma)
            v = np.linspace(-4, 4, 41)
            assert np.allclose(gen.phi_cap(v), sigma * v, atol=1e-12, rtol=0)

    def test_round_trip_algebraic_hinge(self):
        loss = make_loss("smooth-hinge-m", theta=1, sigma=1)
        gen = generator_from_loss(loss.eval, loss.grad, theta=1.0, sigma=1.0)
        rebuilt = from_generator(gen, theta=1.0, sigma=1.0)
        alphas = np.linspace(-6, 6, 121)
        assert np.allclose(rebuilt.eval(alphas), loss.eval(alphas), atol=1e-12, rtol=0)
        assert np.allclose(rebuilt.grad(alphas), loss.grad(alphas), atol=1e-12, rtol=0)

    def test_round_trip_gauss_hinge_other_parameters(self):
        loss = make_loss("smooth-hinge-g", theta=2.0, sigma=0.5)
        gen = generator_from_loss(loss.eval, loss.grad, theta=2.0, sigma=0.5)
        rebuilt = from_generator(gen, theta=2.0, sigma=0.5)
        alphas = np.linspace(-4, 6, 101)
        assert np.allclose(rebuilt.eval(alphas), loss.eval(alphas), atol=1e-12, rtol=0)
