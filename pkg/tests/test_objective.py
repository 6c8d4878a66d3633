import math

import numpy as np
import pytest

from oracles import central_diff, dense_objective_hessian, random_csr_problem
from smoothsvm import (CsrMatrix, Dataset, DimensionMismatch, NonDifferentiable,
                       Objective, make_loss, synthetic_dataset)


def single_instance():
    return Dataset(CsrMatrix.from_dense([[1.0]]), np.array([1]))


def random_objective(rng, name="smooth-hinge-m", sigma=1.0, n=12, p=7):
    dense, m = random_csr_problem(rng, n, p, density=0.5)
    labels = np.where(rng.random(n) < 0.5, 1, -1)
    lam = float(rng.random()) * 0.5 + 0.05
    return Objective(Dataset(m, labels), lam, make_loss(name, sigma=sigma))


class TestValue:
    def test_zero_weights_algebraic_hinge(self, benchmark):
        dataset, _ = benchmark
        obj = Objective(dataset, 0.123, make_loss("smooth-hinge-m", theta=1, sigma=1))
        assert obj.value(np.zeros(dataset.p)) == pytest.approx((1 + math.sqrt(2)) / 2, abs=1e-12)

    def test_zero_weights_hinge(self, benchmark):
        dataset, _ = benchmark
        obj = Objective(dataset, 1.0, make_loss("hinge"))
        assert obj.value(np.zeros(dataset.p)) == pytest.approx(1.0, abs=1e-12)

    def test_single_instance_regularizer(self):
        obj = Objective(single_instance(), 1.0, make_loss("hinge"))
        assert obj.value(np.array([1.0])) == pytest.approx(0.5, abs=1e-15)

    def test_dimension_mismatch(self):
        obj = Objective(single_instance(), 1.0, make_loss("hinge"))
        with pytest.raises(DimensionMismatch):
            obj.value(np.zeros(3))


class TestGradient:
    def test_zero_weights_common_factor(self):
        rng = np.random.default_rng(0)
        obj = random_objective(rng, "smooth-hinge-g", sigma=0.5)
        loss = obj.loss
        dense = obj.dataset.features.to_dense()
        rate0 = -loss.grad(0.0)  # cap(theta/sigma)
        expected = -rate0 * (obj.dataset.labels @ dense) / obj.dataset.n
        got = obj.gradient(np.zeros(obj.dim))
        assert np.allclose(got, expected, atol=1e-14, rtol=0)

    def test_single_instance_example(self):
        obj = Objective(single_instance(), 0.0, make_loss("smooth-hinge-m", sigma=1))
        got = obj.gradient(np.zeros(1))
        expected = -(1 + 1 / math.sqrt(2)) / 2
        assert got[0] == pytest.approx(expected, abs=1e-12)

    def test_hinge_rejected(self):
        obj = Objective(single_instance(), 1.0, make_loss("hinge"))
        with pytest.raises(NonDifferentiable):
            obj.gradient(np.zeros(1))

    def test_finite_difference_oracle(self):
        # 50 random (w, dataset) pairs across a few families
        rng = np.random.default_rng(42)
        names = ["smooth-hinge-m", "smooth-hinge-g", "logistic", "least-squares", "sq-hinge"]
        for trial in range(50):
            obj = random_objective(rng, names[trial % len(names)])
            w = rng.standard_normal(obj.dim)
            g = obj.gradient(w)
            for j in range(obj.dim):
                def partial(t, j=j):
                    if np.ndim(t) == 0:
                        wj = w.copy(); wj[j] = t
                        return obj.value(wj)
                    return np.array([partial(ti, j) for ti in t])
                fd = central_diff(partial, w[j])
                assert abs(g[j] - fd) <= 1e-6 * max(1.0, abs(g[j]))


class TestHessianDiagonal:
    def test_margins_at_theta(self):
        # all margins equal theta: d_i = cap'(0)/sigma, 1/(2 sigma) for the algebraic hinge
        sigma = 0.5
        dataset = Dataset(CsrMatrix.from_dense([[1.0], [1.0]]), np.array([1, 1]))
        obj = Objective(dataset, 1.0, make_loss("smooth-hinge-m", theta=1, sigma=sigma))
        d = obj.hessian_diagonal(np.array([1.0]))
        assert np.allclose(d, 1.0 / (2.0 * sigma), atol=1e-14, rtol=0)

    def test_least_squares_all_ones(self):
        rng = np.random.default_rng(1)
        obj = random_objective(rng, "least-squares")
        d = obj.hessian_diagonal(rng.standard_normal(obj.dim))
        assert np.array_equal(d, np.ones(obj.dataset.n))

    def test_dense_hessian_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            obj = random_objective(rng, "smooth-hinge-m", n=20, p=10)
            w = rng.standard_normal(10)
            op = obj.hessian_operator(w)
            h = dense_objective_hessian(obj, w)
            for _ in range(3):
                s = rng.standard_normal(10)
                got = __import__("smoothsvm").hessian_vector_product(op, s)
                want = h @ s
                assert np.allclose(got, want, atol=1e-10 * max(1.0, np.abs(want).max()), rtol=1e-10)

    def test_nonnegative(self):
        rng = np.random.default_rng(21)
        for name in ("smooth-hinge-g", "logistic", "sq-hinge", "shalev-gamma"):
            obj = random_objective(rng, name)
            d = obj.hessian_diagonal(rng.standard_normal(obj.dim))
            assert d.min() >= 0.0


class TestConstruction:
    def test_lambda_zero_allowed_for_gradients(self):
        obj = Objective(single_instance(), 0.0, make_loss("logistic"))
        assert np.isfinite(obj.gradient(np.zeros(1))).all()

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValueError):
            Objective(single_instance(), -1.0, make_loss("logistic"))

    def test_exponential_saturation_guard(self, benchmark):
        dataset, _ = benchmark
        obj = Objective(dataset, 1e-3, make_loss("exponential", sigma=1.0))
        w = np.full(dataset.p, -1e4)  # margins hugely negative: exp would overflow
        assert np.isfinite(obj.value(w))
