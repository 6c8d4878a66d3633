"""L2-regularized empirical risk L(w) = lam/2 ||w||^2 + (1/n) sum psi(y_i w.x_i)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DimensionMismatch
from .losses import LossSpec
from .sparse import HessianOperator


@dataclass(frozen=True)
class Objective:
    """Bundle of dataset, regularization strength and loss.

    Evaluation is a pure function of (w, immutable dataset); independent runs
    may share an instance freely. lam = 0 is allowed for plain gradient
    evaluations, the Newton solver requires lam > 0.
    """

    dataset: Dataset
    lam: float
    loss: LossSpec

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValueError("lam must be nonnegative")
        if self.dataset.n == 0:
            raise ValueError("dataset must be nonempty")

    @property
    def dim(self) -> int:
        return self.dataset.features.n_cols

    def _check(self, w):
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.dim,):
            raise DimensionMismatch(f"expected weight vector of length {self.dim}, got {w.shape}")
        return w

    def margins(self, w) -> np.ndarray:
        """y_i * w.x_i for every instance."""
        w = self._check(w)
        return self.dataset.labels * self.dataset.features.matvec(w)

    def value(self, w) -> float:
        w = self._check(w)
        m = self.margins(w)
        # divide before summing so saturated (but finite) exponential losses
        # cannot overflow the accumulator
        mean_loss = float(np.sum(self.loss.eval(m) / self.dataset.n))
        return 0.5 * self.lam * float(w @ w) + mean_loss

    def gradient(self, w) -> np.ndarray:
        """lam*w + (1/n) X^T (psi'(m_i) y_i); raises NonDifferentiable for the hinge."""
        w = self._check(w)
        m = self.margins(w)
        r = self.loss.grad(m) * self.dataset.labels
        return self.lam * w + self.dataset.features.transpose_matvec(r) / self.dataset.n

    def hessian_diagonal(self, w) -> np.ndarray:
        """d_i = psi''(y_i w.x_i); the label squares away."""
        w = self._check(w)
        return np.asarray(self.loss.curvature(self.margins(w)), dtype=np.float64)

    def hessian_operator(self, w) -> HessianOperator:
        return HessianOperator(self.lam, self.dataset.features, self.hessian_diagonal(w))
