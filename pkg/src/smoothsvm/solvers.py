"""Training algorithms: trust-region Newton (with a Steihaug-style conjugate
gradient subproblem solver), full gradient descent, stochastic gradient
descent, and the pegasos stochastic subgradient method for the plain hinge.

The Newton solver starts from w = 0 with initial radius ||grad L(0)||, solves
min <g, s> + 1/2 s^T H s subject to ||s|| <= Delta approximately by CG with
relative residual tolerance xi, accepts a step when the actual/predicted
reduction ratio exceeds eta0, and adjusts the radius inside the intervals

    [delta1*min(||s||, Delta), delta2*Delta]   if rho <= eta1,
    [delta1*Delta,             delta2*Delta]   if eta1 < rho < eta2,
    [Delta,                    delta3*Delta]   if rho >= eta2.

Shrink branches take the interval midpoint; the growth branch takes
min(delta3*Delta, 2*Delta) unless the step hit the boundary, then
delta3*Delta. All solvers are sequential and bit-reproducible given
(dataset, config, seed).
"""

from __future__ import annotations

import enum
import time
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from .errors import NonDifferentiable, NumericalBreakdown, Unsupported, WrongLoss
from .losses import Family
from .objective import Objective
from .sparse import HessianOperator, hessian_vector_product

_BOUNDARY_RTOL = 1e-9  # ||s|| this close to Delta counts as a boundary step
_TINY_MODEL = 1e-300   # predicted reductions below this are treated as degenerate


@dataclass(frozen=True)
class XiFixed:
    """Constant CG forcing value xi in (0, 1)."""

    value: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.value < 1.0:
            raise ValueError("xi must lie in (0, 1)")

    def xi(self, grad_norm: float) -> float:
        return self.value


@dataclass(frozen=True)
class XiGradientScaled:
    """xi_t = min(cap, kappa * ||grad||); decaying forcing gives the fast regime."""

    kappa: float = 1.0
    cap: float = 0.1

    def __post_init__(self):
        if self.kappa <= 0.0 or not 0.0 < self.cap < 1.0:
            raise ValueError("need kappa > 0 and cap in (0, 1)")

    def xi(self, grad_norm: float) -> float:
        return min(self.cap, self.kappa * grad_norm)


XiPolicy = Union[XiFixed, XiGradientScaled]


@dataclass(frozen=True)
class TronConfig:
    tol: float = 5e-4
    max_newton_iters: int = 200
    max_cg_iters: int | None = None  # resolved to min(2p, 500) at run time
    xi_policy: XiPolicy = XiFixed(0.1)
    eta0: float = 1e-4
    eta1: float = 0.25
    eta2: float = 0.75
    delta1: float = 0.25
    delta2: float = 0.5
    delta3: float = 4.0

    def __post_init__(self):
        if not 0.0 < self.eta0 < self.eta1 < self.eta2 < 1.0:
            raise ValueError("need 0 < eta0 < eta1 < eta2 < 1")
        if not 0.0 < self.delta1 < self.delta2 < 1.0 < self.delta3:
            raise ValueError("need 0 < delta1 < delta2 < 1 < delta3")
        if not self.tol > 0.0:
            raise ValueError("tol must be > 0")


@dataclass(frozen=True)
class InverseT:
    """Step schedule eta_k = eta0 / (1 + k), k = 0, 1, ..."""

    eta0: float = 1.0

    def rate(self, k: int, lam: float) -> float:
        return self.eta0 / (1.0 + k)


@dataclass(frozen=True)
class PegasosRate:
    """Step schedule eta_k = 1 / (lam * (k + 1))."""

    def rate(self, k: int, lam: float) -> float:
        return 1.0 / (lam * (k + 1))


@dataclass(frozen=True)
class SgdConfig:
    epochs: int
    step_schedule: Union[InverseT, PegasosRate] = InverseT(1.0)
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class TrainReport:
    """Per-iteration trace of a training run.

    All four traces share one entry per recorded iteration (outer Newton
    iteration for tron, gradient step for fgd, epoch for sgd/pegasos);
    cg_iters_trace and radius_trace are zero for first-order solvers, and
    gradient norms are unavailable (zero trace, NaN final) for pegasos.
    """

    weights: np.ndarray
    iterations: int
    grad_norm_trace: np.ndarray
    objective_trace: np.ndarray
    cg_iters_trace: np.ndarray
    radius_trace: np.ndarray
    wall_time_seconds: float
    converged: bool
    final_grad_norm: float


class CgStatus(enum.Enum):
    RESIDUAL_CONVERGED = "residual_converged"
    BOUNDARY_HIT = "boundary_hit"
    ITER_CAP = "iter_cap"


class CgResult(NamedTuple):
    step: np.ndarray
    status: CgStatus
    iterations: int


def cg_subproblem(g, hessian: HessianOperator, delta: float, xi: float,
                  max_iters: int) -> CgResult:
    """Conjugate gradient on the trust-region model.

    Starts from s = 0 with r = p = -g, stops when ||r|| <= xi * ||g||, and on
    leaving the ball ||s|| <= delta moves to the boundary along the current
    direction with

        tau = (-s.p + sqrt((s.p)^2 + ||p||^2 (delta^2 - ||s||^2))) / ||p||^2.

    The returned step always satisfies ||s|| <= delta and strictly decreases
    the model.
    """
    g = np.asarray(g, dtype=np.float64)
    if not delta > 0.0:
        raise ValueError("delta must be > 0")
    if not 0.0 < xi < 1.0:
        raise ValueError("xi must lie in (0, 1)")
    g_norm = float(np.linalg.norm(g))
    if g_norm == 0.0:
        raise ValueError("gradient must be nonzero")
    s = np.zeros_like(g)
    r = -g
    p = -g.copy()
    rr = float(r @ r)
    threshold = xi * g_norm
    iterations = 0
    for _ in range(max_iters):
        if np.sqrt(rr) <= threshold:
            return CgResult(s, CgStatus.RESIDUAL_CONVERGED, iterations)
        iterations += 1
        hp = hessian_vector_product(hessian, p)
        php = float(p @ hp)
        if php <= 0.0:
            raise NumericalBreakdown(f"nonpositive curvature p.Hp = {php} in CG")
        alpha = rr / php
        s_next = s + alpha * p
        if float(np.linalg.norm(s_next)) > delta:
            sp = float(s @ p)
            pp = float(p @ p)
            ss = float(s @ s)
            tau = (-sp + np.sqrt(sp * sp + pp * (delta * delta - ss))) / pp
            return CgResult(s + tau * p, CgStatus.BOUNDARY_HIT, iterations)
        s = s_next
        r = r - alpha * hp
        rr_next = float(r @ r)
        p = r + (rr_next / rr) * p
        rr = rr_next
    if np.sqrt(rr) <= threshold:
        return CgResult(s, CgStatus.RESIDUAL_CONVERGED, iterations)
    return CgResult(s, CgStatus.ITER_CAP, iterations)


def trust_region_update(rho: float, delta: float, step_norm: float,
                        cfg: TronConfig) -> float:
    """Next radius; a step with ||s|| within rounding of delta counts as boundary."""
    if not delta > 0.0:
        raise ValueError("delta must be > 0")
    if rho <= cfg.eta1:
        lo = cfg.delta1 * min(step_norm, delta)
        hi = cfg.delta2 * delta
        return 0.5 * (lo + hi)
    if rho < cfg.eta2:
        return 0.5 * (cfg.delta1 + cfg.delta2) * delta
    if step_norm >= delta * (1.0 - _BOUNDARY_RTOL):
        return cfg.delta3 * delta
    return min(cfg.delta3 * delta, 2.0 * delta)


def tron_train(obj: Objective, cfg: TronConfig = TronConfig()) -> TrainReport:
    """Trust-region Newton from w = 0; stops when ||grad L|| <= cfg.tol."""
    if not obj.lam > 0.0:
        raise ValueError("the Newton solver requires lam > 0")
    start = time.perf_counter()
    p_dim = obj.dim
    n = obj.dataset.n
    max_cg = cfg.max_cg_iters if cfg.max_cg_iters is not None else min(2 * p_dim, 500)
    w = np.zeros(p_dim)
    g = obj.gradient(w)
    g_norm = float(np.linalg.norm(g))
    delta = g_norm
    objective = obj.value(w)
    grad_trace, obj_trace, cg_trace, radius_trace = [], [], [], []
    converged = g_norm <= cfg.tol
    iterations = 0
    while not converged and iterations < cfg.max_newton_iters:
        iterations += 1
        diag = obj.hessian_diagonal(w)
        hessian = HessianOperator(obj.lam, obj.dataset.features, diag)
        xi = cfg.xi_policy.xi(g_norm)
        step, status, cg_iters = cg_subproblem(g, hessian, delta, xi, max_cg)
        step_norm = float(np.linalg.norm(step))
        xs = obj.dataset.features.matvec(step)
        model = float(g @ step) + 0.5 * obj.lam * float(step @ step) \
            + float(xs @ (diag * xs)) / (2.0 * n)
        grad_trace.append(g_norm)
        radius_trace.append(delta)
        cg_trace.append(cg_iters)
        if abs(model) < _TINY_MODEL:
            # degenerate predicted reduction: reject and halve the radius
            delta = 0.5 * delta
            obj_trace.append(objective)
            continue
        candidate = obj.value(w + step)
        rho = (candidate - objective) / model
        if rho > cfg.eta0:
            w = w + step
            objective = candidate
            g = obj.gradient(w)
            g_norm = float(np.linalg.norm(g))
        delta = trust_region_update(rho, delta, step_norm, cfg)
        obj_trace.append(objective)
        converged = g_norm <= cfg.tol
    return TrainReport(
        weights=w,
        iterations=iterations,
        grad_norm_trace=np.asarray(grad_trace),
        objective_trace=np.asarray(obj_trace),
        cg_iters_trace=np.asarray(cg_trace, dtype=np.int64),
        radius_trace=np.asarray(radius_trace),
        wall_time_seconds=time.perf_counter() - start,
        converged=converged,
        final_grad_norm=g_norm,
    )


def fgd_train(obj: Objective, step: float, iters: int) -> TrainReport:
    """Full-gradient descent with a constant step size.

    Warns when the step exceeds 1 / (lam + mu * max_i ||x_i||^2) with mu the
    loss smoothness modulus (when finite).
    """
    try:
        mu = obj.loss.curvature_bounds().mu_upper
        if np.isfinite(mu):
            safe = 1.0 / (obj.lam + mu * float(obj.dataset.features.row_norms_sq().max()))
            if step > safe:
                warnings.warn(f"step {step} exceeds the safe bound {safe:.3e}", stacklevel=2)
    except Unsupported:
        pass  # no smoothness certificate for this family; skip the advisory check
    start = time.perf_counter()
    w = np.zeros(obj.dim)
    grad_trace, obj_trace = [], []
    g = obj.gradient(w)
    for _ in range(iters):
        grad_trace.append(float(np.linalg.norm(g)))
        w = w - step * g
        obj_trace.append(obj.value(w))
        g = obj.gradient(w)
    final_norm = float(np.linalg.norm(g))
    zeros = np.zeros(len(obj_trace))
    return TrainReport(
        weights=w,
        iterations=iters,
        grad_norm_trace=np.asarray(grad_trace),
        objective_trace=np.asarray(obj_trace),
        cg_iters_trace=zeros.astype(np.int64),
        radius_trace=zeros,
        wall_time_seconds=time.perf_counter() - start,
        converged=True,
        final_grad_norm=final_norm,
    )


def _sparse_margin(features, w, i):
    cols, vals = features.row(i)
    return float(vals @ w[cols])


def sgd_train(obj: Objective, cfg: SgdConfig) -> TrainReport:
    """Stochastic gradient descent, one uniformly sampled instance per step.

    The update is w <- w - eta_k * (lam*w - rate_i * y_i * x_i) where
    rate_i = -psi'(margin_i) is the margin-dependent factor of the sampled
    instance. Traces are recorded per epoch. Deterministic for a fixed seed.
    """
    if obj.loss.family is Family.HINGE:
        raise NonDifferentiable("SGD needs a differentiable loss; use pegasos_train")
    start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    n = obj.dataset.n
    features = obj.dataset.features
    labels = obj.dataset.labels
    w = np.zeros(obj.dim)
    grad_trace, obj_trace = [], []
    k = 0
    for _ in range(cfg.epochs):
        picks = rng.integers(0, n, size=n)
        for i in picks:
            eta = cfg.step_schedule.rate(k, obj.lam)
            y = labels[i]
            m = y * _sparse_margin(features, w, i)
            rate = -obj.loss.grad(m)
            if obj.lam != 0.0:
                w *= 1.0 - eta * obj.lam
            if rate != 0.0:
                cols, vals = features.row(int(i))
                w[cols] += eta * rate * y * vals
            k += 1
        grad_trace.append(float(np.linalg.norm(obj.gradient(w))))
        obj_trace.append(obj.value(w))
    zeros = np.zeros(len(obj_trace))
    return TrainReport(
        weights=w,
        iterations=cfg.epochs,
        grad_norm_trace=np.asarray(grad_trace),
        objective_trace=np.asarray(obj_trace),
        cg_iters_trace=zeros.astype(np.int64),
        radius_trace=zeros,
        wall_time_seconds=time.perf_counter() - start,
        converged=True,
        final_grad_norm=grad_trace[-1],
    )


def pegasos_train(obj: Objective, cfg: SgdConfig) -> TrainReport:
    """Stochastic subgradient descent for the plain hinge, eta_k = 1/(lam*k).

    The margin-dependent factor is the subgradient indicator 1(theta - m > 0):
    sampled instances with margin below theta trigger an additive update, all
    steps shrink w by (1 - eta*lam).
    """
    if obj.loss.family is not Family.HINGE:
        raise WrongLoss(f"pegasos requires the hinge loss, got {obj.loss.family.value}")
    if not isinstance(cfg.step_schedule, PegasosRate):
        raise ValueError("pegasos uses the PegasosRate schedule")
    if not obj.lam > 0.0:
        raise ValueError("pegasos requires lam > 0")
    start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    n = obj.dataset.n
    features = obj.dataset.features
    labels = obj.dataset.labels
    theta = obj.loss.theta
    w = np.zeros(obj.dim)
    obj_trace = []
    k = 0
    for _ in range(cfg.epochs):
        picks = rng.integers(0, n, size=n)
        for i in picks:
            eta = cfg.step_schedule.rate(k, obj.lam)
            y = labels[i]
            m = y * _sparse_margin(features, w, i)
            w *= 1.0 - eta * obj.lam
            if theta - m > 0.0:
                cols, vals = features.row(int(i))
                w[cols] += eta * y * vals
            k += 1
        obj_trace.append(obj.value(w))
    zeros = np.zeros(len(obj_trace))
    return TrainReport(
        weights=w,
        iterations=cfg.epochs,
        grad_norm_trace=zeros.copy(),
        objective_trace=np.asarray(obj_trace),
        cg_iters_trace=zeros.astype(np.int64),
        radius_trace=zeros,
        wall_time_seconds=time.perf_counter() - start,
        converged=True,
        final_grad_norm=float("nan"),
    )
