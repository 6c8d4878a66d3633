"""Margin losses for linear binary classification.

Every smooth family here is an instance of one construction: a pair of
functions (cap, low) with cap'(v)*v + low'(v) = 0 and cap'(v) >= 0 defines

    psi(alpha) = cap(v) * (theta - alpha) + low(v) * sigma,   v = (theta - alpha) / sigma,

which is convex with psi'(alpha) = -cap(v) and psi''(alpha) = cap'(v) / sigma.
The Gaussian pair (standard normal CDF/PDF) and the algebraic pair
((1 + v/sqrt(1+v^2))/2, 1/(2 sqrt(1+v^2))) yield two infinitely differentiable
hinge approximations with uniform gaps sigma/sqrt(2*pi) and sigma/2; the same
construction reproduces the logistic, exponential, least-squares, smooth
absolute and smooth ReLU losses. Non-smooth or merely piecewise-smooth
baselines (hinge, squared hinge, the gamma-smoothed hinge, the quintic
kernel-smoothed hinge) are implemented directly.

The Fenchel conjugate of a framework loss is

    psi*(beta) = beta*theta - low(cap^{-1}(-beta)) * sigma

on the open interval -range(cap); closed forms are provided per family and are
cross-checked in the tests against a grid-search supremum oracle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy.special import erfc, expit, ndtri

from .errors import InvalidGenerator, NonDifferentiable, OutOfDomain, Unsupported

_LOG = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2.0 * math.pi)

# exp() saturates above this; one unit of headroom below log(float64 max)
_EXP_CLAMP = math.log(np.finfo(np.float64).max) - 1.0

# grid on which generator pairs are validated (see validate_generator)
_GEN_GRID = np.linspace(-6.0, 6.0, 241)
_GEN_FD_STEP = 1e-6
_GEN_TOL = 1e-8


def std_normal_cdf(v):
    # erfc form keeps full relative accuracy in the left tail
    return 0.5 * erfc(-np.asarray(v, dtype=float) / math.sqrt(2.0))


def std_normal_pdf(v):
    v = np.asarray(v, dtype=float)
    return np.exp(-0.5 * v * v) / SQRT_2PI


def std_normal_quantile(p):
    """Inverse of std_normal_cdf, polished with one Newton step on the CDF."""
    x = ndtri(p)
    pdf = std_normal_pdf(x)
    step = np.where(pdf > 1e-300, (std_normal_cdf(x) - p) / np.where(pdf > 1e-300, pdf, 1.0), 0.0)
    return x - step


def softplus(v):
    """log(1 + exp(v)) without overflow: max(v, 0) + log1p(exp(-|v|))."""
    v = np.asarray(v, dtype=float)
    return np.maximum(v, 0.0) + np.log1p(np.exp(-np.abs(v)))


def _clamped_exp(v):
    v = np.asarray(v, dtype=float)
    if np.any(v > _EXP_CLAMP):
        _LOG.debug("exponential loss saturated: clamping argument above %.3f", _EXP_CLAMP)
        v = np.minimum(v, _EXP_CLAMP)
    return np.exp(v)


class Family(str, Enum):
    """Loss families; values are the names used on the command line."""

    SMOOTH_HINGE_G = "smooth-hinge-g"
    SMOOTH_HINGE_M = "smooth-hinge-m"
    LOGISTIC = "logistic"
    EXPONENTIAL = "exponential"
    LEAST_SQUARES = "least-squares"
    SMOOTH_ABS = "smooth-abs"
    SMOOTH_RELU = "srelu"
    HINGE = "hinge"
    SQUARED_HINGE = "sq-hinge"
    SHALEV_GAMMA = "shalev-gamma"
    WANG_KH = "wang-kh"
    CUSTOM = "custom"


# families whose derivatives come from a (cap, low) generator pair
_FRAMEWORK = frozenset(
    {
        Family.SMOOTH_HINGE_G,
        Family.SMOOTH_HINGE_M,
        Family.LOGISTIC,
        Family.EXPONENTIAL,
        Family.LEAST_SQUARES,
        Family.SMOOTH_ABS,
        Family.SMOOTH_RELU,
        Family.CUSTOM,
    }
)

_DEFAULT_THETA = {
    Family.LOGISTIC: 0.0,
    Family.EXPONENTIAL: 0.0,
    Family.SMOOTH_RELU: 0.0,
}


@dataclass(frozen=True)
class GeneratorPair:
    """A (cap, low) pair defining a smooth convex loss.

    cap must be nondecreasing (cap' >= 0) and the pair must satisfy
    cap'(v)*v + low'(v) = 0; both are checked numerically on a fixed grid by
    validate_generator / from_generator.
    """

    phi_cap: Callable
    phi_low: Callable
    phi_cap_deriv: Callable


@dataclass(frozen=True)
class CurvatureCertificate:
    """Strong-convexity / smoothness moduli: gamma <= psi'' <= mu everywhere."""

    gamma_lower: float
    mu_upper: float

    def __post_init__(self):
        if not self.gamma_lower <= self.mu_upper:
            raise ValueError("gamma_lower must not exceed mu_upper")


def _cap_m(v):
    v = np.asarray(v, dtype=float)
    return 0.5 * (1.0 + v / np.sqrt(1.0 + v * v))


def _dcap_m(v):
    v = np.asarray(v, dtype=float)
    return 0.5 * (1.0 + v * v) ** -1.5


def _quintic_step(x):
    """C^1 step used by the kernel-smoothed hinge: 0 below -1, 1 above +1."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, -1.0, 1.0)  # keep the quintic from overflowing off-support
    inner = 0.5 + (15.0 / 16.0) * (xc - (2.0 / 3.0) * xc**3 + 0.2 * xc**5)
    return np.where(x <= -1.0, 0.0, np.where(x >= 1.0, 1.0, inner))


def _quintic_step_deriv(x):
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, -1.0, 1.0)
    d = (15.0 / 16.0) * (1.0 - xc * xc) ** 2
    return np.where(np.abs(x) >= 1.0, 0.0, d)


@dataclass(frozen=True)
class LossSpec:
    """A loss family plus its parameters; all evaluations live here.

    theta is the margin offset (default 1 for hinge-type families, 0 for
    logistic / exponential / smooth ReLU), sigma the smoothing scale. gamma
    and bandwidth parameterize the gamma-smoothed and kernel-smoothed hinge
    baselines only. scale multiplies the whole loss and is only meant for the
    optional 2/pi rescaling of the smooth absolute loss.

    Instances are immutable; every method is a pure function, safe for
    unrestricted concurrent use. Methods accept scalars or numpy arrays.
    """

    family: Family
    theta: float | None = None
    sigma: float = 1.0
    gamma: float = 1.0
    bandwidth: float = 1.0
    scale: float = 1.0
    generator: GeneratorPair | None = None
    cap_inverse: Callable | None = None
    inverse_bracket: tuple | None = None

    def __post_init__(self):
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        if self.theta is None:
            object.__setattr__(self, "theta", _DEFAULT_THETA.get(family, 1.0))
        object.__setattr__(self, "theta", float(self.theta))
        if family in _FRAMEWORK and not self.sigma > 0.0:
            raise ValueError(f"sigma must be > 0 for {family.value}, got {self.sigma}")
        if family is Family.SHALEV_GAMMA and not self.gamma > 0.0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if family is Family.WANG_KH and not self.bandwidth > 0.0:
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth}")
        if family is Family.SMOOTH_ABS and not self.theta > 0.0:
            raise ValueError("smooth absolute loss requires theta > 0")
        if not self.scale > 0.0:
            raise ValueError("scale must be > 0")
        if self.scale != 1.0 and family is not Family.SMOOTH_ABS:
            raise ValueError("scale is only supported for the smooth absolute loss")
        if family is Family.CUSTOM and self.generator is None:
            raise ValueError("custom losses need a GeneratorPair (use from_generator)")

    # ------------------------------------------------------------------
    # core evaluations

    def _v(self, alpha):
        return (self.theta - np.asarray(alpha, dtype=float)) / self.sigma

    def eval(self, alpha):
        """Loss value psi(alpha)."""
        a = np.asarray(alpha, dtype=float)
        th, s, fam = self.theta, self.sigma, self.family
        if fam is Family.SMOOTH_HINGE_G:
            # split form keeps psi >= hinge exact in floating point: for v >= 0
            # the gap pdf(v) - v*cdf(-v) is a difference of full-precision
            # positives, never a cancellation against the large linear term
            v = self._v(a)
            pdf = std_normal_pdf(v)
            above = s * (v + (pdf - v * std_normal_cdf(-v)))
            below = s * (pdf + v * std_normal_cdf(v))
            out = np.where(v >= 0.0, above, below)
        elif fam is Family.SMOOTH_HINGE_M:
            out = 0.5 * (th - a) + 0.5 * np.sqrt((th - a) ** 2 + s * s)
        elif fam is Family.LOGISTIC:
            out = s * softplus(self._v(a))
        elif fam is Family.EXPONENTIAL:
            out = s * _clamped_exp(self._v(a))
        elif fam is Family.LEAST_SQUARES:
            out = 0.5 * (th - a) ** 2
        elif fam is Family.SMOOTH_ABS:
            v = self._v(a)
            out = np.arctan(v) * (th - a) - 0.5 * s * np.log1p(v * v)
        elif fam is Family.SMOOTH_RELU:
            u = (a - th) / s
            out = std_normal_cdf(u) * (a - th) + std_normal_pdf(u) * s
        elif fam is Family.HINGE:
            out = np.maximum(0.0, th - a)
        elif fam is Family.SQUARED_HINGE:
            out = np.maximum(0.0, th - a) ** 2
        elif fam is Family.SHALEV_GAMMA:
            z = th - a
            g = self.gamma
            out = np.where(z <= 0.0, 0.0, np.where(z >= g, z - 0.5 * g, 0.5 * z * z / g))
        elif fam is Family.WANG_KH:
            z = th - a
            out = z * _quintic_step(z / self.bandwidth)
        else:
            v = self._v(a)
            out = self.generator.phi_cap(v) * (th - a) + self.generator.phi_low(v) * s
        out = self.scale * out
        return float(out) if np.ndim(alpha) == 0 else out

    def grad(self, alpha):
        """First derivative psi'(alpha); -cap(v) for framework families."""
        a = np.asarray(alpha, dtype=float)
        th, fam = self.theta, self.family
        if fam is Family.HINGE:
            raise NonDifferentiable("hinge loss has no derivative; use the pegasos solver")
        if fam is Family.SQUARED_HINGE:
            out = -2.0 * np.maximum(0.0, th - a)
        elif fam is Family.SHALEV_GAMMA:
            z = th - a
            g = self.gamma
            out = np.where(z <= 0.0, 0.0, np.where(z >= g, -1.0, -z / g))
        elif fam is Family.WANG_KH:
            u = (th - a) / self.bandwidth
            out = -(_quintic_step(u) + u * _quintic_step_deriv(u))
        else:
            out = -self._cap(self._v(a))
        out = self.scale * out
        return float(out) if np.ndim(alpha) == 0 else out

    def curvature(self, alpha):
        """Second derivative psi''(alpha); cap'(v)/sigma for framework families.

        Piecewise families take the right-limit value at their breakpoints.
        """
        a = np.asarray(alpha, dtype=float)
        th, s, fam = self.theta, self.sigma, self.family
        if fam is Family.HINGE:
            raise NonDifferentiable("hinge loss has no second derivative")
        if fam is Family.SQUARED_HINGE:
            out = np.where(a < th, 2.0, 0.0)
        elif fam is Family.SHALEV_GAMMA:
            # quadratic-branch value at alpha = theta - gamma, zero at alpha = theta
            g = self.gamma
            out = np.where((a >= th - g) & (a < th), 1.0 / g, 0.0)
        elif fam is Family.WANG_KH:
            u = (th - a) / self.bandwidth
            d = (15.0 / (8.0 * self.bandwidth)) * (1.0 - u * u) * (1.0 - 3.0 * u * u)
            out = np.where(np.abs(u) >= 1.0, 0.0, d)
        else:
            out = self._dcap(self._v(a)) / s
        out = self.scale * out
        return float(out) if np.ndim(alpha) == 0 else out

    # ------------------------------------------------------------------
    # generator plumbing for framework families

    def _cap(self, v):
        fam, s = self.family, self.sigma
        if fam is Family.SMOOTH_HINGE_G:
            return std_normal_cdf(v)
        if fam is Family.SMOOTH_HINGE_M:
            return _cap_m(v)
        if fam is Family.LOGISTIC:
            return expit(np.asarray(v, dtype=float))
        if fam is Family.EXPONENTIAL:
            return _clamped_exp(v)
        if fam is Family.LEAST_SQUARES:
            return s * np.asarray(v, dtype=float)
        if fam is Family.SMOOTH_ABS:
            return np.arctan(np.asarray(v, dtype=float))
        if fam is Family.SMOOTH_RELU:
            return -std_normal_cdf(-np.asarray(v, dtype=float))
        if fam is Family.CUSTOM:
            return self.generator.phi_cap(v)
        raise Unsupported(f"{fam.value} has no generator pair")

    def _dcap(self, v):
        fam, s = self.family, self.sigma
        v = np.asarray(v, dtype=float)
        if fam is Family.SMOOTH_HINGE_G:
            return std_normal_pdf(v)
        if fam is Family.SMOOTH_HINGE_M:
            return _dcap_m(v)
        if fam is Family.LOGISTIC:
            return expit(v) * expit(-v)
        if fam is Family.EXPONENTIAL:
            return _clamped_exp(v)
        if fam is Family.LEAST_SQUARES:
            return np.full_like(v, s)
        if fam is Family.SMOOTH_ABS:
            return 1.0 / (1.0 + v * v)
        if fam is Family.SMOOTH_RELU:
            return std_normal_pdf(v)
        if fam is Family.CUSTOM:
            return self.generator.phi_cap_deriv(v)
        raise Unsupported(f"{fam.value} has no generator pair")

    # ------------------------------------------------------------------
    # conjugate

    def conjugate_domain(self) -> tuple[float, float]:
        """Open interval -range(cap) on which the conjugate is defined."""
        fam = self.family
        if fam not in _FRAMEWORK:
            raise Unsupported(f"{fam.value} exposes no conjugate")
        if fam in (Family.SMOOTH_HINGE_G, Family.SMOOTH_HINGE_M, Family.LOGISTIC):
            lo, hi = -1.0, 0.0
        elif fam is Family.EXPONENTIAL:
            lo, hi = -math.inf, 0.0
        elif fam is Family.LEAST_SQUARES:
            lo, hi = -math.inf, math.inf
        elif fam is Family.SMOOTH_ABS:
            lo, hi = -0.5 * math.pi, 0.5 * math.pi
        elif fam is Family.SMOOTH_RELU:
            lo, hi = 0.0, 1.0
        else:  # custom: estimated from the limits of cap on a wide grid
            lo, hi = -float(self._cap(50.0)), -float(self._cap(-50.0))
        return self.scale * lo, self.scale * hi

    def conjugate(self, beta):
        """Fenchel conjugate psi*(beta) = beta*theta - low(cap^{-1}(-beta))*sigma."""
        lo, hi = self.conjugate_domain()
        b = float(beta)
        if not lo < b < hi:
            raise OutOfDomain(f"beta={b} outside the open domain ({lo}, {hi})")
        # scaling c: (c*psi)*(beta) = c * psi*(beta / c)
        c = self.scale
        b /= c
        th, s, fam = self.theta, self.sigma, self.family
        if fam is Family.SMOOTH_HINGE_G:
            out = b * th - s * float(std_normal_pdf(std_normal_quantile(-b)))
        elif fam is Family.SMOOTH_HINGE_M:
            out = b * th - 0.5 * s * math.sqrt(max(0.0, 1.0 - (2.0 * b + 1.0) ** 2))
        elif fam is Family.LOGISTIC:
            out = b * th + s * ((1.0 + b) * math.log1p(b) - b * math.log(-b))
        elif fam is Family.EXPONENTIAL:
            out = b * th + s * b * (1.0 - math.log(-b))
        elif fam is Family.LEAST_SQUARES:
            out = b * th + 0.5 * b * b
        elif fam is Family.SMOOTH_ABS:
            out = b * th + 0.5 * s * math.log1p(math.tan(b) ** 2)
        elif fam is Family.SMOOTH_RELU:
            out = b * th - s * float(std_normal_pdf(std_normal_quantile(b)))
        else:
            v_star = self._invert_cap(-b)
            out = b * th - float(self.generator.phi_low(v_star)) * s
        return c * out

    def _invert_cap(self, target):
        gen = self.generator
        if self.cap_inverse is not None:
            v = float(self.cap_inverse(target))
        elif self.inverse_bracket is not None:
            lo, hi = map(float, self.inverse_bracket)
            flo = float(gen.phi_cap(lo)) - target
            fhi = float(gen.phi_cap(hi)) - target
            if flo > 0.0 or fhi < 0.0:
                raise OutOfDomain(f"cap inverse target {target} not bracketed by {self.inverse_bracket}")
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if float(gen.phi_cap(mid)) - target <= 0.0:
                    lo = mid
                else:
                    hi = mid
            v = 0.5 * (lo + hi)
        else:
            raise Unsupported("custom conjugate needs cap_inverse or inverse_bracket")
        for _ in range(3):  # Newton polish
            d = float(gen.phi_cap_deriv(v))
            if d <= 1e-300:
                break
            v = v - (float(gen.phi_cap(v)) - target) / d
        return v

    # ------------------------------------------------------------------
    # certificates

    def hinge_gap_bound(self) -> float:
        """Uniform upper bound on psi - hinge (smooth hinge families, theta=1)."""
        if self.family not in (Family.SMOOTH_HINGE_G, Family.SMOOTH_HINGE_M):
            raise Unsupported(f"{self.family.value} is not a smooth hinge family")
        if self.theta != 1.0:
            raise Unsupported("gap bound is defined for the unit-margin hinge (theta=1)")
        if self.family is Family.SMOOTH_HINGE_G:
            return self.sigma / SQRT_2PI
        return self.sigma / 2.0

    def curvature_bounds(self) -> CurvatureCertificate:
        """inf and sup of psi'' over the real line."""
        fam, s, c = self.family, self.sigma, self.scale
        if fam not in _FRAMEWORK:
            raise Unsupported(f"{fam.value} is outside the smooth framework")
        if fam in (Family.SMOOTH_HINGE_G, Family.SMOOTH_RELU):
            lo, hi = 0.0, float(std_normal_pdf(0.0)) / s
        elif fam is Family.SMOOTH_HINGE_M:
            lo, hi = 0.0, 0.5 / s
        elif fam is Family.LOGISTIC:
            lo, hi = 0.0, 0.25 / s
        elif fam is Family.EXPONENTIAL:
            lo, hi = 0.0, math.inf
        elif fam is Family.LEAST_SQUARES:
            lo, hi = 1.0, 1.0
        elif fam is Family.SMOOTH_ABS:
            lo, hi = 0.0, 1.0 / s
        else:
            lo, hi = self._custom_curvature_bounds()
        return CurvatureCertificate(c * lo, c * hi)

    def _custom_curvature_bounds(self):
        # coarse scan over [-50, 50] followed by golden-section refinement
        grid = np.linspace(-50.0, 50.0, 4001)
        vals = np.asarray(self._dcap(grid), dtype=float) / self.sigma
        lo = float(vals.min())
        k = int(vals.argmax())
        a = grid[max(k - 1, 0)]
        b = grid[min(k + 1, len(grid) - 1)]
        f = lambda v: -float(self._dcap(v)) / self.sigma
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        x1 = b - invphi * (b - a)
        x2 = a + invphi * (b - a)
        f1, f2 = f(x1), f(x2)
        for _ in range(120):
            if f1 < f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - invphi * (b - a)
                f1 = f(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + invphi * (b - a)
                f2 = f(x2)
        hi = max(float(vals.max()), -min(f1, f2))
        return lo, hi

    def is_calibrated(self) -> bool:
        """True iff psi'(0) < 0, i.e. cap(theta/sigma) > 0 for framework losses."""
        if self.family is Family.HINGE:
            raise NonDifferentiable("hinge loss is not differentiable at 0")
        return float(self.grad(0.0)) < 0.0


# ----------------------------------------------------------------------
# construction helpers


def make_loss(name: str | Family, theta: float | None = None, sigma: float = 1.0,
              gamma: float = 1.0, bandwidth: float = 1.0, scale: float = 1.0) -> LossSpec:
    """Build a LossSpec from a family name as used on the command line."""
    return LossSpec(Family(name), theta=theta, sigma=sigma, gamma=gamma,
                    bandwidth=bandwidth, scale=scale)


def validate_generator(gen: GeneratorPair, grid: np.ndarray = _GEN_GRID) -> None:
    """Check the defining identity and monotonicity on a grid.

    The identity cap'(v)*v + low'(v) = 0 is tested with a central finite
    difference of low (step 1e-6) to a mixed absolute/relative tolerance of
    1e-8; cap' must be nonnegative up to -1e-12 rounding slack.
    """
    dcap = np.asarray(gen.phi_cap_deriv(grid), dtype=float)
    if np.min(dcap) < -1e-12:
        raise InvalidGenerator(f"cap' negative on grid (min {np.min(dcap):.3e})")
    h = _GEN_FD_STEP
    dlow = (np.asarray(gen.phi_low(grid + h), dtype=float)
            - np.asarray(gen.phi_low(grid - h), dtype=float)) / (2.0 * h)
    resid = dcap * grid + dlow
    tol = _GEN_TOL * np.maximum(1.0, np.maximum(np.abs(dcap * grid), np.abs(dlow)))
    worst = np.max(np.abs(resid) - tol)
    if worst > 0.0:
        raise InvalidGenerator(f"identity cap'(v)v + low'(v) = 0 violated (excess {worst:.3e})")


def from_generator(gen: GeneratorPair, theta: float, sigma: float,
                   cap_inverse: Callable | None = None,
                   inverse_bracket: tuple | None = None) -> LossSpec:
    """Wrap a validated generator pair as a custom LossSpec.

    The conjugate is available only if cap_inverse or a bisection bracket for
    cap is supplied.
    """
    validate_generator(gen)
    return LossSpec(Family.CUSTOM, theta=theta, sigma=sigma, generator=gen,
                    cap_inverse=cap_inverse, inverse_bracket=inverse_bracket)


def generator_from_loss(psi: Callable, psi_deriv: Callable, theta: float,
                        sigma: float) -> GeneratorPair:
    """Recover the generator pair of a smooth convex loss.

    cap(v) = -psi'(theta - sigma*v) and low(v) = psi(theta - sigma*v)/sigma - cap(v)*v;
    cap' is obtained by a central finite difference of cap. Feeding the result
    back through from_generator reproduces psi pointwise.
    """
    sigma = float(sigma)
    theta = float(theta)

    def cap(v):
        return -np.asarray(psi_deriv(theta - sigma * np.asarray(v, dtype=float)), dtype=float)

    def low(v):
        v = np.asarray(v, dtype=float)
        return np.asarray(psi(theta - sigma * v), dtype=float) / sigma - cap(v) * v

    def dcap(v, _h=1e-6):
        return (cap(np.asarray(v, dtype=float) + _h) - cap(np.asarray(v, dtype=float) - _h)) / (2.0 * _h)

    return GeneratorPair(phi_cap=cap, phi_low=low, phi_cap_deriv=dcap)
