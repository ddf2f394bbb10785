"""Closed-form machinery: Lambert W, admission thresholds, and bound curves.

Everything here is a pure function of a BoundContext (the density support
[L, U] plus whichever of the fairness/trust/prediction parameters the
formula needs). The four threshold functions map utilization z in [0, 1] to
the minimum value density accepted at that utilization.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

from .errors import ParameterError

_INV_E = math.exp(-1.0)

# Admissible-range comparisons tolerate this much float slack so that e.g.
# alpha = 1/(ln(U/L)+1) computed by the caller passes its own lower bound.
_RANGE_TOL = 1e-12


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function (w * exp(w) = x, w >= -1).

    Halley iteration, at most 50 steps, residual tolerance 1e-14 scaled by
    max(1, |x|); the initial guess is ln(1+x), switched to the asymptotic
    ln(x) - ln(ln(x)) for large x where ln(1+x) would overflow exp().
    """
    if math.isnan(x) or x < -_INV_E:
        raise ParameterError(f"lambert_w0 domain is [-1/e, inf), got {x!r}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    if x < -_INV_E * (1.0 - 1e-12):
        return -1.0
    if x > math.e:
        lx = math.log(x)
        w = lx - math.log(lx)
    else:
        w = math.log1p(x)
    for _ in range(50):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= 1e-14 * max(1.0, abs(x)):
            break
        wp1 = w + 1.0
        # Halley step; the second-order correction keeps the branch point tame.
        w -= f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
    return w


@dataclass(frozen=True)
class BoundContext:
    """Parameter bundle for threshold and bound evaluation.

    lower/upper bound the value densities; alpha is the fairness parameter
    (length of the greedy utilization interval), gamma the prediction-trust
    parameter, d_hat the predicted constant threshold. A prediction outside
    [lower, upper] is clamped at construction with a warning.
    """

    lower: float
    upper: float
    alpha: float | None = None
    gamma: float | None = None
    d_hat: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ParameterError("density bounds must be finite")
        if not (0.0 < self.lower <= self.upper):
            raise ParameterError(
                f"density bounds must satisfy 0 < L <= U, got L={self.lower!r}, U={self.upper!r}"
            )
        if self.gamma is not None and not (-_RANGE_TOL <= self.gamma <= 1.0 + _RANGE_TOL):
            raise ParameterError(f"gamma must lie in [0, 1], got {self.gamma!r}")
        if self.d_hat is not None and not (self.lower <= self.d_hat <= self.upper):
            clamped = min(max(self.d_hat, self.lower), self.upper)
            warnings.warn(
                f"prediction {self.d_hat!r} outside [{self.lower!r}, {self.upper!r}]; "
                f"clamped to {clamped!r}",
                stacklevel=2,
            )
            object.__setattr__(self, "d_hat", clamped)

    @cached_property
    def log_ratio(self) -> float:
        """ln(U/L), the fluctuation scale every bound is expressed in."""
        return math.log(self.upper / self.lower)

    @cached_property
    def alpha_min(self) -> float:
        """1/(ln(U/L)+1): the fairness level the classic exponential threshold already has.

        Also the probability mass the randomized threshold distribution puts
        below the density floor.
        """
        return 1.0 / (self.log_ratio + 1.0)

    @cached_property
    def ell(self) -> float:
        """Anchor alpha + (alpha-1)/ln(U/L) of the stretched exponential threshold."""
        alpha = self._require_alpha()
        if alpha == 1.0:
            return 1.0
        return alpha + (alpha - 1.0) / self.log_ratio

    @cached_property
    def beta(self) -> float:
        """Pareto-optimal competitive ratio W(U(1-a)/(L a))/(1-a) at fairness a.

        Doubles as the exponent rate of the jump threshold. At alpha = 1 the
        expression is 0/0; the limit U/L is returned.
        """
        alpha = self._require_alpha()
        if alpha == 1.0:
            return self.upper / self.lower
        arg = self.upper * (1.0 - alpha) / (self.lower * alpha)
        return lambert_w0(arg) / (1.0 - alpha)

    @cached_property
    def kappa(self) -> float:
        """Utilization where the compressed exponential ramp reaches d_hat."""
        if self.gamma is None or self.d_hat is None:
            raise ParameterError("kappa requires both gamma and d_hat")
        # (1-gamma) * ln(d_hat e / L) / ln(U e / L)
        return (1.0 - self.gamma) * (math.log(self.d_hat / self.lower) + 1.0) / (self.log_ratio + 1.0)

    def _require_alpha(self) -> float:
        if self.alpha is None:
            raise ParameterError("this operation requires the fairness parameter alpha")
        return self.alpha

    def _checked_alpha(self, allow_one: bool = True) -> float:
        alpha = self._require_alpha()
        hi = 1.0 if allow_one else 1.0 - _RANGE_TOL
        if not (self.alpha_min - _RANGE_TOL <= alpha <= hi + _RANGE_TOL):
            raise ParameterError(
                f"alpha must lie in [1/(ln(U/L)+1), {'1' if allow_one else '1)'}] = "
                f"[{self.alpha_min!r}, 1{']' if allow_one else ')'}, got {alpha!r}"
            )
        return alpha

    def _require_gamma(self) -> float:
        if self.gamma is None:
            raise ParameterError("this operation requires the trust parameter gamma")
        return self.gamma


def _check_z(z: float) -> None:
    if not (-_RANGE_TOL <= z <= 1.0 + _RANGE_TOL):
        raise ParameterError(f"utilization must lie in [0, 1], got {z!r}")


def threshold_zcl(z: float, ctx: BoundContext) -> float:
    """Exponential threshold (Ue/L)^z * (L/e): L/e at z=0, U at z=1."""
    _check_z(z)
    return (ctx.upper * math.e / ctx.lower) ** z * (ctx.lower / math.e)


def threshold_baseline(z: float, ctx: BoundContext) -> float:
    """Stretched exponential threshold (Ue/L)^((z-ell)/(1-ell)) * (L/e).

    Stays at or below L for z <= alpha and reaches U at z=1. At alpha=1 the
    exponent degenerates; the threshold is the constant density floor L.
    """
    _check_z(z)
    alpha = ctx._checked_alpha()
    if alpha == 1.0:
        return ctx.lower
    expo = (z - ctx.ell) / (1.0 - ctx.ell)
    return (ctx.upper * math.e / ctx.lower) ** expo * (ctx.lower / math.e)


def threshold_ect(z: float, ctx: BoundContext) -> float:
    """Flat-then-jump threshold: L on [0, alpha], U*exp(beta*(z-1)) above.

    The jump at alpha lands at alpha*beta*L (right limit); the value at
    exactly z=alpha is L, keeping the greedy region closed. alpha=1 is the
    constant-L threshold.
    """
    _check_z(z)
    alpha = ctx._checked_alpha()
    if z <= alpha:
        return ctx.lower
    return ctx.upper * math.exp(ctx.beta * (z - 1.0))


def threshold_laect(z: float, ctx: BoundContext) -> float:
    """Prediction-guided threshold: compressed ramp, flat at d_hat, ramp again.

    The flat segment spans [kappa, kappa+gamma) with kappa chosen so the
    first ramp meets d_hat; the function is continuous and non-decreasing.
    gamma=0 degenerates to the plain exponential threshold, gamma=1 to the
    constant threshold d_hat.
    """
    _check_z(z)
    gamma = ctx._require_gamma()
    if gamma == 0.0:
        return threshold_zcl(z, ctx)
    if ctx.d_hat is None:
        raise ParameterError("threshold_laect requires a prediction d_hat")
    if gamma == 1.0:
        return ctx.d_hat
    kappa = ctx.kappa
    if z < kappa:
        expo = z / (1.0 - gamma)
    elif z < kappa + gamma:
        # flat segment, returned exactly (the ramp formula at kappa is d_hat
        # only up to rounding)
        return ctx.d_hat
    else:
        expo = (z - gamma) / (1.0 - gamma)
    return (ctx.upper * math.e / ctx.lower) ** expo * (ctx.lower / math.e)


def bound_pareto_beta(ctx: BoundContext) -> float:
    """Best competitive ratio any deterministic algorithm with fairness alpha can have."""
    ctx._checked_alpha()
    return ctx.beta


def bound_pareto_beta_implicit(ctx: BoundContext) -> float:
    """Same bound as the root of ln(U/(alpha*b*L))/b = 1 - alpha.

    Independent route used to cross-validate the Lambert W form; the two
    must agree to 1e-9.
    """
    from scipy.optimize import brentq

    alpha = ctx._checked_alpha(allow_one=False)
    upper, lower = ctx.upper, ctx.lower

    def f(b: float) -> float:
        return math.log(upper / (alpha * b * lower)) - (1.0 - alpha) * b

    hi = max(upper / lower, ctx.log_ratio + 1.0) * 8.0 + 8.0
    return float(brentq(f, 1e-9, hi, xtol=1e-13, rtol=8.9e-16))


def bound_baseline_cr(ctx: BoundContext) -> float:
    """Competitive ratio of the stretched-threshold algorithm at fairness alpha."""
    alpha = ctx._checked_alpha()
    lnr1 = ctx.log_ratio + 1.0
    one_minus_ell = 1.0 - ctx.ell
    denom = ctx.lower * alpha * lnr1 - ctx.lower * one_minus_ell + ctx.upper * one_minus_ell
    return ctx.upper * lnr1 / denom


def bound_laect_consistency(rho: float, gamma: float) -> float:
    """Competitive ratio (rho+2)/gamma under perfect predictions.

    rho is the ratio of the instance's maximum density to its extracted
    constant-threshold cutoff. gamma=0 ignores predictions entirely, so the
    consistency guarantee degenerates to infinity.
    """
    if rho < 1.0 - _RANGE_TOL:
        raise ParameterError(f"rho must be >= 1, got {rho!r}")
    if not (-_RANGE_TOL <= gamma <= 1.0 + _RANGE_TOL):
        raise ParameterError(f"gamma must lie in [0, 1], got {gamma!r}")
    if gamma == 0.0:
        return math.inf
    return (rho + 2.0) / gamma


def bound_laect_robustness(ctx: BoundContext) -> float:
    """Worst-case competitive ratio (ln(U/L)+1)/(1-gamma) under any prediction."""
    gamma = ctx._require_gamma()
    if gamma == 1.0:
        return math.inf
    return (ctx.log_ratio + 1.0) / (1.0 - gamma)


def bound_lemma_add(ctx: BoundContext) -> float:
    """Lower bound W(U(1-a)/(L a) * e^(1/a))/(1-a) - 1/a when the fair-region
    floor sits strictly above L; dominates the Pareto bound on the whole range."""
    alpha = ctx._checked_alpha(allow_one=False)
    arg = ctx.upper * (1.0 - alpha) / (ctx.lower * alpha) * math.exp(1.0 / alpha)
    return lambert_w0(arg) / (1.0 - alpha) - 1.0 / alpha
