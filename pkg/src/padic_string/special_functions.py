"""Scalar special functions and closed-form Gaussian identities.

Everything here is a pure function over plain floats (safe to call from any
thread).  Accuracy targets are deliberately tighter than the solver needs:
``erf`` is good to ~1e-15 absolute, ``erfc_tail`` to ~1e-13 relative for
t <= 10, so quadrature error always dominates downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SQRT_PI = math.sqrt(math.pi)

# Switch points between the power series and the Laplace continued fraction.
# The series keeps full absolute accuracy up to ~3, but computing the
# complement 1 - erf(t) loses relative accuracy as erfc shrinks, so the
# complement switches to the continued fraction earlier.
_ERF_SERIES_CUTOFF = 2.0
_ERFC_CF_CUTOFF = 1.5
# erfc underflows to 0 in float64 beyond ~27.2
_ERF_SATURATION = 27.5


def _erf_series(t: float) -> float:
    # erf(t) = (2t/sqrt(pi)) e^{-t^2} * sum_n (2t^2)^n / (1*3*...*(2n+1)).
    # All terms positive: no cancellation, unlike the alternating Maclaurin form.
    t2 = t * t
    term = 1.0
    total = 1.0
    n = 0
    while True:
        n += 1
        term *= 2.0 * t2 / (2 * n + 1)
        total += term
        if term < total * 1e-18 or n > 200:
            break
    return (2.0 * t / SQRT_PI) * math.exp(-t2) * total


def _erfc_cf(t: float) -> float:
    # Laplace continued fraction,
    #   sqrt(pi) e^{t^2} erfc(t) = 1/(t + (1/2)/(t + 1/(t + (3/2)/(t + ...)))),
    # evaluated by the modified Lentz algorithm.  Converges for t > 0,
    # fast for t >~ 1.5 (~90 terms at the cutoff, ~13 at t = 8).
    c = 1e300
    d = 1.0 / t
    f = d
    n = 0
    while n < 400:
        n += 1
        a = 0.5 * n
        d = 1.0 / (t + a * d)
        c = t + a / c
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return math.exp(-t * t) / SQRT_PI * f


def erf(t: float) -> float:
    """Error function (2/sqrt(pi)) * integral of exp(-x^2) from 0 to t.

    Odd in t, strictly increasing, |erf(t)| < 1 for finite t.
    Absolute error <= 1e-14 everywhere (measured ~8e-16).
    """
    t = float(t)
    if math.isnan(t):
        return t
    a = abs(t)
    if a <= _ERF_SERIES_CUTOFF:
        return _erf_series(t)
    if a >= _ERF_SATURATION:
        return math.copysign(1.0, t)
    return math.copysign(1.0 - _erfc_cf(a), t)


def erfc_tail(t: float) -> float:
    """Complement 1 - erf(t) without cancellation for large positive t.

    Relative error <= 1e-12 for 0 <= t <= 10; exact complement identity
    erf(t) + erfc_tail(t) == 1 holds to ~1 ulp everywhere.
    """
    t = float(t)
    if math.isnan(t):
        return t
    if t >= _ERFC_CF_CUTOFF:
        if t >= _ERF_SATURATION:
            return _erfc_cf(t) if t < 106.0 else 0.0
        return _erfc_cf(t)
    if t <= -_ERF_SATURATION:
        return 2.0
    return 1.0 - erf(t)


@dataclass(frozen=True)
class GaussianExponent:
    """A Gaussian profile  coefficient * exp(rate * t^2).

    Sign convention (used package-wide): ``rate`` is the coefficient of +t^2
    in the exponent, so a decaying Gaussian e^{-a t^2} has rate = -a and a
    growing one e^{+b t^2} has rate = +b.

    coefficient: amplitude, finite and nonzero.
    rate: 1/time^2; any sign.
    """

    coefficient: float
    rate: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.coefficient) or self.coefficient == 0.0:
            raise ValueError("coefficient must be finite and nonzero")
        if not math.isfinite(self.rate):
            raise ValueError("rate must be finite")

    def __call__(self, t):
        import numpy as np

        return self.coefficient * np.exp(self.rate * np.asarray(t, dtype=float) ** 2)


def gaussian_convolve_closed_form(
    a: GaussianExponent, b: GaussianExponent
) -> GaussianExponent:
    """Exact convolution of two Gaussian exponents.

    With a = A e^{r1 t^2} and b = B e^{r2 t^2} the convolution integral
    converges iff r1 + r2 < 0 (in the classical alpha/beta form with
    e^{-alpha t^2} * e^{+beta t^2}: alpha > beta) and equals

        A * B * sqrt(-pi / (r1 + r2)) * exp( (r1*r2 / (r1 + r2)) * t^2 ).

    Raises ValueError when r1 + r2 >= 0 (divergent integral).
    """
    s = a.rate + b.rate
    if not s < 0.0:
        raise ValueError(
            f"divergent Gaussian convolution: rate sum {s} must be negative "
            "(decay must dominate growth)"
        )
    amplitude = a.coefficient * b.coefficient * math.sqrt(-math.pi / s)
    rate = a.rate * b.rate / s
    return GaussianExponent(coefficient=amplitude, rate=rate)


def sigma_inequality_check(sigma: float, alpha: float) -> bool:
    """True iff 1 - sigma**alpha < -alpha*ln(sigma).

    Holds for every sigma in (0,1) and alpha > 0; used as a sanity assertion
    inside the convergence-rate bound.  Rejects arguments outside that range.
    """
    if not (0.0 < sigma < 1.0):
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return 1.0 - sigma**alpha < -alpha * math.log(sigma)
