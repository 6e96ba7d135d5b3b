"""Discretized Gaussian-convolution operators on truncated grids.

Two operators are provided:

* ``FullLineOperator`` -- convolution against a normalized Gaussian kernel on
  a symmetric grid [-T, T], with declared profile limits (tails) handled in
  closed form beyond the truncation radius.
* ``HalfLineOperator`` -- the antisymmetrized kernel
  K(t, tau) = (e^{-(t-tau)^2} - e^{-(t+tau)^2}) / sqrt(pi)
  on [0, T], equivalent to odd extension of the profile to the full line.

Quadrature is composite trapezoidal.  Raw trapezoid plus an analytic erfc
tail term carries an O(h^2) Euler-Maclaurin endpoint error (~3e-7 at the
default resolution), far above the accuracy this package needs, so apply()
splits every profile into a closed-form part fixed by the declared tails
(a constant, or a step for unequal tails) plus a decaying remainder:

    apply(phi) = [exact convolution of the tail part]
               + [trapezoid convolution of phi - tail part]

For the constant-one profile the remainder vanishes and the half-line
operator reproduces erf(t) to the accuracy of erf itself; the full-line
operator preserves constants exactly.  Both code paths (materialized matrix
and FFT) evaluate the identical weighted sums, so they agree to rounding.

Operators are immutable after construction and their apply() is reentrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .special_functions import SQRT_PI, erf, erfc_tail

HALF_LINE = "half_line"
FULL_LINE = "full_line"

# Above this many grid points the direct method stops materializing the
# dense N x N kernel and evaluates it in row blocks instead.
MATRIX_FREE_LIMIT = 8192
_ROW_BLOCK = 1024

_MIN_POINTS = 16


@dataclass(frozen=True)
class Grid:
    """Uniform sample points on [0, T] (half line) or [-T, T] (full line).

    half_width: truncation radius T (> 0).
    points: number of samples N (>= 16).
    spacing: T/(N-1) for half-line grids, 2T/(N-1) for full-line grids.
    """

    domain_kind: str
    half_width: float
    points: int
    spacing: float

    @classmethod
    def half_line(cls, half_width: float, points: int) -> "Grid":
        cls._check(half_width, points)
        return cls(HALF_LINE, float(half_width), int(points),
                   float(half_width) / (points - 1))

    @classmethod
    def full_line(cls, half_width: float, points: int) -> "Grid":
        cls._check(half_width, points)
        return cls(FULL_LINE, float(half_width), int(points),
                   2.0 * float(half_width) / (points - 1))

    @staticmethod
    def _check(half_width: float, points: int) -> None:
        if not (math.isfinite(half_width) and half_width > 0):
            raise ValueError(f"half_width must be positive, got {half_width}")
        if points < _MIN_POINTS:
            raise ValueError(f"points must be >= {_MIN_POINTS}, got {points}")

    def nodes(self) -> np.ndarray:
        if self.domain_kind == HALF_LINE:
            return np.linspace(0.0, self.half_width, self.points)
        return np.linspace(-self.half_width, self.half_width, self.points)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.points, self.spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w


@dataclass
class Profile:
    """Real-valued samples of a candidate solution on a Grid.

    left_tail / right_tail declare the limits at -inf / +inf.  Half-line
    profiles represent odd extensions, so their left_tail is fixed to
    -right_tail (the reflection marker).
    """

    grid: Grid
    values: np.ndarray
    left_tail: float
    right_tail: float

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.points,):
            raise ValueError(
                f"values length {self.values.shape} does not match grid "
                f"points {self.grid.points}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("profile values must all be finite")
        if not (math.isfinite(self.left_tail) and math.isfinite(self.right_tail)):
            raise ValueError("declared tails must be finite")
        if self.grid.domain_kind == HALF_LINE:
            object.__setattr__(self, "left_tail", -float(self.right_tail))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "Profile":
        return cls(grid, np.full(grid.points, float(value)),
                   left_tail=value, right_tail=value)

    def copy_with(self, values: np.ndarray) -> "Profile":
        return Profile(self.grid, np.array(values, dtype=float),
                       self.left_tail, self.right_tail)


def kernel_H(p: int, u) -> float | np.ndarray:
    """Gaussian heat kernel (2 pi ln p)^(-1/2) exp(-u^2 / (2 ln p)).

    ``u`` is the unscaled time difference t - tau.  Normalized so the
    integral over the real line is 1.  Rejects p < 2.
    """
    _check_p(p)
    lp = math.log(p)
    u = np.asarray(u, dtype=float)
    out = np.exp(-(u * u) / (2.0 * lp)) / math.sqrt(2.0 * math.pi * lp)
    return float(out) if out.ndim == 0 else out


def kernel_K(t, tau) -> float | np.ndarray:
    """Antisymmetrized unit-width kernel on the quarter plane t, tau >= 0.

    K(t, tau) = (exp(-(t-tau)^2) - exp(-(t+tau)^2)) / sqrt(pi).
    Symmetric, nonnegative, and zero on the axes t = 0 and tau = 0.
    """
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(t < 0) or np.any(tau < 0):
        raise ValueError("kernel_K requires t >= 0 and tau >= 0")
    out = (np.exp(-((t - tau) ** 2)) - np.exp(-((t + tau) ** 2))) / SQRT_PI
    return float(out) if out.ndim == 0 else out


def _check_p(p: int) -> None:
    if int(p) != p or p < 2:
        raise ValueError(f"p must be an integer >= 2, got {p!r}")


def _erf_vector(x: np.ndarray) -> np.ndarray:
    return np.array([erf(v) for v in x])


class _KernelAction:
    """Weighted discrete kernel sums shared by both operators.

    Precomputes the sampled Gaussian e^{-(k h / width)^2} / (width sqrt(pi))
    for lag k = 0 .. 2(N-1); the direct path gathers it into a dense matrix
    (or row blocks above MATRIX_FREE_LIMIT), the FFT path runs the identical
    sums as zero-padded linear convolutions, so the two agree to rounding.
    """

    def __init__(self, grid: Grid, width: float):
        self.grid = grid
        self.width = width
        n = grid.points
        self.weights = grid.trapezoid_weights()
        lags = np.arange(2 * n - 1) * grid.spacing
        self.samples = np.exp(-((lags / width) ** 2)) / (width * SQRT_PI)
        # signed-lag table: _signed[m + n - 1] = samples[|m|]
        self._signed = np.concatenate([self.samples[n - 1:0:-1], self.samples[:n]])
        self.antisymmetric = grid.domain_kind == HALF_LINE
        self._matrix: np.ndarray | None = None

    def _row_views(self) -> tuple[np.ndarray, np.ndarray | None]:
        # Toeplitz rows samples[|i-j|] and Hankel rows samples[i+j] as
        # zero-copy sliding windows over the lag tables.
        n = self.grid.points
        toep = np.lib.stride_tricks.sliding_window_view(self._signed[::-1], n)[::-1]
        hank = None
        if self.antisymmetric:
            hank = np.lib.stride_tricks.sliding_window_view(self.samples, n)
        return toep, hank

    def _build_rows(self, row_slice: slice) -> np.ndarray:
        toep, hank = self._row_views()
        block = toep[row_slice] - hank[row_slice] if hank is not None else np.array(toep[row_slice])
        block *= self.weights[None, :]
        return block

    def matvec_direct(self, v: np.ndarray) -> np.ndarray:
        n = self.grid.points
        if self._matrix is None and n <= MATRIX_FREE_LIMIT:
            self._matrix = self._build_rows(slice(0, n))
        if self._matrix is not None:
            return self._matrix @ v
        out = np.empty(n)
        for start in range(0, n, _ROW_BLOCK):
            stop = min(start + _ROW_BLOCK, n)
            out[start:stop] = self._build_rows(slice(start, stop)) @ v
        return out

    def matvec_fft(self, v: np.ndarray) -> np.ndarray:
        n = self.grid.points
        g = self.weights * v
        out = fftconvolve(g, self._signed)[n - 1:2 * n - 1]
        if self.antisymmetric:
            out = out - fftconvolve(g[::-1], self.samples)[n - 1:2 * n - 1]
        return out

    def matvec(self, v: np.ndarray, method: str) -> np.ndarray:
        if method == "direct":
            return self.matvec_direct(v)
        if method == "fft":
            return self.matvec_fft(v)
        raise ValueError(f"unknown method {method!r}")


def _validate_method(method: str) -> str:
    if method not in ("direct", "fft"):
        raise ValueError(f"method must be 'direct' or 'fft', got {method!r}")
    return method


@dataclass
class HalfLineOperator:
    """Discretization of phi -> integral_0^inf K(t, tau) phi(tau) dtau.

    Works in rescaled units (unit kernel width).  The profile is assumed to
    equal its declared right_tail beyond the truncation radius; that constant
    component is convolved in closed form (integral of K over tau gives
    erf(t)), which also absorbs the analytic tail coefficients

        tail(t) = (erfc_tail(T - t) - erfc_tail(T + t)) / 2.
    """

    grid: Grid
    p_value: int
    method: str = "direct"
    quadrature_weights: np.ndarray = field(init=False)
    tail_coefficients: np.ndarray = field(init=False)
    constant_compensation: np.ndarray = field(init=False)
    _action: _KernelAction = field(init=False, repr=False)
    _erf_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        _check_p(self.p_value)
        _validate_method(self.method)
        if self.grid.domain_kind != HALF_LINE:
            raise ValueError("HalfLineOperator requires a half-line grid")
        t = self.grid.nodes()
        T = self.grid.half_width
        self._action = _KernelAction(self.grid, width=1.0)
        self.quadrature_weights = self._action.weights
        self.tail_coefficients = 0.5 * np.array(
            [erfc_tail(T - ti) - erfc_tail(T + ti) for ti in t]
        )
        self._erf_nodes = _erf_vector(t)
        # erf(t) = (discrete K acting on 1) + tail + O(h^2) endpoint defect;
        # the compensation carries tail and defect together so that applying
        # the operator to the constant-one profile returns erf(t) exactly.
        ones = np.ones(self.grid.points)
        self.constant_compensation = (
            self._erf_nodes - self._action.matvec(ones, self.method)
        )

    def apply(self, prof: Profile, method: str | None = None) -> Profile:
        if prof.grid != self.grid:
            raise ValueError("profile grid does not match operator grid")
        m = _validate_method(method or self.method)
        out = self._action.matvec(prof.values, m)
        out = out + prof.right_tail * self.constant_compensation
        return prof.copy_with(out)


@dataclass
class FullLineOperator:
    """Discretization of phi -> integral over R of H[(t-tau)^2] phi(tau) dtau.

    ``kernel_width`` is sqrt(2 ln p) when the grid carries unscaled time and
    1.0 when it carries rescaled time (the two conventions produce identical
    weighted sums under the coordinate substitution).

    Beyond the truncation radius the profile is replaced by its declared
    tails.  The tail structure m + delta*sgn(tau) (m = mean of tails,
    delta = half their difference) is convolved in closed form to
    m + delta*erf(t/width); the remainder is convolved by quadrature.
    A profile that IS a step (e.g. the sgn seed) is therefore mapped to
    erf(t/width) to the accuracy of erf itself.
    """

    grid: Grid
    p_value: int
    method: str = "fft"
    rescaled: bool = True
    kernel_width: float = field(init=False)
    quadrature_weights: np.ndarray = field(init=False)
    tail_coefficients_left: np.ndarray = field(init=False)
    tail_coefficients_right: np.ndarray = field(init=False)
    constant_compensation: np.ndarray = field(init=False)
    step_compensation: np.ndarray = field(init=False)
    _action: _KernelAction = field(init=False, repr=False)

    def __post_init__(self) -> None:
        _check_p(self.p_value)
        _validate_method(self.method)
        if self.grid.domain_kind != FULL_LINE:
            raise ValueError("FullLineOperator requires a full-line grid")
        self.kernel_width = 1.0 if self.rescaled else math.sqrt(2.0 * math.log(self.p_value))
        w = self.kernel_width
        t = self.grid.nodes()
        T = self.grid.half_width
        self._action = _KernelAction(self.grid, width=w)
        self.quadrature_weights = self._action.weights
        self.tail_coefficients_left = 0.5 * np.array(
            [erfc_tail((ti + T) / w) for ti in t]
        )
        self.tail_coefficients_right = 0.5 * np.array(
            [erfc_tail((T - ti) / w) for ti in t]
        )
        ones = np.ones(self.grid.points)
        step = np.sign(t)
        erf_t = _erf_vector(t / w)
        self.constant_compensation = 1.0 - self._action.matvec(ones, self.method)
        self.step_compensation = erf_t - self._action.matvec(step, self.method)

    def apply(self, prof: Profile, method: str | None = None) -> Profile:
        if prof.grid != self.grid:
            raise ValueError("profile grid does not match operator grid")
        m = _validate_method(method or self.method)
        mean = 0.5 * (prof.left_tail + prof.right_tail)
        delta = 0.5 * (prof.right_tail - prof.left_tail)
        out = self._action.matvec(prof.values, m)
        if mean != 0.0:
            out = out + mean * self.constant_compensation
        if delta != 0.0:
            out = out + delta * self.step_compensation
        return prof.copy_with(out)


def build_half_line_operator(p: int, grid: Grid, method: str = "direct") -> HalfLineOperator:
    """Precompute weights, tail coefficients and kernel action on [0, T]."""
    return HalfLineOperator(grid=grid, p_value=p, method=method)


def build_full_line_operator(
    p: int, grid: Grid, method: str = "fft", rescaled: bool = True
) -> FullLineOperator:
    """Precompute the full-line operator; set rescaled=False for unscaled time."""
    return FullLineOperator(grid=grid, p_value=p, method=method, rescaled=rescaled)


def apply(op: HalfLineOperator | FullLineOperator, prof: Profile) -> Profile:
    """Apply a discrete convolution operator using its configured method."""
    return op.apply(prof)


def apply_fft(op: FullLineOperator, prof: Profile) -> Profile:
    """Apply via the FFT path: the identical quadrature sums evaluated as
    zero-padded linear convolutions (multiplication by the sampled Gaussian
    symbol in frequency space), at O(N log N) cost."""
    return op.apply(prof, method="fft")
