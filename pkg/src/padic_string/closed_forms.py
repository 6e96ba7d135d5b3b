"""Catalogue of exact solutions with residual verifiers.

Four families: the constant vacua (0 and 1 for even p, 0 and +-1 for odd p),
the rapidly growing Gaussian, the spatial soliton hump, and q-brane products
of soliton factors over transverse axes.  Each verifier checks the defining
equation either against the discrete operator (bounded solutions) or purely
through closed-form Gaussian algebra (the growing solution, whose grid
convolution is ill-posed and is deliberately not attempted).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import (
    FULL_LINE,
    FullLineOperator,
    Grid,
    Profile,
    build_full_line_operator,
)
from .special_functions import GaussianExponent, gaussian_convolve_closed_form

CONSTANT = "constant"
GROWING = "growing"
SOLITON = "soliton"
Q_BRANE = "q_brane"

# transverse grids beyond this many space dimensions fall back to sampling
MAX_GRID_DIMS = 6


def _check_p(p: int) -> None:
    if int(p) != p or p < 2:
        raise ValueError(f"p must be an integer >= 2, got {p!r}")


def _amplitude(p: int) -> float:
    return math.exp(math.log(p) / (2.0 * (p - 1)))


def _quadratic_rate(p: int) -> float:
    return (p - 1) / (2.0 * p * math.log(p))


@dataclass(frozen=True)
class ClosedForm:
    """One catalogued exact solution.

    kind: "constant", "growing", "soliton" or "q_brane".
    constant_value: the constant c (constant kind only).
    p_value: nonlinearity exponent (all other kinds).
    active_axes: spatial axis indices carrying a soliton factor (q_brane);
    the solution is constant along the remaining worldvolume directions.
    total_space_dims: d, so the spatial coordinate vector has length d - 1.
    """

    kind: str
    constant_value: float = 0.0
    p_value: int = 0
    active_axes: tuple[int, ...] = ()
    total_space_dims: int = 0

    @classmethod
    def constant(cls, c: float) -> "ClosedForm":
        return cls(kind=CONSTANT, constant_value=float(c))

    @classmethod
    def growing(cls, p: int) -> "ClosedForm":
        _check_p(p)
        return cls(kind=GROWING, p_value=int(p))

    @classmethod
    def soliton(cls, p: int) -> "ClosedForm":
        _check_p(p)
        return cls(kind=SOLITON, p_value=int(p))

    @classmethod
    def q_brane(cls, p: int, active_axes, total_space_dims: int) -> "ClosedForm":
        _check_p(p)
        axes = tuple(int(a) for a in active_axes)
        d = int(total_space_dims)
        if len(set(axes)) != len(axes):
            raise ValueError("active_axes must be distinct")
        if any(a < 0 or a >= d - 1 for a in axes):
            raise ValueError(f"axis indices must lie in [0, {d - 2}]")
        return cls(kind=Q_BRANE, p_value=int(p), active_axes=axes,
                   total_space_dims=d)


def evaluate(cf: ClosedForm, point) -> float:
    """Evaluate a closed form at a scalar time/space point (constant,
    growing, soliton) or at a spatial coordinate vector of length
    total_space_dims - 1 (q_brane; worldvolume components are ignored)."""
    if cf.kind == CONSTANT:
        return cf.constant_value
    if cf.kind == GROWING:
        t = float(point)
        return _amplitude(cf.p_value) * math.exp(_quadratic_rate(cf.p_value) * t * t)
    if cf.kind == SOLITON:
        x = float(point)
        return _amplitude(cf.p_value) * math.exp(-_quadratic_rate(cf.p_value) * x * x)
    if cf.kind == Q_BRANE:
        x = np.asarray(point, dtype=float)
        if x.shape != (cf.total_space_dims - 1,):
            raise ValueError(
                f"q-brane point must have {cf.total_space_dims - 1} components, "
                f"got shape {x.shape}"
            )
        sol = ClosedForm.soliton(cf.p_value)
        out = 1.0
        for axis in cf.active_axes:
            out *= evaluate(sol, x[axis])
        return out
    raise ValueError(f"unknown closed form kind {cf.kind!r}")


@dataclass
class ConstantReport:
    p_value: int
    residuals: dict[int, float]
    solutions: list[int]
    expected: list[int]
    matches_parity: bool


def verify_constant_fixed_points(p: int, op: FullLineOperator) -> ConstantReport:
    """Check which constants c in {-1, 0, 1} satisfy (H * c) = c^p.

    The verdict must match the parity rule exactly: {0, 1} for even p plus
    {-1} for odd p.
    """
    _check_p(p)
    residuals: dict[int, float] = {}
    solutions: list[int] = []
    for c in (-1, 0, 1):
        prof = Profile.constant(op.grid, float(c))
        lhs = op.apply(prof).values
        residual = float(np.max(np.abs(lhs - float(c) ** p)))
        residuals[c] = residual
        if residual < 1e-11:
            solutions.append(c)
    expected = [-1, 0, 1] if p % 2 == 1 else [0, 1]
    return ConstantReport(
        p_value=p,
        residuals=residuals,
        solutions=sorted(solutions),
        expected=sorted(expected),
        matches_parity=sorted(solutions) == sorted(expected),
    )


@dataclass
class GrowingReport:
    p_value: int
    rate_rel_error: float
    amplitude_rel_error: float
    amplitude_identity_error: float
    rate_margin: float
    passed: bool


def verify_growing_solution(p: int, tolerance: float = 1e-13) -> GrowingReport:
    """Verify H * Phi = Phi^p for the growing Gaussian by exponent algebra.

    The solution grows like exp(+c t^2), so grid convolution is ill-posed;
    the check is purely closed-form.  The convolution converges because
    alpha - beta = 1/(2 p ln p) > 0 (reported as rate_margin).
    """
    _check_p(p)
    lp = math.log(p)
    kernel = GaussianExponent(1.0 / math.sqrt(2.0 * math.pi * lp), -1.0 / (2.0 * lp))
    amp = _amplitude(p)
    phi = GaussianExponent(amp, _quadratic_rate(p))
    conv = gaussian_convolve_closed_form(kernel, phi)
    target = GaussianExponent(amp**p, p * _quadratic_rate(p))
    rate_err = abs(conv.rate - target.rate) / abs(target.rate)
    amp_err = abs(conv.coefficient - target.coefficient) / target.coefficient
    # p^(-1/2) e^{p ln p / (2(p-1))} collapses to the soliton/growing amplitude
    identity_err = abs(
        math.exp(p * lp / (2.0 * (p - 1))) / math.sqrt(p) - amp
    ) / amp
    margin = 1.0 / (2.0 * lp) - _quadratic_rate(p)
    return GrowingReport(
        p_value=p,
        rate_rel_error=rate_err,
        amplitude_rel_error=amp_err,
        amplitude_identity_error=identity_err,
        rate_margin=margin,
        passed=(rate_err <= tolerance and amp_err <= tolerance and margin > 0.0),
    )


@dataclass
class SolitonReport:
    p_value: int
    sup_residual: float
    peak_value: float
    peak_expected: float
    closed_form_rate_error: float
    closed_form_amplitude_error: float
    amplitude_identity_error: float
    passed: bool


def soliton_grid(p: int, points: int = 4097, safety: float = 8.0) -> Grid:
    """Symmetric unscaled grid wide enough that the soliton's p-th power is
    below ~1e-16 at the edges (half-width safety * sqrt(p ln p / (p-1)))."""
    _check_p(p)
    return Grid.full_line(safety * math.sqrt(p * math.log(p) / (p - 1)), points)


def verify_soliton(
    p: int, grid: Grid | None = None, method: str = "fft", tolerance: float = 1e-9
) -> SolitonReport:
    """Check the spatial equation Psi = H * (Psi^p) on a grid, plus the exact
    Gaussian algebra behind it.

    Raises ValueError when the grid is too narrow for the truncation to be
    negligible.
    """
    _check_p(p)
    if grid is None:
        grid = soliton_grid(p)
    if grid.domain_kind != FULL_LINE:
        raise ValueError("soliton verification needs a full-line grid")
    min_width = 8.0 * math.sqrt(p * math.log(p) / (p - 1))
    if grid.half_width < min_width:
        raise ValueError(
            f"grid half-width {grid.half_width} too narrow; need >= {min_width:.3f}"
        )
    sol = ClosedForm.soliton(p)
    x = grid.nodes()
    psi = np.array([evaluate(sol, xi) for xi in x])
    op = build_full_line_operator(p, grid, method=method, rescaled=False)
    conv = op.apply(Profile(grid, psi**p, left_tail=0.0, right_tail=0.0))
    sup_residual = float(np.max(np.abs(conv.values - psi)))

    lp = math.log(p)
    amp = _amplitude(p)
    kernel = GaussianExponent(1.0 / math.sqrt(2.0 * math.pi * lp), -1.0 / (2.0 * lp))
    psi_p = GaussianExponent(amp**p, -(p - 1) / (2.0 * lp))
    closed = gaussian_convolve_closed_form(kernel, psi_p)
    rate_err = abs(closed.rate - (-_quadratic_rate(p))) / _quadratic_rate(p)
    amp_err = abs(closed.coefficient - amp) / amp
    identity_err = abs(math.exp(p * lp / (2.0 * (p - 1))) / math.sqrt(p) - amp) / amp

    peak = float(psi[np.argmin(np.abs(x))])
    return SolitonReport(
        p_value=p,
        sup_residual=sup_residual,
        peak_value=peak,
        peak_expected=amp,
        closed_form_rate_error=rate_err,
        closed_form_amplitude_error=amp_err,
        amplitude_identity_error=identity_err,
        passed=(
            sup_residual <= tolerance
            and rate_err <= 1e-13
            and amp_err <= 1e-13
            and identity_err <= 1e-14
        ),
    )


@dataclass
class QBraneReport:
    p_value: int
    q: int
    total_space_dims: int
    transverse_axes: tuple[int, ...]
    per_axis_residual: float
    product_residual: float
    accumulation_bound: float
    samples: int
    passed: bool


def verify_q_brane(
    p: int,
    q: int,
    d: int,
    grid: Grid | None = None,
    samples: int = 100,
    rng_seed: int = 0,
    tolerance: float = 1e-9,
) -> QBraneReport:
    """Verify separability of the q-brane product of soliton factors.

    The d-dimensional convolution of a separable product factorizes into
    per-axis 1-D convolutions, so the brane residual at sampled transverse
    points accumulates the per-axis soliton residuals.  Worldvolume
    directions carry no factor by construction.
    """
    _check_p(p)
    d = int(d)
    q = int(q)
    if not (0 <= q <= d - 2):
        raise ValueError(f"q must satisfy 0 <= q <= d-2, got q={q}, d={d}")
    k = d - 1 - q
    if k < 1:
        raise ValueError("at least one transverse axis required")
    if grid is None:
        grid = soliton_grid(p, points=2049 if d <= MAX_GRID_DIMS else 1025)

    axes = tuple(range(q, d - 1))
    cf = ClosedForm.q_brane(p, axes, d)
    sol = ClosedForm.soliton(p)

    one_d = verify_soliton(p, grid, tolerance=tolerance)
    x = grid.nodes()
    psi = np.array([evaluate(sol, xi) for xi in x])
    op = build_full_line_operator(p, grid, method="fft", rescaled=False)
    conv = op.apply(Profile(grid, psi**p, left_tail=0.0, right_tail=0.0)).values

    rng = np.random.default_rng(rng_seed)
    # sample transverse grid indices near the core where the product is O(1)
    core = np.nonzero(np.abs(x) <= 2.5)[0]
    idx = rng.choice(core, size=(samples, k))
    product_residual = 0.0
    for row in idx:
        point = np.zeros(d - 1)
        point[list(axes)] = x[row]
        exact = evaluate(cf, point)
        discrete = float(np.prod(conv[row]))
        product_residual = max(product_residual, abs(discrete - exact))
    amp_bound = float(np.max(conv))
    accumulation = k * one_d.sup_residual * amp_bound ** (k - 1)

    return QBraneReport(
        p_value=p,
        q=q,
        total_space_dims=d,
        transverse_axes=axes,
        per_axis_residual=one_d.sup_residual,
        product_residual=product_residual,
        accumulation_bound=accumulation,
        samples=samples,
        passed=(
            product_residual <= tolerance
            and product_residual <= accumulation * (1.0 + 1e-6) + 1e-15
            and one_d.passed
        ),
    )
