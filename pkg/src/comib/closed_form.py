"""Closed-form compound rates for the binary, Gaussian, and spectral models.

Each solver returns a RateResult carrying the rate in bits, the solved
parameters, and residual diagnostics for any internal root equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FeasibilityError
from .simplex_core import (
    binary_convolve,
    binary_entropy,
    binary_entropy_inv,
    canonical_float,
    find_root_monotone,
)


@dataclass(frozen=True)
class RateResult:
    rate_bits: float
    params: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> str:
        def render(obj):
            if isinstance(obj, dict):
                return "{" + ", ".join(f'"{k}": {render(v)}' for k, v in obj.items()) + "}"
            if isinstance(obj, (list, tuple, np.ndarray)):
                return "[" + ", ".join(render(v) for v in obj) + "]"
            if isinstance(obj, bool):
                return "true" if obj else "false"
            if isinstance(obj, (int, np.integer)):
                return str(int(obj))
            if isinstance(obj, str):
                return f'"{obj}"'
            return canonical_float(float(obj))

        payload = {
            "rate_bits": self.rate_bits,
            "params": self.params,
            "diagnostics": self.diagnostics,
        }
        return render(payload)


@dataclass(frozen=True)
class GaussianScalarSpec:
    """Scalar jointly Gaussian pair with correlation floor rho and
    bottleneck budget capacity (bits)."""

    rho: float
    capacity: float

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise DomainError(f"rho must lie in [0, 1], got {self.rho!r}")
        if self.capacity < 0.0:
            raise DomainError(f"capacity must be nonnegative, got {self.capacity!r}")


@dataclass(frozen=True)
class GaussianVectorSpec:
    """White vector pair of dimension dim with total budgets c1, c2 (bits)."""

    dim: int
    c1: float
    c2: float

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError(f"dim must be a positive integer, got {self.dim!r}")
        if self.c1 < 0.0 or self.c2 < 0.0:
            raise DomainError("budgets c1, c2 must be nonnegative")


@dataclass(frozen=True)
class KldGaussianSpec:
    """Additive Gaussian noise with nominal variance sigma0_sq, divergence
    radius epsilon1 (nats), bottleneck budget c2 (bits)."""

    sigma0_sq: float
    epsilon1: float
    c2: float

    def __post_init__(self):
        if self.sigma0_sq <= 0.0:
            raise DomainError(f"sigma0_sq must be positive, got {self.sigma0_sq!r}")
        if self.epsilon1 < 0.0:
            raise DomainError(f"epsilon1 must be nonnegative, got {self.epsilon1!r}")
        if self.c2 < 0.0:
            raise DomainError(f"c2 must be nonnegative, got {self.c2!r}")


@dataclass(frozen=True)
class WaterfillSpec:
    """Parallel Gaussian components with singular values d_i in [0, 1) and
    total bottleneck budget c2 (bits)."""

    singular_values: np.ndarray
    c2: float

    def __post_init__(self):
        d = np.asarray(self.singular_values, dtype=float)
        if d.ndim != 1 or d.size < 1:
            raise DomainError("singular_values must be a nonempty 1-d vector")
        if np.any(d < 0.0) or np.any(d >= 1.0):
            raise DomainError("singular values must lie in [0, 1)")
        if self.c2 < 0.0:
            raise DomainError(f"c2 must be nonnegative, got {self.c2!r}")
        object.__setattr__(self, "singular_values", d)


@dataclass(frozen=True)
class SpectrumSpec:
    """Piecewise-flat spectrum: bands of (width_hz, snr), budget c2 (bits)."""

    bands: tuple
    c2: float

    def __post_init__(self):
        bands = tuple((float(w), float(s)) for w, s in self.bands)
        if not bands:
            raise DomainError("at least one band is required")
        for w, s in bands:
            if w <= 0.0:
                raise DomainError(f"band width must be positive, got {w!r}")
            if s < 0.0:
                raise DomainError(f"band snr must be nonnegative, got {s!r}")
        if self.c2 < 0.0:
            raise DomainError(f"c2 must be nonnegative, got {self.c2!r}")
        object.__setattr__(self, "bands", bands)


def binary_compound_rate(c1: float, c2: float) -> RateResult:
    """Worst-case doubly symmetric binary source through a symmetric
    bottleneck: rate = 1 - h_b(alpha conv beta) with alpha = h_b^{-1}(1-c1),
    beta = h_b^{-1}(1-c2). Monotone in both budgets, capped by min(c1, c2).
    """
    for name, c in (("c1", c1), ("c2", c2)):
        if not 0.0 <= c <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1] bits, got {c!r}")
    alpha = binary_entropy_inv(1.0 - c1)
    beta = binary_entropy_inv(1.0 - c2)
    rate = 1.0 - binary_entropy(binary_convolve(alpha, beta))
    return RateResult(
        rate_bits=rate,
        params={"alpha": alpha, "beta": beta},
        diagnostics={
            "residuals": {
                "alpha_entropy": abs(binary_entropy(alpha) - (1.0 - c1)),
                "beta_entropy": abs(binary_entropy(beta) - (1.0 - c2)),
            },
            "iterations": 0,
        },
    )


def scalar_gaussian_rate(spec: GaussianScalarSpec) -> RateResult:
    """rate = -1/2 log2(1 - rho^2 rho_c^2) with rho_c^2 = 1 - 2^{-2C}."""
    rho_c_sq = 1.0 - 2.0 ** (-2.0 * spec.capacity)
    inner = 1.0 - spec.rho**2 * rho_c_sq
    rate = -0.5 * math.log2(inner) if inner > 0.0 else float("inf")
    return RateResult(
        rate_bits=rate,
        params={"rho": spec.rho, "capacity": spec.capacity, "rho_c_sq": rho_c_sq},
        diagnostics={"residuals": {}, "iterations": 0},
    )


def vector_gaussian_rate(spec: GaussianVectorSpec) -> RateResult:
    """White n-vector: rate = -(n/2) log2(1 - rho1^2 rho2^2) with
    rho_k^2 = 1 - 2^{-2 c_k / n}; the budgets split evenly across
    components at the optimum."""
    n = spec.dim
    rho1_sq = 1.0 - 2.0 ** (-2.0 * spec.c1 / n)
    rho2_sq = 1.0 - 2.0 ** (-2.0 * spec.c2 / n)
    rate = -(n / 2.0) * math.log2(1.0 - rho1_sq * rho2_sq)
    return RateResult(
        rate_bits=rate,
        params={"dim": n, "rho1_sq": rho1_sq, "rho2_sq": rho2_sq},
        diagnostics={"residuals": {}, "iterations": 0},
    )


def kld_gaussian_rate(spec: KldGaussianSpec) -> RateResult:
    """Worst noise variance inside the divergence ball, then the scalar
    bottleneck formula.

    sigma*^2 = r sigma0^2 with r >= 1 the root of
    (1/2) ln r + r/2 - 1/2 = epsilon1 (the constraint is in nats);
    rate = 1/2 log2( 1 / (1 - (1 - 2^{-2 c2}) / (1 + sigma*^2)) ) bits.
    """

    def lhs(r: float) -> float:
        return 0.5 * math.log(r) + 0.5 * r - 0.5

    iters = 0
    if spec.epsilon1 == 0.0:
        r = 1.0
    else:
        hi = 2.0
        while lhs(hi) < spec.epsilon1:
            hi *= 2.0
            iters += 1
            if hi > 1e12:
                raise FeasibilityError("divergence radius too large to bracket")
        r = find_root_monotone(lambda x: lhs(x) - spec.epsilon1, 1.0, hi, tol=1e-13)
    sigma_star_sq = r * spec.sigma0_sq
    rho2_sq = 1.0 - 2.0 ** (-2.0 * spec.c2)
    rate = 0.5 * math.log2(1.0 / (1.0 - rho2_sq / (1.0 + sigma_star_sq)))
    return RateResult(
        rate_bits=rate,
        params={"sigma_star_sq": sigma_star_sq, "variance_ratio": r},
        diagnostics={
            "residuals": {"divergence_equation": abs(lhs(r) - spec.epsilon1)},
            "iterations": iters,
        },
    )


def _waterfill_budget(nu: float, d: np.ndarray) -> np.ndarray:
    """Per-component budget at water level nu; zero where inactive."""
    with np.errstate(divide="ignore"):
        arg = d**2 * (nu - 1.0) / (1.0 - d**2)
    out = np.where(arg > 1.0, 0.5 * np.log2(np.where(arg > 1.0, arg, 1.0)), 0.0)
    return out


def vector_ib_waterfill(spec: WaterfillSpec) -> RateResult:
    """Reverse water-filling across parallel components.

    The level nu > 1 solves sum_i [1/2 log2(d_i^2 (nu-1)/(1-d_i^2))]_+ = c2;
    component i is active iff nu > 1/d_i^2. The rate is
    sum_i [1/2 log2((nu-1)/(nu (1-d_i^2)))]_+ over the same active set.
    """
    d = spec.singular_values
    c2 = spec.c2
    if np.all(d == 0.0):
        if c2 > 0.0:
            raise FeasibilityError("all singular values are zero: no component can carry budget")
        return RateResult(0.0, params={"nu": 1.0, "allocations": [0.0] * d.size},
                          diagnostics={"residuals": {"budget": 0.0}, "iterations": 0})
    if c2 == 0.0:
        nu = float(1.0 / d.max() ** 2)
        alloc = np.zeros_like(d)
        return RateResult(0.0, params={"nu": nu, "allocations": alloc.tolist()},
                          diagnostics={"residuals": {"budget": 0.0}, "iterations": 0})

    hi = 2.0
    iters = 0
    while _waterfill_budget(hi, d).sum() < c2:
        hi *= 2.0
        iters += 1
        if hi > 1e300:
            raise FeasibilityError("budget cannot be met at any finite water level")
    nu = find_root_monotone(lambda x: _waterfill_budget(x, d).sum() - c2, 1.0, hi, tol=1e-13)
    alloc = _waterfill_budget(nu, d)
    active = nu * d**2 > 1.0
    with np.errstate(divide="ignore"):
        gain = (nu - 1.0) / (nu * (1.0 - d**2))
    rate = float(np.where(active, 0.5 * np.log2(np.where(active, gain, 1.0)), 0.0).sum())
    return RateResult(
        rate_bits=rate,
        params={"nu": float(nu), "allocations": alloc.tolist()},
        diagnostics={
            "residuals": {"budget": float(abs(alloc.sum() - c2))},
            "iterations": iters,
        },
    )


def continuous_ib_rate(spec: SpectrumSpec) -> RateResult:
    """Water level over a piecewise-flat spectrum; the band integrals are
    exact sums.

    c2 = sum_b w_b [1/2 log2(S_b (nu-1))]_+ determines nu, then
    rate = sum_b w_b [1/2 log2((1+S_b)(nu-1)/nu)]_+ over active bands
    (active iff nu > 1 + 1/S_b).
    """
    bands = spec.bands
    c2 = spec.c2
    widths = np.array([w for w, _ in bands])
    snrs = np.array([s for _, s in bands])
    if np.all(snrs == 0.0):
        if c2 > 0.0:
            raise FeasibilityError("zero snr in every band: budget cannot be met")
        return RateResult(0.0, params={"nu": 1.0}, diagnostics={"residuals": {"budget": 0.0}, "iterations": 0})

    def budget(nu: float) -> float:
        with np.errstate(divide="ignore"):
            arg = snrs * (nu - 1.0)
        terms = np.where(arg > 1.0, 0.5 * np.log2(np.where(arg > 1.0, arg, 1.0)), 0.0)
        return float((widths * terms).sum())

    if c2 == 0.0:
        nu = 1.0 + 1.0 / snrs.max()
        rate = 0.0
        resid = 0.0
        iters = 0
    else:
        hi = 2.0
        iters = 0
        while budget(hi) < c2:
            hi *= 2.0
            iters += 1
            if hi > 1e300:
                raise FeasibilityError("budget cannot be met at any finite water level")
        nu = find_root_monotone(lambda x: budget(x) - c2, 1.0, hi, tol=1e-13)
        active = nu > 1.0 + 1.0 / np.where(snrs > 0.0, snrs, np.inf)
        gain = (1.0 + snrs) * (nu - 1.0) / nu
        rate = float((widths * np.where(active, 0.5 * np.log2(np.where(active, gain, 1.0)), 0.0)).sum())
        resid = abs(budget(nu) - c2)
    return RateResult(
        rate_bits=rate,
        params={"nu": float(nu)},
        diagnostics={"residuals": {"budget": float(resid)}, "iterations": iters},
    )


def continuous_compound_rate(bw: float, c1: float, c2: float) -> RateResult:
    """Band-limited compound rate, symmetric in the two budgets:
    rate = bw log2( 1 / (1 - (1 - 2^{-c1/bw})(1 - 2^{-c2/bw})) ).
    """
    if bw <= 0.0:
        raise DomainError(f"bandwidth must be positive, got {bw!r}")
    if c1 < 0.0 or c2 < 0.0:
        raise DomainError("budgets c1, c2 must be nonnegative")
    g1 = 1.0 - 2.0 ** (-c1 / bw)
    g2 = 1.0 - 2.0 ** (-c2 / bw)
    rate = bw * math.log2(1.0 / (1.0 - g1 * g2))
    snr = 2.0 ** (c1 / bw) - 1.0
    return RateResult(
        rate_bits=rate,
        params={"bw": bw, "snr": snr},
        diagnostics={"residuals": {}, "iterations": 0},
    )
