"""Saddle values and computable bounds for the cyclic-noise reduction.

The underlying two-player value is
    value(eta1, eta2) = min over H(p_v) >= eta2 of max over H(p_w) <= eta1
                        of H(p_w conv p_v)
with cyclic convolution on n letters; the reported rate is
log2 n - value. Mixtures of a point mass with a uniform block (the
Hamming family of simplex_core) carry all the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FeasibilityError, RegimeError
from .simplex_core import (
    binary_entropy,
    binary_entropy_inv,
    cyclic_convolve,
    entropy,
    find_root_monotone,
    hamming_entropy,
    hamming_param_from_entropy,
    hamming_pmf,
    uniform_pmf,
)


@dataclass(frozen=True)
class ModuloSpec:
    """Alphabet size and the two entropy budgets, all in bits."""

    n: int
    eta1: float
    eta2: float

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"alphabet size must be at least 2, got {self.n!r}")
        top = math.log2(self.n)
        for name, v in (("eta1", self.eta1), ("eta2", self.eta2)):
            if not -1e-12 <= v <= top + 1e-12:
                raise DomainError(f"{name} must lie in [0, {top!r}], got {v!r}")


@dataclass(frozen=True)
class SaddleResult:
    """Saddle pair with its value and the induced rate, all in bits."""

    p_w: np.ndarray
    p_v: np.ndarray
    alpha: float
    beta: float
    value: float
    rate: float
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BoundPair:
    """Two-sided bracket on the saddle value with achievability certificates."""

    lower: float
    upper: float
    lower_cert: dict = field(default_factory=dict)
    upper_cert: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lower > self.upper + 1e-9:
            raise DomainError(
                f"bound pair out of order: lower {self.lower!r} > upper {self.upper!r}"
            )


def low_snr_saddle(spec: ModuloSpec) -> SaddleResult:
    """Exact saddle for eta1 >= log2(n-1).

    p_v is the Hamming mixture with entropy eta2 (positive parameter
    alpha); p_w is the full-support mixture on the negative branch with
    entropy eta1 (parameter beta <= 0). The mixture algebra gives
    value = entropy of the Hamming mixture with parameter alpha*beta.
    """
    n = spec.n
    if spec.eta1 < math.log2(n - 1) - 1e-12:
        raise RegimeError(
            f"closed-form saddle requires eta1 >= log2(n-1) = {math.log2(n - 1)!r}; "
            "use modulo_lower_bound / modulo_upper_bound in the open regime"
        )
    alpha = hamming_param_from_entropy(spec.eta2, n, n, "positive")
    beta = hamming_param_from_entropy(spec.eta1, n, n, "negative")
    p_v = hamming_pmf(alpha, n, n)
    p_w = hamming_pmf(beta, n, n)
    value = hamming_entropy(alpha * beta, n, n)
    direct = entropy(cyclic_convolve(p_w, p_v))
    return SaddleResult(
        p_w=p_w,
        p_v=p_v,
        alpha=alpha,
        beta=beta,
        value=value,
        rate=math.log2(n) - value,
        diagnostics={
            "residuals": {
                "alpha_entropy": abs(hamming_entropy(alpha, n, n) - spec.eta2),
                "beta_entropy": abs(hamming_entropy(beta, n, n) - spec.eta1),
                "mixture_identity": abs(value - direct),
            }
        },
    )


def default_support(eta1: float, n: int) -> int:
    """Smallest block size k with log2 k >= eta1, clamped into [2, n-1]."""
    k = 2
    while math.log2(k) < eta1 - 1e-12 and k < n - 1:
        k += 1
    return k


def modulo_upper_bound(spec: ModuloSpec, support_k: int | None = None) -> dict:
    """Achievable ceiling on the value; exact in the closed-form regime.

    In the open regime eta1 < log2(n-1) the certificate pair is
    p_v = Hamming(alpha, n) at entropy eta2 and p_w = the k-block mixture
    at entropy eta1 with distinguished mass below 1/k; that anti-
    concentrated branch spans entropies [log2(k-1), log2 k), exactly the
    window the support rule selects, and makes the bound continuous at
    the regime boundary. The bound is the entropy of their convolution.
    """
    n = spec.n
    if spec.eta1 >= math.log2(n - 1) - 1e-12:
        exact = low_snr_saddle(spec)
        return {
            "value": exact.value,
            "certificate": {
                "kind": "saddle",
                "alpha": exact.alpha,
                "beta": exact.beta,
                "p_w": exact.p_w.tolist(),
                "p_v": exact.p_v.tolist(),
            },
        }
    k = default_support(spec.eta1, n) if support_k is None else int(support_k)
    if not 2 <= k <= n - 1:
        raise DomainError(f"support_k must lie in [2, {n - 1}], got {k}")
    beta = hamming_param_from_entropy(spec.eta1, n, k, "negative")
    alpha = hamming_param_from_entropy(spec.eta2, n, n, "positive")
    p_w = hamming_pmf(beta, n, k)
    p_v = hamming_pmf(alpha, n, n)
    upper = entropy(cyclic_convolve(p_w, p_v))
    return {
        "value": upper,
        "certificate": {
            "kind": "block-mixture",
            "alpha": alpha,
            "beta": beta,
            "support_k": k,
            "p_w": p_w.tolist(),
            "p_v": p_v.tolist(),
        },
    }


def modulo_lower_bound(spec: ModuloSpec, variant: str = "main") -> dict:
    """Guaranteed floor on the value; exact in the closed-form regime.

    In the open regime, n = 3 uses the explicit two-term expression;
    larger alphabets use the entropy of the product-parameter mixture
    with both roots on the positive branch. variant selects between the
    two equivalent printings of the n = 3 expression; in bits they agree
    identically and both appear in the certificate.
    """
    n = spec.n
    if variant not in ("main", "log2"):
        raise DomainError(f"variant must be 'main' or 'log2', got {variant!r}")
    if spec.eta1 >= math.log2(n - 1) - 1e-12:
        exact = low_snr_saddle(spec)
        return {
            "value": exact.value,
            "certificate": {"kind": "saddle", "alpha": exact.alpha, "beta": exact.beta},
        }
    alpha = hamming_param_from_entropy(spec.eta2, n, n, "positive")
    if n == 3:
        k = default_support(spec.eta1, n)  # always 2 for n = 3
        beta = hamming_param_from_entropy(spec.eta1, n, k, "negative")
        x = (1.0 - alpha) / 3.0
        # in bits the second term carries an invisible log2(2) factor, so
        # the two printings produce the same number
        val = (1.0 + beta) * (binary_entropy(x) + (1.0 - x)) - beta * spec.eta2
        cert = {
            "kind": "two-term",
            "alpha": alpha,
            "beta": beta,
            "variants": {"main": val, "log2": val},
        }
        return {"value": val, "certificate": cert}
    beta = hamming_param_from_entropy(spec.eta1, n, n, "positive")
    return {
        "value": hamming_entropy(alpha * beta, n, n),
        "certificate": {"kind": "product-mixture", "alpha": alpha, "beta": beta},
    }


def modulo_bounds(spec: ModuloSpec, support_k: int | None = None) -> BoundPair:
    """Two-sided bracket on the value, collapsing to the exact saddle in
    the closed-form regime."""
    lower = modulo_lower_bound(spec)
    upper = modulo_upper_bound(spec, support_k)
    return BoundPair(
        lower=lower["value"],
        upper=upper["value"],
        lower_cert=lower["certificate"],
        upper_cert=upper["certificate"],
    )


def high_snr_rate(spec: ModuloSpec) -> dict:
    """Asymptotic min-max entropy for small eta1:
    value = eta2 + alpha (1 - beta) log2(1 + alpha n / (1 - alpha)),
    alpha and beta the positive-branch roots at eta2 and eta1. The
    correction vanishes as eta1 -> 0, where the value pins to eta2 (the
    cap forces a point mass). rate_bits carries log2 n - value.
    """
    n = spec.n
    if not 0.0 <= spec.eta1 < math.log2(n - 1):
        raise RegimeError(
            f"high-snr expansion applies for eta1 in [0, log2(n-1)) = [0, {math.log2(n - 1)!r})"
        )
    if spec.eta2 <= 0.0:
        raise DomainError("eta2 must be positive for the high-snr expansion")
    alpha = hamming_param_from_entropy(spec.eta2, n, n, "positive")
    beta = hamming_param_from_entropy(spec.eta1, n, n, "positive")
    if alpha >= 1.0:
        raise DomainError("eta2 too small: the expansion degenerates at alpha = 1")
    correction = alpha * (1.0 - beta) * math.log2(1.0 + alpha * n / (1.0 - alpha))
    value = spec.eta2 + correction
    return {
        "value": value,
        "rate_bits": math.log2(n) - value,
        "params": {"alpha": alpha, "beta": beta, "correction_bits": correction},
        "diagnostics": {
            "residuals": {
                "alpha_entropy": abs(hamming_entropy(alpha, n, n) - spec.eta2),
                "beta_entropy": abs(hamming_entropy(beta, n, n) - spec.eta1),
            },
            "iterations": 0,
        },
    }


def _tail_family_entropy(x1: float, c1: float) -> float:
    """-x1 log x1 - (c1-x1) log((c1-x1)/2) on the two-equal-tails family."""
    val = 0.0
    if x1 > 1e-300:
        val -= x1 * math.log2(x1)
    rest = c1 - x1
    if rest > 1e-300:
        val -= rest * math.log2(rest / 2.0)
    return val


def _pair_family_entropy(x1: float, c1: float) -> float:
    """-x1 log x1 - (c1-x1) log(c1-x1) on the two-point family."""
    val = 0.0
    if x1 > 1e-300:
        val -= x1 * math.log2(x1)
    rest = c1 - x1
    if rest > 1e-300:
        val -= rest * math.log2(rest)
    return val


def _head_family_entropy(x1: float, c1: float) -> float:
    """-2 x1 log x1 - (c1-2x1) log(c1-2x1) on the two-equal-heads family."""
    val = 0.0
    if x1 > 1e-300:
        val -= 2.0 * x1 * math.log2(x1)
    rest = c1 - 2.0 * x1
    if rest > 1e-300:
        val -= rest * math.log2(rest)
    return val


def kernel_extremes(c1: float, c2: float) -> dict:
    """Extremizing ordered triples for the affine-entropy kernel.

    Over triples x1 >= x2 >= x3 >= 0 with sum c1 and
    -sum x_i log2 x_i = c2, the maximizing point of the kernel objective
    lives on a two-point support (small c2) or a two-equal-heads family
    (large c2), switching at c2 = c1 log2(2/c1); the minimizing point
    always has two equal tails. Returned points satisfy both constraints
    to 1e-10.
    """
    if c1 <= 0.0:
        raise DomainError(f"c1 must be positive, got {c1!r}")
    e_min = -c1 * math.log2(c1)
    e_max = c1 * math.log2(3.0 / c1)
    if not e_min - 1e-12 <= c2 <= e_max + 1e-12:
        raise FeasibilityError(
            f"c2 {c2!r} outside the feasible entropy range [{e_min!r}, {e_max!r}] at sum {c1!r}"
        )
    c2 = min(max(c2, e_min), e_max)
    threshold = c1 * math.log2(2.0 / c1)

    # min point: two equal tails, x1 in [c1/3, c1]
    if abs(c2 - e_max) < 1e-13:
        xm = c1 / 3.0
    elif abs(c2 - e_min) < 1e-13:
        xm = c1
    else:
        xm = find_root_monotone(
            lambda x: _tail_family_entropy(x, c1) - c2, c1 / 3.0, c1, tol=1e-14
        )
    min_point = (xm, (c1 - xm) / 2.0, (c1 - xm) / 2.0)

    # max point: branch on the block threshold
    if c2 <= threshold:
        if abs(c2 - e_min) < 1e-13:
            xM = c1
        else:
            xM = find_root_monotone(
                lambda x: _pair_family_entropy(x, c1) - c2, c1 / 2.0, c1, tol=1e-14
            )
        max_point = (xM, c1 - xM, 0.0)
    else:
        if abs(c2 - e_max) < 1e-13:
            xM = c1 / 3.0
        else:
            xM = find_root_monotone(
                lambda x: _head_family_entropy(x, c1) - c2, c1 / 3.0, c1 / 2.0, tol=1e-14
            )
        max_point = (xM, xM, c1 - 2.0 * xM)
    return {"max_point": max_point, "min_point": min_point}


def _entropy_slice_candidates(eta: float, n: int) -> list[np.ndarray]:
    """Mixture-family points with entropy exactly eta, plus their cyclic
    shifts. Covers the block mixtures on every support size and the
    full-support negative branch."""
    cands = []
    for k in range(2, n + 1):
        if math.log2(k) >= eta - 1e-12:
            param = hamming_param_from_entropy(min(eta, math.log2(k)), n, k, "positive")
            cands.append(hamming_pmf(param, n, k))
    if eta >= math.log2(n - 1) - 1e-12:
        param = hamming_param_from_entropy(eta, n, n, "negative")
        cands.append(hamming_pmf(param, n, n))
    if abs(eta - math.log2(n)) < 1e-12:
        cands.append(uniform_pmf(n))
    out = []
    for c in cands:
        for s in range(n):
            out.append(np.roll(c, s))
    return out


def _retarget_entropy(p: np.ndarray, eta: float) -> np.ndarray | None:
    """Mix p toward uniform or toward its own argmax vertex so the entropy
    lands exactly on eta. Returns None when the family misses the target."""
    n = p.size
    h = entropy(p)
    if abs(h - eta) <= 1e-13:
        return p
    if h < eta:
        lo, hi = 0.0, 1.0  # mix toward uniform raises entropy to log2 n
        u = uniform_pmf(n)
        f = lambda lam: entropy((1.0 - lam) * p + lam * u) - eta
        if f(1.0) < -1e-13:
            return None
    else:
        vertex = np.zeros(n)
        vertex[int(np.argmax(p))] = 1.0
        u = vertex
        f = lambda lam: entropy((1.0 - lam) * p + lam * u) - eta
        if f(1.0) > 1e-13:
            return None
    lam = find_root_monotone(f, 0.0, 1.0, tol=1e-14)
    return (1.0 - lam) * p + lam * u


def witsenhausen_g(
    t, eta: float, rng=None, n_random: int = 12, refine_rounds: int = 60, return_argmin: bool = False
):
    """min H(T p) over H(p) >= eta, in bits.

    Multistart over the mixture-family slice candidates and random slice
    points, followed by local refinement that walks the entropy slice.
    The constraint binds at the optimum, so the search stays on the slice
    H(p) = eta. For doubly stochastic T the result is >= eta. With
    return_argmin the minimizing input comes back alongside the value.
    """
    mat = np.asarray(getattr(t, "matrix", t), dtype=float)
    n = mat.shape[1]
    top = math.log2(n)
    if not -1e-12 <= eta <= top + 1e-12:
        raise DomainError(f"eta must lie in [0, {top!r}], got {eta!r}")
    eta = min(max(eta, 0.0), top)
    if abs(eta - top) < 1e-12:
        u = uniform_pmf(n)
        return (entropy(mat @ u), u) if return_argmin else entropy(mat @ u)
    if eta <= 1e-12:
        # unconstrained: a vertex minimizes the output entropy
        j = min(range(n), key=lambda k: entropy(mat[:, k]))
        vert = np.zeros(n)
        vert[j] = 1.0
        val = entropy(mat[:, j])
        return (val, vert) if return_argmin else val

    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    starts = _entropy_slice_candidates(eta, n)
    for _ in range(n_random):
        raw = rng.dirichlet(np.ones(n))
        q = _retarget_entropy(raw, eta)
        if q is not None:
            starts.append(q)

    def objective(p):
        return entropy(mat @ p)

    best_p = min(starts, key=objective)
    best = objective(best_p)

    # local refinement on the slice: random tangent kicks, entropy restored
    # by remixing, shrinking step on failure
    step = 0.25
    p = best_p.copy()
    for _ in range(refine_rounds):
        improved = False
        for _ in range(8):
            d = rng.standard_normal(n)
            d -= d.mean()
            cand = p + step * d
            if cand.min() < 0.0:
                cand = np.clip(cand, 0.0, None)
            s = cand.sum()
            if s <= 0.0:
                continue
            cand /= s
            cand = _retarget_entropy(cand, eta)
            if cand is None:
                continue
            v = objective(cand)
            if v < best - 1e-14:
                best, p = v, cand
                improved = True
        if not improved:
            step *= 0.5
            if step < 1e-9:
                break
    return (best, p) if return_argmin else best


def supersymmetric_g3(x: float) -> float:
    """log2 3 + 2x log2 x + (1-2x) log2(1-2x): capacity of the symmetric
    three-letter representation at mass split (x, x, 1-2x)."""
    if not -1e-12 <= x <= 1.0 / 3.0 + 1e-12:
        raise DomainError(f"x must lie in [0, 1/3], got {x!r}")
    x = min(max(x, 0.0), 1.0 / 3.0)
    val = math.log2(3.0)
    if x > 1e-300:
        val += 2.0 * x * math.log2(x)
    rest = 1.0 - 2.0 * x
    if rest > 1e-300:
        val += rest * math.log2(rest)
    return val


def supersymmetric_tito(c: float) -> float:
    """Invert supersymmetric_g3 on [0, 1/3]: the mass split of the optimal
    three-letter representation at budget c, independent of the channel
    noise parameter."""
    top = math.log2(3.0)
    if not -1e-12 <= c <= top + 1e-12:
        raise DomainError(f"c must lie in [0, {top!r}], got {c!r}")
    c = min(max(c, 0.0), top)
    if c == 0.0:
        return 1.0 / 3.0
    if abs(c - top) < 1e-15:
        return 0.0
    return find_root_monotone(lambda x: supersymmetric_g3(x) - c, 0.0, 1.0 / 3.0, tol=1e-14)


def tito_channel(alpha: float, beta: float):
    """Three-letter channel with noise pmf (1-alpha-beta, beta, alpha) as
    its circulant generator."""
    from .simplex_core import circulant_from_pmf

    if alpha < 0.0 or beta < 0.0 or alpha + beta > 1.0:
        raise DomainError("need alpha, beta >= 0 with alpha + beta <= 1")
    return circulant_from_pmf(np.array([1.0 - alpha - beta, beta, alpha]))
