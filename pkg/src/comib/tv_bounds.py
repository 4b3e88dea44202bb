"""Total-variation compound machinery.

Unnormalized TV convention throughout: d(p, q) = sum |p_i - q_i|, range
[0, 2]. All entropies in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .modulo_saddle import BoundPair, _entropy_slice_candidates, _retarget_entropy
from .simplex_core import (
    Pmf,
    as_pmf,
    binary_entropy,
    circulant_from_pmf,
    cyclic_convolve,
    entropy,
    find_root_monotone,
    hamming_param_from_entropy,
    hamming_pmf,
    tv_distance,
    uniform_pmf,
)


@dataclass(frozen=True)
class TvSpec:
    """Nominal first-stage pmf, TV radius around it, and the entropy
    floor on the second player."""

    nominal: Pmf
    delta: float
    eta2: float

    def __post_init__(self):
        if not isinstance(self.nominal, Pmf):
            object.__setattr__(self, "nominal", Pmf(as_pmf(self.nominal)))
        if not 0.0 <= self.delta <= 2.0:
            raise DomainError(f"delta must lie in [0, 2], got {self.delta!r}")
        top = math.log2(self.nominal.n)
        if not -1e-12 <= self.eta2 <= top + 1e-12:
            raise DomainError(f"eta2 must lie in [0, {top!r}], got {self.eta2!r}")

    @property
    def n(self) -> int:
        return self.nominal.n


def entropy_continuity_omega(delta: float, n: int) -> float:
    """Entropy modulus of continuity in TV: (delta/2) log2(n-1) +
    h_b(delta/2). Dominates |H(p) - H(q)| whenever d(p, q) <= delta."""
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    if n < 2:
        raise DomainError(f"alphabet size must be at least 2, got {n}")
    return 0.5 * delta * math.log2(n - 1) + binary_entropy(0.5 * delta)


def dobrushin_theta(t) -> float:
    """Contraction coefficient: half the largest TV distance between two
    conditional output laws. The matrix acts on column pmfs, so those laws
    are the columns; this is the smallest c with d(Tp, Tq) <= c d(p, q).
    Circulant matrices need only the n-1 distances from the first column,
    since every pair is a cyclic relabeling of one of those."""
    mat = np.asarray(getattr(t, "matrix", t), dtype=float)
    n = mat.shape[0]
    if mat.shape != (n, n):
        raise DomainError(f"square matrix required, got shape {mat.shape}")
    cols = mat.T
    circulant = all(np.allclose(cols[i], np.roll(cols[0], i), atol=1e-13) for i in range(1, n))
    if circulant:
        worst = max(np.abs(cols[0] - np.roll(cols[0], k)).sum() for k in range(1, n))
    else:
        worst = max(
            np.abs(cols[i] - cols[j]).sum() for i in range(n) for j in range(i + 1, n)
        )
    return float(min(1.0, 0.5 * worst))


def min_entropy_tv_ball_uniform(delta: float, n: int) -> dict:
    """Gamma(delta): least entropy within TV radius delta of uniform.

    The minimizer lifts the first coordinate by delta/2, keeps a flat
    interior, and trims the tail; past delta = 2 - 2/n the ball reaches a
    point mass and the minimum pins to zero.
    """
    if not 0.0 <= delta <= 2.0:
        raise DomainError(f"delta must lie in [0, 2], got {delta!r}")
    if n < 2:
        raise DomainError(f"alphabet size must be at least 2, got {n}")
    if delta / 2.0 >= 1.0 - 1.0 / n - 1e-15:
        q = np.zeros(n)
        q[0] = 1.0
        return {"gamma": 0.0, "argmin": Pmf(q)}
    n0 = min(n, int(math.floor(n + 1 - n * delta / 2.0)))
    q = np.zeros(n)
    q[0] = 1.0 / n + delta / 2.0
    q[1 : n0 - 1] = 1.0 / n
    q[n0 - 1] = (n - n0 + 1) / n - delta / 2.0
    return {"gamma": entropy(q), "argmin": Pmf(q)}


def gamma_inverse(eta: float, n: int) -> float:
    """D(eta): the TV radius at which Gamma equals eta, by bisection on
    the strictly decreasing branch [0, 2 - 2/n]."""
    top = math.log2(n)
    if not -1e-12 <= eta <= top + 1e-12:
        raise DomainError(f"eta must lie in [0, {top!r}], got {eta!r}")
    eta = min(max(eta, 0.0), top)
    hi = 2.0 - 2.0 / n
    if eta == top:
        return 0.0
    if eta == 0.0:
        return hi
    return find_root_monotone(
        lambda d: min_entropy_tv_ball_uniform(d, n)["gamma"] - eta, 0.0, hi, tol=1e-13
    )


def max_tv_at_entropy_floor(eta: float, n: int) -> float:
    """Radius of the smallest TV ball around uniform containing every pmf
    of entropy >= eta.

    The extremal pmf takes at most two distinct values (a on k
    coordinates, b on the rest): stationarity of sum |q - 1/n| under an
    entropy constraint forces two levels. Scanning k with one bisection
    each is exact. Note this is strictly larger than gamma_inverse(eta)
    in general: the Gamma minimizer is one particular shape, while the
    covering radius must reach the most distant one.
    """
    top = math.log2(n)
    if not -1e-12 <= eta <= top + 1e-12:
        raise DomainError(f"eta must lie in [0, {top!r}], got {eta!r}")
    eta = min(max(eta, 0.0), top)
    best = 0.0
    for k in range(1, n):

        def level_entropy(a, k=k):
            b = (1.0 - k * a) / (n - k)
            val = 0.0
            if a > 1e-300:
                val -= k * a * math.log2(a)
            if b > 1e-300:
                val -= (n - k) * b * math.log2(b)
            return val

        if eta <= math.log2(k) + 1e-12:
            # floor not binding on this family: the bare k-support end
            a = 1.0 / k
        else:
            a = find_root_monotone(lambda a: level_entropy(a) - eta, 1.0 / n, 1.0 / k, tol=1e-14)
        best = max(best, 2.0 * (k * a - k / n))
    return best


def max_entropy_tv_ball(delta: float, p0) -> dict:
    """Phi(delta; p0): greatest entropy within TV radius delta of p0.

    The maximizer clips p0 to a cap mu and a floor nu, each solved so
    that exactly delta/2 of mass moves: sum (p_i - mu)_+ = delta/2 and
    sum (nu - p_i)_+ = delta/2. When the floor meets or passes the cap
    the ball contains uniform and the maximum is log2 n.
    """
    if not 0.0 <= delta <= 2.0:
        raise DomainError(f"delta must lie in [0, 2], got {delta!r}")
    p = as_pmf(p0)
    n = p.size
    if delta == 0.0:
        return {"phi": entropy(p), "argmax": Pmf(p), "mu": float(p.max()), "nu": float(p.min())}
    half = 0.5 * delta

    def excess_above(m):
        return float(np.clip(p - m, 0.0, None).sum()) - half

    def deficit_below(v):
        return float(np.clip(v - p, 0.0, None).sum()) - half

    if excess_above(0.0) <= 0.0:
        # the whole mass fits under the cap budget: uniform is reachable
        return {"phi": math.log2(n), "argmax": Pmf(uniform_pmf(n)), "mu": 1.0 / n, "nu": 1.0 / n}
    mu = find_root_monotone(excess_above, 0.0, float(p.max()), tol=1e-15)
    nu = find_root_monotone(deficit_below, float(p.min()), 1.0, tol=1e-15)
    if nu >= mu:
        return {"phi": math.log2(n), "argmax": Pmf(uniform_pmf(n)), "mu": mu, "nu": nu}
    q = np.clip(p, nu, mu)
    q = q / q.sum()
    return {"phi": entropy(q), "argmax": Pmf(q), "mu": mu, "nu": nu}


def _ball_candidates(nominal: np.ndarray, delta: float, rng: np.random.Generator) -> list:
    """Feasible first-player candidates: the nominal, contractions toward
    uniform, the entropy-max clip, a concentration move, and random ball
    points. At most 20 entries."""
    n = nominal.size
    u = uniform_pmf(n)
    cands = [nominal.copy()]
    d_u = float(np.abs(nominal - u).sum())
    if d_u > 1e-15:
        t_full = min(1.0, delta / d_u)
        cands.append(nominal + t_full * (u - nominal))
        cands.append(nominal + 0.5 * t_full * (u - nominal))
    cands.append(np.asarray(max_entropy_tv_ball(delta, nominal)["argmax"].probs))
    # concentrate: lift the heaviest letter, trim from the lightest up
    j = int(np.argmax(nominal))
    lift = min(0.5 * delta, 1.0 - nominal[j])
    conc = nominal.copy()
    conc[j] += lift
    order = np.argsort(nominal)
    left = lift
    for i in order:
        if i == j or left <= 0.0:
            continue
        take = min(conc[i], left)
        conc[i] -= take
        left -= take
    if left <= 1e-12:
        cands.append(conc)
    for _ in range(12):
        raw = rng.dirichlet(np.ones(n))
        d = float(np.abs(raw - nominal).sum())
        if d <= 1e-15:
            continue
        s = min(1.0, delta / d) * rng.uniform(0.2, 1.0)
        cands.append(nominal + s * (raw - nominal))
    out = []
    for c in cands:
        c = np.clip(c, 0.0, None)
        c = c / c.sum()
        if np.abs(c - nominal).sum() <= delta + 1e-10:
            out.append(c)
    return out


def _slice_candidates_v(eta2: float, n: int, rng: np.random.Generator) -> list:
    """Second-player candidates on the exact entropy slice H = eta2."""
    cands = list(_entropy_slice_candidates(eta2, n))
    for _ in range(6):
        raw = rng.dirichlet(np.ones(n))
        q = _retarget_entropy(raw, eta2)
        if q is not None:
            cands.append(q)
    return cands


def tv_compound_bounds(spec: TvSpec, rng=None) -> BoundPair:
    """Bracket on the TV-class compound value min over H(P_V) >= eta2 of
    max over the delta-ball of H(P_W conv P_V).

    Lower: any feasible P_W gives value >= Gamma(theta(T_W) * D), D the
    covering radius of the entropy-floor set; the best of a fixed
    candidate family is reported. Upper: any P_V on the entropy slice
    caps the inner max by Phi(theta(T_V) * delta; P_V conv nominal); the
    family is the mixture candidates plus a local slice search. Both
    families stay under 64 evaluations.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n = spec.n
    nominal = np.asarray(spec.nominal.probs, dtype=float)
    cover = max_tv_at_entropy_floor(spec.eta2, n)

    best_lower, best_w, best_theta_w = -np.inf, None, None
    for w in _ball_candidates(nominal, spec.delta, rng):
        th = dobrushin_theta(circulant_from_pmf(w))
        val = min_entropy_tv_ball_uniform(min(2.0, th * cover), n)["gamma"]
        if val > best_lower:
            best_lower, best_w, best_theta_w = val, w, th
    lower_cert = {
        "kind": "tv-lower",
        "p_w": best_w.tolist(),
        "theta": best_theta_w,
        "cover_radius": cover,
    }
    if best_theta_w >= 1.0 - 1e-12:
        lower_cert["warning"] = (
            "every candidate channel has contraction coefficient 1 (some pair of "
            "rows is disjoint); the bound degenerates to the raw ball minimum. "
            "Candidates with support larger than n/2 would contract strictly."
        )

    def upper_objective(v: np.ndarray) -> float:
        th = dobrushin_theta(circulant_from_pmf(v))
        center = cyclic_convolve(v, nominal)
        return max_entropy_tv_ball(min(2.0, th * spec.delta), center)["phi"]

    cands = _slice_candidates_v(spec.eta2, n, rng)
    best_v = min(cands, key=upper_objective)
    best_upper = upper_objective(best_v)
    # local slice walk from the incumbent, shrinking random kicks
    step = 0.25
    for _ in range(20):
        improved = False
        for _ in range(2):
            d = rng.standard_normal(n)
            d -= d.mean()
            cand = np.clip(best_v + step * d, 0.0, None)
            s = cand.sum()
            if s <= 0.0:
                continue
            cand = _retarget_entropy(cand / s, spec.eta2)
            if cand is None:
                continue
            val = upper_objective(cand)
            if val < best_upper - 1e-14:
                best_upper, best_v = val, cand
                improved = True
        if not improved:
            step *= 0.5
            if step < 1e-6:
                break
    th_v = dobrushin_theta(circulant_from_pmf(best_v))
    upper_cert = {
        "kind": "tv-upper",
        "p_v": best_v.tolist(),
        "theta": th_v,
        "center": cyclic_convolve(best_v, nominal).tolist(),
    }
    return BoundPair(
        lower=float(best_lower), upper=float(best_upper),
        lower_cert=lower_cert, upper_cert=upper_cert,
    )


def ceb_sandwich(delta: float, eta2: float, r_ceb: float, n: int) -> tuple:
    """Interval [r_ceb - omega, r_ceb + omega] clamped to [0, log2 n]:
    the TV-class value can drift from the nominal-channel value by at
    most the continuity modulus."""
    w = entropy_continuity_omega(delta, n)
    top = math.log2(n)
    return (max(0.0, r_ceb - w), min(top, r_ceb + w))
