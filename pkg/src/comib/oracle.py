"""Brute-force grid oracles.

These never reuse the closed forms they are meant to check: extremes are
located by enumerating simplex grids (compositions of m for n <= 4,
Dirichlet samples above that), by walking entropy level curves, and by
local shrinking-step refinement.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FeasibilityError
from .modulo_saddle import (
    ModuloSpec,
    supersymmetric_g3,
    supersymmetric_tito,
    tito_channel,
    witsenhausen_g,
)
from .simplex_core import (
    binary_entropy,
    binary_entropy_inv,
    circulant_from_pmf,
    cyclic_convolve,
    entropy,
    entropy_rows,
    hamming_param_from_entropy,
    hamming_pmf,
    uniform_pmf,
)

log = logging.getLogger("comib.oracle")

GRID_SIZE_GUARD = 100_000_000
DIRICHLET_SAMPLES = 1_000_000


@dataclass(frozen=True)
class GridSpec:
    """Simplex grid: compositions of resolution m into n parts, scaled by
    1/m. Sizes C(m+n-1, n-1) beyond the guard are refused up front."""

    n: int
    resolution: int

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"alphabet size must be at least 2, got {self.n!r}")
        if self.resolution < 1:
            raise DomainError(f"resolution must be positive, got {self.resolution!r}")

    @property
    def size(self) -> int:
        return math.comb(self.resolution + self.n - 1, self.n - 1)

    def points(self, rng=None) -> np.ndarray:
        """Enumerate the grid (n <= 4) or Dirichlet-sample it (n >= 5)."""
        n, m = self.n, self.resolution
        log.info("grid n=%d m=%d size=%d", n, m, self.size)
        if self.size > GRID_SIZE_GUARD:
            raise DomainError(
                f"grid size {self.size} exceeds the {GRID_SIZE_GUARD} guard; lower the resolution"
            )
        if n <= 4:
            return _compositions(m, n) / float(m)
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        return rng.dirichlet(np.ones(n), size=DIRICHLET_SAMPLES)


def _compositions(m: int, n: int) -> np.ndarray:
    """All nonnegative integer n-tuples summing to m, lexicographic order."""
    if n == 1:
        return np.array([[m]], dtype=float)
    if n == 2:
        i = np.arange(m + 1)
        return np.stack([i, m - i], axis=1).astype(float)
    if n == 3:
        i = np.repeat(np.arange(m + 1), np.arange(m + 1, 0, -1))
        j = np.concatenate([np.arange(m - v + 1) for v in range(m + 1)])
        return np.stack([i, j, m - i - j], axis=1).astype(float)
    rows = [
        (*head, m - sum(head))
        for head in itertools.product(range(m + 1), repeat=n - 1)
        if sum(head) <= m
    ]
    return np.asarray(rows, dtype=float)


def grid_extremize(t, eta: float, direction: str, side: str, grid: GridSpec, rng=None) -> dict:
    """Extremize the output entropy H(T p) over grid points whose input
    entropy sits above (floor) or below (ceiling) eta. Ties broken by the
    lexicographically smallest argument."""
    if direction not in ("min", "max"):
        raise DomainError(f"direction must be 'min' or 'max', got {direction!r}")
    if side not in ("input_entropy_floor", "input_entropy_ceiling"):
        raise DomainError(
            f"side must be 'input_entropy_floor' or 'input_entropy_ceiling', got {side!r}"
        )
    mat = np.asarray(getattr(t, "matrix", t), dtype=float)
    pts = grid.points(rng)
    h_in = entropy_rows(pts)
    if side == "input_entropy_floor":
        mask = h_in >= eta - 1e-12
    else:
        mask = h_in <= eta + 1e-12
    if not mask.any():
        raise FeasibilityError(
            f"no grid point with entropy {'>=' if side.endswith('floor') else '<='} {eta!r} "
            f"at resolution {grid.resolution}"
        )
    feas = pts[mask]
    h_out = entropy_rows(feas @ mat.T)
    opt = h_out.min() if direction == "min" else h_out.max()
    ties = feas[h_out == opt]
    arg = ties[np.lexsort(ties.T[::-1])][0]
    return {"value": float(opt), "argpoint": arg.copy()}


def default_saddle_tol(n: int, resolution: int) -> float:
    """Dominant linear term of the entropy continuity modulus at the
    grid's variation radius."""
    return 3.0 * math.log2(max(n - 1, 2)) / resolution


def saddle_check(p_w, p_v, spec: ModuloSpec, grid: GridSpec, tol: float | None = None) -> dict:
    """One-sided grid extremality test for a claimed saddle pair.

    The pair passes when no grid-feasible deviation improves either side
    by more than tol: no H(p_w') <= eta1 with larger convolved entropy
    against p_v, and no H(p_v') >= eta2 with smaller convolved entropy
    against p_w.
    """
    if spec.n != grid.n:
        raise DomainError("grid and spec alphabet sizes differ")
    if tol is None:
        tol = default_saddle_tol(spec.n, grid.resolution)
    pw = np.asarray(getattr(p_w, "probs", p_w), dtype=float)
    pv = np.asarray(getattr(p_v, "probs", p_v), dtype=float)
    value = entropy(cyclic_convolve(pw, pv))
    pts = grid.points()
    h_in = entropy_rows(pts)

    t_v = circulant_from_pmf(pv).matrix
    mask_w = h_in <= spec.eta1 + 1e-12
    max_side = -np.inf
    arg_w = None
    if mask_w.any():
        vals = entropy_rows(pts[mask_w] @ t_v.T)
        i = int(np.argmax(vals))
        max_side = float(vals[i])
        arg_w = pts[mask_w][i].copy()

    t_w = circulant_from_pmf(pw).matrix
    mask_v = h_in >= spec.eta2 - 1e-12
    min_side = np.inf
    arg_v = None
    if mask_v.any():
        vals = entropy_rows(pts[mask_v] @ t_w.T)
        i = int(np.argmin(vals))
        min_side = float(vals[i])
        arg_v = pts[mask_v][i].copy()

    viol_max = max_side - value if arg_w is not None else -np.inf
    viol_min = value - min_side if arg_v is not None else -np.inf
    worst = float(max(viol_max, viol_min))
    return {
        "is_saddle": bool(worst <= tol),
        "worst_violation": worst,
        "value": value,
        "tol": tol,
        "max_side_violation": float(viol_max),
        "min_side_violation": float(viol_min),
        "improving_w": arg_w,
        "improving_v": arg_v,
    }


def binary_compound_oracle(c1: float, c2: float, steps: int = 100, refine_boundary: bool = True) -> dict:
    """Brute-force binary rate: grid over the two free parameters of a
    binary representation channel, maximizing I(X;Z) subject to
    I(Y;Z) <= c2, with the source pair held at the worst admissible
    doubly symmetric crossover.

    refine_boundary polishes each grid column to the exact budget
    boundary with a bisection, removing the dominant grid bias.
    """
    for name, c in (("c1", c1), ("c2", c2)):
        if not 0.0 <= c <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {c!r}")
    if steps < 100:
        raise DomainError(f"steps must be at least 100, got {steps}")
    alpha = binary_entropy_inv(1.0 - c1)

    a = np.linspace(0.0, 1.0, steps)
    b = np.linspace(0.0, 1.0, steps)
    A, B = np.meshgrid(a, b, indexing="ij")

    def _hb(x):
        x = np.clip(x, 0.0, 1.0)
        inner = np.where((x > 1e-15) & (x < 1.0 - 1e-15), x, 0.5)
        h = -inner * np.log2(inner) - (1.0 - inner) * np.log2(1.0 - inner)
        return np.where((x > 1e-15) & (x < 1.0 - 1e-15), h, 0.0)

    pz0 = 0.5 * (1.0 - A + B)
    i_yz = _hb(pz0) - 0.5 * _hb(A) - 0.5 * _hb(B)
    pz0_x0 = (1.0 - alpha) * (1.0 - A) + alpha * B
    pz0_x1 = alpha * (1.0 - A) + (1.0 - alpha) * B
    i_xz = _hb(pz0) - 0.5 * _hb(pz0_x0) - 0.5 * _hb(pz0_x1)

    feas = i_yz <= c2 + 1e-12
    if not feas.any():
        raise FeasibilityError("no feasible grid point under the budget")
    vals = np.where(feas, i_xz, -np.inf)
    best = float(vals.max())
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best_arg = (float(a[i]), float(b[j]))

    if refine_boundary:
        # on each a-column the budget binds at one b on each side of the
        # zero-information axis b = a; bisect all columns at once
        def iyz_vec(av, bv):
            return _hb(0.5 * (1.0 - av + bv)) - 0.5 * _hb(av) - 0.5 * _hb(bv)

        def ixz_vec(av, bv):
            q0 = (1.0 - alpha) * (1.0 - av) + alpha * bv
            q1 = alpha * (1.0 - av) + (1.0 - alpha) * bv
            return _hb(0.5 * (1.0 - av + bv)) - 0.5 * _hb(q0) - 0.5 * _hb(q1)

        for bend in (0.0, 1.0):
            lo = a.copy()
            hi = np.full_like(a, bend)
            flo = iyz_vec(a, lo) - c2
            fhi = iyz_vec(a, hi) - c2
            mask = flo * fhi <= 0.0
            if not mask.any():
                continue
            for _ in range(50):
                mid = 0.5 * (lo + hi)
                fm = iyz_vec(a, mid) - c2
                same = fm * flo >= 0.0
                lo = np.where(mask & same, mid, lo)
                flo = np.where(mask & same, fm, flo)
                hi = np.where(mask & ~same, mid, hi)
            bstar = 0.5 * (lo + hi)
            yv = iyz_vec(a, bstar)
            xv = np.where(mask & (yv <= c2 + 1e-9), ixz_vec(a, bstar), -np.inf)
            i = int(np.argmax(xv))
            if xv[i] > best:
                best = float(xv[i])
                best_arg = (float(a[i]), float(bstar[i]))

    return {"value_bits": best, "arg": best_arg, "alpha": alpha}


# ---------------------------------------------------------------------------
# max-min value oracle on the three-letter simplex


def _entropy3(w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(w > 1e-15, w * np.log2(np.where(w > 1e-15, w, 1.0)), 0.0)
    return -c.sum(axis=-1)


def _level_curve3(eta: float, count: int) -> np.ndarray:
    """Points on {H(w) = eta} in the 3-simplex.

    For eta >= 1 the level set is one closed curve around the center,
    walked by rays from the center; below 1 it splits into three lobes
    around the vertices, and by cyclic symmetry of every use site only
    the lobe at the first vertex is needed, walked by rays from that
    vertex."""
    if eta >= 1.0:
        psi = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)
        e1 = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
        e2 = np.array([1.0, 1.0, -2.0]) / math.sqrt(6.0)
        dirs = np.cos(psi)[:, None] * e1 + np.sin(psi)[:, None] * e2
        center = np.full(3, 1.0 / 3.0)
        with np.errstate(divide="ignore"):
            r_max = np.min(
                np.where(dirs < -1e-15, (1.0 / 3.0) / np.maximum(-dirs, 1e-300), np.inf), axis=1
            )
        lo = np.zeros(count)
        hi = r_max.copy()
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            h = _entropy3(center[None, :] + mid[:, None] * dirs)
            above = h > eta
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        pts = center[None, :] + (0.5 * (lo + hi))[:, None] * dirs
        return np.clip(pts, 0.0, None)

    psi = np.linspace(0.0, 0.5 * math.pi, count)
    c, s = np.cos(psi), np.sin(psi)
    dirs = np.stack([-(c + s), c, s], axis=1)
    vertex = np.array([1.0, 0.0, 0.0])
    r_edge = 1.0 / (c + s)
    # ternary search for the entropy peak along each ray, then bisect the
    # rising side
    lo_t, hi_t = np.zeros(count), r_edge.copy()
    for _ in range(80):
        m1 = lo_t + (hi_t - lo_t) / 3.0
        m2 = hi_t - (hi_t - lo_t) / 3.0
        h1 = _entropy3(vertex[None, :] + m1[:, None] * dirs)
        h2 = _entropy3(vertex[None, :] + m2[:, None] * dirs)
        keep = h1 < h2
        lo_t = np.where(keep, m1, lo_t)
        hi_t = np.where(keep, hi_t, m2)
    r_peak = 0.5 * (lo_t + hi_t)
    lo = np.zeros(count)
    hi = r_peak
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        h = _entropy3(vertex[None, :] + mid[:, None] * dirs)
        below = h < eta
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    pts = vertex[None, :] + (0.5 * (lo + hi))[:, None] * dirs
    return np.clip(pts, 0.0, None)


def _golden_max(f, lo: float, hi: float, iters: int = 80):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - g * (b - a)
    x2 = a + g * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = f(x1)
    x = 0.5 * (a + b)
    return x, f(x)


def _inner_max3(v: np.ndarray, eta1: float, arc: np.ndarray) -> tuple[float, np.ndarray]:
    """max H(w conv v) over H(w) <= eta1 for n = 3.

    The objective is strictly concave in w with its unconstrained peak at
    the uniform point, so the constrained max sits on the entropy level
    curve, on a simplex edge, or at a vertex; all three families are
    scanned. Cyclic shifts of w leave the value unchanged, which collapses
    the vertex and edge families to one representative each.
    """
    t_v = circulant_from_pmf(v).matrix
    vals = _entropy3(arc @ t_v.T)
    i = int(np.argmax(vals))
    best, arg = float(vals[i]), arc[i].copy()

    # vertex family: H(e_i conv v) = H(v)
    hv = entropy(v)
    if hv > best:
        best, arg = hv, np.array([1.0, 0.0, 0.0])

    # edge family (1-t, t, 0); feasible wherever its binary entropy stays
    # under eta1
    def edge_val(tt):
        w = np.array([1.0 - tt, tt, 0.0])
        return entropy(cyclic_convolve(w, v))

    tstar, fstar = _golden_max(edge_val, 0.0, 1.0)
    if binary_entropy(tstar) <= eta1 + 1e-12 and fstar > best:
        best, arg = float(fstar), np.array([1.0 - tstar, tstar, 0.0])

    # polish the arc incumbent: re-walk a shrinking angular neighborhood
    if arc.shape[0] >= 8 and 0 < i < arc.shape[0] - 1:
        seg = np.array([arc[i - 1], arc[i], arc[i + 1]])
        for _ in range(6):
            fine = np.concatenate(
                [np.linspace(seg[0], seg[1], 9, endpoint=False), np.linspace(seg[1], seg[2], 9)]
            )
            norms = fine.sum(axis=1, keepdims=True)
            fine = fine / norms
            fv = _entropy3(fine @ t_v.T)
            j = int(np.argmax(fv))
            if fv[j] > best:
                best, arg = float(fv[j]), fine[j].copy()
            j = max(1, min(j, fine.shape[0] - 2))
            seg = np.array([fine[j - 1], fine[j], fine[j + 1]])
    return best, arg


def modulo_value_oracle(
    spec: ModuloSpec,
    resolution: int = 90,
    arc_count: int = 2048,
    refine_rounds: int = 40,
    rng=None,
) -> dict:
    """Brute-force min over H(p_v) >= eta2 of max over H(p_w) <= eta1 of
    H(p_w conv p_v).

    For n = 3 the inner max reduces to boundary families (see
    _inner_max3), the outer min scans the feasible composition grid plus
    mixture-family candidates and then refines locally with shrinking
    steps. Other alphabets fall back to the plain grid-against-grid scan.
    """
    if spec.n != 3:
        return modulo_value_oracle_grid(spec, resolution=resolution, rng=rng)
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    eta1, eta2 = spec.eta1, spec.eta2
    if eta1 <= 1e-12:
        # degenerate inner player: only point masses, value = H(p_v) minimized
        alpha = hamming_param_from_entropy(eta2, 3, 3, "positive")
        v = hamming_pmf(alpha, 3, 3)
        return {"value": eta2, "p_v": v, "p_w": np.array([1.0, 0.0, 0.0])}

    arc = _level_curve3(eta1, arc_count)

    def phi(v: np.ndarray):
        return _inner_max3(v, eta1, arc)

    # stage 1: coarse sweep of the feasible grid
    grid = GridSpec(3, resolution).points()
    feas = grid[_entropy3(grid) >= eta2 - 1e-12]
    cands = []
    alpha = hamming_param_from_entropy(eta2, 3, 3, "positive")
    cands.append(hamming_pmf(alpha, 3, 3))
    if eta2 >= 1.0 - 1e-12:
        cands.append(hamming_pmf(hamming_param_from_entropy(eta2, 3, 3, "negative"), 3, 3))
    if eta2 <= 1.0 + 1e-12:
        cands.append(hamming_pmf(hamming_param_from_entropy(eta2, 3, 2, "positive"), 3, 2))
    cands.append(uniform_pmf(3))

    pool = np.concatenate([feas, np.asarray(cands)], axis=0) if feas.size else np.asarray(cands)
    best_v, best_val, best_w = None, np.inf, None
    for v in pool:
        val, w = phi(v)
        if val < best_val - 1e-15:
            best_val, best_v, best_w = val, v.copy(), w

    # stage 2: shrinking-step local refinement over the feasible region
    step = 1.5 / resolution
    for _ in range(refine_rounds):
        improved = False
        for _ in range(10):
            d = rng.standard_normal(3)
            d -= d.mean()
            cand = np.clip(best_v + step * d, 0.0, None)
            s = cand.sum()
            if s <= 0.0:
                continue
            cand /= s
            if _entropy3(cand[None, :])[0] < eta2 - 1e-12:
                continue
            val, w = phi(cand)
            if val < best_val - 1e-14:
                best_val, best_v, best_w = val, cand, w
                improved = True
        if not improved:
            step *= 0.5
            if step < 1e-8:
                break
    return {"value": float(best_val), "p_v": best_v, "p_w": best_w}


def modulo_value_oracle_grid(spec: ModuloSpec, resolution: int = 40, rng=None) -> dict:
    """Pure grid-against-grid max-min: inner max over grid points with
    H(w) <= eta1, outer min over grid points with H(v) >= eta2. No
    analytic candidates, so both layers carry grid bias; usable as an
    independent sanity anchor at any alphabet size."""
    pts = GridSpec(spec.n, resolution).points(rng)
    h = entropy_rows(pts)
    w_feas = pts[h <= spec.eta1 + 1e-12]
    v_feas = pts[h >= spec.eta2 - 1e-12]
    if w_feas.size == 0 or v_feas.size == 0:
        raise FeasibilityError(
            f"empty feasible grid at resolution {resolution} for eta1={spec.eta1}, eta2={spec.eta2}"
        )
    best_val, best_v, best_w = np.inf, None, None
    for v in v_feas:
        t_v = circulant_from_pmf(v).matrix
        vals = entropy_rows(w_feas @ t_v.T)
        i = int(np.argmax(vals))
        if vals[i] < best_val:
            best_val, best_v, best_w = float(vals[i]), v.copy(), w_feas[i].copy()
    return {"value": best_val, "p_v": best_v, "p_w": best_w}


def tito_experiments(kind: str, params: dict | None = None, rng=None) -> dict:
    """Three-letter channel experiment tables.

    Returns {"header": [...], "rows": [[...], ...]} ready for CSV
    rendering with columns param1, param2, value_bits, arg0, ...
    """
    params = dict(params or {})
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    log3 = math.log2(3.0)

    if kind == "supersymmetric":
        alpha = float(params.get("alpha", 0.2))
        caps = [float(c) for c in params.get("capacities", (0.2, 0.5, 1.0, 1.4))]
        t = tito_channel(alpha, alpha)
        rows = []
        for c in caps:
            x = supersymmetric_tito(c)
            resid = abs(supersymmetric_g3(x) - c)
            if resid > 1e-4:
                raise RuntimeError(f"split inversion residual {resid:.2e} exceeds 1e-4 at c={c}")
            p_v = np.array([x, x, 1.0 - 2.0 * x])
            rate = log3 - entropy(t.apply(p_v))
            rows.append([c, alpha, rate, *p_v.tolist()])
        header = ["param1", "param2", "value_bits", "arg0", "arg1", "arg2"]
        return {"header": header, "rows": rows}

    if kind == "typewriter":
        alpha = float(params.get("alpha", 0.3))
        caps = [float(c) for c in params.get("capacities", (0.2, 0.5, 1.0, 1.4))]
        t = tito_channel(alpha, 0.0)
        rows = []
        for c in caps:
            eta2 = log3 - c
            g, p = witsenhausen_g(t, eta2, rng=rng, return_argmin=True)
            rows.append([c, alpha, log3 - g, *np.asarray(p).tolist()])
        header = ["param1", "param2", "value_bits", "arg0", "arg1", "arg2"]
        return {"header": header, "rows": rows}

    if kind == "compound":
        eta2 = float(params.get("eta2", 0.7))
        eta1s = [float(v) for v in params.get("eta1_values", (0.6, 0.8, 1.0, 1.2, 1.4))]
        rows = []
        for eta1 in eta1s:
            res = modulo_value_oracle(ModuloSpec(3, eta1, eta2), rng=rng)
            rows.append(
                [eta1, eta2, res["value"], *res["p_w"].tolist(), *res["p_v"].tolist()]
            )
        header = ["param1", "param2", "value_bits", "arg0", "arg1", "arg2", "arg3", "arg4", "arg5"]
        return {"header": header, "rows": rows}

    raise DomainError(
        f"kind must be 'supersymmetric', 'typewriter', or 'compound', got {kind!r}"
    )
