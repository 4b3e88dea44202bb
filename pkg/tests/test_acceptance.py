"""End-to-end acceptance gates, one test per shipped guarantee.

Each test computes its own measurements, registers a one-line verdict
through the conftest recorder (printed in the terminal summary), and then
asserts. Expected values are either closed-form identities checked against
brute-force oracles computed here, or frozen literals derived once from
those oracles.
"""

import math
import time

import numpy as np

from comib.ba_iterators import (
    IterConfig,
    calibrate_temperature,
    comib_modulo_solve,
    ib_modulo_iterate,
    pf_modulo_iterate,
)
from comib.closed_form import (
    GaussianScalarSpec,
    GaussianVectorSpec,
    KldGaussianSpec,
    WaterfillSpec,
    binary_compound_rate,
    kld_gaussian_rate,
    scalar_gaussian_rate,
    vector_gaussian_rate,
    vector_ib_waterfill,
)
from comib.modulo_saddle import (
    ModuloSpec,
    high_snr_rate,
    low_snr_saddle,
    modulo_bounds,
    supersymmetric_g3,
    tito_channel,
)
from comib.oracle import (
    GridSpec,
    _compositions,
    binary_compound_oracle,
    modulo_value_oracle,
    saddle_check,
)
from comib.simplex_core import (
    circulant_from_pmf,
    cyclic_convolve,
    entropy,
    entropy_rows,
    hamming_pmf,
    uniform_pmf,
)
from comib.tv_bounds import (
    TvSpec,
    dobrushin_theta,
    gamma_inverse,
    max_entropy_tv_ball,
    min_entropy_tv_ball_uniform,
    tv_compound_bounds,
)

# closed-form saddle values, frozen from the package's own output after
# cross-checking each against the grid extremality test below
SADDLE_CASES = [
    (3, 1.2, 0.8, 1.3912381735045),
    (3, 1.3, 0.7, 1.4165398549844),
    (3, 1.5, 1.2, 1.5618171582767),
    (4, 1.7, 1.0, 1.8584808652377),
    (4, 1.9, 0.5, 1.9208549426196),
    (4, 2.0, 1.6, 2.0),
]


def test_criterion_01(criterion):
    """Binary closed form agrees with the two-parameter brute force on a
    5x5 budget grid, within 3e-3 bits, under 30 seconds total."""
    ok, detail = False, "crashed before measurement"
    try:
        t0 = time.monotonic()
        worst = 0.0
        grid = np.linspace(0.0, 1.0, 5)
        for c1 in grid:
            for c2 in grid:
                closed = binary_compound_rate(float(c1), float(c2)).rate_bits
                orac = binary_compound_oracle(float(c1), float(c2), steps=2000)["value_bits"]
                worst = max(worst, abs(closed - orac))
        dt = time.monotonic() - t0
        ok = worst <= 3e-3 and dt < 30.0
        detail = f"worst |closed - oracle| {worst:.1e} bits over 25 budget pairs in {dt:.1f}s"
    finally:
        criterion(1, ok, detail)
    assert ok, detail


def test_criterion_02(criterion):
    """The printed two-point-mixture response is strictly improvable: the
    measured convolved entropies match to 2e-3 and the grid extremality
    check flags the minimizer side."""
    ok, detail = False, "crashed before measurement"
    try:
        p_w = hamming_pmf(-0.46, 3, 2)
        q_plus = np.array([0.866, 0.067, 0.067])
        q_plus /= q_plus.sum()
        q_star = np.array([0.857, 0.031, 0.112])
        q_star /= q_star.sum()
        h_plus = entropy(cyclic_convolve(p_w, q_plus))
        h_star = entropy(cyclic_convolve(p_w, q_star))
        chk = saddle_check(p_w, q_plus, ModuloSpec(3, entropy(p_w), 0.7), GridSpec(3, 400))
        ok = (
            abs(h_plus - 1.179) <= 2e-3
            and abs(h_star - 1.165) <= 2e-3
            and h_star < h_plus
            and not chk["is_saddle"]
            and chk["min_side_violation"] > chk["tol"]
        )
        detail = (
            f"H(w*q+)={h_plus:.4f}, H(w*q*)={h_star:.4f}; grid check flags q+ "
            f"(min-side violation {chk['min_side_violation']:.4f} > tol {chk['tol']:.4f})"
        )
    finally:
        criterion(2, ok, detail)
    assert ok, detail


def test_criterion_03(criterion):
    """Mixture-family saddle values hit the frozen literals to 1e-10 and
    survive the grid extremality test at fine resolution, under 2 minutes."""
    ok, detail = False, "crashed before measurement"
    try:
        t0 = time.monotonic()
        worst_gap = worst_conv = 0.0
        worst_viol = -np.inf
        for n, e1, e2, lit in SADDLE_CASES:
            assert e1 >= math.log2(n - 1) - 1e-12
            spec = ModuloSpec(n, e1, e2)
            s = low_snr_saddle(spec)
            worst_gap = max(worst_gap, abs(s.value - lit))
            worst_conv = max(worst_conv, abs(entropy(cyclic_convolve(s.p_w, s.p_v)) - s.value))
            # resolution trades grid bias against runtime; 1/400 on three
            # letters, 1/60 on four keeps the whole loop under the cap
            chk = saddle_check(s.p_w, s.p_v, spec, GridSpec(n, 400 if n == 3 else 60))
            worst_viol = max(worst_viol, chk["worst_violation"])
        dt = time.monotonic() - t0
        ok = worst_gap <= 1e-10 and worst_conv <= 1e-12 and worst_viol <= 5e-3 and dt < 120.0
        detail = (
            f"6 values match literals to {worst_gap:.1e}; worst grid violation "
            f"{worst_viol:+.1e} <= 5e-3 in {dt:.0f}s"
        )
    finally:
        criterion(3, ok, detail)
    assert ok, detail


def test_criterion_04(criterion):
    """The computable bracket contains the brute-force value across a
     2 x 30 point sweep of the constraint plane, under 5 minutes."""
    ok, detail = False, "crashed before measurement"
    try:
        t0 = time.monotonic()
        # the oracle's outer refinement stops at a finite step, leaving a
        # one-sided bias of order 1e-6 on hard instances
        slack = 1e-5
        min_above = min_below = np.inf
        for eta1 in (0.1, 0.5):
            for eta2 in np.linspace(0.05, 1.55, 30):
                spec = ModuloSpec(3, eta1, float(eta2))
                b = modulo_bounds(spec)
                val = modulo_value_oracle(spec, resolution=90)["value"]
                min_above = min(min_above, val - b.lower)
                min_below = min(min_below, b.upper - val)
        dt = time.monotonic() - t0
        ok = min_above >= -slack and min_below >= -slack and dt < 300.0
        detail = (
            f"60 sweep points: min(oracle - lower) {min_above:+.1e}, "
            f"min(upper - oracle) {min_below:+.1e} in {dt:.0f}s"
        )
    finally:
        criterion(4, ok, detail)
    assert ok, detail


def test_criterion_05(criterion):
    """The alternating solver reproduces the closed-form values to 1e-4;
    each one-sided run is monotone in its Lagrangian at every step and
    lands on a fixed point with residual at most 1e-8."""
    ok, detail = False, "crashed before measurement"
    try:
        worst_diff = 0.0
        worst_pf_step = worst_ib_step = 0.0
        worst_res = 0.0
        all_conv = True
        for n, e1, e2, _ in SADDLE_CASES:
            spec = ModuloSpec(n, e1, e2)
            exact = low_snr_saddle(spec)
            sol = comib_modulo_solve(spec)
            worst_diff = max(worst_diff, abs(sol.value - exact.value))

            pf = pf_modulo_iterate(exact.p_v, IterConfig(beta=3.0), eta1=e1)["trace"]
            steps = np.diff([obj for _, obj in pf.iterates])
            if steps.size:
                worst_pf_step = min(worst_pf_step, float(steps.min()))
            ib = ib_modulo_iterate(exact.p_w, IterConfig(beta=3.0), eta2=e2)["trace"]
            steps = np.diff([obj for _, obj in ib.iterates])
            if steps.size:
                worst_ib_step = max(worst_ib_step, float(steps.max()))
            all_conv = all_conv and pf.converged and ib.converged
            worst_res = max(worst_res, pf.fixed_point_residual, ib.fixed_point_residual)
        ok = (
            worst_diff <= 1e-4
            and worst_pf_step >= -1e-12
            and worst_ib_step <= 1e-12
            and all_conv
            and worst_res <= 1e-8
        )
        detail = (
            f"worst |solve - closed| {worst_diff:.1e}; objective steps within "
            f"[{worst_pf_step:+.1e}, {worst_ib_step:+.1e}]; worst residual {worst_res:.1e}"
        )
    finally:
        criterion(5, ok, detail)
    assert ok, detail


def test_criterion_06(criterion):
    """Calibrated minimizer-side fixed points on the lopsided three-letter
    channel are supersymmetric and invert g3 at four budget levels."""
    ok, detail = False, "crashed before measurement"
    try:
        ctx = np.array([0.6, 0.2, 0.2])
        log3 = math.log2(3.0)
        worst_g3 = worst_gap = 0.0
        for c in (0.2, 0.5, 1.0, 1.4):
            res = calibrate_temperature("ib", ctx, log3 - c)
            p = np.sort(np.asarray(res["p_star"].probs))
            # the repeated coordinate is the duplicated pair's level
            x = p[0] if abs(p[0] - p[1]) <= abs(p[1] - p[2]) else p[1]
            worst_gap = max(worst_gap, min(abs(p[0] - p[1]), abs(p[1] - p[2])))
            g3 = supersymmetric_g3(min(max(float(x), 0.0), 1.0 / 3.0))
            worst_g3 = max(worst_g3, abs(g3 - c))
        ok = worst_g3 <= 1e-4 and worst_gap <= 1e-6
        detail = f"4 budgets: worst |g3 - C| {worst_g3:.1e}, worst pair gap {worst_gap:.1e}"
    finally:
        criterion(6, ok, detail)
    assert ok, detail


def test_criterion_07(criterion):
    """Water-filling allocations on random spectra meet the budget to
    1e-10, stay nonnegative, and beat every 0.01-bit pair reallocation."""
    ok, detail = False, "crashed before measurement"
    try:
        rng = np.random.default_rng(11)
        worst_res = worst_gain = 0.0
        nonneg = True
        for _ in range(20):
            nsv = int(rng.integers(1, 7))
            d = rng.uniform(0.05, 0.97, size=nsv)
            c2 = float(rng.uniform(0.05, 3.0))
            r = vector_ib_waterfill(WaterfillSpec(d, c2))
            alloc = np.array(r.params["allocations"])
            worst_res = max(worst_res, r.diagnostics["residuals"]["budget"])
            nonneg = nonneg and bool((alloc >= 0.0).all())

            def rate_of(al):
                rho2 = 1.0 - 2.0 ** (-2.0 * al)
                return float((-0.5 * np.log2(1.0 - d**2 * rho2)).sum())

            base = rate_of(alloc)
            assert abs(base - r.rate_bits) < 1e-9
            for i in range(nsv):
                for j in range(nsv):
                    if i == j:
                        continue
                    step = np.zeros(nsv)
                    step[i], step[j] = 0.01, -0.01
                    cand = alloc + step
                    if (cand < 0.0).any():
                        continue
                    worst_gain = max(worst_gain, rate_of(cand) - base)
        ok = worst_res <= 1e-10 and nonneg and worst_gain <= 1e-9
        detail = (
            f"20 spectra: worst budget residual {worst_res:.1e}, "
            f"worst pair-reallocation gain {worst_gain:.1e}"
        )
    finally:
        criterion(7, ok, detail)
    assert ok, detail


def _tv_value_oracle3(nominal, delta, eta2, m=120):
    """Grid-against-grid max-min convolved entropy: inner max over the TV
    ball around nominal, outer min over the entropy floor."""
    pts = _compositions(m, 3) / m
    h = entropy_rows(pts)
    w_set = pts[np.abs(pts - nominal).sum(axis=1) <= delta + 1e-12]
    v_set = pts[h >= eta2 - 1e-12]
    conv = np.empty((len(w_set), len(v_set), 3))
    for k in range(3):
        conv[:, :, k] = w_set @ v_set[:, [k % 3, (k - 1) % 3, (k - 2) % 3]].T
    h_out = entropy_rows(conv.reshape(-1, 3)).reshape(len(w_set), len(v_set))
    return float(h_out.max(axis=0).min())


def test_criterion_08(criterion):
    """Entropy-vs-variation envelopes: exact endpoints, radius roundtrip,
    domination over sampled balls, channel contraction, and bracket
    containment of the grid oracle."""
    ok, detail = False, "crashed before measurement"
    try:
        rng = np.random.default_rng(3)

        exact_ends = all(
            min_entropy_tv_ball_uniform(0.0, n)["gamma"] == math.log2(n)
            and min_entropy_tv_ball_uniform(2.0 - 2.0 / n, n)["gamma"] == 0.0
            for n in (2, 3, 5, 8)
        )

        worst_rt = 0.0
        for n in (3, 4, 6):
            for d in np.linspace(1e-4, 2.0 - 2.0 / n - 1e-4, 41):
                g = min_entropy_tv_ball_uniform(float(d), n)["gamma"]
                worst_rt = max(worst_rt, abs(gamma_inverse(g, n) - d))

        # sampled points stay inside both envelopes on 10 random balls
        bad_env = 0
        for _ in range(10):
            n = int(rng.integers(2, 8))
            delta = float(rng.uniform(0.05, 1.2))
            p0 = rng.dirichlet(np.ones(n))
            phi = max_entropy_tv_ball(delta, p0)["phi"]
            d_u = min(delta, 2.0 - 2.0 / n)
            gam = min_entropy_tv_ball_uniform(d_u, n)["gamma"]
            raw = rng.dirichlet(np.ones(n), size=100_000)
            t = rng.uniform(0.0, 1.0, size=100_000)[:, None]
            tvs = np.abs(raw - p0).sum(axis=1, keepdims=True)
            q = p0 + np.minimum(1.0, delta / np.maximum(tvs, 1e-15)) * t * (raw - p0)
            bad_env += int((entropy_rows(q) > phi + 1e-9).sum())
            u = uniform_pmf(n)
            tvs = np.abs(raw - u).sum(axis=1, keepdims=True)
            q = u + np.minimum(1.0, d_u / np.maximum(tvs, 1e-15)) * t * (raw - u)
            bad_env += int((entropy_rows(q) < gam - 1e-9).sum())

        # contraction coefficient dominates the output-vs-input TV ratio
        channels = [
            tito_channel(0.3, 0.0).matrix,
            tito_channel(0.2, 0.2).matrix,
            circulant_from_pmf(np.array([0.5, 0.3, 0.2])).matrix,
        ]
        for _ in range(3):
            n = int(rng.integers(2, 6))
            channels.append(rng.dirichlet(np.ones(n), size=n).T)
        bad_con = 0
        for mat in channels:
            n = mat.shape[1]
            th = dobrushin_theta(mat)
            p = rng.dirichlet(np.ones(n), size=10_000)
            q = rng.dirichlet(np.ones(n), size=10_000)
            num = np.abs((p - q) @ mat.T).sum(axis=1)
            den = np.abs(p - q).sum(axis=1)
            bad_con += int((num > th * den + 1e-12).sum())

        # bracket containment; the oracle carries O(1/m) grid bias on both
        # layers, measured under 5e-4 at m = 120, allowed 2e-3
        slack = 2e-3
        contained = True
        for i in range(10):
            nominal = rng.dirichlet(np.ones(3) * 2.0)
            delta = float(rng.uniform(0.1, 0.6))
            eta2 = float(rng.uniform(0.6, 1.4))
            pair = tv_compound_bounds(TvSpec(nominal, delta, eta2), rng=np.random.default_rng(i))
            val = _tv_value_oracle3(nominal, delta, eta2)
            contained = contained and pair.lower - slack <= val <= pair.upper + slack

        ok = exact_ends and worst_rt <= 1e-9 and bad_env == 0 and bad_con == 0 and contained
        detail = (
            f"endpoints exact; roundtrip {worst_rt:.1e}; {bad_env} envelope and "
            f"{bad_con} contraction violations; oracle inside bracket on 10 balls"
        )
    finally:
        criterion(8, ok, detail)
    assert ok, detail


def test_criterion_09(criterion):
    """Continuous-alphabet closed forms agree with independent two-variable
    numeric max-min to 1e-4, and the one-component vector form collapses to
    the scalar form to 1e-12."""
    ok, detail = False, "crashed before measurement"
    try:

        def scalar_oracle(rho, cap, m=2001):
            rr = np.linspace(rho, 1.0, m)
            zz = np.linspace(0.0, 1.0 - 2.0 ** (-2.0 * cap), m)
            best = np.inf
            for r in rr:
                inner = float((-0.5 * np.log2(np.maximum(1.0 - r * r * zz, 1e-300))).max())
                best = min(best, inner)
            return best

        def vector2_oracle(c1, c2, m=801):
            a = np.linspace(0.0, c1, m)[:, None]
            b = np.linspace(0.0, c2, m)[None, :]
            r1a = 1.0 - 2.0 ** (-2.0 * a)
            r1b = 1.0 - 2.0 ** (-2.0 * (c1 - a))
            r2a = 1.0 - 2.0 ** (-2.0 * b)
            r2b = 1.0 - 2.0 ** (-2.0 * (c2 - b))
            rate = -0.5 * (np.log2(1.0 - r1a * r2a) + np.log2(1.0 - r1b * r2b))
            return float(rate.max(axis=1).min())

        def kld_oracle(s0, eps, c2, m=4001):
            lhs = lambda r: 0.5 * math.log(r) + 0.5 * r - 0.5
            hi = 2.0
            while lhs(hi) < eps:
                hi *= 2.0
            lo = 1.0
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if lhs(mid) < eps:
                    lo = mid
                else:
                    hi = mid
            rr = np.linspace(1.0, lo, m) if eps > 0 else np.array([1.0])
            zz = np.linspace(0.0, 1.0 - 2.0 ** (-2.0 * c2), m)
            best = np.inf
            for r in rr:
                inner = float((-0.5 * np.log2(np.maximum(1.0 - zz / (1.0 + r * s0), 1e-300))).max())
                best = min(best, inner)
            return best

        rng = np.random.default_rng(5)
        w_scalar = w_vector = w_kld = w_dim1 = 0.0
        for _ in range(10):
            rho = float(rng.uniform(0.1, 0.99))
            cap = float(rng.uniform(0.1, 2.5))
            closed = scalar_gaussian_rate(GaussianScalarSpec(rho, cap)).rate_bits
            w_scalar = max(w_scalar, abs(closed - scalar_oracle(rho, cap)))
        for _ in range(10):
            c1 = float(rng.uniform(0.2, 3.0))
            c2 = float(rng.uniform(0.2, 3.0))
            closed = vector_gaussian_rate(GaussianVectorSpec(2, c1, c2)).rate_bits
            w_vector = max(w_vector, abs(closed - vector2_oracle(c1, c2)))
        for _ in range(10):
            s0 = float(rng.uniform(0.3, 3.0))
            eps = float(rng.uniform(0.0, 0.6))
            c2 = float(rng.uniform(0.1, 2.0))
            closed = kld_gaussian_rate(KldGaussianSpec(s0, eps, c2)).rate_bits
            w_kld = max(w_kld, abs(closed - kld_oracle(s0, eps, c2)))
        for _ in range(10):
            c1 = float(rng.uniform(0.2, 3.0))
            c2 = float(rng.uniform(0.2, 3.0))
            vec = vector_gaussian_rate(GaussianVectorSpec(1, c1, c2)).rate_bits
            rho = math.sqrt(1.0 - 2.0 ** (-2.0 * c1))
            sca = scalar_gaussian_rate(GaussianScalarSpec(rho, c2)).rate_bits
            w_dim1 = max(w_dim1, abs(vec - sca))

        ok = w_scalar <= 1e-4 and w_vector <= 1e-4 and w_kld <= 1e-4 and w_dim1 <= 1e-12
        detail = (
            f"worst oracle gaps: scalar {w_scalar:.1e}, split {w_vector:.1e}, "
            f"divergence-ball {w_kld:.1e}; one-component match {w_dim1:.1e}"
        )
    finally:
        criterion(9, ok, detail)
    assert ok, detail


def test_criterion_10(criterion):
    """The small-cap expansion tightens as the cap shrinks: relative error
    against the brute-force value decreases and ends at or below 10%."""
    ok, detail = False, "crashed before measurement"
    try:
        rels = []
        for e1 in (0.05, 0.02, 0.01):
            hs = high_snr_rate(ModuloSpec(3, e1, 1.0))["value"]
            val = modulo_value_oracle(ModuloSpec(3, e1, 1.0))["value"]
            rels.append(abs(hs - val) / val)
        ok = all(b < a for a, b in zip(rels, rels[1:])) and rels[-1] <= 0.10
        detail = "relative errors " + " -> ".join(f"{r:.4f}" for r in rels) + ", final <= 0.10"
    finally:
        criterion(10, ok, detail)
    assert ok, detail
