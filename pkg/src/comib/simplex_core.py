"""Probability vectors on small alphabets and the entropy toolbox built on them.

Everything downstream works in bits. Distributions are plain numpy arrays
at function boundaries; the dataclasses below add validation and the
canonical serialized forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

ENTRY_TOL = 1e-12
SUM_TOL = 1e-12
COLUMN_SUM_TOL = 1e-9
ZERO_CLAMP = 1e-15
LN2 = math.log(2.0)


def canonical_float(x: float) -> str:
    """Render a float with 17 significant digits, lowercase e-notation.

    The format is byte-stable: repeated dump/load/dump cycles reproduce
    the same text exactly.
    """
    return format(float(x), ".16e")


def as_pmf(p, entry_tol: float = ENTRY_TOL, sum_tol: float = SUM_TOL) -> np.ndarray:
    """Validate p as a probability vector and return it as a float array."""
    arr = np.asarray(getattr(p, "probs", p), dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise DomainError("pmf must be a 1-d vector with at least one entry")
    if np.any(arr < -entry_tol) or np.any(arr > 1.0 + entry_tol):
        worst = float(arr.min()) if arr.min() < -entry_tol else float(arr.max())
        raise DomainError(f"pmf entry {worst!r} outside [0, 1] beyond tolerance {entry_tol}")
    dev = float(abs(arr.sum() - 1.0))
    if dev > sum_tol:
        raise DomainError(f"pmf sum deviates from 1 by {dev:.3e} (tolerance {sum_tol})")
    return arr


def normalize_pmf(p) -> np.ndarray:
    """Clip negatives to zero and rescale to unit sum. Explicit by design:
    no other entry point renormalizes silently."""
    arr = np.asarray(getattr(p, "probs", p), dtype=float)
    arr = np.clip(arr, 0.0, None)
    s = arr.sum()
    if s <= 0.0:
        raise DomainError("cannot normalize a vector with nonpositive mass")
    return arr / s


def uniform_pmf(n: int) -> np.ndarray:
    return np.full(int(n), 1.0 / int(n))


@dataclass(frozen=True)
class Pmf:
    """Validated probability vector. JSON form: array of floats."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", as_pmf(self.probs))

    @property
    def n(self) -> int:
        return int(self.probs.size)

    def to_json(self) -> str:
        return "[" + ", ".join(canonical_float(x) for x in self.probs) + "]"

    @staticmethod
    def from_json(text: str, sum_tol: float = COLUMN_SUM_TOL) -> "Pmf":
        import json

        raw = np.asarray(json.loads(text), dtype=float)
        dev = float(abs(raw.sum() - 1.0))
        if dev > sum_tol:
            raise DomainError(f"pmf sum deviates from 1 by {dev:.3e} (tolerance {sum_tol})")
        # entries inside the loose gate are renormalized, documented behavior
        return Pmf(normalize_pmf(raw))

    def to_csv(self) -> str:
        header = ",".join(f"p{i}" for i in range(self.n))
        row = ",".join(canonical_float(x) for x in self.probs)
        return header + "\n" + row + "\n"

    @staticmethod
    def from_csv(text: str, sum_tol: float = COLUMN_SUM_TOL) -> "Pmf":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if len(lines) != 2 or not lines[0].startswith("p0"):
            raise DomainError("pmf csv must be a 'p0,p1,...' header line plus one data row")
        raw = np.asarray([float(tok) for tok in lines[1].split(",")], dtype=float)
        dev = float(abs(raw.sum() - 1.0))
        if dev > sum_tol:
            raise DomainError(f"pmf sum deviates from 1 by {dev:.3e} (tolerance {sum_tol})")
        return Pmf(normalize_pmf(raw))


@dataclass(frozen=True)
class Channel:
    """Column-stochastic matrix acting on pmfs from the left. JSON form:
    row-major nested arrays; CSV form: 'p0,p1,...' header plus matrix rows."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2:
            raise DomainError("channel matrix must be 2-d")
        if np.any(m < -ENTRY_TOL) or np.any(m > 1.0 + ENTRY_TOL):
            raise DomainError("channel entries must lie in [0, 1]")
        colsum = m.sum(axis=0)
        dev = float(np.abs(colsum - 1.0).max())
        if dev > COLUMN_SUM_TOL:
            raise DomainError(f"channel column sums deviate from 1 by {dev:.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def n_out(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def n_in(self) -> int:
        return int(self.matrix.shape[1])

    def apply(self, p) -> np.ndarray:
        return self.matrix @ as_pmf(p)

    def to_json(self) -> str:
        rows = ("[" + ", ".join(canonical_float(x) for x in row) + "]" for row in self.matrix)
        return "[" + ", ".join(rows) + "]"

    @staticmethod
    def from_json(text: str) -> "Channel":
        import json

        return Channel(np.asarray(json.loads(text), dtype=float))

    def to_csv(self) -> str:
        header = ",".join(f"p{i}" for i in range(self.n_in))
        body = "\n".join(",".join(canonical_float(x) for x in row) for row in self.matrix)
        return header + "\n" + body + "\n"

    @staticmethod
    def from_csv(text: str) -> "Channel":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if len(lines) < 2 or not lines[0].startswith("p0"):
            raise DomainError("channel csv must be a 'p0,p1,...' header plus matrix rows")
        rows = [[float(tok) for tok in ln.split(",")] for ln in lines[1:]]
        return Channel(np.asarray(rows, dtype=float))


@dataclass(frozen=True)
class JointPmf:
    """Joint distribution over a product alphabet, rows = first coordinate."""

    probs: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.probs, dtype=float)
        if m.ndim != 2:
            raise DomainError("joint pmf must be 2-d")
        if np.any(m < -ENTRY_TOL):
            raise DomainError("joint pmf entries must be nonnegative")
        dev = float(abs(m.sum() - 1.0))
        if dev > SUM_TOL:
            raise DomainError(f"joint pmf sum deviates from 1 by {dev:.3e}")
        object.__setattr__(self, "probs", m)


@dataclass(frozen=True)
class HammingPmf:
    """Mixture param * point_mass + (1 - param) * uniform on the first
    `support` coordinates, zero-padded to length n. param may be negative
    down to -1/(support-1), where the distinguished coordinate hits zero."""

    param: float
    n: int
    support: int = field(default=0)  # 0 means support = n

    def __post_init__(self):
        k = self.support or self.n
        object.__setattr__(self, "support", k)
        if not 2 <= k <= self.n:
            raise DomainError(f"support must lie in [2, {self.n}], got {k}")
        lo = -1.0 / (k - 1)
        if not lo - 1e-12 <= self.param <= 1.0 + 1e-12:
            raise DomainError(f"param {self.param!r} outside [{lo!r}, 1]")

    def realize(self) -> np.ndarray:
        return hamming_pmf(self.param, self.n, self.support)


def entropy(p) -> float:
    """Shannon entropy in bits; 0 log 0 := 0, entries below 1e-15 dropped."""
    arr = np.asarray(getattr(p, "probs", p), dtype=float)
    mask = arr > ZERO_CLAMP
    vals = arr[mask]
    return float(max(-(vals * np.log2(vals)).sum(), 0.0))


def entropy_rows(mat: np.ndarray) -> np.ndarray:
    """Row-wise entropy in bits for a 2-d array of pmfs. Vectorized helper
    for grid scans."""
    m = np.asarray(mat, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        contrib = np.where(m > ZERO_CLAMP, m * np.log2(np.where(m > ZERO_CLAMP, m, 1.0)), 0.0)
    return -contrib.sum(axis=-1)


def binary_entropy(x: float) -> float:
    if not -1e-12 <= x <= 1.0 + 1e-12:
        raise DomainError(f"binary entropy argument {x!r} outside [0, 1]")
    x = min(max(x, 0.0), 1.0)
    if x <= ZERO_CLAMP or x >= 1.0 - ZERO_CLAMP:
        return 0.0
    return float(-x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x))


def binary_entropy_inv(h: float) -> float:
    """Inverse of binary_entropy on the branch [0, 1/2]."""
    if not -1e-12 <= h <= 1.0 + 1e-12:
        raise DomainError(f"binary entropy value {h!r} outside [0, 1]")
    h = min(max(h, 0.0), 1.0)
    if h == 0.0:
        return 0.0
    if h == 1.0:
        return 0.5
    return find_root_monotone(lambda x: binary_entropy(x) - h, 0.0, 0.5, tol=1e-14)


def binary_convolve(a: float, b: float) -> float:
    """Crossover of the cascade of two binary symmetric channels."""
    return a * (1.0 - b) + b * (1.0 - a)


def cyclic_convolve(p, q) -> np.ndarray:
    """r_k = sum_i p_i q_{(k - i) mod n}, addition modulo the alphabet size."""
    pa = np.asarray(getattr(p, "probs", p), dtype=float)
    qa = np.asarray(getattr(q, "probs", q), dtype=float)
    if pa.shape != qa.shape:
        raise DomainError("cyclic convolution requires equal lengths")
    n = pa.size
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return (qa[idx] * pa[None, :]).sum(axis=1)


def circulant_from_pmf(p) -> Channel:
    """Channel whose column j is p cyclically shifted down by j, so that
    matrix @ q equals cyclic_convolve(p, q)."""
    pa = as_pmf(p)
    n = pa.size
    cols = np.stack([np.roll(pa, j) for j in range(n)], axis=1)
    return Channel(cols)


def mutual_information(joint: JointPmf | np.ndarray) -> float:
    """I between the two coordinates of a joint pmf, in bits."""
    m = np.asarray(getattr(joint, "probs", joint), dtype=float)
    px = m.sum(axis=1)
    py = m.sum(axis=0)
    return entropy(px) + entropy(py) - entropy(m.ravel())


def kl_divergence(p, q) -> float:
    """D(p || q) in bits. Returns inf when p puts mass where q has none;
    the infinite value is the support-violation sentinel."""
    pa = np.asarray(getattr(p, "probs", p), dtype=float)
    qa = np.asarray(getattr(q, "probs", q), dtype=float)
    if pa.shape != qa.shape:
        raise DomainError("kl divergence requires equal lengths")
    pm = pa > ZERO_CLAMP
    if np.any(pm & (qa <= ZERO_CLAMP)):
        return float("inf")
    vals = pa[pm] * np.log2(pa[pm] / qa[pm])
    return float(vals.sum())


def tv_distance(p, q) -> float:
    """Unnormalized total variation sum |p_i - q_i|, range [0, 2]."""
    pa = np.asarray(getattr(p, "probs", p), dtype=float)
    qa = np.asarray(getattr(q, "probs", q), dtype=float)
    if pa.shape != qa.shape:
        raise DomainError("tv distance requires equal lengths")
    return float(np.abs(pa - qa).sum())


def hamming_pmf(param: float, n: int, support: int = 0) -> np.ndarray:
    """param * e_first + (1 - param) * uniform(support), zero-padded to n."""
    k = support or n
    spec = HammingPmf(param, n, k)  # validates ranges
    out = np.zeros(n)
    out[:k] = (1.0 - spec.param) / k
    out[0] += spec.param
    # param at the negative end can leave a -1e-17 residue on coordinate 0
    out[0] = max(out[0], 0.0)
    return out


def hamming_entropy(param: float, n: int, support: int = 0) -> float:
    return entropy(hamming_pmf(param, n, support))


def hamming_param_from_entropy(target: float, n: int, support: int = 0, branch: str = "positive") -> float:
    """Solve hamming_entropy(param, n, support) = target on one branch.

    positive branch: param in [0, 1], entropy strictly decreasing from
    log2(support) to 0. negative branch: param in [-1/(support-1), 0],
    entropy strictly increasing from log2(support-1) to log2(support).
    """
    k = support or n
    if not 2 <= k <= n:
        raise DomainError(f"support must lie in [2, {n}], got {k}")
    hi = math.log2(k)
    if branch == "positive":
        if not -1e-12 <= target <= hi + 1e-12:
            raise DomainError(f"target {target!r} outside [0, {hi!r}] for the positive branch")
        t = min(max(target, 0.0), hi)
        if t == hi:
            return 0.0
        if t == 0.0:
            return 1.0
        return find_root_monotone(lambda a: hamming_entropy(a, n, k) - t, 0.0, 1.0, tol=1e-14)
    if branch == "negative":
        lo_param = -1.0 / (k - 1)
        lo = math.log2(k - 1)
        if not lo - 1e-12 <= target <= hi + 1e-12:
            raise DomainError(
                f"target {target!r} outside [{lo!r}, {hi!r}] for the negative branch"
            )
        t = min(max(target, lo), hi)
        if t == lo:
            return lo_param
        if t == hi:
            return 0.0
        return find_root_monotone(lambda a: hamming_entropy(a, n, k) - t, lo_param, 0.0, tol=1e-14)
    raise DomainError(f"branch must be 'positive' or 'negative', got {branch!r}")


def find_root_monotone(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Root of a continuous monotone f on [lo, hi] by bracketing bisection
    with a safeguarded secant step.

    The bracket must straddle zero. Stops when the bracket width or the
    residual drops below tol; never exceeds max_iter evaluations of the
    midpoint rule.
    """
    a, b = float(lo), float(hi)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise DomainError(f"no sign change on [{lo!r}, {hi!r}]: f(lo)={fa!r}, f(hi)={fb!r}")
    for it in range(max_iter):
        if b - a <= tol:
            break
        # secant proposal on alternate iterations only: a kinked f can make
        # consecutive secant steps creep without ever halving the bracket
        x = 0.5 * (a + b)
        if it % 2 == 0 and fb != fa:
            s = b - fb * (b - a) / (fb - fa)
            margin = 0.01 * (b - a)
            if a + margin < s < b - margin:
                x = s
        fx = f(x)
        if fx == 0.0:
            return x
        if fa * fx < 0.0:
            b, fb = x, fx
        else:
            a, fa = x, fx
    return 0.5 * (a + b)
