"""Monte Carlo verification engine for quadratic-form tails.

Sampling is chunked: chunk c draws from the counter-based stream
(seed, c), integer exceedance counts and per-chunk moment sums are
merged in chunk order, so results are bit-identical for any number of
worker threads (the thread pool only changes who computes a chunk, not
what it contains or the order of the reduction).

Centering is analytic: E xi^T A xi = sum_i a_ii p_i E zeta_i^2, never a
sample mean, so tail estimates are not contaminated by centering noise.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceededError
from .rv_models import DistributionSpec, SparseModel, sample_sparse_matrix
from .streams import chunk_sizes, stream

DEFAULT_CHUNK = 1 << 16
MOMENT_ORDER_CAP = 16.0
EXHAUSTIVE_ATOM_BUDGET = 1 << 24


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion k / n."""
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class QuadFormInstance:
    """Quadratic form S = xi^T A xi under a sparse coordinate model."""

    a: np.ndarray
    model: SparseModel

    def __post_init__(self) -> None:
        m = np.asarray(self.a, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("A must be square")
        if not np.array_equal(m, m.T):
            raise ValueError("A must be symmetric; use bounds.symmetrize first")
        if m.shape[0] != self.model.dim:
            raise ValueError("matrix size and model dimension differ")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "a", m)

    def mean(self) -> float:
        """E S = sum_i a_ii p_i E zeta_i^2, computed analytically."""
        return float(np.diag(self.a) @ self.model.coordinate_variances())

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.a.tobytes())
        h.update(np.asarray(self.model.p, dtype=float).tobytes())
        for b in self.model.bases:
            h.update(b.to_json().encode())
        return h.hexdigest()


@dataclass
class EmpiricalTail:
    """Survival estimates P{|stat - center| >= t} over a threshold grid."""

    t_grid: np.ndarray
    survival: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_samples: int
    seed: int
    meta: dict = field(default_factory=dict)

    def save_csv(self, path) -> None:
        rows = np.column_stack([self.t_grid, self.survival, self.ci_low, self.ci_high])
        np.savetxt(
            path,
            rows,
            delimiter=",",
            header="t,survival,ci_low,ci_high",
            comments="",
        )

    def metadata(self) -> dict:
        return {"n_samples": self.n_samples, "seed": self.seed, **self.meta}


def _run_chunks(worker, n_samples: int, threads: int, chunk_size: int) -> list:
    """Evaluate worker(chunk_index, chunk_len) for every chunk.

    Returns results ordered by chunk index regardless of thread count.
    """
    sizes = chunk_sizes(n_samples, chunk_size)
    if threads <= 1 or len(sizes) <= 1:
        return [worker(c, sz) for c, sz in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, c, sz) for c, sz in enumerate(sizes)]
        return [f.result() for f in futures]


def _quadform_values(inst: QuadFormInstance, rng, count: int) -> np.ndarray:
    x = sample_sparse_matrix(inst.model, count, rng)
    return (x @ inst.a * x).sum(axis=1)


def simulate_tail(
    inst: QuadFormInstance,
    t_grid,
    n_samples: int,
    seed: int,
    threads: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
) -> EmpiricalTail:
    """Empirical survival of |S - E S| over t_grid with Wilson intervals."""
    ts = np.sort(np.asarray(t_grid, dtype=float))
    if ts.ndim != 1 or ts.size == 0 or np.any(ts < 0):
        raise ValueError("t_grid must be a nonempty nonnegative vector")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    center = inst.mean()

    def worker(c: int, sz: int) -> np.ndarray:
        dev = np.abs(_quadform_values(inst, stream(seed, c), sz) - center)
        # searchsorted over the sorted deviations counts all thresholds at once
        dev.sort()
        return dev.size - np.searchsorted(dev, ts, side="left")

    counts = np.sum(_run_chunks(worker, n_samples, threads, chunk_size), axis=0)
    lows = np.empty(ts.size)
    highs = np.empty(ts.size)
    for i, k in enumerate(counts):
        lows[i], highs[i] = wilson_interval(int(k), n_samples)
    return EmpiricalTail(
        t_grid=ts,
        survival=counts / n_samples,
        ci_low=lows,
        ci_high=highs,
        n_samples=n_samples,
        seed=seed,
        meta={"instance_hash": inst.content_hash(), "statistic": "quadform_abs_dev"},
    )


def empirical_moment(
    inst: QuadFormInstance,
    r: float,
    n_samples: int,
    seed: int,
    threads: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
    allow_extreme: bool = False,
) -> float:
    """Empirical L_r norm of S - E S.

    Orders above MOMENT_ORDER_CAP are refused unless allow_extreme is
    set: for heavy-tailed bases those estimates are sign-off noise.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    if r > MOMENT_ORDER_CAP and not allow_extreme:
        raise ValueError(f"moment order above {MOMENT_ORDER_CAP} needs allow_extreme=True")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    center = inst.mean()

    def worker(c: int, sz: int) -> float:
        dev = np.abs(_quadform_values(inst, stream(seed, c), sz) - center)
        return float(np.sum(dev**r))

    partials = _run_chunks(worker, n_samples, threads, chunk_size)
    return float((np.sum(np.asarray(partials)) / n_samples) ** (1.0 / r))


def simulate_decoupled(
    a,
    model: SparseModel,
    r: float,
    n_samples: int,
    seed: int,
    threads: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
) -> float:
    """Empirical L_r norm of the decoupled bilinear form xi^T A xi~.

    xi and xi~ are independent copies of the model; A must be
    diagonal-free (the decoupled comparison concerns off-diagonal mass).
    """
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != model.dim:
        raise ValueError("A must be square and match the model dimension")
    if np.any(np.diag(m) != 0.0):
        raise ValueError("decoupled comparison requires a diagonal-free matrix")
    if r < 1:
        raise ValueError("r must be at least 1")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")

    def worker(c: int, sz: int) -> float:
        rng = stream(seed, c)
        x = sample_sparse_matrix(model, sz, rng)
        xt = sample_sparse_matrix(model, sz, rng)
        vals = np.abs((x @ m * xt).sum(axis=1))
        return float(np.sum(vals**r))

    partials = _run_chunks(worker, n_samples, threads, chunk_size)
    return float((np.sum(np.asarray(partials)) / n_samples) ** (1.0 / r))


def _atom_table(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All outcomes of a sparse Rademacher vector with their probabilities."""
    supports = []
    probs = []
    for pi in p:
        if pi == 1.0:
            supports.append((-1.0, 1.0))
            probs.append((0.5, 0.5))
        else:
            supports.append((-1.0, 0.0, 1.0))
            probs.append((pi / 2, 1.0 - pi, pi / 2))
    values = np.array(list(itertools.product(*supports)))
    weight = np.array([math.prod(w) for w in itertools.product(*probs)])
    return values, weight


def decoupling_check_exhaustive(a, r: float, p=None) -> float:
    """Exact L_r ratio ||xi^T A xi||_r / ||xi^T A xi~||_r by enumeration.

    Coordinates are sparse Rademacher: xi_i takes -1, 0, +1 with
    probabilities p_i/2, 1-p_i, p_i/2 (p omitted means p = 1).  The
    decoupling inequality promises the ratio is at most 8 for
    diagonal-free symmetric A; callers assert that.
    """
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("A must be square")
    if np.any(np.diag(m) != 0.0):
        raise ValueError("exhaustive decoupling requires a diagonal-free matrix")
    if r < 1:
        raise ValueError("r must be at least 1")
    n = m.shape[0]
    q = np.full(n, 1.0) if p is None else np.asarray(p, dtype=float)
    if q.shape != (n,) or np.any(q <= 0.0) or np.any(q > 1.0):
        raise ValueError("p must be a vector in (0, 1]^n")
    atoms = math.prod(3 if pi < 1.0 else 2 for pi in q)
    if atoms * atoms > EXHAUSTIVE_ATOM_BUDGET:
        raise BudgetExceededError(
            f"joint enumeration needs {atoms * atoms} atoms, budget is {EXHAUSTIVE_ATOM_BUDGET}"
        )
    values, weight = _atom_table(q)
    s_quad = (values @ m * values).sum(axis=1)
    moment_quad = float(weight @ np.abs(s_quad) ** r)
    cross = values @ m @ values.T
    moment_bil = float(weight @ np.abs(cross) ** r @ weight)
    if moment_bil == 0.0:
        return 1.0  # zero off-diagonal mass: both sides vanish
    return (moment_quad / moment_bil) ** (1.0 / r)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    t_window: tuple[float, float]


def usable_window(tail: EmpiricalTail, floor_counts: int = 10, ceiling: float = 0.05) -> np.ndarray:
    """Mask of grid points where survival is resolved and in the far tail.

    Points need at least floor_counts exceedances (rules out pure noise)
    and survival at most ceiling (rules out the bulk).
    """
    floor = floor_counts / tail.n_samples
    return (tail.survival >= floor) & (tail.survival <= ceiling) & (tail.t_grid > 0)


def tail_slope_fit(tail: EmpiricalTail, window: np.ndarray | None = None) -> SlopeFit:
    """Least-squares slope of log(-log survival) against log t.

    For survival ~ exp(-c t^beta) the slope estimates beta.
    """
    mask = usable_window(tail) if window is None else np.asarray(window, dtype=bool)
    mask = mask & (tail.survival > 0.0) & (tail.survival < 1.0) & (tail.t_grid > 0.0)
    if int(mask.sum()) < 4:
        raise ValueError("fewer than 4 usable grid points for the slope fit")
    x = np.log(tail.t_grid[mask])
    y = np.log(-np.log(tail.survival[mask]))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r2,
        n_points=int(mask.sum()),
        t_window=(float(tail.t_grid[mask].min()), float(tail.t_grid[mask].max())),
    )


@dataclass(frozen=True)
class DominanceResult:
    """Single-constant calibration of an exponent shape against a tail.

    c_hat is fitted at the first usable grid point; ok means the
    Wilson lower limit of survival stays below exp(-c_hat * exponent)
    at every later usable point, up to rel_slack on the exponent.
    """

    c_hat: float
    ok: bool
    n_points: int
    min_margin: float
    t_calibration: float


def dominance_check(
    tail: EmpiricalTail,
    exponent_values,
    window: np.ndarray | None = None,
    rel_slack: float = 0.0,
) -> DominanceResult:
    """Calibrate c at the first usable point; test dominance on the rest.

    Verification margins use the Wilson lower limit, so a point only
    fails when the data refutes the bound rather than merely fluctuating
    above it.  rel_slack discounts the required exponent by that
    fraction; sub-leading tail terms make the effective constant drift
    a few percent over a finite window even for correct shapes, while a
    wrong regime exponent loses a factor >= 2, so a slack around 0.1
    separates the two cleanly.
    """
    ev = np.asarray(exponent_values, dtype=float)
    if ev.shape != tail.t_grid.shape:
        raise ValueError("exponent grid and t grid differ in shape")
    mask = usable_window(tail) if window is None else np.asarray(window, dtype=bool)
    mask = mask & (tail.survival > 0.0) & (ev > 0.0)
    idx = np.flatnonzero(mask)
    if idx.size < 2:
        raise ValueError("need at least 2 usable grid points for calibration")
    c_hat = -math.log(tail.survival[idx[0]]) / ev[idx[0]]
    neg_log_low = -np.log(tail.ci_low[idx[1:]])
    rest = neg_log_low - (1.0 - rel_slack) * c_hat * ev[idx[1:]]
    return DominanceResult(
        c_hat=float(c_hat),
        ok=bool(np.all(rest >= 0.0)),
        n_points=int(idx.size),
        min_margin=float(rest.min()),
        t_calibration=float(tail.t_grid[idx[0]]),
    )


@dataclass(frozen=True)
class LowerBoundReport:
    """Anti-concentration summary over a grid of moment orders."""

    degenerate: bool
    r_grid: tuple[float, ...]
    moments: tuple[float, ...]
    exceed_probs: tuple[float, ...]
    kappa: float
    c1: float
    pz_ok: bool


def lower_bound_check(
    a,
    alpha: float,
    n_samples: int = 200_000,
    seed: int = 0,
    r_grid: tuple[float, ...] = (2.0, 4.0, 6.0, 8.0),
    chunk_size: int = DEFAULT_CHUNK,
) -> LowerBoundReport:
    """Check that |S| exceeds half its L_r norm with probability e^{-O(r)}.

    Base is the symmetric Weibull with the given alpha, fully retained
    (p = 1).  Fits log P{|S| >= L_r / 2} = log kappa - c1 * r on the
    grid and also checks the second-moment anti-concentration inequality
    P{|S| >= L_2 / 2} >= (L_2^2 / L_4^2)^2 / 4.
    """
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("A must be square")
    if not np.array_equal(m, m.T):
        raise ValueError("A must be symmetric")
    if np.any(np.diag(m) != 0.0):
        raise ValueError("lower-bound check requires a diagonal-free matrix")
    if np.all(m == 0.0):
        return LowerBoundReport(True, tuple(r_grid), (), (), math.nan, math.nan, False)
    rs = tuple(float(r) for r in r_grid)
    if len(rs) < 2 or any(r < 1 for r in rs):
        raise ValueError("need at least two moment orders, all >= 1")
    model = SparseModel(
        p=(1.0,) * m.shape[0], base=DistributionSpec(kind="weibull", alpha=alpha)
    )
    inst = QuadFormInstance(m, model)
    devs = []
    for c, sz in enumerate(chunk_sizes(n_samples, chunk_size)):
        devs.append(np.abs(_quadform_values(inst, stream(seed, c), sz)))
    dev = np.concatenate(devs)
    moments = tuple(float(np.mean(dev**r) ** (1.0 / r)) for r in rs)
    probs = tuple(float(np.mean(dev >= mom / 2)) for mom in moments)
    if any(q == 0.0 for q in probs):
        raise ValueError("no exceedances at some order; increase n_samples")
    coeff = np.polyfit(np.asarray(rs), np.log(np.asarray(probs)), 1)
    l2 = float(np.mean(dev**2)) ** 0.5
    l4 = float(np.mean(dev**4)) ** 0.25
    pz_floor = (l2**2 / l4**2) ** 2 / 4.0
    pz_ok = float(np.mean(dev >= l2 / 2)) >= pz_floor
    return LowerBoundReport(
        degenerate=False,
        r_grid=rs,
        moments=moments,
        exceed_probs=probs,
        kappa=float(np.exp(coeff[1])),
        c1=float(-coeff[0]),
        pz_ok=pz_ok,
    )


def simulate_linear_tail(
    a_vec,
    model: SparseModel,
    t_grid,
    n_samples: int,
    seed: int,
    threads: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
) -> EmpiricalTail:
    """Empirical survival of |sum_i a_i xi_i| over t_grid.

    The bases are centered, so the linear form needs no centering term.
    """
    a = np.asarray(a_vec, dtype=float)
    if a.ndim != 1 or a.size != model.dim:
        raise ValueError("a must be a vector matching the model dimension")
    ts = np.sort(np.asarray(t_grid, dtype=float))
    if ts.size == 0 or np.any(ts < 0):
        raise ValueError("t_grid must be a nonempty nonnegative vector")

    def worker(c: int, sz: int) -> np.ndarray:
        x = sample_sparse_matrix(model, sz, stream(seed, c))
        dev = np.abs(x @ a)
        dev.sort()
        return dev.size - np.searchsorted(dev, ts, side="left")

    counts = np.sum(_run_chunks(worker, n_samples, threads, chunk_size), axis=0)
    lows = np.empty(ts.size)
    highs = np.empty(ts.size)
    for i, k in enumerate(counts):
        lows[i], highs[i] = wilson_interval(int(k), n_samples)
    h = hashlib.sha256(a.tobytes())
    return EmpiricalTail(
        t_grid=ts,
        survival=counts / n_samples,
        ci_low=lows,
        ci_high=highs,
        n_samples=n_samples,
        seed=seed,
        meta={"instance_hash": h.hexdigest(), "statistic": "linear_abs"},
    )


def simulate_norm_tail(
    a,
    model: SparseModel,
    t_grid,
    n_samples: int,
    seed: int,
    threads: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
) -> EmpiricalTail:
    """Empirical survival of | ||A xi||_2 - sqrt(p) ||A||_F | over t_grid.

    Requires uniform retention probability and unit-variance bases, the
    regime where sqrt(p) ||A||_F is the right centering.
    """
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[1] != model.dim:
        raise ValueError("A columns must match the model dimension")
    p = model.p_array()
    if np.any(p != p[0]) or p[0] <= 0.0:
        raise ValueError("norm concentration needs a uniform positive p")
    if any(b.variance() != 1.0 for b in model.bases):
        raise ValueError("norm concentration needs unit-variance bases")
    ts = np.sort(np.asarray(t_grid, dtype=float))
    if ts.size == 0 or np.any(ts < 0):
        raise ValueError("t_grid must be a nonempty nonnegative vector")
    center = math.sqrt(p[0]) * float(np.linalg.norm(m, "fro"))

    def worker(c: int, sz: int) -> np.ndarray:
        x = sample_sparse_matrix(model, sz, stream(seed, c))
        dev = np.abs(np.linalg.norm(x @ m.T, axis=1) - center)
        dev.sort()
        return dev.size - np.searchsorted(dev, ts, side="left")

    counts = np.sum(_run_chunks(worker, n_samples, threads, chunk_size), axis=0)
    lows = np.empty(ts.size)
    highs = np.empty(ts.size)
    for i, k in enumerate(counts):
        lows[i], highs[i] = wilson_interval(int(k), n_samples)
    h = hashlib.sha256(m.tobytes())
    return EmpiricalTail(
        t_grid=ts,
        survival=counts / n_samples,
        ci_low=lows,
        ci_high=highs,
        n_samples=n_samples,
        seed=seed,
        meta={"instance_hash": h.hexdigest(), "statistic": "norm_abs_dev", "center": center},
    )
