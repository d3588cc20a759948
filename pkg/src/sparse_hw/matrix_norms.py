"""Matrix functionals used by the tail bounds.

Everything operates on dense 2-D float arrays.  Operator norms
||A||_{r1 -> r2} = sup{y^T A x : ||x||_{r1} <= 1, ||y||_{r2*} <= 1}
use exact closed forms where they exist and a multi-restart alternating
maximization elsewhere; the alternating result is a certified lower
bound (every iterate is a feasible pair).

Sparsity-weighted functionals take a retention-probability vector p:

* gamma1(A, p)  = sum_k a_kk^2 p_k + sum_{i != j} a_ij^2 p_i p_j
* gamma2(A, p)  = max_i max{ sum_{j != i} |a_ij| p_j,
                             sum_{j != i} |a_ji| p_j, |a_ii| }
* weighted_spectral(A, p) = || (a_ij sqrt(p_i p_j))_ij ||_{2->2}
* row_weighted_max(A, p)  = max_i (sum_j a_ij^2 p_j)^(1/2)

File format: matrices persist as CSV (one row per line) or as a binary
blob with a little-endian header (u64 rows, u64 cols) followed by
row-major f64 entries.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .streams import stream

_SPECTRAL_TOL = 1e-14
_SPECTRAL_MAX_ITER = 10**4
_ALTMAX_TOL = 1e-12
_ALTMAX_MAX_ITER = 200


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D array, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def _as_probs(p, n: int) -> np.ndarray:
    q = np.asarray(p, dtype=float)
    if q.ndim == 0:
        q = np.full(n, float(q))
    if q.shape != (n,):
        raise ValueError(f"p must have shape ({n},), got {q.shape}")
    if np.any(q < 0.0) or np.any(q > 1.0) or not np.all(np.isfinite(q)):
        raise ValueError("retention probabilities must lie in [0, 1]")
    return q


def _check_exponent(r: float) -> float:
    r = float(r)
    if math.isnan(r) or r < 1.0:
        raise ValueError(f"exponent must lie in [1, inf], got {r}")
    return r


def frobenius(a) -> float:
    return float(np.linalg.norm(_as_matrix(a), "fro"))


def max_abs(a) -> float:
    """Entrywise max |a_ij|, which equals ||A||_{1 -> inf}."""
    m = _as_matrix(a)
    return float(np.max(np.abs(m))) if m.size else 0.0


def lp_norm(x: np.ndarray, r: float) -> float:
    """Vector l_r norm with r in [1, inf]."""
    r = _check_exponent(r)
    x = np.abs(np.asarray(x, dtype=float))
    if x.size == 0:
        return 0.0
    if math.isinf(r):
        return float(x.max())
    if r == 1.0:
        return float(x.sum())
    if r == 2.0:
        return float(np.sqrt((x * x).sum()))
    m = x.max()
    if m == 0.0:
        return 0.0
    # factor out the max so large exponents cannot overflow
    return float(m * (np.sum((x / m) ** r)) ** (1.0 / r))


def mixed_norm(a, r: float) -> float:
    """l_r norm of the vector of row l_2 norms; r = inf gives the max row norm."""
    m = _as_matrix(a)
    rows = np.sqrt((m * m).sum(axis=1))
    return lp_norm(rows, r)


def _spectral_power(m: np.ndarray, with_restart: bool = True) -> float:
    """Largest singular value via power iteration on A^T A.

    Deterministic all-ones start plus one seeded random restart; Rayleigh
    quotient convergence at _SPECTRAL_TOL relative, iteration capped.
    """
    n = m.shape[1]
    if n == 0 or m.shape[0] == 0:
        return 0.0
    gram = m.T @ m
    scale = np.max(np.abs(gram))
    if scale == 0.0:
        return 0.0
    starts = [np.ones(n)]
    if with_restart:
        starts.append(stream(0x5BEC, 0).standard_normal(n))
    best = 0.0
    for v in starts:
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v = v / nv
        rayleigh = float(v @ gram @ v)
        for _ in range(_SPECTRAL_MAX_ITER):
            w = gram @ v
            nw = np.linalg.norm(w)
            if nw == 0.0:
                rayleigh = 0.0
                break
            v = w / nw
            new = float(v @ gram @ v)
            if abs(new - rayleigh) <= _SPECTRAL_TOL * max(new, scale * 1e-8):
                rayleigh = new
                break
            rayleigh = new
        best = max(best, rayleigh)
    return math.sqrt(max(best, 0.0))


def _dual_maximizer(z: np.ndarray, r: float) -> tuple[np.ndarray, float]:
    """Unit-||.||_r vector x maximizing <z, x>; the value is ||z||_{r*}.

    r = 1 puts all mass on one argmax coordinate, r = inf takes signs.
    """
    value_r = r / (r - 1.0) if not math.isinf(r) and r > 1.0 else (math.inf if r == 1.0 else 1.0)
    val = lp_norm(z, value_r)
    if val == 0.0:
        x = np.zeros_like(z)
        if x.size:
            x[0] = 1.0
        return x, 0.0
    if r == 1.0:
        x = np.zeros_like(z)
        i = int(np.argmax(np.abs(z)))
        x[i] = math.copysign(1.0, z[i])
        return x, val
    if math.isinf(r):
        return np.sign(np.where(z == 0.0, 1.0, z)), val
    rstar = r / (r - 1.0)
    x = np.sign(z) * (np.abs(z) / np.max(np.abs(z))) ** (rstar - 1.0)
    nx = lp_norm(x, r)
    return x / nx, val


@dataclass(frozen=True)
class OpnormResult:
    value: float
    restarts: int
    converged: bool


def opnorm_detail(
    a,
    r1: float,
    r2: float,
    restarts: int = 64,
    seed: int = 0,
) -> OpnormResult:
    """||A||_{r1 -> r2} with convergence metadata.

    Closed forms: (2,2) spectral; r1 = 1 gives max column l_{r2} norm;
    r2 = inf gives max row l_{r1*} norm (covers (1,inf) and (2,inf)).
    Otherwise alternating maximization over feasible (x, y) pairs from
    `restarts` starting points; the result is a certified lower bound.
    """
    m = _as_matrix(a)
    r1 = _check_exponent(r1)
    r2 = _check_exponent(r2)
    if m.size == 0:
        return OpnormResult(0.0, 0, True)
    if r1 == 2.0 and r2 == 2.0:
        return OpnormResult(_spectral_power(m), 0, True)
    if r1 == 1.0:
        cols = np.array([lp_norm(m[:, j], r2) for j in range(m.shape[1])])
        return OpnormResult(float(cols.max()), 0, True)
    if math.isinf(r2):
        r1star = math.inf if r1 == 1.0 else r1 / (r1 - 1.0)
        rows = np.array([lp_norm(m[i, :], r1star) for i in range(m.shape[0])])
        return OpnormResult(float(rows.max()), 0, True)

    r2star = math.inf if r2 == 1.0 else r2 / (r2 - 1.0)
    rng = stream(seed, 1)
    best = 0.0
    all_converged = True
    for k in range(restarts):
        if k == 0:
            y = np.ones(m.shape[0])
        else:
            y = rng.standard_normal(m.shape[0])
        ny = lp_norm(y, r2star)
        if ny == 0.0:
            continue
        y = y / ny
        value = 0.0
        converged = False
        for _ in range(_ALTMAX_MAX_ITER):
            x, _ = _dual_maximizer(m.T @ y, r1)
            w = m @ x
            y, new = _dual_maximizer(w, r2star)
            if abs(new - value) <= _ALTMAX_TOL * max(1.0, new):
                value = new
                converged = True
                break
            value = new
        best = max(best, value)
        all_converged = all_converged and converged
    return OpnormResult(best, restarts, all_converged)


def opnorm(a, r1: float, r2: float, restarts: int = 64, seed: int = 0) -> float:
    return opnorm_detail(a, r1, r2, restarts=restarts, seed=seed).value


def gamma1(a, p) -> float:
    """Sparse second-moment functional sum a_kk^2 p_k + sum_{i!=j} a_ij^2 p_i p_j."""
    m = _as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError("gamma1 requires a square matrix")
    q = _as_probs(p, m.shape[0])
    sq = m * m
    diag = np.diag(sq)
    off = float(q @ sq @ q) - float(diag @ (q * q))
    return float(diag @ q) + off


def gamma2(a, p) -> float:
    """Sparse row/column l_1 functional; see module docstring."""
    m = _as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError("gamma2 requires a square matrix")
    q = _as_probs(p, m.shape[0])
    ab = np.abs(m)
    off_diag = ab - np.diag(np.diag(ab))
    row = off_diag @ q
    col = off_diag.T @ q
    return float(np.max(np.stack([row, col, np.diag(ab)])))


def weighted_spectral(a, p) -> float:
    """Spectral norm of (a_ij sqrt(p_i p_j))."""
    m = _as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError("weighted_spectral requires a square matrix")
    q = _as_probs(p, m.shape[0])
    s = np.sqrt(q)
    return _spectral_power(m * np.outer(s, s))


def row_weighted_max(a, p) -> float:
    """max_i (sum_j a_ij^2 p_j)^(1/2)."""
    m = _as_matrix(a)
    q = _as_probs(p, m.shape[1])
    return float(np.sqrt(np.max((m * m) @ q))) if m.size else 0.0


class MatrixStats:
    """Caches the norms of one matrix; each value is computed at most once.

    Thread-safe: concurrent readers share a lock around the cache, so a
    norm is evaluated a single time even under concurrent access.
    """

    def __init__(self, a):
        self._a = _as_matrix(a).copy()
        self._a.setflags(write=False)
        self._cache: dict = {}
        self._lock = threading.Lock()

    @property
    def matrix(self) -> np.ndarray:
        return self._a

    def _get(self, key, fn):
        with self._lock:
            if key not in self._cache:
                self._cache[key] = fn()
            return self._cache[key]

    def frobenius(self) -> float:
        return self._get("fro", lambda: frobenius(self._a))

    def max_abs(self) -> float:
        return self._get("maxabs", lambda: max_abs(self._a))

    def mixed_norm(self, r: float) -> float:
        return self._get(("mixed", float(r)), lambda: mixed_norm(self._a, r))

    def opnorm(self, r1: float, r2: float) -> float:
        return self._get(("op", float(r1), float(r2)), lambda: opnorm(self._a, r1, r2))

    def gamma1(self, p) -> float:
        q = _as_probs(p, self._a.shape[0])
        return self._get(("g1", q.tobytes()), lambda: gamma1(self._a, q))

    def gamma2(self, p) -> float:
        q = _as_probs(p, self._a.shape[0])
        return self._get(("g2", q.tobytes()), lambda: gamma2(self._a, q))

    def weighted_spectral(self, p) -> float:
        q = _as_probs(p, self._a.shape[0])
        return self._get(("ws", q.tobytes()), lambda: weighted_spectral(self._a, q))

    def row_weighted_max(self, p) -> float:
        q = _as_probs(p, self._a.shape[1])
        return self._get(("rwm", q.tobytes()), lambda: row_weighted_max(self._a, q))


def save_matrix_csv(path, a) -> None:
    np.savetxt(path, _as_matrix(a), delimiter=",")


def load_matrix_csv(path) -> np.ndarray:
    m = np.loadtxt(path, delimiter=",", ndmin=2)
    return _as_matrix(m)


def save_matrix_bin(path, a) -> None:
    """Header u64 rows, u64 cols (little-endian), then row-major f64."""
    m = _as_matrix(a)
    with open(path, "wb") as fh:
        np.array(m.shape, dtype="<u8").tofile(fh)
        np.ascontiguousarray(m, dtype="<f8").tofile(fh)


def load_matrix_bin(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = np.fromfile(fh, dtype="<u8", count=2)
        if header.size != 2:
            raise ValueError("truncated matrix header")
        rows, cols = int(header[0]), int(header[1])
        data = np.fromfile(fh, dtype="<f8", count=rows * cols)
    if data.size != rows * cols:
        raise ValueError("truncated matrix payload")
    return _as_matrix(data.reshape(rows, cols))
