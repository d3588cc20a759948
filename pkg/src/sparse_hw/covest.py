"""Covariance estimation from partially observed heavy-tailed samples.

Data model: latent factors xi in R^m with centered, unit-variance,
alpha-sub-exponential entries; observed vector X = delta o (B xi) where
delta masks each coordinate independently with retention probability
p_j > 0.  The target is Sigma = B B^T.  The inverse-probability-weighted
(IPW) estimator divides each empirical second moment by the probability
that it is observed, which restores unbiasedness under masking.

`rip_k` measures the worst k-sparse quadratic deviation
sup{ |theta^T M theta| : ||theta||_2 <= 1, ||theta||_0 <= k }, equal to
the largest spectral norm among k x k principal submatrices.

`expected_frob_sq_exact` evaluates E || B^T Diag(delta) A_{theta,p}
Diag(delta) B ||_F^2 in closed form.  Writing G = B B^T, the expectation
expands over index quadruples (l, k, p, q) with weight

    W = (prod of p_u over distinct indices u) / (denom(l,k) denom(p,q)),
    denom(i,j) = p_i p_j if i != j else p_i,

which covers all 15 equality patterns of the four indices.  A direct
case enumeration that stops at single-pair, triple and quadruple
coincidences misses the three double-pair patterns (l=p,k=q), (l=k,p=q),
(l=q,p=k); those carry strictly positive weight for generic inputs, so
the uniform weight form above is the one that matches Monte Carlo.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import matrix_norms as mn
from .errors import BudgetExceededError
from .rv_models import AlphaParam, DistributionSpec, SparseModel, sample_base
from .streams import stream

RIP_ENUM_BUDGET = 10**6
EXACT_FROB_BUDGET = 10**9  # number of weighted quadruple terms


@dataclass(frozen=True)
class MultivariateModel:
    """Masked linear factor model X = delta o (B xi)."""

    b: np.ndarray
    alpha: float
    p: tuple[float, ...]
    base: DistributionSpec | None = None

    def __post_init__(self) -> None:
        m = np.asarray(self.b, dtype=float)
        if m.ndim != 2:
            raise ValueError("B must be a 2-D array")
        if not np.all(np.isfinite(m)):
            raise ValueError("B entries must be finite")
        AlphaParam(self.alpha)
        p = tuple(float(v) for v in np.atleast_1d(np.asarray(self.p, dtype=float)))
        if len(p) != m.shape[0]:
            raise ValueError("p must have one entry per row of B")
        if any(v <= 0.0 or v > 1.0 for v in p):
            raise ValueError("retention probabilities must lie in (0, 1]")
        base = self.base
        if base is None:
            base = DistributionSpec(kind="weibull", alpha=self.alpha, unit_variance=True)
        if base.variance() != 1.0:
            raise ValueError("factor entries must have unit variance")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "b", m)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "base", base)

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    @property
    def n_factors(self) -> int:
        return self.b.shape[1]

    def p_array(self) -> np.ndarray:
        return np.asarray(self.p, dtype=float)

    def sigma(self) -> np.ndarray:
        return self.b @ self.b.T


def generate_samples(
    model: MultivariateModel, n: int, seed: int, stream_id: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Draw (values, masks), both (n, d); values are already masked.

    A masked coordinate is 0 in values and 0 in masks, so an observed
    exact zero stays distinguishable via the mask array.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = stream(seed, stream_id)
    masks = rng.random((n, model.dim)) < model.p_array()
    xi = sample_base(model.base, (n, model.n_factors), rng)
    values = np.where(masks, xi @ model.b.T, 0.0)
    return values, masks.astype(np.uint8)


def ipw_estimator(values, p) -> np.ndarray:
    """Inverse-probability-weighted covariance estimate from masked values.

    Masked entries must be zero-filled (as generate_samples emits them):
    the estimator only uses products of observed values because every
    product with a masked coordinate vanishes.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("values must be a nonempty (n, d) array")
    q = np.asarray(p, dtype=float)
    if q.shape != (x.shape[1],):
        raise ValueError("p must have one entry per column")
    if np.any(q <= 0.0) or np.any(q > 1.0):
        raise ValueError("IPW requires retention probabilities in (0, 1]")
    n = x.shape[0]
    g = x.T @ x / n
    est = g / np.outer(q, q)
    np.fill_diagonal(est, np.diag(g) / q)
    return est


def save_samples(directory, model: MultivariateModel, values, masks, seed: int, prefix="samples"):
    """Persist a draw as CSV pair plus a JSON manifest."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    np.savetxt(d / f"{prefix}_values.csv", np.asarray(values, dtype=float), delimiter=",")
    np.savetxt(d / f"{prefix}_masks.csv", np.asarray(masks, dtype=int), delimiter=",", fmt="%d")
    manifest = {
        "b": model.b.tolist(),
        "p": list(model.p),
        "alpha": model.alpha,
        "base": json.loads(model.base.to_json()),
        "seed": seed,
        "n": int(np.asarray(values).shape[0]),
        "files": {"values": f"{prefix}_values.csv", "masks": f"{prefix}_masks.csv"},
    }
    with open(d / f"{prefix}_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)


def load_samples(manifest_path) -> tuple[MultivariateModel, np.ndarray, np.ndarray, int]:
    path = Path(manifest_path)
    with open(path) as fh:
        manifest = json.load(fh)
    model = MultivariateModel(
        b=np.asarray(manifest["b"], dtype=float),
        alpha=manifest["alpha"],
        p=tuple(manifest["p"]),
        base=DistributionSpec.from_json(json.dumps(manifest["base"])),
    )
    values = np.loadtxt(path.parent / manifest["files"]["values"], delimiter=",", ndmin=2)
    masks = np.loadtxt(path.parent / manifest["files"]["masks"], delimiter=",", ndmin=2)
    return model, values, masks.astype(np.uint8), int(manifest["seed"])


def ipw_replicate_stats(
    model: MultivariateModel,
    n: int,
    replicates: int,
    seed: int,
    chunk: int = 512,
) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error of the IPW estimate over many replicates.

    Replicate batches draw from chunk-indexed streams and accumulate in
    chunk order, so the result does not depend on batching details
    beyond the fixed chunk size.
    """
    if replicates < 2:
        raise ValueError("need at least 2 replicates")
    d = model.dim
    q = model.p_array()
    s1 = np.zeros((d, d))
    s2 = np.zeros((d, d))
    done = 0
    c = 0
    while done < replicates:
        take = min(chunk, replicates - done)
        rng = stream(seed, c)
        masks = rng.random((take, n, d)) < q
        xi = sample_base(model.base, (take, n, model.n_factors), rng)
        values = np.where(masks, xi @ model.b.T, 0.0)
        g = np.einsum("cnd,cne->cde", values, values) / n
        est = g / np.outer(q, q)
        diag = np.einsum("cdd->cd", g) / q
        ii = np.arange(d)
        est[:, ii, ii] = diag
        s1 += est.sum(axis=0)
        s2 += (est * est).sum(axis=0)
        done += take
        c += 1
    mean = s1 / replicates
    var = np.maximum(s2 / replicates - mean * mean, 0.0) * replicates / (replicates - 1)
    se = np.sqrt(var / replicates)
    return mean, se


def rip_k(m, k: int, budget: int = RIP_ENUM_BUDGET) -> float:
    """Exact k-sparse operator norm by principal-submatrix enumeration.

    The quadratic form only sees the symmetric part of M.  Raises
    BudgetExceededError when comb(d, k) exceeds the budget; use
    rip_k_lower_random for a lower bound in that regime.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("M must be square")
    d = a.shape[0]
    if not 1 <= k <= d:
        raise ValueError("need 1 <= k <= d")
    n_subsets = math.comb(d, k)
    if n_subsets > budget:
        raise BudgetExceededError(
            f"comb({d}, {k}) = {n_subsets} exceeds the enumeration budget {budget}; "
            "rip_k_lower_random gives a certified lower bound instead"
        )
    sym = 0.5 * (a + a.T)
    best = 0.0
    for subset in itertools.combinations(range(d), k):
        idx = np.asarray(subset)
        ev = np.linalg.eigvalsh(sym[np.ix_(idx, idx)])
        best = max(best, abs(float(ev[0])), abs(float(ev[-1])))
    return best


def rip_k_lower_random(m, k: int, n_draws: int = 10**4, seed: int = 0) -> float:
    """Certified lower bound on rip_k from random k-sparse directions."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("M must be square")
    d = a.shape[0]
    if not 1 <= k <= d:
        raise ValueError("need 1 <= k <= d")
    rng = stream(seed, 0)
    best = 0.0
    chunk = max(1, min(n_draws, (1 << 22) // (k * k)))
    left = n_draws
    while left > 0:
        block = min(chunk, left)
        left -= block
        supports = np.argsort(rng.random((block, d)), axis=1)[:, :k]
        v = rng.standard_normal((block, k))
        norms = np.linalg.norm(v, axis=1)
        good = norms > 0.0
        v[good] /= norms[good, None]
        sub = a[supports[:, :, None], supports[:, None, :]]
        vals = np.abs(np.einsum("bi,bij,bj->b", v[good], sub[good], v[good]))
        if vals.size:
            best = max(best, float(vals.max()))
    return best


def a_theta_p(theta, p) -> np.ndarray:
    """Weight matrix with diagonal theta_j^2 / p_j and off-diagonal
    theta_j theta_k / (p_j p_k)."""
    t = np.asarray(theta, dtype=float)
    q = np.asarray(p, dtype=float)
    if t.ndim != 1 or t.shape != q.shape:
        raise ValueError("theta and p must be vectors of equal length")
    if np.any(q <= 0.0) or np.any(q > 1.0):
        raise ValueError("p must lie in (0, 1]")
    u = t / q
    out = np.outer(u, u)
    np.fill_diagonal(out, t * t / q)
    return out


def expected_frob_sq_exact(b, theta, p) -> float:
    """E || B^T Diag(delta) A_{theta,p} Diag(delta) B ||_F^2, exact.

    Gram reduction: with G = B B^T the expectation is
    sum_{l,k,pp,qq} W * theta_l theta_k theta_pp theta_qq G[l,pp] G[k,qq]
    with the uniform equality-pattern weight W from the module docstring.
    Cost is O(d^4) independent of m.
    """
    bm = np.asarray(b, dtype=float)
    t = np.asarray(theta, dtype=float)
    q = np.asarray(p, dtype=float)
    if bm.ndim != 2:
        raise ValueError("B must be 2-D")
    d = bm.shape[0]
    if t.shape != (d,) or q.shape != (d,):
        raise ValueError("theta and p must have one entry per row of B")
    if np.any(q <= 0.0) or np.any(q > 1.0):
        raise ValueError("p must lie in (0, 1]")
    if d**4 > EXACT_FROB_BUDGET:
        raise BudgetExceededError(f"d^4 = {d**4} exceeds budget {EXACT_FROB_BUDGET}")
    g = bm @ bm.T
    idx = np.arange(d)
    pp, qq = np.meshgrid(idx, idx, indexing="ij")
    denom_pq = np.where(pp == qq, q[pp], q[pp] * q[qq])
    outer_theta = np.outer(t, t)
    total = 0.0
    for l in range(d):
        for k in range(d):
            e_lk = q[l] * (q[k] if k != l else 1.0)
            extra_p = np.where((pp == l) | (pp == k), 1.0, q[pp])
            extra_q = np.where((qq == l) | (qq == k) | (qq == pp), 1.0, q[qq])
            denom_lk = q[l] * q[k] if l != k else q[l]
            w = e_lk * extra_p * extra_q / (denom_lk * denom_pq)
            total += t[l] * t[k] * np.sum(w * outer_theta * np.outer(g[l], g[k]))
    return float(total)


def expected_frob_sq_mc(
    b, theta, p, n_samples: int = 10**5, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo estimate of the masked-conjugation second moment.

    Returns (mean, standard error); the masks are the only randomness.
    """
    bm = np.asarray(b, dtype=float)
    a = a_theta_p(theta, p)
    q = np.asarray(p, dtype=float)
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    rng = stream(seed, 0)
    d = bm.shape[0]
    delta = (rng.random((n_samples, d)) < q).astype(float)
    bd = delta[:, :, None] * bm[None, :, :]
    inner = np.einsum("de,nej->ndj", a, bd)
    m_all = np.einsum("ndm,ndj->nmj", bd, inner)
    vals = np.sum(m_all * m_all, axis=(1, 2))
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_samples))
    return mean, se


def k1_k2_terms(
    model: MultivariateModel,
    theta,
    k2_method: str = "exact",
    n_samples: int = 10**5,
    seed: int = 0,
) -> tuple[float, float]:
    """Per-direction constants of the k-sparse deviation bound.

    K1 = ||B||_{2->2} (||Diag(sqrt(p)) B||_F + ||B||_{2->2}) ||theta o 1/p||_2^2
    K2 = sqrt(E || B^T Diag(delta) A_{theta,p} Diag(delta) B ||_F^2)
    """
    t = np.asarray(theta, dtype=float)
    q = model.p_array()
    if t.shape != (model.dim,):
        raise ValueError("theta must have one entry per row of B")
    spec_b = mn.opnorm(model.b, 2, 2)
    weighted_fro = float(np.linalg.norm(np.sqrt(q)[:, None] * model.b, "fro"))
    k1 = spec_b * (weighted_fro + spec_b) * float(np.sum((t / q) ** 2))
    if k2_method == "exact":
        k2 = math.sqrt(expected_frob_sq_exact(model.b, t, q))
    elif k2_method == "mc":
        k2 = math.sqrt(expected_frob_sq_mc(model.b, t, q, n_samples, seed)[0])
    else:
        raise ValueError("k2_method must be 'exact' or 'mc'")
    return k1, k2


@dataclass(frozen=True)
class RipBound:
    value: float
    term_k2: float
    term_k1_34: float
    term_k1_alpha: float
    sup_k1: float
    sup_k2: float
    log_term: float
    thetas_evaluated: int


def rip_bound_rhs(
    t: float,
    k: int,
    model: MultivariateModel,
    n: int,
    theta_budget: int = 128,
    seed: int = 0,
    k2_method: str = "exact",
) -> RipBound:
    """High-probability bound on rip_k(Sigma_hat - Sigma) from n samples.

    With u = t + k log(48 e d / k) the bound is
    sqrt(u / n) sup K2 + (u^{3/4} / n^{3/4} + u^{2/alpha} / n) sup K1,
    both sups over k-sparse unit directions.  sup K1 is closed form
    (all mass on the smallest p); sup K2 is maximized over the axis
    directions plus theta_budget random k-sparse directions.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if n < 1:
        raise ValueError("n must be positive")
    d = model.dim
    if not 1 <= k <= d:
        raise ValueError("need 1 <= k <= d")
    q = model.p_array()
    u = t + k * math.log(48.0 * math.e * d / k)
    spec_b = mn.opnorm(model.b, 2, 2)
    weighted_fro = float(np.linalg.norm(np.sqrt(q)[:, None] * model.b, "fro"))
    sup_k1 = spec_b * (weighted_fro + spec_b) / float(np.min(q)) ** 2

    rng = stream(seed, 0)
    thetas = [np.eye(d)[i] for i in range(d)]
    for _ in range(theta_budget):
        support = rng.choice(d, size=k, replace=False)
        v = rng.standard_normal(k)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        th = np.zeros(d)
        th[support] = v / nv
        thetas.append(th)
    sup_k2 = 0.0
    for th in thetas:
        _, k2 = k1_k2_terms(model, th, k2_method=k2_method, seed=seed)
        sup_k2 = max(sup_k2, k2)

    term_k2 = math.sqrt(u / n) * sup_k2
    term_k1_34 = (u / n) ** 0.75 * sup_k1
    term_k1_alpha = u ** (2.0 / model.alpha) / n * sup_k1
    return RipBound(
        value=term_k2 + term_k1_34 + term_k1_alpha,
        term_k2=term_k2,
        term_k1_34=term_k1_34,
        term_k1_alpha=term_k1_alpha,
        sup_k1=sup_k1,
        sup_k2=sup_k2,
        log_term=u,
        thetas_evaluated=len(thetas),
    )
