"""Random variable models for sparse quadratic-form experiments.

The coordinate model is xi_i = delta_i * zeta_i where delta_i is
Bernoulli(p_i) and zeta_i is a centered alpha-sub-exponential variable.
Three base laws are supported:

* symmetric Weibull W_s(alpha): sign * E^(1/alpha) with E ~ Exp(1), so
  -log P{|zeta| > x} = x^alpha exactly.  This is the canonical base: it
  has psi_alpha norm exactly 2^(1/alpha) and saturates the tail index.
* centered Gaussian with standard deviation `scale`.
* Rademacher (uniform on {-1, +1}).

The psi_alpha (Orlicz) norm of a variable is
inf{t > 0 : E exp(|xi|^alpha / t^alpha) <= 2}; `psi_alpha_norm`
estimates it by bisection over a shared Monte Carlo sample, and
`psi_alpha_exact` returns the closed form where one exists.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .streams import stream

# Magnitudes are clamped here so that powers taken downstream stay finite.
CLAMP_LIMIT = 1e300

_KINDS = ("weibull", "gaussian", "rademacher")


@dataclass(frozen=True)
class AlphaParam:
    """Tail exponent alpha with 0 < alpha <= 2."""

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if not (0.0 < v <= 2.0) or math.isnan(v):
            raise ValueError(f"alpha must lie in (0, 2], got {self.value!r}")
        object.__setattr__(self, "value", v)

    @property
    def conjugate(self) -> float:
        """Hoelder conjugate alpha / (alpha - 1); infinity at alpha = 1."""
        if self.value < 1.0:
            raise ValueError("conjugate exponent requires alpha >= 1")
        if self.value == 1.0:
            return math.inf
        return self.value / (self.value - 1.0)


@dataclass(frozen=True)
class DistributionSpec:
    """Base law of the centered factor zeta.

    `alpha` is required for kind="weibull" and ignored otherwise.
    `unit_variance` divides samples by the exact standard deviation.
    """

    kind: str
    alpha: float | None = None
    scale: float = 1.0
    unit_variance: bool = False

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kind {self.kind!r}, expected one of {_KINDS}")
        if self.kind == "weibull":
            if self.alpha is None:
                raise ValueError("weibull base requires alpha")
            AlphaParam(self.alpha)
        if not (self.scale > 0) or math.isnan(self.scale):
            raise ValueError("scale must be positive")

    def std(self) -> float:
        """Exact standard deviation before any unit-variance rescaling."""
        if self.kind == "weibull":
            return self.scale * math.sqrt(math.gamma(1.0 + 2.0 / self.alpha))
        if self.kind == "gaussian":
            return self.scale
        return 1.0

    def variance(self) -> float:
        """E zeta^2 of the emitted samples (1.0 when unit_variance)."""
        if self.unit_variance:
            return 1.0
        return self.std() ** 2

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "alpha": self.alpha,
                "scale": self.scale,
                "unit_variance": self.unit_variance,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "DistributionSpec":
        data = json.loads(text)
        extra = set(data) - {"kind", "alpha", "scale", "unit_variance"}
        if extra:
            raise ValueError(f"unexpected fields {sorted(extra)}")
        return cls(
            kind=data["kind"],
            alpha=data.get("alpha"),
            scale=data.get("scale", 1.0),
            unit_variance=data.get("unit_variance", False),
        )


@dataclass(frozen=True)
class SparseModel:
    """Sparse vector model xi = delta o zeta.

    p is the vector of retention probabilities in [0, 1]^n.  `base` is a
    single DistributionSpec shared by all coordinates or a tuple of n
    per-coordinate specs.
    """

    p: tuple[float, ...]
    base: DistributionSpec | tuple[DistributionSpec, ...]
    _bases: tuple[DistributionSpec, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        p = tuple(float(v) for v in np.atleast_1d(np.asarray(self.p, dtype=float)))
        if len(p) == 0:
            raise ValueError("p must be nonempty")
        if any(math.isnan(v) or v < 0.0 or v > 1.0 for v in p):
            raise ValueError("retention probabilities must lie in [0, 1]")
        object.__setattr__(self, "p", p)
        if isinstance(self.base, DistributionSpec):
            bases = (self.base,) * len(p)
        else:
            bases = tuple(self.base)
            if len(bases) != len(p):
                raise ValueError("need one base spec per coordinate")
        object.__setattr__(self, "_bases", bases)

    @property
    def dim(self) -> int:
        return len(self.p)

    @property
    def bases(self) -> tuple[DistributionSpec, ...]:
        return self._bases

    def p_array(self) -> np.ndarray:
        return np.asarray(self.p, dtype=float)

    def coordinate_variances(self) -> np.ndarray:
        """E xi_i^2 = p_i * E zeta_i^2 per coordinate."""
        v = np.array([b.variance() for b in self._bases])
        return self.p_array() * v


def sample_weibull(
    alpha: float,
    size: int | tuple[int, ...],
    rng: np.random.Generator,
    scale: float = 1.0,
    diagnostics: dict | None = None,
) -> np.ndarray:
    """Symmetric Weibull W_s(alpha) samples via inverse CDF.

    Magnitude is scale * (-log U)^(1/alpha) with U uniform on the open
    interval (exact endpoints are rejected and redrawn).  |x| is clamped
    at CLAMP_LIMIT; clamp events are counted into diagnostics["clamped"]
    when a dict is passed.
    """
    a = AlphaParam(alpha).value
    u = rng.random(size)
    # rng.random lives in [0, 1); resample the measure-zero exact zeros.
    bad = u == 0.0
    while np.any(bad):
        u[bad] = rng.random(int(bad.sum()))
        bad = u == 0.0
    with np.errstate(over="ignore"):  # inf is handled by the clamp below
        mag = scale * np.power(-np.log(u), 1.0 / a)
    clamped = mag > CLAMP_LIMIT
    if np.any(clamped):
        mag = np.minimum(mag, CLAMP_LIMIT)
    if diagnostics is not None:
        diagnostics["clamped"] = diagnostics.get("clamped", 0) + int(clamped.sum())
    signs = rng.integers(0, 2, size=size) * 2 - 1
    return signs * mag


def sample_base(
    spec: DistributionSpec,
    size: int | tuple[int, ...],
    rng: np.random.Generator,
    diagnostics: dict | None = None,
) -> np.ndarray:
    """Draw centered samples of zeta according to spec."""
    if spec.kind == "weibull":
        x = sample_weibull(spec.alpha, size, rng, scale=spec.scale, diagnostics=diagnostics)
    elif spec.kind == "gaussian":
        x = rng.standard_normal(size) * spec.scale
    else:
        x = (rng.integers(0, 2, size=size) * 2 - 1).astype(float)
    if spec.unit_variance:
        x = x / spec.std()
    return x


def sample_sparse_matrix(
    model: SparseModel,
    n_samples: int,
    rng: np.random.Generator,
    diagnostics: dict | None = None,
) -> np.ndarray:
    """(n_samples, dim) array of xi = delta o zeta draws.

    Draw order is fixed (mask first, then zeta column blocks grouped by
    distinct base spec in first-occurrence order) so a given stream
    always yields bit-identical output.
    """
    d = model.dim
    p = model.p_array()
    delta = rng.random((n_samples, d)) < p
    zeta = np.empty((n_samples, d))
    groups: dict[DistributionSpec, list[int]] = {}
    for i, b in enumerate(model.bases):
        groups.setdefault(b, []).append(i)
    for spec, cols in groups.items():
        zeta[:, cols] = sample_base(spec, (n_samples, len(cols)), rng, diagnostics)
    return np.where(delta, zeta, 0.0)


def sample_sparse_vector(
    model: SparseModel,
    rng: np.random.Generator,
    diagnostics: dict | None = None,
) -> np.ndarray:
    """Single xi draw of shape (dim,)."""
    return sample_sparse_matrix(model, 1, rng, diagnostics)[0]


def psi_alpha_exact(spec: DistributionSpec, alpha: float) -> float | None:
    """Closed-form psi_alpha norm where known, else None.

    Known cases: W_s(beta) at alpha = beta gives scale * 2^(1/alpha)
    (|zeta|^alpha is Exp(1) up to scale, so E exp(|zeta|^alpha / t^alpha)
    = 1 / (1 - (scale/t)^alpha) = 2 at t = scale * 2^(1/alpha));
    Rademacher at any alpha gives (log 2)^(-1/alpha); Gaussian at
    alpha = 2 gives scale * sqrt(8/3).
    """
    a = AlphaParam(alpha).value
    norm = spec.std() if spec.unit_variance else 1.0
    if spec.kind == "weibull" and spec.alpha == a:
        return spec.scale * 2.0 ** (1.0 / a) / norm
    if spec.kind == "rademacher":
        return math.log(2.0) ** (-1.0 / a)
    if spec.kind == "gaussian" and a == 2.0:
        return spec.scale * math.sqrt(8.0 / 3.0) / norm
    return None


def model_psi_alpha(
    model: SparseModel, alpha: float, n_samples: int = 10**5, seed: int = 0
) -> float:
    """max_i psi_alpha(zeta_i) over the model's bases.

    Closed forms where available, Monte Carlo bisection otherwise.
    xi_i = delta_i * zeta_i is stochastically dominated by zeta_i, so
    this also bounds the psi_alpha norms of the sparse coordinates.
    """
    out = 0.0
    for spec in set(model.bases):
        exact = psi_alpha_exact(spec, alpha)
        val = exact if exact is not None else psi_alpha_norm(spec, alpha, n_samples, seed)
        out = max(out, val)
    return out


def psi_alpha_norm(
    dist: DistributionSpec,
    alpha: float,
    n_samples: int = 10**6,
    seed: int = 0,
    rel_tol: float = 1e-3,
) -> float:
    """Monte Carlo psi_alpha norm: bisection on a shared sample set.

    g(t) = mean exp(|x|^alpha / t^alpha) is strictly decreasing in t, so
    the returned t is the bisection upper endpoint: g(t) <= 2 while
    g(t / (1 + rel_tol)) > 2 on the same samples.
    """
    a = AlphaParam(alpha).value
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    x = sample_base(dist, n_samples, stream(seed, 0))
    pow_a = np.abs(x) ** a

    def exp_moment(t: float) -> float:
        # exp saturates rather than overflows; anything above log(2e308)
        # already certifies g(t) > 2.
        z = np.minimum(pow_a / t**a, 700.0)
        return float(np.mean(np.exp(z)))

    lo, hi = 1.0, 1.0
    for _ in range(200):
        if exp_moment(hi) <= 2.0:
            break
        hi *= 2.0
    else:
        raise ValueError("exp moment stays above 2 at machine range")
    for _ in range(200):
        if exp_moment(lo) > 2.0:
            break
        lo /= 2.0
    else:
        # even tiny t keeps the moment <= 2: degenerate (x identically 0)
        raise ValueError("exp moment never exceeds 2; degenerate sample")
    while hi - lo > rel_tol * lo:
        mid = 0.5 * (lo + hi)
        if exp_moment(mid) <= 2.0:
            hi = mid
        else:
            lo = mid
    return hi
