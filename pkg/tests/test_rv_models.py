import json
import math

import numpy as np
import pytest

from sparse_hw.quadform_mc import wilson_interval
from sparse_hw.rv_models import (
    AlphaParam,
    DistributionSpec,
    SparseModel,
    model_psi_alpha,
    psi_alpha_exact,
    psi_alpha_norm,
    sample_base,
    sample_sparse_matrix,
    sample_sparse_vector,
    sample_weibull,
)
from sparse_hw.streams import stream


def test_alpha_param_range():
    assert AlphaParam(2.0).value == 2.0
    assert AlphaParam(0.25).value == 0.25
    for bad in (0.0, -1.0, 2.5, math.nan):
        with pytest.raises(ValueError):
            AlphaParam(bad)


def test_alpha_conjugate():
    assert AlphaParam(2.0).conjugate == 2.0
    assert math.isclose(AlphaParam(1.5).conjugate, 3.0)
    assert AlphaParam(1.0).conjugate == math.inf
    with pytest.raises(ValueError):
        AlphaParam(0.5).conjugate


def test_distribution_spec_validation():
    with pytest.raises(ValueError):
        DistributionSpec(kind="cauchy")
    with pytest.raises(ValueError):
        DistributionSpec(kind="weibull")  # alpha missing
    with pytest.raises(ValueError):
        DistributionSpec(kind="weibull", alpha=3.0)
    with pytest.raises(ValueError):
        DistributionSpec(kind="gaussian", scale=0.0)


def test_exact_std_values():
    # E zeta^2 = Gamma(1 + 2/alpha) for the symmetric Weibull
    assert math.isclose(DistributionSpec(kind="weibull", alpha=1.0).std(), math.sqrt(2.0))
    assert math.isclose(DistributionSpec(kind="weibull", alpha=2.0).std(), 1.0)
    assert DistributionSpec(kind="gaussian", scale=1.5).std() == 1.5
    assert DistributionSpec(kind="rademacher").std() == 1.0
    unit = DistributionSpec(kind="weibull", alpha=0.5, unit_variance=True)
    assert unit.variance() == 1.0


def test_spec_json_round_trip():
    spec = DistributionSpec(kind="weibull", alpha=0.75, scale=2.0, unit_variance=True)
    assert DistributionSpec.from_json(spec.to_json()) == spec
    with pytest.raises(ValueError):
        DistributionSpec.from_json(json.dumps({"kind": "gaussian", "sigma": 1.0}))


def test_sparse_model_validation():
    base = DistributionSpec(kind="rademacher")
    with pytest.raises(ValueError):
        SparseModel(p=(), base=base)
    with pytest.raises(ValueError):
        SparseModel(p=(0.5, 1.2), base=base)
    with pytest.raises(ValueError):
        SparseModel(p=(0.5, 0.5), base=(base,))  # one spec for two coordinates
    model = SparseModel(p=(0.5, 1.0), base=base)
    assert model.dim == 2
    assert np.allclose(model.coordinate_variances(), [0.5, 1.0])


def test_weibull_median_alpha_1():
    # survival exp(-x) = 1/2 at x = ln 2; median estimator SE ~ 1e-3 at N=1e6
    x = np.abs(sample_weibull(1.0, 10**6, stream(11, 0)))
    assert math.isclose(float(np.median(x)), math.log(2.0), abs_tol=5e-3)


def test_weibull_median_alpha_2():
    x = np.abs(sample_weibull(2.0, 10**6, stream(12, 0)))
    assert math.isclose(float(np.median(x)), math.sqrt(math.log(2.0)), abs_tol=5e-3)


def test_weibull_variance_alpha_1():
    # E x^2 = Gamma(3) = 2; Var(x^2) = Gamma(5) - 4 = 20, SE ~ 0.0045 at N=1e6
    x = sample_weibull(1.0, 10**6, stream(13, 0))
    assert math.isclose(float(np.mean(x * x)), 2.0, abs_tol=0.02)


def test_weibull_survival_calibration():
    # -log P{|x| > u} = u^alpha exactly; check u in {0.5, 1, 2} at 3 Wilson widths
    n = 10**6
    for alpha, sid in ((1.0, 21), (2.0, 22), (0.5, 23)):
        x = np.abs(sample_weibull(alpha, n, stream(14, sid)))
        for u in (0.5, 1.0, 2.0):
            k = int(np.sum(x > u))
            lo, hi = wilson_interval(k, n)
            half = (hi - lo) / 2
            target = math.exp(-(u**alpha))
            assert abs(k / n - target) <= 3 * half


def test_weibull_signs_are_symmetric():
    x = sample_weibull(1.0, 10**5, stream(15, 0))
    se = float(np.std(x)) / math.sqrt(x.size)
    assert abs(float(np.mean(x))) <= 4 * se


def test_clamp_diagnostics_tiny_alpha():
    # alpha = 0.002 overflows the magnitude for u < exp(-3.98), about 2% of draws
    diag = {}
    x = sample_weibull(0.002, 10**4, stream(16, 0), diagnostics=diag)
    assert diag["clamped"] > 0
    assert np.all(np.isfinite(x))
    assert float(np.max(np.abs(x))) <= 1e300


def test_unit_variance_sampling():
    spec = DistributionSpec(kind="weibull", alpha=1.0, unit_variance=True)
    x = sample_base(spec, 10**6, stream(17, 0))
    # second moment 1, SE of the mean of x^2 is sqrt(Var(x^2)/N) = sqrt(5)/1000
    assert math.isclose(float(np.mean(x * x)), 1.0, abs_tol=4 * math.sqrt(5) / 1000)


def test_sparse_vector_trivial_ps():
    base = DistributionSpec(kind="rademacher")
    zero = sample_sparse_vector(SparseModel(p=(0.0,) * 4, base=base), stream(18, 0))
    assert np.array_equal(zero, np.zeros(4))
    full = sample_sparse_vector(SparseModel(p=(1.0,) * 4, base=base), stream(18, 1))
    assert set(np.abs(full)) == {1.0}


def test_sparse_zero_fraction():
    model = SparseModel(p=(0.5,) * 5, base=DistributionSpec(kind="rademacher"))
    x = sample_sparse_matrix(model, 20_000, stream(19, 0))
    k = int(np.sum(x == 0.0))
    lo, hi = wilson_interval(k, x.size)
    assert lo <= 0.5 <= hi


def test_sampling_is_deterministic():
    model = SparseModel(
        p=(0.3, 0.9, 1.0),
        base=(
            DistributionSpec(kind="weibull", alpha=0.8),
            DistributionSpec(kind="gaussian"),
            DistributionSpec(kind="rademacher"),
        ),
    )
    a = sample_sparse_matrix(model, 500, stream(20, 3))
    b = sample_sparse_matrix(model, 500, stream(20, 3))
    assert np.array_equal(a, b)


def test_psi_alpha_exact_values():
    assert math.isclose(psi_alpha_exact(DistributionSpec(kind="weibull", alpha=1.0), 1.0), 2.0)
    assert math.isclose(
        psi_alpha_exact(DistributionSpec(kind="weibull", alpha=2.0), 2.0), math.sqrt(2.0)
    )
    assert math.isclose(
        psi_alpha_exact(DistributionSpec(kind="rademacher"), 2.0), math.log(2.0) ** -0.5
    )
    assert math.isclose(
        psi_alpha_exact(DistributionSpec(kind="gaussian", scale=2.0), 2.0),
        2.0 * math.sqrt(8.0 / 3.0),
    )
    # no closed form at mismatched exponents
    assert psi_alpha_exact(DistributionSpec(kind="weibull", alpha=1.0), 0.5) is None
    assert psi_alpha_exact(DistributionSpec(kind="gaussian"), 1.0) is None


def test_psi_alpha_exact_unit_variance_rescaling():
    spec = DistributionSpec(kind="weibull", alpha=1.0, unit_variance=True)
    # dividing samples by std sqrt(2) divides the norm by the same factor
    assert math.isclose(psi_alpha_exact(spec, 1.0), 2.0 / math.sqrt(2.0))


def test_psi_alpha_norm_matches_closed_form():
    est = psi_alpha_norm(DistributionSpec(kind="weibull", alpha=1.0), 1.0, n_samples=200_000, seed=5)
    assert abs(est - 2.0) <= 0.05 * 2.0
    est2 = psi_alpha_norm(DistributionSpec(kind="gaussian"), 2.0, n_samples=200_000, seed=6)
    assert abs(est2 - math.sqrt(8.0 / 3.0)) <= 0.05 * math.sqrt(8.0 / 3.0)


def test_psi_alpha_norm_bisection_invariant():
    # the returned t must satisfy g(t) <= 2 < g(t / (1 + 2 tol)) on the same sample
    dist = DistributionSpec(kind="weibull", alpha=0.7)
    alpha, seed, tol = 0.7, 8, 1e-3
    t = psi_alpha_norm(dist, alpha, n_samples=50_000, seed=seed, rel_tol=tol)
    x = sample_base(dist, 50_000, stream(seed, 0))
    pow_a = np.abs(x) ** alpha

    def g(u):
        return float(np.mean(np.exp(np.minimum(pow_a / u**alpha, 700.0))))

    assert g(t) <= 2.0
    assert g(t / (1 + 2 * tol)) > 2.0


def test_psi_alpha_norm_rejects_degenerate():
    with pytest.raises(ValueError):
        psi_alpha_norm(DistributionSpec(kind="gaussian"), 2.0, n_samples=0, seed=0)


def test_model_psi_alpha_takes_max_over_bases():
    model = SparseModel(
        p=(1.0, 1.0),
        base=(
            DistributionSpec(kind="rademacher"),
            DistributionSpec(kind="weibull", alpha=2.0),
        ),
    )
    # max{ (ln 2)^{-1/2} ~ 1.2011, sqrt(2) ~ 1.4142 }
    assert math.isclose(model_psi_alpha(model, 2.0), math.sqrt(2.0))
