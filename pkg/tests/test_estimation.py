import math

import numpy as np
import pytest

from pubbias.errors import (
    BootstrapError,
    DataError,
    DomainError,
    InsufficientDataError,
    NoSolutionError,
)
from pubbias.estimation import (
    TruncatedSampleSet,
    TStatSample,
    bootstrap_se,
    fit_diagnostics,
    gmm_sigma_theta,
    invert_truncated_mean,
    qmle_sigma_theta,
    truncated_loglik,
)
from pubbias.numerics import RngStream, norm_sf, truncated_normal_mean


def make_data(values, cutoff=2.0, side="absolute"):
    samples = [TStatSample(id=f"s{i}", tstat=float(v)) for i, v in enumerate(values)]
    return TruncatedSampleSet(samples, cutoff=cutoff, side=side)


def published_tstats(sigma, n, cutoff=2.0, seed=0):
    """Draw published |t| values under a zero-mean normal effect prior."""
    gen = RngStream(seed).generator()
    out = []
    while len(out) < n:
        theta = gen.standard_normal(4 * n) * sigma
        t = theta + gen.standard_normal(4 * n)
        keep = np.abs(t) >= cutoff
        out.extend(np.abs(t[keep]).tolist())
    return np.array(out[:n])


def test_sample_validation():
    with pytest.raises(DataError):
        TStatSample(id="x", tstat=math.nan)
    with pytest.raises(DomainError):
        TruncatedSampleSet([TStatSample(id="x", tstat=2.5)], cutoff=math.inf)
    with pytest.raises(DomainError):
        TruncatedSampleSet([TStatSample(id="x", tstat=2.5)], side="both")


def test_magnitudes_fold_and_drop():
    data = make_data([2.5, -3.0, 1.0, 2.0], cutoff=2.0, side="absolute")
    vals, dropped = data.magnitudes()
    assert sorted(vals.tolist()) == [2.0, 2.5, 3.0]
    assert dropped == 1
    signed = make_data([2.5, -3.0, 1.0, 2.0], cutoff=2.0, side="signed")
    vals, dropped = signed.magnitudes()
    assert sorted(vals.tolist()) == [2.0, 2.5]
    assert dropped == 2


def test_strict_mode_refuses_dropped():
    data = make_data([2.5, 1.0, 3.0, 2.2, 2.1, 2.6], cutoff=2.0)
    with pytest.raises(DataError):
        data.magnitudes(strict=True)
    with pytest.raises(DataError):
        qmle_sigma_theta(data, strict=True)


def test_too_few_samples():
    data = make_data([2.5, 3.0, 2.2, 2.1])
    with pytest.raises(InsufficientDataError):
        qmle_sigma_theta(data)
    with pytest.raises(InsufficientDataError):
        gmm_sigma_theta(data)


def test_loglik_matches_per_observation_sum():
    # the sufficient-statistic form must equal the naive per-observation sum
    vals = np.array([2.1, 2.8, 3.5, 2.3, 4.1])
    cutoff, sigma = 2.0, 1.7
    s = math.sqrt(1 + sigma ** 2)
    per_obs = sum(
        -0.5 * (v / s) ** 2 - math.log(s) - 0.5 * math.log(2 * math.pi)
        - math.log(float(norm_sf(cutoff / s)))
        for v in vals)
    got = truncated_loglik(sigma, float(np.square(vals).sum()), len(vals), cutoff)
    assert got == pytest.approx(per_obs, rel=1e-12)


def test_loglik_underflow_guard():
    assert truncated_loglik(0.0, 10.0, 5, 45.0) == -math.inf


def test_qmle_matches_dense_grid_search():
    vals = published_tstats(2.0, 800, seed=3)
    data = make_data(vals)
    fit = qmle_sigma_theta(data)
    n, sum_sq = len(vals), float(np.square(vals).sum())
    grid = np.linspace(0.0, 6.0, 2001)
    lls = [truncated_loglik(s, sum_sq, n, 2.0) for s in grid]
    best = grid[int(np.argmax(lls))]
    assert abs(fit.sigma_theta_hat - best) <= 6.0 / 2000
    assert fit.loglik >= max(lls) - 1e-9
    assert fit.method == "qmle"
    assert fit.n_used == 800 and fit.n_dropped == 0


def test_qmle_recovers_sigma():
    for sigma, seed in [(1.5, 11), (3.0, 12)]:
        data = make_data(published_tstats(sigma, 4000, seed=seed))
        fit = qmle_sigma_theta(data)
        assert fit.sigma_theta_hat == pytest.approx(sigma, abs=0.15)
        assert fit.flags == []


def test_qmle_consistency_across_replications():
    # bias of the estimator itself, averaged over replications, stays small
    for sigma in (1.5, 3.0):
        hats = []
        for rep in range(60):
            data = make_data(published_tstats(sigma, 2000, seed=1000 + rep))
            hats.append(qmle_sigma_theta(data).sigma_theta_hat)
        assert np.mean(hats) == pytest.approx(sigma, rel=0.025)


def test_gmm_recovers_sigma():
    for sigma, seed in [(1.5, 21), (3.0, 22)]:
        data = make_data(published_tstats(sigma, 4000, seed=seed))
        fit = gmm_sigma_theta(data)
        assert fit.sigma_theta_hat == pytest.approx(sigma, abs=0.2)
        assert fit.method == "gmm"


def test_qmle_and_gmm_agree_on_clean_data():
    data = make_data(published_tstats(2.5, 6000, seed=31))
    a = qmle_sigma_theta(data).sigma_theta_hat
    b = gmm_sigma_theta(data).sigma_theta_hat
    assert a == pytest.approx(b, abs=0.2)


def test_signed_and_absolute_fits_agree_on_positive_data():
    # folding is a relabeling: positive-only data gives the same likelihood
    vals = published_tstats(2.0, 500, seed=41)
    fit_abs = qmle_sigma_theta(make_data(vals, side="absolute"))
    fit_signed = qmle_sigma_theta(make_data(vals, side="signed"))
    assert fit_abs.sigma_theta_hat == fit_signed.sigma_theta_hat


def test_invert_truncated_mean_roundtrip():
    for s in (1.05, 1.5, 2.0, 4.0):
        for cutoff in (0.0, 1.5, 2.0, -1.0):
            mean = truncated_normal_mean(cutoff, s)
            sigma, flags = invert_truncated_mean(mean, cutoff)
            assert flags == []
            assert sigma == pytest.approx(math.sqrt(s * s - 1.0), abs=1e-7)


def test_invert_truncated_mean_no_solution():
    with pytest.raises(NoSolutionError):
        invert_truncated_mean(1.9, 2.0)
    with pytest.raises(NoSolutionError):
        invert_truncated_mean(2.0, 2.0)
    # negative cutoffs still require a positive mean
    with pytest.raises(NoSolutionError):
        invert_truncated_mean(-0.5, -2.0)


def test_invert_truncated_mean_clamps_below_unit_sd():
    # pure-noise truncated mean at cutoff 2 is about 2.37; anything smaller
    # is consistent only with s < 1 and clamps to zero dispersion
    sigma, flags = invert_truncated_mean(2.2, 2.0)
    assert sigma == 0.0
    assert flags == ["clamped_zero"]


def test_gmm_clamped_flag_on_compressed_data():
    data = make_data([2.01, 2.02, 2.03, 2.02, 2.01, 2.02])
    fit = gmm_sigma_theta(data)
    assert fit.sigma_theta_hat == 0.0
    assert "clamped_zero" in fit.flags


def test_qmle_boundary_flag_at_zero():
    data = make_data([2.01, 2.02, 2.03, 2.02, 2.01, 2.02])
    fit = qmle_sigma_theta(data)
    assert fit.sigma_theta_hat == pytest.approx(0.0, abs=1e-3)
    assert "lower_boundary" in fit.flags


def test_bootstrap_se_deterministic_and_plausible():
    data = make_data(published_tstats(2.0, 600, seed=51))
    se1 = bootstrap_se(data, estimator="qmle", n_boot=150, rng=RngStream(8))
    se2 = bootstrap_se(data, estimator="qmle", n_boot=150, rng=RngStream(8))
    assert se1 == se2
    assert 0.0 < se1 < 1.0
    # against the spread of independent re-estimates of the same design
    hats = [qmle_sigma_theta(make_data(published_tstats(2.0, 600, seed=600 + k))).sigma_theta_hat
            for k in range(50)]
    truth = float(np.std(hats, ddof=1))
    assert truth / 1.6 < se1 < truth * 1.6


def test_bootstrap_se_validation():
    data = make_data(published_tstats(2.0, 300, seed=61))
    with pytest.raises(DomainError):
        bootstrap_se(data, n_boot=150, rng=None)
    with pytest.raises(DomainError):
        bootstrap_se(data, n_boot=50, rng=RngStream(1))
    with pytest.raises(DomainError):
        bootstrap_se(data, estimator="map", n_boot=150, rng=RngStream(1))


def test_bootstrap_se_gmm_route():
    data = make_data(published_tstats(2.5, 500, seed=71))
    se = bootstrap_se(data, estimator="gmm", n_boot=120, rng=RngStream(9))
    assert 0.0 < se < 1.0


def test_fit_diagnostics_masses_and_fractions():
    vals = published_tstats(2.0, 400, seed=81)
    data = make_data(vals)
    diag = fit_diagnostics(data, sigma_grid=[0.0, 1.0, 2.0])
    assert set(diag.columns) == {"sigma", "bin_lo", "bin_hi", "model_mass",
                                 "empirical_frac"}
    for sigma in (0.0, 1.0, 2.0):
        sub = diag[diag["sigma"] == sigma]
        assert sub["model_mass"].sum() == pytest.approx(1.0, abs=1e-12)
        assert sub["empirical_frac"].sum() == pytest.approx(1.0, abs=1e-12)
        assert (sub["model_mass"] >= 0.0).all()
    # bins start at the cutoff and the last one is open
    assert diag["bin_lo"].min() == 2.0
    assert math.isinf(diag["bin_hi"].max())


def test_fit_diagnostics_empirical_matches_hand_count():
    data = make_data([2.1, 2.4, 2.6, 3.2, 4.9], cutoff=2.0)
    diag = fit_diagnostics(data, sigma_grid=[1.0], bin_width=0.5)
    sub = diag[diag["sigma"] == 1.0].set_index("bin_lo")
    assert sub.loc[2.0, "empirical_frac"] == pytest.approx(0.4)
    assert sub.loc[2.5, "empirical_frac"] == pytest.approx(0.2)
    assert sub.loc[3.0, "empirical_frac"] == pytest.approx(0.2)
