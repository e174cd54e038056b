import numpy as np
import pytest
from scipy import stats

from pubbias.errors import DomainError, SimulationError
from pubbias.numerics import RngStream
from pubbias.priors import (
    AbsoluteThreshold,
    ModelSpec,
    NormalZeroMean,
    PointMassMixture,
    SignedThreshold,
    marginal_t_exceedance,
)
from pubbias.simulation import (
    CHUNK_IDEAS,
    SimulationSpec,
    agreement_report,
    compare_analytic,
    scatter_export,
    simulate,
)

NORMAL_ABS = ModelSpec(NormalZeroMean(2.0), AbsoluteThreshold(2.0))
MIXTURE_ABS = ModelSpec(PointMassMixture(pi0=0.4, lam=2.0), AbsoluteThreshold(1.96))


def test_spec_validation():
    with pytest.raises(DomainError):
        SimulationSpec(model=NORMAL_ABS, n_ideas=0, seed=1)
    with pytest.raises(DomainError):
        SimulationSpec(model=NORMAL_ABS, n_ideas=100, seed=-1)
    with pytest.raises(DomainError):
        SimulationSpec(model=NORMAL_ABS, n_ideas=100, seed=1, noise_on_false=-0.5)


def test_simulate_bitwise_deterministic():
    spec = SimulationSpec(model=NORMAL_ABS, n_ideas=150_000, seed=42)
    a = simulate(spec)
    b = simulate(spec)
    assert np.array_equal(a.theta, b.theta)
    assert np.array_equal(a.tstat, b.tstat)
    assert a.n_published == b.n_published
    assert a.realized_shrinkage == b.realized_shrinkage


def test_simulate_seed_changes_output():
    a = simulate(SimulationSpec(model=NORMAL_ABS, n_ideas=50_000, seed=1))
    b = simulate(SimulationSpec(model=NORMAL_ABS, n_ideas=50_000, seed=2))
    assert not np.array_equal(a.tstat, b.tstat)


def test_simulate_chunk_boundary():
    # one idea past the chunk size exercises the two-chunk path
    spec = SimulationSpec(model=NORMAL_ABS, n_ideas=CHUNK_IDEAS + 1, seed=9)
    result = simulate(spec)
    assert 0 < result.n_published < CHUNK_IDEAS + 1
    assert result.pub_rate == result.n_published / (CHUNK_IDEAS + 1)
    # first-chunk draws are unaffected by the presence of a second chunk
    small = simulate(SimulationSpec(model=NORMAL_ABS, n_ideas=CHUNK_IDEAS, seed=9))
    n_small = small.n_published
    assert np.array_equal(result.tstat[:n_small], small.tstat)


def test_published_sample_obeys_rule():
    result = simulate(SimulationSpec(model=MIXTURE_ABS, n_ideas=80_000, seed=5))
    assert np.all(np.abs(result.tstat) >= 1.96)
    assert result.side == "absolute"


def test_published_tail_matches_model_ks():
    spec = SimulationSpec(model=NORMAL_ABS, n_ideas=200_000, seed=77)
    result = simulate(spec)
    prior, cutoff = NORMAL_ABS.prior, 2.0
    denom = marginal_t_exceedance(prior, cutoff, "absolute")

    def cdf(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = [1.0 - marginal_t_exceedance(prior, xi, "absolute") / denom
               if xi >= cutoff else 0.0 for xi in x]
        return np.array(out)

    stat, pval = stats.kstest(np.abs(result.tstat), cdf)
    assert pval > 0.01


def test_agreement_with_analytic_routes():
    for model in (NORMAL_ABS, MIXTURE_ABS,
                  ModelSpec(NormalZeroMean(3.0), SignedThreshold(1.96))):
        spec = SimulationSpec(model=model, n_ideas=150_000, seed=11)
        report = compare_analytic(spec)
        assert report.agree, report.table
        assert report.max_abs_z <= 4.0
        assert set(report.table["quantity"]) == {"shrinkage", "fdr", "pub_rate"}


def test_disagreement_with_wrong_analytic_model():
    # the cross-check must be able to fail: simulate one dispersion, compare
    # against another
    spec = SimulationSpec(model=NORMAL_ABS, n_ideas=200_000, seed=13)
    wrong = ModelSpec(NormalZeroMean(3.0), AbsoluteThreshold(2.0))
    report = compare_analytic(spec, analytic_model=wrong)
    assert not report.agree
    assert report.max_abs_z > 10.0


def test_agreement_report_reuses_result():
    spec = SimulationSpec(model=NORMAL_ABS, n_ideas=100_000, seed=21)
    result = simulate(spec)
    a = agreement_report(result)
    b = compare_analytic(spec)
    assert a.table["simulated"].tolist() == b.table["simulated"].tolist()
    assert a.table["z_score"].tolist() == b.table["z_score"].tolist()


def test_nothing_published_raises():
    spec = SimulationSpec(model=ModelSpec(NormalZeroMean(0.3), SignedThreshold(12.0)),
                          n_ideas=5_000, seed=3)
    with pytest.raises(SimulationError):
        simulate(spec)


def test_scatter_export_plain():
    result = simulate(SimulationSpec(model=NORMAL_ABS, n_ideas=60_000, seed=31))
    frame = scatter_export(result, hurdles={"classic": 1.96})
    assert list(frame.columns) == ["true_effect", "abs_tstat"]
    assert len(frame) == result.n_published
    assert np.all(frame["abs_tstat"] >= 0.0)
    assert frame.attrs["hurdles"] == {"classic": 1.96}
    assert np.array_equal(frame["true_effect"].to_numpy(), result.theta)


def test_scatter_export_jitters_only_the_atom():
    result = simulate(SimulationSpec(model=MIXTURE_ABS, n_ideas=120_000, seed=37,
                                     noise_on_false=0.15))
    atoms = result.theta == 0.0
    assert atoms.any()
    frame = scatter_export(result, rng=RngStream(99))
    eff = frame["true_effect"].to_numpy()
    # continuous effects pass through untouched; atoms get spread out
    assert np.array_equal(eff[~atoms], result.theta[~atoms])
    assert np.all(eff[atoms] != 0.0)
    assert np.std(eff[atoms]) == pytest.approx(0.15, rel=0.1)


def test_scatter_export_jitter_requires_rng():
    result = simulate(SimulationSpec(model=MIXTURE_ABS, n_ideas=60_000, seed=41))
    with pytest.raises(DomainError):
        scatter_export(result, jitter=0.2)
    with pytest.raises(DomainError):
        scatter_export(result, jitter=-0.1, rng=RngStream(1))


def test_scatter_export_deterministic():
    result = simulate(SimulationSpec(model=MIXTURE_ABS, n_ideas=60_000, seed=43))
    a = scatter_export(result, jitter=0.1, rng=RngStream(7))
    b = scatter_export(result, jitter=0.1, rng=RngStream(7))
    assert np.array_equal(a["true_effect"], b["true_effect"])
