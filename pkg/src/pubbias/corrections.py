"""Bias corrections conditional on publication.

Given a selection model (prior over true effects plus a threshold publication
rule), this module computes how much of a published t-statistic is noise
(shrinkage), how often a published finding has a true effect at or below zero
(the published false discovery rate), and the posterior mean effect behind an
observed statistic. Every conditional quantity has two routes, adaptive
quadrature and Monte Carlo, which are kept separate so they can check each
other.

Under an absolute-value rule, published findings are read as |t| with the
true effect relabeled sign(t) * theta; all conditional quantities here follow
that convention, which collapses to the plain one for signed rules and makes
symmetric priors give identical answers under either rule.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DegenerateRuleError, DomainError
from .numerics import QuadratureSpec, RngStream, norm_pdf, norm_sf
from .priors import (
    SIDE_ABSOLUTE,
    SIDE_SIGNED,
    AbsoluteThreshold,
    ModelSpec,
    NormalZeroMean,
    Prior,
    check_side,
    marginal_t_density,
)

FALSE_NONPOSITIVE = "nonpositive"
FALSE_STRICT_ZERO = "zero"

_MC_CHUNK = 1 << 16


def conditional_mean_theta(t: float, sigma_theta: float) -> float:
    """Posterior mean of the true effect behind an observed t, normal prior.

    The published sample is a truncation of the pre-publication population,
    and truncation does not change the conditional law of theta given t, so
    the plain Bayesian slope applies to published statistics unchanged:
    E[theta | t] = (1 - 1/(1 + sigma_theta^2)) * t.
    """
    if not (sigma_theta >= 0.0) or not math.isfinite(sigma_theta):
        raise DomainError(f"sigma_theta must be finite and >= 0, got {sigma_theta!r}")
    if not math.isfinite(t):
        raise DomainError(f"t must be finite, got {t!r}")
    slope = 1.0 - 1.0 / (1.0 + sigma_theta * sigma_theta)
    return slope * t


def posterior_mean_theta(prior: Prior, t: float,
                         quad: QuadratureSpec | None = None) -> float:
    """Posterior mean E[theta | t] for any prior.

    Normal priors use the closed-form slope; other variants integrate
    theta * pdf(t - theta) against the prior (the atom at zero contributes
    nothing to the numerator) and divide by the marginal density.
    """
    if isinstance(prior, NormalZeroMean):
        return conditional_mean_theta(t, prior.sigma_theta)
    num = prior.expect(lambda th: th * float(norm_pdf(t - th)), quad=quad)
    den = marginal_t_density(prior, t, quad=quad)
    if den <= 0.0:
        raise DomainError(f"marginal density vanishes at t={t!r}; posterior mean undefined")
    return num / den


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo value with its standard error and sample size."""

    value: float
    std_error: float
    n: int


@dataclass(frozen=True)
class SelectionStats:
    """Shrinkage, published FDR, and publication rate from one MC pass."""

    shrinkage: McEstimate
    fdr: McEstimate
    pub_rate: McEstimate


def oriented_published(theta: np.ndarray, tstat: np.ndarray, side: str):
    """Reported statistic, relabeled effect, and noise for published draws.

    Signed side: (theta, t, t - theta). Absolute side applies the sign-flip
    reporting convention: (sign(t) * theta, |t|, |t| - sign(t) * theta).
    """
    theta = np.asarray(theta, dtype=float)
    tstat = np.asarray(tstat, dtype=float)
    if side == SIDE_SIGNED:
        eff, rep = theta, tstat
    else:
        s = np.sign(tstat)
        eff, rep = s * theta, np.abs(tstat)
    return eff, rep, rep - eff


def realized_selection_stats(theta: np.ndarray, tstat: np.ndarray, side: str,
                             false_definition: str = FALSE_NONPOSITIVE
                             ) -> tuple[McEstimate, McEstimate]:
    """Realized shrinkage and FDR over a published (theta, t) sample.

    Shrinkage is mean(noise) / mean(reported), with a delta-method standard
    error for the ratio; the FDR standard error is binomial.
    """
    eff, rep, noise = oriented_published(theta, tstat, side)
    n = rep.size
    if n == 0:
        raise DomainError("no published draws; cannot form realized statistics")
    mean_rep = float(rep.mean())
    if mean_rep == 0.0:
        raise DomainError("mean reported statistic is zero; shrinkage undefined")
    ratio = float(noise.mean()) / mean_rep
    if n > 1:
        resid = noise - ratio * rep
        se_rat = float(np.std(resid, ddof=1)) / (abs(mean_rep) * math.sqrt(n))
    else:
        se_rat = math.inf
    false = (eff == 0.0) if false_definition == FALSE_STRICT_ZERO else (eff <= 0.0)
    frac = float(false.mean())
    se_fdr = math.sqrt(frac * (1.0 - frac) / n) if n > 0 else math.inf
    return McEstimate(ratio, se_rat, n), McEstimate(frac, se_fdr, n)


@dataclass(frozen=True)
class _Moments:
    pr_pub: float
    e_noise: float
    e_theta: float
    false_mass: float
    false_mass_strict: float


def _selection_moments(model: ModelSpec, quad: QuadratureSpec | None = None) -> _Moments:
    """Quadrature moments of the published population, base_prob excluded
    (it scales every term equally and cancels from all conditionals)."""
    prior, rule = model.prior, model.rule
    c = rule.cutoff
    w = prior.atom_weight()
    Q = lambda x: float(norm_sf(x))
    phi = lambda x: float(norm_pdf(x))
    if isinstance(rule, AbsoluteThreshold):
        pr = prior.expect(lambda th: Q(c - th) + Q(c + th), quad=quad) + w * 2.0 * Q(c)
        e_noise = prior.expect(lambda th: phi(c - th) + phi(c + th), quad=quad) + w * 2.0 * phi(c)
        e_theta = prior.expect(lambda th: th * (Q(c - th) - Q(c + th)), quad=quad)
        false = (prior.expect(lambda th: Q(c + th), lo=0.0, quad=quad)
                 + prior.expect(lambda th: Q(c - th), hi=0.0, quad=quad)
                 + w * 2.0 * Q(c))
        false_strict = w * 2.0 * Q(c)
    else:
        pr = prior.expect(lambda th: Q(c - th), quad=quad) + w * Q(c)
        e_noise = prior.expect(lambda th: phi(c - th), quad=quad) + w * phi(c)
        e_theta = prior.expect(lambda th: th * Q(c - th), quad=quad)
        false = prior.expect(lambda th: Q(c - th), hi=0.0, quad=quad) + w * Q(c)
        false_strict = w * Q(c)
    if pr <= 1e-12:
        raise DegenerateRuleError(
            f"rule {rule!r} publishes essentially nothing (acceptance mass {pr:.3g})")
    return _Moments(pr, e_noise, e_theta, false, false_strict)


def quadrature_selection_stats(model: ModelSpec,
                               false_definition: str = FALSE_NONPOSITIVE,
                               quad: QuadratureSpec | None = None):
    """(shrinkage, fdr, pub_rate) of the published population by quadrature."""
    m = _selection_moments(model, quad)
    shrink = m.e_noise / (m.e_theta + m.e_noise)
    false = m.false_mass_strict if false_definition == FALSE_STRICT_ZERO else m.false_mass
    fdr = min(false / m.pr_pub, 1.0)
    return shrink, fdr, model.rule.base_prob * m.pr_pub


def mc_selection_stats(model: ModelSpec, rng: RngStream, draws: int = 10 ** 6,
                       false_definition: str = FALSE_NONPOSITIVE) -> SelectionStats:
    """One Monte Carlo pass over the selection model.

    Ideas are generated in fixed chunks, one child stream per chunk, so the
    result is reproducible and independent of how the chunks are processed.
    """
    if draws < 1:
        raise DomainError(f"draws must be positive, got {draws!r}")
    side = SIDE_ABSOLUTE if isinstance(model.rule, AbsoluteThreshold) else SIDE_SIGNED
    kept_theta, kept_t = [], []
    for chunk_idx, start in enumerate(range(0, draws, _MC_CHUNK)):
        m = min(_MC_CHUNK, draws - start)
        gen = rng.substream(chunk_idx)
        theta = model.prior.draw(gen, m)
        tstat = theta + gen.standard_normal(m)
        mask = model.rule.publish_mask(tstat, gen)
        kept_theta.append(theta[mask])
        kept_t.append(tstat[mask])
    theta = np.concatenate(kept_theta)
    tstat = np.concatenate(kept_t)
    if theta.size == 0:
        raise DegenerateRuleError("no draws were published; increase draws or relax the rule")
    shrink, fdr = realized_selection_stats(theta, tstat, side, false_definition)
    rate = theta.size / draws
    rate_se = math.sqrt(rate * (1.0 - rate) / draws)
    return SelectionStats(shrink, fdr, McEstimate(rate, rate_se, draws))


def shrinkage_pub(model: ModelSpec, method: str = "quadrature",
                  rng: RngStream | None = None, draws: int = 10 ** 6) -> float:
    """Expected noise share of published statistics, E[noise | pub] / E[t | pub]."""
    if method == "quadrature":
        return quadrature_selection_stats(model)[0]
    if method == "montecarlo":
        return mc_selection_stats(model, _require_rng(rng), draws).shrinkage.value
    raise DomainError(f"method must be 'quadrature' or 'montecarlo', got {method!r}")


def fdr_pub(model: ModelSpec, method: str = "quadrature",
            rng: RngStream | None = None, draws: int = 10 ** 6,
            false_definition: str = FALSE_NONPOSITIVE) -> float:
    """Probability that a published finding's true effect is false.

    A finding counts as false when its (sign-adjusted) effect is <= 0; pass
    false_definition="zero" to count only effects exactly at zero.
    """
    if false_definition not in (FALSE_NONPOSITIVE, FALSE_STRICT_ZERO):
        raise DomainError(f"unknown false_definition {false_definition!r}")
    if method == "quadrature":
        return quadrature_selection_stats(model, false_definition)[1]
    if method == "montecarlo":
        stats = mc_selection_stats(model, _require_rng(rng), draws, false_definition)
        return stats.fdr.value
    raise DomainError(f"method must be 'quadrature' or 'montecarlo', got {method!r}")


def _require_rng(rng) -> RngStream:
    if rng is None:
        raise DomainError("montecarlo method requires an RngStream")
    return rng


def fdr_upper_bound(pr_exceed_null: float, pr_exceed_marginal: float,
                    pr_theta_nonpositive: float) -> float:
    """Back-of-envelope bound: (null exceedance / marginal exceedance) times
    the prior mass at or below zero, clamped to [0, 1]."""
    for name, v, lo in (("pr_exceed_null", pr_exceed_null, 0.0),
                        ("pr_theta_nonpositive", pr_theta_nonpositive, 0.0)):
        if not (lo <= v <= 1.0):
            raise DomainError(f"{name} must lie in [0, 1], got {v!r}")
    if not (0.0 < pr_exceed_marginal <= 1.0):
        raise DomainError(
            f"pr_exceed_marginal must lie in (0, 1], got {pr_exceed_marginal!r}")
    bound = pr_exceed_null / pr_exceed_marginal * pr_theta_nonpositive
    if bound > 1.0:
        warnings.warn("FDR bound exceeded 1 and was clamped", stacklevel=2)
        return 1.0
    return max(bound, 0.0)


def jensen_shrinkage(tau_c: float, tau_w: float, vol_annual: float = 0.10,
                     n_months: int = 420) -> float:
    """Shrinkage of a noisy performance-difference estimate toward zero.

    With prior dispersion tau^2 = tau_c^2 + tau_w^2 and monthly sampling
    variance vol_annual^2 / 12 over n_months observations, the posterior
    slope falls short of one by 1 - 1/(1 + (vol^2/12) / (n_months * tau^2)).
    Zero dispersion means everything is noise and the shrinkage is 1.
    """
    if tau_c < 0.0 or tau_w < 0.0:
        raise DomainError("dispersion parameters must be nonnegative")
    if not (vol_annual > 0.0) or n_months <= 0:
        raise DomainError("vol_annual must be positive and n_months a positive count")
    tau_sq = tau_c * tau_c + tau_w * tau_w
    if tau_sq == 0.0:
        return 1.0
    noise_ratio = (vol_annual * vol_annual / 12.0) / (n_months * tau_sq)
    return 1.0 - 1.0 / (1.0 + noise_ratio)


def null_exceedance_table(cutoffs, side: str = SIDE_ABSOLUTE) -> pd.DataFrame:
    """Exceedance percentages of a pure-noise t-statistic, with the implied
    number of draws needed to see a single exceedance."""
    check_side(side)
    cuts = [float(c) for c in cutoffs]
    if not cuts:
        raise DomainError("cutoffs must be non-empty")
    if any(not math.isfinite(c) or c < 0.0 for c in cuts):
        raise DomainError(f"cutoffs must be finite and nonnegative, got {cuts!r}")
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise DomainError(f"cutoffs must be strictly ascending, got {cuts!r}")
    probs = [(2.0 if side == SIDE_ABSOLUTE else 1.0) * float(norm_sf(c)) for c in cuts]
    return pd.DataFrame({
        "cutoff": cuts,
        "pct_exceed": [100.0 * p for p in probs],
        "draws_for_one": [(1.0 / p) if p > 0.0 else math.inf for p in probs],
    })


@dataclass
class CorrectionReport:
    """Model-level corrections plus optional per-finding posterior means."""

    model: ModelSpec
    method: str
    shrinkage: float
    fdr: float
    pub_rate: float
    per_finding: pd.DataFrame | None = None
    mc: SelectionStats | None = None


def correction_report(model: ModelSpec, tstats: pd.DataFrame | None = None,
                      method: str = "quadrature", rng: RngStream | None = None,
                      draws: int = 10 ** 6,
                      false_definition: str = FALSE_NONPOSITIVE) -> CorrectionReport:
    """Bundle shrinkage, FDR, publication rate, and per-finding corrections.

    ``tstats`` is a frame with columns id and tstat; each row gains a
    ``corrected`` posterior-mean column computed under the model's prior.
    """
    mc = None
    if method == "montecarlo":
        mc = mc_selection_stats(model, _require_rng(rng), draws, false_definition)
        shrink, fdr, rate = mc.shrinkage.value, mc.fdr.value, mc.pub_rate.value
    elif method == "quadrature":
        shrink, fdr, rate = quadrature_selection_stats(model, false_definition)
    else:
        raise DomainError(f"method must be 'quadrature' or 'montecarlo', got {method!r}")
    per = None
    if tstats is not None:
        if not {"id", "tstat"}.issubset(tstats.columns):
            raise DomainError("tstats frame needs 'id' and 'tstat' columns")
        per = tstats.loc[:, ["id", "tstat"]].copy()
        per["corrected"] = [posterior_mean_theta(model.prior, float(t))
                            for t in per["tstat"]]
    return CorrectionReport(model=model, method=method, shrinkage=shrink, fdr=fdr,
                            pub_rate=rate, per_finding=per, mc=mc)
