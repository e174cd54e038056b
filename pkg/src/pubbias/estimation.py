"""Dispersion estimation from a truncated collection of published t-stats.

The observable sample is the published one: statistics that cleared the
threshold. Under a zero-mean normal prior the pre-publication t is
Normal(0, s^2) with s^2 = 1 + sigma_theta^2, so the published sample is a
truncated normal and sigma_theta is identified from the shape above the
cutoff alone. Two estimators are provided: a truncated quasi-likelihood and
a one-moment fit to the truncated mean.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import (
    BootstrapError,
    DataError,
    DomainError,
    InsufficientDataError,
    NoSolutionError,
)
from .numerics import RngStream, maximize_scalar, norm_sf, truncated_normal_mean
from .priors import SIDE_ABSOLUTE, SIDE_SIGNED, check_side

MIN_SAMPLES = 5
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class TStatSample:
    """One published finding: an id, its t-stat, and optional metadata."""

    id: str
    tstat: float
    se_monthly_bps: float | None = None
    sample_start: str | None = None
    sample_end: str | None = None
    pub_date: str | None = None

    def __post_init__(self):
        if not math.isfinite(self.tstat):
            raise DataError(f"tstat for {self.id!r} must be finite, got {self.tstat!r}")


@dataclass(frozen=True)
class TruncatedSampleSet:
    """Published sample plus the threshold that produced it.

    side="signed" keeps t > cutoff; side="absolute" keeps |t| > cutoff and
    works with magnitudes. Entries at or below the cutoff are dropped (or
    rejected in strict mode) by the estimators.
    """

    samples: tuple
    cutoff: float = 2.0
    side: str = SIDE_ABSOLUTE

    def __init__(self, samples, cutoff: float = 2.0, side: str = SIDE_ABSOLUTE):
        object.__setattr__(self, "samples", tuple(samples))
        object.__setattr__(self, "cutoff", float(cutoff))
        object.__setattr__(self, "side", check_side(side))
        if not math.isfinite(self.cutoff):
            raise DomainError(f"cutoff must be finite, got {cutoff!r}")

    def magnitudes(self, strict: bool = False) -> tuple[np.ndarray, int]:
        """Exceeding statistics (signed values or magnitudes) and the count
        of entries that fell below the cutoff."""
        raw = np.array([s.tstat for s in self.samples], dtype=float)
        vals = raw if self.side == SIDE_SIGNED else np.abs(raw)
        keep = vals >= self.cutoff
        n_dropped = int((~keep).sum())
        if strict and n_dropped:
            raise DataError(
                f"{n_dropped} statistic(s) below the cutoff {self.cutoff} in strict mode")
        return vals[keep], n_dropped


@dataclass
class FitResult:
    """Outcome of a dispersion fit."""

    sigma_theta_hat: float
    loglik: float
    n_used: int
    n_dropped: int
    method: str
    diagnostics: pd.DataFrame
    flags: list[str] = field(default_factory=list)
    se_boot: float | None = None


def truncated_loglik(sigma_theta: float, sum_sq: float, n: int, cutoff: float) -> float:
    """Truncated-normal log-likelihood at dispersion sigma_theta.

    Depends on the data only through (n, sum of squared exceeding values);
    the signed and folded absolute cases share this exact form because the
    factor of two in the folded density cancels against its normalizer.
    """
    s_sq = 1.0 + sigma_theta * sigma_theta
    s = math.sqrt(s_sq)
    tail = float(norm_sf(cutoff / s))
    if tail <= 0.0:
        return -math.inf
    return -0.5 * sum_sq / s_sq - n * math.log(s) - n * math.log(tail) - 0.5 * n * _LOG_2PI


def _prepare(data: TruncatedSampleSet, strict: bool) -> tuple[np.ndarray, int]:
    vals, n_dropped = data.magnitudes(strict=strict)
    if vals.size < MIN_SAMPLES:
        raise InsufficientDataError(
            f"need at least {MIN_SAMPLES} statistics above the cutoff, have {vals.size}")
    return vals, n_dropped


def qmle_sigma_theta(data: TruncatedSampleSet, bounds: tuple[float, float] = (0.0, 20.0),
                     tol: float = 1e-6, strict: bool = False) -> FitResult:
    """Maximum quasi-likelihood fit of sigma_theta on the truncated sample."""
    lo, hi = bounds
    if not (0.0 <= lo < hi):
        raise DomainError(f"bounds must satisfy 0 <= lo < hi, got {bounds!r}")
    vals, n_dropped = _prepare(data, strict)
    n, sum_sq = vals.size, float(np.square(vals).sum())
    sigma_hat, best = maximize_scalar(
        lambda s: truncated_loglik(s, sum_sq, n, data.cutoff), lo, hi, tol=tol)
    flags = _boundary_flags(sigma_hat, lo, hi, tol)
    diag = fit_diagnostics(data, [sigma_hat], strict=strict)
    return FitResult(sigma_theta_hat=sigma_hat, loglik=best, n_used=n,
                     n_dropped=n_dropped, method="qmle", diagnostics=diag, flags=flags)


def invert_truncated_mean(mean: float, cutoff: float, s_tol: float = 1e-12) -> tuple[float, list[str]]:
    """Total sd s solving truncated_normal_mean(cutoff, s) = mean, by bisection.

    Returns (sigma_theta, flags): sigma_theta = sqrt(s^2 - 1), clamped to 0
    with a flag when the observed mean is consistent with s < 1. A mean at or
    below the cutoff is unattainable by any truncated normal and raises
    NoSolutionError.
    """
    if mean <= max(cutoff, 0.0):
        raise NoSolutionError(
            f"truncated mean {mean:.6g} is not attainable above cutoff {cutoff:.6g}")
    s_hi = 2.0
    while truncated_normal_mean(cutoff, s_hi) < mean:
        s_hi *= 2.0
        if s_hi > 1e6:
            raise NoSolutionError(f"no sd below 1e6 reaches truncated mean {mean:.6g}")
    s_lo = mean - cutoff
    while truncated_normal_mean(cutoff, s_lo) > mean:
        s_lo /= 2.0
        if s_lo < 1e-12:
            break
    while s_hi - s_lo > s_tol:
        mid = 0.5 * (s_lo + s_hi)
        if truncated_normal_mean(cutoff, mid) < mean:
            s_lo = mid
        else:
            s_hi = mid
    s = 0.5 * (s_lo + s_hi)
    if s < 1.0:
        return 0.0, ["clamped_zero"]
    return math.sqrt(s * s - 1.0), []


def gmm_sigma_theta(data: TruncatedSampleSet, strict: bool = False) -> FitResult:
    """Method-of-moments fit: match the observed truncated mean."""
    vals, n_dropped = _prepare(data, strict)
    target = float(vals.mean())
    sigma_hat, flags = invert_truncated_mean(target, data.cutoff)
    n, sum_sq = vals.size, float(np.square(vals).sum())
    flags = flags + _boundary_flags(sigma_hat, 0.0, math.inf, 1e-6)
    diag = fit_diagnostics(data, [sigma_hat], strict=strict)
    return FitResult(sigma_theta_hat=sigma_hat,
                     loglik=truncated_loglik(sigma_hat, sum_sq, n, data.cutoff),
                     n_used=n, n_dropped=n_dropped, method="gmm",
                     diagnostics=diag, flags=flags)


def _boundary_flags(sigma_hat: float, lo: float, hi: float, tol: float) -> list[str]:
    eps = max(10.0 * tol, 1e-4)
    flags = []
    if sigma_hat - lo <= eps:
        flags.append("lower_boundary")
    if math.isfinite(hi) and hi - sigma_hat <= eps:
        flags.append("upper_boundary")
    return flags


_ESTIMATORS = {"qmle": qmle_sigma_theta, "gmm": gmm_sigma_theta}


def bootstrap_se(data: TruncatedSampleSet, estimator="qmle", n_boot: int = 200,
                 rng: RngStream | None = None, max_failure_frac: float = 0.10) -> float:
    """Bootstrap standard error of an estimator over resampled findings.

    Findings are resampled with replacement; resample i always consumes child
    stream i of ``rng``, so resamples can run in any order (or concurrently)
    without changing the answer. Raises BootstrapError when more than
    ``max_failure_frac`` of the refits fail.
    """
    if rng is None:
        raise DomainError("bootstrap_se requires an RngStream")
    if n_boot < 100:
        raise DomainError(f"n_boot must be at least 100, got {n_boot!r}")
    if isinstance(estimator, str):
        if estimator not in _ESTIMATORS:
            raise DomainError(f"estimator must be one of {sorted(_ESTIMATORS)}, got {estimator!r}")
        fit = _ESTIMATORS[estimator]
    else:
        fit = estimator
    samples = data.samples
    n = len(samples)
    if n == 0:
        raise InsufficientDataError("cannot bootstrap an empty sample set")
    estimates, n_failed = [], 0
    for i in range(n_boot):
        gen = rng.substream(i)
        idx = gen.integers(0, n, size=n)
        resampled = TruncatedSampleSet([samples[j] for j in idx],
                                       cutoff=data.cutoff, side=data.side)
        try:
            estimates.append(fit(resampled).sigma_theta_hat)
        except (DataError, NoSolutionError, DomainError):
            n_failed += 1
    if n_failed > max_failure_frac * n_boot:
        raise BootstrapError(
            f"{n_failed} of {n_boot} bootstrap refits failed", n_failed, n_boot)
    return float(np.std(estimates, ddof=1))


def fit_diagnostics(data: TruncatedSampleSet, sigma_grid, bin_width: float = 0.5,
                    strict: bool = False) -> pd.DataFrame:
    """Observed-vs-model histogram table over the truncated support.

    Bins of ``bin_width`` run from the cutoff past the largest statistic,
    with a final open-ended bin so model masses sum to one for every sigma.
    """
    if bin_width <= 0.0:
        raise DomainError(f"bin_width must be positive, got {bin_width!r}")
    vals, _ = _prepare(data, strict)
    c = data.cutoff
    n_bins = int(math.ceil((vals.max() + 1.0 - c) / bin_width))
    edges = c + bin_width * np.arange(n_bins + 1)
    rows = []
    for sigma in sigma_grid:
        if sigma < 0.0:
            raise DomainError(f"sigma grid values must be nonnegative, got {sigma!r}")
        s = math.sqrt(1.0 + sigma * sigma)
        tail = float(norm_sf(c / s))
        upper_sf = norm_sf(edges / s)
        for k in range(n_bins + 1):
            bin_lo = edges[k]
            bin_hi = edges[k + 1] if k < n_bins else math.inf
            if k < n_bins:
                model_mass = float(upper_sf[k] - upper_sf[k + 1]) / tail
                emp = float(((vals >= bin_lo) & (vals < bin_hi)).mean())
            else:
                model_mass = float(upper_sf[k]) / tail
                emp = float((vals >= bin_lo).mean())
            rows.append({"sigma": float(sigma), "bin_lo": float(bin_lo),
                         "bin_hi": float(bin_hi), "model_mass": model_mass,
                         "empirical_frac": emp})
    return pd.DataFrame(rows)
