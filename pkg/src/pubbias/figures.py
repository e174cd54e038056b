"""Matplotlib renderings of the toolkit's tabular outputs.

Every function takes already-computed data, writes one PNG, and returns the
path. The Agg backend is forced so rendering works headless.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .numerics import norm_pdf

_DPI = 150


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return str(path)


def save_fit_diagnostics(diag, path):
    """Observed |t| histogram fractions against model bin masses.

    ``diag`` is the frame from fit_diagnostics; one panel per sigma value.
    """
    sigmas = sorted(diag["sigma"].unique())
    fig, axes = plt.subplots(1, len(sigmas), figsize=(4.0 * len(sigmas), 3.2),
                             sharey=True, squeeze=False)
    for ax, sigma in zip(axes[0], sigmas):
        sub = diag[diag["sigma"] == sigma]
        centers = np.where(np.isfinite(sub["bin_hi"]),
                           0.5 * (sub["bin_lo"] + sub["bin_hi"]),
                           sub["bin_lo"] + 0.25)
        width = 0.8 * np.min(np.diff(sub["bin_lo"])) if len(sub) > 1 else 0.4
        ax.bar(centers, sub["empirical_frac"], width=width, alpha=0.5, label="observed")
        ax.plot(centers, sub["model_mass"], "o-", color="C3", label="model")
        ax.set_title(f"sigma = {sigma:g}")
        ax.set_xlabel("|t-stat|")
    axes[0][0].set_ylabel("fraction")
    axes[0][0].legend()
    return _finish(fig, path)


def save_scatter(frame, path, hurdles=None):
    """True effect against published |t|, with optional hurdle lines."""
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.plot(frame["abs_tstat"], frame["true_effect"], ".", ms=2, alpha=0.4)
    for cut in (hurdles or {}).values() if isinstance(hurdles, dict) else (hurdles or []):
        ax.axvline(float(cut), color="C3", lw=1, ls="--")
    ax.set_xlabel("published |t-stat|")
    ax.set_ylabel("true effect")
    return _finish(fig, path)


def save_published_hist(tstats, path, model_density=None, cutoff=None):
    """Histogram of published t-stats, optionally with a model curve.

    ``model_density`` is a callable giving the model's published-t density.
    """
    tstats = np.asarray(tstats, dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.hist(tstats, bins=40, density=True, alpha=0.6)
    if model_density is not None:
        grid = np.linspace(tstats.min(), tstats.max(), 400)
        ax.plot(grid, [model_density(t) for t in grid], color="C3")
    if cutoff is not None:
        ax.axvline(float(cutoff), color="k", lw=1, ls=":")
    ax.set_xlabel("t-stat")
    ax.set_ylabel("density")
    return _finish(fig, path)


def save_correlation_hist(corr_frame, path):
    """Histogram of pairwise correlations."""
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.hist(corr_frame["corr"], bins=40, range=(-1.0, 1.0))
    ax.axvline(0.0, color="k", lw=1)
    ax.set_xlabel("pairwise correlation")
    ax.set_ylabel("pairs")
    return _finish(fig, path)


def save_pca_curve(curve, path):
    """Cumulative variance fraction by component count."""
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.plot(curve["component"], curve["cum_var_frac"], "-")
    ax.set_ylim(0.0, 1.02)
    ax.set_xlabel("components")
    ax.set_ylabel("cumulative variance fraction")
    return _finish(fig, path)


def save_bootstrap_hist(result, path):
    """Bootstrap draw distribution with the point estimate marked."""
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.hist(result.draws, bins=40, alpha=0.7)
    ax.axvline(result.point_estimate, color="C3", lw=1.5)
    for q in (2.5, 97.5):
        ax.axvline(result.quantiles[q], color="k", lw=1, ls="--")
    ax.set_xlabel("pooled mean return (pct per month)")
    ax.set_ylabel("draws")
    return _finish(fig, path)


def save_event_curve(event, path):
    """Event-time mean return and its trailing average."""
    curve = event.curve
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(curve["event_month"], curve["mean_ret"], lw=0.6, alpha=0.5, label="monthly mean")
    ax.plot(curve["event_month"], curve["trailing_mean"], lw=1.8, color="C3",
            label="trailing mean")
    ax.axvline(0.0, color="k", lw=1, ls=":")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel("months since sample end")
    ax.set_ylabel("mean return (pct per month)")
    ax.legend()
    return _finish(fig, path)


def save_autocorr_bars(frame, path):
    """Mean autocorrelation by lag."""
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.bar(frame["lag"], frame["mean_autocorr"], width=0.7)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel("lag (months)")
    ax.set_ylabel("mean autocorrelation")
    return _finish(fig, path)


def save_exceedance_bars(table, path):
    """Observed exceedance percent next to the null benchmarks (log scale)."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    x = np.arange(len(table))
    cols = [c for c in ("pct", "null_normal_pct", "null_boot_pct") if c in table.columns]
    width = 0.8 / len(cols)
    floor = 1e-12
    for i, col in enumerate(cols):
        ax.bar(x + (i - (len(cols) - 1) / 2) * width,
               np.maximum(table[col].to_numpy(dtype=float), floor),
               width=width, label=col)
    ax.set_yscale("log")
    ax.set_xticks(x)
    ax.set_xticklabels([f"{c:g}" for c in table["cutoff"]])
    ax.set_xlabel("|t| cutoff")
    ax.set_ylabel("percent exceeding")
    ax.legend()
    return _finish(fig, path)


def save_compare_scatter(comparison, path):
    """Replicated against original t-stats with the 45-degree line."""
    pairs = comparison.pairs
    fig, ax = plt.subplots(figsize=(4.6, 4.6))
    ax.plot(pairs["original"], pairs["replicated"], ".", ms=4, alpha=0.6)
    lim_lo = min(0.0, pairs["original"].min(), pairs["replicated"].min()) - 0.5
    lim_hi = max(pairs["original"].max(), pairs["replicated"].max()) + 0.5
    ax.plot([lim_lo, lim_hi], [lim_lo, lim_hi], color="k", lw=1, ls="--")
    ax.set_xlim(lim_lo, lim_hi)
    ax.set_ylim(lim_lo, lim_hi)
    ax.set_xlabel("original t-stat")
    ax.set_ylabel("replicated t-stat")
    return _finish(fig, path)


def save_insample_tstat_hist(stats, path, cutoff=None):
    """Histogram of replicated in-sample t-stats with a normal overlay."""
    tvals = stats.loc[stats["flag"] == "", "tstat"].to_numpy(dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.hist(tvals, bins=40, density=True, alpha=0.6)
    if tvals.size:
        grid = np.linspace(tvals.min() - 1, tvals.max() + 1, 400)
        ax.plot(grid, norm_pdf(grid), color="k", lw=1, label="standard normal")
        ax.legend()
    if cutoff is not None:
        ax.axvline(float(cutoff), color="C3", lw=1, ls="--")
    ax.set_xlabel("in-sample t-stat")
    ax.set_ylabel("density")
    return _finish(fig, path)


def save_decision_plot(decisions, path):
    """Sorted p-values with rejection status per procedure."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ordered = sorted(decisions, key=lambda d: (d.pvalue, d.id))
    ranks = np.arange(1, len(ordered) + 1)
    pvals = np.array([d.pvalue for d in ordered])
    rejected = np.array([d.rejected for d in ordered])
    ax.semilogy(ranks[rejected], pvals[rejected], "o", color="C3", label="rejected")
    ax.semilogy(ranks[~rejected], pvals[~rejected], "o", mfc="none", color="C0",
                label="not rejected")
    if ordered:
        ax.set_title(f"{ordered[0].method}, level {ordered[0].level:g}")
    ax.set_xlabel("rank")
    ax.set_ylabel("p-value")
    ax.legend()
    return _finish(fig, path)
