"""Analytics for a meta-study panel of monthly long-short returns.

The panel is loaded from two CSVs: a long-format returns file (one row per
predictor-month, in percent per month) and a metadata file giving each
predictor's sample window, publication date, and optionally the originally
reported t-stat. Units follow the file convention throughout: returns are
percent per month, and "100 bps" means 0.1 in file units.

All randomized operations resample calendar months (clusters), never
individual cells, so cross-predictor correlation within a month survives
resampling.
"""

import math
import re
import warnings
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from .errors import DataError, DomainError, InsufficientDataError
from .numerics import RngStream, norm_sf

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")

RETURN_COLUMNS = ("date", "predictor", "ret_pct")
META_COLUMNS = ("predictor", "sample_start", "sample_end", "pub_date")


def _parse_month(value, context: str) -> pd.Period:
    m = _MONTH_RE.match(str(value).strip())
    if not m:
        raise DataError(f"{context}: expected YYYY-MM, got {value!r}")
    year, month = int(m.group(1)), int(m.group(2))
    if not (1 <= month <= 12):
        raise DataError(f"{context}: month out of range in {value!r}")
    return pd.Period(year=year, month=month, freq="M")


@dataclass(frozen=True)
class ReturnPanel:
    """Monthly returns (month x predictor, percent per month) plus metadata.

    ``returns`` has a monthly PeriodIndex and one column per predictor; NaN
    marks unobserved months. ``meta`` is indexed by predictor with Period
    columns sample_start/sample_end/pub_date (pub_date may be NaT) and a
    float original_tstat (NaN when not reported).
    """

    returns: pd.DataFrame
    meta: pd.DataFrame
    dropped: tuple = ()
    flipped: tuple = ()
    excluded_zero_mean: tuple = ()

    @property
    def predictors(self) -> list[str]:
        return list(self.returns.columns)

    @property
    def n_predictors(self) -> int:
        return self.returns.shape[1]

    def insample_mask(self) -> pd.DataFrame:
        """Observed cells inside each predictor's sample window."""
        return self._range_mask(self.meta["sample_start"], self.meta["sample_end"])

    def _range_mask(self, start: pd.Series, end: pd.Series) -> pd.DataFrame:
        ords = self.returns.index.asi8[:, None]
        lo = np.array([p.ordinal if p is not pd.NaT else np.iinfo(np.int64).max
                       for p in start], dtype=np.int64)[None, :]
        hi = np.array([p.ordinal if p is not pd.NaT else np.iinfo(np.int64).min
                       for p in end], dtype=np.int64)[None, :]
        inside = (ords >= lo) & (ords <= hi)
        return pd.DataFrame(inside, index=self.returns.index,
                            columns=self.returns.columns) & self.returns.notna()


def _read_raw(path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, comment="#", skip_blank_lines=True)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except pd.errors.EmptyDataError:
        raise DataError(f"{path} is empty") from None


def load_panel(returns_path, meta_path) -> ReturnPanel:
    """Load and validate the two panel CSVs.

    Schema violations report the offending file line. Predictors present in
    the returns file but absent from the metadata are excluded with a
    warning and recorded on the panel.
    """
    rets = _read_raw(returns_path)
    missing = set(RETURN_COLUMNS) - set(rets.columns)
    if missing:
        raise DataError(f"{returns_path}: missing column(s) {sorted(missing)}")
    months, values = [], []
    for i, row in enumerate(rets.itertuples(index=False), start=2):
        months.append(_parse_month(getattr(row, "date"), f"{returns_path} line {i}"))
        raw = getattr(row, "ret_pct")
        try:
            v = float(raw)
        except (TypeError, ValueError):
            raise DataError(f"{returns_path} line {i}: ret_pct is not a number: {raw!r}") from None
        if not math.isfinite(v):
            raise DataError(f"{returns_path} line {i}: ret_pct must be finite, got {raw!r}")
        values.append(v)
    rets = pd.DataFrame({"month": months,
                         "predictor": rets["predictor"].astype(str),
                         "ret": values})
    dup = rets.duplicated(subset=["month", "predictor"])
    if dup.any():
        i = int(np.argmax(dup.values))
        raise DataError(
            f"{returns_path} line {i + 2}: duplicate observation for predictor "
            f"{rets['predictor'].iloc[i]!r} in {rets['month'].iloc[i]}")

    meta_raw = _read_raw(meta_path)
    missing = set(META_COLUMNS) - set(meta_raw.columns)
    if missing:
        raise DataError(f"{meta_path}: missing column(s) {sorted(missing)}")
    meta_rows = {}
    for i, row in enumerate(meta_raw.itertuples(index=False), start=2):
        pid = str(getattr(row, "predictor"))
        if pid in meta_rows:
            raise DataError(f"{meta_path} line {i}: duplicate metadata for predictor {pid!r}")
        start = _parse_month(getattr(row, "sample_start"), f"{meta_path} line {i}")
        end = _parse_month(getattr(row, "sample_end"), f"{meta_path} line {i}")
        pub_raw = getattr(row, "pub_date")
        pub = (pd.NaT if pub_raw is None or str(pub_raw).strip() in ("", "nan")
               else _parse_month(pub_raw, f"{meta_path} line {i}"))
        if start > end:
            raise DataError(f"{meta_path} line {i}: sample_start {start} is after sample_end {end}")
        if pub is not pd.NaT and end > pub:
            raise DataError(f"{meta_path} line {i}: sample_end {end} is after pub_date {pub}")
        tstat_raw = getattr(row, "original_tstat", None)
        if tstat_raw is None or str(tstat_raw).strip() in ("", "nan"):
            tstat = math.nan
        else:
            try:
                tstat = float(tstat_raw)
            except ValueError:
                raise DataError(
                    f"{meta_path} line {i}: original_tstat is not a number: {tstat_raw!r}") from None
        meta_rows[pid] = {"sample_start": start, "sample_end": end,
                          "pub_date": pub, "original_tstat": tstat}

    seen = sorted(set(rets["predictor"]))
    dropped = tuple(p for p in seen if p not in meta_rows)
    if dropped:
        warnings.warn(
            f"excluding {len(dropped)} predictor(s) with no metadata: {list(dropped)}",
            stacklevel=2)
        rets = rets[~rets["predictor"].isin(dropped)]
        if rets.empty:
            raise DataError("no predictors remain after excluding rows without metadata")
    wide = rets.pivot(index="month", columns="predictor", values="ret").sort_index()
    wide = wide[sorted(wide.columns)]
    meta = pd.DataFrame.from_dict(meta_rows, orient="index").loc[list(wide.columns)]
    meta.index.name = "predictor"
    return ReturnPanel(returns=wide, meta=meta, dropped=dropped)


def insample_stats(panel: ReturnPanel, min_months: int = 12) -> pd.DataFrame:
    """Per-predictor in-sample mean, sd, and t-stat.

    Predictors with fewer than ``min_months`` in-sample observations are
    flagged "insufficient_months" with NaN statistics; zero-variance series
    are flagged "degenerate" (the mean is real, the t-stat is not).
    """
    mask = panel.insample_mask()
    rows = []
    for pid in panel.predictors:
        vals = panel.returns[pid][mask[pid]].to_numpy(dtype=float)
        n = vals.size
        if n < min_months:
            rows.append({"predictor": pid, "n_months": n, "mean_ret": math.nan,
                         "sd_ret": math.nan, "tstat": math.nan,
                         "flag": "insufficient_months"})
            continue
        mean = float(vals.mean())
        sd = float(vals.std(ddof=1))
        if sd == 0.0:
            rows.append({"predictor": pid, "n_months": n, "mean_ret": mean,
                         "sd_ret": 0.0, "tstat": math.nan, "flag": "degenerate"})
            continue
        tstat = mean / (sd / math.sqrt(n))
        rows.append({"predictor": pid, "n_months": n, "mean_ret": mean,
                     "sd_ret": sd, "tstat": tstat, "flag": ""})
    return pd.DataFrame(rows)


def sign_normalize(panel: ReturnPanel) -> ReturnPanel:
    """Flip predictors whose in-sample mean is negative. Idempotent."""
    mask = panel.insample_mask()
    means = panel.returns.where(mask).mean()
    flip = [pid for pid in panel.predictors if means.get(pid, math.nan) < 0.0]
    out = panel.returns.copy()
    out[flip] = -out[flip]
    return replace(panel, returns=out, flipped=tuple(flip))


def scale_to_insample_mean(panel: ReturnPanel, target: float = 0.1) -> ReturnPanel:
    """Rescale each predictor so its in-sample mean equals ``target``
    (default 0.1 file units, i.e. 100 bps per month).

    Predictors with a zero or undefined in-sample mean cannot be scaled and
    are excluded, recorded in ``excluded_zero_mean``.
    """
    if not (target > 0.0) or not math.isfinite(target):
        raise DomainError(f"target must be positive and finite, got {target!r}")
    mask = panel.insample_mask()
    means = panel.returns.where(mask).mean()
    excluded = [pid for pid in panel.predictors
                if not (means.get(pid, math.nan) != 0.0 and math.isfinite(means.get(pid, math.nan)))]
    kept = [pid for pid in panel.predictors if pid not in excluded]
    if not kept:
        raise DataError("no predictors have a usable in-sample mean to scale to")
    out = panel.returns[kept] * (target / means[kept])
    return replace(panel, returns=out, meta=panel.meta.loc[kept],
                   excluded_zero_mean=tuple(excluded))


def pairwise_correlations(panel: ReturnPanel, min_overlap: int = 36) -> pd.DataFrame:
    """Pearson correlation of every predictor pair over overlapping months.

    Pairs with fewer than ``min_overlap`` common months (or an undefined
    correlation) are omitted; the omission count is in frame.attrs["n_skipped"].
    """
    if panel.n_predictors < 2:
        raise DataError("need at least two predictors for pairwise correlations")
    if min_overlap < 2:
        raise DomainError(f"min_overlap must be at least 2, got {min_overlap!r}")
    corr = panel.returns.corr(min_periods=min_overlap)
    present = panel.returns.notna().to_numpy(dtype=np.int64)
    overlap = present.T @ present
    cols = panel.predictors
    rows, skipped = [], 0
    for i in range(len(cols)):
        for j in range(i + 1, len(cols)):
            n_ov = int(overlap[i, j])
            c = corr.iat[i, j]
            if n_ov < min_overlap or not math.isfinite(c):
                skipped += 1
                continue
            rows.append({"id_a": cols[i], "id_b": cols[j],
                         "corr": float(c), "n_overlap": n_ov})
    frame = pd.DataFrame(rows, columns=["id_a", "id_b", "corr", "n_overlap"])
    frame.attrs["n_skipped"] = skipped
    return frame


def pca_variance_curve(panel: ReturnPanel, min_overlap: int = 2) -> pd.DataFrame:
    """Cumulative share of panel variance explained by the top components.

    Eigen-decomposes the pairwise-complete correlation matrix; sampling noise
    can push small eigenvalues below zero, and those are clipped to zero
    before cumulating, so the curve is nondecreasing and ends at exactly 1.
    """
    if panel.n_predictors < 2:
        raise DataError("need at least two predictors for a variance curve")
    corr = panel.returns.corr(min_periods=max(2, min_overlap))
    n_missing = int(corr.isna().to_numpy().sum())
    if n_missing:
        raise DataError(
            f"correlation matrix has {n_missing} undefined cell(s); "
            "some predictor pairs never overlap")
    eigs = np.linalg.eigvalsh(corr.to_numpy())
    eigs = np.clip(eigs, 0.0, None)[::-1]
    total = float(eigs.sum())
    if total <= 0.0:
        raise DataError("correlation matrix has no positive eigenvalues")
    cum = np.cumsum(eigs)
    frac = cum / cum[-1]
    return pd.DataFrame({"component": np.arange(1, eigs.size + 1), "cum_var_frac": frac})


def month_mask(panel: ReturnPanel, window: str) -> pd.DataFrame:
    """Boolean cell selector for a window expression.

    Forms: "all", "insample", "postpub", "postsample:K" (the K months
    strictly after each sample end), "calendar:YYYY-MM:YYYY-MM".
    """
    present = panel.returns.notna()
    if window == "all":
        return present
    if window == "insample":
        return panel.insample_mask()
    if window == "postpub":
        far = pd.Period("2262-04", freq="M")
        start = panel.meta["pub_date"].map(lambda p: p + 1 if p is not pd.NaT else pd.NaT)
        end = pd.Series([far] * panel.n_predictors, index=panel.meta.index)
        return panel._range_mask(start, end)
    if window.startswith("postsample:"):
        try:
            k = int(window.split(":", 1)[1])
        except ValueError:
            raise DomainError(f"bad postsample window {window!r}") from None
        if k < 1:
            raise DomainError(f"postsample window length must be positive, got {k}")
        start = panel.meta["sample_end"].map(lambda p: p + 1)
        end = panel.meta["sample_end"].map(lambda p: p + k)
        return panel._range_mask(start, end)
    if window.startswith("calendar:"):
        parts = window.split(":")
        if len(parts) != 3:
            raise DomainError(f"calendar window must be calendar:YYYY-MM:YYYY-MM, got {window!r}")
        lo = _parse_month(parts[1], f"window {window!r}")
        hi = _parse_month(parts[2], f"window {window!r}")
        if lo > hi:
            raise DomainError(f"calendar window is reversed: {window!r}")
        start = pd.Series([lo] * panel.n_predictors, index=panel.meta.index)
        end = pd.Series([hi] * panel.n_predictors, index=panel.meta.index)
        return panel._range_mask(start, end)
    raise DomainError(
        f"unknown window {window!r}; expected all, insample, postpub, "
        "postsample:K, or calendar:YYYY-MM:YYYY-MM")


@dataclass
class BootstrapResult:
    """Cluster-bootstrap distribution of a pooled mean."""

    point_estimate: float
    se: float
    quantiles: dict
    draws: np.ndarray
    n_boot: int
    seed: int


def cluster_bootstrap_mean(panel: ReturnPanel, window: str = "all",
                           n_boot: int = 1000, rng: RngStream | None = None,
                           demean: bool = False) -> BootstrapResult:
    """Pooled mean return over a window, bootstrapped by calendar month.

    Months (not cells) are resampled with replacement, so contemporaneous
    correlation across predictors is preserved in every draw. ``demean``
    subtracts each predictor's in-sample mean first, which turns the draws
    into a null distribution around zero.
    """
    if rng is None:
        raise DomainError("cluster_bootstrap_mean requires an RngStream")
    if n_boot < 100:
        raise DomainError(f"n_boot must be at least 100, got {n_boot!r}")
    mask = month_mask(panel, window).to_numpy()
    vals = panel.returns.to_numpy(dtype=float)
    if demean:
        ins = panel.insample_mask()
        means = panel.returns.where(ins).mean().to_numpy(dtype=float)[None, :]
        vals = vals - means
    use = mask & np.isfinite(vals)
    if not use.any():
        raise DataError(f"window {window!r} selects no observations")
    cell = np.where(use, vals, 0.0)
    month_sum = cell.sum(axis=1)
    month_cnt = use.sum(axis=1)
    pool = np.flatnonzero(month_cnt > 0)
    if pool.size < 12:
        raise InsufficientDataError(
            f"window {window!r} covers only {pool.size} month(s); need at least 12")
    sums, cnts = month_sum[pool], month_cnt[pool]
    point = float(sums.sum() / cnts.sum())
    draws = np.empty(n_boot, dtype=float)
    for b in range(n_boot):
        gen = rng.substream(b)
        pick = gen.integers(0, pool.size, size=pool.size)
        draws[b] = sums[pick].sum() / cnts[pick].sum()
    qs = np.percentile(draws, [2.5, 50.0, 97.5])
    return BootstrapResult(point_estimate=point, se=float(np.std(draws, ddof=1)),
                           quantiles={2.5: float(qs[0]), 50.0: float(qs[1]),
                                      97.5: float(qs[2])},
                           draws=draws, n_boot=n_boot, seed=rng.master_seed)


def exceedance_table(source, cutoffs=(2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0),
                     mode: str = "both", null_mode: str = "none",
                     n_boot: int = 200, rng: RngStream | None = None,
                     min_months: int = 12) -> pd.DataFrame:
    """How many in-sample |t|-stats meet each cutoff, against null benchmarks.

    ``source`` is a ReturnPanel or any frame/array of t-stats. The normal
    null column is the two-sided exceedance 100 * 2 * sf(k). With
    null_mode="bootstrap" (panel input only), months are resampled with
    replacement jointly across predictors on de-meaned in-sample returns,
    each draw re-computes every predictor's t-stat, and the column reports
    the mean exceedance percent across draws, preserving cross-predictor
    correlation in the null.
    """
    cuts = [float(c) for c in cutoffs]
    if not cuts or any(not math.isfinite(c) or c < 0.0 for c in cuts):
        raise DomainError(f"cutoffs must be nonnegative and finite, got {cutoffs!r}")
    if mode not in ("counts", "percent", "both"):
        raise DomainError(f"mode must be counts, percent, or both, got {mode!r}")
    if null_mode not in ("none", "bootstrap"):
        raise DomainError(f"null_mode must be none or bootstrap, got {null_mode!r}")
    panel = source if isinstance(source, ReturnPanel) else None
    if panel is not None:
        stats = insample_stats(panel, min_months=min_months)
        tvals = stats.loc[stats["flag"] == "", "tstat"].to_numpy(dtype=float)
    elif isinstance(source, pd.DataFrame):
        if "tstat" not in source.columns:
            raise DataError("t-stat frame needs a 'tstat' column")
        tvals = source["tstat"].to_numpy(dtype=float)
        tvals = tvals[np.isfinite(tvals)]
    else:
        tvals = np.asarray(source, dtype=float)
        tvals = tvals[np.isfinite(tvals)]
    abs_t = np.abs(tvals)
    n = abs_t.size
    out = pd.DataFrame({"cutoff": cuts})
    out["count"] = [int((abs_t >= c).sum()) for c in cuts]
    out["pct"] = [100.0 * cnt / n if n else math.nan for cnt in out["count"]]
    out["null_normal_pct"] = [100.0 * 2.0 * float(norm_sf(c)) for c in cuts]
    if null_mode == "bootstrap":
        if panel is None:
            raise DomainError("bootstrap null mode requires a ReturnPanel source")
        out["null_boot_pct"] = _bootstrap_null_pct(panel, cuts, n_boot, rng, min_months)
    out.attrs["n_tstats"] = n
    if mode == "counts":
        return out[["cutoff", "count"]]
    if mode == "percent":
        keep = ["cutoff", "pct", "null_normal_pct"]
        if null_mode == "bootstrap":
            keep.append("null_boot_pct")
        return out[keep]
    return out


def _bootstrap_null_pct(panel, cuts, n_boot, rng, min_months):
    if rng is None:
        raise DomainError("bootstrap null mode requires an RngStream")
    if n_boot < 1:
        raise DomainError(f"n_boot must be positive, got {n_boot!r}")
    mask = panel.insample_mask()
    centered = panel.returns.where(mask)
    centered = centered - centered.mean()
    vals = centered.to_numpy(dtype=float)
    pool = np.flatnonzero(np.isfinite(vals).any(axis=1))
    if pool.size < 12:
        raise InsufficientDataError("need at least 12 in-sample months for the bootstrap null")
    vals = vals[pool]
    pct = np.zeros(len(cuts), dtype=float)
    for b in range(n_boot):
        gen = rng.substream(b)
        draw = vals[gen.integers(0, pool.size, size=pool.size)]
        finite = np.isfinite(draw)
        counts = finite.sum(axis=0)
        sums = np.where(finite, draw, 0.0).sum(axis=0)
        means = np.divide(sums, counts, out=np.full(counts.shape, np.nan), where=counts > 0)
        sq = np.where(finite, np.square(draw - means[None, :]), 0.0).sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            sd = np.sqrt(sq / np.maximum(counts - 1, 1))
            tb = means / (sd / np.sqrt(counts))
        ok = (counts >= min_months) & np.isfinite(tb)
        if not ok.any():
            continue
        abs_tb = np.abs(tb[ok])
        pct += np.array([100.0 * float((abs_tb >= c).mean()) for c in cuts])
    return pct / n_boot


@dataclass
class EventTimeCurve:
    """Average return by months since the end of the original sample."""

    curve: pd.DataFrame
    post_sample_36_mean: float
    post_pub_mean: float


def event_time_curve(panel: ReturnPanel, trailing: int = 36) -> EventTimeCurve:
    """Cross-predictor mean return in event time with a trailing mean.

    Event month 0 is the last in-sample month, 1 the first month after the
    sample ends. Each event month averages across the predictors observed
    there; the trailing column averages the most recent ``trailing`` event
    months with data and is NaN until that many exist. The scalar summaries
    are pooled cell means: event months 1..36, and all months strictly after
    publication (NaN when no predictor has a pub_date).
    """
    if trailing < 1:
        raise DomainError(f"trailing must be positive, got {trailing!r}")
    vals = panel.returns.to_numpy(dtype=float)
    finite = np.isfinite(vals)
    if not finite.any():
        raise DataError("panel has no observations")
    ords = panel.returns.index.asi8[:, None]
    end = np.array([p.ordinal for p in panel.meta["sample_end"]], dtype=np.int64)[None, :]
    event = ords - end
    flat_e = event[finite]
    flat_v = vals[finite]
    by_e = pd.DataFrame({"event_month": flat_e, "ret": flat_v})
    grouped = by_e.groupby("event_month")["ret"].agg(["mean", "size"]).reset_index()
    grouped.columns = ["event_month", "mean_ret", "n_predictors"]
    grouped = grouped.sort_values("event_month").reset_index(drop=True)
    grouped["trailing_mean"] = grouped["mean_ret"].rolling(trailing, min_periods=trailing).mean()
    post36 = flat_v[(flat_e >= 1) & (flat_e <= 36)]
    post36_mean = float(post36.mean()) if post36.size else math.nan
    has_pub = panel.meta["pub_date"].map(lambda p: p is not pd.NaT)
    if has_pub.any():
        pub_mask = month_mask(panel, "postpub").to_numpy()
        pub_vals = vals[pub_mask & finite]
        post_pub = float(pub_vals.mean()) if pub_vals.size else math.nan
    else:
        post_pub = math.nan
    return EventTimeCurve(curve=grouped, post_sample_36_mean=post36_mean,
                          post_pub_mean=post_pub)


def mean_autocorrelation(panel: ReturnPanel, lags=(1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12),
                         min_months: int = 48) -> pd.DataFrame:
    """Average autocorrelation of predictor returns at each lag.

    Lags are in calendar months (series are aligned on the month grid, so
    gaps do not shift the lag). Predictors with fewer than ``min_months``
    observations are excluded.
    """
    lag_list = [int(k) for k in lags]
    if not lag_list or any(k < 1 for k in lag_list):
        raise DomainError(f"lags must be positive integers, got {lags!r}")
    full_idx = pd.period_range(panel.returns.index.min(), panel.returns.index.max(), freq="M")
    rows = []
    for k in lag_list:
        acs = []
        for pid in panel.predictors:
            s = panel.returns[pid]
            if int(s.notna().sum()) < min_months:
                continue
            s_full = s.reindex(full_idx)
            ac = s_full.corr(s_full.shift(k))
            if math.isfinite(ac):
                acs.append(float(ac))
        rows.append({"lag": k,
                     "mean_autocorr": float(np.mean(acs)) if acs else math.nan,
                     "n_predictors": len(acs)})
    return pd.DataFrame(rows)


@dataclass
class TStatComparison:
    """Replicated in-sample t-stats against originally reported ones."""

    pairs: pd.DataFrame
    mean_diff: float
    slope_through_origin: float
    n_above: int
    n_below: int
    n_matched: int
    n_unmatched: int


def compare_tstats(replicated: pd.DataFrame, original: pd.DataFrame) -> TStatComparison:
    """Pair t-stat tables by predictor and summarize their agreement.

    Both frames need columns predictor and tstat. The slope is the
    through-origin regression of replicated on original, and mean_diff is
    mean(replicated - original); counts tally which side of the equality
    line each pair falls on.
    """
    for name, frame in (("replicated", replicated), ("original", original)):
        if not {"predictor", "tstat"}.issubset(frame.columns):
            raise DataError(f"{name} frame needs 'predictor' and 'tstat' columns")
    left = replicated[["predictor", "tstat"]].rename(columns={"tstat": "replicated"})
    right = original[["predictor", "tstat"]].rename(columns={"tstat": "original"})
    pairs = left.merge(right, on="predictor", how="inner")
    n_unmatched = (len(replicated) - len(pairs)) + (len(original) - len(pairs))
    pairs = pairs.dropna(subset=["replicated", "original"]).reset_index(drop=True)
    if pairs.empty:
        raise DataError("no predictors in common between the two t-stat tables")
    r = pairs["replicated"].to_numpy(dtype=float)
    o = pairs["original"].to_numpy(dtype=float)
    denom = float(np.square(o).sum())
    if denom == 0.0:
        raise DomainError("all original t-stats are zero; slope undefined")
    return TStatComparison(
        pairs=pairs,
        mean_diff=float((r - o).mean()),
        slope_through_origin=float((r * o).sum() / denom),
        n_above=int((r > o).sum()),
        n_below=int((r < o).sum()),
        n_matched=len(pairs),
        n_unmatched=int(n_unmatched),
    )
