"""Command-line interface.

Five subcommands: ``estimate`` (effect dispersion from published t-stats),
``correct`` (shrinkage, FDR, and per-finding corrected effects), ``hurdles``
(multiple-testing decisions), ``simulate`` (publication-process Monte Carlo),
and ``panel`` (meta-study panel analytics).

Every output CSV starts with '#' comment rows carrying the tool version, a
hash of the effective configuration, and the seed, and never a timestamp, so
rerunning an invocation reproduces the files byte for byte. Option precedence
is command-line flag, then JSON config file, then built-in default; the seed
additionally falls back to the PUBBIAS_SEED environment variable before its
default of 12345.
"""

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np
import pandas as pd

from . import __version__, figures
from .corrections import correction_report
from .errors import DataError, PubBiasError
from .estimation import (
    TruncatedSampleSet,
    TStatSample,
    bootstrap_se,
    fit_diagnostics,
    gmm_sigma_theta,
    qmle_sigma_theta,
)
from .multiple_testing import PROCEDURES, PValueSet, hurdle_for_fdr
from .numerics import RngStream
from .panel import (
    cluster_bootstrap_mean,
    compare_tstats,
    event_time_curve,
    exceedance_table,
    insample_stats,
    load_panel,
    mean_autocorrelation,
    pairwise_correlations,
    pca_variance_curve,
    scale_to_insample_mean,
    sign_normalize,
)
from .priors import (
    AbsoluteThreshold,
    ModelSpec,
    NormalZeroMean,
    SignedThreshold,
    check_side,
    model_from_dict,
    prior_from_dict,
)
from .simulation import SimulationSpec, agreement_report, scatter_export, simulate

DEFAULT_SEED = 12345
UNITS_NOTE = "units: percent per month; 100 bps = 0.1"

PANEL_OPS = ("insample", "corr", "pca", "bootstrap", "event", "autocorr",
             "exceed", "compare")


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise DataError(f"config {path} must hold a JSON object")
    return config


def _pick(flag_value, config, key, default):
    if flag_value is not None:
        return flag_value
    if key in config:
        return config[key]
    return default


def _resolve_seed(args, config):
    seed = _pick(getattr(args, "seed", None), config, "seed", None)
    if seed is None:
        env = os.environ.get("PUBBIAS_SEED")
        if env is not None:
            try:
                return int(env)
            except ValueError:
                raise DataError(f"PUBBIAS_SEED must be an integer, got {env!r}") from None
        return DEFAULT_SEED
    return int(seed)


def _config_hash(effective):
    payload = json.dumps(effective, sort_keys=True, default=str).encode()
    return hashlib.sha256(payload).hexdigest()[:12]


def _write_csv(frame, path, config_hash, seed, units=False, comments=()):
    lines = [f"# pubbias {__version__}", f"# config {config_hash}", f"# seed {seed}"]
    if units:
        lines.append(f"# {UNITS_NOTE}")
    lines.extend(f"# {c}" for c in comments)
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
        frame.to_csv(fh, index=False, lineterminator="\n")
    return path


def _floats(text, flag):
    try:
        return [float(part) for part in str(text).split(",") if part.strip() != ""]
    except ValueError:
        raise DataError(f"{flag} expects a comma-separated list of numbers, got {text!r}") from None


def _ints(text, flag):
    try:
        return [int(part) for part in str(text).split(",") if part.strip() != ""]
    except ValueError:
        raise DataError(f"{flag} expects a comma-separated list of integers, got {text!r}") from None


def _read_table(path, required):
    try:
        frame = pd.read_csv(path, comment="#")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except pd.errors.EmptyDataError:
        raise DataError(f"{path} is empty") from None
    missing = set(required) - set(frame.columns)
    if missing:
        raise DataError(f"{path}: missing column(s) {sorted(missing)}")
    return frame


def _read_tstats(path):
    frame = _read_table(path, ("id", "tstat"))
    tvals = pd.to_numeric(frame["tstat"], errors="coerce")
    bad = tvals.isna() | ~np.isfinite(tvals)
    if bad.any():
        i = int(np.argmax(bad.to_numpy()))
        raise DataError(f"{path} line {i + 2}: tstat is not a finite number: "
                        f"{frame['tstat'].iloc[i]!r}")
    frame = frame.copy()
    frame["id"] = frame["id"].astype(str)
    frame["tstat"] = tvals.astype(float)
    return frame


def _resolve_rule(args, config, default_cutoff=2.0, default_side="absolute"):
    rule_cfg = config.get("model", {}).get("rule", {}) if isinstance(config.get("model"), dict) else {}
    cutoff = float(_pick(getattr(args, "cutoff", None), rule_cfg, "cutoff", default_cutoff))
    side = check_side(_pick(getattr(args, "side", None), rule_cfg, "side", default_side))
    base_prob = float(_pick(getattr(args, "base_prob", None), rule_cfg, "base_prob", 1.0))
    cls = AbsoluteThreshold if side == "absolute" else SignedThreshold
    return cls(cutoff=cutoff, base_prob=base_prob), side


# -- estimate ---------------------------------------------------------------

def _run_estimate(args):
    config = _load_config(args.config)
    seed = _resolve_seed(args, config)
    cutoff = float(_pick(args.cutoff, config, "cutoff", 2.0))
    side = check_side(_pick(args.side, config, "side", "absolute"))
    method = _pick(args.method, config, "method", "qmle")
    if method not in ("qmle", "gmm"):
        raise DataError(f"estimate method must be qmle or gmm, got {method!r}")
    n_boot = int(_pick(args.boot, config, "boot", 0))
    effective = {"command": "estimate", "tstats": args.tstats, "cutoff": cutoff,
                 "side": side, "method": method, "boot": n_boot,
                 "strict": bool(args.strict), "seed": seed}
    chash = _config_hash(effective)

    frame = _read_tstats(args.tstats)
    samples = [TStatSample(id=row.id, tstat=row.tstat) for row in frame.itertuples()]
    data = TruncatedSampleSet(samples, cutoff=cutoff, side=side)
    fit_fn = qmle_sigma_theta if method == "qmle" else gmm_sigma_theta
    fit = fit_fn(data, strict=args.strict)
    se = math.nan
    if n_boot > 0:
        se = bootstrap_se(data, estimator=method, n_boot=n_boot, rng=RngStream(seed))
    summary = pd.DataFrame([{
        "method": method, "sigma_theta_hat": fit.sigma_theta_hat,
        "loglik": fit.loglik, "n_used": fit.n_used, "n_dropped": fit.n_dropped,
        "se_boot": se, "flags": ";".join(fit.flags),
    }])
    _write_csv(summary, f"{args.out}_estimate.csv", chash, seed)

    sigma_hat = fit.sigma_theta_hat
    grid = sorted({0.0, round(sigma_hat / 2.0, 6), round(sigma_hat, 6)})
    diag = fit_diagnostics(data, sigma_grid=grid, strict=args.strict)
    _write_csv(diag, f"{args.out}_diagnostics.csv", chash, seed)
    if not args.no_plot:
        figures.save_fit_diagnostics(diag, f"{args.out}_diagnostics.png")
    return 0


# -- correct ----------------------------------------------------------------

def _run_correct(args):
    config = _load_config(args.config)
    seed = _resolve_seed(args, config)
    method = _pick(args.method, config, "method", "quadrature")
    if method not in ("quadrature", "montecarlo"):
        raise DataError(f"correct method must be quadrature or montecarlo, got {method!r}")
    draws = int(_pick(args.mc_draws, config, "mc_draws", 10**6))
    rule, side = _resolve_rule(args, config)
    if args.sigma is not None:
        prior = NormalZeroMean(float(args.sigma))
    elif isinstance(config.get("model"), dict) and "prior" in config["model"]:
        prior = prior_from_dict(config["model"]["prior"])
    else:
        raise DataError("correct needs --sigma or a config file with a model.prior entry")
    model = ModelSpec(prior=prior, rule=rule)
    fdr_targets = _floats(args.fdr_q, "--fdr-q") if args.fdr_q else []
    effective = {"command": "correct", "method": method, "mc_draws": draws,
                 "model": model.to_dict(), "tstats": args.tstats,
                 "fdr_q": fdr_targets, "seed": seed}
    chash = _config_hash(effective)

    tstats = _read_tstats(args.tstats) if args.tstats else None
    rng = RngStream(seed)
    report = correction_report(model, tstats=tstats, method=method, rng=rng, draws=draws)
    rows = [{"quantity": "shrinkage", "value": report.shrinkage},
            {"quantity": "fdr", "value": report.fdr},
            {"quantity": "pub_rate", "value": report.pub_rate}]
    if report.mc is not None:
        ests = (report.mc.shrinkage, report.mc.fdr, report.mc.pub_rate)
        for row, est in zip(rows, ests):
            row["mc_se"] = est.std_error
    _write_csv(pd.DataFrame(rows), f"{args.out}_correct.csv", chash, seed)
    if report.per_finding is not None:
        _write_csv(report.per_finding, f"{args.out}_corrected.csv", chash, seed)
        if not args.no_plot:
            figures.save_published_hist(report.per_finding["tstat"],
                                        f"{args.out}_correct.png", cutoff=rule.cutoff)
    if fdr_targets:
        hurdle_rows = [{"fdr_target": q,
                        "hurdle": hurdle_for_fdr(prior, q, side=side)}
                       for q in fdr_targets]
        _write_csv(pd.DataFrame(hurdle_rows), f"{args.out}_fdr_hurdles.csv", chash, seed)
    return 0


# -- hurdles ----------------------------------------------------------------

def _run_hurdles(args):
    config = _load_config(args.config)
    seed = _resolve_seed(args, config)
    method = _pick(args.method, config, "method", "bh")
    if method not in PROCEDURES:
        raise DataError(f"hurdles method must be one of {sorted(PROCEDURES)}, got {method!r}")
    level = float(_pick(args.level, config, "level", 0.05))
    side = check_side(_pick(args.side, config, "side", "absolute"))
    if (args.pvalues is None) == (args.tstats is None):
        raise DataError("hurdles needs exactly one of --pvalues or --tstats")
    effective = {"command": "hurdles", "method": method, "level": level,
                 "side": side, "pvalues": args.pvalues, "tstats": args.tstats,
                 "seed": seed}
    chash = _config_hash(effective)

    if args.pvalues is not None:
        frame = _read_table(args.pvalues, ("id", "p"))
        pairs = [(str(r.id), float(r.p)) for r in frame.itertuples()]
        pset = PValueSet(pairs)
    else:
        frame = _read_tstats(args.tstats)
        pset = PValueSet.from_tstats(
            [(r.id, r.tstat) for r in frame.itertuples()], side=side)
    decisions = PROCEDURES[method](pset, level=level)
    ordered = sorted(decisions, key=lambda d: (d.pvalue, d.id))
    out = pd.DataFrame([{
        "id": d.id, "pvalue": d.pvalue, "adjusted_p": d.adjusted_p,
        "rejected": d.rejected, "method": d.method, "level": d.level,
    } for d in ordered])
    n_rej = int(sum(d.rejected for d in ordered))
    _write_csv(out, f"{args.out}_hurdles.csv", chash, seed,
               comments=[f"rejected {n_rej} of {len(ordered)}"])
    if not args.no_plot:
        figures.save_decision_plot(decisions, f"{args.out}_hurdles.png")
    return 0


# -- simulate ---------------------------------------------------------------

def _parse_hurdle_lines(text):
    hurdles = {}
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise DataError(f"--hurdles expects name=value pairs, got {part!r}")
        name, value = part.split("=", 1)
        try:
            hurdles[name.strip()] = float(value)
        except ValueError:
            raise DataError(f"--hurdles value for {name.strip()!r} is not a number") from None
    return hurdles


def _run_simulate(args):
    config = _load_config(args.config)
    if "model" not in config:
        raise DataError("simulate needs a config file with a model entry")
    seed = _resolve_seed(args, config)
    model = model_from_dict(config["model"])
    n_ideas = int(_pick(args.n_ideas, config, "n_ideas", 10**6))
    noise = float(_pick(args.noise_on_false, config, "noise_on_false", 0.0))
    if args.hurdles is not None:
        hurdles = _parse_hurdle_lines(args.hurdles)
    else:
        hurdles = {str(k): float(v) for k, v in config.get("hurdles", {}).items()}
    effective = {"command": "simulate", "model": model.to_dict(), "n_ideas": n_ideas,
                 "noise_on_false": noise, "hurdles": hurdles, "seed": seed}
    chash = _config_hash(effective)

    spec = SimulationSpec(model=model, n_ideas=n_ideas, seed=seed, noise_on_false=noise)
    result = simulate(spec)
    summary = pd.DataFrame([{
        "n_ideas": n_ideas, "n_published": result.n_published,
        "pub_rate": result.pub_rate,
        "realized_shrinkage": result.realized_shrinkage,
        "realized_fdr": result.realized_fdr,
    }])
    _write_csv(summary, f"{args.out}_simulate.csv", chash, seed)
    agreement = agreement_report(result)
    _write_csv(agreement.table, f"{args.out}_agreement.csv", chash, seed)
    scatter = scatter_export(result, rng=RngStream(seed, 10**6), hurdles=hurdles)
    comments = [f"hurdle {name} {value}" for name, value in hurdles.items()]
    _write_csv(scatter, f"{args.out}_scatter.csv", chash, seed, comments=comments)
    if not args.no_plot:
        figures.save_scatter(scatter, f"{args.out}_scatter.png", hurdles=hurdles)
    return 0


# -- panel ------------------------------------------------------------------

def _run_panel(args):
    config = _load_config(args.config)
    seed = _resolve_seed(args, config)
    ops = [op.strip() for op in _pick(args.ops, config, "ops", "insample").split(",")]
    unknown = [op for op in ops if op not in PANEL_OPS]
    if unknown:
        raise DataError(f"unknown panel op(s) {unknown}; choose from {list(PANEL_OPS)}")
    cutoffs = _floats(_pick(args.cutoffs, config, "cutoffs", "2,3,4,5,6,7,8"), "--cutoffs")
    null_mode = _pick(args.null_mode, config, "null_mode", "none")
    min_overlap = int(_pick(args.min_overlap, config, "min_overlap", 36))
    min_months = int(_pick(args.min_months, config, "min_months", 12))
    window = _pick(args.window, config, "window", "all")
    demean = bool(args.demean)
    target = float(_pick(args.scale_target, config, "scale_target", 0.1))
    trailing = int(_pick(args.trailing, config, "trailing", 36))
    lags = _ints(_pick(args.lags, config, "lags", "1,2,3,4,5,6,7,8,9,10,11,12"), "--lags")
    n_boot = args.n_boot
    effective = {"command": "panel", "returns": args.returns, "meta": args.meta,
                 "ops": ops, "cutoffs": cutoffs, "null_mode": null_mode,
                 "min_overlap": min_overlap, "min_months": min_months,
                 "window": window, "demean": demean, "scale_target": target,
                 "trailing": trailing, "lags": lags, "n_boot": n_boot, "seed": seed}
    chash = _config_hash(effective)

    raw = load_panel(args.returns, args.meta)
    signed = scaled = None

    def _signed():
        nonlocal signed
        if signed is None:
            signed = sign_normalize(raw)
        return signed

    def _scaled():
        nonlocal scaled
        if scaled is None:
            scaled = scale_to_insample_mean(_signed(), target=target)
        return scaled

    for op in ops:
        if op == "insample":
            stats = insample_stats(raw, min_months=min_months)
            _write_csv(stats, f"{args.out}_insample.csv", chash, seed, units=True)
            if not args.no_plot:
                figures.save_insample_tstat_hist(stats, f"{args.out}_insample.png", cutoff=2.0)
        elif op == "corr":
            corr = pairwise_correlations(_signed(), min_overlap=min_overlap)
            _write_csv(corr, f"{args.out}_corr.csv", chash, seed,
                       comments=[f"pairs_skipped {corr.attrs['n_skipped']}"])
            if not args.no_plot:
                figures.save_correlation_hist(corr, f"{args.out}_corr.png")
        elif op == "pca":
            curve = pca_variance_curve(_signed(), min_overlap=2)
            _write_csv(curve, f"{args.out}_pca.csv", chash, seed)
            if not args.no_plot:
                figures.save_pca_curve(curve, f"{args.out}_pca.png")
        elif op == "bootstrap":
            boot = cluster_bootstrap_mean(_scaled(), window=window,
                                          n_boot=int(n_boot if n_boot is not None else 1000),
                                          rng=RngStream(seed), demean=demean)
            summary = pd.DataFrame([{
                "window": window, "demean": demean, "n_boot": boot.n_boot,
                "point_estimate": boot.point_estimate, "se": boot.se,
                "q2_5": boot.quantiles[2.5], "median": boot.quantiles[50.0],
                "q97_5": boot.quantiles[97.5],
            }])
            _write_csv(summary, f"{args.out}_bootstrap.csv", chash, seed, units=True)
            draws = pd.DataFrame({"draw": np.arange(boot.n_boot), "mean_ret": boot.draws})
            _write_csv(draws, f"{args.out}_bootstrap_draws.csv", chash, seed, units=True)
            if not args.no_plot:
                figures.save_bootstrap_hist(boot, f"{args.out}_bootstrap.png")
        elif op == "event":
            event = event_time_curve(_scaled(), trailing=trailing)
            _write_csv(event.curve, f"{args.out}_event.csv", chash, seed, units=True,
                       comments=[f"post_sample_36_mean {event.post_sample_36_mean}",
                                 f"post_pub_mean {event.post_pub_mean}"])
            if not args.no_plot:
                figures.save_event_curve(event, f"{args.out}_event.png")
        elif op == "autocorr":
            acf = mean_autocorrelation(raw, lags=lags)
            _write_csv(acf, f"{args.out}_autocorr.csv", chash, seed)
            if not args.no_plot:
                figures.save_autocorr_bars(acf, f"{args.out}_autocorr.png")
        elif op == "exceed":
            table = exceedance_table(
                raw, cutoffs=cutoffs, mode="both", null_mode=null_mode,
                n_boot=int(n_boot if n_boot is not None else 200),
                rng=RngStream(seed) if null_mode == "bootstrap" else None,
                min_months=min_months)
            _write_csv(table, f"{args.out}_exceed.csv", chash, seed,
                       comments=[f"n_tstats {table.attrs['n_tstats']}"])
            if not args.no_plot:
                figures.save_exceedance_bars(table, f"{args.out}_exceed.png")
        elif op == "compare":
            stats = insample_stats(raw, min_months=min_months)
            repl = stats.loc[stats["flag"] == "", ["predictor", "tstat"]]
            orig = raw.meta["original_tstat"].dropna().reset_index()
            orig.columns = ["predictor", "tstat"]
            if orig.empty:
                raise DataError("compare op needs original_tstat values in the metadata file")
            comp = compare_tstats(repl, orig)
            _write_csv(comp.pairs, f"{args.out}_compare.csv", chash, seed,
                       comments=[f"mean_diff {comp.mean_diff}",
                                 f"slope_through_origin {comp.slope_through_origin}",
                                 f"n_above {comp.n_above}", f"n_below {comp.n_below}",
                                 f"n_matched {comp.n_matched}",
                                 f"n_unmatched {comp.n_unmatched}"])
            if not args.no_plot:
                figures.save_compare_scatter(comp, f"{args.out}_compare.png")
    return 0


# -- parser -----------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="pubbias",
        description="Selection-adjusted inference for collections of published test statistics.")
    parser.add_argument("--version", action="version", version=f"pubbias {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output path prefix")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="RNG seed (default: PUBBIAS_SEED or 12345)")
        p.add_argument("--no-plot", action="store_true", help="skip PNG rendering")

    p = sub.add_parser("estimate", help="fit effect dispersion from published t-stats")
    p.add_argument("--tstats", required=True, help="CSV with columns id,tstat")
    p.add_argument("--cutoff", type=float, help="publication threshold (default 2.0)")
    p.add_argument("--side", choices=["signed", "absolute"])
    p.add_argument("--method", choices=["qmle", "gmm"])
    p.add_argument("--boot", type=int, help="bootstrap replications for the SE (0 = off)")
    p.add_argument("--strict", action="store_true",
                   help="refuse rather than drop sub-threshold t-stats")
    common(p)
    p.set_defaults(func=_run_estimate)

    p = sub.add_parser("correct", help="shrinkage, FDR, and corrected effects")
    p.add_argument("--sigma", type=float, help="dispersion of a zero-mean normal prior")
    p.add_argument("--tstats", help="optional CSV with columns id,tstat to correct")
    p.add_argument("--cutoff", type=float)
    p.add_argument("--side", choices=["signed", "absolute"])
    p.add_argument("--base-prob", type=float, help="publication probability past the threshold")
    p.add_argument("--method", choices=["quadrature", "montecarlo"])
    p.add_argument("--mc-draws", type=int)
    p.add_argument("--fdr-q", help="comma list of FDR targets to convert into t-hurdles")
    common(p)
    p.set_defaults(func=_run_correct)

    p = sub.add_parser("hurdles", help="multiple-testing decisions")
    p.add_argument("--pvalues", help="CSV with columns id,p")
    p.add_argument("--tstats", help="CSV with columns id,tstat (converted to p-values)")
    p.add_argument("--side", choices=["signed", "absolute"])
    p.add_argument("--method", choices=sorted(PROCEDURES))
    p.add_argument("--level", type=float, help="target level (default 0.05)")
    common(p)
    p.set_defaults(func=_run_hurdles)

    p = sub.add_parser("simulate", help="publication-process Monte Carlo")
    p.add_argument("--n-ideas", type=int)
    p.add_argument("--noise-on-false", type=float,
                   help="scatter jitter applied to exactly-null effects")
    p.add_argument("--hurdles", help="reference lines as name=value pairs, comma separated")
    common(p)
    p.set_defaults(func=_run_simulate)

    p = sub.add_parser("panel", help="meta-study panel analytics")
    p.add_argument("--returns", required=True, help="long CSV: date,predictor,ret_pct")
    p.add_argument("--meta", required=True,
                   help="CSV: predictor,sample_start,sample_end,pub_date[,original_tstat]")
    p.add_argument("--ops", help=f"comma list from {','.join(PANEL_OPS)}")
    p.add_argument("--cutoffs", help="|t| cutoffs for the exceed op")
    p.add_argument("--null-mode", choices=["none", "bootstrap"])
    p.add_argument("--n-boot", type=int)
    p.add_argument("--window", help="bootstrap window: all, insample, postpub, "
                                    "postsample:K, calendar:YYYY-MM:YYYY-MM")
    p.add_argument("--demean", action="store_true",
                   help="remove in-sample means before the bootstrap")
    p.add_argument("--min-overlap", type=int)
    p.add_argument("--min-months", type=int)
    p.add_argument("--scale-target", type=float)
    p.add_argument("--trailing", type=int)
    p.add_argument("--lags", help="comma list of autocorrelation lags")
    common(p)
    p.set_defaults(func=_run_panel)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PubBiasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
