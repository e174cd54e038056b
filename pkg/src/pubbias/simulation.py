"""Monte Carlo of the publication process.

Generates ideas in fixed-size chunks, applies the publication rule, and
reports the published sample with its realized shrinkage, false discovery
rate, and publication rate. One child RNG stream per chunk makes the output
bitwise reproducible and independent of how the chunks are scheduled.
"""

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .corrections import (
    McEstimate,
    quadrature_selection_stats,
    realized_selection_stats,
)
from .errors import DomainError, SimulationError
from .numerics import RngStream
from .priors import SIDE_ABSOLUTE, SIDE_SIGNED, AbsoluteThreshold, ModelSpec

CHUNK_IDEAS = 65536


@dataclass(frozen=True)
class SimulationSpec:
    """Configuration of one simulation run."""

    model: ModelSpec
    n_ideas: int
    seed: int
    noise_on_false: float = 0.0

    def __post_init__(self):
        if not isinstance(self.n_ideas, (int, np.integer)) or self.n_ideas < 1:
            raise DomainError(f"n_ideas must be a positive integer, got {self.n_ideas!r}")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise DomainError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if self.noise_on_false < 0.0:
            raise DomainError(f"noise_on_false must be nonnegative, got {self.noise_on_false!r}")


@dataclass
class SimulationResult:
    """Published sample and its realized selection statistics."""

    spec: SimulationSpec
    theta: np.ndarray
    tstat: np.ndarray
    n_published: int
    pub_rate: float
    realized_shrinkage: float
    realized_fdr: float

    @property
    def side(self) -> str:
        return SIDE_ABSOLUTE if isinstance(self.spec.model.rule, AbsoluteThreshold) else SIDE_SIGNED


def simulate(spec: SimulationSpec) -> SimulationResult:
    """Run the publication process and keep the published (theta, t) pairs."""
    model = spec.model
    side = SIDE_ABSOLUTE if isinstance(model.rule, AbsoluteThreshold) else SIDE_SIGNED
    kept_theta, kept_t = [], []
    n_chunks = (spec.n_ideas + CHUNK_IDEAS - 1) // CHUNK_IDEAS
    for chunk_idx in range(n_chunks):
        m = min(CHUNK_IDEAS, spec.n_ideas - chunk_idx * CHUNK_IDEAS)
        gen = RngStream(spec.seed, chunk_idx).generator()
        theta = model.prior.draw(gen, m)
        tstat = theta + gen.standard_normal(m)
        mask = model.rule.publish_mask(tstat, gen)
        kept_theta.append(theta[mask])
        kept_t.append(tstat[mask])
    theta = np.concatenate(kept_theta)
    tstat = np.concatenate(kept_t)
    if theta.size == 0:
        raise SimulationError(
            f"no ideas were published out of {spec.n_ideas}; increase n_ideas "
            "or lower the publication threshold")
    shrink, fdr = realized_selection_stats(theta, tstat, side)
    return SimulationResult(
        spec=spec, theta=theta, tstat=tstat, n_published=int(theta.size),
        pub_rate=theta.size / spec.n_ideas,
        realized_shrinkage=shrink.value, realized_fdr=fdr.value)


def scatter_export(result: SimulationResult, jitter: float | None = None,
                   rng: RngStream | None = None,
                   hurdles: dict[str, float] | None = None) -> pd.DataFrame:
    """Published sample as a plot-ready table of (true_effect, abs_tstat).

    Effects exactly at zero are the point-mass findings; they may be jittered
    by a Normal(0, jitter^2) offset so the atom reads as a band rather than a
    line. Continuous draws are never jittered. Hurdle reference lines are
    attached as frame metadata (and written as header comment rows by the
    CLI).
    """
    if jitter is None:
        jitter = result.spec.noise_on_false
    if jitter < 0.0:
        raise DomainError(f"jitter must be nonnegative, got {jitter!r}")
    effect = result.theta.astype(float).copy()
    if jitter > 0.0:
        atoms = effect == 0.0
        n_atoms = int(atoms.sum())
        if n_atoms:
            if rng is None:
                raise DomainError("jitter > 0 with point-mass findings requires an RngStream")
            effect[atoms] = jitter * rng.generator().standard_normal(n_atoms)
    frame = pd.DataFrame({"true_effect": effect, "abs_tstat": np.abs(result.tstat)})
    frame.attrs["hurdles"] = dict(hurdles or {})
    return frame


@dataclass
class AgreementReport:
    """Simulated versus analytic selection statistics, judged in MC sigmas."""

    table: pd.DataFrame
    agree: bool
    max_abs_z: float


def agreement_report(result: SimulationResult,
                     analytic_model: ModelSpec | None = None,
                     max_sigmas: float = 4.0) -> AgreementReport:
    """Judge an existing simulation against the quadrature route.

    Compares realized shrinkage, FDR, and publication rate against their
    analytic counterparts under ``analytic_model`` (the simulated model by
    default), flagging disagreement beyond ``max_sigmas`` MC standard errors.
    """
    spec = result.spec
    model = analytic_model if analytic_model is not None else spec.model
    shrink_q, fdr_q, rate_q = quadrature_selection_stats(model)
    shrink_mc, fdr_mc = realized_selection_stats(result.theta, result.tstat, result.side)
    n = spec.n_ideas
    rate = result.pub_rate
    rate_mc = McEstimate(rate, math.sqrt(rate * (1.0 - rate) / n), n)
    rows = []
    for name, mc, analytic in (("shrinkage", shrink_mc, shrink_q),
                               ("fdr", fdr_mc, fdr_q),
                               ("pub_rate", rate_mc, rate_q)):
        se = mc.std_error if mc.std_error > 0.0 else 1e-300
        z = (mc.value - analytic) / se
        rows.append({"quantity": name, "simulated": mc.value, "analytic": analytic,
                     "mc_se": mc.std_error, "z_score": z,
                     "within_band": bool(abs(z) <= max_sigmas)})
    table = pd.DataFrame(rows)
    agree = bool(table["within_band"].all())
    return AgreementReport(table=table, agree=agree,
                           max_abs_z=float(table["z_score"].abs().max()))


def compare_analytic(spec: SimulationSpec, analytic_model: ModelSpec | None = None,
                     max_sigmas: float = 4.0) -> AgreementReport:
    """Run one simulation and judge it against the quadrature route."""
    return agreement_report(simulate(spec), analytic_model, max_sigmas)
