"""Effect-size priors and publication rules.

The selection model throughout the package: a study i has a true effect
theta_i drawn from a prior, reports t_i = theta_i + Z_i with standard normal
noise, and is published when t_i clears a threshold rule. Priors carry their
continuous density, an explicit point mass at zero (never smeared into the
density), a sampler, and a quadrature rule for expectations against the
continuous part.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy import stats

from .errors import DataError, DomainError
from .numerics import (
    QuadratureSpec,
    RngStream,
    integrate_1d,
    norm_pdf,
    norm_sf,
)

SIDE_SIGNED = "signed"
SIDE_ABSOLUTE = "absolute"

# Offset of the probability-transform integration range from the exact unit
# interval; keeps quantile evaluations finite at the Gauss-Kronrod nodes.
_U_EPS = 1e-15


def check_side(side: str) -> str:
    if side not in (SIDE_SIGNED, SIDE_ABSOLUTE):
        raise DomainError(f"side must be '{SIDE_SIGNED}' or '{SIDE_ABSOLUTE}', got {side!r}")
    return side


class Prior(ABC):
    """Population distribution of true effects."""

    kind: str = ""

    def atom_weight(self) -> float:
        """Probability mass located exactly at theta = 0."""
        return 0.0

    @abstractmethod
    def density(self, theta):
        """Continuous part of the density; the atom is reported separately."""

    @abstractmethod
    def draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        """n draws using the supplied generator."""

    @abstractmethod
    def expect(self, g: Callable[[float], float], lo: float = -math.inf,
               hi: float = math.inf, quad: QuadratureSpec | None = None) -> float:
        """Integral of g(theta) against the continuous part over [lo, hi]."""

    @abstractmethod
    def mass_window(self, eps: float) -> tuple[float, float]:
        """Interval holding all but at most eps of the continuous mass."""

    @abstractmethod
    def to_dict(self) -> dict:
        """Tagged record for config serialization."""


@dataclass(frozen=True)
class NormalZeroMean(Prior):
    """Normal prior centered at zero; sigma_theta = 0 degenerates to a unit
    atom at zero."""

    sigma_theta: float
    kind = "normal"

    def __post_init__(self):
        if not (self.sigma_theta >= 0.0) or not math.isfinite(self.sigma_theta):
            raise DomainError(f"sigma_theta must be finite and >= 0, got {self.sigma_theta!r}")

    def atom_weight(self) -> float:
        return 1.0 if self.sigma_theta == 0.0 else 0.0

    def density(self, theta):
        if self.sigma_theta == 0.0:
            return np.zeros_like(np.asarray(theta, dtype=float)) + 0.0
        return norm_pdf(np.asarray(theta, dtype=float) / self.sigma_theta) / self.sigma_theta

    def draw(self, gen, n):
        return gen.standard_normal(n) * self.sigma_theta

    def expect(self, g, lo=-math.inf, hi=math.inf, quad=None):
        if self.sigma_theta == 0.0:
            return 0.0
        a, b = self.mass_window(0.0)
        a, b = max(a, lo), min(b, hi)
        if a >= b:
            return 0.0
        s = self.sigma_theta
        return integrate_1d(lambda th: g(th) * float(norm_pdf(th / s)) / s, a, b, quad)

    def mass_window(self, eps):
        # 12 sigma leaves under 1e-32 outside regardless of eps.
        return (-12.0 * self.sigma_theta, 12.0 * self.sigma_theta)

    def to_dict(self):
        return {"kind": "normal", "sigma_theta": self.sigma_theta}


@dataclass(frozen=True)
class PointMassMixture(Prior):
    """Share pi0 of effects exactly zero, the rest exponential with mean lam
    on theta > 0."""

    pi0: float
    lam: float
    kind = "mixture"

    def __post_init__(self):
        if not (0.0 <= self.pi0 <= 1.0):
            raise DomainError(f"pi0 must lie in [0, 1], got {self.pi0!r}")
        if not (self.lam > 0.0) or not math.isfinite(self.lam):
            raise DomainError(f"lam must be positive and finite, got {self.lam!r}")

    def atom_weight(self) -> float:
        return self.pi0

    def density(self, theta):
        th = np.asarray(theta, dtype=float)
        pos = (1.0 - self.pi0) * np.exp(-th / self.lam) / self.lam
        return np.where(th >= 0.0, pos, 0.0)

    def draw(self, gen, n):
        # Fixed draw order (uniforms, then exponentials) keeps the stream
        # layout independent of pi0.
        is_null = gen.random(n) < self.pi0
        effects = gen.exponential(scale=self.lam, size=n)
        return np.where(is_null, 0.0, effects)

    def expect(self, g, lo=-math.inf, hi=math.inf, quad=None):
        weight = 1.0 - self.pi0
        if weight == 0.0:
            return 0.0
        _, b = self.mass_window(0.0)
        a, b = max(0.0, lo), min(b, hi)
        if a >= b:
            return 0.0
        lam = self.lam
        return weight * integrate_1d(
            lambda th: g(th) * math.exp(-th / lam) / lam, a, b, quad)

    def mass_window(self, eps):
        # exp(-37) ~ 8.5e-17 of the positive part lies beyond the cap.
        return (0.0, 37.0 * self.lam)

    def to_dict(self):
        return {"kind": "mixture", "pi0": self.pi0, "lambda": self.lam}


@dataclass(frozen=True)
class ScaledStudentT(Prior):
    """Student-t effects scaled by ``scale``; dof must exceed 2 so the prior
    has a finite variance."""

    scale: float
    dof: float
    kind = "student"

    def __post_init__(self):
        if not (self.scale > 0.0) or not math.isfinite(self.scale):
            raise DomainError(f"scale must be positive and finite, got {self.scale!r}")
        if not (self.dof > 2.0) or not math.isfinite(self.dof):
            raise DomainError(f"dof must be finite and > 2, got {self.dof!r}")

    def density(self, theta):
        th = np.asarray(theta, dtype=float)
        return stats.t.pdf(th / self.scale, self.dof) / self.scale

    def draw(self, gen, n):
        return gen.standard_t(self.dof, size=n) * self.scale

    def expect(self, g, lo=-math.inf, hi=math.inf, quad=None):
        # Heavy tails make a fixed theta window unreliable, so integrate in
        # probability space: E[g] = integral over u in (0,1) of g(ppf(u)).
        # Endpoint power singularities are what QUADPACK's extrapolation is
        # built for.
        dist = stats.t(self.dof, scale=self.scale)
        u_lo = max(float(dist.cdf(lo)), _U_EPS) if lo > -math.inf else _U_EPS
        u_hi = min(float(dist.cdf(hi)), 1.0 - _U_EPS) if hi < math.inf else 1.0 - _U_EPS
        if u_lo >= u_hi:
            return 0.0
        ppf = dist.ppf
        return integrate_1d(lambda u: g(float(ppf(u))), u_lo, u_hi, quad)

    def mass_window(self, eps):
        eps = max(eps, 1e-300)
        half = float(stats.t.isf(eps / 2.0, self.dof)) * self.scale
        return (-half, half)

    def to_dict(self):
        return {"kind": "student", "scale": self.scale, "dof": self.dof}


@dataclass(frozen=True)
class SignedThreshold:
    """Publish when t >= ``cutoff``, with probability base_prob when it is.
    base_prob thins the published sample without changing any conditional
    distribution."""

    cutoff: float
    base_prob: float = 1.0
    kind = "signed"

    def __post_init__(self):
        if not math.isfinite(self.cutoff):
            raise DomainError(f"cutoff must be finite, got {self.cutoff!r}")
        if not (0.0 < self.base_prob <= 1.0):
            raise DomainError(f"base_prob must lie in (0, 1], got {self.base_prob!r}")

    def exceeds(self, t: np.ndarray) -> np.ndarray:
        return np.asarray(t) >= self.cutoff

    def publish_mask(self, t: np.ndarray, gen: np.random.Generator | None = None) -> np.ndarray:
        mask = self.exceeds(t)
        if self.base_prob < 1.0:
            if gen is None:
                raise DomainError("base_prob < 1 requires a generator for the publication draw")
            mask = mask & (gen.random(np.asarray(t).shape) < self.base_prob)
        return mask

    def to_dict(self):
        return {"kind": "signed", "cutoff": self.cutoff, "base_prob": self.base_prob}


@dataclass(frozen=True)
class AbsoluteThreshold:
    """Publish when |t| >= ``cutoff``. Published findings are read as |t|,
    with the true effect relabeled sign(t) * theta."""

    cutoff: float
    base_prob: float = 1.0
    kind = "absolute"

    def __post_init__(self):
        if not (self.cutoff >= 0.0) or not math.isfinite(self.cutoff):
            raise DomainError(f"absolute cutoff must be finite and >= 0, got {self.cutoff!r}")
        if not (0.0 < self.base_prob <= 1.0):
            raise DomainError(f"base_prob must lie in (0, 1], got {self.base_prob!r}")

    def exceeds(self, t: np.ndarray) -> np.ndarray:
        return np.abs(np.asarray(t)) >= self.cutoff

    def publish_mask(self, t: np.ndarray, gen: np.random.Generator | None = None) -> np.ndarray:
        mask = self.exceeds(t)
        if self.base_prob < 1.0:
            if gen is None:
                raise DomainError("base_prob < 1 requires a generator for the publication draw")
            mask = mask & (gen.random(np.asarray(t).shape) < self.base_prob)
        return mask

    def to_dict(self):
        return {"kind": "absolute", "cutoff": self.cutoff, "base_prob": self.base_prob}


PublicationRule = Union[SignedThreshold, AbsoluteThreshold]


@dataclass(frozen=True)
class ModelSpec:
    """A prior plus a publication rule: everything the selection model needs."""

    prior: Prior
    rule: PublicationRule

    def __post_init__(self):
        if not isinstance(self.prior, Prior):
            raise DomainError(f"prior must be a Prior, got {type(self.prior).__name__}")
        if not isinstance(self.rule, (SignedThreshold, AbsoluteThreshold)):
            raise DomainError(f"rule must be a publication rule, got {type(self.rule).__name__}")

    def to_dict(self):
        return {"prior": self.prior.to_dict(), "rule": self.rule.to_dict()}


class DensityValue(NamedTuple):
    """Continuous density at a point plus the separate mass at zero."""

    continuous: float
    atom_weight: float


def prior_density(prior: Prior, theta) -> DensityValue:
    """Density of the prior at theta, atom reported explicitly."""
    return DensityValue(prior.density(theta), prior.atom_weight())


def prior_sample(prior: Prior, rng: RngStream, n: int) -> np.ndarray:
    """n reproducible draws from the prior."""
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n!r}")
    return prior.draw(rng.generator(), n)


def marginal_t_density(prior: Prior, t: float, quad: QuadratureSpec | None = None) -> float:
    """Density of the pre-publication t-statistic theta + Z at t.

    Closed form Normal(0, sigma_theta^2 + 1) for the normal prior; for other
    variants the convolution integral is evaluated against the continuous
    prior density, with atoms contributing weight * pdf(t) terms.
    """
    if isinstance(prior, NormalZeroMean):
        s = math.sqrt(1.0 + prior.sigma_theta ** 2)
        return float(norm_pdf(t / s)) / s
    value = prior.expect(lambda th: float(norm_pdf(t - th)), quad=quad)
    w = prior.atom_weight()
    if w > 0.0:
        value += w * float(norm_pdf(t))
    return value


def marginal_t_exceedance(prior: Prior, cutoff: float, side: str = SIDE_ABSOLUTE,
                          quad: QuadratureSpec | None = None) -> float:
    """Pre-publication probability that t (or |t|) exceeds ``cutoff``."""
    check_side(side)
    if isinstance(prior, NormalZeroMean):
        s = math.sqrt(1.0 + prior.sigma_theta ** 2)
        if side == SIDE_SIGNED:
            return float(norm_sf(cutoff / s))
        return 2.0 * float(norm_sf(abs(cutoff) / s))
    if side == SIDE_SIGNED:
        value = prior.expect(lambda th: float(norm_sf(cutoff - th)), quad=quad)
        value += prior.atom_weight() * float(norm_sf(cutoff))
    else:
        c = abs(cutoff)
        value = prior.expect(
            lambda th: float(norm_sf(c - th)) + float(norm_sf(c + th)), quad=quad)
        value += prior.atom_weight() * 2.0 * float(norm_sf(c))
    return min(value, 1.0)


_PRIOR_KINDS = {"normal": NormalZeroMean, "mixture": PointMassMixture, "student": ScaledStudentT}
_RULE_KINDS = {"signed": SignedThreshold, "absolute": AbsoluteThreshold}


def prior_from_dict(record: dict) -> Prior:
    """Rebuild a prior from its tagged record."""
    try:
        kind = record["kind"]
    except (TypeError, KeyError):
        raise DataError(f"prior record needs a 'kind' tag, got {record!r}") from None
    if kind == "normal":
        _require_keys(record, {"sigma_theta"}, "normal prior")
        return NormalZeroMean(float(record["sigma_theta"]))
    if kind == "mixture":
        _require_keys(record, {"pi0", "lambda"}, "mixture prior")
        return PointMassMixture(float(record["pi0"]), float(record["lambda"]))
    if kind == "student":
        _require_keys(record, {"scale", "dof"}, "student prior")
        return ScaledStudentT(float(record["scale"]), float(record["dof"]))
    raise DataError(f"unknown prior kind {kind!r}; expected one of {sorted(_PRIOR_KINDS)}")


def rule_from_dict(record: dict) -> PublicationRule:
    """Rebuild a publication rule from its tagged record."""
    try:
        kind = record["kind"]
    except (TypeError, KeyError):
        raise DataError(f"rule record needs a 'kind' tag, got {record!r}") from None
    if kind not in _RULE_KINDS:
        raise DataError(f"unknown rule kind {kind!r}; expected one of {sorted(_RULE_KINDS)}")
    _require_keys(record, {"cutoff"}, f"{kind} rule")
    return _RULE_KINDS[kind](float(record["cutoff"]), float(record.get("base_prob", 1.0)))


def model_from_dict(record: dict) -> ModelSpec:
    """Rebuild a full model (prior + rule) from nested tagged records."""
    if not isinstance(record, dict) or "prior" not in record or "rule" not in record:
        raise DataError(f"model record needs 'prior' and 'rule' entries, got {record!r}")
    return ModelSpec(prior_from_dict(record["prior"]), rule_from_dict(record["rule"]))


def _require_keys(record: dict, keys: set, label: str):
    missing = keys - set(record)
    if missing:
        raise DataError(f"{label} record is missing {sorted(missing)}")
