"""Classical multiple-testing procedures and model-based t-hurdles.

The four procedures (Bonferroni, Holm step-down, Benjamini-Hochberg step-up,
Benjamini-Yekutieli under arbitrary dependence) operate on a validated set of
p-values and return per-test decisions with adjusted p-values, defined so
that a test is rejected exactly when its adjusted p is at or below the level.
hurdle_for_fdr answers the complementary model-based question: how high must
the publication threshold be before the published FDR falls to a target.
"""

import math
from dataclasses import dataclass

import numpy as np

from .corrections import fdr_pub
from .errors import DataError, DomainError, NoSolutionError
from .numerics import norm_sf
from .priors import (
    SIDE_ABSOLUTE,
    SIDE_SIGNED,
    AbsoluteThreshold,
    ModelSpec,
    Prior,
    SignedThreshold,
    check_side,
)

_P_FLOOR = 1e-300


def tstat_to_pvalue(t: float, side: str = SIDE_ABSOLUTE) -> float:
    """p-value of a t-statistic under the standard normal null.

    side="absolute" gives the two-sided 2 * sf(|t|); side="signed" the
    one-sided sf(t). Results are floored at a tiny positive value so they
    remain valid p-values even for enormous statistics.
    """
    check_side(side)
    if not math.isfinite(t):
        raise DomainError(f"t must be finite, got {t!r}")
    if side == SIDE_ABSOLUTE:
        p = 2.0 * float(norm_sf(abs(t)))
    else:
        p = float(norm_sf(t))
    return max(min(p, 1.0), _P_FLOOR)


class PValueSet:
    """Validated collection of (id, p) pairs with unique ids and p in (0, 1]."""

    def __init__(self, pairs):
        ids, ps = [], []
        for id_, p in pairs:
            ids.append(str(id_))
            ps.append(float(p))
        if not ids:
            raise DataError("PValueSet must contain at least one p-value")
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DataError(f"duplicate ids in PValueSet: {dupes}")
        arr = np.array(ps, dtype=float)
        if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr > 1.0):
            raise DataError("p-values must be finite and lie in (0, 1]")
        self.ids = ids
        self.pvalues = arr

    def __len__(self):
        return len(self.ids)

    @classmethod
    def from_tstats(cls, pairs, side: str = SIDE_ABSOLUTE) -> "PValueSet":
        return cls((id_, tstat_to_pvalue(float(t), side)) for id_, t in pairs)


@dataclass(frozen=True)
class TestDecision:
    """Decision for one test under a named procedure at a given level."""

    id: str
    pvalue: float
    adjusted_p: float
    rejected: bool
    method: str
    level: float


def _check_level(level: float):
    if not (0.0 < level <= 1.0):
        raise DomainError(f"level must lie in (0, 1], got {level!r}")


def _sorted_order(pset: PValueSet) -> list[int]:
    # Stable total order by (p, id) so ties and permutations cannot change
    # any decision.
    return sorted(range(len(pset)), key=lambda i: (pset.pvalues[i], pset.ids[i]))


def _decisions(pset: PValueSet, order, adjusted, method, level) -> list[TestDecision]:
    return [
        TestDecision(id=pset.ids[i], pvalue=float(pset.pvalues[i]),
                     adjusted_p=float(adj), rejected=bool(adj <= level),
                     method=method, level=level)
        for i, adj in zip(order, adjusted)
    ]


def bonferroni(pset: PValueSet, level: float = 0.05) -> list[TestDecision]:
    """Family-wise control by the union bound: adjusted p = min(1, m p)."""
    _check_level(level)
    order = _sorted_order(pset)
    m = len(pset)
    adjusted = [min(1.0, m * pset.pvalues[i]) for i in order]
    return _decisions(pset, order, adjusted, "bonferroni", level)


def holm(pset: PValueSet, level: float = 0.05) -> list[TestDecision]:
    """Holm's step-down procedure; uniformly rejects at least Bonferroni."""
    _check_level(level)
    order = _sorted_order(pset)
    m = len(pset)
    adjusted, running = [], 0.0
    for k, i in enumerate(order, start=1):
        running = max(running, min(1.0, (m - k + 1) * pset.pvalues[i]))
        adjusted.append(running)
    return _decisions(pset, order, adjusted, "holm", level)


def bh(pset: PValueSet, level: float = 0.05) -> list[TestDecision]:
    """Benjamini-Hochberg step-up false-discovery-rate control."""
    _check_level(level)
    order = _sorted_order(pset)
    m = len(pset)
    adjusted = [0.0] * m
    running = 1.0
    for k in range(m, 0, -1):
        i = order[k - 1]
        running = min(running, min(1.0, m * pset.pvalues[i] / k))
        adjusted[k - 1] = running
    return _decisions(pset, order, adjusted, "bh", level)


def by(pset: PValueSet, level: float = 0.05) -> list[TestDecision]:
    """Benjamini-Yekutieli: BH with the harmonic penalty c(m) = sum 1/i,
    valid under arbitrary dependence."""
    _check_level(level)
    order = _sorted_order(pset)
    m = len(pset)
    c_m = float(np.sum(1.0 / np.arange(1, m + 1)))
    adjusted = [0.0] * m
    running = 1.0
    for k in range(m, 0, -1):
        i = order[k - 1]
        running = min(running, min(1.0, c_m * m * pset.pvalues[i] / k))
        adjusted[k - 1] = running
    return _decisions(pset, order, adjusted, "by", level)


PROCEDURES = {"bonferroni": bonferroni, "holm": holm, "bh": bh, "by": by}


def hurdle_for_fdr(prior: Prior, q: float, side: str = SIDE_ABSOLUTE,
                   tol: float = 1e-4, max_cutoff: float = 10.0) -> float:
    """Smallest publication cutoff at which the published FDR is at most q.

    The FDR is computed by quadrature under the given prior and a threshold
    rule on the chosen side; it is monotone in the cutoff for the priors
    here, so the root is found by bisection to ``tol``. Raises
    NoSolutionError when even ``max_cutoff`` cannot reach q.
    """
    check_side(side)
    if not (0.0 < q <= 1.0):
        raise DomainError(f"q must lie in (0, 1], got {q!r}")
    if tol <= 0.0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    rule_cls = AbsoluteThreshold if side == SIDE_ABSOLUTE else SignedThreshold

    def fdr_at(cutoff: float) -> float:
        return fdr_pub(ModelSpec(prior, rule_cls(cutoff)))

    if fdr_at(0.0) <= q:
        return 0.0
    if fdr_at(max_cutoff) > q:
        raise NoSolutionError(
            f"published FDR stays above {q} for every cutoff up to {max_cutoff}")
    lo, hi = 0.0, max_cutoff
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fdr_at(mid) <= q:
            hi = mid
        else:
            lo = mid
    return hi
