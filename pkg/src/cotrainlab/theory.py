"""Closed-form calculators and audits for the co-training error and risk claims.

Covers: the disagreement rate between the two view classifiers, the unlabeled
benefit  gamma = frac * (1 - disagreement) * indep,  the risk bound that
subtracts it, the one-step error recursion  e(k+1) = lambda * e(k) + c_min,
least-squares recovery of (lambda, c_min) from an observed error trajectory,
and a finite-difference monotonicity audit of the benefit and the bound.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classifier import ViewClassifier, predict_proba
from .data import ConfigError, MultimodalInstance, stack_view

__all__ = [
    "GammaInputs",
    "BoundInputs",
    "BoundReport",
    "ContractionFit",
    "AuditGrid",
    "AuditRow",
    "AuditReport",
    "DEFAULT_INDEP_PROVENANCE",
    "disagreement_rate",
    "gamma",
    "generalization_bound",
    "simulate_recursion",
    "fit_contraction",
    "monotonicity_audit",
    "default_audit_grid",
    "save_audit",
]

DEFAULT_INDEP_PROVENANCE = (
    "indep = 1 - mean absolute within-class cross-view correlation of matched "
    "coordinates (empirical proxy measured by the data module)"
)


def _in_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class GammaInputs:
    """Arguments of the unlabeled-benefit term: all three live in [0, 1]."""

    frac: float
    disagreement: float
    indep: float

    def __post_init__(self) -> None:
        _in_unit("frac", self.frac)
        _in_unit("disagreement", self.disagreement)
        _in_unit("indep", self.indep)


@dataclass(frozen=True)
class BoundInputs:
    """Everything the risk-bound calculator needs.

    ``n_labeled`` must exceed ``d_eff`` so the log ratio in the complexity term
    stays positive.
    """

    empirical_risk: float
    n_labeled: int
    n_unlabeled: int
    d_eff: float
    delta: float
    c1: float
    c2: float
    gamma_inputs: GammaInputs

    def __post_init__(self) -> None:
        _in_unit("empirical_risk", self.empirical_risk)
        if self.n_labeled < 1:
            raise ConfigError(f"n_labeled must be a positive integer, got {self.n_labeled}")
        if self.n_unlabeled < 0:
            raise ConfigError(f"n_unlabeled must be >= 0, got {self.n_unlabeled}")
        if not self.d_eff > 0:
            raise ConfigError(f"d_eff must be > 0, got {self.d_eff}")
        if not self.n_labeled > self.d_eff:
            raise ConfigError(
                f"n_labeled ({self.n_labeled}) must exceed d_eff ({self.d_eff}) so that "
                "ln(n_labeled / d_eff) is positive"
            )
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.c1 > 0:
            raise ConfigError(f"c1 must be > 0, got {self.c1}")
        if not self.c2 > 0:
            raise ConfigError(f"c2 must be > 0, got {self.c2}")


@dataclass(frozen=True)
class BoundReport:
    """Term-by-term evaluation of the risk bound.

    ``bound = empirical_risk_term + complexity_term - gamma_term + confidence_term``,
    reported unclamped so vacuous regimes stay visible. ``gamma_term`` is the
    subtracted magnitude and is always >= 0.
    """

    empirical_risk_term: float
    complexity_term: float
    gamma_term: float
    confidence_term: float
    bound: float
    provenance: str

    def __post_init__(self) -> None:
        if self.gamma_term < 0:
            raise ValueError(f"gamma_term must be >= 0, got {self.gamma_term}")
        recomposed = self.empirical_risk_term + self.complexity_term - self.gamma_term + self.confidence_term
        if abs(self.bound - recomposed) > 1e-12:
            raise ValueError("bound must equal empirical_risk_term + complexity_term - gamma_term + confidence_term")


@dataclass(frozen=True)
class ContractionFit:
    """Least-squares recovery of the error recursion's slope and floor.

    ``alpha_hat`` is defined as ``1 - lambda_hat``. A slope outside (0, 1) is
    reported as-is; ``lambda_in_unit_interval`` flags it.
    """

    lambda_hat: float
    c_min_hat: float
    alpha_hat: float
    r_squared: float
    lambda_in_unit_interval: bool


def disagreement_rate(
    clf1: ViewClassifier,
    clf2: ViewClassifier,
    instances: Sequence[MultimodalInstance],
) -> float:
    """Fraction of instances where the two view classifiers emit different labels."""
    if len(instances) == 0:
        raise ValueError("cannot measure disagreement on an empty set")
    l1 = predict_proba(clf1, stack_view(instances, 1)) >= 0.5
    l2 = predict_proba(clf2, stack_view(instances, 2)) >= 0.5
    return float(np.mean(l1 != l2))


def gamma(g: GammaInputs) -> float:
    """Unlabeled benefit: frac * (1 - disagreement) * indep, always >= 0."""
    return g.frac * (1.0 - g.disagreement) * g.indep


def generalization_bound(b: BoundInputs, provenance: str = DEFAULT_INDEP_PROVENANCE) -> BoundReport:
    """Evaluate the four bound terms and their signed sum.

    empirical_risk_term = empirical risk as given;
    complexity_term     = c1 * sqrt((d_eff*ln(n_labeled/d_eff) + ln(1/delta)) / n_labeled);
    gamma_term          = frac * (1 - disagreement) * indep (subtracted);
    confidence_term     = c2 * sqrt(ln(1/delta) / (n_labeled + n_unlabeled)).
    """
    log_conf = math.log(1.0 / b.delta)
    complexity = b.c1 * math.sqrt((b.d_eff * math.log(b.n_labeled / b.d_eff) + log_conf) / b.n_labeled)
    benefit = gamma(b.gamma_inputs)
    confidence = b.c2 * math.sqrt(log_conf / (b.n_labeled + b.n_unlabeled))
    return BoundReport(
        empirical_risk_term=b.empirical_risk,
        complexity_term=complexity,
        gamma_term=benefit,
        confidence_term=confidence,
        bound=b.empirical_risk + complexity - benefit + confidence,
        provenance=provenance,
    )


def simulate_recursion(lambda_: float, c_min: float, eps0: float, rounds: int) -> list[float]:
    """Iterate e(k+1) = lambda_ * e(k) + c_min; returns rounds+1 values starting at eps0."""
    if not 0.0 <= lambda_ < 1.0:
        raise ConfigError(f"lambda_ must lie in [0, 1), got {lambda_}")
    if c_min < 0:
        raise ConfigError(f"c_min must be >= 0, got {c_min}")
    _in_unit("eps0", eps0)
    if rounds < 0:
        raise ConfigError(f"rounds must be >= 0, got {rounds}")
    out = [float(eps0)]
    for _ in range(rounds):
        out.append(lambda_ * out[-1] + c_min)
    return out


def fit_contraction(trajectory: Sequence[float]) -> ContractionFit:
    """Ordinary least squares of e(k+1) on e(k) over consecutive trajectory pairs."""
    t = np.asarray(trajectory, dtype=np.float64)
    if t.ndim != 1 or t.size < 3:
        raise ValueError("trajectory must be a 1-D sequence of at least 3 values")
    x, y = t[:-1], t[1:]
    if np.all(x == x[0]):
        raise ValueError("trajectory predictor has zero variance (constant values); nothing to fit")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ContractionFit(
        lambda_hat=slope,
        c_min_hat=intercept,
        alpha_hat=1.0 - slope,
        r_squared=r2,
        lambda_in_unit_interval=0.0 < slope < 1.0,
    )


# ---------------------------------------------------------------------------
# Monotonicity audit
# ---------------------------------------------------------------------------

_DEFAULT_AXIS = tuple(round(0.1 * k, 1) for k in range(1, 10))


@dataclass(frozen=True)
class AuditGrid:
    """Grid and fixed parameters for the monotonicity audit.

    The three benefit axes default to the interior grid 0.1..0.9 (step 0.1);
    ``n_unlabeled_values`` drives the bound-tightening check at fixed
    ``n_labeled``, ``disagreement_fixed`` and ``indep_fixed``.
    """

    fracs: tuple[float, ...] = _DEFAULT_AXIS
    disagreements: tuple[float, ...] = _DEFAULT_AXIS
    indeps: tuple[float, ...] = _DEFAULT_AXIS
    n_unlabeled_values: tuple[int, ...] = field(default_factory=lambda: tuple(range(0, 10001, 100)))
    n_labeled: int = 100
    empirical_risk: float = 0.1
    disagreement_fixed: float = 0.1
    indep_fixed: float = 0.9
    d_eff: float = 10.0
    delta: float = 0.05
    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self) -> None:
        for name in ("fracs", "disagreements", "indeps"):
            vals = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, vals)
            if len(vals) == 0:
                raise ConfigError(f"audit axis {name} must be non-empty")
            for v in vals:
                _in_unit(f"{name} value", v)
            if any(b < a for a, b in zip(vals, vals[1:])):
                raise ConfigError(f"audit axis {name} must be non-decreasing")
        nu = tuple(int(v) for v in self.n_unlabeled_values)
        object.__setattr__(self, "n_unlabeled_values", nu)
        if len(nu) == 0:
            raise ConfigError("n_unlabeled_values must be non-empty")
        if any(v < 0 for v in nu):
            raise ConfigError("n_unlabeled_values must be non-negative")
        if any(b < a for a, b in zip(nu, nu[1:])):
            raise ConfigError("n_unlabeled_values must be non-decreasing")
        axes = (self.fracs, self.disagreements, self.indeps, nu)
        if all(len(set(axis)) < 2 for axis in axes):
            raise ConfigError("degenerate grid: no axis has two distinct values to difference")
        _in_unit("disagreement_fixed", self.disagreement_fixed)
        _in_unit("indep_fixed", self.indep_fixed)


def default_audit_grid() -> AuditGrid:
    return AuditGrid()


@dataclass(frozen=True)
class AuditRow:
    """One finite difference: sign_ok is None when the claim is vacuous there."""

    claim: str
    axis: str
    grid_point: str
    difference: float
    sign_ok: bool | None
    note: str = ""


@dataclass(frozen=True, eq=False)
class AuditReport:
    rows: tuple[AuditRow, ...]
    claim_status: dict[str, str]
    violations: int
    passed: bool
    first_counterexamples: dict[str, AuditRow]


_VACUOUS = "vacuous (zero face)"


def _pairs(values: Sequence[float]) -> list[tuple[float, float]]:
    return [(a, b) for a, b in zip(values, values[1:]) if b != a]


def monotonicity_audit(grid: AuditGrid) -> AuditReport:
    """Check every finite difference of the benefit (and the bound over N_U) for its claimed sign.

    Claims: the benefit strictly increases along frac and indep and strictly
    decreases along disagreement, at grid points where the complementary
    factors are nonzero (on a zero face the partials vanish and the rows are
    marked vacuous rather than failed); the bound strictly decreases and the
    benefit strictly increases as n_unlabeled grows.
    """
    rows: list[AuditRow] = []

    def add(claim: str, axis: str, point: str, diff: float, want_positive: bool, vacuous: bool) -> None:
        if vacuous:
            rows.append(AuditRow(claim, axis, point, diff, None, _VACUOUS))
        else:
            ok = diff > 0 if want_positive else diff < 0
            rows.append(AuditRow(claim, axis, point, diff, bool(ok)))

    for d in grid.disagreements:
        for ind in grid.indeps:
            factor = (1.0 - d) * ind
            for lo, hi in _pairs(grid.fracs):
                diff = gamma(GammaInputs(hi, d, ind)) - gamma(GammaInputs(lo, d, ind))
                add("gamma_vs_frac", "frac", f"frac={lo:g}->{hi:g},d={d:g},indep={ind:g}", diff, True, factor == 0.0)
    for f in grid.fracs:
        for ind in grid.indeps:
            factor = f * ind
            for lo, hi in _pairs(grid.disagreements):
                diff = gamma(GammaInputs(f, hi, ind)) - gamma(GammaInputs(f, lo, ind))
                add("gamma_vs_disagreement", "disagreement", f"frac={f:g},d={lo:g}->{hi:g},indep={ind:g}", diff, False, factor == 0.0)
    for f in grid.fracs:
        for d in grid.disagreements:
            factor = f * (1.0 - d)
            for lo, hi in _pairs(grid.indeps):
                diff = gamma(GammaInputs(f, d, hi)) - gamma(GammaInputs(f, d, lo))
                add("gamma_vs_indep", "indep", f"frac={f:g},d={d:g},indep={lo:g}->{hi:g}", diff, True, factor == 0.0)

    def bound_at(n_unlabeled: int) -> BoundReport:
        frac = n_unlabeled / (grid.n_labeled + n_unlabeled) if n_unlabeled else 0.0
        return generalization_bound(
            BoundInputs(
                empirical_risk=grid.empirical_risk,
                n_labeled=grid.n_labeled,
                n_unlabeled=n_unlabeled,
                d_eff=grid.d_eff,
                delta=grid.delta,
                c1=grid.c1,
                c2=grid.c2,
                gamma_inputs=GammaInputs(frac, grid.disagreement_fixed, grid.indep_fixed),
            )
        )

    nu_pairs = [(a, b) for a, b in zip(grid.n_unlabeled_values, grid.n_unlabeled_values[1:]) if b != a]
    gamma_factor = (1.0 - grid.disagreement_fixed) * grid.indep_fixed
    for lo, hi in nu_pairs:
        rep_lo, rep_hi = bound_at(lo), bound_at(hi)
        add("gamma_vs_n_unlabeled", "n_unlabeled", f"n_unlabeled={lo}->{hi}", rep_hi.gamma_term - rep_lo.gamma_term, True, gamma_factor == 0.0)
        add("bound_vs_n_unlabeled", "n_unlabeled", f"n_unlabeled={lo}->{hi}", rep_hi.bound - rep_lo.bound, False, False)

    status: dict[str, str] = {}
    first_bad: dict[str, AuditRow] = {}
    violations = 0
    for claim in ("gamma_vs_frac", "gamma_vs_disagreement", "gamma_vs_indep", "gamma_vs_n_unlabeled", "bound_vs_n_unlabeled"):
        claim_rows = [r for r in rows if r.claim == claim]
        if not claim_rows:
            status[claim] = "untested"
            continue
        bad = [r for r in claim_rows if r.sign_ok is False]
        if bad:
            status[claim] = "fail"
            first_bad[claim] = bad[0]
            violations += len(bad)
        elif all(r.sign_ok is None for r in claim_rows):
            status[claim] = _VACUOUS
        else:
            status[claim] = "pass"
    return AuditReport(
        rows=tuple(rows),
        claim_status=status,
        violations=violations,
        passed=violations == 0,
        first_counterexamples=first_bad,
    )


def save_audit(report: AuditReport, path: str) -> None:
    """audit.csv: claim, axis, grid_point, difference, sign_ok (true/false/vacuous)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["claim", "axis", "grid_point", "difference", "sign_ok"])
        for r in report.rows:
            flag = "vacuous" if r.sign_ok is None else ("true" if r.sign_ok else "false")
            writer.writerow([r.claim, r.axis, r.grid_point, repr(r.difference), flag])
