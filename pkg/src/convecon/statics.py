"""Comparative statics: sweeps, derivative signs, and the claims audit.

The models make a raft of directional promises of the form "when this price
or exponent moves, the optimal behaviour moves that way". This module turns
each promise into a :class:`Claim` and checks it two independent ways at
sampled parameter points:

* on the closed-form expression that backs the claim (finite differences on
  the printed formula), and
* on the brute-force oracle's solution component, conditioned the same way
  the formula is (depth claims hold feedback fixed, fixed-depth feedback
  claims hold depth fixed, unconditioned feedback claims use the joint
  optimum).

The audit also scores how well each formula route tracks the oracle numerically
(the agreement section); AGREES/DISAGREES verdicts there are findings about
the formulas, not test failures. Claims marked ``informational`` come from a
disputed source and are never treated as normative.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import closed_form as cf
from .core import CostParams, EfficiencyParams, ModelKind, check_gain
from .errors import Diverged, DomainError, EconError, Infeasible, NoInteriorOptimum, Unbounded
from .oracle import GridSpec, minimize_cost

__all__ = [
    "Quantity",
    "FormulaVariant",
    "Claim",
    "claim_registry",
    "ParameterRegion",
    "default_region",
    "SamplePoint",
    "finite_diff_sign",
    "SweepTable",
    "sweep",
    "ClaimAudit",
    "FormulaAgreement",
    "ClaimAuditReport",
    "audit_claims",
    "DEFAULT_AUDIT_GRID",
]

# Lighter than the oracle's default: the audit solves the same instance
# thousands of times and only needs ~0.3% component accuracy for sign and
# 5%-agreement work.
DEFAULT_AUDIT_GRID = GridSpec(points=64, refinements=2)

AXIS_ORDER = ("alpha", "beta", "gamma1", "gamma2", "c_query", "c_feedback", "c_assess", "f", "a")

SIGN_POSITIVE = "+"
SIGN_NEGATIVE = "-"
SIGN_FLAT = "0"

FLAT_THRESHOLD = 1e-9


class Quantity(str, Enum):
    """What a claim is about: optimal depth or optimal feedback level."""

    A_STAR = "a_star"
    F_STAR = "f_star"


class FormulaVariant(str, Enum):
    """Which closed-form route backs a claim."""

    A0 = "a0_star"
    A1 = "a1_star"
    F1 = "f1_star"
    A2_PARTIAL = "a2_star_partial"
    A2_FULL = "a2_star_full"
    F2 = "f2_star"
    F2_COUPLED = "f2_star_coupled"


@dataclass(frozen=True)
class Claim:
    """One directional promise about an optimal quantity.

    ``parameter`` is the axis being perturbed (one of the seven model
    parameters, or the conditioning coordinate ``f``). ``informational``
    claims come from a source whose final form is disputed; they are audited
    and reported but never asserted.
    """

    id: str
    model: ModelKind
    quantity: Quantity
    formula_variant: FormulaVariant
    parameter: str
    expected_sign: str
    statement: str
    informational: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "model": self.model.code,
            "quantity": self.quantity.value,
            "variant": self.formula_variant.value,
            "parameter": self.parameter,
            "expected": self.expected_sign,
            "informational": self.informational,
            "statement": self.statement,
        }


_M0, _M1, _M2 = ModelKind.BASELINE, ModelKind.FEEDBACK_FIRST, ModelKind.FEEDBACK_AFTER
_A, _F = Quantity.A_STAR, Quantity.F_STAR
_V = FormulaVariant

_REGISTRY: tuple[Claim, ...] = (
    Claim("M0-1", _M0, _A, _V.A0, "c_query", "+", "costlier queries push baseline assessment depth up"),
    Claim("M0-2", _M0, _A, _V.A0, "c_assess", "-", "costlier assessment pushes baseline assessment depth down"),
    Claim("M0-3", _M0, _A, _V.A0, "alpha", "-", "a stronger query exponent lowers baseline assessment depth"),
    Claim("M0-4", _M0, _A, _V.A0, "beta", "+", "a stronger assessment exponent raises baseline assessment depth"),
    Claim("M1-1", _M1, _A, _V.A1, "c_query", "+", "costlier queries deepen assessment at a fixed feedback level"),
    Claim("M1-2", _M1, _A, _V.A1, "c_assess", "-", "costlier assessment shallows assessment at a fixed feedback level"),
    Claim("M1-3", _M1, _A, _V.A1, "c_feedback", "+", "costlier feedback deepens assessment when feedback is given"),
    Claim("M1-4", _M1, _A, _V.A1, "f", "-", "more feedback per query shallows assessment"),
    Claim("M1-5", _M1, _F, _V.F1, "c_query", "+", "costlier queries call for more feedback at a fixed depth"),
    Claim("M1-6", _M1, _F, _V.F1, "c_assess", "+", "costlier assessment calls for more feedback at a fixed depth"),
    Claim("M1-7", _M1, _F, _V.F1, "c_feedback", "-", "costlier feedback calls for less feedback at a fixed depth"),
    Claim("M1-8", _M1, _F, _V.F1, "gamma1", "-", "more effective feedback needs fewer rounds of it"),
    Claim("M1-9", _M1, _F, _V.F1, "beta", "+",
          "feedback rises as the assessment exponent approaches the query exponent", informational=True),
    Claim("M2-1", _M2, _A, _V.A2_PARTIAL, "c_feedback", "+", "costlier feedback deepens per-pass assessment when feedback is given"),
    Claim("M2-2", _M2, _A, _V.A2_PARTIAL, "c_assess", "-", "costlier assessment shallows per-pass assessment"),
    Claim("M2-3", _M2, _A, _V.A2_PARTIAL, "beta", "+", "a stronger assessment exponent deepens per-pass assessment"),
    Claim("M2-4", _M2, _F, _V.F2, "c_query", "+", "costlier queries motivate more post-results feedback"),
    Claim("M2-5", _M2, _F, _V.F2, "c_feedback", "-", "costlier feedback warrants less post-results feedback"),
    Claim("M2-6", _M2, _F, _V.F2, "gamma2", "+", "more effective feedback invites more of it"),
    Claim("M2-7", _M2, _F, _V.F2, "alpha", "-", "a stronger query exponent shifts effort from feedback to querying"),
    Claim("M2-8", _M2, _A, _V.A2_FULL, "gamma2", "-",
          "more effective feedback shallows per-pass assessment (full-depth variant)", informational=True),
    Claim("M2-9", _M2, _F, _V.F2_COUPLED, "beta", "-",
          "feedback fades as the assessment exponent overtakes querying (depth-coupled variant)", informational=True),
)


def claim_registry() -> tuple[Claim, ...]:
    """The fixed registry of audited claims, in stable order with stable ids."""
    return _REGISTRY


@dataclass(frozen=True)
class ParameterRegion:
    """A box of parameter ranges (plus the f/a conditioning coordinates).

    All nine axes are required and sampled log-uniformly, so every lower
    bound must be strictly positive.
    """

    bounds: tuple[tuple[str, float, float], ...]

    def __post_init__(self) -> None:
        names = [name for name, _, _ in self.bounds]
        if names != list(AXIS_ORDER):
            raise DomainError(f"region must define exactly the axes {', '.join(AXIS_ORDER)} in order")
        caps = {"alpha": 1.0, "beta": 1.0, "gamma2": 1.0}
        for name, lo, hi in self.bounds:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise DomainError(f"region axis {name}: bounds must be finite")
            if not 0.0 < lo < hi:
                raise DomainError(f"region axis {name}: requires 0 < lo < hi (log-uniform sampling)")
            if name in caps and hi > caps[name]:
                raise DomainError(f"region axis {name}: upper bound must be <= {caps[name]}")

    @classmethod
    def from_mapping(cls, data: Mapping[str, object], *, source: str = "region") -> "ParameterRegion":
        if not isinstance(data, Mapping):
            raise DomainError(f"{source}: expected a JSON object")
        unknown = sorted(set(data) - set(AXIS_ORDER))
        if unknown:
            raise DomainError(f"{source}: unknown axis(es): {', '.join(unknown)}")
        missing = [k for k in AXIS_ORDER if k not in data]
        if missing:
            raise DomainError(f"{source}: missing axis(es): {', '.join(missing)}")
        bounds = []
        for name in AXIS_ORDER:
            pair = data[name]
            if not isinstance(pair, Sequence) or isinstance(pair, (str, bytes)) or len(pair) != 2:
                raise DomainError(f"{source}: axis {name} must be a [lo, hi] pair")
            lo, hi = pair
            for v in (lo, hi):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise DomainError(f"{source}: axis {name} bounds must be numbers")
            bounds.append((name, float(lo), float(hi)))
        return cls(bounds=tuple(bounds))

    def bounds_of(self, name: str) -> tuple[float, float]:
        for axis, lo, hi in self.bounds:
            if axis == name:
                return lo, hi
        raise DomainError(f"unknown region axis {name!r}")

    def to_dict(self) -> dict:
        return {name: [lo, hi] for name, lo, hi in self.bounds}


def default_region() -> ParameterRegion:
    """A broad, well-behaved box: exponents ordered with margin, prices
    spanning roughly two decades, conditioning coordinates in a realistic
    session range."""
    return ParameterRegion(bounds=(
        ("alpha", 0.55, 0.95),
        ("beta", 0.05, 0.45),
        ("gamma1", 0.02, 0.4),
        ("gamma2", 0.1, 0.9),
        ("c_query", 1.0, 50.0),
        ("c_feedback", 0.2, 10.0),
        ("c_assess", 0.2, 10.0),
        ("f", 0.5, 6.0),
        ("a", 1.0, 30.0),
    ))


@dataclass(frozen=True)
class SamplePoint:
    """One sampled parameter point plus the (f, a) conditioning coordinates."""

    efficiency: EfficiencyParams
    costs: CostParams
    f: float
    a: float

    def value_of(self, name: str) -> float:
        if name in ("f", "a"):
            return getattr(self, name)
        if hasattr(self.efficiency, name):
            return getattr(self.efficiency, name)
        if hasattr(self.costs, name):
            return getattr(self.costs, name)
        raise DomainError(f"unknown parameter {name!r}")

    def with_param(self, name: str, value: float) -> "SamplePoint":
        if name == "f":
            return SamplePoint(self.efficiency, self.costs, float(value), self.a)
        if name == "a":
            return SamplePoint(self.efficiency, self.costs, self.f, float(value))
        eff_fields = {"alpha": self.efficiency.alpha, "beta": self.efficiency.beta,
                      "gamma1": self.efficiency.gamma1, "gamma2": self.efficiency.gamma2}
        cost_fields = {"c_query": self.costs.c_query, "c_feedback": self.costs.c_feedback,
                       "c_assess": self.costs.c_assess}
        if name in eff_fields:
            eff_fields[name] = float(value)
            return SamplePoint(EfficiencyParams(**eff_fields), self.costs, self.f, self.a)
        if name in cost_fields:
            cost_fields[name] = float(value)
            return SamplePoint(self.efficiency, CostParams(**cost_fields), self.f, self.a)
        raise DomainError(f"unknown parameter {name!r}")

    def to_dict(self) -> dict:
        return {
            "alpha": self.efficiency.alpha,
            "beta": self.efficiency.beta,
            "gamma1": self.efficiency.gamma1,
            "gamma2": self.efficiency.gamma2,
            "c_query": self.costs.c_query,
            "c_feedback": self.costs.c_feedback,
            "c_assess": self.costs.c_assess,
            "f": self.f,
            "a": self.a,
        }


def _sign_of(derivative: float) -> str:
    if abs(derivative) < FLAT_THRESHOLD:
        return SIGN_FLAT
    return SIGN_POSITIVE if derivative > 0.0 else SIGN_NEGATIVE


def finite_diff_sign(
    evaluator: Callable[[SamplePoint], float],
    parameter: str,
    at: SamplePoint,
    h: float = 1e-4,
) -> str:
    """Sign of d(evaluator)/d(parameter) at ``at`` by central differences.

    The step is relative (the parameter is scaled by ``1 +/- h``). Returns
    "+", "-", or "0" when the magnitude falls below the flat threshold of
    1e-9. Domain errors from the perturbed evaluations propagate.
    """
    base = at.value_of(parameter)
    hi = float(evaluator(at.with_param(parameter, base * (1.0 + h))))
    lo = float(evaluator(at.with_param(parameter, base * (1.0 - h))))
    derivative = (hi - lo) / (2.0 * h * base)
    return _sign_of(derivative)


# Formula-side evaluators return (value, clamped) so the audit can censor
# corner samples; variants without clamping report clamped=False always.

def _formula_value(variant: FormulaVariant, point: SamplePoint) -> tuple[float, bool]:
    eff, costs = point.efficiency, point.costs
    if variant is FormulaVariant.A0:
        return cf.a0_star(eff, costs), False
    if variant is FormulaVariant.A1:
        return cf.a1_star(point.f, eff, costs), False
    if variant is FormulaVariant.F1:
        value = cf.f1_star(point.a, eff, costs)
        return value.value, value.corner
    if variant is FormulaVariant.A2_PARTIAL:
        return cf.a2_star_partial(point.f, eff, costs), False
    if variant is FormulaVariant.A2_FULL:
        value = cf.a2_star_full(point.f, eff, costs)
        return value.value, value.corner
    if variant is FormulaVariant.F2:
        value = cf.f2_star(eff, costs)
        return value.value, value.corner
    if variant is FormulaVariant.F2_COUPLED:
        value = cf.f2_star_coupled(point.a, eff, costs)
        return value.value, value.corner
    raise DomainError(f"unknown formula variant {variant!r}")


# Oracle-side conditioning per formula variant: depth formulas are answered
# by a depth-only search at the point's feedback level, fixed-depth feedback
# formulas by a feedback-only search at the point's depth, and the
# unconditioned feedback formula by the joint search.
_PIN_F_VARIANTS = frozenset({FormulaVariant.A1, FormulaVariant.A2_PARTIAL, FormulaVariant.A2_FULL})
_PIN_A_VARIANTS = frozenset({FormulaVariant.F1, FormulaVariant.F2_COUPLED})


def _oracle_component(claim: Claim, point: SamplePoint, g: float, grid: GridSpec) -> tuple[float, bool]:
    kwargs = {}
    if claim.formula_variant in _PIN_F_VARIANTS:
        kwargs["pin_f"] = point.f
    elif claim.formula_variant in _PIN_A_VARIANTS:
        kwargs["pin_a"] = point.a
    solution = minimize_cost(claim.model, point.efficiency, point.costs, g, grid, **kwargs)
    if claim.quantity is Quantity.A_STAR:
        component = solution.strategy.a
    else:
        component = solution.strategy.f
    at_corner = component <= grid.min * (1.0 + 1e-9)
    return component, at_corner


@dataclass(frozen=True)
class _SideTally:
    """Accumulated counts for one evaluation route of one claim."""

    holds: int = 0
    flats: int = 0
    skipped: int = 0
    evaluated: int = 0

    def fraction(self) -> Optional[float]:
        return self.holds / self.evaluated if self.evaluated else None


def _diff_once(
    value_fn: Callable[[SamplePoint], tuple[float, bool]],
    parameter: str,
    point: SamplePoint,
    h: float,
) -> tuple[str, bool]:
    """(sign, censored) of one central difference on a (value, clamped) evaluator."""
    base = point.value_of(parameter)
    hi_value, hi_clamped = value_fn(point.with_param(parameter, base * (1.0 + h)))
    lo_value, lo_clamped = value_fn(point.with_param(parameter, base * (1.0 - h)))
    if hi_clamped or lo_clamped:
        return SIGN_FLAT, True
    derivative = (hi_value - lo_value) / (2.0 * h * base)
    return _sign_of(derivative), False


@dataclass(frozen=True)
class ClaimAudit:
    """Audit outcome for one claim: per-route fractions and diagnostics."""

    claim: Claim
    samples: int
    n_formula: int
    holds_formula: int
    flat_formula: int
    skipped_formula: int
    n_oracle: int
    holds_oracle: int
    flat_oracle: int
    skipped_oracle: int
    counterexamples: tuple[dict, ...]

    @property
    def fraction_holding_formula(self) -> Optional[float]:
        return self.holds_formula / self.n_formula if self.n_formula else None

    @property
    def fraction_holding_oracle(self) -> Optional[float]:
        return self.holds_oracle / self.n_oracle if self.n_oracle else None

    @property
    def no_data(self) -> bool:
        return self.n_formula == 0

    def to_dict(self) -> dict:
        out = self.claim.to_dict()
        out.update({
            "samples": self.samples,
            "n_formula": self.n_formula,
            "fraction_holding_formula": self.fraction_holding_formula,
            "flat_formula": self.flat_formula,
            "skipped_formula": self.skipped_formula,
            "n_oracle": self.n_oracle,
            "fraction_holding_oracle": self.fraction_holding_oracle,
            "flat_oracle": self.flat_oracle,
            "skipped_oracle": self.skipped_oracle,
            "no_data": self.no_data,
            "counterexamples": list(self.counterexamples),
        })
        return out


AGREEMENT_TOLERANCE = 0.05
AGREEMENT_THRESHOLD = 0.9

VERDICT_AGREES = "AGREES"
VERDICT_DISAGREES = "DISAGREES"
VERDICT_NO_DATA = "NO DATA"


@dataclass(frozen=True)
class FormulaAgreement:
    """How closely one formula route tracks the oracle across the samples.

    ``verdict`` is AGREES when at least 90% of evaluated samples land within
    5% relative of the oracle component; it is a reported finding about the
    formula, not a build gate.
    """

    name: str
    n: int
    skipped: int
    median_rel_dev: Optional[float]
    within_tol_fraction: Optional[float]
    verdict: str

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "skipped": self.skipped,
            "median_rel_dev": self.median_rel_dev,
            "within_tol_fraction": self.within_tol_fraction,
            "verdict": self.verdict,
            "tolerance": AGREEMENT_TOLERANCE,
            "threshold": AGREEMENT_THRESHOLD,
        }


_AGREEMENT_ROWS = (
    "a1_star_at_oracle_f",
    "f1_star_at_oracle_a",
    "model1_coupled_pair",
    "a2_star_partial_at_oracle_f",
    "a2_star_full_at_oracle_f",
    "f2_star",
    "f2_star_coupled_at_oracle_a",
    "model2_coupled_pair",
)


@dataclass(frozen=True)
class ClaimAuditReport:
    """Everything one audit run produced, serializable and renderable."""

    claims: tuple[ClaimAudit, ...]
    agreement: tuple[FormulaAgreement, ...]
    meta: dict

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "claims": [row.to_dict() for row in self.claims],
            "agreement": [row.to_dict() for row in self.agreement],
        }

    def claim(self, claim_id: str) -> ClaimAudit:
        for row in self.claims:
            if row.claim.id == claim_id:
                return row
        raise KeyError(claim_id)

    def agreement_row(self, name: str) -> FormulaAgreement:
        for row in self.agreement:
            if row.name == name:
                return row
        raise KeyError(name)

    def to_text(self) -> str:
        def fmt_fraction(x: Optional[float]) -> str:
            return "  n/a" if x is None else f"{x:5.3f}"

        lines = []
        lines.append(
            f"claims audit: {self.meta['samples']} samples, seed {self.meta['seed']}, "
            f"gain target {self.meta['g']}"
        )
        lines.append("")
        header = (
            f"{'id':<6} {'quantity':<22} {'exp':<3} {'formula':>7} {'oracle':>7} "
            f"{'flat':>5} {'skip':>5}  statement"
        )
        lines.append(header)
        lines.append("-" * len(header))
        for row in self.claims:
            claim = row.claim
            label = f"{claim.formula_variant.value} / {claim.parameter}"
            info = " [informational]" if claim.informational else ""
            lines.append(
                f"{claim.id:<6} {label:<22} {claim.expected_sign:<3} "
                f"{fmt_fraction(row.fraction_holding_formula):>7} "
                f"{fmt_fraction(row.fraction_holding_oracle):>7} "
                f"{row.flat_formula:>5} {row.skipped_formula:>5}  {claim.statement}{info}"
            )
        lines.append("")
        lines.append("formula-vs-oracle agreement (5% tolerance, 90% threshold):")
        header = f"{'route':<28} {'n':>5} {'skip':>5} {'median dev':>11} {'within':>7}  verdict"
        lines.append(header)
        lines.append("-" * len(header))
        for row in self.agreement:
            med = "n/a" if row.median_rel_dev is None else f"{row.median_rel_dev:.4f}"
            within = "n/a" if row.within_tol_fraction is None else f"{row.within_tol_fraction:5.3f}"
            lines.append(
                f"{row.name:<28} {row.n:>5} {row.skipped:>5} {med:>11} {within:>7}  {row.verdict}"
            )
        return "\n".join(lines) + "\n"


def _draw_point(rng: np.random.Generator, region: ParameterRegion) -> SamplePoint:
    values = {}
    for name, lo, hi in region.bounds:
        values[name] = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
    efficiency = EfficiencyParams(
        alpha=values["alpha"], beta=values["beta"],
        gamma1=values["gamma1"], gamma2=values["gamma2"],
    )
    costs = CostParams(
        c_query=values["c_query"], c_feedback=values["c_feedback"], c_assess=values["c_assess"],
    )
    return SamplePoint(efficiency, costs, f=values["f"], a=values["a"])


class _AgreementTally:
    __slots__ = ("deviations", "skipped")

    def __init__(self) -> None:
        self.deviations: list[float] = []
        self.skipped = 0

    def add(self, formula_value: float, oracle_value: float) -> None:
        denom = max(abs(oracle_value), 1e-12)
        self.deviations.append(abs(formula_value - oracle_value) / denom)

    def add_pair(self, formula_pair: tuple[float, float], oracle_pair: tuple[float, float]) -> None:
        devs = [
            abs(fv - ov) / max(abs(ov), 1e-12)
            for fv, ov in zip(formula_pair, oracle_pair)
        ]
        self.deviations.append(max(devs))

    def skip(self) -> None:
        self.skipped += 1

    def finish(self, name: str) -> FormulaAgreement:
        n = len(self.deviations)
        if n == 0:
            return FormulaAgreement(name, 0, self.skipped, None, None, VERDICT_NO_DATA)
        within = sum(1 for d in self.deviations if d <= AGREEMENT_TOLERANCE) / n
        verdict = VERDICT_AGREES if within >= AGREEMENT_THRESHOLD else VERDICT_DISAGREES
        return FormulaAgreement(
            name=name,
            n=n,
            skipped=self.skipped,
            median_rel_dev=float(statistics.median(self.deviations)),
            within_tol_fraction=within,
            verdict=verdict,
        )


def _collect_agreement(
    tallies: dict[str, _AgreementTally],
    point: SamplePoint,
    g: float,
    grid: GridSpec,
) -> None:
    eff, costs = point.efficiency, point.costs

    try:
        joint1 = minimize_cost(ModelKind.FEEDBACK_FIRST, eff, costs, g, grid)
    except EconError:
        joint1 = None
    if joint1 is None or "f" in joint1.grid_meta.lower_corner_axes:
        for name in ("a1_star_at_oracle_f", "f1_star_at_oracle_a", "model1_coupled_pair"):
            tallies[name].skip()
    else:
        f1o, a1o = joint1.strategy.f, joint1.strategy.a
        try:
            tallies["a1_star_at_oracle_f"].add(cf.a1_star(f1o, eff, costs), a1o)
        except EconError:
            tallies["a1_star_at_oracle_f"].skip()
        feedback = cf.f1_star(a1o, eff, costs)
        if feedback.corner:
            tallies["f1_star_at_oracle_a"].skip()
        else:
            tallies["f1_star_at_oracle_a"].add(feedback.value, f1o)
        try:
            pair = cf.model1_solve(eff, costs, g)
        except EconError:
            tallies["model1_coupled_pair"].skip()
        else:
            tallies["model1_coupled_pair"].add_pair(
                (pair.strategy.f, pair.strategy.a), (f1o, a1o)
            )

    try:
        joint2 = minimize_cost(ModelKind.FEEDBACK_AFTER, eff, costs, g, grid)
    except EconError:
        joint2 = None
    m2_rows = (
        "a2_star_partial_at_oracle_f",
        "a2_star_full_at_oracle_f",
        "f2_star",
        "f2_star_coupled_at_oracle_a",
        "model2_coupled_pair",
    )
    if joint2 is None or "f" in joint2.grid_meta.lower_corner_axes:
        for name in m2_rows:
            tallies[name].skip()
        return
    f2o, a2o = joint2.strategy.f, joint2.strategy.a
    try:
        tallies["a2_star_partial_at_oracle_f"].add(cf.a2_star_partial(f2o, eff, costs), a2o)
    except EconError:
        tallies["a2_star_partial_at_oracle_f"].skip()
    try:
        depth = cf.a2_star_full(f2o, eff, costs)
    except EconError:
        tallies["a2_star_full_at_oracle_f"].skip()
    else:
        if depth.corner:
            tallies["a2_star_full_at_oracle_f"].skip()
        else:
            tallies["a2_star_full_at_oracle_f"].add(depth.value, a2o)
    try:
        level = cf.f2_star(eff, costs)
    except EconError:
        tallies["f2_star"].skip()
    else:
        if level.corner:
            tallies["f2_star"].skip()
        else:
            tallies["f2_star"].add(level.value, f2o)
    coupled = cf.f2_star_coupled(a2o, eff, costs)
    if coupled.corner:
        tallies["f2_star_coupled_at_oracle_a"].skip()
    else:
        tallies["f2_star_coupled_at_oracle_a"].add(coupled.value, f2o)
    try:
        pair2 = cf.model2_solve_coupled(eff, costs, g)
    except EconError:
        tallies["model2_coupled_pair"].skip()
    else:
        tallies["model2_coupled_pair"].add_pair(
            (pair2.strategy.f, pair2.strategy.a), (f2o, a2o)
        )


def audit_claims(
    region: Optional[ParameterRegion] = None,
    samples: int = 200,
    seed: int = 0,
    g: float = 100.0,
    grid: Optional[GridSpec] = None,
    formula_h: float = 1e-4,
    oracle_h: float = 0.05,
) -> ClaimAuditReport:
    """Audit every registry claim over log-uniform samples from ``region``.

    Each claim is scored on two routes (printed formula, conditioned oracle)
    with central differences. Samples where a route cannot evaluate are
    counted as skipped for that route; samples where the quantity is clamped
    at zero on either side of the perturbation, or the derivative magnitude
    is below 1e-9, count as flat and leave the denominator. The oracle route
    uses a larger relative step (default 0.05) because grid quantisation
    drowns the 1e-4 step the formulas use.

    Deterministic for fixed arguments: each sample gets its own spawned
    random substream, and aggregation order is fixed.
    """
    region = region if region is not None else default_region()
    grid = grid if grid is not None else DEFAULT_AUDIT_GRID
    g = check_gain(g)
    if isinstance(samples, bool) or int(samples) != samples or samples < 1:
        raise DomainError("samples must be an integer >= 1")
    samples = int(samples)

    registry = claim_registry()
    counts = {
        claim.id: {
            "holds_formula": 0, "flat_formula": 0, "skipped_formula": 0, "n_formula": 0,
            "holds_oracle": 0, "flat_oracle": 0, "skipped_oracle": 0, "n_oracle": 0,
        }
        for claim in registry
    }
    counterexamples: dict[str, list[dict]] = {claim.id: [] for claim in registry}
    tallies = {name: _AgreementTally() for name in _AGREEMENT_ROWS}

    streams = np.random.SeedSequence(seed).spawn(samples)
    for stream in streams:
        point = _draw_point(np.random.default_rng(stream), region)

        for claim in registry:
            tally = counts[claim.id]
            formula_sign: Optional[str] = None
            try:
                formula_sign, censored = _diff_once(
                    lambda p, v=claim.formula_variant: _formula_value(v, p),
                    claim.parameter, point, formula_h,
                )
            except EconError:
                tally["skipped_formula"] += 1
            else:
                if censored or formula_sign == SIGN_FLAT:
                    tally["flat_formula"] += 1
                    formula_sign = None
                else:
                    tally["n_formula"] += 1
                    if formula_sign == claim.expected_sign:
                        tally["holds_formula"] += 1

            oracle_sign: Optional[str] = None
            try:
                oracle_sign, censored = _diff_once(
                    lambda p, c=claim: _oracle_component(c, p, g, grid),
                    claim.parameter, point, oracle_h,
                )
            except EconError:
                tally["skipped_oracle"] += 1
            else:
                if censored or oracle_sign == SIGN_FLAT:
                    tally["flat_oracle"] += 1
                    oracle_sign = None
                else:
                    tally["n_oracle"] += 1
                    if oracle_sign == claim.expected_sign:
                        tally["holds_oracle"] += 1

            if (
                formula_sign is not None
                and formula_sign != claim.expected_sign
                and len(counterexamples[claim.id]) < 5
            ):
                counterexamples[claim.id].append({
                    "point": point.to_dict(),
                    "expected": claim.expected_sign,
                    "formula_sign": formula_sign,
                    "oracle_sign": oracle_sign,
                })

        _collect_agreement(tallies, point, g, grid)

    rows = []
    for claim in registry:
        tally = counts[claim.id]
        rows.append(ClaimAudit(
            claim=claim,
            samples=samples,
            n_formula=tally["n_formula"],
            holds_formula=tally["holds_formula"],
            flat_formula=tally["flat_formula"],
            skipped_formula=tally["skipped_formula"],
            n_oracle=tally["n_oracle"],
            holds_oracle=tally["holds_oracle"],
            flat_oracle=tally["flat_oracle"],
            skipped_oracle=tally["skipped_oracle"],
            counterexamples=tuple(counterexamples[claim.id]),
        ))

    meta = {
        "samples": samples,
        "seed": seed,
        "g": g,
        "region": region.to_dict(),
        "grid": grid.to_dict(),
        "formula_h": formula_h,
        "oracle_h": oracle_h,
        "agreement_tolerance": AGREEMENT_TOLERANCE,
        "agreement_threshold": AGREEMENT_THRESHOLD,
    }
    return ClaimAuditReport(
        claims=tuple(rows),
        agreement=tuple(tallies[name].finish(name) for name in _AGREEMENT_ROWS),
        meta=meta,
    )


@dataclass(frozen=True)
class SweepTable:
    """A parameter sweep: column names plus numeric rows, CSV-ready."""

    vary: str
    columns: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]

    def column(self, name: str) -> list[float]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def to_csv(self) -> str:
        def fmt(x: float) -> str:
            return "%.17g" % x

        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(fmt(v) for v in row))
        return "\n".join(lines) + "\n"


_SWEEPABLE = ("alpha", "beta", "gamma1", "gamma2", "c_query", "c_feedback", "c_assess")

_DEFAULT_TARGETS = {
    ModelKind.BASELINE: ("a0_star",),
    ModelKind.FEEDBACK_FIRST: ("m1_f_star", "m1_a_star"),
    ModelKind.FEEDBACK_AFTER: ("f2_star", "a2_star_partial", "a2_star_full"),
}


def _sweep_targets(model: ModelKind, point_eff: EfficiencyParams, point_costs: CostParams,
                   g: float, targets: Sequence[str]) -> dict[str, float]:
    values: dict[str, float] = {}
    if model is ModelKind.FEEDBACK_FIRST and ("m1_f_star" in targets or "m1_a_star" in targets):
        pair = cf.model1_solve(point_eff, point_costs, g)
        values["m1_f_star"] = pair.strategy.f
        values["m1_a_star"] = pair.strategy.a
    for name in targets:
        if name in values:
            continue
        if name == "a0_star":
            values[name] = cf.a0_star(point_eff, point_costs)
        elif name == "f2_star":
            values[name] = cf.f2_star(point_eff, point_costs).value
        elif name == "a2_star_partial":
            level = cf.f2_star(point_eff, point_costs).value
            values[name] = cf.a2_star_partial(level, point_eff, point_costs)
        elif name == "a2_star_full":
            level = cf.f2_star(point_eff, point_costs).value
            values[name] = cf.a2_star_full(level, point_eff, point_costs).value
        else:
            raise DomainError(f"unknown sweep target {name!r} for model {model.code}")
    return values


def sweep(
    model: ModelKind,
    efficiency: EfficiencyParams,
    costs: CostParams,
    vary: str,
    lo: float,
    hi: float,
    steps: int,
    g: float,
    targets: Optional[Sequence[str]] = None,
    grid: Optional[GridSpec] = None,
) -> SweepTable:
    """Closed-form quantities and the oracle optimum along one parameter axis.

    The varied parameter takes ``steps`` equally spaced values in
    ``[lo, hi]``; all other parameters stay at their given values. Errors
    from validation or from formulas without an interior optimum propagate,
    since a sweep crossing out of the domain is a caller mistake, not data.
    """
    if not isinstance(model, ModelKind):
        model = ModelKind.from_code(model)
    if vary not in _SWEEPABLE:
        raise DomainError(f"vary must be one of {', '.join(_SWEEPABLE)}")
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise DomainError("sweep requires finite lo < hi")
    if isinstance(steps, bool) or int(steps) != steps or steps < 2:
        raise DomainError("steps must be an integer >= 2")
    g = check_gain(g)
    steps = int(steps)
    grid = grid if grid is not None else GridSpec()
    target_names = tuple(targets) if targets is not None else _DEFAULT_TARGETS[model]

    base_point = SamplePoint(efficiency, costs, f=0.0, a=1.0)
    columns = (vary,) + target_names + ("oracle_f", "oracle_a", "total_cost", "achieved_gain")
    rows = []
    for value in np.linspace(lo, hi, steps):
        value = float(value)
        point = base_point.with_param(vary, value)
        eff, cost_params = point.efficiency, point.costs
        row_values = _sweep_targets(model, eff, cost_params, g, target_names)
        solution = minimize_cost(model, eff, cost_params, g, grid)
        row = (value,) + tuple(row_values[name] for name in target_names) + (
            solution.strategy.f,
            solution.strategy.a,
            solution.total_cost,
            solution.achieved_gain,
        )
        rows.append(row)
    return SweepTable(vary=vary, columns=columns, rows=tuple(rows))
