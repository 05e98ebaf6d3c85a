"""Gain and cost primitives for three conversational interaction models.

A session consists of ``q`` query rounds. Depending on the model, each round
may also carry relevance feedback and carries some number of result
assessments:

``m0`` (baseline)
    Each of the ``q`` queries is followed by ``a`` assessments. Gain is
    Cobb-Douglas in the two counts, ``q**alpha * a**beta``.

``m1`` (feedback before results)
    Each query is preceded by ``f`` feedback utterances that sharpen the query
    before results come back. Feedback lifts the query exponent linearly:
    the gain is ``q**(gamma1 * f + alpha) * a**beta``. Feedback touches no
    result lists, so assessment effort is unchanged.

``m2`` (feedback after results)
    Each query is followed by an assessment pass, then ``f`` feedback rounds,
    each triggering a fresh result list and another assessment pass. Gain is
    ``q**alpha * (1 + f)**gamma2 * a**beta`` and assessment effort scales by
    ``(1 + f)``.

Costs are linear in action counts with per-action prices ``c_query``,
``c_feedback`` and ``c_assess``. Setting ``f = 0`` collapses either feedback
model onto the baseline, in gain and in cost, which several tests and the
acceptance suite rely on.

Counts are modelled as non-negative reals so the optimisation layer can work
on a continuous relaxation; integer rounding is handled separately by the
oracle module.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, NamedTuple, Union

from .errors import DomainError

__all__ = [
    "ModelKind",
    "EfficiencyParams",
    "CostParams",
    "ValidatedParams",
    "QueryExponent",
    "Strategy",
    "gamma_fn",
    "gain",
    "cost",
    "gain_value",
    "cost_value",
    "validate",
    "check_gain",
    "load_params",
    "params_to_mapping",
    "PARAM_FIELDS",
]


class ModelKind(str, Enum):
    """The three interaction models, keyed by their short codes."""

    BASELINE = "m0"
    FEEDBACK_FIRST = "m1"
    FEEDBACK_AFTER = "m2"

    @classmethod
    def from_code(cls, code: str) -> "ModelKind":
        try:
            return cls(code)
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise DomainError(f"unknown model code {code!r}; expected one of {valid}") from None

    @property
    def code(self) -> str:
        return self.value

    @property
    def uses_feedback(self) -> bool:
        return self is not ModelKind.BASELINE


def _require_finite(name: str, value: float) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise DomainError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite")
    return value


@dataclass(frozen=True)
class EfficiencyParams:
    """Gain-side elasticities.

    ``alpha`` and ``beta`` are the query and assessment exponents, both in
    ``(0, 1]``. ``gamma1`` (>= 0) is the per-feedback lift applied to the
    query exponent in model m1. ``gamma2`` (in ``[0, 1]``) is the exponent on
    ``1 + f`` in model m2. The feedback parameters default to zero so a
    baseline-only caller never has to mention them.
    """

    alpha: float
    beta: float
    gamma1: float = 0.0
    gamma2: float = 0.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma1", "gamma2"):
            object.__setattr__(self, name, _require_finite(name, getattr(self, name)))
        if not self.alpha > 0.0:
            raise DomainError("alpha must be > 0")
        if self.alpha > 1.0:
            raise DomainError("alpha must be <= 1")
        if not self.beta > 0.0:
            raise DomainError("beta must be > 0")
        if self.beta > 1.0:
            raise DomainError("beta must be <= 1")
        if self.gamma1 < 0.0:
            raise DomainError("gamma1 must be >= 0")
        if not 0.0 <= self.gamma2 <= 1.0:
            raise DomainError("gamma2 must be in [0, 1]")


@dataclass(frozen=True)
class CostParams:
    """Per-action prices; each must be a positive finite number."""

    c_query: float
    c_feedback: float
    c_assess: float

    def __post_init__(self) -> None:
        for name in ("c_query", "c_feedback", "c_assess"):
            value = _require_finite(name, getattr(self, name))
            object.__setattr__(self, name, value)
            if not value > 0.0:
                raise DomainError(f"{name} must be > 0")


class ValidatedParams(NamedTuple):
    efficiency: EfficiencyParams
    costs: CostParams


def validate(efficiency: EfficiencyParams, costs: CostParams) -> ValidatedParams:
    """Re-check both parameter bundles and return them as one unit.

    Construction already validates, so this mainly guards values smuggled in
    past ``__init__`` and gives callers a single checkpoint to hold on to.
    """
    if not isinstance(efficiency, EfficiencyParams):
        raise DomainError("efficiency must be an EfficiencyParams instance")
    if not isinstance(costs, CostParams):
        raise DomainError("costs must be a CostParams instance")
    efficiency = EfficiencyParams(efficiency.alpha, efficiency.beta, efficiency.gamma1, efficiency.gamma2)
    costs = CostParams(costs.c_query, costs.c_feedback, costs.c_assess)
    return ValidatedParams(efficiency, costs)


class QueryExponent(float):
    """Effective query exponent; a plain float plus a convexity flag.

    Values above 1 mean gain grows super-linearly in the number of queries,
    a regime where cost minimisation against a gain floor can become
    unbounded. The flag gives callers a cheap way to notice that.
    """

    __slots__ = ()

    @property
    def superlinear(self) -> bool:
        return float(self) > 1.0


def gamma_fn(f: float, efficiency: EfficiencyParams) -> QueryExponent:
    """Effective query exponent in model m1: ``gamma1 * f + alpha``.

    With ``f = 0`` this is exactly ``alpha``, so m1 gain reduces to the
    baseline bitwise, not just approximately.
    """
    f = _require_finite("f", f)
    if f < 0.0:
        raise DomainError("f must be >= 0")
    return QueryExponent(efficiency.gamma1 * f + efficiency.alpha)


@dataclass(frozen=True)
class Strategy:
    """An action plan: model plus (queries, feedback per query, assessments).

    Counts are continuous and non-negative. A baseline strategy must carry
    ``f = 0``; the feedback models accept any ``f >= 0``.
    """

    model: ModelKind
    q: float
    f: float
    a: float

    def __post_init__(self) -> None:
        if not isinstance(self.model, ModelKind):
            object.__setattr__(self, "model", ModelKind.from_code(self.model))
        for name in ("q", "f", "a"):
            value = _require_finite(name, getattr(self, name))
            object.__setattr__(self, name, value)
            if value < 0.0:
                raise DomainError(f"{name} must be >= 0")
        if self.model is ModelKind.BASELINE and self.f != 0.0:
            raise DomainError("baseline strategies must have f = 0")

    @property
    def is_integer(self) -> bool:
        return all(float(v).is_integer() for v in (self.q, self.f, self.a))

    def replace_counts(self, q: float | None = None, f: float | None = None, a: float | None = None) -> "Strategy":
        return Strategy(
            self.model,
            self.q if q is None else q,
            self.f if f is None else f,
            self.a if a is None else a,
        )


def gain_value(model: ModelKind, q, f, a, efficiency: EfficiencyParams):
    """Gain for raw counts; works elementwise on numpy arrays too.

    Exponent arithmetic is arranged so that ``f = 0`` gives the exact
    baseline expression (``gamma1 * 0 + alpha`` is ``alpha``, and
    ``(1 + 0) ** gamma2`` is exactly 1.0).
    """
    if model is ModelKind.BASELINE:
        return q ** efficiency.alpha * a ** efficiency.beta
    if model is ModelKind.FEEDBACK_FIRST:
        return q ** (efficiency.gamma1 * f + efficiency.alpha) * a ** efficiency.beta
    if model is ModelKind.FEEDBACK_AFTER:
        return q ** efficiency.alpha * (1.0 + f) ** efficiency.gamma2 * a ** efficiency.beta
    raise DomainError(f"unknown model {model!r}")


def cost_value(model: ModelKind, q, f, a, costs: CostParams):
    """Session cost for raw counts; elementwise on numpy arrays too.

    Each term multiplies the integer action count out first and applies the
    unit price last, so integer strategies with representable prices incur
    no avoidable rounding.
    """
    if model is ModelKind.BASELINE:
        return q * costs.c_query + (q * a) * costs.c_assess
    if model is ModelKind.FEEDBACK_FIRST:
        return q * costs.c_query + (q * f) * costs.c_feedback + (q * a) * costs.c_assess
    if model is ModelKind.FEEDBACK_AFTER:
        return (
            q * costs.c_query
            + (q * f) * costs.c_feedback
            + (q * (1.0 + f) * a) * costs.c_assess
        )
    raise DomainError(f"unknown model {model!r}")


def gain(strategy: Strategy, efficiency: EfficiencyParams) -> float:
    """Expected gain of a strategy under the given elasticities."""
    return float(gain_value(strategy.model, strategy.q, strategy.f, strategy.a, efficiency))


def cost(strategy: Strategy, costs: CostParams) -> float:
    """Total session cost of a strategy under the given prices."""
    return float(cost_value(strategy.model, strategy.q, strategy.f, strategy.a, costs))


def check_gain(g: float) -> float:
    """Validate a target gain level (must be a positive finite number)."""
    g = _require_finite("gain target", g)
    if not g > 0.0:
        raise DomainError("gain target must be > 0")
    return g


PARAM_FIELDS = ("alpha", "beta", "gamma1", "gamma2", "c_query", "c_feedback", "c_assess")

_EFFICIENCY_FIELDS = PARAM_FIELDS[:4]
_COST_FIELDS = PARAM_FIELDS[4:]


def params_from_mapping(data: Mapping[str, object], *, source: str = "params") -> ValidatedParams:
    """Build validated parameters from a plain mapping with exactly the
    seven canonical keys. Unknown and missing keys are both rejected so a
    typo cannot silently fall back to a default."""
    if not isinstance(data, Mapping):
        raise DomainError(f"{source}: expected a JSON object")
    unknown = sorted(set(data) - set(PARAM_FIELDS))
    if unknown:
        raise DomainError(f"{source}: unknown field(s): {', '.join(unknown)}")
    missing = [k for k in PARAM_FIELDS if k not in data]
    if missing:
        raise DomainError(f"{source}: missing field(s): {', '.join(missing)}")
    values = {}
    for key in PARAM_FIELDS:
        raw = data[key]
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise DomainError(f"{source}: {key} must be a number, got {raw!r}")
        values[key] = float(raw)
    efficiency = EfficiencyParams(**{k: values[k] for k in _EFFICIENCY_FIELDS})
    costs = CostParams(**{k: values[k] for k in _COST_FIELDS})
    return ValidatedParams(efficiency, costs)


def load_params(path: Union[str, Path]) -> ValidatedParams:
    """Load and validate a parameter file (JSON object, seven keys)."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise DomainError(f"params file not found: {path}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    return params_from_mapping(data, source=str(path))


def params_to_mapping(params: ValidatedParams) -> dict:
    """Inverse of :func:`params_from_mapping`, handy for echoing configs."""
    eff, costs = params
    return {
        "alpha": eff.alpha,
        "beta": eff.beta,
        "gamma1": eff.gamma1,
        "gamma2": eff.gamma2,
        "c_query": costs.c_query,
        "c_feedback": costs.c_feedback,
        "c_assess": costs.c_assess,
    }
