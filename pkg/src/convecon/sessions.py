"""Synthetic session logs, parameter estimation, and the viability call.

A session is one user following a fixed strategy: the strategy's counts are
unrolled into the model's action grammar (query / feedback / assess), costs
are booked per action, and the session's gain gets one multiplicative
log-normal shock. Estimators run ordinary least squares the other way:
gain parameters from log-linear structure, unit costs from action counts.
``viability`` asks the oracle whether either feedback style actually beats
the plain query-assess loop for a given gain target.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .core import (
    CostParams,
    EfficiencyParams,
    ModelKind,
    Strategy,
    check_gain,
    cost,
    gain,
    validate,
)
from .errors import DomainError, InsufficientDesign, Unbounded
from .oracle import GridSpec, OptimalStrategy, minimize_cost

__all__ = [
    "ActionKind",
    "SessionAction",
    "SessionLog",
    "simulate",
    "prorate_gain",
    "EstimationResult",
    "fit_gain_params",
    "fit_cost_params",
    "write_jsonl",
    "read_jsonl",
    "Recommendation",
    "viability",
]


class ActionKind(str, Enum):
    QUERY = "query"
    FEEDBACK = "feedback"
    ASSESS = "assess"


@dataclass(frozen=True)
class SessionAction:
    """One logged action: position in the session, kind, and its price."""

    step: int
    kind: ActionKind
    unit_cost: float

    def to_dict(self) -> dict:
        return {"step": self.step, "kind": self.kind.value, "unit_cost": self.unit_cost}


@dataclass(frozen=True)
class SessionLog:
    """One simulated session: the strategy, its action trace, and outcomes.

    ``realized_cost`` is deterministic bookkeeping (it equals the strategy's
    cost formula; the per-action unit costs sum to the same number).
    ``realized_gain`` carries the session's single log-normal shock.
    ``stream_id`` records which seed-derived substream produced the shock;
    it is runtime bookkeeping and is not serialized.
    """

    session_id: int
    model: ModelKind
    strategy: Strategy
    actions: tuple[SessionAction, ...]
    realized_gain: float
    realized_cost: float
    stream_id: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "model": self.model.code,
            "q": self.strategy.q,
            "f": self.strategy.f,
            "a": self.strategy.a,
            "realized_gain": self.realized_gain,
            "realized_cost": self.realized_cost,
            "actions": [action.to_dict() for action in self.actions],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object], *, source: str = "session") -> "SessionLog":
        required = ("session_id", "model", "q", "f", "a", "realized_gain", "realized_cost", "actions")
        missing = [k for k in required if k not in data]
        if missing:
            raise DomainError(f"{source}: missing field(s): {', '.join(missing)}")
        unknown = sorted(set(data) - set(required))
        if unknown:
            raise DomainError(f"{source}: unknown field(s): {', '.join(unknown)}")
        model = ModelKind.from_code(str(data["model"]))
        strategy = Strategy(model, float(data["q"]), float(data["f"]), float(data["a"]))
        raw_actions = data["actions"]
        if not isinstance(raw_actions, Sequence) or isinstance(raw_actions, (str, bytes)):
            raise DomainError(f"{source}: actions must be a list")
        actions = []
        for entry in raw_actions:
            try:
                kind = ActionKind(str(entry["kind"]))
                actions.append(SessionAction(int(entry["step"]), kind, float(entry["unit_cost"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise DomainError(f"{source}: bad action entry ({exc})") from None
        return cls(
            session_id=int(data["session_id"]),
            model=model,
            strategy=strategy,
            actions=tuple(actions),
            realized_gain=float(data["realized_gain"]),
            realized_cost=float(data["realized_cost"]),
        )


def _unrolled_actions(strategy: Strategy, costs: CostParams) -> tuple[SessionAction, ...]:
    """Expand integer counts into the model's action grammar.

    Baseline: per query, the query then ``a`` assessments. Feedback-first:
    the feedback rounds come between the query and its assessments.
    Feedback-after: assessments happen once after the query and again after
    every feedback round.
    """
    q, f, a = int(strategy.q), int(strategy.f), int(strategy.a)
    prices = {
        ActionKind.QUERY: costs.c_query,
        ActionKind.FEEDBACK: costs.c_feedback,
        ActionKind.ASSESS: costs.c_assess,
    }
    kinds: list[ActionKind] = []
    for _ in range(q):
        kinds.append(ActionKind.QUERY)
        if strategy.model is ModelKind.FEEDBACK_FIRST:
            kinds.extend([ActionKind.FEEDBACK] * f)
            kinds.extend([ActionKind.ASSESS] * a)
        elif strategy.model is ModelKind.FEEDBACK_AFTER:
            kinds.extend([ActionKind.ASSESS] * a)
            for _ in range(f):
                kinds.append(ActionKind.FEEDBACK)
                kinds.extend([ActionKind.ASSESS] * a)
        else:
            kinds.extend([ActionKind.ASSESS] * a)
    return tuple(
        SessionAction(step=i, kind=kind, unit_cost=prices[kind])
        for i, kind in enumerate(kinds)
    )


def simulate(
    strategy: Strategy,
    efficiency: EfficiencyParams,
    costs: CostParams,
    *,
    sigma: float = 0.0,
    seed: int = 0,
    n: int = 1,
) -> list[SessionLog]:
    """Generate ``n`` independent session logs for one integer strategy.

    Every session follows the same action trace (costs are deterministic);
    only the gain shock differs. Each session draws from its own substream
    spawned off ``seed``, so logs are bit-identical for identical arguments
    and session ``i`` does not change when ``n`` grows past it.
    """
    validate(efficiency, costs)
    if not strategy.is_integer:
        raise DomainError("simulate requires an integer strategy (whole q, f, a)")
    if strategy.q < 1 or strategy.a < 1:
        raise DomainError("simulate requires q >= 1 and a >= 1")
    if not math.isfinite(sigma) or sigma < 0.0:
        raise DomainError("sigma must be >= 0")
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError("n must be an integer >= 1")
    n = int(n)

    actions = _unrolled_actions(strategy, costs)
    base_gain = gain(strategy, efficiency)
    base_cost = cost(strategy, costs)

    logs = []
    for i, stream in enumerate(np.random.SeedSequence(seed).spawn(n)):
        rng = np.random.default_rng(stream)
        shock = rng.normal(0.0, sigma)
        logs.append(SessionLog(
            session_id=i,
            model=strategy.model,
            strategy=strategy,
            actions=actions,
            realized_gain=base_gain * math.exp(shock),
            realized_cost=base_cost,
            stream_id=i,
        ))
    return logs


def prorate_gain(log: SessionLog) -> list[float]:
    """Cumulative gain spread uniformly over the action trace.

    Display-only: the models say nothing about when gain accrues inside a
    session, so this is an even split, not a claim about the process.
    """
    total = len(log.actions)
    return [log.realized_gain * (i + 1) / total for i in range(total)]


@dataclass(frozen=True)
class EstimationResult:
    """Least-squares estimates from session logs (gain or cost side).

    Whichever side was not fitted stays ``None``. ``condition_warning``
    means the design matrix was rank-deficient (to 1e-8) or a cost estimate
    came out negative; ``note`` spells out the specific ambiguity when one
    is recognised.
    """

    alpha_hat: Optional[float] = None
    beta_hat: Optional[float] = None
    gamma_hat: Optional[float] = None
    cq_hat: Optional[float] = None
    cf_hat: Optional[float] = None
    ca_hat: Optional[float] = None
    residual_rms: float = 0.0
    n_sessions: int = 0
    condition_warning: bool = False
    note: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "beta_hat": self.beta_hat,
            "gamma_hat": self.gamma_hat,
            "cq_hat": self.cq_hat,
            "cf_hat": self.cf_hat,
            "ca_hat": self.ca_hat,
            "residual_rms": self.residual_rms,
            "n_sessions": self.n_sessions,
            "condition_warning": self.condition_warning,
            "note": self.note,
        }


def _shared_model(logs: Sequence[SessionLog]) -> ModelKind:
    if not logs:
        raise DomainError("no session logs")
    models = {log.model for log in logs}
    if len(models) > 1:
        raise DomainError("logs must share one model")
    return next(iter(models))


def _design_points(logs: Sequence[SessionLog]) -> set[tuple[float, float, float]]:
    return {(log.strategy.q, log.strategy.f, log.strategy.a) for log in logs}


def _lstsq(design: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, float, bool]:
    coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=1e-8)
    fitted = design @ coef
    rms = float(np.sqrt(np.mean((target - fitted) ** 2)))
    return coef, rms, rank < design.shape[1]


def fit_gain_params(
    logs: Sequence[SessionLog],
    model: Optional[ModelKind] = None,
) -> EstimationResult:
    """Estimate the gain exponents from logs by log-space least squares.

    The gain expressions are linear in their exponents after taking logs:
    the baseline regresses log gain on (log q, log a); feedback-first adds
    the interaction f·log q, whose coefficient is the per-round exponent
    boost; feedback-after adds log(1+f) instead. ``model`` is optional and
    only cross-checked against the logs.
    """
    shared = _shared_model(logs)
    if model is not None:
        wanted = model if isinstance(model, ModelKind) else ModelKind.from_code(model)
        if wanted is not shared:
            raise DomainError(f"logs are {shared.code}, not {wanted.code}")

    rows = []
    target = []
    for log in logs:
        s = log.strategy
        if log.realized_gain <= 0.0:
            raise DomainError("realized_gain must be positive to fit in log space")
        if s.q <= 0.0 or s.a <= 0.0:
            raise DomainError("strategies must have positive q and a to fit in log space")
        lq, la = math.log(s.q), math.log(s.a)
        if shared is ModelKind.BASELINE:
            rows.append([lq, la])
        elif shared is ModelKind.FEEDBACK_FIRST:
            rows.append([lq, s.f * lq, la])
        else:
            rows.append([lq, math.log1p(s.f), la])
        target.append(math.log(log.realized_gain))

    k = len(rows[0])
    points = _design_points(logs)
    if len(points) < k:
        raise InsufficientDesign(
            f"{len(points)} distinct design point(s) cannot identify {k} gain coefficients"
        )

    coef, rms, deficient = _lstsq(np.asarray(rows), np.asarray(target))
    note = None
    if deficient and shared is ModelKind.FEEDBACK_FIRST and len({log.strategy.f for log in logs}) == 1:
        note = "alpha and gamma1 are unidentifiable: feedback level is constant across sessions"

    if shared is ModelKind.BASELINE:
        alpha_hat, beta_hat, gamma_hat = float(coef[0]), float(coef[1]), None
    else:
        alpha_hat, gamma_hat, beta_hat = float(coef[0]), float(coef[1]), float(coef[2])
    return EstimationResult(
        alpha_hat=alpha_hat,
        beta_hat=beta_hat,
        gamma_hat=gamma_hat,
        residual_rms=rms,
        n_sessions=len(logs),
        condition_warning=deficient,
        note=note,
    )


def fit_cost_params(logs: Sequence[SessionLog]) -> EstimationResult:
    """Estimate unit costs from realized costs by linear least squares.

    Regressors are the action counts implied by each strategy (for the
    feedback-after model the assessed total is q·(1+f)·a). Negative
    estimates are reported as-is with ``condition_warning`` — a wrong sign
    is evidence of misspecification, and hiding it would defeat the fit.
    """
    shared = _shared_model(logs)
    rows = []
    target = []
    for log in logs:
        s = log.strategy
        if shared is ModelKind.BASELINE:
            rows.append([s.q, s.q * s.a])
        elif shared is ModelKind.FEEDBACK_FIRST:
            rows.append([s.q, s.q * s.f, s.q * s.a])
        else:
            rows.append([s.q, s.q * s.f, s.q * (1.0 + s.f) * s.a])
        target.append(log.realized_cost)

    k = len(rows[0])
    points = _design_points(logs)
    if len(points) < k:
        raise InsufficientDesign(
            f"{len(points)} distinct design point(s) cannot identify {k} unit costs"
        )

    coef, rms, deficient = _lstsq(np.asarray(rows), np.asarray(target))
    note = None
    if deficient and shared is not ModelKind.BASELINE:
        levels = {log.strategy.f for log in logs}
        if levels == {0.0}:
            note = "c_feedback is unidentifiable: no feedback actions in the logs"
        elif len(levels) == 1:
            note = "c_query and c_feedback are unidentifiable: feedback level is constant across sessions"

    if shared is ModelKind.BASELINE:
        cq_hat, cf_hat, ca_hat = float(coef[0]), None, float(coef[1])
    else:
        cq_hat, cf_hat, ca_hat = float(coef[0]), float(coef[1]), float(coef[2])
    negative = any(v is not None and v < 0.0 for v in (cq_hat, cf_hat, ca_hat))
    return EstimationResult(
        cq_hat=cq_hat,
        cf_hat=cf_hat,
        ca_hat=ca_hat,
        residual_rms=rms,
        n_sessions=len(logs),
        condition_warning=deficient or negative,
        note=note,
    )


def write_jsonl(logs: Iterable[SessionLog], target: Union[str, Path, IO[str]]) -> None:
    """Write logs as JSON Lines (one session object per line)."""
    from ._jsonio import dump_line

    lines = "".join(dump_line(log.to_dict()) for log in logs)
    if hasattr(target, "write"):
        target.write(lines)
    else:
        Path(target).write_text(lines)


def read_jsonl(source: Union[str, Path, IO[str]]) -> list[SessionLog]:
    """Read session logs written by :func:`write_jsonl`."""
    if hasattr(source, "read"):
        text = source.read()
        name = getattr(source, "name", "session log")
    else:
        path = Path(source)
        try:
            text = path.read_text()
        except FileNotFoundError:
            raise DomainError(f"session log file not found: {path}") from None
        name = str(path)
    logs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DomainError(f"{name}:{lineno}: not valid JSON ({exc.msg})") from None
        logs.append(SessionLog.from_dict(data, source=f"{name}:{lineno}"))
    return logs


_FEEDBACK_MODELS = (ModelKind.FEEDBACK_FIRST, ModelKind.FEEDBACK_AFTER)


@dataclass(frozen=True)
class Recommendation:
    """The viability verdict: per-model optimal costs and the model to use.

    ``cheapest`` is the recommendation itself — the baseline unless a
    feedback model is worthwhile, where worthwhile means the oracle kept a
    strictly positive feedback level (not the grid floor) and undercut the
    baseline's optimal cost by more than 1e-6 relative. Ties therefore go
    to the baseline, the simplest interaction; between the two feedback
    models the cheaper one wins. Models whose search is unbounded are
    listed in ``not_comparable`` with no cost.
    """

    cheapest: ModelKind
    solutions: Mapping[str, Optional[OptimalStrategy]]
    worthwhile: Mapping[str, bool]
    not_comparable: tuple[str, ...]

    def cost_of(self, model: Union[str, ModelKind]) -> Optional[float]:
        code = model.code if isinstance(model, ModelKind) else str(model)
        solution = self.solutions[code]
        return None if solution is None else solution.total_cost

    def to_dict(self) -> dict:
        return {
            "cheapest": self.cheapest.code,
            "costs": {code: self.cost_of(code) for code in ("m0", "m1", "m2")},
            "worthwhile": dict(self.worthwhile),
            "not_comparable": list(self.not_comparable),
            "strategies": {
                code: None if sol is None else {
                    "q": sol.strategy.q, "f": sol.strategy.f, "a": sol.strategy.a,
                }
                for code, sol in self.solutions.items()
            },
        }


def viability(
    efficiency: EfficiencyParams,
    costs: CostParams,
    g: float,
    grid: Optional[GridSpec] = None,
) -> Recommendation:
    """Is feedback worth it? Oracle-solve all three models and compare.

    A feedback model is never recommended on a corner solution: if the
    oracle pins its feedback level at the grid floor, that model's best
    play is effectively "don't give feedback", and the baseline already is
    that play without the machinery.
    """
    validate(efficiency, costs)
    g = check_gain(g)
    grid = grid if grid is not None else GridSpec()

    baseline = minimize_cost(ModelKind.BASELINE, efficiency, costs, g, grid)
    solutions: dict[str, Optional[OptimalStrategy]] = {ModelKind.BASELINE.code: baseline}
    not_comparable = []
    for model in _FEEDBACK_MODELS:
        try:
            solutions[model.code] = minimize_cost(model, efficiency, costs, g, grid)
        except Unbounded:
            solutions[model.code] = None
            not_comparable.append(model.code)

    worthwhile = {}
    for model in _FEEDBACK_MODELS:
        solution = solutions[model.code]
        if solution is None:
            worthwhile[model.code] = False
            continue
        positive_feedback = (
            "f" not in solution.grid_meta.lower_corner_axes
            and solution.strategy.f > grid.min * (1.0 + 1e-9)
        )
        undercuts = solution.total_cost < baseline.total_cost * (1.0 - 1e-6)
        worthwhile[model.code] = positive_feedback and undercuts

    cheapest = ModelKind.BASELINE
    best_cost = baseline.total_cost
    for model in _FEEDBACK_MODELS:
        solution = solutions[model.code]
        if solution is None or not worthwhile[model.code]:
            continue
        if solution.total_cost < best_cost:
            cheapest = model
            best_cost = solution.total_cost

    return Recommendation(
        cheapest=cheapest,
        solutions=solutions,
        worthwhile=worthwhile,
        not_comparable=tuple(not_comparable),
    )
