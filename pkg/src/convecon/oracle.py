"""Brute-force reference optimiser and first-order diagnostics.

The closed forms in :mod:`convecon.closed_form` are only as good as the
derivations behind them, so this module provides an independent route to the
same answers: eliminate the query count analytically through the gain floor
(cost is increasing in ``q``, so the floor always binds), then grid-search
the remaining one or two axes on a logarithmic lattice with a few zoom-in
refinement rounds.

The oracle also reports stationarity diagnostics (:func:`kkt_residual`) and
an integer neighbourhood search (:func:`integer_refine`) for callers who need
whole-number action counts rather than the continuous relaxation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .closed_form import ClosedFormSolution, recover_q_value
from .core import (
    CostParams,
    EfficiencyParams,
    ModelKind,
    Strategy,
    check_gain,
    cost,
    cost_value,
    gain,
)
from .errors import DomainError, Infeasible, Unbounded

__all__ = [
    "GridSpec",
    "GridMeta",
    "KktReport",
    "OptimalStrategy",
    "IntegerRefinement",
    "lagrangian",
    "kkt_residual",
    "minimize_cost",
    "integer_refine",
]

_GRID_FIELDS = ("min", "max", "points", "refinements")


@dataclass(frozen=True)
class GridSpec:
    """Search-box description for the brute-force oracle.

    ``min``/``max`` bound every searched axis (feedback and assessment
    counts); ``points`` is the lattice size per axis per round, and
    ``refinements`` is how many times the window shrinks (a tenth of its
    log-span, centred on the incumbent, clipped to the global box) after the
    initial pass.
    """

    min: float = 1e-3
    max: float = 1e4
    points: int = 200
    refinements: int = 3

    def __post_init__(self) -> None:
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise DomainError("grid bounds must be finite")
        if not 0.0 < self.min < self.max:
            raise DomainError("grid requires 0 < min < max")
        if isinstance(self.points, bool) or int(self.points) != self.points or self.points < 2:
            raise DomainError("grid points must be an integer >= 2")
        if (
            isinstance(self.refinements, bool)
            or int(self.refinements) != self.refinements
            or self.refinements < 0
        ):
            raise DomainError("grid refinements must be an integer >= 0")
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "refinements", int(self.refinements))

    @classmethod
    def from_mapping(cls, data: Mapping[str, object], *, source: str = "grid") -> "GridSpec":
        if not isinstance(data, Mapping):
            raise DomainError(f"{source}: expected a JSON object")
        unknown = sorted(set(data) - set(_GRID_FIELDS))
        if unknown:
            raise DomainError(f"{source}: unknown field(s): {', '.join(unknown)}")
        kwargs = {}
        for key in _GRID_FIELDS:
            if key in data:
                value = data[key]
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise DomainError(f"{source}: {key} must be a number, got {value!r}")
                kwargs[key] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "min": self.min,
            "max": self.max,
            "points": self.points,
            "refinements": self.refinements,
        }


@dataclass(frozen=True)
class GridMeta:
    """Where the search ended up: final windows and corner contacts."""

    points: int
    refinements: int
    a_window: tuple[float, float]
    f_window: Optional[tuple[float, float]] = None
    lower_corner_axes: tuple[str, ...] = ()
    pinned_axes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        out = {
            "points": self.points,
            "refinements": self.refinements,
            "a_window": list(self.a_window),
            "lower_corner_axes": list(self.lower_corner_axes),
        }
        if self.f_window is not None:
            out["f_window"] = list(self.f_window)
        if self.pinned_axes:
            out["pinned_axes"] = list(self.pinned_axes)
        return out


@dataclass(frozen=True)
class KktReport:
    """Normalised stationarity residuals at a candidate strategy.

    The multiplier is read off the assessment axis (whose residual is then
    zero by construction) and the remaining first-order conditions are
    checked against it. Residuals are scaled by the Euclidean norm of the
    cost gradient so the numbers are comparable across instances.
    ``constraint_rel_gap`` is how far realised gain sits from the floor,
    relative to the floor.
    """

    lam: float
    residual_q: float
    residual_f: float
    residual_max: float
    constraint_rel_gap: float

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "residual_q": self.residual_q,
            "residual_f": self.residual_f,
            "residual_max": self.residual_max,
            "constraint_rel_gap": self.constraint_rel_gap,
        }


@dataclass(frozen=True)
class IntegerRefinement:
    """An all-integer strategy meeting the gain floor, with its outcomes."""

    strategy: Strategy
    achieved_gain: float
    total_cost: float

    def to_dict(self) -> dict:
        return {
            "q": self.strategy.q,
            "f": self.strategy.f,
            "a": self.strategy.a,
            "achieved_gain": self.achieved_gain,
            "total_cost": self.total_cost,
        }


@dataclass(frozen=True)
class OptimalStrategy:
    """Oracle output: the incumbent strategy plus its diagnostics."""

    strategy: Strategy
    achieved_gain: float
    total_cost: float
    kkt: KktReport
    grid_meta: GridMeta
    integer_neighbor: Optional[IntegerRefinement] = None

    def with_integer(self, neighbor: IntegerRefinement) -> "OptimalStrategy":
        return replace(self, integer_neighbor=neighbor)

    def to_dict(self) -> dict:
        out = {
            "model": self.strategy.model.code,
            "q": self.strategy.q,
            "f": self.strategy.f,
            "a": self.strategy.a,
            "achieved_gain": self.achieved_gain,
            "total_cost": self.total_cost,
            "kkt": self.kkt.to_dict(),
            "grid": self.grid_meta.to_dict(),
        }
        if self.integer_neighbor is not None:
            out["integer"] = self.integer_neighbor.to_dict()
        return out


def lagrangian(
    strategy: Strategy,
    efficiency: EfficiencyParams,
    costs: CostParams,
    g: float,
    lam: float,
) -> float:
    """Cost minus ``lam`` times the gain surplus over the floor."""
    g = check_gain(g)
    return cost(strategy, costs) - lam * (gain(strategy, efficiency) - g)


def _gradients(strategy: Strategy, efficiency: EfficiencyParams, costs: CostParams):
    """Analytic (cost, gain) gradients in (q, f, a) order."""
    model, q, f, a = strategy.model, strategy.q, strategy.f, strategy.a
    if q <= 0.0 or a <= 0.0:
        raise DomainError("gradients require q > 0 and a > 0")
    value = gain(strategy, efficiency)
    if model is ModelKind.BASELINE:
        cost_grad = (costs.c_query + a * costs.c_assess, 0.0, q * costs.c_assess)
        gain_grad = (efficiency.alpha * value / q, 0.0, efficiency.beta * value / a)
    elif model is ModelKind.FEEDBACK_FIRST:
        cost_grad = (
            costs.c_query + f * costs.c_feedback + a * costs.c_assess,
            q * costs.c_feedback,
            q * costs.c_assess,
        )
        exponent = efficiency.gamma1 * f + efficiency.alpha
        gain_grad = (
            exponent * value / q,
            efficiency.gamma1 * math.log(q) * value,
            efficiency.beta * value / a,
        )
    elif model is ModelKind.FEEDBACK_AFTER:
        cost_grad = (
            costs.c_query + f * costs.c_feedback + (1.0 + f) * a * costs.c_assess,
            q * costs.c_feedback + q * a * costs.c_assess,
            q * (1.0 + f) * costs.c_assess,
        )
        gain_grad = (
            efficiency.alpha * value / q,
            efficiency.gamma2 * value / (1.0 + f),
            efficiency.beta * value / a,
        )
    else:
        raise DomainError(f"unknown model {model!r}")
    return cost_grad, gain_grad


def kkt_residual(
    strategy: Strategy,
    efficiency: EfficiencyParams,
    costs: CostParams,
    g: float,
) -> KktReport:
    """First-order-condition residuals at ``strategy`` for gain floor ``g``.

    Small residuals certify an interior stationary point; a corner optimum
    legitimately shows a non-zero feedback residual, so this is a diagnostic,
    not a pass/fail test on its own.
    """
    g = check_gain(g)
    cost_grad, gain_grad = _gradients(strategy, efficiency, costs)
    if gain_grad[2] == 0.0:
        raise DomainError("assessment gain gradient is zero; cannot read off a multiplier")
    lam = cost_grad[2] / gain_grad[2]
    norm = math.sqrt(sum(component * component for component in cost_grad))
    residual_q = (cost_grad[0] - lam * gain_grad[0]) / norm
    residual_f = 0.0
    if strategy.model is not ModelKind.BASELINE:
        residual_f = (cost_grad[1] - lam * gain_grad[1]) / norm
    gap = (gain(strategy, efficiency) - g) / g
    return KktReport(
        lam=lam,
        residual_q=residual_q,
        residual_f=residual_f,
        residual_max=max(abs(residual_q), abs(residual_f)),
        constraint_rel_gap=gap,
    )


def _log_axis(window: tuple[float, float], points: int) -> np.ndarray:
    lo, hi = window
    return np.logspace(math.log10(lo), math.log10(hi), points)


def _shrink(window: tuple[float, float], center: float, spec: GridSpec) -> tuple[float, float]:
    """Next refinement window: a tenth of the log-span, centred, clipped."""
    lo, hi = math.log10(window[0]), math.log10(window[1])
    half = (hi - lo) / 2.0 / 10.0
    c = math.log10(center)
    g_lo, g_hi = math.log10(spec.min), math.log10(spec.max)
    return (10.0 ** max(g_lo, c - half), 10.0 ** min(g_hi, c + half))


def _argmin_lex(total: np.ndarray, qv: np.ndarray, fv: np.ndarray, av: np.ndarray) -> int:
    """Flat index of the least cost; ties go to the smallest (q, f, a)."""
    flat = total.ravel()
    best = flat.min()
    if not math.isfinite(best):
        raise DomainError("grid evaluation produced no finite cost")
    tied = np.flatnonzero(flat == best)
    if tied.size == 1:
        return int(tied[0])
    qs, fs, avs = qv.ravel()[tied], fv.ravel()[tied], av.ravel()[tied]
    order = np.lexsort((avs, fs, qs))
    return int(tied[order[0]])


def _evaluate(model, efficiency, costs, g, f_axis, a_axis):
    """Cost surface over the lattice with q eliminated through the floor.

    Returns broadcast (q, f, a, total) arrays; 1-D for the baseline, 2-D
    (feedback rows, assessment columns) otherwise.
    """
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        if model is ModelKind.BASELINE:
            av = a_axis
            fv = np.zeros_like(av)
            qv = recover_q_value(model, g, 0.0, av, efficiency)
            total = cost_value(model, qv, 0.0, av, costs)
        else:
            fcol = f_axis[:, None]
            arow = a_axis[None, :]
            qv = recover_q_value(model, g, fcol, arow, efficiency)
            fv = np.broadcast_to(fcol, qv.shape)
            av = np.broadcast_to(arow, qv.shape)
            total = cost_value(model, qv, fv, av, costs)
    total = np.where(np.isfinite(total), total, np.inf)
    return qv, fv, av, total


def minimize_cost(
    model: ModelKind,
    efficiency: EfficiencyParams,
    costs: CostParams,
    g: float,
    grid: Optional[GridSpec] = None,
    *,
    pin_f: Optional[float] = None,
    pin_a: Optional[float] = None,
) -> OptimalStrategy:
    """Cheapest strategy reaching gain ``g``, found by zoomed grid search.

    The gain constraint always binds at an optimum (cost strictly increases
    in ``q``), so ``q`` is resolved analytically at every lattice node and
    only the feedback and assessment axes are searched. If the incumbent
    lands on the upper edge of the global box with cost still falling toward
    it, the problem is reported as :class:`Unbounded` instead of returning a
    box artefact. Lower-edge contacts are legitimate corners (for example, a
    feedback model with a zero feedback exponent) and are recorded in the
    grid metadata.

    ``pin_f`` / ``pin_a`` hold one axis at a fixed value and search only the
    other, which is how the comparative-statics auditor asks conditional
    questions ("best depth at this feedback level"). A pinned axis is exempt
    from boundary diagnostics.
    """
    g = check_gain(g)
    if not isinstance(model, ModelKind):
        model = ModelKind.from_code(model)
    spec = grid if grid is not None else GridSpec()

    uses_f = model.uses_feedback
    if pin_f is not None and pin_a is not None:
        raise DomainError("cannot pin both axes; nothing would be left to search")
    if pin_f is not None:
        if not uses_f:
            raise DomainError("pin_f applies only to feedback models")
        if not math.isfinite(pin_f) or pin_f < 0.0:
            raise DomainError("pin_f must be finite and >= 0")
    if pin_a is not None and (not math.isfinite(pin_a) or pin_a <= 0.0):
        raise DomainError("pin_a must be finite and > 0")

    a_window = (spec.min, spec.max)
    f_window = (spec.min, spec.max) if uses_f else None

    best_q = best_f = best_a = float("nan")
    f_idx = a_idx = 0
    total = None
    f_axis = a_axis = None
    for round_index in range(spec.refinements + 1):
        a_axis = np.array([pin_a]) if pin_a is not None else _log_axis(a_window, spec.points)
        if uses_f:
            f_axis = np.array([pin_f]) if pin_f is not None else _log_axis(f_window, spec.points)
        qv, fv, av, total = _evaluate(model, efficiency, costs, g, f_axis, a_axis)
        flat_idx = _argmin_lex(total, qv, fv, av)
        if uses_f:
            f_idx, a_idx = divmod(flat_idx, a_axis.size)
        else:
            f_idx, a_idx = 0, flat_idx
        best_q = float(qv.ravel()[flat_idx])
        best_f = float(fv.ravel()[flat_idx])
        best_a = float(av.ravel()[flat_idx])
        if round_index < spec.refinements:
            if pin_a is None:
                a_window = _shrink(a_window, best_a, spec)
            if uses_f and pin_f is None:
                f_window = _shrink(f_window, best_f, spec)

    lower_corners = []
    if uses_f and pin_f is None:
        # total is 2-D here: feedback rows, assessment columns
        if f_idx == f_axis.size - 1 and f_axis[-1] == spec.max:
            if total[f_idx - 1, a_idx] > total[f_idx, a_idx]:
                raise Unbounded(
                    "cost still decreasing at the upper grid bound on the feedback axis "
                    f"(f = {spec.max}); the optimum lies outside the search box"
                )
        if f_idx == 0 and f_axis[0] == spec.min:
            lower_corners.append("f")
    if pin_a is None and a_idx == a_axis.size - 1 and a_axis[-1] == spec.max:
        neighbor = total[f_idx, a_idx - 1] if uses_f else total[a_idx - 1]
        incumbent = total[f_idx, a_idx] if uses_f else total[a_idx]
        if neighbor > incumbent:
            raise Unbounded(
                "cost still decreasing at the upper grid bound on the assessment axis "
                f"(a = {spec.max}); the optimum lies outside the search box"
            )
    if pin_a is None and a_idx == 0 and a_axis[0] == spec.min:
        lower_corners.append("a")

    pinned = tuple(
        name for name, value in (("f", pin_f), ("a", pin_a)) if value is not None
    )
    strategy = Strategy(model, q=best_q, f=best_f if uses_f else 0.0, a=best_a)
    meta = GridMeta(
        points=spec.points,
        refinements=spec.refinements,
        a_window=(pin_a, pin_a) if pin_a is not None else a_window,
        f_window=(pin_f, pin_f) if pin_f is not None else f_window,
        lower_corner_axes=tuple(lower_corners),
        pinned_axes=pinned,
    )
    return OptimalStrategy(
        strategy=strategy,
        achieved_gain=gain(strategy, efficiency),
        total_cost=cost(strategy, costs),
        kkt=kkt_residual(strategy, efficiency, costs, g),
        grid_meta=meta,
    )


def _integer_candidates(center: float, radius: int, floor: int) -> range:
    lo = math.floor(center) - (radius - 1)
    hi = math.ceil(center) + (radius - 1)
    return range(max(floor, lo), max(floor, hi) + 1)


def integer_refine(
    solution: Union[OptimalStrategy, ClosedFormSolution, Strategy],
    efficiency: EfficiencyParams,
    costs: CostParams,
    g: float,
    radius: int = 1,
) -> IntegerRefinement:
    """Cheapest all-integer strategy near a continuous solution.

    Searches the integer lattice within ``radius`` of each rounded component
    (queries and assessments at least 1, feedback at least 0). For every
    feedback/assessment pair, the query count that exactly meets the floor is
    rounded up and offered as an extra candidate, so a feasible point exists
    whenever the floor is attainable at all. Candidates must reach the gain
    floor (to within a 1e-12 relative slack for float rounding); ties on cost
    go to the lexicographically smallest counts.
    """
    g = check_gain(g)
    if isinstance(radius, bool) or int(radius) != radius or radius < 1:
        raise DomainError("radius must be an integer >= 1")
    radius = int(radius)
    base = getattr(solution, "strategy", solution)
    if not isinstance(base, Strategy):
        raise DomainError("solution must carry a Strategy")
    model = base.model

    f_candidates: Sequence[int]
    if model is ModelKind.BASELINE:
        f_candidates = (0,)
    else:
        f_candidates = _integer_candidates(base.f, radius, floor=0)
    a_candidates = _integer_candidates(base.a, radius, floor=1)
    q_candidates = list(_integer_candidates(base.q, radius, floor=1))

    feasible: list[tuple[float, int, int, int, float]] = []
    slack = 1.0 - 1e-12
    for f in f_candidates:
        for a in a_candidates:
            try:
                q_exact = float(recover_q_value(model, g, float(f), float(a), efficiency))
            except OverflowError:
                q_exact = float("inf")
            options = set(q_candidates)
            if math.isfinite(q_exact):
                options.add(max(1, math.ceil(q_exact)))
            for q in sorted(options):
                candidate = Strategy(model, q=float(q), f=float(f), a=float(a))
                achieved = gain(candidate, efficiency)
                if achieved >= g * slack:
                    feasible.append((cost(candidate, costs), q, f, a, achieved))
    if not feasible:
        raise Infeasible(
            f"no integer strategy within radius {radius} of "
            f"(q={base.q:.3f}, f={base.f:.3f}, a={base.a:.3f}) reaches gain {g}"
        )
    feasible.sort(key=lambda row: (row[0], row[1], row[2], row[3]))
    total_cost, q, f, a, achieved = feasible[0]
    return IntegerRefinement(
        strategy=Strategy(model, q=float(q), f=float(f), a=float(a)),
        achieved_gain=achieved,
        total_cost=total_cost,
    )
