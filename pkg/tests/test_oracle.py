"""Grid-search oracle: search behaviour, KKT diagnostics, integer rounding.

The oracle and the closed forms are independent routes to the same optima,
so most tests here cross-check one against the other. Where the two routes
are known to disagree (the m1 damped pair), the test pins down the
disagreement instead of smoothing it away.
"""

import math

import numpy as np
import pytest

from convecon import (
    CostParams,
    DomainError,
    EfficiencyParams,
    GridSpec,
    Infeasible,
    ModelKind,
    Strategy,
    Unbounded,
    a0_star,
    a2_star_partial,
    cost,
    f2_star,
    gain,
    integer_refine,
    kkt_residual,
    lagrangian,
    minimize_cost,
    model1_solve,
    recover_q,
    solve_model0,
)
from convecon.closed_form import recover_q_value
from convecon.core import cost_value

M0 = ModelKind.BASELINE
M1 = ModelKind.FEEDBACK_FIRST
M2 = ModelKind.FEEDBACK_AFTER


# ---------------------------------------------------------------------------
# GridSpec


def test_grid_spec_defaults():
    spec = GridSpec()
    assert spec.min == 1e-3
    assert spec.max == 1e4
    assert spec.points == 200
    assert spec.refinements == 3


def test_grid_spec_mapping_round_trip():
    spec = GridSpec(min=0.01, max=500.0, points=80, refinements=1)
    assert GridSpec.from_mapping(spec.to_dict()) == spec


@pytest.mark.parametrize(
    "kwargs",
    [
        {"min": 0.0},
        {"min": -1.0},
        {"min": 10.0, "max": 1.0},
        {"min": float("nan")},
        {"max": float("inf")},
        {"points": 1},
        {"points": 2.5},
        {"refinements": -1},
        {"refinements": 1.5},
    ],
)
def test_grid_spec_rejects_bad_values(kwargs):
    with pytest.raises(DomainError):
        GridSpec(**kwargs)


def test_grid_spec_from_mapping_rejects_unknown_fields():
    with pytest.raises(DomainError, match="unknown field.*zoom"):
        GridSpec.from_mapping({"points": 50, "zoom": 2})


def test_grid_spec_from_mapping_rejects_non_numbers():
    with pytest.raises(DomainError, match="points must be a number"):
        GridSpec.from_mapping({"points": "many"})
    with pytest.raises(DomainError, match="min must be a number"):
        GridSpec.from_mapping({"min": True})


# ---------------------------------------------------------------------------
# Lagrangian


def test_lagrangian_multiplier_off(std_efficiency, std_costs):
    s = Strategy(M2, q=2.0, f=3.0, a=4.0)
    assert lagrangian(s, std_efficiency, std_costs, 50.0, 0.0) == cost(s, std_costs)


def test_lagrangian_zero_slack_for_any_multiplier(std_efficiency, std_costs):
    # On the constraint surface the multiplier term vanishes exactly.
    s = Strategy(M1, q=5.0, f=2.0, a=3.0)
    on_surface = gain(s, std_efficiency)
    for lam in (-3.0, 0.7, 12.0):
        assert lagrangian(s, std_efficiency, std_costs, on_surface, lam) == cost(s, std_costs)


def test_lagrangian_worked_example(std_efficiency, std_costs):
    s = Strategy(M2, q=2.0, f=3.0, a=4.0)
    target = gain(s, std_efficiency)
    assert lagrangian(s, std_efficiency, std_costs, target, 1.0) == 64.0


def test_lagrangian_rejects_bad_target(std_efficiency, std_costs):
    s = Strategy(M0, q=1.0, f=0.0, a=1.0)
    with pytest.raises(DomainError):
        lagrangian(s, std_efficiency, std_costs, 0.0, 1.0)


# ---------------------------------------------------------------------------
# KKT diagnostics


class TestKktResidual:
    def test_multiplier_read_from_assessment_axis(self, std_efficiency, std_costs):
        s = Strategy(M2, q=7.0, f=2.0, a=3.0)
        value = gain(s, std_efficiency)
        cost_grad_a = s.q * (1.0 + s.f) * std_costs.c_assess
        gain_grad_a = std_efficiency.beta * value / s.a
        report = kkt_residual(s, std_efficiency, std_costs, 50.0)
        assert report.lam == cost_grad_a / gain_grad_a

    def test_assessment_residual_vanishes_by_construction(self, std_efficiency, std_costs):
        # The multiplier is defined as the ratio that zeroes the assessment
        # condition, so re-deriving that condition from the report's lambda
        # must give (numerically) nothing.
        s = Strategy(M2, q=7.0, f=2.0, a=3.0)
        value = gain(s, std_efficiency)
        report = kkt_residual(s, std_efficiency, std_costs, 50.0)
        cost_grad_a = s.q * (1.0 + s.f) * std_costs.c_assess
        gain_grad_a = std_efficiency.beta * value / s.a
        assert abs(cost_grad_a - report.lam * gain_grad_a) <= 1e-12 * cost_grad_a

    def test_zero_residuals_at_baseline_optimum(self, std_efficiency, std_costs):
        a = a0_star(std_efficiency, std_costs)
        q = recover_q(100.0, 0.0, a, M0, std_efficiency)
        report = kkt_residual(Strategy(M0, q, 0.0, a), std_efficiency, std_costs, 100.0)
        assert report.residual_f == 0.0  # no feedback axis on the baseline
        assert abs(report.residual_q) <= 1e-12
        assert report.residual_max <= 1e-12
        assert abs(report.constraint_rel_gap) <= 1e-12

    def test_zero_residuals_at_feedback_after_optimum(self, std_efficiency, std_costs):
        # Independent confirmation that the published feedback level and the
        # conditional depth solve the joint first-order conditions.
        f = f2_star(std_efficiency, std_costs).value
        a = a2_star_partial(f, std_efficiency, std_costs)
        q = recover_q(100.0, f, a, M2, std_efficiency)
        report = kkt_residual(Strategy(M2, q, f, a), std_efficiency, std_costs, 100.0)
        assert report.residual_max <= 1e-12

    def test_doubling_assessments_raises_residual(self, std_efficiency, std_costs):
        a = a0_star(std_efficiency, std_costs)
        q = recover_q(100.0, 0.0, a, M0, std_efficiency)
        at_opt = kkt_residual(Strategy(M0, q, 0.0, a), std_efficiency, std_costs, 100.0)
        perturbed = kkt_residual(Strategy(M0, q, 0.0, 2.0 * a), std_efficiency, std_costs, 100.0)
        assert perturbed.residual_max > at_opt.residual_max

    def test_rejects_zero_coordinates(self, std_efficiency, std_costs):
        with pytest.raises(DomainError, match="q > 0 and a > 0"):
            kkt_residual(Strategy(M2, 0.0, 1.0, 2.0), std_efficiency, std_costs, 10.0)
        with pytest.raises(DomainError, match="q > 0 and a > 0"):
            kkt_residual(Strategy(M2, 2.0, 1.0, 0.0), std_efficiency, std_costs, 10.0)

    def test_rejects_bad_target(self, std_efficiency, std_costs):
        s = Strategy(M0, 2.0, 0.0, 2.0)
        with pytest.raises(DomainError):
            kkt_residual(s, std_efficiency, std_costs, -1.0)

    def test_dict_uses_lambda_key(self, std_efficiency, std_costs):
        s = Strategy(M0, 2.0, 0.0, 2.0)
        doc = kkt_residual(s, std_efficiency, std_costs, 1.0).to_dict()
        assert set(doc) == {
            "lambda",
            "residual_q",
            "residual_f",
            "residual_max",
            "constraint_rel_gap",
        }


# ---------------------------------------------------------------------------
# minimize_cost


class TestMinimizeCost:
    def test_baseline_matches_closed_form(self, std_efficiency, std_costs):
        sol = minimize_cost(M0, std_efficiency, std_costs, 100.0)
        reference = solve_model0(std_efficiency, std_costs, 100.0)
        assert sol.strategy.a == pytest.approx(reference.a, rel=1e-3)
        assert sol.total_cost == pytest.approx(cost(reference.strategy, std_costs), rel=1e-9)
        assert sol.kkt.residual_max <= 1e-3
        assert abs(sol.kkt.constraint_rel_gap) <= 1e-9

    def test_assessment_level_ignores_gain_target(self, std_efficiency, std_costs):
        # The gain floor scales the whole cost surface by a positive factor,
        # so the argmin — and with it the returned depth — is bit-identical.
        solutions = [
            minimize_cost(M0, std_efficiency, std_costs, g) for g in (10.0, 100.0, 1000.0)
        ]
        depths = {sol.strategy.a for sol in solutions}
        assert len(depths) == 1

    def test_feedback_after_matches_published_pair(self, std_efficiency, std_costs):
        sol = minimize_cost(M2, std_efficiency, std_costs, 100.0)
        f = f2_star(std_efficiency, std_costs).value
        a = a2_star_partial(f, std_efficiency, std_costs)
        assert sol.strategy.f == pytest.approx(f, rel=1e-3)
        assert sol.strategy.a == pytest.approx(a, rel=1e-3)
        assert sol.kkt.residual_max <= 1e-3
        assert sol.grid_meta.lower_corner_axes == ()

    def test_feedback_first_beats_damped_pair(self, std_efficiency, std_costs):
        # The damped fixed point satisfies the printed equations, but those
        # equations are not the joint first-order conditions, and the search
        # finds a strategy less than half as expensive. Keeping this pinned
        # guards against "fixing" the oracle to agree with the formulas.
        sol = minimize_cost(M1, std_efficiency, std_costs, 100.0)
        pair = model1_solve(std_efficiency, std_costs, 100.0)
        assert sol.total_cost < 0.75 * cost(pair.strategy, std_costs)
        assert sol.kkt.residual_max <= 1e-3

    def test_zero_feedback_exponent_lands_on_corner(self, std_costs, light_grid):
        flat = EfficiencyParams(0.9, 0.3, 0.0, 0.0)
        sol = minimize_cost(M2, flat, std_costs, 100.0, light_grid)
        assert sol.strategy.f == light_grid.min
        assert sol.grid_meta.lower_corner_axes == ("f",)

    def test_unbounded_on_feedback_axis(self, std_costs, light_grid):
        runaway = EfficiencyParams(0.5, 0.3, 0.0, 0.8)
        with pytest.raises(Unbounded, match="feedback axis"):
            minimize_cost(M2, runaway, std_costs, 100.0, light_grid)

    @pytest.mark.parametrize("beta", [0.9, 0.5])
    def test_unbounded_on_assessment_axis(self, std_costs, light_grid, beta):
        # beta >= alpha: trading queries for ever-deeper assessment keeps
        # lowering cost, so there is no interior optimum to return.
        runaway = EfficiencyParams(0.5, beta)
        with pytest.raises(Unbounded, match="assessment axis"):
            minimize_cost(M0, runaway, std_costs, 100.0, light_grid)

    @pytest.mark.parametrize("target", [0.0, -5.0, float("inf")])
    def test_rejects_bad_target(self, std_efficiency, std_costs, target):
        with pytest.raises(DomainError):
            minimize_cost(M0, std_efficiency, std_costs, target)

    def test_accepts_model_codes(self, std_efficiency, std_costs, light_grid):
        by_code = minimize_cost("m0", std_efficiency, std_costs, 100.0, light_grid)
        by_enum = minimize_cost(M0, std_efficiency, std_costs, 100.0, light_grid)
        assert by_code.to_dict() == by_enum.to_dict()

    def test_rejects_unknown_model_code(self, std_efficiency, std_costs):
        with pytest.raises(DomainError, match="unknown model code"):
            minimize_cost("m3", std_efficiency, std_costs, 100.0)

    def test_deterministic_reruns(self, std_efficiency, std_costs):
        first = minimize_cost(M2, std_efficiency, std_costs, 100.0)
        second = minimize_cost(M2, std_efficiency, std_costs, 100.0)
        assert first.to_dict() == second.to_dict()

    def test_meta_records_final_windows(self, std_efficiency, std_costs):
        spec = GridSpec(points=80, refinements=2)
        sol = minimize_cost(M2, std_efficiency, std_costs, 100.0, spec)
        meta = sol.grid_meta
        assert meta.points == 80 and meta.refinements == 2
        assert meta.a_window[0] <= sol.strategy.a <= meta.a_window[1]
        assert meta.f_window[0] <= sol.strategy.f <= meta.f_window[1]
        assert meta.pinned_axes == ()


class TestPinnedAxes:
    def test_pin_feedback_solves_conditional_depth(self, std_efficiency, std_costs):
        sol = minimize_cost(M2, std_efficiency, std_costs, 100.0, pin_f=1.0)
        assert sol.strategy.f == 1.0
        assert sol.grid_meta.pinned_axes == ("f",)
        assert sol.grid_meta.f_window == (1.0, 1.0)
        expected = a2_star_partial(1.0, std_efficiency, std_costs)
        assert sol.strategy.a == pytest.approx(expected, rel=1e-3)

    def test_pin_zero_feedback_reduces_to_baseline(self, std_efficiency, std_costs, light_grid):
        # f pinned below the grid floor is legal and must not trip the corner
        # diagnostics; with f = 0 the model-m2 surface is the baseline one.
        pinned = minimize_cost(M2, std_efficiency, std_costs, 100.0, light_grid, pin_f=0.0)
        baseline = minimize_cost(M0, std_efficiency, std_costs, 100.0, light_grid)
        assert pinned.strategy.a == baseline.strategy.a
        assert pinned.total_cost == baseline.total_cost
        assert pinned.grid_meta.lower_corner_axes == ()

    def test_pin_assessment_recovers_joint_feedback(self, std_efficiency, std_costs):
        joint = minimize_cost(M2, std_efficiency, std_costs, 100.0)
        pinned = minimize_cost(
            M2, std_efficiency, std_costs, 100.0, pin_a=joint.strategy.a
        )
        assert pinned.strategy.a == joint.strategy.a
        assert pinned.grid_meta.pinned_axes == ("a",)
        assert pinned.strategy.f == pytest.approx(joint.strategy.f, rel=1e-2)
        assert pinned.total_cost == pytest.approx(joint.total_cost, rel=1e-4)

    def test_pin_rejections(self, std_efficiency, std_costs):
        with pytest.raises(DomainError, match="cannot pin both axes"):
            minimize_cost(M2, std_efficiency, std_costs, 100.0, pin_f=1.0, pin_a=2.0)
        with pytest.raises(DomainError, match="pin_f applies only to feedback models"):
            minimize_cost(M0, std_efficiency, std_costs, 100.0, pin_f=1.0)
        with pytest.raises(DomainError, match="pin_f"):
            minimize_cost(M2, std_efficiency, std_costs, 100.0, pin_f=-0.5)
        with pytest.raises(DomainError, match="pin_a"):
            minimize_cost(M2, std_efficiency, std_costs, 100.0, pin_a=0.0)


# ---------------------------------------------------------------------------
# Integer refinement


def _neighborhood_best(base, efficiency, costs, g, radius=1):
    """Independent enumeration of the documented candidate set.

    Floor/ceil combinations within ``radius`` of each component, plus, for
    every feedback/depth pair, the query count re-solved upward to the next
    integer that meets the floor. Returns the least-cost feasible row with
    lexicographic tie-breaking, as (cost, q, f, a).
    """

    def around(center, lo):
        raw = range(math.floor(center) - (radius - 1), math.ceil(center) + radius)
        return sorted({max(lo, v) for v in raw})

    f_options = [0] if base.model is M0 else around(base.f, 0)
    rows = []
    for f in f_options:
        for a in around(base.a, 1):
            q_options = set(around(base.q, 1))
            resolved = recover_q(g, float(f), float(a), base.model, efficiency)
            if math.isfinite(resolved):
                q_options.add(max(1, math.ceil(resolved)))
            for q in sorted(q_options):
                candidate = Strategy(base.model, float(q), float(f), float(a))
                if gain(candidate, efficiency) >= g * (1.0 - 1e-12):
                    rows.append((cost(candidate, costs), q, f, a))
    assert rows, "enumeration found no feasible integer point"
    rows.sort()
    return rows[0]


class TestIntegerRefine:
    def test_already_integral_identity(self):
        # On the constraint surface (gain is exactly 100 at these counts),
        # an all-integer input comes back unchanged.
        efficiency = EfficiencyParams(0.5, 0.5)
        costs = CostParams(10.0, 2.0, 1.0)
        refined = integer_refine(Strategy(M0, 2500.0, 0.0, 4.0), efficiency, costs, 100.0)
        assert (refined.strategy.q, refined.strategy.f, refined.strategy.a) == (2500.0, 0.0, 4.0)
        assert refined.achieved_gain == 100.0
        assert refined.total_cost == 35000.0

    def test_query_count_resolves_down_to_floor(self):
        # An integral input sitting above the constraint surface is not a
        # fixed point: re-solving the query count at the same depth finds
        # the strictly cheaper point that still meets the floor.
        efficiency = EfficiencyParams(0.5, 0.5)
        costs = CostParams(10.0, 2.0, 1.0)
        refined = integer_refine(Strategy(M0, 2500.0, 0.0, 5.0), efficiency, costs, 100.0)
        assert (refined.strategy.q, refined.strategy.a) == (2000.0, 5.0)
        assert refined.total_cost == 30000.0

    def test_cost_ties_break_lexicographically(self):
        # With unit prices the cost is q * (1 + a); (3,0,3), (4,0,2) and
        # (6,0,1) all cost exactly 12 and all clear the floor, so the
        # smallest query count must win.
        efficiency = EfficiencyParams(0.6, 0.4)
        costs = CostParams(1.0, 1.0, 1.0)
        refined = integer_refine(Strategy(M0, 4.0, 0.0, 2.0), efficiency, costs, 2.9, radius=2)
        assert (refined.strategy.q, refined.strategy.f, refined.strategy.a) == (3.0, 0.0, 3.0)
        assert refined.total_cost == 12.0

    def test_wider_radius_reaches_cheaper_points(self, std_costs):
        efficiency = EfficiencyParams(0.9, 0.3)
        base = Strategy(M0, 200.0, 0.0, 2.5)  # depth far below the optimum near 5
        narrow = integer_refine(base, efficiency, std_costs, 100.0, radius=1)
        wide = integer_refine(base, efficiency, std_costs, 100.0, radius=2)
        assert narrow.strategy.a == 3.0
        assert wide.strategy.a == 4.0
        assert wide.total_cost < narrow.total_cost

    @pytest.mark.parametrize("model", [M0, M1, M2])
    def test_matches_exhaustive_enumeration(self, model, std_efficiency, std_costs, light_grid):
        sol = minimize_cost(model, std_efficiency, std_costs, 100.0, light_grid)
        for radius in (1, 2):
            refined = integer_refine(sol, std_efficiency, std_costs, 100.0, radius=radius)
            best = _neighborhood_best(sol.strategy, std_efficiency, std_costs, 100.0, radius)
            assert (
                refined.total_cost,
                refined.strategy.q,
                refined.strategy.f,
                refined.strategy.a,
            ) == best
            assert refined.strategy.is_integer
            assert refined.achieved_gain >= 100.0 * (1.0 - 1e-12)

    def test_accepts_closed_form_solutions(self, std_efficiency, std_costs):
        reference = solve_model0(std_efficiency, std_costs, 100.0)
        refined = integer_refine(reference, std_efficiency, std_costs, 100.0)
        best = _neighborhood_best(reference.strategy, std_efficiency, std_costs, 100.0)
        assert (refined.strategy.q, refined.strategy.f, refined.strategy.a) == best[1:]

    def test_infeasible_when_floor_unreachable(self):
        # A floor beyond float range: the exact query count overflows, and
        # no nearby integer point gets anywhere close.
        efficiency = EfficiencyParams(0.5, 0.5)
        costs = CostParams(1.0, 1.0, 1.0)
        with pytest.raises(Infeasible, match="no integer strategy within radius"):
            integer_refine(Strategy(M0, 1.0, 0.0, 1.0), efficiency, costs, 1e308)

    @pytest.mark.parametrize("radius", [0, -1, 1.5, True])
    def test_rejects_bad_radius(self, std_efficiency, std_costs, radius):
        base = Strategy(M0, 10.0, 0.0, 2.0)
        with pytest.raises(DomainError, match="radius"):
            integer_refine(base, std_efficiency, std_costs, 5.0, radius=radius)

    def test_rejects_strategyless_input(self, std_efficiency, std_costs):
        with pytest.raises(DomainError, match="must carry a Strategy"):
            integer_refine(42, std_efficiency, std_costs, 5.0)


# ---------------------------------------------------------------------------
# Global optimality invariant


def _sample_instance(rng):
    alpha = rng.uniform(0.55, 0.95)
    beta = rng.uniform(0.05, alpha - 0.1)
    gamma1 = rng.uniform(0.02, 0.3)
    gamma2 = rng.uniform(0.1, min(0.9, alpha - 0.05))
    efficiency = EfficiencyParams(alpha, beta, gamma1, gamma2)
    costs = CostParams(*np.exp(rng.uniform(np.log(0.5), np.log(20.0), size=3)))
    g = float(np.exp(rng.uniform(np.log(10.0), np.log(1000.0))))
    return efficiency, costs, g


def _fine_grid_minimum(model, efficiency, costs, g, sol, factor=10):
    """Cheapest cost on a ``factor``-times finer lattice over the final window."""
    meta = sol.grid_meta
    n = meta.points * factor
    a_axis = np.logspace(math.log10(meta.a_window[0]), math.log10(meta.a_window[1]), n)
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        if model is M0:
            qv = recover_q_value(model, g, 0.0, a_axis, efficiency)
            total = cost_value(model, qv, 0.0, a_axis, costs)
        else:
            f_axis = np.logspace(
                math.log10(meta.f_window[0]), math.log10(meta.f_window[1]), n
            )
            qv = recover_q_value(model, g, f_axis[:, None], a_axis[None, :], efficiency)
            total = cost_value(
                model,
                qv,
                np.broadcast_to(f_axis[:, None], qv.shape),
                np.broadcast_to(a_axis[None, :], qv.shape),
                costs,
            )
    total = np.where(np.isfinite(total), total, np.inf)
    return float(total.min())


@pytest.mark.parametrize("model", [M0, M1, M2])
def test_finer_grid_cannot_improve_optimum(model):
    rng = np.random.default_rng(20260817)
    for _ in range(50):
        efficiency, costs, g = _sample_instance(rng)
        sol = minimize_cost(model, efficiency, costs, g)
        fine = _fine_grid_minimum(model, efficiency, costs, g, sol)
        assert fine >= sol.total_cost * (1.0 - 1e-4)
        if model is M0:
            # alpha > beta throughout the sampled region, so the closed form
            # applies and must agree with the search.
            assert sol.strategy.a == pytest.approx(a0_star(efficiency, costs), rel=1e-3)
