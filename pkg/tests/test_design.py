import math

import numpy as np
import pytest

from qmcomb.core import Block, Circuit, Comb, circuit_spread, delay_at, delay_at_zero, equidistant_comb
from qmcomb.design import (
    ObjectiveSpec,
    SearchConfig,
    compare_designs,
    curvature_flat_k,
    flatness_objective,
    glue_delta,
    glue_mismatch,
    glued_pair,
    optimize_block,
)
from qmcomb.errors import (
    BudgetExceededError,
    ContractViolationError,
    InvalidParameterError,
    NoSolutionError,
)


def test_objective_is_non_negative_and_zero_at_decoupling():
    spec = ObjectiveSpec()
    for k, g in [(3.47, 0.29), (1.0, 2.0), (9.0, 0.0)]:
        assert flatness_objective(Circuit.of(Block(k, g)), spec) >= 0
    assert flatness_objective(Circuit.of(Block(0.0, 1.0)), spec) == 0.0


def test_objective_nodes_are_symmetric():
    nodes = ObjectiveSpec(1.0, 41).nodes
    assert np.array_equal(nodes, -nodes[::-1])
    assert nodes[20] == 0.0
    with pytest.raises(InvalidParameterError):
        ObjectiveSpec(1.0, 40)


def test_relative_objective_scale():
    c = Circuit.of(Block(3.0))
    a = flatness_objective(c, ObjectiveSpec())
    r = flatness_objective(c, ObjectiveSpec(relative=True))
    assert r == pytest.approx(a / delay_at_zero(c) ** 2, rel=1e-12)


def test_search_config_validation():
    with pytest.raises(InvalidParameterError):
        SearchConfig(k_bounds=(0.0, 10.0))
    with pytest.raises(InvalidParameterError):
        SearchConfig(g_bounds=(0.0, 6.0))
    with pytest.raises(InvalidParameterError):
        SearchConfig(budget=0)


def test_partial_optimum_is_a_local_minimum():
    res = optimize_block("partial")
    spec = ObjectiveSpec()
    f = lambda k: flatness_objective(Circuit.of(Block(k)), spec)  # noqa: E731
    h = 1e-2
    assert res.objective_value <= f(res.k - h) and res.objective_value <= f(res.k + h)
    assert res.g == 0.0 and res.converged
    assert 3.1 < res.k < 3.3


def test_descent_history_is_monotone():
    res = optimize_block("partial", search=SearchConfig(starts=3))
    hist = np.array(res.history)
    assert hist.size > 1
    assert np.all(np.diff(hist) <= 1e-15)


def test_optimizer_is_deterministic_and_thread_independent(monkeypatch):
    search = SearchConfig(starts=9)
    monkeypatch.setenv("QMCOMB_THREADS", "1")
    a = optimize_block("full", search=search)
    monkeypatch.setenv("QMCOMB_THREADS", "4")
    b = optimize_block("full", search=search)
    assert (a.k, a.g, a.objective_value) == (b.k, b.g, b.objective_value)


def test_full_optimum_runs_to_the_box_edge():
    # the objective keeps falling as g grows; the minimum sits on the bounds
    res = optimize_block("full")
    assert res.g == pytest.approx(5.0, abs=1e-3) or res.k == pytest.approx(0.01, abs=1e-3)


def test_budget_exhaustion_carries_best():
    with pytest.raises(BudgetExceededError) as info:
        optimize_block("full", search=SearchConfig(budget=10))
    best = info.value.best
    assert best is not None and not best.converged
    assert math.isfinite(best.objective_value)


def test_explicit_starts_checked():
    with pytest.raises(InvalidParameterError):
        optimize_block("partial", starts=[(1.0, 0.0)])
    res = optimize_block("partial", starts=[(3.0,)])
    assert res.k == pytest.approx(3.2144, abs=2e-3)


def test_two_resonator_flat_k():
    assert curvature_flat_k(Comb((-1.0, 1.0), 1.0)) == pytest.approx(2 * math.sqrt(3), abs=1e-6)


def test_comb_layouts():
    assert curvature_flat_k(equidistant_comb(4, 2.0, 1.0)) == pytest.approx(4.26, abs=0.01)
    assert curvature_flat_k(equidistant_comb(4, 1.0, 1.0)) == pytest.approx(2.13, abs=0.01)


def test_curvature_needs_symmetry():
    with pytest.raises(ContractViolationError):
        curvature_flat_k(Comb((-1.0, 2.0), 1.0))


def test_curvature_without_root():
    # a single resonator has T'' < 0 at band centre for every k
    with pytest.raises(NoSolutionError):
        curvature_flat_k(Comb((0.0,), 1.0))


def test_glue_residual_and_composite():
    b = Block(3.47, 0.29)
    res = glue_delta(b)
    assert abs(res.residual) < 1e-8
    assert abs(glue_mismatch(b, res.delta_shift)) < 1e-8
    assert res.composite == glued_pair(b, res.delta_shift)
    assert res.composite.is_symmetric()
    t = delay_at(res.composite, [res.delta_shift])[0]
    assert t == pytest.approx(delay_at_zero(res.composite), abs=1e-8)
    assert res.spread_in_band == pytest.approx(circuit_spread(res.composite, (-3, 3)))


def test_glue_at_zero_shift_is_two_copies():
    b = Block(3.0, 0.2)
    assert glue_mismatch(b, 0.0) == pytest.approx(0.0, abs=1e-6)
    assert delay_at_zero(glued_pair(b, 0.0)) == pytest.approx(2 * delay_at_zero(Circuit.of(b)), rel=1e-6)


def test_glue_needs_centered_block():
    with pytest.raises(ContractViolationError):
        glue_delta(Block(3.0, center=1.0))


def test_compare_designs():
    a = Circuit.of(Block(3.47, 0.29))
    cmp = compare_designs(a, a, (-1, 1))
    assert cmp.ratio == 1.0
