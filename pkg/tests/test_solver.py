import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxmin_tsp import (
    Branching,
    BranchCapExceeded,
    Candidate,
    GeneratorConfig,
    Instance,
    Objective,
    SolverConfig,
    Tour,
    generate,
    init_pair,
    init_third,
    insert,
    insertion_delta,
    pure_tie_break,
    select_candidates,
    solve,
)

from helpers import canon, closed_length, ref_candidates

SQ2 = math.sqrt(2)


def rand_instance(seed, n, continuous=True, grid=200):
    return generate(
        GeneratorConfig(n=n, grid_w=grid, grid_h=grid, seed=seed, continuous=continuous)
    )


# init stages


def test_init_pair_square(unit_square):
    assert init_pair(unit_square) == [(0, 2), (1, 3)]
    assert init_pair(unit_square, Objective.MAX_TOUR) == [(0, 1), (0, 3), (1, 2), (2, 3)]


def test_init_pair_collinear():
    inst = Instance.from_points([(0, 0), (1, 0), (3, 0)])
    assert init_pair(inst) == [(0, 2)]
    assert init_pair(inst, Objective.MAX_TOUR) == [(0, 1)]


@given(st.integers(0, 2**32))
def test_init_pair_matches_double_loop(seed):
    inst = rand_instance(seed, 12)
    d = inst.distance
    best = max(
        ((d(i, j), i, j) for i in range(12) for j in range(i + 1, 12)),
    )
    assert init_pair(inst) == [(best[1], best[2])]


def test_init_third_extremal_perimeter():
    inst = Instance.from_points([(0, 0), (4, 0), (2, 5), (2, 1)])
    assert init_third(inst, (0, 1)) == [2]
    assert init_third(inst, (0, 1), Objective.MAX_TOUR) == [3]


def test_init_third_reports_ties(unit_square):
    assert init_third(unit_square, (0, 2)) == [1, 3]


def test_init_stage_validation(unit_square):
    two = Instance.from_points([(0, 0), (1, 0)])
    with pytest.raises(ValueError):
        init_third(two, (0, 1))
    with pytest.raises(ValueError):
        init_third(unit_square, (1, 1))
    with pytest.raises(ValueError):
        init_pair(Instance.from_points([(0, 0)]))


# disturbance and candidate selection


def test_insertion_delta_square(unit_square):
    tour = Tour.from_order(unit_square, [0, 2, 1])
    assert insertion_delta(unit_square, tour, 0, 3) == pytest.approx(2 - SQ2, rel=1e-12)
    assert insertion_delta(unit_square, tour, 1, 3) == pytest.approx(SQ2, rel=1e-12)
    assert insertion_delta(unit_square, tour, 2, 3) == pytest.approx(SQ2, rel=1e-12)


def test_insertion_delta_collinear_point_is_free():
    inst = Instance.from_points([(0, 0), (4, 0), (2, 3), (2, 0)])
    tour = Tour.from_order(inst, [0, 1, 2])
    assert insertion_delta(inst, tour, 0, 3) == pytest.approx(0.0, abs=1e-12)


def test_insertion_delta_validation(unit_square):
    tour = Tour.from_order(unit_square, [0, 2, 1])
    with pytest.raises(ValueError, match="edge_pos"):
        insertion_delta(unit_square, tour, 3, 3)
    with pytest.raises(ValueError, match="already on"):
        insertion_delta(unit_square, tour, 0, 1)
    with pytest.raises(ValueError, match="out of range"):
        insertion_delta(unit_square, tour, 0, 9)
    two = Tour.from_order(unit_square, [0, 2])
    with pytest.raises(ValueError, match="edge_pos"):
        insertion_delta(unit_square, two, 1, 3)


def test_select_single_remaining_point_takes_cheapest_edge(unit_square):
    # the last point goes to its min-disturbance edge, not the max one
    tour = Tour.from_order(unit_square, [0, 2, 1])
    cands = select_candidates(unit_square, tour)
    assert cands == [Candidate(0, 3, pytest.approx(2 - SQ2, rel=1e-12))]


def test_select_on_diagonal_pair_ties_both_corners(unit_square):
    tour = Tour.from_order(unit_square, [0, 2])
    cands = select_candidates(unit_square, tour)
    assert [(c.edge_pos, c.point) for c in cands] == [(0, 1), (0, 3)]


def test_select_max_objective_flips_direction(unit_square):
    tour = Tour.from_order(unit_square, [0, 1, 2])
    cands = select_candidates(unit_square, tour, objective=Objective.MAX_TOUR)
    assert [(c.edge_pos, c.point) for c in cands] == [(0, 3), (1, 3)]
    for c in cands:
        assert c.delta == pytest.approx(SQ2, rel=1e-12)


@given(st.integers(0, 2**32), st.booleans(), st.booleans())
def test_select_matches_double_loop_oracle(seed, minimize, on_grid):
    inst = rand_instance(seed, 9, continuous=not on_grid, grid=6)
    objective = Objective.MIN_TOUR if minimize else Objective.MAX_TOUR
    pair = init_pair(inst, objective)[0]
    third = init_third(inst, pair, objective)[0]
    tour = Tour.from_order(inst, [*pair, third])
    got = select_candidates(inst, tour, objective=objective)
    want = ref_candidates(
        inst.distance, tour.order, [p for p in range(9) if p not in tour.order],
        minimize=minimize,
    )
    assert {(c.edge_pos, c.point) for c in got} == want
    for c in got:
        assert c.delta == pytest.approx(
            insertion_delta(inst, tour, c.edge_pos, c.point), rel=1e-12, abs=1e-12
        )


def test_select_candidates_sorted_and_validated(unit_square):
    tour = Tour.from_order(unit_square, [0, 2])
    cands = select_candidates(unit_square, tour, remaining=[3, 1])
    assert [(c.edge_pos, c.point) for c in cands] == [(0, 1), (0, 3)]
    with pytest.raises(ValueError, match="overlaps"):
        select_candidates(unit_square, tour, remaining=[0, 1])
    with pytest.raises(ValueError, match="no points left"):
        select_candidates(unit_square, Tour.from_order(unit_square, [0, 1, 2, 3]))


def test_tie_tolerance_is_configurable():
    # second point is worse by 4e-10 relative: a tie at rel 1e-9, not at 1e-12
    inst = Instance.from_points([(0, 0), (10, 0), (5, 7), (5, -7 + 1e-9)])
    tour = Tour.from_order(inst, [0, 1])
    loose = select_candidates(inst, tour)
    tight = select_candidates(inst, tour, tie_rel_tol=1e-12)
    assert {c.point for c in loose} == {2, 3}
    assert len(tight) == 1


def test_pure_tie_break_is_lexicographic():
    cands = [Candidate(2, 1, 0.5), Candidate(1, 9, 0.5), Candidate(1, 4, 0.5)]
    assert pure_tie_break(cands) == Candidate(1, 4, 0.5)
    with pytest.raises(ValueError):
        pure_tie_break([])


# insert


def test_insert_grows_tour_and_length(unit_square):
    tour = Tour.from_order(unit_square, [0, 2])
    cand = select_candidates(unit_square, tour)[0]
    bigger = insert(tour, cand, unit_square)
    assert bigger.order == [0, 1, 2]
    assert bigger.size == 3
    assert bigger.length == pytest.approx(closed_length(unit_square, bigger.order), rel=1e-12)
    assert bigger.member_mask[1]
    # the original tour is untouched
    assert tour.order == [0, 2] and not tour.member_mask[1]


def test_insert_rejects_stale_candidates(unit_square):
    tour = Tour.from_order(unit_square, [0, 2, 1])
    with pytest.raises(ValueError, match="already on the tour"):
        insert(tour, Candidate(0, 1, 0.1))
    with pytest.raises(ValueError, match="edge_pos"):
        insert(tour, Candidate(5, 3, 0.1))
    with pytest.raises(ValueError, match="delta"):
        insert(tour, Candidate(0, 3, 99.0), unit_square)


def test_tour_from_order_validation(unit_square):
    with pytest.raises(ValueError, match="at least 2"):
        Tour.from_order(unit_square, [0])
    with pytest.raises(ValueError, match="duplicate"):
        Tour.from_order(unit_square, [0, 1, 1])
    with pytest.raises(ValueError, match="out-of-range"):
        Tour.from_order(unit_square, [0, 9])


@given(st.integers(0, 2**32), st.integers(5, 40))
def test_incremental_length_matches_recompute(seed, n):
    inst = rand_instance(seed, n)
    res = solve(inst)
    assert res.best_tour.length == pytest.approx(
        closed_length(inst, res.best_tour.order), rel=1e-9
    )


# solve


def sorted_tuple(order):
    return tuple(sorted(order))


def assert_valid_tour(inst, tour):
    assert sorted_tuple(tour.order) == tuple(range(inst.n))
    assert tour.length == pytest.approx(closed_length(inst, tour.order), rel=1e-9)


def test_solve_rejects_tiny_and_bad_config(unit_square):
    with pytest.raises(ValueError, match="n >= 2"):
        solve(Instance.from_points([(0, 0)]))
    with pytest.raises(ValueError, match="tolerances"):
        SolverConfig(tie_rel_tol=-1)
    with pytest.raises(ValueError, match="branch_cap"):
        SolverConfig(branch_cap=0)


def test_solve_two_and_three_points():
    two = Instance.from_points([(0, 0), (3, 4)])
    res = solve(two)
    assert res.best_tour.order == [0, 1]
    assert res.best_tour.length == pytest.approx(10.0)
    assert res.delta_evals == 0
    three = Instance.from_points([(0, 0), (3, 0), (3, 4)])
    res = solve(three)
    assert sorted_tuple(res.best_tour.order) == (0, 1, 2)
    assert res.best_tour.length == pytest.approx(12.0)
    assert res.delta_evals == 2


def test_solve_pure_is_deterministic():
    inst = rand_instance(3, 60)
    a = solve(inst)
    b = solve(inst)
    assert a.best_tour.order == b.best_tour.order
    assert a.best_tour.length == b.best_tour.length
    assert a.delta_evals == b.delta_evals


def test_pure_equals_public_op_replay():
    """The engine is the same algorithm as the exposed step operations."""
    for seed in (0, 1, 2, 3):
        for objective in Objective:
            inst = rand_instance(seed, 14)
            pair = init_pair(inst, objective)[0]
            third = init_third(inst, pair, objective)[0]
            tour = Tour.from_order(inst, pair)
            tour = insert(tour, Candidate(0, third, insertion_delta(inst, tour, 0, third)))
            while tour.size < 14:
                cands = select_candidates(inst, tour, objective=objective)
                tour = insert(tour, pure_tie_break(cands), inst)
            res = solve(inst, SolverConfig(objective=objective))
            assert res.best_tour.order == tour.order
            assert res.best_tour.length == pytest.approx(tour.length, rel=1e-12)


def test_delta_evals_closed_form_when_tie_free():
    for n in (2, 3, 5, 9, 33):
        inst = rand_instance(17, n)
        res = solve(inst)
        assert res.branch_events == 0
        assert res.delta_evals == (n**3 - n) // 6 - (n - 1)


def test_delta_evals_can_be_disabled():
    inst = rand_instance(1, 12)
    res = solve(inst, SolverConfig(count_deltas=False))
    assert res.delta_evals == 0
    assert res.best_tour.order == solve(inst).best_tour.order


def test_full_contains_pure_path_and_best_is_leaf_extreme():
    for seed in range(6):
        inst = rand_instance(seed, 7, continuous=False, grid=5)
        for objective in Objective:
            pure = solve(inst, SolverConfig(objective=objective))
            full = solve(inst, SolverConfig(objective=objective, branching=Branching.FULL))
            assert full.all_leaves, "full mode must expose its leaves"
            leaf_set = {canon(t.order) for t in full.all_leaves}
            assert canon(pure.best_tour.order) in leaf_set
            lengths = [t.length for t in full.all_leaves]
            ext = min(lengths) if objective is Objective.MIN_TOUR else max(lengths)
            assert full.best_tour.length == ext
            for t in full.all_leaves:
                assert_valid_tour(inst, t)


def test_full_dedups_symmetric_duplicates():
    inst = Instance.from_matrix(np.ones((4, 4)) - np.eye(4))
    res = solve(inst, SolverConfig(branching=Branching.FULL))
    assert res.branch_events > 0
    assert res.dedup_merges > 0
    # the three distinct 4-cycles, every one of length 4
    assert len(res.all_leaves) == 3
    assert all(t.length == pytest.approx(4.0) for t in res.all_leaves)


def test_pruned_explores_subset_of_full():
    for seed in range(6):
        inst = rand_instance(seed, 7, continuous=False, grid=4)
        full = solve(inst, SolverConfig(branching=Branching.FULL))
        pruned = solve(inst, SolverConfig(branching=Branching.PRUNED))
        assert pruned.best_tour.length >= full.best_tour.length - 1e-12
        assert_valid_tour(inst, pruned.best_tour)
        assert pruned.max_live_branches <= max(full.max_live_branches, 1)


def test_pruned_keeps_extreme_intermediate_branches():
    # collinear points with a forced tie: two mirrored partial routes of
    # different... equal length survive, shorter variants are cut
    inst = rand_instance(11, 8, continuous=False, grid=3)
    res = solve(inst, SolverConfig(branching=Branching.PRUNED))
    assert res.pruned_branches >= 0
    assert_valid_tour(inst, res.best_tour)


def test_branch_cap_full_raises_with_partial_result():
    inst = Instance.from_matrix(np.ones((7, 7)) - np.eye(7))
    with pytest.raises(BranchCapExceeded) as exc:
        solve(inst, SolverConfig(branching=Branching.FULL, branch_cap=3))
    res = exc.value.result
    assert res.truncated
    assert res.best_tour.length == pytest.approx(7.0)
    assert res.max_live_branches <= 3 or res.branch_events > 0


def test_branch_cap_pruned_trims_silently():
    inst = Instance.from_matrix(np.ones((7, 7)) - np.eye(7))
    res = solve(inst, SolverConfig(branching=Branching.PRUNED, branch_cap=2))
    assert res.truncated
    assert sorted_tuple(res.best_tour.order) == tuple(range(7))


def test_objectives_order_sanely():
    for seed in range(4):
        inst = rand_instance(seed, 20)
        lo = solve(inst, SolverConfig(objective=Objective.MIN_TOUR))
        hi = solve(inst, SolverConfig(objective=Objective.MAX_TOUR))
        assert hi.best_tour.length > lo.best_tour.length
        assert_valid_tour(inst, lo.best_tour)
        assert_valid_tour(inst, hi.best_tour)


@settings(max_examples=20)
@given(
    st.integers(0, 2**32),
    st.integers(2, 24),
    st.sampled_from(list(Branching)),
    st.sampled_from(list(Objective)),
)
def test_solve_always_returns_valid_tours(seed, n, branching, objective):
    inst = rand_instance(seed, n, continuous=False, grid=8)
    try:
        res = solve(inst, SolverConfig(objective=objective, branching=branching))
    except BranchCapExceeded as e:
        res = e.result
    assert_valid_tour(inst, res.best_tour)
    assert res.max_live_branches >= 1
    assert res.delta_evals >= 0


def test_matrix_instances_are_supported_end_to_end():
    rng = np.random.default_rng(5)
    a = rng.random((9, 9))
    m = np.triu(a, 1)
    m = m + m.T
    inst = Instance.from_matrix(m)
    res = solve(inst)
    assert_valid_tour(inst, res.best_tour)
