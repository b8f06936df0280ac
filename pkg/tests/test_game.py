import numpy as np
import pytest

from mergegame.costs import Belief, GameMatrix
from mergegame.game import (
    EquilibriumKind,
    Player,
    check_prop1_assumptions,
    find_pure_nash,
    select_action,
    stackelberg,
)


def game(sv, ev):
    return GameMatrix.from_arrays(np.array(sv, float), np.array(ev, float))


# independent brute-force oracles -----------------------------------------------

def brute_nash_cells(sv, ev):
    cells = []
    rows, cols = sv.shape
    for r in range(rows):
        for c in range(cols):
            if all(sv[r, c] <= sv[r2, c] for r2 in range(rows)) and \
               all(ev[r, c] <= ev[r, c2] for c2 in range(cols)):
                cells.append((r, c))
    return cells


def brute_stackelberg(sv, ev, leader):
    rows, cols = sv.shape
    if leader == "ev":
        best = None
        for c in range(cols):
            r = min(range(rows), key=lambda r: (sv[r, c], ev[r, c], r))
            key = (ev[r, c], c)
            if best is None or key < best[0]:
                best = (key, (r, c))
        return best[1]
    best = None
    for r in range(rows):
        c = min(range(cols), key=lambda c: (ev[r, c], sv[r, c], c))
        key = (sv[r, c], r)
        if best is None or key < best[0]:
            best = (key, (r, c))
    return best[1]


# worked examples ------------------------------------------------------------------

EX_SV = [[1.0, 2.0], [3.0, 4.0]]
EX_EV = [[5.0, 6.0], [2.0, 1.0]]


def test_unique_nash_worked_example():
    eqs = find_pure_nash(game(EX_SV, EX_EV))
    assert [e.cell() for e in eqs] == [(0, 0)]
    assert eqs[0].social_cost == pytest.approx(6.0)


def test_dominant_row_and_column():
    g = game([[1, 1, 1], [2, 3, 4]], [[5, 1, 7], [6, 2, 8]])
    assert [e.cell() for e in find_pure_nash(g)] == [(0, 1)]


def test_anti_coordination_has_no_pure_nash():
    g = game([[0, 1], [1, 0]], [[1, 0], [0, 1]])
    assert find_pure_nash(g) == []


def test_stackelberg_ev_leader_worked_example():
    eq = stackelberg(game(EX_SV, EX_EV), Player.EV)
    assert eq.cell() == (0, 0)
    assert eq.kind == EquilibriumKind.STACKELBERG_EV_LEADER


def test_stackelberg_single_row_degenerates():
    g = game([[3.0, 1.0, 2.0]], [[9.0, 4.0, 7.0]])
    assert stackelberg(g, Player.SV).cell() == (0, 1)
    assert stackelberg(g, Player.EV).cell() == (0, 1)


def test_selection_policy():
    # two equilibria with social costs 7 and 5: take the cheaper cell
    g = game([[1, 5], [5, 2]], [[6, 9], [9, 3]])
    eqs = find_pure_nash(g)
    assert {e.cell() for e in eqs} == {(0, 0), (1, 1)}
    sel = select_action(g)
    assert sel.chosen.cell() == (1, 1) and not sel.fallback_used

    g2 = game([[0, 1], [1, 0]], [[1, 0], [0, 1]])
    sel2 = select_action(g2)
    assert sel2.fallback_used
    assert sel2.chosen.kind == EquilibriumKind.STACKELBERG_SV_LEADER

    sel3 = select_action(game(EX_SV, EX_EV))
    assert sel3.chosen.cell() == (0, 0) and not sel3.fallback_used


def test_nash_matches_brute_force_oracle():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        cols = int(rng.integers(1, 51))
        sv = rng.uniform(0, 100, (2, cols))
        ev = rng.uniform(0, 100, (2, cols))
        got = [e.cell() for e in find_pure_nash(game(sv, ev))]
        assert got == brute_nash_cells(sv, ev)


def test_stackelberg_matches_brute_force_oracle():
    rng = np.random.default_rng(43)
    for _ in range(1000):
        cols = int(rng.integers(1, 51))
        sv = rng.uniform(0, 100, (2, cols))
        ev = rng.uniform(0, 100, (2, cols))
        g = game(sv, ev)
        assert stackelberg(g, Player.EV).cell() == brute_stackelberg(sv, ev, "ev")
        assert stackelberg(g, Player.SV).cell() == brute_stackelberg(sv, ev, "sv")


def test_positive_scaling_leaves_solutions_unchanged():
    rng = np.random.default_rng(44)
    for _ in range(100):
        cols = int(rng.integers(1, 20))
        sv = rng.uniform(0, 100, (2, cols))
        ev = rng.uniform(0, 100, (2, cols))
        base = game(sv, ev)
        # powers of two keep the ordering exactly
        scaled_ev = game(sv, ev * 4.0)
        scaled_sv = game(sv * 0.5, ev)
        cells = [e.cell() for e in find_pure_nash(base)]
        assert [e.cell() for e in find_pure_nash(scaled_ev)] == cells
        assert [e.cell() for e in find_pure_nash(scaled_sv)] == cells
        for leader in (Player.EV, Player.SV):
            assert stackelberg(scaled_ev, leader).cell() == stackelberg(base, leader).cell()
            assert stackelberg(scaled_sv, leader).cell() == stackelberg(base, leader).cell()


def test_select_action_total_and_deterministic():
    rng = np.random.default_rng(45)
    for _ in range(200):
        cols = int(rng.integers(1, 12))
        sv = rng.uniform(0, 10, (2, cols))
        ev = rng.uniform(0, 10, (2, cols))
        g = game(sv, ev)
        s1, s2 = select_action(g), select_action(g)
        assert s1 == s2


# proposition preconditions ------------------------------------------------------

def _monotone_instance(rng, belief_low=0.5):
    cols = int(rng.integers(1, 51))
    sv0 = rng.uniform(0, 100, cols)
    sv1 = sv0 + rng.uniform(0, 100, cols)
    ev1 = rng.uniform(0, 100, cols)
    ev0 = ev1 + rng.uniform(0, 100, cols)
    b = float(rng.uniform(belief_low, 1.0))
    return np.stack([sv0, sv1]), np.stack([ev0, ev1]), Belief(b, 1.0 - b)


def weighted(sv_raw, belief):
    return np.stack([sv_raw[0] * (1.0 - belief.p_assert), sv_raw[1] * belief.p_assert])


def test_check_prop1_assumptions_examples():
    sv = np.array([[1.0, 2.0], [3.0, 4.0]])
    ev = np.array([[5.0, 6.0], [2.0, 1.0]])
    assert check_prop1_assumptions(sv, ev, Belief(0.6, 0.4))
    assert not check_prop1_assumptions(sv, ev, Belief(0.4, 0.6))
    bad_ev = np.array([[5.0, 0.5], [2.0, 1.0]])  # violated in column 1
    assert not check_prop1_assumptions(sv, bad_ev, Belief(0.6, 0.4))


def test_assert_row_equilibrium_exists_under_assumptions():
    rng = np.random.default_rng(46)
    for _ in range(1000):
        sv_raw, ev, belief = _monotone_instance(rng)
        assert check_prop1_assumptions(sv_raw, ev, belief)
        eqs = find_pure_nash(GameMatrix.from_arrays(weighted(sv_raw, belief), ev))
        assert any(e.row == 0 for e in eqs)


def test_yield_row_nash_is_ev_leader_stackelberg():
    rng = np.random.default_rng(47)
    found = 0
    while found < 1000:
        sv_raw, ev, _ = _monotone_instance(rng, belief_low=0.0)
        b = float(rng.uniform(0.0, 1.0))
        belief = Belief(b, 1.0 - b)
        g = GameMatrix.from_arrays(weighted(sv_raw, belief), ev)
        yield_nash = [e for e in find_pure_nash(g) if e.row == 1]
        if not yield_nash:
            continue
        found += 1
        se = stackelberg(g, Player.EV)
        for eq in yield_nash:
            assert se is not None
            assert g.ev[se.row, se.col] == g.ev[eq.row, eq.col]
