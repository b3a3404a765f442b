import numpy as np
import pytest
from hypothesis import given, strategies as st

from drloc.grid import (
    ACTION_OFFSETS,
    Action,
    ActionLeavesGrid,
    CellIndex,
    GridMap,
    Position,
    apply_action,
    available_actions,
    available_mask,
    cell_center,
    gateway_grid_layout,
    nearest_cell,
)


def test_nine_actions_with_stay():
    assert len(Action) == 9
    assert tuple(ACTION_OFFSETS[Action.STAY]) == (0, 0)
    # offsets are distinct and cover the 3x3 neighbourhood
    assert {tuple(o) for o in ACTION_OFFSETS} == {(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1)}


def test_corner_and_interior_availability():
    g = GridMap(8, 8, 5.0)
    assert len(available_actions(g, (0, 0))) == 4
    assert len(available_actions(g, (3, 4))) == 9
    assert len(available_actions(g, (0, 4))) == 6


def test_single_cell_grid_only_stay():
    g = GridMap(1, 1, 5.0)
    assert available_actions(g, (0, 0)) == frozenset({Action.STAY})


def test_apply_action_leaving_grid_raises():
    g = GridMap(3, 3, 5.0)
    with pytest.raises(ActionLeavesGrid, match="action leaves grid"):
        apply_action(g, (0, 0), Action.S)


def test_cell_center_and_nearest():
    g = GridMap(4, 5, 5.0, Position(10.0, 20.0))
    c = cell_center(g, (2, 3))
    assert c == Position(10.0 + 3.5 * 5, 20.0 + 2.5 * 5)
    assert nearest_cell(g, c) == (2, 3)
    # points outside clamp to the boundary
    assert nearest_cell(g, (-100.0, 1e6)) == (3, 0)


def test_cell_index_bounds():
    g = GridMap(2, 2, 1.0)
    with pytest.raises(IndexError):
        CellIndex(2, 0, g)
    assert CellIndex(1, 0, g).row == 1


def test_gateway_layout_row_major():
    gws = gateway_grid_layout(2, 3, 30.0, 24.0, (10.0, 4.0))
    assert [g.id for g in gws] == [1, 2, 3, 4, 5, 6]
    assert gws[1].position == Position(40.0, 4.0)
    assert gws[3].position == Position(10.0, 28.0)


@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_available_is_exactly_in_bounds(rows, cols, data):
    g = GridMap(rows, cols, 1.0)
    r = data.draw(st.integers(0, rows - 1))
    c = data.draw(st.integers(0, cols - 1))
    mask = available_mask(g, (r, c))
    assert mask[Action.STAY]
    for a in Action:
        dr, dc = ACTION_OFFSETS[a]
        inside = 0 <= r + dr < rows and 0 <= c + dc < cols
        assert mask[a] == inside
        if inside:
            assert apply_action(g, (r, c), a) == (r + dr, c + dc)


def test_centers_row_major():
    g = GridMap(2, 3, 2.0)
    cs = g.centers()
    assert cs.shape == (6, 2)
    np.testing.assert_array_equal(cs[4], cell_center(g, (1, 1)))
