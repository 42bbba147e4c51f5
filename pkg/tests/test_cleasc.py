from __future__ import annotations

import itertools

import numpy as np
import pytest

from cleas import cleasc
from cleas.cleasc import DROP_AND_EXTEND, ONLY_DROP, ONLY_USE, USE_AND_EXTEND


def oracle_extend(old):
    """Hand-rolled neighbour average: every new cell averages the old cells touching it."""
    k = len(old)
    out = [[None] * (k + 1) for _ in range(k + 1)]
    for r in range(k + 1):
        for c in range(k + 1):
            if r < k and c < k:
                out[r][c] = old[r][c]
                continue
            vals = [old[i][j] for i in range(k) for j in range(k) if abs(i - r) <= 1 and abs(j - c) <= 1]
            out[r][c] = sum(vals) / len(vals)
    return out


def test_alphabet_order():
    assert cleasc.FOUR_WAY == ("only-use", "use-and-extend", "only-drop", "drop-and-extend")
    assert [cleasc.is_use(a) for a in range(4)] == [True, True, False, False]
    assert [cleasc.is_extend(a) for a in range(4)] == [False, True, False, True]


def test_three_to_four_adds_seven_entries():
    old = np.arange(1.0, 10.0).reshape(3, 3)
    new = cleasc.extend_filter(old)
    assert new.shape == (4, 4)
    assert cleasc.new_entry_mask(3).sum() == 16 - 9
    assert np.array_equal(new[:3, :3], old)  # bit-exact
    assert new[:3, :3].tobytes() == old.tobytes()


def test_one_to_nine_filter_matches_neighbour_oracle():
    old = np.arange(1.0, 10.0).reshape(3, 3)
    new = cleasc.extend_filter(old)
    np.testing.assert_array_equal(new, np.array(oracle_extend(old.tolist())))
    # values worked out by hand from the 8-neighbourhood rule
    assert new[0, 3] == 4.5 and new[1, 3] == 6.0 and new[2, 3] == 7.5
    assert new[3, 0] == 7.5 and new[3, 1] == 8.0 and new[3, 2] == 8.5 and new[3, 3] == 9.0


def test_extension_acts_per_slice(rng):
    bank = rng.standard_normal((4, 2, 3, 3))
    grown = cleasc.extend_filter(bank)
    for o in range(4):
        for c in range(2):
            np.testing.assert_array_equal(grown[o, c], cleasc.extend_filter(bank[o, c]))


def test_one_by_one_filter_grows_to_constant():
    assert np.array_equal(cleasc.extend_filter(np.array([[2.5]])), np.full((2, 2), 2.5))


@pytest.mark.parametrize("n", [3, 4])
def test_vote_table_exhaustive(n):
    for combo in itertools.product(range(4), repeat=n):
        extend = sum(a in (USE_AND_EXTEND, DROP_AND_EXTEND) for a in combo)
        assert cleasc.vote_extend(combo) == (extend > n / 2), combo


def test_vote_tie_means_no_extension():
    assert not cleasc.vote_extend([USE_AND_EXTEND, DROP_AND_EXTEND, ONLY_USE, ONLY_DROP])
    assert cleasc.vote_extend([USE_AND_EXTEND, DROP_AND_EXTEND, ONLY_USE])


def test_vote_on_empty_layer():
    with pytest.raises(ValueError):
        cleasc.vote_extend([])


def test_extend_layer_guard_warns():
    bank = cleasc.FilterBank(np.ones((2, 1, 3, 3)), np.array([1, 0]), input_size=3)
    with pytest.warns(RuntimeWarning):
        same = cleasc.extend_layer(bank)
    assert same.kernel == 3 and same.notes
    grown = cleasc.extend_layer(cleasc.FilterBank(np.ones((2, 1, 3, 3)), np.array([1, 0]), input_size=8))
    assert grown.kernel == 4 and grown.output_size == 5
