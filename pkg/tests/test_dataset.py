from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accumalg import fixtures
from accumalg.dataset import (
    DataError,
    Dataset,
    load_counts,
    load_samples,
    read_counts,
    read_samples,
    with_overrides,
)


@st.composite
def datasets(draw):
    L = draw(st.integers(1, 4))
    counts = draw(st.lists(st.integers(0, 6), min_size=1 << L, max_size=1 << L))
    if not any(counts):
        counts[0] = 1
    return Dataset(L, tuple(counts))


class TestLoadSamples:
    def test_counterexample_samples(self):
        d = load_samples(["000", "100", "011", "011", "111"])
        assert d.counts == (1, 0, 0, 2, 1, 0, 0, 1)
        assert d.n == 5

    def test_single_feature(self):
        d = load_samples(["0"])
        assert (d.L, d.counts, d.n) == (1, (1, 0), 1)

    def test_toy_samples(self):
        d = load_samples("001 001 100 101 101 101 101 101".split())
        assert d.counts == (0, 2, 0, 0, 1, 5, 0, 0)

    def test_comments_and_blanks(self):
        assert load_samples(["# header", "", "01", "  11  "]).counts == (0, 1, 0, 1)

    @pytest.mark.parametrize(
        "lines, msg",
        [(["01", "011"], "line 2"), (["01", "0x"], "line 2: illegal"), ([], "no samples"), (["# only"], "no samples")],
    )
    def test_rejections(self, lines, msg):
        with pytest.raises(DataError, match=msg):
            load_samples(lines)


class TestLoadCounts:
    def test_toy_counts(self):
        d = load_counts([("001", 2), ("100", 1), ("101", 5)], L=3)
        assert d == load_samples("001 001 100 101 101 101 101 101".split())

    def test_all_zero_rejected(self):
        with pytest.raises(DataError, match="zero"):
            load_counts([("0000", 0), ("1111", 0)])

    def test_duplicate_rejected(self):
        with pytest.raises(DataError, match="duplicate"):
            load_counts([("01", 1), ("01", 2)])

    def test_negative_rejected(self):
        with pytest.raises(DataError, match="negative"):
            load_counts([("01", -1)])

    def test_mixed_lengths_rejected(self):
        with pytest.raises(DataError, match="length"):
            load_counts([("01", 1), ("011", 1)])

    @pytest.mark.parametrize("d0, dfull", [(0, 0), (15, 15), (3, 40)])
    def test_ovarian_with_unknown_states(self, d0, dfull):
        d = fixtures.ovarian_dataset(d0, dfull)
        assert d.n == 57 + d0 + dfull
        assert d.counts[0] == d0 and d.counts[15] == dfull
        assert d.counts[0b1100] == 12

    @settings(max_examples=100, deadline=None)
    @given(datasets())
    def test_samples_equal_counts(self, d):
        assert load_samples(d.to_lines()) == d
        assert load_counts(d.to_count_rows()) == d


class TestProportions:
    def test_toy(self, toy):
        N = toy.proportions()
        assert (N[0b001], N[0b100], N[0b101]) == (Fraction(1, 4), Fraction(1, 8), Fraction(5, 8))
        assert N[0] == N[0b111] == 0

    def test_point_mass(self):
        assert Dataset(2, (0, 0, 3, 0)).proportions()[2] == 1

    def test_counterexample(self):
        assert fixtures.counterexample_dataset().proportions()[0b011] == Fraction(2, 5)

    @settings(max_examples=100, deadline=None)
    @given(datasets())
    def test_sum_to_one(self, d):
        assert sum(d.proportions()) == 1


class TestFiles:
    def test_read_samples(self, tmp_path):
        p = tmp_path / "s.txt"
        p.write_text("# comment\n10\n11\n10\n", encoding="utf-8")
        assert read_samples(p).counts == (0, 0, 2, 1)

    def test_read_counts(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("state,count\n01,3\n11,1\n", encoding="utf-8")
        assert read_counts(p).counts == (0, 3, 0, 1)

    def test_read_counts_needs_header(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("01,3\n", encoding="utf-8")
        with pytest.raises(DataError, match="header"):
            read_counts(p)

    def test_overrides(self):
        d = with_overrides(Dataset(2, (1, 1, 1, 1)), 5, 0)
        assert d.counts == (5, 1, 1, 0)

    def test_digest_depends_on_proportions_only(self):
        assert Dataset(1, (1, 1)).digest() == Dataset(1, (2, 2)).digest()
        assert Dataset(1, (1, 1)).digest() != Dataset(1, (1, 2)).digest()
