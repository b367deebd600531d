from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accumalg.dynamics import (
    TransitionModel,
    b_oracle,
    exact_dataset,
    ground_truth_point,
    reach,
    sample_dataset,
)
from accumalg.hypercube import Edge, incoming, nodes_at_level
from accumalg.polyalg import avar
from accumalg.sysgen import build_system, residuals

F = Fraction


def toy_component_one(t=F(1, 2)):
    return TransitionModel.from_free(
        3,
        {
            avar(0b000, 0b100, 3): F(1, 3),
            avar(0b000, 0b010, 3): F(0),
            avar(0b001, 0b101, 3): F(1),
            avar(0b010, 0b110, 3): t,
            avar(0b100, 0b110, 3): F(0),
        },
    )


class TestModel:
    def test_sum_checked(self):
        with pytest.raises(ValueError, match="sum"):
            TransitionModel(1, {Edge(0, 1): F(1, 2)})

    def test_float_tolerance(self):
        TransitionModel(2, {Edge(0, 1): 0.3, Edge(0, 2): 0.7 + 1e-13, Edge(1, 3): 1.0, Edge(2, 3): 1.0})

    def test_out_of_range(self):
        with pytest.raises(ValueError, match="out of"):
            TransitionModel(2, {Edge(0, 1): F(3, 2), Edge(0, 2): F(-1, 2), Edge(1, 3): 1, Edge(2, 3): 1})

    def test_free_round_trip(self):
        m = TransitionModel.random(4, np.random.default_rng(0), exact=True)
        assert TransitionModel.from_free(4, m.free_values()) == m

    def test_eliminated_edge_takes_remainder(self):
        m = TransitionModel.from_free(2, {avar(0, 2, 2): 0.6})
        assert m.a[Edge(0, 1)] == pytest.approx(0.4)
        assert m.a[Edge(1, 3)] == 1

    def test_clip(self):
        vals = {v: 0.6 for v in TransitionModel.uniform(3).free_values()}
        with pytest.raises(ValueError):
            TransitionModel.from_free(3, vals)
        m = TransitionModel.from_free(3, vals, clip=True)
        assert m.a[Edge(0, 1)] == 0 and m.a[Edge(0, 2)] == pytest.approx(0.5)


class TestReach:
    def test_uniform(self):
        R = reach(TransitionModel.uniform(3))
        assert R[0b110] == F(1, 3)
        assert R[0b111] == 1

    def test_toy_component(self):
        assert reach(toy_component_one())[0b101] == 1

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_levels_normalized(self, L, seed):
        m = TransitionModel.random(L, np.random.default_rng(seed), exact=True)
        R = reach(m)
        for k in range(L + 1):
            assert sum(R[n] for n in nodes_at_level(L, k)) == 1


class TestOracle:
    def test_toy_component(self):
        assert b_oracle(toy_component_one())[Edge(0b101, 0b111)] == 1

    def test_uniform_two_features(self):
        b = b_oracle(TransitionModel.uniform(2))
        assert b[Edge(0b01, 0b11)] == b[Edge(0b10, 0b11)] == F(1, 2)

    def test_zero_mass_branch(self):
        b = b_oracle(toy_component_one())
        # 011 and 110 are unreachable, so b's into them are undefined; 111 gets no mass via 011
        assert b[Edge(0b010, 0b011)] is None
        assert b[Edge(0b010, 0b110)] is None
        assert b[Edge(0b011, 0b111)] == 0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_defined_values_sum_to_one(self, L, seed):
        m = TransitionModel.random(L, np.random.default_rng(seed), exact=True)
        b = b_oracle(m)
        for j in range(1, 1 << L):
            vals = [b[e] for e in incoming(j, L)]
            if all(v is not None for v in vals):
                assert sum(vals) == 1


class TestExactDataset:
    def test_point_mass_on_root(self):
        N = exact_dataset(TransitionModel.uniform(3), [1, 0, 0, 0])
        assert N[0] == 1 and sum(N) == 1

    def test_toy_component(self):
        assert exact_dataset(toy_component_one())[0b101] == F(1, 4)

    def test_uniform_two_features(self):
        assert exact_dataset(TransitionModel.uniform(2)) == [F(1, 3), F(1, 6), F(1, 6), F(1, 3)]

    def test_bad_distribution(self):
        with pytest.raises(ValueError):
            exact_dataset(TransitionModel.uniform(2), [F(1, 2), F(1, 2)])


class TestSampling:
    def test_root_only(self):
        d = sample_dataset(TransitionModel.uniform(3), 1, seed=0, q=[1, 0, 0, 0])
        assert d.counts[0] == 1 and d.n == 1

    def test_deterministic(self):
        m = TransitionModel.random(4, np.random.default_rng(7))
        assert sample_dataset(m, 5000, seed=3) == sample_dataset(m, 5000, seed=3)
        assert sample_dataset(m, 5000, seed=3) != sample_dataset(m, 5000, seed=4)

    def test_within_multinomial_bounds(self):
        m = TransitionModel.uniform(3)
        n = 10**5
        d = sample_dataset(m, n, seed=11)
        for p, c in zip(exact_dataset(m), d.counts):
            p = float(p)
            sigma = np.sqrt(n * p * (1 - p))
            assert abs(c - n * p) <= 3 * sigma + 1e-9

    def test_zero_n_rejected(self):
        with pytest.raises(ValueError):
            sample_dataset(TransitionModel.uniform(2), 0, seed=0)


class TestRoundTrip:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 4), st.integers(0, 2**32 - 1))
    def test_ground_truth_is_exact_zero(self, L, seed):
        rng = np.random.default_rng(seed)
        m = TransitionModel.random(L, rng, exact=True)
        w = [F(int(x)) for x in rng.integers(1, 20, size=L + 1)]
        q = [x / sum(w) for x in w]
        system = build_system(exact_dataset(m, q))
        truth = ground_truth_point(m, system.variables)
        assert all(v is not None for v in truth.values())
        assert all(r == 0 for r in residuals(system, truth, exact=True))
