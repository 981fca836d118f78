"""Naive mean field and the boundary compensation subproblem."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from localmrf import (
    MeanFieldConfig,
    boundary_mean_field,
    build_model,
    make_region,
    marginals,
    mean_field,
    variational_objective,
)
from conftest import chain_model, random_connected_model


class TestMeanField:
    def test_no_couplings_is_exact_tanh(self):
        m = build_model([], [0.3, -0.7, 0.0])
        state = mean_field(m)
        assert state.converged
        np.testing.assert_allclose(state.m, np.tanh(m.h), atol=1e-12)
        np.testing.assert_allclose(marginals(state), (1.0 + np.tanh(m.h)) / 2.0, atol=1e-12)

    def test_weak_ferromagnet_zero_field(self):
        m = build_model([(0, 1, 0.1)], [0.0, 0.0])
        state = mean_field(m)
        assert state.converged
        np.testing.assert_allclose(state.m, 0.0, atol=1e-8)

    def test_fixed_point_frozen(self):
        m = build_model([(0, 1, 0.3)], [0.2, 0.0])
        state = mean_field(m)
        assert state.converged and state.residual <= 1e-8
        assert state.m[0] == pytest.approx(0.21595446158382584, abs=1e-7)
        assert state.m[1] == pytest.approx(0.06469584848566258, abs=1e-7)

    def test_objective_frozen_value(self):
        m = build_model([(0, 1, 0.3)], [0.2, 0.0])
        obj = variational_objective(m, np.array([0.4, -0.1]))
        assert obj == pytest.approx(1.3670031157684819, abs=1e-12)

    def test_objective_bounded_by_log_partition(self):
        from localmrf import log_partition

        m = random_connected_model(6, 9, j_scale=0.4)
        state = mean_field(m)
        assert variational_objective(m, state.m) <= log_partition(m) + 1e-9

    @given(st.integers(2, 9), st.integers(0, 10**6))
    def test_sweeps_monotone_in_objective(self, n, seed):
        m = random_connected_model(n, seed, j_scale=0.8)
        cur = np.tanh(m.h)
        prev_obj = variational_objective(m, cur)
        for _ in range(6):
            state = mean_field(m, init=cur, max_iter=1, restarts=1)
            obj = variational_objective(m, state.m)
            assert obj >= prev_obj - 1e-12
            prev_obj, cur = obj, state.m

    @given(st.integers(2, 9), st.integers(0, 10**6))
    def test_means_in_unit_interval(self, n, seed):
        m = random_connected_model(n, seed, j_scale=2.0, h_scale=2.0)
        state = mean_field(m, max_iter=50)
        assert np.all(np.abs(state.m) <= 1.0)

    def test_restarts_deterministic(self):
        m = random_connected_model(8, 4, j_scale=1.5)
        a = mean_field(m, restarts=4, seed=123)
        b = mean_field(m, restarts=4, seed=123)
        assert np.array_equal(a.m, b.m)

    def test_restarts_escape_symmetric_saddle(self):
        # tanh(h) = 0 is a stationary start; restarts find a broken solution
        m = build_model([(0, 1, 2.0)], [0.0, 0.0])
        stuck = mean_field(m, restarts=1)
        assert np.allclose(stuck.m, 0.0)
        state = mean_field(m, restarts=3, seed=0)
        assert abs(state.m[0]) > 0.5
        assert variational_objective(m, state.m) > variational_objective(m, stuck.m)

    def test_restart_count_validated(self):
        m = build_model([], [0.0])
        with pytest.raises(ValueError, match="restarts"):
            mean_field(m, restarts=0)

    def test_relabel_invariance(self):
        m = build_model([(0, 1, 0.4), (1, 2, -0.2)], [0.3, -0.1, 0.2])
        perm = {0: 2, 1: 0, 2: 1}
        m2 = build_model(
            [(perm[u], perm[v], j) for u, v, j in m.edges()],
            [m.h[{v: k for k, v in perm.items()}[i]] for i in range(3)],
        )
        # sweep order follows node ids, so agreement is only up to tol
        a = mean_field(m, tol=1e-13, restarts=1)
        b = mean_field(m2, tol=1e-13, restarts=1)
        for old, new in perm.items():
            assert a.m[old] == pytest.approx(b.m[new], abs=1e-10)

    def test_non_convergence_flagged(self):
        m = build_model([(0, 1, 0.5)], [0.4, 0.0])
        state = mean_field(m, tol=1e-30, max_iter=2, restarts=1)
        assert not state.converged
        assert state.iterations == 2
        assert state.residual > 1e-30


class TestBoundaryMeanField:
    def test_chain_joint_solve_frozen(self, chain3_mf):
        # variables {1, 2}: m_1 = tanh(0.5 m_2), m_2 = tanh(1 + 0.5 m_1)
        region = make_region(chain3_mf, [0, 1], 0)
        means, state = boundary_mean_field(chain3_mf, region)
        assert state.converged
        assert set(means) == {2}
        assert means[2] == pytest.approx(0.8327154235150449, abs=1e-7)

    def test_without_local_terms_uses_zero_fields(self, chain3_mf):
        region = make_region(chain3_mf, [0, 1], 0)
        cfg = MeanFieldConfig(include_local_terms=False)
        means, state = boundary_mean_field(chain3_mf, region, config=cfg)
        assert state.converged
        # zero-field symmetric subproblem: means vanish
        assert means[2] == pytest.approx(0.0, abs=1e-8)

    def test_symmetric_boundary_means_vanish(self):
        m = build_model([(0, 1, 0.2), (1, 2, 0.2), (2, 3, 0.2)], [0.0] * 4)
        region = make_region(m, [0, 1], 0)
        means, _ = boundary_mean_field(m, region)
        assert means[2] == pytest.approx(0.0, abs=1e-8)

    def test_subproblem_ignores_interior_and_far_nodes(self):
        # chain 0-1-2-3-4, alpha = {0,1,2}: subproblem is {2,3} only
        m = chain_model([0.3, 0.3, 0.5, 0.4], [0.0, 0.0, 0.0, 1.0, 0.0])
        m2 = chain_model([2.9, 0.3, 0.5, 0.4], [5.0, 0.0, 0.0, 1.0, -7.0])
        means, _ = boundary_mean_field(m, make_region(m, [0, 1, 2], 0))
        means2, _ = boundary_mean_field(m2, make_region(m2, [0, 1, 2], 0))
        assert means == means2
        assert set(means) == {3}

    def test_intra_layer_edges_included(self):
        # two cross pairs; the beta-side edge (2,3) couples the two means
        m = build_model(
            [(0, 1, 0.1), (0, 2, 0.4), (1, 3, 0.4), (2, 3, 0.6)],
            [0.0, 0.0, 0.8, 0.0],
        )
        region = make_region(m, [0, 1], 0)
        means, _ = boundary_mean_field(m, region)
        cfg_off = MeanFieldConfig(include_local_terms=False)
        means_off, _ = boundary_mean_field(m, region, config=cfg_off)
        # with the (2,3) edge and h_2 > 0 both means are pulled positive
        assert means[3] > means_off[3] + 0.05
        assert means[2] > 0.3
