import numpy as np
import pytest

from swarmtrust.consensus import (DriftPolicy, WmsrParams, consensus_step,
                                  legit_mean_error, run_target_agreement,
                                  trajectory_to_csv, wmsr_step)
from swarmtrust.errors import InputError
from swarmtrust.estimation import weight_from_adjacency
from swarmtrust.threat import ObservationChannel
from swarmtrust.topology import CommGraph, RoleAssignment, complete_world, \
    fixture_graph
from swarmtrust.trust import World, truth_vector


def fig3_world(eps=1 / 3):
    g, roles = fixture_graph("fig3")
    return World(g, roles, ObservationChannel(eps))


class TestLinearConsensus:
    def test_step_is_matmul(self):
        W = np.array([[0.5, 0.5], [0.25, 0.75]])
        x = np.array([1.0, 3.0])
        assert np.allclose(consensus_step(W, x), W @ x)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            consensus_step(np.eye(3), np.zeros(2))

    def test_complete_graph_converges_to_average(self):
        g, _ = complete_world(6, 0, 0)
        W = weight_from_adjacency(g.adj_self.astype(float))
        x = np.arange(6, dtype=float)
        for _ in range(60):
            x = consensus_step(W, x)
        assert np.allclose(x, 2.5, atol=1e-8)


class TestWmsrStep:
    def test_no_trim_is_neighborhood_average(self):
        g = CommGraph(3, [(0, 1), (0, 2)])
        x = np.array([0.0, 3.0, 6.0])
        assert wmsr_step(g, x, 0, 0) == pytest.approx(3.0)

    def test_trims_extremes(self):
        g, _ = complete_world(5, 0, 0)
        x = np.array([2.0, 100.0, -50.0, 2.0, 2.0])
        # F=1 removes one high (100) and one low (-50)
        assert wmsr_step(g, x, 1, 0) == pytest.approx(2.0)

    def test_trim_bounded_by_available(self):
        g = CommGraph(2, [(0, 1)])
        x = np.array([1.0, 5.0])
        # only one higher neighbor exists; it is trimmed, self remains
        assert wmsr_step(g, x, 3, 0) == pytest.approx(1.0)

    def test_negative_trim_rejected(self):
        g = CommGraph(2, [(0, 1)])
        with pytest.raises(InputError):
            wmsr_step(g, np.zeros(2), -1, 0)

    def test_isolated_node_keeps_value(self):
        g = CommGraph(2, [])
        x = np.array([4.0, 9.0])
        assert wmsr_step(g, x, 1, 0) == pytest.approx(4.0)

    def test_params_validation(self):
        with pytest.raises(InputError):
            WmsrParams(-1)


class TestTargetAgreement:
    def test_unknown_mode(self):
        with pytest.raises(InputError):
            run_target_agreement(fig3_world(), "psychic", 5,
                                 np.random.default_rng(0))

    def test_zero_adversary_consensus(self):
        g, _ = fixture_graph("fig3")
        legit = g.induced(list(range(12)))
        w = World(legit, RoleAssignment.all_legitimate(12),
                  ObservationChannel(0.3))
        traj = run_target_agreement(w, "wmsr", 200, np.random.default_rng(1),
                                    noise_sigma=0.0)
        spread = traj[-1].max(axis=0) - traj[-1].min(axis=0)
        assert (spread < 1e-3).all()

    def test_wmsr_only_drifts_away(self):
        w = fig3_world()
        traj = run_target_agreement(w, "wmsr", 150, np.random.default_rng(2))
        err = legit_mean_error(traj, w.roles.legitimate, np.zeros(2))
        assert err[-1] > err[0]
        assert np.all(np.diff(err[75:]) > 0)

    def test_trust_filter_restores_agreement(self):
        w = fig3_world()
        traj = run_target_agreement(w, "fsr_then_wmsr", 150,
                                    np.random.default_rng(3),
                                    use_ground_truth_trust=True)
        err = legit_mean_error(traj, w.roles.legitimate, np.zeros(2))
        assert err[-1] <= 2 * 0.5

    def test_fsr_then_average_tracks_target(self):
        w = fig3_world()
        traj = run_target_agreement(w, "fsr_then_average", 150,
                                    np.random.default_rng(4),
                                    use_ground_truth_trust=True)
        err = legit_mean_error(traj, w.roles.legitimate, np.zeros(2))
        assert err[-1] < err[0] + 0.2

    def test_drift_rate_scales_damage(self):
        w = fig3_world()
        errs = []
        for rate in (0.02, 0.2):
            traj = run_target_agreement(w, "wmsr", 120,
                                        np.random.default_rng(5),
                                        drift=DriftPolicy(rate))
            errs.append(legit_mean_error(traj, w.roles.legitimate,
                                         np.zeros(2))[-1])
        assert errs[1] > errs[0]

    def test_supplied_trust_vectors_used(self):
        w = fig3_world()
        vecs = {int(i): truth_vector(w.graph, w.roles, int(i))
                for i in np.nonzero(w.roles.legitimate)[0]}
        a = run_target_agreement(w, "fsr_then_wmsr", 50,
                                 np.random.default_rng(6),
                                 trust_vectors=vecs)
        b = run_target_agreement(w, "fsr_then_wmsr", 50,
                                 np.random.default_rng(6),
                                 use_ground_truth_trust=True)
        assert np.allclose(a, b)


def test_trajectory_csv_shape():
    traj = np.zeros((3, 2, 2))
    text = trajectory_to_csv(traj)
    lines = text.strip().splitlines()
    assert lines[0] == "t,node,dim,value"
    assert len(lines) == 1 + 3 * 2 * 2
