import numpy as np
import pytest

from swarmtrust.errors import (FloodingStallError, InputError,
                               RankDeficiencyError)
from swarmtrust.estimation import (PartialAdjacency, adjacency_to_csv, fram,
                                   fram_states, observability_window,
                                   output_matrix,
                                   perceived_vs_actual_connectivity,
                                   recover_weight_matrix,
                                   weight_from_adjacency)
from swarmtrust.threat import NO_DATA, ObservationChannel
from swarmtrust.topology import (CommGraph, RoleAssignment, complete_world,
                                 fixture_graph, gen_random_geometric)
from swarmtrust.trust import World, truth_vector


def perfect_trust(g, roles):
    return {i: truth_vector(g, roles, i)
            for i in np.nonzero(roles.legitimate)[0]}


def estimation5_world():
    g, roles = fixture_graph("estimation5")
    return World(g, roles, ObservationChannel(0.3))


class TestFram:
    def test_adversary_free_returns_true_adjacency(self):
        w = estimation5_world()
        trust = perfect_trust(w.graph, w.roles)
        out = fram(w, trust, rng=np.random.default_rng(0))
        G = w.graph.adj_self.astype(np.int8)
        assert sorted(out) == [0, 1, 2, 3, 4]
        for m in out.values():
            assert np.array_equal(m, G)

    def test_first_exchange_partial_rows(self):
        w = estimation5_world()
        trust = perfect_trust(w.graph, w.roles)
        state = next(fram_states(w, trust, np.random.default_rng(0)))
        part = state[0]
        nodata = part.nodata_rows()
        # robot 0 hears rows only from its neighborhood {0, 2, 3}
        assert list(np.nonzero(nodata)[0]) == [1, 4]
        assert not part.complete()

    def test_monotone_filling(self):
        w = estimation5_world()
        trust = perfect_trust(w.graph, w.roles)
        gen = fram_states(w, trust, np.random.default_rng(0))
        prev = {i: p.nodata_rows().sum() for i, p in next(gen).items()}
        for _ in range(4):
            cur = {i: p.nodata_rows().sum() for i, p in next(gen).items()}
            assert all(cur[i] <= prev[i] for i in cur)
            prev = cur

    def test_fig3_with_perfect_trust(self):
        g, roles = fixture_graph("fig3")
        w = World(g, roles, ObservationChannel(1 / 3))
        out = fram(w, perfect_trust(g, roles), rng=np.random.default_rng(1))
        expect = g.adj_self.astype(np.int8)
        spoofed = np.nonzero(roles.spoofed)[0]
        expect[spoofed, :] = 0
        expect[:, spoofed] = 0
        for m in out.values():
            assert np.array_equal(m, expect)

    def test_stall_raises_with_partial(self):
        # a 2-exchange cap on a 6-path leaves the far rows undelivered
        g = CommGraph(6, [(i, i + 1) for i in range(5)])
        roles = RoleAssignment.all_legitimate(6)
        w = World(g, roles, ObservationChannel(0.3))
        with pytest.raises(FloodingStallError) as err:
            fram(w, perfect_trust(g, roles), max_rounds=2,
                 rng=np.random.default_rng(2))
        assert isinstance(err.value.partial[0], PartialAdjacency)

    def test_unreferenced_ids_resolve_to_zero(self):
        # robots in a foreign component are never advertised by anyone the
        # owner trusts, so their rows settle to zero instead of stalling
        g = CommGraph(4, [(0, 1), (2, 3)])
        roles = RoleAssignment.all_legitimate(4)
        w = World(g, roles, ObservationChannel(0.3))
        out = fram(w, perfect_trust(g, roles), rng=np.random.default_rng(2))
        assert (out[0][2:] == 0).all()
        assert (out[0][:2, :2] == g.adj_self[:2, :2]).all()


class TestWeights:
    def test_uniform_row(self):
        g, _ = fixture_graph("estimation5")
        W = weight_from_adjacency(g.adj_self.astype(float))
        assert np.allclose(W[0], [1 / 3, 0, 1 / 3, 1 / 3, 0])
        assert np.allclose(W.sum(axis=1), 1.0)

    def test_single_node(self):
        assert np.array_equal(weight_from_adjacency(np.ones((1, 1))),
                              np.ones((1, 1)))

    def test_metropolis_row_stochastic(self):
        g, _ = complete_world(5, 0, 0)
        W = weight_from_adjacency(g.adj_self.astype(float),
                                  scheme="metropolis")
        assert np.allclose(W.sum(axis=1), 1.0)
        assert (W >= 0).all()

    def test_missing_self_loops_rejected(self):
        g, _ = complete_world(3, 0, 0)
        with pytest.raises(InputError):
            weight_from_adjacency(g.adj.astype(float))


class TestObservability:
    def test_window_basics(self):
        g, _ = fixture_graph("estimation5")
        W = weight_from_adjacency(g.adj_self.astype(float))
        C = output_matrix(g, 0)
        b0 = observability_window(C, W, 0, 0)
        assert np.array_equal(b0.block, C)
        bI = observability_window(C, np.eye(5), 0, 3)
        assert np.array_equal(bI.block, np.vstack([C] * 4))

    def test_window_matches_powers(self):
        g = CommGraph(3, [(0, 1), (1, 2)])
        W = weight_from_adjacency(g.adj_self.astype(float))
        C = output_matrix(g, 1)
        blk = observability_window(C, W, 0, 2).block
        direct = np.vstack([C, C @ W, C @ W @ W])
        assert np.allclose(blk, direct)

    def test_bad_window(self):
        with pytest.raises(InputError):
            observability_window(np.eye(2), np.eye(2), 2, 1)

    def test_identity_recovery(self):
        C = np.eye(3)
        oe = observability_window(C, np.eye(3), 0, 2)
        ol = observability_window(C, np.eye(3), 1, 3)
        What, res = recover_weight_matrix(oe, ol)
        assert np.allclose(What, np.eye(3))
        assert res < 1e-12

    def test_random_graph_recovery(self):
        rng = np.random.default_rng(7)
        found = 0
        for _ in range(30):
            g, _ = gen_random_geometric(6, 2.0, rng)
            if g.adj.sum() == 0:
                continue
            try:
                W = weight_from_adjacency(g.adj_self.astype(float))
            except InputError:
                continue
            C = output_matrix(g, 0)
            try:
                oe = observability_window(C, W, 0, 6)
                ol = observability_window(C, W, 1, 7)
                What, _ = recover_weight_matrix(oe, ol)
            except RankDeficiencyError:
                continue
            assert np.linalg.norm(What - W) <= 1e-8
            found += 1
        assert found >= 5

    def test_unobservable_raises_rank_error(self):
        # observer on one component of a disconnected graph
        g = CommGraph(4, [(0, 1), (2, 3)])
        W = weight_from_adjacency(g.adj_self.astype(float))
        C = output_matrix(g, 0)
        oe = observability_window(C, W, 0, 5)
        ol = observability_window(C, W, 1, 6)
        with pytest.raises(RankDeficiencyError) as err:
            recover_weight_matrix(oe, ol)
        assert err.value.deficiency >= 1


class TestConnectivityComparison:
    def test_no_spoofed_equal(self):
        g, _ = complete_world(5, 0, 0)
        roles = RoleAssignment.all_legitimate(5)
        p, a = perceived_vs_actual_connectivity(g, roles)
        assert p == pytest.approx(a)

    def test_spoofed_inflate(self):
        g, roles = complete_world(5, 0, 3)
        p, a = perceived_vs_actual_connectivity(g, roles)
        assert p > a


def test_adjacency_csv_renders_nodata():
    m = np.array([[1, NO_DATA], [0, 1]], dtype=np.int8)
    assert adjacency_to_csv(m) == "1,-\n0,1\n"
