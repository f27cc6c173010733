import numpy as np
import pytest

from cqs import selection


def make_pairs(points, ids=None):
    out = []
    for i, (ini, fin) in enumerate(points):
        out.append(
            selection.ScenarioPair(
                ids[i] if ids else i, np.atleast_1d(ini), np.atleast_1d(fin)
            )
        )
    return out


class TestGrouping:
    def test_identical_pairs_one_group(self):
        pairs = make_pairs([(0.1, 0.2)] * 10)
        groups = selection.group(pairs, selection.SelectionConfig(cell_size=1.0))
        assert len(groups) == 1 and len(groups[0]) == 10

    def test_two_clusters(self):
        pairs = make_pairs([(0.1, 0.1)] * 7 + [(5.0, 5.0)] * 3)
        groups = selection.group(pairs, selection.SelectionConfig(cell_size=1.0))
        assert [len(g) for g in groups] == [7, 3]

    def test_matches_bruteforce_hashing(self):
        rng = np.random.default_rng(0)
        pairs = make_pairs(list(zip(rng.uniform(0, 5, 100), rng.uniform(0, 5, 100))))
        cfg = selection.SelectionConfig(cell_size=0.7)
        groups = selection.group(pairs, cfg)
        brute = {}
        for p in pairs:
            key = (int(np.floor(p.initial[0] / 0.7)), int(np.floor(p.final[0] / 0.7)))
            brute.setdefault(key, []).append(p.cortege_id)
        sizes = sorted((len(v) for v in brute.values()), reverse=True)
        assert [len(g) for g in groups] == sizes
        group_ids = {frozenset(p.cortege_id for p in g) for g in groups}
        brute_ids = {frozenset(v) for v in brute.values()}
        assert group_ids == brute_ids


class TestRejectReplicate:
    def test_all_survive_identity(self):
        pairs = make_pairs([(0.0, 0.0)] * 8)
        cfg = selection.SelectionConfig(cell_size=1.0, min_group_size=4)
        groups = selection.group(pairs, cfg)
        out = selection.reject_and_replicate(groups, cfg, rng_seed=0)
        assert len(out) == 8
        assert {p.cortege_id for p in out} == set(range(8))

    def test_count_restored_after_rejection(self):
        pairs = make_pairs([(0.0, 0.0)] * 10 + [(float(9 + i), 0.0) for i in range(10)])
        cfg = selection.SelectionConfig(cell_size=0.5, min_group_size=4, kept_groups=1)
        groups = selection.group(pairs, cfg)
        out = selection.reject_and_replicate(groups, cfg, rng_seed=1)
        assert abs(len(out) - 20) <= 1

    def test_children_trace_to_survivors(self):
        pairs = make_pairs(
            [(0.0, 0.0)] * 6 + [(4.2, 1.0)] * 6 + [(float(50 + 3 * i), 2.0) for i in range(6)]
        )
        cfg = selection.SelectionConfig(cell_size=0.5, min_group_size=4)
        groups = selection.group(pairs, cfg)
        out = selection.reject_and_replicate(groups, cfg, rng_seed=2)
        survivor_inis = {0.0, 4.2}
        survivor_fins = {0.0, 1.0}
        for p in out:
            assert p.initial[0] in survivor_inis
            assert p.final[0] in survivor_fins

    def test_collapse_raises(self):
        pairs = make_pairs([(float(10 * i), 0.0) for i in range(8)])
        cfg = selection.SelectionConfig(cell_size=0.5, min_group_size=4)
        groups = selection.group(pairs, cfg)
        with pytest.raises(selection.SelectionCollapseError):
            selection.reject_and_replicate(groups, cfg, rng_seed=0)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(5)
        base = [(float(rng.integers(0, 3)), float(rng.integers(0, 3))) for _ in range(24)]
        cfg = selection.SelectionConfig(cell_size=1.0, min_group_size=4)
        out1 = selection.reject_and_replicate(
            selection.group(make_pairs(base), cfg), cfg, rng_seed=9
        )
        perm = list(np.random.default_rng(1).permutation(24))
        permuted = make_pairs([base[j] for j in perm], ids=[perm.index(i) for i in range(24)])
        # same multiset of scenarios with relabeled ids: the grouped sizes and
        # surviving scenario multiset must match exactly for the fixed seed
        out2 = selection.reject_and_replicate(
            selection.group(permuted, cfg), cfg, rng_seed=9
        )
        key = lambda pairs: sorted((p.initial[0], p.final[0]) for p in pairs)
        assert key(out1) == key(out2)


class TestRunSelection:
    def test_frozen_dynamics_fixed_point(self):
        pairs = make_pairs([(0.0, 0.0)] * 12)
        cfg = selection.SelectionConfig(cell_size=1.0, min_group_size=4)
        identity = lambda ps, rng: ps
        history = selection.run_selection(identity, pairs, cfg, iterations=6)
        assert all(len(h) == 12 for h in history)
        final = {(p.initial[0], p.final[0]) for p in history[-1]}
        assert final == {(0.0, 0.0)}

    def test_dispersing_cluster_eliminated(self):
        rng0 = np.random.default_rng(0)
        stable = [(0.0, 0.0)] * 20
        unstable = [(10.0, 10.0)] * 20
        pairs = make_pairs(stable + unstable)
        cfg = selection.SelectionConfig(cell_size=1.0, min_group_size=4)

        def dynamics(ps, rng):
            out = []
            for p in ps:
                if p.initial[0] < 5:
                    fin = p.initial  # coherent cluster
                else:
                    fin = p.initial + rng.uniform(-30, 30, size=1)  # disperses
                out.append(selection.ScenarioPair(p.cortege_id, p.initial, fin))
            return out

        history = selection.run_selection(dynamics, pairs, cfg, iterations=5, rng_seed=3)
        final = history[-1]
        assert all(p.initial[0] < 5 for p in final)

    def test_history_respects_cap(self):
        pairs = make_pairs([(0.0, 0.0)] * 8)
        cfg = selection.SelectionConfig(cell_size=1.0, min_group_size=4)
        history = selection.run_selection(lambda ps, r: ps, pairs, cfg, iterations=4)
        assert len(history) <= 5


class TestAssociation:
    def test_stationary_start_stays(self):
        # all corteges at the minimum with zero speed: the fraction holds
        cfg = selection.SelectionConfig(cell_size=0.4, min_group_size=4)
        res = selection.association_experiment(
            2.0, cfg, rng_seed=0, iterations=6,
            initial_separations=np.full(300, 2.0),
        )
        assert all(f >= 0.95 for f in res.canonical_fraction)

    def test_association_grows_canonical_fraction(self):
        cfg = selection.SelectionConfig(cell_size=0.4, min_group_size=4)
        res = selection.association_experiment(2.0, cfg, rng_seed=7)
        assert res.canonical_fraction[-1] >= 3 * max(res.canonical_fraction[0], 1e-9)
        centers = 0.5 * (res.edges[1:] + res.edges[:-1])
        mode = centers[np.argmax(res.histograms[-1])]
        assert abs(mode - 2.0) <= 0.2

    def test_no_attraction_no_peak(self):
        cfg = selection.SelectionConfig(cell_size=0.4, min_group_size=4)
        res = selection.association_experiment(2.0, cfg, rng_seed=0, attractive=False)
        centers = 0.5 * (res.edges[1:] + res.edges[:-1])
        mode = centers[np.argmax(res.histograms[-1])]
        assert not (abs(mode - 2.0) <= 0.2 and res.canonical_fraction[-1] > 0.5)
