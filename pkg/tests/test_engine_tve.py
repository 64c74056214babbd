"""Tree-based elimination: grouped factors on the tabular schedule."""

import itertools

import numpy as np
import pytest

from ctxve import (
    Confactor,
    Context,
    DomainCatalog,
    GenConfig,
    GroupedFactor,
    SplitMix64,
    generate_random_cbn,
    tve_multiply,
    tve_query,
    ve_query,
)
from ctxve.engine_tve import TreeVE
from ctxve.engine_ve import TabularVE

from conftest import T, brute_posterior, ctx, find_confactor, table


class TestTveMultiply:
    def test_single_member_groups_multiply_like_tables(self, tree_net):
        cat = tree_net.catalog
        g1 = GroupedFactor(
            frozenset({1}),
            [Confactor(Context(), table(cat, ["b", "e"], [0.55, 0.45, 0.3, 0.7]))],
        )
        g2 = GroupedFactor(
            frozenset({2}),
            [Confactor(Context(), table(cat, ["b", "z"], [0.77, 0.17, 0.23, 0.83]))],
        )
        out = tve_multiply(cat, g1, g2)
        assert len(out.members) == 1
        got = out.members[0].table
        assert got.lookup(
            {cat.index("b"): T, cat.index("e"): T, cat.index("z"): T}
        ) == pytest.approx(0.4235)

    def test_incompatible_members_vanish(self, tree_net):
        cat = tree_net.catalog
        g1 = GroupedFactor(
            frozenset({1}),
            [
                Confactor(ctx(cat, "a=true"), table(cat, ["e"], [0.3, 0.7])),
                Confactor(ctx(cat, "a=false"), table(cat, ["e"], [0.6, 0.4])),
            ],
        )
        g2 = GroupedFactor(
            frozenset({2}),
            [
                Confactor(ctx(cat, "a=true"), table(cat, ["z"], [0.2, 0.8])),
                Confactor(ctx(cat, "a=false"), table(cat, ["z"], [0.9, 0.1])),
            ],
        )
        out = tve_multiply(cat, g1, g2)
        assert len(out.members) == 2
        assert out.total_size() <= out.signature_space(cat)

    def test_expansion_matches_dense_product(self):
        # grouped multiply against the dense-product oracle on all
        # assignments of a four-variable binary space
        cat = DomainCatalog([(n, ("0", "1")) for n in "pqrs"])
        rng = SplitMix64(17)
        p, q, r, s = range(4)

        def rnd(n):
            return [rng.uniform() for _ in range(n)]

        g1 = GroupedFactor(
            frozenset({0}),
            [
                Confactor(Context([(p, 0)]), cat.table((q, r), rnd(4))),
                Confactor(Context([(p, 1)]), cat.table((q,), rnd(2))),
            ],
        )
        g2 = GroupedFactor(
            frozenset({1}),
            [
                Confactor(Context([(q, 0)]), cat.table((p, s), rnd(4))),
                Confactor(Context([(q, 1)]), cat.table((s,), rnd(2))),
            ],
        )
        out = tve_multiply(cat, g1, g2)

        def dense(group):
            arr = np.zeros((2, 2, 2, 2))
            for combo in itertools.product((0, 1), repeat=4):
                full = Context(list(enumerate(combo)))
                hits = [
                    m
                    for m in group.members
                    if all(full.get(v) == val for v, val in m.body.items())
                ]
                assert len(hits) == 1
                arr[combo] = hits[0].table.lookup(
                    {v: combo[v] for v in hits[0].table.vars}
                )
            return arr

        np.testing.assert_allclose(dense(out), dense(g1) * dense(g2), atol=1e-12)


class TestSchedule:
    def test_posterior_matches_the_other_engines(self, tree_net):
        cat = tree_net.catalog
        e = cat.index("e")
        order = [cat.index(n) for n in ["b", "d", "c", "a", "y", "z"]]
        tve_post, tve_counters = tve_query(tree_net, [e], order=order)
        ve_post, ve_counters = ve_query(tree_net, [e], order=order)
        assert tve_post.max_abs_diff(ve_post) < 1e-9
        assert tve_counters.multiplications <= ve_counters.multiplications

    def test_tabular_network_counts_equal_ve(self, tree_net):
        cat = tree_net.catalog
        from ctxve import ContextualBeliefNetwork, from_tabular_cpt

        families = []
        for x in range(tree_net.n_vars()):
            dense = tree_net.tabular_factor(x)
            families.append(
                from_tabular_cpt(cat, x, [v for v in dense.vars if v != x], dense)
            )
        tabular = ContextualBeliefNetwork(cat, families)
        e = cat.index("e")
        order = [cat.index(n) for n in ["b", "d", "c", "a", "y", "z"]]
        tve_post, tve_counters = tve_query(tabular, [e], order=order)
        ve_post, ve_counters = ve_query(tabular, [e], order=order)
        assert tve_post.max_abs_diff(ve_post) < 1e-12
        assert tve_counters.multiplications == ve_counters.multiplications
        assert tve_counters.additions == ve_counters.additions

    def test_never_more_multiplications_than_ve_on_random_nets(self):
        rng = SplitMix64(4242)
        for seed in range(8):
            net = generate_random_cbn(GenConfig(n=8, s=5, p=0.3, seed=seed))
            query = rng.below(8)
            tve_post, tve_counters = tve_query(net, [query])
            ve_post, ve_counters = ve_query(net, [query])
            assert tve_post.max_abs_diff(ve_post) < 1e-9
            assert tve_counters.multiplications <= ve_counters.multiplications

    def test_matches_enumeration_with_evidence(self, tree_net):
        cat = tree_net.catalog
        e = cat.index("e")
        obs = ctx(cat, "d=false,z=false")
        posterior, _ = tve_query(tree_net, [e], obs)
        np.testing.assert_allclose(
            posterior.probabilities, brute_posterior(tree_net, [e], obs), atol=1e-9
        )


class TestGroupSizes:
    def test_coupled_only_when_both_broken(self, hvac_net):
        cat = hvac_net.catalog
        ot = cat.index("ot")
        engine = TreeVE(hvac_net)
        engine.begin()
        engine.eliminate(ot)
        rec = engine.counters.elimination_for(ot)
        assert rec.size == 72
        merged = [g for g in engine.groups if cat.index("fh") in g.signature]
        assert len(merged) == 1
        group = merged[0]
        fully_coupled = find_confactor(group.members, cat, "fb=false,mb=false")
        assert set(fully_coupled.table.vars) == {
            cat.index(n) for n in ["fh", "ft", "mh", "mt", "s"]
        }
        assert fully_coupled.table.size == 32

    def test_dense_schedule_builds_the_full_table(self, hvac_net):
        cat = hvac_net.catalog
        ot = cat.index("ot")
        engine = TabularVE(hvac_net)
        engine.begin()
        engine.eliminate(ot)
        rec = engine.counters.elimination_for(ot)
        assert max(rec.created) == 128
        assert engine.counters.max_table_size == 128
