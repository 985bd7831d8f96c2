from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikecept.config import load_config
from spikecept.dynamics import LIFParams
from spikecept.engine import Layer
from spikecept.errors import ConfigurationError
from spikecept.plasticity import random_projection
from spikecept.topology import (
    ModuleSpec,
    NetworkSpec,
    PathwaySpec,
    PRASpec,
    StageSpec,
    ablate,
    assemble_module,
    build_inhibition,
    build_pathway,
    build_pra,
    count_resources,
    stack_modules,
)


def sp(F, extra=()):
    return ModuleSpec((PathwaySpec("FC", F), PathwaySpec("LC", F, 24, 4), PathwaySpec("LC", F, 16, 6)) + extra,
                      balanced=True)


def brute_force_mask(kind, F, k=28, s=1, C=1):
    """Connectivity by explicit coordinate loops."""
    n = 1 if kind == "FC" else (28 - k) // s + 1
    cols = []
    for r in range(n):
        for c in range(n):
            rf = set()
            for y in range(k):
                for x in range(k):
                    for ch in range(C):
                        rf.add(((r * s + y) * 28 + (c * s + x)) * C + ch)
            cols.extend([rf] * F)
    m = np.zeros((784 * C, len(cols)), dtype=bool)
    for j, rf in enumerate(cols):
        m[sorted(rf), j] = True
    return m


class TestPathway:
    def test_lc_16_6_100(self):
        p = build_pathway(PathwaySpec("LC", 100, 16, 6))
        assert p.n_locations == 9 and p.n_neurons == 900 and p.n_plastic == 230_400
        assert build_inhibition(p).n_synapses == 89_100

    def test_fc_400(self):
        p = build_pathway(PathwaySpec("FC", 400))
        assert p.n_neurons == 400 and p.n_plastic == 313_600
        assert build_inhibition(p).n_synapses == 159_600

    def test_single_feature_has_no_inhibition(self):
        assert build_inhibition(build_pathway(PathwaySpec("LC", 1, 10, 6))).n_synapses == 0

    def test_lc_28_is_fc(self):
        a = assemble_module(ModuleSpec((PathwaySpec("LC", 10, 28, 3),))).mask()
        b = assemble_module(ModuleSpec((PathwaySpec("FC", 10),))).mask()
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("k,s,C", [(16, 6, 1), (24, 4, 2), (10, 6, 1), (5, 7, 3)])
    def test_mask_matches_coordinate_oracle(self, k, s, C):
        got = assemble_module(ModuleSpec((PathwaySpec("LC", 3, k, s),)), channels=C).mask()
        np.testing.assert_array_equal(got, brute_force_mask("LC", 3, k, s, C))

    def test_invalid_geometry(self):
        with pytest.raises(ConfigurationError):
            PathwaySpec("LC", 10, 30, 1)
        with pytest.raises(ConfigurationError):
            PathwaySpec("LC", 0, 10, 1)
        with pytest.raises(ConfigurationError):
            PathwaySpec("CONV", 10)


class TestModule:
    def test_sp_inception_I(self):
        mod = assemble_module(sp(112))
        assert mod.n_neurons == 1568
        parts = [87_808, 12_432, 258_048, 49_728, 258_048, 111_888]
        got = []
        for p, h in zip(mod.pathways, mod.inhibitions):
            got += [p.n_plastic, h.n_synapses]
        assert got == parts
        assert count_resources(NetworkSpec((StageSpec(sp(112)),))).n_synapse == 777_952

    def test_sp_inception_VI(self):
        mod = assemble_module(sp(448, (PathwaySpec("LC", 448, 10, 6),)))
        assert mod.pathways[-1].n_locations == 16
        assert mod.n_neurons == 13_440

    def test_concatenation_order(self):
        mod = assemble_module(ModuleSpec((PathwaySpec("FC", 2), PathwaySpec("LC", 3, 24, 4))))
        assert mod.offsets.tolist() == [0, 2, 14]
        assert mod.groups.tolist() == [0, 0] + [1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4]
        assert mod.pathway_of.tolist() == [0, 0] + [1] * 12

    def test_inhibition_is_intra_location(self):
        mod = assemble_module(sp(4))
        same = mod.groups[:, None] == mod.groups[None, :]
        # neurons in one group share a receptive field
        m = mod.mask()
        for g in np.unique(mod.groups):
            cols = m[:, mod.groups == g]
            assert (cols == cols[:, :1]).all()
        assert int(same.sum() - len(mod.groups)) == mod.n_inhibitory

    def test_rebuild_is_stable(self):
        a, b = assemble_module(sp(5)), assemble_module(sp(5))
        np.testing.assert_array_equal(a.mask(), b.mask())
        np.testing.assert_array_equal(a.groups, b.groups)

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            ModuleSpec(())
        with pytest.raises(ConfigurationError):
            ModuleSpec((PathwaySpec("LC", 4, 24, 4), PathwaySpec("LC", 4, 16, 6)))
        with pytest.raises(ConfigurationError):
            ModuleSpec((PathwaySpec("FC", 4), PathwaySpec("LC", 5, 16, 6)), balanced=True)

    def test_naive_module_warns(self, caplog):
        ModuleSpec((PathwaySpec("FC", 4), PathwaySpec("LC", 5, 16, 6)))
        assert "unequal F" in caplog.text


class TestPRA:
    def test_pool_factors(self):
        assert build_pra(1568, 2).pool_factor == 1
        assert build_pra(1568, 2).n_synapses == 1568
        assert build_pra(3136, 2).pool_factor == 2
        pra = build_pra(784, 1)
        np.testing.assert_array_equal(pra.mask(), np.eye(784, dtype=bool))

    def test_blocks_are_consecutive(self):
        m = build_pra(3136, 2).mask()
        assert m[0, 0] and m[1, 0] and m[2, 1] and m[3135, 1567]
        assert (m.sum(axis=0) == 2).all() and (m.sum(axis=1) == 1).all()

    def test_non_divisible_lists_valid_channels(self):
        with pytest.raises(ConfigurationError, match=r"valid C: \[1, 2\]"):
            build_pra(1568, 3)

    def test_stage_one_takes_no_pra(self):
        with pytest.raises(ConfigurationError):
            NetworkSpec((StageSpec(sp(8), PRASpec()),))
        with pytest.raises(ConfigurationError):
            NetworkSpec((StageSpec(sp(8)), StageSpec(sp(8))))


class TestAccounting:
    def test_table_II_stack(self):
        spec, _ = load_config("table-II-stack")
        net = stack_modules(spec)
        assert [m.channels for m in net.modules] == [1, 2, 2, 2]
        assert [p.pool_factor for p in net.pras[1:]] == [1, 2, 4]
        cum = count_resources(spec).cumulative()
        assert [n for n, _ in cum] == [1568, 4704, 10976, 24416]
        assert [s for _, s in cum][1:] == [3_894_464, 11_532_416, 23_811_200]

    def test_fc_6400_by_formula(self):
        st_ = count_resources(NetworkSpec((StageSpec(ModuleSpec((PathwaySpec("FC", 6400),))),)))
        assert st_.n_neuron == 6400
        assert st_.n_synapse == 784 * 6400 + 6400 * 6399 == 45_971_200

    def test_sp_inception_III(self):
        assert count_resources(load_config("sp-inception-III")[0]).n_neuron == 6300

    def test_empty_network(self):
        st_ = count_resources(NetworkSpec(()))
        assert (st_.n_neuron, st_.n_synapse) == (0, 0)

    def test_single_module_network_is_module(self):
        spec = NetworkSpec((StageSpec(sp(16)),))
        mod = assemble_module(sp(16))
        st_ = count_resources(spec)
        assert st_.n_neuron == mod.n_neurons and st_.n_synapse == mod.n_plastic + mod.n_inhibitory


def toy_sim(n_pre=100, n_post=10, groups=None, seed=0):
    rng = np.random.default_rng(seed)
    mask = np.ones((n_pre, n_post), dtype=bool)
    groups = np.zeros(n_post, dtype=int) if groups is None else groups
    layer = Layer(random_projection(mask, rng), groups, LIFParams(), 5.0)
    return SimpleNamespace(layers=[layer], pra_layers=[None])


class TestAblate:
    def test_rho_zero_unchanged(self):
        sim = toy_sim()
        out = ablate(sim, 0.0, "neurons", seed=3)
        np.testing.assert_array_equal(out.layers[0].weights, sim.layers[0].weights)
        assert out.layers[0].alive.all()
        assert out is not sim

    def test_rho_one_deletes_everything(self):
        for mode in ("neurons", "synapses"):
            out = ablate(toy_sim(), 1.0, mode, seed=0)
            assert not out.layers[0].mask.any()
        assert not ablate(toy_sim(), 1.0, "neurons").layers[0].alive.any()

    def test_synapse_deletion_binomial(self):
        deleted = [1000 - int(ablate(toy_sim(), 0.5, "synapses", seed=s).layers[0].mask.sum()) for s in range(30)]
        assert all(450 <= d <= 550 for d in deleted)

    def test_neuron_deletion_removes_incident_synapses(self):
        sim = toy_sim(n_post=40, groups=np.repeat(np.arange(8), 5))
        out = ablate(sim, 0.5, "neurons", seed=1)
        layer = out.layers[0]
        dead = ~layer.alive
        assert dead.any()
        assert not layer.mask[:, dead].any() and (layer.weights[:, dead] == 0).all()
        live = count_resources(out)
        sizes = np.bincount(layer.groups[layer.alive], minlength=8)
        assert live.n_neuron == int(layer.alive.sum())
        assert live.n_synapse == int(layer.mask.sum()) + int((sizes * (sizes - 1)).sum())

    def test_deterministic_under_seed(self):
        a = ablate(toy_sim(), 0.3, "synapses", seed=9).layers[0].mask
        b = ablate(toy_sim(), 0.3, "synapses", seed=9).layers[0].mask
        np.testing.assert_array_equal(a, b)

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            ablate(toy_sim(), 1.5)
        with pytest.raises(ConfigurationError):
            ablate(toy_sim(), 0.5, "layers")


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 28), st.integers(1, 10), st.integers(1, 6), st.integers(1, 3))
def test_counts_match_built_masks(k, s, F, C):
    mod = assemble_module(ModuleSpec((PathwaySpec("LC", F, k, s),)), channels=C)
    m = mod.mask()
    assert int(m.sum()) == mod.n_plastic
    assert m.shape == (784 * C, mod.n_neurons)
    n = (28 - k) // s + 1
    assert mod.n_neurons == n * n * F
