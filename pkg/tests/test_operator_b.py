"""Lower-order operator: pairing consistency, sign rules, growth bound."""

import numpy as np
import pytest

from anisopde.errors import SpecError
from anisopde.exponents import ProblemSpec
from anisopde.grid import Grid, GridFunction, partial
from anisopde.operator_b import (OperatorBSpec, check_P1, edge_preset, eval_B,
                                 make_psi_map, node_preset, rhs_field,
                                 truncate_datum)


@pytest.fixture
def grid():
    return Grid(extents=(1.0, 1.0), nodes=(6, 6))


def spec_case1():
    return ProblemSpec(N=2, p_vec=(1.8, 1.8), q_vec=(0.5, 0.5),
                       theta_vec=(1.5, 1.0), a_vec=(0.0, 0.0), m=2.5)


def spec_case2():
    return ProblemSpec(N=2, p_vec=(1.8, 1.8), q_vec=(0.5, 0.5),
                       theta_vec=(0.5, 1.2), a_vec=(0.0, 0.0), m=3.0)


def make_bspec(grid, psi="saturating", c=0.5, G=None, f=None):
    pm, pb = make_psi_map(psi, c)
    return OperatorBSpec(F=node_preset(grid, "product_of_sines"), G=G,
                         psi_name=psi, psi_map=pm, psi_bound=pb, f_datum=f)


class TestPsiMaps:
    def test_zero_map(self, grid):
        pm, bound = make_psi_map("zero")
        assert bound == 0.0
        assert np.all(pm(GridFunction(grid, np.ones(grid.nodes))) == 0.0)

    def test_saturating_is_bounded_and_odd(self, grid):
        pm, bound = make_psi_map("saturating", 2.0)
        u = GridFunction(grid, np.full(grid.nodes, 1e6))
        assert np.all(np.abs(pm(u)) <= bound)
        neg = GridFunction(grid, -u.values)
        assert np.allclose(pm(neg), -pm(u))

    def test_capped_map(self, grid):
        pm, bound = make_psi_map("capped", 3.0, cap=2.0)
        u = GridFunction(grid, np.full(grid.nodes, 5.0))
        assert np.all(pm(u) == 3.0)
        with pytest.raises(SpecError):
            make_psi_map("capped", 1.0, cap=0.0)

    def test_unknown_name(self):
        with pytest.raises(SpecError, match="unknown psi map"):
            make_psi_map("cubic")


class TestEvalB:
    def test_pairing_matches_rhs_field(self, grid):
        rng = np.random.default_rng(0)
        G = edge_preset(grid, "constant", (0.3, -0.2))
        bspec = make_bspec(grid, G=G)
        w = grid.cell_volume
        for _ in range(5):
            u = GridFunction(grid, rng.standard_normal(grid.nodes))
            v = GridFunction(grid, rng.standard_normal(grid.nodes))
            node, edges = rhs_field(u, bspec)
            expected = w * np.sum(node * v.values)
            for j in range(2):
                expected += w * np.sum(edges[j] * partial(v, j))
            assert eval_B(u, v, bspec) == pytest.approx(expected)

    def test_linear_in_v(self, grid):
        bspec = make_bspec(grid)
        rng = np.random.default_rng(1)
        u = GridFunction(grid, rng.standard_normal(grid.nodes))
        v1 = GridFunction(grid, rng.standard_normal(grid.nodes))
        v2 = GridFunction(grid, rng.standard_normal(grid.nodes))
        lhs = eval_B(u, GridFunction(grid, v1.values + 2.0 * v2.values), bspec)
        assert lhs == pytest.approx(eval_B(u, v1, bspec) + 2.0 * eval_B(u, v2, bspec))

    def test_a0_flag(self, grid):
        assert make_bspec(grid).a0_flag is False
        G = edge_preset(grid, "constant", (0.0, 0.1))
        assert make_bspec(grid, G=G).a0_flag is True


class TestValidation:
    def test_case2_rejects_negative_source(self, grid):
        pm, pb = make_psi_map("saturating_abs", 0.5)
        F = GridFunction(grid, -np.ones(grid.nodes))
        bspec = OperatorBSpec(F=F, G=None, psi_name="saturating_abs",
                              psi_map=pm, psi_bound=pb)
        with pytest.raises(SpecError, match="F >= 0"):
            bspec.validate(spec_case2())

    def test_case2_rejects_divergence_part(self, grid):
        G = edge_preset(grid, "constant", (0.1, 0.0))
        bspec = make_bspec(grid, psi="saturating_abs", G=G)
        with pytest.raises(SpecError, match="G == 0"):
            bspec.validate(spec_case2())

    def test_case2_rejects_signed_psi(self, grid):
        # plain saturating goes negative for negative arguments
        bspec = make_bspec(grid, psi="saturating")
        with pytest.raises(SpecError, match="nonnegative psi"):
            bspec.validate(spec_case2())
        make_bspec(grid, psi="saturating_abs").validate(spec_case2())

    def test_trivial_operator_rejected(self, grid):
        pm, pb = make_psi_map("zero")
        bspec = OperatorBSpec(F=GridFunction.zeros(grid), G=None,
                              psi_name="zero", psi_map=pm, psi_bound=pb)
        with pytest.raises(SpecError, match="trivial"):
            bspec.validate(spec_case1())

    def test_case1_allows_signed_data(self, grid):
        make_bspec(grid, psi="saturating").validate(spec_case1())


class TestDatum:
    def test_truncation_clamps(self, grid):
        f = GridFunction(grid, np.linspace(-10, 10, grid.size).reshape(grid.nodes))
        t = truncate_datum(f, 3)
        assert np.max(t.values) == 3.0 and np.min(t.values) == -3.0
        inner = np.abs(f.values) <= 3.0
        assert np.array_equal(t.values[inner], f.values[inner])

    def test_truncation_is_monotone_in_n(self, grid):
        f = GridFunction(grid, np.full(grid.nodes, 7.5))
        assert np.all(truncate_datum(f, 2).values <= truncate_datum(f, 5).values)
        with pytest.raises(SpecError):
            truncate_datum(f, 0)


class TestGrowthBound:
    def test_empirical_constant_is_finite(self, grid):
        bspec = make_bspec(grid)
        rep = check_P1(bspec, spec_case1(), samples=50,
                       rng=np.random.default_rng(3))
        assert np.isfinite(rep.C_emp) and rep.C_emp > 0.0
        assert not rep.trivial
        assert rep.max_violation == 0.0

    def test_configured_constant_violation(self, grid):
        bspec = make_bspec(grid)
        rep = check_P1(bspec, spec_case1(), samples=50,
                       rng=np.random.default_rng(3), configured_C=1e-9)
        assert rep.max_violation > 0.0

    def test_trivial_operator_flagged(self, grid):
        pm, pb = make_psi_map("zero")
        bspec = OperatorBSpec(F=GridFunction.zeros(grid), G=None,
                              psi_name="zero", psi_map=pm, psi_bound=pb)
        rep = check_P1(bspec, spec_case1(), samples=10,
                       rng=np.random.default_rng(4))
        assert rep.trivial and rep.C_emp == 0.0


class TestPresets:
    def test_product_of_sines_vanishes_toward_boundary(self, grid):
        F = node_preset(grid, "product_of_sines", 2.0)
        assert F.values.max() <= 2.0
        center = F.values[grid.nodes[0] // 2, grid.nodes[1] // 2]
        assert center > F.values[0, 0] > 0.0

    def test_bump_support(self, grid):
        F = node_preset(grid, "bump", 1.0)
        assert set(np.unique(F.values)) <= {0.0, 1.0}
        assert F.values.sum() > 0

    def test_unknown_names(self, grid):
        with pytest.raises(SpecError):
            node_preset(grid, "nope")
        with pytest.raises(SpecError):
            edge_preset(grid, "nope", (1.0, 1.0))
