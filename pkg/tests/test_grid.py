"""Discrete function space: differences, quadrature, norms, level sets."""

import numpy as np
import pytest

from anisopde.errors import GridMismatchError, SpecError
from anisopde.exponents import ProblemSpec
from anisopde.grid import (Grid, GridFunction, anisotropic_norm, level_measure,
                           node_gradients, norm_Ls, pairing_A, partial,
                           sobolev_ratio)


@pytest.fixture
def grid():
    return Grid(extents=(1.0, 2.0), nodes=(7, 9))


def spec2(p=(1.8, 1.8)):
    return ProblemSpec(N=2, p_vec=p, q_vec=(0.5, 0.5), theta_vec=(1.5, 1.0),
                       a_vec=(0.0, 0.0), m=2.5)


class TestGrid:
    def test_spacing_and_volume(self, grid):
        assert grid.spacing == (1.0 / 8, 2.0 / 10)
        assert grid.cell_volume == pytest.approx(0.2 / 8)
        assert grid.measure_omega == 2.0
        assert grid.size == 63

    def test_interior_coordinates_exclude_boundary(self, grid):
        x = grid.axis_coords(0)
        assert x[0] == pytest.approx(1.0 / 8)
        assert x[-1] == pytest.approx(7.0 / 8)

    def test_validation(self):
        with pytest.raises(SpecError):
            Grid(extents=(1.0,), nodes=(3, 3))
        with pytest.raises(SpecError):
            Grid(extents=(0.0, 1.0), nodes=(3, 3))
        with pytest.raises(SpecError):
            Grid(extents=(1.0, 1.0), nodes=(0, 3))


class TestDifferences:
    def test_matrix_matches_stencil(self, grid):
        rng = np.random.default_rng(0)
        u = GridFunction(grid, rng.standard_normal(grid.nodes))
        for j in range(2):
            via_matrix = grid.difference_matrix(j) @ u.flat
            assert np.allclose(via_matrix, partial(u, j).reshape(-1))

    def test_edge_count(self, grid):
        u = GridFunction.zeros(grid)
        assert partial(u, 0).shape == (8, 9)
        assert partial(u, 1).shape == (7, 10)

    def test_consistency_on_smooth_function(self):
        g = Grid(extents=(1.0, 1.0), nodes=(63, 63))
        u = GridFunction.from_callable(
            g, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
        grads = node_gradients(u)
        X, Y = g.meshgrid()
        exact = np.pi * np.cos(np.pi * X) * np.sin(np.pi * Y)
        # centered average of forward differences is second-order
        assert np.max(np.abs(grads[..., 0] - exact)) < 5e-3

    def test_zero_boundary_is_implicit(self):
        g = Grid(extents=(1.0,  1.0), nodes=(3, 3))
        u = GridFunction(g, np.ones(g.nodes))
        d = partial(u, 0)
        # first and last edge rows see the zero boundary value
        assert d[0, 0] == pytest.approx(1.0 / g.spacing[0])
        assert d[-1, 0] == pytest.approx(-1.0 / g.spacing[0])
        assert np.allclose(d[1:-1], 0.0)


class TestNorms:
    def test_constant_function_Ls(self, grid):
        u = GridFunction(grid, np.full(grid.nodes, 3.0))
        # quadrature covers only interior cells: 63 cells of volume w
        expected = (grid.cell_volume * 63 * 3.0 ** 2) ** 0.5
        assert norm_Ls(u, 2.0) == pytest.approx(expected)

    def test_invalid_exponent(self, grid):
        with pytest.raises(SpecError, match="invalid exponent"):
            norm_Ls(GridFunction.zeros(grid), 0.5)

    def test_edge_field_needs_grid(self, grid):
        u = GridFunction.zeros(grid)
        with pytest.raises(SpecError):
            norm_Ls(partial(u, 0), 2.0)
        assert norm_Ls(partial(u, 0), 2.0, grid) == 0.0

    def test_anisotropic_norm_scaling(self, grid):
        rng = np.random.default_rng(5)
        u = GridFunction(grid, rng.standard_normal(grid.nodes))
        spec = spec2()
        assert anisotropic_norm(GridFunction(grid, 2.0 * u.values), spec) == \
            pytest.approx(2.0 * anisotropic_norm(u, spec))


class TestPairing:
    def test_symmetric_for_quadratic_exponents(self, grid):
        rng = np.random.default_rng(2)
        u = GridFunction(grid, rng.standard_normal(grid.nodes))
        v = GridFunction(grid, rng.standard_normal(grid.nodes))
        spec = spec2(p=(2.0, 2.0))
        assert pairing_A(u, v, spec) == pytest.approx(pairing_A(v, u, spec))

    def test_diagonal_is_gradient_energy(self, grid):
        rng = np.random.default_rng(4)
        u = GridFunction(grid, rng.standard_normal(grid.nodes))
        spec = spec2()
        expected = sum(norm_Ls(partial(u, j), spec.p_vec[j], grid) ** spec.p_vec[j]
                       for j in range(2))
        assert pairing_A(u, u, spec) == pytest.approx(expected)

    def test_grid_mismatch(self, grid):
        other = Grid(extents=(1.0, 2.0), nodes=(5, 5))
        with pytest.raises(GridMismatchError):
            pairing_A(GridFunction.zeros(grid), GridFunction.zeros(other), spec2())


class TestLevelSets:
    def test_matches_enumeration(self, grid):
        rng = np.random.default_rng(8)
        u = GridFunction(grid, rng.standard_normal(grid.nodes))
        for h in (0.1, 0.5, 1.0, 3.0):
            count = sum(1 for v in u.flat if abs(v) >= h)
            assert level_measure(u, h) == grid.cell_volume * count

    def test_vanishes_above_sup(self, grid):
        u = GridFunction(grid, np.full(grid.nodes, 0.4))
        assert level_measure(u, 0.5) == 0.0
        assert level_measure(u, 0.4) == pytest.approx(grid.cell_volume * 63)

    def test_invalid_level(self, grid):
        with pytest.raises(SpecError, match="invalid level"):
            level_measure(GridFunction.zeros(grid), 0.0)


class TestSobolevRatio:
    def test_scale_invariant(self, grid):
        rng = np.random.default_rng(9)
        u = GridFunction(grid, rng.standard_normal(grid.nodes))
        spec = spec2()
        r1 = sobolev_ratio(u, spec)
        r2 = sobolev_ratio(GridFunction(grid, -11.0 * u.values), spec)
        assert r1 == pytest.approx(r2)
        assert np.isfinite(r1) and r1 > 0.0

    def test_zero_function_rejected(self, grid):
        with pytest.raises(SpecError, match="zero function"):
            sobolev_ratio(GridFunction.zeros(grid), spec2())


class TestCsvRoundTrip:
    def test_exact_round_trip(self, grid, tmp_path):
        rng = np.random.default_rng(10)
        u = GridFunction(grid, rng.standard_normal(grid.nodes))
        path = tmp_path / "u.csv"
        u.to_csv(path)
        v = GridFunction.from_csv(grid, path)
        assert np.array_equal(u.values, v.values)  # %.17g is lossless

    def test_header_uses_one_based_indices(self, grid, tmp_path):
        path = tmp_path / "u.csv"
        GridFunction.zeros(grid).to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "i1,i2,x1,x2,value"
        assert lines[1].startswith("1,1,")

    def test_values_are_write_protected(self, grid):
        u = GridFunction.zeros(grid)
        with pytest.raises(ValueError):
            u.values[0, 0] = 1.0
