"""Regularized solver: manufactured problems, error paths, sweeps, profiles."""

import dataclasses

import numpy as np
import pytest

from anisopde.errors import NanError, SpecError
from anisopde.exponents import ProblemSpec
from anisopde.grid import Grid, GridFunction
from anisopde.operator_b import OperatorBSpec, make_psi_map, node_preset
from anisopde.solver import (SolverOptions, energy_identity_residual,
                             run_sequence, solve_regularized,
                             stampacchia_profile)

AMPLITUDE = 2.0 * np.pi ** 2 + 1.0


def linear_spec(p=(2.0, 2.0), m=2.0):
    return ProblemSpec(N=2, p_vec=p, q_vec=(0.5, 0.5), theta_vec=(1.0, 1.0),
                       a_vec=(0.0, 0.0), m=m, psi_enabled=False)


def source_bspec(grid, name="product_of_sines", amplitude=1.0):
    pm, pb = make_psi_map("zero")
    return OperatorBSpec(F=node_preset(grid, name, amplitude), G=None,
                         psi_name="zero", psi_map=pm, psi_bound=pb)


@pytest.fixture
def opts():
    return SolverOptions()


class TestManufactured:
    def test_discrete_laplace_solution(self, opts):
        # -Laplace(u) + u = (2 pi^2 + 1) sin(pi x) sin(pi y), exact solution
        # sin(pi x) sin(pi y); discrete error is O(h^2)
        grid = Grid(extents=(1.0, 1.0), nodes=(15, 15))
        rep = solve_regularized(linear_spec(), source_bspec(grid, amplitude=AMPLITUDE),
                                1, grid, opts)
        assert rep.converged
        X, Y = grid.meshgrid()
        exact = np.sin(np.pi * X) * np.sin(np.pi * Y)
        assert np.max(np.abs(rep.U.values - exact)) < 0.01

    def test_zero_data_gives_zero_solution(self, opts):
        grid = Grid(extents=(1.0, 1.0), nodes=(8, 8))
        bspec = source_bspec(grid, "constant", 0.0)
        rep = solve_regularized(linear_spec(), bspec, 1, grid, opts)
        assert rep.converged
        assert np.all(rep.U.values == 0.0)
        assert rep.energy_residual == 0.0

    def test_sign_flip_of_data_flips_solution(self, opts):
        grid = Grid(extents=(1.0, 1.0), nodes=(8, 8))
        up = solve_regularized(linear_spec(p=(1.8, 1.8), m=2.5),
                               source_bspec(grid, amplitude=2.0), 1, grid, opts)
        down = solve_regularized(linear_spec(p=(1.8, 1.8), m=2.5),
                                 source_bspec(grid, amplitude=-2.0), 1, grid, opts)
        assert np.allclose(up.U.values, -down.U.values, atol=1e-7)


class TestReport:
    def test_energy_residual_small_on_convergence(self, opts):
        grid = Grid(extents=(1.0, 1.0), nodes=(10, 10))
        spec = ProblemSpec(N=2, p_vec=(1.8, 1.8), q_vec=(0.5, 0.5),
                           theta_vec=(1.5, 1.0), a_vec=(0.0, 0.0), m=2.5)
        pm, pb = make_psi_map("saturating", 0.5)
        bspec = OperatorBSpec(F=node_preset(grid, "product_of_sines"), G=None,
                              psi_name="saturating", psi_map=pm, psi_bound=pb)
        rep = solve_regularized(spec, bspec, 8, grid, opts)
        assert rep.converged
        assert rep.energy_residual <= 1e-6
        # limit-form residual differs but stays moderate at finite n
        lim = energy_identity_residual(rep.U, spec, bspec)
        assert np.isfinite(lim)

    def test_monitored_quantities_present(self, opts):
        grid = Grid(extents=(1.0, 1.0), nodes=(6, 6))
        rep = solve_regularized(linear_spec(), source_bspec(grid), 1, grid, opts)
        mon = rep.monitored()
        assert {"norm_Lm", "norm_W", "int_phi_u", "int_psi_n_u",
                "J_m_p1", "J_theta_q2"} <= set(mon)
        assert all(np.isfinite(v) for v in mon.values())


class TestErrorPaths:
    def test_overflow_reports_node(self, opts):
        grid = Grid(extents=(1.0, 1.0), nodes=(5, 5))
        spec = linear_spec(m=6.0)
        bspec = source_bspec(grid, "constant", 1e300)
        fast = dataclasses.replace(opts, picard_max=5)
        with pytest.raises(NanError, match="nan") as exc:
            solve_regularized(spec, bspec, 1, grid, fast)
        assert exc.value.node is not None
        assert len(exc.value.node) == 2

    def test_options_validation(self):
        with pytest.raises(SpecError):
            SolverOptions(tol_residual=0.0)
        with pytest.raises(SpecError):
            SolverOptions(relax=1.5)


class TestSequence:
    def test_monotone_index_required(self, opts):
        grid = Grid(extents=(1.0, 1.0), nodes=(5, 5))
        spec = linear_spec()
        with pytest.raises(SpecError):
            run_sequence(spec, source_bspec(grid), grid, opts, (4, 2))

    def test_flat_sweep_without_singular_term(self, opts):
        grid = Grid(extents=(1.0, 1.0), nodes=(8, 8))
        seq = run_sequence(linear_spec(), source_bspec(grid), grid, opts, (1, 4, 16))
        assert all(e is None for e in seq.errors)
        # the regularization index is inert when the singular term is off
        for changes in seq.rel_changes:
            assert max(changes.values()) < 1e-12
        assert seq.uniform_bound_plausible

    def test_warm_start_stabilizes(self, opts):
        grid = Grid(extents=(1.0, 1.0), nodes=(8, 8))
        spec = ProblemSpec(N=2, p_vec=(1.8, 1.8), q_vec=(0.5, 0.5),
                           theta_vec=(1.5, 1.0), a_vec=(0.0, 0.0), m=2.5)
        pm, pb = make_psi_map("saturating", 0.5)
        bspec = OperatorBSpec(F=node_preset(grid, "product_of_sines"), G=None,
                              psi_name="saturating", psi_map=pm, psi_bound=pb)
        gentle = dataclasses.replace(opts, h_exp=2.5)
        seq = run_sequence(spec, bspec, grid, gentle, (1, 4, 16, 64))
        assert all(e is None for e in seq.errors)
        assert len(seq.diff_W) == 3
        # successive differences shrink as the approximations stabilize
        assert seq.diff_W[-1] < seq.diff_W[0]


class TestProfile:
    def test_profile_matches_enumeration(self, opts):
        grid = Grid(extents=(1.0, 1.0), nodes=(10, 10))
        rep = solve_regularized(linear_spec(), source_bspec(grid, amplitude=AMPLITUDE),
                                1, grid, opts)
        sup = np.max(np.abs(rep.U.values))
        levels = (0.1 * sup, 0.5 * sup, 0.9 * sup, 1.1 * sup)
        prof = stampacchia_profile(rep.U, levels, None)
        for h, mu in zip(prof.levels, prof.mu):
            count = int(np.sum(np.abs(rep.U.values) >= h))
            assert mu == grid.cell_volume * count
        assert prof.mu[-1] == 0.0
        assert prof.first_zero_level == pytest.approx(1.1 * sup)
        assert prof.sup_estimate == pytest.approx(sup)

    def test_degenerate_profile_rejected(self, opts):
        grid = Grid(extents=(1.0, 1.0), nodes=(5, 5))
        u = GridFunction.zeros(grid)
        with pytest.raises(SpecError, match="degenerate profile"):
            stampacchia_profile(u, (1.0, 2.0), None)

    def test_levels_must_increase(self):
        grid = Grid(extents=(1.0, 1.0), nodes=(4, 4))
        u = GridFunction(grid, np.ones(grid.nodes))
        with pytest.raises(SpecError):
            stampacchia_profile(u, (2.0, 1.0), None)
