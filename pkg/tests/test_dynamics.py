import numpy as np
import pytest

from conftest import random_edge_weights, random_graph
from lyinggcn.dynamics import (
    DiffusionSystem,
    FIG1_H0,
    build_lying_E,
    fig1_lying_Z,
    fig1_systems,
    heat_system,
    lying_system,
    reproduce_figure1,
    sheaf_system,
    solve_closed_form,
    solve_rk4,
    verify_proposition1,
)
from lyinggcn.errors import ConfigurationError, ContractError, IntegrationError
from lyinggcn.graph import chain_graph, normalize_adjacency
from lyinggcn.numerics import eig_dense


def ones_Z(g):
    Z = np.zeros((g.n_nodes, g.n_nodes))
    for u, v in g.edges:
        Z[u, v] = Z[v, u] = 1.0
    return Z


class TestBuildLyingE:
    def test_unit_weights_give_laplacian(self, chain3, chain3_ops):
        E = build_lying_E(chain3_ops, ones_Z(chain3))
        np.testing.assert_allclose(E, chain3_ops.L_sym.to_dense(), atol=1e-15)

    def test_zero_weights_leave_diagonal(self, chain3, chain3_ops):
        # silent agents: messages vanish, only the self terms remain
        E = build_lying_E(chain3_ops, np.zeros((3, 3)))
        np.testing.assert_allclose(E, np.diag(1.0 - chain3_ops.s_diag), atol=1e-15)

    def test_negative_unit_weights_flip_offdiagonal_sign(self, chain3, chain3_ops):
        # E_uv = -S_uv * Z_uv, so full lying flips the coupling sign
        E = build_lying_E(chain3_ops, -ones_Z(chain3))
        S = chain3_ops.S.to_dense()
        np.testing.assert_allclose(E - np.diag(np.diag(E)), S - np.diag(np.diag(S)), atol=1e-15)

    def test_chain_with_one_lie_has_complex_pair(self, chain3_ops):
        E = build_lying_E(chain3_ops, fig1_lying_Z())
        assert np.abs(E - E.T).max() > 0.1  # non-symmetric
        vals = eig_dense(E, want_vectors=False).values
        # reference values from an independent LAPACK evaluation of the same matrix:
        # 0.5 and 7/12 +/- 0.34364i
        complex_ones = np.sort_complex(vals[np.abs(vals.imag) > 1e-9])
        assert len(complex_ones) == 2
        np.testing.assert_allclose(complex_ones.real, [7 / 12, 7 / 12], atol=1e-9)
        np.testing.assert_allclose(np.abs(complex_ones.imag), 0.3435921359, atol=1e-8)

    def test_nonzero_diagonal_rejected(self, chain3_ops):
        Z = fig1_lying_Z()
        Z[1, 1] = 0.5
        with pytest.raises(ContractError):
            build_lying_E(chain3_ops, Z)

    def test_weight_on_non_edge_rejected(self, chain3_ops):
        Z = np.zeros((3, 3))
        Z[0, 2] = 0.5  # chain has no (0, 2) edge
        with pytest.raises(ContractError):
            build_lying_E(chain3_ops, Z)

    def test_out_of_range_weight_rejected(self, chain3_ops):
        Z = np.zeros((3, 3))
        Z[0, 1] = 1.5
        with pytest.raises(ConfigurationError):
            build_lying_E(chain3_ops, Z)


class TestProposition1:
    def test_unit_weights_symmetric_case(self, chain3, chain3_ops):
        rep = verify_proposition1(build_lying_E(chain3_ops, ones_Z(chain3)))
        assert rep.passed and rep.gershgorin_ok
        assert rep.n_complex_pairs == 0

    def test_monte_carlo_small(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            g = random_graph(rng, 2, 30)
            E = build_lying_E(normalize_adjacency(g), random_edge_weights(rng, g))
            rep = verify_proposition1(E)
            assert rep.passed, rep

    def test_dominance_bound_any_weights(self):
        # |row sum of off-diagonals| of B bounded by the diagonal degree
        rng = np.random.default_rng(1)
        for _ in range(25):
            g = random_graph(rng, 2, 15)
            ops = normalize_adjacency(g)
            E = build_lying_E(ops, random_edge_weights(rng, g))
            scale = np.sqrt(ops.aug_degrees)
            B = scale[:, None] * E * scale[None, :]
            off = np.abs(B).sum(axis=1) - np.abs(np.diag(B))
            np.testing.assert_array_less(off, np.diag(B) + 1e-9)


class TestSolvers:
    def test_closed_form_initial_condition(self, chain3):
        for sys in fig1_systems().values():
            traj = solve_closed_form(sys, FIG1_H0, [0.0, 1.0])
            np.testing.assert_allclose(traj.states[0], FIG1_H0, atol=1e-10)

    def test_heat_converges_to_mean(self):
        g = chain_graph(3)
        h0 = np.array([1.0, 0.5, 0.0])
        traj = solve_closed_form(heat_system(g), h0, [0.0, 50.0])
        np.testing.assert_allclose(traj.states[-1], 0.5, atol=1e-8)

    def test_lying_decays_to_zero(self, chain3):
        sys = lying_system(chain3, fig1_lying_Z())
        traj = solve_closed_form(sys, FIG1_H0, [0.0, 40.0])
        assert np.linalg.norm(traj.states[-1]) < 1e-8

    def test_rk4_null_dynamics(self):
        sys = DiffusionSystem("heat", np.zeros((3, 3)))
        traj = solve_rk4(sys, [1.0, -2.0, 0.5], dt=0.1, steps=20)
        np.testing.assert_array_equal(traj.states[-1], traj.states[0])

    def test_rk4_scalar_exponential(self):
        sys = DiffusionSystem("heat", np.array([[1.0]]))
        traj = solve_rk4(sys, [1.0], dt=1e-3, steps=1000)
        assert abs(traj.states[-1, 0] - np.exp(-1.0)) < 1e-8

    def test_rk4_blowup_reported(self):
        sys = DiffusionSystem("heat", np.array([[-2000.0]]))  # unstable at this dt
        with pytest.raises(IntegrationError):
            solve_rk4(sys, [1.0], dt=1.0, steps=400)

    def test_cross_solver_agreement_fig1(self):
        times = np.linspace(0.0, 10.0, 501)
        for name, sys in fig1_systems().items():
            closed = solve_closed_form(sys, FIG1_H0, times)
            rk = solve_rk4(sys, FIG1_H0, dt=10.0 / 500 / 20, steps=500 * 20)
            gap = np.abs(closed.states - rk.states[::20]).max()
            assert gap <= 1e-6, f"{name}: {gap}"

    def test_near_defective_falls_back_to_rk4(self):
        M = np.array([[2.0, 1.0], [0.0, 2.0]])  # Jordan block, defective
        sys = DiffusionSystem("lying", M)
        with pytest.warns(UserWarning, match="falling back"):
            traj = solve_closed_form(sys, [1.0, 1.0], np.linspace(0, 1, 11))
        assert traj.solver == "rk4"
        # oracle: exp(-Mt) for the Jordan block is exp(-2t) [[1, -t], [0, 1]]
        t = 1.0
        expect = np.exp(-2 * t) * np.array([1.0 - t, 1.0])
        np.testing.assert_allclose(traj.states[-1], expect, atol=1e-8)

    def test_energy_dissipation_symmetric_kinds(self, chain3):
        times = np.linspace(0.0, 5.0, 200)
        for sys in (heat_system(chain3), sheaf_system(chain3, [(1.0, -1.0), (1.0, 1.0)])):
            traj = solve_closed_form(sys, FIG1_H0, times)
            norms = np.linalg.norm(traj.states, axis=1)
            assert np.all(np.diff(norms) <= 1e-10)


class TestFigure1:
    def test_all_qualitative_checks(self, tmp_path):
        report = reproduce_figure1(tmp_path)
        assert report["passed"], report["checks"]
        for name in ("heat", "sheaf", "lying"):
            assert (tmp_path / f"{name}.csv").exists()
            assert report["solver_gap"][name] <= 1e-6

    def test_sheaf_discourse_consensus_detail(self, chain3):
        sys = sheaf_system(chain3, [(1.0, -1.0), (1.0, 1.0)])
        traj = solve_closed_form(sys, FIG1_H0, [0.0, 50.0])
        x = traj.states[-1]
        assert abs(1.0 * x[0] - (-1.0) * x[1]) <= 1e-6
        assert abs(1.0 * x[1] - 1.0 * x[2]) <= 1e-6
        assert np.sign(x[0]) != np.sign(x[1])

    def test_csv_format(self, tmp_path):
        reproduce_figure1(tmp_path)
        header = (tmp_path / "lying.csv").read_text().splitlines()[0]
        assert header == "t,h_1,h_2,h_3"


def test_trajectory_grid_must_increase():
    from lyinggcn.dynamics import Trajectory

    with pytest.raises(ContractError):
        Trajectory([0.0, 0.0, 1.0], np.zeros((3, 2)), "rk4")


def test_unknown_kind_rejected():
    with pytest.raises(ConfigurationError):
        DiffusionSystem("advection", np.eye(2))
