import math

import numpy as np
import pytest

from hdw.bundle import Chart, HamiltonianSection
from hdw.models import (ContinuumSpec, GasConstants, PerfectGasModel,
                        WaveModel, abelian_algebra, model_td_mechanics,
                        ym_residual)
from hdw.solver import (GridSection, NewtonError, OdeState, SolverConfig,
                        evolve_field, evolve_ym_abelian, hdw_residual,
                        integrate_ode, reconstruct_P, step_ode_rk4)


def _oscillator():
    return model_td_mechanics("u1^2/2", n=1)


class TestSolverConfig:
    def test_positive_dt(self):
        with pytest.raises(ValueError, match="positive"):
            SolverConfig(dt=0.0, t_final=1.0)

    def test_unknown_boundary(self):
        with pytest.raises(ValueError, match="boundary"):
            SolverConfig(dt=0.1, t_final=1.0, boundary="reflecting")

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            SolverConfig(dt=0.1, t_final=1.0, scheme="euler")

    def test_minimum_grid(self):
        with pytest.raises(ValueError, match="grid points"):
            SolverConfig(dt=0.1, t_final=1.0, K=4, dx=0.1)

    def test_cfl_warning(self):
        config = SolverConfig(dt=0.2, t_final=1.0, K=16, dx=0.1)
        with pytest.warns(UserWarning, match="instability"):
            config.warn_cfl()


class TestStepOdeRk4:
    def test_oscillator_step(self):
        dt = 0.01
        state = step_ode_rk4(OdeState(t=0.0, u=np.array([1.0]), p=np.array([0.0])),
                             _oscillator(), dt)
        assert state.u[0] == pytest.approx(math.cos(dt), abs=1e-10)
        assert state.p[0] == pytest.approx(-math.sin(dt), abs=1e-10)

    def test_zero_hamiltonian_is_identity(self):
        chart = Chart(m=1, n=1)
        h = HamiltonianSection(chart, "0")
        state = OdeState(t=0.0, u=np.array([3.0]), p=np.array([-2.0]))
        out = step_ode_rk4(state, h, 0.5)
        assert out.u[0] == 3.0 and out.p[0] == -2.0
        assert out.t == 0.5

    def test_energy_drift(self):
        h = _oscillator()
        config = SolverConfig(dt=1e-3, t_final=10.0)
        traj = integrate_ode(h, OdeState(t=0.0, u=np.array([1.0]), p=np.array([0.0])),
                             config)
        energies = [0.5 * (s.u[0] ** 2 + s.p[0] ** 2) for s in traj]
        assert max(abs(e - energies[0]) for e in energies) <= 1e-8

    def test_time_dependent_forcing(self):
        # H = p^2/2 + x1*u1: dp/dt = -t, so p(t) = -t^2/2
        h = model_td_mechanics("x1*u1")
        traj = integrate_ode(h, OdeState(t=0.0, u=np.array([0.0]), p=np.array([0.0])),
                             SolverConfig(dt=1e-3, t_final=2.0))
        assert traj[-1].p[0] == pytest.approx(-2.0, abs=1e-8)


class TestEvolveField:
    def _wave(self, K, t_final=1.0):
        dx = 2.0 * np.pi / K
        config = SolverConfig(dt=dx / 4.0, t_final=t_final, K=K, dx=dx)
        x = dx * np.arange(K)
        u0 = np.sin(x)[None, :]
        M0 = -np.cos(x)[None, :]
        return WaveModel(), config, x, u0, M0

    def test_travelling_wave(self):
        model, config, x, u0, M0 = self._wave(128)
        traj = evolve_field(model, config, u0, M0)
        final = traj[-1]
        assert np.max(np.abs(final.u[0] - np.sin(x - final.t))) <= 1e-3

    def test_solution_error_converges(self):
        errors = []
        for K in (64, 128):
            model, config, x, u0, M0 = self._wave(K)
            final = evolve_field(model, config, u0, M0)[-1]
            errors.append(np.max(np.abs(final.u[0] - np.sin(x - final.t))))
        ratio = errors[0] / errors[1]
        assert abs(ratio - 4.0) <= 1.0

    def test_zero_data_stays_zero(self):
        model, config, x, _, _ = self._wave(16, t_final=0.1)
        traj = evolve_field(model, config, np.zeros((1, 16)), np.zeros((1, 16)))
        assert all(np.all(s.u == 0.0) and np.all(s.M == 0.0) for s in traj)

    def test_deterministic(self):
        model, config, x, u0, M0 = self._wave(32, t_final=0.2)
        t1 = evolve_field(model, config, u0, M0)
        t2 = evolve_field(model, config, u0, M0)
        for a, b in zip(t1, t2):
            assert np.array_equal(a.u, b.u)
            assert np.array_equal(a.M, b.M)
            assert np.array_equal(a.P, b.P)

    def test_newton_matches_closed_form(self):
        model, config, x, u0, M0 = self._wave(32, t_final=0.2)
        newton_config = SolverConfig(dt=config.dt, t_final=0.2, K=32, dx=config.dx,
                                     p_reconstruction="newton")
        t1 = evolve_field(model, config, u0, M0)
        t2 = evolve_field(model, newton_config, u0, M0)
        assert np.max(np.abs(t1[-1].u - t2[-1].u)) <= 1e-10


class TestReconstructP:
    def test_wave_closed_form(self):
        K = 64
        dx = 2.0 * np.pi / K
        config = SolverConfig(dt=dx / 4, t_final=1.0, K=K, dx=dx)
        x = dx * np.arange(K)
        P = reconstruct_P(np.sin(x), WaveModel(), config)
        assert np.max(np.abs(P[0] + np.cos(x))) <= dx ** 2

    def test_constant_field(self):
        config = SolverConfig(dt=0.01, t_final=1.0, K=16, dx=0.1)
        P = reconstruct_P(np.full(16, 2.5), WaveModel(), config)
        assert np.allclose(P, 0.0)

    def test_gas_newton_round_trip(self):
        # the Newton solve reproduces the closed-form reconstruction
        model = PerfectGasModel(ContinuumSpec(gas=GasConstants()))
        K = 32
        dx = 1.0 / K
        x = dx * np.arange(K)
        u = x + 0.05 * np.sin(2 * np.pi * x)  # monotone profile, du/dx > 0
        closed = SolverConfig(dt=1e-3, t_final=1.0, K=K, dx=dx, boundary="dirichlet")
        newton = SolverConfig(dt=1e-3, t_final=1.0, K=K, dx=dx, boundary="dirichlet",
                              p_reconstruction="newton")
        P1 = reconstruct_P(u, model, closed)
        P2 = reconstruct_P(u, model, newton)
        assert np.max(np.abs(P1 - P2)) <= 1e-10

    def test_newton_failure_reported(self):
        model = PerfectGasModel(ContinuumSpec(gas=GasConstants()))
        config = SolverConfig(dt=1e-3, t_final=1.0, K=16, dx=0.1)
        # negative deformation gradient is outside the state relation's domain
        with pytest.raises(ValueError, match="positive"):
            reconstruct_P(-2.0 * 0.1 * np.arange(16), model, config)


class TestHdwResidual:
    def test_ode_trajectory_converges(self):
        h = _oscillator()
        norms = []
        for dt in (2e-3, 1e-3):
            traj = integrate_ode(h, OdeState(t=0.0, u=np.array([1.0]), p=np.array([0.0])),
                                 SolverConfig(dt=dt, t_final=1.0))
            norms.append(hdw_residual(traj, h, dt)["evolution_u"]["max"])
        # central time stencil dominates: second order
        assert abs(norms[0] / norms[1] - 4.0) <= 1.0

    def test_stationary_solution(self):
        chart = Chart(m=1, n=1)
        h = HamiltonianSection(chart, "p1_1")  # H independent of u at any point
        states = [OdeState(t=k * 0.1, u=np.array([k * 0.1]), p=np.array([2.0]))
                  for k in range(5)]
        norms = hdw_residual(states, h, 0.1)
        assert norms["evolution_u"]["max"] <= 1e-14
        assert norms["evolution_p"]["max"] <= 1e-14

    def test_field_exact_solution_sampled(self):
        model = WaveModel()
        norms_by_K = []
        for K in (32, 64):
            dx = 2 * np.pi / K
            dt = dx / 4
            x = dx * np.arange(K)
            traj = [GridSection(t=k * dt, x=x,
                                u=np.sin(x - k * dt)[None, :],
                                M=-np.cos(x - k * dt)[None, :],
                                P=-np.cos(x - k * dt)[None, :])
                    for k in range(6)]
            norms = hdw_residual(traj, model.hamiltonian, dt, dx=dx)
            norms_by_K.append(max(norms[k]["max"] for k in norms))
        assert norms_by_K[0] / norms_by_K[1] == pytest.approx(4.0, rel=0.25)

    def test_needs_three_snapshots(self):
        h = _oscillator()
        with pytest.raises(ValueError, match="snapshots"):
            hdw_residual([OdeState(0.0, np.zeros(1), np.zeros(1))] * 2, h, 0.1)

    def test_evolved_field_residual_converges(self):
        model = WaveModel()
        norms = []
        for K in (32, 64):
            dx = 2 * np.pi / K
            config = SolverConfig(dt=dx / 4, t_final=0.5, K=K, dx=dx)
            x = dx * np.arange(K)
            traj = evolve_field(model, config, np.sin(x)[None, :], -np.cos(x)[None, :])
            r = hdw_residual(traj, model.hamiltonian, config.dt, dx=dx)
            norms.append(max(r[k]["max"] for k in r))
        assert abs(norms[0] / norms[1] - 4.0) <= 1.2


class TestEvolveYmAbelian:
    def test_constant_E_preserved(self):
        K = 32
        config = SolverConfig(dt=1e-3, t_final=1.0, K=K, dx=2 * np.pi / K)
        E0 = np.full(K, 0.7)
        u_traj, pi_traj = evolve_ym_abelian(E0, np.zeros(K), config)
        assert np.max(np.abs(pi_traj - 0.7)) == 0.0

    def test_gauge_field_slope(self):
        K = 16
        config = SolverConfig(dt=0.1, t_final=1.0, K=K, dx=0.1)
        E0 = np.full(K, 2.0)
        u_traj, _ = evolve_ym_abelian(E0, np.zeros(K), config)
        # du_x/dt = -E/2 exactly
        assert u_traj[-1, 0, 0, 1] == pytest.approx(-1.0, abs=1e-12)

    def test_residuals_vanish_for_constant_solution(self):
        K = 32
        dx = 2 * np.pi / K
        config = SolverConfig(dt=1e-2, t_final=0.1, K=K, dx=dx)
        u_traj, pi_traj = evolve_ym_abelian(np.full(K, 1.5), np.zeros(K), config)
        norms = ym_residual(u_traj, pi_traj, abelian_algebra(1), config.dt, dx)
        for key in ("curvature", "evolution", "gauss"):
            assert norms[key]["max"] <= 1e-13
