import math

import numpy as np
import pytest

from codseries.grids import Grid, GridFunction
from codseries.oracles import crank_nicolson
from codseries.tdse import (
    PropagatorStep,
    TdseSetup,
    cod_step,
    hamiltonian_apply,
    normalize,
    propagate,
)

ZERO_POTENTIAL = lambda x, t: np.zeros_like(x)
ZERO_FIELD = lambda t: 0.0


def plane_wave_setup(n=32, length=8.0 * np.pi, mode=2, potential=ZERO_POTENTIAL,
                     vector_potential=ZERO_FIELD):
    grid = Grid.periodic(0.0, length, n)
    k1 = 2.0 * np.pi / length
    psi = normalize(GridFunction(grid, np.exp(1j * mode * k1 * grid.points())))
    return TdseSetup(grid, potential, vector_potential, psi), mode * k1


class TestHamiltonian:
    def test_kinetic_eigenfunction(self):
        setup, k = plane_wave_setup()
        out = hamiltonian_apply(setup, setup.psi0, 0.0)
        assert np.allclose(out.values, 0.5 * k * k * setup.psi0.values, atol=1e-12)

    def test_uniform_vector_potential_shifts_momentum(self):
        a0 = 0.7
        setup, k = plane_wave_setup(vector_potential=lambda t: a0)
        out = hamiltonian_apply(setup, setup.psi0, 0.0)
        assert np.allclose(out.values, 0.5 * (k - a0) ** 2 * setup.psi0.values,
                           atol=1e-12)

    def test_constant_potential_adds(self):
        u0 = 1.3
        setup, k = plane_wave_setup(potential=lambda x, t: np.full_like(x, u0))
        out = hamiltonian_apply(setup, setup.psi0, 0.0)
        expected = (0.5 * k * k + u0) * setup.psi0.values
        assert np.allclose(out.values, expected, atol=1e-12)


class TestSetupValidation:
    def test_requires_normalized_state(self):
        grid = Grid.periodic(0.0, 2.0 * np.pi, 16)
        with pytest.raises(ValueError, match="normalized"):
            TdseSetup(grid, ZERO_POTENTIAL, ZERO_FIELD,
                      GridFunction(grid, np.ones(16)))

    def test_requires_matching_grid(self):
        grid = Grid.periodic(0.0, 2.0 * np.pi, 16)
        other = Grid.periodic(0.0, 4.0 * np.pi, 16)
        psi = normalize(GridFunction(other, np.ones(16)))
        with pytest.raises(ValueError, match="different grid"):
            TdseSetup(grid, ZERO_POTENTIAL, ZERO_FIELD, psi)

    def test_step_validation(self):
        with pytest.raises(ValueError):
            PropagatorStep(dt=0.0, n_terms=2)
        with pytest.raises(ValueError):
            PropagatorStep(dt=0.1, n_terms=0)
        with pytest.raises(ValueError):
            PropagatorStep(dt=0.1, n_terms=2, quadrature_nodes=1)
        assert PropagatorStep(dt=0.1, n_terms=3).nodes == 4


class TestStep:
    def test_single_term_free_step(self):
        setup, k = plane_wave_setup()
        dt = 1e-2
        out = cod_step(setup, PropagatorStep(dt=dt, n_terms=1), setup.psi0, 0.0)
        expected = (1.0 - 0.5j * k * k * dt) * setup.psi0.values
        assert np.allclose(out.values, expected, atol=1e-13)

    def test_time_independent_step_is_taylor_polynomial(self):
        grid = Grid.periodic(0.0, 8.0 * np.pi, 32)
        x = grid.points()
        setup = TdseSetup(grid, lambda xv, t: np.cos(xv), ZERO_FIELD,
                          normalize(GridFunction(grid, np.exp(-(x - 4 * np.pi) ** 2 / 4))))
        dt = 0.05
        for n_terms in (1, 2, 3, 4):
            stepped = cod_step(setup, PropagatorStep(dt=dt, n_terms=n_terms),
                               setup.psi0, 0.0)
            taylor = setup.psi0.values.copy()
            power = setup.psi0
            scale = 1.0 + 0.0j
            for order in range(1, n_terms + 1):
                power = hamiltonian_apply(setup, power, 0.0)
                scale *= -1j * dt / order
                taylor = taylor + scale * power.values
            assert np.max(np.abs(stepped.values - taylor)) <= 1e-12

    def test_linearity_in_state(self):
        grid = Grid.periodic(0.0, 2.0 * np.pi, 32)
        x = grid.points()
        setup = TdseSetup(grid, lambda xv, t: np.sin(xv), ZERO_FIELD,
                          normalize(GridFunction(grid, np.ones(32))))
        step = PropagatorStep(dt=0.02, n_terms=3)
        rng = np.random.default_rng(9)
        f = GridFunction(grid, rng.standard_normal(32) + 1j * rng.standard_normal(32))
        g = GridFunction(grid, rng.standard_normal(32))
        a, b = 0.3 - 1.1j, 2.0 + 0.2j
        combined = cod_step(setup, step, GridFunction(grid, a * f.values + b * g.values), 0.0)
        separate = a * cod_step(setup, step, f, 0.0).values \
            + b * cod_step(setup, step, g, 0.0).values
        assert np.max(np.abs(combined.values - separate)) <= 1e-12

    def test_step_halving_error_ratio(self):
        grid = Grid.periodic(0.0, 8.0 * np.pi, 32)
        x = grid.points()
        setup = TdseSetup(grid, lambda xv, t: np.cos(xv), ZERO_FIELD,
                          normalize(GridFunction(grid, np.exp(-(x - 4 * np.pi) ** 2 / 4))))
        for n_terms in (1, 2, 3):
            errors = []
            for dt in (0.2, 0.1):
                truth = crank_nicolson(setup, dt / 512, dt, validate=False)
                stepped = cod_step(setup, PropagatorStep(dt=dt, n_terms=n_terms),
                                   setup.psi0, 0.0)
                errors.append(np.max(np.abs(stepped.values - truth.solution.values)))
            ratio = errors[0] / errors[1]
            expected = 2.0 ** (n_terms + 1)
            assert expected / 1.4 <= ratio <= expected * 1.4

    def test_time_dependent_potential_first_order_term(self):
        # term 1 integrates U(tau) exactly for polynomial time dependence
        grid = Grid.periodic(0.0, 2.0 * np.pi, 16)
        setup = TdseSetup(grid, lambda xv, t: np.full_like(xv, t),  # U = t
                          ZERO_FIELD, normalize(GridFunction(grid, np.ones(16))))
        dt = 0.3
        out = cod_step(setup, PropagatorStep(dt=dt, n_terms=1, quadrature_nodes=4),
                       setup.psi0, 0.0)
        # -i * integral_0^dt tau dtau = -i dt^2/2 (kinetic part vanishes)
        expected = (1.0 - 0.5j * dt * dt) * setup.psi0.values
        assert np.max(np.abs(out.values - expected)) <= 1e-14


class TestPropagate:
    def test_free_particle_norm_drift(self):
        setup, _ = plane_wave_setup(n=16)
        final, report = propagate(setup, PropagatorStep(dt=1e-2, n_terms=4), 1.0)
        assert len(report.records) == 100
        assert max(r["drift"] for r in report.records) <= 1e-8
        assert report.warnings == []

    def test_norm_drift_bound_per_step(self):
        setup, _ = plane_wave_setup(n=16)
        step = PropagatorStep(dt=1e-2, n_terms=4)
        _, report = propagate(setup, step, 0.5)
        k_max = np.pi / setup.grid.step
        rho = 0.5 * k_max ** 2
        bound = 2.0 * (rho * step.dt) ** (step.n_terms + 1) / math.factorial(step.n_terms + 1)
        per_step = max(r["drift"] for r in report.records) / len(report.records)
        assert per_step <= max(bound, 1e-12)

    def test_t_final_must_be_multiple(self):
        setup, _ = plane_wave_setup(n=16)
        with pytest.raises(ValueError, match="multiple"):
            propagate(setup, PropagatorStep(dt=1e-2, n_terms=2), 0.0251)

    def test_large_dt_warning(self):
        grid = Grid.periodic(-10.0, 20.0, 16)
        x = grid.points()
        setup = TdseSetup(grid, lambda xv, t: np.full_like(xv, 100.0), ZERO_FIELD,
                          normalize(GridFunction(grid, np.exp(-x ** 2 / 2))))
        _, report = propagate(setup, PropagatorStep(dt=1e-2, n_terms=4), 0.05)
        assert any("spectral radius" in w for w in report.warnings)

    def test_unstable_run_aborts(self):
        grid = Grid.periodic(-10.0, 20.0, 16)
        x = grid.points()
        setup = TdseSetup(grid, lambda xv, t: np.full_like(xv, 1000.0), ZERO_FIELD,
                          normalize(GridFunction(grid, np.exp(-x ** 2 / 2))))
        with pytest.raises(RuntimeError, match="propagation unstable"):
            propagate(setup, PropagatorStep(dt=1e-2, n_terms=4), 0.1)

    def test_harmonic_center_follows_classical_motion(self):
        # coherent state in U = x^2/2: center must trace 2 cos(t) with
        # period 2 pi, cross-checked against the Crank-Nicolson oracle
        length, n = 20.0, 64
        grid = Grid.periodic(-10.0, length, n)
        x = grid.points()
        setup = TdseSetup(grid, lambda xv, t: 0.5 * xv ** 2, ZERO_FIELD,
                          normalize(GridFunction(grid, np.exp(-(x - 2.0) ** 2 / 2.0))))
        dt = 2.0 * np.pi / 1024
        _, report = propagate(setup, PropagatorStep(dt=dt, n_terms=4),
                              2.0 * np.pi, keep_history=True)

        def center(values):
            density = np.abs(values) ** 2
            return float(np.sum(x * density) * grid.step)

        cod_centers = np.array([center(state.values) for state in report.states])
        oracle = crank_nicolson(setup, dt / 16.0, 2.0 * np.pi, validate=False,
                                keep_history=True, history_stride=16)
        cn_centers = np.array([center(state.values)
                               for _, state in oracle.diagnostics["states"]])
        assert cod_centers.size == cn_centers.size == 1024
        assert np.max(np.abs(cod_centers - cn_centers)) <= 0.01 * 2.0

        # period from the zero crossings of the center trace
        times = dt * np.arange(1, cod_centers.size + 1)
        signs = np.sign(cod_centers)
        crossings = times[:-1][signs[:-1] * signs[1:] < 0]
        assert crossings.size >= 2
        period = 2.0 * (crossings[1] - crossings[0])
        assert abs(period - 2.0 * np.pi) <= 0.01 * 2.0 * np.pi
