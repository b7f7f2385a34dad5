"""Decomposition series for the dispersive 1D wave equation.

For d/dt(eps(x) dA/dt) - d^2A/dx^2 = 0 with A(0) = S and dA/dt(0) = R the
invertible part is the double time derivative weighted by eps, inverted by
two cumulative time integrals with 1/eps applied between them, and the
remainder part is the spatial second derivative (applied spectrally on the
periodic x grid).  The generating field is S(x) + t * R(x)/eps(x); its
t = 0 row reproduces S exactly and its time derivative is R/eps, which
coincides with R for eps == 1.

The whole space-time field is stored densely because the cycle map is
global in time; both axes are capped at 2048 samples.

Practical grid note: term n of the series scales like
(k^2 t^2 / eps)^n / (2n)! per spatial mode, which decays only after the
factorial catches up.  Round-off noise seeded at the highest grid mode
rides the same hump, so keep k_max * t_max / sqrt(min eps) moderate (a
few tens at most) or the transient growth swamps the answer and the run
stops with divergence detected.
"""

import numpy as np
from dataclasses import dataclass

from .engine import CodScheme, SeriesRun, StopPolicy, run_cod
from .grids import Grid, GridFunction, cumtrapz_from, second_diff, wavenumbers

__all__ = [
    "SpaceTimeField",
    "WaveProblem",
    "build_wave_scheme",
    "solve_wave",
    "write_field_csv",
]

MAX_AXIS_SAMPLES = 2048


@dataclass
class SpaceTimeField:
    """Complex samples indexed (time, space) on a uniform rectangle.

    The x grid is read periodically (endpoint excluded); the t grid must
    start at 0.
    """

    x_grid: Grid
    t_grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.t_grid.start != 0.0:
            raise ValueError("time grid must start at 0")
        if self.t_grid.count > MAX_AXIS_SAMPLES or self.x_grid.count > MAX_AXIS_SAMPLES:
            raise ValueError(f"axis sample counts are capped at {MAX_AXIS_SAMPLES}")
        values = np.ascontiguousarray(self.values, dtype=complex)
        expected = (self.t_grid.count, self.x_grid.count)
        if values.shape != expected:
            raise ValueError(f"values shape {values.shape} does not match {expected}")
        self.values = values

    def with_values(self, values) -> "SpaceTimeField":
        return SpaceTimeField(self.x_grid, self.t_grid, values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def row(self, t: float) -> GridFunction:
        """Spatial slice at time t (must be a time grid point)."""
        return GridFunction(self.x_grid, self.values[self.t_grid.index_of(t)])


@dataclass
class WaveProblem:
    """Permittivity profile and initial data, all sampled on one x grid.

    eps must be real and strictly positive; S is the initial field and R
    the intended initial time derivative (realized as R/eps for eps != 1,
    see the module docstring).
    """

    epsilon: GridFunction
    S: GridFunction
    R: GridFunction

    def __post_init__(self):
        if self.S.grid != self.epsilon.grid or self.R.grid != self.epsilon.grid:
            raise ValueError("mismatched grids")
        eps = self.epsilon.values
        if np.max(np.abs(eps.imag)) > 0:
            raise ValueError("permittivity must be real")
        if np.min(eps.real) <= 0:
            raise ValueError("permittivity must be strictly positive everywhere")


def build_wave_scheme(problem: WaveProblem, x_grid: Grid, t_grid: Grid,
                      gen_tol: float | None = None) -> CodScheme:
    """Wire a wave problem into a scheme over space-time fields.

    cycle_map(F) integrates the spectral d^2/dx^2 of F twice in time
    (inner plain, 1/eps between, outer plain), both integrals from t = 0.
    """
    if problem.epsilon.grid != x_grid:
        raise ValueError("problem data must be sampled on the given x grid")
    eps = problem.epsilon.values.real
    inv_eps = 1.0 / eps
    ksq = wavenumbers(x_grid) ** 2
    dt = t_grid.step
    t_col = t_grid.points()[:, None]

    def d2x(values: np.ndarray) -> np.ndarray:
        return np.fft.ifft(-ksq[None, :] * np.fft.fft(values, axis=1), axis=1)

    def cycle(f: SpaceTimeField) -> SpaceTimeField:
        inner = cumtrapz_from(d2x(f.values), dt, 0, axis=0)
        outer = cumtrapz_from(inv_eps[None, :] * inner, dt, 0, axis=0)
        return f.with_values(outer)

    def g_op(f: SpaceTimeField) -> SpaceTimeField:
        # time-independent eps: d/dt(eps d/dt .) == eps * d^2/dt^2, and the
        # single second-difference stencil stays second order at the time
        # boundaries where two chained first differences would drop to O(dt)
        return f.with_values(eps[None, :] * second_diff(f.values, dt, axis=0))

    def defect_op(f: SpaceTimeField) -> SpaceTimeField:
        return f.with_values(g_op(f).values - d2x(f.values))

    def g_inverse(f: SpaceTimeField) -> SpaceTimeField:
        inner = cumtrapz_from(f.values, dt, 0, axis=0)
        return f.with_values(cumtrapz_from(inv_eps[None, :] * inner, dt, 0, axis=0))

    generating = SpaceTimeField(
        x_grid, t_grid,
        problem.S.values[None, :] + t_col * (inv_eps * problem.R.values)[None, :],
    )
    if gen_tol is None:
        gen_tol = 1e-8 * (1.0 + generating.sup_norm())

    return CodScheme(
        cycle_map=cycle,
        generating=generating,
        defect_op=defect_op,
        g_op=g_op,
        g_inverse=g_inverse,
        label="wave-dispersive",
        gen_tol=gen_tol,
    )


def solve_wave(problem: WaveProblem, x_grid: Grid, t_grid: Grid,
               policy: StopPolicy) -> tuple[SpaceTimeField, SeriesRun]:
    """Accumulate the space-time series and return (field, run diagnostics).

    A divergent run (time window too long for max(1/eps) * k_max^2) is
    reported through run.stop_reason; shrinking the time window restores
    convergence.
    """
    scheme = build_wave_scheme(problem, x_grid, t_grid)
    run = run_cod(scheme, policy)
    return run.partial_sum, run


def write_field_csv(field: SpaceTimeField, path, meta_path=None):
    """Row-major CSV (one time row per line, re,im pairs per x sample)."""
    import json

    with open(path, "w", encoding="ascii") as fh:
        for row in field.values:
            fh.write(",".join(f"{v.real:.17g},{v.imag:.17g}" for v in row) + "\n")
    if meta_path is not None:
        meta = {
            "t_start": field.t_grid.start,
            "t_step": field.t_grid.step,
            "t_count": field.t_grid.count,
            "x_start": field.x_grid.start,
            "x_step": field.x_grid.step,
            "x_count": field.x_grid.count,
            "layout": "row-major re,im pairs, one time row per line",
        }
        with open(meta_path, "w", encoding="ascii") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")
