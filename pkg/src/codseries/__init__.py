"""Series solvers built on cyclic decompositions of linear operators.

The library splits a linear operator into an invertible part and a
remainder, seeds a series with a generating function annihilated by the
invertible part, and accumulates corrections by repeatedly applying the
cycle map (the inverse composed with the remainder).  Solvers are wired
for the variable-frequency oscillator, the exponential-potential and
periodic stationary problems, a time-dependent short-step propagator, and
the dispersive wave equation; each ships with an independent numerical
oracle for validation.
"""

from .engine import (
    CONVERGED,
    DIVERGENCE_DETECTED,
    MAX_TERMS,
    CodScheme,
    SeriesBlowUpError,
    SeriesRun,
    StopPolicy,
    convergence_report,
    defect,
    run_cod,
    run_cod_with_source,
    v_apply,
)
from .grids import (
    Grid,
    GridFunction,
    cumulative_integral,
    dft,
    first_derivative,
    idft,
    norms,
    second_derivative,
    wavenumbers,
)
from .oscillator import OscillatorProblem, PowerSeriesSolution
from .stationary import PeriodicField
from .tdse import PropagatorStep, TdseSetup
from .wave import SpaceTimeField, WaveProblem

__version__ = "0.1.0"

__all__ = [
    "CONVERGED",
    "DIVERGENCE_DETECTED",
    "MAX_TERMS",
    "CodScheme",
    "Grid",
    "GridFunction",
    "OscillatorProblem",
    "PeriodicField",
    "PowerSeriesSolution",
    "PropagatorStep",
    "SeriesBlowUpError",
    "SeriesRun",
    "SpaceTimeField",
    "StopPolicy",
    "TdseSetup",
    "WaveProblem",
    "convergence_report",
    "cumulative_integral",
    "defect",
    "dft",
    "first_derivative",
    "idft",
    "norms",
    "run_cod",
    "run_cod_with_source",
    "second_derivative",
    "v_apply",
    "wavenumbers",
]
