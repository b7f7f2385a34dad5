"""Short-step series propagator for the time-dependent problem.

One step of length dt accumulates the iterated-integral series

    psi(t+dt) = sum_n term_n(t+dt),
    term_0 = psi(t),
    term_{n+1}(t') = -i * integral_t^{t'} H(tau) term_n(tau) dtau,

with every term stored on sub-nodes inside the step.  No time ordering is
introduced: for a time-independent Hamiltonian the N-term step is exactly
the degree-N Taylor polynomial of the evolution operator, which pins the
per-step accuracy at order N+1.

The in-step cumulative integrals are evaluated with a polynomial
collocation rule on Chebyshev-Lobatto sub-nodes.  The rule integrates
polynomial integrands of degree < nodes exactly, which the Taylor-equality
property requires (a trapezoid rule on the sub-nodes would cap every step
at second order regardless of the term count).

The Hamiltonian 0.5*(i d/dx + A(t))^2 + U(x, t) is applied spectrally on a
periodic grid; the vector potential is spatially uniform so the kinetic
part stays diagonal per mode, where i d/dx acts on exp(i k x) as -k.
"""

import numpy as np
import numpy.polynomial.chebyshev as ncheb
from dataclasses import dataclass, field
from typing import Callable, Optional

from .grids import Grid, GridFunction, wavenumbers

__all__ = [
    "PropagationReport",
    "PropagatorStep",
    "TdseSetup",
    "cod_step",
    "hamiltonian_apply",
    "normalize",
    "propagate",
]


def normalize(psi: GridFunction) -> GridFunction:
    """Scale to unit L2 norm (grid convention sqrt(step * sum |psi|^2))."""
    n = psi.l2_norm()
    if n == 0.0:
        raise ValueError("cannot normalize the zero function")
    return psi.with_values(psi.values / n)


@dataclass
class TdseSetup:
    """Grid, interaction callables and the initial state.

    ``potential`` maps (x_array, t) to real values; ``vector_potential``
    maps t to the spatially uniform A(t).  The initial state must be
    L2-normalized to 1 within 1e-12.
    """

    grid: Grid
    potential: Callable[[np.ndarray, float], np.ndarray]
    vector_potential: Callable[[float], float]
    psi0: GridFunction

    def __post_init__(self):
        if self.psi0.grid != self.grid:
            raise ValueError("psi0 lives on a different grid")
        drift = abs(self.psi0.l2_norm() - 1.0)
        if drift > 1e-12:
            raise ValueError(f"psi0 must be L2-normalized to 1, off by {drift:g}")


@dataclass
class PropagatorStep:
    """Step configuration: dt, series term count, sub-node count.

    quadrature_nodes defaults to n_terms + 1, the minimum that keeps the
    in-step integrals exact on the polynomial integrands a
    time-independent Hamiltonian produces.  dt times the spectral radius
    of the Hamiltonian should stay below 1; larger values are reported as
    a warning by :func:`propagate`.
    """

    dt: float
    n_terms: int
    quadrature_nodes: Optional[int] = None
    _rule: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_terms < 1:
            raise ValueError(f"n_terms must be at least 1, got {self.n_terms}")
        if self.quadrature_nodes is not None and self.quadrature_nodes < 2:
            raise ValueError("quadrature_nodes must be at least 2")

    @property
    def nodes(self) -> int:
        if self.quadrature_nodes is not None:
            return self.quadrature_nodes
        return max(2, self.n_terms + 1)

    def integration_rule(self):
        """Sub-node offsets in [0, dt] and the cumulative integration matrix.

        Q[i, j] is the integral from 0 to node i of the Lagrange basis
        polynomial of node j, so (Q @ f_samples) gives the cumulative
        integral of the degree-(nodes-1) interpolant at every node.
        """
        if self._rule is None:
            m = self.nodes
            s = -np.cos(np.pi * np.arange(m) / (m - 1))  # Chebyshev-Lobatto on [-1, 1]
            vander = ncheb.chebvander(s, m - 1)
            to_coeffs = np.linalg.inv(vander)
            q = np.empty((m, m))
            for j in range(m):
                antider = ncheb.chebint(to_coeffs[:, j], lbnd=-1.0)
                q[:, j] = ncheb.chebval(s, antider)
            taus = (s + 1.0) * (0.5 * self.dt)
            self._rule = (taus, 0.5 * self.dt * q)
        return self._rule


def hamiltonian_apply(setup: TdseSetup, psi: GridFunction, t: float) -> GridFunction:
    """Apply 0.5*(i d/dx + A(t))^2 + U(., t): spectral kinetic part plus
    pointwise potential."""
    k = wavenumbers(setup.grid)
    a = setup.vector_potential(t)
    kinetic = np.fft.ifft(0.5 * (k - a) ** 2 * np.fft.fft(psi.values))
    u = setup.potential(setup.grid.points(), t)
    return psi.with_values(kinetic + u * psi.values)


def cod_step(setup: TdseSetup, step: PropagatorStep, psi: GridFunction,
             t: float) -> GridFunction:
    """Advance psi from t to t + dt with the n_terms-term series."""
    taus, q = step.integration_rule()
    m = taus.size
    x = setup.grid.points()
    k = wavenumbers(setup.grid)
    a_nodes = np.array([setup.vector_potential(t + tau) for tau in taus])
    u_nodes = np.stack([
        np.broadcast_to(np.asarray(setup.potential(x, t + tau)), x.shape)
        for tau in taus
    ])
    kinetic_factor = 0.5 * (k[None, :] - a_nodes[:, None]) ** 2

    terms = np.broadcast_to(psi.values, (m, x.size)).astype(complex)
    total = psi.values.astype(complex)
    for _ in range(step.n_terms):
        h_terms = (
            np.fft.ifft(kinetic_factor * np.fft.fft(terms, axis=1), axis=1)
            + u_nodes * terms
        )
        terms = -1j * (q @ h_terms)
        total = total + terms[-1]
    if not np.isfinite(total).all():
        raise ValueError("non-finite values in propagation step")
    return psi.with_values(total)


@dataclass
class PropagationReport:
    """Per-step records {step, t, norm, drift}, warnings, optional states."""

    records: list
    warnings: list
    states: Optional[list] = None


def spectral_radius_estimate(setup: TdseSetup, t: float = 0.0) -> float:
    """Crude bound max_k 0.5*(|k|+|A|)^2 + max|U| used for the dt warning."""
    k_max = float(np.max(np.abs(wavenumbers(setup.grid))))
    a = abs(setup.vector_potential(t))
    u = setup.potential(setup.grid.points(), t)
    return 0.5 * (k_max + a) ** 2 + float(np.max(np.abs(u)))


def propagate(setup: TdseSetup, step: PropagatorStep, t_final: float,
              keep_history: bool = False) -> tuple[GridFunction, PropagationReport]:
    """Iterate :func:`cod_step` to t_final (a positive multiple of dt).

    The truncated series is not unitary; the report records the norm drift
    |norm - 1| per step and the run aborts once it exceeds 0.1.
    """
    ratio = t_final / step.dt
    n_steps = round(ratio)
    if n_steps < 1 or abs(ratio - n_steps) > 1e-9 * max(1.0, abs(ratio)):
        raise ValueError("t_final must be a positive multiple of dt")

    warnings = []
    rho = spectral_radius_estimate(setup)
    if step.dt * rho >= 1.0:
        warnings.append(
            f"dt * spectral radius estimate = {step.dt * rho:.3g} >= 1; "
            "the truncated step may lose accuracy or amplify high modes"
        )

    records = []
    states = [] if keep_history else None
    psi = setup.psi0
    for i in range(1, n_steps + 1):
        psi = cod_step(setup, step, psi, (i - 1) * step.dt)
        norm = psi.l2_norm()
        drift = abs(norm - 1.0)
        records.append({"step": i, "t": i * step.dt, "norm": norm, "drift": drift})
        if keep_history:
            states.append(psi)
        if drift > 0.1:
            raise RuntimeError(
                f"propagation unstable: norm drift {drift:.3g} at step {i}"
            )
    return psi, PropagationReport(records=records, warnings=warnings, states=states)
