"""One-speed slab transport with isotropic scattering and vacuum boundaries.

Three iterative schemes share the same diamond-difference sweep:

* ``solve_richardson`` -- plain source iteration;
* ``solve_dsa`` -- source iteration with a regularized diffusion correction;
* ``solve_nda`` -- high-order sweep coupled to a drift-diffusion low-order
  equation through edge consistency terms.

Every solver starts from a zero scalar flux and counts one transport sweep
per outer iteration.  Diffusion solves are not counted.
"""
from dataclasses import dataclass, field
from time import perf_counter
from typing import Optional

import numpy as np

from slabselect._backend import kernels
from slabselect.quadrature import AngularQuadrature, gauss_legendre

MAX_SWEEPS = 10_000


class ZeroPivotError(ArithmeticError):
    """Tridiagonal elimination hit a pivot with magnitude below 1e-300."""


@dataclass(frozen=True)
class SlabProblem:
    """A homogeneous slab: cross sections in 1/cm, source in n/(cm^3 s)."""

    scattering_ratio: float = 0.0
    num_cells: int = 16
    sn_order: int = 8
    width: float = 10.0
    sigma_t: float = 1.0
    source: float = 6.0
    tolerance: float = 1e-5
    max_sweeps: int = MAX_SWEEPS

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"width must be positive, got {self.width}")
        if not self.sigma_t > 0:
            raise ValueError(f"sigma_t must be positive, got {self.sigma_t}")
        if not 0.0 <= self.scattering_ratio <= 1.0:
            raise ValueError(f"scattering_ratio must lie in [0, 1], got {self.scattering_ratio}")
        if not self.source >= 0:
            raise ValueError(f"source must be non-negative, got {self.source}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if int(self.num_cells) != self.num_cells or self.num_cells < 1:
            raise ValueError(f"num_cells must be a positive integer, got {self.num_cells}")
        if int(self.max_sweeps) != self.max_sweeps or self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be a positive integer, got {self.max_sweeps}")
        if int(self.sn_order) != self.sn_order or self.sn_order < 2 or self.sn_order % 2:
            raise ValueError(f"sn_order must be a positive even integer, got {self.sn_order}")

    @property
    def dx(self) -> float:
        return self.width / self.num_cells

    @property
    def sigma_s(self) -> float:
        return self.scattering_ratio * self.sigma_t

    @property
    def sigma_a(self) -> float:
        return self.sigma_t - self.sigma_s

    @property
    def diffusion_coefficient(self) -> float:
        return 1.0 / (3.0 * self.sigma_t)


@dataclass
class TransportState:
    scalar_flux: np.ndarray
    edge_angular_flux: np.ndarray
    edge_current: np.ndarray
    correction: Optional[np.ndarray] = None
    d_hat: Optional[np.ndarray] = None


@dataclass
class SolveOutcome:
    solver: str
    sweeps: int
    runtime_seconds: float
    converged: bool
    final_error: float
    scalar_flux: np.ndarray = field(repr=False)
    state: TransportState = field(repr=False)


def thomas_solve(lower, diag, upper, rhs) -> np.ndarray:
    """Solve a tridiagonal system by forward elimination and back substitution.

    ``lower`` and ``upper`` hold the n-1 sub- and super-diagonal entries.
    Raises :class:`ZeroPivotError` if a pivot vanishes.
    """
    diag = np.ascontiguousarray(diag, dtype=float)
    n = diag.shape[0]
    lower = np.ascontiguousarray(lower, dtype=float)
    upper = np.ascontiguousarray(upper, dtype=float)
    rhs = np.ascontiguousarray(rhs, dtype=float)
    if n < 1:
        raise ValueError("system must have at least one unknown")
    if lower.shape != (n - 1,) or upper.shape != (n - 1,) or rhs.shape != (n,):
        raise ValueError(
            f"inconsistent tridiagonal shapes: lower {lower.shape}, diag {diag.shape}, "
            f"upper {upper.shape}, rhs {rhs.shape}"
        )
    x, ok = kernels.thomas(lower, diag, upper, rhs)
    if not ok:
        raise ZeroPivotError("zero pivot in tridiagonal elimination")
    return x


def _relative_change(new, old):
    top = np.linalg.norm(new - old)
    bottom = np.linalg.norm(new)
    if bottom > 0:
        return top / bottom
    return 0.0 if top == 0 else np.inf


class _Sweeper:
    def __init__(self, problem: SlabProblem, quadrature: AngularQuadrature):
        if quadrature.order != problem.sn_order:
            raise ValueError(
                f"quadrature order {quadrature.order} does not match sn_order {problem.sn_order}"
            )
        self.mu = np.ascontiguousarray(quadrature.nodes, dtype=float)
        self.wt = np.ascontiguousarray(quadrature.weights, dtype=float)
        self.wmu = self.wt * self.mu
        self.dx = problem.dx
        self.sigma_t = float(problem.sigma_t)
        self.psi_edge = np.zeros((problem.num_cells + 1, quadrature.order))

    def __call__(self, emission):
        phi = np.empty(emission.shape[0])
        kernels.sweep(self.mu, self.wt, self.dx, self.sigma_t,
                      np.ascontiguousarray(emission, dtype=float), phi, self.psi_edge)
        return phi

    def current(self):
        return self.psi_edge @ self.wmu


def sweep(problem: SlabProblem, quadrature: AngularQuadrature, emission):
    """One transport sweep with a frozen isotropic emission density.

    ``emission[i]`` is the full per-unit-cosine source in cell i,
    ``sigma_s/2 * phi_i + Q_i/2``.  Returns cell scalar flux, edge angular
    flux (edges x ordinates) and edge current.
    """
    emission = np.asarray(emission, dtype=float)
    if emission.shape != (problem.num_cells,):
        raise ValueError(f"emission must have {problem.num_cells} entries, got {emission.shape}")
    sweeper = _Sweeper(problem, quadrature)
    phi = sweeper(emission)
    return phi, sweeper.psi_edge.copy(), sweeper.current()


def _quadrature_for(problem, quadrature):
    return gauss_legendre(problem.sn_order) if quadrature is None else quadrature


def solve_richardson(problem: SlabProblem, quadrature: AngularQuadrature = None) -> SolveOutcome:
    """Source iteration until the relative L2 change in phi drops below tolerance."""
    start = perf_counter()
    sweeper = _Sweeper(problem, _quadrature_for(problem, quadrature))
    half_q = 0.5 * problem.source
    half_s = 0.5 * problem.sigma_s
    phi = np.zeros(problem.num_cells)
    err = np.inf
    converged = False
    k = 0
    while k < problem.max_sweeps:
        k += 1
        new = sweeper(half_s * phi + half_q)
        err = _relative_change(new, phi)
        phi = new
        if not np.isfinite(err):
            break
        if err < problem.tolerance:
            converged = True
            break
    state = TransportState(phi, sweeper.psi_edge.copy(), sweeper.current())
    return SolveOutcome("richardson", k, perf_counter() - start, converged, float(err), phi, state)


def dsa_operator(problem: SlabProblem):
    """Regularized diffusion operator for the DSA error equation (lower, diag, upper)."""
    n = problem.num_cells
    dx2 = problem.dx * problem.dx
    d = problem.diffusion_coefficient
    sa = problem.sigma_a
    off = np.full(n - 1, -d / dx2 + 0.25 * sa)
    diag = np.full(n, 2.0 * d / dx2 + 0.5 * sa)
    return off, diag, off.copy()


def solve_dsa(problem: SlabProblem, quadrature: AngularQuadrature = None) -> SolveOutcome:
    """Source iteration with a diffusion synthetic correction after every sweep.

    The correction f solves the regularized diffusion error equation with
    zero ghost values outside the slab.  Its regularized cell value,
    (f[i-1] + 2 f[i] + f[i+1]) / 4, is added to every ordinate of the
    angular flux, so the scalar flux gains twice that amount.
    """
    start = perf_counter()
    sweeper = _Sweeper(problem, _quadrature_for(problem, quadrature))
    lower, diag, upper = dsa_operator(problem)
    half_q = 0.5 * problem.source
    half_s = 0.5 * problem.sigma_s
    n = problem.num_cells
    phi = np.zeros(n)
    f = np.zeros(n)
    fp = np.zeros(n + 2)
    err = np.inf
    converged = False
    k = 0
    while k < problem.max_sweeps:
        k += 1
        half = sweeper(half_s * phi + half_q)
        f, ok = kernels.thomas(lower, diag, upper, half_s * (half - phi))
        if not ok:
            phi = half
            err = np.inf
            break
        fp[1:-1] = f
        new = half + 0.5 * (fp[:-2] + 2.0 * fp[1:-1] + fp[2:])
        err = _relative_change(new, phi)
        phi = new
        if not np.isfinite(err):
            break
        if err < problem.tolerance:
            converged = True
            break
    state = TransportState(phi, sweeper.psi_edge.copy(), sweeper.current(), correction=f)
    return SolveOutcome("dsa", k, perf_counter() - start, converged, float(err), phi, state)


def consistency_terms(problem: SlabProblem, phi_ho, current):
    """Edge D-hat values closing the low-order equation on the swept solution.

    The denominator is the same two-cell average the low-order stencil uses
    for edge flux, with zero ghost cells outside the slab, which makes the
    low-order solution reproduce the swept flux exactly at convergence.
    """
    padded = np.zeros(phi_ho.shape[0] + 2)
    padded[1:-1] = phi_ho
    edge_flux = 0.5 * (padded[:-1] + padded[1:])
    gradient = (padded[1:] - padded[:-1]) / problem.dx
    numer = current + problem.diffusion_coefficient * gradient
    safe = np.abs(edge_flux) >= 1e-300
    return np.where(safe, numer / np.where(safe, edge_flux, 1.0), 0.0)


def low_order_system(problem: SlabProblem, d_hat):
    """Tridiagonal drift-diffusion operator (lower, diag, upper) for given edge D-hat."""
    dx = problem.dx
    dd = problem.diffusion_coefficient / (dx * dx)
    drift = d_hat / (2.0 * dx)
    diag = 2.0 * dd + drift[1:] - drift[:-1] + problem.sigma_a
    upper = -dd + drift[1:-1]
    lower = -dd - drift[1:-1]
    return lower, diag, upper


def solve_nda(problem: SlabProblem, quadrature: AngularQuadrature = None) -> SolveOutcome:
    """Picard iteration between the transport sweep and the low-order equation.

    Convergence is measured on successive low-order scalar fluxes.
    """
    start = perf_counter()
    sweeper = _Sweeper(problem, _quadrature_for(problem, quadrature))
    half_q = 0.5 * problem.source
    half_s = 0.5 * problem.sigma_s
    rhs = np.full(problem.num_cells, float(problem.source))
    phi = np.zeros(problem.num_cells)
    d_hat = np.zeros(problem.num_cells + 1)
    current = np.zeros(problem.num_cells + 1)
    err = np.inf
    converged = False
    k = 0
    while k < problem.max_sweeps:
        k += 1
        phi_ho = sweeper(half_s * phi + half_q)
        current = sweeper.current()
        d_hat = consistency_terms(problem, phi_ho, current)
        lower, diag, upper = low_order_system(problem, d_hat)
        new, ok = kernels.thomas(lower, diag, upper, rhs)
        if not ok:
            err = np.inf
            break
        err = _relative_change(new, phi)
        phi = new
        if not np.isfinite(err):
            break
        if err < problem.tolerance:
            converged = True
            break
    state = TransportState(phi, sweeper.psi_edge.copy(), current, d_hat=d_hat)
    return SolveOutcome("nda", k, perf_counter() - start, converged, float(err), phi, state)


SOLVER_FUNCTIONS = {
    "richardson": solve_richardson,
    "dsa": solve_dsa,
    "nda": solve_nda,
}


def solve(problem: SlabProblem, solver: str, quadrature: AngularQuadrature = None) -> SolveOutcome:
    try:
        func = SOLVER_FUNCTIONS[solver]
    except KeyError:
        raise ValueError(f"unknown solver {solver!r}; choose from {sorted(SOLVER_FUNCTIONS)}") from None
    return func(problem, quadrature)


def particle_balance(problem: SlabProblem, state: TransportState) -> float:
    """Relative mismatch between source and absorption plus net leakage.

    Falls back to the absolute residual when the source is zero.
    """
    phi = np.asarray(state.scalar_flux)
    current = np.asarray(state.edge_current)
    produced = problem.source * problem.width
    lost = problem.sigma_a * np.sum(phi) * problem.dx + (current[-1] - current[0])
    residual = abs(produced - lost)
    return residual / produced if produced > 0 else residual
