"""Linear and nonlinear solvers for the traveling system.

The constant-coefficient linearization is inverted exactly in Fourier
space, either mode-by-mode through the (d+1)x(d+1) matrix symbol or via
the decoupled scalar route; the background linearization is solved by
restarted GMRES, right-preconditioned by the matrix-symbol inverse; the
nonlinear problem by damped Newton with residual-norm backtracking.
Everything works in the gauge where eta has zero spatial mean.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np
import scipy.sparse.linalg as spla

from .errors import (
    DepthCollapse,
    InvalidCase,
    KrylovStagnation,
    MaxItersExceeded,
    NonPositivePhysical,
    NonZeroMeanData,
    SingularSymbol,
)
from .model import (
    Residual,
    apply_linearized,
    dissipation_identity_residual,
    forcing_poly,
    residual,
    residual_1d,
    v_from_eta,
)
from .spectral import SpectralField, dealias, param_norms, sobolev_norm
from .state import Params, State
from .symbols import matrix_symbol, reduced_symbol_1d, region_of, repar_symbol_1d


@dataclass(frozen=True)
class NewtonConfig:
    max_iters: int = 50
    abs_tol: float = 1e-10
    rel_tol: float = 1e-12
    damping: float = 0.5
    max_halvings: int = 20
    krylov_rel_tol: float = 1e-3
    krylov_max_iters: int = 200
    krylov_restart: int = 50

    def __post_init__(self):
        if min(self.abs_tol, self.rel_tol, self.krylov_rel_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if not 0 < self.damping < 1:
            raise ValueError("damping factor must lie in (0, 1)")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_history: list
    final_state: State
    dissipation_residual: float
    norm_report: dict
    krylov_iters: list = field(default_factory=list)

    def summary(self):
        last = self.residual_history[-1] if self.residual_history else float("nan")
        return (
            f"converged={self.converged} iterations={self.iterations} "
            f"residual={last:.3e} dissipation={self.dissipation_residual:.3e}"
        )


# ---------------------------------------------------------------------------
# exact inversion of the trivial linearization


class TrivialSolver:
    """Exact Fourier inverse of the zero-state linearization.

    ``backend='matrix'`` inverts the (d+1)x(d+1) matrix symbol at every
    nonzero mode (valid for all mu, sigma >= 0); ``backend='decoupling'``
    follows the scalar decoupling route through the Leray projection and
    the free-surface symbol.  The zero mode is solved as
    ``v_hat(0) = f_hat(0)``, ``eta_hat(0) = 0``, requiring mean-free h.
    """

    def __init__(self, grid, params, backend="matrix"):
        if backend not in ("matrix", "decoupling"):
            raise ValueError(f"unknown backend {backend!r}")
        self.grid = grid
        self.params = params
        self.backend = backend
        if backend == "matrix":
            d = grid.dim
            xi_flat = grid.xi.reshape(d, -1)
            M = matrix_symbol(xi_flat, params, d)  # (modes, d+1, d+1)
            M[0] = np.eye(d + 1)
            cond = np.linalg.cond(M)
            worst = float(np.max(cond))
            if worst > 1e14:
                raise SingularSymbol(
                    f"matrix symbol condition number {worst:.2e} exceeds 1e14"
                )
            self._inv = np.linalg.inv(M)

    def solve(self, h, f):
        """Solve the trivial linearization for data fields ``(h, f)``."""
        grid = self.grid
        peak = np.max(np.abs(h.samples))
        if peak > 0 and abs(h.mean()[0]) > 1e-12 * peak:
            raise NonZeroMeanData("mass-equation data must be mean-free")
        if self.backend == "matrix":
            return self._solve_matrix(h, f)
        return self._solve_decoupling(h, f)

    def solve_residual(self, res):
        return self.solve(res.h_part, res.f_part)

    def _solve_matrix(self, h, f):
        grid = self.grid
        d = grid.dim
        n = int(np.prod(grid.points))
        rhs = np.empty((n, d + 1), dtype=complex)
        rhs[:, :d] = f.spectrum.reshape(d, n).T
        rhs[:, d] = h.spectrum[0].ravel()
        rhs[0, d] = 0.0  # eta zero mode is pinned
        sol = np.einsum("nab,nb->na", self._inv, rhs)
        vspec = sol[:, :d].T.reshape((d,) + grid.points)
        espec = sol[:, d].reshape((1,) + grid.points)
        espec[(0,) + (0,) * grid.dim] = 0.0
        return State(
            v=SpectralField(grid, spectrum=vspec),
            eta=SpectralField(grid, spectrum=espec),
        )

    def _solve_decoupling(self, h, f):
        from .symbols import surface_symbol

        grid = self.grid
        d = grid.dim
        params = self.params
        g, mu, sg = params.gamma, params.mu, params.sigma
        xi = grid.xi
        mag2 = grid.xi_mag**2
        origin = (0,) * d
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_mag2 = np.where(mag2 > 0, 1.0 / np.where(mag2 > 0, mag2, 1.0), 0.0)
            riesz_sym = np.where(
                mag2 > 0, 1j * xi / np.sqrt(np.where(mag2 > 0, mag2, 1.0)), 0.0
            )
        i_xi = 2j * np.pi * xi
        fspec = f.spectrum
        hspec = h.spectrum[0]

        # H = grad(Lap^-1 h), zero mode 0
        lap_inv = -inv_mag2 / (4 * np.pi**2)
        H = i_xi * (lap_inv * hspec)

        # Leray projection of f and its complement
        xf = np.einsum("a...,a...->...", xi, fspec)
        Pf = fspec - xi * (inv_mag2 * xf)
        Qf = fspec - Pf

        # phi = (I - P) f - (I - gamma d1 - 4 mu^2 Lap) H
        op = 1.0 - g * i_xi[0] + 16 * np.pi**2 * mu**2 * mag2
        phi = Qf - op * H

        # eta from the scalar surface symbol applied to R . phi
        rphi = np.einsum("a...,a...->...", riesz_sym, phi)
        xi_safe = np.where(mag2 > 0, xi, 1.0)
        chi = surface_symbol(xi_safe, params, d)
        espec = np.where(mag2 > 0, rphi / chi, 0.0)
        espec[origin] = 0.0

        # P v from the damped heat factor; (I - P) v = H - gamma R R1 eta
        heat = 1.0 - g * i_xi[0] + 4 * np.pi**2 * mu**2 * mag2
        Pv = Pf / heat
        RR1 = -xi * xi[0] * inv_mag2  # symbol of R R_1
        Qv = H - g * RR1 * espec
        vspec = Pv + Qv
        vspec[(slice(None),) + origin] = fspec[(slice(None),) + origin]
        return State(
            v=SpectralField(grid, spectrum=vspec),
            eta=SpectralField(grid, spectrum=espec[np.newaxis]),
        )


def solve_trivial(h, f, params, backend="matrix"):
    """One-shot exact solve of the trivial linearization."""
    return TrivialSolver(h.grid, params, backend=backend).solve(h, f)


# ---------------------------------------------------------------------------
# packing of residuals into weighted coefficient vectors


class _YPacking:
    """Isometry between residual pairs and real vectors in the Y0 norm."""

    def __init__(self, grid):
        self.grid = grid
        d = grid.dim
        mag = grid.xi_mag.copy()
        origin = (0,) * d
        mag[origin] = np.inf
        wh = np.sqrt(1.0 / (2 * np.pi * mag) ** 2 + (1.0 + grid.xi_mag**2))
        wh[origin] = 0.0
        self.wh = wh
        self.nmodes = int(np.prod(grid.points))
        self.size = 2 * (d + 1) * self.nmodes

    def pack(self, res):
        grid = self.grid
        hw = res.h_part.spectrum[0] * self.wh
        fs = res.f_part.spectrum
        return np.concatenate(
            [hw.real.ravel(), hw.imag.ravel(), fs.real.ravel(), fs.imag.ravel()]
        )

    def unpack(self, vec):
        grid = self.grid
        d = grid.dim
        n = self.nmodes
        shape = grid.points
        hw = (vec[:n] + 1j * vec[n : 2 * n]).reshape(shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            hspec = np.where(self.wh > 0, hw / np.where(self.wh > 0, self.wh, 1.0), 0.0)
        fr = vec[2 * n : (2 + d) * n].reshape((d,) + shape)
        fi = vec[(2 + d) * n :].reshape((d,) + shape)
        return Residual(
            h_part=SpectralField(grid, spectrum=hspec[np.newaxis]),
            f_part=SpectralField(grid, spectrum=fr + 1j * fi),
        )


# ---------------------------------------------------------------------------
# Krylov solution of the background linearization


def _solve_linearized(state0, params, forcing_data, rhs, config, precond=None):
    """Right-preconditioned GMRES on the background linearization.

    Returns ``(direction, achieved_rel_residual, inner_iterations)``;
    the relative residual is re-measured directly in the Y0 norm.
    """
    grid = state0.grid
    pack = _YPacking(grid)
    if precond is None:
        precond = TrivialSolver(grid, params, backend="matrix")
    b = pack.pack(rhs)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0:
        return State.zeros(grid), 0.0, 0

    def matvec(z):
        direction = precond.solve_residual(pack.unpack(z))
        out = apply_linearized(state0, params, forcing_data, direction)
        return pack.pack(out)

    op = spla.LinearOperator((pack.size, pack.size), matvec=matvec, dtype=float)
    iters = 0

    def count(_):
        nonlocal iters
        iters += 1

    maxiter = max(1, math.ceil(config.krylov_max_iters / config.krylov_restart))
    z, _ = spla.gmres(
        op,
        b,
        rtol=config.krylov_rel_tol,
        atol=0.0,
        restart=config.krylov_restart,
        maxiter=maxiter,
        callback=count,
        callback_type="pr_norm",
    )
    direction = precond.solve_residual(pack.unpack(z))
    achieved = (
        apply_linearized(state0, params, forcing_data, direction) - rhs
    ).norm_y(0) / rhs.norm_y(0)
    return direction, float(achieved), iters


def solve_linearized(state0, params, forcing_data, rhs, config=None, precond=None):
    """Solve the background-linearized system for a state direction.

    Raises :class:`KrylovStagnation` when the Y0-relative tolerance is
    not met within the iteration budget; the stagnated direction is
    attached to the exception for callers that can still use it.
    """
    config = config or NewtonConfig()
    direction, achieved, iters = _solve_linearized(
        state0, params, forcing_data, rhs, config, precond
    )
    if achieved > config.krylov_rel_tol:
        exc = KrylovStagnation(
            f"relative residual {achieved:.3e} after {iters} iterations",
            report={"direction": direction, "achieved": achieved, "iters": iters},
        )
        raise exc
    return direction


# ---------------------------------------------------------------------------
# damped Newton iteration


def _dealias_state(state):
    return State(v=dealias(state.v), eta=dealias(state.eta))


def newton_solve(params, forcing_data, initial=None, config=None):
    """Damped Newton iteration for the full traveling system.

    At every step the polynomial forcing is rebuilt from the current
    surface, the linearized system is solved by preconditioned GMRES,
    and the step is backtracked on the Y0 residual norm.  The Krylov
    tolerance is tightened to 1e-8 once the residual falls below 1e-4
    so the final steps report clean residuals.
    """
    config = config or NewtonConfig()
    grid = forcing_data.grid
    state = _dealias_state(initial) if initial is not None else State.zeros(grid)
    precond = TrivialSolver(grid, params, backend="matrix")

    history = []
    krylov_iters = []
    converged = False
    steps = 0

    def total_residual(st):
        F = forcing_poly(st.eta, forcing_data, params)
        return residual(st, params, F), F

    res, F = total_residual(state)
    rnorm = res.norm_y(0)
    history.append(rnorm)

    while True:
        if rnorm <= config.abs_tol or rnorm <= config.rel_tol * history[0]:
            converged = True
            break
        if steps >= config.max_iters:
            break
        # near convergence, tighten the Krylov tolerance for clean final
        # residuals, but no further than the double-precision floor of
        # the preconditioned operator arithmetic
        tol = config.krylov_rel_tol
        if rnorm <= 1e-4:
            tol = min(tol, max(1e-8, 1e-13 / rnorm))
        step_cfg = replace(config, krylov_rel_tol=tol)
        direction, achieved, iters = _solve_linearized(
            state, params, forcing_data, -1.0 * res, step_cfg, precond
        )
        krylov_iters.append(iters)

        lam = 1.0
        accepted = False
        depth_ok = False
        for _ in range(config.max_halvings + 1):
            trial = state + lam * direction
            if trial.min_depth() <= 0:
                lam *= config.damping
                continue
            depth_ok = True
            trial_res, trial_F = total_residual(trial)
            tnorm = trial_res.norm_y(0)
            if tnorm < rnorm:
                state, res, F, rnorm = trial, trial_res, trial_F, tnorm
                accepted = True
                break
            lam *= config.damping
        steps += 1
        if not depth_ok:
            raise DepthCollapse(
                "no backtracked step keeps 1 + eta positive",
                report=_report(state, params, F, history, krylov_iters, False, steps),
            )
        if not accepted:
            raise MaxItersExceeded(
                "backtracking failed to reduce the residual",
                report=_report(state, params, F, history, krylov_iters, False, steps),
            )
        history.append(rnorm)

    if not converged:
        raise MaxItersExceeded(
            f"no convergence in {config.max_iters} Newton iterations",
            report=_report(state, params, F, history, krylov_iters, False, steps),
        )
    return _report(state, params, F, history, krylov_iters, converged, steps)


def _report(state, params, forcing, history, krylov_iters, converged, steps):
    return SolveReport(
        converged=converged,
        iterations=steps,
        residual_history=list(history),
        final_state=state,
        dissipation_residual=dissipation_identity_residual(state, params, forcing),
        norm_report=param_norms(state, params, 0),
        krylov_iters=list(krylov_iters),
    )


# ---------------------------------------------------------------------------
# dedicated one-dimensional path


def solve_1d(params, forcing_data, case, config=None):
    """Newton solve of the reduced 1D equation in the rescaled unknown.

    The unknown is ``zeta = P^case eta``; steps invert the frozen
    constant-coefficient Jacobian exactly by symbol division with the
    reduced symbol ``m``.  The iteration stays in the mean-free gauge
    (the zero mode of the reduced residual is projected out), matching
    the gauge of the general solver.  Returns the assembled state with
    ``v = gamma eta / (1 + eta)``.
    """
    config = config or NewtonConfig()
    grid = forcing_data.grid
    if grid.dim != 1:
        raise InvalidCase("solve_1d requires one-dimensional forcing data")
    if case not in region_of(params):
        raise InvalidCase(
            f"case {case} is not admissible at (gamma, mu, sigma) = "
            f"({params.gamma}, {params.mu}, {params.sigma})"
        )

    xi = grid.xi[0]
    p_sym = repar_symbol_1d(case, xi, params)
    m_sym = reduced_symbol_1d(xi, params)
    inv_jac = p_sym / m_sym  # exact inverse of m(D) P^-1 at the zero state
    origin = (0,)

    def eta_of(zeta_spec):
        espec = zeta_spec / p_sym
        return SpectralField(grid, spectrum=espec[np.newaxis])

    def reduced_residual(zeta_spec):
        eta = eta_of(zeta_spec)
        F = forcing_poly(eta, forcing_data, params)
        G = residual_1d(eta, params, F)
        spec = G.spectrum[0].copy()
        spec[origin] = 0.0  # mean-free gauge
        return SpectralField(grid, spectrum=spec[np.newaxis])

    zeta = np.zeros(grid.points, dtype=complex)
    G = reduced_residual(zeta)
    gnorm = sobolev_norm(G, 0)
    history = [gnorm]
    converged = False
    steps = 0

    while True:
        if gnorm <= config.abs_tol or gnorm <= config.rel_tol * history[0]:
            converged = True
            break
        if steps >= config.max_iters:
            break
        delta = -inv_jac * G.spectrum[0]
        delta[origin] = 0.0
        lam = 1.0
        accepted = False
        depth_ok = False
        for _ in range(config.max_halvings + 1):
            trial = zeta + lam * delta
            eta = eta_of(trial)
            if 1.0 + float(np.min(eta.samples)) <= 0:
                lam *= config.damping
                continue
            depth_ok = True
            Gt = reduced_residual(trial)
            gt = sobolev_norm(Gt, 0)
            if gt < gnorm:
                zeta, G, gnorm = trial, Gt, gt
                accepted = True
                break
            lam *= config.damping
        steps += 1
        if not depth_ok:
            raise DepthCollapse("no backtracked 1D step keeps 1 + eta positive")
        if not accepted:
            raise MaxItersExceeded("1D backtracking failed to reduce the residual")
        history.append(gnorm)

    if not converged:
        raise MaxItersExceeded(f"no 1D convergence in {config.max_iters} iterations")

    eta = eta_of(zeta)
    v = v_from_eta(eta, params.gamma)
    state = State(v=v, eta=eta)
    F = forcing_poly(eta, forcing_data, params)
    return SolveReport(
        converged=converged,
        iterations=steps,
        residual_history=history,
        final_state=state,
        dissipation_residual=dissipation_identity_residual(state, params, F),
        norm_report=param_norms(state, params, 0),
    )


# ---------------------------------------------------------------------------
# nondimensionalization


def nondimensionalize(
    gravity, depth, drag, viscosity=0.0, surface_tension=0.0, wave_speed=1.0
):
    """Map physical inputs to the dimensionless parameter triple.

    ``L = sqrt(g H) H / a`` and ``T = H / a`` are the characteristic
    length and time for gravity ``g``, equilibrium depth ``H``, and drag
    ``a``; then ``mu^2 = mu_phys a / (g H^2)``,
    ``sigma^2 = sigma_phys a^2 / (g^2 H^3)``, and
    ``gamma = c / sqrt(g H)``.
    """
    if gravity <= 0 or depth <= 0 or drag <= 0:
        raise NonPositivePhysical("gravity, depth, and drag must be positive")
    if viscosity < 0 or surface_tension < 0:
        raise NonPositivePhysical("viscosity and surface tension must be >= 0")
    L = math.sqrt(gravity * depth) * depth / drag
    T = depth / drag
    mu = math.sqrt(viscosity * drag / (gravity * depth**2))
    sigma = math.sqrt(surface_tension * drag**2 / (gravity**2 * depth**3))
    gamma = wave_speed / math.sqrt(gravity * depth)
    return Params(gamma=gamma, mu=mu, sigma=sigma), {"L": L, "T": T}
