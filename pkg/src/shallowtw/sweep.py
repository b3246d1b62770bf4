"""Parameter continuation: warm-started sweeps over (gamma, mu, sigma)."""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import SolverError, SweepStalled
from .model import ForcingData
from .solve import NewtonConfig, newton_solve
from .spectral import SpectralField, aniso_norm, sobolev_norm
from .state import Params, State


def scale_forcing(data, factor):
    """Forcing data with every coefficient field scaled by ``factor``."""
    return ForcingData(
        order=data.order,
        tau=tuple(t * factor for t in data.tau),
        phi=tuple(p * factor for p in data.phi),
    )


def _interpolate(p0, p1, t):
    return Params(
        gamma=(1 - t) * p0.gamma + t * p1.gamma,
        mu=(1 - t) * p0.mu + t * p1.mu,
        sigma=(1 - t) * p0.sigma + t * p1.sigma,
        regime=p1.regime,
    )


def linear_path(start, stop, steps):
    """Inclusive parameter segment from ``start`` to ``stop`` in ``steps`` steps."""
    return [_interpolate(start, stop, k / steps) for k in range(steps + 1)]


@dataclass(frozen=True)
class SweepPlan:
    """A parameter path with fixed forcing data and warm-started solves.

    ``amplitude_ramp`` optionally scales the forcing through a warm-up
    schedule at the first path point; it must end at 1.  With
    ``adaptive`` set, a failed solve retries through bisected parameter
    midpoints, up to 6 halvings.
    """

    path: tuple
    forcing_data: ForcingData
    amplitude_ramp: tuple = ()
    adaptive: bool = True
    max_halvings: int = 6

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(self.path))
        object.__setattr__(self, "amplitude_ramp", tuple(self.amplitude_ramp))
        if not self.path:
            raise ValueError("a sweep needs at least one parameter point")
        if self.amplitude_ramp and self.amplitude_ramp[-1] != 1.0:
            raise ValueError("amplitude_ramp must end at 1")


def grad_norm(f, order=1):
    """L2 norm of the order-th spectral gradient of a field."""
    grid = f.grid
    w = (2 * np.pi * grid.xi_mag) ** (2 * order)
    return math.sqrt(np.sum(w * np.abs(f.spectrum) ** 2))


def limit_norms(state, params):
    """Parameter-weighted derivative norms tracked through vanishing limits."""
    mu, sg = params.mu, params.sigma
    v, eta = state.v, state.eta
    return {
        "mu_grad_v": mu * grad_norm(v, 1),
        "mu2_grad2_v": mu**2 * grad_norm(v, 2),
        "musig_grad_eta": (mu + sg) * grad_norm(eta, 1),
        "sig_grad2_eta": sg * grad_norm(eta, 2),
        "sig2_grad3_eta": sg**2 * grad_norm(eta, 3),
    }


@dataclass
class SweepResult:
    params_path: list
    reports: list
    step_norms: list = field(default_factory=list)
    limit_norms: list = field(default_factory=list)


def _solve_segment(p_from, p_to, state, data, config, halvings_left):
    """Solve at ``p_to`` warm-started from ``state``; bisect on failure."""
    try:
        report = newton_solve(p_to, data, initial=state, config=config)
        return report
    except SolverError:
        if halvings_left <= 0:
            raise SweepStalled(
                f"step-halving budget exhausted between "
                f"({p_from.gamma}, {p_from.mu}, {p_from.sigma}) and "
                f"({p_to.gamma}, {p_to.mu}, {p_to.sigma})"
            )
        mid = _interpolate(p_from, p_to, 0.5)
        mid_report = _solve_segment(p_from, mid, state, data, config, halvings_left - 1)
        return _solve_segment(
            mid, p_to, mid_report.final_state, data, config, halvings_left - 1
        )


def sweep(plan, config=None):
    """Warm-started solves along the plan's parameter path.

    Returns a :class:`SweepResult` with one report per requested path
    point, inter-step difference norms ``(||dv||_H0, ||deta||_aniso0)``,
    and the parameter-weighted limit-tracking norms at every point.
    """
    config = config or NewtonConfig()
    data = plan.forcing_data
    state = None

    for factor in plan.amplitude_ramp[:-1] if plan.amplitude_ramp else ():
        report = newton_solve(
            plan.path[0], scale_forcing(data, factor), initial=state, config=config
        )
        state = report.final_state

    result = SweepResult(params_path=list(plan.path), reports=[])
    prev_state = state
    prev_params = plan.path[0]
    for k, params in enumerate(plan.path):
        if k == 0 or not plan.adaptive:
            report = newton_solve(params, data, initial=prev_state, config=config)
        else:
            report = _solve_segment(
                prev_params, params, prev_state, data, config, plan.max_halvings
            )
        result.reports.append(report)
        result.limit_norms.append(limit_norms(report.final_state, params))
        if k > 0:
            diff = report.final_state - prev_state
            result.step_norms.append(
                {
                    "dv": sobolev_norm(diff.v, 0),
                    "deta": aniso_norm(diff.eta, 0),
                }
            )
        prev_state = report.final_state
        prev_params = params
    return result


def limit_report(result):
    """Tabulate limit-tracking norms and check desk-scale boundedness.

    Each parameter-weighted column must stay within twice its value at
    the path start (a small absolute slack guards exact-zero columns).
    """
    columns = {}
    for row in result.limit_norms:
        for key, val in row.items():
            columns.setdefault(key, []).append(val)
    bounded = {}
    for key, col in columns.items():
        bounded[key] = max(col) <= 2.0 * col[0] + 1e-13
    return {"columns": columns, "bounded": bounded, "ok": all(bounded.values())}
