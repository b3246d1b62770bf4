"""Closed-form multiplier symbols of the zero-state linearization.

All functions here are pure frequency-space arithmetic, decoupled from
any grid, so the same code serves ellipticity classification, solver
preconditioning, and the property tests on symbol inequalities.
Frequencies are in cycles per unit length and a derivative ``d_j``
carries the factor ``2*pi*1j*xi_j``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidCase, ZeroFrequency


def _as_freq(xi, dim):
    """Coerce ``xi`` to an array of shape ``(dim, ...)``."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        xi = xi[np.newaxis]
    if xi.shape[0] != dim:
        raise ValueError(f"expected leading dimension {dim}, got {xi.shape}")
    return xi


def det_symbol(xi, params, dim):
    """Determinant symbol of the (d+1)x(d+1) zero-state linearization.

    Evaluates
    ``(1 - 2*pi*i*gamma*xi1 + 4*pi^2*mu^2*|xi|^2)^(dim-1)
    * (-4*pi^2*gamma^2*xi1^2 + 4*pi^2*|xi|^2 + 16*pi^4*sigma^2*|xi|^4
    - 2*pi*i*gamma*xi1*(1 + 16*pi^2*mu^2*|xi|^2))``.
    """
    xi = _as_freq(xi, dim)
    g, mu, sg = params.gamma, params.mu, params.sigma
    mag2 = np.sum(xi**2, axis=0)
    i_xi1 = 2j * np.pi * xi[0]
    first = 1.0 - g * i_xi1 + 4 * np.pi**2 * mu**2 * mag2
    second = (
        g**2 * i_xi1**2
        + 4 * np.pi**2 * mag2
        + 16 * np.pi**4 * sg**2 * mag2**2
        - g * i_xi1 * (1.0 + 16 * np.pi**2 * mu**2 * mag2)
    )
    return first ** (dim - 1) * second


def det_lower_bound(xi, params, dim):
    """First-order elliptic lower bound ``pi|xi|^2 <2 pi gamma xi1>^-1 + 2 pi gamma |xi1|``."""
    xi = _as_freq(xi, dim)
    g = params.gamma
    mag2 = np.sum(xi**2, axis=0)
    u = 2 * np.pi * g * xi[0]
    return np.pi * mag2 / np.sqrt(1.0 + u**2) + np.abs(u)


def matrix_symbol(xi, params, dim):
    """Full (d+1)x(d+1) matrix symbol mapping ``(v, eta) -> (f, h)``.

    Row/column order is the d velocity components followed by the
    surface component.  Shape ``(..., d+1, d+1)`` for ``xi`` of shape
    ``(dim, ...)``.
    """
    xi = _as_freq(xi, dim)
    g, mu, sg = params.gamma, params.mu, params.sigma
    mag2 = np.sum(xi**2, axis=0)
    i_xi = 2j * np.pi * xi
    out = np.zeros(mag2.shape + (dim + 1, dim + 1), dtype=complex)
    diag = 1.0 - g * i_xi[0] + 4 * np.pi**2 * mu**2 * mag2
    for a in range(dim):
        out[..., a, a] = diag
        for b in range(dim):
            out[..., a, b] += 12 * np.pi**2 * mu**2 * xi[a] * xi[b]
        out[..., a, dim] = (1.0 + 4 * np.pi**2 * sg**2 * mag2) * i_xi[a]
        out[..., dim, a] = i_xi[a]
    out[..., dim, dim] = -g * i_xi[0]
    return out


@dataclass(frozen=True)
class SymbolReport:
    """Volevic orders, principal part, and the ellipticity verdict."""

    params: object
    dim: int
    R_order: int
    r_order: int
    principal_part: str
    elliptic: bool


def adn_classify(params, dim):
    """Classify the zero-state linearization by the Volevic criterion.

    Reproduces, case by case in the signs of (mu, sigma) and the d = 1
    wave-speed subcases, the orders R and r, the principal part of the
    determinant, and the ellipticity verdict.
    """
    g, mu, sg = params.gamma, params.mu, params.sigma
    d = dim
    if mu > 0 and sg > 0:
        R = r = 2 * d + 2
        principal = "sigma^2*Lap^2*(-mu^2*Lap)^(d-1)"
        elliptic = True
    elif mu > 0 and sg == 0:
        R = r = 2 * d + 1
        principal = "-4*gamma*d1*(-mu^2*Lap)^d"
        elliptic = d == 1
    elif mu == 0 and sg > 0:
        R = r = d + 3
        principal = "(-gamma*d1)^(d-1)*sigma^2*Lap^2"
        elliptic = d == 1
    else:
        R = d + 1
        if d >= 2:
            r = d + 1
            principal = "(-gamma*d1)^(d-1)*(gamma^2*d1^2-Lap)"
            elliptic = False
        elif g != 1:
            r = 2
            principal = "(gamma^2-1)*d1^2"
            elliptic = True
        else:
            r = 1
            principal = "-d1"
            elliptic = False
    return SymbolReport(
        params=params,
        dim=d,
        R_order=R,
        r_order=r,
        principal_part=principal,
        elliptic=elliptic,
    )


def principal_symbol(xi, params, dim):
    """Principal part of the determinant symbol, per the classification."""
    xi = _as_freq(xi, dim)
    g, mu, sg = params.gamma, params.mu, params.sigma
    d = dim
    mag2 = np.sum(xi**2, axis=0)
    i_xi1 = 2j * np.pi * xi[0]
    lap = -4 * np.pi**2 * mag2
    if mu > 0 and sg > 0:
        return sg**2 * lap**2 * (-(mu**2) * lap) ** (d - 1)
    if mu > 0 and sg == 0:
        return -4 * g * i_xi1 * (-(mu**2) * lap) ** d
    if mu == 0 and sg > 0:
        return (-g * i_xi1) ** (d - 1) * sg**2 * lap**2
    if d >= 2:
        return (-g * i_xi1) ** (d - 1) * (g**2 * i_xi1**2 - lap)
    if g != 1:
        return (g**2 - 1.0) * i_xi1**2
    return -i_xi1


@dataclass(frozen=True)
class DispersionSample:
    xi: object
    omega: float
    phase_speed: float
    group_speed: float


def dispersion(xi, sigma):
    """Evaluate ``omega^2 = |xi|^2 (1 + 4 pi^2 sigma^2 |xi|^2)``.

    Phase speed is ``omega/|xi|`` (0 at xi = 0 by convention) and group
    speed is ``d omega / d |xi|``.
    """
    xi = np.asarray(xi, dtype=float)
    r = float(np.sqrt(np.sum(xi**2)))
    root = np.sqrt(1.0 + 4 * np.pi**2 * sigma**2 * r**2)
    omega = r * root
    phase = root if r > 0 else 0.0
    group = (1.0 + 8 * np.pi**2 * sigma**2 * r**2) / root
    return DispersionSample(
        xi=xi, omega=float(omega), phase_speed=float(phase), group_speed=float(group)
    )


def surface_symbol(xi, params, dim=None):
    """Scalar symbol solving the decoupled linear free-surface equation.

    ``chi(xi) = i gamma (1 + 16 pi^2 mu^2 |xi|^2) xi1/|xi|
    - 2 pi (1 - gamma^2 xi1^2/|xi|^2 + 4 pi^2 sigma^2 |xi|^2) |xi|``;
    undefined at xi = 0.
    """
    if dim is None:
        xi_arr = np.asarray(xi, dtype=float)
        dim = 1 if xi_arr.ndim == 0 else xi_arr.shape[0]
    xi = _as_freq(xi, dim)
    g, mu, sg = params.gamma, params.mu, params.sigma
    mag = np.sqrt(np.sum(xi**2, axis=0))
    if np.any(mag == 0):
        raise ZeroFrequency("surface symbol is undefined at xi = 0")
    cos2 = (xi[0] / mag) ** 2
    real = -2 * np.pi * (1.0 - g**2 * cos2 + 4 * np.pi**2 * sg**2 * mag**2) * mag
    imag = g * (1.0 + 16 * np.pi**2 * mu**2 * mag**2) * xi[0] / mag
    return real + 1j * imag


def surface_symbol_bound_gap(xi, params, dim):
    """Slack of the proof inequality bounding ``|chi|`` from below.

    Returns ``(2 + 2 pi gamma |xi1| / (1+16 pi^2 mu^2 |xi|^2)) |chi|``
    minus ``gamma (1+16 pi^2 mu^2 |xi|^2) |xi1|/|xi| +
    2 pi (1+4 pi^2 sigma^2 |xi|^2) |xi|``; nonnegative when the
    inequality holds.
    """
    xi = _as_freq(xi, dim)
    g, mu, sg = params.gamma, params.mu, params.sigma
    mag = np.sqrt(np.sum(xi**2, axis=0))
    chi = surface_symbol(xi, params, dim)
    visc = 1.0 + 16 * np.pi**2 * mu**2 * mag**2
    lhs = g * visc * np.abs(xi[0]) / mag + 2 * np.pi * (
        1.0 + 4 * np.pi**2 * sg**2 * mag**2
    ) * mag
    rhs = (2.0 + 2 * np.pi * g * np.abs(xi[0]) / visc) * np.abs(chi)
    return rhs - lhs


def reduced_symbol_1d(xi, params):
    """Symbol of the linearized one-dimensional reduced surface equation.

    ``m(xi) = gamma (1 + 16 pi^2 mu^2 xi^2)
    + 2 pi i xi ((1 - gamma^2) + 4 pi^2 sigma^2 xi^2)``.
    """
    xi = np.asarray(xi, dtype=float)
    g, mu, sg = params.gamma, params.mu, params.sigma
    real = g * (1.0 + 16 * np.pi**2 * mu**2 * xi**2)
    imag = 2 * np.pi * xi * ((1.0 - g**2) + 4 * np.pi**2 * sg**2 * xi**2)
    return real + 1j * imag


def region_of(params):
    """Admissible reparameterization cases for a 1D parameter tuple.

    Region 1 is subsonic (gamma < 1); regions 2 and 3 are supersonic
    with, respectively, vanishing surface tension and nonvanishing
    combined dissipation.  The sonic speed gamma = 1 belongs to none.
    """
    g, mu, sg = params.gamma, params.mu, params.sigma
    cases = set()
    if g < 1:
        cases.add(1)
    if g > 1 and sg == 0:
        cases.add(2)
    if g > 1 and abs(mu) + abs(sg) > 0:
        cases.add(3)
    return cases


def repar_symbol_1d(case, xi, params):
    """Reparameterization weight ``p^case`` for the 1D reduced equation.

    With ``<x> = sqrt(1 + x^2)``:

    * case 1: ``<mu xi>^2 + <xi> <sigma xi>^2``
    * case 2: ``<mu xi>^2 + <xi>``
    * case 3: ``<mu xi>^2 + (<sigma xi> + <mu xi>) <sigma xi>^2``

    Raises :class:`InvalidCase` when the parameter tuple lies outside
    the region on which the case is used for solving.
    """
    if case not in region_of(params):
        raise InvalidCase(
            f"case {case} is not admissible for "
            f"(gamma, mu, sigma) = ({params.gamma}, {params.mu}, {params.sigma})"
        )
    xi = np.asarray(xi, dtype=float)
    mu, sg = params.mu, params.sigma
    bmu = np.sqrt(1.0 + mu**2 * xi**2)
    bsg = np.sqrt(1.0 + sg**2 * xi**2)
    bxi = np.sqrt(1.0 + xi**2)
    if case == 1:
        return bmu**2 + bxi * bsg**2
    if case == 2:
        return bmu**2 + bxi
    return bmu**2 + (bsg + bmu) * bsg**2
