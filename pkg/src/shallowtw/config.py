"""Strict run-configuration parsing and object builders.

The config format is an INI dialect read by :mod:`configparser`:
sections ``[grid] [params] [forcing] [solver] [sweep] [output]`` with
typed key-value entries.  Unknown sections or keys are rejected, as are
values that fail type conversion; the grammar is documented in the
README.  ``--set section.key=value`` overrides are applied before
validation.
"""

import configparser

import numpy as np

from .errors import ShallowTWError
from .model import ForcingData
from .solve import NewtonConfig
from .spectral import Grid, SpectralField, dealias
from .state import OMNISONIC, SUBSONIC, Params


class ConfigError(ShallowTWError):
    """Invalid run configuration; the message names the offending key."""


_SCHEMA = {
    "grid": {
        "dim": int,
        "extent": "floats",
        "points": "ints",
        "dealias_fraction": float,
    },
    "params": {"gamma": float, "mu": float, "sigma": float, "regime": str},
    "forcing": {
        "mode": str,
        "amplitude": float,
        "width": float,
        "center": "floats_or_auto",
        "target": str,
        "normal_amplitude": float,
        "normal_width": float,
        "bulk_amplitude": float,
        "bulk_width": float,
        "bulk_y_degree": int,
        **{
            f"{kind}{k}_{attr}": float
            for kind in ("phi", "tau")
            for k in range(4)
            for attr in ("amplitude", "width")
        },
        **{f"phi{k}_shape": str for k in range(4)},
    },
    "solver": {
        "max_iters": int,
        "abs_tol": float,
        "rel_tol": float,
        "damping": float,
        "max_halvings": int,
        "krylov_rel_tol": float,
        "krylov_max_iters": int,
        "krylov_restart": int,
        "case_1d": int,
    },
    "sweep": {
        "to_gamma": float,
        "to_mu": float,
        "to_sigma": float,
        "steps": int,
        "adaptive": bool,
        "ramp_steps": int,
    },
    "output": {"directory": str, "formats": "strs", "boundary_tol": float},
}

_REQUIRED = {"grid": ("extent", "points"), "params": ("gamma",)}


def _convert(section, key, raw):
    kind = _SCHEMA[section][key]
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is bool:
            low = raw.strip().lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if kind is str:
            return raw.strip()
        if kind == "floats":
            return tuple(float(tok) for tok in raw.split())
        if kind == "ints":
            return tuple(int(tok) for tok in raw.split())
        if kind == "strs":
            return tuple(raw.split())
        if kind == "floats_or_auto":
            if raw.strip() == "auto":
                return "auto"
            return tuple(float(tok) for tok in raw.split())
    except ValueError:
        raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from None
    raise AssertionError(kind)


def parse_config(path, overrides=()):
    """Parse and validate a config file into a nested dict."""
    cp = configparser.ConfigParser(interpolation=None)
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    data = {sec: dict(cp.items(sec)) for sec in cp.sections()}
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r} is not of the form section.key=value")
        dotted, value = ov.split("=", 1)
        if "." not in dotted:
            raise ConfigError(f"override key {dotted!r} needs a section prefix")
        sec, key = dotted.split(".", 1)
        data.setdefault(sec, {})[key] = value

    out = {}
    for sec, entries in data.items():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown config section [{sec}]")
        out[sec] = {}
        for key, raw in entries.items():
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown config key {sec}.{key}")
            out[sec][key] = _convert(sec, key, raw)
    for sec, keys in _REQUIRED.items():
        if sec not in out:
            raise ConfigError(f"missing config section [{sec}]")
        for key in keys:
            if key not in out[sec]:
                raise ConfigError(f"missing config key {sec}.{key}")
    return out


def build_grid(cfg):
    gsec = cfg["grid"]
    extent = gsec["extent"]
    points = gsec["points"]
    dim = gsec.get("dim", max(len(extent), len(points)))
    if len(extent) == 1:
        extent = extent * dim
    if len(points) == 1:
        points = points * dim
    if len(extent) != dim or len(points) != dim:
        raise ConfigError("grid.extent and grid.points must match grid.dim")
    try:
        return Grid(
            extent=extent,
            points=points,
            dealias_fraction=gsec.get("dealias_fraction", 2.0 / 3.0),
        )
    except (ValueError, ShallowTWError) as exc:
        raise ConfigError(f"bad grid: {exc}") from None


def build_params(cfg):
    psec = cfg["params"]
    regime = psec.get("regime", OMNISONIC)
    if regime not in (OMNISONIC, SUBSONIC):
        raise ConfigError(f"bad value for params.regime: {regime!r}")
    try:
        return Params(
            gamma=psec["gamma"],
            mu=psec.get("mu", 0.0),
            sigma=psec.get("sigma", 0.0),
            regime=regime,
        )
    except (ValueError, ShallowTWError) as exc:
        raise ConfigError(f"bad params: {exc}") from None


def build_newton_config(cfg):
    ssec = dict(cfg.get("solver", {}))
    ssec.pop("case_1d", None)
    try:
        return NewtonConfig(**ssec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad solver section: {exc}") from None


def gaussian_samples(grid, amplitude, width, center=None):
    """Isotropic Gaussian bump samples on the grid."""
    if width <= 0:
        raise ConfigError("gaussian width must be positive")
    if center is None or center == "auto":
        center = [L / 2 for L in grid.extent]
    x = grid.coords
    r2 = sum((x[j] - center[j]) ** 2 for j in range(grid.dim))
    return amplitude * np.exp(-r2 / (2 * width**2))


def _dgaussian_samples(grid, amplitude, width, center=None):
    """Mean-free bump: first derivative of a Gaussian along axis 1."""
    if center is None or center == "auto":
        center = [L / 2 for L in grid.extent]
    g = gaussian_samples(grid, amplitude, width, center)
    return (grid.coords[0] - center[0]) / width * g


def _isotropic_tau(grid, coeff_samples, params):
    """Forcing data whose effective gradient coefficient is ``coeff I``.

    Inverts the omnisonic reinterpretation for isotropic matrices:
    the data ``(c / (d + mu + sigma)) I`` produces the physical
    ``c I`` there, while the subsonic regime uses ``c I`` directly.
    """
    d = grid.dim
    if params.regime == OMNISONIC:
        coeff_samples = coeff_samples / (d + params.mu + params.sigma)
    out = np.zeros((d * d,) + grid.points)
    for a in range(d):
        out[a * d + a] = coeff_samples
    return SpectralField(grid, samples=out)


def _grad_field(grid, scalar_samples):
    spec = grid.fft(scalar_samples)
    out = grid.ifft(2j * np.pi * grid.xi * spec)
    return out


def build_forcing(cfg, grid, params):
    """Construct polynomial forcing data from the ``[forcing]`` section.

    ``gaussian_preset`` places a Gaussian either in the normal component
    of the applied sheet stress (``target = sheet_normal``) or in the
    bulk force (``target = bulk``); ``stress`` combines a Gaussian sheet
    normal stress with a y-polynomial Gaussian bulk force; both reduce
    exactly to polynomial coefficients.  ``poly`` specifies raw
    coefficient bumps directly.
    """
    fsec = cfg.get("forcing", {"mode": "gaussian_preset"})
    mode = fsec.get("mode", "gaussian_preset")
    d = grid.dim
    zero_tau = SpectralField.zeros(grid, d * d)
    zero_phi = SpectralField.zeros(grid, d)

    def vec_along_e1(samples):
        out = np.zeros((d,) + grid.points)
        out[0] = samples
        return SpectralField(grid, samples=out)

    def vec(samples_stack):
        return SpectralField(grid, samples=samples_stack)

    if mode == "gaussian_preset":
        amp = fsec.get("amplitude", 0.05)
        width = fsec.get("width", 0.5)
        center = fsec.get("center", "auto")
        target = fsec.get("target", "sheet_normal")
        G = gaussian_samples(grid, amp, width, center)
        if target == "bulk":
            return ForcingData(order=0, tau=(zero_tau,), phi=(vec_along_e1(G),))
        if target != "sheet_normal":
            raise ConfigError(f"bad value for forcing.target: {target!r}")
        gradG = _grad_field(grid, G)
        tau0 = _isotropic_tau(grid, -G, params)
        phi0 = vec(-gradG)
        phi1 = vec(-gradG)
        return ForcingData(
            order=1, tau=(tau0, zero_tau), phi=(phi0, phi1)
        )

    if mode == "stress":
        taus = {0: np.zeros((d * d,) + grid.points)}
        phis = {}

        def add_phi(k, stack):
            phis[k] = phis.get(k, np.zeros((d,) + grid.points)) + stack

        order = 1
        namp = fsec.get("normal_amplitude", 0.0)
        if namp:
            G = gaussian_samples(grid, namp, fsec.get("normal_width", 0.5))
            gradG = _grad_field(grid, G)
            coeff = -G
            if params.regime == OMNISONIC:
                coeff = coeff / (d + params.mu + params.sigma)
            for a in range(d):
                taus[0][a * d + a] += coeff
            add_phi(0, -gradG)
            add_phi(1, -gradG)
        bamp = fsec.get("bulk_amplitude", 0.0)
        if bamp:
            m = fsec.get("bulk_y_degree", 0)
            G = gaussian_samples(grid, bamp, fsec.get("bulk_width", 0.5))
            # int_0^(1+eta) G y^m dy = G (1+eta)^(m+1) / (m+1)
            from math import comb

            for j in range(m + 2):
                stack = np.zeros((d,) + grid.points)
                stack[0] = G * comb(m + 1, j) / (m + 1)
                add_phi(j, stack)
            order = max(order, m + 1)
        data_tau = []
        data_phi = []
        for k in range(order + 1):
            data_tau.append(
                SpectralField(grid, samples=taus[k]) if k in taus else zero_tau
            )
            data_phi.append(
                SpectralField(grid, samples=phis[k]) if k in phis else zero_phi
            )
        return ForcingData(order=order, tau=tuple(data_tau), phi=tuple(data_phi))

    if mode == "poly":
        order = 0
        for k in range(4):
            if any(
                f"{kind}{k}_amplitude" in fsec and fsec[f"{kind}{k}_amplitude"]
                for kind in ("phi", "tau")
            ):
                order = max(order, k)
        tau = []
        phi = []
        for k in range(order + 1):
            t_amp = fsec.get(f"tau{k}_amplitude", 0.0)
            if t_amp:
                G = gaussian_samples(grid, t_amp, fsec.get(f"tau{k}_width", 0.5))
                out = np.zeros((d * d,) + grid.points)
                for a in range(d):
                    out[a * d + a] = G
                tau.append(SpectralField(grid, samples=out))
            else:
                tau.append(zero_tau)
            p_amp = fsec.get(f"phi{k}_amplitude", 0.0)
            if p_amp:
                shape = fsec.get(f"phi{k}_shape", "gaussian")
                w = fsec.get(f"phi{k}_width", 0.5)
                if shape == "gaussian":
                    G = gaussian_samples(grid, p_amp, w)
                elif shape == "dgaussian":
                    G = _dgaussian_samples(grid, p_amp, w)
                else:
                    raise ConfigError(f"bad value for forcing.phi{k}_shape: {shape!r}")
                phi.append(vec_along_e1(G))
            else:
                phi.append(zero_phi)
        return ForcingData(order=order, tau=tuple(tau), phi=tuple(phi))

    raise ConfigError(f"bad value for forcing.mode: {mode!r}")


def build_sweep_targets(cfg, params):
    """Target parameter point and step count from the ``[sweep]`` section."""
    if "sweep" not in cfg:
        return None
    ssec = cfg["sweep"]
    target = Params(
        gamma=ssec.get("to_gamma", params.gamma),
        mu=ssec.get("to_mu", params.mu),
        sigma=ssec.get("to_sigma", params.sigma),
        regime=params.regime,
    )
    return {
        "target": target,
        "steps": ssec.get("steps", 8),
        "adaptive": ssec.get("adaptive", True),
        "ramp_steps": ssec.get("ramp_steps", 0),
    }
