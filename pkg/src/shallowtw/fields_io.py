"""Field dumps, run manifests, and CSV export.

A dump directory holds one little-endian float64 row-major binary file
per field component plus ``manifest.json`` describing the grid, the
parameter record, the component files, and a git-describe string of the
source tree that produced the run.
"""

import csv
import json
import os
import subprocess

import numpy as np

from .model import ForcingData
from .spectral import Grid, SpectralField
from .state import Params, State

_COMPONENT_AXES = "xyz"


def git_describe():
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=10,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _write_component(path, arr):
    np.asarray(arr, dtype="<f8").tofile(path)


def _read_component(path, shape):
    return np.fromfile(path, dtype="<f8").reshape(shape)


def _state_components(grid):
    names = [f"v_{_COMPONENT_AXES[i]}" for i in range(grid.dim)]
    names.append("eta")
    return names


def dump_state(directory, state, params, report=None, forcing_data=None, extra=None):
    """Write a state (and optionally its forcing data) plus manifest."""
    os.makedirs(directory, exist_ok=True)
    grid = state.grid
    components = {}
    for i, name in enumerate(_state_components(grid)):
        fname = f"{name}.f64"
        arr = state.v.samples[i] if i < grid.dim else state.eta.samples[0]
        _write_component(os.path.join(directory, fname), arr)
        components[name] = fname

    forcing_files = None
    if forcing_data is not None:
        forcing_files = {"order": forcing_data.order, "tau": [], "phi": []}
        for i in range(forcing_data.order + 1):
            tname, pname = f"tau_{i}.f64", f"phi_{i}.f64"
            _write_component(
                os.path.join(directory, tname), forcing_data.tau[i].samples
            )
            _write_component(
                os.path.join(directory, pname), forcing_data.phi[i].samples
            )
            forcing_files["tau"].append(tname)
            forcing_files["phi"].append(pname)

    manifest = {
        "format": "shallowtw-dump-1",
        "grid": {
            "dim": grid.dim,
            "extent": list(grid.extent),
            "points": list(grid.points),
            "dealias_fraction": grid.dealias_fraction,
        },
        "params": {
            "gamma": params.gamma,
            "mu": params.mu,
            "sigma": params.sigma,
            "regime": params.regime,
        },
        "components": components,
        "forcing": forcing_files,
        "git_describe": git_describe(),
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_manifest(directory):
    with open(os.path.join(directory, "manifest.json")) as fh:
        return json.load(fh)


def load_state(directory):
    """Rebuild (state, params, manifest) from a dump directory."""
    manifest = load_manifest(directory)
    gsec = manifest["grid"]
    grid = Grid(
        extent=tuple(gsec["extent"]),
        points=tuple(gsec["points"]),
        dealias_fraction=gsec["dealias_fraction"],
    )
    psec = manifest["params"]
    params = Params(
        gamma=psec["gamma"],
        mu=psec["mu"],
        sigma=psec["sigma"],
        regime=psec["regime"],
    )
    shape = grid.points
    names = _state_components(grid)
    v = np.stack(
        [
            _read_component(
                os.path.join(directory, manifest["components"][n]), shape
            )
            for n in names[: grid.dim]
        ]
    )
    eta = _read_component(os.path.join(directory, manifest["components"]["eta"]), shape)
    state = State(
        v=SpectralField(grid, samples=v),
        eta=SpectralField(grid, samples=eta[np.newaxis]),
    )
    return state, params, manifest


def load_forcing(directory, manifest=None):
    manifest = manifest or load_manifest(directory)
    spec = manifest.get("forcing")
    if spec is None:
        return None
    gsec = manifest["grid"]
    grid = Grid(
        extent=tuple(gsec["extent"]),
        points=tuple(gsec["points"]),
        dealias_fraction=gsec["dealias_fraction"],
    )
    d = grid.dim
    tau = []
    phi = []
    for i in range(spec["order"] + 1):
        t = _read_component(
            os.path.join(directory, spec["tau"][i]), (d * d,) + grid.points
        )
        p = _read_component(
            os.path.join(directory, spec["phi"][i]), (d,) + grid.points
        )
        tau.append(SpectralField(grid, samples=t))
        phi.append(SpectralField(grid, samples=p))
    return ForcingData(order=spec["order"], tau=tuple(tau), phi=tuple(phi))


def write_report_json(directory, report, extra=None):
    data = {
        "converged": report.converged,
        "iterations": report.iterations,
        "residual_history": report.residual_history,
        "dissipation_residual": report.dissipation_residual,
        "norm_report": report.norm_report,
        "krylov_iters": getattr(report, "krylov_iters", []),
    }
    if extra:
        data.update(extra)
    path = os.path.join(directory, "report.json")
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_surface_csv(directory, state, name="eta.csv"):
    """CSV of the surface over the grid: (x, eta) in 1D, (x1, x2, eta) in 2D."""
    grid = state.grid
    path = os.path.join(directory, name)
    eta = state.eta.samples[0]
    coords = grid.coords
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if grid.dim == 1:
            writer.writerow(["x", "eta"])
            for i in range(grid.points[0]):
                writer.writerow([f"{coords[0][i]:.17g}", f"{eta[i]:.17g}"])
        elif grid.dim == 2:
            writer.writerow(["x1", "x2", "eta"])
            for i in range(grid.points[0]):
                for j in range(grid.points[1]):
                    writer.writerow(
                        [
                            f"{coords[0][i, j]:.17g}",
                            f"{coords[1][i, j]:.17g}",
                            f"{eta[i, j]:.17g}",
                        ]
                    )
        else:
            raise ValueError("CSV export supports 1D and 2D grids")
    return path


def write_slice_csv(directory, field, axis=0, name="slice.csv"):
    """CSV of a 1D slice of a field through the box center."""
    grid = field.grid
    path = os.path.join(directory, name)
    idx = [N // 2 for N in grid.points]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x"] + [f"c{i}" for i in range(field.components)])
        for i in range(grid.points[axis]):
            sel = list(idx)
            sel[axis] = i
            x = grid.coords[(axis,) + tuple(sel)]
            row = [f"{x:.17g}"] + [
                f"{field.samples[(c,) + tuple(sel)]:.17g}"
                for c in range(field.components)
            ]
            writer.writerow(row)
    return path
