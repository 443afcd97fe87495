"""Result bundles on disk and plot-ready figure columns.

A bundle directory holds ``config.yaml``, ``manifest.json`` and one
subdirectory per phase with eigen tables, ``spectrum.csv``,
``squeezing.csv`` and ``summary.json``. Everything except the manifest
(which records wall time) is byte-identical across repeated runs.
"""

from __future__ import annotations

import csv
import json
import platform
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, dump_config, load_config
from .correlations import CurrentError, write_current_record
from .pipeline import PhaseResult, run_phase
from .propagator import PropagationError
from .quantum_optics import SqueezingError
from .spectral import SpectralError, write_eigen_tables

INVARIANT_ERRORS = (PropagationError, CurrentError, SqueezingError, SpectralError)

LONG, SHORT = 50, 12
FIGURE_TAGS = ("fig1", "fig1b", "fig1c", "fig1d", "fig1e", "fig2a", "fig2b", "fig2c")


class BundleError(RuntimeError):
    """Missing or inconsistent bundle inputs."""


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_phase(result: PhaseResult, directory: Path, config: RunConfig):
    directory.mkdir(parents=True, exist_ok=True)
    write_eigen_tables(result.decomp, directory)
    spec = result.spectrum
    _write_csv(
        directory / "spectrum.csv",
        ["harmonic_order", "omega", "intensity"],
        [[_fmt(q), _fmt(w), _fmt(i)] for q, w, i in zip(spec.harmonic_order, spec.omega, spec.intensity)],
    )
    if result.squeezing is not None:
        full = result.squeezing.with_edges
        bulk = result.squeezing.without_edges
        header = ["harmonic_order", "omega", "eta_db", "theta_star", "min_variance", "min_variance_excess"]
        cols = [full.omega / config.drive.omega_l, full.omega, full.eta_db, full.theta_star,
                full.min_variance, full.min_variance_excess]
        if config.edge_exclusion:
            header += ["eta_db_no_edge", "theta_star_no_edge", "min_variance_excess_no_edge", "delta_eta_db"]
            cols += [bulk.eta_db, bulk.theta_star, bulk.min_variance_excess, result.squeezing.delta_eta]
        _write_csv(directory / "squeezing.csv", header, [[_fmt(v) for v in row] for row in zip(*cols)])
    if config.dump_currents:
        write_current_record(result.record, directory / "currents.npz")

    decomp = result.decomp
    gap = decomp.bulk_gap()
    summary = {
        "n_cells": result.chain.n_cells,
        "a": result.chain.a,
        "delta": result.chain.delta,
        "phase": result.chain.phase,
        "bulk_gap": float(gap),
        "gap_harmonic_order": float(gap / config.drive.omega_l),
        "edge_indices": list(decomp.edge_indices),
        "edge_energies": [float(decomp.energies[m]) for m in decomp.edge_indices],
        "occupied": list(decomp.occupied),
        "n_steps": int(result.record.n_times - 1),
        "t_final": result.record.t_final,
        "max_abs_current": float(np.max(np.abs(result.record.j_exp))),
    }
    if result.squeezing is not None:
        summary["max_abs_delta_eta_db"] = float(np.max(np.abs(result.squeezing.delta_eta)))
    _write_json(directory / "summary.json", summary)


@dataclass
class RunOutcome:
    directory: Path
    status: str
    results: dict


def run(config: RunConfig, output_dir=None, retain: bool = False, log=None) -> RunOutcome:
    """Run every phase of ``config`` and write the bundle.

    An invariant violation stops the run; phases finished before it stay on
    disk and the manifest status is ``"invariant_violation"``.
    """
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(dump_config(config))
    manifest = {
        "config_sha256": config.digest(),
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "phases": {},
        "status": "running",
    }
    results = {}
    started = time.perf_counter()
    status = "ok"
    for phase in config.phases:
        chain = config.chain_for(phase)
        if log:
            log(f"[{phase}] n_cells={chain.n_cells} delta={chain.delta}")
        try:
            res = run_phase(
                chain, config.drive,
                eta_omega=config.eta_grid.omega(config.drive.omega_l),
                spectrum_omega=config.spectrum_grid.omega(config.drive.omega_l),
                krylov_dim=config.krylov_dim, window=config.window, g0=config.g0,
                n_emitters=config.n_emitters, edge_occupation=config.edge_occupation,
                retain=retain or config.dump_currents,
            )
        except INVARIANT_ERRORS as exc:
            manifest["phases"][phase] = {"status": "invariant_violation", "error": str(exc)}
            status = "invariant_violation"
            if log:
                log(f"[{phase}] invariant violation: {exc}")
            break
        write_phase(res, out / phase, config)
        results[phase] = res
        manifest["phases"][phase] = {"status": "ok", "wall_time_s": round(res.wall_time, 3)}
        if log:
            log(f"[{phase}] done in {res.wall_time:.1f} s")
    manifest["status"] = status
    manifest["partial"] = status != "ok"
    manifest["wall_time_s"] = round(time.perf_counter() - started, 3)
    _write_json(out / "manifest.json", manifest)
    return RunOutcome(out, status, results)


# ---------------------------------------------------------------- figures


def _read_csv(path: Path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float) if body else np.zeros((0, len(header)))
    return {name: data[:, i] for i, name in enumerate(header)}


def index_bundles(bundles) -> dict:
    """Map ``(n_cells, phase)`` to phase directories over completed phases."""
    found = {}
    for b in bundles:
        b = Path(b)
        try:
            config = load_config(b / "config.yaml")
            manifest = json.loads((b / "manifest.json").read_text())
        except (OSError, ValueError) as exc:
            raise BundleError(f"{b} is not a run bundle: {exc}") from exc
        for phase, info in manifest.get("phases", {}).items():
            if info.get("status") == "ok":
                found.setdefault((config.chain.n_cells, phase), (b / phase, config))
    return found


def _requirements(tag: str):
    n = {"fig1b": LONG, "fig1c": SHORT, "fig1d": LONG, "fig1e": SHORT, "fig2b": LONG, "fig2c": SHORT}
    if tag in ("fig1b", "fig1c", "fig2b", "fig2c"):
        return [(n[tag], "trivial"), (n[tag], "topological")]
    if tag in ("fig1d", "fig1e"):
        return [(n[tag], "topological")]
    if tag == "fig2a":
        return [(LONG, "trivial"), (LONG, "topological"), (SHORT, "trivial"), (SHORT, "topological")]
    return []


def _preset_hint(key):
    n_cells, phase = key
    name = "long-chain" if n_cells == LONG else "short-chain"
    return f"n_cells={n_cells} {phase} (e.g. preset {name}-{phase})"


def _need(found, keys):
    missing = [k for k in keys if k not in found]
    if missing:
        raise BundleError("missing runs for this figure: " + "; ".join(_preset_hint(k) for k in missing))
    return [found[k] for k in keys]


def _densities(phase_dir: Path):
    vals = _read_csv(phase_dir / "eigenvalues.csv")
    vecs = _read_csv(phase_dir / "eigenvectors.csv")
    occupied = np.flatnonzero(vals["occupied"] > 0)
    edge = vals["edge"] > 0
    bulk_occ = [m for m in occupied if not edge[m]]
    edge_occ = [m for m in occupied if edge[m]]
    if not edge_occ:
        raise BundleError(f"{phase_dir} has no occupied edge state; fig1 densities need a topological run")
    ground = int(np.argmin(vals["energy"]))
    top_bulk = max(bulk_occ, key=lambda m: vals["energy"][m])
    cols = {"site": vecs["site"], "x": vecs["x"]}
    for name, m in (("density_ground", ground), ("density_top_bulk", top_bulk), ("density_edge", edge_occ[0])):
        cols[name] = vecs[f"psi_{m}"] ** 2
    return cols


def _energies(found, n_cells):
    (triv, _), (topo, _) = _need(found, [(n_cells, "trivial"), (n_cells, "topological")])
    a = _read_csv(triv / "eigenvalues.csv")
    b = _read_csv(topo / "eigenvalues.csv")
    return {"index": a["index"], "energy_trivial": a["energy"], "energy_topological": b["energy"]}


def _same_grid(arrays, what):
    ref = arrays[0]
    for other in arrays[1:]:
        if other.shape != ref.shape or not np.array_equal(other, ref):
            raise BundleError(f"{what} grids differ between runs; rerun with a common grid")
    return ref


def _squeezing_columns(found, n_cells):
    (triv, _), (topo, cfg) = _need(found, [(n_cells, "trivial"), (n_cells, "topological")])
    a = _read_csv(triv / "squeezing.csv") if (triv / "squeezing.csv").exists() else None
    b = _read_csv(topo / "squeezing.csv") if (topo / "squeezing.csv").exists() else None
    if a is None or b is None or "eta_db_no_edge" not in b:
        raise BundleError(f"n_cells={n_cells} runs lack squeezing with edge exclusion; rerun with edge_exclusion: true")
    order = _same_grid([a["harmonic_order"], b["harmonic_order"]], "squeezing")
    return {
        "harmonic_order": order,
        "eta_trivial": a["eta_db"],
        "eta_topological": b["eta_db"],
        "eta_topological_no_edge": b["eta_db_no_edge"],
    }


def figure_columns(tag: str, bundles) -> dict:
    """Plot-ready columns for one figure panel."""
    if tag not in FIGURE_TAGS:
        raise BundleError(f"unknown figure tag {tag!r}; valid tags: {', '.join(FIGURE_TAGS)}")
    found = index_bundles(bundles)
    if tag == "fig1":
        topo = sorted((k for k in found if k[1] == "topological"), key=lambda k: -k[0])
        if not topo:
            raise BundleError("missing runs for this figure: any topological run "
                              f"(e.g. {_preset_hint((LONG, 'topological'))})")
        phase_dir = found[topo[0]][0]
        vals = _read_csv(phase_dir / "eigenvalues.csv")
        cols = _densities(phase_dir)
        return {"energies": {"index": vals["index"], "energy": vals["energy"]}, "densities": cols}
    if tag in ("fig1b", "fig1c"):
        return {"energies": _energies(found, LONG if tag == "fig1b" else SHORT)}
    if tag in ("fig1d", "fig1e"):
        ((phase_dir, _),) = _need(found, _requirements(tag))
        return {"densities": _densities(phase_dir)}
    if tag == "fig2a":
        dirs = _need(found, _requirements(tag))
        spectra = [_read_csv(d / "spectrum.csv") for d, _ in dirs]
        order = _same_grid([s["harmonic_order"] for s in spectra], "spectrum")
        names = ["long_trivial", "long_topological", "short_trivial", "short_topological"]
        cols = {"harmonic_order": order}
        cols.update({n: s["intensity"] for n, s in zip(names, spectra)})
        return {"spectra": cols}
    return {"squeezing": _squeezing_columns(found, LONG if tag == "fig2b" else SHORT)}


def emit_figure_data(tag: str, bundles, output_dir) -> list[Path]:
    """Write ``<tag>_<part>.csv`` files for a figure panel and return their paths."""
    parts = figure_columns(tag, bundles)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for part, cols in parts.items():
        path = out / f"{tag}_{part}.csv"
        names = list(cols)
        rows = zip(*(cols[n] for n in names))
        _write_csv(path, names, [[_fmt(v) for v in row] for row in rows])
        paths.append(path)
    return paths
