"""Delimited outputs and companion figures for simulation runs.

Every file starts with a provenance comment carrying the configuration
hash; numbers are written with 17 significant digits so re-ingestion is
bit-exact.  When a background-parameter reduction is active the u and rho
columns (and atom/event positions) are mapped back to the original frame;
energy columns always refer to the reduced system actually integrated.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .evolution import ShiftMetadata, shift_back_profile
from .scenarios import SimulationConfig, TimeSeries
from .serialization import eulerian_to_dict

__all__ = ["write_outputs", "render_figures"]

_FMT = "%.17g"


def _fmt(x: float) -> str:
    return _FMT % x


def _write_csv(path: Path, header: str, columns: list[str], rows) -> None:
    lines = [header, ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _shifted(series: TimeSeries):
    return series.shift_alpha != 0.0 or series.shift_eta != 1.0


def write_outputs(series: TimeSeries, config: SimulationConfig, outdir) -> list[Path]:
    """Write snapshots/atoms/energy/events CSVs and the final state JSON."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    header = f"# config_hash={series.provenance}"
    meta = ShiftMetadata(alpha=series.shift_alpha, eta=series.shift_eta)
    written = []

    rows = []
    for snap in series.snapshots:
        e = snap.eulerian
        if _shifted(series):
            u = shift_back_profile(e.x, e.u, meta, snap.t, kind="velocity")
            rho = shift_back_profile(e.x, e.rho, meta, snap.t, kind="density")
            dens = shift_back_profile(e.x, e.mu.density, meta, snap.t, kind="raw")
        else:
            u, rho, dens = e.u, e.rho, e.mu.density
        for j in range(e.x.size):
            rows.append((snap.t, e.x[j], u[j], rho[j], dens[j]))
    p = outdir / "snapshots.csv"
    _write_csv(p, header, ["t", "x", "u", "rho", "mu_ac_density"], rows)
    written.append(p)

    rows = []
    for snap in series.snapshots:
        for a, m in snap.eulerian.mu.atoms:
            loc = a - series.shift_alpha * snap.t if _shifted(series) else a
            rows.append((snap.t, loc, m))
    p = outdir / "atoms.csv"
    _write_csv(p, header, ["t", "location", "mass"], rows)
    written.append(p)

    rows = [(s.energy.t, s.energy.sigma, s.energy.mu_total,
             s.energy.eulerian_energy, s.energy.F) for s in series.snapshots]
    p = outdir / "energy.csv"
    _write_csv(p, header, ["t", "sigma", "mu_total", "eulerian_energy", "F"], rows)
    written.append(p)

    rows = []
    for ev in series.events:
        y = ev.y_at_break
        if _shifted(series):
            y = y - series.shift_alpha * ev.tau
        rows.append((ev.node, ev.tau, y, ev.h_at_break))
    p = outdir / "events.csv"
    _write_csv(p, header, ["node", "tau", "y_at_break", "h_at_break"], rows)
    written.append(p)

    final = {
        "config_hash": series.provenance,
        "failure": series.failure,
        "shift": {"alpha": series.shift_alpha, "eta": series.shift_eta},
        "state": eulerian_to_dict(series.snapshots[-1].eulerian) if series.snapshots else None,
    }
    p = outdir / "final_state.json"
    p.write_text(json.dumps(final, sort_keys=True))
    written.append(p)
    return written


def render_figures(series: TimeSeries, outdir, max_panels: int = 6) -> list[Path]:
    """Render profile and energy figures next to the delimited output."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    meta = ShiftMetadata(alpha=series.shift_alpha, eta=series.shift_eta)
    written = []

    snaps = series.snapshots
    if snaps:
        idx = np.unique(np.linspace(0, len(snaps) - 1, min(max_panels, len(snaps))).astype(int))
        ncol = 2 if idx.size > 1 else 1
        nrow = math.ceil(idx.size / ncol)
        fig, axes = plt.subplots(nrow, ncol, figsize=(4.2 * ncol, 2.4 * nrow),
                                 sharex=True, sharey=True, squeeze=False)
        for ax in axes.flat[idx.size:]:
            ax.set_visible(False)
        for ax, i in zip(axes.flat, idx):
            snap = snaps[i]
            e = snap.eulerian
            if _shifted(series):
                u = shift_back_profile(e.x, e.u, meta, snap.t, kind="velocity")
            else:
                u = e.u
            ax.plot(e.x, u, lw=1.0)
            ax.set_title(f"t = {snap.t:.3f}", fontsize=9)
            ax.grid(alpha=0.3)
        fig.supxlabel("x")
        fig.supylabel("u")
        fig.tight_layout()
        p = outdir / "profiles.png"
        fig.savefig(p, dpi=130)
        plt.close(fig)
        written.append(p)

        t = series.times()
        en = np.array([[s.energy.sigma, s.energy.mu_total,
                        s.energy.eulerian_energy, s.energy.F] for s in snaps])
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 2.8))
        ax1.plot(t, en[:, 0], label="sigma")
        ax1.plot(t, en[:, 1], label="mu_total")
        ax1.plot(t, en[:, 2], label="eulerian")
        ax1.set_xlabel("t")
        ax1.legend(fontsize=8)
        ax1.grid(alpha=0.3)
        ax2.plot(t, en[:, 3], color="firebrick")
        ax2.set_xlabel("t")
        ax2.set_ylabel("concentrated energy F")
        ax2.grid(alpha=0.3)
        fig.tight_layout()
        p = outdir / "energy.png"
        fig.savefig(p, dpi=130)
        plt.close(fig)
        written.append(p)

    if series.events:
        ev = np.array([[e.tau, e.y_at_break, e.h_at_break] for e in series.events])
        fig, ax = plt.subplots(figsize=(4.6, 3.0))
        sc = ax.scatter(ev[:, 1], ev[:, 0], c=ev[:, 2], s=8, cmap="viridis")
        ax.set_xlabel("y at break")
        ax.set_ylabel("tau")
        fig.colorbar(sc, label="h at break")
        fig.tight_layout()
        p = outdir / "events.png"
        fig.savefig(p, dpi=130)
        plt.close(fig)
        written.append(p)
    return written
