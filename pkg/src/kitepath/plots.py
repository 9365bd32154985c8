"""Static SVG figures for sweep results."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .geometry import embed_3d, eval_path, uniform_grid  # noqa: E402

# fixed salt and no date stamp keep the SVG bytes reproducible
_RC = {"svg.hashsalt": "kitepath", "svg.fonttype": "path"}
_META = {"Date": None}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def power_vs_tether(sweep, out: Path) -> Path:
    r = np.array(sweep.grid)
    p = np.array([s.p_avg for s in sweep.solutions])
    loyd = sweep.solutions[0].p_loyd
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(r, p, "o-", label="average power")
        ax.axhline(loyd, color="k", ls="--", label="Loyd limit")
        ax.set_xlabel("tether length r [m]")
        ax.set_ylabel("power [W]")
        ax.legend()
        ax.grid(alpha=0.3)
        return _save(fig, out)


def parameters_vs_tether(sweep, splines, out: Path) -> Path:
    r = np.array(sweep.grid)
    x = np.degrees(sweep.parameters())
    rr = np.linspace(r[0], r[-1], 200)
    fine = np.degrees(splines(rr)) if splines is not None else None
    labels = (r"$\beta_0$", r"$\Delta_\beta$", r"$\Delta_\varphi$")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        for i, label in enumerate(labels):
            line, = ax.plot(r, x[:, i], "o", label=label)
            if fine is not None:
                ax.plot(rr, fine[i], "-", color=line.get_color())
        ax.set_xlabel("tether length r [m]")
        ax.set_ylabel("angle [deg]")
        ax.legend()
        ax.grid(alpha=0.3)
        return _save(fig, out)


def paths_plane(sweep, out: Path) -> Path:
    s = uniform_grid(361, 2 * np.pi)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        cmap = plt.get_cmap("viridis")
        n = len(sweep.solutions)
        for k, sol in enumerate(sweep.solutions):
            beta, phi = eval_path(sol.path, np.append(s, 2 * np.pi))
            ax.plot(np.degrees(phi), np.degrees(beta), color=cmap(k / max(1, n - 1)), lw=0.8)
        ax.set_xlabel(r"azimuth $\varphi$ [deg]")
        ax.set_ylabel(r"elevation $\beta$ [deg]")
        ax.set_aspect("equal")
        return _save(fig, out)


def paths_3d(sweep, out: Path) -> Path:
    s = np.linspace(0, 2 * np.pi, 361)
    with plt.rc_context(_RC):
        fig = plt.figure(figsize=(6, 5))
        ax = fig.add_subplot(projection="3d")
        cmap = plt.get_cmap("viridis")
        n = len(sweep.solutions)
        for k, (r, sol) in enumerate(zip(sweep.grid, sweep.solutions)):
            p = embed_3d(sol.path, s, r)
            ax.plot(p[:, 0], p[:, 1], p[:, 2], color=cmap(k / max(1, n - 1)), lw=0.8)
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_zlabel("z [m]")
        return _save(fig, out)


def write_all(sweep, splines, directory: Path) -> list:
    directory = Path(directory)
    return [
        power_vs_tether(sweep, directory / "power_vs_r.svg"),
        parameters_vs_tether(sweep, splines, directory / "params_vs_r.svg"),
        paths_plane(sweep, directory / "paths_plane.svg"),
        paths_3d(sweep, directory / "paths_3d.svg"),
    ]
