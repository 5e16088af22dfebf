"""Report writers: delimited output, JSON summaries, and figures.

Every command writes CSV (the primary, bit-reproducible numeric output),
a JSON summary carrying the config echo and versions, and a rendered PNG
figure next to them.  Figures are presentation artifacts; reproducibility
guarantees apply to the CSV/JSON payloads.
"""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIG_DPI = 150


def ensure_outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (np.floating,)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, complex):
        return f"{x.real!r}{x.imag:+}j"
    return x


def write_json(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (set, tuple)):
        return list(obj)
    return str(obj)


def _save(fig, path):
    fig.savefig(path, dpi=FIG_DPI, bbox_inches="tight",
                metadata={"Software": None, "CreationDate": None})
    plt.close(fig)


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------


def fig_bands(thetas: np.ndarray, energies: np.ndarray, title: str, path):
    """Dispersion plot: curves over theta in 1-D, grid-path panels in 2-D."""
    d = thetas.shape[1]
    nu = energies.shape[1]
    if d == 1:
        fig, ax = plt.subplots(figsize=(6, 4))
        order = np.argsort(thetas[:, 0])
        for s in range(nu):
            ax.plot(thetas[order, 0], energies[order, s], lw=1.2)
        ax.set_xlabel(r"$\theta$")
        ax.set_ylabel("E")
    else:
        # two panels: along the first axis and along the main diagonal
        fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharey=True)
        n = int(round(len(thetas) ** (1.0 / d)))
        grid = thetas.reshape((n,) * d + (d,))
        egrid = energies.reshape((n,) * d + (nu,))
        ax_idx = (slice(None),) + (0,) * (d - 1)
        diag_idx = tuple(np.arange(n) for _ in range(d))
        for s in range(nu):
            axes[0].plot(grid[ax_idx][:, 0], egrid[ax_idx][..., s], lw=1.2)
            axes[1].plot(grid[diag_idx][:, 0], egrid[diag_idx][..., s], lw=1.2)
        axes[0].set_xlabel(r"$\theta_1$ (axis cut)")
        axes[1].set_xlabel(r"$\theta$ (diagonal cut)")
        axes[0].set_ylabel("E")
    fig.suptitle(title)
    _save(fig, path)


def fig_variance(Ns, variances: dict, title: str, path):
    """Variance decay per basis tag, log-log with a 1/N guide."""
    fig, ax = plt.subplots(figsize=(6, 4))
    floor = 1e-30
    for tag, vals in variances.items():
        ax.loglog(Ns, np.maximum(vals, floor), "o-", label=tag)
    ns = np.asarray(Ns, dtype=float)
    ref = max(max(v) for v in variances.values()) if variances else 1.0
    if ref > floor:
        ax.loglog(ns, ref * ns[0] / ns, "k--", lw=0.8, label="1/N guide")
    ax.set_xlabel("N")
    ax.set_ylabel("V")
    ax.legend(fontsize=8)
    fig.suptitle(title)
    _save(fig, path)


def fig_assumption(Ns, fractions, title: str, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(Ns, np.maximum(fractions, 1e-16), "o-", label="sup fraction")
    ns = np.asarray(Ns, dtype=float)
    ax.semilogy(ns, np.minimum(1.0, ns[0] / ns * max(fractions[0], 1e-16)),
                "k--", lw=0.8, label="1/N guide")
    ax.set_xlabel("N")
    ax.set_ylabel(r"sup$_m$ |A$_m$| / N$^d$")
    ax.legend(fontsize=8)
    fig.suptitle(title)
    _save(fig, path)


def fig_egorov(Ts, identity_dev, tail_norm, title: str, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(Ts, np.maximum(identity_dev, 1e-18), "o-",
              label="|time average - Op(F_T)|")
    ax.loglog(Ts, np.maximum(tail_norm, 1e-18), "s-",
              label="|Op(F_T) - Op(b)|")
    ts = np.asarray(Ts, dtype=float)
    ax.loglog(ts, max(tail_norm[0], 1e-18) * ts[0] / ts, "k--", lw=0.8,
              label="1/T guide")
    ax.set_xlabel("T")
    ax.set_ylabel("HS norm")
    ax.legend(fontsize=8)
    fig.suptitle(title)
    _save(fig, path)


def fig_bloch(residuals, title: str, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(np.maximum(np.asarray(residuals), 1e-18), ".")
    ax.set_xlabel("(momentum, band) index")
    ax.set_ylabel("eigen-residual")
    fig.suptitle(title)
    _save(fig, path)
