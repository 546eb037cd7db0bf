"""Figures written next to the CSV/JSON reports (Agg backend, PNG)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# no Software/date stamps, so reruns give identical files
_PNG_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)


DEFAULT_PLOT_IDS = ("s:a", "s:b", "s:c", "s:d", "s:e", "pro:main", "pro:main2HNS")


def plot_constants(rows, path, ids=DEFAULT_PLOT_IDS):
    """Implied constant against k, one marker series per inequality id."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    markers = "os^vD<>"
    for j, ident in enumerate(ids):
        sel = [r for r in rows if r["id"] == ident]
        if not sel:
            continue
        ax.loglog([r["k"] for r in sel], [r["constant"] for r in sel],
                  markers[j % len(markers)], ms=4, mfc="none", label=ident)
    ax.set_xlabel("k")
    ax.set_ylabel("lhs / rhs")
    ax.legend(fontsize=6, ncol=2)
    _save(fig, path)


def plot_profiles(y, profiles, path, labels):
    """|omega(y)| for a few modes on a log-scaled y axis."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for prof, lab in zip(profiles, labels):
        ax.plot(y[1:], np.abs(prof[1:]), label=lab)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("y")
    ax.set_ylabel("|omega|")
    ax.legend(fontsize=7)
    _save(fig, path)


def plot_trajectories(trajectories, fit, path):
    """log H-norm against t per k, and sigma(k) with the fitted power law."""
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(10, 4))
    for tr in trajectories:
        a1.semilogy(tr.times, tr.h_norm, label=f"k = {tr.k:g}")
    a1.set_xlabel("t")
    a1.set_ylabel("H-norm")
    a1.legend(fontsize=7)
    pos = fit.sigma > 0
    a2.loglog(fit.ks[pos], fit.sigma[pos], "o", label="measured (decaying k omitted)")
    if np.isfinite(fit.p):
        kk = np.geomspace(fit.ks.min(), fit.ks.max(), 50)
        a2.loglog(kk, fit.beta * kk ** fit.p, "-", label=f"fit p = {fit.p:.3f}")
    a2.set_xlabel("k")
    a2.set_ylabel("growth rate")
    a2.legend(fontsize=7)
    _save(fig, path)
