"""Figure rendering for the CLI report path.

Each helper takes plain data plus an output path and writes a single file;
matplotlib stays an import-time dependency of this module only, so library
use without plotting never touches it.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def point_row(values, path, half_width=None):
    """One-dimensional scatter of quasilattice points."""
    fig, ax = plt.subplots(figsize=(9, 1.6))
    ax.vlines(values, 0.0, 1.0, lw=0.8)
    ax.set_ylim(-0.2, 1.2)
    ax.set_yticks([])
    if half_width is not None:
        ax.set_xlim(-half_width * 1.02, half_width * 1.02)
    ax.set_xlabel("point")
    return _finish(fig, path)


def decay_plot(ks, distances, rate, path):
    """Semilog distance-to-integer decay with the conjugate-modulus guide."""
    fig, ax = plt.subplots(figsize=(6, 4))
    pos = [(k, d) for k, d in zip(ks, distances) if d > 0]
    if pos:
        ax.semilogy([k for k, _ in pos], [d for _, d in pos], "o", ms=3, label="distance")
        k0, d0 = pos[0]
        guide = [d0 * rate ** (k - k0) for k, _ in pos]
        ax.semilogy([k for k, _ in pos], guide, "-", lw=1, label=f"rate {rate:.4f}")
    ax.set_xlabel("k")
    ax.set_ylabel("|lambda^k a - n_k|")
    ax.legend()
    return _finish(fig, path)


def gap_histogram(gaps, path):
    """Bar chart of gap values vs multiplicities."""
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [g.value for g in gaps]
    ys = [g.multiplicity for g in gaps]
    ax.bar(range(len(xs)), ys, tick_label=[f"{x:.4f}" for x in xs])
    ax.set_xlabel("gap value")
    ax.set_ylabel("count")
    return _finish(fig, path)


def modulus_sequence(ks, moduli, path):
    """|f^| along a dilation orbit."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, moduli, "o-", ms=3)
    ax.set_xlabel("k")
    ax.set_ylabel("|f^(alpha lambda^k)|")
    ax.set_yscale("log")
    return _finish(fig, path)


def sublevel_plot(pairs, fitted, m, L, path):
    """Measure estimates against the fitted power-law bound."""
    fig, ax = plt.subplots(figsize=(6, 4))
    vs = [v for v, _ in pairs]
    mus = [mu for _, mu in pairs]
    ax.loglog(vs, [max(mu, 1e-12) for mu in mus], "o-", ms=3, label="estimate")
    expo = 1.0 / (m - 1) if m > 1 else 1.0
    ax.loglog(vs, [L * fitted * v**expo for v in vs], "--", lw=1, label="fitted bound")
    ax.set_xlabel("v")
    ax.set_ylabel("measure of {|A| <= v}")
    ax.legend()
    return _finish(fig, path)


def hat_profile(ys, moduli, path):
    """|f^| on a grid of frequencies."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(ys, moduli, lw=0.7)
    ax.set_xlabel("y")
    ax.set_ylabel("|f^(y)|")
    return _finish(fig, path)
