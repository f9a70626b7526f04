"""Report figures rendered next to the metric tables.

All functions write PNG files via the Agg backend and return the path, so
they are safe to call from the CLI on headless machines.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def plot_correlation_summary(per_rep, out_path, title="Deflated test correlations"):
    """Strip + mean plot of per-repetition correlations, one column per direction.

    per_rep: array-like of shape (reps, K).
    """
    per_rep = np.atleast_2d(np.asarray(per_rep, float))
    reps, K = per_rep.shape
    fig, ax = plt.subplots(figsize=(1.8 + 1.2 * K, 3.4))
    rng = np.random.default_rng(0)
    for k in range(K):
        x = k + 1 + 0.06 * rng.standard_normal(reps)
        ax.plot(x, per_rep[:, k], "o", ms=4, alpha=0.5, color="tab:blue")
        ax.hlines(per_rep[:, k].mean(), k + 0.75, k + 1.25,
                  color="tab:red", lw=2)
    ax.set_xticks(range(1, K + 1))
    ax.set_xticklabels([f"direction {k + 1}" for k in range(K)])
    ax.set_ylabel("achieved correlation")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_residual_summary(per_rep, out_path, title="Projection residuals"):
    """Log-scale strip plot of per-repetition residual variance fractions."""
    per_rep = np.atleast_2d(np.asarray(per_rep, float))
    reps, K = per_rep.shape
    fig, ax = plt.subplots(figsize=(1.8 + 1.2 * K, 3.4))
    rng = np.random.default_rng(0)
    floor = 1e-12
    for k in range(K):
        x = k + 1 + 0.06 * rng.standard_normal(reps)
        ax.semilogy(x, np.maximum(per_rep[:, k], floor), "o", ms=4,
                    alpha=0.5, color="tab:green")
        ax.hlines(max(per_rep[:, k].mean(), floor), k + 0.75, k + 1.25,
                  color="tab:red", lw=2)
    ax.set_xticks(range(1, K + 1))
    ax.set_xticklabels([f"projection {k + 1}" for k in range(K)])
    ax.set_ylabel("residual variance fraction")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_trajectory(traj, out_path, title="Solver trajectory"):
    """Objective f_t and bound L_t against the iteration index."""
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    t = np.arange(len(traj))
    ax.plot(t, traj.f, color="tab:blue", label="objective f_t")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective", color="tab:blue")
    ax2 = ax.twinx()
    ax2.plot(t, traj.L, color="tab:orange", ls="--", label="bound L_t")
    ax2.plot(t, traj.l1, color="tab:gray", ls=":", label="||beta_t||_1")
    ax2.set_ylabel("l1 scale", color="tab:orange")
    lines = ax.get_lines() + ax2.get_lines()
    ax.legend(lines, [ln.get_label() for ln in lines], loc="best", fontsize=8)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
