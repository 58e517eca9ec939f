"""
Plotting Module
Standalone SVG figures: mean flipping curves, ablation bars, decision
surfaces of f and g, and per-feature relevance scatter plots. Every figure
is accompanied by numeric outputs written elsewhere; SVGs are byte-stable
for identical inputs.
"""
import logging
from pathlib import Path

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from errors import ConfigError  # noqa: E402
from model_wrappers.neuralize import neural_output  # noqa: E402
from models import decision  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams.update({
    'svg.hashsalt': 'explainer',
    'svg.fonttype': 'none',
    'figure.facecolor': 'white',
    'axes.grid': True,
    'grid.alpha': 0.3,
    'font.size': 10,
})


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format='svg', metadata={'Date': None}, bbox_inches='tight')
    plt.close(fig)
    logger.info("Wrote %s", path)
    return path


def plot_flipping_curves(summaries, path, title='Pixel-flipping'):
    fig, ax = plt.subplots(figsize=(6, 4))
    for summary in summaries:
        curve = summary.mean_curve()
        steps = np.arange(1, curve.size + 1)
        ax.plot(steps, curve, marker='o', markersize=3,
                label=f"{summary.method} (AUFC {summary.mean_aufc:.3f})")
    ax.set_xlabel('features removed')
    ax.set_ylabel('mean outcome')
    ax.set_ylim(-1.05, 1.05)
    ax.set_title(title)
    ax.legend(loc='best', fontsize=8)
    return _save(fig, path)


def plot_ablation(groups, path, title='Ablation'):
    """Grouped bars; `groups` maps a group label to a list of summaries (one per arm)."""
    labels = list(groups)
    arms = [s.method for s in groups[labels[0]]] if labels else []
    width = 0.8 / max(1, len(arms))
    fig, ax = plt.subplots(figsize=(max(4, 2 * len(labels)), 4))
    centers = np.arange(len(labels))
    for a, arm in enumerate(arms):
        means = [groups[g][a].mean_aufc for g in labels]
        errors = [groups[g][a].stderr for g in labels]
        ax.bar(centers + (a - (len(arms) - 1) / 2) * width, means, width, yerr=errors,
               capsize=3, label=arm)
    ax.set_xticks(centers)
    ax.set_xticklabels(labels)
    ax.set_ylabel('AUFC (lower is better)')
    ax.set_title(title)
    ax.legend(loc='best', fontsize=8)
    return _save(fig, path)


def surface_grid(points, resolution, margin=0.5):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    lo = points.min(axis=0) - margin
    hi = points.max(axis=0) + margin
    xs = np.linspace(lo[0], hi[0], resolution)
    ys = np.linspace(lo[1], hi[1], resolution)
    return xs, ys


def evaluate_surface(model, net, xs, ys):
    """f and g on the grid; rows follow ys, columns follow xs."""
    F = np.empty((ys.size, xs.size))
    G = np.empty_like(F)
    for r, y in enumerate(ys):
        for c, x in enumerate(xs):
            point = np.array([x, y])
            F[r, c] = decision(model, point)
            G[r, c] = neural_output(net, point)
    return F, G


def plot_surface(model, net, path, resolution, points=None):
    """Side-by-side heatmaps of f and g with the zero level set; returns (xs, ys, F, G)."""
    if model.dim != 2:
        raise ConfigError(f"surface plots need 2-D models, got d={model.dim}")
    if resolution < 2:
        raise ConfigError(f"resolution must be >= 2, got {resolution}")
    xs, ys = surface_grid(net.directions, resolution)
    F, G = evaluate_surface(model, net, xs, ys)

    fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
    for ax, Z, name in zip(axes, (F, G), ('f(x)', 'g(x)')):
        bound = float(np.max(np.abs(Z))) or 1.0
        mesh = ax.pcolormesh(xs, ys, Z, cmap='RdBu_r', vmin=-bound, vmax=bound, shading='auto')
        if Z.min() < 0 < Z.max():
            ax.contour(xs, ys, Z, levels=[0.0], colors='k', linewidths=1)
        if points is not None:
            ax.scatter(points[:, 0], points[:, 1], s=6, c='k', alpha=0.5)
        ax.set_title(name)
        ax.set_aspect('equal')
        ax.grid(False)
        fig.colorbar(mesh, ax=ax, shrink=0.8)
    _save(fig, path)
    return xs, ys, F, G


def plot_relevance_scatter(feature, inputs, relevance, path, feature_mean=None):
    """Relevance against input value for one feature, dashed lines at the mean and R=0."""
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.scatter(inputs, relevance, s=8, alpha=0.6)
    ax.axhline(0.0, linestyle='--', color='grey', linewidth=1)
    if feature_mean is not None:
        ax.axvline(feature_mean, linestyle='--', color='grey', linewidth=1)
    ax.set_xlabel(feature)
    ax.set_ylabel('relevance')
    return _save(fig, path)
