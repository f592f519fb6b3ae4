"""
Visualization Module

This module provides matplotlib figures for laboratory results: exponent
traces, Var_n/n curves, band sets of periodic approximants and per-energy
classification strips. Figures are written as PNG next to the CSV output.
"""

import logging

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

# Configure logger
logger = logging.getLogger("Visualization")

CLASS_COLORS = {"resolvent": "#bbbbbb", "z": "#1f77b4", "nuh": "#d62728"}


def _finish(fig, output_file):
    fig.tight_layout()
    if output_file:
        fig.savefig(output_file, dpi=120)
        logger.info(f"Figure saved to {output_file}")
    plt.close(fig)
    return fig


def plot_exponent_traces(horizons, sup_exponent, min_exponent, var_over_n=None, output_file=None,
                         title=None, figsize=(8, 4)):
    """
    Plot sup/min finite-scale exponents (and optionally Var_n/n) against the horizon.

    Args:
        horizons (list of int): Scales n
        sup_exponent (list of float): sup over E and omega of (1/n) log ||A_n||
        min_exponent (list of float): min over E and omega
        var_over_n (list of float, optional): Var_n / n. Defaults to None.
        output_file (str or Path, optional): Path to save the plot. Defaults to None.
        title (str, optional): Plot title. Defaults to None.
        figsize (tuple, optional): Figure size. Defaults to (8, 4).

    Returns:
        matplotlib.figure.Figure: Generated figure or None if failed
    """
    try:
        fig, ax = plt.subplots(figsize=figsize)
        ax.plot(horizons, sup_exponent, "o-", label="sup exponent")
        ax.plot(horizons, min_exponent, "s-", label="min exponent")
        if var_over_n is not None:
            ax.plot(horizons, var_over_n, "^--", label="Var_n / n")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("n")
        ax.set_ylabel("nats per step")
        ax.set_title(title or "Finite-scale exponents")
        ax.legend()
        return _finish(fig, output_file)
    except Exception as e:
        logger.error(f"Error plotting exponent traces: {e}")
        return None


def plot_band_sets(levels, output_file=None, title=None, figsize=(10, 4)):
    """
    Draw the band set of each approximant level as horizontal segments.

    Args:
        levels (list of dict): Items with keys 'q' and 'bands' (list of [lo, hi])
        output_file (str or Path, optional): Path to save the plot. Defaults to None.
        title (str, optional): Plot title. Defaults to None.
        figsize (tuple, optional): Figure size. Defaults to (10, 4).

    Returns:
        matplotlib.figure.Figure: Generated figure or None if failed
    """
    try:
        fig, ax = plt.subplots(figsize=figsize)
        for row, level in enumerate(levels):
            for lo, hi in level["bands"]:
                ax.plot([lo, hi], [row, row], "k-", lw=4, solid_capstyle="butt")
        ax.set_yticks(range(len(levels)))
        ax.set_yticklabels([f"q={level['q']}" for level in levels])
        ax.set_xlabel("E")
        ax.set_title(title or "Approximant band sets")
        return _finish(fig, output_file)
    except Exception as e:
        logger.error(f"Error plotting band sets: {e}")
        return None


def plot_classification_strip(energies, classes, exponents=None, output_file=None, title=None,
                              figsize=(10, 3)):
    """
    Color each grid energy by its class, with the horizon exponent above it.

    Args:
        energies (array-like): Grid energies
        classes (list of str): 'resolvent', 'z' or 'nuh'
        exponents (list of float, optional): Finite-scale exponents. Defaults to None.
        output_file (str or Path, optional): Path to save the plot. Defaults to None.
        title (str, optional): Plot title. Defaults to None.
        figsize (tuple, optional): Figure size. Defaults to (10, 3).

    Returns:
        matplotlib.figure.Figure: Generated figure or None if failed
    """
    try:
        energies = np.asarray(energies, dtype=float)
        fig, ax = plt.subplots(figsize=figsize)
        colors = [CLASS_COLORS.get(c, "black") for c in classes]
        ax.scatter(energies, np.zeros_like(energies), c=colors, marker="|", s=200)
        if exponents is not None:
            ax.plot(energies, exponents, "-", color="#2ca02c", lw=1, label="exponent")
            ax.legend(loc="upper right")
        ax.set_xlabel("E")
        ax.set_title(title or "Energy classification")
        return _finish(fig, output_file)
    except Exception as e:
        logger.error(f"Error plotting classification strip: {e}")
        return None
