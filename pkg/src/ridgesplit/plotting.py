"""Matplotlib figure output for the split-size panels."""

import matplotlib

matplotlib.use("Agg")

import matplotlib as mpl  # noqa: E402
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

ANALYTIC_COLOR = "tab:blue"
EMPIRICAL_COLOR = "tab:red"


def set_fig_style():
    mpl.rcParams["figure.facecolor"] = "white"
    mpl.rcParams["axes.facecolor"] = "white"
    mpl.rcParams["axes.grid"] = True
    mpl.rcParams["grid.alpha"] = 0.3
    mpl.rcParams["font.size"] = 10
    mpl.rcParams["legend.frameon"] = False
    # byte-stable SVG output
    mpl.rcParams["svg.hashsalt"] = "ridgesplit"
    mpl.rcParams["svg.fonttype"] = "none"


def plot_panel(path, title, m_values, p_formula, p_empirical, formula_fn=None):
    """Empirical p*(m) in red against the two-term formula in blue."""
    set_fig_style()
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    m_values = np.asarray(m_values, dtype=float)
    if formula_fn is not None and len(m_values):
        dense = np.linspace(m_values.min(), m_values.max(), 200)
        ax.plot(dense, [formula_fn(m) for m in dense], color=ANALYTIC_COLOR, lw=1.5,
                label="two-term formula")
        ax.plot(m_values, p_formula, "o", color=ANALYTIC_COLOR, ms=3)
    else:
        ax.plot(m_values, p_formula, "o-", color=ANALYTIC_COLOR, lw=1.5, label="two-term formula")
    ax.plot(m_values, p_empirical, "s--", color=EMPIRICAL_COLOR, lw=1.2, ms=4,
            label="empirical argmin (smoothed)")
    ax.set_xlabel("total rows m")
    ax.set_ylabel("training rows p*(m)")
    ax.set_title(title)
    ax.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
