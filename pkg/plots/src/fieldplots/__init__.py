"""fieldplots: paper-style figures (field heatmaps, convergence curves) from
the CSV artifacts of an identification run directory."""

__version__ = "0.1.0"
