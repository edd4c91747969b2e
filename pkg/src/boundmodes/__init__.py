"""Exact bound modes, resonances and emission spectra of a crossed-layer microcavity."""

__version__ = "0.1.0"
