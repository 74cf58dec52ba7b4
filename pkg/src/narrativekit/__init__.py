"""Narrative topology and dynamics for dated, source-tagged news corpora."""

__version__ = "0.1.0"
