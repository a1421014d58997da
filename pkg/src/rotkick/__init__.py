"""Impulsive alignment of thermal linear-rotor ensembles and isotopic mixtures."""

__version__ = "0.1.0"
