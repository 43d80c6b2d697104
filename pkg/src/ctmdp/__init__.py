"""Finite-horizon continuous-time Markov decision processes with delay-dependent relaxed controls."""

__version__ = "0.1.0"
